//! Closed-form Jacobians of interpolated poses, body velocities and
//! observation errors with respect to the SE(3) control points, plus a
//! central-difference oracle.
//!
//! Control points are perturbed on the left, `T_j <- Exp(xi_j) T_j`; the
//! numeric oracle uses the identical convention. All Jacobians are returned
//! as one block per control point of the active span, `(base, blocks)` with
//! `blocks[j]` belonging to control point `base + j`.
//!
//! Inside one span (writing `B_j` for the cumulative basis values and
//! `Omega_j` for the cached increments) the chain is built from
//!
//! ```text
//! d a_j / d xi_j  = B_j Jl^-1(Omega_j) Ad_{T_{j-1}^-1}   (= -d a_j / d xi_{j-1})
//! d T_vec / d a_j = (N'_j^T (x) R_{P_j}) G Jl(a_j)
//! d Log T / d a_j = Jl^-1(Log T) Ad_{P_j} Jl(a_j)
//! ```
//!
//! with the Kronecker product never materialized: the 12x6 factor is
//! assembled column-by-column from the SE(3) generators.

use nalgebra::{DMatrix, DVector};

use crate::error::Result;
use crate::lie::{
    adjoint, exp_se3, log_se3, se3_left_jacobian, se3_left_jacobian_inv, skew, small_adjoint,
    vectorize, Mat12x6, Mat3, Mat3x12, Mat3x6, Mat6, Pose, Twist, Vec3, Vec6,
};
use crate::spline::{SpanEval, SplineTrajectory};

/// Which pose representation a derivative chain goes through.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum JacobianForm {
    /// 12-d vectorized pose `[R c1; R c2; R c3; t]`.
    Vectorized,
    /// Minimal se(3) form `Log(T)`.
    Lie,
}

/// Default tangent-space step of the central-difference oracle.
pub const DEFAULT_FD_STEP: f64 = 1e-6;

/// `d a_j / d xi_j` evaluated at zero perturbation: the identity for
/// `j = 0`, otherwise `B_j(t) Jl^-1(Omega_j) Ad_{T_{j-1}^-1}`. The
/// derivative with respect to the previous control point is its negation.
pub fn d_a_d_xi(traj: &SplineTrajectory, t: f64, j: usize) -> Result<Mat6> {
    if j == 0 {
        return Ok(Mat6::identity());
    }
    let ev = traj.span_eval(t)?;
    Ok(ev.b[j] * omega_sensitivity(traj, &ev, j))
}

/// `Jl^-1(Omega_j) Ad_{T_{base+j-1}^-1}`, the xi-sensitivity of `Omega_j`.
fn omega_sensitivity(traj: &SplineTrajectory, ev: &SpanEval, j: usize) -> Mat6 {
    let prev = traj.control_point(ev.base + j - 1);
    se3_left_jacobian_inv(&ev.omega[j]) * adjoint(&prev.inverse())
}

/// 12x6 matrix `(N'^T (x) R_P) G`: column `i` is the truncated
/// vectorization of `P G_i N'`.
fn k_matrix(p: &Pose, n: &Pose) -> Mat12x6 {
    let rp = p.rotation();
    let rn = n.rotation();
    let tn = n.translation();
    let mut k = Mat12x6::zeros();
    // translation generators: P G_i N' has only a translation column R_P e_i
    for i in 0..3 {
        for r in 0..3 {
            k[(9 + r, i)] = rp[(r, i)];
        }
    }
    // rotation generators G_{3+i} = skew(e_i) in the top-left block
    for i in 0..3 {
        let mut e = Vec3::zeros();
        e[i] = 1.0;
        let a = rp * skew(&e);
        let rot = a * rn;
        let tr = a * tn;
        for c in 0..3 {
            for r in 0..3 {
                k[(3 * c + r, 3 + i)] = rot[(r, c)];
            }
        }
        for r in 0..3 {
            k[(9 + r, 3 + i)] = tr[r];
        }
    }
    k
}

/// Jacobian of the vectorized interpolated pose with respect to every
/// control point of the active span. Returns `(base, blocks)`.
pub fn pose_jacobian_vectorized(traj: &SplineTrajectory, t: f64) -> Result<(usize, Vec<Mat12x6>)> {
    let ev = traj.span_eval(t)?;
    let k = traj.degree();

    // kf[j] = (d T_vec / d a_j) * (d a_j / d xi_j), shared between the
    // blocks of control points j-1 (negated) and j
    let mut kf = vec![Mat12x6::zeros(); k];
    for (j, slot) in kf.iter_mut().enumerate().skip(1) {
        let f = se3_left_jacobian(&ev.a[j]) * (ev.b[j] * omega_sensitivity(traj, &ev, j));
        *slot = k_matrix(&ev.prefix[j], &ev.suffix[j]) * f;
    }

    let mut blocks = vec![Mat12x6::zeros(); k];
    blocks[0] = k_matrix(&Pose::identity(), &ev.pose);
    for j in 0..k {
        if j >= 1 {
            blocks[j] += kf[j];
        }
        if j + 1 < k {
            blocks[j] -= kf[j + 1];
        }
    }
    Ok((ev.base, blocks))
}

/// Jacobian of `Log(T(t))` with respect to every control point of the
/// active span. Returns `(base, blocks)`.
pub fn pose_jacobian_lie(traj: &SplineTrajectory, t: f64) -> Result<(usize, Vec<Mat6>)> {
    let ev = traj.span_eval(t)?;
    let k = traj.degree();
    let jlinv_theta = se3_left_jacobian_inv(&log_se3(&ev.pose)?);

    let mut lf = vec![Mat6::zeros(); k];
    for (j, slot) in lf.iter_mut().enumerate().skip(1) {
        let l = jlinv_theta * adjoint(&ev.prefix[j]) * se3_left_jacobian(&ev.a[j]);
        *slot = l * (ev.b[j] * omega_sensitivity(traj, &ev, j));
    }

    let mut blocks = vec![Mat6::zeros(); k];
    blocks[0] = jlinv_theta;
    for j in 0..k {
        if j >= 1 {
            blocks[j] += lf[j];
        }
        if j + 1 < k {
            blocks[j] -= lf[j + 1];
        }
    }
    Ok((ev.base, blocks))
}

/// Jacobian of the body velocity with respect to every control point of the
/// active span. Returns `(base, blocks)`.
pub fn velocity_jacobian(traj: &SplineTrajectory, t: f64) -> Result<(usize, Vec<Mat6>)> {
    let ev = traj.span_eval(t)?;
    let k = traj.degree();

    // velocity recursion, keeping the intermediate taus:
    // tau[j+1] = Ad_{A_j^-1} tau[j] + B'_j Omega_j
    let mut tau = vec![Vec6::zeros(); k + 1];
    for j in 1..k {
        let ad_inv = adjoint(&ev.a_exp[j].inverse());
        tau[j + 1] = ad_inv * tau[j] + ev.db[j] * ev.omega[j].as_vector();
    }

    // d tau_k / d Omega_j = Q_j (B_j [h] Jl(-a_j) + B'_j I) with
    // h = Ad_{A_j^-1} tau_j and Q accumulated from the newest factor down.
    // The bracket [h] is the algebra adjoint of h.
    let mut d_tau_d_omega = vec![Mat6::zeros(); k];
    let mut q = Mat6::identity();
    for j in (1..k).rev() {
        let ad_inv = adjoint(&ev.a_exp[j].inverse());
        let h = Twist::from_vector(&(ad_inv * tau[j]));
        let own = ev.b[j] * small_adjoint(&h) * se3_left_jacobian(&ev.a[j].scale(-1.0))
            + ev.db[j] * Mat6::identity();
        d_tau_d_omega[j] = q * own;
        q *= ad_inv;
    }

    let mut blocks = vec![Mat6::zeros(); k];
    for j in 0..k {
        if j >= 1 {
            blocks[j] += d_tau_d_omega[j] * omega_sensitivity(traj, &ev, j);
        }
        if j + 1 < k {
            blocks[j] -= d_tau_d_omega[j + 1] * omega_sensitivity(traj, &ev, j + 1);
        }
    }
    Ok((ev.base, blocks))
}

/// `d e / d T_vec = -(p~_o^T (x) R_cw)` for the observation error
/// `e = p_c - proj(T_wc^-1 T_wo p~_o)`.
pub fn error_jacobian_wrt_pose_vec(p_o: &Vec3, t_wc: &Pose) -> Mat3x12 {
    let rcw = t_wc.rotation().transpose();
    let mut out = Mat3x12::zeros();
    for l in 0..3 {
        out.fixed_view_mut::<3, 3>(0, 3 * l)
            .copy_from(&(-p_o[l] * rcw));
    }
    out.fixed_view_mut::<3, 3>(0, 9).copy_from(&(-rcw));
    out
}

/// `d e / d Log(T_wo) = -[I | -q^] Ad_{T_cw} Jl(Log(T_wo))` where `q` is the
/// object point expressed in the camera frame. The skew argument must be
/// the transformed point, not the raw object-frame point; the numeric
/// oracle pins this down.
pub fn error_jacobian_wrt_pose_log(p_o: &Vec3, t_wc: &Pose, t_wo: &Pose) -> Result<Mat3x6> {
    let theta = log_se3(t_wo)?;
    let t_cw = t_wc.inverse();
    let q = t_cw.act(&t_wo.act(p_o));
    let mut front = Mat3x6::zeros();
    front
        .fixed_view_mut::<3, 3>(0, 0)
        .copy_from(&Mat3::identity());
    front.fixed_view_mut::<3, 3>(0, 3).copy_from(&(-skew(&q)));
    Ok(-(front * adjoint(&t_cw) * se3_left_jacobian(&theta)))
}

/// Per-frame precomputation for observation-error Jacobians: everything
/// that does not depend on the individual object point is assembled once,
/// so [`ErrorChain::evaluate`] costs a handful of small products per
/// observation.
pub struct ErrorChain {
    base: usize,
    degree: usize,
    t_co: Pose,
    t_cw_translation: Vec3,
    form: JacobianForm,
    /// Vectorized form: per control point, the flattened 3x6 pieces
    /// `R_cw * rows(3l..3l+3)` of the 12x6 pose block stacked as columns,
    /// so one matrix-vector product with the homogeneous point combines
    /// them.
    vec_pieces: Vec<nalgebra::SMatrix<f64, 18, 4>>,
    /// Lie form: upper and lower 3x6 halves of `Jl(Log T) * block`,
    /// pre-rotated by `R_cw`.
    lie_upper: Vec<Mat3x6>,
    lie_lower: Vec<Mat3x6>,
}

impl ErrorChain {
    pub fn new(
        traj: &SplineTrajectory,
        t: f64,
        t_wc: &Pose,
        form: JacobianForm,
    ) -> Result<ErrorChain> {
        let t_cw = t_wc.inverse();
        let rcw = *t_cw.rotation();
        let pose = traj.interpolate_pose(t)?;
        let mut chain = ErrorChain {
            base: 0,
            degree: traj.degree(),
            t_co: t_cw.compose(&pose),
            t_cw_translation: *t_cw.translation(),
            form,
            vec_pieces: Vec::new(),
            lie_upper: Vec::new(),
            lie_lower: Vec::new(),
        };
        match form {
            JacobianForm::Vectorized => {
                let (base, blocks) = pose_jacobian_vectorized(traj, t)?;
                chain.base = base;
                chain.vec_pieces = blocks
                    .iter()
                    .map(|b| {
                        let mut m = nalgebra::SMatrix::<f64, 18, 4>::zeros();
                        for l in 0..4 {
                            let piece: Mat3x6 = rcw * b.fixed_view::<3, 6>(3 * l, 0).into_owned();
                            m.column_mut(l).copy_from_slice(piece.as_slice());
                        }
                        m
                    })
                    .collect();
            }
            JacobianForm::Lie => {
                let (base, blocks) = pose_jacobian_lie(traj, t)?;
                chain.base = base;
                let jl_theta = se3_left_jacobian(&log_se3(&pose)?);
                for b in &blocks {
                    let m: Mat6 = jl_theta * b;
                    chain
                        .lie_upper
                        .push(rcw * m.fixed_view::<3, 6>(0, 0).into_owned());
                    chain
                        .lie_lower
                        .push(rcw * m.fixed_view::<3, 6>(3, 0).into_owned());
                }
            }
        }
        Ok(chain)
    }

    /// Control point index of `blocks[0]`.
    pub fn base(&self) -> usize {
        self.base
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    /// Predicted camera-frame point; the residual is `p_c - predicted`.
    pub fn predict(&self, p_o: &Vec3) -> Vec3 {
        self.t_co.act(p_o)
    }

    /// Residual Jacobian blocks `d e / d xi_{base+j}` for one object point,
    /// plus the predicted camera-frame point.
    pub fn evaluate(&self, p_o: &Vec3) -> (Vec3, Vec<Mat3x6>) {
        let mut blocks = vec![Mat3x6::zeros(); self.degree];
        let pred = self.evaluate_into(p_o, &mut blocks);
        (pred, blocks)
    }

    /// Allocation-free form of [`ErrorChain::evaluate`] for hot loops;
    /// `blocks` must hold one 3x6 block per control point of the span.
    pub fn evaluate_into(&self, p_o: &Vec3, blocks: &mut [Mat3x6]) -> Vec3 {
        let pred = self.predict(p_o);
        match self.form {
            JacobianForm::Vectorized => {
                let ph = nalgebra::Vector4::new(-p_o[0], -p_o[1], -p_o[2], -1.0);
                for (out, p) in blocks.iter_mut().zip(&self.vec_pieces) {
                    let flat = p * ph;
                    out.as_mut_slice().copy_from_slice(flat.as_slice());
                }
            }
            JacobianForm::Lie => {
                let q = pred - self.t_cw_translation;
                for (out, (u, v)) in blocks
                    .iter_mut()
                    .zip(self.lie_upper.iter().zip(&self.lie_lower))
                {
                    // out = skew(q) * v - u, expanded row-wise
                    for c in 0..6 {
                        let (v0, v1, v2) = (v[(0, c)], v[(1, c)], v[(2, c)]);
                        out[(0, c)] = q[1] * v2 - q[2] * v1 - u[(0, c)];
                        out[(1, c)] = q[2] * v0 - q[0] * v2 - u[(1, c)];
                        out[(2, c)] = q[0] * v1 - q[1] * v0 - u[(2, c)];
                    }
                }
            }
        }
        pred
    }

    /// `d e / d p_o = -R_co`.
    pub fn point_jacobian(&self) -> Mat3 {
        -self.t_co.rotation()
    }
}

/// Central differences of `f` under left-perturbation of control point
/// `cp`: column `d` is `(f(Exp(+h e_d) T_cp) - f(Exp(-h e_d) T_cp)) / 2h`.
pub fn numeric_jacobian_wrt_control_point<F>(
    traj: &SplineTrajectory,
    cp: usize,
    step: f64,
    f: F,
) -> Result<DMatrix<f64>>
where
    F: Fn(&SplineTrajectory) -> Result<DVector<f64>>,
{
    let mut work = traj.clone();
    let original = *traj.control_point(cp);
    let mut columns: Vec<DVector<f64>> = Vec::with_capacity(6);
    for d in 0..6 {
        let mut e = Vec6::zeros();
        e[d] = step;
        work.set_control_point(cp, exp_se3(&Twist::from_vector(&e)).compose(&original))?;
        let fp = f(&work)?;
        e[d] = -step;
        work.set_control_point(cp, exp_se3(&Twist::from_vector(&e)).compose(&original))?;
        let fm = f(&work)?;
        columns.push((fp - fm) / (2.0 * step));
    }
    let rows = columns[0].len();
    let mut out = DMatrix::zeros(rows, 6);
    for (d, col) in columns.iter().enumerate() {
        out.column_mut(d).copy_from(col);
    }
    Ok(out)
}

/// Numeric counterpart of [`pose_jacobian_vectorized`].
pub fn numeric_pose_jacobian_vectorized(
    traj: &SplineTrajectory,
    t: f64,
    step: f64,
) -> Result<(usize, Vec<DMatrix<f64>>)> {
    let k = traj.degree();
    let base = traj.knot_vector().span_of(t)? + 1 - k;
    let mut blocks = Vec::with_capacity(k);
    for j in 0..k {
        blocks.push(numeric_jacobian_wrt_control_point(
            traj,
            base + j,
            step,
            |w| {
                Ok(DVector::from_column_slice(
                    vectorize(&w.interpolate_pose(t)?).as_slice(),
                ))
            },
        )?);
    }
    Ok((base, blocks))
}

/// Numeric counterpart of [`pose_jacobian_lie`].
pub fn numeric_pose_jacobian_lie(
    traj: &SplineTrajectory,
    t: f64,
    step: f64,
) -> Result<(usize, Vec<DMatrix<f64>>)> {
    let k = traj.degree();
    let base = traj.knot_vector().span_of(t)? + 1 - k;
    let mut blocks = Vec::with_capacity(k);
    for j in 0..k {
        blocks.push(numeric_jacobian_wrt_control_point(
            traj,
            base + j,
            step,
            |w| {
                Ok(DVector::from_column_slice(
                    log_se3(&w.interpolate_pose(t)?)?.as_vector().as_slice(),
                ))
            },
        )?);
    }
    Ok((base, blocks))
}

/// Numeric counterpart of [`velocity_jacobian`].
pub fn numeric_velocity_jacobian(
    traj: &SplineTrajectory,
    t: f64,
    step: f64,
) -> Result<(usize, Vec<DMatrix<f64>>)> {
    let k = traj.degree();
    let base = traj.knot_vector().span_of(t)? + 1 - k;
    let mut blocks = Vec::with_capacity(k);
    for j in 0..k {
        blocks.push(numeric_jacobian_wrt_control_point(
            traj,
            base + j,
            step,
            |w| {
                Ok(DVector::from_column_slice(
                    w.body_velocity(t)?.as_vector().as_slice(),
                ))
            },
        )?);
    }
    Ok((base, blocks))
}

/// Numeric Jacobian of the observation error `e = p_c - T_wc^-1 T(t) p_o`
/// with respect to control point `cp` (`p_c` is constant, so only the
/// predicted point is differentiated).
pub fn numeric_error_jacobian(
    traj: &SplineTrajectory,
    t: f64,
    t_wc: &Pose,
    p_o: &Vec3,
    cp: usize,
    step: f64,
) -> Result<DMatrix<f64>> {
    let t_cw = t_wc.inverse();
    numeric_jacobian_wrt_control_point(traj, cp, step, |w| {
        let pred = t_cw.act(&w.interpolate_pose(t)?.act(p_o));
        Ok(DVector::from_column_slice((-pred).as_slice()))
    })
}
