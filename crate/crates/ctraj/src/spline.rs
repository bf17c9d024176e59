//! Cumulative B-spline curves on SE(3) with non-uniform knots.
//!
//! A trajectory of degree `k` (cubic = 4) interpolates, for `t` in the span
//! `[t_i, t_{i+1})`, the pose
//!
//! ```text
//! T(t) = T_{i-k+1} * prod_{j=1}^{k-1} Exp(B~_j(t) * Omega_{i-k+1+j})
//! ```
//!
//! where `Omega_j = Log(T_{j-1}^-1 T_j)` and the cumulative basis values
//! `B~ = u^T M~` come from a per-span matrix built numerically from the
//! de Boor-Cox recurrence on the local knot window. The knots past the last
//! one are not required: missing trailing knots are extrapolated with the
//! terminal interval length, which keeps the basis C2 over the whole
//! half-open domain `[t_{k-1}, t_n)`.
//!
//! The curve at `t_i` tracks the control point `k/2` knots back (for a
//! cubic, `T_{i-2}` carries the largest weight at `t_i`); callers placing
//! control points on a known motion must account for that phase.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::lie::{adjoint, exp_se3, log_se3, small_adjoint, Pose, Twist};

/// Ordered knot timestamps with a spline degree.
#[derive(Debug, Clone)]
pub struct KnotVector {
    knots: Vec<f64>,
    degree: usize,
}

impl KnotVector {
    pub fn new(knots: Vec<f64>, degree: usize) -> Result<Self> {
        if degree < 2 {
            return Err(Error::InvalidDegree { degree });
        }
        for i in 1..knots.len() {
            if !(knots[i] > knots[i - 1]) {
                return Err(Error::NonMonotonicKnots { index: i });
            }
        }
        Ok(KnotVector { knots, degree })
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn len(&self) -> usize {
        self.knots.len()
    }

    pub fn is_empty(&self) -> bool {
        self.knots.is_empty()
    }

    pub fn knot(&self, i: usize) -> f64 {
        self.knots[i]
    }

    pub fn knots(&self) -> &[f64] {
        &self.knots
    }

    /// Knot with extrapolation past the end: missing trailing knots continue
    /// with the terminal interval length.
    pub(crate) fn knot_ext(&self, i: usize) -> f64 {
        let n = self.knots.len();
        if i < n {
            self.knots[i]
        } else {
            debug_assert!(n >= 2);
            let last = self.knots[n - 1];
            let step = last - self.knots[n - 2];
            last + (i - n + 1) as f64 * step
        }
    }

    /// Half-open interpolation domain `[t_{k-1}, t_n)`, if non-empty.
    pub fn valid_range(&self) -> Option<(f64, f64)> {
        let k = self.degree;
        if self.knots.len() < k + 1 {
            return None;
        }
        Some((self.knots[k - 1], self.knots[self.knots.len() - 1]))
    }

    /// Span index `i` with `t in [t_i, t_{i+1})`, restricted to the valid
    /// domain.
    pub fn span_of(&self, t: f64) -> Result<usize> {
        let (start, end) = self.valid_range().ok_or(Error::InsufficientKnots {
            span: 0,
            degree: self.degree,
        })?;
        if !(t >= start && t < end) {
            return Err(Error::TimeOutOfRange { t, start, end });
        }
        // largest i with knots[i] <= t
        let i = self.knots.partition_point(|&x| x <= t) - 1;
        Ok(i.min(self.knots.len() - 2))
    }

    /// Normalized local coordinate `u = (t - t_i)/(t_{i+1} - t_i)` inside
    /// span `i`.
    pub fn local_coordinate(&self, span: usize, t: f64) -> f64 {
        (t - self.knots[span]) / (self.knots[span + 1] - self.knots[span])
    }
}

/// Polynomials (coefficients in the local coordinate `u`, low order first)
/// of the standard de Boor-Cox bases that are non-zero on `[t_i, t_{i+1})`.
/// Entry `l` belongs to basis index `span - k + 1 + l`.
fn span_standard_polynomials(kv: &KnotVector, span: usize) -> Result<Vec<Vec<f64>>> {
    let k = kv.degree();
    if span + 1 < k || span + 1 >= kv.len() {
        return Err(Error::InsufficientKnots { span, degree: k });
    }
    let t_i = kv.knot(span);
    let dt = kv.knot(span + 1) - t_i;

    // order 1: only B_{span,1} = 1 on the span
    let mut polys: Vec<Vec<f64>> = vec![vec![1.0]];
    for m in 2..=k {
        let lo = span + 1 - m; // lowest basis index at this order
        let mut next: Vec<Vec<f64>> = Vec::with_capacity(m);
        for l in 0..m {
            let j = lo + l;
            let mut p = vec![0.0; m];
            // alpha(u) * B_{j,m-1}: the previous-order basis is non-zero on
            // the span only for j >= span+2-m
            if j >= span + 2 - m {
                let d = kv.knot_ext(j + m - 1) - kv.knot_ext(j);
                let a0 = (t_i - kv.knot_ext(j)) / d;
                let a1 = dt / d;
                let src = &polys[j - (span + 2 - m)];
                for (deg, &c) in src.iter().enumerate() {
                    p[deg] += a0 * c;
                    p[deg + 1] += a1 * c;
                }
            }
            // beta(u) * B_{j+1,m-1}: non-zero only for j+1 <= span
            if j < span {
                let d = kv.knot_ext(j + m) - kv.knot_ext(j + 1);
                let b0 = (kv.knot_ext(j + m) - t_i) / d;
                let b1 = -dt / d;
                let src = &polys[j + 1 - (span + 2 - m)];
                for (deg, &c) in src.iter().enumerate() {
                    p[deg] += b0 * c;
                    p[deg + 1] += b1 * c;
                }
            }
            next.push(p);
        }
        polys = next;
    }
    Ok(polys)
}

/// Cumulative basis matrix for one span: `B~ = u^T M~` with
/// `u = [1, u, u^2, ...]`. Column `j` holds the polynomial of the cumulative
/// basis of control point `span - k + 1 + j`; the first column is exactly
/// `[1, 0, ...]`.
pub fn cumulative_basis_matrix(kv: &KnotVector, span: usize) -> Result<DMatrix<f64>> {
    let k = kv.degree();
    let std_polys = span_standard_polynomials(kv, span)?;
    let mut m = DMatrix::zeros(k, k);
    m[(0, 0)] = 1.0;
    for col in 1..k {
        for p in &std_polys[col..] {
            for (deg, &c) in p.iter().enumerate() {
                m[(deg, col)] += c;
            }
        }
    }
    Ok(m)
}

/// An SE(3) trajectory: one control point per knot.
///
/// Relative increments `Omega_j` and per-span basis matrices are cached and
/// refreshed on mutation, so evaluation through `&self` is pure and safe to
/// share across threads.
#[derive(Debug, Clone)]
pub struct SplineTrajectory {
    knots: KnotVector,
    control_points: Vec<Pose>,
    /// omegas[j] = Log(T_{j-1}^-1 T_j) for j >= 1; omegas[0] is zero.
    omegas: Vec<Twist>,
    /// basis matrix per span index (valid spans only).
    span_matrices: Vec<Option<DMatrix<f64>>>,
}

impl SplineTrajectory {
    pub fn new(knots: Vec<f64>, control_points: Vec<Pose>, degree: usize) -> Result<Self> {
        if knots.len() != control_points.len() {
            return Err(Error::KnotCountMismatch {
                knots: knots.len(),
                control_points: control_points.len(),
            });
        }
        let knots = KnotVector::new(knots, degree)?;
        let mut traj = SplineTrajectory {
            knots,
            control_points,
            omegas: Vec::new(),
            span_matrices: Vec::new(),
        };
        traj.rebuild_omegas()?;
        traj.rebuild_span_matrices(0);
        Ok(traj)
    }

    fn rebuild_omegas(&mut self) -> Result<()> {
        self.omegas.clear();
        if self.control_points.is_empty() {
            return Ok(());
        }
        self.omegas.push(Twist::zero());
        for j in 1..self.control_points.len() {
            self.omegas.push(relative_increment(
                &self.control_points[j - 1],
                &self.control_points[j],
            )?);
        }
        Ok(())
    }

    /// Recompute cached basis matrices for spans >= `from`.
    fn rebuild_span_matrices(&mut self, from: usize) {
        let k = self.knots.degree();
        let n_spans = self.knots.len().saturating_sub(1);
        self.span_matrices.truncate(from.min(n_spans));
        self.span_matrices.resize(n_spans, None);
        for span in from..n_spans {
            self.span_matrices[span] = if span + 1 >= k {
                cumulative_basis_matrix(&self.knots, span).ok()
            } else {
                None
            };
        }
    }

    pub fn degree(&self) -> usize {
        self.knots.degree()
    }

    pub fn len(&self) -> usize {
        self.control_points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.control_points.is_empty()
    }

    pub fn knot_vector(&self) -> &KnotVector {
        &self.knots
    }

    pub fn control_point(&self, i: usize) -> &Pose {
        &self.control_points[i]
    }

    pub fn control_points(&self) -> &[Pose] {
        &self.control_points
    }

    pub fn valid_range(&self) -> Option<(f64, f64)> {
        self.knots.valid_range()
    }

    /// Append a knot/control-point pair at the end.
    pub fn push(&mut self, t: f64, pose: Pose) -> Result<()> {
        if let Some(&last) = self.knots.knots.last() {
            if !(t > last) {
                return Err(Error::NonMonotonicTimestamp { t, last });
            }
        }
        if let Some(prev) = self.control_points.last() {
            self.omegas.push(relative_increment(prev, &pose)?);
        } else {
            self.omegas.push(Twist::zero());
        }
        self.knots.knots.push(t);
        self.control_points.push(pose);
        // trailing spans were built against extrapolated knots; refresh them
        let k = self.knots.degree();
        self.rebuild_span_matrices(self.knots.len().saturating_sub(k + 1));
        Ok(())
    }

    /// Replace one control point, refreshing the increments around it.
    pub fn set_control_point(&mut self, i: usize, pose: Pose) -> Result<()> {
        self.control_points[i] = pose;
        if i >= 1 {
            self.omegas[i] =
                relative_increment(&self.control_points[i - 1], &self.control_points[i])?;
        }
        if i + 1 < self.control_points.len() {
            self.omegas[i + 1] =
                relative_increment(&self.control_points[i], &self.control_points[i + 1])?;
        }
        Ok(())
    }

    /// Cumulative basis values and their first two time derivatives at `t`.
    pub fn evaluate_basis(&self, t: f64) -> Result<(DVector<f64>, DVector<f64>, DVector<f64>)> {
        let span = self.knots.span_of(t)?;
        Ok(self.basis_in_span(span, t))
    }

    /// Basis evaluation inside a known span. `t` may sit at the closed right
    /// end (`u = 1`), which the tests use for exact left limits.
    fn basis_in_span(&self, span: usize, t: f64) -> (DVector<f64>, DVector<f64>, DVector<f64>) {
        let k = self.knots.degree();
        let m = self.span_matrices[span]
            .as_ref()
            .expect("valid span has a cached basis matrix");
        let u = self.knots.local_coordinate(span, t);
        let dt = self.knots.knot(span + 1) - self.knots.knot(span);

        let mut upow = vec![1.0; k];
        for d in 1..k {
            upow[d] = upow[d - 1] * u;
        }
        let mut b = DVector::zeros(k);
        let mut db = DVector::zeros(k);
        let mut ddb = DVector::zeros(k);
        for col in 0..k {
            let mut val = 0.0;
            let mut d1 = 0.0;
            let mut d2 = 0.0;
            for deg in 0..k {
                let c = m[(deg, col)];
                val += c * upow[deg];
                if deg >= 1 {
                    d1 += c * deg as f64 * upow[deg - 1];
                }
                if deg >= 2 {
                    d2 += c * (deg * (deg - 1)) as f64 * upow[deg - 2];
                }
            }
            b[col] = val;
            db[col] = d1 / dt;
            ddb[col] = d2 / (dt * dt);
        }
        (b, db, ddb)
    }

    /// Interpolated pose at `t`.
    pub fn interpolate_pose(&self, t: f64) -> Result<Pose> {
        let span = self.knots.span_of(t)?;
        let k = self.knots.degree();
        let base = span + 1 - k;
        let (b, _, _) = self.basis_in_span(span, t);
        let mut pose = self.control_points[base];
        for j in 1..k {
            let w = b[j];
            if w == 0.0 {
                continue;
            }
            pose = pose.compose(&exp_se3(&self.omegas[base + j].scale(w)));
        }
        Ok(pose)
    }

    /// Body-frame velocity at `t`: the twist `vee(T^-1 Tdot)`, accumulated
    /// with the recursion `tau_{j+1} = Ad_{A_j^-1} tau_j + B~'_j Omega_j`.
    pub fn body_velocity(&self, t: f64) -> Result<Twist> {
        let span = self.knots.span_of(t)?;
        let k = self.knots.degree();
        let base = span + 1 - k;
        let (b, db, _) = self.basis_in_span(span, t);
        let mut tau = Twist::zero();
        for j in 1..k {
            let omega = &self.omegas[base + j];
            let a_inv = exp_se3(&omega.scale(-b[j]));
            let transported = adjoint(&a_inv) * tau.as_vector();
            tau = Twist::from_vector(&transported) + omega.scale(db[j]);
        }
        Ok(tau)
    }

    /// Body-frame acceleration at `t`: the time derivative of the velocity
    /// recursion, using `d/dt Ad_{A_j^-1} = -B~'_j ad_{Omega_j} Ad_{A_j^-1}`.
    pub fn body_acceleration(&self, t: f64) -> Result<Twist> {
        let span = self.knots.span_of(t)?;
        let k = self.knots.degree();
        let base = span + 1 - k;
        let (b, db, ddb) = self.basis_in_span(span, t);
        let mut tau = Twist::zero();
        let mut acc = Twist::zero();
        for j in 1..k {
            let omega = &self.omegas[base + j];
            let ad_inv = adjoint(&exp_se3(&omega.scale(-b[j])));
            let transported = Twist::from_vector(&(ad_inv * tau.as_vector()));
            let transported_acc = Twist::from_vector(&(ad_inv * acc.as_vector()));
            let coupling = small_adjoint(omega) * transported.as_vector() * (-db[j]);
            acc = transported_acc + Twist::from_vector(&coupling) + omega.scale(ddb[j]);
            tau = transported + omega.scale(db[j]);
        }
        Ok(acc)
    }

    /// Full span evaluation used by the Jacobian assembly.
    pub(crate) fn span_eval(&self, t: f64) -> Result<SpanEval> {
        let span = self.knots.span_of(t)?;
        let k = self.knots.degree();
        let base = span + 1 - k;
        let (b, db, _) = self.basis_in_span(span, t);

        let mut omega = vec![Twist::zero(); k];
        let mut a = vec![Twist::zero(); k];
        let mut a_exp = vec![Pose::identity(); k];
        for j in 1..k {
            omega[j] = self.omegas[base + j];
            a[j] = omega[j].scale(b[j]);
            a_exp[j] = exp_se3(&a[j]);
        }

        // prefix[0] = I, prefix[1] = T_base, prefix[j] = T_base A_1 .. A_{j-1}
        let mut prefix = vec![Pose::identity(); k];
        prefix[1] = self.control_points[base];
        for j in 2..k {
            prefix[j] = prefix[j - 1].compose(&a_exp[j - 1]);
        }
        // suffix[j] = A_j .. A_{k-1} for j >= 1; suffix[0] = T(t)
        let mut suffix = vec![Pose::identity(); k];
        if k >= 2 {
            suffix[k - 1] = a_exp[k - 1];
            for j in (1..k - 1).rev() {
                suffix[j] = a_exp[j].compose(&suffix[j + 1]);
            }
        }
        let pose = prefix[1].compose(&suffix[1]);
        suffix[0] = pose;

        Ok(SpanEval {
            base,
            b,
            db,
            omega,
            a,
            a_exp,
            prefix,
            suffix,
            pose,
        })
    }
}

/// `Omega = Log(prev^-1 * next)`.
fn relative_increment(prev: &Pose, next: &Pose) -> Result<Twist> {
    log_se3(&prev.inverse().compose(next))
}

/// Everything the analytic Jacobians need about one evaluation instant.
pub(crate) struct SpanEval {
    pub base: usize,
    pub b: DVector<f64>,
    pub db: DVector<f64>,
    /// omega[j], j in 1..k-1 (index 0 unused).
    pub omega: Vec<Twist>,
    /// a[j] = b[j] * omega[j].
    pub a: Vec<Twist>,
    /// A_j = Exp(a_j); index 0 is identity.
    pub a_exp: Vec<Pose>,
    /// P_j products: prefix[0] = I, prefix[j] = T_base A_1 .. A_{j-1}.
    pub prefix: Vec<Pose>,
    /// N'_j products: suffix[0] = T(t), suffix[j] = A_j .. A_{k-1}.
    pub suffix: Vec<Pose>,
    pub pose: Pose,
}
