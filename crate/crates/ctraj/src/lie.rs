//! SE(3) and SO(3) Lie-group primitives.
//!
//! Twists are stacked `[v; w]` (linear first, angular second) and every 6x6
//! matrix in this crate (Adjoint, left Jacobian, ...) follows that block
//! order. Perturbations act on the left: `T <- Exp(xi) * T`.

use nalgebra::{Matrix3, Matrix4, Matrix6, SMatrix, SVector, Vector3, Vector6};

use crate::error::{Error, Result};

pub type Mat3 = Matrix3<f64>;
pub type Mat4 = Matrix4<f64>;
pub type Mat6 = Matrix6<f64>;
pub type Vec3 = Vector3<f64>;
pub type Vec6 = Vector6<f64>;
pub type Vec12 = SVector<f64, 12>;
pub type Mat12x6 = SMatrix<f64, 12, 6>;
pub type Mat3x6 = SMatrix<f64, 3, 6>;
pub type Mat3x12 = SMatrix<f64, 3, 12>;

/// Below this rotation angle (rad) trigonometric coefficient functions
/// switch to 4th-order Taylor expansions.
pub const SMALL_ANGLE: f64 = 1e-6;

/// Rotation angles closer to pi than this are rejected by the logarithm.
const PI_MARGIN: f64 = 1e-6;

/// A rigid-body transform: rotation matrix plus translation vector.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Pose {
    rotation: Mat3,
    translation: Vec3,
}

impl Pose {
    pub fn identity() -> Self {
        Pose {
            rotation: Mat3::identity(),
            translation: Vec3::zeros(),
        }
    }

    /// Build from parts. The rotation is trusted to be orthonormal with
    /// determinant +1; use [`Pose::is_valid`] to check.
    pub fn from_parts(rotation: Mat3, translation: Vec3) -> Self {
        Pose {
            rotation,
            translation,
        }
    }

    pub fn rotation(&self) -> &Mat3 {
        &self.rotation
    }

    pub fn translation(&self) -> &Vec3 {
        &self.translation
    }

    /// 4x4 homogeneous matrix.
    pub fn matrix(&self) -> Mat4 {
        let mut m = Mat4::identity();
        m.fixed_view_mut::<3, 3>(0, 0).copy_from(&self.rotation);
        m.fixed_view_mut::<3, 1>(0, 3).copy_from(&self.translation);
        m
    }

    pub fn inverse(&self) -> Pose {
        let rt = self.rotation.transpose();
        Pose {
            rotation: rt,
            translation: -(rt * self.translation),
        }
    }

    /// Composition `self * other`.
    pub fn compose(&self, other: &Pose) -> Pose {
        Pose {
            rotation: self.rotation * other.rotation,
            translation: self.rotation * other.translation + self.translation,
        }
    }

    /// Apply to a point: `R p + t`.
    pub fn act(&self, p: &Vec3) -> Vec3 {
        self.rotation * p + self.translation
    }

    /// Orthonormality and determinant check within `tol` (Frobenius).
    pub fn is_valid(&self, tol: f64) -> bool {
        let gram = self.rotation.transpose() * self.rotation;
        (gram - Mat3::identity()).norm() <= tol && (self.rotation.determinant() - 1.0).abs() <= tol
    }

    /// Max absolute difference over rotation and translation entries.
    pub fn max_abs_diff(&self, other: &Pose) -> f64 {
        let dr = (self.rotation - other.rotation).abs().max();
        let dt = (self.translation - other.translation).abs().max();
        dr.max(dt)
    }

    /// Exact bitwise equality of all entries.
    pub fn bit_eq(&self, other: &Pose) -> bool {
        self.rotation
            .iter()
            .zip(other.rotation.iter())
            .all(|(a, b)| a.to_bits() == b.to_bits())
            && self
                .translation
                .iter()
                .zip(other.translation.iter())
                .all(|(a, b)| a.to_bits() == b.to_bits())
    }
}

impl std::ops::Mul for &Pose {
    type Output = Pose;
    fn mul(self, rhs: &Pose) -> Pose {
        self.compose(rhs)
    }
}

/// An se(3) tangent vector `[v; w]`: linear part first, angular part second.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Twist {
    pub linear: Vec3,
    pub angular: Vec3,
}

impl Twist {
    pub fn new(linear: Vec3, angular: Vec3) -> Self {
        Twist { linear, angular }
    }

    pub fn zero() -> Self {
        Twist {
            linear: Vec3::zeros(),
            angular: Vec3::zeros(),
        }
    }

    pub fn from_vector(v: &Vec6) -> Self {
        Twist {
            linear: Vec3::new(v[0], v[1], v[2]),
            angular: Vec3::new(v[3], v[4], v[5]),
        }
    }

    pub fn as_vector(&self) -> Vec6 {
        Vec6::new(
            self.linear[0],
            self.linear[1],
            self.linear[2],
            self.angular[0],
            self.angular[1],
            self.angular[2],
        )
    }

    pub fn scale(&self, s: f64) -> Twist {
        Twist {
            linear: self.linear * s,
            angular: self.angular * s,
        }
    }

    pub fn norm(&self) -> f64 {
        self.as_vector().norm()
    }
}

impl std::ops::Add for Twist {
    type Output = Twist;
    fn add(self, rhs: Twist) -> Twist {
        Twist {
            linear: self.linear + rhs.linear,
            angular: self.angular + rhs.angular,
        }
    }
}

/// Skew-symmetric matrix of a 3-vector.
pub fn skew(w: &Vec3) -> Mat3 {
    Mat3::new(0.0, -w[2], w[1], w[2], 0.0, -w[0], -w[1], w[0], 0.0)
}

/// Inverse of [`skew`] on skew-symmetric input.
pub fn unskew(m: &Mat3) -> Vec3 {
    Vec3::new(m[(2, 1)], m[(0, 2)], m[(1, 0)])
}

/// Hat operator: 4x4 se(3) matrix with `skew(w)` top-left and `v` top-right.
pub fn hat(tau: &Twist) -> Mat4 {
    let mut m = Mat4::zeros();
    m.fixed_view_mut::<3, 3>(0, 0)
        .copy_from(&skew(&tau.angular));
    m.fixed_view_mut::<3, 1>(0, 3).copy_from(&tau.linear);
    m
}

/// Inverse of [`hat`].
pub fn vee(m: &Mat4) -> Twist {
    Twist {
        linear: Vec3::new(m[(0, 3)], m[(1, 3)], m[(2, 3)]),
        angular: Vec3::new(m[(2, 1)], m[(0, 2)], m[(1, 0)]),
    }
}

// Trigonometric coefficient functions of the rotation angle. Each switches
// to a 4th-order Taylor expansion below SMALL_ANGLE.

/// sin(t)/t
fn coeff_a(theta: f64) -> f64 {
    if theta < SMALL_ANGLE {
        let t2 = theta * theta;
        1.0 - t2 / 6.0 + t2 * t2 / 120.0
    } else {
        theta.sin() / theta
    }
}

/// (1 - cos(t))/t^2, via the cancellation-free half-angle form.
fn coeff_b(theta: f64) -> f64 {
    if theta < SMALL_ANGLE {
        let t2 = theta * theta;
        0.5 - t2 / 24.0 + t2 * t2 / 720.0
    } else {
        let s = (0.5 * theta).sin();
        2.0 * s * s / (theta * theta)
    }
}

/// (t - sin(t))/t^3
fn coeff_c(theta: f64) -> f64 {
    if theta < SMALL_ANGLE {
        let t2 = theta * theta;
        1.0 / 6.0 - t2 / 120.0 + t2 * t2 / 5040.0
    } else {
        (theta - theta.sin()) / (theta * theta * theta)
    }
}

/// Coefficient of `skew^2` in the inverse SO(3) left Jacobian:
/// (1/t^2)(1 - (t/2) cot(t/2)), written to avoid cancellation blowup.
fn coeff_d(theta: f64) -> f64 {
    if theta < SMALL_ANGLE {
        let t2 = theta * theta;
        1.0 / 12.0 + t2 / 720.0 + t2 * t2 / 30240.0
    } else {
        let half = 0.5 * theta;
        (1.0 - half * half.cos() / half.sin()) / (theta * theta)
    }
}

/// SO(3) exponential (Rodrigues).
pub fn exp_so3(w: &Vec3) -> Mat3 {
    let theta = w.norm();
    let k = skew(w);
    Mat3::identity() + coeff_a(theta) * k + coeff_b(theta) * (k * k)
}

/// SO(3) logarithm on the principal branch.
///
/// Fails with [`Error::LogBranchAmbiguity`] when the angle is within
/// `1e-6` rad of pi.
pub fn log_so3(r: &Mat3) -> Result<Vec3> {
    let cos_theta = ((r.trace() - 1.0) * 0.5).clamp(-1.0, 1.0);
    let w = unskew(&(r - r.transpose())) * 0.5; // sin(theta) * axis
    let sin_theta = w.norm();
    let theta = sin_theta.atan2(cos_theta);
    if theta > std::f64::consts::PI - PI_MARGIN {
        return Err(Error::LogBranchAmbiguity { angle: theta });
    }
    if theta < SMALL_ANGLE {
        let t2 = theta * theta;
        // theta/sin(theta) expansion
        Ok(w * (1.0 + t2 / 6.0 + 7.0 * t2 * t2 / 360.0))
    } else {
        Ok(w * (theta / sin_theta))
    }
}

/// SO(3) left Jacobian.
pub fn so3_left_jacobian(w: &Vec3) -> Mat3 {
    let theta = w.norm();
    let k = skew(w);
    Mat3::identity() + coeff_b(theta) * k + coeff_c(theta) * (k * k)
}

/// Inverse of the SO(3) left Jacobian (valid for angles below 2 pi).
pub fn so3_left_jacobian_inv(w: &Vec3) -> Mat3 {
    let theta = w.norm();
    let k = skew(w);
    Mat3::identity() - 0.5 * k + coeff_d(theta) * (k * k)
}

/// SE(3) exponential: `R = exp(w^)`, `t = Jl_so3(w) v`.
pub fn exp_se3(tau: &Twist) -> Pose {
    Pose {
        rotation: exp_so3(&tau.angular),
        translation: so3_left_jacobian(&tau.angular) * tau.linear,
    }
}

/// SE(3) logarithm on the principal branch.
pub fn log_se3(pose: &Pose) -> Result<Twist> {
    let w = log_so3(&pose.rotation)?;
    let v = so3_left_jacobian_inv(&w) * pose.translation;
    Ok(Twist {
        linear: v,
        angular: w,
    })
}

/// Adjoint matrix of a pose, satisfying `Exp(Ad_T tau) T = T Exp(tau)`.
pub fn adjoint(pose: &Pose) -> Mat6 {
    let mut ad = Mat6::zeros();
    let r = pose.rotation;
    ad.fixed_view_mut::<3, 3>(0, 0).copy_from(&r);
    ad.fixed_view_mut::<3, 3>(3, 3).copy_from(&r);
    ad.fixed_view_mut::<3, 3>(0, 3)
        .copy_from(&(skew(&pose.translation) * r));
    ad
}

/// Adjoint of the Lie algebra: `ad_tau x = [tau, x]` as a 6x6 matrix.
pub fn small_adjoint(tau: &Twist) -> Mat6 {
    let mut ad = Mat6::zeros();
    let wk = skew(&tau.angular);
    ad.fixed_view_mut::<3, 3>(0, 0).copy_from(&wk);
    ad.fixed_view_mut::<3, 3>(3, 3).copy_from(&wk);
    ad.fixed_view_mut::<3, 3>(0, 3)
        .copy_from(&skew(&tau.linear));
    ad
}

/// Q block of the SE(3) left Jacobian (Barfoot's closed form), the coupling
/// of the linear part `v` into the angular directions.
fn q_block(v: &Vec3, w: &Vec3) -> Mat3 {
    let theta = w.norm();
    let vk = skew(v);
    let wk = skew(w);

    let c2 = coeff_c(theta); // (t - sin t)/t^3
    let (c3, c4);
    if theta < SMALL_ANGLE {
        let t2 = theta * theta;
        // (t^2/2 + cos t - 1)/t^4 and its companion, Taylor expanded
        c3 = 1.0 / 24.0 - t2 / 720.0 + t2 * t2 / 40320.0;
        let c5 = 1.0 / 120.0 - t2 / 5040.0 + t2 * t2 / 362880.0; // (sin t - t + t^3/6)/t^5
        c4 = 0.5 * (c3 - 3.0 * c5);
    } else {
        let t2 = theta * theta;
        let t4 = t2 * t2;
        c3 = (t2 / 2.0 + theta.cos() - 1.0) / t4;
        let c5 = (theta.sin() - theta + t2 * theta / 6.0) / (t4 * theta);
        c4 = 0.5 * (c3 - 3.0 * c5);
    }

    let wv = wk * vk;
    let vw = vk * wk;
    let wvw = wv * wk;

    0.5 * vk
        + c2 * (wv + vw + wvw)
        + c3 * (wk * wv + vw * wk - 3.0 * wvw)
        + c4 * (wvw * wk + wk * wvw)
}

/// SE(3) left Jacobian in `[v; w]` block order.
pub fn se3_left_jacobian(tau: &Twist) -> Mat6 {
    let j = so3_left_jacobian(&tau.angular);
    let q = q_block(&tau.linear, &tau.angular);
    let mut out = Mat6::zeros();
    out.fixed_view_mut::<3, 3>(0, 0).copy_from(&j);
    out.fixed_view_mut::<3, 3>(3, 3).copy_from(&j);
    out.fixed_view_mut::<3, 3>(0, 3).copy_from(&q);
    out
}

/// Inverse of the SE(3) left Jacobian (angles below 2 pi).
pub fn se3_left_jacobian_inv(tau: &Twist) -> Mat6 {
    let jinv = so3_left_jacobian_inv(&tau.angular);
    let q = q_block(&tau.linear, &tau.angular);
    let upper = -(jinv * q * jinv);
    let mut out = Mat6::zeros();
    out.fixed_view_mut::<3, 3>(0, 0).copy_from(&jinv);
    out.fixed_view_mut::<3, 3>(3, 3).copy_from(&jinv);
    out.fixed_view_mut::<3, 3>(0, 3).copy_from(&upper);
    out
}

/// Vectorize a pose: `[R column 1; R column 2; R column 3; t]`.
/// The last matrix row is ignored.
pub fn vectorize(pose: &Pose) -> Vec12 {
    let mut v = Vec12::zeros();
    for c in 0..3 {
        for r in 0..3 {
            v[3 * c + r] = pose.rotation[(r, c)];
        }
    }
    for r in 0..3 {
        v[9 + r] = pose.translation[r];
    }
    v
}

/// Inverse of [`vectorize`].
pub fn devectorize(v: &Vec12) -> Pose {
    let mut r = Mat3::zeros();
    for c in 0..3 {
        for row in 0..3 {
            r[(row, c)] = v[3 * c + row];
        }
    }
    Pose {
        rotation: r,
        translation: Vec3::new(v[9], v[10], v[11]),
    }
}

/// The 12x6 generator matrix `G`: column `i` is the vectorization of the
/// i-th se(3) generator, columns ordered `[v; w]`.
pub fn generators() -> Mat12x6 {
    let mut g = Mat12x6::zeros();
    for i in 0..6 {
        let mut e = Vec6::zeros();
        e[i] = 1.0;
        let gen = hat(&Twist::from_vector(&e));
        // same truncated vectorization as `vectorize`
        for c in 0..3 {
            for r in 0..3 {
                g[(3 * c + r, i)] = gen[(r, c)];
            }
        }
        for r in 0..3 {
            g[(9 + r, i)] = gen[(r, 3)];
        }
    }
    g
}

/// Body-frame velocity from a pose and its time derivative: `vee(T^-1 Tdot)`.
pub fn body_velocity_from_derivative(pose: &Pose, tdot: &Mat4) -> Twist {
    let rt = pose.rotation.transpose();
    let rdot = tdot.fixed_view::<3, 3>(0, 0).into_owned();
    let vdot = Vec3::new(tdot[(0, 3)], tdot[(1, 3)], tdot[(2, 3)]);
    let wk = rt * rdot;
    Twist {
        linear: rt * vdot,
        angular: unskew(&wk),
    }
}
