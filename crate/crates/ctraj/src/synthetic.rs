//! Ground-truth motion generators, observation simulation, discrete-time
//! velocity baselines, the continuous-vs-discrete velocity error experiment
//! and trajectory-error metrics.

use nalgebra::Matrix3;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::error::{Error, Result};
use crate::lie::{exp_se3, log_se3, log_so3, Mat3, Pose, Twist, Vec3, Vec6};
use crate::solver::Observation;
use crate::spline::SplineTrajectory;

/// Circular test motion: the object position turns around the global z axis
/// by `theta_transl` per frame while its orientation spins around its own
/// x axis by `theta_rot` per frame.
#[derive(Debug, Clone)]
pub struct CircularMotionSpec {
    /// Turn increment between frames (radians).
    pub theta_transl: f64,
    /// Own-axis spin increment between frames (radians).
    pub theta_rot: f64,
    /// Circle radius (meters).
    pub radius: f64,
    /// Frame spacing (seconds).
    pub frame_dt: f64,
    pub n_frames: usize,
}

impl CircularMotionSpec {
    /// Angular rate of the global turn (rad/s).
    pub fn turn_rate(&self) -> f64 {
        self.theta_transl / self.frame_dt
    }

    /// Angular rate of the own-axis spin (rad/s).
    pub fn spin_rate(&self) -> f64 {
        self.theta_rot / self.frame_dt
    }
}

fn rot_z(a: f64) -> Mat3 {
    Matrix3::new(a.cos(), -a.sin(), 0.0, a.sin(), a.cos(), 0.0, 0.0, 0.0, 1.0)
}

fn rot_x(a: f64) -> Mat3 {
    Matrix3::new(1.0, 0.0, 0.0, 0.0, a.cos(), -a.sin(), 0.0, a.sin(), a.cos())
}

/// Continuous ground-truth pose of the circular motion:
/// `T(t) = Rz(w_t t) * Trans(r, 0, 0) * Rx(w_r t)`.
pub fn circular_pose(spec: &CircularMotionSpec, t: f64) -> Pose {
    let wt = spec.turn_rate() * t;
    let wr = spec.spin_rate() * t;
    let turn = Pose::from_parts(rot_z(wt), Vec3::zeros());
    let arm = Pose::from_parts(Mat3::identity(), Vec3::new(spec.radius, 0.0, 0.0));
    let spin = Pose::from_parts(rot_x(wr), Vec3::zeros());
    turn.compose(&arm).compose(&spin)
}

/// Closed-form body velocity of [`circular_pose`]: transporting the turn
/// twist through the arm and the spin gives
/// `v = r w_t (0, cos(w_r t), -sin(w_r t))`,
/// `w = (w_r, w_t sin(w_r t), w_t cos(w_r t))`.
pub fn circular_body_velocity(spec: &CircularMotionSpec, t: f64) -> Twist {
    let wt = spec.turn_rate();
    let wr = spec.spin_rate();
    let a = wr * t;
    Twist::new(
        Vec3::new(0.0, spec.radius * wt * a.cos(), -spec.radius * wt * a.sin()),
        Vec3::new(wr, wt * a.sin(), wt * a.cos()),
    )
}

/// Ground-truth poses at the frame timestamps.
pub fn generate_circular(spec: &CircularMotionSpec) -> Vec<(f64, Pose)> {
    (0..spec.n_frames)
        .map(|k| {
            let t = k as f64 * spec.frame_dt;
            (t, circular_pose(spec, t))
        })
        .collect()
}

/// Coupled discrete-time velocity: one screw for the whole interval,
/// `tau = Log(T_k^-1 T_{k+1}) / dt`.
pub fn dt_velocity_coupled(t_k: &Pose, t_k1: &Pose, dt: f64) -> Result<Twist> {
    Ok(log_se3(&t_k.inverse().compose(t_k1))?.scale(1.0 / dt))
}

/// Decoupled discrete-time velocity: translation and rotation rates
/// estimated independently, `v = R_k^T (t_{k+1} - t_k)/dt`,
/// `w = Log(R_k^T R_{k+1})/dt`.
pub fn dt_velocity_decoupled(t_k: &Pose, t_k1: &Pose, dt: f64) -> Result<Twist> {
    let v = t_k.rotation().transpose() * (t_k1.translation() - t_k.translation()) / dt;
    let w = log_so3(&(t_k.rotation().transpose() * t_k1.rotation()))? / dt;
    Ok(Twist::new(v, w))
}

/// Mean squared velocity errors of one estimator.
#[derive(Debug, Clone, Copy, Default)]
pub struct VelocityMse {
    /// (m/s)^2
    pub linear: f64,
    /// (rad/s)^2
    pub angular: f64,
}

/// One grid cell of the velocity experiment.
#[derive(Debug, Clone)]
pub struct VelocityMseCell {
    pub theta_transl: f64,
    pub theta_rot: f64,
    pub ct: VelocityMse,
    pub dt_coupled: VelocityMse,
    pub dt_decoupled: VelocityMse,
}

#[derive(Debug, Clone)]
pub struct VelocityExperimentConfig {
    pub theta_transl_values: Vec<f64>,
    pub theta_rot_values: Vec<f64>,
    pub radius: f64,
    pub frame_dt: f64,
    pub n_frames: usize,
    /// Velocity comparison instants per frame interval.
    pub samples_per_interval: usize,
    pub degree: usize,
}

impl Default for VelocityExperimentConfig {
    fn default() -> Self {
        let thetas: Vec<f64> = (0..11).map(|i| i as f64 * 0.05).collect();
        VelocityExperimentConfig {
            theta_transl_values: thetas.clone(),
            theta_rot_values: thetas,
            radius: 1.0,
            frame_dt: 0.1,
            n_frames: 30,
            samples_per_interval: 10,
            degree: 4,
        }
    }
}

/// Continuous-time versus discrete-time velocity estimation errors over a
/// grid of turn/spin increments. Both contestants get the ground-truth
/// object poses: the DT baselines consume the frame poses directly and the
/// spline's control points are placed on the motion (phase-led by half the
/// spline order, so the curve overlays the trajectory). Errors are averaged
/// over instants strictly inside the frame intervals, where the DT estimate
/// is the interval constant and the spline is evaluated exactly there.
pub fn velocity_mse_experiment(cfg: &VelocityExperimentConfig) -> Result<Vec<VelocityMseCell>> {
    if cfg.theta_transl_values.is_empty() || cfg.theta_rot_values.is_empty() {
        return Err(Error::EmptyInput {
            what: "velocity experiment grid",
        });
    }
    if cfg.n_frames < cfg.degree + 4 {
        return Err(Error::InsufficientFrames {
            have: cfg.n_frames,
            need: cfg.degree + 4,
        });
    }
    let mut cells = Vec::new();
    for &tt in &cfg.theta_transl_values {
        for &tr in &cfg.theta_rot_values {
            let spec = CircularMotionSpec {
                theta_transl: tt,
                theta_rot: tr,
                radius: cfg.radius,
                frame_dt: cfg.frame_dt,
                n_frames: cfg.n_frames,
            };
            cells.push(velocity_mse_cell(&spec, cfg)?);
        }
    }
    Ok(cells)
}

fn velocity_mse_cell(
    spec: &CircularMotionSpec,
    cfg: &VelocityExperimentConfig,
) -> Result<VelocityMseCell> {
    let k = cfg.degree;
    let dt = spec.frame_dt;
    let frames = generate_circular(spec);

    // control points on the ground truth; knots shifted back by half the
    // order so the curve tracks the motion without phase lag
    let lead = k as f64 * dt / 2.0;
    let knots: Vec<f64> = frames.iter().map(|(t, _)| t - lead).collect();
    let cps: Vec<Pose> = frames
        .iter()
        .map(|(t, _)| circular_pose(spec, *t))
        .collect();
    let traj = SplineTrajectory::new(knots, cps, k)?;
    let (lo, hi) = traj.valid_range().expect("enough frames checked above");

    let mut ct = VelocityMse::default();
    let mut coupled = VelocityMse::default();
    let mut decoupled = VelocityMse::default();
    let mut samples = 0usize;

    for m in 0..spec.n_frames - 1 {
        let t_m = frames[m].0;
        if t_m < lo || frames[m + 1].0 > hi {
            continue;
        }
        let est_coupled = dt_velocity_coupled(&frames[m].1, &frames[m + 1].1, dt)?;
        let est_decoupled = dt_velocity_decoupled(&frames[m].1, &frames[m + 1].1, dt)?;
        for s in 0..cfg.samples_per_interval {
            let t = t_m + dt * (s as f64 + 0.5) / cfg.samples_per_interval as f64;
            let truth = circular_body_velocity(spec, t);
            let est_ct = traj.body_velocity(t)?;
            accumulate(&mut ct, &est_ct, &truth);
            accumulate(&mut coupled, &est_coupled, &truth);
            accumulate(&mut decoupled, &est_decoupled, &truth);
            samples += 1;
        }
    }
    let n = samples as f64;
    ct.linear /= n;
    ct.angular /= n;
    coupled.linear /= n;
    coupled.angular /= n;
    decoupled.linear /= n;
    decoupled.angular /= n;
    Ok(VelocityMseCell {
        theta_transl: spec.theta_transl,
        theta_rot: spec.theta_rot,
        ct,
        dt_coupled: coupled,
        dt_decoupled: decoupled,
    })
}

fn accumulate(mse: &mut VelocityMse, est: &Twist, truth: &Twist) {
    mse.linear += (est.linear - truth.linear).norm_squared();
    mse.angular += (est.angular - truth.angular).norm_squared();
}

/// A reproducible synthetic scene: ground-truth object motion, an object
/// point cloud, camera poses and noisy observations.
#[derive(Debug, Clone)]
pub struct SimulatedScene {
    pub ground_truth_poses: Vec<(f64, Pose)>,
    pub object_points: Vec<Vec3>,
    pub camera_poses: Vec<(f64, Pose)>,
    pub noise_sigma: f64,
    pub rng_seed: u64,
    /// One observation set per ground-truth frame.
    pub observations: Vec<Vec<Observation>>,
}

impl SimulatedScene {
    /// Circular-motion scene with a seeded box-shaped point cloud and a
    /// static camera at the world origin.
    pub fn circular(
        spec: &CircularMotionSpec,
        n_points: usize,
        noise_sigma: f64,
        seed: u64,
    ) -> Result<SimulatedScene> {
        let truth = generate_circular(spec);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let object_points: Vec<Vec3> = (0..n_points)
            .map(|_| {
                Vec3::new(
                    rng.random_range(-0.5..0.5),
                    rng.random_range(-0.3..0.3),
                    rng.random_range(-0.2..0.2),
                )
            })
            .collect();
        let camera_poses: Vec<(f64, Pose)> =
            truth.iter().map(|(t, _)| (*t, Pose::identity())).collect();
        let observations = simulate_observations(
            &truth,
            &object_points,
            &camera_poses,
            noise_sigma,
            seed.wrapping_add(1),
        )?;
        Ok(SimulatedScene {
            ground_truth_poses: truth,
            object_points,
            camera_poses,
            noise_sigma,
            rng_seed: seed,
            observations,
        })
    }
}

/// Observations `p_c = T_wc^-1 T_wo(t) p_o + noise` with iid Gaussian noise
/// per axis, deterministic under the seed. Camera poses are matched to the
/// ground-truth frames by timestamp.
pub fn simulate_observations(
    truth: &[(f64, Pose)],
    points: &[Vec3],
    camera: &[(f64, Pose)],
    noise_sigma: f64,
    seed: u64,
) -> Result<Vec<Vec<Observation>>> {
    if truth.is_empty() || points.is_empty() {
        return Err(Error::EmptyInput {
            what: "simulated scene",
        });
    }
    let normal = Normal::new(0.0, noise_sigma.max(f64::MIN_POSITIVE)).expect("sigma checked");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut frames = Vec::with_capacity(truth.len());
    for (t, pose) in truth {
        let cam = camera
            .iter()
            .find(|(tc, _)| (tc - t).abs() < 1e-9)
            .map(|(_, p)| *p)
            .ok_or(Error::MissingCameraPose { t: *t })?;
        let t_cw = cam.inverse();
        let mut frame = Vec::with_capacity(points.len());
        for (id, p_o) in points.iter().enumerate() {
            let mut p_c = t_cw.act(&pose.act(p_o));
            if noise_sigma > 0.0 {
                p_c += Vec3::new(
                    normal.sample(&mut rng),
                    normal.sample(&mut rng),
                    normal.sample(&mut rng),
                );
            }
            frame.push(Observation::new(id as u64, *t, p_c, cam));
        }
        frames.push(frame);
    }
    Ok(frames)
}

/// Absolute trajectory error: RMS translational error after best-fit global
/// and object-frame SE(3) alignments estimated from the first
/// `align_prefix` frames (all frames when 0 or larger than the list).
pub fn ate(estimated: &[(f64, Pose)], truth: &[(f64, Pose)], align_prefix: usize) -> Result<f64> {
    if estimated.len() != truth.len() {
        return Err(Error::LengthMismatch {
            left: estimated.len(),
            right: truth.len(),
        });
    }
    if estimated.is_empty() {
        return Err(Error::EmptyInput {
            what: "trajectories",
        });
    }
    for ((te, _), (tt, _)) in estimated.iter().zip(truth) {
        if (te - tt).abs() > 1e-9 {
            return Err(Error::InconsistentFrame {
                reason: format!("timestamps differ: {te} vs {tt}"),
            });
        }
    }
    let prefix = if align_prefix == 0 {
        estimated.len()
    } else {
        align_prefix.min(estimated.len())
    };

    // alternate tangent-space means for the left (global) and right
    // (object) alignment transforms
    let mut t_l = Pose::identity();
    let mut t_r = Pose::identity();
    for _ in 0..50 {
        let mut m_r = Vec6::zeros();
        for ((_, est), (_, gt)) in estimated[..prefix].iter().zip(&truth[..prefix]) {
            let aligned = t_l.compose(est).compose(&t_r);
            m_r += log_se3(&aligned.inverse().compose(gt))?.as_vector();
        }
        m_r /= prefix as f64;
        t_r = t_r.compose(&exp_se3(&Twist::from_vector(&m_r)));

        let mut m_l = Vec6::zeros();
        for ((_, est), (_, gt)) in estimated[..prefix].iter().zip(&truth[..prefix]) {
            let aligned = t_l.compose(est).compose(&t_r);
            m_l += log_se3(&gt.compose(&aligned.inverse()))?.as_vector();
        }
        m_l /= prefix as f64;
        t_l = exp_se3(&Twist::from_vector(&m_l)).compose(&t_l);

        if m_r.norm() < 1e-14 && m_l.norm() < 1e-14 {
            break;
        }
    }

    let mut sum = 0.0;
    for ((_, est), (_, gt)) in estimated.iter().zip(truth) {
        let aligned = t_l.compose(est).compose(&t_r);
        sum += (aligned.translation() - gt.translation()).norm_squared();
    }
    Ok((sum / estimated.len() as f64).sqrt())
}

/// Random tangent vector with bounded linear and angular magnitudes.
pub fn random_twist<R: Rng>(rng: &mut R, max_linear: f64, max_angle: f64) -> Twist {
    let linear = Vec3::new(
        rng.random_range(-max_linear..max_linear),
        rng.random_range(-max_linear..max_linear),
        rng.random_range(-max_linear..max_linear),
    );
    let mut axis = Vec3::new(
        rng.random_range(-1.0..1.0),
        rng.random_range(-1.0..1.0),
        rng.random_range(-1.0..1.0),
    );
    if axis.norm() < 1e-12 {
        axis = Vec3::new(1.0, 0.0, 0.0);
    }
    let angular = axis.normalize() * rng.random_range(0.0..max_angle);
    Twist::new(linear, angular)
}

/// Random pose with moderate translation and rotation.
pub fn random_pose<R: Rng>(rng: &mut R) -> Pose {
    exp_se3(&random_twist(rng, 2.0, 2.5))
}

/// Random spline trajectory whose consecutive increments stay bounded (so
/// every `Omega_j` is well inside the Log branch).
pub fn random_trajectory<R: Rng>(
    rng: &mut R,
    degree: usize,
    n: usize,
    max_step_linear: f64,
    max_step_angle: f64,
) -> SplineTrajectory {
    let mut knots = Vec::with_capacity(n);
    let mut t = 0.0;
    for _ in 0..n {
        knots.push(t);
        t += rng.random_range(0.6..1.4);
    }
    let mut cps = Vec::with_capacity(n);
    let mut pose = random_pose(rng);
    for _ in 0..n {
        pose = pose.compose(&exp_se3(&random_twist(
            rng,
            max_step_linear,
            max_step_angle,
        )));
        cps.push(pose);
    }
    SplineTrajectory::new(knots, cps, degree).expect("bounded increments stay on branch")
}
