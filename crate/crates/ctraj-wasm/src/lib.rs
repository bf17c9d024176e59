//! Browser demo bindings: three interactive views over the spline library,
//! each returning JSON for a plain-canvas front end.
//!
//! - [`interpolate_demo`]: control points and the interpolated curve of a
//!   circular test motion, in the XY plane.
//! - [`velocity_profiles`]: speed profiles over time for the spline against
//!   the two discrete-time baselines (the constant-velocity staircase).
//! - [`fit_demo`]: noisy observations fed through the sliding-window
//!   solver, with the recovered trajectory and its error.

use serde::Serialize;
use wasm_bindgen::prelude::*;

use ctraj::lie::{log_se3, Pose, Twist, Vec6};
use ctraj::solver::{BaMode, SolverConfig, Window};
use ctraj::spline::SplineTrajectory;
use ctraj::synthetic::{
    ate, circular_body_velocity, circular_pose, dt_velocity_coupled, dt_velocity_decoupled,
    generate_circular, CircularMotionSpec, SimulatedScene,
};

fn spec(
    theta_transl: f64,
    theta_rot: f64,
    radius: f64,
    n_frames: usize,
    frame_dt: f64,
) -> CircularMotionSpec {
    CircularMotionSpec {
        theta_transl,
        theta_rot,
        radius,
        frame_dt,
        n_frames,
    }
}

/// Spline with control points on the ground truth, phase-led by half the
/// order so the curve overlays the motion.
fn matched_spline(sp: &CircularMotionSpec, degree: usize) -> SplineTrajectory {
    let lead = degree as f64 * sp.frame_dt / 2.0;
    let frames = generate_circular(sp);
    let knots: Vec<f64> = frames.iter().map(|(t, _)| t - lead).collect();
    let cps: Vec<Pose> = frames.iter().map(|(t, _)| circular_pose(sp, *t)).collect();
    SplineTrajectory::new(knots, cps, degree).expect("valid uniform knots")
}

#[derive(Serialize)]
struct PlanarPose {
    t: f64,
    x: f64,
    y: f64,
    /// Heading of the body x axis projected to the XY plane.
    heading: f64,
}

fn planar(t: f64, pose: &Pose) -> PlanarPose {
    let p = pose.translation();
    let x_axis = pose.rotation().column(0);
    PlanarPose {
        t,
        x: p[0],
        y: p[1],
        heading: x_axis[1].atan2(x_axis[0]),
    }
}

#[derive(Serialize)]
struct InterpolateDemo {
    control_points: Vec<PlanarPose>,
    curve: Vec<PlanarPose>,
    truth: Vec<PlanarPose>,
    radius: f64,
}

/// Interpolated trajectory of the circular test motion: control points,
/// dense spline curve and the true path.
#[wasm_bindgen]
pub fn interpolate_demo(
    theta_transl: f64,
    theta_rot: f64,
    radius: f64,
    n_frames: usize,
    frame_dt: f64,
    samples: usize,
) -> String {
    let sp = spec(theta_transl, theta_rot, radius, n_frames.max(10), frame_dt);
    let traj = matched_spline(&sp, 4);
    let (lo, hi) = traj.valid_range().expect("enough frames");

    let control_points = traj
        .knot_vector()
        .knots()
        .iter()
        .zip(traj.control_points())
        .map(|(&t, p)| planar(t, p))
        .collect();
    let mut curve = Vec::new();
    let mut truth = Vec::new();
    let n = samples.clamp(16, 2000);
    for i in 0..n {
        let t = lo + (hi - lo) * (i as f64 + 0.5) / n as f64;
        if let Ok(p) = traj.interpolate_pose(t) {
            curve.push(planar(t, &p));
        }
        truth.push(planar(t, &circular_pose(&sp, t)));
    }
    serde_json::to_string(&InterpolateDemo {
        control_points,
        curve,
        truth,
        radius,
    })
    .expect("serializable")
}

#[derive(Serialize)]
struct VelocitySample {
    t: f64,
    truth_v: f64,
    truth_w: f64,
    ct_v: f64,
    ct_w: f64,
    coupled_v: f64,
    coupled_w: f64,
    decoupled_v: f64,
    decoupled_w: f64,
}

/// Linear and angular speed profiles over time: the spline is continuous,
/// the discrete-time estimates are interval constants.
#[wasm_bindgen]
pub fn velocity_profiles(
    theta_transl: f64,
    theta_rot: f64,
    radius: f64,
    n_frames: usize,
    frame_dt: f64,
    samples_per_interval: usize,
) -> String {
    let sp = spec(theta_transl, theta_rot, radius, n_frames.max(10), frame_dt);
    let traj = matched_spline(&sp, 4);
    let (lo, hi) = traj.valid_range().expect("enough frames");
    let frames = generate_circular(&sp);
    let s = samples_per_interval.clamp(2, 50);

    let mut out = Vec::new();
    for m in 0..sp.n_frames - 1 {
        let t_m = frames[m].0;
        if t_m < lo || frames[m + 1].0 > hi {
            continue;
        }
        let coupled = dt_velocity_coupled(&frames[m].1, &frames[m + 1].1, sp.frame_dt);
        let decoupled = dt_velocity_decoupled(&frames[m].1, &frames[m + 1].1, sp.frame_dt);
        let (coupled, decoupled) = match (coupled, decoupled) {
            (Ok(a), Ok(b)) => (a, b),
            _ => continue,
        };
        for i in 0..s {
            let t = t_m + sp.frame_dt * (i as f64 + 0.5) / s as f64;
            let truth = circular_body_velocity(&sp, t);
            let ct = match traj.body_velocity(t) {
                Ok(v) => v,
                Err(_) => continue,
            };
            out.push(VelocitySample {
                t,
                truth_v: truth.linear.norm(),
                truth_w: truth.angular.norm(),
                ct_v: ct.linear.norm(),
                ct_w: ct.angular.norm(),
                coupled_v: coupled.linear.norm(),
                coupled_w: coupled.angular.norm(),
                decoupled_v: decoupled.linear.norm(),
                decoupled_w: decoupled.angular.norm(),
            });
        }
    }
    serde_json::to_string(&out).expect("serializable")
}

#[derive(Serialize)]
struct FitDemo {
    truth: Vec<PlanarPose>,
    estimate: Vec<PlanarPose>,
    observations_xy: Vec<[f64; 2]>,
    ate_m: f64,
    residual_rms: f64,
    n_frames: usize,
}

/// Run the sliding-window solver on noisy synthetic observations and
/// return the recovered trajectory (mapped back into the ground-truth
/// object frame for display) with its error metrics.
#[wasm_bindgen]
#[allow(clippy::too_many_arguments)]
pub fn fit_demo(
    theta_transl: f64,
    theta_rot: f64,
    radius: f64,
    n_frames: usize,
    frame_dt: f64,
    noise_sigma: f64,
    n_points: usize,
    window_size: usize,
    seed: u64,
) -> String {
    let sp = spec(
        theta_transl,
        theta_rot,
        radius,
        n_frames.clamp(8, 120),
        frame_dt,
    );
    let scene = SimulatedScene::circular(&sp, n_points.clamp(6, 200), noise_sigma.max(0.0), seed)
        .expect("valid scene");
    let config = SolverConfig::default();
    let mut window = match Window::bootstrap(
        scene.observations[0].clone(),
        BaMode::Spline,
        window_size.clamp(4, sp.n_frames),
        4,
    ) {
        Ok(w) => w,
        Err(e) => return format!("{{\"error\":\"{e}\"}}"),
    };
    for frame in scene.observations.iter().skip(1) {
        if window.advance(frame.clone()).is_err() {
            break;
        }
        if window.n_frames() >= 4 {
            let _ = window.solve(&config);
        }
    }

    let mut est = Vec::new();
    let mut gt = Vec::new();
    for k in 3..sp.n_frames {
        let t = k as f64 * sp.frame_dt;
        if let Ok(p) = window.trajectory().interpolate_pose(t) {
            est.push((t, p));
            gt.push((t, circular_pose(&sp, t)));
        }
    }
    let ate_m = ate(&est, &gt, 0).unwrap_or(f64::NAN);

    // constant object-frame offset picked at bootstrap, removed for display
    let mut mean = Vec6::zeros();
    for ((_, e), (_, g)) in est.iter().zip(&gt) {
        if let Ok(tau) = log_se3(&g.inverse().compose(e)) {
            mean += tau.as_vector();
        }
    }
    mean /= est.len().max(1) as f64;
    let offset_inv = ctraj::lie::exp_se3(&Twist::from_vector(&mean)).inverse();

    let estimate = est
        .iter()
        .map(|(t, p)| planar(*t, &p.compose(&offset_inv)))
        .collect();
    let truth = gt.iter().map(|(t, p)| planar(*t, p)).collect();
    let observations_xy = scene
        .observations
        .iter()
        .flat_map(|frame| frame.iter().take(6))
        .map(|o| {
            let w = o.camera_pose.act(&o.p_c);
            [w[0], w[1]]
        })
        .collect();

    serde_json::to_string(&FitDemo {
        truth,
        estimate,
        observations_xy,
        ate_m,
        residual_rms: window.residual_rms().unwrap_or(f64::NAN),
        n_frames: sp.n_frames,
    })
    .expect("serializable")
}
