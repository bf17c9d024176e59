//! Acceptance suite: one test per headline claim, each printing a
//! PASS/FAIL line (run with `--nocapture` to see them on success).
//!
//! 1. Analytic Jacobians match central differences (1e-6; velocity 1e-5).
//! 2. Analytic Jacobian assembly is at least 5x faster than the
//!    central-difference baseline (pose Jacobian, and the 100-observation
//!    error chain) - in `acceptance_timing.rs`, kept alone in its target so
//!    the measurement runs without sibling-test contention.
//! 3. Spline velocities dominate both discrete-time baselines over the
//!    turn/spin grid.
//! 4. Pose, velocity and acceleration are continuous across knots; the
//!    discrete-time baselines are not.
//! 5. The window solver converges on synthetic data and honors its gauge.
//! 6. Exactness: constant-twist reproduction, Exp/Log round trips, Huber
//!    zero iff residual zero, vanishing newest basis at its knot.

use std::collections::BTreeMap;

use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

use ctraj::jacobians::{
    numeric_error_jacobian, numeric_pose_jacobian_lie, numeric_pose_jacobian_vectorized,
    numeric_velocity_jacobian, pose_jacobian_lie, pose_jacobian_vectorized, velocity_jacobian,
    ErrorChain, JacobianForm, DEFAULT_FD_STEP,
};
use ctraj::lie::{exp_se3, log_se3, Pose, Twist, Vec3, Vec6};
use ctraj::solver::{huber_rho, BaMode, Observation, SolverConfig, Window};
use ctraj::spline::SplineTrajectory;
use ctraj::synthetic::{
    ate, circular_pose, dt_velocity_coupled, generate_circular, random_trajectory, random_twist,
    velocity_mse_experiment, CircularMotionSpec, SimulatedScene, VelocityExperimentConfig,
};

fn verdict(criterion: &str, pass: bool, detail: &str) {
    println!(
        "criterion {criterion}: {} - {detail}",
        if pass { "PASS" } else { "FAIL" }
    );
    assert!(pass, "criterion {criterion} failed: {detail}");
}

fn random_time(rng: &mut StdRng, traj: &SplineTrajectory) -> f64 {
    let (lo, hi) = traj.valid_range().unwrap();
    rng.random_range(lo..hi)
}

#[test]
fn criterion_1_jacobian_correctness() {
    let mut rng = StdRng::seed_from_u64(101);
    let mut worst_pose: f64 = 0.0;
    let mut worst_log: f64 = 0.0;
    let mut worst_err: f64 = 0.0;
    let mut worst_vel: f64 = 0.0;

    // trajectories keep every increment well below ||Omega|| = 1
    let mut check = |rng: &mut StdRng, k: usize, samples: usize| {
        for _ in 0..samples {
            let traj = random_trajectory(rng, k, k + 6, 0.4, 0.3);
            let t = random_time(rng, &traj);

            let (_, ana) = pose_jacobian_vectorized(&traj, t).unwrap();
            let (_, num) = numeric_pose_jacobian_vectorized(&traj, t, DEFAULT_FD_STEP).unwrap();
            for j in 0..k {
                for r in 0..12 {
                    for c in 0..6 {
                        worst_pose = worst_pose.max((ana[j][(r, c)] - num[j][(r, c)]).abs());
                    }
                }
            }

            let (_, ana) = pose_jacobian_lie(&traj, t).unwrap();
            let (_, num) = numeric_pose_jacobian_lie(&traj, t, DEFAULT_FD_STEP).unwrap();
            for j in 0..k {
                worst_log = worst_log.max(
                    (ana[j] - num[j].fixed_view::<6, 6>(0, 0).into_owned())
                        .abs()
                        .max(),
                );
            }

            let (_, ana) = velocity_jacobian(&traj, t).unwrap();
            let (_, num) = numeric_velocity_jacobian(&traj, t, DEFAULT_FD_STEP).unwrap();
            for j in 0..k {
                worst_vel = worst_vel.max(
                    (ana[j] - num[j].fixed_view::<6, 6>(0, 0).into_owned())
                        .abs()
                        .max(),
                );
            }

            let t_wc = exp_se3(&random_twist(rng, 1.0, 1.0));
            let p_o = random_twist(rng, 0.5, 1.0).linear;
            let chain = ErrorChain::new(&traj, t, &t_wc, JacobianForm::Vectorized).unwrap();
            let (_, blocks) = chain.evaluate(&p_o);
            for (j, block) in blocks.iter().enumerate() {
                let num =
                    numeric_error_jacobian(&traj, t, &t_wc, &p_o, chain.base() + j, 1e-6).unwrap();
                worst_err = worst_err.max(
                    (block - num.fixed_view::<3, 6>(0, 0).into_owned())
                        .abs()
                        .max(),
                );
            }
        }
    };

    check(&mut rng, 4, 1000);
    for k in [2usize, 3, 5] {
        check(&mut rng, k, 350);
    }

    let pass = worst_pose < 1e-6 && worst_log < 1e-6 && worst_err < 1e-6 && worst_vel < 1e-5;
    verdict(
        "1 (jacobian correctness)",
        pass,
        &format!(
            "max |analytic - numeric|: pose {worst_pose:.2e}, log {worst_log:.2e}, \
             error {worst_err:.2e} (tol 1e-6), velocity {worst_vel:.2e} (tol 1e-5); \
             2050 random (trajectory, t) pairs over k in {{2,3,4,5}}"
        ),
    );
}

#[test]
fn criterion_3_velocity_dominance() {
    let cfg = VelocityExperimentConfig::default();
    assert_eq!(cfg.theta_transl_values.len(), 11);
    assert_eq!(cfg.theta_rot_values.len(), 11);
    let cells = velocity_mse_experiment(&cfg).unwrap();
    assert_eq!(cells.len(), 121);

    // below this floor an estimator reproduced the motion to machine
    // precision; when a baseline is that exact (the spin-free cells
    // degenerate to constant screws, which Eq.-35-style estimates and the
    // spline both represent without error) no strict ordering can exist,
    // and the comparison only demands the spline be exact too
    const EXACT: f64 = 1e-20;
    let mut dominated = true;
    let mut strict_failures = 0usize;
    let mut degenerate = 0usize;
    let mut worst_cell = String::new();
    for c in &cells {
        let pairs = [
            (c.ct.linear, c.dt_coupled.linear, c.dt_decoupled.linear),
            (c.ct.angular, c.dt_coupled.angular, c.dt_decoupled.angular),
        ];
        for (ct, cp, dc) in pairs {
            let (ct, cp, dc) = (ct.max(EXACT), cp.max(EXACT), dc.max(EXACT));
            if ct > cp || ct > dc {
                dominated = false;
                worst_cell = format!(
                    "({}, {}): ct {ct:.3e} vs coupled {cp:.3e} / decoupled {dc:.3e}",
                    c.theta_transl, c.theta_rot
                );
            }
            if c.theta_transl > 0.0 {
                for baseline in [cp, dc] {
                    let ok = if baseline <= EXACT {
                        degenerate += 1;
                        ct <= EXACT
                    } else {
                        ct < baseline
                    };
                    if !ok {
                        strict_failures += 1;
                        worst_cell = format!(
                            "({}, {}): ct {ct:.3e} vs baseline {baseline:.3e}",
                            c.theta_transl, c.theta_rot
                        );
                    }
                }
            }
        }
    }
    let pass = dominated && strict_failures == 0;
    verdict(
        "3 (velocity dominance)",
        pass,
        &format!(
            "11x11 grid: continuous-time MSE <= both baselines in every cell, \
             strictly lower in every informative cell with theta_transl > 0 \
             ({degenerate} machine-exact screw comparisons excluded){}",
            if pass {
                String::new()
            } else {
                format!("; first violation {worst_cell}")
            }
        ),
    );
}

#[test]
fn criterion_4_continuity() {
    let mut rng = StdRng::seed_from_u64(104);
    let mut worst_pose: f64 = 0.0;
    let mut worst_vel: f64 = 0.0;
    let mut worst_acc: f64 = 0.0;
    for _ in 0..20 {
        let traj = random_trajectory(&mut rng, 4, 12, 0.4, 0.3);
        let kv = traj.knot_vector();
        for idx in 4..kv.len() - 1 {
            let t = kv.knot(idx);
            let eps = 1e-10;
            let p = traj.interpolate_pose(t - eps).unwrap();
            let q = traj.interpolate_pose(t).unwrap();
            worst_pose = worst_pose.max(p.max_abs_diff(&q));
            let v = traj.body_velocity(t - eps).unwrap();
            let w = traj.body_velocity(t).unwrap();
            worst_vel = worst_vel.max((v.as_vector() - w.as_vector()).abs().max());
            let a = traj.body_acceleration(t - eps).unwrap();
            let b = traj.body_acceleration(t).unwrap();
            worst_acc = worst_acc.max((a.as_vector() - b.as_vector()).abs().max());
        }
    }

    // the discrete-time estimates jump at frame boundaries of the same
    // curved motions
    let spec = CircularMotionSpec {
        theta_transl: 0.2,
        theta_rot: 0.3,
        radius: 1.0,
        frame_dt: 0.1,
        n_frames: 20,
    };
    let frames = generate_circular(&spec);
    let mut dt_jump: f64 = 0.0;
    for m in 1..spec.n_frames - 1 {
        let before = dt_velocity_coupled(&frames[m - 1].1, &frames[m].1, spec.frame_dt).unwrap();
        let after = dt_velocity_coupled(&frames[m].1, &frames[m + 1].1, spec.frame_dt).unwrap();
        dt_jump = dt_jump.max((after.as_vector() - before.as_vector()).norm());
    }

    let pass = worst_pose < 1e-8 && worst_vel < 1e-8 && worst_acc < 1e-8 && dt_jump > 1e-3;
    verdict(
        "4 (continuity)",
        pass,
        &format!(
            "spline left/right agreement at interior knots: pose {worst_pose:.2e}, \
             velocity {worst_vel:.2e}, acceleration {worst_acc:.2e} (tol 1e-8); \
             discrete-time velocity jump on the same motion: {dt_jump:.2e} (must exceed 1e-3)"
        ),
    );
}

#[test]
fn criterion_5_solver_convergence() {
    // (a) noiseless, ground-truth-initialized windows with tangent noise up
    // to 0.05 converge below 1e-6 RMS within 20 iterations
    let spec = CircularMotionSpec {
        theta_transl: 0.08,
        theta_rot: 0.12,
        radius: 1.0,
        frame_dt: 0.1,
        n_frames: 14,
    };
    let mut worst_rms: f64 = 0.0;
    let mut worst_iters = 0usize;
    for seed in 0..5u64 {
        let scene = SimulatedScene::circular(&spec, 25, 0.0, 40 + seed).unwrap();
        let lead = 4.0 * spec.frame_dt / 2.0;
        let knots: Vec<f64> = scene.ground_truth_poses.iter().map(|(t, _)| *t).collect();
        let mut cps: Vec<Pose> = knots
            .iter()
            .map(|&t| circular_pose(&spec, t + lead))
            .collect();
        let mut object_points = BTreeMap::new();
        for (id, p) in scene.object_points.iter().enumerate() {
            object_points.insert(id as u64, *p);
        }
        // observations from the spline itself so an exact solution exists,
        // then perturb the free control points by up to 0.05 in the tangent
        let gt_window = Window::from_parts(
            knots.clone(),
            cps.clone(),
            scene.observations.clone(),
            object_points.clone(),
            BaMode::Spline,
            spec.n_frames,
            4,
        )
        .unwrap();
        let frames: Vec<Vec<Observation>> = knots
            .iter()
            .map(|&t| match gt_window.trajectory().interpolate_pose(t) {
                Ok(p) => object_points
                    .iter()
                    .map(|(&id, po)| Observation::new(id, t, p.act(po), Pose::identity()))
                    .collect(),
                Err(_) => Vec::new(),
            })
            .collect();
        let mut rng = StdRng::seed_from_u64(seed);
        for (i, fixed) in gt_window.fixed_flags().to_vec().iter().enumerate() {
            if !*fixed {
                let mut xi = Vec6::zeros();
                for d in 0..6 {
                    xi[d] = rng.random_range(-0.05..0.05);
                }
                let norm = xi.norm();
                if norm > 0.05 {
                    xi *= 0.05 / norm;
                }
                cps[i] = exp_se3(&Twist::from_vector(&xi)).compose(&cps[i]);
            }
        }
        let mut window = Window::from_parts(
            knots,
            cps,
            frames,
            object_points,
            BaMode::Spline,
            spec.n_frames,
            4,
        )
        .unwrap();
        let config = SolverConfig::default();
        let report = window.solve(&config).unwrap();
        worst_iters = worst_iters.max(report.iterations);
        worst_rms = worst_rms.max(window.residual_rms().unwrap());
    }

    // (b) noisy streaming pipeline: sigma = 0.01 m over 30 frames, aligned
    // ATE below 0.02 m; (c) gauge-fixed control points bit-identical
    let spec = CircularMotionSpec {
        theta_transl: 0.06,
        theta_rot: 0.1,
        radius: 1.0,
        frame_dt: 0.1,
        n_frames: 30,
    };
    let scene = SimulatedScene::circular(&spec, 30, 0.01, 77).unwrap();
    let config = SolverConfig::default();
    let mut window =
        Window::bootstrap(scene.observations[0].clone(), BaMode::Spline, 8, 4).unwrap();
    let mut gauge_ok = true;
    for k in 1..spec.n_frames {
        window.advance(scene.observations[k].clone()).unwrap();
        if window.n_frames() >= 4 {
            let before: Vec<Pose> = (0..window.n_frames())
                .map(|i| *window.trajectory().control_point(i))
                .collect();
            window.solve(&config).unwrap();
            for (i, fixed) in window.fixed_flags().to_vec().iter().enumerate() {
                if *fixed && !window.trajectory().control_point(i).bit_eq(&before[i]) {
                    gauge_ok = false;
                }
            }
        }
    }
    let mut est = Vec::new();
    let mut gt = Vec::new();
    for k in 3..spec.n_frames {
        let t = k as f64 * spec.frame_dt;
        est.push((t, window.trajectory().interpolate_pose(t).unwrap()));
        gt.push((t, circular_pose(&spec, t)));
    }
    let ate_m = ate(&est, &gt, 0).unwrap();

    let pass = worst_rms < 1e-6 && worst_iters <= 20 && ate_m < 0.02 && gauge_ok;
    verdict(
        "5 (solver convergence)",
        pass,
        &format!(
            "noiseless perturbed windows: RMS {worst_rms:.2e} (tol 1e-6) within \
             {worst_iters} iterations (max 20); noisy streaming ATE {ate_m:.3e} m \
             (tol 0.02); gauge-fixed control points bit-identical: {gauge_ok}"
        ),
    );
}

#[test]
fn criterion_6_exactness() {
    // constant-twist reproduction
    let d = Twist::new(Vec3::new(0.4, -0.2, 0.1), Vec3::new(0.15, 0.3, -0.2));
    let dt = 0.5;
    let k = 4usize;
    let lead = k as f64 * dt / 2.0;
    let knots: Vec<f64> = (0..12).map(|i| i as f64 * dt).collect();
    let cps: Vec<Pose> = knots.iter().map(|&t| exp_se3(&d.scale(t + lead))).collect();
    let traj = SplineTrajectory::new(knots, cps, k).unwrap();
    let (lo, hi) = traj.valid_range().unwrap();
    let mut worst_pose: f64 = 0.0;
    let mut worst_vel: f64 = 0.0;
    let mut worst_acc: f64 = 0.0;
    for i in 0..200 {
        let t = lo + (hi - lo) * (i as f64 / 200.0);
        let p = traj.interpolate_pose(t).unwrap();
        worst_pose = worst_pose.max(p.max_abs_diff(&exp_se3(&d.scale(t))));
        let v = traj.body_velocity(t).unwrap();
        worst_vel = worst_vel.max((v.as_vector() - d.as_vector()).abs().max());
        worst_acc = worst_acc.max(traj.body_acceleration(t).unwrap().norm());
    }

    // Exp/Log round trips
    let mut rng = StdRng::seed_from_u64(106);
    let mut worst_roundtrip: f64 = 0.0;
    for _ in 0..1000 {
        let tau = random_twist(&mut rng, 3.0, std::f64::consts::PI - 0.1);
        let back = log_se3(&exp_se3(&tau)).unwrap();
        worst_roundtrip = worst_roundtrip.max((back.as_vector() - tau.as_vector()).abs().max());
    }

    // Huber cost zero iff residuals zero
    let huber_ok = huber_rho(0.0, 0.05) == 0.0
        && (0..100).all(|i| {
            let s = 1e-9 * (i + 1) as f64;
            huber_rho(s, 0.05) > 0.0
        });

    // newest cumulative basis vanishes exactly at its knot
    let mut rng2 = StdRng::seed_from_u64(107);
    let mut basis_exact = true;
    for _ in 0..20 {
        let traj = random_trajectory(&mut rng2, 4, 10, 0.4, 0.3);
        let kv = traj.knot_vector();
        for idx in 4..kv.len() - 1 {
            let (b, _, _) = traj.evaluate_basis(kv.knot(idx)).unwrap();
            if b[3] != 0.0 {
                basis_exact = false;
            }
        }
    }

    let pass = worst_pose < 1e-9
        && worst_vel < 1e-9
        && worst_acc < 1e-7
        && worst_roundtrip < 1e-9
        && huber_ok
        && basis_exact;
    verdict(
        "6 (exactness)",
        pass,
        &format!(
            "constant twist: pose {worst_pose:.2e} (tol 1e-9), velocity {worst_vel:.2e} \
             (tol 1e-9), acceleration {worst_acc:.2e} (tol 1e-7); Exp/Log roundtrip \
             {worst_roundtrip:.2e} over 1000 samples (tol 1e-9); Huber zero iff zero: \
             {huber_ok}; newest basis exactly 0 at its knot: {basis_exact}"
        ),
    );
}
