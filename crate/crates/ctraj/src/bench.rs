//! Single-threaded timing harness comparing analytic and central-difference
//! Jacobian evaluation, for the interpolated pose and for the full
//! observation-error chain over varying observation counts.
//!
//! Timings refuse to run unless the analytic and numeric results agree on
//! the benchmark inputs first, so a reported speedup can never come from a
//! broken fast path. Reported means are median-of-means over repeat chunks.

use std::hint::black_box;
use std::time::Instant;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::jacobians::{
    numeric_error_jacobian, numeric_pose_jacobian_lie, numeric_pose_jacobian_vectorized,
    pose_jacobian_lie, pose_jacobian_vectorized, ErrorChain, JacobianForm, DEFAULT_FD_STEP,
};
use crate::lie::{exp_se3, log_se3, vectorize, Pose, Twist, Vec3, Vec6};
use crate::spline::SplineTrajectory;
use crate::synthetic::{random_trajectory, random_twist};

const WARMUP: usize = 10;
const MIN_REPEATS: usize = 30;

#[derive(Debug, Clone)]
pub struct BenchReport {
    /// "analytic" or "numeric".
    pub method: String,
    /// "vectorized", "lie", or "direct" for the form-free error baseline.
    pub form: String,
    /// 0 for the pose-Jacobian benchmark.
    pub n_observations: usize,
    pub mean_seconds: f64,
    pub std_seconds: f64,
    pub n_repeats: usize,
}

/// Median of per-chunk means plus sample standard deviation.
fn statistics(samples: &[f64]) -> (f64, f64) {
    let chunks = 5.min(samples.len());
    let per = samples.len() / chunks;
    let mut means: Vec<f64> = (0..chunks)
        .map(|c| {
            let s = &samples[c * per..(c + 1) * per];
            s.iter().sum::<f64>() / s.len() as f64
        })
        .collect();
    means.sort_by(|a, b| a.partial_cmp(b).expect("finite timings"));
    let median = means[means.len() / 2];
    let mean_all = samples.iter().sum::<f64>() / samples.len() as f64;
    let var = samples
        .iter()
        .map(|x| (x - mean_all) * (x - mean_all))
        .sum::<f64>()
        / samples.len() as f64;
    (median, var.sqrt())
}

/// Time several contestants round-robin so noise bursts hit them equally;
/// returns (median-of-means, std) per contestant.
fn time_round_robin(repeats: usize, fns: &mut [&mut dyn FnMut() -> f64]) -> Vec<(f64, f64)> {
    let n = fns.len();
    let mut checksums = vec![0.0f64; n];
    for (i, f) in fns.iter_mut().enumerate() {
        for _ in 0..WARMUP {
            checksums[i] = black_box(f());
        }
    }
    let mut samples = vec![Vec::with_capacity(repeats); n];
    for rep in 0..repeats {
        for (i, f) in fns.iter_mut().enumerate() {
            let start = Instant::now();
            let c = black_box(f());
            samples[i].push(start.elapsed().as_secs_f64());
            // measured computations must be deterministic across repeats
            if rep == 0 {
                checksums[i] = c;
            } else {
                debug_assert_eq!(c.to_bits(), checksums[i].to_bits());
            }
        }
    }
    samples.iter().map(|s| statistics(s)).collect()
}

fn bench_trajectory() -> (SplineTrajectory, f64) {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let traj = random_trajectory(&mut rng, 4, 10, 0.4, 0.3);
    let (lo, hi) = traj.valid_range().expect("ten knots");
    (traj, lo + 0.37 * (hi - lo))
}

fn gate(what: &str, deviation: f64, tol: f64) -> Result<()> {
    if !(deviation < tol) {
        return Err(Error::CorrectnessGate {
            what: what.to_string(),
            deviation,
        });
    }
    Ok(())
}

/// Timings for the Jacobian of one interpolated pose with respect to its
/// control points: analytic versus central differences, in both the 12-d
/// vectorized and the minimal se(3) form.
pub fn bench_pose_jacobian(repeats: usize) -> Result<Vec<BenchReport>> {
    let repeats = repeats.max(MIN_REPEATS);
    let (traj, t) = bench_trajectory();
    let k = traj.degree();

    // correctness gate on the exact benchmark inputs
    let (_, ana_vec) = pose_jacobian_vectorized(&traj, t)?;
    let (_, num_vec) = numeric_pose_jacobian_vectorized(&traj, t, DEFAULT_FD_STEP)?;
    let (_, ana_lie) = pose_jacobian_lie(&traj, t)?;
    let (_, num_lie) = numeric_pose_jacobian_lie(&traj, t, DEFAULT_FD_STEP)?;
    for j in 0..k {
        let dv = (0..12)
            .flat_map(|r| (0..6).map(move |c| (r, c)))
            .map(|(r, c)| (ana_vec[j][(r, c)] - num_vec[j][(r, c)]).abs())
            .fold(0.0, f64::max);
        gate("pose jacobian (vectorized)", dv, 1e-6)?;
        let dl = (0..6)
            .flat_map(|r| (0..6).map(move |c| (r, c)))
            .map(|(r, c)| (ana_lie[j][(r, c)] - num_lie[j][(r, c)]).abs())
            .fold(0.0, f64::max);
        gate("pose jacobian (lie)", dl, 1e-6)?;
    }

    let mut ana_vec_f = || -> f64 {
        let (_, blocks) = pose_jacobian_vectorized(&traj, t).expect("gated input");
        blocks.iter().map(|b| b.sum()).sum()
    };
    let mut ana_lie_f = || -> f64 {
        let (_, blocks) = pose_jacobian_lie(&traj, t).expect("gated input");
        blocks.iter().map(|b| b.sum()).sum()
    };
    let mut num_vec_f = || numeric_pose_fd_sum(&traj, t, false);
    let mut num_lie_f = || numeric_pose_fd_sum(&traj, t, true);
    let stats = time_round_robin(
        repeats,
        &mut [
            &mut ana_vec_f,
            &mut ana_lie_f,
            &mut num_vec_f,
            &mut num_lie_f,
        ],
    );
    let labels = [
        ("analytic", "vectorized"),
        ("analytic", "lie"),
        ("numeric", "vectorized"),
        ("numeric", "lie"),
    ];
    Ok(labels
        .iter()
        .zip(&stats)
        .map(|((m, f), (mean, std))| report(m, f, 0, *mean, *std, repeats))
        .collect())
}

/// Central-difference pose Jacobian with the scaffolding a timing loop
/// should pay for: one working clone, per-dimension set/evaluate, column
/// assembly.
fn numeric_pose_fd_sum(traj: &SplineTrajectory, t: f64, lie: bool) -> f64 {
    let k = traj.degree();
    let base = traj.knot_vector().span_of(t).expect("in range") + 1 - k;
    let h = DEFAULT_FD_STEP;
    let mut work = traj.clone();
    let mut sum = 0.0;
    let rows = if lie { 6 } else { 12 };
    let mut plus = [0.0f64; 12];
    let mut minus = [0.0f64; 12];
    for j in 0..k {
        let original = *traj.control_point(base + j);
        for d in 0..6 {
            let mut xi = Vec6::zeros();
            xi[d] = h;
            work.set_control_point(
                base + j,
                exp_se3(&Twist::from_vector(&xi)).compose(&original),
            )
            .expect("bounded step");
            eval_pose_into(&work, t, lie, &mut plus);
            xi[d] = -h;
            work.set_control_point(
                base + j,
                exp_se3(&Twist::from_vector(&xi)).compose(&original),
            )
            .expect("bounded step");
            eval_pose_into(&work, t, lie, &mut minus);
            for r in 0..rows {
                sum += (plus[r] - minus[r]) / (2.0 * h);
            }
        }
        work.set_control_point(base + j, original).expect("restore");
    }
    sum
}

fn eval_pose_into(traj: &SplineTrajectory, t: f64, lie: bool, out: &mut [f64; 12]) {
    let pose = traj.interpolate_pose(t).expect("in range");
    if lie {
        let tau = log_se3(&pose).expect("on branch").as_vector();
        out[..6].copy_from_slice(tau.as_slice());
    } else {
        out.copy_from_slice(vectorize(&pose).as_slice());
    }
}

/// Timings for assembling every observation-error Jacobian block of one
/// frame with `n` observations: the analytic chain (both forms) against
/// central differences of the stacked errors.
pub fn bench_error_chain(n_observations: &[usize], repeats: usize) -> Result<Vec<BenchReport>> {
    if n_observations.is_empty() {
        return Err(Error::EmptyInput {
            what: "observation counts",
        });
    }
    let repeats = repeats.max(MIN_REPEATS);
    let (traj, t) = bench_trajectory();
    let k = traj.degree();
    let mut rng = ChaCha8Rng::seed_from_u64(4048);
    let t_wc = exp_se3(&random_twist(&mut rng, 1.0, 1.0));

    let mut reports = Vec::new();
    for &n in n_observations {
        let points: Vec<Vec3> = (0..n.max(1))
            .map(|_| random_twist(&mut rng, 0.5, 1.0).linear)
            .collect();

        // gate: both analytic forms against the numeric oracle, and against
        // each other
        let chain_vec = ErrorChain::new(&traj, t, &t_wc, JacobianForm::Vectorized)?;
        let chain_lie = ErrorChain::new(&traj, t, &t_wc, JacobianForm::Lie)?;
        let probe = &points[0];
        let (_, blocks_vec) = chain_vec.evaluate(probe);
        let (_, blocks_lie) = chain_lie.evaluate(probe);
        for j in 0..k {
            let num = numeric_error_jacobian(&traj, t, &t_wc, probe, chain_vec.base() + j, 1e-6)?;
            let dv = (blocks_vec[j] - num.fixed_view::<3, 6>(0, 0).into_owned())
                .abs()
                .max();
            gate("error chain (vectorized)", dv, 1e-6)?;
            let dl = (blocks_lie[j] - num.fixed_view::<3, 6>(0, 0).into_owned())
                .abs()
                .max();
            gate("error chain (lie)", dl, 1e-6)?;
            let dff = (blocks_vec[j] - blocks_lie[j]).abs().max();
            gate("error chain form equivalence", dff, 1e-9)?;
        }

        let mut blocks = vec![crate::lie::Mat3x6::zeros(); k];
        let mut blocks2 = vec![crate::lie::Mat3x6::zeros(); k];
        // central differences of the stacked errors: per perturbation one
        // pose evaluation and a transform of every observation, assembled
        // into the same per-observation blocks the analytic path produces
        let mut out = vec![[crate::lie::Mat3x6::zeros(); 4]; points.len()];
        let mut plus = vec![Vec3::zeros(); points.len()];

        let mut ana_vec_f = || -> f64 {
            let chain = ErrorChain::new(&traj, t, &t_wc, JacobianForm::Vectorized).expect("gated");
            let mut sum = 0.0;
            for p in &points {
                let pred = chain.evaluate_into(p, &mut blocks);
                sum += pred[0];
                for b in &blocks {
                    sum += b[(0, 0)] + b[(2, 5)];
                }
            }
            sum
        };
        let mut ana_lie_f = || -> f64 {
            let chain = ErrorChain::new(&traj, t, &t_wc, JacobianForm::Lie).expect("gated");
            let mut sum = 0.0;
            for p in &points {
                let pred = chain.evaluate_into(p, &mut blocks2);
                sum += pred[0];
                for b in &blocks2 {
                    sum += b[(0, 0)] + b[(2, 5)];
                }
            }
            sum
        };
        let mut num_f =
            || numeric_error_chain_blocks(&traj, t, &t_wc, &points, &mut plus, &mut out);
        let stats = time_round_robin(repeats, &mut [&mut ana_vec_f, &mut ana_lie_f, &mut num_f]);
        reports.push(report(
            "analytic",
            "vectorized",
            n,
            stats[0].0,
            stats[0].1,
            repeats,
        ));
        reports.push(report(
            "analytic", "lie", n, stats[1].0, stats[1].1, repeats,
        ));
        reports.push(report(
            "numeric", "direct", n, stats[2].0, stats[2].1, repeats,
        ));
    }
    Ok(reports)
}

fn numeric_error_chain_blocks(
    traj: &SplineTrajectory,
    t: f64,
    t_wc: &Pose,
    points: &[Vec3],
    plus: &mut [Vec3],
    out: &mut [[crate::lie::Mat3x6; 4]],
) -> f64 {
    let k = traj.degree();
    let base = traj.knot_vector().span_of(t).expect("in range") + 1 - k;
    let h = DEFAULT_FD_STEP;
    let t_cw = t_wc.inverse();
    let mut work = traj.clone();
    for j in 0..k {
        let original = *traj.control_point(base + j);
        for d in 0..6 {
            let mut xi = Vec6::zeros();
            xi[d] = h;
            work.set_control_point(
                base + j,
                exp_se3(&Twist::from_vector(&xi)).compose(&original),
            )
            .expect("bounded step");
            let t_co = t_cw.compose(&work.interpolate_pose(t).expect("in range"));
            for (buf, p) in plus.iter_mut().zip(points) {
                *buf = t_co.act(p);
            }
            xi[d] = -h;
            work.set_control_point(
                base + j,
                exp_se3(&Twist::from_vector(&xi)).compose(&original),
            )
            .expect("bounded step");
            let t_co = t_cw.compose(&work.interpolate_pose(t).expect("in range"));
            for ((blocks, buf), p) in out.iter_mut().zip(plus.iter()).zip(points) {
                // column d of -d pred / d xi_{base+j}
                let col = (t_co.act(p) - buf) / (2.0 * h);
                blocks[j][(0, d)] = col[0];
                blocks[j][(1, d)] = col[1];
                blocks[j][(2, d)] = col[2];
            }
        }
        work.set_control_point(base + j, original).expect("restore");
    }
    let mut sum = 0.0;
    for blocks in out.iter() {
        for b in blocks {
            sum += b[(0, 0)] + b[(2, 5)];
        }
    }
    sum
}

fn report(
    method: &str,
    form: &str,
    n_observations: usize,
    mean_seconds: f64,
    std_seconds: f64,
    n_repeats: usize,
) -> BenchReport {
    BenchReport {
        method: method.to_string(),
        form: form.to_string(),
        n_observations,
        mean_seconds,
        std_seconds,
        n_repeats,
    }
}
