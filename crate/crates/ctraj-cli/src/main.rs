//! Command-line front end: fit trajectories to observation files,
//! interpolate poses and body twists, run the velocity experiment and the
//! Jacobian benchmarks, and score trajectories against ground truth.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

use ctraj::bench::{bench_error_chain, bench_pose_jacobian};
use ctraj::solver::{BaMode, SolverConfig, Window};
use ctraj::spline::SplineTrajectory;
use ctraj::synthetic::{ate, velocity_mse_experiment, VelocityExperimentConfig};
use ctraj_cli::{io, CliError};

#[derive(Parser)]
#[command(
    name = "ctraj",
    version,
    about = "Continuous-time SE(3) trajectory estimation"
)]
struct Cli {
    /// Seed for randomized internals (all commands are deterministic under
    /// a fixed seed).
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,

    /// Spline degree (cubic = 4).
    #[arg(long, global = true)]
    degree: Option<usize>,

    /// JSON config file; explicit flags win over config values.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Output directory (falls back to $CTRAJ_OUTPUT_DIR, then ".").
    #[arg(long, global = true)]
    output: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Fit a spline trajectory to a timestamped observation file.
    Fit(FitArgs),
    /// Interpolate poses, body velocities and accelerations from a
    /// control-points file.
    Interpolate(InterpolateArgs),
    /// Continuous- vs discrete-time velocity errors over a turn/spin grid.
    VelocityExperiment(VelocityArgs),
    /// Time analytic versus central-difference Jacobian evaluation.
    Bench(BenchArgs),
    /// Absolute trajectory error between an estimate and ground truth.
    Ate(AteArgs),
}

#[derive(Args)]
struct FitArgs {
    /// Observation CSV (header: timestamp,point_id,pcx,pcy,pcz,tx,ty,tz,qx,qy,qz,qw).
    observations: PathBuf,
    #[arg(long, value_enum)]
    mode: Option<ModeArg>,
    /// Sliding-window length in frames; 0 keeps every frame active (batch).
    #[arg(long)]
    window_size: Option<usize>,
    #[arg(long)]
    huber_delta: Option<f64>,
    #[arg(long)]
    max_iterations: Option<usize>,
    /// Comma-separated output timestamps (default: frame timestamps inside
    /// the valid range).
    #[arg(long, value_delimiter = ',')]
    at: Option<Vec<f64>>,
    /// Output poses at a fixed rate (Hz) over the valid range instead.
    #[arg(long)]
    rate: Option<f64>,
}

#[derive(Args)]
struct InterpolateArgs {
    /// Control-points file (trajectory format; one knot per line).
    control_points: PathBuf,
    /// Comma-separated timestamps.
    #[arg(long, value_delimiter = ',')]
    at: Option<Vec<f64>>,
    /// Sample at a fixed rate (Hz) over the valid range.
    #[arg(long)]
    rate: Option<f64>,
}

#[derive(Args)]
struct VelocityArgs {
    /// Largest turn/spin increment of the grid (radians per frame).
    #[arg(long, default_value_t = 0.5)]
    theta_max: f64,
    /// Grid points per axis, from 0 to theta-max inclusive.
    #[arg(long, default_value_t = 11)]
    theta_steps: usize,
    #[arg(long, default_value_t = 1.0)]
    radius: f64,
    #[arg(long, default_value_t = 0.1)]
    frame_dt: f64,
    #[arg(long, default_value_t = 30)]
    n_frames: usize,
    /// Velocity comparison instants per frame interval.
    #[arg(long, default_value_t = 10)]
    samples: usize,
}

#[derive(Args)]
struct BenchArgs {
    #[arg(long, default_value_t = 50)]
    repeats: usize,
    /// Observation counts for the error-chain benchmark.
    #[arg(long, value_delimiter = ',', default_values_t = vec![1usize, 10, 100])]
    observations: Vec<usize>,
}

#[derive(Args)]
struct AteArgs {
    /// Estimated trajectory file.
    estimate: PathBuf,
    /// Ground-truth trajectory file.
    truth: PathBuf,
    /// Frames used to estimate the alignment transforms (0 = all).
    #[arg(long, default_value_t = 0)]
    align_prefix: usize,
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeArg {
    SplineBa,
    LocalBa,
}

/// Optional overrides loaded from --config; explicit flags win.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct FileConfig {
    degree: Option<usize>,
    mode: Option<String>,
    window_size: Option<usize>,
    huber_delta: Option<f64>,
    max_iterations: Option<usize>,
    rate: Option<f64>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}", e.message);
            ExitCode::from(e.exit)
        }
    }
}

fn run(cli: Cli) -> Result<(), CliError> {
    let file_config = match &cli.config {
        Some(path) => {
            let text = std::fs::read_to_string(path).map_err(|e| {
                CliError::validation(format!("cannot read config {}: {e}", path.display()))
            })?;
            serde_json::from_str::<FileConfig>(&text)
                .map_err(|e| CliError::validation(format!("config parse error: {e}")))?
        }
        None => FileConfig::default(),
    };
    let out_dir = cli
        .output
        .clone()
        .or_else(|| std::env::var_os("CTRAJ_OUTPUT_DIR").map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("."));
    std::fs::create_dir_all(&out_dir)
        .map_err(|e| CliError::validation(format!("cannot create {}: {e}", out_dir.display())))?;
    let degree = cli.degree.or(file_config.degree).unwrap_or(4);

    match &cli.command {
        Command::Fit(args) => cmd_fit(args, &file_config, degree, cli.seed, &out_dir),
        Command::Interpolate(args) => cmd_interpolate(args, &file_config, degree, &out_dir),
        Command::VelocityExperiment(args) => cmd_velocity(args, degree, &out_dir),
        Command::Bench(args) => cmd_bench(args, &out_dir),
        Command::Ate(args) => cmd_ate(args, &out_dir),
    }
}

#[derive(Serialize)]
struct FitReport {
    mode: String,
    degree: usize,
    seed: u64,
    n_frames: usize,
    n_observations: usize,
    n_control_points: usize,
    window_size: usize,
    iterations: usize,
    final_cost: f64,
    residual_rms: f64,
    valid_range: [f64; 2],
    interpolated_timestamps: usize,
    skipped_timestamps: usize,
}

fn cmd_fit(
    args: &FitArgs,
    file_config: &FileConfig,
    degree: usize,
    seed: u64,
    out_dir: &Path,
) -> Result<(), CliError> {
    let frames = io::read_observations(&args.observations)?;
    if frames.len() < 4 {
        return Err(CliError::validation(format!(
            "need at least 4 observation frames, found {}",
            frames.len()
        )));
    }
    let mode = match args.mode {
        Some(ModeArg::SplineBa) => BaMode::Spline,
        Some(ModeArg::LocalBa) => BaMode::Local,
        None => match file_config.mode.as_deref() {
            Some("spline-ba") | None => BaMode::Spline,
            Some("local-ba") => BaMode::Local,
            Some(other) => {
                return Err(CliError::validation(format!(
                    "unknown mode '{other}' in config (spline-ba | local-ba)"
                )))
            }
        },
    };
    let window_size = args.window_size.or(file_config.window_size).unwrap_or(0);
    let effective_window = if window_size == 0 {
        frames.len()
    } else {
        window_size
    };
    let mut config = SolverConfig::default();
    if let Some(delta) = args.huber_delta.or(file_config.huber_delta) {
        config.huber_delta = delta;
    }
    if let Some(iters) = args.max_iterations.or(file_config.max_iterations) {
        config.max_iterations = iters;
    }

    let mut frames_iter = frames.into_iter();
    let first = frames_iter.next().expect("non-empty");
    let mut n_observations = first.len();
    let mut window = Window::bootstrap(first, mode, effective_window, degree)?;
    let mut iterations = 0;
    for frame in frames_iter {
        n_observations += frame.len();
        window.advance(frame)?;
        if window.n_frames() >= window.minimum_frames() {
            match window.solve(&config) {
                Ok(r) => iterations += r.iterations,
                // an early Local BA window can have every variable pinned
                Err(ctraj::error::Error::NoFreeVariables) => {}
                Err(e) => return Err(e.into()),
            }
        }
    }
    // finishing pass: frees the tail control points the streaming gauge
    // kept pinned at their initialization
    iterations += window.refine_all(&config)?.iterations;

    // canonicalize through the file quaternion round-trip so the written
    // control points reload into bit-identical poses: the file carries the
    // exact quaternions the canonical poses were built from
    let kv = window.trajectory().knot_vector().clone();
    let mut cp_records = Vec::with_capacity(window.trajectory().len());
    let mut canonical = Vec::with_capacity(window.trajectory().len());
    for (knot, pose) in kv.knots().iter().zip(window.trajectory().control_points()) {
        let (q, canon) = io::canonical_record(pose);
        cp_records.push((*knot, *canon.translation(), q));
        canonical.push(canon);
    }
    let traj = SplineTrajectory::new(kv.knots().to_vec(), canonical, degree)?;

    let (lo, hi) = traj
        .valid_range()
        .ok_or_else(|| CliError::validation("trajectory too short to interpolate"))?;
    let frame_stamps = window.frame_timestamps();
    let requested =
        requested_timestamps(&args.at, args.rate.or(file_config.rate), (lo, hi), || {
            frame_stamps.clone()
        });
    let mut records = Vec::new();
    let mut skipped = 0usize;
    for &t in &requested {
        if t >= lo && t < hi {
            records.push((t, traj.interpolate_pose(t).map_err(CliError::from)?));
        } else {
            skipped += 1;
        }
    }

    io::write_trajectory(
        &out_dir.join("trajectory.txt"),
        &records,
        "interpolated object trajectory",
    )?;
    io::write_quat_trajectory(
        &out_dir.join("control_points.txt"),
        &cp_records,
        "spline control points (last knot is the lookahead)",
    )?;
    if mode == BaMode::Local {
        let mut text = String::from("point_id,x,y,z\n");
        for (id, p) in window.object_points() {
            let _ = writeln!(text, "{},{},{},{}", id, p[0], p[1], p[2]);
        }
        io::write_atomic(&out_dir.join("points.csv"), &text)?;
    }

    let report = FitReport {
        mode: match mode {
            BaMode::Spline => "spline-ba".into(),
            BaMode::Local => "local-ba".into(),
        },
        degree,
        seed,
        n_frames: window.n_frames(),
        n_observations,
        n_control_points: traj.len(),
        window_size: effective_window,
        iterations,
        final_cost: window.total_cost(&config)?,
        residual_rms: window.residual_rms()?,
        valid_range: [lo, hi],
        interpolated_timestamps: records.len(),
        skipped_timestamps: skipped,
    };
    let json = serde_json::to_string_pretty(&report)
        .map_err(|e| CliError::validation(format!("report serialization: {e}")))?;
    io::write_atomic(&out_dir.join("report.json"), &(json + "\n"))?;
    println!(
        "fit: {} frames, residual rms {:.3e}, wrote trajectory.txt control_points.txt report.json{}",
        report.n_frames,
        report.residual_rms,
        if mode == BaMode::Local { " points.csv" } else { "" }
    );
    Ok(())
}

fn requested_timestamps(
    at: &Option<Vec<f64>>,
    rate: Option<f64>,
    range: (f64, f64),
    default: impl FnOnce() -> Vec<f64>,
) -> Vec<f64> {
    if let Some(list) = at {
        return list.clone();
    }
    if let Some(hz) = rate {
        let (lo, hi) = range;
        let mut out = Vec::new();
        let mut i = 0u64;
        loop {
            let t = lo + i as f64 / hz;
            if t >= hi {
                break;
            }
            out.push(t);
            i += 1;
        }
        return out;
    }
    default()
}

fn cmd_interpolate(
    args: &InterpolateArgs,
    file_config: &FileConfig,
    degree: usize,
    out_dir: &Path,
) -> Result<(), CliError> {
    let records = io::read_trajectory(&args.control_points)?;
    let knots: Vec<f64> = records.iter().map(|(t, _)| *t).collect();
    let poses: Vec<ctraj::lie::Pose> = records.iter().map(|(_, p)| *p).collect();
    let traj = SplineTrajectory::new(knots, poses, degree).map_err(CliError::from)?;
    let (lo, hi) = traj.valid_range().ok_or_else(|| {
        CliError::validation(format!(
            "need at least degree+1 = {} control points, found {}",
            degree + 1,
            traj.len()
        ))
    })?;

    let requested =
        requested_timestamps(&args.at, args.rate.or(file_config.rate), (lo, hi), Vec::new);
    if requested.is_empty() {
        return Err(CliError::validation(
            "interpolate needs --at <timestamps> or --rate <hz>",
        ));
    }
    let mut text =
        String::from("timestamp,tx,ty,tz,qx,qy,qz,qw,vx,vy,vz,wx,wy,wz,ax,ay,az,awx,awy,awz\n");
    for &t in &requested {
        if !(t >= lo && t < hi) {
            return Err(CliError::validation(format!(
                "timestamp {t} outside the valid range [{lo}, {hi})"
            )));
        }
        let pose = traj.interpolate_pose(t).map_err(CliError::from)?;
        let vel = traj.body_velocity(t).map_err(CliError::from)?;
        let acc = traj.body_acceleration(t).map_err(CliError::from)?;
        let q = io::rotation_to_quat(pose.rotation());
        let tr = pose.translation();
        let _ = writeln!(
            text,
            "{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
            t,
            tr[0],
            tr[1],
            tr[2],
            q.x,
            q.y,
            q.z,
            q.w,
            vel.linear[0],
            vel.linear[1],
            vel.linear[2],
            vel.angular[0],
            vel.angular[1],
            vel.angular[2],
            acc.linear[0],
            acc.linear[1],
            acc.linear[2],
            acc.angular[0],
            acc.angular[1],
            acc.angular[2]
        );
    }
    let path = out_dir.join("interpolated.csv");
    io::write_atomic(&path, &text)?;
    println!(
        "interpolate: {} rows over [{lo}, {hi}) -> {}",
        requested.len(),
        path.display()
    );
    Ok(())
}

fn cmd_velocity(args: &VelocityArgs, degree: usize, out_dir: &Path) -> Result<(), CliError> {
    if args.theta_steps == 0 {
        return Err(CliError::validation("theta-steps must be positive"));
    }
    let thetas: Vec<f64> = if args.theta_steps == 1 {
        vec![args.theta_max]
    } else {
        (0..args.theta_steps)
            .map(|i| args.theta_max * i as f64 / (args.theta_steps - 1) as f64)
            .collect()
    };
    let cfg = VelocityExperimentConfig {
        theta_transl_values: thetas.clone(),
        theta_rot_values: thetas,
        radius: args.radius,
        frame_dt: args.frame_dt,
        n_frames: args.n_frames,
        samples_per_interval: args.samples,
        degree,
    };
    let cells = velocity_mse_experiment(&cfg).map_err(CliError::from)?;
    let mut text = String::from("theta_transl,theta_rot,method,mse_v,mse_w\n");
    for c in &cells {
        for (method, mse) in [
            ("ct", &c.ct),
            ("dt_coupled", &c.dt_coupled),
            ("dt_decoupled", &c.dt_decoupled),
        ] {
            let _ = writeln!(
                text,
                "{},{},{},{},{}",
                c.theta_transl, c.theta_rot, method, mse.linear, mse.angular
            );
        }
    }
    let path = out_dir.join("velocity_mse.csv");
    io::write_atomic(&path, &text)?;
    println!(
        "velocity-experiment: {} cells -> {}",
        cells.len(),
        path.display()
    );
    Ok(())
}

fn cmd_bench(args: &BenchArgs, out_dir: &Path) -> Result<(), CliError> {
    let mut reports = bench_pose_jacobian(args.repeats).map_err(CliError::from)?;
    reports.extend(bench_error_chain(&args.observations, args.repeats).map_err(CliError::from)?);
    let mut text = String::from("method,form,n_observations,mean_seconds,std_seconds\n");
    for r in &reports {
        let _ = writeln!(
            text,
            "{},{},{},{},{}",
            r.method, r.form, r.n_observations, r.mean_seconds, r.std_seconds
        );
    }
    let path = out_dir.join("bench.csv");
    io::write_atomic(&path, &text)?;
    for r in &reports {
        println!(
            "{:8} {:10} n={:3}  {:.3e} s (std {:.1e})",
            r.method, r.form, r.n_observations, r.mean_seconds, r.std_seconds
        );
    }
    println!("bench: wrote {}", path.display());
    Ok(())
}

fn cmd_ate(args: &AteArgs, out_dir: &Path) -> Result<(), CliError> {
    let est = io::read_trajectory(&args.estimate)?;
    let truth = io::read_trajectory(&args.truth)?;
    let value = ate(&est, &truth, args.align_prefix).map_err(CliError::from)?;
    let mut report = BTreeMap::new();
    report.insert("ate_rmse_m", serde_json::json!(value));
    report.insert("n_frames", serde_json::json!(est.len()));
    report.insert("align_prefix", serde_json::json!(args.align_prefix));
    let json = serde_json::to_string_pretty(&report)
        .map_err(|e| CliError::validation(format!("report serialization: {e}")))?;
    io::write_atomic(&out_dir.join("ate.json"), &(json + "\n"))?;
    println!("ate_rmse_m: {value}");
    Ok(())
}
