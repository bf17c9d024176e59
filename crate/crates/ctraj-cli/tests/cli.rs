//! End-to-end tests of the `ctraj` binary: file contracts, exit codes,
//! round-trips and determinism.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use ctraj::lie::{exp_se3, Pose, Twist, Vec3};
use ctraj::synthetic::{CircularMotionSpec, SimulatedScene};
use ctraj_cli::io;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_ctraj"))
}

fn run(dir: &Path, args: &[&str]) -> Output {
    bin()
        .args(args)
        .arg("--output")
        .arg(dir)
        .output()
        .expect("binary runs")
}

fn tempdir(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("ctraj-cli-{name}-{}", std::process::id()));
    let _ = fs::remove_dir_all(&dir);
    fs::create_dir_all(&dir).unwrap();
    dir
}

fn write_scene(dir: &Path, sigma: f64) -> PathBuf {
    let spec = CircularMotionSpec {
        theta_transl: 0.08,
        theta_rot: 0.1,
        radius: 1.0,
        frame_dt: 0.1,
        n_frames: 18,
    };
    let scene = SimulatedScene::circular(&spec, 20, sigma, 7).unwrap();
    let path = dir.join("observations.csv");
    io::write_observations(&path, &scene.observations).unwrap();
    path
}

fn stderr_of(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

#[test]
fn fit_noiseless_reaches_tiny_residuals() {
    let dir = tempdir("fit");
    let obs = write_scene(&dir, 0.0);
    let out = run(&dir, &["fit", obs.to_str().unwrap()]);
    assert!(out.status.success(), "{}", stderr_of(&out));

    let report: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.join("report.json")).unwrap()).unwrap();
    let rms = report["residual_rms"].as_f64().unwrap();
    assert!(rms < 1e-6, "noiseless fit rms {rms}");
    assert_eq!(report["mode"], "spline-ba");
    assert!(dir.join("trajectory.txt").exists());
    assert!(dir.join("control_points.txt").exists());
    assert!(
        !dir.join("points.csv").exists(),
        "spline-ba must not write object points"
    );
}

#[test]
fn fit_local_ba_writes_points() {
    let dir = tempdir("fit-local");
    let obs = write_scene(&dir, 0.0);
    let out = run(&dir, &["fit", obs.to_str().unwrap(), "--mode", "local-ba"]);
    assert!(out.status.success(), "{}", stderr_of(&out));
    let points = fs::read_to_string(dir.join("points.csv")).unwrap();
    assert!(points.starts_with("point_id,x,y,z"));
    assert!(points.lines().count() > 10);
}

#[test]
fn fit_interpolate_roundtrip_is_bit_exact() {
    let dir = tempdir("roundtrip");
    let obs = write_scene(&dir, 0.005);
    let out = run(&dir, &["fit", obs.to_str().unwrap()]);
    assert!(out.status.success(), "{}", stderr_of(&out));

    // re-load the control points and interpolate at the same timestamps
    let traj_text = fs::read_to_string(dir.join("trajectory.txt")).unwrap();
    let fit_rows: Vec<&str> = traj_text
        .lines()
        .filter(|l| !l.trim_start().starts_with('#') && !l.trim().is_empty())
        .collect();
    let stamps: Vec<&str> = fit_rows
        .iter()
        .map(|l| l.split_whitespace().next().unwrap())
        .collect();
    let cp_file = dir.join("control_points.txt");
    let out = run(
        &dir,
        &[
            "interpolate",
            cp_file.to_str().unwrap(),
            "--at",
            &stamps.join(","),
        ],
    );
    assert!(out.status.success(), "{}", stderr_of(&out));
    let interp = fs::read_to_string(dir.join("interpolated.csv")).unwrap();
    let interp_rows: Vec<&str> = interp.lines().skip(1).collect();
    assert_eq!(fit_rows.len(), interp_rows.len());
    for (f, i) in fit_rows.iter().zip(&interp_rows) {
        let fit_fields: Vec<&str> = f.split_whitespace().collect();
        let interp_fields: Vec<&str> = i.split(',').collect();
        // timestamp + pose columns must match textually (shortest-roundtrip
        // printing makes this bit-exact)
        for c in 0..8 {
            assert_eq!(
                fit_fields[c], interp_fields[c],
                "column {c} differs between fit and interpolate"
            );
        }
    }
}

#[test]
fn fit_rejects_malformed_quaternion_with_line_number() {
    let dir = tempdir("badquat");
    let obs = write_scene(&dir, 0.0);
    let mut text = fs::read_to_string(&obs).unwrap();
    // corrupt the camera quaternion on data line 3 (file line 4)
    let lines: Vec<String> = text
        .lines()
        .enumerate()
        .map(|(i, l)| {
            if i == 3 {
                let mut fields: Vec<&str> = l.split(',').collect();
                fields[11] = "0.5"; // breaks unit norm
                fields.join(",")
            } else {
                l.to_string()
            }
        })
        .collect();
    text = lines.join("\n");
    fs::write(&obs, text).unwrap();
    let out = run(&dir, &["fit", obs.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    let msg = stderr_of(&out);
    assert!(msg.contains("line 4"), "error should name the line: {msg}");
}

#[test]
fn interpolate_rejects_final_knot() {
    let dir = tempdir("halfpen");
    let d = Twist::new(Vec3::new(0.3, 0.0, 0.1), Vec3::new(0.0, 0.2, 0.0));
    let records: Vec<(f64, Pose)> = (0..8)
        .map(|i| (i as f64 * 0.5, exp_se3(&d.scale(i as f64 * 0.5))))
        .collect();
    let cp = dir.join("cps.txt");
    io::write_trajectory(&cp, &records, "test control points").unwrap();

    let out = run(&dir, &["interpolate", cp.to_str().unwrap(), "--at", "3.5"]);
    assert_eq!(out.status.code(), Some(1), "{}", stderr_of(&out));
    assert!(stderr_of(&out).contains("3.5"));

    // interior instants work
    let out = run(&dir, &["interpolate", cp.to_str().unwrap(), "--at", "2.0"]);
    assert!(out.status.success(), "{}", stderr_of(&out));
}

#[test]
fn interpolate_constant_twist_rows() {
    let dir = tempdir("ct-rows");
    let d = Twist::new(Vec3::new(0.4, -0.1, 0.2), Vec3::new(0.1, 0.15, -0.1));
    let records: Vec<(f64, Pose)> = (0..10)
        .map(|i| (i as f64 * 0.5, exp_se3(&d.scale(i as f64 * 0.5))))
        .collect();
    let cp = dir.join("cps.txt");
    io::write_trajectory(&cp, &records, "constant twist").unwrap();
    let out = run(
        &dir,
        &["interpolate", cp.to_str().unwrap(), "--at", "2.0,2.7,3.4"],
    );
    assert!(out.status.success(), "{}", stderr_of(&out));
    let text = fs::read_to_string(dir.join("interpolated.csv")).unwrap();
    for row in text.lines().skip(1) {
        let f: Vec<f64> = row.split(',').map(|x| x.parse().unwrap()).collect();
        // velocity columns equal the generating twist, acceleration ~ 0
        for (i, expect) in [
            (8, 0.4),
            (9, -0.1),
            (10, 0.2),
            (11, 0.1),
            (12, 0.15),
            (13, -0.1),
        ] {
            assert!((f[i] - expect).abs() < 1e-9, "twist column {i}");
        }
        for (i, v) in f.iter().enumerate().take(20).skip(14) {
            assert!(v.abs() < 1e-7, "acceleration column {i}");
        }
    }
}

#[test]
fn interpolate_rate_row_count() {
    let dir = tempdir("rate");
    let records: Vec<(f64, Pose)> = (0..8)
        .map(|i| {
            (
                i as f64 * 0.2,
                exp_se3(&Twist::new(
                    Vec3::new(0.1 * i as f64, 0.0, 0.0),
                    Vec3::zeros(),
                )),
            )
        })
        .collect();
    let cp = dir.join("cps.txt");
    io::write_trajectory(&cp, &records, "ramp").unwrap();
    // valid range [0.6, 1.4) spans 0.8 s -> 80 rows at 100 Hz
    let out = run(
        &dir,
        &["interpolate", cp.to_str().unwrap(), "--rate", "100"],
    );
    assert!(out.status.success(), "{}", stderr_of(&out));
    let rows = fs::read_to_string(dir.join("interpolated.csv"))
        .unwrap()
        .lines()
        .count()
        - 1;
    assert_eq!(rows, 80);
}

#[test]
fn interpolate_near_pi_increment_exits_numerical() {
    let dir = tempdir("branch");
    // adjacent control points nearly half a turn apart: Log branch failure
    let mut text = String::from("# handcrafted\n");
    for i in 0..6 {
        let angle: f64 = if i % 2 == 0 {
            0.0
        } else {
            std::f64::consts::PI - 1e-9
        };
        let (s, c) = ((angle / 2.0).sin(), (angle / 2.0).cos());
        text += &format!("{} 0 0 0 {} 0 0 {}\n", i as f64, s, c);
    }
    let cp = dir.join("cps.txt");
    fs::write(&cp, text).unwrap();
    let out = run(&dir, &["interpolate", cp.to_str().unwrap(), "--at", "4.0"]);
    assert_eq!(out.status.code(), Some(2), "{}", stderr_of(&out));
}

#[test]
fn ate_identical_files_reports_zero() {
    let dir = tempdir("ate");
    let records: Vec<(f64, Pose)> = (0..12)
        .map(|i| {
            let t = i as f64 * 0.1;
            (
                t,
                exp_se3(&Twist::new(
                    Vec3::new(t, 0.2 * t, 0.0),
                    Vec3::new(0.0, 0.0, 0.3 * t),
                )),
            )
        })
        .collect();
    let a = dir.join("a.txt");
    io::write_trajectory(&a, &records, "traj").unwrap();
    let out = run(&dir, &["ate", a.to_str().unwrap(), a.to_str().unwrap()]);
    assert!(out.status.success(), "{}", stderr_of(&out));
    let report: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.join("ate.json")).unwrap()).unwrap();
    assert!(report["ate_rmse_m"].as_f64().unwrap() < 1e-12);

    // mismatched lengths fail validation
    let b = dir.join("b.txt");
    io::write_trajectory(&b, &records[..6], "short").unwrap();
    let out = run(&dir, &["ate", a.to_str().unwrap(), b.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn velocity_experiment_csv_shape() {
    let dir = tempdir("velexp");
    let out = run(
        &dir,
        &[
            "velocity-experiment",
            "--theta-steps",
            "3",
            "--theta-max",
            "0.2",
            "--n-frames",
            "14",
            "--samples",
            "4",
        ],
    );
    assert!(out.status.success(), "{}", stderr_of(&out));
    let text = fs::read_to_string(dir.join("velocity_mse.csv")).unwrap();
    let mut lines = text.lines();
    assert_eq!(
        lines.next().unwrap(),
        "theta_transl,theta_rot,method,mse_v,mse_w"
    );
    // one row per (theta_transl, theta_rot, method)
    assert_eq!(lines.count(), 3 * 3 * 3);
}

#[test]
fn bench_csv_shape() {
    let dir = tempdir("bench");
    let out = run(&dir, &["bench", "--repeats", "30", "--observations", "1"]);
    assert!(out.status.success(), "{}", stderr_of(&out));
    let text = fs::read_to_string(dir.join("bench.csv")).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(
        lines[0],
        "method,form,n_observations,mean_seconds,std_seconds"
    );
    for (method, form) in [
        ("analytic", "vectorized"),
        ("analytic", "lie"),
        ("numeric", "vectorized"),
        ("numeric", "lie"),
    ] {
        assert!(
            lines
                .iter()
                .any(|l| l.starts_with(&format!("{method},{form},0,"))),
            "missing pose row {method},{form}"
        );
    }
    assert!(lines.iter().any(|l| l.starts_with("numeric,direct,1,")));
}

#[test]
fn fit_is_deterministic() {
    let dir_a = tempdir("det-a");
    let dir_b = tempdir("det-b");
    let obs = write_scene(&dir_a, 0.01);
    fs::copy(&obs, dir_b.join("observations.csv")).unwrap();
    let out = run(&dir_a, &["fit", obs.to_str().unwrap(), "--seed", "5"]);
    assert!(out.status.success(), "{}", stderr_of(&out));
    let out = run(
        &dir_b,
        &[
            "fit",
            dir_b.join("observations.csv").to_str().unwrap(),
            "--seed",
            "5",
        ],
    );
    assert!(out.status.success(), "{}", stderr_of(&out));
    for name in ["trajectory.txt", "control_points.txt"] {
        let a = fs::read_to_string(dir_a.join(name)).unwrap();
        let b = fs::read_to_string(dir_b.join(name)).unwrap();
        assert_eq!(a, b, "{name} differs between identical runs");
    }
}

#[test]
fn config_file_overrides_and_flag_precedence() {
    let dir = tempdir("config");
    let records: Vec<(f64, Pose)> = (0..8)
        .map(|i| {
            (
                i as f64 * 0.2,
                exp_se3(&Twist::new(
                    Vec3::new(0.05 * i as f64, 0.0, 0.0),
                    Vec3::zeros(),
                )),
            )
        })
        .collect();
    let cp = dir.join("cps.txt");
    io::write_trajectory(&cp, &records, "ramp").unwrap();
    let cfg = dir.join("config.json");
    fs::write(&cfg, r#"{ "rate": 10.0 }"#).unwrap();

    // config supplies the rate: [0.6, 1.4) at 10 Hz -> 8 rows
    let out = run(
        &dir,
        &[
            "interpolate",
            cp.to_str().unwrap(),
            "--config",
            cfg.to_str().unwrap(),
        ],
    );
    assert!(out.status.success(), "{}", stderr_of(&out));
    let rows = fs::read_to_string(dir.join("interpolated.csv"))
        .unwrap()
        .lines()
        .count()
        - 1;
    assert_eq!(rows, 8);

    // explicit flag wins over the config value
    let out = run(
        &dir,
        &[
            "interpolate",
            cp.to_str().unwrap(),
            "--config",
            cfg.to_str().unwrap(),
            "--rate",
            "20",
        ],
    );
    assert!(out.status.success(), "{}", stderr_of(&out));
    let rows = fs::read_to_string(dir.join("interpolated.csv"))
        .unwrap()
        .lines()
        .count()
        - 1;
    assert_eq!(rows, 16);
}

#[test]
fn output_dir_env_var_is_honored() {
    let dir = tempdir("envvar");
    let sub = dir.join("from-env");
    let records: Vec<(f64, Pose)> = (0..8)
        .map(|i| {
            (
                i as f64,
                exp_se3(&Twist::new(
                    Vec3::new(0.1 * i as f64, 0.0, 0.0),
                    Vec3::zeros(),
                )),
            )
        })
        .collect();
    let cp = dir.join("cps.txt");
    io::write_trajectory(&cp, &records, "ramp").unwrap();
    let out = bin()
        .args(["interpolate", cp.to_str().unwrap(), "--at", "3.5"])
        .env("CTRAJ_OUTPUT_DIR", &sub)
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", stderr_of(&out));
    assert!(sub.join("interpolated.csv").exists());
}

#[test]
fn fit_honors_non_cubic_degree() {
    let dir = tempdir("degree5");
    let spec = CircularMotionSpec {
        theta_transl: 0.06,
        theta_rot: 0.08,
        radius: 1.0,
        frame_dt: 0.1,
        n_frames: 20,
    };
    let scene = SimulatedScene::circular(&spec, 20, 0.0, 11).unwrap();
    let obs = dir.join("observations.csv");
    io::write_observations(&obs, &scene.observations).unwrap();
    for degree in ["3", "5"] {
        let out = run(&dir, &["--degree", degree, "fit", obs.to_str().unwrap()]);
        assert!(out.status.success(), "degree {degree}: {}", stderr_of(&out));
        let report: serde_json::Value =
            serde_json::from_str(&fs::read_to_string(dir.join("report.json")).unwrap()).unwrap();
        assert_eq!(report["degree"], degree.parse::<u64>().unwrap());
        let rms = report["residual_rms"].as_f64().unwrap();
        assert!(rms < 1e-6, "degree {degree} rms {rms}");
    }
}
