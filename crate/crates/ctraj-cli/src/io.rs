//! File formats: whitespace-separated trajectory files
//! (`timestamp tx ty tz qx qy qz qw`, `#` comments) and observation CSVs
//! with the header `timestamp,point_id,pcx,pcy,pcz,tx,ty,tz,qx,qy,qz,qw`.
//!
//! Quaternions exist only in files; all internal math uses rotation
//! matrices. Numbers are printed with Rust's shortest-roundtrip formatting,
//! so written files reload bit-identically. Output files are written to a
//! temp path and renamed into place.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use ctraj::lie::{Mat3, Pose, Vec3};
use ctraj::solver::Observation;

use crate::CliError;

/// Unit quaternion as stored in files: (w, x, y, z).
#[derive(Debug, Clone, Copy)]
pub struct Quat {
    pub w: f64,
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl Quat {
    pub fn norm(&self) -> f64 {
        (self.w * self.w + self.x * self.x + self.y * self.y + self.z * self.z).sqrt()
    }

    pub fn normalized(&self) -> Quat {
        let n = self.norm();
        Quat {
            w: self.w / n,
            x: self.x / n,
            y: self.y / n,
            z: self.z / n,
        }
    }
}

/// Rotation matrix from a quaternion (normalized first).
pub fn quat_to_rotation(q: &Quat) -> Mat3 {
    let q = q.normalized();
    let (w, x, y, z) = (q.w, q.x, q.y, q.z);
    Mat3::new(
        1.0 - 2.0 * (y * y + z * z),
        2.0 * (x * y - w * z),
        2.0 * (x * z + w * y),
        2.0 * (x * y + w * z),
        1.0 - 2.0 * (x * x + z * z),
        2.0 * (y * z - w * x),
        2.0 * (x * z - w * y),
        2.0 * (y * z + w * x),
        1.0 - 2.0 * (x * x + y * y),
    )
}

/// Quaternion from a rotation matrix (Shepperd's method), normalized and
/// sign-fixed to w >= 0.
pub fn rotation_to_quat(r: &Mat3) -> Quat {
    let trace = r.trace();
    let q = if trace > 0.0 {
        let s = (trace + 1.0).sqrt() * 2.0;
        Quat {
            w: 0.25 * s,
            x: (r[(2, 1)] - r[(1, 2)]) / s,
            y: (r[(0, 2)] - r[(2, 0)]) / s,
            z: (r[(1, 0)] - r[(0, 1)]) / s,
        }
    } else if r[(0, 0)] > r[(1, 1)] && r[(0, 0)] > r[(2, 2)] {
        let s = (1.0 + r[(0, 0)] - r[(1, 1)] - r[(2, 2)]).sqrt() * 2.0;
        Quat {
            w: (r[(2, 1)] - r[(1, 2)]) / s,
            x: 0.25 * s,
            y: (r[(0, 1)] + r[(1, 0)]) / s,
            z: (r[(0, 2)] + r[(2, 0)]) / s,
        }
    } else if r[(1, 1)] > r[(2, 2)] {
        let s = (1.0 + r[(1, 1)] - r[(0, 0)] - r[(2, 2)]).sqrt() * 2.0;
        Quat {
            w: (r[(0, 2)] - r[(2, 0)]) / s,
            x: (r[(0, 1)] + r[(1, 0)]) / s,
            y: 0.25 * s,
            z: (r[(1, 2)] + r[(2, 1)]) / s,
        }
    } else {
        let s = (1.0 + r[(2, 2)] - r[(0, 0)] - r[(1, 1)]).sqrt() * 2.0;
        Quat {
            w: (r[(1, 0)] - r[(0, 1)]) / s,
            x: (r[(0, 2)] + r[(2, 0)]) / s,
            y: (r[(1, 2)] + r[(2, 1)]) / s,
            z: 0.25 * s,
        }
    };
    let q = q.normalized();
    if q.w < 0.0 {
        Quat {
            w: -q.w,
            x: -q.x,
            y: -q.y,
            z: -q.z,
        }
    } else {
        q
    }
}

/// Quaternion to be written for a pose, together with the canonical pose a
/// reader reconstructs from it. Writing this exact quaternion makes the
/// file round-trip bit-exact.
pub fn canonical_record(pose: &Pose) -> (Quat, Pose) {
    let q = rotation_to_quat(pose.rotation());
    (
        q,
        Pose::from_parts(quat_to_rotation(&q), *pose.translation()),
    )
}

/// Trajectory file from explicit quaternion records.
pub fn write_quat_trajectory(
    path: &Path,
    records: &[(f64, Vec3, Quat)],
    header: &str,
) -> Result<(), CliError> {
    let mut text = String::new();
    let _ = writeln!(text, "# {header}");
    let _ = writeln!(text, "# timestamp tx ty tz qx qy qz qw");
    for (t, tr, q) in records {
        let _ = writeln!(
            text,
            "{} {} {} {} {} {} {} {}",
            t, tr[0], tr[1], tr[2], q.x, q.y, q.z, q.w
        );
    }
    write_atomic(path, &text)
}

fn parse_f64(field: &str, line: usize, what: &str) -> Result<f64, CliError> {
    field.parse::<f64>().map_err(|_| {
        CliError::validation(format!("line {line}: cannot parse {what} from '{field}'"))
    })
}

/// Read a trajectory file: `timestamp tx ty tz qx qy qz qw` per line.
pub fn read_trajectory(path: &Path) -> Result<Vec<(f64, Pose)>, CliError> {
    let text = fs::read_to_string(path)
        .map_err(|e| CliError::validation(format!("cannot read {}: {e}", path.display())))?;
    let mut out = Vec::new();
    let mut last_t = f64::NEG_INFINITY;
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let fields: Vec<&str> = content.split_whitespace().collect();
        if fields.len() != 8 {
            return Err(CliError::validation(format!(
                "line {line}: expected 8 fields (timestamp tx ty tz qx qy qz qw), got {}",
                fields.len()
            )));
        }
        let t = parse_f64(fields[0], line, "timestamp")?;
        let tx = parse_f64(fields[1], line, "tx")?;
        let ty = parse_f64(fields[2], line, "ty")?;
        let tz = parse_f64(fields[3], line, "tz")?;
        let q = Quat {
            x: parse_f64(fields[4], line, "qx")?,
            y: parse_f64(fields[5], line, "qy")?,
            z: parse_f64(fields[6], line, "qz")?,
            w: parse_f64(fields[7], line, "qw")?,
        };
        if (q.norm() - 1.0).abs() > 1e-6 {
            return Err(CliError::validation(format!(
                "line {line}: quaternion norm {} deviates from 1",
                q.norm()
            )));
        }
        if !(t > last_t) {
            return Err(CliError::validation(format!(
                "line {line}: timestamps must be strictly increasing"
            )));
        }
        last_t = t;
        out.push((
            t,
            Pose::from_parts(quat_to_rotation(&q), Vec3::new(tx, ty, tz)),
        ));
    }
    if out.is_empty() {
        return Err(CliError::validation(format!(
            "{}: no trajectory records",
            path.display()
        )));
    }
    Ok(out)
}

/// One trajectory line in the interchange format.
pub fn format_trajectory_record(t: f64, pose: &Pose) -> String {
    let q = rotation_to_quat(pose.rotation());
    let tr = pose.translation();
    format!(
        "{} {} {} {} {} {} {} {}",
        t, tr[0], tr[1], tr[2], q.x, q.y, q.z, q.w
    )
}

pub fn write_trajectory(
    path: &Path,
    records: &[(f64, Pose)],
    header: &str,
) -> Result<(), CliError> {
    let mut text = String::new();
    let _ = writeln!(text, "# {header}");
    let _ = writeln!(text, "# timestamp tx ty tz qx qy qz qw");
    for (t, pose) in records {
        let _ = writeln!(text, "{}", format_trajectory_record(*t, pose));
    }
    write_atomic(path, &text)
}

pub const OBSERVATION_HEADER: &str = "timestamp,point_id,pcx,pcy,pcz,tx,ty,tz,qx,qy,qz,qw";

/// Read an observation CSV into frames grouped by timestamp (records of one
/// frame must be contiguous and share the camera pose).
pub fn read_observations(path: &Path) -> Result<Vec<Vec<Observation>>, CliError> {
    let text = fs::read_to_string(path)
        .map_err(|e| CliError::validation(format!("cannot read {}: {e}", path.display())))?;
    let mut lines = text.lines().enumerate();
    let header = loop {
        match lines.next() {
            Some((_, raw)) if raw.trim().is_empty() || raw.trim_start().starts_with('#') => {}
            Some((_, raw)) => break raw.trim().to_string(),
            None => {
                return Err(CliError::validation(format!(
                    "{}: empty observation file",
                    path.display()
                )))
            }
        }
    };
    if header != OBSERVATION_HEADER {
        return Err(CliError::validation(format!(
            "unexpected observation header '{header}', expected '{OBSERVATION_HEADER}'"
        )));
    }

    let mut frames: Vec<Vec<Observation>> = Vec::new();
    for (idx, raw) in lines {
        let line = idx + 1;
        let content = raw.trim();
        if content.is_empty() || content.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = content.split(',').map(str::trim).collect();
        if fields.len() != 12 {
            return Err(CliError::validation(format!(
                "line {line}: expected 12 comma-separated fields, got {}",
                fields.len()
            )));
        }
        let t = parse_f64(fields[0], line, "timestamp")?;
        let point_id: u64 = fields[1].parse().map_err(|_| {
            CliError::validation(format!(
                "line {line}: cannot parse point_id '{}'",
                fields[1]
            ))
        })?;
        let p_c = Vec3::new(
            parse_f64(fields[2], line, "pcx")?,
            parse_f64(fields[3], line, "pcy")?,
            parse_f64(fields[4], line, "pcz")?,
        );
        let tr = Vec3::new(
            parse_f64(fields[5], line, "tx")?,
            parse_f64(fields[6], line, "ty")?,
            parse_f64(fields[7], line, "tz")?,
        );
        let q = Quat {
            x: parse_f64(fields[8], line, "qx")?,
            y: parse_f64(fields[9], line, "qy")?,
            z: parse_f64(fields[10], line, "qz")?,
            w: parse_f64(fields[11], line, "qw")?,
        };
        if (q.norm() - 1.0).abs() > 1e-6 {
            return Err(CliError::validation(format!(
                "line {line}: camera quaternion norm {} deviates from 1",
                q.norm()
            )));
        }
        let camera = Pose::from_parts(quat_to_rotation(&q), tr);
        let obs = Observation::new(point_id, t, p_c, camera);

        match frames.last_mut() {
            Some(frame) if frame[0].timestamp == t => {
                if frame[0].camera_pose.max_abs_diff(&camera) > 1e-12 {
                    return Err(CliError::validation(format!(
                        "line {line}: camera pose differs from earlier records at t = {t}"
                    )));
                }
                frame.push(obs);
            }
            Some(frame) if t < frame[0].timestamp => {
                return Err(CliError::validation(format!(
                    "line {line}: timestamps must be non-decreasing across frames"
                )));
            }
            _ => frames.push(vec![obs]),
        }
    }
    if frames.is_empty() {
        return Err(CliError::validation(format!(
            "{}: no observation records",
            path.display()
        )));
    }
    Ok(frames)
}

pub fn write_observations(path: &Path, frames: &[Vec<Observation>]) -> Result<(), CliError> {
    let mut text = String::new();
    let _ = writeln!(text, "{OBSERVATION_HEADER}");
    for frame in frames {
        for o in frame {
            let q = rotation_to_quat(o.camera_pose.rotation());
            let tr = o.camera_pose.translation();
            let _ = writeln!(
                text,
                "{},{},{},{},{},{},{},{},{},{},{},{}",
                o.timestamp,
                o.point_id,
                o.p_c[0],
                o.p_c[1],
                o.p_c[2],
                tr[0],
                tr[1],
                tr[2],
                q.x,
                q.y,
                q.z,
                q.w
            );
        }
    }
    write_atomic(path, &text)
}

/// Write via a temp file and rename, so readers never see partial output.
pub fn write_atomic(path: &Path, content: &str) -> Result<(), CliError> {
    let tmp = path.with_extension("tmp");
    fs::write(&tmp, content)
        .map_err(|e| CliError::validation(format!("cannot write {}: {e}", tmp.display())))?;
    fs::rename(&tmp, path)
        .map_err(|e| CliError::validation(format!("cannot rename into {}: {e}", path.display())))
}
