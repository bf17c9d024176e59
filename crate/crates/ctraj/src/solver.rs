//! Robustified Gauss-Newton sliding-window estimator.
//!
//! A [`Window`] owns the trajectory of one tracked object: a control point
//! per observed frame plus one lookahead knot so the newest frame timestamp
//! stays inside the half-open interpolation domain. Each iteration builds
//! normal equations `H dx = -g` from Huber-weighted point observations,
//! updates free control points on the left (`T <- Exp(xi) T`) and, in Local
//! BA, object points additively. Steps that would increase the cost are
//! re-solved with Levenberg damping (lambda x10 on rejection, /10 on
//! acceptance).
//!
//! Gauge policy: within the active window the first control point is fixed
//! (first and second in Local BA) along with the last two; control points
//! that have slid out of the window stay frozen as interpolation anchors.

use std::collections::BTreeMap;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::jacobians::{ErrorChain, JacobianForm};
use crate::lie::{exp_se3, Mat3, Mat3x6, Pose, Twist, Vec3, Vec6};
use crate::spline::SplineTrajectory;

/// One timestamped 3D point observation from a known camera.
#[derive(Debug, Clone)]
pub struct Observation {
    pub point_id: u64,
    pub timestamp: f64,
    /// Observed point in the camera frame (meters).
    pub p_c: Vec3,
    /// Camera pose `T_wc` at the observation time.
    pub camera_pose: Pose,
    /// Observation covariance; identity when nothing better is known.
    pub covariance: Mat3,
}

impl Observation {
    pub fn new(point_id: u64, timestamp: f64, p_c: Vec3, camera_pose: Pose) -> Self {
        Observation {
            point_id,
            timestamp,
            p_c,
            camera_pose,
            covariance: Mat3::identity(),
        }
    }
}

/// Which variables the window optimizes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BaMode {
    /// Control points only.
    Spline,
    /// Control points and object points.
    Local,
}

#[derive(Debug, Clone)]
pub struct SolverConfig {
    pub huber_delta: f64,
    pub max_iterations: usize,
    /// Stop when the accepted step's infinity norm drops below this.
    pub step_tolerance: f64,
    /// Stop on relative cost decrease below this.
    pub cost_tolerance: f64,
    /// Initial Levenberg damping used after the first rejected step.
    pub damping_init: f64,
    pub form: JacobianForm,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            huber_delta: 0.05,
            max_iterations: 20,
            step_tolerance: 1e-8,
            cost_tolerance: 1e-10,
            damping_init: 1e-4,
            form: JacobianForm::Vectorized,
        }
    }
}

/// Outcome of one accepted Gauss-Newton step.
#[derive(Debug, Clone)]
pub struct StepReport {
    pub cost_before: f64,
    pub cost_after: f64,
    /// Infinity norm of the accepted update.
    pub step_norm: f64,
    /// Damping that produced the accepted step (0 = pure Gauss-Newton).
    pub lambda: f64,
}

#[derive(Debug, Clone)]
pub struct SolveReport {
    pub iterations: usize,
    pub initial_cost: f64,
    pub final_cost: f64,
    pub converged: bool,
}

#[derive(Debug, Clone)]
struct Frame {
    timestamp: f64,
    observations: Vec<Observation>,
}

/// Sliding-window estimation state for one object.
#[derive(Debug, Clone)]
pub struct Window {
    mode: BaMode,
    window_size: usize,
    degree: usize,
    frames: Vec<Frame>,
    /// Real knots/control points plus one lookahead knot at the end.
    traj: SplineTrajectory,
    /// Fixed flag per real control point.
    fixed: Vec<bool>,
    active_start: usize,
    object_points: BTreeMap<u64, Vec3>,
}

const MAX_LAMBDA: f64 = 1e10;

impl Window {
    /// Initialize from the first observation frame: the first control point
    /// sits at the centroid of the observed cloud, oriented along its
    /// principal axes, and the object points are the observations expressed
    /// in that frame.
    pub fn bootstrap(
        frame: Vec<Observation>,
        mode: BaMode,
        window_size: usize,
        degree: usize,
    ) -> Result<Window> {
        let timestamp = validate_frame(&frame)?;
        let world: Vec<Vec3> = frame.iter().map(|o| o.camera_pose.act(&o.p_c)).collect();
        let first = principal_frame(&world)?;
        let inv = first.inverse();
        let mut object_points = BTreeMap::new();
        for (obs, w) in frame.iter().zip(&world) {
            object_points.insert(obs.point_id, inv.act(w));
        }
        let mut window = Window {
            mode,
            window_size: window_size.max(4),
            degree,
            frames: vec![Frame {
                timestamp,
                observations: frame,
            }],
            traj: SplineTrajectory::new(Vec::new(), Vec::new(), degree)?,
            fixed: vec![true],
            active_start: 0,
            object_points,
        };
        window.rebuild_trajectory(&[first])?;
        Ok(window)
    }

    /// Build a window from explicit state: ground-truth style tests and the
    /// demo construct windows directly instead of streaming frames.
    pub fn from_parts(
        knots: Vec<f64>,
        control_points: Vec<Pose>,
        frames: Vec<Vec<Observation>>,
        object_points: BTreeMap<u64, Vec3>,
        mode: BaMode,
        window_size: usize,
        degree: usize,
    ) -> Result<Window> {
        if knots.len() != frames.len() || knots.len() != control_points.len() {
            return Err(Error::LengthMismatch {
                left: knots.len(),
                right: frames.len(),
            });
        }
        let mut wf = Vec::with_capacity(frames.len());
        for (i, obs) in frames.into_iter().enumerate() {
            if !obs.is_empty() {
                let t = validate_frame(&obs)?;
                if (t - knots[i]).abs() > 1e-12 {
                    return Err(Error::InconsistentFrame {
                        reason: format!("frame {i} timestamp {t} does not match knot {}", knots[i]),
                    });
                }
            }
            wf.push(Frame {
                timestamp: knots[i],
                observations: obs,
            });
        }
        let mut window = Window {
            mode,
            window_size: window_size.max(4),
            degree,
            frames: wf,
            traj: SplineTrajectory::new(Vec::new(), Vec::new(), degree)?,
            fixed: Vec::new(),
            active_start: 0,
            object_points,
        };
        window.active_start = window.frames.len().saturating_sub(window.window_size);
        window.rebuild_trajectory(&control_points)?;
        window.refresh_fixed_flags();
        Ok(window)
    }

    /// Append one frame: a new knot and control point at its timestamp, the
    /// centroid re-initialization of the control point two back, window
    /// eviction and gauge-flag bookkeeping.
    pub fn advance(&mut self, frame: Vec<Observation>) -> Result<()> {
        let timestamp = validate_frame(&frame)?;
        let last = self.frames.last().expect("bootstrap ran").timestamp;
        if !(timestamp > last) {
            return Err(Error::NonMonotonicTimestamp { t: timestamp, last });
        }

        let mut cps = self.real_control_points();
        let i = cps.len();
        cps.push(cps[i - 1]);

        // the newest interpolable instant is dominated by T_{i-2}: place it
        // at the centroid of the freshly observed cloud, keeping the
        // previous orientation. The two gauge-fixed tail points follow it so
        // the tail increments stay well inside the Log branch.
        if i >= 3 {
            let world: Vec<Vec3> = frame.iter().map(|o| o.camera_pose.act(&o.p_c)).collect();
            let centroid = world.iter().sum::<Vec3>() / world.len() as f64;
            let reinit = Pose::from_parts(*cps[i - 3].rotation(), centroid);
            cps[i - 2] = reinit;
            cps[i - 1] = reinit;
            cps[i] = reinit;
        }

        self.frames.push(Frame {
            timestamp,
            observations: frame,
        });
        self.rebuild_trajectory(&cps)?;

        // back-project object points that appeared for the first time
        let frame_ref = self.frames.last().expect("just pushed");
        let mut new_points = Vec::new();
        for obs in &frame_ref.observations {
            if !self.object_points.contains_key(&obs.point_id) {
                let w = obs.camera_pose.act(&obs.p_c);
                let anchor = match self.traj.interpolate_pose(obs.timestamp) {
                    Ok(pose) => pose,
                    Err(_) => *self.traj.control_point(0),
                };
                new_points.push((obs.point_id, anchor.inverse().act(&w)));
            }
        }
        for (id, p) in new_points {
            self.object_points.insert(id, p);
        }

        if self.frames.len() - self.active_start > self.window_size {
            self.active_start = self.frames.len() - self.window_size;
            for f in &mut self.frames[..self.active_start] {
                f.observations.clear();
            }
        }
        self.refresh_fixed_flags();
        Ok(())
    }

    fn real_control_points(&self) -> Vec<Pose> {
        let n = self.frames.len().min(self.traj.len());
        self.traj.control_points()[..n].to_vec()
    }

    /// Trajectory = real control points + one lookahead knot continuing the
    /// terminal spacing, so the newest frame timestamp is interpolable.
    fn rebuild_trajectory(&mut self, real_cps: &[Pose]) -> Result<()> {
        let mut knots: Vec<f64> = self.frames.iter().map(|f| f.timestamp).collect();
        let mut cps = real_cps.to_vec();
        let lookahead = if knots.len() >= 2 {
            knots[knots.len() - 1] + (knots[knots.len() - 1] - knots[knots.len() - 2])
        } else {
            knots[knots.len() - 1] + 1.0
        };
        knots.push(lookahead);
        cps.push(*cps.last().expect("at least one control point"));
        self.traj = SplineTrajectory::new(knots, cps, self.degree)?;
        Ok(())
    }

    fn refresh_fixed_flags(&mut self) {
        let n = self.frames.len();
        self.fixed = vec![true; n];
        let s = self.active_start;
        if n >= s + 4 {
            for i in s..n {
                self.fixed[i] = false;
            }
            self.fixed[s] = true;
            if self.mode == BaMode::Local && s + 1 < n {
                self.fixed[s + 1] = true;
            }
            self.fixed[n - 1] = true;
            self.fixed[n - 2] = true;
        }
    }

    pub fn mode(&self) -> BaMode {
        self.mode
    }

    /// Frames needed before optimization can run: the gauge policy needs
    /// four control points and the newest frame timestamp only becomes
    /// interpolable once `degree` knots precede it.
    pub fn minimum_frames(&self) -> usize {
        self.degree.max(4)
    }

    pub fn n_frames(&self) -> usize {
        self.frames.len()
    }

    /// Number of knots inside the sliding window.
    pub fn active_len(&self) -> usize {
        self.frames.len() - self.active_start
    }

    pub fn frame_timestamps(&self) -> Vec<f64> {
        self.frames.iter().map(|f| f.timestamp).collect()
    }

    pub fn trajectory(&self) -> &SplineTrajectory {
        &self.traj
    }

    pub fn object_points(&self) -> &BTreeMap<u64, Vec3> {
        &self.object_points
    }

    /// Fixed flag per real control point (the lookahead knot is implicit
    /// and never optimized).
    pub fn fixed_flags(&self) -> &[bool] {
        &self.fixed
    }

    /// Root-mean-square residual component over all usable observations.
    pub fn residual_rms(&self) -> Result<f64> {
        let mut sum = 0.0;
        let mut count = 0usize;
        for frame in &self.frames[self.active_start..] {
            if frame.observations.is_empty() || !self.in_domain(frame.timestamp) {
                continue;
            }
            let pose = self.traj.interpolate_pose(frame.timestamp)?;
            let t_co = frame.observations[0].camera_pose.inverse().compose(&pose);
            for obs in &frame.observations {
                let p_o =
                    self.object_points
                        .get(&obs.point_id)
                        .ok_or(Error::UnknownObjectPoint {
                            point_id: obs.point_id,
                        })?;
                let e = obs.p_c - t_co.act(p_o);
                sum += e.norm_squared();
                count += 3;
            }
        }
        if count == 0 {
            return Ok(0.0);
        }
        Ok((sum / count as f64).sqrt())
    }

    fn in_domain(&self, t: f64) -> bool {
        match self.traj.valid_range() {
            Some((lo, hi)) => t >= lo && t < hi,
            None => false,
        }
    }

    /// Total robustified cost `0.5 sum rho(e^T Sigma^-1 e)` over the active
    /// window.
    pub fn total_cost(&self, config: &SolverConfig) -> Result<f64> {
        self.cost_of(&self.traj, &self.object_points, config)
    }

    fn cost_of(
        &self,
        traj: &SplineTrajectory,
        points: &BTreeMap<u64, Vec3>,
        config: &SolverConfig,
    ) -> Result<f64> {
        let mut cost = 0.0;
        for frame in &self.frames[self.active_start..] {
            if frame.observations.is_empty() || !self.in_domain(frame.timestamp) {
                continue;
            }
            let pose = traj.interpolate_pose(frame.timestamp)?;
            let t_co = frame.observations[0].camera_pose.inverse().compose(&pose);
            for obs in &frame.observations {
                let p_o = points.get(&obs.point_id).ok_or(Error::UnknownObjectPoint {
                    point_id: obs.point_id,
                })?;
                let e = obs.p_c - t_co.act(p_o);
                let info = invert_covariance(obs)?;
                let s = (info * e).dot(&e);
                cost += 0.5 * huber_rho(s, config.huber_delta);
            }
        }
        Ok(cost)
    }

    /// One robustified Gauss-Newton iteration with Levenberg fallback.
    /// `lambda` carries the damping state across iterations (start it at 0).
    pub fn gauss_newton_step(
        &mut self,
        config: &SolverConfig,
        lambda: &mut f64,
    ) -> Result<StepReport> {
        if self.frames.len() < self.minimum_frames() {
            return Err(Error::InsufficientFrames {
                have: self.frames.len(),
                need: self.minimum_frames(),
            });
        }

        // variable layout: 6 per free control point, then 3 per free point
        let free_cps: Vec<usize> = (0..self.fixed.len()).filter(|&i| !self.fixed[i]).collect();
        if free_cps.is_empty() && self.mode == BaMode::Spline {
            return Err(Error::NoFreeVariables);
        }
        let mut cp_col = vec![usize::MAX; self.fixed.len()];
        for (col, &i) in free_cps.iter().enumerate() {
            cp_col[i] = 6 * col;
        }

        let free_points: Vec<u64> = if self.mode == BaMode::Local {
            let mut seen = BTreeMap::<u64, usize>::new();
            for frame in &self.frames[self.active_start..] {
                if frame.observations.is_empty() || !self.in_domain(frame.timestamp) {
                    continue;
                }
                for obs in &frame.observations {
                    *seen.entry(obs.point_id).or_insert(0) += 1;
                }
            }
            // single-view points are unconstrained along the ray
            seen.into_iter()
                .filter(|&(_, n)| n >= 2)
                .map(|(id, _)| id)
                .collect()
        } else {
            Vec::new()
        };
        let point_base = 6 * free_cps.len();
        let mut point_col = BTreeMap::new();
        for (idx, &id) in free_points.iter().enumerate() {
            point_col.insert(id, point_base + 3 * idx);
        }

        let dim = point_base + 3 * free_points.len();
        if dim == 0 {
            return Err(Error::NoFreeVariables);
        }
        let mut h = DMatrix::<f64>::zeros(dim, dim);
        let mut g = DVector::<f64>::zeros(dim);
        let mut cost_before = 0.0;

        for frame in &self.frames[self.active_start..] {
            if frame.observations.is_empty() || !self.in_domain(frame.timestamp) {
                continue;
            }
            let chain = ErrorChain::new(
                &self.traj,
                frame.timestamp,
                &frame.observations[0].camera_pose,
                config.form,
            )?;
            let base = chain.base();
            let k = chain.degree();
            let cols: Vec<Option<usize>> = (0..k)
                .map(|j| {
                    let cp = base + j;
                    if cp < cp_col.len() && cp_col[cp] != usize::MAX {
                        Some(cp_col[cp])
                    } else {
                        None
                    }
                })
                .collect();

            let mut blocks = vec![Mat3x6::zeros(); k];
            for obs in &frame.observations {
                let p_o =
                    self.object_points
                        .get(&obs.point_id)
                        .ok_or(Error::UnknownObjectPoint {
                            point_id: obs.point_id,
                        })?;
                let pred = chain.evaluate_into(p_o, &mut blocks);
                let e = obs.p_c - pred;
                let info = invert_covariance(obs)?;
                let s = (info * e).dot(&e);
                cost_before += 0.5 * huber_rho(s, config.huber_delta);
                let w = huber_weight(s, config.huber_delta);
                let winfo = w * info;

                let weighted: Vec<(usize, Mat3x6)> = cols
                    .iter()
                    .enumerate()
                    .filter_map(|(j, col)| col.map(|c| (c, blocks[j])))
                    .collect();

                for (ca, ja) in &weighted {
                    let jw = ja.transpose() * winfo;
                    for (cb, jb) in &weighted {
                        if cb < ca {
                            continue;
                        }
                        let hb = jw * jb;
                        add_block(&mut h, *ca, *cb, &hb);
                    }
                    let gb = jw * e;
                    for r in 0..6 {
                        g[ca + r] += gb[r];
                    }
                }

                if let Some(&pc) = point_col.get(&obs.point_id) {
                    let jp = chain.point_jacobian();
                    let jpw = jp.transpose() * winfo;
                    let hp = jpw * jp;
                    add_block(&mut h, pc, pc, &hp);
                    let gp = jpw * e;
                    for r in 0..3 {
                        g[pc + r] += gp[r];
                    }
                    for (ca, ja) in &weighted {
                        let cross = ja.transpose() * winfo * jp;
                        add_block(&mut h, *ca, pc, &cross);
                    }
                }
            }
        }
        mirror_lower(&mut h);

        // solve, rejecting steps that increase the cost; damping escalates
        // inside one call and decays across accepted calls
        loop {
            let mut damped = h.clone();
            for i in 0..dim {
                damped[(i, i)] += *lambda;
            }
            let delta = match damped.cholesky() {
                Some(chol) => chol.solve(&(-&g)),
                None => {
                    escalate(lambda, config, dim)?;
                    continue;
                }
            };

            // candidate update; a step large enough to break a Log branch
            // counts as rejected and gets more damping
            let candidate = (|| -> Result<(SplineTrajectory, BTreeMap<u64, Vec3>, f64)> {
                let mut traj = self.traj.clone();
                for (col, &cp) in free_cps.iter().enumerate() {
                    let xi = Vec6::from_column_slice(&delta.as_slice()[6 * col..6 * col + 6]);
                    let updated =
                        exp_se3(&Twist::from_vector(&xi)).compose(self.traj.control_point(cp));
                    traj.set_control_point(cp, updated)?;
                }
                let mut points = self.object_points.clone();
                for (idx, id) in free_points.iter().enumerate() {
                    let off = point_base + 3 * idx;
                    let dp = Vec3::new(delta[off], delta[off + 1], delta[off + 2]);
                    *points.get_mut(id).expect("free point exists") += dp;
                }
                let cost = self.cost_of(&traj, &points, config)?;
                Ok((traj, points, cost))
            })();

            let (traj, points, cost_after) = match candidate {
                Ok(c) => c,
                Err(Error::LogBranchAmbiguity { .. }) => {
                    escalate(lambda, config, dim)?;
                    continue;
                }
                Err(e) => return Err(e),
            };
            if cost_after <= cost_before {
                self.traj = traj;
                self.object_points = points;
                if *lambda > 0.0 {
                    *lambda /= 10.0;
                    if *lambda < config.damping_init / 100.0 {
                        *lambda = 0.0;
                    }
                }
                return Ok(StepReport {
                    cost_before,
                    cost_after,
                    step_norm: delta.amax(),
                    lambda: *lambda,
                });
            }
            if std::env::var("CTRAJ_DEBUG_REJECT").is_ok() {
                eprintln!(
                    "reject: lambda {:.1e} step {:.3e} cost {:.9e} -> {:.9e} (+{:.3e})",
                    *lambda,
                    delta.amax(),
                    cost_before,
                    cost_after,
                    cost_after - cost_before
                );
            }
            escalate(lambda, config, dim)?;
        }
    }

    /// Final batch refinement over every frame whose observations are still
    /// held: frees all supported control points except the first two of the
    /// supported range (the object frame gauge) and the last (which no
    /// observation can see), then solves. A finishing pass once streaming
    /// is done.
    pub fn refine_all(&mut self, config: &SolverConfig) -> Result<SolveReport> {
        let n = self.frames.len();
        if n < self.minimum_frames() {
            return Err(Error::InsufficientFrames {
                have: n,
                need: self.minimum_frames(),
            });
        }
        // frames already evicted from a sliding window carry no
        // observations; their control points stay frozen anchors
        let first_supported = self
            .frames
            .iter()
            .position(|f| !f.observations.is_empty())
            .unwrap_or(0);
        // each usable frame pins one pose; freeing all but the leading
        // degree-2 supported points (one more in Local BA for the object
        // frame gauge) and the zero-influence newest keeps the system square
        let lead = match self.mode {
            BaMode::Spline => self.degree - 2,
            BaMode::Local => (self.degree - 2).max(1),
        };
        self.active_start = first_supported;
        self.fixed = vec![true; n];
        for flag in &mut self.fixed[(first_supported + lead).min(n - 1)..n - 1] {
            *flag = false;
        }
        self.solve(config)
    }

    /// Iterate [`Window::gauss_newton_step`] to convergence.
    pub fn solve(&mut self, config: &SolverConfig) -> Result<SolveReport> {
        let mut lambda = 0.0;
        let initial_cost = self.total_cost(config)?;
        let mut cost = initial_cost;
        let mut converged = false;
        let mut iterations = 0;
        for _ in 0..config.max_iterations {
            let step = self.gauss_newton_step(config, &mut lambda)?;
            iterations += 1;
            let decrease = step.cost_before - step.cost_after;
            cost = step.cost_after;
            if step.step_norm < config.step_tolerance
                || decrease < config.cost_tolerance * step.cost_before.max(1e-300)
            {
                converged = true;
                break;
            }
        }
        Ok(SolveReport {
            iterations,
            initial_cost,
            final_cost: cost,
            converged,
        })
    }
}

fn validate_frame(frame: &[Observation]) -> Result<f64> {
    let first = frame.first().ok_or(Error::InconsistentFrame {
        reason: "empty frame".into(),
    })?;
    for obs in frame {
        if obs.timestamp != first.timestamp {
            return Err(Error::InconsistentFrame {
                reason: format!(
                    "timestamps differ within one frame: {} vs {}",
                    obs.timestamp, first.timestamp
                ),
            });
        }
        if obs.camera_pose.max_abs_diff(&first.camera_pose) > 1e-12 {
            return Err(Error::InconsistentFrame {
                reason: format!("camera poses differ at t = {}", obs.timestamp),
            });
        }
        if obs.covariance.cholesky().is_none() {
            return Err(Error::InvalidCovariance {
                point_id: obs.point_id,
            });
        }
    }
    Ok(first.timestamp)
}

fn escalate(lambda: &mut f64, config: &SolverConfig, dimension: usize) -> Result<()> {
    *lambda = if *lambda == 0.0 {
        config.damping_init
    } else {
        *lambda * 10.0
    };
    if *lambda > MAX_LAMBDA {
        return Err(Error::SingularNormalEquations {
            dimension,
            max_lambda: MAX_LAMBDA,
        });
    }
    Ok(())
}

fn add_block<const R: usize, const C: usize>(
    h: &mut DMatrix<f64>,
    row: usize,
    col: usize,
    block: &nalgebra::SMatrix<f64, R, C>,
) {
    for r in 0..R {
        for c in 0..C {
            h[(row + r, col + c)] += block[(r, c)];
        }
    }
}

/// Copy the stored upper triangle into the lower one.
fn mirror_lower(h: &mut DMatrix<f64>) {
    let n = h.nrows();
    for r in 0..n {
        for c in 0..r {
            h[(r, c)] = h[(c, r)];
        }
    }
}

/// Residual of one observation: `p_c - proj(T_wc^-1 T_wo(t) p~_o)`.
pub fn residual(obs: &Observation, p_o: &Vec3, traj: &SplineTrajectory) -> Result<Vec3> {
    let pose = traj.interpolate_pose(obs.timestamp)?;
    Ok(obs.p_c - obs.camera_pose.inverse().compose(&pose).act(p_o))
}

/// Huber loss on the squared Mahalanobis norm `s`: quadratic below
/// `delta^2`, linear above.
pub fn huber_rho(s: f64, delta: f64) -> f64 {
    let d2 = delta * delta;
    if s <= d2 {
        s
    } else {
        2.0 * delta * s.sqrt() - d2
    }
}

/// Derivative of [`huber_rho`], the IRLS weight in [0, 1].
pub fn huber_weight(s: f64, delta: f64) -> f64 {
    let d2 = delta * delta;
    if s <= d2 {
        1.0
    } else {
        delta / s.sqrt()
    }
}

fn invert_covariance(obs: &Observation) -> Result<Mat3> {
    if obs.covariance == Mat3::identity() {
        return Ok(Mat3::identity());
    }
    obs.covariance
        .cholesky()
        .map(|c| c.inverse())
        .ok_or(Error::InvalidCovariance {
            point_id: obs.point_id,
        })
}

/// Centroid plus principal-axes orientation of a point cloud, right-handed
/// with the first axis positively aligned with world x when possible.
fn principal_frame(world: &[Vec3]) -> Result<Pose> {
    if world.len() < 3 {
        return Err(Error::DegeneratePointCloud {
            n_points: world.len(),
        });
    }
    let n = world.len() as f64;
    let centroid = world.iter().sum::<Vec3>() / n;
    let mut cov = Mat3::zeros();
    for w in world {
        let d = w - centroid;
        cov += d * d.transpose();
    }
    cov /= n;

    let eig = cov.symmetric_eigen();
    let mut order = [0usize, 1, 2];
    order.sort_by(|&a, &b| {
        eig.eigenvalues[b]
            .partial_cmp(&eig.eigenvalues[a])
            .expect("eigenvalues are finite")
    });
    let lambda0 = eig.eigenvalues[order[0]];
    let lambda1 = eig.eigenvalues[order[1]];
    if !(lambda0 > 0.0) || lambda1 < 1e-9 * lambda0 {
        return Err(Error::DegeneratePointCloud {
            n_points: world.len(),
        });
    }

    let mut a0: Vec3 = eig.eigenvectors.column(order[0]).normalize();
    let mut a1: Vec3 = eig.eigenvectors.column(order[1]).normalize();
    if a0[0] < 0.0 {
        a0 = -a0;
    }
    if a1[1] < 0.0 {
        a1 = -a1;
    }
    let a2 = a0.cross(&a1);
    let mut r = Mat3::zeros();
    r.set_column(0, &a0);
    r.set_column(1, &a1);
    r.set_column(2, &a2);
    Ok(Pose::from_parts(r, centroid))
}
