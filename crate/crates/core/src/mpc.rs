//! MPC program builders for planar first-order vehicles and second-order
//! spatial vehicles, the receding-horizon loop, and trajectory rounding.
//!
//! Rotation states are relaxed to their convex hull, so a planar state
//! `(a, b)` with `a² + b² < 1` reads as a vehicle moving slower than full
//! speed, and a spatial `X` with `det X < 1` as a shrunken thrust axis.

use std::time::Instant;

use crate::cones::{project_to_son, so2_hull_rows, so3_hull_rows, so3_lmi, HullRotation3};
use crate::conic::{ConicProgram, ConstraintBlock, SolveResult, SolveStatus};
use crate::error::{Error, Result};
use crate::mip::{add_min_speed, add_obstacle, solve_mip, MinSpeedRegion, MipSettings, NodeRecord, RectObstacle, DEFAULT_BIG_M};
use crate::numerics::{sym_eig, SmallMatrix, EIG_TOL};

/// Tolerance on `R0ᵀR0 = I`, `det R0 = 1` for a user-supplied start.
pub const START_ROTATION_TOL: f64 = 1e-9;
/// Big-M for minimum-speed faces. Any value ≥ 1 + sqrt(min_det) is valid
/// because `|cos θ·a + sin θ·b| ≤ 1` on the hull.
pub const DEFAULT_MIN_SPEED_BIG_M: f64 = 2.0;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Order {
    First,
    Second,
}

/// How the weighted norms in the cost are taken.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum NormKind {
    /// `vᵀWv`, keeping the program a QP.
    #[default]
    Squared,
    /// `sqrt(vᵀWv)` through second-order cone epigraphs.
    Plain,
}

#[derive(Clone, Debug, PartialEq)]
pub enum GoalMode {
    /// `s(T)` pinned to the goal; optionally `p(T) = 0` for second order.
    Terminal { zero_velocity: bool },
    /// Quadratic pull only (terminal weight plus stage weight).
    Soft,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Goal {
    pub position: Vec<f64>,
    pub mode: GoalMode,
}

/// Full state of one vehicle at one instant.
#[derive(Clone, Debug, PartialEq)]
pub struct VehicleState {
    /// `n×n`; for `n = 2` only `a = R[0][0]`, `b = R[1][0]` are used.
    pub rotation: SmallMatrix,
    pub position: Vec<f64>,
    /// Translational velocity `p`, second order only (else empty).
    pub velocity: Vec<f64>,
    /// Rotation rate `W` row-major, second order only (else empty).
    pub angular: Vec<f64>,
}

impl VehicleState {
    pub fn planar(a: f64, b: f64, x: f64, y: f64) -> Self {
        VehicleState {
            rotation: SmallMatrix::from_rows(&[[a, -b], [b, a]]).expect("2x2"),
            position: vec![x, y],
            velocity: Vec::new(),
            angular: Vec::new(),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct MpcScenario {
    pub name: String,
    pub dim: usize,
    pub order: Order,
    pub horizon: usize,
    pub step: f64,
    /// Body-frame velocity (first order) or thrust axis (second order).
    pub body_vector: Vec<f64>,
    pub state_weight: SmallMatrix,
    pub input_weight: SmallMatrix,
    pub terminal_weight: SmallMatrix,
    pub norm: NormKind,
    pub start: VehicleState,
    pub goal: Goal,
    pub obstacles: Vec<RectObstacle>,
    pub obstacle_big_m: f64,
    pub min_speed: Option<MinSpeedRegion>,
    pub min_speed_big_m: f64,
    pub input_bounds: Option<(f64, f64)>,
}

impl MpcScenario {
    /// Planar car from the origin facing +x to `(5, 10)` over 20 unit steps.
    pub fn dubins() -> Self {
        MpcScenario {
            name: "dubins".into(),
            dim: 2,
            order: Order::First,
            horizon: 20,
            step: 1.0,
            body_vector: vec![1.0, 0.0],
            state_weight: SmallMatrix::zeros(2, 2),
            input_weight: SmallMatrix::identity(2),
            terminal_weight: SmallMatrix::zeros(2, 2),
            norm: NormKind::Squared,
            start: VehicleState::planar(1.0, 0.0, 0.0, 0.0),
            goal: Goal {
                position: vec![5.0, 10.0],
                mode: GoalMode::Terminal { zero_velocity: false },
            },
            obstacles: Vec::new(),
            obstacle_big_m: DEFAULT_BIG_M,
            min_speed: None,
            min_speed_big_m: DEFAULT_MIN_SPEED_BIG_M,
            input_bounds: None,
        }
    }

    /// Double-integrator spacecraft at rest, thrusting along its body x-axis,
    /// initially pointed along world −x.
    pub fn spacecraft() -> Self {
        MpcScenario {
            name: "spacecraft".into(),
            dim: 3,
            order: Order::Second,
            horizon: 20,
            step: 1.0,
            body_vector: vec![1.0, 0.0, 0.0],
            state_weight: SmallMatrix::zeros(3, 3),
            input_weight: SmallMatrix::identity(9),
            terminal_weight: SmallMatrix::zeros(3, 3),
            norm: NormKind::Squared,
            start: VehicleState {
                rotation: SmallMatrix::from_diag(&[-1.0, -1.0, 1.0]),
                position: vec![0.0; 3],
                velocity: vec![0.0; 3],
                angular: vec![0.0; 9],
            },
            goal: Goal {
                position: vec![5.0, 10.0, 25.0],
                mode: GoalMode::Terminal { zero_velocity: true },
            },
            obstacles: Vec::new(),
            obstacle_big_m: DEFAULT_BIG_M,
            min_speed: None,
            min_speed_big_m: DEFAULT_MIN_SPEED_BIG_M,
            input_bounds: None,
        }
    }

    pub fn input_dim(&self) -> usize {
        match self.order {
            Order::First => self.dim,
            Order::Second => self.dim * self.dim,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.dim;
        match (n, self.order) {
            (2, Order::First) | (3, Order::Second) => {}
            _ => {
                return Err(Error::invalid(format!(
                    "unsupported combination dim = {n}, order = {:?} (use 2/first or 3/second)",
                    self.order
                )))
            }
        }
        if self.horizon < 2 {
            return Err(Error::invalid(format!("horizon must be at least 2, got {}", self.horizon)));
        }
        if !(self.step > 0.0 && self.step.is_finite()) {
            return Err(Error::invalid(format!("time step must be positive, got {}", self.step)));
        }
        check_vec("body vector", &self.body_vector, n)?;
        check_vec("start position", &self.start.position, n)?;
        check_vec("goal position", &self.goal.position, n)?;
        check_weight("state weight", &self.state_weight, n, false)?;
        check_weight("terminal weight", &self.terminal_weight, n, false)?;
        check_weight("input weight", &self.input_weight, self.input_dim(), true)?;
        let r0 = &self.start.rotation;
        if r0.rows() != n || r0.cols() != n || !r0.is_finite() {
            return Err(Error::invalid(format!("start rotation must be a finite {n}x{n} matrix")));
        }
        if r0.orthogonality_error() > START_ROTATION_TOL || (r0.determinant() - 1.0).abs() > START_ROTATION_TOL {
            return Err(Error::invalid("start rotation is not a proper rotation"));
        }
        if n == 2 && (r0[(0, 0)] - r0[(1, 1)]).abs() + (r0[(0, 1)] + r0[(1, 0)]).abs() > START_ROTATION_TOL {
            return Err(Error::invalid("planar start rotation must have the form [a -b; b a]"));
        }
        if self.order == Order::Second {
            check_vec("start velocity", &self.start.velocity, 3)?;
            check_vec("start angular rate", &self.start.angular, 9)?;
        }
        if let GoalMode::Terminal { zero_velocity: true } = self.goal.mode {
            if self.order == Order::First {
                return Err(Error::invalid("zero terminal velocity needs a second-order scenario"));
            }
        }
        for o in &self.obstacles {
            o.validate()?;
        }
        if !(self.obstacle_big_m > 0.0 && self.obstacle_big_m.is_finite()) {
            return Err(Error::invalid("obstacle big-M must be positive"));
        }
        if let Some(region) = &self.min_speed {
            region.validate()?;
            if n != 2 {
                return Err(Error::invalid("minimum-speed regions apply to planar vehicles only"));
            }
            if !(self.min_speed_big_m >= 1.0 + region.inradius()) || !self.min_speed_big_m.is_finite() {
                return Err(Error::invalid(format!(
                    "min-speed big-M must be at least 1 + sqrt(min_det) = {}",
                    1.0 + region.inradius()
                )));
            }
        }
        if let Some((lo, hi)) = self.input_bounds {
            if lo.is_nan() || hi.is_nan() || lo > hi {
                return Err(Error::invalid(format!("bad input bounds [{lo}, {hi}]")));
            }
        }
        Ok(())
    }
}

fn check_vec(what: &str, v: &[f64], len: usize) -> Result<()> {
    if v.len() != len {
        return Err(Error::invalid(format!("{what} needs {len} entries, got {}", v.len())));
    }
    if v.iter().any(|x| !x.is_finite()) {
        return Err(Error::invalid(format!("{what} has non-finite entries")));
    }
    Ok(())
}

fn check_weight(what: &str, w: &SmallMatrix, dim: usize, definite: bool) -> Result<()> {
    if w.rows() != dim || w.cols() != dim {
        return Err(Error::invalid(format!(
            "{what} must be {dim}x{dim}, got {}x{}",
            w.rows(),
            w.cols()
        )));
    }
    if !w.is_finite() || w.max_asymmetry() > 1e-12 {
        return Err(Error::invalid(format!("{what} must be finite and symmetric")));
    }
    let lo = sym_eig(w, EIG_TOL)?.eigenvalues[0];
    if definite && lo <= 0.0 {
        return Err(Error::invalid(format!("{what} must be positive definite")));
    }
    if lo < -1e-9 {
        return Err(Error::invalid(format!("{what} must be positive semidefinite")));
    }
    Ok(())
}

/// Variable positions in a built program. Time-major: the state at step
/// `t` is followed by the input at `t`, and step `T` has no input.
#[derive(Clone, Debug, PartialEq)]
pub struct Layout {
    pub dim: usize,
    pub order: Order,
    pub horizon: usize,
    state_len: usize,
    input_len: usize,
    /// Minimum-speed binaries per step `1..=T` (empty when unused).
    pub min_speed_binaries: Vec<Vec<usize>>,
    pub obstacle_binaries: Vec<[usize; 4]>,
}

impl Layout {
    fn new(dim: usize, order: Order, horizon: usize) -> Self {
        let (state_len, input_len) = match order {
            Order::First => (4, 2),
            Order::Second => (24, 9),
        };
        Layout {
            dim,
            order,
            horizon,
            state_len,
            input_len,
            min_speed_binaries: Vec::new(),
            obstacle_binaries: Vec::new(),
        }
    }

    fn base(&self, t: usize) -> usize {
        t * (self.state_len + self.input_len)
    }

    pub fn core_vars(&self) -> usize {
        self.base(self.horizon) + self.state_len
    }

    /// First order: `[a, b]`. Second order: `X` row-major.
    pub fn rotation(&self, t: usize) -> Vec<usize> {
        let b = self.base(t);
        match self.order {
            Order::First => vec![b, b + 1],
            Order::Second => (b + 9..b + 18).collect(),
        }
    }

    pub fn position(&self, t: usize) -> Vec<usize> {
        let b = self.base(t);
        match self.order {
            Order::First => vec![b + 2, b + 3],
            Order::Second => (b + 21..b + 24).collect(),
        }
    }

    pub fn velocity(&self, t: usize) -> Vec<usize> {
        match self.order {
            Order::First => Vec::new(),
            Order::Second => (self.base(t) + 18..self.base(t) + 21).collect(),
        }
    }

    pub fn angular(&self, t: usize) -> Vec<usize> {
        match self.order {
            Order::First => Vec::new(),
            Order::Second => (self.base(t)..self.base(t) + 9).collect(),
        }
    }

    /// Input applied at `t < T`.
    pub fn input(&self, t: usize) -> Vec<usize> {
        assert!(t < self.horizon, "no input at the final step");
        let b = self.base(t) + self.state_len;
        (b..b + self.input_len).collect()
    }
}

fn eq_row(prog: &mut ConicProgram, row: Vec<(usize, f64)>, rhs: f64) -> Result<()> {
    prog.add_block(ConstraintBlock::equality(row, rhs)?)
}

/// Adds `‖v − target‖_W` (squared or plain) where `v` are the variables `vars`.
fn add_weighted_norm(
    prog: &mut ConicProgram,
    vars: &[usize],
    target: &[f64],
    w: &SmallMatrix,
    norm: NormKind,
) -> Result<()> {
    let k = vars.len();
    if w.as_slice().iter().all(|&v| v == 0.0) {
        return Ok(());
    }
    match norm {
        NormKind::Squared => {
            for i in 0..k {
                let wd: f64 = (0..k).map(|j| w[(i, j)] * target[j]).sum();
                prog.add_linear(vars[i], -2.0 * wd)?;
                prog.add_offset(target[i] * wd);
                prog.add_quadratic(vars[i], vars[i], 2.0 * w[(i, i)])?;
                for j in i + 1..k {
                    if w[(i, j)] != 0.0 {
                        prog.add_quadratic(vars[i], vars[j], 2.0 * w[(i, j)])?;
                    }
                }
            }
        }
        NormKind::Plain => {
            let root = sym_eig(w, EIG_TOL)?.reconstruct_with(|l| l.max(0.0).sqrt());
            let tau = prog.add_variables(1).start;
            prog.add_linear(tau, 1.0)?;
            let mut rows = vec![vec![(tau, -1.0)]];
            let mut offsets = vec![0.0];
            for i in 0..k {
                let row: Vec<(usize, f64)> =
                    (0..k).filter(|&j| root[(i, j)] != 0.0).map(|j| (vars[j], -root[(i, j)])).collect();
                rows.push(row);
                offsets.push(-(0..k).map(|j| root[(i, j)] * target[j]).sum::<f64>());
            }
            prog.add_block(ConstraintBlock::new(crate::cones::Cone::SecondOrder(k + 1), rows, offsets)?)?;
        }
    }
    Ok(())
}

/// Builds the program for `scen` starting from `start`, with stage targets
/// `targets[t - 1]` for `t = 1..=T` (the last one is also the terminal target).
pub fn build_program(scen: &MpcScenario, start: &VehicleState, targets: &[Vec<f64>]) -> Result<(ConicProgram, Layout)> {
    let n = scen.dim;
    let big_t = scen.horizon;
    if targets.len() != big_t || targets.iter().any(|t| t.len() != n || t.iter().any(|v| !v.is_finite())) {
        return Err(Error::invalid("need one finite target per step 1..=T"));
    }
    let mut layout = Layout::new(n, scen.order, big_t);
    let mut prog = ConicProgram::new(layout.core_vars());
    let nv = layout.core_vars();
    let h = scen.step;
    let v = &scen.body_vector;

    // initial state
    match scen.order {
        Order::First => {
            let r = layout.rotation(0);
            eq_row(&mut prog, vec![(r[0], 1.0)], start.rotation[(0, 0)])?;
            eq_row(&mut prog, vec![(r[1], 1.0)], start.rotation[(1, 0)])?;
        }
        Order::Second => {
            for (k, &i) in layout.rotation(0).iter().enumerate() {
                eq_row(&mut prog, vec![(i, 1.0)], start.rotation.as_slice()[k])?;
            }
            for (&i, &w) in layout.angular(0).iter().zip(&start.angular) {
                eq_row(&mut prog, vec![(i, 1.0)], w)?;
            }
            for (&i, &p) in layout.velocity(0).iter().zip(&start.velocity) {
                eq_row(&mut prog, vec![(i, 1.0)], p)?;
            }
        }
    }
    for (&i, &s) in layout.position(0).iter().zip(&start.position) {
        eq_row(&mut prog, vec![(i, 1.0)], s)?;
    }

    for t in 0..big_t {
        let u = layout.input(t);
        match scen.order {
            Order::First => {
                let (r0, r1) = (layout.rotation(t), layout.rotation(t + 1));
                let (s0, s1) = (layout.position(t), layout.position(t + 1));
                let (a, b) = (r0[0], r0[1]);
                // a' = a + h·ua, b' = b + h·ub
                for k in 0..2 {
                    eq_row(&mut prog, vec![(r1[k], 1.0), (r0[k], -1.0), (u[k], -h)], 0.0)?;
                }
                // s' = s + h·R·V with R = [a −b; b a]
                eq_row(&mut prog, vec![(s1[0], 1.0), (s0[0], -1.0), (a, -h * v[0]), (b, h * v[1])], 0.0)?;
                eq_row(&mut prog, vec![(s1[1], 1.0), (s0[1], -1.0), (b, -h * v[0]), (a, -h * v[1])], 0.0)?;
            }
            Order::Second => {
                let (w0, w1) = (layout.angular(t), layout.angular(t + 1));
                let (x0, x1) = (layout.rotation(t), layout.rotation(t + 1));
                let (p0, p1) = (layout.velocity(t), layout.velocity(t + 1));
                let (s0, s1) = (layout.position(t), layout.position(t + 1));
                for k in 0..9 {
                    eq_row(&mut prog, vec![(w1[k], 1.0), (w0[k], -1.0), (u[k], -h)], 0.0)?;
                    eq_row(&mut prog, vec![(x1[k], 1.0), (x0[k], -1.0), (w0[k], -h)], 0.0)?;
                }
                for i in 0..3 {
                    let mut row = vec![(p1[i], 1.0), (p0[i], -1.0)];
                    for j in 0..3 {
                        if v[j] != 0.0 {
                            row.push((x0[3 * i + j], -h * v[j]));
                        }
                    }
                    eq_row(&mut prog, row, 0.0)?;
                    eq_row(&mut prog, vec![(s1[i], 1.0), (s0[i], -1.0), (p0[i], -h)], 0.0)?;
                }
            }
        }
    }

    for t in 0..=big_t {
        let r = layout.rotation(t);
        let block = match scen.order {
            Order::First => so2_hull_rows(r[0], r[1], nv)?,
            Order::Second => {
                let idx: [usize; 9] = r.try_into().expect("nine rotation entries");
                so3_hull_rows(&idx, nv)?
            }
        };
        prog.add_block(block)?;
    }

    if let GoalMode::Terminal { zero_velocity } = scen.goal.mode {
        for (&i, &g) in layout.position(big_t).iter().zip(&scen.goal.position) {
            eq_row(&mut prog, vec![(i, 1.0)], g)?;
        }
        if zero_velocity {
            for &i in &layout.velocity(big_t) {
                eq_row(&mut prog, vec![(i, 1.0)], 0.0)?;
            }
        }
    }

    if let Some((lo, hi)) = scen.input_bounds {
        for t in 0..big_t {
            for i in layout.input(t) {
                prog.set_bounds(i, lo, hi)?;
            }
        }
    }

    // cost
    for t in 1..=big_t {
        add_weighted_norm(&mut prog, &layout.position(t), &targets[t - 1], &scen.state_weight, scen.norm)?;
    }
    let zero_u = vec![0.0; layout.input_len];
    for t in 0..big_t {
        add_weighted_norm(&mut prog, &layout.input(t), &zero_u, &scen.input_weight, scen.norm)?;
    }
    add_weighted_norm(&mut prog, &layout.position(big_t), &targets[big_t - 1], &scen.terminal_weight, scen.norm)?;

    // mixed-integer parts
    for t in 1..=big_t {
        let s = layout.position(t);
        for obs in &scen.obstacles {
            let bins = add_obstacle(&mut prog, obs, (s[0], s[1]), scen.obstacle_big_m)?;
            layout.obstacle_binaries.push(bins);
        }
        if let Some(region) = &scen.min_speed {
            let r = layout.rotation(t);
            let bins = add_min_speed(&mut prog, region, (r[0], r[1]), scen.min_speed_big_m)?;
            layout.min_speed_binaries.push(bins);
        }
    }
    Ok((prog, layout))
}

fn constant_targets(scen: &MpcScenario) -> Vec<Vec<f64>> {
    vec![scen.goal.position.clone(); scen.horizon]
}

/// Planar first-order program for `scen` (must be `dim = 2`, first order).
pub fn build_first_order(scen: &MpcScenario) -> Result<(ConicProgram, Layout)> {
    scen.validate()?;
    if scen.order != Order::First {
        return Err(Error::invalid("build_first_order needs a first-order scenario"));
    }
    build_program(scen, &scen.start, &constant_targets(scen))
}

/// Spatial second-order program for `scen` (must be `dim = 3`, second order).
pub fn build_second_order(scen: &MpcScenario) -> Result<(ConicProgram, Layout)> {
    scen.validate()?;
    if scen.order != Order::Second {
        return Err(Error::invalid("build_second_order needs a second-order scenario"));
    }
    build_program(scen, &scen.start, &constant_targets(scen))
}

#[derive(Clone, Debug, PartialEq)]
pub struct TrajectoryStep {
    pub t: usize,
    pub time: f64,
    pub rotation: SmallMatrix,
    pub position: Vec<f64>,
    /// Input applied at this step; zeros on the final row.
    pub input: Vec<f64>,
    pub velocity: Vec<f64>,
    pub angular: Vec<f64>,
    pub det: f64,
    /// Wall time of the solve that produced this row's input (seconds).
    pub solve_time: f64,
}

impl TrajectoryStep {
    pub fn state(&self) -> VehicleState {
        VehicleState {
            rotation: self.rotation.clone(),
            position: self.position.clone(),
            velocity: self.velocity.clone(),
            angular: self.angular.clone(),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Trajectory {
    pub dim: usize,
    pub order: Order,
    pub step: f64,
    pub body_vector: Vec<f64>,
    pub steps: Vec<TrajectoryStep>,
    pub status: SolveStatus,
    pub objective: f64,
    pub wall_time: f64,
    pub iterations: usize,
    pub nodes: usize,
}

impl Trajectory {
    pub fn min_det(&self) -> f64 {
        self.steps.iter().map(|s| s.det).fold(f64::INFINITY, f64::min)
    }

    pub fn max_det(&self) -> f64 {
        self.steps.iter().map(|s| s.det).fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn last(&self) -> Option<&TrajectoryStep> {
        self.steps.last()
    }
}

fn rotation_matrix(order: Order, vals: &[f64]) -> SmallMatrix {
    match order {
        Order::First => SmallMatrix::from_rows(&[[vals[0], -vals[1]], [vals[1], vals[0]]]).expect("2x2"),
        Order::Second => SmallMatrix::from_row_major(3, 3, vals.to_vec()).expect("3x3"),
    }
}

fn rotation_det(order: Order, r: &SmallMatrix) -> f64 {
    match order {
        Order::First => r[(0, 0)] * r[(0, 0)] + r[(1, 0)] * r[(1, 0)],
        Order::Second => r.determinant(),
    }
}

fn extract(layout: &Layout, scen: &MpcScenario, x: &[f64]) -> Vec<TrajectoryStep> {
    let pick = |idx: Vec<usize>| idx.into_iter().map(|i| x[i]).collect::<Vec<f64>>();
    (0..=layout.horizon)
        .map(|t| {
            let rotation = rotation_matrix(layout.order, &pick(layout.rotation(t)));
            let det = rotation_det(layout.order, &rotation);
            TrajectoryStep {
                t,
                time: t as f64 * scen.step,
                rotation,
                position: pick(layout.position(t)),
                input: if t < layout.horizon {
                    pick(layout.input(t))
                } else {
                    vec![0.0; layout.input_len]
                },
                velocity: pick(layout.velocity(t)),
                angular: pick(layout.angular(t)),
                det,
                solve_time: 0.0,
            }
        })
        .collect()
}

/// Outcome of a one-shot plan.
#[derive(Clone, Debug)]
pub struct Plan {
    pub trajectory: Trajectory,
    pub program: ConicProgram,
    pub layout: Layout,
    pub result: SolveResult,
    pub node_log: Vec<NodeRecord>,
}

/// Solves the scenario once over its whole horizon. The trajectory is
/// populated for Optimal and IterLimit results and empty otherwise.
pub fn plan(scen: &MpcScenario, settings: &MipSettings) -> Result<Plan> {
    scen.validate()?;
    let (program, layout) = build_program(scen, &scen.start, &constant_targets(scen))?;
    let started = Instant::now();
    let mip = solve_mip(&program, settings)?;
    let wall = started.elapsed().as_secs_f64();
    let r = mip.result;
    let mut steps = if matches!(r.status, SolveStatus::Optimal | SolveStatus::IterLimit) {
        extract(&layout, scen, &r.x)
    } else {
        Vec::new()
    };
    if let Some(first) = steps.first_mut() {
        first.solve_time = wall;
    }
    let trajectory = Trajectory {
        dim: scen.dim,
        order: scen.order,
        step: scen.step,
        body_vector: scen.body_vector.clone(),
        steps,
        status: r.status,
        objective: r.objective,
        wall_time: wall,
        iterations: mip.log.iter().map(|l| l.iterations).sum(),
        nodes: mip.nodes,
    };
    Ok(Plan {
        trajectory,
        program,
        layout,
        result: r,
        node_log: mip.log,
    })
}

/// Explicit cost of a trajectory under the squared-norm objective with the
/// given stage targets. Matches the program objective at its solution.
pub fn trajectory_cost(scen: &MpcScenario, traj: &Trajectory, targets: &[Vec<f64>]) -> f64 {
    let quad = |w: &SmallMatrix, v: &[f64]| -> f64 {
        let wv = w.matvec(v);
        wv.iter().zip(v).map(|(a, b)| a * b).sum()
    };
    let steps = &traj.steps;
    let big_t = steps.len() - 1;
    let diff = |t: usize| -> Vec<f64> { steps[t].position.iter().zip(&targets[t - 1]).map(|(s, g)| s - g).collect() };
    let mut cost = 0.0;
    for t in 1..=big_t {
        cost += quad(&scen.state_weight, &diff(t));
    }
    for step in &steps[..big_t] {
        cost += quad(&scen.input_weight, &step.input);
    }
    cost + quad(&scen.terminal_weight, &diff(big_t))
}

/// Worst residuals of a trajectory against the discrete dynamics and the hull.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TrajectoryCheck {
    pub dynamics_residual: f64,
    /// `max(‖(a, b)‖ − 1)` for `n = 2`, `max(−λ_min)` of the LMI for `n = 3`.
    pub hull_violation: f64,
    pub min_det: f64,
    pub max_det: f64,
}

/// Advances one step with the same forward-Euler dynamics the builder uses.
pub fn advance(order: Order, h: f64, body: &[f64], s: &VehicleState, u: &[f64]) -> VehicleState {
    match order {
        Order::First => {
            let (a, b) = (s.rotation[(0, 0)], s.rotation[(1, 0)]);
            let (na, nb) = (a + h * u[0], b + h * u[1]);
            let x = s.position[0] + h * (a * body[0] - b * body[1]);
            let y = s.position[1] + h * (b * body[0] + a * body[1]);
            VehicleState::planar(na, nb, x, y)
        }
        Order::Second => {
            let xr = s.rotation.as_slice();
            let rotation: Vec<f64> = (0..9).map(|k| xr[k] + h * s.angular[k]).collect();
            let angular: Vec<f64> = (0..9).map(|k| s.angular[k] + h * u[k]).collect();
            let velocity: Vec<f64> =
                (0..3).map(|i| s.velocity[i] + h * (0..3).map(|j| xr[3 * i + j] * body[j]).sum::<f64>()).collect();
            let position: Vec<f64> = (0..3).map(|i| s.position[i] + h * s.velocity[i]).collect();
            VehicleState {
                rotation: SmallMatrix::from_row_major(3, 3, rotation).expect("3x3"),
                position,
                velocity,
                angular,
            }
        }
    }
}

fn state_distance(order: Order, a: &VehicleState, b: &VehicleState) -> f64 {
    let rot = match order {
        Order::First => {
            (a.rotation[(0, 0)] - b.rotation[(0, 0)]).abs().max((a.rotation[(1, 0)] - b.rotation[(1, 0)]).abs())
        }
        Order::Second => a.rotation.sub(&b.rotation).as_slice().iter().fold(0.0f64, |m, v| m.max(v.abs())),
    };
    let rest = a
        .position
        .iter()
        .zip(&b.position)
        .chain(a.velocity.iter().zip(&b.velocity))
        .chain(a.angular.iter().zip(&b.angular))
        .fold(0.0f64, |m, (x, y)| m.max((x - y).abs()));
    rot.max(rest)
}

pub fn check_trajectory(traj: &Trajectory) -> TrajectoryCheck {
    let mut dyn_res = 0.0f64;
    for w in traj.steps.windows(2) {
        let next = advance(traj.order, traj.step, &traj.body_vector, &w[0].state(), &w[0].input);
        dyn_res = dyn_res.max(state_distance(traj.order, &next, &w[1].state()));
    }
    let hull = traj
        .steps
        .iter()
        .map(|s| match traj.order {
            Order::First => (s.rotation[(0, 0)].hypot(s.rotation[(1, 0)]) - 1.0).max(0.0),
            Order::Second => {
                let lmi = so3_lmi(&s.rotation);
                sym_eig(&lmi, EIG_TOL).map(|e| (-e.eigenvalues[0]).max(0.0)).unwrap_or(f64::INFINITY)
            }
        })
        .fold(0.0f64, f64::max);
    TrajectoryCheck {
        dynamics_residual: dyn_res,
        hull_violation: hull,
        min_det: traj.min_det(),
        max_det: traj.max_det(),
    }
}

/// Time-indexed goal for the receding-horizon loop.
#[derive(Clone, Debug, PartialEq)]
pub enum GoalProcess {
    Static(Vec<f64>),
    /// `center + (ax·sin ωt, ay·cos ωt)`, a swinging rope end.
    Rope {
        center: Vec<f64>,
        amplitude: [f64; 2],
        omega: f64,
    },
}

impl GoalProcess {
    pub fn at(&self, time: f64) -> Vec<f64> {
        match self {
            GoalProcess::Static(g) => g.clone(),
            GoalProcess::Rope { center, amplitude, omega } => {
                let mut g = center.clone();
                g[0] += amplitude[0] * (omega * time).sin();
                g[1] += amplitude[1] * (omega * time).cos();
                g
            }
        }
    }
}

#[derive(Clone, Debug)]
pub struct RhcSettings {
    pub lookahead: usize,
    pub max_steps: usize,
    pub capture_radius: f64,
    pub mip: MipSettings,
}

#[derive(Clone, Debug, PartialEq)]
pub enum RhcStop {
    Captured { step: usize },
    StepLimit,
    Aborted { step: usize, status: SolveStatus },
}

#[derive(Clone, Debug)]
pub struct RhcOutcome {
    pub trajectory: Trajectory,
    pub stop: RhcStop,
    /// Goal position at each executed row.
    pub goals: Vec<Vec<f64>>,
}

/// Closed-loop replanning: plan `lookahead` steps toward the moving goal
/// with a soft terminal penalty, apply the first input, repeat.
pub fn receding_horizon(
    scen: &MpcScenario,
    goal: &dyn Fn(f64) -> Vec<f64>,
    settings: &RhcSettings,
) -> Result<RhcOutcome> {
    scen.validate()?;
    if settings.lookahead < 2 {
        return Err(Error::invalid("lookahead must be at least 2"));
    }
    if !(settings.capture_radius >= 0.0) {
        return Err(Error::invalid("capture radius must be non-negative"));
    }
    let mut inner = scen.clone();
    inner.horizon = settings.lookahead;
    inner.goal.mode = GoalMode::Soft;
    let h = scen.step;

    let mut traj = Trajectory {
        dim: scen.dim,
        order: scen.order,
        step: h,
        body_vector: scen.body_vector.clone(),
        steps: Vec::new(),
        status: SolveStatus::IterLimit,
        objective: 0.0,
        wall_time: 0.0,
        iterations: 0,
        nodes: 0,
    };
    let mut goals = Vec::new();

    let input_len = scen.input_dim();
    let mut state = scen.start.clone();
    let mut prev: Option<SolveResult> = None;
    let started = Instant::now();
    let mut k = 0;
    let row = |k: usize, s: &VehicleState, input: Vec<f64>, solve_time: f64| TrajectoryStep {
        t: k,
        time: k as f64 * h,
        det: rotation_det(scen.order, &s.rotation),
        rotation: s.rotation.clone(),
        position: s.position.clone(),
        input,
        velocity: s.velocity.clone(),
        angular: s.angular.clone(),
        solve_time,
    };
    let stop = loop {
        let now = k as f64 * h;
        let g = goal(now);
        if g.len() != scen.dim || g.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid(format!("goal process returned a bad point at t = {now}")));
        }
        let dist = state.position.iter().zip(&g).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt();
        goals.push(g);
        if dist <= settings.capture_radius {
            traj.steps.push(row(k, &state, vec![0.0; input_len], 0.0));
            break RhcStop::Captured { step: k };
        }
        if k == settings.max_steps {
            traj.steps.push(row(k, &state, vec![0.0; input_len], 0.0));
            break RhcStop::StepLimit;
        }
        let targets: Vec<Vec<f64>> = (1..=settings.lookahead).map(|j| goal(now + j as f64 * h)).collect();
        let (prog, layout) = build_program(&inner, &state, &targets)?;
        let mut mip = settings.mip.clone();
        mip.solver.warm_start = prev.as_ref().and_then(|p| crate::conic::warm_start(p, &prog));
        let t0 = Instant::now();
        let res = solve_mip(&prog, &mip)?;
        let solve_time = t0.elapsed().as_secs_f64();
        traj.iterations += res.log.iter().map(|l| l.iterations).sum::<usize>();
        traj.nodes += res.nodes;
        if res.result.status != SolveStatus::Optimal {
            traj.steps.push(row(k, &state, vec![0.0; input_len], solve_time));
            break RhcStop::Aborted {
                step: k,
                status: res.result.status,
            };
        }
        let u: Vec<f64> = layout.input(0).iter().map(|&i| res.result.x[i]).collect();
        traj.steps.push(row(k, &state, u.clone(), solve_time));
        state = advance(scen.order, h, &scen.body_vector, &state, &u);
        prev = Some(res.result);
        k += 1;
    };
    traj.wall_time = started.elapsed().as_secs_f64();
    traj.status = match &stop {
        RhcStop::Captured { .. } => SolveStatus::Optimal,
        RhcStop::StepLimit => SolveStatus::IterLimit,
        RhcStop::Aborted { status, .. } => *status,
    };
    traj.objective = f64::NAN;
    Ok(RhcOutcome {
        trajectory: traj,
        stop,
        goals,
    })
}

/// Per-step record of [`round_trajectory`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RoundingInfo {
    pub t: usize,
    pub distance: f64,
    pub unique: bool,
}

#[derive(Clone, Debug)]
pub struct RoundedTrajectory {
    pub trajectory: Trajectory,
    pub info: Vec<RoundingInfo>,
    /// Worst dynamics residual after rounding (rotations changed, inputs kept).
    pub dynamics_residual: f64,
}

/// Replaces every relaxed rotation by its nearest proper rotation.
pub fn round_trajectory(traj: &Trajectory) -> Result<RoundedTrajectory> {
    let mut out = traj.clone();
    let mut info = Vec::with_capacity(out.steps.len());
    for step in &mut out.steps {
        let p = project_to_son(&step.rotation)?;
        info.push(RoundingInfo {
            t: step.t,
            distance: p.distance,
            unique: p.unique,
        });
        step.rotation = p.rotation;
        step.det = rotation_det(traj.order, &step.rotation);
    }
    let dynamics_residual = check_trajectory(&out).dynamics_residual;
    Ok(RoundedTrajectory {
        trajectory: out,
        info,
        dynamics_residual,
    })
}

/// Hull membership of a step's rotation within `tol`.
pub fn step_in_hull(order: Order, step: &TrajectoryStep, tol: f64) -> bool {
    match order {
        Order::First => crate::cones::HullRotation2::new(step.rotation[(0, 0)], step.rotation[(1, 0)]).in_hull(tol),
        Order::Second => HullRotation3::new(step.rotation.clone()).map(|r| r.in_hull(tol)).unwrap_or(false),
    }
}
