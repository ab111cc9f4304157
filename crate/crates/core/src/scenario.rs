//! TOML scenario files.
//!
//! A file holds the vehicle problem at top level plus optional `[solver]`,
//! `[rhc]` and `[output]` sections. Unknown keys are rejected and every
//! error names the offending key path.
//!
//! ```toml
//! name = "dubins"
//! dim = 2
//! order = "first"
//! horizon = 20
//! step = 1.0
//! body_vector = [1.0, 0.0]
//!
//! [weights]
//! state = 0.0            # scalar s means s·I
//! input = [[1.0, 0.0], [0.0, 1.0]]
//!
//! [start]
//! position = [0.0, 0.0]
//!
//! [goal]
//! position = [5.0, 10.0]
//! mode = "terminal"
//! ```

use std::path::{Path, PathBuf};

use serde::Deserialize;

use crate::conic::SolverSettings;
use crate::error::{Error, Result};
use crate::mip::{MinSpeedRegion, MipSettings, RectObstacle, DEFAULT_BIG_M};
use crate::mpc::{
    Goal, GoalMode, GoalProcess, MpcScenario, NormKind, Order, RhcSettings, VehicleState, DEFAULT_MIN_SPEED_BIG_M,
};
use crate::numerics::SmallMatrix;

/// Default rope frequency: one swing every 20 time units.
pub const DEFAULT_ROPE_OMEGA: f64 = std::f64::consts::PI / 10.0;

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawScenario {
    name: String,
    dim: usize,
    order: RawOrder,
    horizon: usize,
    step: f64,
    body_vector: Vec<f64>,
    #[serde(default)]
    norm: RawNorm,
    #[serde(default)]
    weights: RawWeights,
    start: RawStart,
    goal: RawGoal,
    #[serde(default)]
    obstacles: Vec<RawObstacle>,
    #[serde(default)]
    obstacle_big_m: Option<f64>,
    #[serde(default)]
    min_speed: Option<RawMinSpeed>,
    #[serde(default)]
    input_bounds: Option<[f64; 2]>,
    #[serde(default)]
    solver: RawSolver,
    #[serde(default)]
    rhc: Option<RawRhc>,
    #[serde(default)]
    output: RawOutput,
}

#[derive(Debug, Deserialize)]
#[serde(rename_all = "lowercase")]
enum RawOrder {
    First,
    Second,
}

#[derive(Debug, Default, Deserialize)]
#[serde(rename_all = "lowercase")]
enum RawNorm {
    #[default]
    Squared,
    Plain,
}

#[derive(Debug, Deserialize)]
#[serde(untagged)]
enum RawWeight {
    Scalar(f64),
    Matrix(Vec<Vec<f64>>),
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawWeights {
    state: Option<RawWeight>,
    input: Option<RawWeight>,
    terminal: Option<RawWeight>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawStart {
    #[serde(default)]
    rotation: Option<Vec<Vec<f64>>>,
    position: Vec<f64>,
    #[serde(default)]
    velocity: Option<Vec<f64>>,
    #[serde(default)]
    angular: Option<Vec<Vec<f64>>>,
}

#[derive(Debug, Deserialize)]
#[serde(rename_all = "lowercase")]
enum RawGoalMode {
    Terminal,
    Soft,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawGoal {
    position: Vec<f64>,
    mode: RawGoalMode,
    #[serde(default)]
    zero_velocity: bool,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawObstacle {
    min: [f64; 2],
    max: [f64; 2],
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawMinSpeed {
    min_det: f64,
    #[serde(default = "default_faces")]
    faces: usize,
    #[serde(default)]
    big_m: Option<f64>,
}

fn default_faces() -> usize {
    4
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSolver {
    tol: Option<f64>,
    max_iters: Option<usize>,
    node_limit: Option<usize>,
    abs_gap: Option<f64>,
    rel_gap: Option<f64>,
    rho: Option<f64>,
    alpha: Option<f64>,
    refinement_steps: Option<usize>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawRhc {
    lookahead: usize,
    max_steps: usize,
    capture_radius: f64,
    #[serde(default)]
    goal: Option<RawGoalProcess>,
}

#[derive(Debug, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
enum RawGoalProcess {
    Static {
        position: Vec<f64>,
    },
    Rope {
        center: Vec<f64>,
        amplitude: [f64; 2],
        #[serde(default)]
        omega: Option<f64>,
    },
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawOutput {
    dir: Option<PathBuf>,
    #[serde(default)]
    round: bool,
}

/// Receding-horizon part of a scenario file.
#[derive(Clone, Debug, PartialEq)]
pub struct RhcConfig {
    pub lookahead: usize,
    pub max_steps: usize,
    pub capture_radius: f64,
    pub goal: GoalProcess,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct OutputConfig {
    /// Relative paths resolve against the working directory.
    pub dir: Option<PathBuf>,
    /// Also export the trajectory projected onto SO(n).
    pub round: bool,
}

/// Everything a run needs, validated.
#[derive(Clone, Debug)]
pub struct ScenarioFile {
    pub scenario: MpcScenario,
    pub mip: MipSettings,
    pub rhc: Option<RhcConfig>,
    pub output: OutputConfig,
}

impl ScenarioFile {
    /// Loop settings for [`crate::mpc::receding_horizon`].
    pub fn rhc_settings(&self) -> Option<RhcSettings> {
        self.rhc.as_ref().map(|r| RhcSettings {
            lookahead: r.lookahead,
            max_steps: r.max_steps,
            capture_radius: r.capture_radius,
            mip: self.mip.clone(),
        })
    }
}

fn at(path: &str, message: impl Into<String>) -> Error {
    Error::Scenario {
        path: path.to_string(),
        message: message.into(),
    }
}

/// Parses and validates a scenario document.
pub fn parse_scenario(text: &str) -> Result<ScenarioFile> {
    let de = toml::Deserializer::parse(text).map_err(|e| Error::Parse {
        what: "scenario".into(),
        message: e.to_string(),
    })?;
    let raw: RawScenario = serde_path_to_error::deserialize(de).map_err(|e| {
        let path = e.path().to_string();
        let inner = e.into_inner();
        at(&path, inner.message().trim().to_string())
    })?;
    convert(raw)
}

pub fn load_scenario(path: &Path) -> Result<ScenarioFile> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_scenario(&text)
}

fn matrix(path: &str, rows: &[Vec<f64>], n: usize) -> Result<SmallMatrix> {
    if rows.len() != n || rows.iter().any(|r| r.len() != n) {
        return Err(at(path, format!("expected a {n}x{n} matrix")));
    }
    SmallMatrix::from_rows(rows).map_err(|e| at(path, e.to_string()))
}

fn weight(path: &str, w: Option<&RawWeight>, n: usize, default: f64) -> Result<SmallMatrix> {
    match w {
        None => Ok(SmallMatrix::identity(n).scale(default)),
        Some(RawWeight::Scalar(s)) => Ok(SmallMatrix::identity(n).scale(*s)),
        Some(RawWeight::Matrix(rows)) => matrix(path, rows, n),
    }
}

fn convert(raw: RawScenario) -> Result<ScenarioFile> {
    let n = raw.dim;
    if n != 2 && n != 3 {
        return Err(at("dim", format!("must be 2 or 3, got {n}")));
    }
    let order = match raw.order {
        RawOrder::First => Order::First,
        RawOrder::Second => Order::Second,
    };
    let input_dim = match order {
        Order::First => n,
        Order::Second => n * n,
    };
    if raw.horizon < 2 {
        return Err(at("horizon", format!("must be at least 2, got {}", raw.horizon)));
    }

    let rotation = match &raw.start.rotation {
        Some(rows) => matrix("start.rotation", rows, n)?,
        None => SmallMatrix::identity(n),
    };
    let (velocity, angular) = match order {
        Order::First => {
            if raw.start.velocity.is_some() || raw.start.angular.is_some() {
                return Err(at("start", "velocity and angular apply to second-order scenarios only"));
            }
            (Vec::new(), Vec::new())
        }
        Order::Second => (
            raw.start.velocity.clone().unwrap_or_else(|| vec![0.0; n]),
            match &raw.start.angular {
                Some(rows) => matrix("start.angular", rows, n)?.as_slice().to_vec(),
                None => vec![0.0; n * n],
            },
        ),
    };

    let obstacles = raw
        .obstacles
        .iter()
        .enumerate()
        .map(|(i, o)| {
            RectObstacle::new(o.min[0], o.min[1], o.max[0], o.max[1]).map_err(|e| at(&format!("obstacles[{i}]"), e.to_string()))
        })
        .collect::<Result<Vec<_>>>()?;
    let (min_speed, min_speed_big_m) = match &raw.min_speed {
        Some(m) => (
            Some(MinSpeedRegion::new(m.min_det, m.faces).map_err(|e| at("min_speed", e.to_string()))?),
            m.big_m.unwrap_or(DEFAULT_MIN_SPEED_BIG_M),
        ),
        None => (None, DEFAULT_MIN_SPEED_BIG_M),
    };

    let scenario = MpcScenario {
        name: raw.name,
        dim: n,
        order,
        horizon: raw.horizon,
        step: raw.step,
        body_vector: raw.body_vector,
        state_weight: weight("weights.state", raw.weights.state.as_ref(), n, 0.0)?,
        input_weight: weight("weights.input", raw.weights.input.as_ref(), input_dim, 1.0)?,
        terminal_weight: weight("weights.terminal", raw.weights.terminal.as_ref(), n, 0.0)?,
        norm: match raw.norm {
            RawNorm::Squared => NormKind::Squared,
            RawNorm::Plain => NormKind::Plain,
        },
        start: VehicleState {
            rotation,
            position: raw.start.position,
            velocity,
            angular,
        },
        goal: Goal {
            position: raw.goal.position,
            mode: match raw.goal.mode {
                RawGoalMode::Terminal => GoalMode::Terminal {
                    zero_velocity: raw.goal.zero_velocity,
                },
                RawGoalMode::Soft if raw.goal.zero_velocity => {
                    return Err(at("goal.zero_velocity", "only meaningful with mode = \"terminal\""))
                }
                RawGoalMode::Soft => GoalMode::Soft,
            },
        },
        obstacles,
        obstacle_big_m: raw.obstacle_big_m.unwrap_or(DEFAULT_BIG_M),
        min_speed,
        min_speed_big_m,
        input_bounds: raw.input_bounds.map(|[lo, hi]| (lo, hi)),
    };
    scenario.validate().map_err(|e| match e {
        Error::InvalidInput(m) => at("<scenario>", m),
        other => other,
    })?;

    let defaults = SolverSettings::default();
    let s = &raw.solver;
    let solver = SolverSettings {
        tol: s.tol.unwrap_or(defaults.tol),
        max_iters: s.max_iters.unwrap_or(defaults.max_iters),
        rho: s.rho.unwrap_or(defaults.rho),
        alpha: s.alpha.unwrap_or(defaults.alpha),
        refinement_steps: s.refinement_steps.unwrap_or(defaults.refinement_steps),
        ..defaults
    };
    if !(solver.tol > 0.0 && solver.tol < 1.0) {
        return Err(at("solver.tol", "must lie in (0, 1)"));
    }
    if !(solver.rho > 0.0 && solver.rho.is_finite()) {
        return Err(at("solver.rho", "must be positive"));
    }
    if !(solver.alpha > 0.0 && solver.alpha < 2.0) {
        return Err(at("solver.alpha", "must lie in (0, 2)"));
    }
    let mip_defaults = MipSettings::default();
    let mip = MipSettings {
        solver,
        node_limit: s.node_limit.unwrap_or(mip_defaults.node_limit),
        abs_gap: s.abs_gap.unwrap_or(mip_defaults.abs_gap),
        rel_gap: s.rel_gap.unwrap_or(mip_defaults.rel_gap),
        ..mip_defaults
    };
    if !(mip.abs_gap >= 0.0 && mip.rel_gap >= 0.0) {
        return Err(at("solver", "gaps must be non-negative"));
    }

    let rhc = match raw.rhc {
        None => None,
        Some(r) => {
            if r.lookahead < 2 {
                return Err(at("rhc.lookahead", "must be at least 2"));
            }
            if !(r.capture_radius >= 0.0 && r.capture_radius.is_finite()) {
                return Err(at("rhc.capture_radius", "must be non-negative"));
            }
            let goal = match r.goal {
                None => GoalProcess::Static(scenario.goal.position.clone()),
                Some(RawGoalProcess::Static { position }) => {
                    check_point("rhc.goal.position", &position, n)?;
                    GoalProcess::Static(position)
                }
                Some(RawGoalProcess::Rope { center, amplitude, omega }) => {
                    if n != 2 {
                        return Err(at("rhc.goal", "rope goals are planar"));
                    }
                    check_point("rhc.goal.center", &center, n)?;
                    let omega = omega.unwrap_or(DEFAULT_ROPE_OMEGA);
                    if !omega.is_finite() || amplitude.iter().any(|a| !a.is_finite()) {
                        return Err(at("rhc.goal", "amplitude and omega must be finite"));
                    }
                    GoalProcess::Rope { center, amplitude, omega }
                }
            };
            Some(RhcConfig {
                lookahead: r.lookahead,
                max_steps: r.max_steps,
                capture_radius: r.capture_radius,
                goal,
            })
        }
    };

    Ok(ScenarioFile {
        scenario,
        mip,
        rhc,
        output: OutputConfig {
            dir: raw.output.dir,
            round: raw.output.round,
        },
    })
}

fn check_point(path: &str, p: &[f64], n: usize) -> Result<()> {
    if p.len() != n || p.iter().any(|v| !v.is_finite()) {
        return Err(at(path, format!("needs {n} finite entries")));
    }
    Ok(())
}
