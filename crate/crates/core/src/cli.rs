//! Runners behind the command-line subcommands: solve, export, exit code.

use std::fs;
use std::path::{Path, PathBuf};

use crate::cones::{project_to_son, Projection};
use crate::conic::{write_program, SolveStatus};
use crate::error::{Error, Result};
use crate::export::{
    write_trajectory_csv, Summary, NODE_LOG_FILE, ROUNDED_FILE, SUMMARY_FILE, TRAJECTORY_FILE,
};
use crate::mip::write_node_log;
use crate::mpc::{plan, receding_horizon, round_trajectory, RhcStop, Trajectory};
use crate::numerics::SmallMatrix;
use crate::scenario::{load_scenario, ScenarioFile};

pub const EXIT_OK: i32 = 0;
pub const EXIT_OTHER: i32 = 1;
pub const EXIT_INFEASIBLE: i32 = 2;
pub const EXIT_ITER_LIMIT: i32 = 3;
pub const EXIT_INVALID_INPUT: i32 = 4;

pub fn status_exit_code(status: SolveStatus) -> i32 {
    match status {
        SolveStatus::Optimal => EXIT_OK,
        SolveStatus::Infeasible => EXIT_INFEASIBLE,
        SolveStatus::IterLimit => EXIT_ITER_LIMIT,
        SolveStatus::Unbounded => EXIT_OTHER,
    }
}

pub fn error_exit_code(e: &Error) -> i32 {
    match e {
        Error::InvalidInput(_) | Error::Scenario { .. } | Error::Parse { .. } => EXIT_INVALID_INPUT,
        Error::Io { .. } | Error::Numerical(_) => EXIT_OTHER,
    }
}

/// Command-line overrides applied on top of a scenario file.
#[derive(Clone, Debug, Default)]
pub struct RunOptions {
    pub out: Option<PathBuf>,
    pub tol: Option<f64>,
    pub max_iters: Option<usize>,
    /// Recorded in the summary; the solvers are deterministic.
    pub seed: Option<u64>,
    pub lookahead: Option<usize>,
    pub max_steps: Option<usize>,
    pub round: bool,
    pub dump_program: Option<PathBuf>,
    pub timings: bool,
}

impl RunOptions {
    pub fn new() -> Self {
        RunOptions {
            timings: true,
            ..Default::default()
        }
    }

    fn apply(&self, file: &mut ScenarioFile) -> Result<()> {
        if let Some(tol) = self.tol {
            if !(tol > 0.0 && tol < 1.0) {
                return Err(Error::invalid(format!("--tol must lie in (0, 1), got {tol}")));
            }
            file.mip.solver.tol = tol;
        }
        if let Some(m) = self.max_iters {
            if m == 0 {
                return Err(Error::invalid("--max-iters must be positive"));
            }
            file.mip.solver.max_iters = m;
        }
        if self.round {
            file.output.round = true;
        }
        Ok(())
    }
}

/// What a run produced and where it went.
#[derive(Clone, Debug)]
pub struct RunReport {
    pub out_dir: PathBuf,
    pub summary: Summary,
    pub trajectory: Trajectory,
    pub exit_code: i32,
}

fn out_dir(file: &ScenarioFile, opts: &RunOptions) -> PathBuf {
    opts.out
        .clone()
        .or_else(|| file.output.dir.clone())
        .unwrap_or_else(|| Path::new("out").join(&file.scenario.name))
}

fn write(path: PathBuf, bytes: &[u8]) -> Result<()> {
    fs::write(&path, bytes).map_err(|e| Error::io(path, e))
}

fn write_table(path: PathBuf, traj: &Trajectory, timings: bool) -> Result<()> {
    let mut buf = Vec::new();
    write_trajectory_csv(traj, &mut buf, timings).map_err(|e| Error::io(&path, e))?;
    write(path, &buf)
}

fn export(dir: &Path, traj: &Trajectory, summary: &mut Summary, round: bool, timings: bool) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    write_table(dir.join(TRAJECTORY_FILE), traj, timings)?;
    if round && !traj.steps.is_empty() {
        let r = round_trajectory(traj)?;
        summary.max_rounding_distance = Some(r.info.iter().map(|i| i.distance).fold(0.0, f64::max));
        write_table(dir.join(ROUNDED_FILE), &r.trajectory, timings)?;
    }
    write(dir.join(SUMMARY_FILE), summary.to_toml().as_bytes())
}

/// One-shot solve of a scenario file.
pub fn run_plan(scenario: &Path, opts: &RunOptions) -> Result<RunReport> {
    let mut file = load_scenario(scenario)?;
    opts.apply(&mut file)?;
    let dir = out_dir(&file, opts);
    let p = plan(&file.scenario, &file.mip)?;
    if let Some(path) = &opts.dump_program {
        write(path.clone(), write_program(&p.program).as_bytes())?;
    }
    let mut summary = Summary::from_trajectory(
        &file.scenario.name,
        "plan",
        &p.trajectory,
        Some(&file.scenario.goal.position),
        opts.timings,
    );
    summary.seed = opts.seed;
    export(&dir, &p.trajectory, &mut summary, file.output.round, opts.timings)?;
    if !p.node_log.is_empty() {
        let mut buf = Vec::new();
        write_node_log(&p.node_log, &mut buf).map_err(|e| Error::io(dir.join(NODE_LOG_FILE), e))?;
        write(dir.join(NODE_LOG_FILE), &buf)?;
    }
    if p.trajectory.status != SolveStatus::Optimal && opts.dump_program.is_none() {
        // keep the failing program next to the diagnostics
        write(dir.join("program.txt"), write_program(&p.program).as_bytes())?;
    }
    Ok(RunReport {
        out_dir: dir,
        exit_code: status_exit_code(p.trajectory.status),
        summary,
        trajectory: p.trajectory,
    })
}

/// Closed-loop run of a scenario file. Exit code 0 means captured; a step
/// limit maps to the iteration-limit code and an aborted solve to its status.
pub fn run_rhc(scenario: &Path, opts: &RunOptions) -> Result<RunReport> {
    let mut file = load_scenario(scenario)?;
    opts.apply(&mut file)?;
    let Some(mut cfg) = file.rhc.clone() else {
        return Err(Error::Scenario {
            path: "rhc".into(),
            message: "section required for the rhc command".into(),
        });
    };
    if let Some(l) = opts.lookahead {
        cfg.lookahead = l;
    }
    if let Some(m) = opts.max_steps {
        cfg.max_steps = m;
    }
    file.rhc = Some(cfg.clone());
    let settings = file.rhc_settings().expect("rhc section present");
    let dir = out_dir(&file, opts);
    let goal = cfg.goal.clone();
    let outcome = receding_horizon(&file.scenario, &|t| goal.at(t), &settings)?;
    let traj = &outcome.trajectory;
    let mut summary = Summary::from_trajectory(
        &file.scenario.name,
        "rhc",
        traj,
        outcome.goals.last().map(|g| g.as_slice()),
        opts.timings,
    );
    summary.seed = opts.seed;
    let (stop, code) = match &outcome.stop {
        RhcStop::Captured { step } => {
            summary.capture_step = Some(*step);
            ("captured".to_string(), EXIT_OK)
        }
        RhcStop::StepLimit => ("step_limit".to_string(), EXIT_ITER_LIMIT),
        RhcStop::Aborted { step, status } => (format!("aborted at step {step}"), status_exit_code(*status).max(EXIT_OTHER)),
    };
    summary.stop = Some(stop);
    export(&dir, traj, &mut summary, file.output.round, opts.timings)?;
    Ok(RunReport {
        out_dir: dir,
        exit_code: code,
        summary,
        trajectory: outcome.trajectory,
    })
}

/// Parses `"1,0;0,1"` style literals: rows split by `;` or newlines, entries
/// by commas or whitespace.
pub fn parse_matrix(text: &str) -> Result<SmallMatrix> {
    let rows: Vec<Vec<f64>> = text
        .split([';', '\n'])
        .map(str::trim)
        .filter(|r| !r.is_empty() && !r.starts_with('#'))
        .map(|r| {
            r.split(|c: char| c == ',' || c.is_whitespace())
                .filter(|c| !c.is_empty())
                .map(|c| {
                    c.parse::<f64>().map_err(|e| Error::Parse {
                        what: "matrix".into(),
                        message: format!("`{c}`: {e}"),
                    })
                })
                .collect()
        })
        .collect::<Result<_>>()?;
    let n = rows.len();
    if n == 0 || rows.iter().any(|r| r.len() != n) {
        return Err(Error::invalid("matrix must be square with at least one row"));
    }
    SmallMatrix::from_rows(&rows)
}

pub fn run_project(m: &SmallMatrix) -> Result<Projection> {
    project_to_son(m)
}

/// Plain-text rendering used by the `project` subcommand.
pub fn format_projection(p: &Projection) -> String {
    let mut s = String::new();
    for i in 0..p.rotation.rows() {
        let row: Vec<String> = (0..p.rotation.cols()).map(|j| p.rotation[(i, j)].to_string()).collect();
        s.push_str(&row.join(" "));
        s.push('\n');
    }
    s.push_str(&format!("distance {}\nunique {}\n", p.distance, p.unique));
    s
}
