//! Trajectory tables, run summaries and the offline checker that re-reads them.
//!
//! Floats are written with `Display`, the shortest text that parses back to
//! the same `f64`, so a re-read trajectory is bit-identical.

use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::conic::SolveStatus;
use crate::error::{Error, Result};
use crate::mpc::{check_trajectory, Order, Trajectory, TrajectoryCheck, TrajectoryStep};
use crate::numerics::SmallMatrix;

pub const TRAJECTORY_FILE: &str = "trajectory.csv";
pub const ROUNDED_FILE: &str = "trajectory_rounded.csv";
pub const SUMMARY_FILE: &str = "summary.toml";
pub const NODE_LOG_FILE: &str = "nodes.csv";

pub const PLANAR_HEADER: &str = "t,time,r11,r12,r21,r22,x,y,ua,ub,det,solve_time";

/// Column names for a trajectory of the given order.
pub fn trajectory_header(order: Order) -> String {
    match order {
        Order::First => PLANAR_HEADER.to_string(),
        Order::Second => {
            let mat = |p: &str| (1..=3).flat_map(move |i| (1..=3).map(move |j| format!("{p}{i}{j}"))).collect::<Vec<_>>();
            let mut cols = vec!["t".to_string(), "time".to_string()];
            cols.extend(mat("r"));
            cols.extend(["x", "y", "z"].map(String::from));
            cols.extend(mat("u"));
            cols.extend(["px", "py", "pz"].map(String::from));
            cols.extend(mat("w"));
            cols.extend(["det", "solve_time"].map(String::from));
            cols.join(",")
        }
    }
}

fn row_values(order: Order, s: &TrajectoryStep, timings: bool) -> Vec<f64> {
    let mut v = vec![s.time];
    match order {
        Order::First => {
            let (a, b) = (s.rotation[(0, 0)], s.rotation[(1, 0)]);
            v.extend([a, -b, b, a]);
            v.extend(&s.position);
            v.extend(&s.input);
        }
        Order::Second => {
            v.extend(s.rotation.as_slice());
            v.extend(&s.position);
            v.extend(&s.input);
            v.extend(&s.velocity);
            v.extend(&s.angular);
        }
    }
    v.push(s.det);
    v.push(if timings { s.solve_time } else { 0.0 });
    v
}

/// Writes the table. With `timings = false` the solve-time column is zero so
/// repeated runs produce identical bytes.
pub fn write_trajectory_csv<W: Write>(traj: &Trajectory, mut out: W, timings: bool) -> std::io::Result<()> {
    writeln!(out, "{}", trajectory_header(traj.order))?;
    for s in &traj.steps {
        let vals = row_values(traj.order, s, timings);
        let cells: Vec<String> = vals.iter().map(|v| v.to_string()).collect();
        writeln!(out, "{},{}", s.t, cells.join(","))?;
    }
    Ok(())
}

/// Parses a table written by [`write_trajectory_csv`]. Step length and body
/// vector are not in the table and come from the caller.
pub fn read_trajectory_csv(text: &str, step: f64, body_vector: &[f64]) -> Result<Trajectory> {
    let bad = |line: usize, msg: String| Error::Parse {
        what: format!("trajectory line {line}"),
        message: msg,
    };
    let mut lines = text.lines();
    let header = lines.next().ok_or_else(|| bad(1, "empty file".into()))?;
    let order = if header == trajectory_header(Order::First) {
        Order::First
    } else if header == trajectory_header(Order::Second) {
        Order::Second
    } else {
        return Err(bad(1, format!("unrecognised header `{header}`")));
    };
    let width = match order {
        Order::First => 12,
        Order::Second => 37,
    };
    let mut steps = Vec::new();
    for (k, line) in lines.enumerate() {
        let ln = k + 2;
        if line.trim().is_empty() {
            continue;
        }
        let cells: Vec<&str> = line.split(',').collect();
        if cells.len() != width {
            return Err(bad(ln, format!("expected {width} columns, got {}", cells.len())));
        }
        let t: usize = cells[0].parse().map_err(|e| bad(ln, format!("column t: {e}")))?;
        let v = cells[1..]
            .iter()
            .map(|c| c.parse::<f64>())
            .collect::<std::result::Result<Vec<f64>, _>>()
            .map_err(|e| bad(ln, e.to_string()))?;
        if v.iter().any(|x| !x.is_finite()) {
            return Err(bad(ln, "non-finite value".into()));
        }
        let s = match order {
            Order::First => {
                let (a, b) = (v[1], v[3]);
                TrajectoryStep {
                    t,
                    time: v[0],
                    rotation: SmallMatrix::from_rows(&[[a, -b], [b, a]])?,
                    position: v[5..7].to_vec(),
                    input: v[7..9].to_vec(),
                    velocity: Vec::new(),
                    angular: Vec::new(),
                    det: v[9],
                    solve_time: v[10],
                }
            }
            Order::Second => TrajectoryStep {
                t,
                time: v[0],
                rotation: SmallMatrix::from_row_major(3, 3, v[1..10].to_vec())?,
                position: v[10..13].to_vec(),
                input: v[13..22].to_vec(),
                velocity: v[22..25].to_vec(),
                angular: v[25..34].to_vec(),
                det: v[34],
                solve_time: v[35],
            },
        };
        steps.push(s);
    }
    Ok(Trajectory {
        dim: match order {
            Order::First => 2,
            Order::Second => 3,
        },
        order,
        step,
        body_vector: body_vector.to_vec(),
        steps,
        status: SolveStatus::Optimal,
        objective: f64::NAN,
        wall_time: 0.0,
        iterations: 0,
        nodes: 0,
    })
}

/// Sidecar record written next to every exported table.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Summary {
    pub name: String,
    /// `plan` or `rhc`.
    pub mode: String,
    pub status: String,
    pub objective: Option<f64>,
    pub order: String,
    pub step: f64,
    pub body_vector: Vec<f64>,
    pub rows: usize,
    pub min_det: Option<f64>,
    pub max_det: Option<f64>,
    /// Distance from the last row to the (last) goal.
    pub goal_distance: Option<f64>,
    pub path_length: Option<f64>,
    pub wall_time: f64,
    pub iterations: usize,
    pub nodes: usize,
    pub seed: Option<u64>,
    pub stop: Option<String>,
    pub capture_step: Option<usize>,
    pub max_rounding_distance: Option<f64>,
}

pub fn order_name(order: Order) -> &'static str {
    match order {
        Order::First => "first",
        Order::Second => "second",
    }
}

impl Summary {
    /// Fills the trajectory-derived fields; the caller sets the rest.
    pub fn from_trajectory(name: &str, mode: &str, traj: &Trajectory, goal: Option<&[f64]>, timings: bool) -> Self {
        let finite = |v: f64| v.is_finite().then_some(v);
        let has_rows = !traj.steps.is_empty();
        let goal_distance = match (goal, traj.last()) {
            (Some(g), Some(last)) => Some(last.position.iter().zip(g).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt()),
            _ => None,
        };
        let path_length = has_rows.then(|| {
            traj.steps
                .windows(2)
                .map(|w| w[0].position.iter().zip(&w[1].position).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt())
                .sum()
        });
        Summary {
            name: name.to_string(),
            mode: mode.to_string(),
            status: traj.status.to_string(),
            objective: finite(traj.objective),
            order: order_name(traj.order).to_string(),
            step: traj.step,
            body_vector: traj.body_vector.clone(),
            rows: traj.steps.len(),
            min_det: has_rows.then(|| traj.min_det()),
            max_det: has_rows.then(|| traj.max_det()),
            goal_distance,
            path_length,
            wall_time: if timings { traj.wall_time } else { 0.0 },
            iterations: traj.iterations,
            nodes: traj.nodes,
            seed: None,
            stop: None,
            capture_step: None,
            max_rounding_distance: None,
        }
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("summary fields are plain values")
    }

    pub fn parse(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Parse {
            what: "summary".into(),
            message: e.message().to_string(),
        })
    }
}

/// Result of re-reading an export directory.
#[derive(Clone, Debug)]
pub struct Verification {
    pub summary: Summary,
    pub check: TrajectoryCheck,
    pub rows: usize,
    /// Largest gap between a stored det column and the recomputed determinant.
    pub det_mismatch: f64,
}

impl Verification {
    pub fn passes(&self, dynamics_tol: f64, hull_tol: f64) -> bool {
        self.check.dynamics_residual <= dynamics_tol && self.check.hull_violation <= hull_tol && self.det_mismatch <= 1e-12
    }
}

/// Re-reads `summary.toml` and `trajectory.csv` from `dir` and checks the
/// dynamics and hull membership row by row.
pub fn verify_export(dir: &Path) -> Result<Verification> {
    let read = |name: &str| {
        let p = dir.join(name);
        std::fs::read_to_string(&p).map_err(|e| Error::io(p, e))
    };
    let summary = Summary::parse(&read(SUMMARY_FILE)?)?;
    let traj = read_trajectory_csv(&read(TRAJECTORY_FILE)?, summary.step, &summary.body_vector)?;
    if order_name(traj.order) != summary.order {
        return Err(Error::invalid("summary order does not match the trajectory header"));
    }
    if traj.steps.len() != summary.rows {
        return Err(Error::invalid(format!(
            "summary lists {} rows, table has {}",
            summary.rows,
            traj.steps.len()
        )));
    }
    let det_mismatch = traj
        .steps
        .iter()
        .map(|s| {
            let d = match traj.order {
                Order::First => s.rotation[(0, 0)].powi(2) + s.rotation[(1, 0)].powi(2),
                Order::Second => s.rotation.determinant(),
            };
            (d - s.det).abs()
        })
        .fold(0.0, f64::max);
    Ok(Verification {
        check: check_trajectory(&traj),
        rows: traj.steps.len(),
        summary,
        det_mismatch,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mpc::{advance, VehicleState};

    fn planar_traj() -> Trajectory {
        let mut state = VehicleState::planar(1.0, 0.0, 0.0, 0.0);
        let mut steps = Vec::new();
        let inputs = [[-0.25, 0.5], [0.1, -0.3], [0.0, 0.0]];
        for (t, u) in inputs.iter().enumerate() {
            let det = state.rotation[(0, 0)].powi(2) + state.rotation[(1, 0)].powi(2);
            steps.push(TrajectoryStep {
                t,
                time: t as f64,
                rotation: state.rotation.clone(),
                position: state.position.clone(),
                input: u.to_vec(),
                velocity: Vec::new(),
                angular: Vec::new(),
                det,
                solve_time: 0.125,
            });
            state = advance(Order::First, 1.0, &[1.0, 0.0], &state, u);
        }
        Trajectory {
            dim: 2,
            order: Order::First,
            step: 1.0,
            body_vector: vec![1.0, 0.0],
            steps,
            status: SolveStatus::Optimal,
            objective: 1.5,
            wall_time: 0.5,
            iterations: 10,
            nodes: 1,
        }
    }

    #[test]
    fn spatial_header_has_all_columns() {
        let h = trajectory_header(Order::Second);
        assert_eq!(h.split(',').count(), 37);
        assert!(h.starts_with("t,time,r11,r12,r13,r21"));
        assert!(h.ends_with("w33,det,solve_time"));
    }

    #[test]
    fn csv_round_trip_is_exact() {
        let traj = planar_traj();
        let mut buf = Vec::new();
        write_trajectory_csv(&traj, &mut buf, true).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with(PLANAR_HEADER));
        let back = read_trajectory_csv(&text, 1.0, &[1.0, 0.0]).unwrap();
        assert_eq!(back.steps, traj.steps);
        assert!(check_trajectory(&back).dynamics_residual < 1e-15);
    }

    #[test]
    fn timings_can_be_suppressed() {
        let mut buf = Vec::new();
        write_trajectory_csv(&planar_traj(), &mut buf, false).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.lines().skip(1).all(|l| l.ends_with(",0")));
    }

    #[test]
    fn reader_rejects_bad_rows() {
        assert!(read_trajectory_csv("a,b\n", 1.0, &[1.0, 0.0]).is_err());
        let text = format!("{PLANAR_HEADER}\n0,0,1,0,0,1,0,0,0,0,1\n");
        assert!(read_trajectory_csv(&text, 1.0, &[1.0, 0.0]).is_err());
        let text = format!("{PLANAR_HEADER}\n0,0,1,0,0,1,0,0,0,0,1,NaN\n");
        assert!(read_trajectory_csv(&text, 1.0, &[1.0, 0.0]).is_err());
    }

    #[test]
    fn summary_round_trip() {
        let mut s = Summary::from_trajectory("x", "plan", &planar_traj(), Some(&[1.0, 1.0]), true);
        s.seed = Some(7);
        let back = Summary::parse(&s.to_toml()).unwrap();
        assert_eq!(back, s);
        assert_eq!(s.rows, 3);
        assert!(s.path_length.unwrap() > 0.0);
    }
}
