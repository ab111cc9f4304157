//! Branch-and-bound over binary variables, using the conic solver for every
//! node relaxation, plus big-M builders for rectangular obstacles and
//! minimum-speed (minimum determinant) regions.

use std::cmp::Ordering;
use std::collections::{BTreeMap, BinaryHeap};
use std::io::Write;

use crate::conic::{
    solve_relaxation, warm_start, ConicProgram, ConstraintBlock, SolveResult, SolveStatus, SolverSettings,
};
use crate::error::{Error, Result};

/// Big-M used for obstacle rows unless a scenario overrides it.
pub const DEFAULT_BIG_M: f64 = 100.0;
/// Binary values within this distance of 0 or 1 count as integral.
pub const INTEGRALITY_TOL: f64 = 1e-6;

/// Axis-aligned rectangle the planar position must stay out of.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RectObstacle {
    pub x_min: f64,
    pub y_min: f64,
    pub x_max: f64,
    pub y_max: f64,
}

impl RectObstacle {
    pub fn new(x_min: f64, y_min: f64, x_max: f64, y_max: f64) -> Result<Self> {
        let o = RectObstacle { x_min, y_min, x_max, y_max };
        o.validate()?;
        Ok(o)
    }

    pub fn validate(&self) -> Result<()> {
        let finite = [self.x_min, self.y_min, self.x_max, self.y_max].iter().all(|v| v.is_finite());
        if !finite || self.x_min >= self.x_max || self.y_min >= self.y_max {
            return Err(Error::invalid(format!("degenerate obstacle {self:?}")));
        }
        Ok(())
    }

    /// Strictly inside, shrunk by `margin`.
    pub fn contains(&self, x: f64, y: f64, margin: f64) -> bool {
        x > self.x_min + margin && x < self.x_max - margin && y > self.y_min + margin && y < self.y_max - margin
    }
}

/// Open regular polygon around the origin of the `(a, b)` plane that the
/// rotation state must avoid. Its inradius is `sqrt(min_det)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MinSpeedRegion {
    pub min_det: f64,
    pub faces: usize,
}

impl MinSpeedRegion {
    pub fn new(min_det: f64, faces: usize) -> Result<Self> {
        let r = MinSpeedRegion { min_det, faces };
        r.validate()?;
        Ok(r)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.min_det > 0.0 && self.min_det < 1.0) {
            return Err(Error::invalid(format!(
                "min_det must lie in (0, 1), got {}",
                self.min_det
            )));
        }
        if self.faces < 4 || self.faces % 2 != 0 {
            return Err(Error::invalid(format!(
                "min-speed polygon needs an even face count >= 4, got {}",
                self.faces
            )));
        }
        Ok(())
    }

    pub fn inradius(&self) -> f64 {
        self.min_det.sqrt()
    }

    /// Unit outward normal of face `k`.
    pub fn normal(&self, k: usize) -> (f64, f64) {
        let theta = 2.0 * std::f64::consts::PI * k as f64 / self.faces as f64;
        (theta.cos(), theta.sin())
    }

    /// True when `(a, b)` lies outside the excluded polygon up to `tol`.
    pub fn admits(&self, a: f64, b: f64, tol: f64) -> bool {
        let r = self.inradius();
        (0..self.faces).any(|k| {
            let (c, s) = self.normal(k);
            c * a + s * b >= r - tol
        })
    }
}

/// Adds the four disjunctive half-plane rows and the cardinality row that
/// keep `(x, y)` outside `obstacle`. Returns the new binaries.
pub fn add_obstacle(
    prog: &mut ConicProgram,
    obstacle: &RectObstacle,
    point: (usize, usize),
    big_m: f64,
) -> Result<[usize; 4]> {
    obstacle.validate()?;
    check_big_m(big_m)?;
    let (x, y) = point;
    let bins = prog.add_variables(4);
    let a: [usize; 4] = std::array::from_fn(|k| bins.start + k);
    for &ak in &a {
        prog.mark_binary(ak)?;
    }
    let rows = [
        (vec![(x, 1.0), (a[0], -big_m)], obstacle.x_min),
        (vec![(x, -1.0), (a[1], -big_m)], -obstacle.x_max),
        (vec![(y, 1.0), (a[2], -big_m)], obstacle.y_min),
        (vec![(y, -1.0), (a[3], -big_m)], -obstacle.y_max),
        (a.iter().map(|&k| (k, 1.0)).collect(), 3.0),
    ];
    for (row, rhs) in rows {
        prog.add_block(ConstraintBlock::less_equal(row, rhs)?)?;
    }
    Ok(a)
}

/// Adds one big-M face row per polygon side plus the row forcing at least
/// one face to hold. Returns the new binaries.
pub fn add_min_speed(
    prog: &mut ConicProgram,
    region: &MinSpeedRegion,
    rot: (usize, usize),
    big_m: f64,
) -> Result<Vec<usize>> {
    region.validate()?;
    check_big_m(big_m)?;
    let (a, b) = rot;
    let r = region.inradius();
    let bins = prog.add_variables(region.faces);
    let c: Vec<usize> = bins.collect();
    for &ck in &c {
        prog.mark_binary(ck)?;
    }
    for (k, &ck) in c.iter().enumerate() {
        // cos·a + sin·b ≥ r − M·c
        let (cs, sn) = region.normal(k);
        let row = vec![(a, -cs), (b, -sn), (ck, -big_m)];
        prog.add_block(ConstraintBlock::less_equal(row, -r)?)?;
    }
    let card = c.iter().map(|&k| (k, 1.0)).collect();
    prog.add_block(ConstraintBlock::less_equal(card, (region.faces - 1) as f64)?)?;
    Ok(c)
}

fn check_big_m(big_m: f64) -> Result<()> {
    if !(big_m > 0.0 && big_m.is_finite()) {
        return Err(Error::invalid(format!("big-M must be positive, got {big_m}")));
    }
    Ok(())
}

#[derive(Clone, Debug)]
pub struct MipSettings {
    pub solver: SolverSettings,
    pub node_limit: usize,
    pub abs_gap: f64,
    pub rel_gap: f64,
    /// Depth-first until the first incumbent, then best-bound.
    pub dive: bool,
}

impl Default for MipSettings {
    fn default() -> Self {
        MipSettings {
            solver: SolverSettings::default(),
            node_limit: 100_000,
            abs_gap: 1e-6,
            rel_gap: 1e-6,
            dive: true,
        }
    }
}

/// Partial assignment of binaries explored by the search.
#[derive(Clone, Debug, PartialEq)]
pub struct BnbNode {
    pub id: usize,
    pub parent: Option<usize>,
    pub fixed: BTreeMap<usize, bool>,
    /// Lower bound on every completion of `fixed`.
    pub bound: f64,
    pub depth: usize,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum NodeOutcome {
    Branched,
    Integral,
    PrunedBound,
    PrunedInfeasible,
    Unresolved,
}

impl NodeOutcome {
    pub fn as_str(&self) -> &'static str {
        match self {
            NodeOutcome::Branched => "branched",
            NodeOutcome::Integral => "integral",
            NodeOutcome::PrunedBound => "pruned_bound",
            NodeOutcome::PrunedInfeasible => "pruned_infeasible",
            NodeOutcome::Unresolved => "unresolved",
        }
    }
}

/// One line of the node log.
#[derive(Clone, Debug, PartialEq)]
pub struct NodeRecord {
    pub node: usize,
    pub parent: Option<usize>,
    pub depth: usize,
    /// Relaxation objective at this node (NaN when it had none).
    pub bound: f64,
    /// Incumbent after processing the node (infinite if none yet).
    pub incumbent: f64,
    pub outcome: NodeOutcome,
    pub branch_var: Option<usize>,
    pub iterations: usize,
}

pub const NODE_LOG_HEADER: &str = "node,parent,depth,bound,incumbent,status,branch_var,iterations";

pub fn write_node_log<W: Write>(records: &[NodeRecord], mut out: W) -> std::io::Result<()> {
    writeln!(out, "{NODE_LOG_HEADER}")?;
    for r in records {
        let opt = |v: Option<usize>| v.map(|v| v.to_string()).unwrap_or_default();
        writeln!(
            out,
            "{},{},{},{},{},{},{},{}",
            r.node,
            opt(r.parent),
            r.depth,
            r.bound,
            r.incumbent,
            r.outcome.as_str(),
            opt(r.branch_var),
            r.iterations
        )?;
    }
    Ok(())
}

#[derive(Clone, Debug)]
pub struct MipResult {
    pub result: SolveResult,
    /// Relaxations solved; nodes pruned by bound before solving are not counted.
    pub nodes: usize,
    /// Proven lower bound on the optimum.
    pub best_bound: f64,
    pub log: Vec<NodeRecord>,
}

struct Queued {
    node: BnbNode,
    warm: Option<SolveResult>,
}

impl PartialEq for Queued {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Queued {}

impl PartialOrd for Queued {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Queued {
    // BinaryHeap pops the greatest: lowest bound, then deepest, then oldest.
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .node
            .bound
            .total_cmp(&self.node.bound)
            .then(self.node.depth.cmp(&other.node.depth))
            .then(other.node.id.cmp(&self.node.id))
    }
}

fn most_fractional(x: &[f64], prog: &ConicProgram) -> Option<usize> {
    let mut best: Option<(usize, f64)> = None;
    for &i in prog.binaries() {
        let frac = (x[i] - x[i].round()).abs();
        if frac > INTEGRALITY_TOL && best.is_none_or(|(_, f)| frac > f) {
            best = Some((i, frac));
        }
    }
    best.map(|(i, _)| i)
}

fn node_program(base: &ConicProgram, fixed: &BTreeMap<usize, bool>) -> Result<ConicProgram> {
    let pins: Vec<(usize, f64)> = fixed.iter().map(|(&i, &v)| (i, if v { 1.0 } else { 0.0 })).collect();
    base.relaxed().with_fixed(&pins)
}

/// Branch-and-bound driver. A program without binaries is solved directly.
pub fn solve_mip(prog: &ConicProgram, settings: &MipSettings) -> Result<MipResult> {
    prog.validate()?;
    if prog.binaries().is_empty() {
        let r = solve_relaxation(prog, &settings.solver)?;
        let bound = r.objective;
        return Ok(MipResult {
            log: vec![NodeRecord {
                node: 0,
                parent: None,
                depth: 0,
                bound,
                incumbent: bound,
                outcome: NodeOutcome::Integral,
                branch_var: None,
                iterations: r.iterations,
            }],
            result: r,
            nodes: 1,
            best_bound: bound,
        });
    }
    if settings.node_limit == 0 {
        return Err(Error::invalid("node_limit must be positive"));
    }

    let feas_tol = 10.0 * settings.solver.tol;
    let mut heap = BinaryHeap::new();
    heap.push(Queued {
        node: BnbNode {
            id: 0,
            parent: None,
            fixed: BTreeMap::new(),
            bound: f64::NEG_INFINITY,
            depth: 0,
        },
        warm: None,
    });
    let mut next_id = 1;
    let mut incumbent: Option<SolveResult> = None;
    let mut inc_obj = f64::INFINITY;
    let mut log = Vec::new();
    let mut explored = 0;
    let mut last_relaxation: Option<SolveResult> = None;
    let prune_at = |inc: f64| inc - settings.abs_gap.max(settings.rel_gap * inc.abs());

    // Until the first incumbent the search dives: it follows the child that
    // agrees with the rounded relaxation instead of the best bound.
    let mut dive: Option<Queued> = None;
    loop {
        let next = match dive.take() {
            Some(d) if incumbent.is_none() => Some(d),
            Some(d) => {
                heap.push(d);
                heap.pop()
            }
            None => heap.pop(),
        };
        let Some(Queued { node, warm }) = next else { break };
        if node.bound >= prune_at(inc_obj) {
            log.push(NodeRecord {
                node: node.id,
                parent: node.parent,
                depth: node.depth,
                bound: f64::NAN,
                incumbent: inc_obj,
                outcome: NodeOutcome::PrunedBound,
                branch_var: None,
                iterations: 0,
            });
            continue;
        }
        if explored >= settings.node_limit {
            heap.push(Queued { node, warm });
            break;
        }
        explored += 1;
        let mut record = NodeRecord {
            node: node.id,
            parent: node.parent,
            depth: node.depth,
            bound: f64::NAN,
            incumbent: inc_obj,
            outcome: NodeOutcome::PrunedBound,
            branch_var: None,
            iterations: 0,
        };
        let p = node_program(prog, &node.fixed)?;
        let mut s = settings.solver.clone();
        s.warm_start = match &warm {
            Some(w) => warm_start(w, &p),
            None => settings.solver.warm_start.clone(),
        };
        if inc_obj.is_finite() {
            s.cutoff = Some(prune_at(inc_obj));
        }
        let r = solve_relaxation(&p, &s)?;
        record.iterations = r.iterations;

        match r.status {
            SolveStatus::Infeasible => {
                record.outcome = NodeOutcome::PrunedInfeasible;
                log.push(record);
                continue;
            }
            SolveStatus::Unbounded => {
                return Err(Error::Numerical("relaxation is unbounded; branch-and-bound needs a bounded objective".into()));
            }
            _ => {}
        }
        let solved = r.status == SolveStatus::Optimal;
        // an unfinished solve may still carry a usable dual bound
        let bound = if solved { r.objective.max(node.bound) } else { r.bound.max(node.bound) };
        record.bound = if solved { r.objective } else { f64::NAN };
        if !solved && r.bound >= prune_at(inc_obj) {
            record.bound = r.bound;
            log.push(record);
            continue;
        }
        if solved && bound >= prune_at(inc_obj) {
            log.push(record);
            continue;
        }

        match most_fractional(&r.x, prog) {
            Some(var) => {
                record.outcome = NodeOutcome::Branched;
                record.branch_var = Some(var);
                let preferred = r.x[var] >= 0.5;
                for value in [false, true] {
                    let mut fixed = node.fixed.clone();
                    fixed.insert(var, value);
                    let child = Queued {
                        node: BnbNode {
                            id: next_id,
                            parent: Some(node.id),
                            fixed,
                            bound,
                            depth: node.depth + 1,
                        },
                        warm: Some(r.clone()),
                    };
                    next_id += 1;
                    if settings.dive && incumbent.is_none() && value == preferred {
                        dive = Some(child);
                    } else {
                        heap.push(child);
                    }
                }
            }
            None => {
                // Integral relaxation: re-solve with every binary pinned.
                let mut fixed = node.fixed.clone();
                for &i in prog.binaries() {
                    fixed.insert(i, r.x[i] > 0.5);
                }
                let pinned = node_program(prog, &fixed)?;
                let mut s = settings.solver.clone();
                s.warm_start = warm_start(&r, &pinned);
                let mut done = solve_relaxation(&pinned, &s)?;
                record.iterations += done.iterations;
                if done.status == SolveStatus::Optimal {
                    for (&i, &v) in &fixed {
                        done.x[i] = if v { 1.0 } else { 0.0 };
                    }
                    done.objective = prog.objective(&done.x);
                    if prog.max_violation(&done.x) <= feas_tol && done.objective < inc_obj {
                        inc_obj = done.objective;
                        incumbent = Some(done);
                    }
                    record.outcome = NodeOutcome::Integral;
                } else if done.status == SolveStatus::Infeasible {
                    record.outcome = NodeOutcome::PrunedInfeasible;
                } else {
                    record.outcome = NodeOutcome::Unresolved;
                }
            }
        }
        if !solved && record.outcome == NodeOutcome::Branched {
            record.outcome = NodeOutcome::Unresolved;
        }
        record.incumbent = inc_obj;
        log.push(record);
        last_relaxation = Some(r);
    }

    if let Some(d) = dive {
        heap.push(d);
    }
    let open_bound = heap.iter().map(|q| q.node.bound).fold(f64::INFINITY, f64::min);
    let limit_hit = !heap.is_empty();
    let best_bound = open_bound.min(inc_obj);
    let result = match incumbent {
        Some(mut r) => {
            r.status = if limit_hit { SolveStatus::IterLimit } else { SolveStatus::Optimal };
            r
        }
        None => {
            let mut r = last_relaxation.unwrap_or_else(|| empty_result(prog));
            r.status = if limit_hit { SolveStatus::IterLimit } else { SolveStatus::Infeasible };
            r
        }
    };
    Ok(MipResult {
        result,
        nodes: explored,
        best_bound,
        log,
    })
}

fn empty_result(prog: &ConicProgram) -> SolveResult {
    SolveResult {
        status: SolveStatus::Infeasible,
        x: vec![0.0; prog.num_vars()],
        objective: f64::INFINITY,
        primal_residual: f64::INFINITY,
        dual_residual: f64::INFINITY,
        gap: f64::INFINITY,
        iterations: 0,
        slack: Vec::new(),
        dual: Vec::new(),
        warm_started: false,
        warm_start_rejected: false,
        rho: 0.0,
        bound: f64::NEG_INFINITY,
    }
}

/// Exhaustive reference: pins every binary assignment and keeps the best
/// optimal completion. Exponential; meant for small test instances.
pub fn enumerate_assignments(prog: &ConicProgram, settings: &SolverSettings) -> Result<Option<(f64, Vec<f64>)>> {
    let bins: Vec<usize> = prog.binaries().iter().copied().collect();
    if bins.len() > 20 {
        return Err(Error::invalid("too many binaries to enumerate"));
    }
    let mut best: Option<(f64, Vec<f64>)> = None;
    for mask in 0u32..(1u32 << bins.len()) {
        let fixed: BTreeMap<usize, bool> = bins.iter().enumerate().map(|(k, &i)| (i, mask >> k & 1 == 1)).collect();
        let p = node_program(prog, &fixed)?;
        let r = solve_relaxation(&p, settings)?;
        if r.status == SolveStatus::Optimal && best.as_ref().is_none_or(|(b, _)| r.objective < *b) {
            best = Some((r.objective, r.x));
        }
    }
    Ok(best)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cones::{so2_hull_rows, so3_hull_rows};
    use crate::conic::solve;

    fn point_program(target: (f64, f64)) -> ConicProgram {
        let mut p = ConicProgram::new(2);
        p.add_squared_affine(&[(0, 1.0)], -target.0, 1.0).unwrap();
        p.add_squared_affine(&[(1, 1.0)], -target.1, 1.0).unwrap();
        p
    }

    fn pinned(prog: &ConicProgram, values: &[(usize, f64)]) -> SolveStatus {
        let p = prog.relaxed().with_fixed(values).unwrap();
        solve(&p, &SolverSettings::default()).unwrap().status
    }

    #[test]
    fn obstacle_face_assignment_outside() {
        let mut p = ConicProgram::new(2);
        let obs = RectObstacle::new(1.0, 1.0, 2.0, 2.0).unwrap();
        let a = add_obstacle(&mut p, &obs, (0, 1), DEFAULT_BIG_M).unwrap();
        let mut fix = vec![(0, 0.0), (1, 0.0)];
        fix.extend(a.iter().zip([0.0, 1.0, 1.0, 1.0]).map(|(&i, v)| (i, v)));
        assert_eq!(pinned(&p, &fix), SolveStatus::Optimal);
    }

    #[test]
    fn obstacle_interior_point_excluded_by_every_assignment() {
        let mut p = ConicProgram::new(2);
        let obs = RectObstacle::new(1.0, 1.0, 2.0, 2.0).unwrap();
        let a = add_obstacle(&mut p, &obs, (0, 1), DEFAULT_BIG_M).unwrap();
        for mask in 0..16u32 {
            let mut fix = vec![(0, 1.5), (1, 1.5)];
            fix.extend(a.iter().enumerate().map(|(k, &i)| (i, (mask >> k & 1) as f64)));
            assert_eq!(pinned(&p, &fix), SolveStatus::Infeasible, "mask {mask:04b}");
        }
    }

    #[test]
    fn all_ones_violates_cardinality() {
        let mut p = ConicProgram::new(2);
        let obs = RectObstacle::new(1.0, 1.0, 2.0, 2.0).unwrap();
        let a = add_obstacle(&mut p, &obs, (0, 1), DEFAULT_BIG_M).unwrap();
        let x: Vec<f64> = (0..p.num_vars()).map(|i| if a.contains(&i) { 1.0 } else { -50.0 }).collect();
        assert!(p.blocks().last().unwrap().violation(&x) > 0.5);
    }

    #[test]
    fn min_speed_examples() {
        let region = MinSpeedRegion::new(0.5, 4).unwrap();
        assert!(region.admits(1.0, 0.0, 0.0));
        assert!(!region.admits(0.5, 0.5, 0.0));
        let r3 = MinSpeedRegion::new(0.3, 4).unwrap();
        assert!((r3.inradius() - 0.3f64.sqrt()).abs() < 1e-15);
        assert!(r3.admits(0.548, 0.0, 0.0));
        assert!(!r3.admits(0.547, 0.0, 0.0));
        // square of half-width sqrt(2)/2 at min_det = 1/2
        assert!((region.inradius() - std::f64::consts::FRAC_1_SQRT_2).abs() < 1e-15);

        let mut p = ConicProgram::new(2);
        p.add_block(so2_hull_rows(0, 1, 2).unwrap()).unwrap();
        let c = add_min_speed(&mut p, &region, (0, 1), 2.0).unwrap();
        let status_at = |ab: (f64, f64), mask: u32| {
            let mut fix = vec![(0, ab.0), (1, ab.1)];
            fix.extend(c.iter().enumerate().map(|(k, &i)| (i, (mask >> k & 1) as f64)));
            pinned(&p, &fix)
        };
        for mask in 0..16 {
            assert_eq!(status_at((0.5, 0.5), mask), SolveStatus::Infeasible, "mask {mask:04b}");
        }
        assert_eq!(status_at((1.0, 0.0), 0b1110), SolveStatus::Optimal);
    }

    #[test]
    fn invalid_regions_and_m() {
        assert!(MinSpeedRegion::new(1.0, 4).is_err());
        assert!(MinSpeedRegion::new(0.5, 5).is_err());
        assert!(MinSpeedRegion::new(0.5, 2).is_err());
        assert!(RectObstacle::new(1.0, 0.0, 1.0, 2.0).is_err());
        let mut p = ConicProgram::new(2);
        let obs = RectObstacle::new(0.0, 0.0, 1.0, 1.0).unwrap();
        assert!(add_obstacle(&mut p, &obs, (0, 1), 0.0).is_err());
        assert!(add_obstacle(&mut p, &obs, (0, 1), -1.0).is_err());
    }

    #[test]
    fn no_binaries_matches_plain_solve() {
        let p = point_program((0.3, -0.2));
        let a = solve(&p, &SolverSettings::default()).unwrap();
        let b = solve_mip(&p, &MipSettings::default()).unwrap();
        assert_eq!(a.x, b.result.x);
        assert_eq!(b.result.status, SolveStatus::Optimal);
    }

    #[test]
    fn nearest_point_outside_box_matches_enumeration() {
        let mut p = point_program((1.4, 1.45));
        let obs = RectObstacle::new(1.0, 1.0, 2.0, 2.0).unwrap();
        add_obstacle(&mut p, &obs, (0, 1), 10.0).unwrap();
        let r = solve_mip(&p, &MipSettings::default()).unwrap();
        assert_eq!(r.result.status, SolveStatus::Optimal);
        // nearest face is x = 1 at distance 0.4
        assert!((r.result.objective - 0.16).abs() < 1e-5, "{}", r.result.objective);
        let (best, _) = enumerate_assignments(&p, &SolverSettings::default()).unwrap().unwrap();
        assert!((best - r.result.objective).abs() < 1e-5);
        for &i in p.binaries() {
            let v = r.result.x[i];
            assert!(v == 0.0 || v == 1.0);
        }
    }

    #[test]
    fn big_m_inert_when_all_relaxed() {
        let mut p = point_program((1.5, 1.5));
        let free = solve(&p, &SolverSettings::default()).unwrap();
        let obs = RectObstacle::new(1.0, 1.0, 2.0, 2.0).unwrap();
        let a = add_obstacle(&mut p, &obs, (0, 1), DEFAULT_BIG_M).unwrap();
        // last row (cardinality) removed to relax every face at once
        let mut q = ConicProgram::new(p.num_vars());
        for (i, j, v) in p.quadratic() {
            q.add_quadratic(i, j, v).unwrap();
        }
        for (i, &v) in p.linear().iter().enumerate() {
            q.add_linear(i, v).unwrap();
        }
        q.add_offset(p.offset());
        for b in &p.blocks()[..4] {
            q.add_block(b.clone()).unwrap();
        }
        let fixed = q.with_fixed(&a.map(|i| (i, 1.0))).unwrap();
        let r = solve(&fixed, &SolverSettings::default()).unwrap();
        assert!((r.objective - free.objective).abs() < 1e-6);
    }

    #[test]
    fn infeasible_mip_reported() {
        let mut p = point_program((0.0, 0.0));
        let obs = RectObstacle::new(-1.0, -1.0, 1.0, 1.0).unwrap();
        add_obstacle(&mut p, &obs, (0, 1), 10.0).unwrap();
        p.set_bounds(0, -0.5, 0.5).unwrap();
        p.set_bounds(1, -0.5, 0.5).unwrap();
        let r = solve_mip(&p, &MipSettings::default()).unwrap();
        assert_eq!(r.result.status, SolveStatus::Infeasible);
    }

    #[test]
    fn node_limit_returns_incumbent_or_limit() {
        let mut p = point_program((1.4, 1.45));
        let obs = RectObstacle::new(1.0, 1.0, 2.0, 2.0).unwrap();
        add_obstacle(&mut p, &obs, (0, 1), 10.0).unwrap();
        let s = MipSettings {
            node_limit: 1,
            ..Default::default()
        };
        let r = solve_mip(&p, &s).unwrap();
        assert_eq!(r.result.status, SolveStatus::IterLimit);
        assert_eq!(r.nodes, 1);
        assert!(r.best_bound <= 0.16 + 1e-6);
    }

    #[test]
    fn children_bounds_dominate_parents() {
        let mut p = point_program((1.4, 1.45));
        for obs in [RectObstacle::new(1.0, 1.0, 2.0, 2.0).unwrap(), RectObstacle::new(0.0, 1.2, 0.9, 3.0).unwrap()] {
            add_obstacle(&mut p, &obs, (0, 1), 10.0).unwrap();
        }
        let r = solve_mip(&p, &MipSettings::default()).unwrap();
        let bounds: BTreeMap<usize, f64> = r.log.iter().map(|l| (l.node, l.bound)).collect();
        for rec in &r.log {
            if let (Some(parent), false) = (rec.parent, rec.bound.is_nan()) {
                let pb = bounds[&parent];
                assert!(rec.bound >= pb - 1e-5, "node {} bound {} < parent {}", rec.node, rec.bound, pb);
            }
        }
        let mut buf = Vec::new();
        write_node_log(&r.log, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with(NODE_LOG_HEADER));
        assert_eq!(text.lines().count(), r.log.len() + 1);
    }

    #[test]
    fn mixed_integer_psd_toy() {
        // pick X in conv(SO(3)) close to a target, with a binary forcing
        // either x11 ≥ 0.5 or x22 ≥ 0.5
        let mut p = ConicProgram::new(9);
        let target = [0.1, 0.0, 0.0, 0.0, 0.2, 0.0, 0.0, 0.0, 0.9];
        for (k, &t) in target.iter().enumerate() {
            p.add_squared_affine(&[(k, 1.0)], -t, 1.0).unwrap();
        }
        let idx: [usize; 9] = std::array::from_fn(|k| k);
        p.add_block(so3_hull_rows(&idx, 9).unwrap()).unwrap();
        let z = p.add_variables(1).start;
        p.mark_binary(z).unwrap();
        p.add_block(ConstraintBlock::less_equal(vec![(0, -1.0), (z, -2.0)], -0.5).unwrap()).unwrap();
        p.add_block(ConstraintBlock::less_equal(vec![(4, -1.0), (z, 2.0)], 1.5).unwrap()).unwrap();
        let r = solve_mip(&p, &MipSettings::default()).unwrap();
        assert_eq!(r.result.status, SolveStatus::Optimal);
        let (best, _) = enumerate_assignments(&p, &SolverSettings::default()).unwrap().unwrap();
        assert!((best - r.result.objective).abs() < 1e-5);
        assert!(r.result.x[0] >= 0.5 - 1e-5 || r.result.x[4] >= 0.5 - 1e-5);
    }
}
