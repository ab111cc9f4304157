//! Operator-splitting (ADMM) solver for
//!
//! ```text
//! minimize ½xᵀPx + qᵀx   subject to  Ax + s = b,  s ∈ C
//! ```
//!
//! where `C` is a product of zero, nonnegative, second-order, PSD cones and
//! the boxes that carry variable bounds. Each iteration solves one
//! quasi-definite KKT system (factorization cached between `ρ` updates) and
//! projects onto `C`. Infeasibility is detected from the iterate
//! differences `δy` (primal) and `δx` (dual), which converge to certificates
//! when the problem has no solution.

use std::fmt;

use super::ldl::EnvelopeLdl;
use super::program::ConicProgram;
use crate::cones::Cone;
use crate::error::{Error, Result};
use crate::numerics::{dot, norm_inf};

const RHO_MIN: f64 = 1e-6;
const RHO_MAX: f64 = 1e6;
const EQUALITY_RHO_FACTOR: f64 = 1e3;
const SCALING_MIN: f64 = 1e-4;
const SCALING_MAX: f64 = 1e4;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum SolveStatus {
    Optimal,
    Infeasible,
    Unbounded,
    IterLimit,
}

impl fmt::Display for SolveStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            SolveStatus::Optimal => "optimal",
            SolveStatus::Infeasible => "infeasible",
            SolveStatus::Unbounded => "unbounded",
            SolveStatus::IterLimit => "iteration_limit",
        };
        f.write_str(s)
    }
}

/// Primal/dual starting point in unscaled program coordinates.
///
/// `slack` and `dual` cover the solver's internal rows: every block row in
/// order, then one row per bounded variable in index order.
#[derive(Clone, Debug, PartialEq)]
pub struct WarmStart {
    pub x: Vec<f64>,
    pub slack: Vec<f64>,
    pub dual: Vec<f64>,
    /// Step size the previous solve ended with; `None` keeps the setting.
    pub rho: Option<f64>,
}

#[derive(Clone, Debug)]
pub struct SolverSettings {
    /// Bound on primal and dual residuals (∞-norm) and on the relative gap.
    pub tol: f64,
    pub max_iters: usize,
    pub rho: f64,
    pub sigma: f64,
    /// Over-relaxation parameter in (0, 2).
    pub alpha: f64,
    pub scaling_iters: usize,
    pub adaptive_rho: bool,
    pub adapt_interval: usize,
    pub check_interval: usize,
    pub infeasibility_tol: f64,
    pub refinement_steps: usize,
    pub warm_start: Option<WarmStart>,
    /// Give up (as `IterLimit`) once the dual bound exceeds this value.
    /// Branch-and-bound passes its incumbent here.
    pub cutoff: Option<f64>,
}

impl Default for SolverSettings {
    fn default() -> Self {
        SolverSettings {
            tol: 1e-6,
            max_iters: 50_000,
            rho: 0.1,
            sigma: 1e-6,
            alpha: 1.6,
            scaling_iters: 10,
            adaptive_rho: true,
            adapt_interval: 50,
            check_interval: 10,
            infeasibility_tol: 1e-5,
            refinement_steps: 1,
            warm_start: None,
            cutoff: None,
        }
    }
}

impl SolverSettings {
    pub fn with_tol(mut self, tol: f64) -> Self {
        self.tol = tol;
        self
    }

    pub fn with_max_iters(mut self, max_iters: usize) -> Self {
        self.max_iters = max_iters;
        self
    }

    pub fn with_warm_start(mut self, warm: Option<WarmStart>) -> Self {
        self.warm_start = warm;
        self
    }

    fn validate(&self) -> Result<()> {
        let ok = self.tol > 0.0
            && self.rho > 0.0
            && self.sigma > 0.0
            && self.alpha > 0.0
            && self.alpha < 2.0
            && self.check_interval > 0
            && self.adapt_interval > 0
            && self.infeasibility_tol > 0.0
            && !self.cutoff.is_some_and(f64::is_nan);
        if ok {
            Ok(())
        } else {
            Err(Error::invalid("solver settings out of range"))
        }
    }
}

#[derive(Clone, Debug)]
pub struct SolveResult {
    pub status: SolveStatus,
    pub x: Vec<f64>,
    /// Objective at `x`, including the constant offset.
    pub objective: f64,
    pub primal_residual: f64,
    pub dual_residual: f64,
    /// Absolute primal–dual objective gap.
    pub gap: f64,
    pub iterations: usize,
    pub slack: Vec<f64>,
    /// Multipliers in the dual cone, `Px + q + Aᵀλ = 0`.
    pub dual: Vec<f64>,
    pub warm_started: bool,
    /// A warm start was supplied but did not fit the program layout.
    pub warm_start_rejected: bool,
    /// Final ADMM step size.
    pub rho: f64,
    /// Dual objective at the last check, a lower bound on the optimum up to
    /// the dual residual. −∞ when that residual was above tolerance.
    pub bound: f64,
}

impl SolveResult {
    pub fn is_optimal(&self) -> bool {
        self.status == SolveStatus::Optimal
    }
}

/// Solves a purely continuous program.
pub fn solve(prog: &ConicProgram, settings: &SolverSettings) -> Result<SolveResult> {
    if !prog.binaries().is_empty() {
        return Err(Error::invalid(
            "program has binary variables; use mip::solve_mip",
        ));
    }
    solve_relaxation(prog, settings)
}

/// Builds a warm start from a previous result when the layouts agree.
pub fn warm_start(prev: &SolveResult, prog: &ConicProgram) -> Option<WarmStart> {
    let rows = prog.num_internal_rows();
    if prev.x.len() != prog.num_vars() || prev.slack.len() != rows || prev.dual.len() != rows {
        return None;
    }
    Some(WarmStart {
        x: prev.x.clone(),
        slack: prev.slack.clone(),
        dual: prev.dual.clone(),
        rho: Some(prev.rho),
    })
}

/// Solves the continuous relaxation, ignoring binary markers.
pub(crate) fn solve_relaxation(prog: &ConicProgram, settings: &SolverSettings) -> Result<SolveResult> {
    prog.validate()?;
    settings.validate()?;
    let mut ws = Workspace::new(prog, settings)?;
    ws.run(prog, settings)
}

#[derive(Clone, Copy, Debug, PartialEq)]
enum Set {
    Cone(Cone),
    Box,
}

#[derive(Clone, Copy, Debug)]
struct SetRange {
    set: Set,
    start: usize,
    len: usize,
}

#[derive(Clone, Debug)]
struct Csr {
    ptr: Vec<usize>,
    idx: Vec<usize>,
    val: Vec<f64>,
}

impl Csr {
    fn from_rows(rows: &[Vec<(usize, f64)>]) -> Self {
        let mut ptr = vec![0];
        let mut idx = Vec::new();
        let mut val = Vec::new();
        for row in rows {
            let mut sorted = row.clone();
            sorted.sort_by_key(|&(j, _)| j);
            let mut last: Option<usize> = None;
            for (j, v) in sorted {
                if last == Some(j) {
                    *val.last_mut().unwrap() += v;
                } else {
                    idx.push(j);
                    val.push(v);
                    last = Some(j);
                }
            }
            ptr.push(idx.len());
        }
        Csr { ptr, idx, val }
    }

    fn nrows(&self) -> usize {
        self.ptr.len() - 1
    }

    fn row(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        (self.ptr[i]..self.ptr[i + 1]).map(move |k| (self.idx[k], self.val[k]))
    }

    fn mul(&self, x: &[f64], out: &mut [f64]) {
        for (i, o) in out.iter_mut().enumerate().take(self.nrows()) {
            *o = self.row(i).map(|(j, v)| v * x[j]).sum();
        }
    }

    fn mul_t(&self, y: &[f64], out: &mut [f64]) {
        out.iter_mut().for_each(|v| *v = 0.0);
        for (i, &yi) in y.iter().enumerate().take(self.nrows()) {
            if yi != 0.0 {
                for (j, v) in self.row(i) {
                    out[j] += v * yi;
                }
            }
        }
    }

    fn scale(&mut self, row_scale: &[f64], col_scale: &[f64]) {
        for i in 0..self.nrows() {
            for k in self.ptr[i]..self.ptr[i + 1] {
                self.val[k] *= row_scale[i] * col_scale[self.idx[k]];
            }
        }
    }
}

struct Workspace {
    n: usize,
    m: usize,
    p: Csr,
    a: Csr,
    q: Vec<f64>,
    b: Vec<f64>,
    lo: Vec<f64>,
    hi: Vec<f64>,
    sets: Vec<SetRange>,
    equality: Vec<bool>,
    d: Vec<f64>,
    e: Vec<f64>,
    c: f64,
    rho: f64,
    rho_vec: Vec<f64>,
    sigma: f64,
    kkt: EnvelopeLdl,
    x: Vec<f64>,
    s: Vec<f64>,
    y: Vec<f64>,
    warm_started: bool,
    warm_rejected: bool,
}

impl Workspace {
    fn new(prog: &ConicProgram, settings: &SolverSettings) -> Result<Self> {
        let n = prog.num_vars();
        let mut rows: Vec<Vec<(usize, f64)>> = Vec::new();
        let mut b = Vec::new();
        let mut sets = Vec::new();
        let mut equality = Vec::new();
        let mut lo = Vec::new();
        let mut hi = Vec::new();
        for block in prog.blocks() {
            sets.push(SetRange {
                set: Set::Cone(block.cone),
                start: rows.len(),
                len: block.dim(),
            });
            let eq = matches!(block.cone, Cone::Zero(_));
            for (row, &off) in block.rows.iter().zip(&block.offsets) {
                rows.push(row.clone());
                b.push(off);
                equality.push(eq);
                lo.push(0.0);
                hi.push(0.0);
            }
        }
        for (i, bound) in prog.bounds() {
            sets.push(SetRange {
                set: Set::Box,
                start: rows.len(),
                len: 1,
            });
            rows.push(vec![(i, -1.0)]);
            b.push(0.0);
            equality.push(bound.is_fixed());
            lo.push(bound.lower);
            hi.push(bound.upper);
        }
        let m = rows.len();
        let a = Csr::from_rows(&rows);

        let mut p_rows: Vec<Vec<(usize, f64)>> = vec![Vec::new(); n];
        for (i, j, v) in prog.quadratic() {
            p_rows[i].push((j, v));
            if i != j {
                p_rows[j].push((i, v));
            }
        }
        let p = Csr::from_rows(&p_rows);

        let mut ws = Workspace {
            n,
            m,
            p,
            a,
            q: prog.linear().to_vec(),
            b,
            lo,
            hi,
            sets,
            equality,
            d: vec![1.0; n],
            e: vec![1.0; m],
            c: 1.0,
            rho: settings.rho,
            rho_vec: vec![settings.rho; m],
            sigma: settings.sigma,
            kkt: EnvelopeLdl::new(1, &[(0, 0, 1.0)])?,
            x: vec![0.0; n],
            s: vec![0.0; m],
            y: vec![0.0; m],
            warm_started: false,
            warm_rejected: false,
        };
        ws.equilibrate(settings.scaling_iters);
        let rho = settings
            .warm_start
            .as_ref()
            .and_then(|w| w.rho)
            .filter(|r| r.is_finite() && *r > 0.0)
            .unwrap_or(settings.rho);
        ws.set_rho(rho);
        ws.kkt = EnvelopeLdl::new(n + m, &ws.kkt_entries())?;
        ws.apply_warm_start(prog, settings.warm_start.as_ref());
        Ok(ws)
    }

    fn equilibrate(&mut self, iters: usize) {
        let (n, m) = (self.n, self.m);
        let clamp = |norm: f64| {
            if norm < SCALING_MIN {
                1.0
            } else {
                1.0 / norm.min(SCALING_MAX).sqrt()
            }
        };
        for _ in 0..iters {
            let mut col = vec![0.0f64; n];
            let mut row = vec![0.0f64; m];
            for i in 0..n {
                for (j, v) in self.p.row(i) {
                    col[j] = col[j].max(v.abs());
                }
            }
            for i in 0..m {
                for (j, v) in self.a.row(i) {
                    col[j] = col[j].max(v.abs());
                    row[i] = row[i].max(v.abs());
                }
            }
            let dcol: Vec<f64> = col.iter().map(|&v| clamp(v)).collect();
            let mut erow: Vec<f64> = row.iter().map(|&v| clamp(v)).collect();
            for r in &self.sets {
                if let Set::Cone(Cone::SecondOrder(_) | Cone::PositiveSemidefinite { .. }) = r.set {
                    let block = &mut erow[r.start..r.start + r.len];
                    let mean = block.iter().sum::<f64>() / r.len as f64;
                    block.iter_mut().for_each(|v| *v = mean);
                }
            }
            self.p.scale(&dcol, &dcol);
            self.a.scale(&erow, &dcol);
            self.d.iter_mut().zip(&dcol).for_each(|(d, s)| *d *= s);
            self.e.iter_mut().zip(&erow).for_each(|(e, s)| *e *= s);
        }
        for (qi, di) in self.q.iter_mut().zip(&self.d) {
            *qi *= di;
        }
        let mut pcol = vec![0.0f64; n];
        for i in 0..n {
            for (j, v) in self.p.row(i) {
                pcol[j] = pcol[j].max(v.abs());
            }
        }
        let mean_p = if n > 0 { pcol.iter().sum::<f64>() / n as f64 } else { 0.0 };
        let cost_norm = mean_p.max(norm_inf(&self.q));
        self.c = if cost_norm < SCALING_MIN {
            1.0
        } else {
            (1.0 / cost_norm).clamp(SCALING_MIN, SCALING_MAX)
        };
        let c = self.c;
        self.p.val.iter_mut().for_each(|v| *v *= c);
        self.q.iter_mut().for_each(|v| *v *= c);
        for i in 0..m {
            self.b[i] *= self.e[i];
            self.lo[i] *= self.e[i];
            self.hi[i] *= self.e[i];
        }
    }

    fn set_rho(&mut self, rho: f64) {
        self.rho = rho.clamp(RHO_MIN, RHO_MAX);
        for (r, &eq) in self.rho_vec.iter_mut().zip(&self.equality) {
            *r = if eq { self.rho * EQUALITY_RHO_FACTOR } else { self.rho };
        }
    }

    fn kkt_entries(&self) -> Vec<(usize, usize, f64)> {
        let n = self.n;
        let mut e = Vec::with_capacity(self.p.val.len() + self.a.val.len() + n + self.m);
        for j in 0..n {
            e.push((j, j, self.sigma));
        }
        for i in 0..n {
            for (j, v) in self.p.row(i) {
                if j <= i {
                    e.push((i, j, v));
                }
            }
        }
        for i in 0..self.m {
            for (j, v) in self.a.row(i) {
                e.push((n + i, j, v));
            }
            e.push((n + i, n + i, -1.0 / self.rho_vec[i]));
        }
        e
    }

    fn kkt_mul(&self, z: &[f64], out: &mut [f64]) {
        let n = self.n;
        let (zx, zy) = z.split_at(n);
        let (ox, oy) = out.split_at_mut(n);
        self.p.mul(zx, ox);
        let mut at = vec![0.0; n];
        self.a.mul_t(zy, &mut at);
        for j in 0..n {
            ox[j] += self.sigma * zx[j] + at[j];
        }
        self.a.mul(zx, oy);
        for i in 0..self.m {
            oy[i] -= zy[i] / self.rho_vec[i];
        }
    }

    fn apply_warm_start(&mut self, prog: &ConicProgram, warm: Option<&WarmStart>) {
        let Some(w) = warm else { return };
        if w.x.len() != self.n || w.slack.len() != self.m || w.dual.len() != self.m || prog.num_vars() != self.n {
            self.warm_rejected = true;
            return;
        }
        if w.x.iter().chain(&w.slack).chain(&w.dual).any(|v| !v.is_finite()) {
            self.warm_rejected = true;
            return;
        }
        for j in 0..self.n {
            self.x[j] = w.x[j] / self.d[j];
        }
        for i in 0..self.m {
            self.s[i] = w.slack[i] * self.e[i];
            // internal y = −λ, scaled
            self.y[i] = -w.dual[i] * self.c / self.e[i];
        }
        self.project(&mut self.s.clone());
        self.warm_started = true;
    }

    fn project_set(&self, r: &SetRange, z: &mut [f64]) {
        match r.set {
            Set::Cone(cone) => cone.project_in_place(z),
            Set::Box => {
                let i = r.start;
                z[0] = z[0].clamp(self.lo[i], self.hi[i]);
            }
        }
    }

    fn project(&mut self, v: &mut [f64]) {
        for r in &self.sets {
            self.project_set(r, &mut v[r.start..r.start + r.len]);
        }
        self.s.copy_from_slice(v);
    }

    fn refactor(&mut self) -> Result<()> {
        let entries = self.kkt_entries();
        self.kkt.factor(&entries)
    }

    /// Support function of the box rows at `y`. Entries below `floor` in
    /// magnitude are treated as zero so roundoff against an infinite side
    /// does not blow up.
    fn box_support(&self, y: &[f64], floor: f64) -> f64 {
        let mut total = 0.0;
        for r in &self.sets {
            if r.set == Set::Box {
                let i = r.start;
                let side = if y[i] > floor {
                    self.hi[i]
                } else if y[i] < -floor {
                    self.lo[i]
                } else {
                    continue;
                };
                if side.is_finite() {
                    total += side * y[i];
                } else {
                    return f64::INFINITY;
                }
            }
        }
        total
    }

    fn run(&mut self, prog: &ConicProgram, settings: &SolverSettings) -> Result<SolveResult> {
        let (n, m) = (self.n, self.m);
        let alpha = settings.alpha;
        let mut rhs = vec![0.0; n + m];
        let mut sol = vec![0.0; n + m];
        let mut resid = vec![0.0; n + m];
        let mut tmp_n = vec![0.0; n];
        let mut tmp_m = vec![0.0; m];
        let mut x_prev = vec![0.0; n];
        let mut y_prev = vec![0.0; m];
        let mut v = vec![0.0; m];

        let mut status = SolveStatus::IterLimit;
        let mut report = Residuals::default();
        let mut iter = 0;
        while iter < settings.max_iters {
            iter += 1;
            let checking = iter % settings.check_interval == 0 || iter == settings.max_iters;
            if checking {
                x_prev.copy_from_slice(&self.x);
                y_prev.copy_from_slice(&self.y);
            }

            for j in 0..n {
                rhs[j] = self.sigma * self.x[j] - self.q[j];
            }
            for i in 0..m {
                rhs[n + i] = self.b[i] - self.s[i] + self.y[i] / self.rho_vec[i];
            }
            sol.copy_from_slice(&rhs);
            self.kkt.solve(&mut sol);
            for _ in 0..settings.refinement_steps {
                self.kkt_mul(&sol, &mut resid);
                for k in 0..n + m {
                    resid[k] = rhs[k] - resid[k];
                }
                self.kkt.solve(&mut resid);
                for k in 0..n + m {
                    sol[k] += resid[k];
                }
            }

            for j in 0..n {
                self.x[j] = alpha * sol[j] + (1.0 - alpha) * self.x[j];
            }
            for i in 0..m {
                let s_tilde = self.s[i] - (sol[n + i] + self.y[i]) / self.rho_vec[i];
                let relaxed = alpha * s_tilde + (1.0 - alpha) * self.s[i];
                tmp_m[i] = relaxed;
                v[i] = relaxed + self.y[i] / self.rho_vec[i];
            }
            for r in &self.sets {
                self.project_set(r, &mut v[r.start..r.start + r.len]);
            }
            for i in 0..m {
                self.y[i] += self.rho_vec[i] * (tmp_m[i] - v[i]);
            }
            self.s.copy_from_slice(&v);

            if !checking {
                continue;
            }
            if self.x.iter().chain(&self.y).any(|v| !v.is_finite()) {
                return Err(Error::Numerical("ADMM iterates became non-finite".into()));
            }
            report = self.residuals(&mut tmp_n, &mut tmp_m);
            let scale = 1.0f64.max(report.pobj.abs()).max(report.dobj.abs());
            if report.primal <= settings.tol && report.dual <= settings.tol && report.gap <= settings.tol * scale {
                status = SolveStatus::Optimal;
                break;
            }
            if report.dual <= settings.tol && settings.cutoff.is_some_and(|cut| report.dobj + prog.offset() > cut) {
                break;
            }
            if self.primal_infeasible(&y_prev, settings.infeasibility_tol) {
                status = SolveStatus::Infeasible;
                break;
            }
            if self.dual_infeasible(&x_prev, settings.infeasibility_tol) {
                status = SolveStatus::Unbounded;
                break;
            }
            if settings.adaptive_rho && iter % settings.adapt_interval == 0 {
                let new_rho = self.rho * report.rho_ratio;
                if new_rho > 5.0 * self.rho || new_rho < 0.2 * self.rho {
                    self.set_rho(new_rho);
                    self.refactor()?;
                }
            }
        }

        let x: Vec<f64> = self.x.iter().zip(&self.d).map(|(x, d)| x * d).collect();
        let slack: Vec<f64> = self.s.iter().zip(&self.e).map(|(s, e)| s / e).collect();
        let dual: Vec<f64> = self.y.iter().zip(&self.e).map(|(y, e)| -y * e / self.c).collect();
        let objective = prog.objective(&x);
        Ok(SolveResult {
            status,
            x,
            objective,
            primal_residual: report.primal,
            dual_residual: report.dual,
            gap: report.gap,
            iterations: iter,
            slack,
            dual,
            warm_started: self.warm_started,
            warm_start_rejected: self.warm_rejected,
            rho: self.rho,
            bound: if report.dual <= settings.tol { report.dobj + prog.offset() } else { f64::NEG_INFINITY },
        })
    }

    fn residuals(&self, tmp_n: &mut [f64], tmp_m: &mut [f64]) -> Residuals {
        let (n, m) = (self.n, self.m);
        let c = self.c;
        self.a.mul(&self.x, tmp_m);
        let mut ax_norm = 0.0f64;
        let mut primal = 0.0f64;
        for i in 0..m {
            ax_norm = ax_norm.max(tmp_m[i].abs());
            primal = primal.max(((tmp_m[i] + self.s[i] - self.b[i]) / self.e[i]).abs());
        }
        let s_norm = norm_inf(&self.s);
        let b_norm = norm_inf(&self.b);

        let mut px = vec![0.0; n];
        self.p.mul(&self.x, &mut px);
        self.a.mul_t(&self.y, tmp_n);
        let mut dual = 0.0f64;
        let mut dual_scaled = 0.0f64;
        for j in 0..n {
            let r = px[j] + self.q[j] - tmp_n[j];
            dual_scaled = dual_scaled.max(r.abs());
            dual = dual.max((r / (c * self.d[j])).abs());
        }
        let xpx = dot(&self.x, &px);
        let pobj = (0.5 * xpx + dot(&self.q, &self.x)) / c;
        let y_floor = 1e-9 * norm_inf(&self.y).max(1.0);
        let dobj = (-0.5 * xpx + dot(&self.b, &self.y) - self.box_support(&self.y, y_floor)) / c;

        let mut primal_scaled = 0.0f64;
        for i in 0..m {
            primal_scaled = primal_scaled.max((tmp_m[i] + self.s[i] - self.b[i]).abs());
        }
        let p_den = ax_norm.max(s_norm).max(b_norm).max(1e-10);
        let d_den = norm_inf(&px).max(norm_inf(tmp_n)).max(norm_inf(&self.q)).max(1e-10);
        let ratio = ((primal_scaled / p_den) / (dual_scaled / d_den).max(1e-30)).sqrt();
        Residuals {
            primal,
            dual,
            gap: if pobj.is_finite() && dobj.is_finite() { (pobj - dobj).abs() } else { f64::INFINITY },
            pobj,
            dobj,
            rho_ratio: if ratio.is_finite() { ratio } else { 1.0 },
        }
    }

    fn primal_infeasible(&self, y_prev: &[f64], eps: f64) -> bool {
        let m = self.m;
        if m == 0 {
            return false;
        }
        let c = self.c;
        // Iterates sit in K° but their difference need not, and the cone part
        // of the support is finite only inside K°. Project first; scaling is
        // uniform within each cone block so this commutes with unscaling.
        let mut dy: Vec<f64> = (0..m).map(|i| self.y[i] - y_prev[i]).collect();
        for r in &self.sets {
            if let Set::Cone(cone) = r.set {
                if matches!(cone, Cone::Zero(_)) {
                    continue;
                }
                let seg = &mut dy[r.start..r.start + r.len];
                seg.iter_mut().for_each(|v| *v = -*v);
                cone.project_in_place(seg);
                seg.iter_mut().for_each(|v| *v = -*v);
            }
        }
        let dy_norm = (0..m).map(|i| (dy[i] * self.e[i] / c).abs()).fold(0.0, f64::max);
        if dy_norm < 1e-12 {
            return false;
        }
        let mut aty = vec![0.0; self.n];
        self.a.mul_t(&dy, &mut aty);
        let aty_norm = (0..self.n).map(|j| (aty[j] / (c * self.d[j])).abs()).fold(0.0, f64::max);
        let support = (dot(&self.b, &dy) - self.box_support(&dy, 1e-9 * norm_inf(&dy))) / c;
        aty_norm <= eps * dy_norm && support > eps * dy_norm
    }

    fn dual_infeasible(&self, x_prev: &[f64], eps: f64) -> bool {
        let n = self.n;
        let dx: Vec<f64> = (0..n).map(|j| self.x[j] - x_prev[j]).collect();
        let dx_norm = (0..n).map(|j| (dx[j] * self.d[j]).abs()).fold(0.0, f64::max);
        if dx_norm < 1e-12 {
            return false;
        }
        let c = self.c;
        let mut pdx = vec![0.0; n];
        self.p.mul(&dx, &mut pdx);
        let pdx_norm = (0..n).map(|j| (pdx[j] / (c * self.d[j])).abs()).fold(0.0, f64::max);
        let qdx = dot(&self.q, &dx) / c;
        if pdx_norm > eps * dx_norm || qdx > -eps * dx_norm {
            return false;
        }
        let mut adx = vec![0.0; self.m];
        self.a.mul(&dx, &mut adx);
        let neg: Vec<f64> = adx.iter().zip(&self.e).map(|(v, e)| -v / e).collect();
        for r in &self.sets {
            let seg = &neg[r.start..r.start + r.len];
            let violation = match r.set {
                Set::Cone(cone) => cone.distance(seg),
                Set::Box => {
                    let i = r.start;
                    let d = seg[0];
                    let up_ok = self.hi[i].is_infinite();
                    let down_ok = self.lo[i].is_infinite();
                    if (d > 0.0 && up_ok) || (d < 0.0 && down_ok) {
                        0.0
                    } else {
                        d.abs()
                    }
                }
            };
            if violation > eps * dx_norm {
                return false;
            }
        }
        true
    }
}

#[derive(Clone, Copy, Debug, Default)]
struct Residuals {
    primal: f64,
    dual: f64,
    gap: f64,
    pobj: f64,
    dobj: f64,
    rho_ratio: f64,
}
