use std::collections::{BTreeMap, BTreeSet};
use std::ops::Range;

use crate::cones::Cone;
use crate::error::{Error, Result};

/// Sparse row as `(column, coefficient)` pairs.
pub type SparseRow = Vec<(usize, f64)>;

/// A group of affine rows whose slack must lie in one cone:
/// `offsets − rows·x ∈ cone`.
#[derive(Clone, Debug, PartialEq)]
pub struct ConstraintBlock {
    pub rows: Vec<SparseRow>,
    pub offsets: Vec<f64>,
    pub cone: Cone,
}

impl ConstraintBlock {
    pub fn new(cone: Cone, rows: Vec<SparseRow>, offsets: Vec<f64>) -> Result<Self> {
        cone.validate()?;
        if rows.len() != cone.dim() || offsets.len() != cone.dim() {
            return Err(Error::invalid(format!(
                "block has {} rows / {} offsets but cone dimension {}",
                rows.len(),
                offsets.len(),
                cone.dim()
            )));
        }
        if rows
            .iter()
            .flatten()
            .any(|&(_, v)| !v.is_finite())
            || offsets.iter().any(|v| !v.is_finite())
        {
            return Err(Error::invalid("constraint block has non-finite data"));
        }
        Ok(ConstraintBlock { rows, offsets, cone })
    }

    /// Single linear equality `Σ aⱼxⱼ = rhs`.
    pub fn equality(row: SparseRow, rhs: f64) -> Result<Self> {
        Self::new(Cone::Zero(1), vec![row], vec![rhs])
    }

    /// Single linear inequality `Σ aⱼxⱼ ≤ rhs`.
    pub fn less_equal(row: SparseRow, rhs: f64) -> Result<Self> {
        Self::new(Cone::Nonnegative(1), vec![row], vec![rhs])
    }

    pub fn dim(&self) -> usize {
        self.offsets.len()
    }

    /// `offsets − rows·x`.
    pub fn slack(&self, x: &[f64]) -> Vec<f64> {
        self.rows
            .iter()
            .zip(&self.offsets)
            .map(|(row, &b)| b - row.iter().map(|&(j, a)| a * x[j]).sum::<f64>())
            .collect()
    }

    /// Euclidean distance of the slack at `x` from the cone.
    pub fn violation(&self, x: &[f64]) -> f64 {
        let s = self.slack(x);
        let p = self.cone.project_unchecked(&s);
        s.iter()
            .zip(&p)
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt()
    }

    fn max_column(&self) -> Option<usize> {
        self.rows.iter().flatten().map(|&(j, _)| j).max()
    }
}

/// Box interval on a single variable. Either side may be infinite.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Bound {
    pub lower: f64,
    pub upper: f64,
}

impl Bound {
    pub fn is_fixed(&self) -> bool {
        self.lower == self.upper
    }
}

/// minimize ½xᵀPx + qᵀx + offset subject to every block's slack lying in its
/// cone, optional variable boxes, and (for mixed-integer use) binary markers.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct ConicProgram {
    n: usize,
    // upper triangle (i <= j) of the symmetric P
    p: BTreeMap<(usize, usize), f64>,
    q: Vec<f64>,
    offset: f64,
    blocks: Vec<ConstraintBlock>,
    bounds: BTreeMap<usize, Bound>,
    binaries: BTreeSet<usize>,
}

impl ConicProgram {
    pub fn new(n: usize) -> Self {
        ConicProgram {
            n,
            q: vec![0.0; n],
            ..Default::default()
        }
    }

    pub fn num_vars(&self) -> usize {
        self.n
    }

    /// Appends `count` fresh variables and returns their index range.
    pub fn add_variables(&mut self, count: usize) -> Range<usize> {
        let start = self.n;
        self.n += count;
        self.q.resize(self.n, 0.0);
        start..self.n
    }

    fn check_index(&self, i: usize) -> Result<()> {
        if i >= self.n {
            return Err(Error::invalid(format!(
                "variable index {i} out of range (n = {})",
                self.n
            )));
        }
        Ok(())
    }

    /// Adds `v` to the symmetric pair `P[i][j]`, `P[j][i]`.
    pub fn add_quadratic(&mut self, i: usize, j: usize, v: f64) -> Result<()> {
        self.check_index(i)?;
        self.check_index(j)?;
        let key = (i.min(j), i.max(j));
        *self.p.entry(key).or_insert(0.0) += v;
        Ok(())
    }

    pub fn add_linear(&mut self, i: usize, v: f64) -> Result<()> {
        self.check_index(i)?;
        self.q[i] += v;
        Ok(())
    }

    pub fn add_offset(&mut self, c: f64) {
        self.offset += c;
    }

    /// Adds `weight · (Σ aⱼxⱼ + c)²` to the objective.
    pub fn add_squared_affine(&mut self, terms: &[(usize, f64)], c: f64, weight: f64) -> Result<()> {
        let mut merged: BTreeMap<usize, f64> = BTreeMap::new();
        for &(i, a) in terms {
            *merged.entry(i).or_insert(0.0) += a;
        }
        let merged: Vec<(usize, f64)> = merged.into_iter().collect();
        for (k, &(i, ai)) in merged.iter().enumerate() {
            self.add_linear(i, 2.0 * weight * c * ai)?;
            for &(j, aj) in &merged[k..] {
                self.add_quadratic(i, j, 2.0 * weight * ai * aj)?;
            }
        }
        self.offset += weight * c * c;
        Ok(())
    }

    pub fn add_block(&mut self, block: ConstraintBlock) -> Result<()> {
        if let Some(j) = block.max_column() {
            self.check_index(j)?;
        }
        self.blocks.push(block);
        Ok(())
    }

    pub fn set_bounds(&mut self, i: usize, lower: f64, upper: f64) -> Result<()> {
        self.check_index(i)?;
        if lower.is_nan() || upper.is_nan() || lower > upper || lower == f64::INFINITY || upper == f64::NEG_INFINITY {
            return Err(Error::invalid(format!("bad bounds [{lower}, {upper}] on variable {i}")));
        }
        self.bounds.insert(i, Bound { lower, upper });
        Ok(())
    }

    /// Marks a variable as binary and boxes it to `[0, 1]`.
    pub fn mark_binary(&mut self, i: usize) -> Result<()> {
        self.set_bounds(i, 0.0, 1.0)?;
        self.binaries.insert(i);
        Ok(())
    }

    pub fn quadratic(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        self.p.iter().map(|(&(i, j), &v)| (i, j, v))
    }

    pub fn linear(&self) -> &[f64] {
        &self.q
    }

    pub fn offset(&self) -> f64 {
        self.offset
    }

    pub fn blocks(&self) -> &[ConstraintBlock] {
        &self.blocks
    }

    pub fn bounds(&self) -> impl Iterator<Item = (usize, Bound)> + '_ {
        self.bounds.iter().map(|(&i, &b)| (i, b))
    }

    pub fn bound(&self, i: usize) -> Option<Bound> {
        self.bounds.get(&i).copied()
    }

    pub fn binaries(&self) -> &BTreeSet<usize> {
        &self.binaries
    }

    pub fn num_block_rows(&self) -> usize {
        self.blocks.iter().map(|b| b.dim()).sum()
    }

    /// Rows of the solver's internal system: block rows followed by one row
    /// per bounded variable.
    pub fn num_internal_rows(&self) -> usize {
        self.num_block_rows() + self.bounds.len()
    }

    pub fn objective(&self, x: &[f64]) -> f64 {
        let mut v = self.offset;
        for (i, j, p) in self.quadratic() {
            if i == j {
                v += 0.5 * p * x[i] * x[i];
            } else {
                v += p * x[i] * x[j];
            }
        }
        v + self.q.iter().zip(x).map(|(a, b)| a * b).sum::<f64>()
    }

    /// Largest violation over cone blocks and bounds.
    pub fn max_violation(&self, x: &[f64]) -> f64 {
        let cones = self.blocks.iter().map(|b| b.violation(x)).fold(0.0, f64::max);
        let boxes = self
            .bounds
            .iter()
            .map(|(&i, b)| (b.lower - x[i]).max(x[i] - b.upper).max(0.0))
            .fold(0.0, f64::max);
        cones.max(boxes)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n == 0 {
            return Err(Error::invalid("program has no variables"));
        }
        if self.q.iter().any(|v| !v.is_finite()) || self.p.values().any(|v| !v.is_finite()) || !self.offset.is_finite() {
            return Err(Error::invalid("objective has non-finite coefficients"));
        }
        for &b in &self.binaries {
            match self.bounds.get(&b) {
                Some(bd) if bd.lower >= 0.0 && bd.upper <= 1.0 => {}
                _ => {
                    return Err(Error::invalid(format!(
                        "binary variable {b} lacks a [0, 1] box"
                    )))
                }
            }
        }
        Ok(())
    }

    /// Copy with the given variables pinned to fixed values.
    pub fn with_fixed(&self, fixed: &[(usize, f64)]) -> Result<Self> {
        let mut p = self.clone();
        for &(i, v) in fixed {
            p.set_bounds(i, v, v)?;
        }
        Ok(p)
    }

    /// Copy with the binary markers dropped (the continuous relaxation).
    pub fn relaxed(&self) -> Self {
        let mut p = self.clone();
        p.binaries.clear();
        p
    }
}
