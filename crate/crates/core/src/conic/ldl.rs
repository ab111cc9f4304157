//! LDLᵀ factorization of symmetric quasi-definite matrices in envelope
//! (skyline) storage after a reverse Cuthill–McKee reordering.
//!
//! MPC programs laid out step by step produce banded KKT systems, so the
//! envelope stays narrow and no pivoting is needed for quasi-definite input.

use std::collections::VecDeque;

use crate::error::{Error, Result};

/// Symbolic structure plus numeric factors.
#[derive(Clone, Debug)]
pub(crate) struct EnvelopeLdl {
    n: usize,
    /// `perm[new] = old`
    perm: Vec<usize>,
    /// `inv[old] = new`
    inv: Vec<usize>,
    first: Vec<usize>,
    start: Vec<usize>,
    vals: Vec<f64>,
    diag: Vec<f64>,
    work: Vec<f64>,
}

impl EnvelopeLdl {
    /// Builds the ordering and envelope for the pattern of `entries`
    /// (`(row, col, value)` with either triangle accepted) and factors it.
    pub fn new(n: usize, entries: &[(usize, usize, f64)]) -> Result<Self> {
        let mut adj: Vec<Vec<usize>> = vec![Vec::new(); n];
        for &(i, j, _) in entries {
            if i != j {
                adj[i].push(j);
                adj[j].push(i);
            }
        }
        for list in &mut adj {
            list.sort_unstable();
            list.dedup();
        }
        let perm = reverse_cuthill_mckee(&adj);
        let mut inv = vec![0; n];
        for (new, &old) in perm.iter().enumerate() {
            inv[old] = new;
        }
        let mut first: Vec<usize> = (0..n).collect();
        for &(i, j, _) in entries {
            let (a, b) = (inv[i], inv[j]);
            let (hi, lo) = if a >= b { (a, b) } else { (b, a) };
            first[hi] = first[hi].min(lo);
        }
        let mut start = Vec::with_capacity(n + 1);
        let mut total = 0;
        for i in 0..n {
            start.push(total);
            total += i - first[i];
        }
        start.push(total);

        let mut f = EnvelopeLdl {
            n,
            perm,
            inv,
            first,
            start,
            vals: vec![0.0; total],
            diag: vec![0.0; n],
            work: vec![0.0; n],
        };
        f.factor(entries)?;
        Ok(f)
    }

    /// Numeric refactorization for new values on the same pattern.
    pub fn factor(&mut self, entries: &[(usize, usize, f64)]) -> Result<()> {
        self.vals.iter_mut().for_each(|v| *v = 0.0);
        self.diag.iter_mut().for_each(|v| *v = 0.0);
        for &(i, j, v) in entries {
            let (a, b) = (self.inv[i], self.inv[j]);
            let (hi, lo) = if a >= b { (a, b) } else { (b, a) };
            if hi == lo {
                self.diag[hi] += v;
            } else {
                let pos = self.start[hi] + lo - self.first[hi];
                self.vals[pos] += v;
            }
        }

        for i in 0..self.n {
            let fi = self.first[i];
            let (done, rest) = self.vals.split_at_mut(self.start[i]);
            let row_i = &mut rest[..i - fi];
            // row_i[k - fi] holds l_ik * d_k once column k is processed
            for j in fi..i {
                let fj = self.first[j];
                let lo = fi.max(fj);
                let row_j = &done[self.start[j]..self.start[j] + (j - fj)];
                let mut s = row_i[j - fi];
                for k in lo..j {
                    s -= row_i[k - fi] * row_j[k - fj];
                }
                row_i[j - fi] = s;
            }
            let mut d = self.diag[i];
            for k in fi..i {
                let t = row_i[k - fi];
                let l = t / self.diag[k];
                d -= t * l;
                row_i[k - fi] = l;
            }
            if !d.is_finite() || d.abs() < 1e-300 {
                return Err(Error::Numerical(format!("zero pivot at position {i} of KKT factorization")));
            }
            self.diag[i] = d;
        }
        Ok(())
    }

    /// Solves `K z = rhs` in place.
    pub fn solve(&mut self, rhs: &mut [f64]) {
        let n = self.n;
        let z = &mut self.work;
        for new in 0..n {
            z[new] = rhs[self.perm[new]];
        }
        for i in 0..n {
            let fi = self.first[i];
            let row = &self.vals[self.start[i]..self.start[i + 1]];
            let mut s = z[i];
            for (k, l) in (fi..i).zip(row) {
                s -= l * z[k];
            }
            z[i] = s;
        }
        for i in 0..n {
            z[i] /= self.diag[i];
        }
        for i in (0..n).rev() {
            let fi = self.first[i];
            let zi = z[i];
            let row = &self.vals[self.start[i]..self.start[i + 1]];
            for (k, l) in (fi..i).zip(row) {
                z[k] -= l * zi;
            }
        }
        for new in 0..n {
            rhs[self.perm[new]] = z[new];
        }
    }

    #[cfg(test)]
    pub fn envelope_size(&self) -> usize {
        self.vals.len()
    }
}

fn bfs_levels(start: usize, adj: &[Vec<usize>], mark: &mut [usize], stamp: usize) -> Vec<Vec<usize>> {
    let mut levels = vec![vec![start]];
    mark[start] = stamp;
    loop {
        let mut next = Vec::new();
        for &u in levels.last().unwrap() {
            for &v in &adj[u] {
                if mark[v] != stamp {
                    mark[v] = stamp;
                    next.push(v);
                }
            }
        }
        if next.is_empty() {
            return levels;
        }
        levels.push(next);
    }
}

/// Reverse Cuthill–McKee ordering, `result[new] = old`.
pub(crate) fn reverse_cuthill_mckee(adj: &[Vec<usize>]) -> Vec<usize> {
    let n = adj.len();
    let degree: Vec<usize> = adj.iter().map(|a| a.len()).collect();
    let mut placed = vec![false; n];
    let mut mark = vec![usize::MAX; n];
    let mut stamp = 0usize;
    let mut order = Vec::with_capacity(n);

    while order.len() < n {
        let seed = (0..n)
            .filter(|&i| !placed[i])
            .min_by_key(|&i| (degree[i], i))
            .expect("unplaced node");

        // pseudo-peripheral start node
        let mut root = seed;
        let mut levels = bfs_levels(root, adj, &mut mark, stamp);
        stamp += 1;
        for _ in 0..8 {
            let candidate = *levels
                .last()
                .unwrap()
                .iter()
                .min_by_key(|&&v| (degree[v], v))
                .unwrap();
            let cand_levels = bfs_levels(candidate, adj, &mut mark, stamp);
            stamp += 1;
            if cand_levels.len() > levels.len() {
                root = candidate;
                levels = cand_levels;
            } else {
                break;
            }
        }

        let mut queue = VecDeque::from([root]);
        placed[root] = true;
        while let Some(u) = queue.pop_front() {
            order.push(u);
            let mut nbrs: Vec<usize> = adj[u].iter().copied().filter(|&v| !placed[v]).collect();
            nbrs.sort_by_key(|&v| (degree[v], v));
            for v in nbrs {
                placed[v] = true;
                queue.push_back(v);
            }
        }
    }
    order.reverse();
    order
}
