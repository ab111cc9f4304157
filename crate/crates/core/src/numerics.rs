//! Small dense linear algebra: the handful of kernels the rest of the crate
//! needs for matrices no larger than 9×9.
//!
//! Eigendecomposition uses cyclic Jacobi rotations. The SVD uses one-sided
//! (Hestenes) Jacobi, which orthogonalizes the columns of `A` directly and is
//! therefore equivalent to diagonalizing `AᵀA` without ever forming it.

use std::fmt;
use std::ops::{Index, IndexMut};

use crate::error::{Error, Result};

/// Largest supported row/column count.
pub const MAX_DIM: usize = 9;

/// Default relative off-diagonal tolerance for [`sym_eig`].
pub const EIG_TOL: f64 = 1e-15;

const MAX_SWEEPS: usize = 80;

/// Dense row-major matrix with at most [`MAX_DIM`] rows and columns.
#[derive(Clone, PartialEq)]
pub struct SmallMatrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl SmallMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        assert!(
            rows <= MAX_DIM && cols <= MAX_DIM,
            "SmallMatrix limited to {MAX_DIM}x{MAX_DIM}"
        );
        SmallMatrix {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = 1.0;
        }
        m
    }

    pub fn from_diag(d: &[f64]) -> Self {
        let mut m = Self::zeros(d.len(), d.len());
        for (i, &v) in d.iter().enumerate() {
            m[(i, i)] = v;
        }
        m
    }

    /// Builds a matrix from row-major data, rejecting bad shapes.
    pub fn from_row_major(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if rows == 0 || cols == 0 || rows > MAX_DIM || cols > MAX_DIM {
            return Err(Error::invalid(format!(
                "matrix shape {rows}x{cols} outside 1..={MAX_DIM}"
            )));
        }
        if data.len() != rows * cols {
            return Err(Error::invalid(format!(
                "expected {} entries for a {rows}x{cols} matrix, got {}",
                rows * cols,
                data.len()
            )));
        }
        Ok(SmallMatrix { rows, cols, data })
    }

    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R]) -> Result<Self> {
        let r = rows.len();
        let c = rows.first().map(|row| row.as_ref().len()).unwrap_or(0);
        if rows.iter().any(|row| row.as_ref().len() != c) {
            return Err(Error::invalid("ragged matrix rows"));
        }
        let data = rows.iter().flat_map(|row| row.as_ref().iter().copied()).collect();
        Self::from_row_major(r, c, data)
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        (0..self.rows).map(|i| self[(i, j)]).collect()
    }

    pub fn transpose(&self) -> Self {
        let mut t = Self::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                t[(j, i)] = self[(i, j)];
            }
        }
        t
    }

    pub fn matmul(&self, other: &SmallMatrix) -> Self {
        assert_eq!(self.cols, other.rows, "matmul shape mismatch");
        let mut out = Self::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self[(i, k)];
                if a == 0.0 {
                    continue;
                }
                for j in 0..other.cols {
                    out[(i, j)] += a * other[(k, j)];
                }
            }
        }
        out
    }

    pub fn matvec(&self, v: &[f64]) -> Vec<f64> {
        assert_eq!(self.cols, v.len(), "matvec shape mismatch");
        (0..self.rows)
            .map(|i| (0..self.cols).map(|j| self[(i, j)] * v[j]).sum())
            .collect()
    }

    pub fn scale(&self, s: f64) -> Self {
        SmallMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|v| v * s).collect(),
        }
    }

    pub fn add(&self, other: &SmallMatrix) -> Self {
        self.zip_with(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &SmallMatrix) -> Self {
        self.zip_with(other, |a, b| a - b)
    }

    fn zip_with(&self, other: &SmallMatrix, f: impl Fn(f64, f64) -> f64) -> Self {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols), "shape mismatch");
        SmallMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self
                .data
                .iter()
                .zip(&other.data)
                .map(|(&a, &b)| f(a, b))
                .collect(),
        }
    }

    /// Frobenius inner product `tr(selfᵀ other)`.
    pub fn dot(&self, other: &SmallMatrix) -> f64 {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols), "shape mismatch");
        self.data.iter().zip(&other.data).map(|(a, b)| a * b).sum()
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    pub fn trace(&self) -> f64 {
        (0..self.rows.min(self.cols)).map(|i| self[(i, i)]).sum()
    }

    /// `(A + Aᵀ) / 2`.
    pub fn symmetrized(&self) -> Self {
        assert!(self.is_square(), "symmetrize needs a square matrix");
        let mut s = self.clone();
        for i in 0..self.rows {
            for j in (i + 1)..self.cols {
                let v = 0.5 * (self[(i, j)] + self[(j, i)]);
                s[(i, j)] = v;
                s[(j, i)] = v;
            }
        }
        s
    }

    pub fn max_asymmetry(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for i in 0..self.rows {
            for j in (i + 1)..self.cols {
                worst = worst.max((self[(i, j)] - self[(j, i)]).abs());
            }
        }
        worst
    }

    /// Determinant by LU with partial pivoting.
    pub fn determinant(&self) -> f64 {
        assert!(self.is_square(), "determinant needs a square matrix");
        let n = self.rows;
        let mut a = self.data.clone();
        let mut det = 1.0;
        for k in 0..n {
            let mut piv = k;
            for i in (k + 1)..n {
                if a[i * n + k].abs() > a[piv * n + k].abs() {
                    piv = i;
                }
            }
            if a[piv * n + k] == 0.0 {
                return 0.0;
            }
            if piv != k {
                for j in 0..n {
                    a.swap(k * n + j, piv * n + j);
                }
                det = -det;
            }
            let d = a[k * n + k];
            det *= d;
            for i in (k + 1)..n {
                let f = a[i * n + k] / d;
                if f != 0.0 {
                    for j in (k + 1)..n {
                        a[i * n + j] -= f * a[k * n + j];
                    }
                }
            }
        }
        det
    }

    /// `‖AᵀA − I‖_F`.
    pub fn orthogonality_error(&self) -> f64 {
        self.transpose()
            .matmul(self)
            .sub(&SmallMatrix::identity(self.cols))
            .frobenius_norm()
    }
}

impl Index<(usize, usize)> for SmallMatrix {
    type Output = f64;

    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        debug_assert!(i < self.rows && j < self.cols);
        &self.data[i * self.cols + j]
    }
}

impl IndexMut<(usize, usize)> for SmallMatrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut f64 {
        debug_assert!(i < self.rows && j < self.cols);
        &mut self.data[i * self.cols + j]
    }
}

impl fmt::Debug for SmallMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "SmallMatrix {}x{} [", self.rows, self.cols)?;
        for i in 0..self.rows {
            let row: Vec<String> = (0..self.cols).map(|j| format!("{:>12.6e}", self[(i, j)])).collect();
            writeln!(f, "  {}", row.join(" "))?;
        }
        write!(f, "]")
    }
}

/// Eigenvalues in ascending order with matching orthonormal eigenvector columns.
#[derive(Clone, Debug)]
pub struct EigenDecomposition {
    pub eigenvalues: Vec<f64>,
    pub eigenvectors: SmallMatrix,
}

impl EigenDecomposition {
    /// `Q diag(f(λ)) Qᵀ`.
    pub fn reconstruct_with(&self, f: impl Fn(f64) -> f64) -> SmallMatrix {
        let n = self.eigenvalues.len();
        let q = &self.eigenvectors;
        let mut out = SmallMatrix::zeros(n, n);
        for (k, &lam) in self.eigenvalues.iter().enumerate() {
            let w = f(lam);
            if w == 0.0 {
                continue;
            }
            for i in 0..n {
                let qi = q[(i, k)] * w;
                for j in 0..n {
                    out[(i, j)] += qi * q[(j, k)];
                }
            }
        }
        out
    }

    pub fn reconstruct(&self) -> SmallMatrix {
        self.reconstruct_with(|l| l)
    }
}

/// Symmetric eigendecomposition by cyclic Jacobi.
///
/// The input is symmetrized first. Iteration stops once the off-diagonal
/// Frobenius mass drops below `tol · ‖A‖_F`.
pub fn sym_eig(a: &SmallMatrix, tol: f64) -> Result<EigenDecomposition> {
    if !a.is_square() {
        return Err(Error::invalid("sym_eig needs a square matrix"));
    }
    if !a.is_finite() {
        return Err(Error::invalid("sym_eig input has non-finite entries"));
    }
    let n = a.rows();
    let mut m = a.symmetrized();
    let mut v = SmallMatrix::identity(n);
    let norm = m.frobenius_norm();
    let threshold = tol.max(f64::EPSILON * 0.5) * norm.max(f64::MIN_POSITIVE);

    for _ in 0..MAX_SWEEPS {
        let mut off = 0.0;
        for i in 0..n {
            for j in 0..n {
                if i != j {
                    off += m[(i, j)] * m[(i, j)];
                }
            }
        }
        if off.sqrt() <= threshold {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = m[(p, q)];
                if apq == 0.0 {
                    continue;
                }
                let theta = (m[(q, q)] - m[(p, p)]) / (2.0 * apq);
                let t = if theta.abs() > 1e150 {
                    0.5 / theta
                } else {
                    theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt())
                };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let mkp = m[(k, p)];
                    let mkq = m[(k, q)];
                    m[(k, p)] = c * mkp - s * mkq;
                    m[(k, q)] = s * mkp + c * mkq;
                }
                for k in 0..n {
                    let mpk = m[(p, k)];
                    let mqk = m[(q, k)];
                    m[(p, k)] = c * mpk - s * mqk;
                    m[(q, k)] = s * mpk + c * mqk;
                }
                m[(p, q)] = 0.0;
                m[(q, p)] = 0.0;
                for k in 0..n {
                    let vkp = v[(k, p)];
                    let vkq = v[(k, q)];
                    v[(k, p)] = c * vkp - s * vkq;
                    v[(k, q)] = s * vkp + c * vkq;
                }
            }
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| m[(i, i)].total_cmp(&m[(j, j)]));
    let eigenvalues = order.iter().map(|&i| m[(i, i)]).collect();
    let mut eigenvectors = SmallMatrix::zeros(n, n);
    for (new, &old) in order.iter().enumerate() {
        for k in 0..n {
            eigenvectors[(k, new)] = v[(k, old)];
        }
    }
    Ok(EigenDecomposition {
        eigenvalues,
        eigenvectors,
    })
}

/// Singular value decomposition `A = U diag(σ) Vᵀ` with σ descending.
///
/// `u` is `rows×rows`, `v` is `cols×cols`, `sigma` has `min(rows, cols)` entries.
#[derive(Clone, Debug)]
pub struct Svd {
    pub u: SmallMatrix,
    pub sigma: Vec<f64>,
    pub v: SmallMatrix,
}

impl Svd {
    pub fn reconstruct(&self) -> SmallMatrix {
        let (m, n) = (self.u.rows(), self.v.rows());
        let mut out = SmallMatrix::zeros(m, n);
        for (k, &s) in self.sigma.iter().enumerate() {
            for i in 0..m {
                let ui = self.u[(i, k)] * s;
                for j in 0..n {
                    out[(i, j)] += ui * self.v[(j, k)];
                }
            }
        }
        out
    }
}

pub fn svd(a: &SmallMatrix) -> Result<Svd> {
    if !a.is_finite() {
        return Err(Error::invalid("svd input has non-finite entries"));
    }
    if a.rows() < a.cols() {
        let t = svd_tall(&a.transpose());
        return Ok(Svd {
            u: t.v,
            sigma: t.sigma,
            v: t.u,
        });
    }
    Ok(svd_tall(a))
}

fn svd_tall(a: &SmallMatrix) -> Svd {
    let (m, n) = (a.rows(), a.cols());
    let mut w = a.clone();
    let mut v = SmallMatrix::identity(n);

    for _ in 0..MAX_SWEEPS {
        let mut rotated = false;
        for p in 0..n {
            for q in (p + 1)..n {
                let (mut alpha, mut beta, mut gamma) = (0.0, 0.0, 0.0);
                for i in 0..m {
                    let (wp, wq) = (w[(i, p)], w[(i, q)]);
                    alpha += wp * wp;
                    beta += wq * wq;
                    gamma += wp * wq;
                }
                if gamma == 0.0 || gamma.abs() <= f64::EPSILON * (alpha * beta).sqrt() {
                    continue;
                }
                rotated = true;
                let zeta = (beta - alpha) / (2.0 * gamma);
                let t = if zeta.abs() > 1e150 {
                    0.5 / zeta
                } else {
                    zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt())
                };
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = c * t;
                for i in 0..m {
                    let (wp, wq) = (w[(i, p)], w[(i, q)]);
                    w[(i, p)] = c * wp - s * wq;
                    w[(i, q)] = s * wp + c * wq;
                }
                for i in 0..n {
                    let (vp, vq) = (v[(i, p)], v[(i, q)]);
                    v[(i, p)] = c * vp - s * vq;
                    v[(i, q)] = s * vp + c * vq;
                }
            }
        }
        if !rotated {
            break;
        }
    }

    let norms: Vec<f64> = (0..n)
        .map(|j| (0..m).map(|i| w[(i, j)] * w[(i, j)]).sum::<f64>().sqrt())
        .collect();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| norms[j].total_cmp(&norms[i]).then(i.cmp(&j)));

    let sigma_max = norms.iter().cloned().fold(0.0, f64::max);
    let cutoff = sigma_max * f64::EPSILON * (m as f64);

    let mut u = SmallMatrix::zeros(m, m);
    let mut vs = SmallMatrix::zeros(n, n);
    let mut sigma = Vec::with_capacity(n);
    let mut filled = Vec::with_capacity(m);
    for (k, &j) in order.iter().enumerate() {
        for i in 0..n {
            vs[(i, k)] = v[(i, j)];
        }
        let s = norms[j];
        if s > cutoff && s > 0.0 {
            for i in 0..m {
                u[(i, k)] = w[(i, j)] / s;
            }
            sigma.push(s);
            filled.push(k);
        } else {
            sigma.push(if s > 0.0 { s } else { 0.0 });
        }
    }
    complete_orthonormal(&mut u, &filled);
    Svd { u, sigma, v: vs }
}

/// Fills the columns of `q` not listed in `filled` with an orthonormal
/// completion of the listed ones.
fn complete_orthonormal(q: &mut SmallMatrix, filled: &[usize]) {
    let m = q.rows();
    let mut basis: Vec<Vec<f64>> = filled.iter().map(|&k| q.column(k)).collect();
    let missing: Vec<usize> = (0..q.cols()).filter(|k| !filled.contains(k)).collect();
    for k in missing {
        let mut best: Option<Vec<f64>> = None;
        let mut best_norm = -1.0;
        for e in 0..m {
            let mut cand = vec![0.0; m];
            cand[e] = 1.0;
            for _ in 0..2 {
                for b in &basis {
                    let d: f64 = b.iter().zip(&cand).map(|(x, y)| x * y).sum();
                    for (c, bi) in cand.iter_mut().zip(b) {
                        *c -= d * bi;
                    }
                }
            }
            let nrm = cand.iter().map(|x| x * x).sum::<f64>().sqrt();
            if nrm > best_norm + 1e-12 {
                best_norm = nrm;
                best = Some(cand);
            }
        }
        let mut col = best.expect("completion candidate");
        for c in col.iter_mut() {
            *c /= best_norm;
        }
        for i in 0..m {
            q[(i, k)] = col[i];
        }
        basis.push(col);
    }
}

pub(crate) fn norm_inf(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |acc: f64, x| acc.max(x.abs()))
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub(crate) fn norm2(v: &[f64]) -> f64 {
    dot(v, v).sqrt()
}
