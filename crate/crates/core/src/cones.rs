//! Cones, their Euclidean projections, and the hull-of-rotations constraint
//! builders.
//!
//! `conv(SO(2))` is the unit disk in `(a, b)` for `R = [a −b; b a]` and is
//! emitted as a 3-dimensional second-order cone. `conv(SO(3))` is the set of
//! 3×3 matrices `X` whose 4×4 affine image [`so3_lmi`] is positive
//! semidefinite; it is emitted as a PSD cone of side 4.
//!
//! PSD slacks use the scaled lower-triangular (`svec`) layout: column-major
//! lower triangle with off-diagonal entries multiplied by √2, so that the
//! Euclidean inner product of two `svec`s equals the trace inner product of
//! the matrices.

use std::f64::consts::SQRT_2;

use crate::conic::{ConstraintBlock, SparseRow};
use crate::error::{Error, Result};
use crate::numerics::{self, SmallMatrix, EIG_TOL};

/// Largest PSD side supported.
pub const MAX_PSD_SIDE: usize = 4;

/// Default tolerance for hull membership checks after a solve.
pub const HULL_TOL: f64 = 1e-6;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Cone {
    /// `{0}`; encodes equalities.
    Zero(usize),
    Nonnegative(usize),
    /// `{(t, v) : ‖v‖ ≤ t}` with `t` first.
    SecondOrder(usize),
    PositiveSemidefinite { side: usize },
}

impl Cone {
    pub fn dim(&self) -> usize {
        match *self {
            Cone::Zero(d) | Cone::Nonnegative(d) | Cone::SecondOrder(d) => d,
            Cone::PositiveSemidefinite { side } => side * (side + 1) / 2,
        }
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            Cone::Zero(0) | Cone::Nonnegative(0) => Err(Error::invalid("cone dimension must be at least 1")),
            Cone::SecondOrder(d) if d < 2 => Err(Error::invalid("second-order cone needs dimension >= 2")),
            Cone::PositiveSemidefinite { side } if side == 0 || side > MAX_PSD_SIDE => Err(Error::invalid(
                format!("PSD side {side} outside 1..={MAX_PSD_SIDE}"),
            )),
            _ => Ok(()),
        }
    }

    /// Euclidean projection of `z` onto the cone.
    pub fn project(&self, z: &[f64]) -> Result<Vec<f64>> {
        self.validate()?;
        if z.len() != self.dim() {
            return Err(Error::invalid(format!(
                "vector length {} does not match cone dimension {}",
                z.len(),
                self.dim()
            )));
        }
        if z.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid("cannot project a non-finite vector"));
        }
        Ok(self.project_unchecked(z))
    }

    pub(crate) fn project_unchecked(&self, z: &[f64]) -> Vec<f64> {
        let mut out = z.to_vec();
        self.project_in_place(&mut out);
        out
    }

    pub(crate) fn project_in_place(&self, z: &mut [f64]) {
        match *self {
            Cone::Zero(_) => z.iter_mut().for_each(|v| *v = 0.0),
            Cone::Nonnegative(_) => z.iter_mut().for_each(|v| *v = v.max(0.0)),
            Cone::SecondOrder(_) => project_soc(z),
            Cone::PositiveSemidefinite { side } => project_psd(z, side),
        }
    }

    /// Distance from `z` to the cone.
    pub(crate) fn distance(&self, z: &[f64]) -> f64 {
        let p = self.project_unchecked(z);
        z.iter().zip(&p).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt()
    }
}

/// Projects `z` onto `cone`. See [`Cone::project`].
pub fn project_cone(z: &[f64], cone: Cone) -> Result<Vec<f64>> {
    cone.project(z)
}

fn project_soc(z: &mut [f64]) {
    let t = z[0];
    let nv = numerics::norm2(&z[1..]);
    if nv <= t {
        return;
    }
    if nv <= -t {
        z.iter_mut().for_each(|v| *v = 0.0);
        return;
    }
    let alpha = 0.5 * (nv + t);
    z[0] = alpha;
    let f = alpha / nv;
    z[1..].iter_mut().for_each(|v| *v *= f);
}

fn project_psd(z: &mut [f64], side: usize) {
    let m = smat(z, side);
    let eig = numerics::sym_eig(&m, EIG_TOL).expect("finite PSD slack");
    if eig.eigenvalues[0] >= 0.0 {
        return;
    }
    let clipped = eig.reconstruct_with(|l| l.max(0.0));
    z.copy_from_slice(&svec(&clipped));
}

/// Scaled lower-triangular vectorization of a symmetric matrix.
pub fn svec(m: &SmallMatrix) -> Vec<f64> {
    let n = m.rows();
    let mut out = Vec::with_capacity(n * (n + 1) / 2);
    for j in 0..n {
        for i in j..n {
            let v = 0.5 * (m[(i, j)] + m[(j, i)]);
            out.push(if i == j { v } else { SQRT_2 * v });
        }
    }
    out
}

/// Inverse of [`svec`].
pub fn smat(v: &[f64], side: usize) -> SmallMatrix {
    let mut m = SmallMatrix::zeros(side, side);
    let mut k = 0;
    for j in 0..side {
        for i in j..side {
            if i == j {
                m[(i, i)] = v[k];
            } else {
                let x = v[k] / SQRT_2;
                m[(i, j)] = x;
                m[(j, i)] = x;
            }
            k += 1;
        }
    }
    m
}

/// Relaxed planar rotation `R = [a −b; b a]` with `a² + b² ≤ 1`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct HullRotation2 {
    pub a: f64,
    pub b: f64,
}

impl HullRotation2 {
    pub fn new(a: f64, b: f64) -> Self {
        HullRotation2 { a, b }
    }

    pub fn from_angle(theta: f64) -> Self {
        HullRotation2 {
            a: theta.cos(),
            b: theta.sin(),
        }
    }

    pub fn matrix(&self) -> SmallMatrix {
        SmallMatrix::from_rows(&[[self.a, -self.b], [self.b, self.a]]).expect("2x2")
    }

    pub fn det(&self) -> f64 {
        self.a * self.a + self.b * self.b
    }

    /// Amount by which `‖(a, b)‖` exceeds 1 (zero inside the hull).
    pub fn hull_violation(&self) -> f64 {
        (self.a.hypot(self.b) - 1.0).max(0.0)
    }

    pub fn in_hull(&self, tol: f64) -> bool {
        self.det() <= 1.0 + tol
    }
}

/// Relaxed spatial rotation: any 3×3 matrix in `conv(SO(3))`.
#[derive(Clone, Debug, PartialEq)]
pub struct HullRotation3 {
    pub x: SmallMatrix,
}

impl HullRotation3 {
    pub fn new(x: SmallMatrix) -> Result<Self> {
        if x.rows() != 3 || x.cols() != 3 {
            return Err(Error::invalid("HullRotation3 needs a 3x3 matrix"));
        }
        Ok(HullRotation3 { x })
    }

    pub fn det(&self) -> f64 {
        self.x.determinant()
    }

    /// Smallest eigenvalue of [`so3_lmi`]; non-negative inside the hull.
    pub fn lmi_min_eigenvalue(&self) -> f64 {
        let lmi = so3_lmi(&self.x);
        numerics::sym_eig(&lmi, EIG_TOL)
            .map(|e| e.eigenvalues[0])
            .unwrap_or(f64::NEG_INFINITY)
    }

    pub fn in_hull(&self, tol: f64) -> bool {
        self.lmi_min_eigenvalue() >= -tol
    }
}

/// The 4×4 symmetric matrix whose positive semidefiniteness characterizes
/// `X ∈ conv(SO(3))`.
pub fn so3_lmi(x: &SmallMatrix) -> SmallMatrix {
    let e = |i: usize, j: usize| x[(i - 1, j - 1)];
    let d = [
        1.0 + e(1, 1) + e(2, 2) + e(3, 3),
        1.0 + e(1, 1) - e(2, 2) - e(3, 3),
        1.0 - e(1, 1) + e(2, 2) - e(3, 3),
        1.0 - e(1, 1) - e(2, 2) + e(3, 3),
    ];
    let upper = [
        (0, 1, e(3, 2) - e(2, 3)),
        (0, 2, e(1, 3) - e(3, 1)),
        (0, 3, e(2, 1) - e(1, 2)),
        (1, 2, e(2, 1) + e(1, 2)),
        (1, 3, e(1, 3) + e(3, 1)),
        (2, 3, e(3, 2) + e(2, 3)),
    ];
    let mut m = SmallMatrix::from_diag(&d);
    for (i, j, v) in upper {
        m[(i, j)] = v;
        m[(j, i)] = v;
    }
    m
}

/// Linear part of [`so3_lmi`]: for matrix entry `(r, c)` (0-based) the list of
/// `(i, j, coefficient)` contributions to the 4×4 upper triangle.
fn so3_lmi_coefficients(r: usize, c: usize) -> Vec<(usize, usize, f64)> {
    match (r + 1, c + 1) {
        (1, 1) => vec![(0, 0, 1.0), (1, 1, 1.0), (2, 2, -1.0), (3, 3, -1.0)],
        (2, 2) => vec![(0, 0, 1.0), (1, 1, -1.0), (2, 2, 1.0), (3, 3, -1.0)],
        (3, 3) => vec![(0, 0, 1.0), (1, 1, -1.0), (2, 2, -1.0), (3, 3, 1.0)],
        (3, 2) => vec![(0, 1, 1.0), (2, 3, 1.0)],
        (2, 3) => vec![(0, 1, -1.0), (2, 3, 1.0)],
        (1, 3) => vec![(0, 2, 1.0), (1, 3, 1.0)],
        (3, 1) => vec![(0, 2, -1.0), (1, 3, 1.0)],
        (2, 1) => vec![(0, 3, 1.0), (1, 2, 1.0)],
        (1, 2) => vec![(0, 3, -1.0), (1, 2, 1.0)],
        _ => unreachable!("3x3 entries only"),
    }
}

fn check_indices(indices: &[usize], n_vars: usize) -> Result<()> {
    for (k, &i) in indices.iter().enumerate() {
        if i >= n_vars {
            return Err(Error::invalid(format!("variable index {i} out of range (n = {n_vars})")));
        }
        if indices[..k].contains(&i) {
            return Err(Error::invalid(format!("variable index {i} used twice")));
        }
    }
    Ok(())
}

/// Second-order cone block encoding `‖(a, b)‖ ≤ 1`.
pub fn so2_hull_rows(a: usize, b: usize, n_vars: usize) -> Result<ConstraintBlock> {
    check_indices(&[a, b], n_vars)?;
    ConstraintBlock::new(
        Cone::SecondOrder(3),
        vec![vec![], vec![(a, -1.0)], vec![(b, -1.0)]],
        vec![1.0, 0.0, 0.0],
    )
}

/// PSD block of side 4 encoding `X ∈ conv(SO(3))`, with `indices` holding the
/// variables for `x11, x12, …, x33` in row-major order.
pub fn so3_hull_rows(indices: &[usize; 9], n_vars: usize) -> Result<ConstraintBlock> {
    check_indices(indices, n_vars)?;
    const SIDE: usize = 4;
    let dim = SIDE * (SIDE + 1) / 2;
    let mut rows: Vec<SparseRow> = vec![Vec::new(); dim];
    for (k, &var) in indices.iter().enumerate() {
        for (i, j, coef) in so3_lmi_coefficients(k / 3, k % 3) {
            let scale = if i == j { 1.0 } else { SQRT_2 };
            rows[svec_position(i, j, SIDE)].push((var, -coef * scale));
        }
    }
    for row in &mut rows {
        row.sort_by_key(|&(j, _)| j);
    }
    let offsets = svec(&SmallMatrix::identity(SIDE));
    ConstraintBlock::new(Cone::PositiveSemidefinite { side: SIDE }, rows, offsets)
}

fn svec_position(i: usize, j: usize, side: usize) -> usize {
    let (r, c) = if i >= j { (i, j) } else { (j, i) };
    let before: usize = (0..c).map(|col| side - col).sum();
    before + (r - c)
}

/// Nearest proper rotation to a square matrix in Frobenius norm.
#[derive(Clone, Debug, PartialEq)]
pub struct Projection {
    pub rotation: SmallMatrix,
    /// `‖S − rotation‖_F`.
    pub distance: f64,
    /// False when the nearest rotation is not unique (e.g. `S = 0`).
    pub unique: bool,
}

/// Projects `s` onto `SO(n)` for `n ∈ {2, 3}`.
///
/// Uses `U · diag(1, …, 1, det(UVᵀ)) · Vᵀ`, so the result is a proper rotation
/// even when `det(s) ≤ 0`.
pub fn project_to_son(s: &SmallMatrix) -> Result<Projection> {
    if !s.is_square() || !(2..=3).contains(&s.rows()) {
        return Err(Error::invalid("project_to_son needs a 2x2 or 3x3 matrix"));
    }
    if !s.is_finite() {
        return Err(Error::invalid("project_to_son input has non-finite entries"));
    }
    let n = s.rows();
    let dec = numerics::svd(s)?;
    let uvt = dec.u.matmul(&dec.v.transpose());
    let sign = if uvt.determinant() < 0.0 { -1.0 } else { 1.0 };
    let mut d = vec![1.0; n];
    d[n - 1] = sign;
    let rotation = dec.u.matmul(&SmallMatrix::from_diag(&d)).matmul(&dec.v.transpose());

    let sig = &dec.sigma;
    let eps = 1e-12 * sig[0].max(1.0);
    let unique = if sign > 0.0 {
        sig[n - 2] + sig[n - 1] > eps
    } else {
        sig[n - 2] - sig[n - 1] > eps
    };
    let distance = s.sub(&rotation).frobenius_norm();
    Ok(Projection {
        rotation,
        distance,
        unique,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn quat_rotation(w: f64, x: f64, y: f64, z: f64) -> SmallMatrix {
        let n = (w * w + x * x + y * y + z * z).sqrt();
        let (w, x, y, z) = (w / n, x / n, y / n, z / n);
        SmallMatrix::from_rows(&[
            [1.0 - 2.0 * (y * y + z * z), 2.0 * (x * y - w * z), 2.0 * (x * z + w * y)],
            [2.0 * (x * y + w * z), 1.0 - 2.0 * (x * x + z * z), 2.0 * (y * z - w * x)],
            [2.0 * (x * z - w * y), 2.0 * (y * z + w * x), 1.0 - 2.0 * (x * x + y * y)],
        ])
        .unwrap()
    }

    fn random_quat_rotation(rng: &mut ChaCha8Rng) -> SmallMatrix {
        loop {
            let q: [f64; 4] = [
                rng.gen_range(-1.0..1.0),
                rng.gen_range(-1.0..1.0),
                rng.gen_range(-1.0..1.0),
                rng.gen_range(-1.0..1.0),
            ];
            let n2: f64 = q.iter().map(|v| v * v).sum();
            if n2 > 1e-3 && n2 <= 1.0 {
                return quat_rotation(q[0], q[1], q[2], q[3]);
            }
        }
    }

    #[test]
    fn nonnegative_projection_clamps() {
        assert_eq!(project_cone(&[-1.0, 2.0], Cone::Nonnegative(2)).unwrap(), vec![0.0, 2.0]);
    }

    #[test]
    fn soc_projection_boundary_case() {
        let p = project_cone(&[0.0, 1.0, 0.0], Cone::SecondOrder(3)).unwrap();
        assert_eq!(p, vec![0.5, 0.5, 0.0]);
    }

    #[test]
    fn soc_projection_beats_boundary_grid() {
        // grid over the boundary {(r, r cos φ, r sin φ)} plus the apex
        let z = [0.0, 1.0, 0.0];
        let p = project_cone(&z, Cone::SecondOrder(3)).unwrap();
        let dp = ((p[0] - z[0]).powi(2) + (p[1] - z[1]).powi(2) + (p[2] - z[2]).powi(2)).sqrt();
        let mut best = (z[0].powi(2) + z[1].powi(2) + z[2].powi(2)).sqrt();
        for i in 0..=400 {
            let r = 2.0 * i as f64 / 400.0;
            for k in 0..360 {
                let phi = (k as f64).to_radians();
                let c = [r, r * phi.cos(), r * phi.sin()];
                let d = ((c[0] - z[0]).powi(2) + (c[1] - z[1]).powi(2) + (c[2] - z[2]).powi(2)).sqrt();
                best = best.min(d);
            }
        }
        assert!(dp <= best + 1e-12);
        assert!((dp - best).abs() < 1e-4);
    }

    #[test]
    fn psd_projection_clips_diagonal() {
        let z = svec(&SmallMatrix::from_diag(&[-1.0, 3.0]));
        let p = project_cone(&z, Cone::PositiveSemidefinite { side: 2 }).unwrap();
        let m = smat(&p, 2);
        assert!(m.sub(&SmallMatrix::from_diag(&[0.0, 3.0])).frobenius_norm() < 1e-14);
    }

    #[test]
    fn dimension_mismatch_rejected() {
        assert!(project_cone(&[1.0, 2.0], Cone::SecondOrder(3)).is_err());
        assert!(Cone::PositiveSemidefinite { side: 5 }.validate().is_err());
    }

    #[test]
    fn svec_round_trip_and_inner_product() {
        let a = SmallMatrix::from_rows(&[[1.0, 2.0, 3.0], [2.0, -1.0, 0.5], [3.0, 0.5, 4.0]]).unwrap();
        let b = SmallMatrix::from_rows(&[[0.2, -1.0, 0.0], [-1.0, 2.0, 1.5], [0.0, 1.5, -3.0]]).unwrap();
        assert_eq!(smat(&svec(&a), 3), a);
        let ip: f64 = svec(&a).iter().zip(svec(&b)).map(|(x, y)| x * y).sum();
        assert!((ip - a.dot(&b)).abs() < 1e-12);
        assert_eq!(svec_position(3, 3, 4), 9);
        assert_eq!(svec_position(1, 2, 4), 5);
        assert_eq!(svec_position(2, 0, 4), 2);
    }

    #[test]
    fn so2_rows_membership() {
        let block = so2_hull_rows(0, 1, 2).unwrap();
        assert_eq!(block.violation(&[1.0, 0.0]), 0.0);
        assert_eq!(block.violation(&[0.6, 0.8]), 0.0);
        assert!((HullRotation2::new(0.6, 0.8).det() - 1.0).abs() < 1e-15);
        assert!(block.violation(&[0.9, 0.9]) > 0.1);
        assert!(so2_hull_rows(0, 2, 2).is_err());
        assert!(so2_hull_rows(1, 1, 2).is_err());
    }

    #[test]
    fn so3_lmi_at_identity_and_zero() {
        let lmi = so3_lmi(&SmallMatrix::identity(3));
        assert_eq!(lmi, SmallMatrix::from_diag(&[4.0, 0.0, 0.0, 0.0]));
        assert_eq!(so3_lmi(&SmallMatrix::zeros(3, 3)), SmallMatrix::identity(4));
    }

    #[test]
    fn so3_rows_reproduce_lmi() {
        let idx: [usize; 9] = [3, 4, 5, 6, 7, 8, 9, 10, 11];
        let block = so3_hull_rows(&idx, 12).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..20 {
            let x: Vec<f64> = (0..12).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let xm = SmallMatrix::from_row_major(3, 3, x[3..].to_vec()).unwrap();
            let want = svec(&so3_lmi(&xm));
            let got = block.slack(&x);
            for (g, w) in got.iter().zip(&want) {
                assert!((g - w).abs() < 1e-14);
            }
        }
        let mut dup = idx;
        dup[4] = dup[0];
        assert!(so3_hull_rows(&dup, 12).is_err());
    }

    #[test]
    fn quaternion_rotations_satisfy_lmi() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        for _ in 0..1000 {
            let r = random_quat_rotation(&mut rng);
            assert!((r.determinant() - 1.0).abs() < 1e-12);
            let h = HullRotation3::new(r).unwrap();
            assert!(h.lmi_min_eigenvalue() >= -1e-9);
        }
    }

    #[test]
    fn lmi_rejects_improper_and_scaled_up() {
        let reflect = SmallMatrix::from_diag(&[1.0, 1.0, -1.0]);
        assert!(!HullRotation3::new(reflect).unwrap().in_hull(1e-9));
        let big = SmallMatrix::identity(3).scale(1.1);
        assert!(!HullRotation3::new(big).unwrap().in_hull(1e-9));
    }

    #[test]
    fn projection_examples() {
        let p = project_to_son(&SmallMatrix::identity(3)).unwrap();
        assert!(p.rotation.sub(&SmallMatrix::identity(3)).frobenius_norm() < 1e-14);
        assert!(p.distance < 1e-14 && p.unique);

        let p = project_to_son(&SmallMatrix::identity(2).scale(0.5)).unwrap();
        assert!(p.rotation.sub(&SmallMatrix::identity(2)).frobenius_norm() < 1e-14);
        assert!(p.unique);

        let p = project_to_son(&SmallMatrix::zeros(3, 3)).unwrap();
        assert!(!p.unique);
        assert!((p.rotation.determinant() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn projection_fixes_reflections() {
        let s = SmallMatrix::from_diag(&[1.0, 1.0, -1.0]).scale(0.8);
        let p = project_to_son(&s).unwrap();
        assert!((p.rotation.determinant() - 1.0).abs() < 1e-12);
        assert!(p.rotation.orthogonality_error() < 1e-12);
        // smallest singular value ties with the others, so the flip is ambiguous
        assert!(!p.unique);
    }

    #[test]
    fn projection_beats_random_rotations() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let samples: Vec<SmallMatrix> = (0..100_000).map(|_| random_quat_rotation(&mut rng)).collect();
        for _ in 0..5 {
            let mut s = SmallMatrix::zeros(3, 3);
            let w: Vec<f64> = (0..5).map(|_| rng.gen_range(0.0..1.0)).collect();
            let total: f64 = w.iter().sum();
            for wi in &w {
                s = s.add(&random_quat_rotation(&mut rng).scale(wi / total));
            }
            let p = project_to_son(&s).unwrap();
            let best = samples
                .iter()
                .map(|r| r.sub(&s).frobenius_norm())
                .fold(f64::INFINITY, f64::min);
            assert!(p.distance <= best + 1e-12);
        }
    }

    fn mat3() -> impl Strategy<Value = SmallMatrix> {
        proptest::collection::vec(-3.0f64..3.0, 9).prop_map(|d| SmallMatrix::from_row_major(3, 3, d).unwrap())
    }

    proptest! {
        #[test]
        fn projection_is_idempotent_and_proper(s in mat3()) {
            let p = project_to_son(&s).unwrap();
            prop_assert!(p.rotation.orthogonality_error() <= 1e-9);
            prop_assert!((p.rotation.determinant() - 1.0).abs() <= 1e-9);
            let pp = project_to_son(&p.rotation).unwrap();
            prop_assert!(pp.rotation.sub(&p.rotation).frobenius_norm() <= 1e-9);
        }

        #[test]
        fn cone_projection_idempotent_nonexpansive(
            a in proptest::collection::vec(-5.0f64..5.0, 10),
            b in proptest::collection::vec(-5.0f64..5.0, 10),
        ) {
            for cone in [Cone::Nonnegative(10), Cone::SecondOrder(10), Cone::PositiveSemidefinite { side: 4 }, Cone::Zero(10)] {
                let pa = cone.project(&a).unwrap();
                let pb = cone.project(&b).unwrap();
                let ppa = cone.project(&pa).unwrap();
                let d_proj: f64 = pa.iter().zip(&pb).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt();
                let d_in: f64 = a.iter().zip(&b).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt();
                prop_assert!(d_proj <= d_in + 1e-12);
                for (x, y) in pa.iter().zip(&ppa) {
                    prop_assert!((x - y).abs() <= 1e-10);
                }
            }
        }

        #[test]
        fn psd_projection_is_eigen_clipping(d in proptest::collection::vec(-5.0f64..5.0, 10)) {
            let p = Cone::PositiveSemidefinite { side: 4 }.project(&d).unwrap();
            let e = numerics::sym_eig(&smat(&d, 4), EIG_TOL).unwrap();
            let want = svec(&e.reconstruct_with(|l| l.max(0.0)));
            for (x, y) in p.iter().zip(&want) {
                prop_assert!((x - y).abs() <= 1e-10);
            }
        }

        #[test]
        fn unit_circle_points_have_zero_soc_residual(theta in 0.0f64..std::f64::consts::TAU) {
            let block = so2_hull_rows(0, 1, 2).unwrap();
            let h = HullRotation2::from_angle(theta);
            prop_assert!(block.violation(&[h.a, h.b]) <= 1e-12);
        }
    }
}
