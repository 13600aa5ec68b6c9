//! Dense complex linear algebra.
//!
//! Matrices are indexed `(row, col)`. In tensor products the left factor is
//! the most significant index: for `a ⊗ b` with `b` of size `n`, the basis
//! vector `|i⟩|j⟩` sits at position `i * n + j`. Every bipartite operator in
//! the crate follows this left-to-right convention.

use nalgebra::DMatrix;
use num_complex::Complex64;
use std::ops::{Add, Mul, Neg, Sub};

use crate::error::{EcdError, Result};

pub type C64 = Complex64;

/// Relative tolerance on `‖A − A†‖_∞ / max(1, ‖A‖_∞)` accepted when building a
/// [`HermitianMatrix`].
pub const HERMITIAN_TOL: f64 = 1e-10;

/// Relative residual `‖AV − VΛ‖_F / ‖A‖_F` required from [`eig_hermitian`].
pub const EIG_TOL: f64 = 1e-9;

/// Largest matrix side the crate will allocate through [`tensor`].
pub const DIM_BUDGET: usize = 1 << 13;

const EIG_MAX_ITER: usize = 10_000;

pub(crate) fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

/// Dense complex matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct ComplexMatrix {
    inner: DMatrix<C64>,
}

impl ComplexMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self { inner: DMatrix::zeros(rows, cols) }
    }

    pub fn identity(n: usize) -> Self {
        Self { inner: DMatrix::identity(n, n) }
    }

    /// Builds a matrix from entries listed row by row. Rejects NaN/Inf.
    pub fn from_row_major(rows: usize, cols: usize, entries: Vec<C64>) -> Result<Self> {
        if entries.len() != rows * cols {
            return Err(EcdError::DimensionMismatch(format!("{} entries for a {rows}x{cols} matrix", entries.len())));
        }
        if let Some(k) = entries.iter().position(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(EcdError::NonFinite { row: k / cols.max(1), col: k % cols.max(1) });
        }
        Ok(Self { inner: DMatrix::from_row_slice(rows, cols, &entries) })
    }

    pub fn from_fn(rows: usize, cols: usize, f: impl FnMut(usize, usize) -> C64) -> Self {
        Self { inner: DMatrix::from_fn(rows, cols, f) }
    }

    pub fn from_real_diagonal(diag: &[f64]) -> Self {
        let n = diag.len();
        Self::from_fn(n, n, |i, j| if i == j { c(diag[i], 0.0) } else { C64::default() })
    }

    /// Outer product `|u⟩⟨v|`.
    pub fn outer(u: &[C64], v: &[C64]) -> Self {
        Self::from_fn(u.len(), v.len(), |i, j| u[i] * v[j].conj())
    }

    pub fn from_dmatrix(inner: DMatrix<C64>) -> Self {
        Self { inner }
    }

    pub fn as_dmatrix(&self) -> &DMatrix<C64> {
        &self.inner
    }

    pub fn into_dmatrix(self) -> DMatrix<C64> {
        self.inner
    }

    pub fn rows(&self) -> usize {
        self.inner.nrows()
    }

    pub fn cols(&self) -> usize {
        self.inner.ncols()
    }

    pub fn is_square(&self) -> bool {
        self.rows() == self.cols()
    }

    pub fn get(&self, row: usize, col: usize) -> C64 {
        self.inner[(row, col)]
    }

    pub fn set(&mut self, row: usize, col: usize, value: C64) {
        self.inner[(row, col)] = value;
    }

    /// Entries in row-major order.
    pub fn to_row_major(&self) -> Vec<C64> {
        let mut out = Vec::with_capacity(self.rows() * self.cols());
        for i in 0..self.rows() {
            for j in 0..self.cols() {
                out.push(self.inner[(i, j)]);
            }
        }
        out
    }

    pub fn adjoint(&self) -> Self {
        Self { inner: self.inner.adjoint() }
    }

    pub fn transpose(&self) -> Self {
        Self { inner: self.inner.transpose() }
    }

    pub fn conj(&self) -> Self {
        Self { inner: self.inner.map(|z| z.conj()) }
    }

    pub fn scale(&self, s: f64) -> Self {
        Self { inner: self.inner.map(|z| z * s) }
    }

    pub fn scale_complex(&self, s: C64) -> Self {
        Self { inner: self.inner.map(|z| z * s) }
    }

    pub fn trace(&self) -> C64 {
        self.inner.trace()
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.inner.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    /// Largest entry modulus.
    pub fn max_abs(&self) -> f64 {
        self.inner.iter().fold(0.0, |m, z| m.max(z.norm()))
    }

    /// `‖A − A†‖_∞ / max(1, ‖A‖_∞)` on entries.
    pub fn hermiticity_residual(&self) -> f64 {
        if !self.is_square() {
            return f64::INFINITY;
        }
        let n = self.rows();
        let mut r: f64 = 0.0;
        for i in 0..n {
            for j in i..n {
                r = r.max((self.inner[(i, j)] - self.inner[(j, i)].conj()).norm());
            }
        }
        r / self.max_abs().max(1.0)
    }

    /// Returns `(A + A†)/2` without checking.
    pub fn hermitian_part(&self) -> HermitianMatrix {
        let sym = (&self.inner + self.inner.adjoint()) * c(0.5, 0.0);
        HermitianMatrix { inner: ComplexMatrix { inner: sym } }
    }

    /// Matrix-vector product.
    pub fn apply(&self, v: &[C64]) -> Vec<C64> {
        (0..self.rows()).map(|i| (0..self.cols()).map(|j| self.inner[(i, j)] * v[j]).sum()).collect()
    }

    /// `⟨u| A |v⟩`.
    pub fn sandwich(&self, u: &[C64], v: &[C64]) -> C64 {
        let av = self.apply(v);
        u.iter().zip(av).map(|(a, b)| a.conj() * b).sum()
    }
}

impl Add for &ComplexMatrix {
    type Output = ComplexMatrix;
    fn add(self, rhs: &ComplexMatrix) -> ComplexMatrix {
        ComplexMatrix { inner: &self.inner + &rhs.inner }
    }
}

impl Sub for &ComplexMatrix {
    type Output = ComplexMatrix;
    fn sub(self, rhs: &ComplexMatrix) -> ComplexMatrix {
        ComplexMatrix { inner: &self.inner - &rhs.inner }
    }
}

impl Mul for &ComplexMatrix {
    type Output = ComplexMatrix;
    fn mul(self, rhs: &ComplexMatrix) -> ComplexMatrix {
        ComplexMatrix { inner: &self.inner * &rhs.inner }
    }
}

impl Neg for &ComplexMatrix {
    type Output = ComplexMatrix;
    fn neg(self) -> ComplexMatrix {
        ComplexMatrix { inner: -&self.inner }
    }
}

/// Hermitian matrix, stored symmetrized.
#[derive(Clone, Debug, PartialEq)]
pub struct HermitianMatrix {
    inner: ComplexMatrix,
}

impl HermitianMatrix {
    /// Accepts `a` if its Hermiticity residual is within [`HERMITIAN_TOL`] and
    /// stores `(A + A†)/2`.
    pub fn new(a: ComplexMatrix) -> Result<Self> {
        if !a.is_square() {
            return Err(EcdError::DimensionMismatch(format!(
                "Hermitian matrix must be square, got {}x{}",
                a.rows(),
                a.cols()
            )));
        }
        let residual = a.hermiticity_residual();
        if !residual.is_finite() || residual > HERMITIAN_TOL {
            return Err(EcdError::NotHermitian { residual });
        }
        Ok(a.hermitian_part())
    }

    pub fn zeros(n: usize) -> Self {
        Self { inner: ComplexMatrix::zeros(n, n) }
    }

    pub fn identity(n: usize) -> Self {
        Self { inner: ComplexMatrix::identity(n) }
    }

    pub fn from_real_diagonal(diag: &[f64]) -> Self {
        Self { inner: ComplexMatrix::from_real_diagonal(diag) }
    }

    /// `|ψ⟩⟨ψ|`.
    pub fn projector(psi: &[C64]) -> Self {
        Self { inner: ComplexMatrix::outer(psi, psi) }
    }

    pub fn dim(&self) -> usize {
        self.inner.rows()
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.inner
    }

    pub fn into_matrix(self) -> ComplexMatrix {
        self.inner
    }

    pub fn get(&self, row: usize, col: usize) -> C64 {
        self.inner.get(row, col)
    }

    pub fn trace(&self) -> f64 {
        self.inner.trace().re
    }

    pub fn scale(&self, s: f64) -> Self {
        Self { inner: self.inner.scale(s) }
    }

    /// Real diagonal entries.
    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.dim()).map(|i| self.inner.get(i, i).re).collect()
    }

    /// `tr(self · other)` for two Hermitian matrices (always real).
    pub fn inner_product(&self, other: &HermitianMatrix) -> f64 {
        let a = self.inner.as_dmatrix();
        let b = other.inner.as_dmatrix();
        let mut s = 0.0;
        for i in 0..a.nrows() {
            for j in 0..a.ncols() {
                s += (a[(i, j)] * b[(j, i)]).re;
            }
        }
        s
    }

    pub fn is_diagonal(&self, tol: f64) -> bool {
        let n = self.dim();
        (0..n).all(|i| (0..n).all(|j| i == j || self.inner.get(i, j).norm() <= tol))
    }

    /// Conjugation `B A B†`, which preserves Hermiticity.
    pub fn congruence(&self, b: &ComplexMatrix) -> HermitianMatrix {
        (&(b * &self.inner) * &b.adjoint()).hermitian_part()
    }

    pub fn min_eigenvalue(&self) -> Result<f64> {
        Ok(eig_hermitian(self)?.values.first().copied().unwrap_or(0.0))
    }
}

impl Add for &HermitianMatrix {
    type Output = HermitianMatrix;
    fn add(self, rhs: &HermitianMatrix) -> HermitianMatrix {
        HermitianMatrix { inner: &self.inner + &rhs.inner }
    }
}

impl Sub for &HermitianMatrix {
    type Output = HermitianMatrix;
    fn sub(self, rhs: &HermitianMatrix) -> HermitianMatrix {
        HermitianMatrix { inner: &self.inner - &rhs.inner }
    }
}

/// Eigendecomposition `A = V diag(λ) V†` with ascending eigenvalues; column
/// `k` of `vectors` belongs to `values[k]`.
#[derive(Clone, Debug)]
pub struct Eigh {
    pub values: Vec<f64>,
    pub vectors: ComplexMatrix,
}

impl Eigh {
    pub fn vector(&self, k: usize) -> Vec<C64> {
        let v = self.vectors.as_dmatrix();
        (0..v.nrows()).map(|i| v[(i, k)]).collect()
    }

    /// `V f(Λ) V†`.
    pub fn reconstruct_with(&self, f: impl Fn(f64) -> f64) -> HermitianMatrix {
        let v = self.vectors.as_dmatrix();
        let n = v.nrows();
        let mut scaled = v.clone();
        for (k, &lam) in self.values.iter().enumerate() {
            let w = f(lam);
            for i in 0..n {
                scaled[(i, k)] *= w;
            }
        }
        ComplexMatrix::from_dmatrix(scaled * v.adjoint()).hermitian_part()
    }
}

/// Hermitian eigendecomposition (Householder tridiagonalization followed by
/// implicit QR), sorted ascending.
pub fn eig_hermitian(a: &HermitianMatrix) -> Result<Eigh> {
    let n = a.dim();
    if n == 0 {
        return Ok(Eigh { values: vec![], vectors: ComplexMatrix::zeros(0, 0) });
    }
    let m = a.matrix().as_dmatrix();
    let scale = a.matrix().frobenius_norm();
    // real symmetric input takes the (much faster) real path
    let (raw_values, raw_vectors): (Vec<f64>, DMatrix<C64>) = if m.iter().all(|z| z.im == 0.0) {
        let re = m.map(|z| z.re);
        let eig = nalgebra::SymmetricEigen::try_new(re, f64::EPSILON, EIG_MAX_ITER)
            .ok_or(EcdError::SolverFailure { residual: f64::NAN })?;
        (eig.eigenvalues.iter().copied().collect(), eig.eigenvectors.map(|x| C64::new(x, 0.0)))
    } else {
        let eig = nalgebra::SymmetricEigen::try_new(m.clone(), f64::EPSILON, EIG_MAX_ITER)
            .ok_or(EcdError::SolverFailure { residual: f64::NAN })?;
        (eig.eigenvalues.iter().copied().collect(), eig.eigenvectors)
    };

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| raw_values[i].total_cmp(&raw_values[j]));
    let values: Vec<f64> = order.iter().map(|&k| raw_values[k]).collect();
    let vectors = DMatrix::from_fn(n, n, |i, j| raw_vectors[(i, order[j])]);

    if values.iter().any(|v| !v.is_finite()) {
        return Err(EcdError::SolverFailure { residual: f64::NAN });
    }
    if scale > 0.0 {
        let av = a.matrix().as_dmatrix() * &vectors;
        let mut res = 0.0;
        for j in 0..n {
            for i in 0..n {
                res += (av[(i, j)] - vectors[(i, j)] * values[j]).norm_sqr();
            }
        }
        let residual = res.sqrt() / scale;
        if residual > EIG_TOL {
            return Err(EcdError::SolverFailure { residual });
        }
    }
    Ok(Eigh { values, vectors: ComplexMatrix::from_dmatrix(vectors) })
}

/// Sum of singular values.
pub fn trace_norm(a: &ComplexMatrix) -> Result<f64> {
    if !a.is_square() {
        return Err(EcdError::DimensionMismatch(format!(
            "trace norm needs a square matrix, got {}x{}",
            a.rows(),
            a.cols()
        )));
    }
    if a.hermiticity_residual() <= HERMITIAN_TOL {
        let e = eig_hermitian(&a.hermitian_part())?;
        return Ok(e.values.iter().map(|v| v.abs()).sum());
    }
    let svd = nalgebra::SVD::try_new(a.as_dmatrix().clone(), false, false, f64::EPSILON, EIG_MAX_ITER)
        .ok_or(EcdError::SolverFailure { residual: f64::NAN })?;
    Ok(svd.singular_values.iter().sum())
}

/// Kronecker product `a ⊗ b`.
pub fn tensor(a: &ComplexMatrix, b: &ComplexMatrix) -> Result<ComplexMatrix> {
    let rows = a.rows() * b.rows();
    let cols = a.cols() * b.cols();
    let side = rows.max(cols);
    if side > DIM_BUDGET {
        return Err(EcdError::Capacity { dim: side, budget: DIM_BUDGET });
    }
    Ok(ComplexMatrix::from_dmatrix(a.as_dmatrix().kronecker(b.as_dmatrix())))
}

/// Kronecker product of two vectors.
pub fn tensor_vec(u: &[C64], v: &[C64]) -> Vec<C64> {
    u.iter().flat_map(|&a| v.iter().map(move |&b| a * b)).collect()
}

/// Factor of a bipartite system.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Subsystem {
    First,
    Second,
}

/// Partial trace over the factor not named by `keep`, for an operator on a
/// `dims.0 · dims.1` dimensional space ordered `first ⊗ second`.
pub fn partial_trace(a: &ComplexMatrix, dims: (usize, usize), keep: Subsystem) -> Result<ComplexMatrix> {
    let (da, db) = dims;
    if a.rows() != da * db || a.cols() != da * db {
        return Err(EcdError::DimensionMismatch(format!(
            "partial trace over {da}x{db} system applied to {}x{} matrix",
            a.rows(),
            a.cols()
        )));
    }
    let m = a.as_dmatrix();
    let out = match keep {
        Subsystem::First => DMatrix::from_fn(da, da, |i, j| (0..db).map(|k| m[(i * db + k, j * db + k)]).sum()),
        Subsystem::Second => DMatrix::from_fn(db, db, |i, j| (0..da).map(|k| m[(k * db + i, k * db + j)]).sum()),
    };
    Ok(ComplexMatrix::from_dmatrix(out))
}

pub fn partial_trace_hermitian(a: &HermitianMatrix, dims: (usize, usize), keep: Subsystem) -> Result<HermitianMatrix> {
    Ok(partial_trace(a.matrix(), dims, keep)?.hermitian_part())
}

/// Nearest positive semidefinite matrix in Frobenius norm.
pub fn psd_project(a: &HermitianMatrix) -> Result<HermitianMatrix> {
    let e = eig_hermitian(a)?;
    Ok(e.reconstruct_with(|v| v.max(0.0)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_hermitian(n: usize, rng: &mut impl Rng) -> HermitianMatrix {
        ComplexMatrix::from_fn(n, n, |_, _| c(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
            .hermitian_part()
    }

    #[test]
    fn eig_identity_and_diagonal() {
        let e = eig_hermitian(&HermitianMatrix::identity(2)).unwrap();
        assert_eq!(e.values, vec![1.0, 1.0]);

        let e = eig_hermitian(&HermitianMatrix::from_real_diagonal(&[3.0, 1.0])).unwrap();
        assert!((e.values[0] - 1.0).abs() < 1e-14 && (e.values[1] - 3.0).abs() < 1e-14);
        // eigenvector of 1 is the second basis vector
        assert!((e.vectors.get(1, 0).norm() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn eig_pauli_x() {
        let x = ComplexMatrix::from_row_major(2, 2, vec![c(0., 0.), c(1., 0.), c(1., 0.), c(0., 0.)]).unwrap();
        let e = eig_hermitian(&HermitianMatrix::new(x).unwrap()).unwrap();
        assert!((e.values[0] + 1.0).abs() < 1e-14);
        assert!((e.values[1] - 1.0).abs() < 1e-14);
    }

    #[test]
    fn eig_residual_random_up_to_256() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for &n in &[1, 2, 5, 17, 64, 256] {
            let a = random_hermitian(n, &mut rng);
            let e = eig_hermitian(&a).unwrap();
            let v = e.vectors.as_dmatrix();
            let av = a.matrix().as_dmatrix() * v;
            let vl = DMatrix::from_fn(n, n, |i, j| v[(i, j)] * e.values[j]);
            let res = (av - vl).iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
            assert!(res <= EIG_TOL * a.matrix().frobenius_norm(), "n={n} res={res}");
            let gram = v.adjoint() * v - DMatrix::<C64>::identity(n, n);
            assert!(gram.iter().all(|z| z.norm() < EIG_TOL));
            assert!(e.values.windows(2).all(|w| w[0] <= w[1]));
        }
    }

    #[test]
    fn trace_norm_examples() {
        assert_eq!(trace_norm(&ComplexMatrix::zeros(3, 3)).unwrap(), 0.0);
        let d = ComplexMatrix::from_real_diagonal(&[1.0, -2.0]);
        assert!((trace_norm(&d).unwrap() - 3.0).abs() < 1e-14);
    }

    #[test]
    fn trace_norm_of_pure_state_difference() {
        // |ψ⟩ = |0⟩, |φ⟩ = c|0⟩ + s|1⟩ → 2 sqrt(1 − c²)
        for &overlap in &[0.0, 0.3, 0.8, 1.0f64] {
            let s = (1.0 - overlap * overlap).sqrt();
            let psi = [c(1.0, 0.0), c(0.0, 0.0)];
            let phi = [c(overlap, 0.0), c(0.0, s)];
            let diff = HermitianMatrix::projector(&psi).matrix() - HermitianMatrix::projector(&phi).matrix();
            let tn = trace_norm(&diff).unwrap();
            assert!((tn - 2.0 * s).abs() < 1e-12, "overlap {overlap}: {tn}");
        }
    }

    #[test]
    fn trace_norm_non_hermitian_uses_singular_values() {
        let a = ComplexMatrix::from_row_major(2, 2, vec![c(0., 0.), c(3., 0.), c(0., 0.), c(0., 0.)]).unwrap();
        assert!((trace_norm(&a).unwrap() - 3.0).abs() < 1e-12);
    }

    #[test]
    fn tensor_examples() {
        let i2 = ComplexMatrix::identity(2);
        assert_eq!(tensor(&i2, &i2).unwrap(), ComplexMatrix::identity(4));
        let a = ComplexMatrix::from_real_diagonal(&[2.0, 3.0]);
        let b = ComplexMatrix::from_real_diagonal(&[5.0, 7.0]);
        assert_eq!(tensor(&a, &b).unwrap(), ComplexMatrix::from_real_diagonal(&[10.0, 14.0, 15.0, 21.0]));
        let x = ComplexMatrix::from_row_major(2, 2, vec![c(0., 0.), c(1., 0.), c(1., 0.), c(0., 0.)]).unwrap();
        let xx = tensor(&x, &x).unwrap();
        assert_eq!(&xx * &xx, ComplexMatrix::identity(4));
    }

    #[test]
    fn tensor_budget() {
        let big = ComplexMatrix::zeros(DIM_BUDGET, 1);
        assert!(matches!(tensor(&big, &ComplexMatrix::zeros(2, 1)), Err(EcdError::Capacity { .. })));
    }

    #[test]
    fn partial_trace_examples() {
        let bell = [c(1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(1.0, 0.0)].map(|z| z / 2f64.sqrt());
        let p = HermitianMatrix::projector(&bell);
        let ra = partial_trace(p.matrix(), (2, 2), Subsystem::First).unwrap();
        assert!((&ra - &ComplexMatrix::identity(2).scale(0.5)).max_abs() < 1e-15);

        let rho = ComplexMatrix::from_real_diagonal(&[0.25, 0.75]);
        let sigma = ComplexMatrix::from_row_major(3, 3, (0..9).map(|k| c(k as f64, 0.0)).collect()).unwrap();
        let prod = tensor(&rho, &sigma).unwrap();
        let rb = partial_trace(&prod, (2, 3), Subsystem::Second).unwrap();
        assert!((&rb - &sigma).max_abs() < 1e-14);
        assert!(partial_trace(&prod, (3, 3), Subsystem::First).is_err());
    }

    #[test]
    fn psd_project_examples() {
        let p = HermitianMatrix::from_real_diagonal(&[2.0, 0.5]);
        assert!((psd_project(&p).unwrap().matrix() - p.matrix()).max_abs() < 1e-14);
        let d = HermitianMatrix::from_real_diagonal(&[1.0, -1.0]);
        assert!(
            (psd_project(&d).unwrap().matrix() - &ComplexMatrix::from_real_diagonal(&[1.0, 0.0])).max_abs() < 1e-14
        );
        let m = HermitianMatrix::identity(3).scale(-1.0);
        assert!(psd_project(&m).unwrap().matrix().max_abs() < 1e-14);
    }

    #[test]
    fn hermitian_rejects_non_hermitian() {
        let a = ComplexMatrix::from_row_major(2, 2, vec![c(0., 0.), c(1., 0.), c(0., 0.), c(0., 0.)]).unwrap();
        assert!(matches!(HermitianMatrix::new(a), Err(EcdError::NotHermitian { .. })));
        assert!(matches!(ComplexMatrix::from_row_major(1, 1, vec![c(f64::NAN, 0.0)]), Err(EcdError::NonFinite { .. })));
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        fn herm(n: usize, seed: u64) -> HermitianMatrix {
            random_hermitian(n, &mut ChaCha8Rng::seed_from_u64(seed))
        }

        proptest! {
            #![proptest_config(ProptestConfig::with_cases(48))]

            #[test]
            fn trace_norm_is_a_norm(n in 1usize..6, s1 in any::<u64>(), s2 in any::<u64>(), k in -3.0f64..3.0) {
                let a = herm(n, s1).into_matrix();
                let b = herm(n, s2).into_matrix();
                let na = trace_norm(&a).unwrap();
                let nb = trace_norm(&b).unwrap();
                prop_assert!(trace_norm(&(&a + &b)).unwrap() <= na + nb + 1e-10);
                prop_assert!((trace_norm(&a.scale(k)).unwrap() - k.abs() * na).abs() <= 1e-10 * (1.0 + na));
            }

            #[test]
            fn partial_trace_contracts(da in 1usize..4, db in 1usize..4, seed in any::<u64>()) {
                let m = herm(da * db, seed).into_matrix();
                let full = trace_norm(&m).unwrap();
                for keep in [Subsystem::First, Subsystem::Second] {
                    let r = partial_trace(&m, (da, db), keep).unwrap();
                    prop_assert!(trace_norm(&r).unwrap() <= full + 1e-10);
                    prop_assert!((r.trace() - m.trace()).norm() < 1e-10);
                }
            }

            #[test]
            fn psd_project_is_idempotent_and_optimal(n in 1usize..6, seed in any::<u64>()) {
                let a = herm(n, seed);
                let p = psd_project(&a).unwrap();
                prop_assert!(p.min_eigenvalue().unwrap() >= -1e-12);
                let pp = psd_project(&p).unwrap();
                prop_assert!((pp.matrix() - p.matrix()).max_abs() < 1e-10);
                // distance equals the norm of the clipped negative eigenvalues
                let e = eig_hermitian(&a).unwrap();
                let neg: f64 = e.values.iter().filter(|v| **v < 0.0).map(|v| v * v).sum::<f64>().sqrt();
                prop_assert!(((a.matrix() - p.matrix()).frobenius_norm() - neg).abs() < 1e-10);
                // any other diagonal clipping in the eigenbasis is no closer
                let alt = e.reconstruct_with(|v| v.max(0.0) + 0.01);
                prop_assert!((a.matrix() - alt.matrix()).frobenius_norm() >= neg - 1e-12);
            }
        }
    }
}
