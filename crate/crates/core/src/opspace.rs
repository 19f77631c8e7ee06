//! Operator space: dense Hilbert-space operators, their column-stacked
//! vectorization, and the Kronecker-product superoperators that act on them.
//!
//! Everything in this crate uses the column-stacking convention
//! `vec(A X B) = (Bᵀ ⊗ A) vec(X)`.

use std::fmt;
use std::ops::{Add, Mul, Sub};

use faer::{c64, Col, Mat, MatRef};
use thiserror::Error;

/// Tolerance used for the advisory Hermiticity / density checks.
pub const HERMITIAN_TOL: f64 = 1e-12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum OpError {
    #[error("vector length {0} is not a perfect square")]
    NonSquareLength(usize),
    #[error("dimension mismatch: {left} vs {right}")]
    DimMismatch { left: usize, right: usize },
    #[error("matrix is {rows}x{cols}, expected square")]
    NotSquare { rows: usize, cols: usize },
    #[error("operator is not Hermitian (max deviation {0:e})")]
    NotHermitian(f64),
    #[error("not a density matrix: {0}")]
    InvalidDensity(String),
}

/// Integer square root, if `n` is a perfect square.
pub fn exact_sqrt(n: usize) -> Option<usize> {
    let r = (n as f64).sqrt().round() as usize;
    (r * r == n).then_some(r)
}

/// A dense `d x d` operator on a `d`-dimensional Hilbert space.
#[derive(Clone, PartialEq)]
pub struct QOperator {
    mat: Mat<c64>,
}

impl fmt::Debug for QOperator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("QOperator")
            .field("dim", &self.dim())
            .field("entries", &self.mat)
            .finish()
    }
}

impl QOperator {
    pub fn new(mat: Mat<c64>) -> Result<Self, OpError> {
        if mat.nrows() != mat.ncols() {
            return Err(OpError::NotSquare {
                rows: mat.nrows(),
                cols: mat.ncols(),
            });
        }
        Ok(Self { mat })
    }

    /// Builds an operator and checks Hermiticity to [`HERMITIAN_TOL`].
    pub fn hermitian(mat: Mat<c64>) -> Result<Self, OpError> {
        let op = Self::new(mat)?;
        let dev = op.hermiticity_deviation();
        if dev >= HERMITIAN_TOL {
            return Err(OpError::NotHermitian(dev));
        }
        Ok(op)
    }

    /// Builds an operator and checks that it is a valid density matrix:
    /// Hermitian, unit trace within 1e-12, eigenvalues >= -1e-10.
    pub fn density(mat: Mat<c64>) -> Result<Self, OpError> {
        let op = Self::new(mat)?;
        op.check_density()?;
        Ok(op)
    }

    pub fn from_fn(dim: usize, f: impl FnMut(usize, usize) -> c64) -> Self {
        Self {
            mat: Mat::from_fn(dim, dim, f),
        }
    }

    pub fn from_real(dim: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        Self::from_fn(dim, |i, j| c64::new(f(i, j), 0.0))
    }

    pub fn zeros(dim: usize) -> Self {
        Self {
            mat: Mat::zeros(dim, dim),
        }
    }

    pub fn identity(dim: usize) -> Self {
        Self {
            mat: Mat::identity(dim, dim),
        }
    }

    /// `|a><b|` in the computational basis.
    pub fn basis_projector(dim: usize, a: usize, b: usize) -> Self {
        Self::from_fn(dim, |i, j| {
            if i == a && j == b {
                c64::new(1.0, 0.0)
            } else {
                c64::new(0.0, 0.0)
            }
        })
    }

    /// `|u><v|` for arbitrary vectors.
    pub fn outer(u: &[c64], v: &[c64]) -> Self {
        assert_eq!(u.len(), v.len(), "outer product of unequal lengths");
        Self::from_fn(u.len(), |i, j| u[i] * v[j].conj())
    }

    pub fn dim(&self) -> usize {
        self.mat.nrows()
    }

    pub fn matrix(&self) -> MatRef<'_, c64> {
        self.mat.as_ref()
    }

    pub fn into_matrix(self) -> Mat<c64> {
        self.mat
    }

    pub fn get(&self, i: usize, j: usize) -> c64 {
        self.mat[(i, j)]
    }

    pub fn dagger(&self) -> Self {
        Self {
            mat: self.mat.adjoint().to_owned(),
        }
    }

    pub fn transpose(&self) -> Self {
        Self {
            mat: self.mat.transpose().to_owned(),
        }
    }

    pub fn conj(&self) -> Self {
        Self {
            mat: self.mat.conjugate().to_owned(),
        }
    }

    pub fn trace(&self) -> c64 {
        (0..self.dim()).map(|i| self.mat[(i, i)]).sum()
    }

    pub fn scale(&self, s: c64) -> Self {
        Self::from_fn(self.dim(), |i, j| self.mat[(i, j)] * s)
    }

    pub fn scale_real(&self, s: f64) -> Self {
        self.scale(c64::new(s, 0.0))
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.mat.norm_l2()
    }

    pub fn max_abs(&self) -> f64 {
        let mut m = 0.0f64;
        for j in 0..self.dim() {
            for i in 0..self.dim() {
                m = m.max(self.mat[(i, j)].norm());
            }
        }
        m
    }

    /// `max |A - A†|` over entries.
    pub fn hermiticity_deviation(&self) -> f64 {
        let d = self.dim();
        let mut m = 0.0f64;
        for j in 0..d {
            for i in 0..d {
                m = m.max((self.mat[(i, j)] - self.mat[(j, i)].conj()).norm());
            }
        }
        m
    }

    pub fn is_hermitian(&self, tol: f64) -> bool {
        self.hermiticity_deviation() < tol
    }

    /// Eigenvalues of the Hermitian part `(A + A†)/2`, ascending.
    pub fn hermitian_eigenvalues(&self) -> Vec<f64> {
        let d = self.dim();
        let h = Mat::from_fn(d, d, |i, j| (self.mat[(i, j)] + self.mat[(j, i)].conj()) * 0.5);
        h.self_adjoint_eigenvalues(faer::Side::Lower)
            .expect("Hermitian eigensolver failed")
    }

    pub fn check_density(&self) -> Result<(), OpError> {
        let dev = self.hermiticity_deviation();
        if dev >= HERMITIAN_TOL {
            return Err(OpError::InvalidDensity(format!(
                "not Hermitian (deviation {dev:e})"
            )));
        }
        let tr = self.trace();
        if (tr - c64::new(1.0, 0.0)).norm() > 1e-12 {
            return Err(OpError::InvalidDensity(format!(
                "trace is {} + {}i",
                tr.re, tr.im
            )));
        }
        let min = self
            .hermitian_eigenvalues()
            .first()
            .copied()
            .unwrap_or(0.0);
        if min < -1e-10 {
            return Err(OpError::InvalidDensity(format!(
                "negative eigenvalue {min:e}"
            )));
        }
        Ok(())
    }

    pub fn matmul(&self, other: &Self) -> Result<Self, OpError> {
        same_dim(self.dim(), other.dim())?;
        Ok(Self {
            mat: &self.mat * &other.mat,
        })
    }

    /// `A ⊗ B` with `A` on the left (most significant) factor.
    pub fn kron(&self, other: &Self) -> Self {
        let (da, db) = (self.dim(), other.dim());
        Self::from_fn(da * db, |i, j| {
            self.mat[(i / db, j / db)] * other.mat[(i % db, j % db)]
        })
    }

    /// `[A, B] = AB - BA`.
    pub fn commutator(&self, other: &Self) -> Result<Self, OpError> {
        Ok(&self.matmul(other)? - &other.matmul(self)?)
    }
}

impl Add for &QOperator {
    type Output = QOperator;
    fn add(self, rhs: &QOperator) -> QOperator {
        assert_eq!(self.dim(), rhs.dim(), "operator dimension mismatch");
        QOperator {
            mat: &self.mat + &rhs.mat,
        }
    }
}

impl Sub for &QOperator {
    type Output = QOperator;
    fn sub(self, rhs: &QOperator) -> QOperator {
        assert_eq!(self.dim(), rhs.dim(), "operator dimension mismatch");
        QOperator {
            mat: &self.mat - &rhs.mat,
        }
    }
}

impl Mul for &QOperator {
    type Output = QOperator;
    fn mul(self, rhs: &QOperator) -> QOperator {
        self.matmul(rhs).expect("operator dimension mismatch")
    }
}

/// A vectorized operator `|X>>` of length `d²`.
#[derive(Clone, Debug, PartialEq)]
pub struct OpVector {
    col: Col<c64>,
}

impl OpVector {
    pub fn new(col: Col<c64>) -> Result<Self, OpError> {
        exact_sqrt(col.nrows()).ok_or(OpError::NonSquareLength(col.nrows()))?;
        Ok(Self { col })
    }

    pub fn from_slice(v: &[c64]) -> Result<Self, OpError> {
        Self::new(Col::from_fn(v.len(), |i| v[i]))
    }

    pub fn zeros(dim2: usize) -> Result<Self, OpError> {
        Self::new(Col::zeros(dim2))
    }

    pub fn dim2(&self) -> usize {
        self.col.nrows()
    }

    /// Hilbert-space dimension `d`.
    pub fn dim(&self) -> usize {
        exact_sqrt(self.dim2()).expect("OpVector length is a perfect square")
    }

    pub fn column(&self) -> &Col<c64> {
        &self.col
    }

    pub fn into_column(self) -> Col<c64> {
        self.col
    }

    pub fn get(&self, i: usize) -> c64 {
        self.col[i]
    }

    pub fn to_vec(&self) -> Vec<c64> {
        self.col.iter().copied().collect()
    }

    pub fn norm(&self) -> f64 {
        self.col.norm_l2()
    }

    /// `<<a|b>> = a† b`.
    pub fn dot(&self, other: &Self) -> c64 {
        assert_eq!(self.dim2(), other.dim2(), "OpVector length mismatch");
        self.col
            .iter()
            .zip(other.col.iter())
            .map(|(a, b)| a.conj() * b)
            .sum()
    }

    pub fn scale(&self, s: c64) -> Self {
        Self {
            col: Col::from_fn(self.dim2(), |i| self.col[i] * s),
        }
    }

    pub fn axpy(&self, s: c64, other: &Self) -> Self {
        assert_eq!(self.dim2(), other.dim2(), "OpVector length mismatch");
        Self {
            col: Col::from_fn(self.dim2(), |i| self.col[i] + s * other.col[i]),
        }
    }
}

impl Sub for &OpVector {
    type Output = OpVector;
    fn sub(self, rhs: &OpVector) -> OpVector {
        self.axpy(c64::new(-1.0, 0.0), rhs)
    }
}

/// A dense `d² x d²` linear map on vectorized operators.
#[derive(Clone, PartialEq)]
pub struct Superoperator {
    mat: Mat<c64>,
}

impl fmt::Debug for Superoperator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Superoperator")
            .field("dim2", &self.dim2())
            .finish_non_exhaustive()
    }
}

impl Superoperator {
    pub fn new(mat: Mat<c64>) -> Result<Self, OpError> {
        if mat.nrows() != mat.ncols() {
            return Err(OpError::NotSquare {
                rows: mat.nrows(),
                cols: mat.ncols(),
            });
        }
        exact_sqrt(mat.nrows()).ok_or(OpError::NonSquareLength(mat.nrows()))?;
        Ok(Self { mat })
    }

    /// A general square matrix treated as a generator, without the
    /// perfect-square requirement. Used for reduced blocks and test matrices.
    pub fn from_matrix_unchecked(mat: Mat<c64>) -> Self {
        assert_eq!(mat.nrows(), mat.ncols(), "superoperator must be square");
        Self { mat }
    }

    pub fn zeros(dim: usize) -> Self {
        Self {
            mat: Mat::zeros(dim * dim, dim * dim),
        }
    }

    pub fn identity(dim: usize) -> Self {
        Self {
            mat: Mat::identity(dim * dim, dim * dim),
        }
    }

    pub fn dim2(&self) -> usize {
        self.mat.nrows()
    }

    /// Hilbert-space dimension, when `dim2` is a perfect square.
    pub fn dim(&self) -> Option<usize> {
        exact_sqrt(self.dim2())
    }

    pub fn matrix(&self) -> MatRef<'_, c64> {
        self.mat.as_ref()
    }

    pub fn matrix_mut(&mut self) -> &mut Mat<c64> {
        &mut self.mat
    }

    pub fn into_matrix(self) -> Mat<c64> {
        self.mat
    }

    pub fn get(&self, i: usize, j: usize) -> c64 {
        self.mat[(i, j)]
    }

    /// Conjugate transpose, i.e. the adjoint under the Hilbert–Schmidt pairing.
    pub fn adjoint(&self) -> Self {
        Self {
            mat: self.mat.adjoint().to_owned(),
        }
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.mat.norm_l2()
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        assert_eq!(self.dim2(), other.dim2(), "superoperator size mismatch");
        let n = self.dim2();
        let mut m = 0.0f64;
        for j in 0..n {
            for i in 0..n {
                m = m.max((self.mat[(i, j)] - other.mat[(i, j)]).norm());
            }
        }
        m
    }

    pub fn apply(&self, v: &OpVector) -> Result<OpVector, OpError> {
        same_dim(self.dim2(), v.dim2())?;
        Ok(OpVector {
            col: &self.mat * &v.col,
        })
    }

    pub fn compose(&self, other: &Self) -> Result<Self, OpError> {
        same_dim(self.dim2(), other.dim2())?;
        Ok(Self {
            mat: &self.mat * &other.mat,
        })
    }

    /// `self + s * other`.
    pub fn add_scaled(&mut self, s: c64, other: &Self) {
        assert_eq!(self.dim2(), other.dim2(), "superoperator size mismatch");
        let n = self.dim2();
        for j in 0..n {
            for i in 0..n {
                let v = other.mat[(i, j)];
                if v != c64::new(0.0, 0.0) {
                    self.mat[(i, j)] += s * v;
                }
            }
        }
    }

    /// Accumulates `s · (A ⊗ B)` without materialising the product.
    /// Zero entries of `A` are skipped, so `I ⊗ B` costs `d` block updates.
    pub fn add_kron(&mut self, s: c64, a: &QOperator, b: &QOperator) {
        let (da, db) = (a.dim(), b.dim());
        assert_eq!(da * db, self.dim2(), "kron size mismatch");
        let zero = c64::new(0.0, 0.0);
        for ja in 0..da {
            for ia in 0..da {
                let aij = a.mat[(ia, ja)];
                if aij == zero {
                    continue;
                }
                let f = s * aij;
                for jb in 0..db {
                    for ib in 0..db {
                        let bij = b.mat[(ib, jb)];
                        if bij != zero {
                            self.mat[(ia * db + ib, ja * db + jb)] += f * bij;
                        }
                    }
                }
            }
        }
    }
}

impl Add for &Superoperator {
    type Output = Superoperator;
    fn add(self, rhs: &Superoperator) -> Superoperator {
        assert_eq!(self.dim2(), rhs.dim2(), "superoperator size mismatch");
        Superoperator {
            mat: &self.mat + &rhs.mat,
        }
    }
}

impl Sub for &Superoperator {
    type Output = Superoperator;
    fn sub(self, rhs: &Superoperator) -> Superoperator {
        assert_eq!(self.dim2(), rhs.dim2(), "superoperator size mismatch");
        Superoperator {
            mat: &self.mat - &rhs.mat,
        }
    }
}

fn same_dim(left: usize, right: usize) -> Result<(), OpError> {
    if left != right {
        return Err(OpError::DimMismatch { left, right });
    }
    Ok(())
}

/// Column-stacks `op`: column `j` occupies entries `j*d .. j*d + d`.
pub fn vectorize(op: &QOperator) -> OpVector {
    let d = op.dim();
    OpVector {
        col: Col::from_fn(d * d, |k| op.mat[(k % d, k / d)]),
    }
}

pub fn devectorize(v: &OpVector) -> Result<QOperator, OpError> {
    let d = exact_sqrt(v.dim2()).ok_or(OpError::NonSquareLength(v.dim2()))?;
    Ok(QOperator::from_fn(d, |i, j| v.col[j * d + i]))
}

/// Superoperator of `X ↦ A X`, i.e. `I ⊗ A`.
pub fn left_mult_superop(a: &QOperator) -> Superoperator {
    let d = a.dim();
    let mut s = Superoperator::zeros(d);
    s.add_kron(c64::new(1.0, 0.0), &QOperator::identity(d), a);
    s
}

/// Superoperator of `X ↦ X B`, i.e. `Bᵀ ⊗ I`.
pub fn right_mult_superop(b: &QOperator) -> Superoperator {
    let d = b.dim();
    let mut s = Superoperator::zeros(d);
    s.add_kron(c64::new(1.0, 0.0), &b.transpose(), &QOperator::identity(d));
    s
}

/// Hilbert–Schmidt inner product `Tr(a† b)`.
pub fn hs_inner(a: &QOperator, b: &QOperator) -> Result<c64, OpError> {
    same_dim(a.dim(), b.dim())?;
    let d = a.dim();
    let mut acc = c64::new(0.0, 0.0);
    for j in 0..d {
        for i in 0..d {
            acc += a.mat[(i, j)].conj() * b.mat[(i, j)];
        }
    }
    Ok(acc)
}

/// Single-qubit operators in the basis `{|0> = ground, |1> = excited}`.
pub mod qubit {
    use super::QOperator;
    use faer::c64;

    pub fn sigma_x() -> QOperator {
        QOperator::from_real(2, |i, j| if i != j { 1.0 } else { 0.0 })
    }

    pub fn sigma_y() -> QOperator {
        QOperator::from_fn(2, |i, j| match (i, j) {
            (0, 1) => c64::new(0.0, -1.0),
            (1, 0) => c64::new(0.0, 1.0),
            _ => c64::new(0.0, 0.0),
        })
    }

    /// `|1><1| - |0><0|`.
    pub fn sigma_z() -> QOperator {
        QOperator::from_real(2, |i, j| match (i, j) {
            (0, 0) => -1.0,
            (1, 1) => 1.0,
            _ => 0.0,
        })
    }

    /// Lowering operator `|0><1|`.
    pub fn sigma_minus() -> QOperator {
        QOperator::basis_projector(2, 0, 1)
    }

    pub fn sigma_plus() -> QOperator {
        QOperator::basis_projector(2, 1, 0)
    }

    /// Excitation number `|1><1|`.
    pub fn number() -> QOperator {
        QOperator::basis_projector(2, 1, 1)
    }

    /// Embeds a single-qubit operator on `site` of an `n`-qubit register;
    /// site 0 is the leftmost Kronecker factor.
    pub fn embed(op: &QOperator, site: usize, n: usize) -> QOperator {
        assert!(site < n, "site {site} out of range for {n} qubits");
        let mut acc = QOperator::identity(1);
        for k in 0..n {
            acc = if k == site {
                acc.kron(op)
            } else {
                acc.kron(&QOperator::identity(2))
            };
        }
        acc
    }

    /// Computational basis index of the bit string `bits` (site 0 first).
    pub fn basis_index(bits: &[u8]) -> usize {
        bits.iter().fold(0, |acc, &b| (acc << 1) | usize::from(b))
    }

    /// Number of excited sites in basis state `index` of an `n`-qubit register.
    pub fn excitation_count(index: usize, n: usize) -> usize {
        (0..n).filter(|k| (index >> k) & 1 == 1).count()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> c64 {
        c64::new(re, im)
    }

    fn sample_op(d: usize, seed: u64) -> QOperator {
        // small deterministic LCG, enough for fixture matrices
        let mut s = seed.wrapping_mul(6364136223846793005).wrapping_add(1);
        let mut next = move || {
            s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            ((s >> 11) as f64 / (1u64 << 53) as f64) * 2.0 - 1.0
        };
        QOperator::from_fn(d, |_, _| c(next(), next()))
    }

    #[test]
    fn vectorize_identity_is_column_stacked() {
        let v = vectorize(&QOperator::identity(2));
        assert_eq!(v.to_vec(), vec![c(1., 0.), c(0., 0.), c(0., 0.), c(1., 0.)]);
    }

    #[test]
    fn vectorize_single_entry() {
        let v = vectorize(&QOperator::basis_projector(2, 0, 1));
        assert_eq!(v.to_vec(), vec![c(0., 0.), c(0., 0.), c(1., 0.), c(0., 0.)]);
    }

    #[test]
    fn devectorize_places_column_major() {
        let v = OpVector::from_slice(&[c(0., 0.), c(1., 0.), c(0., 0.), c(0., 0.)]).unwrap();
        assert_eq!(devectorize(&v).unwrap(), QOperator::basis_projector(2, 1, 0));
        let v = OpVector::from_slice(&[c(1., 0.), c(0., 0.), c(0., 0.), c(1., 0.)]).unwrap();
        assert_eq!(devectorize(&v).unwrap(), QOperator::identity(2));
    }

    #[test]
    fn non_square_length_rejected() {
        let five = [c(0., 0.); 5];
        assert_eq!(
            OpVector::from_slice(&five).unwrap_err(),
            OpError::NonSquareLength(5)
        );
    }

    #[test]
    fn round_trip_is_exact() {
        let x = sample_op(3, 7);
        assert_eq!(devectorize(&vectorize(&x)).unwrap(), x);
    }

    #[test]
    fn left_and_right_mult_identity() {
        let id = Superoperator::identity(2);
        assert_eq!(left_mult_superop(&QOperator::identity(2)), id);
        assert_eq!(right_mult_superop(&QOperator::identity(2)), id);
    }

    #[test]
    fn left_mult_on_identity_returns_operator() {
        let a = QOperator::from_real(2, |i, j| if i == j { [2.0, 5.0][i] } else { 0.0 });
        let s = left_mult_superop(&a);
        let out = devectorize(&s.apply(&vectorize(&QOperator::identity(2))).unwrap()).unwrap();
        assert_eq!(out, a);
        let b = QOperator::basis_projector(2, 0, 1);
        let s = right_mult_superop(&b);
        let out = devectorize(&s.apply(&vectorize(&QOperator::identity(2))).unwrap()).unwrap();
        assert_eq!(out, b);
    }

    #[test]
    fn mult_superops_match_dense_products() {
        for seed in 0..5 {
            let a = sample_op(2, seed);
            let x = sample_op(2, seed + 100);
            let lhs = devectorize(&left_mult_superop(&a).apply(&vectorize(&x)).unwrap()).unwrap();
            assert!((&lhs - &(&a * &x)).max_abs() < 1e-14);
            let rhs = devectorize(&right_mult_superop(&a).apply(&vectorize(&x)).unwrap()).unwrap();
            assert!((&rhs - &(&x * &a)).max_abs() < 1e-14);
        }
    }

    #[test]
    fn hs_inner_examples() {
        let i2 = QOperator::identity(2);
        assert_eq!(hs_inner(&i2, &i2).unwrap(), c(2., 0.));
        assert_eq!(
            hs_inner(&qubit::sigma_x(), &qubit::sigma_y()).unwrap(),
            c(0., 0.)
        );
        let rho = QOperator::density(QOperator::from_fn(2, |i, j| match (i, j) {
            (0, 0) => c(0.3, 0.),
            (1, 1) => c(0.7, 0.),
            (0, 1) => c(0.1, 0.2),
            _ => c(0.1, -0.2),
        }).into_matrix())
        .unwrap();
        assert!((hs_inner(&i2, &rho).unwrap() - c(1., 0.)).norm() < 1e-15);
        assert!(matches!(
            hs_inner(&i2, &QOperator::identity(3)),
            Err(OpError::DimMismatch { .. })
        ));
    }

    #[test]
    fn density_checks() {
        let bad_trace = QOperator::identity(2).into_matrix();
        assert!(matches!(
            QOperator::density(bad_trace),
            Err(OpError::InvalidDensity(_))
        ));
        let neg = QOperator::from_real(2, |i, j| match (i, j) {
            (0, 0) => 1.5,
            (1, 1) => -0.5,
            _ => 0.0,
        });
        assert!(QOperator::density(neg.into_matrix()).is_err());
        assert!(QOperator::hermitian(qubit::sigma_minus().into_matrix()).is_err());
        assert!(QOperator::hermitian(qubit::sigma_y().into_matrix()).is_ok());
    }

    #[test]
    fn embed_places_site_zero_leftmost() {
        let n0 = qubit::embed(&qubit::number(), 0, 2);
        // |10> has index 2
        assert_eq!(n0.get(2, 2), c(1., 0.));
        assert_eq!(n0.get(1, 1), c(0., 0.));
        assert_eq!(qubit::basis_index(&[1, 0]), 2);
        assert_eq!(qubit::excitation_count(3, 2), 2);
    }
}
