//! Structured linear algebra: vec/vecs, commutation and duplication maps,
//! Kronecker products, PSD square roots, Mahalanobis forms and Schur
//! complements.

use nalgebra::{Cholesky, DMatrix, DVector, Dyn, SymmetricEigen};

use crate::{Error, Result, Scalar};

/// Largest dimension for which dense commutation/duplication matrices are
/// materialized.
pub const DENSE_DIM_LIMIT: usize = 32;

fn symmetry_tol<T: Scalar>() -> T {
    T::machine_eps().sqrt() * T::c(1e-2)
}

fn max_abs<T: Scalar>(a: &DMatrix<T>) -> T {
    a.iter().fold(T::zero(), |acc, &v| acc.max(v.abs()))
}

/// Largest |a_ij − a_ji|.
pub fn asymmetry<T: Scalar>(a: &DMatrix<T>) -> T {
    let mut worst = T::zero();
    for j in 0..a.ncols() {
        for i in 0..j {
            worst = worst.max((a[(i, j)] - a[(j, i)]).abs());
        }
    }
    worst
}

/// Dense symmetric matrix of dimension at least one.
#[derive(Debug, Clone, PartialEq)]
pub struct SymMatrix<T: Scalar> {
    inner: DMatrix<T>,
}

impl<T: Scalar> SymMatrix<T> {
    /// Validates symmetry (relative to the largest entry) and stores the exact
    /// symmetrization (A + Aᵀ)/2.
    pub fn new(a: DMatrix<T>) -> Result<Self> {
        if !a.is_square() {
            return Err(Error::DimensionMismatch {
                expected: a.nrows(),
                got: a.ncols(),
            });
        }
        if a.nrows() == 0 {
            return Err(Error::InvalidParameter("matrix dimension must be >= 1".into()));
        }
        let scale = max_abs(&a).max(T::one());
        let asym = asymmetry(&a);
        if asym > symmetry_tol::<T>() * scale {
            return Err(Error::NotSymmetric {
                asymmetry: asym.f64(),
            });
        }
        Ok(Self::symmetrized(a))
    }

    /// Builds from a matrix known to be symmetric up to rounding.
    pub fn symmetrized(a: DMatrix<T>) -> Self {
        let half = T::c(0.5);
        let inner = (&a + a.transpose()) * half;
        Self { inner }
    }

    pub fn identity(m: usize) -> Self {
        Self {
            inner: DMatrix::identity(m, m),
        }
    }

    pub fn from_diagonal(d: &[T]) -> Self {
        Self {
            inner: DMatrix::from_diagonal(&DVector::from_row_slice(d)),
        }
    }

    /// Row-major entries.
    pub fn from_row_slice(m: usize, entries: &[T]) -> Result<Self> {
        if entries.len() != m * m {
            return Err(Error::DimensionMismatch {
                expected: m * m,
                got: entries.len(),
            });
        }
        Self::new(DMatrix::from_row_slice(m, m, entries))
    }

    pub fn dim(&self) -> usize {
        self.inner.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<T> {
        &self.inner
    }

    pub fn into_matrix(self) -> DMatrix<T> {
        self.inner
    }

    pub fn scaled(&self, a: T) -> Self {
        Self {
            inner: &self.inner * a,
        }
    }

    pub fn trace(&self) -> T {
        self.inner.trace()
    }

    /// Smallest and largest eigenvalues.
    pub fn eigen_range(&self) -> (T, T) {
        let ev = self.inner.clone().symmetric_eigenvalues();
        let lo = ev.iter().fold(T::infinity(), |a, &b| a.min(b));
        let hi = ev.iter().fold(-T::infinity(), |a, &b| a.max(b));
        (lo, hi)
    }

    /// Fails unless λmin > m·ε·λmax.
    pub fn check_pd(&self) -> Result<()> {
        let (lo, hi) = self.eigen_range();
        let tol = T::from_usize_(self.dim()) * T::machine_eps() * hi.max(T::zero());
        if lo > tol && hi > T::zero() {
            Ok(())
        } else {
            Err(Error::NotPositiveDefinite {
                min_eigenvalue: lo.f64(),
                tolerance: tol.f64(),
            })
        }
    }

    /// Lower Cholesky factor after the PD check.
    pub fn cholesky(&self) -> Result<Cholesky<T, Dyn>> {
        self.check_pd()?;
        Cholesky::new(self.inner.clone()).ok_or_else(|| Error::NotPositiveDefinite {
            min_eigenvalue: self.eigen_range().0.f64(),
            tolerance: 0.0,
        })
    }

    /// ln |S| from the Cholesky diagonal.
    pub fn log_det(&self) -> Result<T> {
        let chol = self.cholesky()?;
        Ok(log_det_chol(&chol))
    }

    pub fn inverse(&self) -> Result<Self> {
        let chol = self.cholesky()?;
        Ok(Self::symmetrized(chol.inverse()))
    }
}

pub(crate) fn log_det_chol<T: Scalar>(chol: &Cholesky<T, Dyn>) -> T {
    let l = chol.l_dirty();
    let mut s = T::zero();
    for i in 0..l.nrows() {
        s += l[(i, i)].ln();
    }
    s + s
}

/// Column-major stacking.
pub fn vec<T: Scalar>(m: &DMatrix<T>) -> DVector<T> {
    DVector::from_column_slice(m.as_slice())
}

/// Inverse of [`vec`].
pub fn unvec<T: Scalar>(v: &DVector<T>, rows: usize, cols: usize) -> Result<DMatrix<T>> {
    if v.len() != rows * cols {
        return Err(Error::DimensionMismatch {
            expected: rows * cols,
            got: v.len(),
        });
    }
    Ok(DMatrix::from_column_slice(rows, cols, v.as_slice()))
}

/// Half-vectorization: the on- and below-diagonal entries, column by column.
pub fn vecs<T: Scalar>(m: &DMatrix<T>) -> Result<DVector<T>> {
    let sym = SymMatrix::new(m.clone())?;
    Ok(vecs_sym(&sym))
}

pub fn vecs_sym<T: Scalar>(s: &SymMatrix<T>) -> DVector<T> {
    let m = s.dim();
    let a = s.matrix();
    let mut out = Vec::with_capacity(m * (m + 1) / 2);
    for j in 0..m {
        for i in j..m {
            out.push(a[(i, j)]);
        }
    }
    DVector::from_vec(out)
}

/// Inverse of [`vecs`].
pub fn unvecs<T: Scalar>(v: &DVector<T>, m: usize) -> Result<SymMatrix<T>> {
    if v.len() != m * (m + 1) / 2 {
        return Err(Error::DimensionMismatch {
            expected: m * (m + 1) / 2,
            got: v.len(),
        });
    }
    let mut a = DMatrix::zeros(m, m);
    let mut k = 0;
    for j in 0..m {
        for i in j..m {
            a[(i, j)] = v[k];
            a[(j, i)] = v[k];
            k += 1;
        }
    }
    Ok(SymMatrix { inner: a })
}

/// Position of (i, j), i ≥ j, inside vecs of an m×m matrix.
pub fn vecs_index(m: usize, i: usize, j: usize) -> usize {
    let (i, j) = if i >= j { (i, j) } else { (j, i) };
    j * m - j * (j + 1) / 2 + i
}

/// Commutation matrix K_{r,c} stored as a permutation: (K v)[k] = v[source[k]].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Commutation {
    pub rows: usize,
    pub cols: usize,
    source: Vec<usize>,
}

impl Commutation {
    pub fn new(rows: usize, cols: usize) -> Self {
        // vec(Cᵀ)[j + i·c] = C[i, j] = vec(C)[i + j·r]
        let mut source = vec![0; rows * cols];
        for i in 0..rows {
            for j in 0..cols {
                source[j + i * cols] = i + j * rows;
            }
        }
        Self { rows, cols, source }
    }

    pub fn apply<T: Scalar>(&self, v: &DVector<T>) -> DVector<T> {
        DVector::from_iterator(self.source.len(), self.source.iter().map(|&s| v[s]))
    }

    pub fn dense<T: Scalar>(&self) -> Result<DMatrix<T>> {
        let n = self.source.len();
        guard_dense(n)?;
        let mut k = DMatrix::zeros(n, n);
        for (row, &col) in self.source.iter().enumerate() {
            k[(row, col)] = T::one();
        }
        Ok(k)
    }
}

/// Dense commutation matrix, K·vec(C) = vec(Cᵀ) for r×c matrices C.
pub fn commutation<T: Scalar>(rows: usize, cols: usize) -> Result<DMatrix<T>> {
    Commutation::new(rows, cols).dense()
}

/// Duplication matrix D_m stored as the vecs index of every vec position.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Duplication {
    pub m: usize,
    target: Vec<usize>,
}

impl Duplication {
    pub fn new(m: usize) -> Self {
        let mut target = vec![0; m * m];
        for j in 0..m {
            for i in 0..m {
                target[i + j * m] = vecs_index(m, i, j);
            }
        }
        Self { m, target }
    }

    pub fn half_len(&self) -> usize {
        self.m * (self.m + 1) / 2
    }

    /// D·v: vecs → vec.
    pub fn apply<T: Scalar>(&self, v: &DVector<T>) -> DVector<T> {
        DVector::from_iterator(self.target.len(), self.target.iter().map(|&t| v[t]))
    }

    /// Dᵀ·w for a vec-sized w.
    pub fn apply_transpose<T: Scalar>(&self, w: &DVector<T>) -> DVector<T> {
        let mut out = DVector::zeros(self.half_len());
        for (row, &t) in self.target.iter().enumerate() {
            out[t] += w[row];
        }
        out
    }

    /// Dᵀ A D for an m²×m² matrix A.
    pub fn congruence<T: Scalar>(&self, a: &DMatrix<T>) -> DMatrix<T> {
        let h = self.half_len();
        let mut out = DMatrix::zeros(h, h);
        for (c, &tc) in self.target.iter().enumerate() {
            for (r, &tr) in self.target.iter().enumerate() {
                out[(tr, tc)] += a[(r, c)];
            }
        }
        out
    }

    pub fn dense<T: Scalar>(&self) -> Result<DMatrix<T>> {
        guard_dense(self.m)?;
        let mut d = DMatrix::zeros(self.target.len(), self.half_len());
        for (row, &col) in self.target.iter().enumerate() {
            d[(row, col)] = T::one();
        }
        Ok(d)
    }
}

/// Dense duplication matrix, D·vecs(A) = vec(A).
pub fn duplication<T: Scalar>(m: usize) -> Result<DMatrix<T>> {
    Duplication::new(m).dense()
}

fn guard_dense(n: usize) -> Result<()> {
    if n > DENSE_DIM_LIMIT * DENSE_DIM_LIMIT {
        Err(Error::Unsupported(format!(
            "dense structured matrix of order {n} exceeds the materialization limit"
        )))
    } else {
        Ok(())
    }
}

/// A ⊗ B.
pub fn kron<T: Scalar>(a: &DMatrix<T>, b: &DMatrix<T>) -> DMatrix<T> {
    a.kronecker(b)
}

/// Symmetric square root A = V Λ^{1/2} Vᵀ, so that A Aᵀ = A² = S.
pub fn psd_sqrt<T: Scalar>(s: &SymMatrix<T>) -> Result<DMatrix<T>> {
    s.check_pd()?;
    let eig = SymmetricEigen::new(s.matrix().clone());
    let root = eig.eigenvalues.map(|l| l.sqrt());
    let v = &eig.eigenvectors;
    let a = v * DMatrix::from_diagonal(&root) * v.transpose();
    Ok(SymMatrix::symmetrized(a).into_matrix())
}

/// Lower-triangular square root L with L Lᵀ = S.
pub fn cholesky_sqrt<T: Scalar>(s: &SymMatrix<T>) -> Result<DMatrix<T>> {
    Ok(s.cholesky()?.l())
}

/// (x−μ)ᵀ S⁻¹ (x−μ) through a triangular solve.
pub fn mahalanobis<T: Scalar>(x: &DVector<T>, mu: &DVector<T>, s: &SymMatrix<T>) -> Result<T> {
    MahalanobisForm::new(s)?.eval(x, mu)
}

/// Reusable Cholesky factorization of a scatter matrix.
#[derive(Debug, Clone)]
pub struct MahalanobisForm<T: Scalar> {
    chol: Cholesky<T, Dyn>,
    dim: usize,
}

impl<T: Scalar> MahalanobisForm<T> {
    pub fn new(s: &SymMatrix<T>) -> Result<Self> {
        Ok(Self {
            chol: s.cholesky()?,
            dim: s.dim(),
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn log_det(&self) -> T {
        log_det_chol(&self.chol)
    }

    /// rᵀ S⁻¹ r.
    pub fn quad(&self, r: &DVector<T>) -> Result<T> {
        if r.len() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                got: r.len(),
            });
        }
        let y = self
            .chol
            .l_dirty()
            .solve_lower_triangular(r)
            .expect("nonsingular Cholesky factor");
        Ok(y.dot(&y))
    }

    pub fn eval(&self, x: &DVector<T>, mu: &DVector<T>) -> Result<T> {
        if mu.len() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                got: mu.len(),
            });
        }
        self.quad(&(x - mu))
    }

    pub fn solve(&self, b: &DMatrix<T>) -> DMatrix<T> {
        self.chol.solve(b)
    }
}

/// Blocks of a partitioned scatter matrix and the Schur complement
/// S₂|₁ = S₂₂ − S₂₁ S₁₁⁻¹ S₁₂.
#[derive(Debug, Clone)]
pub struct SchurBlocks<T: Scalar> {
    pub s11: SymMatrix<T>,
    pub s12: DMatrix<T>,
    pub s21: DMatrix<T>,
    pub s22: SymMatrix<T>,
    pub s2_given_1: SymMatrix<T>,
    /// S₂₁ S₁₁⁻¹, the regression coefficient of x₂ on x₁.
    pub gain: DMatrix<T>,
}

pub fn schur_conditional<T: Scalar>(s: &SymMatrix<T>, split: usize) -> Result<SchurBlocks<T>> {
    let m = s.dim();
    if split == 0 || split >= m {
        return Err(Error::InvalidParameter(format!(
            "split must satisfy 1 <= split < {m}, got {split}"
        )));
    }
    let a = s.matrix();
    let m2 = m - split;
    let s11 = SymMatrix::symmetrized(a.view((0, 0), (split, split)).into_owned());
    let s12 = a.view((0, split), (split, m2)).into_owned();
    let s21 = a.view((split, 0), (m2, split)).into_owned();
    let s22 = SymMatrix::symmetrized(a.view((split, split), (m2, m2)).into_owned());
    let chol = s11.cholesky()?;
    // gain = S21 S11⁻¹ = (S11⁻¹ S12)ᵀ
    let gain = chol.solve(&s12).transpose();
    let cond = s22.matrix() - &gain * &s12;
    Ok(SchurBlocks {
        s2_given_1: SymMatrix::symmetrized(cond),
        s11,
        s12,
        s21,
        s22,
        gain,
    })
}

/// σ₁(I+K)(Σ⊗Σ) + σ₂ vec(Σ)vecᵀ(Σ), kept in factored form.
#[derive(Debug, Clone, PartialEq)]
pub struct StructuredCov<T: Scalar> {
    pub sigma1: T,
    pub sigma2: T,
    pub base: SymMatrix<T>,
}

impl<T: Scalar> StructuredCov<T> {
    /// Requires σ₁ > 0 and σ₂ ≥ −2σ₁/m (with rounding slack).
    pub fn new(sigma1: T, sigma2: T, base: SymMatrix<T>) -> Result<Self> {
        let m = T::from_usize_(base.dim());
        if !(sigma1 > T::zero()) {
            return Err(Error::InvalidParameter(format!(
                "sigma1 must be positive, got {}",
                sigma1.f64()
            )));
        }
        let bound = -T::c(2.0) * sigma1 / m;
        let slack = T::c(1e3) * T::machine_eps() * sigma1;
        if sigma2 < bound - slack {
            return Err(Error::InvalidParameter(format!(
                "sigma2 = {} below the lower bound {}",
                sigma2.f64(),
                bound.f64()
            )));
        }
        Ok(Self {
            sigma1,
            sigma2,
            base,
        })
    }

    pub fn dim(&self) -> usize {
        self.base.dim()
    }

    /// Lower bound −2σ₁/m on σ₂.
    pub fn sigma2_bound(&self) -> T {
        -T::c(2.0) * self.sigma1 / T::from_usize_(self.dim())
    }

    /// Covariance between entries (i, j) and (k, l).
    pub fn entry(&self, i: usize, j: usize, k: usize, l: usize) -> T {
        let s = self.base.matrix();
        self.sigma1 * (s[(i, k)] * s[(j, l)] + s[(i, l)] * s[(j, k)])
            + self.sigma2 * s[(i, j)] * s[(k, l)]
    }

    /// Dense m²×m² matrix indexed by vec positions.
    pub fn dense(&self) -> DMatrix<T> {
        let m = self.dim();
        let n = m * m;
        DMatrix::from_fn(n, n, |r, c| self.entry(r % m, r / m, c % m, c / m))
    }
}
