//! Distribution descriptions: kernel plus location and scatter parameters.

use nalgebra::{ComplexField, DMatrix, DVector, SymmetricEigen};
use num_complex::Complex;

use crate::families::{FamilyKernel, Realness};
use crate::matrix_kit::SymMatrix;
use crate::{Error, Result, Scalar};

pub type CMatrix<T> = DMatrix<Complex<T>>;
pub type CVector<T> = DVector<Complex<T>>;

/// Real elliptical law RES(μ, Σ, g).
#[derive(Debug, Clone, PartialEq)]
pub struct RealSpec<T: Scalar> {
    pub kernel: FamilyKernel<T>,
    pub mu: DVector<T>,
    pub sigma: SymMatrix<T>,
}

/// Complex elliptical law with Hermitian scatter Σ and optional
/// complementary scatter Ω (noncircular case).
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexSpec<T: Scalar> {
    pub kernel: FamilyKernel<T>,
    pub mu: CVector<T>,
    pub sigma: CMatrix<T>,
    pub omega: Option<CMatrix<T>>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum DistributionSpec<T: Scalar> {
    Real(RealSpec<T>),
    Complex(ComplexSpec<T>),
}

impl<T: Scalar> RealSpec<T> {
    pub fn new(kernel: FamilyKernel<T>, mu: DVector<T>, sigma: SymMatrix<T>) -> Result<Self> {
        if kernel.realness() != Realness::Real {
            return Err(Error::InvalidParameter("real spec needs a real kernel".into()));
        }
        let m = kernel.dim();
        for got in [mu.len(), sigma.dim()] {
            if got != m {
                return Err(Error::DimensionMismatch { expected: m, got });
            }
        }
        sigma.check_pd()?;
        Ok(Self { kernel, mu, sigma })
    }

    /// Zero location.
    pub fn centered(kernel: FamilyKernel<T>, sigma: SymMatrix<T>) -> Result<Self> {
        let m = kernel.dim();
        Self::new(kernel, DVector::zeros(m), sigma)
    }

    pub fn dim(&self) -> usize {
        self.kernel.dim()
    }
}

impl<T: Scalar> ComplexSpec<T> {
    /// Validates Hermitian PD Σ, complex-symmetric Ω and feasibility of the
    /// pair. The kernel realness is set from the presence of Ω.
    pub fn new(
        kernel: FamilyKernel<T>,
        mu: CVector<T>,
        sigma: CMatrix<T>,
        omega: Option<CMatrix<T>>,
    ) -> Result<Self> {
        if !kernel.realness().is_complex() {
            return Err(Error::InvalidParameter("complex spec needs a complex kernel".into()));
        }
        let m = kernel.dim();
        for got in [mu.len(), sigma.nrows(), sigma.ncols()] {
            if got != m {
                return Err(Error::DimensionMismatch { expected: m, got });
            }
        }
        let sigma = hermitian_part(&sigma)?;
        check_hermitian_pd(&sigma)?;
        let omega = match omega {
            Some(o) => {
                if o.nrows() != m || o.ncols() != m {
                    return Err(Error::DimensionMismatch {
                        expected: m,
                        got: o.nrows(),
                    });
                }
                Some(complex_symmetric_part(&o)?)
            }
            None => None,
        };
        let realness = if omega.is_some() {
            Realness::ComplexNoncircular
        } else {
            Realness::ComplexCircular
        };
        let mut kernel = kernel;
        if kernel.realness() != realness {
            kernel = kernel.with_realness(realness)?;
        }
        let spec = Self {
            kernel,
            mu,
            sigma,
            omega,
        };
        if spec.omega.is_some() {
            crate::sampler::nc_factorization(&spec.sigma, spec.omega.as_ref())?;
        }
        Ok(spec)
    }

    pub fn dim(&self) -> usize {
        self.kernel.dim()
    }

    /// Σ̃ = [[Σ, Ω], [Ω*, Σ*]].
    pub fn extended_scatter(&self) -> CMatrix<T> {
        extended_scatter(&self.sigma, self.omega.as_ref())
    }

    /// Real spec of (Re x, Im x) with the kernel's real representation.
    pub fn real_composite(&self) -> Result<RealSpec<T>> {
        let m = self.dim();
        let mut mu = DVector::zeros(2 * m);
        for i in 0..m {
            mu[i] = self.mu[i].re;
            mu[m + i] = self.mu[i].im;
        }
        let sigma = real_composite_scatter(&self.sigma, self.omega.as_ref());
        RealSpec::new(self.kernel.real_representation(), mu, SymMatrix::new(sigma)?)
    }
}

impl<T: Scalar> DistributionSpec<T> {
    pub fn kernel(&self) -> &FamilyKernel<T> {
        match self {
            DistributionSpec::Real(s) => &s.kernel,
            DistributionSpec::Complex(s) => &s.kernel,
        }
    }

    pub fn dim(&self) -> usize {
        self.kernel().dim()
    }

    pub fn is_complex(&self) -> bool {
        matches!(self, DistributionSpec::Complex(_))
    }
}

impl<T: Scalar> From<RealSpec<T>> for DistributionSpec<T> {
    fn from(s: RealSpec<T>) -> Self {
        DistributionSpec::Real(s)
    }
}

impl<T: Scalar> From<ComplexSpec<T>> for DistributionSpec<T> {
    fn from(s: ComplexSpec<T>) -> Self {
        DistributionSpec::Complex(s)
    }
}

fn herm_tol<T: Scalar>() -> T {
    T::machine_eps().sqrt() * T::c(1e-2)
}

fn max_abs_c<T: Scalar>(a: &CMatrix<T>) -> T {
    a.iter().fold(T::zero(), |acc, z| acc.max((*z).modulus()))
}

/// (A + Aᴴ)/2 after checking that A is Hermitian.
pub fn hermitian_part<T: Scalar>(a: &CMatrix<T>) -> Result<CMatrix<T>> {
    let ah = a.adjoint();
    let asym = (a - &ah).iter().fold(T::zero(), |acc, z| acc.max((*z).modulus()));
    if asym > herm_tol::<T>() * max_abs_c(a).max(T::one()) {
        return Err(Error::NotSymmetric {
            asymmetry: asym.f64(),
        });
    }
    Ok((a + ah).map(|z| z * T::c(0.5)))
}

/// (A + Aᵀ)/2 after checking that A is complex symmetric.
pub fn complex_symmetric_part<T: Scalar>(a: &CMatrix<T>) -> Result<CMatrix<T>> {
    let at = a.transpose();
    let asym = (a - &at).iter().fold(T::zero(), |acc, z| acc.max((*z).modulus()));
    if asym > herm_tol::<T>() * max_abs_c(a).max(T::one()) {
        return Err(Error::NotSymmetric {
            asymmetry: asym.f64(),
        });
    }
    Ok((a + at).map(|z| z * T::c(0.5)))
}

/// Real eigenvalues of a Hermitian matrix, ascending.
pub fn hermitian_eigenvalues<T: Scalar>(a: &CMatrix<T>) -> Vec<T> {
    let mut ev: Vec<T> = a.clone().symmetric_eigenvalues().iter().copied().collect();
    ev.sort_by(|x, y| x.partial_cmp(y).unwrap_or(std::cmp::Ordering::Equal));
    ev
}

pub fn check_hermitian_pd<T: Scalar>(a: &CMatrix<T>) -> Result<()> {
    let ev = hermitian_eigenvalues(a);
    let lo = ev[0];
    let hi = ev[ev.len() - 1];
    let tol = T::from_usize_(a.nrows()) * T::machine_eps() * hi.max(T::zero());
    if lo > tol && hi > T::zero() {
        Ok(())
    } else {
        Err(Error::NotPositiveDefinite {
            min_eigenvalue: lo.f64(),
            tolerance: tol.f64(),
        })
    }
}

/// Hermitian square root V Λ^{1/2} Vᴴ.
pub fn hermitian_sqrt<T: Scalar>(a: &CMatrix<T>) -> Result<CMatrix<T>> {
    check_hermitian_pd(a)?;
    let eig = SymmetricEigen::new(a.clone());
    let root = eig
        .eigenvalues
        .map(|l| Complex::new(l.sqrt(), T::zero()));
    let v = &eig.eigenvectors;
    let r = v * CMatrix::from_diagonal(&root) * v.adjoint();
    Ok((&r + r.adjoint()).map(|z| z * T::c(0.5)))
}

pub fn extended_scatter<T: Scalar>(sigma: &CMatrix<T>, omega: Option<&CMatrix<T>>) -> CMatrix<T> {
    let m = sigma.nrows();
    let mut out = CMatrix::zeros(2 * m, 2 * m);
    out.view_mut((0, 0), (m, m)).copy_from(sigma);
    out.view_mut((m, m), (m, m)).copy_from(&sigma.map(|z| z.conj()));
    if let Some(o) = omega {
        out.view_mut((0, m), (m, m)).copy_from(o);
        out.view_mut((m, 0), (m, m)).copy_from(&o.map(|z| z.conj()));
    }
    out
}

/// Scatter of (Re x, Im x):
/// ½ [[Re(Σ+Ω), Im(Ω−Σ)], [Im(Σ+Ω), Re(Σ−Ω)]].
pub fn real_composite_scatter<T: Scalar>(
    sigma: &CMatrix<T>,
    omega: Option<&CMatrix<T>>,
) -> DMatrix<T> {
    let m = sigma.nrows();
    let zero = CMatrix::zeros(m, m);
    let o = omega.unwrap_or(&zero);
    let half = T::c(0.5);
    let mut out = DMatrix::zeros(2 * m, 2 * m);
    for j in 0..m {
        for i in 0..m {
            let s = sigma[(i, j)];
            let w = o[(i, j)];
            out[(i, j)] = (s.re + w.re) * half;
            out[(i, m + j)] = (w.im - s.im) * half;
            out[(m + i, j)] = (s.im + w.im) * half;
            out[(m + i, m + j)] = (s.re - w.re) * half;
        }
    }
    out
}

/// Complex vector from a real composite (Re, Im) vector.
pub fn complex_from_composite<T: Scalar>(z: &DVector<T>) -> CVector<T> {
    let m = z.len() / 2;
    CVector::from_fn(m, |i, _| Complex::new(z[i], z[m + i]))
}

pub fn composite_from_complex<T: Scalar>(x: &CVector<T>) -> DVector<T> {
    let m = x.len();
    DVector::from_fn(2 * m, |i, _| if i < m { x[i].re } else { x[i - m].im })
}
