//! Exact sampling through the stochastic representations
//! x = μ + √Q A u (real and circular complex), x = μ + √Q A(Δ₁u + Δ₂u*)
//! (noncircular), and x = μ + √τ n (compound Gaussian).

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::families::Family;
use crate::matrix_kit::{psd_sqrt, SymMatrix};
use crate::rng::stream_rng;
use crate::spec::{hermitian_sqrt, CMatrix, CVector, ComplexSpec, DistributionSpec, RealSpec};
use crate::{Error, Result, Scalar};

/// Draws, one per row.
#[derive(Debug, Clone, PartialEq)]
pub enum SampleData<T: Scalar> {
    Real(DMatrix<T>),
    Complex(CMatrix<T>),
}

impl<T: Scalar> SampleData<T> {
    pub fn nrows(&self) -> usize {
        match self {
            SampleData::Real(d) => d.nrows(),
            SampleData::Complex(d) => d.nrows(),
        }
    }

    pub fn real(&self) -> Option<&DMatrix<T>> {
        match self {
            SampleData::Real(d) => Some(d),
            SampleData::Complex(_) => None,
        }
    }

    pub fn complex(&self) -> Option<&CMatrix<T>> {
        match self {
            SampleData::Complex(d) => Some(d),
            SampleData::Real(_) => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SampleBatch<T: Scalar> {
    pub data: SampleData<T>,
    pub spec: DistributionSpec<T>,
    pub seed: u64,
    pub stream_id: u64,
}

fn normal<R: Rng + ?Sized, T: Scalar>(rng: &mut R) -> T {
    let z: f64 = StandardNormal.sample(rng);
    T::c(z)
}

fn unit_vector<R: Rng + ?Sized, T: Scalar>(m: usize, rng: &mut R) -> DVector<T> {
    loop {
        let n = DVector::from_fn(m, |_, _| normal::<R, T>(rng));
        let norm = n.norm();
        if norm > T::zero() {
            return n / norm;
        }
    }
}

fn complex_normal<R: Rng + ?Sized, T: Scalar>(rng: &mut R) -> Complex<T> {
    // E|z|² = 1
    let h = T::c(std::f64::consts::FRAC_1_SQRT_2);
    Complex::new(normal::<R, T>(rng) * h, normal::<R, T>(rng) * h)
}

fn complex_unit_vector<R: Rng + ?Sized, T: Scalar>(m: usize, rng: &mut R) -> CVector<T> {
    loop {
        let n = CVector::from_fn(m, |_, _| complex_normal::<R, T>(rng));
        let norm = n.norm();
        if norm > T::zero() {
            return n.map(|z| z / norm);
        }
    }
}

/// `count` draws uniform on the unit sphere of ℝ^m, one per row.
pub fn sample_sphere<T: Scalar, R: Rng + ?Sized>(m: usize, count: usize, rng: &mut R) -> DMatrix<T> {
    let mut out = DMatrix::zeros(count, m);
    for i in 0..count {
        let u = unit_vector::<R, T>(m, rng);
        out.row_mut(i).copy_from(&u.transpose());
    }
    out
}

fn check_n(n: usize) -> Result<()> {
    if n == 0 {
        Err(Error::InvalidParameter("sample size must be >= 1".into()))
    } else {
        Ok(())
    }
}

fn real_spec<T: Scalar>(spec: &DistributionSpec<T>) -> Result<&RealSpec<T>> {
    match spec {
        DistributionSpec::Real(s) => Ok(s),
        DistributionSpec::Complex(_) => Err(Error::InvalidParameter(
            "expected a real distribution spec".into(),
        )),
    }
}

fn complex_spec<T: Scalar>(spec: &DistributionSpec<T>) -> Result<&ComplexSpec<T>> {
    match spec {
        DistributionSpec::Complex(s) => Ok(s),
        DistributionSpec::Real(_) => Err(Error::InvalidParameter(
            "expected a complex distribution spec".into(),
        )),
    }
}

/// Draws with the law's natural route: real specs through [`sample_res`],
/// complex ones through [`sample_nc_ces`].
pub fn sample<T: Scalar>(
    spec: &DistributionSpec<T>,
    n: usize,
    seed: u64,
    stream_id: u64,
) -> Result<SampleBatch<T>> {
    match spec {
        DistributionSpec::Real(_) => sample_res(spec, n, seed, stream_id),
        DistributionSpec::Complex(_) => sample_nc_ces(spec, n, seed, stream_id),
    }
}

/// x = μ + √Q A u with A the symmetric square root of Σ. Gaussian kernels use
/// x = μ + A n directly.
pub fn sample_res<T: Scalar>(
    spec: &DistributionSpec<T>,
    n: usize,
    seed: u64,
    stream_id: u64,
) -> Result<SampleBatch<T>> {
    let s = real_spec(spec)?;
    if matches!(s.kernel.family(), Family::Gaussian) {
        return sample_gaussian_direct(spec, n, seed, stream_id);
    }
    sample_res_modular(spec, n, seed, stream_id)
}

/// The Q × u route for every kernel, Gaussian included.
pub fn sample_res_modular<T: Scalar>(
    spec: &DistributionSpec<T>,
    n: usize,
    seed: u64,
    stream_id: u64,
) -> Result<SampleBatch<T>> {
    check_n(n)?;
    let s = real_spec(spec)?;
    let m = s.dim();
    let a = psd_sqrt(&s.sigma)?;
    let law = s.kernel.q_law();
    let mut rng = stream_rng(seed, stream_id);
    let mut data = DMatrix::zeros(n, m);
    for i in 0..n {
        let q = law.sample(&mut rng);
        let u = unit_vector::<_, T>(m, &mut rng);
        let x = &s.mu + &a * u * q.sqrt();
        data.row_mut(i).copy_from(&x.transpose());
    }
    Ok(SampleBatch {
        data: SampleData::Real(data),
        spec: spec.clone(),
        seed,
        stream_id,
    })
}

fn sample_gaussian_direct<T: Scalar>(
    spec: &DistributionSpec<T>,
    n: usize,
    seed: u64,
    stream_id: u64,
) -> Result<SampleBatch<T>> {
    check_n(n)?;
    let s = real_spec(spec)?;
    let m = s.dim();
    // a Gaussian kernel with a non-unit scale is N(μ, Σ/λ)
    let a = psd_sqrt(&s.sigma)? / s.kernel.scale().sqrt();
    let mut rng = stream_rng(seed, stream_id);
    let mut data = DMatrix::zeros(n, m);
    for i in 0..n {
        let z = DVector::from_fn(m, |_, _| normal::<_, T>(&mut rng));
        let x = &s.mu + &a * z;
        data.row_mut(i).copy_from(&x.transpose());
    }
    Ok(SampleBatch {
        data: SampleData::Real(data),
        spec: spec.clone(),
        seed,
        stream_id,
    })
}

/// Compound-Gaussian draws x = μ + √τ A n (complex: A(Δ₁n + Δ₂n*) with
/// circular n).
pub fn sample_cg<T: Scalar>(
    spec: &DistributionSpec<T>,
    n: usize,
    seed: u64,
    stream_id: u64,
) -> Result<SampleBatch<T>> {
    check_n(n)?;
    let kernel = spec.kernel();
    let texture = kernel.texture_law().ok_or_else(|| {
        Error::NotCompoundGaussian(format!("{} has no texture representation", kernel.family()))
    })?;
    let mut rng = stream_rng(seed, stream_id);
    let m = spec.dim();
    let data = match spec {
        DistributionSpec::Real(s) => {
            let a = psd_sqrt(&s.sigma)?;
            let mut data = DMatrix::zeros(n, m);
            for i in 0..n {
                let tau = texture.sample(&mut rng);
                let z = DVector::from_fn(m, |_, _| normal::<_, T>(&mut rng));
                let x = &s.mu + &a * z * tau.sqrt();
                data.row_mut(i).copy_from(&x.transpose());
            }
            SampleData::Real(data)
        }
        DistributionSpec::Complex(s) => {
            let f = nc_factorization(&s.sigma, s.omega.as_ref())?;
            let mut data = CMatrix::zeros(n, m);
            for i in 0..n {
                let tau = texture.sample(&mut rng);
                let z = CVector::from_fn(m, |_, _| complex_normal::<_, T>(&mut rng));
                let x = &s.mu + f.apply(&z).map(|v| v * tau.sqrt());
                data.row_mut(i).copy_from(&x.transpose());
            }
            SampleData::Complex(data)
        }
    };
    Ok(SampleBatch {
        data,
        spec: spec.clone(),
        seed,
        stream_id,
    })
}

/// x = μ + √Q A(Δ₁u + Δ₂u*), reducing to μ + √Q A u when Ω is absent.
/// Gaussian kernels draw the speckle n directly.
pub fn sample_nc_ces<T: Scalar>(
    spec: &DistributionSpec<T>,
    n: usize,
    seed: u64,
    stream_id: u64,
) -> Result<SampleBatch<T>> {
    check_n(n)?;
    let s = complex_spec(spec)?;
    let m = s.dim();
    let f = nc_factorization(&s.sigma, s.omega.as_ref())?;
    let mut rng = stream_rng(seed, stream_id);
    let mut data = CMatrix::zeros(n, m);
    if matches!(s.kernel.family(), Family::Gaussian) {
        let scale = T::one() / s.kernel.scale().sqrt();
        for i in 0..n {
            let z = CVector::from_fn(m, |_, _| complex_normal::<_, T>(&mut rng));
            let x = &s.mu + f.apply(&z).map(|v| v * scale);
            data.row_mut(i).copy_from(&x.transpose());
        }
    } else {
        let law = s.kernel.q_law();
        for i in 0..n {
            let q = law.sample(&mut rng);
            let u = complex_unit_vector::<_, T>(m, &mut rng);
            let x = &s.mu + f.apply(&u).map(|v| v * q.sqrt());
            data.row_mut(i).copy_from(&x.transpose());
        }
    }
    Ok(SampleBatch {
        data: SampleData::Complex(data),
        spec: spec.clone(),
        seed,
        stream_id,
    })
}

/// Angular central Gaussian draws n/‖n‖ with n ~ N(0, Σ).
pub fn sample_acg<T: Scalar>(
    sigma: &SymMatrix<T>,
    n: usize,
    seed: u64,
    stream_id: u64,
) -> Result<DMatrix<T>> {
    check_n(n)?;
    let m = sigma.dim();
    let a = psd_sqrt(sigma)?;
    let mut rng = stream_rng(seed, stream_id);
    let mut out = DMatrix::zeros(n, m);
    for i in 0..n {
        let z = DVector::from_fn(m, |_, _| normal::<_, T>(&mut rng));
        let x = &a * z;
        let norm = x.norm();
        out.row_mut(i).copy_from(&(x / norm).transpose());
    }
    Ok(out)
}

/// Rows projected onto the unit sphere.
pub fn project_to_sphere<T: Scalar>(data: &DMatrix<T>) -> DMatrix<T> {
    let mut out = data.clone();
    for mut row in out.row_iter_mut() {
        let n = row.norm();
        if n > T::zero() {
            row /= n;
        }
    }
    out
}

/// y = B x + b row by row, with the law mapped to (Bμ + b, BΣBᵀ) and the same
/// kernel in the new dimension.
pub fn affine_transform<T: Scalar>(
    batch: &SampleBatch<T>,
    b_mat: &DMatrix<T>,
    b_vec: &DVector<T>,
) -> Result<SampleBatch<T>> {
    let s = real_spec(&batch.spec)?;
    let m = s.dim();
    let k = b_mat.nrows();
    if b_mat.ncols() != m {
        return Err(Error::DimensionMismatch {
            expected: m,
            got: b_mat.ncols(),
        });
    }
    if b_vec.len() != k {
        return Err(Error::DimensionMismatch {
            expected: k,
            got: b_vec.len(),
        });
    }
    if k > m || b_mat.clone().svd(false, false).rank(T::c(1e3) * T::machine_eps()) < k {
        return Err(Error::InvalidParameter("B must have full row rank".into()));
    }
    let sigma = SymMatrix::new(b_mat * s.sigma.matrix() * b_mat.transpose())?;
    let mu = b_mat * &s.mu + b_vec;
    let kernel = s.kernel.with_dim(k)?;
    let spec = DistributionSpec::Real(RealSpec::new(kernel, mu, sigma)?);
    let x = batch.data.real().expect("real batch for real spec");
    let mut y = x * b_mat.transpose();
    for mut row in y.row_iter_mut() {
        row += b_vec.transpose();
    }
    Ok(SampleBatch {
        data: SampleData::Real(y),
        spec,
        seed: batch.seed,
        stream_id: batch.stream_id,
    })
}

/// Factorization Σ = A Aᴴ, Ω = A Δ_κ Aᵀ used by the noncircular sampler.
///
/// A₀ is the Hermitian square root of Σ and U is a Takagi factor of
/// B = A₀⁻¹ Ω A₀⁻ᵀ = U Δ_κ Uᵀ, obtained from the real symmetric matrix
/// [[Re B, Im B], [Im B, −Re B]]: an eigenvector (x; y) with eigenvalue κ ≥ 0
/// gives the column u = x + iy. Columns for κ = 0 are completed by
/// Gram–Schmidt on the standard basis, so the phase of A's columns is the one
/// produced by the symmetric eigensolver.
#[derive(Debug, Clone)]
pub struct NcFactor<T: Scalar> {
    pub a: CMatrix<T>,
    pub kappa: Vec<T>,
    delta1: Vec<T>,
    delta2: Vec<T>,
}

impl<T: Scalar> NcFactor<T> {
    /// A(Δ₁v + Δ₂v*).
    pub fn apply(&self, v: &CVector<T>) -> CVector<T> {
        let w = CVector::from_fn(v.len(), |i, _| {
            v[i] * self.delta1[i] + v[i].conj() * self.delta2[i]
        });
        &self.a * w
    }
}

pub fn nc_factorization<T: Scalar>(
    sigma: &CMatrix<T>,
    omega: Option<&CMatrix<T>>,
) -> Result<NcFactor<T>> {
    let m = sigma.nrows();
    let a0 = hermitian_sqrt(sigma)?;
    let Some(omega) = omega else {
        return Ok(NcFactor {
            a: a0,
            kappa: vec![T::zero(); m],
            delta1: vec![T::one(); m],
            delta2: vec![T::zero(); m],
        });
    };
    let a0_inv = a0
        .clone()
        .try_inverse()
        .ok_or(Error::NotPositiveDefinite {
            min_eigenvalue: 0.0,
            tolerance: 0.0,
        })?;
    let b = &a0_inv * omega * a0_inv.transpose();
    let mut h = DMatrix::zeros(2 * m, 2 * m);
    for j in 0..m {
        for i in 0..m {
            let z = (b[(i, j)] + b[(j, i)]) * T::c(0.5);
            h[(i, j)] = z.re;
            h[(i, m + j)] = z.im;
            h[(m + i, j)] = z.im;
            h[(m + i, m + j)] = -z.re;
        }
    }
    let eig = SymmetricEigen::new(h);
    let mut order: Vec<usize> = (0..2 * m).collect();
    order.sort_by(|&x, &y| {
        eig.eigenvalues[y]
            .partial_cmp(&eig.eigenvalues[x])
            .unwrap_or(std::cmp::Ordering::Equal)
    });
    let zero_tol = T::c(1e-12).max(T::machine_eps() * T::c(100.0));
    let mut cols: Vec<CVector<T>> = Vec::with_capacity(m);
    let mut kappa = Vec::with_capacity(m);
    for &idx in order.iter().take(m) {
        let k = eig.eigenvalues[idx];
        if k <= zero_tol {
            break;
        }
        if k > T::one() + T::c(1e-10) {
            return Err(Error::InfeasibleNoncircular {
                index: cols.len(),
                kappa: k.f64(),
            });
        }
        let v = eig.eigenvectors.column(idx);
        let u = CVector::from_fn(m, |i, _| Complex::new(v[i], v[m + i]));
        let norm = u.norm();
        cols.push(u.map(|z| z / norm));
        kappa.push(k.min(T::one()));
    }
    // complete with an orthonormal basis of the null space
    let mut e = 0;
    while cols.len() < m && e < m {
        let mut v = CVector::from_fn(m, |i, _| {
            if i == e {
                Complex::new(T::one(), T::zero())
            } else {
                Complex::new(T::zero(), T::zero())
            }
        });
        for c in &cols {
            let proj = c.dotc(&v);
            v -= c.map(|z| z * proj);
        }
        let norm = v.norm();
        if norm > T::c(1e-6) {
            cols.push(v.map(|z| z / norm));
            kappa.push(T::zero());
        }
        e += 1;
    }
    let u = CMatrix::from_columns(&cols);
    let delta1 = kappa
        .iter()
        .map(|&k| ((T::one() + k).sqrt() + (T::one() - k).sqrt()) * T::c(0.5))
        .collect();
    let delta2 = kappa
        .iter()
        .map(|&k| ((T::one() + k).sqrt() - (T::one() - k).sqrt()) * T::c(0.5))
        .collect();
    Ok(NcFactor {
        a: a0 * u,
        kappa,
        delta1,
        delta2,
    })
}
