//! Asymptotic covariances of scatter estimators and the Slepian–Bangs
//! Fisher information for structured (μ(α), Σ(α)) models.

use nalgebra::{Cholesky, ComplexField, DMatrix, DVector, SymmetricEigen};
use num_complex::Complex;

use crate::estimate::{m_scale, shape_normalize, ShapeScale, Weight};
use crate::families::{FamilyKernel, Kurtosis, Realness};
use crate::matrix_kit::{unvecs, vec, vecs_sym, Duplication, StructuredCov, SymMatrix};
use crate::spec::{extended_scatter, CMatrix, CVector};
use crate::{Error, Result, Scalar};

/// Limiting covariances of √n(μ̂ − μ) and √n(vec Σ̂ − vec Σ_target).
#[derive(Debug, Clone, PartialEq)]
pub struct EstimatorAsymptotics<T: Scalar> {
    pub r_mu: Option<SymMatrix<T>>,
    /// σ₁(I+K)(V⊗V) + σ₂ vec(V)vecᵀ(V) with V = `r_sigma.base`, the limit of Σ̂.
    pub r_sigma: StructuredCov<T>,
    /// κ of the rank-one SCM term.
    pub extra_term: Option<T>,
}

impl<T: Scalar> EstimatorAsymptotics<T> {
    pub fn sigma1(&self) -> T {
        self.r_sigma.sigma1
    }

    pub fn sigma2(&self) -> T {
        self.r_sigma.sigma2
    }

    pub fn dense(&self) -> DMatrix<T> {
        self.r_sigma.dense()
    }
}

fn real_kernel<T: Scalar>(kernel: &FamilyKernel<T>, sigma: &SymMatrix<T>) -> Result<()> {
    if kernel.realness().is_complex() {
        return Err(Error::Unsupported(
            "estimator asymptotics are provided for real kernels".into(),
        ));
    }
    if kernel.dim() != sigma.dim() {
        return Err(Error::DimensionMismatch {
            expected: kernel.dim(),
            got: sigma.dim(),
        });
    }
    sigma.check_pd()
}

/// R_SCM = (1+κ)(I+K)(C⊗C) + κ vec(C)vecᵀ(C) with C = cov(x) = (E[Q]/m)Σ.
pub fn scm_asymptotics<T: Scalar>(
    kernel: &FamilyKernel<T>,
    sigma: &SymMatrix<T>,
) -> Result<EstimatorAsymptotics<T>> {
    real_kernel(kernel, sigma)?;
    let Kurtosis::Finite(kappa) = kernel.kurtosis() else {
        return Err(Error::InfiniteMoment {
            family: kernel.family().to_string(),
            order: 4,
        });
    };
    let mean = kernel.q_law().mean().ok_or(Error::InfiniteMoment {
        family: kernel.family().to_string(),
        order: 2,
    })?;
    let cov = sigma.scaled(mean / T::from_usize_(sigma.dim()));
    Ok(EstimatorAsymptotics {
        r_mu: Some(cov.clone()),
        r_sigma: StructuredCov::new(T::one() + kappa, kappa, cov)?,
        extra_term: Some(kappa),
    })
}

/// σ₂ = −2σ₁(1−σ₁)/(2 + m(1−σ₁)).
pub fn ml_sigma2<T: Scalar>(sigma1: T, m: usize) -> T {
    let m = T::from_usize_(m);
    let d = T::one() - sigma1;
    -T::c(2.0) * sigma1 * d / (T::c(2.0) + m * d)
}

/// R_μ = σ₀Σ, R_Σ with σ₁ = m(m+2)/E[Q²φ²(Q)], σ₀ = m/E[Qφ²(Q)], by
/// quadrature against the Q-law.
pub fn ml_asymptotics<T: Scalar>(
    kernel: &FamilyKernel<T>,
    sigma: &SymMatrix<T>,
) -> Result<EstimatorAsymptotics<T>> {
    real_kernel(kernel, sigma)?;
    let m = sigma.dim();
    let mm = T::from_usize_(m);
    let law = kernel.q_law();
    let e1 = law.expect(|q| {
        let p = kernel.score_phi(q);
        q * p * p
    })?;
    let e2 = law.expect(|q| {
        let p = kernel.score_phi(q);
        q * q * p * p
    })?;
    let sigma0 = mm / e1;
    let sigma1 = mm * (mm + T::c(2.0)) / e2;
    Ok(EstimatorAsymptotics {
        r_mu: Some(sigma.scaled(sigma0)),
        r_sigma: StructuredCov::new(sigma1, ml_sigma2(sigma1, m), sigma.clone())?,
        extra_term: None,
    })
}

/// Maronna coefficients computed along with the asymptotic covariance.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MCoefficients<T> {
    /// Root of E[σQu₂(σQ)] = m.
    pub scale: T,
    pub alpha: T,
    pub beta: T,
    pub a1: T,
    pub a2: T,
}

/// R_μ = (α/β²)V and R_Σ with the a₁/a₂-based σ₁, σ₂, where V = Σ/σ.
/// The bracket in σ₂ is divided by a₂²; with u₂ = φ this reduces to the ML
/// σ₂ and hence to the inverse Fisher information.
pub fn m_asymptotics<T: Scalar>(
    kernel: &FamilyKernel<T>,
    u1: &Weight<T>,
    u2: &Weight<T>,
    sigma: &SymMatrix<T>,
) -> Result<(EstimatorAsymptotics<T>, MCoefficients<T>)> {
    real_kernel(kernel, sigma)?;
    let m = sigma.dim();
    let mm = T::from_usize_(m);
    let two = T::c(2.0);
    let s = m_scale(kernel, u2)?;
    let law = kernel.q_law();
    let alpha = law.expect(|q| {
        let p = u1.psi((s * q).sqrt());
        p * p
    })? / mm;
    let beta = law.expect(|q| {
        let d = (s * q).sqrt();
        (T::one() - T::one() / mm) * u1.u(d) + u1.psi_prime(d) / mm
    })?;
    let a1 = law.expect(|q| {
        let p = u2.psi(s * q);
        p * p
    })? / (mm * (mm + two));
    let a2 = law.expect(|q| s * q * u2.psi_prime(s * q))? / mm;
    let den = two * a2 + mm;
    let sigma1 = (mm + two) * (mm + two) * a1 / (den * den);
    let sigma2 = ((a1 - T::one())
        - two * (a2 - T::one()) * a1 * (mm + (mm + T::c(4.0)) * a2) / (den * den))
        / (a2 * a2);
    let v = sigma.scaled(T::one() / s);
    let asym = EstimatorAsymptotics {
        r_mu: Some(v.scaled(alpha / (beta * beta))),
        r_sigma: StructuredCov::new(sigma1, sigma2, v)?,
        extra_term: None,
    };
    Ok((
        asym,
        MCoefficients {
            scale: s,
            alpha,
            beta,
            a1,
            a2,
        },
    ))
}

/// σ₁ = 1 + 2/m, σ₂ = −(2/m)σ₁ (equality in σ₂ ≥ −2σ₁/m). The structured
/// form with these coefficients is the covariance of the shape normalized to
/// unit determinant, so the base is Σ/|Σ|^{1/m}. For the trace-normalized
/// iterate use [`shape_asymptotics`] with [`ShapeScale::TraceM`].
pub fn tyler_asymptotics<T: Scalar>(m: usize, sigma: &SymMatrix<T>) -> Result<EstimatorAsymptotics<T>> {
    if sigma.dim() != m {
        return Err(Error::DimensionMismatch {
            expected: m,
            got: sigma.dim(),
        });
    }
    let mm = T::from_usize_(m);
    let sigma1 = T::one() + T::c(2.0) / mm;
    let v = shape_normalize(sigma, ShapeScale::Det1OverM)?;
    Ok(EstimatorAsymptotics {
        r_mu: None,
        r_sigma: StructuredCov::new(sigma1, -T::c(2.0) / mm * sigma1, v)?,
        extra_term: None,
    })
}

/// P_s(V) = I − vec(V) ds/dvecᵀ(Σ) at V.
pub fn shape_projector<T: Scalar>(scale: ShapeScale, v: &SymMatrix<T>) -> Result<DMatrix<T>> {
    let m = v.dim();
    let mm = T::from_usize_(m);
    let vv = vec(v.matrix());
    let grad = match scale {
        ShapeScale::None => return Ok(DMatrix::identity(m * m, m * m)),
        ShapeScale::TopLeft => {
            let mut e = DVector::zeros(m * m);
            e[0] = T::one();
            e
        }
        ShapeScale::TraceM => vec(&DMatrix::identity(m, m)) / mm,
        ShapeScale::Det1OverM => vec(v.inverse()?.matrix()) / mm,
    };
    Ok(DMatrix::identity(m * m, m * m) - vv * grad.transpose())
}

/// Delta-method covariance of the shape V_s = Σ̂/s(Σ̂):
/// P_s(V_s) [σ₁(I+K)(V_s⊗V_s) + σ₂ vec(V_s)vecᵀ(V_s)] P_sᵀ(V_s).
pub fn shape_asymptotics<T: Scalar>(
    base: &EstimatorAsymptotics<T>,
    scale: ShapeScale,
    v_s: &SymMatrix<T>,
) -> Result<DMatrix<T>> {
    let r = StructuredCov::new(base.sigma1(), base.sigma2(), v_s.clone())?.dense();
    let p = shape_projector(scale, v_s)?;
    let out = &p * r * p.transpose();
    Ok((&out + out.transpose()) * T::c(0.5))
}

/// σ₁(I+K)(V⊗V) − (2σ₁/m) vec(V)vecᵀ(V), the unit-determinant shape form.
pub fn det_shape_covariance<T: Scalar>(sigma1: T, v_s: &SymMatrix<T>) -> Result<DMatrix<T>> {
    let m = T::from_usize_(v_s.dim());
    Ok(StructuredCov::new(sigma1, -T::c(2.0) * sigma1 / m, v_s.clone())?.dense())
}

// ---------------------------------------------------------------------------
// Slepian–Bangs

/// μ(α), Σ(α) and Ω(α) at one parameter value. Real models leave the
/// imaginary parts at zero.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelPoint<T: Scalar> {
    pub mu: CVector<T>,
    pub sigma: CMatrix<T>,
    pub omega: Option<CMatrix<T>>,
}

/// dμ/dαᵀ (m×p), dvec(Σ)/dαᵀ (m²×p) and dvec(Ω)/dαᵀ.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelJacobian<T: Scalar> {
    pub d_mu: CMatrix<T>,
    pub d_sigma: CMatrix<T>,
    pub d_omega: Option<CMatrix<T>>,
}

/// A real parameter vector α mapped to the location and scatter of an
/// elliptical law.
pub trait ParametricModel<T: Scalar> {
    fn param_dim(&self) -> usize;
    fn dim(&self) -> usize;
    fn realness(&self) -> Realness;
    fn point(&self, alpha: &DVector<T>) -> Result<ModelPoint<T>>;
    fn jacobian(&self, alpha: &DVector<T>) -> Result<ModelJacobian<T>>;
}

fn stack<T: Scalar>(j: &ModelJacobian<T>) -> CMatrix<T> {
    let p = j.d_mu.ncols();
    let mut rows = j.d_mu.nrows() + j.d_sigma.nrows();
    if let Some(o) = &j.d_omega {
        rows += o.nrows();
    }
    let mut out = CMatrix::zeros(rows, p);
    let mut r = 0;
    for block in [Some(&j.d_mu), Some(&j.d_sigma), j.d_omega.as_ref()].into_iter().flatten() {
        out.view_mut((r, 0), (block.nrows(), p)).copy_from(block);
        r += block.nrows();
    }
    out
}

fn flatten<T: Scalar>(pt: &ModelPoint<T>) -> CVector<T> {
    let mut parts: Vec<Complex<T>> = pt.mu.iter().copied().collect();
    parts.extend(pt.sigma.iter().copied());
    if let Some(o) = &pt.omega {
        parts.extend(o.iter().copied());
    }
    CVector::from_vec(parts)
}

/// Compares the supplied Jacobians with central differences of `point`.
pub fn validate_jacobian<T: Scalar, M: ParametricModel<T> + ?Sized>(
    model: &M,
    alpha: &DVector<T>,
    rel_tol: T,
) -> Result<()> {
    let p = model.param_dim();
    if alpha.len() != p {
        return Err(Error::DimensionMismatch {
            expected: p,
            got: alpha.len(),
        });
    }
    let j = stack(&model.jacobian(alpha)?);
    let base = flatten(&model.point(alpha)?);
    if j.nrows() != base.len() || j.ncols() != p {
        return Err(Error::DimensionMismatch {
            expected: base.len(),
            got: j.nrows(),
        });
    }
    for k in 0..p {
        let h = T::c(1e-6) * alpha[k].abs().max(T::one());
        let mut plus = alpha.clone();
        plus[k] += h;
        let mut minus = alpha.clone();
        minus[k] -= h;
        let fd = (flatten(&model.point(&plus)?) - flatten(&model.point(&minus)?))
            .map(|z| z / (h * T::c(2.0)));
        let an = j.column(k);
        let diff = (&fd - an).norm();
        let scale = an.norm().max(fd.norm());
        let rel = if scale > T::c(1e-12) { diff / scale } else { diff };
        if rel > rel_tol {
            return Err(Error::JacobianMismatch {
                param: k,
                rel_error: rel.f64(),
            });
        }
    }
    Ok(())
}

/// (a₀, a₁, a₂) of the structured FIM for this kernel's realness.
pub fn sb_coefficients<T: Scalar>(kernel: &FamilyKernel<T>) -> Result<(T, T, T)> {
    let xi = kernel.sb_xi()?;
    let q = T::c(0.25);
    Ok(match kernel.realness() {
        Realness::Real | Realness::ComplexNoncircular => {
            (xi.xi1, xi.xi2 * T::c(0.5), (xi.xi2 - T::one()) * q)
        }
        Realness::ComplexCircular => (T::c(2.0) * xi.xi1, xi.xi2, xi.xi2 - T::one()),
    })
}

fn unvec_c<T: Scalar>(v: nalgebra::DVectorView<'_, Complex<T>>, k: usize) -> CMatrix<T> {
    CMatrix::from_iterator(k, k, v.iter().copied())
}

/// Re[a₀ dμᴴS⁻¹dμ + a₁ tr(S⁻¹dSᵢS⁻¹dSⱼ) + a₂ tr(S⁻¹dSᵢ)* tr(S⁻¹dSⱼ)].
fn structured_fim<T: Scalar>(
    coeffs: (T, T, T),
    s: &CMatrix<T>,
    d_mu: &CMatrix<T>,
    d_s: &CMatrix<T>,
) -> Result<DMatrix<T>> {
    let (a0, a1, a2) = coeffs;
    let k = s.nrows();
    let p = d_mu.ncols();
    let chol = Cholesky::new(s.clone()).ok_or(Error::NotPositiveDefinite {
        min_eigenvalue: f64::NAN,
        tolerance: 0.0,
    })?;
    let s_inv_dmu = chol.solve(d_mu);
    let mu_term = d_mu.adjoint() * s_inv_dmu;
    let w: Vec<CMatrix<T>> = (0..p).map(|i| chol.solve(&unvec_c(d_s.column(i), k))).collect();
    let traces: Vec<Complex<T>> = w.iter().map(|m| m.trace()).collect();
    let mut f = DMatrix::zeros(p, p);
    for i in 0..p {
        for j in i..p {
            let t1 = (&w[i] * &w[j]).trace();
            let t2 = traces[i].conj() * traces[j];
            let v = mu_term[(i, j)].re * a0 + t1.re * a1 + t2.re * a2;
            f[(i, j)] = v;
            f[(j, i)] = v;
        }
    }
    Ok(f)
}

/// Per-sample Fisher information of α under `kernel`. Real models use
/// (ξ₁, ξ₂/2, (ξ₂−1)/4) with Σ; circular complex models (2ξ₁, ξ₂, ξ₂−1)
/// with Σ and Re(dμᴴΣ⁻¹dμ); noncircular ones the real-model coefficients
/// with μ̃ = (μ, μ*) and Σ̃. Jacobians are checked against finite
/// differences first.
pub fn slepian_bangs_fim<T: Scalar, M: ParametricModel<T> + ?Sized>(
    model: &M,
    kernel: &FamilyKernel<T>,
    alpha: &DVector<T>,
) -> Result<DMatrix<T>> {
    if kernel.realness() != model.realness() {
        return Err(Error::InvalidParameter(format!(
            "kernel realness {:?} does not match model realness {:?}",
            kernel.realness(),
            model.realness()
        )));
    }
    if kernel.dim() != model.dim() {
        return Err(Error::DimensionMismatch {
            expected: model.dim(),
            got: kernel.dim(),
        });
    }
    validate_jacobian(model, alpha, T::c(1e-5))?;
    let coeffs = sb_coefficients(kernel)?;
    let pt = model.point(alpha)?;
    let jac = model.jacobian(alpha)?;
    let f = match model.realness() {
        Realness::Real | Realness::ComplexCircular => {
            structured_fim(coeffs, &pt.sigma, &jac.d_mu, &jac.d_sigma)?
        }
        Realness::ComplexNoncircular => {
            let m = model.dim();
            let p = model.param_dim();
            let zero = CMatrix::zeros(m, m);
            let omega = pt.omega.as_ref().unwrap_or(&zero);
            let s_tilde = extended_scatter(&pt.sigma, Some(omega));
            let mut d_mu = CMatrix::zeros(2 * m, p);
            d_mu.view_mut((0, 0), (m, p)).copy_from(&jac.d_mu);
            d_mu.view_mut((m, 0), (m, p)).copy_from(&jac.d_mu.map(|z| z.conj()));
            let zero_j = CMatrix::zeros(m * m, p);
            let d_omega = jac.d_omega.as_ref().unwrap_or(&zero_j);
            let mut d_s = CMatrix::zeros(4 * m * m, p);
            for k in 0..p {
                let ds = unvec_c(jac.d_sigma.column(k), m);
                let dom = unvec_c(d_omega.column(k), m);
                let dt = extended_scatter(&ds, Some(&dom));
                d_s.column_mut(k).copy_from(&CVector::from_iterator(4 * m * m, dt.iter().copied()));
            }
            structured_fim(coeffs, &s_tilde, &d_mu, &d_s)?
        }
    };
    Ok(f)
}

/// CRB = FIM⁻¹/n. A FIM that is not numerically PD is reported with the
/// eigenvector of its smallest eigenvalue.
pub fn crb<T: Scalar>(fim: &DMatrix<T>, n: usize) -> Result<DMatrix<T>> {
    let p = fim.nrows();
    let sym = (fim + fim.transpose()) * T::c(0.5);
    let eig = SymmetricEigen::new(sym.clone());
    let (mut lo, mut hi, mut idx) = (T::infinity(), -T::infinity(), 0);
    for (i, &l) in eig.eigenvalues.iter().enumerate() {
        if l < lo {
            lo = l;
            idx = i;
        }
        hi = hi.max(l);
    }
    if !(lo > T::from_usize_(p) * T::c(1e3) * T::machine_eps() * hi.abs()) {
        return Err(Error::SingularFim {
            null_direction: eig.eigenvectors.column(idx).iter().map(|v| v.f64()).collect(),
        });
    }
    let chol = Cholesky::new(sym).ok_or(Error::SingularFim {
        null_direction: eig.eigenvectors.column(idx).iter().map(|v| v.f64()).collect(),
    })?;
    let inv = chol.inverse();
    Ok(inv / T::from_usize_(n))
}

/// Outcome of the μ/Σ decoupling check.
#[derive(Debug, Clone, PartialEq)]
pub struct DecouplingReport<T> {
    pub mu_params: Vec<usize>,
    pub sigma_params: Vec<usize>,
    /// Parameters entering both μ and Σ (or Ω).
    pub shared: Vec<usize>,
    pub off_block_norm: T,
    pub decoupled: bool,
}

/// Splits α by which of μ and Σ/Ω each component moves, and measures the
/// FIM block between the two groups.
pub fn fim_block_decoupling_check<T: Scalar, M: ParametricModel<T> + ?Sized>(
    model: &M,
    kernel: &FamilyKernel<T>,
    alpha: &DVector<T>,
) -> Result<DecouplingReport<T>> {
    let fim = slepian_bangs_fim(model, kernel, alpha)?;
    let jac = model.jacobian(alpha)?;
    let p = model.param_dim();
    let moves = |m: &CMatrix<T>, k: usize| m.column(k).iter().any(|z| (*z).modulus() > T::zero());
    let mut mu_params = Vec::new();
    let mut sigma_params = Vec::new();
    for k in 0..p {
        if moves(&jac.d_mu, k) {
            mu_params.push(k);
        }
        let in_omega = jac.d_omega.as_ref().is_some_and(|o| moves(o, k));
        if moves(&jac.d_sigma, k) || in_omega {
            sigma_params.push(k);
        }
    }
    let shared: Vec<usize> = mu_params.iter().copied().filter(|k| sigma_params.contains(k)).collect();
    let mut acc = T::zero();
    for &i in &mu_params {
        for &j in &sigma_params {
            acc += fim[(i, j)] * fim[(i, j)];
        }
    }
    let off_block_norm = acc.sqrt();
    let scale = fim.norm().max(T::one());
    Ok(DecouplingReport {
        decoupled: off_block_norm < T::c(1e-10) * scale,
        mu_params,
        sigma_params,
        shared,
        off_block_norm,
    })
}

// ---------------------------------------------------------------------------
// Built-in models

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BuiltinKind {
    /// μ = α·1, p = 1.
    LocationScalar,
    /// μ = α (real) or α₁ + iα₂ (complex), p = m or 2m.
    LocationVector,
    /// Every free entry of Σ: vecs for real, diagonal plus real and imaginary
    /// parts of the strict upper triangle for complex.
    ScatterFull,
    /// Σ = α I, p = 1.
    ScatterScaledIdentity,
}

impl BuiltinKind {
    pub const ALL: [BuiltinKind; 4] = [
        BuiltinKind::LocationScalar,
        BuiltinKind::LocationVector,
        BuiltinKind::ScatterFull,
        BuiltinKind::ScatterScaledIdentity,
    ];

    pub fn name(self) -> &'static str {
        match self {
            BuiltinKind::LocationScalar => "location-scalar",
            BuiltinKind::LocationVector => "location-vector",
            BuiltinKind::ScatterFull => "scatter-full",
            BuiltinKind::ScatterScaledIdentity => "scatter-scaled-identity",
        }
    }

    pub fn from_name(name: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|k| k.name() == name)
            .ok_or_else(|| Error::Parse(format!("unknown model `{name}`")))
    }
}

/// Registry model: the parts not moved by α are held at (μ₀, Σ₀, Ω₀).
#[derive(Debug, Clone, PartialEq)]
pub struct BuiltinModel<T: Scalar> {
    pub kind: BuiltinKind,
    pub realness: Realness,
    pub mu0: CVector<T>,
    pub sigma0: CMatrix<T>,
    pub omega0: Option<CMatrix<T>>,
}

fn c<T: Scalar>(re: T) -> Complex<T> {
    Complex::new(re, T::zero())
}

impl<T: Scalar> BuiltinModel<T> {
    pub fn real(kind: BuiltinKind, mu0: DVector<T>, sigma0: &SymMatrix<T>) -> Result<Self> {
        if mu0.len() != sigma0.dim() {
            return Err(Error::DimensionMismatch {
                expected: sigma0.dim(),
                got: mu0.len(),
            });
        }
        Ok(Self {
            kind,
            realness: Realness::Real,
            mu0: mu0.map(c),
            sigma0: sigma0.matrix().map(c),
            omega0: None,
        })
    }

    pub fn complex(
        kind: BuiltinKind,
        mu0: CVector<T>,
        sigma0: CMatrix<T>,
        omega0: Option<CMatrix<T>>,
    ) -> Result<Self> {
        if mu0.len() != sigma0.nrows() {
            return Err(Error::DimensionMismatch {
                expected: sigma0.nrows(),
                got: mu0.len(),
            });
        }
        let realness = if omega0.is_some() {
            Realness::ComplexNoncircular
        } else {
            Realness::ComplexCircular
        };
        Ok(Self {
            kind,
            realness,
            mu0,
            sigma0,
            omega0,
        })
    }

    fn m(&self) -> usize {
        self.mu0.len()
    }

    /// α reproducing (μ₀, Σ₀) where the model can.
    pub fn default_alpha(&self) -> DVector<T> {
        let m = self.m();
        match self.kind {
            BuiltinKind::LocationScalar => DVector::from_element(1, self.mu0[0].re),
            BuiltinKind::LocationVector => {
                if self.realness == Realness::Real {
                    DVector::from_fn(m, |i, _| self.mu0[i].re)
                } else {
                    DVector::from_fn(2 * m, |i, _| {
                        if i < m {
                            self.mu0[i].re
                        } else {
                            self.mu0[i - m].im
                        }
                    })
                }
            }
            BuiltinKind::ScatterFull => {
                if self.realness == Realness::Real {
                    vecs_sym(&SymMatrix::symmetrized(self.sigma0.map(|z| z.re)))
                } else {
                    let mut out = Vec::with_capacity(m * m);
                    for i in 0..m {
                        out.push(self.sigma0[(i, i)].re);
                    }
                    for j in 0..m {
                        for i in 0..j {
                            out.push(self.sigma0[(i, j)].re);
                            out.push(self.sigma0[(i, j)].im);
                        }
                    }
                    DVector::from_vec(out)
                }
            }
            BuiltinKind::ScatterScaledIdentity => {
                DVector::from_element(1, self.sigma0.trace().re / T::from_usize_(m))
            }
        }
    }
}

impl<T: Scalar> ParametricModel<T> for BuiltinModel<T> {
    fn param_dim(&self) -> usize {
        let m = self.m();
        let complex = self.realness.is_complex();
        match self.kind {
            BuiltinKind::LocationScalar | BuiltinKind::ScatterScaledIdentity => 1,
            BuiltinKind::LocationVector => {
                if complex {
                    2 * m
                } else {
                    m
                }
            }
            BuiltinKind::ScatterFull => {
                if complex {
                    m * m
                } else {
                    m * (m + 1) / 2
                }
            }
        }
    }

    fn dim(&self) -> usize {
        self.m()
    }

    fn realness(&self) -> Realness {
        self.realness
    }

    fn point(&self, alpha: &DVector<T>) -> Result<ModelPoint<T>> {
        let m = self.m();
        let p = self.param_dim();
        if alpha.len() != p {
            return Err(Error::DimensionMismatch {
                expected: p,
                got: alpha.len(),
            });
        }
        let mut mu = self.mu0.clone();
        let mut sigma = self.sigma0.clone();
        match self.kind {
            BuiltinKind::LocationScalar => mu = CVector::from_element(m, c(alpha[0])),
            BuiltinKind::LocationVector => {
                mu = if self.realness.is_complex() {
                    CVector::from_fn(m, |i, _| Complex::new(alpha[i], alpha[m + i]))
                } else {
                    alpha.map(c)
                }
            }
            BuiltinKind::ScatterFull => {
                sigma = if self.realness.is_complex() {
                    let mut s = CMatrix::zeros(m, m);
                    for i in 0..m {
                        s[(i, i)] = c(alpha[i]);
                    }
                    let mut k = m;
                    for j in 0..m {
                        for i in 0..j {
                            let z = Complex::new(alpha[k], alpha[k + 1]);
                            s[(i, j)] = z;
                            s[(j, i)] = z.conj();
                            k += 2;
                        }
                    }
                    s
                } else {
                    unvecs(alpha, m)?.into_matrix().map(c)
                }
            }
            BuiltinKind::ScatterScaledIdentity => {
                sigma = CMatrix::identity(m, m).map(|z| z * alpha[0]);
            }
        }
        Ok(ModelPoint {
            mu,
            sigma,
            omega: self.omega0.clone(),
        })
    }

    fn jacobian(&self, alpha: &DVector<T>) -> Result<ModelJacobian<T>> {
        let m = self.m();
        let p = self.param_dim();
        if alpha.len() != p {
            return Err(Error::DimensionMismatch {
                expected: p,
                got: alpha.len(),
            });
        }
        let mut d_mu = CMatrix::zeros(m, p);
        let mut d_sigma = CMatrix::zeros(m * m, p);
        let one = c(T::one());
        let i_unit = Complex::new(T::zero(), T::one());
        match self.kind {
            BuiltinKind::LocationScalar => d_mu.fill(one),
            BuiltinKind::LocationVector => {
                for i in 0..m {
                    d_mu[(i, i)] = one;
                    if self.realness.is_complex() {
                        d_mu[(i, m + i)] = i_unit;
                    }
                }
            }
            BuiltinKind::ScatterFull => {
                if self.realness.is_complex() {
                    for i in 0..m {
                        d_sigma[(i + i * m, i)] = one;
                    }
                    let mut k = m;
                    for j in 0..m {
                        for i in 0..j {
                            d_sigma[(i + j * m, k)] = one;
                            d_sigma[(j + i * m, k)] = one;
                            d_sigma[(i + j * m, k + 1)] = i_unit;
                            d_sigma[(j + i * m, k + 1)] = -i_unit;
                            k += 2;
                        }
                    }
                } else {
                    let d = Duplication::new(m).dense::<T>()?;
                    d_sigma = d.map(c);
                }
            }
            BuiltinKind::ScatterScaledIdentity => {
                for i in 0..m {
                    d_sigma[(i + i * m, 0)] = one;
                }
            }
        }
        Ok(ModelJacobian {
            d_mu,
            d_sigma,
            d_omega: self.omega0.as_ref().map(|_| CMatrix::zeros(m * m, p)),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::families::{Family, GgScale};
    use crate::matrix_kit::duplication;

    fn sig2() -> SymMatrix<f64> {
        SymMatrix::from_row_slice(2, &[1.5, 0.4, 0.4, 0.8]).unwrap()
    }

    #[test]
    fn scm_coefficients() {
        let g = FamilyKernel::<f64>::real(Family::Gaussian, 2).unwrap();
        let a = scm_asymptotics(&g, &sig2()).unwrap();
        assert!((a.sigma1() - 1.0).abs() < 1e-14 && a.sigma2().abs() < 1e-14);
        let t = FamilyKernel::<f64>::real(Family::StudentT { nu: 10.0 }, 2).unwrap();
        let a = scm_asymptotics(&t, &sig2()).unwrap();
        assert!((a.sigma1() - 4.0 / 3.0).abs() < 1e-12);
        assert!((a.sigma2() - 1.0 / 3.0).abs() < 1e-12);
        let t4 = FamilyKernel::<f64>::real(Family::StudentT { nu: 4.0 }, 2).unwrap();
        assert!(matches!(scm_asymptotics(&t4, &sig2()), Err(Error::InfiniteMoment { .. })));
    }

    #[test]
    fn ml_coefficients() {
        let g = FamilyKernel::<f64>::real(Family::Gaussian, 3).unwrap();
        let s3 = SymMatrix::identity(3);
        let a = ml_asymptotics(&g, &s3).unwrap();
        assert!((a.sigma1() - 1.0).abs() < 1e-9);
        assert!(a.sigma2().abs() < 1e-9);
        let nu = 6.0;
        let t = FamilyKernel::<f64>::real(Family::StudentT { nu }, 2).unwrap();
        let a = ml_asymptotics(&t, &sig2()).unwrap();
        let xi2 = (nu + 2.0) / (nu + 4.0);
        assert!((a.sigma1() - 1.0 / xi2).abs() < 1e-8);
        for fam in [
            Family::StudentT { nu: 3.0 },
            Family::KDist { nu: 2.0 },
            Family::GeneralizedGaussian { s: 0.7, b: GgScale::Cov },
            Family::GeneralizedGaussian { s: 2.0, b: GgScale::Cov },
            Family::EpsContaminated { eps: 0.1, a2: 9.0 },
        ] {
            let k = FamilyKernel::<f64>::real(fam, 2).unwrap();
            let a = ml_asymptotics(&k, &sig2()).unwrap();
            let s1 = a.sigma1();
            let want = -2.0 * s1 * (1.0 - s1) / (2.0 + 2.0 * (1.0 - s1));
            assert!((a.sigma2() - want).abs() < 1e-12, "{fam}");
            assert!(a.sigma2() >= -2.0 * s1 / 2.0 - 1e-12);
        }
    }

    #[test]
    fn m_with_ml_weights_is_ml() {
        let k = FamilyKernel::<f64>::real(Family::StudentT { nu: 5.0 }, 2).unwrap();
        let (m, coef) = m_asymptotics(&k, &Weight::MlLocation(k), &Weight::Ml(k), &sig2()).unwrap();
        let ml = ml_asymptotics(&k, &sig2()).unwrap();
        assert!((coef.scale - 1.0).abs() < 1e-8);
        assert!((m.sigma1() - ml.sigma1()).abs() < 1e-6);
        assert!((m.sigma2() - ml.sigma2()).abs() < 1e-6);
        let r1 = m.r_mu.unwrap();
        let r2 = ml.r_mu.unwrap();
        assert!((r1.matrix() - r2.matrix()).norm() < 1e-6);
    }

    #[test]
    fn m_constant_weights_on_gaussian() {
        let g = FamilyKernel::<f64>::real(Family::Gaussian, 3).unwrap();
        let one = Weight::Constant(1.0);
        let (a, _) = m_asymptotics(&g, &one, &one, &SymMatrix::identity(3)).unwrap();
        assert!((a.sigma1() - 1.0).abs() < 1e-9);
        assert!(a.sigma2().abs() < 1e-9);
    }

    #[test]
    fn tyler_coefficients_and_bound() {
        let a = tyler_asymptotics(2, &sig2()).unwrap();
        assert!((a.sigma1() - 2.0).abs() < 1e-15);
        assert!((a.sigma2() + 2.0).abs() < 1e-15);
        assert_eq!(a.sigma2(), -2.0 / 2.0 * a.sigma1());
        assert!((a.r_sigma.base.log_det().unwrap()).abs() < 1e-12);
    }

    #[test]
    fn det_shape_two_forms_agree() {
        let v = shape_normalize(&sig2(), ShapeScale::Det1OverM).unwrap();
        let k = FamilyKernel::<f64>::real(Family::StudentT { nu: 5.0 }, 2).unwrap();
        let base = ml_asymptotics(&k, &sig2()).unwrap();
        let a = shape_asymptotics(&base, ShapeScale::Det1OverM, &v).unwrap();
        let b = det_shape_covariance(base.sigma1(), &v).unwrap();
        assert!((&a - &b).norm() < 1e-10 * b.norm());
    }

    #[test]
    fn trace_and_topleft_null_directions() {
        let k = FamilyKernel::<f64>::real(Family::StudentT { nu: 5.0 }, 2).unwrap();
        let base = ml_asymptotics(&k, &sig2()).unwrap();
        let vt = shape_normalize(&sig2(), ShapeScale::TraceM).unwrap();
        let r = shape_asymptotics(&base, ShapeScale::TraceM, &vt).unwrap();
        let e = vec(&DMatrix::<f64>::identity(2, 2));
        assert!((e.transpose() * &r * &e)[(0, 0)].abs() < 1e-10);
        let vl = shape_normalize(&sig2(), ShapeScale::TopLeft).unwrap();
        let r = shape_asymptotics(&base, ShapeScale::TopLeft, &vl).unwrap();
        assert!(r[(0, 0)].abs() < 1e-10);
    }

    #[test]
    fn gaussian_location_crb_is_sigma_over_n() {
        let s = sig2();
        let model = BuiltinModel::real(BuiltinKind::LocationVector, DVector::zeros(2), &s).unwrap();
        let g = FamilyKernel::<f64>::real(Family::Gaussian, 2).unwrap();
        let fim = slepian_bangs_fim(&model, &g, &model.default_alpha()).unwrap();
        let c = crb(&fim, 100).unwrap();
        assert!((c - s.matrix() / 100.0).norm() < 1e-14);
    }

    #[test]
    fn gaussian_scatter_fim_block() {
        let s = sig2();
        let model = BuiltinModel::real(BuiltinKind::ScatterFull, DVector::zeros(2), &s).unwrap();
        let g = FamilyKernel::<f64>::real(Family::Gaussian, 2).unwrap();
        let fim = slepian_bangs_fim(&model, &g, &model.default_alpha()).unwrap();
        let si = s.inverse().unwrap();
        let d = duplication::<f64>(2).unwrap();
        let want = d.transpose() * si.matrix().kronecker(si.matrix()) * &d * 0.5;
        assert!((fim - want).norm() < 1e-12);
    }

    #[test]
    fn ml_asymptotics_are_inverse_fim() {
        let s = sig2();
        let k = FamilyKernel::<f64>::real(Family::StudentT { nu: 6.0 }, 2).unwrap();
        let model = BuiltinModel::real(BuiltinKind::ScatterFull, DVector::zeros(2), &s).unwrap();
        let fim = slepian_bangs_fim(&model, &k, &model.default_alpha()).unwrap();
        let d = duplication::<f64>(2).unwrap();
        let r_vecs = fim.try_inverse().unwrap();
        let r_vec = &d * r_vecs * d.transpose();
        let ml = ml_asymptotics(&k, &s).unwrap().dense();
        assert!((&r_vec - &ml).norm() < 1e-8 * ml.norm());
    }

    #[test]
    fn complex_xi_bridge_and_circular_coefficients() {
        for fam in [Family::StudentT { nu: 5.0 }, Family::GeneralizedGaussian { s: 0.6, b: GgScale::Cov }] {
            let kc = FamilyKernel::<f64>::new(fam, 2, Realness::ComplexCircular).unwrap();
            let kr = FamilyKernel::<f64>::real(fam, 4).unwrap();
            let a = kc.sb_xi_quadrature().unwrap();
            let b = kr.sb_xi_quadrature().unwrap();
            assert!((a.xi1 - b.xi1).abs() < 1e-8 && (a.xi2 - b.xi2).abs() < 1e-8);
        }
        let g = FamilyKernel::<f64>::new(Family::Gaussian, 2, Realness::ComplexCircular).unwrap();
        let (a0, a1, a2) = sb_coefficients(&g).unwrap();
        assert!((a0 - 2.0).abs() < 1e-14 && (a1 - 1.0).abs() < 1e-14 && a2.abs() < 1e-14);
    }

    #[test]
    fn circular_and_noncircular_paths_agree_at_zero_omega() {
        let sigma = CMatrix::from_row_slice(
            2,
            2,
            &[c(2.0), Complex::new(0.3, 0.4), Complex::new(0.3, -0.4), c(1.0)],
        );
        let mu = CVector::zeros(2);
        for kind in BuiltinKind::ALL {
            let circ = BuiltinModel::complex(kind, mu.clone(), sigma.clone(), None).unwrap();
            let nc = BuiltinModel::complex(kind, mu.clone(), sigma.clone(), Some(CMatrix::zeros(2, 2))).unwrap();
            let fam = Family::StudentT { nu: 7.0 };
            let kc = FamilyKernel::<f64>::new(fam, 2, Realness::ComplexCircular).unwrap();
            let kn = FamilyKernel::<f64>::new(fam, 2, Realness::ComplexNoncircular).unwrap();
            let alpha = circ.default_alpha();
            let a = slepian_bangs_fim(&circ, &kc, &alpha).unwrap();
            let b = slepian_bangs_fim(&nc, &kn, &alpha).unwrap();
            assert!((&a - &b).norm() < 1e-10 * a.norm(), "{kind:?}");
        }
    }

    #[test]
    fn decoupling_report() {
        let g = FamilyKernel::<f64>::real(Family::StudentT { nu: 5.0 }, 2).unwrap();
        let model = SharedModel;
        let r = fim_block_decoupling_check(&model, &g, &DVector::from_vec(vec![0.3, 1.2])).unwrap();
        assert_eq!(r.shared, vec![0]);
        assert!(!r.decoupled);
        let loc = BuiltinModel::real(BuiltinKind::LocationVector, DVector::zeros(2), &sig2()).unwrap();
        let r = fim_block_decoupling_check(&loc, &g, &loc.default_alpha()).unwrap();
        assert!(r.sigma_params.is_empty() && r.decoupled);
    }

    /// μ = α₀·1, Σ = (α₁ + α₀²) I.
    struct SharedModel;

    impl ParametricModel<f64> for SharedModel {
        fn param_dim(&self) -> usize {
            2
        }
        fn dim(&self) -> usize {
            2
        }
        fn realness(&self) -> Realness {
            Realness::Real
        }
        fn point(&self, a: &DVector<f64>) -> Result<ModelPoint<f64>> {
            Ok(ModelPoint {
                mu: CVector::from_element(2, c(a[0])),
                sigma: CMatrix::identity(2, 2).map(|z| z * (a[1] + a[0] * a[0])),
                omega: None,
            })
        }
        fn jacobian(&self, a: &DVector<f64>) -> Result<ModelJacobian<f64>> {
            let mut d_sigma = CMatrix::zeros(4, 2);
            for i in [0, 3] {
                d_sigma[(i, 0)] = c(2.0 * a[0]);
                d_sigma[(i, 1)] = c(1.0);
            }
            let mut d_mu = CMatrix::zeros(2, 2);
            d_mu.column_mut(0).fill(c(1.0));
            Ok(ModelJacobian {
                d_mu,
                d_sigma,
                d_omega: None,
            })
        }
    }

    #[test]
    fn wrong_jacobian_is_caught() {
        struct Bad;
        impl ParametricModel<f64> for Bad {
            fn param_dim(&self) -> usize {
                1
            }
            fn dim(&self) -> usize {
                1
            }
            fn realness(&self) -> Realness {
                Realness::Real
            }
            fn point(&self, a: &DVector<f64>) -> Result<ModelPoint<f64>> {
                Ok(ModelPoint {
                    mu: CVector::from_element(1, c(a[0] * a[0])),
                    sigma: CMatrix::identity(1, 1),
                    omega: None,
                })
            }
            fn jacobian(&self, _: &DVector<f64>) -> Result<ModelJacobian<f64>> {
                Ok(ModelJacobian {
                    d_mu: CMatrix::from_element(1, 1, c(1.0)),
                    d_sigma: CMatrix::zeros(1, 1),
                    d_omega: None,
                })
            }
        }
        let r = validate_jacobian(&Bad, &DVector::from_element(1, 2.0), 1e-5);
        assert!(matches!(r, Err(Error::JacobianMismatch { param: 0, .. })));
    }

    #[test]
    fn singular_fim_reports_direction() {
        let fim = DMatrix::from_row_slice(2, 2, &[1.0, 1.0, 1.0, 1.0]);
        match crb(&fim, 10) {
            Err(Error::SingularFim { null_direction }) => {
                assert!((null_direction[0] + null_direction[1]).abs() < 1e-12);
            }
            other => panic!("{other:?}"),
        }
    }
}
