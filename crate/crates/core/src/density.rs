//! Log-space density evaluation for real and complex elliptical laws.

use nalgebra::{Cholesky, ComplexField, DMatrix, DVector};
use num_complex::Complex;

use crate::families::{FamilyKernel, TextureKind, TextureLaw};
use crate::matrix_kit::{schur_conditional, MahalanobisForm, SymMatrix};
use crate::quadrature::{integrate, integrate_to_inf, QuadOptions};
use crate::spec::{CVector, ComplexSpec, DistributionSpec, RealSpec};
use crate::special::ln_gamma;
use crate::{Error, Result, Scalar};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LogDensityValue<T> {
    pub log_pdf: T,
    pub pdf: T,
}

impl<T: Scalar> LogDensityValue<T> {
    pub fn from_log(log_pdf: T) -> Self {
        Self {
            log_pdf,
            pdf: log_pdf.exp(),
        }
    }
}

fn real_spec<T: Scalar>(spec: &DistributionSpec<T>) -> Result<&RealSpec<T>> {
    match spec {
        DistributionSpec::Real(s) => Ok(s),
        DistributionSpec::Complex(_) => {
            Err(Error::InvalidParameter("expected a real distribution spec".into()))
        }
    }
}

fn complex_spec<T: Scalar>(spec: &DistributionSpec<T>) -> Result<&ComplexSpec<T>> {
    match spec {
        DistributionSpec::Complex(s) => Ok(s),
        DistributionSpec::Real(_) => {
            Err(Error::InvalidParameter("expected a complex distribution spec".into()))
        }
    }
}

/// ln p(x) = −½ ln|Σ| + ln g(Q).
pub fn pdf_res<T: Scalar>(spec: &DistributionSpec<T>, x: &DVector<T>) -> Result<LogDensityValue<T>> {
    let s = real_spec(spec)?;
    let form = MahalanobisForm::new(&s.sigma)?;
    let q = form.eval(x, &s.mu)?;
    let ln = -form.log_det() * T::c(0.5) + s.kernel.ln_density_generator(q);
    Ok(LogDensityValue::from_log(ln))
}

/// ln p(x) = −½ ln|Σ̃| + ln g_c(½ x̃ᴴ Σ̃⁻¹ x̃) with x̃ = (x − μ, (x − μ)*);
/// circular specs use −ln|Σ| + ln g_c((x−μ)ᴴ Σ⁻¹ (x−μ)).
pub fn pdf_complex<T: Scalar>(
    spec: &DistributionSpec<T>,
    x: &CVector<T>,
) -> Result<LogDensityValue<T>> {
    let s = complex_spec(spec)?;
    let m = s.dim();
    if x.len() != m {
        return Err(Error::DimensionMismatch { expected: m, got: x.len() });
    }
    let r = x - &s.mu;
    let (scatter, v, half) = match &s.omega {
        None => (s.sigma.clone(), r, false),
        Some(_) => {
            let mut v = CVector::zeros(2 * m);
            for i in 0..m {
                v[i] = r[i];
                v[m + i] = r[i].conj();
            }
            (s.extended_scatter(), v, true)
        }
    };
    let chol = Cholesky::new(scatter).ok_or(Error::NotPositiveDefinite {
        min_eigenvalue: f64::NAN,
        tolerance: 0.0,
    })?;
    let l = chol.l_dirty();
    let ln_det = (0..l.nrows())
        .map(|i| l[(i, i)].modulus().ln())
        .fold(T::zero(), |a, b| a + b)
        * T::c(2.0);
    let y = l
        .solve_lower_triangular(&v)
        .expect("nonsingular Cholesky factor");
    let q = y.iter().fold(T::zero(), |a, z| a + z.norm_sqr());
    let ln = if half {
        -ln_det * T::c(0.5) + s.kernel.ln_density_generator(q * T::c(0.5))
    } else {
        -ln_det + s.kernel.ln_density_generator(q)
    };
    Ok(LogDensityValue::from_log(ln))
}

/// Dispatches on realness; complex points are passed as (Re, Im) pairs.
pub fn log_pdf<T: Scalar>(spec: &DistributionSpec<T>, x: &DVector<T>) -> Result<LogDensityValue<T>> {
    match spec {
        DistributionSpec::Real(_) => pdf_res(spec, x),
        DistributionSpec::Complex(s) => {
            let m = s.dim();
            if x.len() != 2 * m {
                return Err(Error::DimensionMismatch { expected: 2 * m, got: x.len() });
            }
            let z = CVector::from_fn(m, |i, _| Complex::new(x[2 * i], x[2 * i + 1]));
            pdf_complex(spec, &z)
        }
    }
}

/// Density of this kernel's second-order modular variate.
pub fn pdf_q<T: Scalar>(kernel: &FamilyKernel<T>, q: T) -> T {
    if q < T::zero() {
        return T::zero();
    }
    kernel.q_law().pdf(q)
}

/// Density of R = √Q: 2r·p_Q(r²).
pub fn pdf_r<T: Scalar>(kernel: &FamilyKernel<T>, r: T) -> T {
    if r < T::zero() {
        return T::zero();
    }
    T::c(2.0) * r * pdf_q(kernel, r * r)
}

fn ln_delta<T: Scalar>(m: T) -> T {
    let h = m * T::c(0.5);
    ln_gamma(h) - h * T::pi().ln()
}

/// Density generator of an m₁-dimensional marginal,
/// g_{m₁|m}(u) = δ_{m₂}⁻¹ ∫_u^∞ (t − u)^{m₂/2 − 1} g(t) dt, by quadrature.
/// Written with t = u + w² so the integrand is smooth at the lower limit.
pub fn marginal_generator<T: Scalar>(kernel: &FamilyKernel<T>, m1: usize, u: T) -> Result<T> {
    marginal_generator_with(kernel, m1, u, marginal_opts())
}

fn marginal_opts() -> QuadOptions {
    QuadOptions {
        rel_tol: 1e-10,
        abs_tol: 0.0,
        max_subdivisions: 400,
    }
}

pub fn marginal_generator_with<T: Scalar>(
    kernel: &FamilyKernel<T>,
    m1: usize,
    u: T,
    opts: QuadOptions,
) -> Result<T> {
    if kernel.realness().is_complex() {
        return Err(Error::Unsupported(
            "marginal generators are defined for real kernels".into(),
        ));
    }
    let m = kernel.dim();
    if m1 == 0 || m1 >= m {
        return Err(Error::InvalidParameter(format!(
            "m1 must satisfy 1 <= m1 < {m}, got {m1}"
        )));
    }
    if u < T::zero() {
        return Err(Error::InvalidParameter("u must be nonnegative".into()));
    }
    let m2 = T::from_usize_(m - m1);
    let ld = ln_delta(m2);
    let h = |w: T| {
        if w <= T::zero() && m2 > T::one() {
            return T::zero();
        }
        let lw = if m2 == T::one() { T::zero() } else { (m2 - T::one()) * w.ln() };
        (T::c(2.0).ln() + lw + kernel.ln_g_real(u + w * w) - ld).exp()
    };
    // bulk of g sits at t ≲ m/λ
    let w0 = (T::from_usize_(m) / kernel.scale()).sqrt();
    let cuts = [
        T::zero(),
        w0 * T::c(0.25),
        w0 * T::c(0.75),
        w0 * T::c(1.5),
        w0 * T::c(3.0),
    ];
    let mut total = T::zero();
    let mut err = T::zero();
    let mut ok = true;
    for w in cuts.windows(2) {
        let r = integrate(h, w[0], w[1], opts);
        total += r.value;
        err += r.error;
        ok &= r.converged;
    }
    let tail = integrate_to_inf(h, cuts[4], opts);
    total += tail.value;
    err += tail.error;
    ok &= tail.converged;
    if !ok || !total.is_finite_() {
        return Err(Error::Quadrature {
            value: total.f64(),
            error: err.f64(),
        });
    }
    Ok(total)
}

/// Marginal kernel in dimension m₁. Only compound-Gaussian kernels keep their
/// generator under marginalization.
pub fn marginal_kernel<T: Scalar>(kernel: &FamilyKernel<T>, m1: usize) -> Result<FamilyKernel<T>> {
    if !kernel.is_compound_gaussian() {
        return Err(Error::NotCompoundGaussian(kernel.family().to_string()));
    }
    kernel.with_dim(m1)
}

/// (μ₂|₁, Σ₂|₁) = (μ₂ + Σ₂₁Σ₁₁⁻¹(x₁ − μ₁), Σ₂₂ − Σ₂₁Σ₁₁⁻¹Σ₁₂).
pub fn conditional_params<T: Scalar>(
    spec: &DistributionSpec<T>,
    split: usize,
    x1: &DVector<T>,
) -> Result<(DVector<T>, SymMatrix<T>)> {
    let s = real_spec(spec)?;
    let blocks = schur_conditional(&s.sigma, split)?;
    if x1.len() != split {
        return Err(Error::DimensionMismatch { expected: split, got: x1.len() });
    }
    let mu1 = s.mu.rows(0, split);
    let mu2 = s.mu.rows(split, s.dim() - split);
    let mu = mu2 + &blocks.gain * (x1 - mu1);
    Ok((mu, blocks.s2_given_1))
}

/// cov(x₂ | x₁) = E[τ | x₁] Σ₂|₁ for compound-Gaussian kernels. Other kernels
/// are unsupported.
pub fn conditional_covariance<T: Scalar>(
    spec: &DistributionSpec<T>,
    split: usize,
    x1: &DVector<T>,
) -> Result<SymMatrix<T>> {
    let s = real_spec(spec)?;
    let texture = s.kernel.texture_law().ok_or_else(|| {
        Error::Unsupported(format!(
            "conditional covariance for {} (no texture representation)",
            s.kernel.family()
        ))
    })?;
    let (_, cond) = conditional_params(spec, split, x1)?;
    let blocks = schur_conditional(&s.sigma, split)?;
    let q1 = MahalanobisForm::new(&blocks.s11)?.eval(x1, &s.mu.rows(0, split).into_owned())?;
    let h = T::from_usize_(split) * T::c(0.5);
    let base = |tau: T| -h * tau.ln() - q1 / (T::c(2.0) * tau);
    let opts = mixture_opts();
    let num = ln_texture_expect(&texture, |tau| tau.ln() + base(tau), opts)?;
    let den = ln_texture_expect(&texture, base, opts)?;
    Ok(cond.scaled((num - den).exp()))
}

fn mixture_opts() -> QuadOptions {
    QuadOptions {
        rel_tol: 1e-10,
        abs_tol: 0.0,
        max_subdivisions: 400,
    }
}

/// ln ∫ exp(ln_f(τ)) dF_τ. Continuous textures are integrated over v = ln τ
/// around the maximum of the log-integrand, so large exponents do not
/// underflow.
pub fn ln_texture_expect<T: Scalar, F: Fn(T) -> T>(
    texture: &TextureLaw<T>,
    ln_f: F,
    opts: QuadOptions,
) -> Result<T> {
    let lse = |a: T, b: T| {
        let top = a.max(b);
        if top == -T::infinity() {
            return top;
        }
        top + ((a - top).exp() + (b - top).exp()).ln()
    };
    match texture.kind {
        TextureKind::Degenerate => Ok(ln_f(texture.factor)),
        TextureKind::TwoPoint { eps, a2 } => Ok(lse(
            eps.ln() + ln_f(a2 * texture.factor),
            (T::one() - eps).ln() + ln_f(texture.factor),
        )),
        TextureKind::Gamma { .. } | TextureKind::InverseGamma { .. } => {
            let h = |v: T| {
                let tau = v.exp();
                let lp = texture.ln_pdf(tau).unwrap_or(-T::infinity());
                let val = ln_f(tau) + lp + v;
                if val.partial_cmp(&val).is_none() {
                    -T::infinity()
                } else {
                    val
                }
            };
            let step = T::c(0.25);
            let mut best_v = T::zero();
            let mut best = -T::infinity();
            let mut v = T::c(-120.0);
            while v <= T::c(120.0) {
                let val = h(v);
                if val > best {
                    best = val;
                    best_v = v;
                }
                v += step;
            }
            if best == -T::infinity() {
                return Ok(best);
            }
            // extend until the integrand drops by e^-60 on each side
            let drop = T::c(60.0);
            let mut lo = best_v;
            while h(lo) > best - drop && lo > T::c(-400.0) {
                lo -= T::c(0.5);
            }
            let mut hi = best_v;
            while h(hi) > best - drop && hi < T::c(400.0) {
                hi += T::c(0.5);
            }
            let g = |v: T| (h(v) - best).exp();
            let a = integrate(g, lo, best_v, opts);
            let b = integrate(g, best_v, hi, opts);
            let total = a.value + b.value;
            if !(a.converged && b.converged) || !(total > T::zero()) {
                return Err(Error::Quadrature {
                    value: total.f64(),
                    error: (a.error + b.error).f64(),
                });
            }
            Ok(best + total.ln())
        }
    }
}

/// p(x) = (2π)^{−m/2} |Σ|^{−1/2} ∫ τ^{−m/2} exp(−Q/2τ) dF_τ.
pub fn pdf_cg_mixture<T: Scalar>(
    spec: &DistributionSpec<T>,
    x: &DVector<T>,
    opts: QuadOptions,
) -> Result<LogDensityValue<T>> {
    let s = real_spec(spec)?;
    let texture = s
        .kernel
        .texture_law()
        .ok_or_else(|| Error::NotCompoundGaussian(s.kernel.family().to_string()))?;
    let form = MahalanobisForm::new(&s.sigma)?;
    let q = form.eval(x, &s.mu)?;
    let h = T::from_usize_(s.dim()) * T::c(0.5);
    let mix = ln_texture_expect(&texture, |tau| -h * tau.ln() - q / (T::c(2.0) * tau), opts)?;
    let ln = -h * T::two_pi().ln() - form.log_det() * T::c(0.5) + mix;
    Ok(LogDensityValue::from_log(ln))
}

/// pdf_cg_mixture with the default tolerances.
pub fn pdf_cg_mixture_default<T: Scalar>(
    spec: &DistributionSpec<T>,
    x: &DVector<T>,
) -> Result<LogDensityValue<T>> {
    pdf_cg_mixture(spec, x, mixture_opts())
}

/// Log-densities of every row of `data` (complex specs take (Re, Im) pairs).
pub fn log_pdf_rows<T: Scalar>(spec: &DistributionSpec<T>, data: &DMatrix<T>) -> Result<Vec<T>> {
    data.row_iter()
        .map(|row| log_pdf(spec, &row.transpose()).map(|v| v.log_pdf))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::families::{Family, GgScale, Realness};
    use crate::spec::{real_composite_scatter, CMatrix};
    use statrs::distribution::{Continuous, StudentsT};

    fn real(family: Family<f64>, sigma: SymMatrix<f64>) -> DistributionSpec<f64> {
        let k = FamilyKernel::real(family, sigma.dim()).unwrap();
        RealSpec::centered(k, sigma).unwrap().into()
    }

    #[test]
    fn gaussian_at_center() {
        let spec = real(Family::Gaussian, SymMatrix::identity(1));
        let v = pdf_res(&spec, &DVector::from_element(1, 0.0)).unwrap();
        assert!((v.pdf - (2.0 * std::f64::consts::PI).powf(-0.5)).abs() < 1e-15);
    }

    #[test]
    fn student_at_center_matches_closed_form() {
        let nu = 3.0_f64;
        let sigma = SymMatrix::from_row_slice(2, &[2.0, 0.5, 0.5, 1.0]).unwrap();
        let k = FamilyKernel::raw(Family::StudentT { nu }, 2, Realness::Real).unwrap();
        let spec: DistributionSpec<f64> = RealSpec::centered(k, sigma.clone()).unwrap().into();
        let v = pdf_res(&spec, &DVector::zeros(2)).unwrap();
        let det: f64 = sigma.matrix().determinant();
        let expect = (ln_gamma((nu + 2.0) / 2.0) - ln_gamma(nu / 2.0)).exp()
            / (nu * std::f64::consts::PI * det.sqrt());
        assert!((v.pdf / expect - 1.0).abs() < 1e-13);
    }

    #[test]
    fn scale_ambiguity() {
        let sigma = SymMatrix::from_row_slice(2, &[1.5, 0.3, 0.3, 0.7]).unwrap();
        let k = FamilyKernel::real(Family::StudentT { nu: 4.0 }, 2).unwrap();
        let a: DistributionSpec<f64> = RealSpec::centered(k, sigma.clone()).unwrap().into();
        let b: DistributionSpec<f64> =
            RealSpec::centered(k.rescaled(4.0), sigma.scaled(4.0)).unwrap().into();
        for i in 0..50 {
            let x = DVector::from_vec(vec![(i as f64 * 0.37).sin() * 3.0, (i as f64 * 0.71).cos()]);
            let pa = pdf_res(&a, &x).unwrap().log_pdf;
            let pb = pdf_res(&b, &x).unwrap().log_pdf;
            assert!((pa - pb).abs() < 1e-12 * pa.abs().max(1.0));
        }
    }

    #[test]
    fn huge_quadratic_form_stays_finite() {
        for family in [
            Family::Gaussian,
            Family::StudentT { nu: 3.0 },
            Family::KDist { nu: 1.5 },
            Family::EpsContaminated { eps: 0.1, a2: 9.0 },
            Family::GeneralizedGaussian { s: 0.5, b: GgScale::Cov },
        ] {
            let spec = real(family, SymMatrix::identity(2));
            let x = DVector::from_vec(vec![1e6, 0.0]);
            let v = pdf_res(&spec, &x).unwrap();
            assert!(v.log_pdf.is_finite(), "{family}");
        }
    }

    #[test]
    fn complex_circular_gaussian_at_center() {
        let k = FamilyKernel::<f64>::new(Family::Gaussian, 1, Realness::ComplexCircular).unwrap();
        let spec: DistributionSpec<f64> =
            ComplexSpec::new(k, CVector::zeros(1), CMatrix::identity(1, 1), None)
                .unwrap()
                .into();
        let v = pdf_complex(&spec, &CVector::zeros(1)).unwrap();
        assert!((v.pdf - 1.0 / std::f64::consts::PI).abs() < 1e-15);
    }

    #[test]
    fn noncircular_matches_real_composite() {
        let k = FamilyKernel::<f64>::new(Family::StudentT { nu: 5.0 }, 2, Realness::ComplexNoncircular)
            .unwrap();
        let sigma = CMatrix::from_row_slice(
            2,
            2,
            &[
                Complex::new(2.0, 0.0),
                Complex::new(0.3, 0.4),
                Complex::new(0.3, -0.4),
                Complex::new(1.0, 0.0),
            ],
        );
        let omega = CMatrix::from_row_slice(
            2,
            2,
            &[
                Complex::new(0.5, 0.2),
                Complex::new(0.1, -0.1),
                Complex::new(0.1, -0.1),
                Complex::new(0.2, 0.3),
            ],
        );
        let mu = CVector::from_vec(vec![Complex::new(0.1, -0.2), Complex::new(1.0, 0.5)]);
        let cs = ComplexSpec::new(k, mu, sigma.clone(), Some(omega.clone())).unwrap();
        let rs: DistributionSpec<f64> = cs.real_composite().unwrap().into();
        let spec: DistributionSpec<f64> = cs.into();
        for i in 0..20 {
            let t = i as f64;
            let x = CVector::from_vec(vec![
                Complex::new((t * 0.3).sin(), (t * 0.7).cos()),
                Complex::new((t * 1.1).cos() * 2.0, (t * 0.2).sin()),
            ]);
            let pc = pdf_complex(&spec, &x).unwrap().log_pdf;
            let z = crate::spec::composite_from_complex(&x);
            let pr = pdf_res(&rs, &z).unwrap().log_pdf;
            assert!((pc - pr).abs() < 1e-12 * pc.abs().max(1.0), "{pc} {pr}");
        }
        let bar = real_composite_scatter(&sigma, Some(&omega));
        assert!((bar.clone() - bar.transpose()).norm() < 1e-15);
    }

    #[test]
    fn q_and_r_densities() {
        let k2 = FamilyKernel::<f64>::real(Family::Gaussian, 2).unwrap();
        for q in [0.1, 1.0, 3.0] {
            assert!((pdf_q(&k2, q) - 0.5 * (-q / 2.0).exp()).abs() < 1e-14);
        }
        let k1 = FamilyKernel::<f64>::real(Family::Gaussian, 1).unwrap();
        for r in [0.2, 1.0, 2.5] {
            let want = (2.0 / std::f64::consts::PI).sqrt() * (-r * r / 2.0).exp();
            assert!((pdf_r(&k1, r) / want - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn gaussian_marginal_generator() {
        let k = FamilyKernel::<f64>::real(Family::Gaussian, 4).unwrap();
        for u in [0.0, 0.5, 2.0, 7.0] {
            let g = marginal_generator(&k, 2, u).unwrap();
            let want = (-u / 2.0).exp() / (2.0 * std::f64::consts::PI);
            assert!((g / want - 1.0).abs() < 1e-8, "{u}: {g} {want}");
        }
    }

    #[test]
    fn student_marginal_is_univariate_t() {
        let k = FamilyKernel::<f64>::raw(Family::StudentT { nu: 3.0 }, 3, Realness::Real).unwrap();
        let t = StudentsT::new(0.0, 1.0, 3.0).unwrap();
        for u in [0.0, 0.3, 1.0, 4.0, 20.0] {
            let g = marginal_generator(&k, 1, u).unwrap();
            let want = t.pdf(u.sqrt());
            assert!((g / want - 1.0).abs() < 1e-6, "{u}: {g} {want}");
        }
    }

    #[test]
    fn gg_marginal_is_not_power_exponential() {
        let k = FamilyKernel::<f64>::raw(
            Family::GeneralizedGaussian { s: 2.0, b: GgScale::Value(1.0) },
            3,
            Realness::Real,
        )
        .unwrap();
        let pe = k.with_dim(1).unwrap();
        let differs = [0.0, 0.5, 1.0, 2.0]
            .iter()
            .any(|&u| (marginal_generator(&k, 1, u).unwrap() / pe.density_generator(u) - 1.0).abs() > 1e-3);
        assert!(differs);
    }

    #[test]
    fn conditional_by_hand() {
        let sigma = SymMatrix::from_row_slice(2, &[2.0, 1.0, 1.0, 2.0]).unwrap();
        let spec = real(Family::Gaussian, sigma);
        let (mu, s) = conditional_params(&spec, 1, &DVector::from_element(1, 2.0)).unwrap();
        assert!((mu[0] - 1.0).abs() < 1e-15);
        assert!((s.matrix()[(0, 0)] - 1.5).abs() < 1e-15);
    }

    #[test]
    fn student_conditional_covariance() {
        let nu = 5.0_f64;
        let sigma = SymMatrix::from_row_slice(3, &[2.0, 0.4, 0.2, 0.4, 1.0, 0.1, 0.2, 0.1, 1.5]).unwrap();
        let k = FamilyKernel::raw(Family::StudentT { nu }, 3, Realness::Real).unwrap();
        let spec: DistributionSpec<f64> = RealSpec::centered(k, sigma.clone()).unwrap().into();
        let x1 = DVector::from_element(1, 1.7);
        let cov = conditional_covariance(&spec, 1, &x1).unwrap();
        let (_, cond) = conditional_params(&spec, 1, &x1).unwrap();
        let q1 = 1.7 * 1.7 / 2.0;
        let factor = (nu + q1) / (nu + 1.0 - 2.0);
        assert!((cov.matrix() - cond.matrix() * factor).norm() < 1e-8);
        let gg = real(Family::GeneralizedGaussian { s: 0.5, b: GgScale::Cov }, sigma);
        assert!(matches!(conditional_covariance(&gg, 1, &x1), Err(Error::Unsupported(_))));
    }

    #[test]
    fn mixture_matches_closed_forms() {
        let sigma = SymMatrix::from_row_slice(2, &[1.0, 0.3, 0.3, 2.0]).unwrap();
        for family in [
            Family::Gaussian,
            Family::StudentT { nu: 4.0 },
            Family::KDist { nu: 0.7 },
            Family::EpsContaminated { eps: 0.05, a2: 16.0 },
        ] {
            let spec = real(family, sigma.clone());
            for i in 0..20 {
                let x = DVector::from_vec(vec![(i as f64 * 0.9).sin() * 4.0, (i as f64 * 0.4).cos()]);
                let a = pdf_res(&spec, &x).unwrap().log_pdf;
                let b = pdf_cg_mixture_default(&spec, &x).unwrap().log_pdf;
                assert!((a - b).abs() < 1e-6, "{family} {a} {b}");
            }
        }
        let spec = real(Family::StudentT { nu: 3.0 }, sigma);
        let x = DVector::from_vec(vec![1e6, 2e5]);
        let a = pdf_res(&spec, &x).unwrap().log_pdf;
        let b = pdf_cg_mixture_default(&spec, &x).unwrap().log_pdf;
        assert!((a - b).abs() < 1e-6 * a.abs());
    }
}
