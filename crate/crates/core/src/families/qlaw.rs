use rand::Rng;
use rand_distr::{Binomial, ChiSquared, Distribution, FisherF, Gamma};

use super::{cdf_from_r_density, chi2_cdf, Family, FamilyKernel};
use crate::special::{beta_reg, gamma_p, ln_beta, ln_gamma};
use crate::{Error, Result, Scalar};

/// Closed-form description of λ·Q_r (the unscaled real modular variate).
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum QLawKind {
    /// χ² with `dof` degrees of freedom.
    ChiSquared { dof: f64 },
    /// Q/d1 ~ F(d1, d2).
    ScaledF { d1: f64, d2: f64 },
    /// Q^s ~ Gamma(shape, scale).
    PowerGamma { s: f64, shape: f64, scale: f64 },
    /// Q = τ·χ²_M with a gamma texture of unit mean.
    GammaMixture { dof: f64, nu: f64 },
    /// Two-component χ² mixture.
    TwoPointMixture { dof: f64, eps: f64, a2: f64 },
}

/// Law of the second-order modular variate of a kernel. For complex kernels
/// this is Q_c = Q_r/2.
#[derive(Debug, Clone, Copy)]
pub struct QLaw<T> {
    kernel: FamilyKernel<T>,
}

impl<T: Scalar> QLaw<T> {
    pub(crate) fn new(kernel: FamilyKernel<T>) -> Self {
        Self { kernel }
    }

    pub fn kernel(&self) -> &FamilyKernel<T> {
        &self.kernel
    }

    /// Q_c = factor·Q_r.
    fn factor(&self) -> T {
        if self.kernel.realness().is_complex() {
            T::c(0.5)
        } else {
            T::one()
        }
    }

    /// Description of the unscaled real variate λ·Q_r.
    pub fn kind(&self) -> QLawKind {
        let m = self.kernel.real_dim() as f64;
        match self.kernel.family() {
            Family::Gaussian => QLawKind::ChiSquared { dof: m },
            Family::StudentT { nu } => QLawKind::ScaledF { d1: m, d2: nu.f64() },
            Family::GeneralizedGaussian { s, .. } => {
                let s = s.f64();
                let b = self.kernel.gg_b().map(|b| b.f64()).unwrap_or(1.0);
                QLawKind::PowerGamma {
                    s,
                    shape: m / (2.0 * s),
                    scale: 2f64.powf(s) * b,
                }
            }
            Family::KDist { nu } => QLawKind::GammaMixture { dof: m, nu: nu.f64() },
            Family::EpsContaminated { eps, a2 } => QLawKind::TwoPointMixture {
                dof: m,
                eps: eps.f64(),
                a2: a2.f64(),
            },
        }
    }

    fn raw_ln_pdf(&self, x: T) -> T {
        let k = &self.kernel;
        let big_m = T::from_usize_(k.real_dim());
        let half_m = big_m * T::c(0.5);
        let two = T::c(2.0);
        if x <= T::zero() {
            return -T::infinity();
        }
        let chi_ln = |x: T| {
            (half_m - T::one()) * x.ln() - x * T::c(0.5) - half_m * two.ln() - ln_gamma(half_m)
        };
        match k.family() {
            Family::Gaussian => chi_ln(x),
            Family::StudentT { nu } => {
                // Q/M ~ F(M, ν)
                let d1 = big_m;
                let d2 = nu;
                let y = x / d1;
                let ln_f = T::c(0.5) * (d1 * (d1 * y).ln() + d2 * d2.ln()
                    - (d1 + d2) * (d1 * y + d2).ln())
                    - y.ln()
                    - ln_beta(d1 * T::c(0.5), d2 * T::c(0.5));
                ln_f - d1.ln()
            }
            Family::GeneralizedGaussian { s, .. } => {
                let shape = half_m / s;
                let theta = two.powf(s) * k.gg_b().unwrap_or(T::one());
                let y = x.powf(s);
                let ln_gam = (shape - T::one()) * y.ln() - y / theta - shape * theta.ln() - ln_gamma(shape);
                ln_gam + s.ln() + (s - T::one()) * x.ln()
            }
            Family::EpsContaminated { eps, a2 } => {
                let c1 = eps.ln() + chi_ln(x / a2) - a2.ln();
                let c2 = (T::one() - eps).ln() + chi_ln(x);
                let top = c1.max(c2);
                top + ((c1 - top).exp() + (c2 - top).exp()).ln()
            }
            Family::KDist { .. } => {
                let ln_delta = ln_gamma(half_m) - half_m * T::pi().ln();
                -ln_delta + (half_m - T::one()) * x.ln() + k.ln_g_raw(x)
            }
        }
    }

    fn raw_cdf(&self, x: T) -> T {
        let k = &self.kernel;
        let big_m = T::from_usize_(k.real_dim());
        if x <= T::zero() {
            return T::zero();
        }
        match k.family() {
            Family::Gaussian => chi2_cdf(big_m, x),
            Family::StudentT { nu } => {
                beta_reg(big_m * T::c(0.5), nu * T::c(0.5), x / (x + nu))
            }
            Family::GeneralizedGaussian { s, .. } => {
                let theta = T::c(2.0).powf(s) * k.gg_b().unwrap_or(T::one());
                gamma_p(big_m * T::c(0.5) / s, x.powf(s) / theta)
            }
            Family::EpsContaminated { eps, a2 } => {
                eps * chi2_cdf(big_m, x / a2) + (T::one() - eps) * chi2_cdf(big_m, x)
            }
            Family::KDist { .. } => {
                // the kernel's own r-density carries the scale; undo it
                cdf_from_r_density(k, x / k.scale())
            }
        }
    }

    /// Draws λ·Q_r in f64.
    fn raw_sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let k = &self.kernel;
        let m = k.real_dim() as f64;
        match k.family() {
            Family::Gaussian => ChiSquared::new(m).expect("dof > 0").sample(rng),
            Family::StudentT { nu } => {
                m * FisherF::new(m, nu.f64()).expect("valid F").sample(rng)
            }
            Family::GeneralizedGaussian { s, .. } => {
                let s = s.f64();
                let theta = 2f64.powf(s) * k.gg_b().map(|b| b.f64()).unwrap_or(1.0);
                let y: f64 = Gamma::new(m / (2.0 * s), theta).expect("valid gamma").sample(rng);
                y.powf(1.0 / s)
            }
            Family::KDist { nu } => {
                let nu = nu.f64();
                let tau: f64 = Gamma::new(nu, 1.0 / nu).expect("valid gamma").sample(rng);
                tau * ChiSquared::new(m).expect("dof > 0").sample(rng)
            }
            Family::EpsContaminated { eps, a2 } => {
                let hit = Binomial::new(1, eps.f64()).expect("valid p").sample(rng) == 1;
                let chi: f64 = ChiSquared::new(m).expect("dof > 0").sample(rng);
                if hit {
                    a2.f64() * chi
                } else {
                    chi
                }
            }
        }
    }

    /// Density of Q at q.
    pub fn ln_pdf(&self, q: T) -> T {
        let lam = self.kernel.scale();
        let f = self.factor();
        // Q = f·Q_r, Q_r = X/λ
        self.raw_ln_pdf(lam * q / f) + (lam / f).ln()
    }

    pub fn pdf(&self, q: T) -> T {
        self.ln_pdf(q).exp()
    }

    pub fn cdf(&self, q: T) -> T {
        self.raw_cdf(self.kernel.scale() * q / self.factor())
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> T {
        T::c(self.raw_sample(rng)) * self.factor() / self.kernel.scale()
    }

    /// E[Q^p], None when infinite.
    pub fn moment(&self, p: T) -> Option<T> {
        let raw = self.kernel.raw_q_moment_r(p)?;
        Some(raw * (self.factor() / self.kernel.scale()).powf(p))
    }

    pub fn mean(&self) -> Option<T> {
        self.moment(T::one())
    }

    pub fn second_moment(&self) -> Option<T> {
        self.moment(T::c(2.0))
    }

    /// Median found by bisection on the cdf (relative tolerance 1e-10).
    pub fn median(&self) -> Result<T> {
        self.quantile(T::c(0.5))
    }

    pub fn quantile(&self, p: T) -> Result<T> {
        if !(p > T::zero() && p < T::one()) {
            return Err(Error::InvalidParameter(format!(
                "quantile level must lie in (0, 1), got {}",
                p.f64()
            )));
        }
        let mut hi = T::one();
        let mut grow = 0;
        while self.cdf(hi) < p {
            hi *= T::c(2.0);
            grow += 1;
            if grow > 2000 {
                return Err(Error::RootNotBracketed("quantile upper bracket".into()));
            }
        }
        let mut lo = hi * T::c(0.5);
        grow = 0;
        while self.cdf(lo) > p {
            lo *= T::c(0.5);
            grow += 1;
            if grow > 2000 {
                return Err(Error::RootNotBracketed("quantile lower bracket".into()));
            }
        }
        let tol = T::c(1e-10).max(T::machine_eps() * T::c(4.0));
        for _ in 0..300 {
            let mid = T::c(0.5) * (lo + hi);
            if self.cdf(mid) < p {
                lo = mid;
            } else {
                hi = mid;
            }
            if hi - lo <= tol * hi {
                break;
            }
        }
        Ok(T::c(0.5) * (lo + hi))
    }

    /// E[f(Q)] by quadrature against the density.
    pub fn expect<F: Fn(T) -> T>(&self, f: F) -> Result<T> {
        let fac = self.factor();
        self.kernel.expect_real(|qr| f(fac * qr))
    }
}
