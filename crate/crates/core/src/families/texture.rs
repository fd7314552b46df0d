use rand::Rng;
use rand_distr::{Binomial, Distribution, Gamma};

use super::{quad_opts, Family, FamilyKernel};
use crate::quadrature::integrate;
use crate::special::{gamma_p, gamma_q, ln_gamma};
use crate::{Error, Result, Scalar};

/// Base texture variable τ₀ before the kernel scale is applied.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TextureKind<T> {
    /// τ₀ ≡ 1.
    Degenerate,
    /// 1/τ₀ ~ Gamma(shape, scale).
    InverseGamma { shape: T, scale: T },
    /// τ₀ ~ Gamma(shape, scale).
    Gamma { shape: T, scale: T },
    /// P(τ₀ = a2) = eps, P(τ₀ = 1) = 1 − eps.
    TwoPoint { eps: T, a2: T },
}

/// Which normalization a texture is expressed in.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TextureConvention {
    /// x = μ + √τ n with n ~ N(0, Σ); E(τ) = 1 under the covariance rule.
    UnitMean,
    /// τ/2 of the unit-mean convention.
    HalfMean,
}

/// Texture law τ = factor·τ₀ of a compound-Gaussian kernel.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TextureLaw<T> {
    pub kind: TextureKind<T>,
    pub factor: T,
    pub convention: TextureConvention,
}

impl<T: Scalar> TextureLaw<T> {
    pub(crate) fn canonical(kernel: &FamilyKernel<T>) -> Option<Self> {
        let half = T::c(0.5);
        let kind = match kernel.family() {
            Family::Gaussian => TextureKind::Degenerate,
            Family::StudentT { nu } => TextureKind::InverseGamma {
                shape: nu * half,
                scale: T::c(2.0) / nu,
            },
            Family::KDist { nu } => TextureKind::Gamma {
                shape: nu,
                scale: T::one() / nu,
            },
            Family::EpsContaminated { eps, a2 } => TextureKind::TwoPoint { eps, a2 },
            Family::GeneralizedGaussian { .. } => return None,
        };
        Some(Self {
            kind,
            factor: T::one() / kernel.scale(),
            convention: TextureConvention::UnitMean,
        })
    }

    pub(crate) fn halved(self) -> Self {
        Self {
            factor: self.factor * T::c(0.5),
            convention: TextureConvention::HalfMean,
            ..self
        }
    }

    /// E(τ₀^p), None when infinite.
    fn base_moment(&self, p: T) -> Option<T> {
        match self.kind {
            TextureKind::Degenerate => Some(T::one()),
            TextureKind::Gamma { shape, scale } => {
                Some((p * scale.ln() + ln_gamma(shape + p) - ln_gamma(shape)).exp())
            }
            TextureKind::InverseGamma { shape, scale } => {
                if shape <= p {
                    None
                } else {
                    Some((-p * scale.ln() + ln_gamma(shape - p) - ln_gamma(shape)).exp())
                }
            }
            TextureKind::TwoPoint { eps, a2 } => Some(eps * a2.powf(p) + T::one() - eps),
        }
    }

    pub fn mean(&self) -> Option<T> {
        self.base_moment(T::one()).map(|v| v * self.factor)
    }

    pub fn variance(&self) -> Option<T> {
        let m1 = self.base_moment(T::one())?;
        let m2 = self.base_moment(T::c(2.0))?;
        Some((m2 - m1 * m1) * self.factor * self.factor)
    }

    /// var(τ)/E(τ)², equal to the kurtosis parameter for compound-Gaussian laws.
    pub fn kurtosis(&self) -> Option<T> {
        let m = self.mean()?;
        Some(self.variance()? / (m * m))
    }

    pub fn cdf(&self, t: T) -> T {
        if t <= T::zero() {
            return T::zero();
        }
        let t0 = t / self.factor;
        match self.kind {
            TextureKind::Degenerate => {
                if t0 >= T::one() {
                    T::one()
                } else {
                    T::zero()
                }
            }
            TextureKind::Gamma { shape, scale } => gamma_p(shape, t0 / scale),
            TextureKind::InverseGamma { shape, scale } => gamma_q(shape, T::one() / (t0 * scale)),
            TextureKind::TwoPoint { eps, a2 } => {
                let mut c = T::zero();
                if t0 >= a2 {
                    c += eps;
                }
                if t0 >= T::one() {
                    c += T::one() - eps;
                }
                c
            }
        }
    }

    /// Density for continuous textures.
    pub fn pdf(&self, t: T) -> Option<T> {
        self.ln_pdf(t).map(|v| v.exp())
    }

    /// Log-density for continuous textures.
    pub fn ln_pdf(&self, t: T) -> Option<T> {
        if t <= T::zero() {
            return match self.kind {
                TextureKind::Gamma { .. } | TextureKind::InverseGamma { .. } => {
                    Some(-T::infinity())
                }
                _ => None,
            };
        }
        let t0 = t / self.factor;
        let ln = match self.kind {
            TextureKind::Gamma { shape, scale } => {
                (shape - T::one()) * t0.ln() - t0 / scale - shape * scale.ln() - ln_gamma(shape)
            }
            TextureKind::InverseGamma { shape, scale } => {
                let y = T::one() / t0;
                (shape + T::one()) * y.ln() - y / scale - shape * scale.ln() - ln_gamma(shape)
            }
            _ => return None,
        };
        Some(ln - self.factor.ln())
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> T {
        let t0 = match self.kind {
            TextureKind::Degenerate => 1.0,
            TextureKind::Gamma { shape, scale } => Gamma::new(shape.f64(), scale.f64())
                .expect("valid gamma")
                .sample(rng),
            TextureKind::InverseGamma { shape, scale } => {
                let g: f64 = Gamma::new(shape.f64(), scale.f64())
                    .expect("valid gamma")
                    .sample(rng);
                1.0 / g
            }
            TextureKind::TwoPoint { eps, a2 } => {
                if Binomial::new(1, eps.f64()).expect("valid p").sample(rng) == 1 {
                    a2.f64()
                } else {
                    1.0
                }
            }
        };
        T::c(t0) * self.factor
    }

    /// ∫ f(τ) dF_τ. Continuous laws are integrated in log-space of the
    /// underlying gamma variable.
    pub fn expect<F: Fn(T) -> T>(&self, f: F) -> Result<T> {
        match self.kind {
            TextureKind::Degenerate => Ok(f(self.factor)),
            TextureKind::TwoPoint { eps, a2 } => {
                Ok(eps * f(a2 * self.factor) + (T::one() - eps) * f(self.factor))
            }
            TextureKind::Gamma { shape, scale } => {
                self.gamma_expect(shape, scale, |g| f(g * self.factor))
            }
            TextureKind::InverseGamma { shape, scale } => {
                self.gamma_expect(shape, scale, |g| f(self.factor / g))
            }
        }
    }

    fn gamma_expect<F: Fn(T) -> T>(&self, shape: T, scale: T, f: F) -> Result<T> {
        // u = ln(g/scale); density of u is exp(shape·u − e^u)/Γ(shape)
        let lg = ln_gamma(shape);
        let h = |u: T| {
            let w = (shape * u - u.exp() - lg).exp();
            if w == T::zero() {
                T::zero()
            } else {
                f(scale * u.exp()) * w
            }
        };
        let lo = (T::c(-46.0) + ln_gamma(shape + T::one())) / shape;
        let hi = (shape + T::c(60.0) + T::c(12.0) * shape.sqrt()).ln();
        let mode = shape.ln().max(lo).min(hi);
        let opts = quad_opts();
        let a = integrate(h, lo, mode, opts);
        let b = integrate(h, mode, hi, opts);
        let v = a.value + b.value;
        if !(a.converged && b.converged) || !v.is_finite_() {
            return Err(Error::Quadrature {
                value: v.f64(),
                error: (a.error + b.error).f64(),
            });
        }
        Ok(v)
    }
}
