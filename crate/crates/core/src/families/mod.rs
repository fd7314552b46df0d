//! Distribution families: density generators, score functions, Q-laws,
//! textures, kurtosis and Slepian–Bangs coefficients.
//!
//! A kernel is always evaluated through its real representation of dimension
//! `M` (`m` for real laws, `2m` for complex ones). The complex generator is
//! g_c(t) = 2^m g_r(2t) and Q_c = Q_r / 2.

mod grammar;
mod qlaw;
mod texture;

use std::fmt;

use crate::quadrature::{integrate, integrate_to_inf, QuadOptions};
use crate::special::{bessel_k_scaled, gamma_p, ln_bessel_k, ln_gamma};
use crate::{Error, Result, Scalar};

pub use grammar::{parse_family, parse_scale_rule, FamilySpec};
pub use qlaw::{QLaw, QLawKind};
pub use texture::{TextureConvention, TextureKind, TextureLaw};

/// Scale parameter of the generalized Gaussian family.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum GgScale<T> {
    Value(T),
    /// b chosen so that cov(x) = Σ in the kernel's dimension.
    Cov,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Family<T> {
    Gaussian,
    StudentT { nu: T },
    GeneralizedGaussian { s: T, b: GgScale<T> },
    KDist { nu: T },
    EpsContaminated { eps: T, a2: T },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Realness {
    Real,
    ComplexCircular,
    ComplexNoncircular,
}

impl Realness {
    pub fn is_complex(self) -> bool {
        !matches!(self, Realness::Real)
    }
}

/// How the free scale of a generator is fixed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ScaleRule {
    /// E(Q) = m, falling back to the median rule without a finite mean.
    Cov,
    /// Median of the kernel's Q equal to one.
    Median,
    /// Parameters used as given.
    Raw,
}

impl fmt::Display for ScaleRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ScaleRule::Cov => "cov",
            ScaleRule::Median => "median",
            ScaleRule::Raw => "raw",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Kurtosis<T> {
    Finite(T),
    Infinite,
}

impl<T: Scalar> Kurtosis<T> {
    pub fn value(self) -> Option<T> {
        match self {
            Kurtosis::Finite(k) => Some(k),
            Kurtosis::Infinite => None,
        }
    }
}

/// Slepian–Bangs coefficients (ξ₁, ξ₂).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SbXi<T> {
    pub xi1: T,
    pub xi2: T,
}

/// A family bound to a dimension, a realness and a scale.
///
/// The stored generator is g(t) = λ^{M/2} g_raw(λt), which corresponds to the
/// raw family with scatter Σ/λ.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FamilyKernel<T> {
    family: Family<T>,
    dim: usize,
    realness: Realness,
    // resolved generalized Gaussian scale (unused for other families)
    gg_b: T,
    scale: T,
    rule: ScaleRule,
    applied: ScaleRule,
}

pub(crate) fn quad_opts() -> QuadOptions {
    QuadOptions {
        rel_tol: 1e-11,
        abs_tol: 1e-15,
        max_subdivisions: 400,
    }
}

fn gg_cov_b<T: Scalar>(s: T, big_m: T) -> T {
    let half_m = big_m * T::c(0.5);
    let ln_b = s * (half_m.ln() + ln_gamma(half_m / s) - ln_gamma((half_m + T::one()) / s));
    ln_b.exp()
}

impl<T: Scalar> FamilyKernel<T> {
    /// Kernel under the covariance scale rule.
    pub fn new(family: Family<T>, dim: usize, realness: Realness) -> Result<Self> {
        Self::with_rule(family, dim, realness, ScaleRule::Cov)
    }

    pub fn real(family: Family<T>, dim: usize) -> Result<Self> {
        Self::new(family, dim, Realness::Real)
    }

    pub fn raw(family: Family<T>, dim: usize, realness: Realness) -> Result<Self> {
        Self::with_rule(family, dim, realness, ScaleRule::Raw)
    }

    pub fn with_rule(
        family: Family<T>,
        dim: usize,
        realness: Realness,
        rule: ScaleRule,
    ) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidParameter("dimension must be >= 1".into()));
        }
        validate(&family)?;
        let big_m = if realness.is_complex() { 2 * dim } else { dim };
        let gg_b = match family {
            Family::GeneralizedGaussian { s, b } => match b {
                GgScale::Value(v) => v,
                GgScale::Cov => gg_cov_b(s, T::from_usize_(big_m)),
            },
            _ => T::one(),
        };
        let mut k = Self {
            family,
            dim,
            realness,
            gg_b,
            scale: T::one(),
            rule,
            applied: ScaleRule::Raw,
        };
        k.apply_rule()?;
        Ok(k)
    }

    fn apply_rule(&mut self) -> Result<()> {
        self.scale = T::one();
        self.applied = ScaleRule::Raw;
        match self.rule {
            ScaleRule::Raw => {}
            ScaleRule::Cov => {
                if let Some(mean) = self.raw_q_moment_r(T::one()) {
                    self.scale = mean / T::from_usize_(self.real_dim());
                    self.applied = ScaleRule::Cov;
                } else {
                    self.scale = self.q_law().median()?;
                    self.applied = ScaleRule::Median;
                }
            }
            ScaleRule::Median => {
                self.scale = self.q_law().median()?;
                self.applied = ScaleRule::Median;
            }
        }
        Ok(())
    }

    /// Re-derives the scale from the raw parameters under the covariance rule
    /// (median rule when E(Q) is infinite). Idempotent.
    pub fn scale_normalize(&self) -> Result<Self> {
        let mut k = *self;
        k.rule = ScaleRule::Cov;
        k.apply_rule()?;
        Ok(k)
    }

    /// The kernel of the same law with scatter multiplied by `c2`:
    /// (c²Σ, c^M g(c²·)).
    pub fn rescaled(&self, c2: T) -> Self {
        let mut k = *self;
        k.scale = self.scale * c2;
        k.rule = ScaleRule::Raw;
        k.applied = ScaleRule::Raw;
        k
    }

    /// Same family and scale in another dimension. For compound-Gaussian
    /// families this is the marginal kernel.
    pub fn with_dim(&self, dim: usize) -> Result<Self> {
        let mut k = Self::with_rule(self.family, dim, self.realness, ScaleRule::Raw)?;
        k.scale = self.scale;
        k.rule = self.rule;
        k.applied = self.applied;
        Ok(k)
    }

    /// Switches realness. Between the two complex variants the real
    /// representation is unchanged and the scale is kept; otherwise the scale
    /// rule is re-applied in the new dimension.
    pub fn with_realness(&self, realness: Realness) -> Result<Self> {
        if realness.is_complex() == self.realness.is_complex() {
            let mut k = *self;
            k.realness = realness;
            return Ok(k);
        }
        Self::with_rule(self.family, self.dim, realness, self.rule)
    }

    /// The real kernel of dimension M describing (Re x, Im x) of a complex
    /// kernel; returns `self` for real kernels.
    pub fn real_representation(&self) -> Self {
        let mut k = *self;
        k.dim = self.real_dim();
        k.realness = Realness::Real;
        k
    }

    pub fn family(&self) -> Family<T> {
        self.family
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn realness(&self) -> Realness {
        self.realness
    }

    /// Dimension M of the real representation.
    pub fn real_dim(&self) -> usize {
        if self.realness.is_complex() {
            2 * self.dim
        } else {
            self.dim
        }
    }

    /// λ in g(t) = λ^{M/2} g_raw(λt).
    pub fn scale(&self) -> T {
        self.scale
    }

    pub fn rule(&self) -> ScaleRule {
        self.rule
    }

    /// Rule actually in force (Cov falls back to Median).
    pub fn applied_rule(&self) -> ScaleRule {
        self.applied
    }

    /// Resolved generalized Gaussian b.
    pub fn gg_b(&self) -> Option<T> {
        match self.family {
            Family::GeneralizedGaussian { .. } => Some(self.gg_b),
            _ => None,
        }
    }

    pub fn is_compound_gaussian(&self) -> bool {
        !matches!(self.family, Family::GeneralizedGaussian { .. })
    }

    fn big_m(&self) -> T {
        T::from_usize_(self.real_dim())
    }

    // ---- real-representation primitives (dimension M, scale λ) ----

    fn ln_g_raw(&self, t: T) -> T {
        let big_m = self.big_m();
        let half_m = big_m * T::c(0.5);
        let ln2pi = T::two_pi().ln();
        match self.family {
            Family::Gaussian => -half_m * ln2pi - t * T::c(0.5),
            Family::StudentT { nu } => {
                ln_gamma((nu + big_m) * T::c(0.5))
                    - ln_gamma(nu * T::c(0.5))
                    - half_m * (nu * T::pi()).ln()
                    - (nu + big_m) * T::c(0.5) * (t / nu).ln_1p()
            }
            Family::GeneralizedGaussian { s, .. } => {
                let b = self.gg_b;
                s.ln() + ln_gamma(half_m) - half_m * ln2pi - half_m / s * b.ln()
                    - ln_gamma(half_m / s)
                    - t.powf(s) / (T::c(2.0).powf(s) * b)
            }
            Family::KDist { nu } => {
                let a = nu - half_m;
                let front = half_m * nu.ln()
                    - (nu - T::one()) * T::c(2.0).ln()
                    - half_m * T::pi().ln()
                    - ln_gamma(nu);
                if t <= T::zero() {
                    if a > T::zero() {
                        // x^a K_a(x) → 2^{a−1} Γ(a)
                        return front + (a - T::one()) * T::c(2.0).ln() + ln_gamma(a);
                    }
                    return T::infinity();
                }
                let x = (T::c(2.0) * nu * t).sqrt();
                front + a * x.ln() + ln_bessel_k(a, x)
            }
            Family::EpsContaminated { eps, a2 } => {
                let w1 = eps.ln() - half_m * a2.ln() - t / (T::c(2.0) * a2);
                let w2 = (T::one() - eps).ln() - t * T::c(0.5);
                -half_m * ln2pi + log_sum_exp(w1, w2)
            }
        }
    }

    fn phi_raw(&self, t: T) -> T {
        let big_m = self.big_m();
        match self.family {
            Family::Gaussian => T::one(),
            Family::StudentT { nu } => (nu + big_m) / (nu + t),
            Family::GeneralizedGaussian { s, .. } => {
                T::c(2.0) * s * t.powf(s - T::one()) / (T::c(2.0).powf(s) * self.gg_b)
            }
            Family::KDist { nu } => {
                let a = nu - big_m * T::c(0.5);
                let x = (T::c(2.0) * nu * t).sqrt();
                if x <= T::zero() {
                    return if a > T::one() {
                        // K_{a−1}(x)/(x K_a(x)) → 1/(2(a−1))
                        nu / (a - T::one())
                    } else {
                        T::infinity()
                    };
                }
                T::c(2.0) * nu * bessel_k_scaled(a - T::one(), x) / (x * bessel_k_scaled(a, x))
            }
            Family::EpsContaminated { eps, a2 } => {
                let half_m = big_m * T::c(0.5);
                let w1 = eps.ln() - half_m * a2.ln() - t / (T::c(2.0) * a2);
                let w2 = (T::one() - eps).ln() - t * T::c(0.5);
                let top = w1.max(w2);
                let e1 = (w1 - top).exp();
                let e2 = (w2 - top).exp();
                (e1 / a2 + e2) / (e1 + e2)
            }
        }
    }

    /// ln g_r(t) in the real representation.
    pub fn ln_g_real(&self, t: T) -> T {
        self.big_m() * T::c(0.5) * self.scale.ln() + self.ln_g_raw(self.scale * t)
    }

    /// φ_r(t) = −2 g_r′(t)/g_r(t) in the real representation.
    pub fn phi_real(&self, t: T) -> T {
        self.scale * self.phi_raw(self.scale * t)
    }

    /// ln g(t) for this kernel's realness: g_r for real kernels and
    /// g_c(t) = 2^m g_r(2t) for complex ones.
    pub fn ln_density_generator(&self, t: T) -> T {
        if self.realness.is_complex() {
            T::from_usize_(self.dim) * T::c(2.0).ln() + self.ln_g_real(T::c(2.0) * t)
        } else {
            self.ln_g_real(t)
        }
    }

    pub fn density_generator(&self, t: T) -> T {
        self.ln_density_generator(t).exp()
    }

    /// Score φ(t): −2g′/g for real kernels, −g_c′/g_c = φ_r(2t) for complex.
    pub fn score_phi(&self, t: T) -> T {
        if self.realness.is_complex() {
            self.phi_real(T::c(2.0) * t)
        } else {
            self.phi_real(t)
        }
    }

    /// E[Q_raw^p] of the unscaled real modular variate, None when infinite.
    pub(crate) fn raw_q_moment_r(&self, p: T) -> Option<T> {
        let big_m = self.big_m();
        let half_m = big_m * T::c(0.5);
        let two = T::c(2.0);
        // E[(χ²_M)^p]
        let chi = |p: T| two.powf(p) * gamma_ratio(half_m, p);
        match self.family {
            Family::Gaussian => Some(chi(p)),
            Family::StudentT { nu } => {
                if nu <= two * p {
                    return None;
                }
                let half_nu = nu * T::c(0.5);
                let inv = T::one() / (two.powf(p) * gamma_ratio(half_nu - p, p));
                Some(nu.powf(p) * chi(p) * inv)
            }
            Family::GeneralizedGaussian { s, .. } => {
                let k = half_m / s;
                let theta = two.powf(s) * self.gg_b;
                Some(theta.powf(p / s) * gamma_ratio(k, p / s))
            }
            Family::KDist { nu } => {
                let tau = gamma_ratio(nu, p) / nu.powf(p);
                Some(tau * chi(p))
            }
            Family::EpsContaminated { eps, a2 } => {
                Some(chi(p) * (eps * a2.powf(p) + T::one() - eps))
            }
        }
    }

    /// Law of this kernel's second-order modular variate (Q_c for complex
    /// kernels).
    pub fn q_law(&self) -> QLaw<T> {
        QLaw::new(*self)
    }

    /// κ = M/(M+2) · E[Q²]/E[Q]² − 1 of the real representation.
    pub fn kurtosis(&self) -> Kurtosis<T> {
        let (Some(m1), Some(m2)) = (self.raw_q_moment_r(T::one()), self.raw_q_moment_r(T::c(2.0)))
        else {
            return Kurtosis::Infinite;
        };
        let big_m = self.big_m();
        Kurtosis::Finite(big_m / (big_m + T::c(2.0)) * m2 / (m1 * m1) - T::one())
    }

    /// Texture law with unit mean under the covariance rule. Absent for the
    /// generalized Gaussian family, which has no scale-mixture representation
    /// with a positive texture for s > 1 and is not treated as one otherwise.
    pub fn texture_law(&self) -> Option<TextureLaw<T>> {
        TextureLaw::canonical(self)
    }

    /// Same texture expressed with half the mean (τ/2), the convention under
    /// which the K-distribution texture has E(τ) = 1/2.
    pub fn texture_law_half(&self) -> Option<TextureLaw<T>> {
        self.texture_law().map(|t| t.halved())
    }

    /// (ξ₁, ξ₂), from closed forms when available, otherwise by quadrature
    /// against the Q-law.
    pub fn sb_xi(&self) -> Result<SbXi<T>> {
        match self.sb_xi_closed_form() {
            Some(xi) => Ok(xi),
            None => self.sb_xi_quadrature(),
        }
    }

    /// Closed-form (ξ₁, ξ₂) for Gaussian, Student and generalized Gaussian.
    pub fn sb_xi_closed_form(&self) -> Option<SbXi<T>> {
        let big_m = self.big_m();
        let two = T::c(2.0);
        let (xi1_raw, xi2) = match self.family {
            Family::Gaussian => (T::one(), T::one()),
            Family::StudentT { nu } => {
                let r = (nu + big_m) / (nu + big_m + two);
                (r, r)
            }
            Family::GeneralizedGaussian { s, .. } => {
                let k = big_m / (two * s);
                let ln_xi1 = two * s.ln() + two.ln() - self.gg_b.ln() / s
                    + ln_gamma(k + two - T::one() / s)
                    - ln_gamma(k)
                    - big_m.ln();
                if k + two - T::one() / s <= T::zero() {
                    return None;
                }
                (ln_xi1.exp(), (big_m + two * s) / (big_m + two))
            }
            _ => return None,
        };
        Some(SbXi {
            xi1: self.scale * xi1_raw,
            xi2,
        })
    }

    /// (ξ₁, ξ₂) from E[Qφ²(Q)] and E[Q²φ²(Q)] by adaptive quadrature.
    pub fn sb_xi_quadrature(&self) -> Result<SbXi<T>> {
        let big_m = self.big_m();
        let e1 = self.expect_real(|q| {
            let p = self.phi_real(q);
            q * p * p
        })?;
        let e2 = self.expect_real(|q| {
            let p = self.phi_real(q);
            q * q * p * p
        })?;
        Ok(SbXi {
            xi1: e1 / big_m,
            xi2: e2 / (big_m * (big_m + T::c(2.0))),
        })
    }

    /// Density of the real modular variate R = √Q_r.
    pub(crate) fn ln_r_pdf_real(&self, r: T) -> T {
        let big_m = self.big_m();
        let half_m = big_m * T::c(0.5);
        let ln_delta = ln_gamma(half_m) - half_m * T::pi().ln();
        T::c(2.0).ln() - ln_delta + (big_m - T::one()) * r.ln() + self.ln_g_real(r * r)
    }

    /// E[f(Q_r)] by quadrature in r = √q, split around the bulk of the law.
    pub fn expect_real<F: Fn(T) -> T>(&self, f: F) -> Result<T> {
        let opts = quad_opts();
        let big_m = self.big_m();
        let r0 = big_m.sqrt();
        let h = |r: T| {
            if r <= T::zero() {
                return T::zero();
            }
            let w = self.ln_r_pdf_real(r).exp();
            if w == T::zero() {
                return T::zero();
            }
            f(r * r) * w
        };
        let cuts = [
            T::zero(),
            r0 * T::c(0.25),
            r0 * T::c(0.75),
            r0 * T::c(1.5),
            r0 * T::c(3.0),
        ];
        let mut total = T::zero();
        let mut err = T::zero();
        let mut ok = true;
        for w in cuts.windows(2) {
            let res = integrate(h, w[0], w[1], opts);
            total += res.value;
            err += res.error;
            ok &= res.converged;
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
}

/// Γ(x+p)/Γ(x), as an exact product for small integer p.
pub(crate) fn gamma_ratio<T: Scalar>(x: T, p: T) -> T {
    if p == p.round() && p >= T::zero() && p <= T::c(16.0) {
        let mut acc = T::one();
        let mut j = T::zero();
        while j < p {
            acc *= x + j;
            j += T::one();
        }
        acc
    } else {
        (ln_gamma(x + p) - ln_gamma(x)).exp()
    }
}

fn log_sum_exp<T: Scalar>(a: T, b: T) -> T {
    let top = a.max(b);
    top + ((a - top).exp() + (b - top).exp()).ln()
}

fn validate<T: Scalar>(family: &Family<T>) -> Result<()> {
    let bad = |msg: String| Err(Error::InvalidParameter(msg));
    match *family {
        Family::Gaussian => Ok(()),
        Family::StudentT { nu } | Family::KDist { nu } => {
            if nu > T::zero() && nu.is_finite_() {
                Ok(())
            } else {
                bad(format!("nu must be positive, got {}", nu.f64()))
            }
        }
        Family::GeneralizedGaussian { s, b } => {
            if !(s > T::zero() && s.is_finite_()) {
                return bad(format!("s must be positive, got {}", s.f64()));
            }
            if let GgScale::Value(b) = b {
                if !(b > T::zero() && b.is_finite_()) {
                    return bad(format!("b must be positive, got {}", b.f64()));
                }
            }
            Ok(())
        }
        Family::EpsContaminated { eps, a2 } => {
            if !(eps > T::zero() && eps < T::one()) {
                return bad(format!("eps must lie in (0, 1), got {}", eps.f64()));
            }
            if !(a2 > T::zero() && a2.is_finite_()) {
                return bad(format!("a2 must be positive, got {}", a2.f64()));
            }
            Ok(())
        }
    }
}

impl<T: Scalar> fmt::Display for Family<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Family::Gaussian => write!(f, "gaussian"),
            Family::StudentT { nu } => write!(f, "student(nu={})", nu.f64()),
            Family::GeneralizedGaussian { s, b } => match b {
                GgScale::Value(b) => write!(f, "gg(s={},b={})", s.f64(), b.f64()),
                GgScale::Cov => write!(f, "gg(s={},b=cov)", s.f64()),
            },
            Family::KDist { nu } => write!(f, "k(nu={})", nu.f64()),
            Family::EpsContaminated { eps, a2 } => {
                write!(f, "epscont(eps={},a2={})", eps.f64(), a2.f64())
            }
        }
    }
}

impl<T: Scalar> fmt::Display for FamilyKernel<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let realness = match self.realness {
            Realness::Real => "real",
            Realness::ComplexCircular => "complex-circular",
            Realness::ComplexNoncircular => "complex-noncircular",
        };
        write!(
            f,
            "{} m={} {} scale={} lambda={}",
            self.family,
            self.dim,
            realness,
            self.applied,
            self.scale.f64()
        )
    }
}

/// Numerical CDF helper shared by Q-laws: ∫₀^x of a density given in r = √q.
pub(crate) fn cdf_from_r_density<T: Scalar>(kernel: &FamilyKernel<T>, q: T) -> T {
    if q <= T::zero() {
        return T::zero();
    }
    let opts = quad_opts();
    let h = |r: T| {
        if r <= T::zero() {
            T::zero()
        } else {
            kernel.ln_r_pdf_real(r).exp()
        }
    };
    let rmax = q.sqrt();
    let v = integrate(h, T::zero(), rmax, opts).value;
    v.min(T::one()).max(T::zero())
}

/// Regularized lower incomplete gamma, re-exported for the Q-law module.
pub(crate) fn chi2_cdf<T: Scalar>(dof: T, x: T) -> T {
    gamma_p(dof * T::c(0.5), x * T::c(0.5))
}

#[cfg(test)]
mod tests;
