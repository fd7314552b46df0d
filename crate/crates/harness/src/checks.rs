//! Registered checks. Each one turns a configuration into one or more
//! [`CheckReport`]s with a statistic, a pre-registered threshold and a verdict.

use std::time::Instant;

use ellipsym_core::asymptotic::{
    crb, m_asymptotics, ml_asymptotics, sb_coefficients, scm_asymptotics, slepian_bangs_fim,
    tyler_asymptotics, BuiltinKind, BuiltinModel,
};
use ellipsym_core::density::{conditional_params, marginal_generator, pdf_res};
use ellipsym_core::estimate::{fit, shape_normalize, tyler_residual, EstimatorConfig, Method, ShapeScale, Weight};
use ellipsym_core::families::{Family, FamilyKernel, GgScale, Realness, ScaleRule};
use ellipsym_core::matrix_kit::{vec, MahalanobisForm, SymMatrix};
use ellipsym_core::quadrature::{integrate, integrate_to_inf, QuadOptions};
use ellipsym_core::rng::stream_rng;
use ellipsym_core::sampler::sample;
use ellipsym_core::spec::{DistributionSpec, RealSpec};
use ellipsym_core::special::gamma;
use nalgebra::{DMatrix, DVector};
use num_complex::Complex;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ChiSquared, ContinuousCDF, FisherSnedecor, Gamma};

use crate::config::{kernel_from, EstimatorSpec, SpecConfig};
use crate::error::{HarnessError, Result};
use crate::ks::{ks_critical_value, ks_test};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Relation {
    /// Pass when statistic ≤ threshold.
    AtMost,
    /// Pass when statistic ≥ threshold.
    AtLeast,
}

impl Relation {
    pub fn symbol(self) -> &'static str {
        match self {
            Relation::AtMost => "<=",
            Relation::AtLeast => ">=",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckReport {
    pub name: String,
    pub statistic: f64,
    pub threshold: f64,
    pub relation: Relation,
    pub pass: bool,
    pub runtime_secs: f64,
    #[serde(default, skip_serializing_if = "String::is_empty")]
    pub detail: String,
}

impl CheckReport {
    pub fn at_most(name: impl Into<String>, statistic: f64, threshold: f64) -> Self {
        Self {
            name: name.into(),
            statistic,
            threshold,
            relation: Relation::AtMost,
            // NaN fails
            pass: statistic <= threshold,
            runtime_secs: 0.0,
            detail: String::new(),
        }
    }

    pub fn at_least(name: impl Into<String>, statistic: f64, threshold: f64) -> Self {
        Self {
            relation: Relation::AtLeast,
            pass: statistic >= threshold,
            ..Self::at_most(name, statistic, threshold)
        }
    }

    pub fn failed(name: impl Into<String>, err: impl std::fmt::Display) -> Self {
        Self {
            pass: false,
            statistic: f64::NAN,
            detail: err.to_string(),
            ..Self::at_most(name, f64::NAN, 0.0)
        }
    }

    pub fn with_detail(mut self, detail: impl Into<String>) -> Self {
        self.detail = detail.into();
        self
    }
}

/// Reference law for the KS test of Q.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum QReference {
    /// The kernel's own Q-law.
    Qlaw,
    /// Q ∼ χ²_m (Gaussian, raw scale).
    ChiSquare,
    /// Q/m ∼ F_{m,ν} (Student, raw scale).
    F,
    /// Qˢ ∼ Gam(m/2s, scale 2ˢb) (generalized Gaussian, raw scale).
    GammaPower,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Formula {
    Scm,
    Ml,
    M,
    Tyler,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "check", rename_all = "kebab-case")]
pub enum CheckKind {
    QLaw {
        reference: QReference,
        #[serde(default = "default_level")]
        level: f64,
    },
    Kurtosis {
        expected: f64,
        #[serde(default = "default_se")]
        se_mult: f64,
    },
    TylerFixedPoint {
        residual_tol: f64,
        max_iter: usize,
        rescale_tol: f64,
    },
    MlGaussianClosedForm {
        tol: f64,
    },
    AsymptoticCov {
        formula: Formula,
        tol: f64,
    },
    GaussianLocationCrb {
        tol: f64,
    },
    XiClosedForm {
        tol: f64,
    },
    XiBridge {
        tol: f64,
    },
    ScaleAmbiguity {
        tol: f64,
    },
    Sigma2Bound {
        tol: f64,
    },
    FourthMoment {
        kappa: f64,
        #[serde(default = "default_se")]
        se_mult: f64,
    },
    MarginalGenerator {
        m1: usize,
        tol: f64,
    },
    ConditionalRegression {
        split: usize,
        tol: f64,
    },
    NcPseudoCovariance {
        tol: f64,
    },
}

fn default_level() -> f64 {
    0.01
}

fn default_se() -> f64 {
    5.0
}

/// A check plus the overrides it may carry.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub spec: Option<SpecConfig>,
    /// Sample size; defaults to the first entry of the plan's n_grid.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n: Option<usize>,
    /// Index into the plan's estimators.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub estimator: Option<usize>,
    #[serde(flatten)]
    pub kind: CheckKind,
}

impl CheckConfig {
    pub fn new(kind: CheckKind) -> Self {
        Self {
            name: None,
            spec: None,
            n: None,
            estimator: None,
            kind,
        }
    }

    pub fn named(mut self, name: &str) -> Self {
        self.name = Some(name.to_string());
        self
    }

    pub fn spec(mut self, spec: SpecConfig) -> Self {
        self.spec = Some(spec);
        self
    }

    pub fn n(mut self, n: usize) -> Self {
        self.n = Some(n);
        self
    }

    pub fn estimator(mut self, idx: usize) -> Self {
        self.estimator = Some(idx);
        self
    }

    pub fn kind_name(&self) -> &'static str {
        match self.kind {
            CheckKind::QLaw { .. } => "q-law",
            CheckKind::Kurtosis { .. } => "kurtosis",
            CheckKind::TylerFixedPoint { .. } => "tyler-fixed-point",
            CheckKind::MlGaussianClosedForm { .. } => "ml-gaussian-closed-form",
            CheckKind::AsymptoticCov { .. } => "asymptotic-cov",
            CheckKind::GaussianLocationCrb { .. } => "gaussian-location-crb",
            CheckKind::XiClosedForm { .. } => "xi-closed-form",
            CheckKind::XiBridge { .. } => "xi-bridge",
            CheckKind::ScaleAmbiguity { .. } => "scale-ambiguity",
            CheckKind::Sigma2Bound { .. } => "sigma2-bound",
            CheckKind::FourthMoment { .. } => "fourth-moment",
            CheckKind::MarginalGenerator { .. } => "marginal-generator",
            CheckKind::ConditionalRegression { .. } => "conditional-regression",
            CheckKind::NcPseudoCovariance { .. } => "nc-pseudo-covariance",
        }
    }
}

/// Everything a check needs from the enclosing plan.
pub struct CheckContext<'a> {
    pub name: String,
    pub spec: Option<&'a SpecConfig>,
    pub n: Option<usize>,
    pub replicates: usize,
    pub estimator: Option<&'a EstimatorSpec>,
    pub seed: u64,
    /// High bits of every RNG stream used by this check.
    pub stream_base: u64,
}

impl CheckContext<'_> {
    fn spec(&self) -> Result<&SpecConfig> {
        self.spec
            .ok_or_else(|| HarnessError::Plan(format!("check `{}` needs a distribution", self.name)))
    }

    fn n(&self) -> Result<usize> {
        self.n
            .ok_or_else(|| HarnessError::Plan(format!("check `{}` needs a sample size", self.name)))
    }

    fn estimator(&self) -> Result<&EstimatorSpec> {
        self.estimator
            .ok_or_else(|| HarnessError::Plan(format!("check `{}` needs an estimator", self.name)))
    }

    fn stream(&self, k: u64) -> u64 {
        self.stream_base + k
    }

    fn real_sample(&self, spec: &DistributionSpec<f64>, n: usize, k: u64) -> Result<DMatrix<f64>> {
        let batch = sample(spec, n, self.seed, self.stream(k))?;
        batch
            .data
            .real()
            .cloned()
            .ok_or_else(|| HarnessError::Plan(format!("check `{}` needs a real law", self.name)))
    }
}

fn real_spec(spec: &DistributionSpec<f64>) -> Result<&RealSpec<f64>> {
    match spec {
        DistributionSpec::Real(s) => Ok(s),
        DistributionSpec::Complex(_) => Err(HarnessError::Plan("a real law is required".into())),
    }
}

/// Runs one check; errors become failed reports.
pub fn run_check(kind: &CheckKind, ctx: &CheckContext<'_>) -> Vec<CheckReport> {
    let start = Instant::now();
    let out = match kind {
        CheckKind::QLaw { reference, level } => q_law(ctx, *reference, *level),
        CheckKind::Kurtosis { expected, se_mult } => kurtosis(ctx, *expected, *se_mult),
        CheckKind::TylerFixedPoint {
            residual_tol,
            max_iter,
            rescale_tol,
        } => tyler_fixed_point(ctx, *residual_tol, *max_iter, *rescale_tol),
        CheckKind::MlGaussianClosedForm { tol } => ml_gaussian_closed_form(ctx, *tol),
        CheckKind::AsymptoticCov { formula, tol } => asymptotic_cov(ctx, *formula, *tol),
        CheckKind::GaussianLocationCrb { tol } => gaussian_location_crb(ctx, *tol),
        CheckKind::XiClosedForm { tol } => xi_closed_form(ctx, *tol),
        CheckKind::XiBridge { tol } => xi_bridge(ctx, *tol),
        CheckKind::ScaleAmbiguity { tol } => scale_ambiguity(ctx, *tol),
        CheckKind::Sigma2Bound { tol } => sigma2_bound(ctx, *tol),
        CheckKind::FourthMoment { kappa, se_mult } => fourth_moment(ctx, *kappa, *se_mult),
        CheckKind::MarginalGenerator { m1, tol } => marginal_generator_check(ctx, *m1, *tol),
        CheckKind::ConditionalRegression { split, tol } => conditional_regression(ctx, *split, *tol),
        CheckKind::NcPseudoCovariance { tol } => nc_pseudo_covariance(ctx, *tol),
    };
    let mut reports = match out {
        Ok(r) => r,
        Err(e) => vec![CheckReport::failed(ctx.name.clone(), e)],
    };
    let secs = start.elapsed().as_secs_f64();
    for r in &mut reports {
        r.runtime_secs = secs;
    }
    reports
}

fn quad_forms(x: &DMatrix<f64>, spec: &RealSpec<f64>) -> Result<Vec<f64>> {
    let form = MahalanobisForm::new(&spec.sigma)?;
    x.row_iter()
        .map(|r| Ok(form.eval(&r.transpose(), &spec.mu)?))
        .collect()
}

fn q_law(ctx: &CheckContext<'_>, reference: QReference, level: f64) -> Result<Vec<CheckReport>> {
    let spec = ctx.spec()?.build()?;
    let rs = real_spec(&spec)?;
    let k = rs.kernel;
    let m = k.dim() as f64;
    let raw = || -> Result<()> {
        if k.applied_rule() != ScaleRule::Raw {
            return Err(HarnessError::Plan(format!(
                "reference law `{reference:?}` needs `scale=raw` in the family"
            )));
        }
        Ok(())
    };
    let x = ctx.real_sample(&spec, ctx.n()?, 0)?;
    let q = quad_forms(&x, rs)?;
    let r = match (reference, k.family()) {
        (QReference::Qlaw, _) => {
            let law = k.q_law();
            ks_test(&q, |t| law.cdf(t))
        }
        (QReference::ChiSquare, Family::Gaussian) => {
            raw()?;
            let d = ChiSquared::new(m).map_err(|e| HarnessError::Plan(e.to_string()))?;
            ks_test(&q, |t| d.cdf(t))
        }
        (QReference::F, Family::StudentT { nu }) => {
            raw()?;
            let d = FisherSnedecor::new(m, nu).map_err(|e| HarnessError::Plan(e.to_string()))?;
            let qm: Vec<f64> = q.iter().map(|v| v / m).collect();
            ks_test(&qm, |t| d.cdf(t))
        }
        (QReference::GammaPower, Family::GeneralizedGaussian { s, .. }) => {
            raw()?;
            let b = k.gg_b().expect("generalized Gaussian");
            let d = Gamma::new(m / (2.0 * s), 1.0 / (2f64.powf(s) * b))
                .map_err(|e| HarnessError::Plan(e.to_string()))?;
            let qs: Vec<f64> = q.iter().map(|v| v.powf(s)).collect();
            ks_test(&qs, |t| d.cdf(t))
        }
        (r, f) => {
            return Err(HarnessError::Plan(format!("reference {r:?} does not apply to {f}")));
        }
    };
    let crit = ks_critical_value(r.n as f64, level);
    Ok(vec![CheckReport::at_most(ctx.name.clone(), r.statistic, crit)
        .with_detail(format!("p={:.4}", r.p_value))])
}

/// κ̂ = m₄/(3m₂²) − 1 of the first coordinate about the true center, with a
/// batch-means standard error.
fn kurtosis(ctx: &CheckContext<'_>, expected: f64, se_mult: f64) -> Result<Vec<CheckReport>> {
    let spec = ctx.spec()?.build()?;
    let rs = real_spec(&spec)?;
    let n = ctx.n()?;
    let batches = 100;
    let per = n / batches;
    if per < 100 {
        return Err(HarnessError::Plan("kurtosis needs n >= 10000".into()));
    }
    let x = ctx.real_sample(&spec, per * batches, 0)?;
    let mu = rs.mu[0];
    let col: Vec<f64> = x.column(0).iter().map(|v| v - mu).collect();
    let kappa = |xs: &[f64]| {
        let (m2, m4) = xs.iter().fold((0.0, 0.0), |(a, b), v| {
            let s = v * v;
            (a + s, b + s * s)
        });
        let len = xs.len() as f64;
        (m4 / len) / (3.0 * (m2 / len).powi(2)) - 1.0
    };
    let total = kappa(&col);
    let ks: Vec<f64> = col.chunks(per).map(kappa).collect();
    let mean = ks.iter().sum::<f64>() / batches as f64;
    let var = ks.iter().map(|k| (k - mean).powi(2)).sum::<f64>() / (batches as f64 - 1.0);
    let se = (var / batches as f64).sqrt();
    let z = (total - expected).abs() / se;
    Ok(vec![CheckReport::at_most(ctx.name.clone(), z, se_mult)
        .with_detail(format!("kappa_hat={total:.5} expected={expected:.5} se={se:.2e}"))])
}

fn tyler_fixed_point(
    ctx: &CheckContext<'_>,
    residual_tol: f64,
    max_iter: usize,
    rescale_tol: f64,
) -> Result<Vec<CheckReport>> {
    let spec = ctx.spec()?.build()?;
    let rs = real_spec(&spec)?;
    let m = rs.dim();
    let x = ctx.real_sample(&spec, ctx.n()?, 0)?;
    let cfg = EstimatorConfig::new(Method::Tyler)
        .known_mu(rs.mu.clone())
        .with_tol(1e-13)
        .with_max_iter(max_iter);
    let r = fit(&x, &cfg)?;
    let mut centered = x.clone();
    for mut row in centered.row_iter_mut() {
        row -= rs.mu.transpose();
    }
    let resid = tyler_residual(&centered, &r.sigma_hat)?;
    // Positive per-sample rescaling about the center.
    let mut rng = stream_rng(ctx.seed, ctx.stream(1));
    let mut scaled = centered.clone();
    for mut row in scaled.row_iter_mut() {
        let c: f64 = (rng.random::<f64>() * 4.0 - 2.0).exp();
        row *= c;
    }
    let cfg0 = EstimatorConfig::new(Method::Tyler)
        .centered(m)
        .with_tol(1e-13)
        .with_max_iter(max_iter);
    let r2 = fit(&scaled, &cfg0)?;
    let diff = (r.sigma_hat.matrix() - r2.sigma_hat.matrix()).norm();
    Ok(vec![
        CheckReport::at_most(format!("{}/residual", ctx.name), resid, residual_tol)
            .with_detail(format!("converged={}", r.converged)),
        CheckReport::at_most(format!("{}/iterations", ctx.name), r.iterations as f64, max_iter as f64),
        CheckReport::at_most(format!("{}/rescaling", ctx.name), diff, rescale_tol),
    ])
}

fn ml_gaussian_closed_form(ctx: &CheckContext<'_>, tol: f64) -> Result<Vec<CheckReport>> {
    let spec = ctx.spec()?.build()?;
    let rs = real_spec(&spec)?;
    let m = rs.dim();
    let x = ctx.real_sample(&spec, ctx.n()?, 0)?;
    let n = x.nrows() as f64;
    let gauss = FamilyKernel::real(Family::Gaussian, m)?;
    let r = fit(&x, &EstimatorConfig::new(Method::Ml(gauss)).with_tol(1e-14))?;
    let mean = DVector::from_fn(m, |j, _| x.column(j).sum() / n);
    let mut scm = DMatrix::zeros(m, m);
    for row in x.row_iter() {
        let d = row.transpose() - &mean;
        scm += &d * d.transpose();
    }
    scm /= n;
    let scale = scm.amax().max(1.0);
    let dmu = (&r.mu_hat - &mean).amax() / scale.sqrt();
    let dsig = (r.sigma_hat.matrix() - &scm).amax() / scale;
    Ok(vec![CheckReport::at_most(ctx.name.clone(), dmu.max(dsig), tol)
        .with_detail(format!("iterations={}", r.iterations))])
}

/// n·cov over replicates of vec(Σ̂), one fit per RNG stream. Fits run in
/// parallel; the reduction runs in replicate order.
pub fn empirical_cov_of_vec_estimates(
    spec: &DistributionSpec<f64>,
    cfg: &EstimatorConfig<f64>,
    n: usize,
    replicates: usize,
    seed: u64,
    stream_base: u64,
    post: impl Fn(SymMatrix<f64>) -> Result<SymMatrix<f64>> + Sync,
) -> Result<DMatrix<f64>> {
    if replicates < 200 {
        return Err(HarnessError::InsufficientReplicates {
            replicates,
            required: 200,
        });
    }
    let vecs: Vec<DVector<f64>> = (0..replicates as u64)
        .into_par_iter()
        .map(|r| -> Result<DVector<f64>> {
            let batch = sample(spec, n, seed, stream_base + r)?;
            let x = batch
                .data
                .real()
                .ok_or_else(|| HarnessError::Plan("a real law is required".into()))?;
            let est = fit(x, cfg)?;
            Ok(vec(post(est.sigma_hat)?.matrix()))
        })
        .collect::<Result<_>>()?;
    let p = vecs[0].len();
    let mut mean = DVector::zeros(p);
    for v in &vecs {
        mean += v;
    }
    mean /= replicates as f64;
    let mut cov = DMatrix::zeros(p, p);
    for v in &vecs {
        let d = v - &mean;
        cov += &d * d.transpose();
    }
    Ok(cov * (n as f64 / (replicates as f64 - 1.0)))
}

/// max |Ĉ − R| / max |R|.
pub fn max_rel_entry_error(emp: &DMatrix<f64>, formula: &DMatrix<f64>) -> f64 {
    (emp - formula).amax() / formula.amax()
}

fn asymptotic_cov(ctx: &CheckContext<'_>, formula: Formula, tol: f64) -> Result<Vec<CheckReport>> {
    let spec = ctx.spec()?.build()?;
    let rs = real_spec(&spec)?;
    let m = rs.dim();
    let cfg = ctx.estimator()?.build(m, Some(&rs.kernel))?;
    let k = rs.kernel;
    let (r, det_shape) = match formula {
        Formula::Scm => (scm_asymptotics(&k, &rs.sigma)?.dense(), false),
        Formula::Ml => (ml_asymptotics(&k, &rs.sigma)?.dense(), false),
        Formula::Tyler => (tyler_asymptotics(m, &rs.sigma)?.dense(), true),
        Formula::M => {
            let Method::Maronna { u1, u2 } = &cfg.method else {
                return Err(HarnessError::Plan("formula `m` needs a maronna estimator".into()));
            };
            (m_asymptotics(&k, u1, u2, &rs.sigma)?.0.dense(), false)
        }
    };
    let emp = empirical_cov_of_vec_estimates(
        &spec,
        &cfg,
        ctx.n()?,
        ctx.replicates,
        ctx.seed,
        ctx.stream_base,
        |s| {
            if det_shape {
                Ok(shape_normalize(&s, ShapeScale::Det1OverM)?)
            } else {
                Ok(s)
            }
        },
    )?;
    let err = max_rel_entry_error(&emp, &r);
    Ok(vec![CheckReport::at_most(ctx.name.clone(), err, tol)])
}

fn gaussian_location_crb(ctx: &CheckContext<'_>, tol: f64) -> Result<Vec<CheckReport>> {
    let spec = ctx.spec()?.build()?;
    let rs = real_spec(&spec)?;
    if rs.kernel.family() != Family::Gaussian {
        return Err(HarnessError::Plan("gaussian-location-crb needs a Gaussian law".into()));
    }
    let n = ctx.n()?;
    let model = BuiltinModel::real(BuiltinKind::LocationVector, rs.mu.clone(), &rs.sigma)?;
    let fim = slepian_bangs_fim(&model, &rs.kernel, &model.default_alpha())?;
    let bound = crb(&fim, n)?;
    let want = rs.sigma.matrix() / n as f64;
    let err = (&bound - &want).amax() / want.amax();
    let (a0, a1, a2) = sb_coefficients(&rs.kernel)?;
    let coef = (a0 - 1.0).abs().max((a1 - 0.5).abs()).max(a2.abs());
    Ok(vec![
        CheckReport::at_most(format!("{}/crb", ctx.name), err, tol),
        CheckReport::at_most(format!("{}/coefficients", ctx.name), coef, tol),
    ])
}

/// Closed forms of (ξ_{c,1,m}, ξ_{c,2,m}) for covariance-normalized complex
/// Student and generalized Gaussian laws.
pub fn complex_xi_closed_form(kernel: &FamilyKernel<f64>) -> Result<(f64, f64)> {
    if !kernel.realness().is_complex() || kernel.applied_rule() != ScaleRule::Cov {
        return Err(HarnessError::Plan(
            "closed forms are for complex kernels under the covariance rule".into(),
        ));
    }
    let m = kernel.dim() as f64;
    match kernel.family() {
        Family::StudentT { nu } => {
            let h = nu / 2.0;
            let xi2 = (h + m) / (h + m + 1.0);
            Ok((h / (h - 1.0) * xi2, xi2))
        }
        Family::GeneralizedGaussian { s, b: GgScale::Cov } => {
            let xi1 = gamma(2.0 + (m - 1.0) / s) * gamma((m + 1.0) / s) / gamma(1.0 + m / s).powi(2);
            Ok((xi1, (m + s) / (m + 1.0)))
        }
        f => Err(HarnessError::Plan(format!("no closed form for {f}"))),
    }
}

fn xi_closed_form(ctx: &CheckContext<'_>, tol: f64) -> Result<Vec<CheckReport>> {
    let k = ctx.spec()?.kernel()?;
    let (c1, c2) = complex_xi_closed_form(&k)?;
    let q = k.sb_xi_quadrature()?;
    let err = ((q.xi1 - c1) / c1).abs().max(((q.xi2 - c2) / c2).abs());
    Ok(vec![CheckReport::at_most(ctx.name.clone(), err, tol)
        .with_detail(format!("xi1={:.10} xi2={:.10}", q.xi1, q.xi2))])
}

/// (ξ₁, ξ₂) of a complex kernel integrated in complex units: Q_c has density
/// (π^m/Γ(m)) q^{m−1} g_c(q) and the score is φ_c = −g_c′/g_c.
pub fn complex_xi_direct(kernel: &FamilyKernel<f64>) -> Result<(f64, f64)> {
    let m = kernel.dim() as f64;
    let ln_c = m * std::f64::consts::PI.ln() - statrs::function::gamma::ln_gamma(m);
    // q = r², dq = 2r dr
    let moment = |p: f64| -> Result<f64> {
        let f = |r: f64| {
            if r <= 0.0 {
                return 0.0;
            }
            let q = r * r;
            let w = (ln_c + (m - 1.0) * q.ln() + kernel.ln_density_generator(q)).exp();
            if w == 0.0 {
                return 0.0;
            }
            let phi = kernel.score_phi(q);
            2.0 * r * w * q.powf(p) * phi * phi
        };
        let opts = QuadOptions {
            rel_tol: 1e-12,
            abs_tol: 0.0,
            max_subdivisions: 2000,
        };
        let split = m.sqrt();
        let a = integrate(f, 0.0, split, opts);
        let b = integrate_to_inf(f, split, opts);
        if !(a.converged && b.converged) {
            return Err(HarnessError::Plan("quadrature did not converge".into()));
        }
        Ok(a.value + b.value)
    };
    Ok((moment(1.0)? / m, moment(2.0)? / (m * (m + 1.0))))
}

fn xi_bridge(ctx: &CheckContext<'_>, tol: f64) -> Result<Vec<CheckReport>> {
    let sc = ctx.spec()?;
    let kc = sc.kernel()?;
    if !kc.realness().is_complex() {
        return Err(HarnessError::Plan("xi-bridge needs a complex law".into()));
    }
    let kr = kernel_from(&sc.family, 2 * sc.dim, Realness::Real)?;
    let (c1, c2) = complex_xi_direct(&kc)?;
    let r = kr.sb_xi_quadrature()?;
    let err = ((c1 - r.xi1) / r.xi1).abs().max(((c2 - r.xi2) / r.xi2).abs());
    Ok(vec![CheckReport::at_most(ctx.name.clone(), err, tol)
        .with_detail(format!("xi1={c1:.10} xi2={c2:.10}"))])
}

fn scale_ambiguity(ctx: &CheckContext<'_>, tol: f64) -> Result<Vec<CheckReport>> {
    let spec = ctx.spec()?.build()?;
    let rs = real_spec(&spec)?;
    let m = rs.dim();
    let mut rng = stream_rng(ctx.seed, ctx.stream(0));
    let mut worst: f64 = 0.0;
    for c in [0.5, 2.0] {
        let other: DistributionSpec<f64> =
            RealSpec::new(rs.kernel.rescaled(c * c), rs.mu.clone(), rs.sigma.scaled(c * c))?.into();
        for _ in 0..50 {
            let x = DVector::from_fn(m, |i, _| rs.mu[i] + rng.random::<f64>() * 8.0 - 4.0);
            let a = pdf_res(&spec, &x)?.log_pdf;
            let b = pdf_res(&other, &x)?.log_pdf;
            worst = worst.max((a - b).abs() / a.abs().max(1.0));
        }
    }
    Ok(vec![CheckReport::at_most(ctx.name.clone(), worst, tol)])
}

fn sigma2_bound(ctx: &CheckContext<'_>, tol: f64) -> Result<Vec<CheckReport>> {
    let spec = ctx.spec()?.build()?;
    let rs = real_spec(&spec)?;
    let m = rs.dim();
    let mf = m as f64;
    let k = rs.kernel;
    let mut gaps = vec![ml_asymptotics(&k, &rs.sigma)?];
    if let Ok(a) = scm_asymptotics(&k, &rs.sigma) {
        gaps.push(a);
    }
    let huber = Weight::huber(m, 0.9)?;
    gaps.push(m_asymptotics(&k, &Weight::HuberLocation { k: 2.0 }, &huber, &rs.sigma)?.0);
    let violation = gaps
        .iter()
        .map(|a| -(a.sigma2() + 2.0 * a.sigma1() / mf))
        .fold(f64::NEG_INFINITY, f64::max);
    let ty = tyler_asymptotics(m, &rs.sigma)?;
    let eq = (ty.sigma2() + 2.0 * ty.sigma1() / mf).abs();
    Ok(vec![
        CheckReport::at_most(format!("{}/bound", ctx.name), violation, tol),
        CheckReport::at_most(format!("{}/tyler-equality", ctx.name), eq, tol),
    ])
}

/// max over index tuples of |σ̂ᵢⱼₖₗ − (κ+1)(σᵢⱼσₖₗ+σᵢₖσⱼₗ+σᵢₗσⱼₖ)|/SE with
/// σ the covariance Σ of a covariance-normalized law.
fn fourth_moment(ctx: &CheckContext<'_>, kappa: f64, se_mult: f64) -> Result<Vec<CheckReport>> {
    let spec = ctx.spec()?.build()?;
    let rs = real_spec(&spec)?;
    if rs.kernel.applied_rule() != ScaleRule::Cov {
        return Err(HarnessError::Plan("fourth-moment needs a covariance-normalized law".into()));
    }
    let m = rs.dim();
    let s = rs.sigma.matrix();
    let mut x = ctx.real_sample(&spec, ctx.n()?, 0)?;
    for mut row in x.row_iter_mut() {
        row -= rs.mu.transpose();
    }
    let n = x.nrows() as f64;
    let mut worst: f64 = 0.0;
    for i in 0..m {
        for j in i..m {
            for k in j..m {
                for l in k..m {
                    let (mut sum, mut sq) = (0.0, 0.0);
                    for r in x.row_iter() {
                        let p = r[i] * r[j] * r[k] * r[l];
                        sum += p;
                        sq += p * p;
                    }
                    let mean = sum / n;
                    let se = ((sq / n - mean * mean) / n).sqrt();
                    let want = (kappa + 1.0)
                        * (s[(i, j)] * s[(k, l)] + s[(i, k)] * s[(j, l)] + s[(i, l)] * s[(j, k)]);
                    worst = worst.max((mean - want).abs() / se);
                }
            }
        }
    }
    Ok(vec![CheckReport::at_most(ctx.name.clone(), worst, se_mult)])
}

fn marginal_generator_check(ctx: &CheckContext<'_>, m1: usize, tol: f64) -> Result<Vec<CheckReport>> {
    let sc = ctx.spec()?;
    let k = sc.kernel()?;
    let low = kernel_from(&sc.family, m1, Realness::Real)?;
    let mut worst: f64 = 0.0;
    for e in -12..=12 {
        let u = 10f64.powf(e as f64 / 4.0);
        let a = marginal_generator(&k, m1, u)?;
        let b = low.density_generator(u);
        if b > 1e-250 {
            worst = worst.max(((a - b) / b).abs());
        }
    }
    Ok(vec![CheckReport::at_most(ctx.name.clone(), worst, tol)])
}

/// Least-squares regression of x₂ on (1, x₁) against the Schur gain and the
/// conditional scatter.
fn conditional_regression(ctx: &CheckContext<'_>, split: usize, tol: f64) -> Result<Vec<CheckReport>> {
    let spec = ctx.spec()?.build()?;
    let rs = real_spec(&spec)?;
    if rs.kernel.applied_rule() != ScaleRule::Cov {
        return Err(HarnessError::Plan("conditional-regression needs a covariance-normalized law".into()));
    }
    let m = rs.dim();
    let k2 = m - split;
    let x = ctx.real_sample(&spec, ctx.n()?, 0)?;
    let n = x.nrows();
    let mut design = DMatrix::zeros(n, split + 1);
    for i in 0..n {
        design[(i, 0)] = 1.0;
        for j in 0..split {
            design[(i, j + 1)] = x[(i, j)];
        }
    }
    let y = x.columns(split, k2).into_owned();
    let gram = design.transpose() * &design;
    let coef = gram
        .cholesky()
        .ok_or_else(|| HarnessError::Plan("singular regression design".into()))?
        .solve(&(design.transpose() * &y));
    let gain_hat = coef.rows(1, split).transpose();
    let resid = &y - &design * &coef;
    let resid_cov = resid.transpose() * &resid / (n as f64 - split as f64 - 1.0);

    let x0 = DVector::zeros(split);
    let (mu0, s21) = conditional_params(&spec, split, &x0)?;
    let mut gain = DMatrix::zeros(k2, split);
    for j in 0..split {
        let mut e = DVector::zeros(split);
        e[j] = 1.0;
        let (mu_j, _) = conditional_params(&spec, split, &e)?;
        gain.set_column(j, &(mu_j - &mu0));
    }
    let g_err = (&gain_hat - &gain).norm() / gain.norm();
    let s_err = (&resid_cov - s21.matrix()).norm() / s21.matrix().norm();
    Ok(vec![
        CheckReport::at_most(format!("{}/gain", ctx.name), g_err, tol),
        CheckReport::at_most(format!("{}/scatter", ctx.name), s_err, tol),
    ])
}

fn nc_pseudo_covariance(ctx: &CheckContext<'_>, tol: f64) -> Result<Vec<CheckReport>> {
    let spec = ctx.spec()?.build()?;
    let DistributionSpec::Complex(cs) = &spec else {
        return Err(HarnessError::Plan("nc-pseudo-covariance needs a complex law".into()));
    };
    let omega = cs
        .omega
        .clone()
        .ok_or_else(|| HarnessError::Plan("nc-pseudo-covariance needs omega".into()))?;
    let batch = sample(&spec, ctx.n()?, ctx.seed, ctx.stream(0))?;
    let z = batch.data.complex().expect("complex law");
    let n = z.nrows() as f64;
    let m = cs.dim();
    let mut pseudo = DMatrix::<Complex<f64>>::zeros(m, m);
    for row in z.row_iter() {
        let d = row.transpose() - &cs.mu;
        pseudo += &d * d.transpose();
    }
    pseudo /= Complex::new(n, 0.0);
    let scale = omega.iter().map(|v| v.norm()).fold(0.0, f64::max);
    let err = (pseudo - omega).iter().map(|v| v.norm()).fold(0.0, f64::max) / scale;
    Ok(vec![CheckReport::at_most(ctx.name.clone(), err, tol)])
}
