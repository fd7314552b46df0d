//! Location/scatter estimators: sample moments, ML fixed point, Maronna
//! M-estimators and Tyler's estimator.

use nalgebra::{DMatrix, DVector};

use crate::families::FamilyKernel;
use crate::matrix_kit::SymMatrix;
use crate::special::gamma_p;
use crate::{Error, Result, Scalar};

/// Scale functional s(Σ) used to turn a scatter matrix into a shape matrix.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ShapeScale {
    None,
    /// s(Σ) = tr(Σ)/m.
    TraceM,
    /// s(Σ) = [Σ]₁₁.
    TopLeft,
    /// s(Σ) = |Σ|^{1/m}.
    Det1OverM,
}

impl ShapeScale {
    pub fn value<T: Scalar>(self, s: &SymMatrix<T>) -> T {
        let m = T::from_usize_(s.dim());
        match self {
            ShapeScale::None => T::one(),
            ShapeScale::TraceM => s.trace() / m,
            ShapeScale::TopLeft => s.matrix()[(0, 0)],
            ShapeScale::Det1OverM => match s.log_det() {
                Ok(ld) => (ld / m).exp(),
                Err(_) => T::zero(),
            },
        }
    }
}

impl std::fmt::Display for ShapeScale {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            ShapeScale::None => "none",
            ShapeScale::TraceM => "trace",
            ShapeScale::TopLeft => "topleft",
            ShapeScale::Det1OverM => "det",
        })
    }
}

impl std::str::FromStr for ShapeScale {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "none" => Ok(ShapeScale::None),
            "trace" | "trace_m" => Ok(ShapeScale::TraceM),
            "topleft" | "top_left" => Ok(ShapeScale::TopLeft),
            "det" | "det_1overm" => Ok(ShapeScale::Det1OverM),
            other => Err(Error::Parse(format!("unknown shape scale `{other}`"))),
        }
    }
}

/// V = S / s(S).
pub fn shape_normalize<T: Scalar>(s: &SymMatrix<T>, scale: ShapeScale) -> Result<SymMatrix<T>> {
    if scale == ShapeScale::None {
        return Ok(s.clone());
    }
    s.check_pd()?;
    let v = scale.value(s);
    if !(v > T::zero()) {
        return Err(Error::InvalidParameter(format!(
            "scale functional {scale} is not positive"
        )));
    }
    Ok(s.scaled(T::one() / v))
}

/// Weight functions for M-estimation. Location weights take the distance
/// d = √Q, scatter weights take Q.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Weight<T> {
    Constant(T),
    /// u(t) = min(1, k2/t)/b.
    Huber { k2: T, b: T },
    /// u(d) = min(1, k/d).
    HuberLocation { k: T },
    /// u(t) = φ(t).
    Ml(FamilyKernel<T>),
    /// u(d) = φ(d²).
    MlLocation(FamilyKernel<T>),
    /// u(t) = m/t.
    Tyler { m: T },
}

impl<T: Scalar> Weight<T> {
    /// Huber scatter weight with k² the `q`-quantile of χ²_m and b making
    /// E[ψ(Q)] = m under the Gaussian law.
    pub fn huber(m: usize, q: T) -> Result<Self> {
        if !(q > T::zero() && q < T::one()) {
            return Err(Error::InvalidParameter("q must lie in (0, 1)".into()));
        }
        let mm = T::from_usize_(m);
        let half = T::c(0.5);
        let cdf = |dof: T, x: T| gamma_p(dof * half, x * half);
        // quantile by bisection on the chi-square cdf
        let (mut lo, mut hi) = (T::zero(), mm * T::c(4.0) + T::c(50.0));
        for _ in 0..200 {
            let mid = (lo + hi) * half;
            if cdf(mm, mid) < q {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let k2 = (lo + hi) * half;
        let b = cdf(mm + T::c(2.0), k2) + k2 / mm * (T::one() - cdf(mm, k2));
        Ok(Weight::Huber { k2, b })
    }

    pub fn u(&self, t: T) -> T {
        match *self {
            Weight::Constant(c) => c,
            Weight::Huber { k2, b } => {
                if t <= k2 {
                    T::one() / b
                } else {
                    k2 / (t * b)
                }
            }
            Weight::HuberLocation { k } => {
                if t <= k {
                    T::one()
                } else {
                    k / t
                }
            }
            Weight::Ml(kernel) => kernel.score_phi(t),
            Weight::MlLocation(kernel) => kernel.score_phi(t * t),
            Weight::Tyler { m } => m / t,
        }
    }

    /// ψ(t) = t u(t).
    pub fn psi(&self, t: T) -> T {
        match *self {
            Weight::Tyler { m } => m,
            _ => t * self.u(t),
        }
    }

    /// ψ′(t); analytic for the piecewise forms, central differences otherwise.
    pub fn psi_prime(&self, t: T) -> T {
        match *self {
            Weight::Constant(c) => c,
            Weight::Huber { k2, b } => {
                if t <= k2 {
                    T::one() / b
                } else {
                    T::zero()
                }
            }
            Weight::HuberLocation { k } => {
                if t <= k {
                    T::one()
                } else {
                    T::zero()
                }
            }
            Weight::Tyler { .. } => T::zero(),
            Weight::Ml(_) | Weight::MlLocation(_) => {
                let h = T::machine_eps().powf(T::c(1.0 / 3.0)) * t.abs().max(T::one());
                let lo = (t - h).max(T::zero());
                (self.psi(t + h) - self.psi(lo)) / (t + h - lo)
            }
        }
    }
}

/// Standard sufficient conditions on the scatter weight: ψ₂ nondecreasing,
/// bounded, with sup ψ₂ > m. Evaluated on a log grid t ∈ [1e-8, 1e8].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MaronnaConditions<T> {
    pub monotone: bool,
    pub bounded: bool,
    /// ψ₂ at the top of the grid.
    pub psi_limit: T,
    pub exceeds_dim: bool,
}

impl<T> MaronnaConditions<T> {
    pub fn all(&self) -> bool {
        self.monotone && self.bounded && self.exceeds_dim
    }
}

pub fn maronna_conditions<T: Scalar>(u2: &Weight<T>, m: usize) -> MaronnaConditions<T> {
    let mut prev = -T::infinity();
    let mut monotone = true;
    let mut top = T::zero();
    let mut tail = Vec::new();
    for i in 0..=320 {
        let t = T::c(10f64.powf(-8.0 + i as f64 * 0.05));
        let p = u2.psi(t);
        if p < prev - T::c(1e-9) * prev.abs().max(T::one()) {
            monotone = false;
        }
        prev = p;
        top = top.max(p);
        if i >= 300 {
            tail.push(p);
        }
    }
    // unbounded ψ keeps growing over the last decade
    let bounded = top.is_finite_() && tail[tail.len() - 1] < tail[0] * T::c(1.5) + T::c(1e-12);
    MaronnaConditions {
        monotone,
        bounded,
        psi_limit: prev,
        exceeds_dim: prev > T::from_usize_(m),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum LocationMode<T: Scalar> {
    Joint,
    KnownMu(DVector<T>),
}

#[derive(Debug, Clone, PartialEq)]
pub enum Method<T: Scalar> {
    SampleMoments,
    Ml(FamilyKernel<T>),
    Maronna { u1: Weight<T>, u2: Weight<T> },
    Tyler,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EstimatorConfig<T: Scalar> {
    pub method: Method<T>,
    pub max_iter: usize,
    pub tol: T,
    pub location: LocationMode<T>,
    pub shape_scale: ShapeScale,
}

impl<T: Scalar> EstimatorConfig<T> {
    pub fn new(method: Method<T>) -> Self {
        Self {
            method,
            max_iter: 500,
            tol: T::c(1e-10),
            location: LocationMode::Joint,
            shape_scale: ShapeScale::None,
        }
    }

    pub fn known_mu(mut self, mu: DVector<T>) -> Self {
        self.location = LocationMode::KnownMu(mu);
        self
    }

    pub fn centered(self, m: usize) -> Self {
        self.known_mu(DVector::zeros(m))
    }

    pub fn with_tol(mut self, tol: T) -> Self {
        self.tol = tol;
        self
    }

    pub fn with_max_iter(mut self, max_iter: usize) -> Self {
        self.max_iter = max_iter;
        self
    }

    pub fn with_shape(mut self, shape: ShapeScale) -> Self {
        self.shape_scale = shape;
        self
    }

    fn validate(&self) -> Result<()> {
        if !(self.tol > T::zero()) {
            return Err(Error::InvalidParameter("tol must be positive".into()));
        }
        if self.max_iter == 0 {
            return Err(Error::InvalidParameter("max_iter must be >= 1".into()));
        }
        if matches!(self.method, Method::Tyler) && self.location == LocationMode::Joint {
            return Err(Error::InvalidParameter(
                "Tyler's estimator needs a known location".into(),
            ));
        }
        Ok(())
    }
}

/// Non-fatal observations made while fitting.
#[derive(Debug, Clone, PartialEq)]
pub enum Diagnostic {
    /// n ≤ m.
    FewSamples { n: usize, m: usize },
    SingularScatter,
    /// Negative log-likelihood went up between two iterates.
    LikelihoodIncrease { iteration: usize, increase: f64 },
    /// More samples share one direction than n/m.
    NotGeneralPosition { parallel: usize },
    /// Joint location/scatter M-iteration, which has no convergence guarantee.
    HeuristicJoint,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EstimateResult<T: Scalar> {
    pub mu_hat: DVector<T>,
    pub sigma_hat: SymMatrix<T>,
    pub iterations: usize,
    pub residual_trace: Vec<T>,
    pub converged: bool,
    pub scale_constraint_applied: ShapeScale,
    /// Negative log-likelihood along the ML iterates (empty otherwise).
    pub nll_trace: Vec<T>,
    pub diagnostics: Vec<Diagnostic>,
}

/// Runs the estimator selected by `cfg.method`.
pub fn fit<T: Scalar>(data: &DMatrix<T>, cfg: &EstimatorConfig<T>) -> Result<EstimateResult<T>> {
    match &cfg.method {
        Method::SampleMoments => {
            let mut r = sample_moments(data)?;
            if cfg.shape_scale != ShapeScale::None {
                r.sigma_hat = shape_normalize(&r.sigma_hat, cfg.shape_scale)?;
                r.scale_constraint_applied = cfg.shape_scale;
            }
            Ok(r)
        }
        Method::Ml(kernel) => fit_ml(data, kernel, cfg),
        Method::Maronna { u1, u2 } => fit_maronna(data, u1, u2, cfg),
        Method::Tyler => fit_tyler(data, cfg),
    }
}

fn check_data<T: Scalar>(data: &DMatrix<T>) -> Result<(usize, usize)> {
    let (n, m) = data.shape();
    if m == 0 || n < 2 {
        return Err(Error::InsufficientData { n, m });
    }
    if data.iter().any(|v| !v.is_finite_()) {
        return Err(Error::InvalidParameter("data contain non-finite values".into()));
    }
    Ok((n, m))
}

fn column_mean<T: Scalar>(data: &DMatrix<T>) -> DVector<T> {
    let n = T::from_usize_(data.nrows());
    data.row_sum().transpose() / n
}

fn coordinatewise_median<T: Scalar>(data: &DMatrix<T>) -> DVector<T> {
    DVector::from_fn(data.ncols(), |j, _| {
        let mut col: Vec<T> = data.column(j).iter().copied().collect();
        col.sort_by(|a, b| a.partial_cmp(b).unwrap_or(std::cmp::Ordering::Equal));
        let k = col.len();
        if k % 2 == 1 {
            col[k / 2]
        } else {
            (col[k / 2 - 1] + col[k / 2]) * T::c(0.5)
        }
    })
}

fn centered<T: Scalar>(data: &DMatrix<T>, mu: &DVector<T>) -> DMatrix<T> {
    let mut x = data.clone();
    for mut row in x.row_iter_mut() {
        row -= mu.transpose();
    }
    x
}

/// (1/n) Σ wᵢ xᵢxᵢᵀ over the rows of `x`.
fn weighted_scatter<T: Scalar>(x: &DMatrix<T>, w: &[T]) -> DMatrix<T> {
    let n = T::from_usize_(x.nrows());
    let mut y = x.clone();
    for (mut row, &wi) in y.row_iter_mut().zip(w) {
        row *= wi;
    }
    let s = x.transpose() * y / n;
    (&s + s.transpose()) * T::c(0.5)
}

/// Mahalanobis forms of every row and ln|Σ|.
fn quad_forms<T: Scalar>(x: &DMatrix<T>, sigma: &SymMatrix<T>) -> Result<(Vec<T>, T)> {
    let chol = sigma.cholesky()?;
    let l = chol.l_dirty();
    let y = l
        .solve_lower_triangular(&x.transpose())
        .expect("nonsingular Cholesky factor");
    let q = y.column_iter().map(|c| c.norm_squared()).collect();
    let ld = (0..l.nrows()).map(|i| l[(i, i)].ln()).fold(T::zero(), |a, b| a + b) * T::c(2.0);
    Ok((q, ld))
}

fn pd_or_fail<T: Scalar>(s: DMatrix<T>, iteration: usize) -> Result<SymMatrix<T>> {
    let s = SymMatrix::new(s)?;
    if s.check_pd().is_err() {
        let (lo, _) = s.eigen_range();
        return Err(Error::LostPositiveDefiniteness {
            iteration,
            min_eigenvalue: lo.f64(),
        });
    }
    Ok(s)
}

fn rel_change<T: Scalar>(new: &DMatrix<T>, old: &DMatrix<T>) -> T {
    let d = (new - old).norm();
    let base = old.norm();
    if base > T::zero() {
        d / base
    } else {
        d
    }
}

/// Location change relative to the scale of the scatter.
fn mu_change<T: Scalar>(new: &DVector<T>, old: &DVector<T>, sigma: &SymMatrix<T>) -> T {
    let scale = old
        .norm()
        .max((sigma.trace() / T::from_usize_(sigma.dim())).sqrt());
    let d = (new - old).norm();
    if scale > T::zero() {
        d / scale
    } else {
        d
    }
}

/// Sample mean and unbiased SCM (1/(n−1)). Singular results and n ≤ m are
/// reported in the diagnostics rather than rejected.
pub fn sample_moments<T: Scalar>(data: &DMatrix<T>) -> Result<EstimateResult<T>> {
    let (n, m) = check_data(data)?;
    let mu = column_mean(data);
    let x = centered(data, &mu);
    let s = x.transpose() * &x / T::from_usize_(n - 1);
    let sigma = SymMatrix::new((&s + s.transpose()) * T::c(0.5))?;
    let mut diagnostics = Vec::new();
    if n <= m {
        diagnostics.push(Diagnostic::FewSamples { n, m });
    }
    if sigma.check_pd().is_err() {
        diagnostics.push(Diagnostic::SingularScatter);
    }
    Ok(EstimateResult {
        mu_hat: mu,
        sigma_hat: sigma,
        iterations: 0,
        residual_trace: Vec::new(),
        converged: true,
        scale_constraint_applied: ShapeScale::None,
        nll_trace: Vec::new(),
        diagnostics,
    })
}

/// Biased SCM (1/n) about a given center.
pub fn scm_about<T: Scalar>(data: &DMatrix<T>, mu: &DVector<T>) -> Result<SymMatrix<T>> {
    let (n, _) = check_data(data)?;
    let x = centered(data, mu);
    let w = vec![T::one(); n];
    SymMatrix::new(weighted_scatter(&x, &w))
}

fn finish<T: Scalar>(
    mut sigma: SymMatrix<T>,
    shape: ShapeScale,
) -> Result<(SymMatrix<T>, ShapeScale)> {
    if shape != ShapeScale::None {
        sigma = shape_normalize(&sigma, shape)?;
    }
    Ok((sigma, shape))
}

fn known_mu<T: Scalar>(cfg: &EstimatorConfig<T>, m: usize) -> Result<Option<DVector<T>>> {
    match &cfg.location {
        LocationMode::Joint => Ok(None),
        LocationMode::KnownMu(mu) => {
            if mu.len() != m {
                return Err(Error::DimensionMismatch { expected: m, got: mu.len() });
            }
            Ok(Some(mu.clone()))
        }
    }
}

/// Plain alternating fixed point: μ ← Σ w₁ᵢxᵢ / Σ w₁ᵢ (unless known),
/// Σ ← (1/n) Σ w₂ᵢ (xᵢ − μ)(xᵢ − μ)ᵀ, with weights from the current iterate.
fn alternating<T: Scalar, U1: Fn(T) -> T, U2: Fn(T) -> T>(
    data: &DMatrix<T>,
    u1: U1,
    u2: U2,
    cfg: &EstimatorConfig<T>,
    kernel: Option<&FamilyKernel<T>>,
) -> Result<EstimateResult<T>> {
    let (n, m) = check_data(data)?;
    let fixed = known_mu(cfg, m)?;
    let mut mu = fixed.clone().unwrap_or_else(|| coordinatewise_median(data));
    let mut sigma = pd_or_fail(weighted_scatter(&centered(data, &mu), &vec![T::one(); n]), 0)
        .map_err(|_| Error::InsufficientData { n, m })?;
    let mut diagnostics = Vec::new();
    if n <= m {
        diagnostics.push(Diagnostic::FewSamples { n, m });
    }
    let mut residual_trace = Vec::new();
    let mut nll_trace = Vec::new();
    let half_n = T::from_usize_(n) * T::c(0.5);
    for it in 1..=cfg.max_iter {
        let x = centered(data, &mu);
        let (q, ld) = quad_forms(&x, &sigma)?;
        if let Some(k) = kernel {
            let nll = half_n * ld - q.iter().fold(T::zero(), |a, &qi| a + k.ln_density_generator(qi));
            if let Some(&prev) = nll_trace.last() {
                let prev: T = prev;
                let inc = nll - prev;
                if inc > T::c(1e-9) * prev.abs().max(T::one()) {
                    diagnostics.push(Diagnostic::LikelihoodIncrease {
                        iteration: it,
                        increase: inc.f64(),
                    });
                }
            }
            nll_trace.push(nll);
        }
        let new_mu = match &fixed {
            Some(mu0) => mu0.clone(),
            None => {
                let w: Vec<T> = q.iter().map(|&qi| u1(qi.sqrt())).collect();
                let total = w.iter().fold(T::zero(), |a, &b| a + b);
                if !(total > T::zero()) {
                    return Err(Error::InvalidParameter("location weights sum to zero".into()));
                }
                let mut acc = DVector::zeros(m);
                for (row, &wi) in data.row_iter().zip(&w) {
                    acc += row.transpose() * wi;
                }
                acc / total
            }
        };
        let w2: Vec<T> = q.iter().map(|&qi| u2(qi)).collect();
        let new_sigma = pd_or_fail(weighted_scatter(&centered(data, &new_mu), &w2), it)?;
        let res = rel_change(new_sigma.matrix(), sigma.matrix()).max(mu_change(&new_mu, &mu, &sigma));
        residual_trace.push(res);
        mu = new_mu;
        sigma = new_sigma;
        if res < cfg.tol {
            let (sigma_hat, applied) = finish(sigma, cfg.shape_scale)?;
            return Ok(EstimateResult {
                mu_hat: mu,
                sigma_hat,
                iterations: it,
                residual_trace,
                converged: true,
                scale_constraint_applied: applied,
                nll_trace,
                diagnostics,
            });
        }
    }
    let residual = residual_trace.last().copied().unwrap_or(T::infinity());
    if fixed.is_none() && kernel.is_none() {
        // joint M-iteration: report rather than fail
        let (sigma_hat, applied) = finish(sigma, cfg.shape_scale)?;
        return Ok(EstimateResult {
            mu_hat: mu,
            sigma_hat,
            iterations: cfg.max_iter,
            residual_trace,
            converged: false,
            scale_constraint_applied: applied,
            nll_trace,
            diagnostics,
        });
    }
    Err(Error::NonConvergence {
        iterations: cfg.max_iter,
        residual: residual.f64(),
    })
}

/// ML fixed point with weight φ of `kernel`.
pub fn fit_ml<T: Scalar>(
    data: &DMatrix<T>,
    kernel: &FamilyKernel<T>,
    cfg: &EstimatorConfig<T>,
) -> Result<EstimateResult<T>> {
    cfg.validate()?;
    let (_, m) = check_data(data)?;
    if kernel.realness().is_complex() {
        return Err(Error::Unsupported("ML fit of complex kernels".into()));
    }
    if kernel.dim() != m {
        return Err(Error::DimensionMismatch { expected: kernel.dim(), got: m });
    }
    alternating(
        data,
        |d| kernel.score_phi(d * d),
        |q| kernel.score_phi(q),
        cfg,
        Some(kernel),
    )
}

/// Maronna M-estimator. With a known location this is the scale-adjusted
/// fixed point Σₖ₊₁ = (1/n) Σ u₂(cₖQᵢₖ) xᵢxᵢᵀ, (1/n) Σ ψ₂(cₖQᵢₖ) = m; the
/// joint mode alternates plain updates and is flagged as heuristic.
pub fn fit_maronna<T: Scalar>(
    data: &DMatrix<T>,
    u1: &Weight<T>,
    u2: &Weight<T>,
    cfg: &EstimatorConfig<T>,
) -> Result<EstimateResult<T>> {
    cfg.validate()?;
    let (n, m) = check_data(data)?;
    let Some(mu) = known_mu(cfg, m)? else {
        let mut r = alternating(data, |d| u1.u(d), |q| u2.u(q), cfg, None)?;
        r.diagnostics.push(Diagnostic::HeuristicJoint);
        return Ok(r);
    };
    let x = centered(data, &mu);
    let mut sigma = pd_or_fail(weighted_scatter(&x, &vec![T::one(); n]), 0)
        .map_err(|_| Error::InsufficientData { n, m })?;
    let mut diagnostics = Vec::new();
    if n <= m {
        diagnostics.push(Diagnostic::FewSamples { n, m });
    }
    let mm = T::from_usize_(m);
    let mut residual_trace = Vec::new();
    for it in 1..=cfg.max_iter {
        let (q, _) = quad_forms(&x, &sigma)?;
        let nn = T::from_usize_(n);
        let f = |c: T| q.iter().fold(T::zero(), |a, &qi| a + u2.psi(c * qi)) / nn - mm;
        let c = solve_increasing(f, T::machine_eps() * T::c(4.0))?;
        let w: Vec<T> = q.iter().map(|&qi| u2.u(c * qi)).collect();
        let new_sigma = pd_or_fail(weighted_scatter(&x, &w), it)?;
        let res = rel_change(new_sigma.matrix(), sigma.matrix());
        residual_trace.push(res);
        sigma = new_sigma;
        if res < cfg.tol {
            let (sigma_hat, applied) = finish(sigma, cfg.shape_scale)?;
            return Ok(EstimateResult {
                mu_hat: mu,
                sigma_hat,
                iterations: it,
                residual_trace,
                converged: true,
                scale_constraint_applied: applied,
                nll_trace: Vec::new(),
                diagnostics,
            });
        }
    }
    Err(Error::NonConvergence {
        iterations: cfg.max_iter,
        residual: residual_trace.last().copied().unwrap_or(T::infinity()).f64(),
    })
}

/// Root of a nondecreasing f on (0, ∞): bracket grown geometrically from
/// c = 1, then bisection in ln c to relative width `tol`.
pub fn solve_increasing<T: Scalar, F: Fn(T) -> T>(f: F, tol: T) -> Result<T> {
    let two = T::c(2.0);
    let f1 = f(T::one());
    if f1 == T::zero() {
        return Ok(T::one());
    }
    let (mut lo, mut hi) = (T::one(), T::one());
    let mut grown = 0;
    if f1 < T::zero() {
        while f(hi) < T::zero() {
            lo = hi;
            hi *= two;
            grown += 1;
            if grown > 400 {
                return Err(Error::RootNotBracketed("f stays negative as c grows".into()));
            }
        }
    } else {
        while f(lo) > T::zero() {
            hi = lo;
            lo /= two;
            grown += 1;
            if grown > 400 {
                return Err(Error::RootNotBracketed("f stays positive as c shrinks".into()));
            }
        }
    }
    for _ in 0..300 {
        if hi - lo <= tol * hi {
            break;
        }
        let mid = (lo * hi).sqrt();
        if f(mid) < T::zero() {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok((lo + hi) * T::c(0.5))
}

/// Largest number of samples sharing one direction (up to sign).
fn max_parallel<T: Scalar>(x: &DMatrix<T>) -> usize {
    let tol = T::c(1e-9);
    let mut dirs: Vec<Vec<T>> = x
        .row_iter()
        .map(|r| {
            let n = r.norm();
            let mut v: Vec<T> = r.iter().map(|&a| a / n).collect();
            if let Some(first) = v.iter().copied().find(|a| a.abs() > tol) {
                if first < T::zero() {
                    v.iter_mut().for_each(|a| *a = -*a);
                }
            }
            v
        })
        .collect();
    dirs.sort_by(|a, b| {
        a.iter()
            .zip(b)
            .map(|(p, q)| p.partial_cmp(q).unwrap_or(std::cmp::Ordering::Equal))
            .find(|o| *o != std::cmp::Ordering::Equal)
            .unwrap_or(std::cmp::Ordering::Equal)
    });
    let mut best = 1;
    let mut run = 1;
    for w in dirs.windows(2) {
        let close = w[0].iter().zip(&w[1]).all(|(p, q)| (*p - *q).abs() <= tol);
        run = if close { run + 1 } else { 1 };
        best = best.max(run);
    }
    best
}

/// ‖Σ − (m/n) Σ xᵢxᵢᵀ/(xᵢᵀΣ⁻¹xᵢ)‖_F / ‖Σ‖_F on centered data.
pub fn tyler_residual<T: Scalar>(x: &DMatrix<T>, sigma: &SymMatrix<T>) -> Result<T> {
    let (q, _) = quad_forms(x, sigma)?;
    let mm = T::from_usize_(x.ncols());
    let w: Vec<T> = q.iter().map(|&qi| mm / qi).collect();
    let next = weighted_scatter(x, &w);
    Ok((sigma.matrix() - next).norm() / sigma.matrix().norm())
}

/// Tyler's estimator: Σ′ = (m/n) Σ xᵢxᵢᵀ/(xᵢᵀΣₖ⁻¹xᵢ), Σₖ₊₁ = m Σ′/tr(Σ′),
/// starting from Σ₀ = I. The residual is the one of the implicit equation.
pub fn fit_tyler<T: Scalar>(data: &DMatrix<T>, cfg: &EstimatorConfig<T>) -> Result<EstimateResult<T>> {
    cfg.validate()?;
    let (n, m) = check_data(data)?;
    let mu = known_mu(cfg, m)?.expect("validated known location");
    let x = centered(data, &mu);
    let zeros = x.row_iter().filter(|r| r.norm() == T::zero()).count();
    if zeros > 0 {
        return Err(Error::ZeroSamples { count: zeros });
    }
    if n <= m {
        return Err(Error::InsufficientData { n, m });
    }
    let rank = x.clone().svd(false, false).rank(T::c(1e3) * T::machine_eps() * x.norm());
    if rank < m {
        return Err(Error::InvalidParameter(format!(
            "data span a subspace of dimension {rank} < {m}"
        )));
    }
    let mut diagnostics = Vec::new();
    let parallel = max_parallel(&x);
    if parallel * m > n {
        diagnostics.push(Diagnostic::NotGeneralPosition { parallel });
    }
    let mm = T::from_usize_(m);
    let mut sigma = SymMatrix::identity(m);
    let mut residual_trace = Vec::new();
    for it in 1..=cfg.max_iter {
        let (q, _) = quad_forms(&x, &sigma)?;
        let w: Vec<T> = q.iter().map(|&qi| mm / qi).collect();
        let next = weighted_scatter(&x, &w);
        let tr = next.trace();
        let next = pd_or_fail(next * (mm / tr), it)?;
        sigma = next;
        let res = tyler_residual(&x, &sigma)?;
        residual_trace.push(res);
        if res < cfg.tol {
            let shape = if cfg.shape_scale == ShapeScale::None {
                ShapeScale::TraceM
            } else {
                cfg.shape_scale
            };
            let (sigma_hat, applied) = finish(sigma, shape)?;
            return Ok(EstimateResult {
                mu_hat: mu,
                sigma_hat,
                iterations: it,
                residual_trace,
                converged: true,
                scale_constraint_applied: applied,
                nll_trace: Vec::new(),
                diagnostics,
            });
        }
    }
    Err(Error::NonConvergence {
        iterations: cfg.max_iter,
        residual: residual_trace.last().copied().unwrap_or(T::infinity()).f64(),
    })
}

/// σ solving E[σQ u₂(σQ)] = m under the kernel's Q-law; the M-estimator of
/// scatter is consistent for Σ/σ.
pub fn m_scale<T: Scalar>(kernel: &FamilyKernel<T>, u2: &Weight<T>) -> Result<T> {
    let m = T::from_usize_(kernel.dim());
    let law = kernel.q_law();
    let failure = std::cell::RefCell::new(None);
    let f = |s: T| match law.expect(|q| u2.psi(s * q)) {
        Ok(v) => v - m,
        Err(e) => {
            failure.borrow_mut().get_or_insert(e);
            T::zero()
        }
    };
    let root = solve_increasing(f, T::c(1e-12));
    if let Some(e) = failure.into_inner() {
        return Err(e);
    }
    root
}
