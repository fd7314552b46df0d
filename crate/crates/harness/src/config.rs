//! JSON-facing descriptions of distributions and estimators.
//!
//! A distribution:
//!
//! ```json
//! { "family": "student(nu=3)", "dim": 2, "realness": "real",
//!   "mu": [0, 0], "sigma": [[1, 0.5], [0.5, 2]] }
//! ```
//!
//! Complex laws use `"realness": "circular" | "noncircular"` and may add
//! `mu_im`, `sigma_im`, `omega` and `omega_im`; `omega` makes the law
//! noncircular. Missing `mu` is zero and missing `sigma` is the identity.
//!
//! An estimator:
//!
//! ```json
//! { "method": "maronna", "u1": "huber-location(k=2)", "u2": "huber(q=0.9)",
//!   "known_mu": [0, 0], "shape": "det", "tol": 1e-10, "max_iter": 500 }
//! ```
//!
//! `method` is one of `scm`, `ml`, `maronna`, `tyler`; `ml` takes an optional
//! `family` (default: the distribution's). Weights: `constant(c=..)`,
//! `huber(q=..)`, `huber-location(k=..)`, `ml`, `ml-location`, `tyler`.

use ellipsym_core::estimate::{EstimatorConfig, Method, ShapeScale, Weight};
use ellipsym_core::families::parse_family;
use ellipsym_core::families::{FamilyKernel, Realness, ScaleRule};
use ellipsym_core::matrix_kit::SymMatrix;
use ellipsym_core::spec::{CMatrix, CVector, ComplexSpec, DistributionSpec, RealSpec};
use nalgebra::{DMatrix, DVector};
use num_complex::Complex;
use serde::{Deserialize, Serialize};

use crate::error::{HarnessError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum RealnessConfig {
    #[default]
    Real,
    Circular,
    Noncircular,
}

impl From<RealnessConfig> for Realness {
    fn from(r: RealnessConfig) -> Self {
        match r {
            RealnessConfig::Real => Realness::Real,
            RealnessConfig::Circular => Realness::ComplexCircular,
            RealnessConfig::Noncircular => Realness::ComplexNoncircular,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpecConfig {
    pub family: String,
    pub dim: usize,
    #[serde(default)]
    pub realness: RealnessConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mu: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mu_im: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sigma: Option<Vec<Vec<f64>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sigma_im: Option<Vec<Vec<f64>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub omega: Option<Vec<Vec<f64>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub omega_im: Option<Vec<Vec<f64>>>,
}

fn cfg_err(msg: impl Into<String>) -> HarnessError {
    HarnessError::Config(msg.into())
}

pub fn rows_to_matrix(rows: &[Vec<f64>], m: usize, what: &str) -> Result<DMatrix<f64>> {
    if rows.len() != m || rows.iter().any(|r| r.len() != m) {
        return Err(cfg_err(format!("`{what}` must be {m}x{m}")));
    }
    Ok(DMatrix::from_fn(m, m, |i, j| rows[i][j]))
}

pub fn matrix_to_rows(a: &DMatrix<f64>) -> Vec<Vec<f64>> {
    a.row_iter().map(|r| r.iter().copied().collect()).collect()
}

fn opt_vec(v: &Option<Vec<f64>>, m: usize, what: &str) -> Result<DVector<f64>> {
    match v {
        None => Ok(DVector::zeros(m)),
        Some(x) if x.len() == m => Ok(DVector::from_column_slice(x)),
        Some(x) => Err(cfg_err(format!("`{what}` has length {}, expected {m}", x.len()))),
    }
}

fn opt_mat(v: &Option<Vec<Vec<f64>>>, m: usize, what: &str, default: DMatrix<f64>) -> Result<DMatrix<f64>> {
    match v {
        None => Ok(default),
        Some(rows) => rows_to_matrix(rows, m, what),
    }
}

impl SpecConfig {
    pub fn real(family: &str, dim: usize) -> Self {
        Self {
            family: family.to_string(),
            dim,
            realness: RealnessConfig::Real,
            mu: None,
            mu_im: None,
            sigma: None,
            sigma_im: None,
            omega: None,
            omega_im: None,
        }
    }

    pub fn with_sigma(mut self, sigma: &DMatrix<f64>) -> Self {
        self.sigma = Some(matrix_to_rows(sigma));
        self
    }

    pub fn with_mu(mut self, mu: &[f64]) -> Self {
        self.mu = Some(mu.to_vec());
        self
    }

    fn effective_realness(&self) -> Realness {
        if self.omega.is_some() || self.omega_im.is_some() {
            Realness::ComplexNoncircular
        } else {
            self.realness.into()
        }
    }

    pub fn kernel(&self) -> Result<FamilyKernel<f64>> {
        kernel_from(&self.family, self.dim, self.effective_realness())
    }

    pub fn build(&self) -> Result<DistributionSpec<f64>> {
        let m = self.dim;
        let kernel = self.kernel()?;
        if !kernel.realness().is_complex() {
            let mu = opt_vec(&self.mu, m, "mu")?;
            let sigma = opt_mat(&self.sigma, m, "sigma", DMatrix::identity(m, m))?;
            return Ok(RealSpec::new(kernel, mu, SymMatrix::new(sigma)?)?.into());
        }
        let zero = DMatrix::zeros(m, m);
        let join = |re: DMatrix<f64>, im: DMatrix<f64>| -> CMatrix<f64> {
            DMatrix::from_fn(m, m, |i, j| Complex::new(re[(i, j)], im[(i, j)]))
        };
        let mu_re = opt_vec(&self.mu, m, "mu")?;
        let mu_im = opt_vec(&self.mu_im, m, "mu_im")?;
        let mu = CVector::from_fn(m, |i, _| Complex::new(mu_re[i], mu_im[i]));
        let sigma = join(
            opt_mat(&self.sigma, m, "sigma", DMatrix::identity(m, m))?,
            opt_mat(&self.sigma_im, m, "sigma_im", zero.clone())?,
        );
        let omega = if kernel.realness() == Realness::ComplexNoncircular {
            Some(join(
                opt_mat(&self.omega, m, "omega", zero.clone())?,
                opt_mat(&self.omega_im, m, "omega_im", zero)?,
            ))
        } else {
            None
        };
        Ok(ComplexSpec::new(kernel, mu, sigma, omega)?.into())
    }
}

/// Kernel from the family grammar; the scale rule defaults to `cov`.
pub fn kernel_from(family: &str, dim: usize, realness: Realness) -> Result<FamilyKernel<f64>> {
    let fs = parse_family::<f64>(family)?;
    Ok(FamilyKernel::with_rule(
        fs.family,
        dim,
        realness,
        fs.rule.unwrap_or(ScaleRule::Cov),
    )?)
}

fn args_of(text: &str) -> Result<(String, Vec<(String, f64)>)> {
    let text = text.trim();
    let (name, body) = match text.find('(') {
        Some(i) if text.ends_with(')') => (&text[..i], &text[i + 1..text.len() - 1]),
        Some(_) => return Err(cfg_err(format!("missing `)` in `{text}`"))),
        None => (text, ""),
    };
    let mut args = Vec::new();
    for part in body.split(',').map(str::trim).filter(|p| !p.is_empty()) {
        let (k, v) = part
            .split_once('=')
            .ok_or_else(|| cfg_err(format!("expected key=value, got `{part}`")))?;
        let v: f64 = v
            .trim()
            .parse()
            .map_err(|_| cfg_err(format!("`{}` expects a number", k.trim())))?;
        args.push((k.trim().to_string(), v));
    }
    Ok((name.trim().to_ascii_lowercase(), args))
}

/// Parses a weight function; `kernel` backs the `ml` forms.
pub fn parse_weight(text: &str, m: usize, kernel: &FamilyKernel<f64>) -> Result<Weight<f64>> {
    let (name, args) = args_of(text)?;
    let get = |key: &str, default: Option<f64>| -> Result<f64> {
        args.iter()
            .find(|(k, _)| k == key)
            .map(|(_, v)| *v)
            .or(default)
            .ok_or_else(|| cfg_err(format!("`{name}` needs `{key}`")))
    };
    Ok(match name.as_str() {
        "constant" => Weight::Constant(get("c", Some(1.0))?),
        "huber" => Weight::huber(m, get("q", Some(0.9))?)?,
        "huber-location" => Weight::HuberLocation { k: get("k", None)? },
        "ml" => Weight::Ml(*kernel),
        "ml-location" => Weight::MlLocation(*kernel),
        "tyler" => Weight::Tyler { m: m as f64 },
        other => return Err(cfg_err(format!("unknown weight `{other}`"))),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimatorSpec {
    pub method: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub family: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub u1: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub u2: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub known_mu: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub shape: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tol: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_iter: Option<usize>,
}

impl EstimatorSpec {
    pub fn method(method: &str) -> Self {
        Self {
            method: method.to_string(),
            family: None,
            u1: None,
            u2: None,
            known_mu: None,
            shape: None,
            tol: None,
            max_iter: None,
        }
    }

    pub fn known_mu(mut self, mu: Vec<f64>) -> Self {
        self.known_mu = Some(mu);
        self
    }

    pub fn weights(mut self, u1: &str, u2: &str) -> Self {
        self.u1 = Some(u1.to_string());
        self.u2 = Some(u2.to_string());
        self
    }

    /// `default_kernel` is the data law's kernel, used when `family` is absent.
    pub fn build(&self, m: usize, default_kernel: Option<&FamilyKernel<f64>>) -> Result<EstimatorConfig<f64>> {
        let kernel = match (&self.family, default_kernel) {
            (Some(f), _) => kernel_from(f, m, Realness::Real)?,
            (None, Some(k)) => k.real_representation().with_dim(m)?,
            (None, None) => kernel_from("gaussian", m, Realness::Real)?,
        };
        let method = match self.method.to_ascii_lowercase().as_str() {
            "scm" | "sample-moments" => Method::SampleMoments,
            "ml" => Method::Ml(kernel),
            "tyler" => Method::Tyler,
            "maronna" => Method::Maronna {
                u1: parse_weight(self.u1.as_deref().unwrap_or("huber-location(k=2)"), m, &kernel)?,
                u2: parse_weight(self.u2.as_deref().unwrap_or("huber(q=0.9)"), m, &kernel)?,
            },
            other => return Err(cfg_err(format!("unknown method `{other}`"))),
        };
        let mut cfg = EstimatorConfig::new(method);
        if let Some(mu) = &self.known_mu {
            cfg = cfg.known_mu(opt_vec(&Some(mu.clone()), m, "known_mu")?);
        }
        if let Some(s) = &self.shape {
            cfg = cfg.with_shape(s.parse::<ShapeScale>()?);
        }
        if let Some(t) = self.tol {
            cfg = cfg.with_tol(t);
        }
        if let Some(n) = self.max_iter {
            cfg = cfg.with_max_iter(n);
        }
        Ok(cfg)
    }
}

/// "1,0.5;0.5,2" → 2×2; rows separated by `;`.
pub fn parse_matrix_arg(text: &str) -> Result<DMatrix<f64>> {
    let rows: Vec<Vec<f64>> = text
        .split(';')
        .map(parse_vector_arg)
        .collect::<Result<_>>()?;
    let n = rows.len();
    let c = rows.first().map_or(0, Vec::len);
    if rows.iter().any(|r| r.len() != c) {
        return Err(cfg_err("matrix rows differ in length"));
    }
    Ok(DMatrix::from_fn(n, c, |i, j| rows[i][j]))
}

pub fn parse_vector_arg(text: &str) -> Result<Vec<f64>> {
    text.split(',')
        .map(|v| {
            v.trim()
                .parse::<f64>()
                .map_err(|_| cfg_err(format!("`{}` is not a number", v.trim())))
        })
        .collect()
}
