//! Experiment plans: a distribution, estimators and a list of checks, run
//! with a fixed seed and summarized in a CSV report.

use std::fmt::Write as _;
use std::path::Path;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::checks::{run_check, CheckConfig, CheckContext, CheckKind, CheckReport, Formula, QReference};
use crate::config::{EstimatorSpec, SpecConfig};
use crate::csvio::{fmt_f64, Table};
use crate::error::{HarnessError, Result};

pub const DEFAULT_SEED: u64 = 20_240_601;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentPlan {
    pub name: String,
    #[serde(default)]
    pub description: String,
    /// Wall-clock budget for the whole plan, reported but not enforced.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub budget_secs: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub spec: Option<SpecConfig>,
    #[serde(default)]
    pub estimators: Vec<EstimatorSpec>,
    #[serde(default)]
    pub n_grid: Vec<usize>,
    #[serde(default = "default_replicates")]
    pub replicates: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    pub checks: Vec<CheckConfig>,
}

fn default_replicates() -> usize {
    2000
}

#[derive(Debug, Clone, PartialEq)]
pub struct PlanOutcome {
    pub plan: String,
    pub seed: u64,
    pub reports: Vec<CheckReport>,
    pub runtime_secs: f64,
}

impl PlanOutcome {
    pub fn all_pass(&self) -> bool {
        !self.reports.is_empty() && self.reports.iter().all(|r| r.pass)
    }

    /// CSV report without runtimes, so reruns with one seed are identical.
    pub fn table(&self) -> Table {
        let mut t = Table::new(
            ["check", "statistic", "relation", "threshold", "pass", "detail"]
                .map(String::from)
                .to_vec(),
        )
        .meta("plan", &self.plan)
        .meta("seed", self.seed);
        for r in &self.reports {
            t.push(vec![
                r.name.clone(),
                fmt_f64(r.statistic),
                r.relation.symbol().to_string(),
                fmt_f64(r.threshold),
                r.pass.to_string(),
                r.detail.clone(),
            ]);
        }
        t
    }

    pub fn summary(&self) -> String {
        let mut s = String::new();
        for r in &self.reports {
            let _ = writeln!(
                s,
                "[{}] {}: {:.6e} {} {:.3e} ({:.2}s){}",
                if r.pass { "PASS" } else { "FAIL" },
                r.name,
                r.statistic,
                r.relation.symbol(),
                r.threshold,
                r.runtime_secs,
                if r.detail.is_empty() { String::new() } else { format!(" {}", r.detail) }
            );
        }
        let passed = self.reports.iter().filter(|r| r.pass).count();
        let _ = writeln!(
            s,
            "{}: {passed}/{} passed in {:.1}s (seed {})",
            self.plan,
            self.reports.len(),
            self.runtime_secs,
            self.seed
        );
        s
    }
}

impl ExperimentPlan {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| HarnessError::Plan(e.to_string()))
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text =
            std::fs::read_to_string(path).map_err(|e| HarnessError::io(path.display().to_string(), e))?;
        Self::from_json(&text)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("plans serialize")
    }

    /// Runs every check; `seed` overrides the plan's own.
    pub fn run(&self, seed: Option<u64>) -> PlanOutcome {
        let seed = seed.or(self.seed).unwrap_or(DEFAULT_SEED);
        let start = std::time::Instant::now();
        let mut reports = Vec::new();
        for (idx, check) in self.checks.iter().enumerate() {
            let estimator = match check.estimator {
                Some(i) => match self.estimators.get(i) {
                    Some(e) => Some(e),
                    None => {
                        reports.push(CheckReport::failed(
                            check_name(check, idx),
                            format!("no estimator at index {i}"),
                        ));
                        continue;
                    }
                },
                None => self.estimators.first(),
            };
            let ctx = CheckContext {
                name: check_name(check, idx),
                spec: check.spec.as_ref().or(self.spec.as_ref()),
                n: check.n.or(self.n_grid.first().copied()),
                replicates: self.replicates,
                estimator,
                seed,
                stream_base: (idx as u64 + 1) << 40,
            };
            reports.extend(run_check(&check.kind, &ctx));
        }
        PlanOutcome {
            plan: self.name.clone(),
            seed,
            reports,
            runtime_secs: start.elapsed().as_secs_f64(),
        }
    }
}

fn check_name(check: &CheckConfig, idx: usize) -> String {
    check
        .name
        .clone()
        .unwrap_or_else(|| format!("{}#{idx}", check.kind_name()))
}

/// Runs a plan and writes `<dir>/<plan>.csv` and `<dir>/<plan>.txt`.
pub fn run_plan(plan: &ExperimentPlan, seed: Option<u64>, out_dir: Option<&Path>) -> Result<PlanOutcome> {
    let outcome = plan.run(seed);
    if let Some(dir) = out_dir {
        std::fs::create_dir_all(dir).map_err(|e| HarnessError::io(dir.display().to_string(), e))?;
        outcome.table().write_file(&dir.join(format!("{}.csv", plan.name)))?;
        let txt = dir.join(format!("{}.txt", plan.name));
        std::fs::write(&txt, outcome.summary()).map_err(|e| HarnessError::io(txt.display().to_string(), e))?;
    }
    Ok(outcome)
}

fn plan(name: &str, description: &str, budget_secs: f64, checks: Vec<CheckConfig>) -> ExperimentPlan {
    ExperimentPlan {
        name: name.to_string(),
        description: description.to_string(),
        budget_secs: Some(budget_secs),
        spec: None,
        estimators: Vec::new(),
        n_grid: Vec::new(),
        replicates: default_replicates(),
        seed: None,
        checks,
    }
}

fn q_check(name: &str, family: &str, m: usize, reference: QReference) -> CheckConfig {
    CheckConfig::new(CheckKind::QLaw {
        reference,
        level: 0.01,
    })
    .named(name)
    .spec(SpecConfig::real(family, m))
    .n(10_000)
}

fn tridiag(m: usize) -> DMatrix<f64> {
    DMatrix::from_fn(m, m, |i, j| match i.abs_diff(j) {
        0 => 1.0 + i as f64 * 0.5,
        1 => 0.4,
        _ => 0.0,
    })
}

fn ar1(m: usize, rho: f64) -> DMatrix<f64> {
    DMatrix::from_fn(m, m, |i, j| rho.powi(i.abs_diff(j) as i32))
}

fn asym_plan(name: &str, description: &str, family: &str, method: &str, formula: Formula) -> ExperimentPlan {
    let mut p = plan(
        name,
        description,
        600.0,
        vec![CheckConfig::new(CheckKind::AsymptoticCov { formula, tol: 0.10 }).named(name)],
    );
    p.spec = Some(SpecConfig::real(family, 2).with_sigma(&tridiag(2)).with_mu(&[1.0, -0.5]));
    p.estimators = vec![EstimatorSpec::method(method)];
    p.n_grid = vec![10_000];
    p
}

/// The registered plans, in presentation order.
pub fn builtin_plans() -> Vec<ExperimentPlan> {
    let mut out = Vec::new();

    let mut q = Vec::new();
    for m in [1, 2, 3, 5] {
        q.push(q_check(&format!("gaussian-chisq/m={m}"), "gaussian(scale=raw)", m, QReference::ChiSquare));
    }
    for (m, nu) in [(2, 3), (3, 8)] {
        q.push(q_check(
            &format!("student-f/m={m},nu={nu}"),
            &format!("student(nu={nu}, scale=raw)"),
            m,
            QReference::F,
        ));
    }
    for (m, s) in [(2, 0.5), (3, 2.0)] {
        q.push(q_check(
            &format!("gg-gamma/m={m},s={s}"),
            &format!("gg(s={s}, b=1, scale=raw)"),
            m,
            QReference::GammaPower,
        ));
    }
    out.push(plan("q-law", "KS tests of the Mahalanobis form against its reference laws", 30.0, q));

    let gg_kappa = |s: f64| {
        use ellipsym_core::special::gamma;
        gamma(5.0 / (2.0 * s)) * gamma(1.0 / (2.0 * s)) / (3.0 * gamma(3.0 / (2.0 * s)).powi(2)) - 1.0
    };
    let kurt = |name: &str, family: &str, m: usize, expected: f64| {
        CheckConfig::new(CheckKind::Kurtosis {
            expected,
            se_mult: 5.0,
        })
        .named(name)
        .spec(SpecConfig::real(family, m).with_sigma(&tridiag(m)))
        .n(1_000_000)
    };
    out.push(plan(
        "kurtosis",
        "Empirical kurtosis parameter against closed forms",
        120.0,
        vec![
            kurt("student/nu=10", "student(nu=10)", 2, 2.0 / 6.0),
            kurt("k/nu=4", "k(nu=4)", 2, 0.25),
            kurt("gg/m=1,s=0.5", "gg(s=0.5)", 1, gg_kappa(0.5)),
            kurt("gg/m=1,s=2", "gg(s=2)", 1, gg_kappa(2.0)),
        ],
    ));

    out.push(plan(
        "tyler-fixed-point",
        "Tyler iteration residual, iteration count and invariance to per-sample rescaling",
        30.0,
        vec![CheckConfig::new(CheckKind::TylerFixedPoint {
            residual_tol: 1e-10,
            max_iter: 200,
            rescale_tol: 1e-10,
        })
        .named("tyler/student nu=2, m=3")
        .spec(SpecConfig::real("student(nu=2)", 3).with_sigma(&tridiag(3)))
        .n(2000)],
    ));

    out.push(plan(
        "ml-gaussian-closed-form",
        "Gaussian ML against the sample mean and the 1/n sample covariance",
        10.0,
        vec![CheckConfig::new(CheckKind::MlGaussianClosedForm { tol: 1e-12 })
            .named("ml-gaussian/m=3")
            .spec(SpecConfig::real("gaussian", 3).with_sigma(&tridiag(3)).with_mu(&[1.0, 2.0, -1.0]))
            .n(5000)],
    ));

    out.push(asym_plan(
        "scm-asymcov",
        "n cov(vec SCM) against its closed form, Student nu=12",
        "student(nu=12)",
        "scm",
        Formula::Scm,
    ));
    out.push(asym_plan(
        "ml-asymcov",
        "n cov(vec ML) against its closed form, Student nu=6",
        "student(nu=6)",
        "ml",
        Formula::Ml,
    ));
    let mut tyler = asym_plan(
        "tyler-asymcov",
        "n cov(vec Tyler shape) against sigma1=(m+2)/m, sigma2=-2(m+2)/m^2 on two laws",
        "student(nu=3)",
        "tyler",
        Formula::Tyler,
    );
    tyler.estimators = vec![EstimatorSpec::method("tyler").known_mu(vec![1.0, -0.5])];
    let base = tyler.spec.take().expect("set above");
    tyler.checks = vec![
        CheckConfig::new(CheckKind::AsymptoticCov {
            formula: Formula::Tyler,
            tol: 0.10,
        })
        .named("tyler-asymcov/nu=3")
        .spec(base.clone()),
        CheckConfig::new(CheckKind::AsymptoticCov {
            formula: Formula::Tyler,
            tol: 0.10,
        })
        .named("tyler-asymcov/nu=30")
        .spec(SpecConfig {
            family: "student(nu=30)".into(),
            ..base
        }),
    ];
    tyler.budget_secs = Some(1200.0);
    out.push(tyler);
    let mut huber = asym_plan(
        "huber-asymcov",
        "n cov(vec Maronna-Huber) against its closed form, Gaussian data, known center",
        "gaussian",
        "maronna",
        Formula::M,
    );
    huber.estimators = vec![EstimatorSpec::method("maronna")
        .weights("constant(c=1)", "huber(q=0.9)")
        .known_mu(vec![1.0, -0.5])];
    huber.replicates = 1000;
    out.push(huber);

    let complex = |family: &str, m: usize| crate::config::SpecConfig {
        realness: crate::config::RealnessConfig::Circular,
        ..SpecConfig::real(family, m)
    };
    let mut sb = vec![CheckConfig::new(CheckKind::GaussianLocationCrb { tol: 1e-12 })
        .named("gaussian-location-crb/m=3")
        .spec(SpecConfig::real("gaussian", 3).with_sigma(&tridiag(3)))
        .n(500)];
    for (fam, m) in [("student(nu=3)", 1), ("student(nu=5)", 2), ("student(nu=2.5)", 4), ("gg(s=0.5)", 2), ("gg(s=2)", 3), ("gg(s=0.3)", 1)] {
        sb.push(
            CheckConfig::new(CheckKind::XiClosedForm { tol: 1e-6 })
                .named(&format!("xi-closed-form/{fam},m={m}"))
                .spec(complex(fam, m)),
        );
    }
    for (fam, m) in [("student(nu=4)", 2), ("gg(s=0.7)", 3), ("k(nu=2)", 2), ("gaussian", 1)] {
        sb.push(
            CheckConfig::new(CheckKind::XiBridge { tol: 1e-8 })
                .named(&format!("xi-bridge/{fam},m={m}"))
                .spec(complex(fam, m)),
        );
    }
    out.push(plan("slepian-bangs", "Gaussian location CRB and xi coefficients", 30.0, sb));

    let mut inv = Vec::new();
    for fam in ["gaussian", "student(nu=3)", "gg(s=0.5)", "k(nu=1.5)", "epscont(eps=0.1, a2=9)"] {
        inv.push(
            CheckConfig::new(CheckKind::ScaleAmbiguity { tol: 1e-12 })
                .named(&format!("scale-ambiguity/{fam}"))
                .spec(SpecConfig::real(fam, 3).with_sigma(&tridiag(3))),
        );
    }
    for (fam, m) in [("student(nu=5)", 2), ("gg(s=0.5)", 3), ("gaussian", 4), ("k(nu=3)", 2)] {
        inv.push(
            CheckConfig::new(CheckKind::Sigma2Bound { tol: 1e-10 })
                .named(&format!("sigma2-bound/{fam},m={m}"))
                .spec(SpecConfig::real(fam, m).with_sigma(&tridiag(m))),
        );
    }
    for (fam, kappa) in [("student(nu=10)", 1.0 / 3.0), ("k(nu=4)", 0.25)] {
        inv.push(
            CheckConfig::new(CheckKind::FourthMoment { kappa, se_mult: 5.0 })
                .named(&format!("fourth-moment/{fam}"))
                .spec(SpecConfig::real(fam, 2).with_sigma(&tridiag(2)))
                .n(1_000_000),
        );
    }
    for (fam, m, m1) in [("student(nu=3)", 4, 1), ("k(nu=2)", 3, 2), ("epscont(eps=0.2, a2=4)", 5, 2), ("gaussian", 3, 1)] {
        inv.push(
            CheckConfig::new(CheckKind::MarginalGenerator { m1, tol: 1e-6 })
                .named(&format!("marginal-generator/{fam},m={m},m1={m1}"))
                .spec(SpecConfig::real(fam, m)),
        );
    }
    for fam in ["student(nu=6)", "gg(s=0.5)"] {
        inv.push(
            CheckConfig::new(CheckKind::ConditionalRegression { split: 2, tol: 0.02 })
                .named(&format!("conditional-regression/{fam}"))
                .spec(SpecConfig::real(fam, 4).with_sigma(&ar1(4, 0.6)).with_mu(&[0.5, -1.0, 2.0, 0.0]))
                .n(1_000_000),
        );
    }
    inv.push(
        CheckConfig::new(CheckKind::NcPseudoCovariance { tol: 0.03 })
            .named("nc-pseudo-covariance/student nu=8")
            .spec(SpecConfig {
                realness: crate::config::RealnessConfig::Noncircular,
                sigma: Some(vec![vec![2.0, 0.3], vec![0.3, 1.0]]),
                sigma_im: Some(vec![vec![0.0, 0.2], vec![-0.2, 0.0]]),
                omega: Some(vec![vec![0.8, 0.1], vec![0.1, -0.3]]),
                omega_im: Some(vec![vec![0.4, 0.0], vec![0.0, 0.2]]),
                ..SpecConfig::real("student(nu=8)", 2)
            })
            .n(200_000),
    );
    out.push(plan("invariants", "Structural identities of the model", 300.0, inv));
    out
}

pub fn builtin_plan(name: &str) -> Option<ExperimentPlan> {
    builtin_plans().into_iter().find(|p| p.name == name)
}
