use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use ellipsym_core::asymptotic::{crb, slepian_bangs_fim, BuiltinKind, BuiltinModel};
use ellipsym_core::density::{pdf_complex, pdf_res};
use ellipsym_core::estimate::fit;
use ellipsym_core::sampler::{sample, SampleData};
use ellipsym_core::spec::{CVector, DistributionSpec};
use ellipsym_harness::config::{parse_matrix_arg, parse_vector_arg, matrix_to_rows, RealnessConfig};
use ellipsym_harness::csvio::{fmt_f64, Table};
use ellipsym_harness::plan::DEFAULT_SEED;
use ellipsym_harness::{builtin_plan, builtin_plans, run_plan, EstimatorSpec, ExperimentPlan, HarnessError, Result, SpecConfig};
use nalgebra::DMatrix;
use num_complex::Complex;

#[derive(Parser)]
#[command(name = "ellipsym", version, about = "Elliptical distributions: sampling, densities, estimation, bounds")]
struct Cli {
    /// Seed for every subcommand; plans fall back to their own seed, then to
    /// the built-in default.
    #[arg(long, global = true, env = "ELLIPSYM_SEED")]
    seed: Option<u64>,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Draw samples as CSV (complex columns come in re/im pairs).
    Sample {
        #[command(flatten)]
        dist: DistArgs,
        #[arg(short, long)]
        n: usize,
        #[arg(long, default_value_t = 0)]
        stream: u64,
        #[arg(short, long)]
        out: Option<PathBuf>,
    },
    /// Log-density and density of each row of a CSV file.
    Pdf {
        #[command(flatten)]
        dist: DistArgs,
        #[arg(short, long)]
        input: PathBuf,
        #[arg(short, long)]
        out: Option<PathBuf>,
    },
    /// Estimate location and scatter from a real CSV file.
    Fit {
        #[arg(short, long)]
        input: PathBuf,
        /// scm, ml, maronna or tyler.
        #[arg(long, default_value = "tyler")]
        method: String,
        /// Kernel for `ml` and for `ml` weights.
        #[arg(long)]
        family: Option<String>,
        #[arg(long)]
        u1: Option<String>,
        #[arg(long)]
        u2: Option<String>,
        /// Known center, e.g. "0,0,0".
        #[arg(long)]
        known_mu: Option<String>,
        /// none, trace, top-left or det.
        #[arg(long)]
        shape: Option<String>,
        #[arg(long)]
        tol: Option<f64>,
        #[arg(long)]
        max_iter: Option<usize>,
        #[arg(short, long)]
        out: Option<PathBuf>,
    },
    /// Cramér–Rao bound of a registered model at its nominal point.
    Crb {
        #[command(flatten)]
        dist: DistArgs,
        /// location-scalar, location-vector, scatter-full or scatter-scaled-identity.
        #[arg(long)]
        model: String,
        #[arg(short, long)]
        n: usize,
        #[arg(short, long)]
        out: Option<PathBuf>,
    },
    /// Run a registered plan (or a JSON plan file, or `all`).
    Verify {
        plan: String,
        /// Directory for `<plan>.csv` and `<plan>.txt` reports.
        #[arg(long)]
        out_dir: Option<PathBuf>,
    },
    /// List registered plans.
    ListPlans {
        /// Print each plan as JSON.
        #[arg(long)]
        json: bool,
    },
}

#[derive(Args)]
struct DistArgs {
    /// JSON distribution file; overrides the flags below.
    #[arg(long)]
    spec: Option<PathBuf>,
    #[arg(long, default_value = "gaussian")]
    family: String,
    #[arg(long, default_value_t = 2)]
    dim: usize,
    /// real, circular or noncircular.
    #[arg(long, default_value = "real")]
    realness: String,
    /// Center, e.g. "1,2".
    #[arg(long)]
    mu: Option<String>,
    /// Scatter, rows separated by `;`, e.g. "1,0.5;0.5,2".
    #[arg(long)]
    sigma: Option<String>,
    /// Complementary scatter (real part) for noncircular laws.
    #[arg(long)]
    omega: Option<String>,
}

impl DistArgs {
    fn config(&self) -> Result<SpecConfig> {
        if let Some(path) = &self.spec {
            let text = std::fs::read_to_string(path).map_err(|e| HarnessError::io(path.display().to_string(), e))?;
            return serde_json::from_str(&text).map_err(|e| HarnessError::Config(e.to_string()));
        }
        let realness = match self.realness.as_str() {
            "real" => RealnessConfig::Real,
            "circular" => RealnessConfig::Circular,
            "noncircular" => RealnessConfig::Noncircular,
            other => return Err(HarnessError::Config(format!("unknown realness `{other}`"))),
        };
        Ok(SpecConfig {
            realness,
            mu: self.mu.as_deref().map(parse_vector_arg).transpose()?,
            sigma: self.sigma.as_deref().map(|s| parse_matrix_arg(s).map(|m| matrix_to_rows(&m))).transpose()?,
            omega: self.omega.as_deref().map(|s| parse_matrix_arg(s).map(|m| matrix_to_rows(&m))).transpose()?,
            ..SpecConfig::real(&self.family, self.dim)
        })
    }
}

fn emit(table: &Table, out: &Option<PathBuf>) -> Result<()> {
    match out {
        Some(p) => table.write_file(p),
        None => table.write_to(std::io::stdout().lock()),
    }
}

fn complex_rows(z: &DMatrix<Complex<f64>>) -> DMatrix<f64> {
    DMatrix::from_fn(z.nrows(), 2 * z.ncols(), |i, j| {
        let v = z[(i, j / 2)];
        if j % 2 == 0 { v.re } else { v.im }
    })
}

fn complex_header(m: usize) -> Vec<String> {
    (1..=m).flat_map(|j| [format!("re{j}"), format!("im{j}")]).collect()
}

fn cmd_sample(dist: &DistArgs, n: usize, seed: u64, stream: u64, out: &Option<PathBuf>) -> Result<()> {
    let cfg = dist.config()?;
    let spec = cfg.build()?;
    let batch = sample(&spec, n, seed, stream)?;
    let mut table = match &batch.data {
        SampleData::Real(x) => Table::from_matrix("x", x),
        SampleData::Complex(z) => {
            let mut t = Table::from_matrix("x", &complex_rows(z));
            t.header = complex_header(z.ncols());
            t
        }
    };
    table.metadata = vec![
        ("family".into(), spec.kernel().to_string()),
        ("seed".into(), seed.to_string()),
        ("stream".into(), stream.to_string()),
    ];
    emit(&table, out)
}

fn cmd_pdf(dist: &DistArgs, input: &Path, out: &Option<PathBuf>) -> Result<()> {
    let spec = dist.config()?.build()?;
    let data = Table::read_file(input)?.to_matrix()?;
    let mut table = Table::new(vec!["log_pdf".into(), "pdf".into()]).meta("family", spec.kernel());
    for row in data.row_iter() {
        let v = match &spec {
            DistributionSpec::Real(_) => pdf_res(&spec, &row.transpose())?,
            DistributionSpec::Complex(_) => {
                if row.len() % 2 != 0 {
                    return Err(HarnessError::Config("complex rows need re/im column pairs".into()));
                }
                let z = CVector::from_fn(row.len() / 2, |i, _| Complex::new(row[2 * i], row[2 * i + 1]));
                pdf_complex(&spec, &z)?
            }
        };
        table.push(vec![fmt_f64(v.log_pdf), fmt_f64(v.pdf)]);
    }
    emit(&table, out)
}

#[allow(clippy::too_many_arguments)]
fn cmd_fit(
    input: &Path,
    method: &str,
    family: &Option<String>,
    u1: &Option<String>,
    u2: &Option<String>,
    known_mu: &Option<String>,
    shape: &Option<String>,
    tol: Option<f64>,
    max_iter: Option<usize>,
    out: &Option<PathBuf>,
) -> Result<()> {
    let data = Table::read_file(input)?.to_matrix()?;
    let m = data.ncols();
    let est = EstimatorSpec {
        method: method.to_string(),
        family: family.clone(),
        u1: u1.clone(),
        u2: u2.clone(),
        known_mu: known_mu.as_deref().map(parse_vector_arg).transpose()?,
        shape: shape.clone(),
        tol,
        max_iter,
    };
    let cfg = est.build(m, None)?;
    let r = fit(&data, &cfg)?;
    let mut header = vec!["mu".to_string()];
    header.extend((1..=m).map(|j| format!("sigma{j}")));
    let mut table = Table::new(header)
        .meta("method", method)
        .meta("n", data.nrows())
        .meta("iterations", r.iterations)
        .meta("converged", r.converged)
        .meta("shape", r.scale_constraint_applied);
    for i in 0..m {
        let mut row = vec![fmt_f64(r.mu_hat[i])];
        row.extend(r.sigma_hat.matrix().row(i).iter().map(|v| fmt_f64(*v)));
        table.push(row);
    }
    for d in &r.diagnostics {
        table.metadata.push(("diagnostic".into(), format!("{d:?}")));
    }
    emit(&table, out)
}

fn cmd_crb(dist: &DistArgs, model: &str, n: usize, out: &Option<PathBuf>) -> Result<()> {
    let spec = dist.config()?.build()?;
    let kind = BuiltinKind::from_name(model)?;
    let kernel = *spec.kernel();
    let model = match &spec {
        DistributionSpec::Real(s) => BuiltinModel::real(kind, s.mu.clone(), &s.sigma)?,
        DistributionSpec::Complex(s) => BuiltinModel::complex(kind, s.mu.clone(), s.sigma.clone(), s.omega.clone())?,
    };
    let alpha = model.default_alpha();
    let fim = slepian_bangs_fim(&model, &kernel, &alpha)?;
    let bound = crb(&fim, n)?;
    let mut t = Table::from_matrix("c", &bound)
        .meta("model", kind.name())
        .meta("family", kernel)
        .meta("n", n);
    t.metadata.push((
        "alpha".into(),
        alpha.iter().map(|v| fmt_f64(*v)).collect::<Vec<_>>().join(" "),
    ));
    emit(&t, out)
}

fn cmd_verify(name: &str, seed: Option<u64>, out_dir: &Option<PathBuf>) -> Result<bool> {
    let plans: Vec<ExperimentPlan> = if name == "all" {
        builtin_plans()
    } else if let Some(p) = builtin_plan(name) {
        vec![p]
    } else if Path::new(name).exists() {
        vec![ExperimentPlan::from_file(Path::new(name))?]
    } else {
        return Err(HarnessError::Plan(format!("no plan or file named `{name}`")));
    };
    let mut ok = true;
    for p in &plans {
        let outcome = run_plan(p, seed, out_dir.as_deref())?;
        print!("{}", outcome.summary());
        let _ = std::io::stdout().flush();
        ok &= outcome.all_pass();
    }
    Ok(ok)
}

fn run(cli: Cli) -> Result<bool> {
    let seed = cli.seed;
    match &cli.cmd {
        Cmd::Sample { dist, n, stream, out } => cmd_sample(dist, *n, seed.unwrap_or(DEFAULT_SEED), *stream, out)?,
        Cmd::Pdf { dist, input, out } => cmd_pdf(dist, input, out)?,
        Cmd::Fit {
            input,
            method,
            family,
            u1,
            u2,
            known_mu,
            shape,
            tol,
            max_iter,
            out,
        } => cmd_fit(input, method, family, u1, u2, known_mu, shape, *tol, *max_iter, out)?,
        Cmd::Crb { dist, model, n, out } => cmd_crb(dist, model, *n, out)?,
        Cmd::Verify { plan, out_dir } => return cmd_verify(plan, seed, out_dir),
        Cmd::ListPlans { json } => {
            for p in builtin_plans() {
                if *json {
                    println!("{}", p.to_json());
                } else {
                    println!("{:<26} {}", p.name, p.description);
                }
            }
        }
    }
    Ok(true)
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
