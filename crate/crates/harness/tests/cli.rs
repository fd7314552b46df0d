use std::path::Path;
use std::process::{Command, Output};

use ellipsym_core::density::pdf_res;
use ellipsym_core::families::{Family, FamilyKernel};
use ellipsym_core::matrix_kit::SymMatrix;
use ellipsym_core::spec::RealSpec;
use ellipsym_harness::csvio::Table;
use nalgebra::{DMatrix, DVector};

fn ellipsym(args: &[&str], seed: Option<&str>) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_ellipsym"));
    cmd.args(args).env_remove("ELLIPSYM_SEED");
    if let Some(s) = seed {
        cmd.env("ELLIPSYM_SEED", s);
    }
    cmd.output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    assert!(o.status.success(), "stderr: {}", String::from_utf8_lossy(&o.stderr));
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn path(p: &Path) -> &str {
    p.to_str().unwrap()
}

const SIGMA: &str = "2,0.5,0;0.5,1,0.2;0,0.2,1.5";

#[test]
fn sample_is_seeded_by_env_and_flag() {
    let args = ["sample", "--family", "student(nu=4)", "--dim", "3", "--sigma", SIGMA, "-n", "50"];
    let a = stdout(&ellipsym(&args, Some("11")));
    let b = stdout(&ellipsym(&args, Some("11")));
    let c = stdout(&ellipsym(&args, Some("12")));
    assert_eq!(a, b);
    assert_ne!(a, c);
    let mut flagged = args.to_vec();
    flagged.extend(["--seed", "11"]);
    assert_eq!(stdout(&ellipsym(&flagged, Some("99"))), a);

    let t = Table::parse(&a).unwrap();
    assert_eq!(t.metadata_value("seed"), Some("11"));
    assert_eq!(t.header, ["x1", "x2", "x3"]);
    assert_eq!(t.to_matrix().unwrap().shape(), (50, 3));
}

#[test]
fn complex_samples_use_re_im_pairs() {
    let out = stdout(&ellipsym(
        &["sample", "--family", "gaussian", "--dim", "2", "--realness", "circular", "-n", "5"],
        None,
    ));
    let t = Table::parse(&out).unwrap();
    assert_eq!(t.header, ["re1", "im1", "re2", "im2"]);
}

#[test]
fn pdf_matches_library() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("x.csv");
    stdout(&ellipsym(
        &["sample", "--family", "k(nu=2)", "--dim", "3", "--sigma", SIGMA, "-n", "20", "-o", path(&data)],
        None,
    ));
    let out = stdout(&ellipsym(
        &["pdf", "--family", "k(nu=2)", "--dim", "3", "--sigma", SIGMA, "-i", path(&data)],
        None,
    ));
    let x = Table::read_file(&data).unwrap().to_matrix().unwrap();
    let got = Table::parse(&out).unwrap().to_matrix().unwrap();
    let sigma = SymMatrix::new(ellipsym_harness::config::parse_matrix_arg(SIGMA).unwrap()).unwrap();
    let k = FamilyKernel::real(Family::KDist { nu: 2.0 }, 3).unwrap();
    let spec = RealSpec::centered(k, sigma).unwrap().into();
    for (i, row) in x.row_iter().enumerate() {
        let want = pdf_res(&spec, &row.transpose()).unwrap();
        assert_eq!(got[(i, 0)], want.log_pdf);
    }
}

#[test]
fn fit_reports_mu_and_sigma() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("x.csv");
    stdout(&ellipsym(
        &["sample", "--family", "gaussian", "--dim", "3", "--sigma", SIGMA, "--mu", "1,2,3", "-n", "400", "-o", path(&data)],
        None,
    ));
    let out = stdout(&ellipsym(&["fit", "-i", path(&data), "--method", "ml", "--family", "gaussian"], None));
    let t = Table::parse(&out).unwrap();
    assert_eq!(t.metadata_value("converged"), Some("true"));
    let m = t.to_matrix().unwrap();
    let x = Table::read_file(&data).unwrap().to_matrix().unwrap();
    let mean = DVector::from_fn(3, |j, _| x.column(j).mean());
    assert!((m.column(0) - mean).amax() < 1e-12);

    let out = stdout(&ellipsym(
        &["fit", "-i", path(&data), "--method", "tyler", "--known-mu", "1,2,3", "--shape", "det"],
        None,
    ));
    let s = Table::parse(&out).unwrap().to_matrix().unwrap().columns(1, 3).into_owned();
    assert!((s.determinant() - 1.0).abs() < 1e-9);
}

#[test]
fn crb_of_gaussian_location_is_sigma_over_n() {
    let out = stdout(&ellipsym(
        &["crb", "--family", "gaussian", "--dim", "3", "--sigma", SIGMA, "--model", "location-vector", "-n", "10"],
        None,
    ));
    let c = Table::parse(&out).unwrap().to_matrix().unwrap();
    let want = ellipsym_harness::config::parse_matrix_arg(SIGMA).unwrap() / 10.0;
    assert!((c - want).amax() < 1e-14);
}

#[test]
fn verify_exit_codes() {
    let ok = ellipsym(&["verify", "ml-gaussian-closed-form"], None);
    assert_eq!(ok.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&ok.stdout).contains("1/1 passed"));

    let dir = tempfile::tempdir().unwrap();
    let plan = dir.path().join("bad.json");
    std::fs::write(
        &plan,
        r#"{"name":"bad","checks":[{"check":"kurtosis","expected":0.0,
            "spec":{"family":"student(nu=5)","dim":1},"n":100000}]}"#,
    )
    .unwrap();
    let bad = ellipsym(&["verify", path(&plan), "--out-dir", path(dir.path())], None);
    assert_eq!(bad.status.code(), Some(1));
    let report = Table::read_file(&dir.path().join("bad.csv")).unwrap();
    assert_eq!(report.rows[0][4], "false");

    assert_eq!(ellipsym(&["verify", "no-such-plan"], None).status.code(), Some(2));
}

#[test]
fn list_plans_names_every_plan() {
    let out = stdout(&ellipsym(&["list-plans"], None));
    for p in ellipsym_harness::builtin_plans() {
        assert!(out.contains(&p.name));
    }
}

#[test]
fn malformed_input_is_an_error() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("x.csv");
    std::fs::write(&data, "# note: ragged\na,b\n1,2\n3\n").unwrap();
    let o = ellipsym(&["fit", "-i", path(&data)], None);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("row 2"));
    let _ = DMatrix::<f64>::zeros(1, 1);
}
