use ellipsym_core::density::pdf_res;
use ellipsym_core::estimate::{fit, EstimatorConfig, Method, ShapeScale, Weight};
use ellipsym_core::families::{Family, FamilyKernel, GgScale};
use ellipsym_core::matrix_kit::{mahalanobis, SymMatrix};
use ellipsym_core::quadrature::{integrate_to_inf, QuadOptions};
use ellipsym_core::sampler::sample;
use ellipsym_core::spec::{DistributionSpec, RealSpec};
use nalgebra::{DMatrix, DVector};
use statrs::distribution::{ContinuousCDF, StudentsT};

fn families() -> Vec<Family<f64>> {
    vec![
        Family::Gaussian,
        Family::StudentT { nu: 3.0 },
        Family::StudentT { nu: 10.0 },
        Family::GeneralizedGaussian { s: 0.5, b: GgScale::Cov },
        Family::GeneralizedGaussian { s: 2.0, b: GgScale::Cov },
        Family::KDist { nu: 0.8 },
        Family::KDist { nu: 4.0 },
        Family::EpsContaminated { eps: 0.1, a2: 9.0 },
    ]
}

fn spd(m: usize) -> SymMatrix<f64> {
    let a = DMatrix::from_fn(m, m, |i, j| 0.5f64.powi((i as i32 - j as i32).abs()));
    let d = DMatrix::from_diagonal(&DVector::from_fn(m, |i, _| (1.0 + i as f64).sqrt()));
    SymMatrix::new(&d * a * &d).unwrap()
}

/// P(√n D > x) for the Kolmogorov distribution.
fn kolmogorov_sf(x: f64) -> f64 {
    if x < 0.2 {
        return 1.0;
    }
    let mut s = 0.0;
    for k in 1..200 {
        let k = k as f64;
        s += 2.0 * (-1f64).powf(k - 1.0) * (-2.0 * k * k * x * x).exp();
    }
    s.clamp(0.0, 1.0)
}

fn ks_pvalue(mut xs: Vec<f64>, cdf: impl Fn(f64) -> f64) -> f64 {
    xs.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let n = xs.len() as f64;
    let mut d: f64 = 0.0;
    for (i, &x) in xs.iter().enumerate() {
        let f = cdf(x);
        d = d.max(f - i as f64 / n).max((i + 1) as f64 / n - f);
    }
    let sn = n.sqrt();
    kolmogorov_sf((sn + 0.12 + 0.11 / sn) * d)
}

fn corr(a: &[f64], b: &[f64]) -> f64 {
    let n = a.len() as f64;
    let ma = a.iter().sum::<f64>() / n;
    let mb = b.iter().sum::<f64>() / n;
    let (mut sab, mut saa, mut sbb) = (0.0, 0.0, 0.0);
    for (x, y) in a.iter().zip(b) {
        sab += (x - ma) * (y - mb);
        saa += (x - ma) * (x - ma);
        sbb += (y - mb) * (y - mb);
    }
    sab / (saa * sbb).sqrt()
}

#[test]
fn mahalanobis_follows_q_law() {
    let n = 10_000;
    let mut stream = 0;
    for fam in families() {
        for m in [1, 2, 3, 5] {
            let k = FamilyKernel::real(fam, m).unwrap();
            let s = spd(m);
            let mu = DVector::from_fn(m, |i, _| i as f64 - 1.0);
            let spec: DistributionSpec<f64> = RealSpec::new(k, mu.clone(), s.clone()).unwrap().into();
            let x = sample(&spec, n, 2024, stream).unwrap().data.real().unwrap().clone();
            stream += 1;
            let q: Vec<f64> = x
                .row_iter()
                .map(|r| mahalanobis(&r.transpose(), &mu, &s).unwrap())
                .collect();
            let law = k.q_law();
            let p = ks_pvalue(q, |t| law.cdf(t));
            assert!(p > 0.01, "{fam} m={m}: p={p}");
        }
    }
}

#[test]
fn modular_variate_independent_of_direction() {
    let n = 20_000;
    let k = FamilyKernel::real(Family::StudentT { nu: 4.0 }, 3).unwrap();
    let spec: DistributionSpec<f64> = RealSpec::centered(k, SymMatrix::identity(3)).unwrap().into();
    let x = sample(&spec, n, 7, 0).unwrap().data.real().unwrap().clone();
    let q: Vec<f64> = x.row_iter().map(|r| r.norm_squared()).collect();
    for j in 0..3 {
        let u: Vec<f64> = x.row_iter().map(|r| r[j] / r.norm()).collect();
        assert!(corr(&q, &u).abs() < 4.0 / (n as f64).sqrt());
    }
}

#[test]
fn streams_are_uncorrelated() {
    let n = 20_000;
    let k = FamilyKernel::real(Family::Gaussian, 2).unwrap();
    let spec: DistributionSpec<f64> = RealSpec::centered(k, SymMatrix::identity(2)).unwrap().into();
    let a = sample(&spec, n, 99, 0).unwrap().data.real().unwrap().clone();
    let b = sample(&spec, n, 99, 1).unwrap().data.real().unwrap().clone();
    let c = sample(&spec, n, 99, 0).unwrap().data.real().unwrap().clone();
    assert_eq!(a, c);
    for i in 0..2 {
        for j in 0..2 {
            let r = corr(a.column(i).as_slice(), b.column(j).as_slice());
            assert!(r.abs() < 4.0 / (n as f64).sqrt());
        }
    }
}

#[test]
fn student_marginal_is_univariate_student() {
    let nu = 5.0;
    let k = FamilyKernel::real(Family::StudentT { nu }, 3).unwrap();
    let spec: DistributionSpec<f64> = RealSpec::centered(k, spd(3)).unwrap().into();
    let x = sample(&spec, 10_000, 31, 0).unwrap().data.real().unwrap().clone();
    // Under the covariance rule the scatter is Σ/λ with λ = ν/(ν−2).
    let scale = (spd(3).matrix()[(0, 0)] * (nu - 2.0) / nu).sqrt();
    let t = StudentsT::new(0.0, scale, nu).unwrap();
    let p = ks_pvalue(x.column(0).iter().copied().collect(), |v| t.cdf(v));
    assert!(p > 0.01, "p={p}");
}

#[test]
fn densities_integrate_to_one() {
    let opts = QuadOptions {
        rel_tol: 1e-9,
        abs_tol: 1e-13,
        max_subdivisions: 300,
    };
    for fam in families() {
        let k = FamilyKernel::real(fam, 1).unwrap();
        let spec: DistributionSpec<f64> = RealSpec::centered(k, SymMatrix::from_diagonal(&[2.0])).unwrap().into();
        let half = integrate_to_inf(
            |x| pdf_res(&spec, &DVector::from_element(1, x)).unwrap().pdf,
            0.0,
            opts,
        );
        assert!((2.0 * half.value - 1.0).abs() < 1e-4, "{fam} m=1: {}", 2.0 * half.value);

        let k = FamilyKernel::real(fam, 2).unwrap();
        let s = SymMatrix::from_row_slice(2, &[1.0, 0.3, 0.3, 0.5]).unwrap();
        let spec: DistributionSpec<f64> = RealSpec::centered(k, s).unwrap().into();
        let p = |a: f64, b: f64| pdf_res(&spec, &DVector::from_vec(vec![a, b])).unwrap().pdf;
        // Tensor grid over the four sign quadrants.
        let mut total = 0.0;
        for (sa, sb) in [(1.0, 1.0), (1.0, -1.0), (-1.0, 1.0), (-1.0, -1.0)] {
            let inner = |a: f64| integrate_to_inf(|b| p(sa * a, sb * b), 0.0, opts).value;
            total += integrate_to_inf(inner, 0.0, opts).value;
        }
        assert!((total - 1.0).abs() < 1e-4, "{fam} m=2: {total}");
    }
}

fn rel_err(a: &SymMatrix<f64>, b: &SymMatrix<f64>) -> f64 {
    (a.matrix() - b.matrix()).norm() / b.matrix().norm()
}

fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(|a, b| a.partial_cmp(b).unwrap());
    v[v.len() / 2]
}

#[test]
fn estimators_are_consistent() {
    let m = 3;
    let s = spd(m);
    let nu = 6.0;
    let k = FamilyKernel::real(Family::StudentT { nu }, m).unwrap();
    let spec: DistributionSpec<f64> = RealSpec::centered(k, s.clone()).unwrap().into();
    let huber = Weight::huber(m, 0.9).unwrap();
    let hscale = ellipsym_core::estimate::m_scale(&k, &huber).unwrap();
    let cov = s.scaled(k.q_law().mean().unwrap() / m as f64);
    let cases: Vec<(&str, EstimatorConfig<f64>, SymMatrix<f64>)> = vec![
        ("scm", EstimatorConfig::new(Method::SampleMoments), cov.clone()),
        ("ml", EstimatorConfig::new(Method::Ml(k)).centered(m), s.clone()),
        (
            "maronna",
            EstimatorConfig::new(Method::Maronna { u1: Weight::HuberLocation { k: 2.0 }, u2: huber }).centered(m),
            s.scaled(1.0 / hscale),
        ),
        (
            "tyler",
            EstimatorConfig::new(Method::Tyler).centered(m).with_shape(ShapeScale::TraceM),
            ellipsym_core::estimate::shape_normalize(&s, ShapeScale::TraceM).unwrap(),
        ),
    ];
    for (name, cfg, target) in cases {
        let mut meds = Vec::new();
        for n in [500, 1000, 2000, 4000] {
            let errs: Vec<f64> = (0..50)
                .map(|r| {
                    let x = sample(&spec, n, 11, (n * 100 + r) as u64).unwrap().data.real().unwrap().clone();
                    rel_err(&fit(&x, &cfg).unwrap().sigma_hat, &target)
                })
                .collect();
            meds.push(median(errs));
        }
        for w in meds.windows(2) {
            assert!(w[1] < w[0], "{name}: {meds:?}");
        }
    }
}

#[test]
fn tyler_residual_falls_below_tolerance() {
    for m in [2, 5, 10] {
        let n = 10 * m;
        let k = FamilyKernel::real(Family::StudentT { nu: 3.0 }, m).unwrap();
        let spec: DistributionSpec<f64> = RealSpec::centered(k, spd(m)).unwrap().into();
        let x = sample(&spec, n, 5, m as u64).unwrap().data.real().unwrap().clone();
        let cfg = EstimatorConfig::new(Method::Tyler).centered(m).with_tol(1e-10).with_max_iter(200);
        let r = fit(&x, &cfg).unwrap();
        assert!(r.converged && r.iterations <= 200);
        assert!(*r.residual_trace.last().unwrap() < 1e-10);
        let tail = &r.residual_trace[r.residual_trace.len() / 2..];
        assert!(tail.windows(2).all(|w| w[1] <= w[0] * 1.0001), "m={m}");
    }
}
