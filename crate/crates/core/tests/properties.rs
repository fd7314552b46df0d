use ellipsym_core::asymptotic::{
    crb, ml_asymptotics, scm_asymptotics, shape_asymptotics, slepian_bangs_fim, tyler_asymptotics,
    BuiltinKind, BuiltinModel,
};
use ellipsym_core::density::{pdf_complex, pdf_res};
use ellipsym_core::estimate::{fit, shape_normalize, EstimatorConfig, Method, ShapeScale, Weight};
use ellipsym_core::families::{Family, FamilyKernel, GgScale, Realness};
use ellipsym_core::matrix_kit::{
    commutation, duplication, mahalanobis, psd_sqrt, schur_conditional, vec, vecs_sym, StructuredCov,
    SymMatrix,
};
use ellipsym_core::sampler::sample;
use ellipsym_core::spec::{ComplexSpec, DistributionSpec, RealSpec};
use nalgebra::{DMatrix, DVector};
use num_complex::Complex;
use proptest::prelude::*;
use proptest::test_runner::RngSeed;

fn config(cases: u32) -> ProptestConfig {
    ProptestConfig {
        cases,
        rng_seed: RngSeed::Fixed(0x5eed),
        failure_persistence: None,
        ..ProptestConfig::default()
    }
}

fn matrix(r: usize, c: usize) -> impl Strategy<Value = DMatrix<f64>> {
    prop::collection::vec(-3.0..3.0f64, r * c).prop_map(move |v| DMatrix::from_vec(r, c, v))
}

fn spd(m: usize) -> impl Strategy<Value = SymMatrix<f64>> {
    matrix(m, m).prop_map(move |a| {
        let s = &a * a.transpose() + DMatrix::identity(m, m) * 0.5;
        SymMatrix::new(s).unwrap()
    })
}

fn family() -> impl Strategy<Value = Family<f64>> {
    prop_oneof![
        Just(Family::Gaussian),
        (2.5..30.0f64).prop_map(|nu| Family::StudentT { nu }),
        (0.3..3.0f64).prop_map(|s| Family::GeneralizedGaussian { s, b: GgScale::Cov }),
        (0.5..10.0f64).prop_map(|nu| Family::KDist { nu }),
        (0.05..0.5f64, 2.0..20.0f64).prop_map(|(eps, a2)| Family::EpsContaminated { eps, a2 }),
    ]
}

/// K with ν ≤ 1 has E[Qφ²] = ∞ for m ≥ 2.
fn family_finite_fisher() -> impl Strategy<Value = Family<f64>> {
    prop_oneof![
        Just(Family::Gaussian),
        (2.5..30.0f64).prop_map(|nu| Family::StudentT { nu }),
        (0.3..3.0f64).prop_map(|s| Family::GeneralizedGaussian { s, b: GgScale::Cov }),
        (1.5..10.0f64).prop_map(|nu| Family::KDist { nu }),
        (0.05..0.5f64, 2.0..20.0f64).prop_map(|(eps, a2)| Family::EpsContaminated { eps, a2 }),
    ]
}

proptest! {
    #![proptest_config(config(256))]

    #[test]
    fn commutation_transposes((r, c) in (1usize..=5, 1usize..=5), seed in any::<u64>()) {
        let m = DMatrix::from_fn(r, c, |i, j| ((seed >> ((i * c + j) % 60)) & 0xff) as f64 - 100.0);
        let k = commutation::<f64>(r, c).unwrap();
        prop_assert_eq!(k * vec(&m), vec(&m.transpose()));
    }

    #[test]
    fn duplication_rebuilds_vec(s in (1usize..=6).prop_flat_map(spd)) {
        let d = duplication::<f64>(s.dim()).unwrap();
        prop_assert_eq!(d * vecs_sym(&s), vec(s.matrix()));
    }

    #[test]
    fn psd_sqrt_reconstructs(s in (1usize..=5).prop_flat_map(spd)) {
        let a = psd_sqrt(&s).unwrap();
        let err = (&a * &a - s.matrix()).norm() / s.matrix().norm();
        prop_assert!(err < 1e-10);
    }

    #[test]
    fn mahalanobis_affine_invariance(
        s in spd(3),
        b in matrix(3, 3),
        x in prop::collection::vec(-3.0..3.0f64, 3),
        mu in prop::collection::vec(-3.0..3.0f64, 3),
        shift in prop::collection::vec(-3.0..3.0f64, 3),
    ) {
        let b = b + DMatrix::identity(3, 3) * 4.0;
        let (x, mu, shift) = (DVector::from_vec(x), DVector::from_vec(mu), DVector::from_vec(shift));
        let q = mahalanobis(&x, &mu, &s).unwrap();
        let s2 = SymMatrix::symmetrized(&b * s.matrix() * b.transpose());
        let q2 = mahalanobis(&(&b * &x + &shift), &(&b * &mu + &shift), &s2).unwrap();
        prop_assert!((q - q2).abs() <= 1e-9 * q.max(1.0));
    }

    #[test]
    fn structured_cov_psd(s in spd(3), sigma1 in 0.1..5.0f64, t in 0.0..4.0f64) {
        let sigma2 = -2.0 * sigma1 / 3.0 + t;
        let r = StructuredCov::new(sigma1, sigma2, s).unwrap().dense();
        prop_assert!((&r - r.transpose()).norm() < 1e-12 * r.norm());
        let lo = r.clone().symmetric_eigenvalues().min();
        prop_assert!(lo >= -1e-10 * r.norm());
    }

    #[test]
    fn scale_ambiguity(fam in family(), c in prop_oneof![Just(0.5), Just(2.0)], s in spd(2),
                       x in prop::collection::vec(-4.0..4.0f64, 2)) {
        let k = FamilyKernel::real(fam, 2).unwrap();
        let x = DVector::from_vec(x);
        let a = pdf_res(&RealSpec::centered(k, s.clone()).unwrap().into(), &x).unwrap();
        let k2 = k.rescaled(c * c);
        let b = pdf_res(&RealSpec::centered(k2, s.scaled(c * c)).unwrap().into(), &x).unwrap();
        prop_assert!((a.log_pdf - b.log_pdf).abs() < 1e-12 * a.log_pdf.abs().max(1.0));
    }

    #[test]
    fn complex_pdf_matches_composite(
        nu in 3.0..20.0f64,
        a in matrix(2, 2), b in matrix(2, 2),
        w in 0.0..0.9f64,
        x in prop::collection::vec(-2.0..2.0f64, 4),
    ) {
        let a = DMatrix::from_fn(2, 2, |i, j| Complex::new(a[(i, j)], b[(i, j)]))
            + DMatrix::identity(2, 2).map(|v: f64| Complex::new(6.0 * v, 0.0));
        let sigma = &a * a.adjoint();
        // Ω = A diag(w, w/2) Aᵀ keeps the pair feasible.
        let d = DMatrix::from_diagonal(&DVector::from_vec(vec![Complex::new(w, 0.0), Complex::new(w / 2.0, 0.0)]));
        let omega = &a * d * a.transpose();
        let k = FamilyKernel::new(Family::StudentT { nu }, 2, Realness::ComplexNoncircular).unwrap();
        let spec = ComplexSpec::new(k, DVector::zeros(2), sigma, Some(omega)).unwrap();
        let z = DVector::from_fn(2, |i, _| Complex::new(x[i], x[2 + i]));
        let comp: DistributionSpec<f64> = spec.real_composite().unwrap().into();
        let pc = pdf_complex(&spec.into(), &z).unwrap();
        let pr = pdf_res(&comp, &DVector::from_vec(x.clone())).unwrap();
        prop_assert!((pc.log_pdf - pr.log_pdf).abs() < 1e-12 * pr.log_pdf.abs().max(1.0), "{} {}", pc.log_pdf, pr.log_pdf);
    }

    #[test]
    fn schur_conditional_is_complement(s in spd(4), split in 1usize..4) {
        let blocks = schur_conditional(&s, split).unwrap();
        let a = s.matrix();
        let k = 4 - split;
        let s11 = a.view((0, 0), (split, split)).into_owned();
        let s21 = a.view((split, 0), (k, split)).into_owned();
        let s22 = a.view((split, split), (k, k)).into_owned();
        let want = s22 - &s21 * s11.try_inverse().unwrap() * s21.transpose();
        prop_assert!((blocks.s2_given_1.matrix() - want).norm() < 1e-10 * a.norm());
    }

    #[test]
    fn fim_is_psd(fam in family_finite_fisher(), s in spd(2), kind in prop::sample::select(BuiltinKind::ALL.to_vec())) {
        let k = FamilyKernel::real(fam, 2).unwrap();
        let model = BuiltinModel::real(kind, DVector::from_vec(vec![0.3, -0.2]), &s).unwrap();
        let f = slepian_bangs_fim(&model, &k, &model.default_alpha()).unwrap();
        let lo = f.clone().symmetric_eigenvalues().min();
        prop_assert!(lo >= -1e-10 * f.trace());
        prop_assert!(crb(&f, 10).is_ok());
    }

    #[test]
    fn sigma2_bound_holds(fam in family_finite_fisher(), s in spd(2)) {
        let k = FamilyKernel::real(fam, 2).unwrap();
        let ml = ml_asymptotics(&k, &s).unwrap();
        prop_assert!(ml.sigma2() >= -ml.sigma1() - 1e-10);
        if let Ok(scm) = scm_asymptotics(&k, &s) {
            prop_assert!(scm.sigma2() >= -scm.sigma1() - 1e-10);
        }
        let ty = tyler_asymptotics(2, &s).unwrap();
        prop_assert_eq!(ty.sigma2(), -ty.sigma1());
    }

    #[test]
    fn det_shape_covariance_is_scale_free(s in spd(3), c in 0.1..10.0f64) {
        let k = FamilyKernel::real(Family::StudentT { nu: 5.0 }, 3).unwrap();
        let base = ml_asymptotics(&k, &s).unwrap();
        let v1 = shape_normalize(&s, ShapeScale::Det1OverM).unwrap();
        let v2 = shape_normalize(&s.scaled(c), ShapeScale::Det1OverM).unwrap();
        let r1 = shape_asymptotics(&base, ShapeScale::Det1OverM, &v1).unwrap();
        let r2 = shape_asymptotics(&base, ShapeScale::Det1OverM, &v2).unwrap();
        prop_assert!((&r1 - &r2).norm() < 1e-9 * r1.norm());
        let t1 = tyler_asymptotics(3, &s).unwrap();
        let t2 = tyler_asymptotics(3, &s.scaled(c)).unwrap();
        prop_assert!((t1.dense() - t2.dense()).norm() < 1e-9 * t1.dense().norm());
    }
}

proptest! {
    #![proptest_config(config(12))]

    #[test]
    fn affine_equivariance_of_fits(b in matrix(2, 2), shift in prop::collection::vec(-3.0..3.0f64, 2), seed in 0u64..1000) {
        let b = b + DMatrix::identity(2, 2) * 4.0;
        let shift = DVector::from_vec(shift);
        let k = FamilyKernel::real(Family::StudentT { nu: 4.0 }, 2).unwrap();
        let spec: DistributionSpec<f64> = RealSpec::centered(k, SymMatrix::identity(2)).unwrap().into();
        let x = sample(&spec, 300, seed, 0).unwrap().data.real().unwrap().clone();
        let mut y = &x * b.transpose();
        for mut row in y.row_iter_mut() {
            row += shift.transpose();
        }
        let methods = [
            Method::Ml(k),
            Method::Maronna { u1: Weight::HuberLocation { k: 2.0 }, u2: Weight::huber(2, 0.9).unwrap() },
        ];
        for method in methods {
            let cfg = EstimatorConfig::new(method).with_tol(1e-13).with_max_iter(5000);
            let fx = fit(&x, &cfg).unwrap();
            let fy = fit(&y, &cfg).unwrap();
            let mu = &b * &fx.mu_hat + &shift;
            let sig = &b * fx.sigma_hat.matrix() * b.transpose();
            prop_assert!((&fy.mu_hat - &mu).norm() <= 1e-8 * mu.norm().max(1.0));
            prop_assert!((fy.sigma_hat.matrix() - &sig).norm() <= 1e-8 * sig.norm());
        }
    }
}
