use super::*;
use crate::special::gamma;
use std::f64::consts::PI;

fn real(f: Family<f64>, m: usize) -> FamilyKernel<f64> {
    FamilyKernel::<f64>::real(f, m).unwrap()
}

fn raw(f: Family<f64>, m: usize) -> FamilyKernel<f64> {
    FamilyKernel::raw(f, m, Realness::Real).unwrap()
}

fn all_families() -> Vec<Family<f64>> {
    vec![
        Family::Gaussian,
        Family::StudentT { nu: 3.0 },
        Family::StudentT { nu: 1.0 },
        Family::GeneralizedGaussian { s: 0.5, b: GgScale::Cov },
        Family::GeneralizedGaussian { s: 2.0, b: GgScale::Value(1.3) },
        Family::KDist { nu: 0.7 },
        Family::KDist { nu: 4.0 },
        Family::EpsContaminated { eps: 0.1, a2: 9.0 },
    ]
}

#[test]
fn gaussian_generator_values() {
    let k = real(Family::Gaussian, 2);
    assert!((k.density_generator(0.0) - 1.0 / (2.0 * PI)).abs() < 1e-15);
    let k = real(Family::Gaussian, 1);
    let want = (2.0 * PI).powf(-0.5) * (-0.5f64).exp();
    assert!((k.density_generator(1.0) - want).abs() < 1e-15);
}

#[test]
fn generator_normalization() {
    for fam in all_families() {
        for m in [1usize, 2, 3, 5, 8] {
            let k = real(fam, m);
            let half = m as f64 / 2.0;
            // ∫ t^{m/2−1} g(t) dt with t = r²
            let h = |r: f64| if r <= 0.0 { 0.0 } else { 2.0 * r.powf(m as f64 - 1.0) * k.density_generator(r * r) };
            let opts = quad_opts();
            let s = (m as f64).sqrt();
            let v = integrate(h, 0.0, s, opts).value + integrate_to_inf(h, s, opts).value;
            let want = gamma(half) / PI.powf(half);
            assert!(((v - want) / want).abs() < 1e-6, "{fam} m={m}: {v} vs {want}");
        }
    }
}

#[test]
fn phi_matches_finite_difference() {
    for fam in all_families() {
        for m in [1usize, 3] {
            let k = real(fam, m);
            for i in 0..25 {
                let t = 10f64.powf(-2.0 + 0.2 * i as f64);
                let h = 1e-5 * t;
                let d = (k.ln_density_generator(t + h) - k.ln_density_generator(t - h)) / (2.0 * h);
                let phi = k.score_phi(t);
                assert!(
                    (phi + 2.0 * d).abs() < 1e-6 * phi.abs().max(1.0),
                    "{fam} m={m} t={t}: {phi} vs {}",
                    -2.0 * d
                );
            }
        }
    }
}

#[test]
fn student_phi_closed_form() {
    let k = raw(Family::StudentT { nu: 5.0 }, 3);
    for &t in &[0.0, 0.3, 4.0, 100.0] {
        assert!((k.score_phi(t) - 8.0 / (5.0 + t)).abs() < 1e-14);
    }
    let gg = real(Family::GeneralizedGaussian { s: 1.0, b: GgScale::Cov }, 4);
    assert!((gg.score_phi(2.7) - 1.0).abs() < 1e-12);
}

#[test]
fn k_generator_equals_texture_mixture() {
    for &nu in &[1.0, 0.6, 3.5] {
        let k = real(Family::KDist { nu }, 2);
        let tex = k.texture_law().unwrap();
        for &t in &[0.05, 0.5, 1.0, 3.0, 12.0] {
            let mix = tex
                .expect(|tau| (2.0 * PI * tau).powi(-1) * (-t / (2.0 * tau)).exp())
                .unwrap();
            let g = k.density_generator(t);
            assert!(((mix - g) / g).abs() < 1e-6, "nu={nu} t={t}: {mix} vs {g}");
        }
    }
}

#[test]
fn student_generator_equals_texture_mixture() {
    let k = real(Family::StudentT { nu: 4.0 }, 3);
    let tex = k.texture_law().unwrap();
    for &t in &[0.0, 0.2, 2.0, 30.0] {
        let mix = tex
            .expect(|tau| (2.0 * PI * tau).powf(-1.5) * (-t / (2.0 * tau)).exp())
            .unwrap();
        let g = k.density_generator(t);
        assert!(((mix - g) / g).abs() < 1e-6);
    }
}

#[test]
fn q_law_closed_forms() {
    assert_eq!(real(Family::Gaussian, 3).q_law().kind(), QLawKind::ChiSquared { dof: 3.0 });
    assert_eq!(
        raw(Family::StudentT { nu: 5.0 }, 2).q_law().kind(),
        QLawKind::ScaledF { d1: 2.0, d2: 5.0 }
    );
    let gg = raw(Family::GeneralizedGaussian { s: 0.5, b: GgScale::Cov }, 2);
    let b = gg.gg_b().unwrap();
    match gg.q_law().kind() {
        QLawKind::PowerGamma { s, shape, scale } => {
            assert_eq!(s, 0.5);
            assert!((shape - 2.0).abs() < 1e-15);
            assert!((scale - 2f64.sqrt() * b).abs() < 1e-14);
        }
        other => panic!("{other:?}"),
    }
}

#[test]
fn q_law_pdf_integrates_and_matches_cdf() {
    for fam in all_families() {
        for m in [1usize, 2, 5] {
            let law = real(fam, m).q_law();
            let total = law.expect(|_| 1.0).unwrap();
            assert!((total - 1.0).abs() < 1e-8, "{fam} m={m}: {total}");
            for &q in &[0.3, 1.0, 4.0] {
                let h = |x: f64| law.pdf(x);
                let c = integrate(h, 0.0, q, quad_opts()).value;
                assert!((c - law.cdf(q)).abs() < 1e-6, "{fam} m={m} q={q}");
            }
        }
    }
}

#[test]
fn kurtosis_values() {
    assert!((real(Family::StudentT { nu: 10.0 }, 2).kurtosis().value().unwrap() - 1.0 / 3.0).abs() < 1e-12);
    assert!((real(Family::KDist { nu: 4.0 }, 3).kurtosis().value().unwrap() - 0.25).abs() < 1e-12);
    let gg = real(Family::GeneralizedGaussian { s: 1.0, b: GgScale::Cov }, 1);
    assert!(gg.kurtosis().value().unwrap().abs() < 1e-12);
    assert_eq!(real(Family::StudentT { nu: 4.0 }, 2).kurtosis(), Kurtosis::Infinite);
    assert_eq!(real(Family::Gaussian, 5).kurtosis(), Kurtosis::Finite(0.0));
}

#[test]
fn kurtosis_lower_bound() {
    for s in [0.3, 1.0, 2.0, 5.0, 20.0] {
        for m in [1usize, 2, 5] {
            let k = real(Family::GeneralizedGaussian { s, b: GgScale::Cov }, m);
            let kappa = k.kurtosis().value().unwrap();
            assert!(kappa >= -2.0 / (m as f64 + 2.0) - 1e-12);
        }
    }
}

#[test]
fn texture_examples() {
    let g = real(Family::Gaussian, 2).texture_law().unwrap();
    assert_eq!(g.kind, TextureKind::Degenerate);
    assert_eq!(g.mean(), Some(1.0));
    let k = real(Family::KDist { nu: 2.0 }, 2).texture_law_half().unwrap();
    assert!((k.mean().unwrap() - 0.5).abs() < 1e-15);
    assert_eq!(k.convention, TextureConvention::HalfMean);
    // 2ν^ν/Γ(ν)·(2τ)^{ν−1}e^{−2ντ}
    for &t in &[0.1, 0.5, 1.3] {
        let want = 2.0 * 4.0 / gamma(2.0_f64) * (2.0 * t) * (-4.0 * t).exp();
        assert!((k.pdf(t).unwrap() - want).abs() < 1e-12);
    }
    let e = raw(Family::EpsContaminated { eps: 0.1, a2: 9.0 }, 2).texture_law().unwrap();
    assert!((e.mean().unwrap() - 1.8).abs() < 1e-14);
    assert!(real(Family::GeneralizedGaussian { s: 2.0, b: GgScale::Cov }, 2).texture_law().is_none());
    let st = raw(Family::StudentT { nu: 6.0 }, 2).texture_law().unwrap();
    assert!((st.mean().unwrap() - 1.5).abs() < 1e-13);
    let stc = real(Family::StudentT { nu: 6.0 }, 2).texture_law().unwrap();
    assert!((stc.mean().unwrap() - 1.0).abs() < 1e-13);
}

#[test]
fn texture_kurtosis_equals_kernel_kurtosis() {
    for fam in [Family::StudentT { nu: 9.0 }, Family::KDist { nu: 1.5 }, Family::EpsContaminated { eps: 0.2, a2: 4.0 }] {
        let k = real(fam, 3);
        let a = k.kurtosis().value().unwrap();
        let b = k.texture_law().unwrap().kurtosis().unwrap();
        assert!((a - b).abs() < 1e-12, "{fam}");
    }
}

#[test]
fn sb_xi_examples() {
    let g = real(Family::Gaussian, 3).sb_xi().unwrap();
    assert_eq!((g.xi1, g.xi2), (1.0, 1.0));
    let st = FamilyKernel::<f64>::new(Family::StudentT { nu: 6.0 }, 2, Realness::ComplexCircular).unwrap();
    assert!((st.sb_xi().unwrap().xi2 - 5.0 / 6.0).abs() < 1e-14);
    let gg = FamilyKernel::<f64>::new(Family::GeneralizedGaussian { s: 2.0, b: GgScale::Cov }, 3, Realness::ComplexCircular).unwrap();
    assert!((gg.sb_xi().unwrap().xi2 - 1.25).abs() < 1e-14);
}

#[test]
fn sb_xi_quadrature_matches_closed_forms() {
    let fams = [
        Family::Gaussian,
        Family::StudentT { nu: 3.0 },
        Family::StudentT { nu: 6.0 },
        Family::GeneralizedGaussian { s: 0.5, b: GgScale::Cov },
        Family::GeneralizedGaussian { s: 3.0, b: GgScale::Value(0.7) },
    ];
    for fam in fams {
        for m in [1usize, 2, 4] {
            for realness in [Realness::Real, Realness::ComplexCircular] {
                let k = FamilyKernel::<f64>::new(fam, m, realness).unwrap();
                let c = k.sb_xi_closed_form().unwrap();
                let q = k.sb_xi_quadrature().unwrap();
                assert!(((c.xi1 - q.xi1) / c.xi1).abs() < 1e-8, "{fam} m={m} {realness:?}");
                assert!(((c.xi2 - q.xi2) / c.xi2).abs() < 1e-8, "{fam} m={m} {realness:?}");
            }
        }
    }
}

#[test]
fn xi2_is_scale_free_xi1_is_not() {
    let k = raw(Family::KDist { nu: 2.0 }, 2);
    let a = k.sb_xi().unwrap();
    let b = k.rescaled(3.0).sb_xi().unwrap();
    assert!((a.xi2 - b.xi2).abs() < 1e-8);
    assert!((b.xi1 / a.xi1 - 3.0).abs() < 1e-8);
}

#[test]
fn scale_normalize_examples() {
    let g = raw(Family::Gaussian, 3);
    assert_eq!(g.scale_normalize().unwrap().scale(), 1.0);
    let st = raw(Family::StudentT { nu: 5.0 }, 2).scale_normalize().unwrap();
    assert!((st.scale() - 5.0 / 3.0).abs() < 1e-14);
    assert!((st.q_law().mean().unwrap() - 2.0).abs() < 1e-13);
    assert_eq!(st.scale_normalize().unwrap(), st);
    let cauchy = raw(Family::StudentT { nu: 1.0 }, 2).scale_normalize().unwrap();
    assert_eq!(cauchy.applied_rule(), ScaleRule::Median);
    // median of m·F(m,1) from the cdf I_{q/(q+1)}(1, 1/2) = 1 − (1+q)^{-1/2} at m = 2
    let want = 3.0;
    assert!((cauchy.scale() - want).abs() < 1e-8);
    assert!((cauchy.q_law().median().unwrap() - 1.0).abs() < 1e-8);
}

#[test]
fn complex_generator_mapping() {
    let kc = FamilyKernel::<f64>::new(Family::Gaussian, 1, Realness::ComplexCircular).unwrap();
    assert!((kc.density_generator(0.0) - 1.0 / PI).abs() < 1e-15);
    assert!((kc.density_generator(0.7) - (-0.7f64).exp() / PI).abs() < 1e-15);
    let kc = FamilyKernel::<f64>::new(Family::StudentT { nu: 5.0 }, 2, Realness::ComplexCircular).unwrap();
    let kr = FamilyKernel::<f64>::new(Family::StudentT { nu: 5.0 }, 4, Realness::Real).unwrap();
    for &t in &[0.0, 0.4, 3.0] {
        assert!((kc.density_generator(t) - 4.0 * kr.density_generator(2.0 * t)).abs() < 1e-15);
        assert!((kc.score_phi(t) - kr.score_phi(2.0 * t)).abs() < 1e-15);
    }
    assert!((kc.q_law().mean().unwrap() - 2.0).abs() < 1e-12);
}

#[test]
fn invalid_parameters() {
    assert!(FamilyKernel::<f64>::real(Family::StudentT { nu: 0.0 }, 2).is_err());
    assert!(FamilyKernel::<f64>::real(Family::KDist { nu: -1.0 }, 2).is_err());
    assert!(FamilyKernel::<f64>::real(Family::EpsContaminated { eps: 1.0, a2: 2.0 }, 2).is_err());
    assert!(FamilyKernel::<f64>::real(Family::GeneralizedGaussian { s: 0.0, b: GgScale::Cov }, 2).is_err());
    assert!(FamilyKernel::<f64>::real(Family::Gaussian, 0).is_err());
}

#[test]
fn f32_kernel_evaluates() {
    let k = FamilyKernel::<f32>::real(Family::StudentT { nu: 4.0 }, 2).unwrap();
    let v = k.density_generator(1.0);
    let k64 = FamilyKernel::<f64>::real(Family::StudentT { nu: 4.0 }, 2).unwrap();
    assert!((v as f64 - k64.density_generator(1.0)).abs() < 1e-6);
}
