//! Kolmogorov–Smirnov goodness-of-fit tests with asymptotic p-values.

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KsResult {
    pub statistic: f64,
    pub p_value: f64,
    pub n: usize,
}

impl KsResult {
    /// Critical value of the statistic at `level`.
    pub fn critical_value(&self, level: f64) -> f64 {
        ks_critical_value(self.n as f64, level)
    }
}

/// P(K > x) for the limiting Kolmogorov distribution.
pub fn kolmogorov_sf(x: f64) -> f64 {
    if x <= 0.0 {
        return 1.0;
    }
    if x < 1.0 {
        // Jacobi form converges quickly for small x.
        let t = -std::f64::consts::PI.powi(2) / (8.0 * x * x);
        let mut s = 0.0;
        for k in 0..50 {
            let j = (2 * k + 1) as f64;
            s += (t * j * j).exp();
        }
        let cdf = (2.0 * std::f64::consts::PI).sqrt() / x * s;
        return (1.0 - cdf).clamp(0.0, 1.0);
    }
    let mut s = 0.0;
    for k in 1..100 {
        let k = k as f64;
        let term = (-2.0 * k * k * x * x).exp();
        s += if k as usize % 2 == 1 { term } else { -term };
        if term < 1e-300 {
            break;
        }
    }
    (2.0 * s).clamp(0.0, 1.0)
}

/// Effective argument with the small-sample correction √n + 0.12 + 0.11/√n.
fn scaled(n: f64, d: f64) -> f64 {
    let sn = n.sqrt();
    (sn + 0.12 + 0.11 / sn) * d
}

/// Smallest D whose asymptotic p-value is at most `level`.
pub fn ks_critical_value(n: f64, level: f64) -> f64 {
    let (mut lo, mut hi) = (0.0, 1.0);
    for _ in 0..100 {
        let mid = 0.5 * (lo + hi);
        if kolmogorov_sf(scaled(n, mid)) > level {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    hi
}

/// One-sample test of `samples` against a continuous cdf.
pub fn ks_test(samples: &[f64], cdf: impl Fn(f64) -> f64) -> KsResult {
    let mut xs: Vec<f64> = samples.to_vec();
    xs.sort_by(|a, b| a.total_cmp(b));
    let n = xs.len();
    let nf = n as f64;
    let mut d: f64 = 0.0;
    for (i, &x) in xs.iter().enumerate() {
        let f = cdf(x);
        d = d.max(f - i as f64 / nf).max((i + 1) as f64 / nf - f);
    }
    KsResult {
        statistic: d,
        p_value: kolmogorov_sf(scaled(nf, d)),
        n,
    }
}

/// Two-sample test; `n` in the result is the effective size n₁n₂/(n₁+n₂).
pub fn ks_two_sample(a: &[f64], b: &[f64]) -> KsResult {
    let mut xa = a.to_vec();
    let mut xb = b.to_vec();
    xa.sort_by(|p, q| p.total_cmp(q));
    xb.sort_by(|p, q| p.total_cmp(q));
    let (na, nb) = (xa.len() as f64, xb.len() as f64);
    let (mut i, mut j) = (0, 0);
    let mut d: f64 = 0.0;
    while i < xa.len() && j < xb.len() {
        let v = xa[i].min(xb[j]);
        while i < xa.len() && xa[i] <= v {
            i += 1;
        }
        while j < xb.len() && xb[j] <= v {
            j += 1;
        }
        d = d.max((i as f64 / na - j as f64 / nb).abs());
    }
    let ne = na * nb / (na + nb);
    KsResult {
        statistic: d,
        p_value: kolmogorov_sf(scaled(ne, d)),
        n: ne.round() as usize,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use statrs::distribution::{ChiSquared, ContinuousCDF};

    #[test]
    fn series_branches_agree() {
        for x in [0.9, 0.95, 0.999, 1.0, 1.05] {
            let jacobi = {
                let t = -std::f64::consts::PI.powi(2) / (8.0 * x * x);
                let s: f64 = (0..50).map(|k| (t * ((2 * k + 1) as f64).powi(2)).exp()).sum();
                1.0 - (2.0 * std::f64::consts::PI).sqrt() / x * s
            };
            let alt: f64 = 2.0
                * (1..100)
                    .map(|k| {
                        let k = k as f64;
                        (-1f64).powf(k - 1.0) * (-2.0 * k * k * x * x).exp()
                    })
                    .sum::<f64>();
            assert!((jacobi - alt).abs() < 1e-12);
        }
        // Known quantile: P(K > 1.628) ≈ 0.01.
        assert!((kolmogorov_sf(1.6276) - 0.01).abs() < 1e-4);
    }

    #[test]
    fn constant_samples() {
        let chi = ChiSquared::new(2.0).unwrap();
        let c = 1.3;
        let r = ks_test(&vec![c; 100], |x| chi.cdf(x));
        let f = chi.cdf(c);
        assert!((r.statistic - f.max(1.0 - f)).abs() < 1e-12);
    }

    #[test]
    fn separates_wrong_law() {
        let chi2 = ChiSquared::new(2.0).unwrap();
        let chi3 = ChiSquared::new(3.0).unwrap();
        // Exponential(1/2) draws by inversion of a fixed low-discrepancy grid.
        let xs: Vec<f64> = (0..10_000).map(|i| -2.0 * (1.0 - (i as f64 + 0.5) / 10_000.0).ln()).collect();
        assert!(ks_test(&xs, |x| chi2.cdf(x)).p_value > 0.99);
        assert!(ks_test(&xs, |x| chi3.cdf(x)).p_value < 0.001);
    }

    #[test]
    fn critical_value_inverts_p_value() {
        let c = ks_critical_value(10_000.0, 0.01);
        assert!((c - 1.6276 / 100.0).abs() < 2e-4);
    }

    #[test]
    fn two_sample_identical_and_shifted() {
        let a: Vec<f64> = (0..500).map(|i| i as f64).collect();
        assert_eq!(ks_two_sample(&a, &a).statistic, 0.0);
        let b: Vec<f64> = a.iter().map(|x| x + 250.0).collect();
        let r = ks_two_sample(&a, &b);
        assert!((r.statistic - 0.5).abs() < 1e-12 && r.p_value < 1e-10);
    }
}
