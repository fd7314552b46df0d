//! Adaptive Gauss–Kronrod quadrature on finite and semi-infinite intervals.

use crate::Scalar;

const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_8,
];
// Gauss 7-point weights for nodes XGK[1], XGK[3], XGK[5], XGK[7].
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

/// Tolerances and limits for [`integrate`].
#[derive(Debug, Clone, Copy)]
pub struct QuadOptions {
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub max_subdivisions: usize,
}

impl Default for QuadOptions {
    fn default() -> Self {
        Self {
            rel_tol: 1e-8,
            abs_tol: 1e-12,
            max_subdivisions: 200,
        }
    }
}

/// Integral estimate with its error bound. `converged` is false when the
/// subdivision budget ran out before the tolerance was met.
#[derive(Debug, Clone, Copy)]
pub struct QuadResult<T> {
    pub value: T,
    pub error: T,
    pub converged: bool,
}

fn gk15<T: Scalar, F: FnMut(T) -> T>(f: &mut F, a: T, b: T) -> (T, T) {
    let half = T::c(0.5);
    let center = half * (a + b);
    let hl = half * (b - a);
    let fc = f(center);
    let mut resk = fc * T::c(WGK[7]);
    let mut resg = fc * T::c(WG[3]);
    for j in 0..7 {
        let dx = hl * T::c(XGK[j]);
        let f1 = f(center - dx);
        let f2 = f(center + dx);
        resk += T::c(WGK[j]) * (f1 + f2);
        if j % 2 == 1 {
            resg += T::c(WG[j / 2]) * (f1 + f2);
        }
    }
    let value = resk * hl;
    let err = ((resk - resg) * hl).abs();
    (value, err)
}

/// Integrates `f` over the finite interval [a, b].
pub fn integrate<T: Scalar, F: FnMut(T) -> T>(
    mut f: F,
    a: T,
    b: T,
    opts: QuadOptions,
) -> QuadResult<T> {
    let mut intervals: Vec<(T, T, T, T)> = Vec::new();
    let (v, e) = gk15(&mut f, a, b);
    intervals.push((a, b, v, e));
    let rel = T::c(opts.rel_tol);
    let abs = T::c(opts.abs_tol);
    loop {
        let (total, err) = intervals
            .iter()
            .fold((T::zero(), T::zero()), |(s, e), iv| (s + iv.2, e + iv.3));
        let target = abs.max(rel * total.abs());
        if err <= target || !total.is_finite_() {
            return QuadResult {
                value: total,
                error: err,
                converged: total.is_finite_(),
            };
        }
        if intervals.len() >= opts.max_subdivisions {
            return QuadResult {
                value: total,
                error: err,
                converged: false,
            };
        }
        let (idx, _) = intervals
            .iter()
            .enumerate()
            .fold((0, T::zero() - T::one()), |best, (i, iv)| {
                if iv.3 > best.1 {
                    (i, iv.3)
                } else {
                    best
                }
            });
        let (lo, hi, _, _) = intervals.swap_remove(idx);
        let mid = T::c(0.5) * (lo + hi);
        let (v1, e1) = gk15(&mut f, lo, mid);
        let (v2, e2) = gk15(&mut f, mid, hi);
        intervals.push((lo, mid, v1, e1));
        intervals.push((mid, hi, v2, e2));
    }
}

/// Integrates `f` over [a, ∞) through the substitution x = a + u/(1−u).
pub fn integrate_to_inf<T: Scalar, F: FnMut(T) -> T>(
    mut f: F,
    a: T,
    opts: QuadOptions,
) -> QuadResult<T> {
    let one = T::one();
    let g = move |u: T| {
        let w = one - u;
        if w <= T::zero() {
            return T::zero();
        }
        let x = a + u / w;
        let v = f(x) / (w * w);
        if v.is_finite_() {
            v
        } else {
            T::zero()
        }
    };
    integrate(g, T::zero(), one, opts)
}
