//! Special functions evaluated on log scale.

use crate::Real;

/// Above this argument `ln erfc` switches to the asymptotic expansion.
const ERFC_ASYMPTOTIC_FROM: f64 = 6.0;

/// `ln erfc(x)` without underflow for large positive `x`.
pub fn ln_erfc<T: Real>(x: T) -> T {
    if x < T::lit(ERFC_ASYMPTOTIC_FROM) {
        return x.erfc().ln();
    }
    // erfc(x) = e^{-x²}/(x√π) Σ (-1)^n (2n-1)!! / (2x²)^n
    let inv = T::one() / (T::lit(2.0) * x * x);
    let eps = T::epsilon() * T::lit(0.25);
    let mut term = T::one();
    let mut sum = T::one();
    for n in 1..60 {
        let next = -term * T::from_usize_lossy(2 * n - 1) * inv;
        if next.abs() >= term.abs() {
            break;
        }
        term = next;
        sum = sum + term;
        if term.abs() < eps {
            break;
        }
    }
    -x * x - (x * T::PI().sqrt()).ln() + sum.ln()
}

/// `ln(1 - e^d)` for `d <= 0`.
#[inline]
pub(crate) fn ln_one_minus_exp<T: Real>(d: T) -> T {
    if d > -T::LN_2() {
        (-d.exp_m1()).ln()
    } else {
        (-d.exp()).ln_1p()
    }
}

/// `ln(erf(p) - erf(q))` for `p > q`, accurate when both arguments sit far
/// in the same tail.
pub fn ln_erf_diff<T: Real>(p: T, q: T) -> T {
    if !(p > q) {
        return T::neg_infinity();
    }
    if q >= T::zero() {
        // erf p - erf q = erfc q - erfc p
        let lq = ln_erfc(q);
        lq + ln_one_minus_exp(ln_erfc(p) - lq)
    } else if p <= T::zero() {
        // erf p - erf q = erfc(-p) - erfc(-q)
        let lp = ln_erfc(-p);
        lp + ln_one_minus_exp(ln_erfc(-q) - lp)
    } else {
        (p.erf() + (-q).erf()).ln()
    }
}

/// Taylor coefficients of `coth w - 1/w = Σ c_n w^{2n-1}`.
const COTH_SERIES: [f64; 12] = [
    1.0 / 3.0,
    -1.0 / 45.0,
    2.0 / 945.0,
    -1.0 / 4725.0,
    2.0 / 93555.0,
    -2.1644042808063972e-06,
    2.1925947851873778e-07,
    -2.2214608789979678e-08,
    2.2507846516808994e-09,
    -2.2805151204592183e-10,
    2.3106432599002624e-11,
    -2.3411706819824882e-12,
];

/// Below this `|w|` the log-sinc derivatives come from the series.
const SINC_SERIES_BELOW: f64 = 0.5;

/// `g(w) = ln(sinh(w)/w)` and its first three derivatives.
pub fn ln_sinhc_derivs<T: Real>(w: T) -> [T; 4] {
    let aw = w.abs();
    if aw < T::lit(SINC_SERIES_BELOW) {
        let w2 = w * w;
        let (mut g0, mut g1, mut g2, mut g3) = (T::zero(), T::zero(), T::zero(), T::zero());
        // iterate from the smallest term up for accuracy
        for (i, &c) in COTH_SERIES.iter().enumerate().rev() {
            let n = i + 1;
            let c = T::lit(c);
            let p = w2.powi(n as i32 - 1); // w^{2n-2}
            let two_n = T::from_usize_lossy(2 * n);
            g0 = g0 + c * p * w2 / two_n;
            g1 = g1 + c * p * w;
            g2 = g2 + c * T::from_usize_lossy(2 * n - 1) * p;
            if n >= 2 {
                let q = w2.powi(n as i32 - 2) * w; // w^{2n-3}
                g3 = g3 + c * T::from_usize_lossy((2 * n - 1) * (2 * n - 2)) * q;
            }
        }
        return [g0, g1, g2, g3];
    }
    let two = T::lit(2.0);
    let g0 = aw + ln_one_minus_exp(-two * aw) - (two * aw).ln();
    let coth = T::one() / w.tanh();
    let csch = T::one() / w.sinh();
    let csch2 = csch * csch;
    let g1 = coth - T::one() / w;
    let g2 = T::one() / (w * w) - csch2;
    let g3 = two * coth * csch2 - two / (w * w * w);
    [g0, g1, g2, g3]
}
