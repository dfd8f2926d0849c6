//! Quadrature and interpolation helpers on sampled data.

use crate::Real;

/// Cumulative trapezoid rule on a uniform grid with step `h`; `out[0] = 0`.
pub(crate) fn cumtrapz<T: Real>(values: &[T], h: T) -> Vec<T> {
    let half = T::lit(0.5) * h;
    let mut out = Vec::with_capacity(values.len());
    let mut acc = T::zero();
    out.push(acc);
    for w in values.windows(2) {
        acc = acc + half * (w[0] + w[1]);
        out.push(acc);
    }
    out
}

/// Trapezoid rule on an arbitrary sorted grid.
pub(crate) fn trapz<T: Real>(xs: &[T], ys: &[T]) -> T {
    debug_assert_eq!(xs.len(), ys.len());
    xs.windows(2)
        .zip(ys.windows(2))
        .map(|(x, y)| T::lit(0.5) * (x[1] - x[0]) * (y[0] + y[1]))
        .sum()
}

/// Composite Simpson weights on a strictly increasing, possibly
/// non-uniform grid of at least three points. An odd number of intervals
/// is closed by integrating the last interval against the quadratic
/// through the final three samples.
pub(crate) fn simpson_weights<T: Real>(xs: &[T]) -> Vec<T> {
    let n = xs.len();
    assert!(n >= 3, "simpson_weights needs at least three samples");
    let six = T::lit(6.0);
    let two = T::lit(2.0);
    let three = T::lit(3.0);
    let mut w = vec![T::zero(); n];
    let intervals = n - 1;
    let paired = intervals - intervals % 2;
    let mut i = 0;
    while i < paired {
        let h0 = xs[i + 1] - xs[i];
        let h1 = xs[i + 2] - xs[i + 1];
        let s = h0 + h1;
        w[i] = w[i] + s / six * (two - h1 / h0);
        w[i + 1] = w[i + 1] + s * s * s / (six * h0 * h1);
        w[i + 2] = w[i + 2] + s / six * (two - h0 / h1);
        i += 2;
    }
    if intervals % 2 == 1 {
        let (a, b, c) = (n - 3, n - 2, n - 1);
        let h0 = xs[b] - xs[a];
        let h1 = xs[c] - xs[b];
        let s = h0 + h1;
        w[a] = w[a] - h1 * h1 * h1 / (six * h0 * s);
        w[b] = w[b] + h1 * (h1 + three * h0) / (six * h0);
        w[c] = w[c] + h1 * (two * h1 + three * h0) / (six * s);
    }
    w
}

/// Linear interpolation on a sorted grid; `None` outside `[xs[0], xs[n-1]]`.
pub(crate) fn interp_sorted<T: Real>(xs: &[T], ys: &[T], x: T) -> Option<T> {
    let n = xs.len();
    if n == 0 || x < xs[0] || x > xs[n - 1] || x.is_nan() {
        return None;
    }
    if n == 1 {
        return Some(ys[0]);
    }
    let j = xs.partition_point(|&v| v <= x).clamp(1, n - 1);
    let (x0, x1) = (xs[j - 1], xs[j]);
    let s = (x - x0) / (x1 - x0);
    Some(ys[j - 1] + s * (ys[j] - ys[j - 1]))
}

/// Linear interpolation on the uniform grid `t_k = k h`, `k = 0..len`.
/// The caller guarantees `0 <= t <= (len-1) h`.
pub(crate) fn interp_uniform<T: Real>(ys: &[T], h: T, t: T) -> T {
    let last = ys.len() - 1;
    let pos = t / h;
    let k = pos
        .floor()
        .to_usize()
        .unwrap_or(0)
        .min(last.saturating_sub(1));
    let s = pos - T::from_usize_lossy(k);
    if last == 0 {
        return ys[0];
    }
    ys[k] + s * (ys[k + 1] - ys[k])
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn simpson_is_exact_on_cubics_uniform_and_not() {
        let uniform: Vec<f64> = (0..=10).map(|i| i as f64 * 0.3).collect();
        let skewed: Vec<f64> = (0..=9).map(|i| (i as f64 * 0.4).powf(1.3)).collect();
        for xs in [uniform, skewed] {
            let w = simpson_weights(&xs);
            let (a, b) = (xs[0], *xs.last().unwrap());
            let approx: f64 = xs.iter().zip(&w).map(|(x, w)| w * x * x).sum();
            let exact = (b.powi(3) - a.powi(3)) / 3.0;
            assert!((approx - exact).abs() < 1e-12, "{approx} vs {exact}");
        }
        // cubics are exact for uniform pairs
        let xs: Vec<f64> = (0..=8).map(|i| i as f64 * 0.25).collect();
        let w = simpson_weights(&xs);
        let approx: f64 = xs.iter().zip(&w).map(|(x, w)| w * x.powi(3)).sum();
        assert!((approx - 2f64.powi(4) / 4.0).abs() < 1e-12);
    }

    #[test]
    fn cumtrapz_of_linear_is_exact() {
        let h = 0.1;
        let ys: Vec<f64> = (0..=20).map(|k| 2.0 * k as f64 * h).collect();
        let c = cumtrapz(&ys, h);
        assert!((c[20] - 4.0).abs() < 1e-12);
        assert_eq!(c[0], 0.0);
    }

    #[test]
    fn interpolation_hits_nodes_and_rejects_outside() {
        let xs = [0.0, 1.0, 3.0];
        let ys = [1.0, 3.0, 7.0];
        assert_eq!(interp_sorted(&xs, &ys, 1.0), Some(3.0));
        assert_eq!(interp_sorted(&xs, &ys, 2.0), Some(5.0));
        assert_eq!(interp_sorted(&xs, &ys, 3.0), Some(7.0));
        assert_eq!(interp_sorted(&xs, &ys, 3.5), None);
        assert!((interp_uniform(&[0.0f64, 1.0, 4.0], 0.5, 0.75) - 2.5).abs() < 1e-15);
        assert_eq!(interp_uniform(&[0.0f64, 1.0, 4.0], 0.5, 1.0), 4.0);
    }
}
