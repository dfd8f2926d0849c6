//! Assembly of the solution from the mean table and the heat flow:
//!
//! ```text
//! u(t, x) = w(t, x + 2σ²B(t)) · exp(−t + x A(t) + σ² D(t))
//! ```
//!
//! evaluated in log space, plus the full cgf of the solution
//!
//! ```text
//! C(t, z) = C₀(z + A) + σ²tz² + 2σ²zE + σ²(D − 2AB + A²t) − t.
//! ```

use crate::error::{Error, Result};
use crate::field::{LogVal, Moments, SolutionField};
use crate::heatprop::HeatEval;
use crate::initdata::Cgf;
use crate::meanfit::{MeanRow, MeanTable};
use crate::Real;

/// Half-width of the moment window, in predicted standard deviations.
pub const MOMENT_WINDOW_SD: f64 = 12.0;
/// Trapezoid intervals used for moment quadrature.
pub const MOMENT_INTERVALS: usize = 4000;

fn check_sigma<T: Real>(table: &MeanTable<T>, heat: &HeatEval<T>) -> Result<()> {
    if table.sigma2() != heat.sigma2() {
        return Err(Error::param(
            "sigma2",
            "mean table and heat flow use different σ²",
        ));
    }
    Ok(())
}

fn assemble<T: Real>(row: &MeanRow<T>, heat: &HeatEval<T>, sigma2: T, x: T) -> Result<LogVal<T>> {
    let two = T::lit(2.0);
    let w = heat.eval(row.t, x + two * sigma2 * row.b)?;
    Ok(LogVal::from_ln(w.ln - row.t + x * row.a + sigma2 * row.d))
}

/// `u(t, x)` and `ln u(t, x)`.
pub fn u_eval<T: Real>(table: &MeanTable<T>, heat: &HeatEval<T>, t: T, x: T) -> Result<LogVal<T>> {
    check_sigma(table, heat)?;
    let row = table.row(t)?;
    assemble(&row, heat, table.sigma2(), x)
}

/// `[ū − 12 sd, ū + 12 sd]` with mean and variance read from the table.
pub fn moment_window<T: Real>(table: &MeanTable<T>, t: T) -> Result<(T, T)> {
    let row = table.row(t)?;
    let reach = T::lit(MOMENT_WINDOW_SD) * row.v.sqrt();
    Ok((row.ubar - reach, row.ubar + reach))
}

/// Quadrature moments of `u(t, ·)` on the predicted window. At `t = 0`
/// the initial density's own moments are returned.
pub fn moments_at<T: Real>(table: &MeanTable<T>, heat: &HeatEval<T>, t: T) -> Result<Moments<T>> {
    check_sigma(table, heat)?;
    let row = table.row(t)?;
    if row.t == T::zero() {
        let spec = heat.spec();
        return Ok(Moments {
            mass: spec.moment(0),
            mean: spec.m0(),
            variance: spec.variance(),
        });
    }
    let (lo, hi) = moment_window(table, t)?;
    let n = MOMENT_INTERVALS;
    let h = (hi - lo) / T::from_usize_lossy(n);
    let xs: Vec<T> = (0..=n).map(|i| lo + T::from_usize_lossy(i) * h).collect();
    let us = xs
        .iter()
        .map(|&x| Ok(assemble(&row, heat, table.sigma2(), x)?.value))
        .collect::<Result<Vec<T>>>()?;
    Ok(Moments::from_samples(&xs, &us))
}

/// Evaluates `u` on `times × xs` and attaches quadrature moments per time.
pub fn field_on_grid<T: Real>(
    table: &MeanTable<T>,
    heat: &HeatEval<T>,
    times: &[T],
    xs: &[T],
) -> Result<SolutionField<T>> {
    check_sigma(table, heat)?;
    let mut log_u = Vec::with_capacity(times.len());
    let mut moments = Vec::with_capacity(times.len());
    for &t in times {
        let row = table.row(t)?;
        let slice = xs
            .iter()
            .map(|&x| Ok(assemble(&row, heat, table.sigma2(), x)?.ln))
            .collect::<Result<Vec<T>>>()?;
        log_u.push(slice);
        moments.push(moments_at(table, heat, t)?);
    }
    Ok(SolutionField::from_log(
        times.to_vec(),
        xs.to_vec(),
        log_u,
        moments,
    ))
}

/// `σ²(D − 2AB + A²t)`'s bracket: `∫₀ᵗ (A(r) − A(t))² dr` regrouped.
pub fn nested_square_grouped<T: Real>(table: &MeanTable<T>, t: T) -> Result<T> {
    let r = table.row(t)?;
    Ok(r.d - T::lit(2.0) * r.a * r.b + r.a * r.a * r.t)
}

/// `∫₀ᵗ (A(r) − A(t))² dr` integrated directly (Simpson over the table
/// nodes), the reference for [`nested_square_grouped`].
pub fn nested_square_direct<T: Real>(table: &MeanTable<T>, t: T) -> Result<T> {
    let end = table.row(t)?;
    let mut rs = Vec::new();
    let mut ds = Vec::new();
    for (k, &r) in table.times().iter().enumerate() {
        if r >= end.t {
            break;
        }
        rs.push(r);
        ds.push(table.a()[k] - end.a);
    }
    rs.push(end.t);
    ds.push(T::zero());
    if rs.len() < 3 {
        // a single sub-step: trapezoid on the one interval
        let h = end.t - rs[0];
        return Ok(h * ds[0] * ds[0] / T::lit(2.0));
    }
    let w = crate::quad::simpson_weights(&rs);
    Ok(w.iter().zip(&ds).map(|(&w, &d)| w * d * d).sum())
}

/// Full cgf `C(t, z)` of the solution; needs `0 ≤ z + A(t) ≤ z_max`.
pub fn cgf_full<T: Real>(table: &MeanTable<T>, cgf: &Cgf<T>, t: T, z: T) -> Result<T> {
    let r = table.row(t)?;
    let s2 = table.sigma2();
    let two = T::lit(2.0);
    let grouped = r.d - two * r.a * r.b + r.a * r.a * r.t;
    Ok(cgf.eval(z + r.a, 0)? + s2 * r.t * z * z + two * s2 * z * r.e + s2 * grouped - r.t)
}

/// `∂z C(t, z)`; at `z = 0` this is the mean.
pub fn cgf_full_dz<T: Real>(table: &MeanTable<T>, cgf: &Cgf<T>, t: T, z: T) -> Result<T> {
    let r = table.row(t)?;
    let two = T::lit(2.0);
    Ok(cgf.eval(z + r.a, 1)? + two * table.sigma2() * (r.t * z + r.e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::initdata::{make_density, RawDensity};
    use crate::meanfit::solve_mean;

    struct Setup {
        cgf: Cgf<f64>,
        heat: HeatEval<f64>,
        table: MeanTable<f64>,
    }

    fn setup(raw: RawDensity<f64>, n: usize) -> Setup {
        let spec = make_density(raw, true).unwrap();
        let cgf = Cgf::new(spec.clone());
        let heat = HeatEval::new(spec, 1.0).unwrap();
        let table = solve_mean(&cgf, 1.0, 3.0, n, 1e-10, 64).unwrap();
        Setup { cgf, heat, table }
    }

    #[test]
    fn gaussian_peak_value() {
        let s = setup(RawDensity::Gaussian { a0: 1.0, m0: 4.0 }, 3000);
        let u = u_eval(&s.table, &s.heat, 1.0, 20f64.sqrt()).unwrap();
        assert!((u.value - 0.2303294329808903).abs() < 1e-6, "{}", u.value);
    }

    #[test]
    fn initial_slice_reproduces_datum() {
        let s = setup(RawDensity::Uniform { lo: 0.5, hi: 1.5 }, 300);
        let xs: Vec<f64> = (0..=40).map(|i| -0.5 + 0.05 * i as f64).collect();
        let field = field_on_grid(&s.table, &s.heat, &[0.0], &xs).unwrap();
        for (i, &x) in xs.iter().enumerate() {
            assert_eq!(field.values(0)[i], s.heat.spec().pdf(x));
        }
    }

    #[test]
    fn moments_agree_with_table() {
        let s = setup(RawDensity::Uniform { lo: 0.5, hi: 1.5 }, 3000);
        for t in [0.5, 1.0, 2.0, 3.0] {
            let m = moments_at(&s.table, &s.heat, t).unwrap();
            let row = s.table.row(t).unwrap();
            let v = crate::meanfit::variance_of(&s.table, &s.cgf, t).unwrap();
            assert!((m.mass - 1.0).abs() <= 1e-4, "mass {} at {t}", m.mass);
            assert!((m.mean - row.ubar).abs() <= 1e-3 * row.ubar);
            assert!((m.variance - v).abs() <= 1e-3 * v);
        }
    }

    #[test]
    fn regrouped_nested_integral_matches_direct_form() {
        let coarse = setup(RawDensity::Uniform { lo: 0.5, hi: 1.5 }, 1500);
        let fine = setup(RawDensity::Uniform { lo: 0.5, hi: 1.5 }, 3000);
        for t in [0.3, 1.0, 2.5, 3.0] {
            let gap = |s: &Setup| {
                let g = nested_square_grouped(&s.table, t).unwrap();
                let d = nested_square_direct(&s.table, t).unwrap();
                assert!((g - d).abs() <= 1e-4 * d, "t={t}: {g} vs {d}");
                (g - d).abs()
            };
            let (gc, gf) = (gap(&coarse), gap(&fine));
            // both sides are second order in the step
            assert!(gf <= gc / 3.0, "t={t}: {gc} -> {gf}");
        }
        let row = fine.table.row(2.0).unwrap();
        assert!((row.e - (row.t * row.a - row.b)).abs() < 1e-6);
    }

    #[test]
    fn cgf_normalization_and_mean() {
        let s = setup(RawDensity::Uniform { lo: 0.5, hi: 1.5 }, 3000);
        for i in 0..=30 {
            let t = 0.1 * i as f64;
            assert!(cgf_full(&s.table, &s.cgf, t, 0.0).unwrap().abs() <= 1e-4);
            let ubar = s.table.row(t).unwrap().ubar;
            let dz = cgf_full_dz(&s.table, &s.cgf, t, 0.0).unwrap();
            assert!((dz - ubar).abs() <= 1e-3 * ubar);
        }
    }

    #[test]
    fn gaussian_cgf_matches_closed_form() {
        let s = setup(RawDensity::Gaussian { a0: 1.0, m0: 4.0 }, 3000);
        for t in [0.5, 1.5, 3.0] {
            let m = (16.0f64 + 2.0 * t * t + 2.0 * t).sqrt();
            let var = 1.0 + 2.0 * t;
            for z in [0.0, 0.5, 1.0, 2.0] {
                let exact = m * z + 0.5 * var * z * z;
                let got = cgf_full(&s.table, &s.cgf, t, z).unwrap();
                assert!((got - exact).abs() <= 1e-5, "t={t} z={z}: {got} vs {exact}");
            }
        }
    }

    #[test]
    fn cgf_curvature_is_variance() {
        let s = setup(RawDensity::Uniform { lo: 0.5, hi: 1.5 }, 3000);
        let dz = 1e-3;
        for t in [0.5, 1.0, 2.0, 3.0] {
            let c = |z| cgf_full(&s.table, &s.cgf, t, z).unwrap();
            let curv = (c(dz) - 2.0 * c(0.0) + c(-dz)) / (dz * dz);
            let v = s.table.row(t).unwrap().v;
            assert!((curv - v).abs() <= 1e-2 * v, "t={t}: {curv} vs {v}");
        }
    }

    #[test]
    fn solves_the_equation() {
        let s = setup(RawDensity::Uniform { lo: 0.5, hi: 1.5 }, 3000);
        let (ht, hx) = (1e-3, 1e-2);
        for t in [0.5, 1.0, 2.0] {
            let ubar = s.table.row(t).unwrap().ubar;
            let u = |t, x| u_eval(&s.table, &s.heat, t, x).unwrap().value;
            let xs: Vec<f64> = (0..=400).map(|i| -4.0 + 0.025 * i as f64).collect();
            let peak = xs.iter().map(|&x| u(t, x)).fold(0.0, f64::max);
            for &x in &xs {
                let ut = (u(t + ht, x) - u(t - ht, x)) / (2.0 * ht);
                let uxx = (u(t, x + hx) - 2.0 * u(t, x) + u(t, x - hx)) / (hx * hx);
                let res = ut - uxx - u(t, x) * (x - ubar) / ubar;
                assert!(u(t, x) >= 0.0);
                assert!(res.abs() <= 1e-3 * peak, "t={t} x={x}: {res}");
            }
        }
    }
}
