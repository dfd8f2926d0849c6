//! Time change `φ′ = ū(φ)`, `φ(0) = 0`, carrying u-solutions onto
//! v-solutions through `v(t, x) = u(φ(t), x)`.

use crate::error::{Error, Result};
use crate::field::{LogVal, Moments, SolutionField};
use crate::heatprop::HeatEval;
use crate::meanfit::{MeanSolver, MeanTable};
use crate::reconstruct::{field_on_grid, moments_at, u_eval};
use crate::Real;

/// How many times the mean table may be doubled while warping.
pub const MAX_EXTENSIONS: usize = 16;

/// Sampled warp together with the (possibly extended) mean table.
#[derive(Clone, Debug)]
pub struct TimeWarp<T> {
    t: Vec<T>,
    phi: Vec<T>,
    slope: Vec<T>,
    table: MeanTable<T>,
    extensions: usize,
}

impl<T: Real> TimeWarp<T> {
    pub fn times(&self) -> &[T] {
        &self.t
    }

    pub fn phi_values(&self) -> &[T] {
        &self.phi
    }

    /// `φ′(t_k) = ū(φ(t_k))`.
    pub fn slopes(&self) -> &[T] {
        &self.slope
    }

    pub fn table(&self) -> &MeanTable<T> {
        &self.table
    }

    pub fn horizon(&self) -> T {
        *self.t.last().expect("warp has at least one node")
    }

    /// Number of times the mean table was doubled.
    pub fn extensions(&self) -> usize {
        self.extensions
    }

    /// `φ(t)`, cubic Hermite between nodes.
    pub fn phi(&self, t: T) -> Result<T> {
        let horizon = self.horizon();
        let slack = T::lit(1e-12) * horizon.max(T::one());
        if !(t >= T::zero()) || t > horizon + slack {
            return Err(Error::TOutOfRange {
                t: t.as_f64(),
                horizon: horizon.as_f64(),
            });
        }
        let t = t.min(horizon);
        let n = self.t.len() - 1;
        if n == 0 {
            return Ok(self.phi[0]);
        }
        let h = horizon / T::from_usize_lossy(n);
        let k = (t / h).floor().to_usize().unwrap_or(0).min(n - 1);
        let s = (t - self.t[k]) / h;
        let s2 = s * s;
        let s3 = s2 * s;
        let two = T::lit(2.0);
        let three = T::lit(3.0);
        let h00 = two * s3 - three * s2 + T::one();
        let h10 = s3 - two * s2 + s;
        let h01 = -two * s3 + three * s2;
        let h11 = s3 - s2;
        Ok(h00 * self.phi[k]
            + h10 * h * self.slope[k]
            + h01 * self.phi[k + 1]
            + h11 * h * self.slope[k + 1])
    }
}

fn extend<T: Real>(
    solver: &MeanSolver<T>,
    table: &MeanTable<T>,
    needed: T,
) -> Result<MeanTable<T>> {
    let horizon = table.horizon() * T::lit(2.0);
    let n = 2 * (table.len() - 1);
    solver
        .solve(horizon, n)
        .map_err(|e| Error::HorizonExceeded {
            phi: needed.as_f64(),
            reason: format!(
                "mean table could not be extended to {}: {e}",
                horizon.as_f64()
            ),
        })
}

/// Integrates the warp on `[0, t_v]` with `steps` RK4 steps, doubling the
/// mean table horizon whenever a stage needs `ū` past it.
pub fn solve_warp<T: Real>(
    solver: &MeanSolver<T>,
    table: MeanTable<T>,
    t_v: T,
    steps: usize,
) -> Result<TimeWarp<T>> {
    if steps == 0 || !(t_v > T::zero()) || !t_v.is_finite() {
        return Err(Error::param(
            "steps",
            "need a positive horizon and at least one step",
        ));
    }
    if table.m0() != solver.cgf().spec().m0() || table.sigma2() != solver.sigma2() {
        return Err(Error::param(
            "table",
            "mean table was not produced by this solver",
        ));
    }
    let h = t_v / T::from_usize_lossy(steps);
    let half = h / T::lit(2.0);
    let mut table = table;
    let mut extensions = 0;
    let mut t = vec![T::zero()];
    let mut phi = vec![T::zero()];
    let mut slope = vec![table.m0()];
    for i in 1..=steps {
        let p = phi[i - 1];
        let k1 = slope[i - 1];
        let stage = |table: &MeanTable<T>| -> std::result::Result<(T, T), T> {
            let f = |x: T| table.ubar_at(x).ok_or(x);
            let k2 = f(p + half * k1)?;
            let k3 = f(p + half * k2)?;
            let k4 = f(p + h * k3)?;
            let next = p + h / T::lit(6.0) * (k1 + T::lit(2.0) * (k2 + k3) + k4);
            Ok((next, f(next)?))
        };
        let (next, s) = loop {
            match stage(&table) {
                Ok(v) => break v,
                Err(needed) => {
                    if extensions == MAX_EXTENSIONS {
                        return Err(Error::HorizonExceeded {
                            phi: needed.as_f64(),
                            reason: format!("extension limit of {MAX_EXTENSIONS} reached"),
                        });
                    }
                    table = extend(solver, &table, needed)?;
                    extensions += 1;
                }
            }
        };
        t.push(T::from_usize_lossy(i) * h);
        phi.push(next);
        slope.push(s);
    }
    Ok(TimeWarp {
        t,
        phi,
        slope,
        table,
        extensions,
    })
}

/// `v(t, x) = u(φ(t), x)`.
pub fn v_eval<T: Real>(warp: &TimeWarp<T>, heat: &HeatEval<T>, t: T, x: T) -> Result<LogVal<T>> {
    u_eval(&warp.table, heat, warp.phi(t)?, x)
}

/// Quadrature moments of `v(t, ·)`.
pub fn v_moments<T: Real>(warp: &TimeWarp<T>, heat: &HeatEval<T>, t: T) -> Result<Moments<T>> {
    moments_at(&warp.table, heat, warp.phi(t)?)
}

/// `v` on `times × xs`, indexed by v-time.
pub fn v_field_on_grid<T: Real>(
    warp: &TimeWarp<T>,
    heat: &HeatEval<T>,
    times: &[T],
    xs: &[T],
) -> Result<SolutionField<T>> {
    let warped = times
        .iter()
        .map(|&t| warp.phi(t))
        .collect::<Result<Vec<T>>>()?;
    let u = field_on_grid(&warp.table, heat, &warped, xs)?;
    let log_u = (0..times.len()).map(|j| u.log_values(j).to_vec()).collect();
    Ok(SolutionField::from_log(
        times.to_vec(),
        xs.to_vec(),
        log_u,
        u.moments().to_vec(),
    ))
}
