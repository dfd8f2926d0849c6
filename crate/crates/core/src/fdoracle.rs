//! Explicit finite differences for both equations:
//!
//! ```text
//! u-equation:  ∂t u = σ² ∂xx u + u (x − x̄)/x̄
//! v-equation:  ∂t v = σ² x̄ ∂xx v + v (x − x̄)
//! ```
//!
//! with `x̄ = ∫ x u dx` by the trapezoid rule, forward Euler in time,
//! centered second differences and zero Dirichlet boundaries. Mass is
//! never renormalized; its drift is reported.

use crate::error::{Error, Result};
use crate::field::SolutionField;
use crate::initdata::DensitySpec;
use crate::quad::{interp_sorted, trapz};
use crate::Real;

/// Largest density tolerated next to an artificial boundary.
pub const BOUNDARY_TOL: f64 = 1e-8;
/// Adaptive dt halvings allowed for the v-equation.
pub const MAX_HALVINGS: usize = 30;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Equation {
    U,
    V,
}

#[derive(Debug, Clone)]
pub struct FdConfig<T> {
    pub equation: Equation,
    pub x_lo: T,
    pub x_hi: T,
    pub dx: T,
    pub dt: T,
    pub horizon: T,
    pub sigma2: T,
    /// Bound on `|x̄|` over the run (v-equation). With it the CFL check is
    /// done once up front and a violation mid-run is an error; without it
    /// dt is halved as needed.
    pub xbar_bound: Option<T>,
    /// Times at which the field is stored; `[0, horizon]` if empty.
    pub output_times: Vec<T>,
}

impl<T: Real> FdConfig<T> {
    pub fn new(equation: Equation, x_lo: T, x_hi: T, dx: T, dt: T, horizon: T, sigma2: T) -> Self {
        FdConfig {
            equation,
            x_lo,
            x_hi,
            dx,
            dt,
            horizon,
            sigma2,
            xbar_bound: None,
            output_times: Vec::new(),
        }
    }

    pub fn with_output_times(mut self, times: Vec<T>) -> Self {
        self.output_times = times;
        self
    }

    pub fn with_dt(mut self, dt: T) -> Self {
        self.dt = dt;
        self
    }

    pub fn with_xbar_bound(mut self, bound: T) -> Self {
        self.xbar_bound = Some(bound);
        self
    }
}

#[derive(Debug, Clone)]
pub struct FdDiagnostics<T> {
    /// `max |M(t) − 1|` over all steps.
    pub mass_drift_max: T,
    /// `(t, x̄(t))` after every step, starting at `t = 0`.
    pub xbar_trace: Vec<(T, T)>,
    /// Smallest `1/2 − |D| dt/dx²` seen.
    pub cfl_margin_min: T,
    pub steps: usize,
    pub dt_halvings: usize,
}

#[derive(Debug, Clone)]
pub struct FdRun<T> {
    pub field: SolutionField<T>,
    pub diagnostics: FdDiagnostics<T>,
}

fn validate<T: Real>(c: &FdConfig<T>) -> Result<(Vec<T>, Vec<T>)> {
    let pos = |name, v: T| {
        if v > T::zero() && v.is_finite() {
            Ok(())
        } else {
            Err(Error::param(name, "must be positive and finite"))
        }
    };
    pos("dx", c.dx)?;
    pos("dt", c.dt)?;
    pos("horizon", c.horizon)?;
    pos("sigma2", c.sigma2)?;
    if !(c.x_hi > c.x_lo) {
        return Err(Error::param("x_hi", "domain must satisfy x_lo < x_hi"));
    }
    let span = c.x_hi - c.x_lo;
    let cells = (span / c.dx).round();
    if (cells * c.dx - span).abs() > T::lit(1e-9) * span || cells < T::lit(4.0) {
        return Err(Error::param(
            "dx",
            "must divide the domain into at least four cells",
        ));
    }
    let n = cells.to_usize().unwrap_or(0);
    let xs = (0..=n)
        .map(|i| c.x_lo + T::from_usize_lossy(i) * c.dx)
        .collect();
    let mut outs = if c.output_times.is_empty() {
        vec![T::zero(), c.horizon]
    } else {
        c.output_times.clone()
    };
    for w in outs.windows(2) {
        if !(w[1] > w[0]) {
            return Err(Error::param("output_times", "must be strictly increasing"));
        }
    }
    if outs.iter().any(|&t| t < T::zero() || t > c.horizon) {
        return Err(Error::param("output_times", "must lie in [0, horizon]"));
    }
    outs.dedup();
    Ok((xs, outs))
}

fn check_boundary<T: Real>(u: &[T], t: T) -> Result<()> {
    let n = u.len();
    let worst = u[1].abs().max(u[n - 2].abs());
    if worst > T::lit(BOUNDARY_TOL) {
        return Err(Error::DomainTooSmall {
            t: t.as_f64(),
            value: worst.as_f64(),
        });
    }
    Ok(())
}

/// Runs the scheme from `spec` (uniform data are seeded with cell averages).
pub fn fd_solve<T: Real>(config: &FdConfig<T>, spec: &DensitySpec<T>) -> Result<FdRun<T>> {
    let (xs, outs) = validate(config)?;
    let n = xs.len();
    let dx = config.dx;
    let dx2 = dx * dx;
    let half = T::lit(0.5);
    let mut u: Vec<T> = xs.iter().map(|&x| spec.cell_average(x, dx)).collect();
    u[0] = T::zero();
    u[n - 1] = T::zero();
    check_boundary(&u, T::zero())?;

    let xbar_of = |u: &[T]| {
        let xu: Vec<T> = xs.iter().zip(u).map(|(&x, &v)| x * v).collect();
        trapz(&xs, &xu)
    };
    let diffusion = |xbar: T| match config.equation {
        Equation::U => config.sigma2,
        Equation::V => config.sigma2 * xbar,
    };

    let mut dt = config.dt;
    let mut halvings = 0;
    let xbar0 = xbar_of(&u);
    let setup_d = match (config.equation, config.xbar_bound) {
        (Equation::V, Some(bound)) => config.sigma2 * bound.abs().max(xbar0.abs()),
        _ => diffusion(xbar0).abs(),
    };
    let ratio0 = setup_d * dt / dx2;
    if ratio0 > half {
        if config.equation == Equation::V && config.xbar_bound.is_none() {
            while setup_d * dt / dx2 > half {
                dt = dt * half;
                halvings += 1;
            }
        } else {
            return Err(Error::CflViolated {
                ratio: ratio0.as_f64(),
                t: 0.0,
            });
        }
    }

    let mut stored = Vec::with_capacity(outs.len());
    let mut out_idx = 0;
    if outs[0] == T::zero() {
        stored.push(u.clone());
        out_idx = 1;
    }
    let mut mass_drift = (trapz(&xs, &u) - T::one()).abs();
    let mut trace = vec![(T::zero(), xbar0)];
    let mut margin = half - ratio0.min(half);
    let mut t = T::zero();
    let mut steps = 0;
    let mut next = u.clone();
    let snap = T::lit(1e-12) * config.horizon.max(T::one());

    while out_idx < outs.len() {
        let target = outs[out_idx];
        let xbar = xbar_of(&u);
        if config.equation == Equation::U && !(xbar > T::zero()) {
            return Err(Error::Diverged { t: t.as_f64() });
        }
        if let (Equation::V, Some(bound)) = (config.equation, config.xbar_bound) {
            if xbar.abs() > bound.abs() {
                return Err(Error::CflViolated {
                    ratio: (diffusion(xbar).abs() * dt / dx2).as_f64(),
                    t: t.as_f64(),
                });
            }
        }
        let d = diffusion(xbar);
        while d.abs() * dt / dx2 > half {
            if halvings == MAX_HALVINGS {
                return Err(Error::CflViolated {
                    ratio: (d.abs() * dt / dx2).as_f64(),
                    t: t.as_f64(),
                });
            }
            dt = dt * half;
            halvings += 1;
        }
        let mut h = dt;
        let mut lands = false;
        if target - t <= h + snap {
            h = target - t;
            lands = true;
        }
        margin = margin.min(half - d.abs() * h / dx2);
        let c = d * h / dx2;
        for i in 1..n - 1 {
            let x = xs[i];
            let growth = match config.equation {
                Equation::U => (x - xbar) / xbar,
                Equation::V => x - xbar,
            };
            next[i] = u[i] + c * (u[i + 1] - T::lit(2.0) * u[i] + u[i - 1]) + h * growth * u[i];
        }
        next[0] = T::zero();
        next[n - 1] = T::zero();
        std::mem::swap(&mut u, &mut next);
        t = if lands { target } else { t + h };
        steps += 1;
        if u.iter().any(|v| !v.is_finite()) {
            return Err(Error::Diverged { t: t.as_f64() });
        }
        check_boundary(&u, t)?;
        mass_drift = mass_drift.max((trapz(&xs, &u) - T::one()).abs());
        trace.push((t, xbar_of(&u)));
        if lands {
            stored.push(u.clone());
            out_idx += 1;
        }
    }

    Ok(FdRun {
        field: SolutionField::from_values(outs, xs, stored),
        diagnostics: FdDiagnostics {
            mass_drift_max: mass_drift,
            xbar_trace: trace,
            cfl_margin_min: margin,
            steps,
            dt_halvings: halvings,
        },
    })
}

/// Trapezoid L¹ distance between two fields at time `t`, on `a`'s grid.
/// `b` is linearly interpolated when the grids differ and read as zero
/// outside its range.
pub fn compare_l1<T: Real>(a: &SolutionField<T>, b: &SolutionField<T>, t: T) -> Result<T> {
    let missing = || Error::TimeMissing { t: t.as_f64() };
    let ja = a.time_index(t).ok_or_else(missing)?;
    let jb = b.time_index(t).ok_or_else(missing)?;
    let (ua, ub) = (a.values(ja), b.values(jb));
    let same = a.xs() == b.xs();
    let diff: Vec<T> = a
        .xs()
        .iter()
        .zip(ua)
        .enumerate()
        .map(|(i, (&x, &va))| {
            let vb = if same {
                ub[i]
            } else {
                interp_sorted(b.xs(), ub, x).unwrap_or(T::zero())
            };
            (va - vb).abs()
        })
        .collect();
    Ok(trapz(a.xs(), &diff))
}
