//! The mean trait ū(t) as the fixed point of
//!
//! ```text
//! ū(t) = sqrt(m0² + 2σ²t² + 2 ∫₀ᵗ C₀″(∫₀ˢ dτ/ū(τ)) ds)
//! ```
//!
//! solved by Picard iteration on a uniform time grid, plus the cumulative
//! integrals every downstream formula needs:
//!
//! * `A(t) = ∫₀ᵗ ds/ū(s)`
//! * `B(t) = ∫₀ᵗ A(s) ds`
//! * `D(t) = ∫₀ᵗ A(s)² ds`
//! * `E(t) = ∫₀ᵗ s/ū(s) ds`

use crate::error::{Error, Result};
use crate::initdata::Cgf;
use crate::quad::{cumtrapz, interp_uniform};
use crate::Real;

pub const DEFAULT_TOL: f64 = 1e-10;
pub const DEFAULT_MAX_ITER: usize = 64;

/// Fixed-point problem for the mean: an initial cgf and a mutation
/// variance σ².
#[derive(Clone, Debug)]
pub struct MeanSolver<T> {
    cgf: Cgf<T>,
    sigma2: T,
    tol: T,
    max_iter: usize,
}

/// Converged mean and its cumulative integrals on `t_k = k·step`.
#[derive(Clone, Debug)]
pub struct MeanTable<T> {
    step: T,
    t: Vec<T>,
    ubar: Vec<T>,
    a: Vec<T>,
    b: Vec<T>,
    d: Vec<T>,
    e: Vec<T>,
    v: Vec<T>,
    sigma2: T,
    m0: T,
    iter_count: usize,
    residual_norm: T,
}

/// One interpolated row of a [`MeanTable`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MeanRow<T> {
    pub t: T,
    pub ubar: T,
    pub a: T,
    pub b: T,
    pub d: T,
    pub e: T,
    pub v: T,
}

/// Sup-norm distances between successive Picard iterates.
#[derive(Clone, Debug)]
pub struct PicardTrace<T> {
    pub diffs: Vec<T>,
    /// Lipschitz constant `sup|C₀‴| / m0³` over the arguments the iterates visit.
    pub k: T,
    pub horizon: T,
}

impl<T: Real> PicardTrace<T> {
    /// Factorial bound `d₀ (kT²)ⁿ / n!` on the n-th distance.
    pub fn envelope(&self, n: usize) -> T {
        let d0 = self.diffs.first().copied().unwrap_or(T::zero());
        let r = self.k * self.horizon * self.horizon;
        (1..=n).fold(d0, |acc, i| acc * r / T::from_usize_lossy(i))
    }
}

impl<T: Real> MeanSolver<T> {
    pub fn new(cgf: Cgf<T>, sigma2: T) -> Result<Self> {
        let m0 = cgf.spec().m0();
        if !(m0 > T::zero()) {
            return Err(Error::NonPositiveMeanRequired { m0: m0.as_f64() });
        }
        if !(sigma2 > T::zero()) || !sigma2.is_finite() {
            return Err(Error::param(
                "sigma2",
                format!("must be positive, got {sigma2}"),
            ));
        }
        Ok(MeanSolver {
            cgf,
            sigma2,
            tol: T::lit(DEFAULT_TOL),
            max_iter: DEFAULT_MAX_ITER,
        })
    }

    pub fn with_tol(mut self, tol: T) -> Self {
        self.tol = tol;
        self
    }

    pub fn with_max_iter(mut self, max_iter: usize) -> Self {
        self.max_iter = max_iter;
        self
    }

    pub fn cgf(&self) -> &Cgf<T> {
        &self.cgf
    }

    pub fn sigma2(&self) -> T {
        self.sigma2
    }

    pub fn tol(&self) -> T {
        self.tol
    }

    pub fn max_iter(&self) -> usize {
        self.max_iter
    }

    fn m0(&self) -> T {
        self.cgf.spec().m0()
    }

    fn grid(&self, horizon: T, n: usize) -> Result<(T, Vec<T>)> {
        if !(horizon > T::zero()) || !horizon.is_finite() {
            return Err(Error::param(
                "horizon",
                format!("must be positive, got {horizon}"),
            ));
        }
        if n < 2 {
            return Err(Error::param("n", "need at least two time steps"));
        }
        // ū ≥ sqrt(m0² + 2σ²t²) bounds A(T) by asinh(cT/m0)/c, c = sqrt(2σ²)
        let c = (T::lit(2.0) * self.sigma2).sqrt();
        let a_bound = (c * horizon / self.m0()).asinh() / c;
        if a_bound > self.cgf.z_max() {
            return Err(Error::ZRangeExceeded {
                a_max: a_bound.as_f64(),
                z_max: self.cgf.z_max().as_f64(),
            });
        }
        let h = horizon / T::from_usize_lossy(n);
        let t = (0..=n).map(|k| T::from_usize_lossy(k) * h).collect();
        Ok((h, t))
    }

    /// One application of the fixed-point map to `q`.
    fn step(&self, q: &[T], h: T, t: &[T]) -> Result<Vec<T>> {
        let inv: Vec<T> = q.iter().map(|&v| T::one() / v).collect();
        let a = cumtrapz(&inv, h);
        let a_max = a[a.len() - 1];
        if a_max > self.cgf.z_max() {
            return Err(Error::ZRangeExceeded {
                a_max: a_max.as_f64(),
                z_max: self.cgf.z_max().as_f64(),
            });
        }
        let curvature = a
            .iter()
            .map(|&z| self.cgf.eval(z, 2))
            .collect::<Result<Vec<T>>>()?;
        let g = cumtrapz(&curvature, h);
        let m0 = self.m0();
        let two = T::lit(2.0);
        Ok(t.iter()
            .zip(&g)
            .map(|(&tk, &gk)| (m0 * m0 + two * self.sigma2 * tk * tk + two * gk).sqrt())
            .collect())
    }

    /// Solves for ū on `[0, horizon]` with `n` uniform steps.
    pub fn solve(&self, horizon: T, n: usize) -> Result<MeanTable<T>> {
        let (h, t) = self.grid(horizon, n)?;
        let mut q = vec![self.m0(); n + 1];
        let mut residual = T::infinity();
        for iter in 1..=self.max_iter {
            let next = self.step(&q, h, &t)?;
            residual = sup_distance(&next, &q);
            q = next;
            if residual < self.tol {
                return self.tabulate(h, t, q, iter, residual);
            }
        }
        Err(Error::NoConvergence {
            iters: self.max_iter,
            residual: residual.as_f64(),
        })
    }

    /// The first `count` Picard iterates, starting from `q₀ ≡ m0`.
    pub fn iterates(&self, horizon: T, n: usize, count: usize) -> Result<Vec<Vec<T>>> {
        let (h, t) = self.grid(horizon, n)?;
        let mut out = Vec::with_capacity(count);
        let mut q = vec![self.m0(); n + 1];
        for _ in 0..count {
            let next = self.step(&q, h, &t)?;
            out.push(std::mem::replace(&mut q, next));
        }
        Ok(out)
    }

    /// `‖q_{n+1} − q_n‖∞` for `n = 0..n_iters`.
    pub fn trace(&self, horizon: T, n: usize, n_iters: usize) -> Result<PicardTrace<T>> {
        let (h, t) = self.grid(horizon, n)?;
        let mut q = vec![self.m0(); n + 1];
        let mut diffs = Vec::with_capacity(n_iters);
        for _ in 0..n_iters {
            let next = self.step(&q, h, &t)?;
            diffs.push(sup_distance(&next, &q));
            q = next;
        }
        Ok(PicardTrace {
            diffs,
            k: self.lipschitz_constant(horizon)?,
            horizon,
        })
    }

    /// `sup |C₀‴| / m0³` over `[0, T/m0]`, which contains every argument
    /// `∫₀ˢ dτ/q_n` since all iterates stay above m0.
    pub fn lipschitz_constant(&self, horizon: T) -> Result<T> {
        let m0 = self.m0();
        let z_hi = (horizon / m0).min(self.cgf.z_max());
        Ok(self.cgf.third_derivative_bound(z_hi, 2000)? / (m0 * m0 * m0))
    }

    fn tabulate(
        &self,
        h: T,
        t: Vec<T>,
        ubar: Vec<T>,
        iter_count: usize,
        residual: T,
    ) -> Result<MeanTable<T>> {
        let inv: Vec<T> = ubar.iter().map(|&v| T::one() / v).collect();
        let a = cumtrapz(&inv, h);
        let b = cumtrapz(&a, h);
        let a2: Vec<T> = a.iter().map(|&v| v * v).collect();
        let d = cumtrapz(&a2, h);
        let s_over: Vec<T> = t.iter().zip(&inv).map(|(&s, &i)| s * i).collect();
        let e = cumtrapz(&s_over, h);
        let two = T::lit(2.0);
        let v = a
            .iter()
            .zip(&t)
            .map(|(&ak, &tk)| Ok(self.cgf.eval(ak, 2)? + two * self.sigma2 * tk))
            .collect::<Result<Vec<T>>>()?;
        Ok(MeanTable {
            step: h,
            t,
            ubar,
            a,
            b,
            d,
            e,
            v,
            sigma2: self.sigma2,
            m0: self.m0(),
            iter_count,
            residual_norm: residual,
        })
    }

    /// Applies one Picard step to the table's mean and returns the sup-norm change.
    pub fn fixed_point_defect(&self, table: &MeanTable<T>) -> Result<T> {
        let next = self.step(&table.ubar, table.step, &table.t)?;
        Ok(sup_distance(&next, &table.ubar))
    }
}

fn sup_distance<T: Real>(a: &[T], b: &[T]) -> T {
    a.iter()
        .zip(b)
        .map(|(&x, &y)| (x - y).abs())
        .fold(T::zero(), T::max)
}

impl<T: Real> MeanTable<T> {
    pub fn horizon(&self) -> T {
        self.t[self.t.len() - 1]
    }

    pub fn step(&self) -> T {
        self.step
    }

    /// Number of grid nodes (N + 1).
    pub fn len(&self) -> usize {
        self.t.len()
    }

    pub fn is_empty(&self) -> bool {
        self.t.is_empty()
    }

    pub fn times(&self) -> &[T] {
        &self.t
    }

    pub fn ubar(&self) -> &[T] {
        &self.ubar
    }

    pub fn a(&self) -> &[T] {
        &self.a
    }

    pub fn b(&self) -> &[T] {
        &self.b
    }

    pub fn d(&self) -> &[T] {
        &self.d
    }

    pub fn e(&self) -> &[T] {
        &self.e
    }

    /// `V(t_k) = C₀″(A_k) + 2σ² t_k`.
    pub fn v(&self) -> &[T] {
        &self.v
    }

    pub fn sigma2(&self) -> T {
        self.sigma2
    }

    pub fn m0(&self) -> T {
        self.m0
    }

    pub fn iter_count(&self) -> usize {
        self.iter_count
    }

    pub fn residual_norm(&self) -> T {
        self.residual_norm
    }

    /// Stored node `k`.
    pub fn node(&self, k: usize) -> MeanRow<T> {
        MeanRow {
            t: self.t[k],
            ubar: self.ubar[k],
            a: self.a[k],
            b: self.b[k],
            d: self.d[k],
            e: self.e[k],
            v: self.v[k],
        }
    }

    fn check_time(&self, t: T) -> Result<()> {
        let horizon = self.horizon();
        // tolerate round-off at the horizon
        if !(t >= T::zero() && t <= horizon * (T::one() + T::epsilon() * T::lit(8.0))) {
            return Err(Error::TOutOfRange {
                t: t.as_f64(),
                horizon: horizon.as_f64(),
            });
        }
        Ok(())
    }

    /// Piecewise-linear interpolation of every column at time `t`.
    pub fn row(&self, t: T) -> Result<MeanRow<T>> {
        self.check_time(t)?;
        let t = t.min(self.horizon());
        let h = self.step;
        Ok(MeanRow {
            t,
            ubar: interp_uniform(&self.ubar, h, t),
            a: interp_uniform(&self.a, h, t),
            b: interp_uniform(&self.b, h, t),
            d: interp_uniform(&self.d, h, t),
            e: interp_uniform(&self.e, h, t),
            v: interp_uniform(&self.v, h, t),
        })
    }

    /// Interpolated mean; `None` beyond the horizon.
    pub fn ubar_at(&self, t: T) -> Option<T> {
        self.check_time(t).ok()?;
        Some(interp_uniform(&self.ubar, self.step, t.min(self.horizon())))
    }
}

/// Solves the mean fixed point with `n` steps on `[0, horizon]`.
pub fn solve_mean<T: Real>(
    cgf: &Cgf<T>,
    sigma2: T,
    horizon: T,
    n: usize,
    tol: T,
    max_iter: usize,
) -> Result<MeanTable<T>> {
    MeanSolver::new(cgf.clone(), sigma2)?
        .with_tol(tol)
        .with_max_iter(max_iter)
        .solve(horizon, n)
}

pub fn picard_trace<T: Real>(
    cgf: &Cgf<T>,
    sigma2: T,
    horizon: T,
    n: usize,
    n_iters: usize,
) -> Result<PicardTrace<T>> {
    MeanSolver::new(cgf.clone(), sigma2)?.trace(horizon, n, n_iters)
}

/// `sup_k |ū_k − C₀′(A_k) − 2σ² E_k|`: the mean recovered from the cgf
/// identity, which the Picard loop never uses.
pub fn mean_consistency<T: Real>(table: &MeanTable<T>, cgf: &Cgf<T>) -> Result<T> {
    let two = T::lit(2.0);
    let mut worst = T::zero();
    for k in 0..table.len() {
        let recovered = cgf.eval(table.a[k], 1)? + two * table.sigma2 * table.e[k];
        worst = worst.max((table.ubar[k] - recovered).abs());
    }
    Ok(worst)
}

/// `V(t) = C₀″(A(t)) + 2σ²t` with `A` interpolated linearly.
pub fn variance_of<T: Real>(table: &MeanTable<T>, cgf: &Cgf<T>, t: T) -> Result<T> {
    let row = table.row(t)?;
    Ok(cgf.eval(row.a, 2)? + T::lit(2.0) * table.sigma2 * row.t)
}
