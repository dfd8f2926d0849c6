//! Sampled densities on a rectangular (time × trait) grid.

use crate::quad::trapz;
use crate::Real;

/// A density value together with its logarithm. `ln` stays finite where
/// `value` underflows.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LogVal<T> {
    pub ln: T,
    pub value: T,
}

impl<T: Real> LogVal<T> {
    pub fn from_ln(ln: T) -> Self {
        LogVal {
            ln,
            value: ln.exp(),
        }
    }

    pub fn from_value(value: T) -> Self {
        let ln = if value > T::zero() {
            value.ln()
        } else {
            T::neg_infinity()
        };
        LogVal { ln, value }
    }
}

/// Zeroth moment, mean and variance of one time slice.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Moments<T> {
    pub mass: T,
    pub mean: T,
    pub variance: T,
}

impl<T: Real> Moments<T> {
    /// Trapezoid moments of samples `us` on the sorted grid `xs`.
    pub fn from_samples(xs: &[T], us: &[T]) -> Self {
        let mass = trapz(xs, us);
        let first: Vec<T> = xs.iter().zip(us).map(|(&x, &u)| x * u).collect();
        let mean = trapz(xs, &first) / mass;
        let second: Vec<T> = xs
            .iter()
            .zip(us)
            .map(|(&x, &u)| (x - mean) * (x - mean) * u)
            .collect();
        let variance = trapz(xs, &second) / mass;
        Moments {
            mass,
            mean,
            variance,
        }
    }
}

#[derive(Clone, Debug)]
pub struct SolutionField<T> {
    times: Vec<T>,
    xs: Vec<T>,
    log_u: Vec<Vec<T>>,
    u: Vec<Vec<T>>,
    moments: Vec<Moments<T>>,
}

impl<T: Real> SolutionField<T> {
    /// Builds a field from log-densities; `moments[j]` belongs to `times[j]`.
    pub fn from_log(
        times: Vec<T>,
        xs: Vec<T>,
        log_u: Vec<Vec<T>>,
        moments: Vec<Moments<T>>,
    ) -> Self {
        let u = log_u
            .iter()
            .map(|row| row.iter().map(|&l| l.exp()).collect())
            .collect();
        SolutionField {
            times,
            xs,
            log_u,
            u,
            moments,
        }
    }

    /// Builds a field from plain values, computing trapezoid moments on `xs`.
    pub fn from_values(times: Vec<T>, xs: Vec<T>, u: Vec<Vec<T>>) -> Self {
        let log_u = u
            .iter()
            .map(|row| row.iter().map(|&v| LogVal::from_value(v).ln).collect())
            .collect();
        let moments = u
            .iter()
            .map(|row| Moments::from_samples(&xs, row))
            .collect();
        SolutionField {
            times,
            xs,
            log_u,
            u,
            moments,
        }
    }

    pub fn times(&self) -> &[T] {
        &self.times
    }

    pub fn xs(&self) -> &[T] {
        &self.xs
    }

    pub fn values(&self, j: usize) -> &[T] {
        &self.u[j]
    }

    pub fn log_values(&self, j: usize) -> &[T] {
        &self.log_u[j]
    }

    pub fn moments(&self) -> &[Moments<T>] {
        &self.moments
    }

    /// Index of the stored time matching `t` up to round-off.
    pub fn time_index(&self, t: T) -> Option<usize> {
        let tol = T::lit(1e-9) * t.abs().max(T::one());
        self.times.iter().position(|&s| (s - t).abs() <= tol)
    }

    /// Trait value where slice `j` is largest.
    pub fn argmax(&self, j: usize) -> T {
        let row = &self.log_u[j];
        let mut best = 0;
        for (i, &v) in row.iter().enumerate() {
            if v > row[best] {
                best = i;
            }
        }
        self.xs[best]
    }
}
