//! Heat flow `∂t w = σ² ∂yy w`, `w(0, ·) = u₀`, evaluated in log form.
//!
//! Gaussian and uniform data have closed forms. Tabulated data are
//! convolved with the heat kernel by a log-sum-exp trapezoid rule.

use crate::error::{Error, Result};
use crate::field::LogVal;
use crate::initdata::{DensitySpec, Family};
use crate::special::ln_erf_diff;
use crate::Real;

/// Below this time tabulated data are returned without convolution.
pub const SMALL_TIME: f64 = 1e-6;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum HeatMode {
    ClosedForm,
    Convolution,
}

#[derive(Clone, Debug)]
pub struct HeatEval<T> {
    spec: DensitySpec<T>,
    sigma2: T,
    mode: HeatMode,
}

impl<T: Real> HeatEval<T> {
    pub fn new(spec: DensitySpec<T>, sigma2: T) -> Result<Self> {
        if !(sigma2 > T::zero()) || !sigma2.is_finite() {
            return Err(Error::param(
                "sigma2",
                format!("must be positive, got {sigma2}"),
            ));
        }
        let mode = if spec.is_analytic() {
            HeatMode::ClosedForm
        } else {
            HeatMode::Convolution
        };
        Ok(HeatEval { spec, sigma2, mode })
    }

    pub fn spec(&self) -> &DensitySpec<T> {
        &self.spec
    }

    pub fn sigma2(&self) -> T {
        self.sigma2
    }

    pub fn mode(&self) -> HeatMode {
        self.mode
    }

    /// `w(t, y)` and `ln w(t, y)`.
    pub fn eval(&self, t: T, y: T) -> Result<LogVal<T>> {
        if t < T::zero() || t.is_nan() {
            return Err(Error::NegativeTime { t: t.as_f64() });
        }
        if t == T::zero() {
            return Ok(LogVal::from_ln(self.spec.ln_pdf(y)));
        }
        let two = T::lit(2.0);
        Ok(match self.spec.family() {
            Family::Gaussian { a0, m0 } => {
                let var = T::one() / *a0 + two * self.sigma2 * t;
                let d = y - *m0;
                LogVal::from_ln(-T::lit(0.5) * (two * T::PI() * var).ln() - d * d / (two * var))
            }
            Family::Uniform { lo, hi } => {
                let scale = (T::lit(4.0) * self.sigma2 * t).sqrt();
                let p = (*hi - y) / scale;
                let q = (*lo - y) / scale;
                // the density is 1/(hi-lo) on its support
                let ln = ln_erf_diff(p, q) - (two * (*hi - *lo)).ln();
                LogVal::from_ln(ln)
            }
            Family::Tabulated(tab) => {
                if t < T::lit(SMALL_TIME) {
                    return Ok(LogVal::from_value(self.spec.pdf(y)));
                }
                let xs = tab.xs();
                let four_s2t = T::lit(4.0) * self.sigma2 * t;
                let kernel_sd = (two * self.sigma2 * t).sqrt();
                let step = (kernel_sd / T::lit(8.0)).min(tab.min_step());
                // ±10 kernel deviations around y; the whole support once y
                // lies beyond that window, where the tail is what matters
                let reach = T::lit(10.0) * kernel_sd;
                let (mut x_lo, mut x_hi) = (xs[0], xs[xs.len() - 1]);
                if y - reach > x_lo && y - reach < x_hi {
                    x_lo = y - reach;
                }
                if y + reach < x_hi && y + reach > x_lo {
                    x_hi = y + reach;
                }
                let n = ((x_hi - x_lo) / step - T::lit(1e-9))
                    .ceil()
                    .to_usize()
                    .unwrap_or(1)
                    .max(1);
                let h = (x_hi - x_lo) / T::from_usize_lossy(n);
                // streaming log-sum-exp of trapezoid terms
                let mut shift = T::neg_infinity();
                let mut acc = T::zero();
                for i in 0..=n {
                    let x = if i == n {
                        x_hi
                    } else {
                        x_lo + T::from_usize_lossy(i) * h
                    };
                    let f = self.spec.pdf(x);
                    if !(f > T::zero()) {
                        continue;
                    }
                    let weight = if i == 0 || i == n {
                        T::lit(0.5)
                    } else {
                        T::one()
                    };
                    let term = f.ln() + weight.ln() - (y - x) * (y - x) / four_s2t;
                    if term > shift {
                        acc = acc * (shift - term).exp() + T::one();
                        shift = term;
                    } else {
                        acc = acc + (term - shift).exp();
                    }
                }
                if acc == T::zero() {
                    LogVal::from_ln(T::neg_infinity())
                } else {
                    let ln = shift + acc.ln() + h.ln() - T::lit(0.5) * (T::PI() * four_s2t).ln();
                    LogVal::from_ln(ln)
                }
            }
        })
    }
}

/// Evaluates the heat flow of `h`'s initial datum at `(t, y)`.
pub fn heat_eval<T: Real>(h: &HeatEval<T>, t: T, y: T) -> Result<LogVal<T>> {
    h.eval(t, y)
}
