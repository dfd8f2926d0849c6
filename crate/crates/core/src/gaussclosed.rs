//! Closed-form Gaussian solutions.
//!
//! A Gaussian state is carried as `(a, m)` with density
//! `sqrt(a/2π) exp(−a(x − m)²/2)`, so `1/a` is the variance.

use crate::error::{Error, Result};
use crate::Real;

/// Relative tolerance for the boundary between cases I and III.
pub const CASE_II_RTOL: f64 = 1e-12;
/// The ODE cross-check stops once `a` exceeds this.
pub const STIFFNESS_CAP: f64 = 1e12;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GaussianState<T> {
    pub a: T,
    pub m: T,
}

impl<T: Real> GaussianState<T> {
    pub fn variance(&self) -> T {
        self.a.recip()
    }
}

/// Sign of the mean for the `m0 = 0` start of the u-equation, where both
/// signs solve the system.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Branch {
    Plus,
    Minus,
}

/// Long-time behaviour of the v-equation.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VCase {
    /// Concentration in finite time.
    I,
    /// Concentration as `t → ∞`.
    II,
    /// Flattening with exponentially growing mean.
    III,
}

fn check_a0<T: Real>(a0: T) -> Result<()> {
    if !(a0 > T::zero()) || !a0.is_finite() {
        return Err(Error::NonPositiveA0 { a0: a0.as_f64() });
    }
    Ok(())
}

fn check_sigma2<T: Real>(sigma2: T) -> Result<()> {
    if !(sigma2 > T::zero()) || !sigma2.is_finite() {
        return Err(Error::param("sigma2", "must be positive and finite"));
    }
    Ok(())
}

/// Gaussian solution of the u-equation.
pub fn gauss_u<T: Real>(a0: T, m0: T, sigma2: T, t: T, branch: Branch) -> Result<GaussianState<T>> {
    check_a0(a0)?;
    check_sigma2(sigma2)?;
    if t < T::zero() {
        return Err(Error::NegativeTime { t: t.as_f64() });
    }
    let two = T::lit(2.0);
    let a = a0 / (T::one() + two * a0 * sigma2 * t);
    let mag = (two * sigma2 * t * t + two * t / a0 + m0 * m0).sqrt();
    let sign = if m0 > T::zero() {
        T::one()
    } else if m0 < T::zero() {
        -T::one()
    } else {
        match branch {
            Branch::Plus => T::one(),
            Branch::Minus => -T::one(),
        }
    };
    Ok(GaussianState { a, m: sign * mag })
}

struct VParams<T> {
    lambda: T,
    kappa: T,
    root2: T,
    sigma: T,
}

fn v_params<T: Real>(a0: T, m0: T, sigma2: T) -> VParams<T> {
    let two = T::lit(2.0);
    let sigma = sigma2.sqrt();
    VParams {
        lambda: (two * sigma2).sqrt(),
        kappa: two * a0 * m0 * sigma,
        root2: T::SQRT_2(),
        sigma,
    }
}

/// Case split of the v-equation around `m0 = −1/(a0 √(2σ²))`.
pub fn gauss_v_classify<T: Real>(a0: T, m0: T, sigma2: T) -> Result<VCase> {
    check_a0(a0)?;
    check_sigma2(sigma2)?;
    let threshold = -(a0 * (T::lit(2.0) * sigma2).sqrt()).recip();
    if (m0 - threshold).abs() <= T::lit(CASE_II_RTOL) * threshold.abs() {
        Ok(VCase::II)
    } else if m0 < threshold {
        Ok(VCase::I)
    } else {
        Ok(VCase::III)
    }
}

/// Finite blow-up time, present only in case I.
pub fn blowup_time<T: Real>(a0: T, m0: T, sigma2: T) -> Result<Option<T>> {
    if gauss_v_classify(a0, m0, sigma2)? != VCase::I {
        return Ok(None);
    }
    let p = v_params(a0, m0, sigma2);
    let ratio = (p.kappa - p.root2) / (p.kappa + p.root2);
    Ok(Some(ratio.ln() / (T::lit(2.0) * p.lambda)))
}

/// Gaussian solution of the v-equation.
pub fn gauss_v_eval<T: Real>(a0: T, m0: T, sigma2: T, t: T) -> Result<GaussianState<T>> {
    let case = gauss_v_classify(a0, m0, sigma2)?;
    if t < T::zero() {
        return Err(Error::NegativeTime { t: t.as_f64() });
    }
    let p = v_params(a0, m0, sigma2);
    let grow = (p.lambda * t).exp();
    let decay = (-p.lambda * t).exp();
    match case {
        VCase::II => {
            return Ok(GaussianState {
                a: a0 * grow,
                m: m0 * decay,
            })
        }
        VCase::I => {
            let t_star = blowup_time(a0, m0, sigma2)?.unwrap_or_else(T::infinity);
            if t >= t_star {
                return Err(Error::PastBlowup {
                    t: t.as_f64(),
                    t_star: t_star.as_f64(),
                });
            }
        }
        VCase::III => {}
    }
    let plus = p.root2 + p.kappa;
    let minus = p.root2 - p.kappa;
    let scale = T::lit(4.0) * a0 * p.sigma;
    let m = plus / scale * grow - minus / scale * decay;
    let a = T::lit(2.0) * p.root2 * a0 / (plus * grow + minus * decay);
    Ok(GaussianState { a, m })
}

/// Leading growth constant of the mean in case III: `m(t) e^{−√(2σ²) t} → C_m`.
pub fn growth_constant<T: Real>(a0: T, m0: T, sigma2: T) -> Result<T> {
    check_a0(a0)?;
    check_sigma2(sigma2)?;
    let p = v_params(a0, m0, sigma2);
    Ok((p.kappa + p.root2) / (T::lit(4.0) * a0 * p.sigma))
}

/// Sampled trajectory of `(a, m)`.
#[derive(Debug, Clone)]
pub struct Trajectory<T> {
    pub t: Vec<T>,
    pub states: Vec<GaussianState<T>>,
}

/// RK4 integration of `m′ = 1/a`, `a′ = −2σ²a²m` on `[0, horizon]`.
pub fn gauss_v_ode<T: Real>(
    a0: T,
    m0: T,
    sigma2: T,
    horizon: T,
    steps: usize,
) -> Result<Trajectory<T>> {
    check_a0(a0)?;
    check_sigma2(sigma2)?;
    if steps == 0 || !(horizon > T::zero()) {
        return Err(Error::param(
            "steps",
            "need a positive horizon and at least one step",
        ));
    }
    let h = horizon / T::from_usize_lossy(steps);
    let two = T::lit(2.0);
    let rhs = |s: GaussianState<T>| GaussianState {
        a: -two * sigma2 * s.a * s.a * s.m,
        m: s.a.recip(),
    };
    let axpy = |s: GaussianState<T>, k: GaussianState<T>, c: T| GaussianState {
        a: s.a + c * k.a,
        m: s.m + c * k.m,
    };
    let cap = T::lit(STIFFNESS_CAP);
    let mut out = Trajectory {
        t: vec![T::zero()],
        states: vec![GaussianState { a: a0, m: m0 }],
    };
    let mut s = out.states[0];
    let half = h / two;
    for i in 1..=steps {
        let k1 = rhs(s);
        let k2 = rhs(axpy(s, k1, half));
        let k3 = rhs(axpy(s, k2, half));
        let k4 = rhs(axpy(s, k3, h));
        let sixth = h / T::lit(6.0);
        s = GaussianState {
            a: s.a + sixth * (k1.a + two * k2.a + two * k3.a + k4.a),
            m: s.m + sixth * (k1.m + two * k2.m + two * k3.m + k4.m),
        };
        let t = T::from_usize_lossy(i) * h;
        if !(s.a > T::zero()) || !(s.a <= cap) || !s.m.is_finite() {
            return Err(Error::StiffnessAbort { t: t.as_f64() });
        }
        out.t.push(t);
        out.states.push(s);
    }
    Ok(out)
}
