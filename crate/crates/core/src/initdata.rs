//! Initial densities and their cumulant generating functions.
//!
//! A [`DensitySpec`] is a validated probability density on the trait line:
//! a Gaussian, a uniform law on an interval, or tabulated samples. The
//! [`Cgf`] handle evaluates `C₀(z) = ln ∫ u₀(x) e^{zx} dx` and its first
//! three derivatives on the range where they can be trusted.

use crate::error::{Error, Result};
use crate::quad::{interp_sorted, simpson_weights};
use crate::special::ln_sinhc_derivs;
use crate::Real;

/// Tabulated input is rescaled to unit mass when within this distance of 1.
pub const RENORMALIZE_WITHIN: f64 = 1e-3;
/// Tabulated densities must fall below this value at both grid ends.
pub const ENDPOINT_DECAY: f64 = 1e-12;
/// Tail-domination guard for the tabulated cgf range.
pub const TAIL_GUARD: f64 = 1e-8;

/// Unvalidated description of an initial density.
#[derive(Clone, Debug, PartialEq)]
pub enum RawDensity<T> {
    Gaussian { a0: T, m0: T },
    Uniform { lo: T, hi: T },
    Tabulated { xs: Vec<T>, fs: Vec<T> },
}

#[derive(Clone, Debug, PartialEq)]
pub struct Tabulated<T> {
    xs: Vec<T>,
    fs: Vec<T>,
    weights: Vec<T>,
}

impl<T: Real> Tabulated<T> {
    pub fn xs(&self) -> &[T] {
        &self.xs
    }

    pub fn fs(&self) -> &[T] {
        &self.fs
    }

    /// Smallest spacing of the trait grid.
    pub fn min_step(&self) -> T {
        self.xs
            .windows(2)
            .map(|w| w[1] - w[0])
            .fold(T::infinity(), T::min)
    }

    fn integrate<F: Fn(T) -> T>(&self, g: F) -> T {
        self.xs
            .iter()
            .zip(&self.fs)
            .zip(&self.weights)
            .map(|((&x, &f), &w)| w * f * g(x))
            .sum()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Family<T> {
    /// `sqrt(a0/2π) exp(-a0 (x-m0)²/2)`; `a0` is the inverse variance.
    Gaussian {
        a0: T,
        m0: T,
    },
    /// Indicator of `[lo, hi]` divided by its length.
    Uniform {
        lo: T,
        hi: T,
    },
    Tabulated(Tabulated<T>),
}

/// A validated unit-mass initial density.
#[derive(Clone, Debug, PartialEq)]
pub struct DensitySpec<T> {
    family: Family<T>,
    m0: T,
    rescale: T,
}

/// Validates `raw`. With `require_positive_mean` the density must have a
/// positive mean, as the fixed-point solver for the mean requires.
pub fn make_density<T: Real>(
    raw: RawDensity<T>,
    require_positive_mean: bool,
) -> Result<DensitySpec<T>> {
    let spec = match raw {
        RawDensity::Gaussian { a0, m0 } => {
            if !(a0 > T::zero()) || !a0.is_finite() {
                return Err(Error::param(
                    "a0",
                    format!("inverse variance must be positive and finite, got {a0}"),
                ));
            }
            if !m0.is_finite() {
                return Err(Error::param("m0", "mean must be finite"));
            }
            DensitySpec {
                family: Family::Gaussian { a0, m0 },
                m0,
                rescale: T::one(),
            }
        }
        RawDensity::Uniform { lo, hi } => {
            if !(lo.is_finite() && hi.is_finite()) || !(hi > lo) {
                return Err(Error::param(
                    "uniform",
                    format!("need finite lo < hi, got [{lo}, {hi}]"),
                ));
            }
            DensitySpec {
                family: Family::Uniform { lo, hi },
                m0: T::lit(0.5) * (lo + hi),
                rescale: T::one(),
            }
        }
        RawDensity::Tabulated { xs, fs } => tabulated(xs, fs)?,
    };
    if require_positive_mean && !(spec.m0 > T::zero()) {
        return Err(Error::NonPositiveMeanRequired {
            m0: spec.m0.as_f64(),
        });
    }
    Ok(spec)
}

fn tabulated<T: Real>(xs: Vec<T>, mut fs: Vec<T>) -> Result<DensitySpec<T>> {
    if xs.len() != fs.len() {
        return Err(Error::param(
            "tabulated",
            "x and f columns differ in length",
        ));
    }
    if xs.len() < 3 {
        return Err(Error::param("tabulated", "need at least three samples"));
    }
    if let Some(i) = xs
        .iter()
        .zip(&fs)
        .position(|(x, f)| !x.is_finite() || !f.is_finite())
    {
        return Err(Error::param(
            "tabulated",
            format!("non-finite sample at index {i}"),
        ));
    }
    if let Some(i) = xs.windows(2).position(|w| !(w[1] > w[0])) {
        return Err(Error::UnsortedGrid { index: i + 1 });
    }
    if let Some(i) = fs.iter().position(|&f| f < T::zero()) {
        return Err(Error::NegativeDensity {
            index: i,
            value: fs[i].as_f64(),
        });
    }
    let weights = simpson_weights(&xs);
    let mass: T = fs.iter().zip(&weights).map(|(&f, &w)| f * w).sum();
    if !(mass > T::zero()) {
        return Err(Error::NonPositiveMass {
            mass: mass.as_f64(),
        });
    }
    if (mass - T::one()).abs() >= T::lit(RENORMALIZE_WITHIN) {
        return Err(Error::MassMismatch {
            mass: mass.as_f64(),
        });
    }
    for f in fs.iter_mut() {
        *f = *f / mass;
    }
    let edge = fs[0].max(fs[fs.len() - 1]);
    if edge >= T::lit(ENDPOINT_DECAY) {
        return Err(Error::HeavyTail {
            value: edge.as_f64(),
        });
    }
    let table = Tabulated { xs, fs, weights };
    let m0 = table.integrate(|x| x);
    Ok(DensitySpec {
        family: Family::Tabulated(table),
        m0,
        rescale: T::one() / mass,
    })
}

impl<T: Real> DensitySpec<T> {
    pub fn family(&self) -> &Family<T> {
        &self.family
    }

    /// First moment.
    pub fn m0(&self) -> T {
        self.m0
    }

    /// Factor applied to tabulated values to reach unit mass (1 otherwise).
    pub fn rescale(&self) -> T {
        self.rescale
    }

    pub fn is_analytic(&self) -> bool {
        !matches!(self.family, Family::Tabulated(_))
    }

    /// Raw moment of order `k ∈ {0, 1, 2}`.
    pub fn moment(&self, k: u8) -> T {
        assert!(k <= 2, "moments are provided up to order 2");
        match (&self.family, k) {
            (_, 0) => match &self.family {
                Family::Tabulated(t) => t.integrate(|_| T::one()),
                _ => T::one(),
            },
            (Family::Gaussian { m0, .. }, 1) => *m0,
            (Family::Gaussian { a0, m0 }, _) => T::one() / *a0 + *m0 * *m0,
            (Family::Uniform { lo, hi }, 1) => T::lit(0.5) * (*lo + *hi),
            (Family::Uniform { lo, hi }, _) => (*lo * *lo + *lo * *hi + *hi * *hi) / T::lit(3.0),
            (Family::Tabulated(t), 1) => t.integrate(|x| x),
            (Family::Tabulated(t), _) => t.integrate(|x| x * x),
        }
    }

    pub fn variance(&self) -> T {
        match &self.family {
            Family::Gaussian { a0, .. } => T::one() / *a0,
            Family::Uniform { lo, hi } => (*hi - *lo).powi(2) / T::lit(12.0),
            Family::Tabulated(t) => {
                let m = self.m0;
                t.integrate(|x| (x - m) * (x - m))
            }
        }
    }

    /// Density value. The uniform law takes the midpoint value 1/(2(hi-lo))
    /// at its two jumps, which is the limit of its heat flow as t → 0.
    pub fn pdf(&self, x: T) -> T {
        match &self.family {
            Family::Gaussian { a0, m0 } => {
                let d = x - *m0;
                (*a0 / (T::lit(2.0) * T::PI())).sqrt() * (-T::lit(0.5) * *a0 * d * d).exp()
            }
            Family::Uniform { lo, hi } => {
                let height = T::one() / (*hi - *lo);
                if x > *lo && x < *hi {
                    height
                } else if x == *lo || x == *hi {
                    T::lit(0.5) * height
                } else {
                    T::zero()
                }
            }
            Family::Tabulated(t) => interp_sorted(&t.xs, &t.fs, x).unwrap_or(T::zero()),
        }
    }

    pub fn ln_pdf(&self, x: T) -> T {
        match &self.family {
            Family::Gaussian { a0, m0 } => {
                let d = x - *m0;
                T::lit(0.5) * (*a0 / (T::lit(2.0) * T::PI())).ln() - T::lit(0.5) * *a0 * d * d
            }
            _ => self.pdf(x).ln(),
        }
    }

    /// Average of the density over `[x - dx/2, x + dx/2]` for the uniform
    /// law, point value otherwise. Used to seed grid solvers without
    /// spurious mass at the jumps.
    pub fn cell_average(&self, x: T, dx: T) -> T {
        match &self.family {
            Family::Uniform { lo, hi } => {
                let half = T::lit(0.5) * dx;
                let overlap = ((x + half).min(*hi) - (x - half).max(*lo)).max(T::zero());
                overlap / (dx * (*hi - *lo))
            }
            _ => self.pdf(x),
        }
    }

    /// Smallest interval outside which the density vanishes (infinite
    /// for the Gaussian).
    pub fn support(&self) -> (T, T) {
        match &self.family {
            Family::Gaussian { .. } => (T::neg_infinity(), T::infinity()),
            Family::Uniform { lo, hi } => (*lo, *hi),
            Family::Tabulated(t) => (t.xs[0], t.xs[t.xs.len() - 1]),
        }
    }
}

/// Raw moment of order `k ∈ {0, 1, 2}`.
pub fn moment<T: Real>(spec: &DensitySpec<T>, k: u8) -> T {
    spec.moment(k)
}

/// Cumulant generating function of an initial density, certified on
/// `[0, z_max]`.
#[derive(Clone, Debug)]
pub struct Cgf<T> {
    spec: DensitySpec<T>,
    z_max: T,
}

impl<T: Real> Cgf<T> {
    pub fn new(spec: DensitySpec<T>) -> Self {
        let z_max = match &spec.family {
            Family::Tabulated(t) => tabulated_z_max(t),
            _ => T::infinity(),
        };
        Cgf { spec, z_max }
    }

    pub fn spec(&self) -> &DensitySpec<T> {
        &self.spec
    }

    pub fn z_max(&self) -> T {
        self.z_max
    }

    /// `[C₀(z), C₀′(z), C₀″(z), C₀‴(z)]`.
    pub fn derivs(&self, z: T) -> Result<[T; 4]> {
        if !(z >= T::zero() && z <= self.z_max) {
            return Err(Error::ZOutOfRange {
                z: z.as_f64(),
                z_max: self.z_max.as_f64(),
            });
        }
        Ok(match &self.spec.family {
            Family::Gaussian { a0, m0 } => [
                *m0 * z + z * z / (T::lit(2.0) * *a0),
                *m0 + z / *a0,
                T::one() / *a0,
                T::zero(),
            ],
            Family::Uniform { lo, hi } => {
                let c = T::lit(0.5) * (*lo + *hi);
                let h = T::lit(0.5) * (*hi - *lo);
                let g = ln_sinhc_derivs(h * z);
                [c * z + g[0], c + h * g[1], h * h * g[2], h * h * h * g[3]]
            }
            Family::Tabulated(t) => tabulated_derivs(t, z),
        })
    }

    /// `C₀^{(order)}(z)` for `order ∈ {0, 1, 2, 3}`.
    pub fn eval(&self, z: T, order: usize) -> Result<T> {
        if order > 3 {
            return Err(Error::param(
                "order",
                "cgf derivatives are provided up to order 3",
            ));
        }
        Ok(self.derivs(z)?[order])
    }

    /// `sup |C₀‴|` over `[0, z_hi]`, sampled on `samples` points.
    pub fn third_derivative_bound(&self, z_hi: T, samples: usize) -> Result<T> {
        let samples = samples.max(2);
        let mut best = T::zero();
        for i in 0..=samples {
            let z = z_hi * T::from_usize_lossy(i) / T::from_usize_lossy(samples);
            best = best.max(self.eval(z, 3)?.abs());
        }
        Ok(best)
    }
}

/// `C₀^{(order)}(z)`.
pub fn cgf0<T: Real>(handle: &Cgf<T>, z: T, order: usize) -> Result<T> {
    handle.eval(z, order)
}

/// `ln ∫ f e^{zx}` with the weights used for every tabulated quadrature.
fn tabulated_ln_mgf<T: Real>(t: &Tabulated<T>, z: T) -> (T, Vec<T>) {
    let shift =
        t.xs.iter()
            .zip(&t.fs)
            .filter(|(_, &f)| f > T::zero())
            .map(|(&x, &f)| z * x + f.ln())
            .fold(T::neg_infinity(), T::max);
    let p: Vec<T> =
        t.xs.iter()
            .zip(&t.fs)
            .zip(&t.weights)
            .map(|((&x, &f), &w)| {
                if f > T::zero() {
                    w * (z * x + f.ln() - shift).exp()
                } else {
                    T::zero()
                }
            })
            .collect();
    let s: T = p.iter().copied().sum();
    (shift + s.ln(), p)
}

fn tabulated_derivs<T: Real>(t: &Tabulated<T>, z: T) -> [T; 4] {
    let (c0, p) = tabulated_ln_mgf(t, z);
    let s: T = p.iter().copied().sum();
    let mean = p.iter().zip(&t.xs).map(|(&p, &x)| p * x).sum::<T>() / s;
    let (mut c2, mut c3) = (T::zero(), T::zero());
    for (&p, &x) in p.iter().zip(&t.xs) {
        let d = x - mean;
        c2 = c2 + p * d * d;
        c3 = c3 + p * d * d * d;
    }
    [c0, mean, c2 / s, c3 / s]
}

/// Largest z for which the density at the right end of the grid, tilted
/// by `e^{zx}`, stays below `TAIL_GUARD` times the tilted mass. A grid
/// ending in an exact zero represents its support fully.
fn tabulated_z_max<T: Real>(t: &Tabulated<T>) -> T {
    let n = t.xs.len();
    let (x_end, f_end) = (t.xs[n - 1], t.fs[n - 1]);
    if f_end == T::zero() {
        return T::infinity();
    }
    let threshold = T::lit(TAIL_GUARD).ln();
    let excess = |z: T| f_end.ln() + z * x_end - tabulated_ln_mgf(t, z).0 - threshold;
    if excess(T::zero()) >= T::zero() {
        return T::zero();
    }
    let mut hi = T::one();
    let mut iters = 0;
    while excess(hi) < T::zero() {
        hi = hi * T::lit(2.0);
        iters += 1;
        if iters > 60 {
            return T::infinity();
        }
    }
    let mut lo = T::zero();
    for _ in 0..100 {
        let mid = T::lit(0.5) * (lo + hi);
        if excess(mid) < T::zero() {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    lo
}

#[cfg(test)]
mod tests {
    use super::*;

    fn gaussian_samples(a0: f64, m0: f64, lo: f64, hi: f64, n: usize) -> RawDensity<f64> {
        let xs: Vec<f64> = (0..n)
            .map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64)
            .collect();
        let fs = xs
            .iter()
            .map(|x| {
                (a0 / (2.0 * std::f64::consts::PI)).sqrt() * (-0.5 * a0 * (x - m0).powi(2)).exp()
            })
            .collect();
        RawDensity::Tabulated { xs, fs }
    }

    #[test]
    fn analytic_families_validate() {
        let g = make_density(RawDensity::Gaussian { a0: 1.0, m0: 4.0 }, true).unwrap();
        assert_eq!(g.m0(), 4.0);
        let u = make_density(RawDensity::Uniform { lo: 0.5, hi: 1.5 }, true).unwrap();
        assert_eq!(u.m0(), 1.0);
        assert_eq!(moment(&u, 1), 1.0);
        assert_eq!(moment(&g, 2), 17.0);
        assert_eq!(moment(&g, 0), 1.0);
    }

    #[test]
    fn zero_mean_rejected_only_on_main_path() {
        let raw = RawDensity::Gaussian { a0: 1.0, m0: 0.0 };
        assert!(matches!(
            make_density(raw.clone(), true),
            Err(Error::NonPositiveMeanRequired { .. })
        ));
        assert!(make_density(raw, false).is_ok());
    }

    #[test]
    fn tabulated_errors() {
        let bad_order = RawDensity::Tabulated {
            xs: vec![0.0, 2.0, 1.0, 3.0],
            fs: vec![0.0, 0.5, 0.5, 0.0],
        };
        assert!(matches!(
            make_density(bad_order, false),
            Err(Error::UnsortedGrid { index: 2 })
        ));
        let negative = RawDensity::Tabulated {
            xs: vec![0.0, 1.0, 2.0],
            fs: vec![0.0, -1.0, 0.0],
        };
        assert!(matches!(
            make_density(negative, false),
            Err(Error::NegativeDensity { index: 1, .. })
        ));
        let empty = RawDensity::Tabulated {
            xs: vec![0.0, 1.0, 2.0],
            fs: vec![0.0, 0.0, 0.0],
        };
        assert!(matches!(
            make_density(empty, false),
            Err(Error::NonPositiveMass { .. })
        ));
        let heavy = gaussian_samples(1.0, 0.0, -4.5, 4.5, 901);
        assert!(matches!(
            make_density(heavy, false),
            Err(Error::HeavyTail { .. })
        ));
    }

    #[test]
    fn tabulated_rescaled_to_unit_mass() {
        let RawDensity::Tabulated { xs, fs } = gaussian_samples(1.0, 4.0, -4.0, 12.0, 4001) else {
            unreachable!()
        };
        let scaled: Vec<f64> = fs.iter().map(|f| f * 1.0005).collect();
        let spec = make_density(
            RawDensity::Tabulated {
                xs: xs.clone(),
                fs: scaled,
            },
            true,
        )
        .unwrap();
        assert!((spec.rescale() - 1.0 / 1.0005).abs() < 1e-9);
        assert!((moment(&spec, 0) - 1.0).abs() < 1e-10);
        let far: Vec<f64> = fs.iter().map(|f| f * 1.01).collect();
        assert!(matches!(
            make_density(RawDensity::Tabulated { xs, fs: far }, true),
            Err(Error::MassMismatch { .. })
        ));
    }

    #[test]
    fn gaussian_cgf_values() {
        let cgf = Cgf::new(make_density(RawDensity::Gaussian { a0: 1.0, m0: 4.0 }, true).unwrap());
        assert_eq!(cgf0(&cgf, 1.0, 0).unwrap(), 4.5);
        assert_eq!(cgf0(&cgf, 1.0, 2).unwrap(), 1.0);
        assert!(matches!(
            cgf0(&cgf, -0.1, 0),
            Err(Error::ZOutOfRange { .. })
        ));
    }

    #[test]
    fn uniform_cgf_matches_high_precision_values() {
        // reference digits from a 40-digit evaluation of ln((e^{3z/2}-e^{z/2})/z)
        let cgf = Cgf::new(make_density(RawDensity::Uniform { lo: 0.5, hi: 1.5 }, true).unwrap());
        let cases: [(f64, [f64; 4]); 4] = [
            (
                1e-4,
                [
                    0.00010000041666666663194,
                    1.0000083333333319444,
                    0.083333333291666666683,
                    -8.333333326719576723e-7,
                ],
            ),
            (
                0.3,
                [
                    0.30374719151108931309,
                    1.024962580176749269,
                    0.082959668412590904619,
                    -0.0024822269045494998292,
                ],
            ),
            (
                3.0,
                [
                    3.3503185303891887221,
                    1.2190623631579226186,
                    0.055970105609051347862,
                    -0.013154765794997115066,
                ],
            ),
            (
                10.0,
                [
                    12.697369506045583827,
                    1.4000454019910096878,
                    0.0099545959476495245879,
                    -0.0019545918247807713485,
                ],
            ),
        ];
        for (z, expect) in cases {
            let got = cgf.derivs(z).unwrap();
            for k in 0..4 {
                let tol = 1e-13 * expect[k].abs().max(1e-3);
                assert!(
                    (got[k] - expect[k]).abs() < tol,
                    "z={z} order={k}: {} vs {}",
                    got[k],
                    expect[k]
                );
            }
        }
        assert!((cgf0(&cgf, 0.0, 2).unwrap() - 1.0 / 12.0).abs() < 1e-16);
    }

    #[test]
    fn tabulated_cgf_tracks_gaussian_closed_form() {
        let spec = make_density(gaussian_samples(1.0, 4.0, -4.0, 12.0, 4001), true).unwrap();
        assert!((moment(&spec, 1) - 4.0).abs() < 1e-8);
        let cgf = Cgf::new(spec);
        assert!(cgf.z_max() >= 2.0, "z_max = {}", cgf.z_max());
        for i in 0..=40 {
            let z = 2.0 * i as f64 / 40.0;
            let d = cgf.derivs(z).unwrap();
            assert!((d[0] - (4.0 * z + 0.5 * z * z)).abs() <= 1e-8, "C0 at {z}");
            assert!((d[1] - (4.0 + z)).abs() <= 1e-8, "C0' at {z}");
            if z <= 1.0 {
                assert!((d[2] - 1.0).abs() <= 1e-8, "C0'' at {z}");
                assert!(d[3].abs() <= 1e-8, "C0''' at {z}");
            }
        }
        assert!(matches!(
            cgf.derivs(cgf.z_max() * 1.01),
            Err(Error::ZOutOfRange { .. })
        ));
    }
}
