//! Semi-analytic solvers for the replicator-mutator equation with linear
//! fitness modulated by the mean trait,
//!
//! ```text
//! ∂t u = σ² ∂xx u + u (x − ū(t)) / ū(t),      ū(t) = ∫ x u(t, x) dx,
//! ```
//!
//! and its companion with mean-modulated mutation,
//!
//! ```text
//! ∂t v = σ² v̄(t) ∂xx v + v (x − v̄(t)).
//! ```
//!
//! The pipeline is: build an initial density and its cumulant generating
//! function ([`initdata`]), solve the fixed-point equation for the mean
//! ([`meanfit`]), evaluate the heat flow of the initial datum ([`heatprop`])
//! and assemble the solution ([`reconstruct`]). [`timewarp`] transports
//! solutions onto the second equation, [`gaussclosed`] holds the closed-form
//! Gaussian families and [`fdoracle`] is an independent explicit
//! finite-difference integrator used to cross-check everything else.
//!
//! All numerics are generic over [`Real`] (`f32` or `f64`); the `*64`
//! aliases below fix the scalar to `f64`.

// `!(x > 0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]
#![cfg_attr(test, allow(clippy::excessive_precision))]

pub mod error;
pub mod fdoracle;
pub mod field;
pub mod gaussclosed;
pub mod heatprop;
pub mod initdata;
pub mod io;
pub mod meanfit;
mod quad;
pub mod reconstruct;
pub mod scalar;
pub mod special;
pub mod timewarp;

pub use error::{Error, Result};
pub use scalar::Real;

pub use fdoracle::{compare_l1, fd_solve, Equation, FdConfig, FdDiagnostics, FdRun};
pub use field::{LogVal, Moments, SolutionField};
pub use gaussclosed::{
    blowup_time, gauss_u, gauss_v_classify, gauss_v_eval, gauss_v_ode, growth_constant, Branch,
    GaussianState, Trajectory, VCase,
};
pub use heatprop::{heat_eval, HeatEval, HeatMode};
pub use initdata::{cgf0, make_density, moment, Cgf, DensitySpec, Family, RawDensity};
pub use meanfit::{
    mean_consistency, picard_trace, solve_mean, variance_of, MeanRow, MeanSolver, MeanTable,
    PicardTrace,
};
pub use reconstruct::{cgf_full, cgf_full_dz, field_on_grid, moments_at, u_eval};
pub use timewarp::{solve_warp, v_eval, v_field_on_grid, v_moments, TimeWarp};

pub type DensitySpec64 = DensitySpec<f64>;
pub type Cgf64 = Cgf<f64>;
pub type MeanTable64 = MeanTable<f64>;
pub type MeanSolver64 = MeanSolver<f64>;
pub type HeatEval64 = HeatEval<f64>;
pub type SolutionField64 = SolutionField<f64>;
pub type GaussianState64 = GaussianState<f64>;
pub type TimeWarp64 = TimeWarp<f64>;
pub type FdConfig64 = FdConfig<f64>;
