//! Scenario files (JSON).
//!
//! ```json
//! {
//!   "name": "fig2b",
//!   "equation": "u_eq",
//!   "initial": { "family": "uniform", "lo": 0.5, "hi": 1.5 },
//!   "sigma2": 1.0,
//!   "horizon": 3.0,
//!   "time_samples": [0.0, 1.0, 2.0, 3.0],
//!   "x_window": "auto",
//!   "solver": "semi_analytic"
//! }
//! ```
//!
//! `time_samples` is either a list of times or `{"count": n}` for `n`
//! evenly spaced times on `[0, horizon]`. `x_window` is `"auto"` or
//! `{"lo": .., "hi": ..}`. Optional blocks: `grid`, `tolerances`, `fd`,
//! `branch`, `picard_iterates`, `output_dir`.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EquationKind {
    UEq,
    VEq,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SolverKind {
    SemiAnalytic,
    ClosedGaussian,
    FdOracle,
    Compare,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BranchKind {
    Plus,
    Minus,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case", deny_unknown_fields)]
pub enum Initial {
    Gaussian {
        a0: f64,
        m0: f64,
    },
    Uniform {
        lo: f64,
        hi: f64,
    },
    /// Two-column text file, relative to the scenario file.
    Tabulated {
        path: PathBuf,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum TimeSamples {
    List(Vec<f64>),
    Count { count: usize },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum XWindow {
    Auto(AutoTag),
    Explicit { lo: f64, hi: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AutoTag {
    Auto,
}

impl Default for XWindow {
    fn default() -> Self {
        XWindow::Auto(AutoTag::Auto)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Grid {
    /// Steps of the mean table on `[0, horizon]`.
    pub time_steps: usize,
    /// Points of the output trait grid (ignored when `x_step` is set).
    pub x_points: usize,
    pub x_step: Option<f64>,
    /// RK4 steps of the time warp.
    pub warp_steps: usize,
}

impl Default for Grid {
    fn default() -> Self {
        Grid {
            time_steps: 3000,
            x_points: 2001,
            x_step: None,
            warp_steps: 1000,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Tolerances {
    pub picard: f64,
    pub max_iter: usize,
    /// Threshold reported against in compare mode.
    pub l1: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            picard: 1e-10,
            max_iter: 64,
            l1: 2e-2,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Fd {
    pub dx: f64,
    pub dt: f64,
    pub xbar_bound: Option<f64>,
}

impl Default for Fd {
    fn default() -> Self {
        Fd {
            dx: 0.02,
            dt: 1e-4,
            xbar_bound: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub name: String,
    pub equation: EquationKind,
    pub initial: Initial,
    pub sigma2: f64,
    pub horizon: f64,
    pub time_samples: TimeSamples,
    #[serde(default)]
    pub x_window: XWindow,
    /// Required when run through `scenario`; the other subcommands set it.
    #[serde(default)]
    pub solver: Option<SolverKind>,
    #[serde(default)]
    pub tolerances: Tolerances,
    #[serde(default)]
    pub grid: Grid,
    #[serde(default)]
    pub fd: Fd,
    /// Sign of the mean for a Gaussian start with `m0 = 0`.
    #[serde(default)]
    pub branch: Option<BranchKind>,
    /// Also write the first few Picard iterates of the mean.
    #[serde(default)]
    pub picard_iterates: Option<usize>,
    #[serde(default)]
    pub output_dir: Option<PathBuf>,
}

/// A parsed scenario plus the directory relative paths resolve against.
#[derive(Debug, Clone)]
pub struct Loaded {
    pub scenario: Scenario,
    pub base_dir: PathBuf,
    pub raw: serde_json::Value,
}

/// Parses scenario text. Empty input is read as `{}`.
pub fn parse(text: &str) -> Result<(Scenario, serde_json::Value), CliError> {
    let text = if text.trim().is_empty() { "{}" } else { text };
    let raw: serde_json::Value =
        serde_json::from_str(text).map_err(|e| CliError::config("<root>", e.to_string()))?;
    let scenario: Scenario = serde_path_to_error::deserialize(&raw).map_err(|e| {
        let path = e.path().to_string();
        let path = if path == "." {
            "<root>".to_string()
        } else {
            path
        };
        CliError::config(path, e.inner().to_string())
    })?;
    validate(&scenario)?;
    Ok((scenario, raw))
}

pub fn load(path: &Path) -> Result<Loaded, CliError> {
    let text = std::fs::read_to_string(path).map_err(|source| CliError::ConfigRead {
        path: path.to_path_buf(),
        source,
    })?;
    let (scenario, raw) = parse(&text)?;
    let base_dir = path.parent().map(Path::to_path_buf).unwrap_or_default();
    Ok(Loaded {
        scenario,
        base_dir,
        raw,
    })
}

fn positive(path: &str, v: f64) -> Result<(), CliError> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(CliError::config(
            path,
            format!("must be positive and finite, got {v}"),
        ))
    }
}

fn validate(s: &Scenario) -> Result<(), CliError> {
    if s.name.trim().is_empty() {
        return Err(CliError::config("name", "must not be empty"));
    }
    positive("sigma2", s.sigma2)?;
    positive("horizon", s.horizon)?;
    match &s.time_samples {
        TimeSamples::List(ts) => {
            if ts.is_empty() {
                return Err(CliError::config("time_samples", "must not be empty"));
            }
            if ts.windows(2).any(|w| !(w[1] > w[0])) {
                return Err(CliError::config(
                    "time_samples",
                    "must be strictly increasing",
                ));
            }
            if ts.iter().any(|&t| !(0.0..=s.horizon).contains(&t)) {
                return Err(CliError::config("time_samples", "must lie in [0, horizon]"));
            }
        }
        TimeSamples::Count { count } => {
            if *count < 2 {
                return Err(CliError::config("time_samples.count", "must be at least 2"));
            }
        }
    }
    if let XWindow::Explicit { lo, hi } = s.x_window {
        if !(lo < hi) || !lo.is_finite() || !hi.is_finite() {
            return Err(CliError::config("x_window", "needs finite lo < hi"));
        }
    }
    if s.grid.time_steps < 2 {
        return Err(CliError::config("grid.time_steps", "must be at least 2"));
    }
    if s.grid.x_points < 2 {
        return Err(CliError::config("grid.x_points", "must be at least 2"));
    }
    if s.grid.warp_steps == 0 {
        return Err(CliError::config("grid.warp_steps", "must be positive"));
    }
    if let Some(step) = s.grid.x_step {
        positive("grid.x_step", step)?;
    }
    positive("tolerances.picard", s.tolerances.picard)?;
    positive("tolerances.l1", s.tolerances.l1)?;
    if s.tolerances.max_iter == 0 {
        return Err(CliError::config("tolerances.max_iter", "must be positive"));
    }
    positive("fd.dx", s.fd.dx)?;
    positive("fd.dt", s.fd.dt)?;
    if let Some(b) = s.fd.xbar_bound {
        positive("fd.xbar_bound", b)?;
    }
    if let Initial::Gaussian { a0, m0 } = s.initial {
        positive("initial.a0", a0)?;
        if !m0.is_finite() {
            return Err(CliError::config("initial.m0", "must be finite"));
        }
    }
    Ok(())
}

impl Scenario {
    pub fn times(&self) -> Vec<f64> {
        match &self.time_samples {
            TimeSamples::List(ts) => ts.clone(),
            TimeSamples::Count { count } => (0..*count)
                .map(|i| {
                    if i + 1 == *count {
                        self.horizon
                    } else {
                        self.horizon * i as f64 / (*count - 1) as f64
                    }
                })
                .collect(),
        }
    }
}
