use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use repmut::io::{
    read_tabulated, write_field, write_mean_table, write_moments, write_trajectory, write_warp,
    write_xbar_trace,
};
use repmut::{
    blowup_time, compare_l1, fd_solve, field_on_grid, gauss_u, gauss_v_classify, gauss_v_eval,
    make_density, mean_consistency, solve_warp, v_field_on_grid, Branch, Cgf64, DensitySpec64,
    Equation, Family, FdConfig, GaussianState, HeatEval, MeanSolver, MeanTable64, Moments,
    RawDensity, SolutionField64, TimeWarp64, Trajectory, VCase,
};
use serde_json::{json, Map, Value};

use crate::config::{BranchKind, EquationKind, Initial, Loaded, Scenario, SolverKind, XWindow};
use crate::error::CliError;

/// Half-width of the automatic trait window, in standard deviations.
pub const AUTO_WINDOW_SD: f64 = 12.0;

/// Which part of the pipeline a subcommand runs.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    /// Use the scenario's own `solver`.
    Scenario,
    Mean,
    Solve,
    Gaussian,
    VSolve,
    Oracle,
    Compare,
}

#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub out: Option<PathBuf>,
    pub tol: Option<f64>,
    pub grid: Option<usize>,
}

#[derive(Debug, Clone)]
pub struct Outcome {
    pub out_dir: PathBuf,
    pub files: Vec<String>,
}

struct Artifacts {
    dir: PathBuf,
    files: Vec<String>,
}

impl Artifacts {
    fn new(dir: PathBuf) -> Result<Self, CliError> {
        std::fs::create_dir_all(&dir).map_err(|source| CliError::Output {
            path: dir.clone(),
            source,
        })?;
        Ok(Artifacts {
            dir,
            files: Vec::new(),
        })
    }

    fn write<F>(&mut self, name: &str, body: F) -> Result<(), CliError>
    where
        F: FnOnce(&mut BufWriter<File>) -> repmut::Result<()>,
    {
        let path = self.dir.join(name);
        let out = |source| CliError::Output {
            path: path.clone(),
            source,
        };
        let mut w = BufWriter::new(File::create(&path).map_err(out)?);
        match body(&mut w) {
            Ok(()) => {}
            Err(repmut::Error::Io(e)) => return Err(out(e)),
            Err(e) => return Err(e.into()),
        }
        w.flush().map_err(out)?;
        self.files.push(name.to_string());
        Ok(())
    }

    fn json(&mut self, name: &str, value: &Value) -> Result<(), CliError> {
        self.write(name, |w| {
            serde_json::to_writer_pretty(&mut *w, value).map_err(std::io::Error::from)?;
            writeln!(w)?;
            Ok(())
        })
    }
}

struct Run<'a> {
    loaded: &'a Loaded,
    s: Scenario,
    times: Vec<f64>,
    residuals: Map<String, Value>,
    art: Artifacts,
}

/// Loads and runs a scenario file.
pub fn run_scenario(path: &Path, mode: Mode, overrides: &Overrides) -> Result<Outcome, CliError> {
    let loaded = crate::config::load(path)?;
    run_loaded(&loaded, mode, overrides)
}

pub fn run_loaded(loaded: &Loaded, mode: Mode, overrides: &Overrides) -> Result<Outcome, CliError> {
    let mut s = loaded.scenario.clone();
    if let Some(tol) = overrides.tol {
        if !(tol > 0.0 && tol.is_finite()) {
            return Err(CliError::config("--tol", "must be positive"));
        }
        s.tolerances.picard = tol;
    }
    if let Some(n) = overrides.grid {
        if n < 2 {
            return Err(CliError::config("--grid", "must be at least 2"));
        }
        s.grid.time_steps = n;
    }
    let solver = match mode {
        Mode::Scenario => s
            .solver
            .ok_or_else(|| CliError::config("solver", "missing field `solver`"))?,
        Mode::Mean | Mode::Solve | Mode::VSolve => SolverKind::SemiAnalytic,
        Mode::Gaussian => SolverKind::ClosedGaussian,
        Mode::Oracle => SolverKind::FdOracle,
        Mode::Compare => SolverKind::Compare,
    };
    match mode {
        Mode::Solve => s.equation = EquationKind::UEq,
        Mode::VSolve => s.equation = EquationKind::VEq,
        _ => {}
    }
    s.solver = Some(solver);
    let out_dir = overrides
        .out
        .clone()
        .or_else(|| s.output_dir.clone())
        .unwrap_or_else(|| PathBuf::from("out").join(&s.name));
    let mut run = Run {
        loaded,
        times: s.times(),
        s,
        residuals: Map::new(),
        art: Artifacts::new(out_dir)?,
    };
    match (mode, solver) {
        (Mode::Mean, _) => run.mean_only()?,
        (_, SolverKind::SemiAnalytic) => {
            run.semi_analytic()?;
        }
        (_, SolverKind::ClosedGaussian) => run.closed_gaussian()?,
        (_, SolverKind::FdOracle) => {
            run.fd_oracle("")?;
        }
        (_, SolverKind::Compare) => run.compare()?,
    }
    run.manifest(solver, overrides)
}

fn envelope(moments: impl IntoIterator<Item = (f64, f64)>) -> (f64, f64) {
    moments.into_iter().fold(
        (f64::INFINITY, f64::NEG_INFINITY),
        |(lo, hi), (mean, var)| {
            let reach = AUTO_WINDOW_SD * var.sqrt();
            (lo.min(mean - reach), hi.max(mean + reach))
        },
    )
}

fn gaussian_field(times: &[f64], xs: &[f64], states: &[GaussianState<f64>]) -> SolutionField64 {
    let log_u = states
        .iter()
        .map(|s| {
            let norm = 0.5 * (s.a / (2.0 * std::f64::consts::PI)).ln();
            xs.iter()
                .map(|&x| norm - 0.5 * s.a * (x - s.m).powi(2))
                .collect()
        })
        .collect();
    let moments = states
        .iter()
        .map(|s| Moments {
            mass: 1.0,
            mean: s.m,
            variance: s.variance(),
        })
        .collect();
    SolutionField64::from_log(times.to_vec(), xs.to_vec(), log_u, moments)
}

impl Run<'_> {
    fn raw_density(&self) -> Result<RawDensity<f64>, CliError> {
        Ok(match &self.s.initial {
            Initial::Gaussian { a0, m0 } => RawDensity::Gaussian { a0: *a0, m0: *m0 },
            Initial::Uniform { lo, hi } => RawDensity::Uniform { lo: *lo, hi: *hi },
            Initial::Tabulated { path } => {
                let full = self.loaded.base_dir.join(path);
                let file = File::open(&full).map_err(|e| {
                    CliError::config("initial.path", format!("{}: {e}", full.display()))
                })?;
                let (xs, fs) = read_tabulated(BufReader::new(file))
                    .map_err(|e| CliError::config("initial.path", e.to_string()))?;
                RawDensity::Tabulated { xs, fs }
            }
        })
    }

    fn density(&self, require_positive_mean: bool) -> Result<DensitySpec64, CliError> {
        make_density(self.raw_density()?, require_positive_mean).map_err(|e| match e {
            repmut::Error::NonPositiveMeanRequired { m0 } => CliError::config(
                "initial",
                format!("the semi-analytic route needs a positive initial mean, got m0 = {m0}"),
            ),
            e => CliError::config("initial", e.to_string()),
        })
    }

    fn gaussian_params(&self) -> Result<(f64, f64), CliError> {
        match self.s.initial {
            Initial::Gaussian { a0, m0 } => Ok((a0, m0)),
            _ => Err(CliError::config(
                "initial.family",
                "closed-form solutions need the gaussian family",
            )),
        }
    }

    fn branch(&self, m0: f64) -> Result<Branch, CliError> {
        match (self.s.branch, m0 == 0.0) {
            (Some(BranchKind::Minus), _) => Ok(Branch::Minus),
            (Some(BranchKind::Plus), _) => Ok(Branch::Plus),
            (None, true) => Err(CliError::config(
                "branch",
                "required when m0 = 0 (\"plus\" or \"minus\")",
            )),
            (None, false) => Ok(Branch::Plus),
        }
    }

    fn x_grid(
        &self,
        auto: impl FnOnce() -> Result<(f64, f64), CliError>,
        step: Option<f64>,
    ) -> Result<Vec<f64>, CliError> {
        let (lo, hi) = match self.s.x_window {
            XWindow::Explicit { lo, hi } => (lo, hi),
            XWindow::Auto(_) => auto()?,
        };
        Ok(match step.or(self.s.grid.x_step) {
            Some(h) => {
                let (i0, i1) = ((lo / h).floor() as i64, (hi / h).ceil() as i64);
                (i0..=i1).map(|i| i as f64 * h).collect()
            }
            None => {
                let n = self.s.grid.x_points;
                (0..n)
                    .map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64)
                    .collect()
            }
        })
    }

    fn mean_solver(&self, spec: &DensitySpec64) -> Result<MeanSolver<f64>, CliError> {
        Ok(MeanSolver::new(Cgf64::new(spec.clone()), self.s.sigma2)?
            .with_tol(self.s.tolerances.picard)
            .with_max_iter(self.s.tolerances.max_iter))
    }

    fn record_table(
        &mut self,
        solver: &MeanSolver<f64>,
        table: &MeanTable64,
    ) -> Result<(), CliError> {
        let r = &mut self.residuals;
        r.insert("picard_iterations".into(), json!(table.iter_count()));
        r.insert("picard_residual".into(), json!(table.residual_norm()));
        r.insert(
            "fixed_point_defect".into(),
            json!(solver.fixed_point_defect(table)?),
        );
        r.insert(
            "mean_consistency".into(),
            json!(mean_consistency(table, solver.cgf())?),
        );
        r.insert("table_horizon".into(), json!(table.horizon()));
        if let Some(count) = self.s.picard_iterates {
            let q = solver.iterates(self.s.horizon, self.s.grid.time_steps, count)?;
            let times = table.times().to_vec();
            self.art.write("picard_iterates.csv", |w| {
                let head: Vec<String> = (0..count).map(|k| format!("q{k}")).collect();
                writeln!(w, "t,{}", head.join(","))?;
                for (k, t) in times.iter().enumerate() {
                    let cells: Vec<String> = q.iter().map(|it| format!("{:.16e}", it[k])).collect();
                    writeln!(w, "{t:.16e},{}", cells.join(","))?;
                }
                Ok(())
            })?;
        }
        let table = table.clone();
        self.art
            .write("mean_table.csv", |w| write_mean_table(w, &table))
    }

    fn record_field(&mut self, prefix: &str, field: &SolutionField64) -> Result<(), CliError> {
        let worst = field
            .moments()
            .iter()
            .map(|m| (m.mass - 1.0).abs())
            .fold(0.0, f64::max);
        self.residuals
            .insert(format!("{prefix}max_mass_error"), json!(worst));
        self.art
            .write(&format!("{prefix}field.csv"), |w| write_field(w, field))?;
        self.art
            .write(&format!("{prefix}moments.csv"), |w| write_moments(w, field))
    }

    fn mean_only(&mut self) -> Result<(), CliError> {
        let spec = self.density(true)?;
        let solver = self.mean_solver(&spec)?;
        let table = solver.solve(self.s.horizon, self.s.grid.time_steps)?;
        self.record_table(&solver, &table)
    }

    /// Solves the mean (and the warp for the v-equation); returns the
    /// pieces a field evaluation needs.
    fn semi_pieces(
        &mut self,
    ) -> Result<(HeatEval<f64>, MeanTable64, Option<TimeWarp64>), CliError> {
        let spec = self.density(true)?;
        let solver = self.mean_solver(&spec)?;
        let table = solver.solve(self.s.horizon, self.s.grid.time_steps)?;
        let heat = HeatEval::new(spec, self.s.sigma2)?;
        match self.s.equation {
            EquationKind::UEq => {
                self.record_table(&solver, &table)?;
                Ok((heat, table, None))
            }
            EquationKind::VEq => {
                let warp = solve_warp(&solver, table, self.s.horizon, self.s.grid.warp_steps)?;
                self.record_table(&solver, warp.table())?;
                self.residuals
                    .insert("warp_extensions".into(), json!(warp.extensions()));
                self.residuals
                    .insert("phi_end".into(), json!(warp.phi_values().last()));
                let w = warp.clone();
                self.art.write("warp.csv", |out| write_warp(out, &w))?;
                let table = warp.table().clone();
                Ok((heat, table, Some(warp)))
            }
        }
    }

    fn semi_window(
        &self,
        heat: &HeatEval<f64>,
        table: &MeanTable64,
        warp: Option<&TimeWarp64>,
    ) -> Result<(f64, f64), CliError> {
        let spec = heat.spec();
        let mut pts = Vec::with_capacity(self.times.len());
        for &t in &self.times {
            let tu = match warp {
                Some(w) => w.phi(t)?,
                None => t,
            };
            if tu == 0.0 {
                pts.push((spec.m0(), spec.variance()));
            } else {
                let row = table.row(tu)?;
                pts.push((row.ubar, row.v));
            }
        }
        Ok(envelope(pts))
    }

    fn semi_field(
        &self,
        heat: &HeatEval<f64>,
        table: &MeanTable64,
        warp: Option<&TimeWarp64>,
        xs: &[f64],
    ) -> Result<SolutionField64, CliError> {
        Ok(match warp {
            Some(w) => v_field_on_grid(w, heat, &self.times, xs)?,
            None => field_on_grid(table, heat, &self.times, xs)?,
        })
    }

    fn semi_analytic(&mut self) -> Result<(), CliError> {
        let (heat, table, warp) = self.semi_pieces()?;
        let xs = self.x_grid(|| self.semi_window(&heat, &table, warp.as_ref()), None)?;
        let field = self.semi_field(&heat, &table, warp.as_ref(), &xs)?;
        self.record_field("", &field)
    }

    fn closed_states(&self) -> Result<Vec<GaussianState<f64>>, CliError> {
        let (a0, m0) = self.gaussian_params()?;
        let s2 = self.s.sigma2;
        Ok(match self.s.equation {
            EquationKind::UEq => {
                let branch = self.branch(m0)?;
                self.times
                    .iter()
                    .map(|&t| gauss_u(a0, m0, s2, t, branch))
                    .collect::<Result<_, _>>()?
            }
            EquationKind::VEq => self
                .times
                .iter()
                .map(|&t| gauss_v_eval(a0, m0, s2, t))
                .collect::<Result<_, _>>()?,
        })
    }

    fn closed_gaussian(&mut self) -> Result<(), CliError> {
        let (a0, m0) = self.gaussian_params()?;
        let states = self.closed_states()?;
        if self.s.equation == EquationKind::VEq {
            let case = gauss_v_classify(a0, m0, self.s.sigma2)?;
            let name = match case {
                VCase::I => "I",
                VCase::II => "II",
                VCase::III => "III",
            };
            self.residuals.insert("case".into(), json!(name));
            if let Some(t_star) = blowup_time(a0, m0, self.s.sigma2)? {
                self.residuals.insert("blowup_time".into(), json!(t_star));
            }
        }
        let traj = Trajectory {
            t: self.times.clone(),
            states: states.clone(),
        };
        self.art
            .write("trajectory.csv", |w| write_trajectory(w, &traj))?;
        let xs = self.x_grid(
            || Ok(envelope(states.iter().map(|s| (s.m, s.variance())))),
            None,
        )?;
        let field = gaussian_field(&self.times, &xs, &states);
        self.record_field("", &field)
    }

    /// Predicted `(mean, variance)` per output time for sizing the FD domain.
    fn fd_prediction(&mut self, spec: &DensitySpec64) -> Result<Vec<(f64, f64)>, CliError> {
        if matches!(spec.family(), Family::Gaussian { .. }) {
            return Ok(self
                .closed_states()?
                .iter()
                .map(|s| (s.m, s.variance()))
                .collect());
        }
        if !(spec.m0() > 0.0) {
            return Err(CliError::config(
                "x_window",
                "an explicit window is needed when no prediction is available (non-Gaussian data with m0 <= 0)",
            ));
        }
        let solver = self.mean_solver(spec)?;
        let table = solver.solve(self.s.horizon, self.s.grid.time_steps)?;
        let warp = match self.s.equation {
            EquationKind::UEq => None,
            EquationKind::VEq => Some(solve_warp(
                &solver,
                table.clone(),
                self.s.horizon,
                self.s.grid.warp_steps,
            )?),
        };
        let table = warp.as_ref().map(|w| w.table().clone()).unwrap_or(table);
        let mut out = Vec::new();
        for &t in &self.times {
            let tu = match &warp {
                Some(w) => w.phi(t)?,
                None => t,
            };
            if tu == 0.0 {
                out.push((spec.m0(), spec.variance()));
            } else {
                let row = table.row(tu)?;
                out.push((row.ubar, row.v));
            }
        }
        Ok(out)
    }

    fn fd_oracle(&mut self, prefix: &str) -> Result<SolutionField64, CliError> {
        let spec = self.density(false)?;
        let needs_prediction = matches!(self.s.x_window, XWindow::Auto(_))
            || (self.s.equation == EquationKind::VEq && self.s.fd.xbar_bound.is_none());
        let predicted = if needs_prediction {
            match self.fd_prediction(&spec) {
                Ok(p) => Some(p),
                Err(_) if matches!(self.s.x_window, XWindow::Explicit { .. }) => None,
                Err(e) => return Err(e),
            }
        } else {
            None
        };
        let dx = self.s.fd.dx;
        let pred = predicted.clone();
        let xs = self.x_grid(|| Ok(envelope(pred.unwrap_or_default())), Some(dx))?;
        let equation = match self.s.equation {
            EquationKind::UEq => Equation::U,
            EquationKind::VEq => Equation::V,
        };
        let mut cfg = FdConfig::new(
            equation,
            xs[0],
            xs[xs.len() - 1],
            dx,
            self.s.fd.dt,
            self.times[self.times.len() - 1],
            self.s.sigma2,
        )
        .with_output_times(self.times.clone());
        let bound = self.s.fd.xbar_bound.or_else(|| {
            predicted
                .as_ref()
                .map(|p| 1.1 * p.iter().map(|&(m, _)| m.abs()).fold(0.0, f64::max) + 0.1)
        });
        if let (Equation::V, Some(b)) = (equation, bound) {
            cfg = cfg.with_xbar_bound(b);
        }
        let run = fd_solve(&cfg, &spec)?;
        let d = &run.diagnostics;
        self.residuals
            .insert(format!("{prefix}mass_drift_max"), json!(d.mass_drift_max));
        self.residuals
            .insert(format!("{prefix}cfl_margin_min"), json!(d.cfl_margin_min));
        self.residuals
            .insert(format!("{prefix}steps"), json!(d.steps));
        self.residuals
            .insert(format!("{prefix}dt_halvings"), json!(d.dt_halvings));
        let trace_name = format!("{prefix}xbar_trace.csv");
        let trace = d.xbar_trace.clone();
        self.art
            .write(&trace_name, |w| write_xbar_trace(w, &trace))?;
        let diag = json!({
            "mass_drift_max": d.mass_drift_max,
            "xbar_trace_path": trace_name,
            "cfl_margin_min": d.cfl_margin_min,
        });
        self.art.json(&format!("{prefix}diagnostics.json"), &diag)?;
        self.record_field(prefix, &run.field)?;
        Ok(run.field)
    }

    fn compare(&mut self) -> Result<(), CliError> {
        let fd = self.fd_oracle("fd_")?;
        let (heat, table, warp) = self.semi_pieces()?;
        let semi = self.semi_field(&heat, &table, warp.as_ref(), fd.xs())?;
        self.record_field("", &semi)?;
        let mut rows = Vec::new();
        for &t in &self.times {
            rows.push((t, compare_l1(&semi, &fd, t)?));
        }
        let worst = rows.iter().map(|r| r.1).fold(0.0, f64::max);
        self.residuals.insert("max_l1".into(), json!(worst));
        self.residuals
            .insert("l1_threshold".into(), json!(self.s.tolerances.l1));
        self.residuals.insert(
            "l1_within_threshold".into(),
            json!(worst <= self.s.tolerances.l1),
        );
        self.art.write("l1_report.csv", |w| {
            writeln!(w, "t,l1")?;
            for (t, d) in &rows {
                writeln!(w, "{t:.16e},{d:.16e}")?;
            }
            Ok(())
        })
    }

    fn manifest(mut self, solver: SolverKind, overrides: &Overrides) -> Result<Outcome, CliError> {
        let mut files = self.art.files.clone();
        files.push("manifest.json".into());
        let manifest = json!({
            "name": self.s.name,
            "solver": solver,
            "equation": self.s.equation,
            "version": env!("CARGO_PKG_VERSION"),
            "config": self.loaded.raw,
            "effective": {
                "picard_tol": self.s.tolerances.picard,
                "time_steps": self.s.grid.time_steps,
                "tol_override": overrides.tol,
                "grid_override": overrides.grid,
            },
            "residuals": Value::Object(std::mem::take(&mut self.residuals)),
            "files": files,
        });
        self.art.json("manifest.json", &manifest)?;
        Ok(Outcome {
            out_dir: self.art.dir,
            files: self.art.files,
        })
    }
}
