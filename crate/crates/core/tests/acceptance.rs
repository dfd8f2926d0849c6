//! Acceptance suite. One line per criterion; exits non-zero on any failure.

use std::process::ExitCode;
use std::time::{Duration, Instant};

use repmut::{
    blowup_time, cgf_full, cgf_full_dz, compare_l1, fd_solve, field_on_grid, gauss_v_classify,
    gauss_v_eval, gauss_v_ode, make_density, picard_trace, solve_mean, solve_warp, variance_of,
    Cgf64, Equation, Error, FdConfig, HeatEval, MeanSolver, RawDensity, VCase,
};

type Outcome = Result<String, String>;
type Criterion<'a> = (&'static str, Box<dyn Fn() -> Outcome + 'a>);

fn uniform() -> Cgf64 {
    Cgf64::new(make_density(RawDensity::Uniform { lo: 0.5, hi: 1.5 }, true).unwrap())
}

fn check(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn within(elapsed: Duration, budget: f64, detail: String) -> Outcome {
    if elapsed.as_secs_f64() <= budget {
        Ok(detail)
    } else {
        Err(format!("{detail}; over the {budget} s budget"))
    }
}

fn gaussian_mean() -> Outcome {
    let start = Instant::now();
    let cgf = Cgf64::new(make_density(RawDensity::Gaussian { a0: 1.0, m0: 4.0 }, true).unwrap());
    let table = solve_mean(&cgf, 1.0, 3.0, 3000, 1e-10, 64).map_err(|e| e.to_string())?;
    let elapsed = start.elapsed();
    let worst = table
        .times()
        .iter()
        .zip(table.ubar())
        .map(|(&t, &u)| {
            let exact = (16.0 + 2.0 * t * t + 2.0 * t).sqrt();
            (u - exact).abs() / exact
        })
        .fold(0.0, f64::max);
    check(worst <= 1e-5, format!("max rel err {worst:.3e} (≤ 1e-5)"))?;
    within(
        elapsed,
        5.0,
        format!("max rel err {worst:.3e}, {:.2} s", elapsed.as_secs_f64()),
    )
}

fn picard_envelope() -> Outcome {
    let cgf = uniform();
    let n = 3000;
    let trace = picard_trace(&cgf, 1.0, 3.0, n, 25).map_err(|e| e.to_string())?;
    let table = solve_mean(&cgf, 1.0, 3.0, n, 1e-10, 64).map_err(|e| e.to_string())?;
    let scale = table.ubar().iter().fold(0.0f64, |a, &b| a.max(b));
    // below this the differences are pure round-off
    let floor = 64.0 * f64::EPSILON * scale;
    let mut checked = 0;
    for (i, &d) in trace.diffs.iter().enumerate() {
        let env = trace.envelope(i);
        if d > env + floor {
            return Err(format!("d_{i} = {d:.3e} exceeds envelope {env:.3e}"));
        }
        if env > floor {
            checked += 1;
        }
    }
    let iters = table.iter_count();
    let k_t2 = trace.k * 9.0;
    check(
        iters <= 20,
        format!("kT² = {k_t2:.4}, {checked} non-trivial terms under the envelope, converged in {iters} iterations (≤ 20)"),
    )
}

struct UniformSetup {
    cgf: Cgf64,
    heat: HeatEval<f64>,
    table: repmut::MeanTable64,
}

fn uniform_setup() -> UniformSetup {
    let cgf = uniform();
    let heat = HeatEval::new(cgf.spec().clone(), 1.0).unwrap();
    let table = solve_mean(&cgf, 1.0, 3.0, 3000, 1e-10, 64).unwrap();
    UniformSetup { cgf, heat, table }
}

const TIMES: [f64; 4] = [0.5, 1.0, 2.0, 3.0];

fn mass_conservation(s: &UniformSetup) -> Outcome {
    let xs: Vec<f64> = (0..=2000).map(|i| -8.0 + 0.01 * i as f64).collect();
    let field = field_on_grid(&s.table, &s.heat, &TIMES, &xs).map_err(|e| e.to_string())?;
    let worst = field
        .moments()
        .iter()
        .map(|m| (m.mass - 1.0).abs())
        .fold(0.0, f64::max);
    check(
        worst <= 1e-4,
        format!("max |mass − 1| = {worst:.3e} (≤ 1e-4)"),
    )
}

fn variance_identity(s: &UniformSetup) -> Outcome {
    let field = field_on_grid(&s.table, &s.heat, &TIMES, &[0.0]).map_err(|e| e.to_string())?;
    let mut worst = 0.0f64;
    for (&t, m) in TIMES.iter().zip(field.moments()) {
        let v = variance_of(&s.table, &s.cgf, t).map_err(|e| e.to_string())?;
        worst = worst.max((m.variance - v).abs() / v);
    }
    check(worst <= 1e-3, format!("max rel gap {worst:.3e} (≤ 1e-3)"))
}

fn oracle_u(s: &UniformSetup) -> Outcome {
    let start = Instant::now();
    let l1 = |dx: f64, dt: f64| -> Result<f64, String> {
        let cfg = FdConfig::new(Equation::U, -8.0, 12.0, dx, dt, 1.0, 1.0);
        let run = fd_solve(&cfg, s.cgf.spec()).map_err(|e| e.to_string())?;
        let exact =
            field_on_grid(&s.table, &s.heat, &[1.0], run.field.xs()).map_err(|e| e.to_string())?;
        compare_l1(&exact, &run.field, 1.0).map_err(|e| e.to_string())
    };
    let coarse = l1(0.02, 1e-4)?;
    let fine = l1(0.01, 2.5e-5)?;
    let elapsed = start.elapsed();
    let detail = format!(
        "L¹ = {coarse:.3e} (≤ 2e-2), refined {fine:.3e} (ratio {:.2}), {:.1} s",
        coarse / fine,
        elapsed.as_secs_f64()
    );
    check(coarse <= 2e-2 && fine <= 0.5 * coarse, detail.clone())?;
    within(elapsed, 120.0, detail)
}

fn v_blowup() -> Outcome {
    let (a0, m0) = (5.0f64 / 64.0, -585.0 / 64.0);
    if gauss_v_classify(a0, m0, 1.0).map_err(|e| e.to_string())? != VCase::I {
        return Err("not classified as finite-time concentration".into());
    }
    let t_star = blowup_time(a0, m0, 1.0)
        .map_err(|e| e.to_string())?
        .ok_or("no blow-up time")?;
    let m = gauss_v_eval(a0, m0, 1.0, t_star * (1.0 - 1e-12))
        .map_err(|e| e.to_string())?
        .m;
    let abort = match gauss_v_ode(a0, m0, 1.0, 2.5, 25_000) {
        Err(Error::StiffnessAbort { t }) => t,
        other => return Err(format!("ODE did not abort: {other:?}")),
    };
    check(
        (t_star - 1.878).abs() <= 1e-2
            && (m + 1.277).abs() <= 1e-2
            && (abort - t_star).abs() <= 1e-2,
        format!("T* = {t_star:.6}, m(T*) = {m:.6}, ODE abort at {abort:.4}"),
    )
}

fn warp_equivalence() -> Outcome {
    let (a0, m0) = (1.5, 3.5);
    let cgf = Cgf64::new(make_density(RawDensity::Gaussian { a0, m0 }, true).unwrap());
    let solver = MeanSolver::new(cgf.clone(), 1.0).map_err(|e| e.to_string())?;
    let table = solver.solve(2.0, 2000).map_err(|e| e.to_string())?;
    let warp = solve_warp(&solver, table, 2.0, 2000).map_err(|e| e.to_string())?;
    let (mut dm, mut dv) = (0.0f64, 0.0f64);
    for i in 0..=200 {
        let t = 0.01 * i as f64;
        let phi = warp.phi(t).map_err(|e| e.to_string())?;
        let mean = warp.table().ubar_at(phi).ok_or("phi beyond table")?;
        let var = variance_of(warp.table(), &cgf, phi).map_err(|e| e.to_string())?;
        let exact = gauss_v_eval(a0, m0, 1.0, t).map_err(|e| e.to_string())?;
        dm = dm.max((mean - exact.m).abs() / exact.m);
        dv = dv.max((var - exact.variance()).abs() / exact.variance());
    }
    check(
        dm <= 1e-4 && dv <= 1e-4,
        format!(
            "max rel err mean {dm:.3e}, variance {dv:.3e} (≤ 1e-4), table doubled {} times",
            warp.extensions()
        ),
    )
}

fn asymptotic_speed() -> Outcome {
    let start = Instant::now();
    let table = solve_mean(&uniform(), 1.0, 50.0, 5000, 1e-10, 64).map_err(|e| e.to_string())?;
    let elapsed = start.elapsed();
    let ratio = table.ubar().last().unwrap() / (2f64.sqrt() * 50.0);
    let detail = format!("ū(50)/(√2·50) = {ratio:.7}, {:.2} s", elapsed.as_secs_f64());
    check((0.99..=1.01).contains(&ratio), detail.clone())?;
    within(elapsed, 30.0, detail)
}

fn cgf_normalization(s: &UniformSetup) -> Outcome {
    let (mut c0, mut dz) = (0.0f64, 0.0f64);
    for i in 0..=300 {
        let t = 0.01 * i as f64;
        let ubar = s.table.row(t).map_err(|e| e.to_string())?.ubar;
        c0 = c0.max(
            cgf_full(&s.table, &s.cgf, t, 0.0)
                .map_err(|e| e.to_string())?
                .abs(),
        );
        let d = cgf_full_dz(&s.table, &s.cgf, t, 0.0).map_err(|e| e.to_string())?;
        dz = dz.max((d - ubar).abs() / ubar);
    }
    check(
        c0 <= 1e-4 && dz <= 1e-3,
        format!("max |C(t,0)| = {c0:.3e}, max rel |∂zC − ū| = {dz:.3e}"),
    )
}

fn signature() -> Outcome {
    let (a0, m0) = (0.2, -3.4);
    if gauss_v_classify(a0, m0, 1.0).map_err(|e| e.to_string())? != VCase::III {
        return Err("not classified as case III".into());
    }
    let times: Vec<f64> = (0..200).map(|i| 3.0 * i as f64 / 199.0).collect();
    let states = times
        .iter()
        .map(|&t| gauss_v_eval(a0, m0, 1.0, t))
        .collect::<Result<Vec<_>, _>>()
        .map_err(|e| e.to_string())?;
    let crossing = states
        .iter()
        .position(|s| s.m >= 0.0)
        .ok_or("mean never changes sign")?;
    for j in 1..states.len() {
        let dv = states[j].variance() - states[j - 1].variance();
        if j < crossing && (dv.is_nan() || dv >= 0.0) {
            return Err(format!("variance not decreasing at t = {:.4}", times[j]));
        }
        if j > crossing && (dv.is_nan() || dv <= 0.0) {
            return Err(format!("variance not increasing at t = {:.4}", times[j]));
        }
    }
    Ok(format!(
        "mean changes sign near t = {:.3}; V falls from {:.3} to {:.3} then rises to {:.3}",
        times[crossing],
        states[0].variance(),
        states[crossing - 1].variance(),
        states.last().unwrap().variance()
    ))
}

fn main() -> ExitCode {
    let setup = uniform_setup();
    let criteria: Vec<Criterion> = vec![
        ("gaussian mean fixed point", Box::new(gaussian_mean)),
        ("picard envelope", Box::new(picard_envelope)),
        ("mass conservation", Box::new(|| mass_conservation(&setup))),
        ("variance identity", Box::new(|| variance_identity(&setup))),
        ("oracle cross-validation (u)", Box::new(|| oracle_u(&setup))),
        ("v-equation blow-up", Box::new(v_blowup)),
        ("warp equivalence", Box::new(warp_equivalence)),
        ("asymptotic speed", Box::new(asymptotic_speed)),
        ("cgf normalization", Box::new(|| cgf_normalization(&setup))),
        ("anti-diffusion/diffusion signature", Box::new(signature)),
    ];
    let mut failed = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        match run() {
            Ok(detail) => println!("PASS {:>2} {name}: {detail}", i + 1),
            Err(detail) => {
                failed += 1;
                println!("FAIL {:>2} {name}: {detail}", i + 1);
            }
        }
    }
    println!(
        "{} of {} criteria passed",
        criteria.len() - failed,
        criteria.len()
    );
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
