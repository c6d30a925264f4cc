//! Experiment drivers: configuration in, error tables and plot data out.

use crate::analysis::{fmt_float, forward_heat_cn, l2_x, l2_xp_window, plateau_scan, ErrorReport, ErrorRow};
use crate::config::{EtaChoice, PropagatorKind, RecoveryChoice, Reference, RunConfig, Snapshot};
use crate::error::{Error, Result};
use crate::expr::Expr;
use crate::grids::{ExtendedGrid, SpatialGrid};
use crate::lift_recover::{lift, recover_integrate, recover_point, RecoveryMode, RecoveryPlan, WarpedField, XLayout};
use crate::problems::{
    add_noise, build_variable_coeff_operator, choose_eta_max, choose_eta_max_noisy, delta_tail, eigen_decompose,
    eta_max_from_delta, evolve_variable_coeff, min_half_width, p_diamond, EigenBasis, ProblemFamily, ProblemSpec,
};
use crate::propagators::{
    evolve_crank_nicolson, evolve_crank_nicolson_diagonal, evolve_exact, evolve_with_source, make_convection_symbol,
    make_heat_symbol, DiagonalSymbol, EvolveReport, TridiagonalOperator,
};
use crate::transforms::dft;
use num_complex::Complex64;
use std::cell::OnceCell;
use std::fmt::Write as _;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Command {
    BackwardHeat,
    Convection,
    VariableCoeff,
    Convergence,
    Noise,
    Plateau,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::BackwardHeat => "backward-heat",
            Command::Convection => "convection",
            Command::VariableCoeff => "variable-coeff",
            Command::Convergence => "convergence",
            Command::Noise => "noise",
            Command::Plateau => "plateau",
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SnapshotResult {
    pub t: f64,
    pub eta_max: f64,
    pub p_diamond: f64,
    /// Tail δ(η_max) of the reference spectrum, when it was needed.
    pub delta: Option<f64>,
    pub dx: f64,
    pub err_point: f64,
    pub err_int: f64,
    pub x: Vec<f64>,
    pub exact: Vec<Complex64>,
    pub point: Vec<Complex64>,
    pub integrate: Vec<Complex64>,
    pub curve: Vec<(f64, f64)>,
}

impl SnapshotResult {
    pub fn err(&self, choice: RecoveryChoice) -> f64 {
        match choice {
            RecoveryChoice::Point => self.err_point,
            RecoveryChoice::Integrate => self.err_int,
        }
    }

    pub fn data_file(&self) -> String {
        let mut s = String::from("x u_exact u_point u_integrate\n");
        for i in 0..self.x.len() {
            let _ = writeln!(
                s,
                "{} {} {} {}",
                fmt_float(self.x[i]),
                fmt_float(self.exact[i].re),
                fmt_float(self.point[i].re),
                fmt_float(self.integrate[i].re)
            );
        }
        s
    }

    pub fn plateau_file(&self) -> String {
        let mut s = String::from("p err_l2x\n");
        for (p, e) in &self.curve {
            let _ = writeln!(s, "{} {}", fmt_float(*p), fmt_float(*e));
        }
        s
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SnapshotRun {
    pub results: Vec<SnapshotResult>,
    /// ‖u_T^ζ − u_T‖ of the realised noise (0 without noise).
    pub noise_l2: f64,
    pub dp: f64,
    pub dx: f64,
    pub dt: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct NoiseRow {
    pub zeta0: f64,
    pub eta_max: f64,
    pub p_diamond: f64,
    pub noise_l2: f64,
    pub delta: f64,
    pub err_point: f64,
    pub err_int: f64,
    /// δ/η^s + e^{η²(T − t)}·‖noise‖.
    pub bound: f64,
}

#[derive(Clone, Debug, Default)]
pub struct RunOutput {
    /// (file name, contents), in a fixed order.
    pub files: Vec<(String, String)>,
    pub report: Option<ErrorReport>,
    pub snapshots: Vec<SnapshotResult>,
    pub noise: Vec<NoiseRow>,
}

fn cfg_err(msg: impl Into<String>) -> Error {
    Error::Config(msg.into())
}

pub fn run(command: Command, cfg: &RunConfig) -> Result<RunOutput> {
    let family = cfg.problem.family;
    let fits = match command {
        Command::BackwardHeat => matches!(family, ProblemFamily::HeatSpectral | ProblemFamily::HeatFd),
        Command::Convection => family == ProblemFamily::Convection,
        Command::VariableCoeff => matches!(family, ProblemFamily::VariableCoeff | ProblemFamily::HeatFd),
        Command::Convergence | Command::Noise | Command::Plateau => true,
    };
    if !fits {
        return Err(cfg_err(format!("subcommand {} does not accept family {family:?}", command.name())));
    }
    let mut out = RunOutput::default();
    match command {
        Command::Convergence => {
            let report = run_convergence(cfg)?;
            out.files.push(("convergence.csv".into(), report.to_csv()?));
            out.report = Some(report);
        }
        Command::Noise => {
            let rows = run_noise(cfg, &mut out)?;
            out.files.push(("noise.csv".into(), noise_csv(&rows)));
            out.noise = rows;
        }
        Command::Plateau => {
            let run = run_snapshots(cfg, 0)?;
            for r in &run.results {
                out.files.push((format!("plateau_t{}.dat", fmt_float(r.t)), r.plateau_file()));
            }
            out.files.push(("summary.csv".into(), summary_csv(&run.results)));
            out.snapshots = run.results;
        }
        _ => {
            let run = run_snapshots(cfg, 0)?;
            for r in &run.results {
                out.files.push((format!("snapshot_t{}.dat", fmt_float(r.t)), r.data_file()));
            }
            out.files.push(("summary.csv".into(), summary_csv(&run.results)));
            out.snapshots = run.results;
        }
    }
    Ok(out)
}

pub fn summary_csv(results: &[SnapshotResult]) -> String {
    let mut s = String::from("t,eta_max,p_diamond,err_point,err_int\n");
    for r in results {
        let _ = writeln!(
            s,
            "{},{},{},{},{}",
            fmt_float(r.t),
            fmt_float(r.eta_max),
            fmt_float(r.p_diamond),
            fmt_float(r.err_point),
            fmt_float(r.err_int)
        );
    }
    s
}

fn noise_csv(rows: &[NoiseRow]) -> String {
    let mut s = String::from("zeta0,eta_max,p_diamond,zeta_l2,delta,err_point,err_int,bound\n");
    for r in rows {
        let _ = writeln!(
            s,
            "{},{},{},{},{},{},{},{}",
            fmt_float(r.zeta0),
            fmt_float(r.eta_max),
            fmt_float(r.p_diamond),
            fmt_float(r.noise_l2),
            fmt_float(r.delta),
            fmt_float(r.err_point),
            fmt_float(r.err_int),
            fmt_float(r.bound)
        );
    }
    s
}

/// One row per refinement level: Δx, Δp and Δt all halve.
pub fn run_convergence(cfg: &RunConfig) -> Result<ErrorReport> {
    let levels = cfg.convergence.as_ref().ok_or_else(|| cfg_err("convergence needs a [convergence] section"))?.levels;
    let mut single = cfg.clone();
    single.snapshots = vec![cfg.snapshot_list()[0].clone()];
    let mut report = ErrorReport::default();
    for level in 0..levels {
        let run = run_snapshots(&single, level)?;
        let r = &run.results[0];
        report.rows.push(ErrorRow { dp: run.dp, dx: run.dx, dt: run.dt, err_point: r.err_point, err_int: r.err_int });
    }
    report.meta.push(("family".into(), format!("{:?}", cfg.problem.family)));
    report.meta.push(("profile".into(), cfg.solver.profile.clone()));
    Ok(report)
}

/// Runs each (ζ₀, η_max) pair of `[sweep]` and evaluates the two-term bound.
pub fn run_noise(cfg: &RunConfig, out: &mut RunOutput) -> Result<Vec<NoiseRow>> {
    let sweep = cfg.sweep.as_ref().ok_or_else(|| cfg_err("noise needs a [sweep] section"))?;
    let seed = cfg.noise.as_ref().map_or(0, |n| n.seed);
    let t = cfg.snapshot_list()[0].t;
    let mut rows = Vec::new();
    for (&zeta0, &eta) in sweep.zeta0.iter().zip(&sweep.eta_max) {
        let mut c = cfg.clone();
        c.noise = Some(crate::config::NoiseSection { zeta0, seed });
        c.snapshots = vec![Snapshot { t, eta_max: Some(eta), p_diamond: None }];
        let run = run_snapshots_with(&c, 0, true)?;
        let r = &run.results[0];
        let delta = r.delta.unwrap_or(0.0);
        let amp = (eta * eta * (cfg.problem.horizon - t)).exp();
        rows.push(NoiseRow {
            zeta0,
            eta_max: eta,
            p_diamond: r.p_diamond,
            noise_l2: run.noise_l2,
            delta,
            err_point: r.err_point,
            err_int: r.err_int,
            bound: delta / eta.powf(cfg.truncation.s) + amp * run.noise_l2,
        });
        out.files.push((format!("noise_z{}.dat", fmt_float(zeta0)), r.data_file()));
        out.snapshots.push(r.clone());
    }
    Ok(rows)
}

pub fn run_snapshots(cfg: &RunConfig, level: usize) -> Result<SnapshotRun> {
    run_snapshots_with(cfg, level, false)
}

enum Engine {
    Diagonal(DiagonalSymbol),
    Tridiagonal(TridiagonalOperator),
    Eigen,
    Source { symbol: DiagonalSymbol, g: Vec<f64>, f: Expr },
}

struct Setup {
    grid: SpatialGrid,
    layout: XLayout,
    pgrid: ExtendedGrid,
    dt: Option<f64>,
    op: Option<TridiagonalOperator>,
    basis: OnceCell<std::result::Result<EigenBasis, String>>,
}

impl Setup {
    fn basis(&self) -> Result<&EigenBasis> {
        let op = self.op.as_ref().ok_or_else(|| Error::InvalidArgument("no spatial operator for this family".into()))?;
        self.basis
            .get_or_init(|| eigen_decompose(op).map_err(|e| e.to_string()))
            .as_ref()
            .map_err(|e| Error::Eigen(e.clone()))
    }

    // (frequency, L2-scaled amplitude) of a grid function
    fn spectrum(&self, u: &[Complex64]) -> Result<(Vec<f64>, Vec<f64>)> {
        match &self.layout {
            XLayout::Periodic(g) => {
                let c = dft(u)?;
                let scale = g.length().sqrt();
                Ok((g.frequencies().values().to_vec(), c.iter().map(|v| v.norm() * scale).collect()))
            }
            XLayout::Dirichlet(_) => {
                let b = self.basis()?;
                let scale = self.layout.dx().sqrt();
                let freqs = b.values().iter().map(|l| l.max(0.0).sqrt()).collect();
                Ok((freqs, b.project(u).iter().map(|a| a.norm() * scale).collect()))
            }
        }
    }
}

fn sample(e: &Expr, xs: &[f64], t: f64) -> Vec<Complex64> {
    xs.iter().map(|&x| e.eval(x, t)).collect()
}

fn load_samples(path: &str, xs: &[f64], dx: f64) -> Result<Vec<Complex64>> {
    let text = std::fs::read_to_string(path).map_err(|e| cfg_err(format!("problem.data_file {path}: {e}")))?;
    let mut out = Vec::new();
    for (ln, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let cols: Vec<f64> = line
            .split_whitespace()
            .map(|c| c.parse::<f64>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|e| cfg_err(format!("{path}:{}: {e}", ln + 1)))?;
        if !(2..=3).contains(&cols.len()) {
            return Err(cfg_err(format!("{path}:{}: expected `x re [im]`", ln + 1)));
        }
        let k = out.len();
        if k >= xs.len() || (cols[0] - xs[k]).abs() > 1e-6 * dx {
            return Err(cfg_err(format!("{path}:{}: sample x = {} does not match grid node", ln + 1, cols[0])));
        }
        out.push(Complex64::new(cols[1], cols.get(2).copied().unwrap_or(0.0)));
    }
    if out.len() != xs.len() {
        return Err(cfg_err(format!("{path}: {} samples for {} grid nodes", out.len(), xs.len())));
    }
    Ok(out)
}

fn forward_from(initial: &Expr, xs: &[f64], dx: f64, t: f64, dt: f64) -> Result<Vec<Complex64>> {
    let u0: Vec<f64> = xs.iter().map(|&x| initial.eval(x, 0.0).re).collect();
    if t == 0.0 {
        return Ok(u0.into_iter().map(|v| Complex64::new(v, 0.0)).collect());
    }
    Ok(forward_heat_cn(&u0, dx, t, dt)?.into_iter().map(|v| Complex64::new(v, 0.0)).collect())
}

struct Target {
    snap_index: usize,
    t: f64,
    eta: f64,
    p_diamond: f64,
    delta: Option<f64>,
    exact: Vec<Complex64>,
    plan: RecoveryPlan,
}

/// Lifts the data once, evolves through the snapshot times in order and
/// recovers at each. Every physical constraint is checked before evolving.
pub fn run_snapshots_with(cfg: &RunConfig, level: usize, want_delta: bool) -> Result<SnapshotRun> {
    let pr = &cfg.problem;
    let family = pr.family;
    let horizon = pr.horizon;
    let scale = 1usize << level;
    let grid = SpatialGrid::new(pr.x_lo, pr.x_hi, pr.m * scale)?;
    let spec = ProblemSpec::new(family, grid.clone(), horizon, cfg.truncation.s)?;
    let layout = spec.x_layout();
    let xs = layout.nodes();
    let dx = layout.dx();
    let pgrid = ExtendedGrid::from_half_width(cfg.grid.pi_l, cfg.grid.n * scale)?;
    let profile = cfg.profile()?;
    let dt = cfg.solver.dt.map(|d| d / scale as f64);

    let initial = cfg.expr("initial", &pr.initial)?;
    let terminal = cfg.expr("terminal", &pr.terminal)?;
    let exact_expr = cfg.expr("exact", &pr.exact)?;
    let forward = |t: f64| -> Result<Vec<Complex64>> {
        let init = initial.as_ref().ok_or_else(|| cfg_err("problem.initial missing"))?;
        forward_from(init, &xs, dx, t, pr.forward_dt.unwrap_or(f64::NAN))
    };

    let clean = if family == ProblemFamily::Convection {
        sample(initial.as_ref().ok_or_else(|| cfg_err("problem.initial missing"))?, &xs, 0.0)
    } else if pr.data_from_forward {
        forward(horizon)?
    } else if let Some(path) = &pr.data_file {
        load_samples(path, &xs, dx)?
    } else {
        sample(terminal.as_ref().ok_or_else(|| cfg_err("problem.terminal missing"))?, &xs, horizon)
    };
    let zeta0 = cfg.noise.as_ref().map_or(0.0, |n| n.zeta0);
    let data = match &cfg.noise {
        Some(n) if n.zeta0 > 0.0 => add_noise(&clean, n.zeta0, n.seed),
        _ => clean.clone(),
    };
    let noise_l2 = l2_x(&data, &clean, dx)?;
    let reference = |t: f64| -> Result<Vec<Complex64>> {
        match pr.reference {
            Reference::Expression => Ok(sample(exact_expr.as_ref().ok_or_else(|| cfg_err("problem.exact missing"))?, &xs, t)),
            Reference::Forward => forward(t),
        }
    };

    let op = match family {
        ProblemFamily::HeatFd => Some(TridiagonalOperator::second_difference(xs.len(), dx)?.negated()),
        ProblemFamily::VariableCoeff => {
            let a = cfg.expr("coefficient", &pr.coefficient)?.ok_or_else(|| cfg_err("problem.coefficient missing"))?;
            Some(build_variable_coeff_operator(|x| a.eval(x, 0.0).re, &grid)?)
        }
        _ => None,
    };
    let setup = Setup { grid, layout: layout.clone(), pgrid: pgrid.clone(), dt, op, basis: OnceCell::new() };

    // validate every snapshot before any evolution
    let norm_data = l2_x(&data, &vec![Complex64::default(); data.len()], dx)?;
    let mode = match cfg.solver.recovery {
        RecoveryChoice::Point => RecoveryMode::Point,
        RecoveryChoice::Integrate => RecoveryMode::Integrate,
    };
    let auto = matches!(cfg.truncation.eta_max, EtaChoice::Keyword(_));
    let mut targets = Vec::new();
    for (snap_index, snap) in cfg.snapshot_list().iter().enumerate() {
        let exact = reference(snap.t)?;
        let spectrum = if want_delta || (auto && snap.eta_max.is_none() && cfg.truncation.delta.is_none() && zeta0 == 0.0) {
            Some(setup.spectrum(&exact)?)
        } else {
            None
        };
        let eta = match (snap.eta_max, &cfg.truncation.eta_max) {
            (Some(e), _) => e,
            (None, EtaChoice::Value(e)) => *e,
            (None, EtaChoice::Keyword(_)) => {
                let (s, eps) = (cfg.truncation.s, cfg.truncation.epsilon);
                if let Some(d) = cfg.truncation.delta {
                    eta_max_from_delta(d, eps, s)?
                } else if zeta0 > 0.0 {
                    choose_eta_max_noisy(zeta0, horizon, s)?
                } else {
                    let (f, a) = spectrum.as_ref().expect("spectrum computed for auto");
                    choose_eta_max(f, a, s, eps)?
                }
            }
        };
        let delta = spectrum.as_ref().map(|(f, a)| delta_tail(f, a, eta, cfg.truncation.s));
        let pd = snap.p_diamond.or(cfg.solver.p_diamond).unwrap_or_else(|| p_diamond(family, eta, horizon));
        if pd > 0.0 {
            let need = min_half_width(pd, norm_data.max(f64::MIN_POSITIVE), cfg.truncation.epsilon, cfg.solver.relaxed_pl)?;
            if cfg.grid.pi_l < need * (1.0 - 1e-12) {
                return Err(cfg_err(format!(
                    "grid.pi_l = {} is below the required {} for p_diamond = {pd}; raise pi_l or set relaxed_pl",
                    cfg.grid.pi_l,
                    fmt_float(need)
                )));
            }
        }
        let plan = RecoveryPlan::new(eta, pd, mode, cfg.solver.window)?;
        plan.check_fits(&pgrid)?;
        targets.push(Target { snap_index, t: snap.t, eta, p_diamond: pd, delta, exact, plan });
    }
    if family.is_backward() {
        targets.sort_by(|a, b| b.t.total_cmp(&a.t));
    } else {
        targets.sort_by(|a, b| a.t.total_cmp(&b.t));
    }

    let engine = engine_for(cfg, &setup, &profile)?;
    let mut field = lift(&data, &profile, layout, pgrid.clone(), horizon)?;
    if !family.is_backward() {
        field.set_time(0.0);
    }
    let alpha = match engine {
        Engine::Eigen => Some(setup.basis()?.project(&data)),
        _ => None,
    };
    let guard = cfg.solver.unitarity_guard;
    let mut results = Vec::with_capacity(targets.len());
    for tg in targets {
        match &engine {
            Engine::Eigen => {
                let basis = setup.basis()?;
                let n_max = pr.n_max.unwrap_or_else(|| basis.default_n_max(tg.eta)).min(basis.len());
                field = evolve_variable_coeff(
                    alpha.as_deref().expect("projected"),
                    basis,
                    &profile,
                    &setup.grid,
                    &setup.pgrid,
                    horizon,
                    tg.t,
                    n_max,
                )?;
            }
            Engine::Source { symbol, g, f } => {
                if tg.t != field.time() {
                    let step = setup.dt.ok_or_else(|| cfg_err("solver.dt missing"))?;
                    evolve_with_source(&mut field, symbol, g, |t, x| f.eval(x, t), tg.t, step, cfg.source_rule(), cfg.nyquist())?;
                }
            }
            _ => {
                if tg.t != field.time() {
                    advance(&engine, &mut field, tg.t, setup.dt, cfg)?.guard(guard)?;
                }
            }
        }
        results.push((tg.snap_index, recover_all(&field, &tg, &xs, dx)?));
    }
    results.sort_by_key(|r| r.0);
    Ok(SnapshotRun {
        results: results.into_iter().map(|r| r.1).collect(),
        noise_l2,
        dp: pgrid.dp(),
        dx,
        dt: dt.unwrap_or(0.0),
    })
}

fn engine_for(cfg: &RunConfig, setup: &Setup, profile: &crate::profiles::ExtensionProfile) -> Result<Engine> {
    let family = cfg.problem.family;
    let exact = cfg.solver.propagator == PropagatorKind::Exact;
    Ok(match family {
        ProblemFamily::HeatSpectral => Engine::Diagonal(make_heat_symbol(&setup.grid.frequencies())),
        ProblemFamily::HeatFd | ProblemFamily::VariableCoeff => {
            if exact {
                Engine::Eigen
            } else {
                Engine::Tridiagonal(setup.op.clone().expect("operator built for FD families"))
            }
        }
        ProblemFamily::Convection => {
            let symbol = make_convection_symbol(&setup.grid.frequencies());
            match cfg.expr("source", &cfg.problem.source)? {
                Some(f) => Engine::Source { symbol, g: profile.sample(&setup.pgrid.nodes()), f },
                None => Engine::Diagonal(symbol),
            }
        }
    })
}

fn advance(engine: &Engine, field: &mut WarpedField, t: f64, dt: Option<f64>, cfg: &RunConfig) -> Result<EvolveReport> {
    let exact = cfg.solver.propagator == PropagatorKind::Exact;
    let step = || dt.ok_or_else(|| cfg_err("solver.dt missing"));
    match engine {
        Engine::Diagonal(sym) if exact => evolve_exact(field, sym, t, cfg.nyquist()),
        Engine::Diagonal(sym) => evolve_crank_nicolson_diagonal(field, sym, t, step()?, cfg.nyquist()),
        Engine::Tridiagonal(op) => evolve_crank_nicolson(field, op, t, step()?, cfg.nyquist()),
        Engine::Eigen | Engine::Source { .. } => unreachable!("handled by the caller"),
    }
}

fn recover_all(field: &WarpedField, tg: &Target, xs: &[f64], dx: f64) -> Result<SnapshotResult> {
    let point = recover_point(field, &tg.plan)?;
    let integrate = recover_integrate(field, &tg.plan)?;
    Ok(SnapshotResult {
        t: tg.t,
        eta_max: tg.eta,
        p_diamond: tg.p_diamond,
        delta: tg.delta,
        dx,
        err_point: l2_xp_window(field, &tg.exact, tg.p_diamond, tg.plan.window)?,
        err_int: l2_x(&integrate, &tg.exact, dx)?,
        x: xs.to_vec(),
        exact: tg.exact.clone(),
        point,
        integrate,
        curve: plateau_scan(field, &tg.exact)?,
    })
}
