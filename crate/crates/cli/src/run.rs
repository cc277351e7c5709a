//! Verb dispatch: hypotheses, solves, audits and report assembly.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use schauder_core::coeffspec::{check_hypotheses, HypothesisReport, OperatorSpec};
use schauder_core::holder::{embedding_check, envelope_slope, GridFn, SpaceGrid, SpaceTimeFn};
use schauder_core::kernel::TimeMatrixPath;
use schauder_core::solver::{
    continuation_solve, semigroup_t, solve_cauchy, solve_elliptic, time_nodes, CauchyProblem, ContinuationOpts, EllipticOpts,
    ResidualReport, Scheme, SolveResult,
};
use schauder_core::verify::{
    audit_gauge_independence, audit_integral_residual, audit_localization, audit_max_principle, audit_schauder, audit_time_holder,
    compact_family, random_growing_spec, schauder_sample, AuditReport, Check, Measurement, RandomSpecOpts,
};

use crate::config::{parse_config, Mode, RunConfig, Suite, SCHEMA_VERSION};
use crate::error::{CliError, EXIT_AUDIT_FAILED, EXIT_OK};
use crate::output::{emit_csv, emit_plot_script};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Verb {
    Check,
    Solve,
    Audit,
    All,
}

impl Verb {
    fn as_str(self) -> &'static str {
        match self {
            Verb::Check => "check",
            Verb::Solve => "solve",
            Verb::Audit => "audit",
            Verb::All => "all",
        }
    }
}

#[derive(Debug, Clone, Default)]
pub struct RunOptions {
    pub config: PathBuf,
    /// Overrides `outputs.dir`.
    pub out: Option<PathBuf>,
    /// Overrides `seed`.
    pub seed: Option<u64>,
    /// Hypothesis violations abort the run.
    pub strict: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SolveSummary {
    pub mode: Mode,
    pub slices: usize,
    pub sup_u: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub residual: Option<ResidualReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub boundary_influence: Option<f64>,
    pub time_steps: usize,
    pub linear_iterations: usize,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub contraction_factors: Vec<f64>,
    /// Elliptic mode: `‖direct − stationary limit‖₀` and the horizon reached.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub route_gap: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub stationary_horizon: Option<f64>,
    pub warnings: Vec<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub csv: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Report {
    pub schema_version: u32,
    pub command: String,
    pub exit_code: i32,
    pub reason: Option<String>,
    pub config_echo: Option<RunConfig>,
    pub hypotheses: Option<HypothesisReport>,
    pub solves: Vec<SolveSummary>,
    pub audits: Vec<AuditReport>,
    pub timestamp: u64,
}

#[derive(Debug)]
pub struct Outcome {
    pub report: Report,
    pub exit_code: i32,
    /// Where the report was written, if it could be.
    pub report_path: Option<PathBuf>,
}

/// Report JSON with the timestamp left out, for reproducibility checks.
pub fn canonical_json(report: &Report) -> String {
    let mut r = report.clone();
    r.timestamp = 0;
    serde_json::to_string_pretty(&r).expect("report serializes")
}

fn now() -> u64 {
    SystemTime::now().duration_since(UNIX_EPOCH).map_or(0, |d| d.as_secs())
}

pub fn run(verb: Verb, opts: &RunOptions) -> Outcome {
    let mut report = Report {
        schema_version: SCHEMA_VERSION,
        command: verb.as_str().into(),
        exit_code: EXIT_OK,
        reason: None,
        config_echo: None,
        hypotheses: None,
        solves: Vec::new(),
        audits: Vec::new(),
        timestamp: now(),
    };
    let loaded = fs::read_to_string(&opts.config)
        .map_err(|e| CliError::Io(format!("cannot read {}: {e}", opts.config.display())))
        .and_then(|text| parse_config(&text));
    let mut out_dir = opts.out.clone().unwrap_or_else(|| PathBuf::from("."));
    let mut report_name = "report.json".to_string();
    let result = loaded.and_then(|mut cfg| {
        if let Some(seed) = opts.seed {
            cfg.seed = seed;
        }
        if opts.out.is_none() {
            out_dir = PathBuf::from(&cfg.outputs.dir);
        }
        report_name = cfg.outputs.report.clone();
        report.config_echo = Some(cfg.clone());
        fs::create_dir_all(&out_dir).map_err(|e| CliError::Io(format!("cannot create {}: {e}", out_dir.display())))?;
        execute(verb, &cfg, opts.strict, &out_dir, &mut report)
    });
    match result {
        Ok(()) => {
            report.exit_code = if report.audits.iter().all(|a| a.pass) { EXIT_OK } else { EXIT_AUDIT_FAILED };
            if report.exit_code != EXIT_OK {
                let failed: Vec<&str> = report.audits.iter().filter(|a| !a.pass).map(|a| a.name.as_str()).collect();
                report.reason = Some(format!("audit failed: {}", failed.join(", ")));
            }
        }
        Err(e) => {
            report.exit_code = e.exit_code();
            report.reason = Some(e.to_string());
        }
    }
    let path = out_dir.join(&report_name);
    let written = fs::create_dir_all(&out_dir)
        .and_then(|_| fs::write(&path, serde_json::to_string_pretty(&report).expect("report serializes")))
        .is_ok();
    Outcome { exit_code: report.exit_code, report, report_path: written.then_some(path) }
}

struct Prepared {
    spec: OperatorSpec,
    grid: SpaceGrid,
    g: GridFn,
}

fn scheme(cfg: &RunConfig) -> Scheme {
    Scheme { theta: cfg.solver.theta, blend: cfg.solver.blend, linear_tol: cfg.solver.linear_tol, max_linear_iter: cfg.solver.max_linear_iter }
}

fn cauchy_problem(cfg: &RunConfig, spec: OperatorSpec, g: GridFn, strict: bool) -> CauchyProblem {
    let mut p = CauchyProblem::new(spec, g, cfg.grid.time_steps).with_boundary(cfg.solver.boundary_mode).with_scheme(scheme(cfg));
    if let Some(n) = cfg.truncation {
        p = p.with_truncation(n);
    }
    p.strict = strict;
    p
}

fn execute(verb: Verb, cfg: &RunConfig, strict: bool, out_dir: &Path, report: &mut Report) -> Result<(), CliError> {
    let problem = match cfg.sweep() {
        // Hypotheses and the main solve use the first sweep value.
        Some(sw) => cfg.problem.substituted(&sw.parameter, sw.values[0]),
        None => cfg.problem.clone(),
    };
    let spec = problem.compile()?;
    let grid = cfg.grid.space(problem.dim)?;
    let g = problem.final_values(grid)?;
    let hyp = check_hypotheses(&spec, &schauder_sample(grid.radius))?;
    let holds = hyp.holds();
    report.hypotheses = Some(hyp);
    if strict && !holds {
        return Err(CliError::Config("hypotheses violated (strict mode)".into()));
    }
    if verb == Verb::Check {
        return Ok(());
    }
    let prepared = Prepared { spec, grid, g };
    let needs_solution = verb != Verb::Audit || cfg.suites.iter().any(Suite::needs_solution);
    let solution = if needs_solution { Some(solve(cfg, &prepared, strict, report)?) } else { None };
    let csv_name = cfg.outputs.csv.clone();
    if matches!(verb, Verb::Solve | Verb::All) {
        if let Some(u) = &solution {
            emit_csv(u, &out_dir.join(&csv_name)).map_err(|e| CliError::Io(format!("cannot write CSV: {e}")))?;
            if let Some(s) = report.solves.last_mut() {
                s.csv = Some(csv_name.clone());
            }
        }
    }
    if verb == Verb::Solve {
        return Ok(());
    }
    let audits: Vec<Result<AuditReport, CliError>> = std::thread::scope(|scope| {
        let handles: Vec<_> = cfg
            .suites
            .iter()
            .map(|suite| {
                let (prepared, solution) = (&prepared, solution.as_ref());
                scope.spawn(move || run_suite(suite, cfg, prepared, solution, strict))
            })
            .collect();
        handles.into_iter().map(|h| h.join().unwrap_or_else(|_| Err(CliError::Numerical("suite panicked".into())))).collect()
    });
    for (suite, a) in cfg.suites.iter().zip(audits) {
        report.audits.push(a.map_err(|e| match e {
            CliError::Numerical(m) => CliError::Numerical(format!("suite {}: {m}", suite.name())),
            other => other,
        })?);
    }
    report.audits.sort_by(|a, b| a.name.cmp(&b.name));
    if verb == Verb::All {
        let sweep: Vec<f64> = cfg.sweep().map(|s| s.values.clone()).unwrap_or_default();
        let csv = solution.as_ref().map(|_| csv_name.as_str());
        emit_plot_script(&report.audits, &sweep, csv, prepared.grid.d, &out_dir.join(&cfg.outputs.plot))
            .map_err(|e| CliError::Io(format!("cannot write plot script: {e}")))?;
    }
    Ok(())
}

fn summary(mode: Mode, u: &SpaceTimeFn) -> SolveSummary {
    SolveSummary {
        mode,
        slices: u.times.len(),
        sup_u: u.sup(),
        residual: None,
        boundary_influence: None,
        time_steps: 0,
        linear_iterations: 0,
        contraction_factors: Vec::new(),
        route_gap: None,
        stationary_horizon: None,
        warnings: Vec::new(),
        csv: None,
    }
}

fn from_result(mode: Mode, r: &SolveResult) -> SolveSummary {
    SolveSummary {
        residual: Some(r.residual_report),
        boundary_influence: Some(r.boundary_influence),
        time_steps: r.iterations.time_steps,
        linear_iterations: r.iterations.linear_iterations,
        contraction_factors: r.iterations.contraction_factors.clone(),
        warnings: r.warnings.clone(),
        ..summary(mode, &r.u)
    }
}

fn single_slice(t: f64, u: GridFn) -> Result<SpaceTimeFn, CliError> {
    let zero = GridFn::zeros(u.grid);
    Ok(SpaceTimeFn::new(vec![t], vec![u], Some(vec![zero]))?)
}

fn solve(cfg: &RunConfig, p: &Prepared, strict: bool, report: &mut Report) -> Result<SpaceTimeFn, CliError> {
    let sv = &cfg.solver;
    match cfg.mode {
        Mode::Cauchy => {
            let r = solve_cauchy(&cauchy_problem(cfg, p.spec.clone(), p.g.clone(), strict))?;
            report.solves.push(from_result(Mode::Cauchy, &r));
            Ok(r.u)
        }
        Mode::Continuation => {
            let opts = ContinuationOpts { lambda_step: sv.lambda_step, picard_tol: sv.picard_tol, max_picard: sv.max_picard, ..ContinuationOpts::default() };
            let r = continuation_solve(&cauchy_problem(cfg, p.spec.clone(), p.g.clone(), strict), &opts)?;
            report.solves.push(from_result(Mode::Continuation, &r));
            Ok(r.u)
        }
        Mode::Elliptic => {
            let opts = EllipticOpts { tol_stat: sv.tol_stat, max_horizon: sv.max_horizon, steps_per_unit: sv.steps_per_unit, parabolic_route: true };
            let sol = solve_elliptic(&p.spec, &p.grid, &opts)?;
            let u = single_slice(p.spec.window().0, sol.direct.clone())?;
            let mut s = summary(Mode::Elliptic, &u);
            s.linear_iterations = sol.linear_iterations;
            if let Some((stat, horizon)) = &sol.parabolic {
                s.route_gap = Some(stat.dist_sup(&sol.direct));
                s.stationary_horizon = Some(*horizon);
            }
            report.solves.push(s);
            Ok(u)
        }
        Mode::Semigroup => {
            let t = sv.semigroup_time;
            let v = semigroup_t(&p.spec, &p.g, t, t / cfg.grid.time_steps as f64)?;
            let u = single_slice(t, v)?;
            let mut s = summary(Mode::Semigroup, &u);
            s.time_steps = cfg.grid.time_steps;
            report.solves.push(s);
            Ok(u)
        }
    }
}

fn needs(solution: Option<&SpaceTimeFn>) -> Result<&SpaceTimeFn, CliError> {
    solution.ok_or_else(|| CliError::Config("suite needs a solved problem".into()))
}

fn run_suite(suite: &Suite, cfg: &RunConfig, p: &Prepared, solution: Option<&SpaceTimeFn>, strict: bool) -> Result<AuditReport, CliError> {
    let alpha = p.spec.alpha();
    let effective = cauchy_problem(cfg, p.spec.clone(), p.g.clone(), strict).effective_spec();
    let (t0, s) = p.spec.window();
    match suite {
        Suite::MaxPrinciple { threshold, random_specs, drift_max } => {
            let u = needs(solution)?;
            let wrapped = wrap(u);
            let base = audit_max_principle(&wrapped, &effective, *threshold)?;
            let mut measured: Vec<Measurement> = base.measured.iter().map(|m| Measurement { config: format!("problem {}", m.config), value: m.value }).collect();
            let mut checks = base.checks.clone();
            let mut details = base.details.clone();
            let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
            let ropts = RandomSpecOpts { dim: p.grid.d, alpha, window: (t0, s), drift_max: *drift_max, f0: 1.0 };
            for k in 0..*random_specs {
                let spec = random_growing_spec(&ropts, &mut || rng.gen::<f64>())?;
                let r = solve_cauchy(&cauchy_problem(cfg, spec.clone(), GridFn::zeros(p.grid), false))?;
                let a = audit_max_principle(&r, &spec, *threshold)?;
                for (m, c) in a.measured.iter().zip(&a.checks) {
                    measured.push(Measurement { config: format!("random {k} {}", m.config), value: m.value });
                    checks.push(Check { name: format!("random {k} {}", c.name), ..c.clone() });
                }
                details.extend(a.details.iter().map(|d| format!("random {k}: {d}")));
            }
            Ok(AuditReport::new("max_principle", measured, checks, details))
        }
        Suite::Schauder { threshold, sweep, margin } => {
            let problems: Result<Vec<(String, CauchyProblem)>, CliError> = match sweep {
                Some(sw) => sw
                    .values
                    .iter()
                    .map(|v| {
                        let q = cfg.problem.substituted(&sw.parameter, *v);
                        let spec = q.compile()?;
                        let g = q.final_values(p.grid)?;
                        Ok((format!("{}={v:?}", sw.parameter), cauchy_problem(cfg, spec, g, strict)))
                    })
                    .collect(),
                None => Ok(vec![("problem".into(), cauchy_problem(cfg, p.spec.clone(), p.g.clone(), strict))]),
            };
            Ok(audit_schauder(&problems?, *margin, *threshold)?)
        }
        Suite::TimeHolder { threshold, window, ball_radius, levels } => {
            let u = needs(solution)?;
            let w = window.map_or((t0, s), |[a, b]| (a, b));
            let ball = ball_radius.unwrap_or(0.5 * p.grid.radius);
            let gaps: Vec<f64> = (1..=*levels as i32).map(|k| 4f64.powi(-k)).collect();
            Ok(audit_time_holder(u, alpha, w, ball, &gaps, *threshold)?)
        }
        Suite::IntegralResidual { threshold } => Ok(audit_integral_residual(needs(solution)?, &effective, *threshold)?),
        Suite::GaugeIndependence { b0_steps, b0_levels, c0_levels, family, interp_tol } => {
            let model = TimeMatrixPath::from_spec(&p.spec).map_err(|e| CliError::Config(format!("gauge_independence needs x-independent a: {e}")))?;
            let times = time_nodes(t0, s, &[], cfg.grid.time_steps);
            let dt = (s - t0) / cfg.grid.time_steps as f64;
            let mut levels: Vec<Vec<f64>> = b0_steps
                .iter()
                .map(|&k| {
                    let mut b = vec![0.0; p.grid.d];
                    b[0] = k as f64 * p.grid.h() / dt;
                    b
                })
                .collect();
            levels.extend(b0_levels.iter().cloned());
            let fam = compact_family(p.grid, &times, *family);
            Ok(audit_gauge_independence(&model, &fam, alpha, &levels, c0_levels, *interp_tol)?)
        }
        Suite::Localization { threshold, eps, x0 } => Ok(audit_localization(&effective, needs(solution)?, eps, x0.as_deref(), *threshold)?),
        Suite::Embedding { threshold, t, x, levels } => {
            let u = needs(solution)?;
            let t = t.unwrap_or(s);
            let anchor = match x {
                Some(x) => x.clone(),
                None => {
                    let k = p.grid.nearest(&vec![0.0; p.grid.d]).expect("origin lies in the box");
                    p.grid.point(k)[..p.grid.d].to_vec()
                }
            };
            let hs: Vec<f64> = (1..=*levels as i32)
                .map(|k| 2f64.powi(-k))
                .filter(|h| t - h * h >= u.times[0] - 1e-12 && u.time_index(t - h * h).is_some())
                .collect();
            if hs.len() < 2 {
                return Err(CliError::Config("embedding: fewer than two h levels land on stored slices".into()));
            }
            let rows = embedding_check(u, alpha, t, &anchor, &hs)?;
            let mut measured = Vec::new();
            for r in &rows {
                measured.push(Measurement { config: format!("r1 h={:?}", r.h), value: r.r1 });
                measured.push(Measurement { config: format!("r2 h={:?}", r.h), value: r.r2 });
            }
            let slope = envelope_slope(&rows).unwrap_or(0.0);
            Ok(AuditReport::new(
                "embedding",
                measured,
                vec![Check::at_most("|log-log slope of running-sup envelope|", slope.abs(), *threshold)],
                vec![format!("anchor t = {t}, x = {anchor:?}")],
            ))
        }
    }
}

/// A bare solution in the form the result-based audits take.
fn wrap(u: &SpaceTimeFn) -> SolveResult {
    SolveResult {
        u: u.clone(),
        residual_report: ResidualReport { max_abs: 0.0, relative: 0.0 },
        boundary_influence: 0.0,
        iterations: Default::default(),
        hypotheses: None,
        warnings: Vec::new(),
    }
}
