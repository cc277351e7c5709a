//! Run configuration: JSON schema, defaults and validation.

use serde::{Deserialize, Serialize};

use schauder_core::coeffspec::{OperatorSpec, SpecText};
use schauder_core::expr::parse_expr;
use schauder_core::holder::{GridFn, SpaceGrid};
use schauder_core::solver::{Blend, BoundaryMode};

use crate::error::CliError;

pub const SCHEMA_VERSION: u32 = 1;
pub const MAX_POINTS: usize = 1025;
pub const MAX_TIME_STEPS: usize = 4096;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub schema_version: u32,
    #[serde(default)]
    pub mode: Mode,
    pub problem: Problem,
    pub grid: GridConfig,
    /// Clamp `b, c, f` to `[−n, n]`.
    #[serde(default)]
    pub truncation: Option<usize>,
    #[serde(default)]
    pub solver: SolverConfig,
    #[serde(default)]
    pub suites: Vec<Suite>,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub outputs: Outputs,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Mode {
    #[default]
    Cauchy,
    Continuation,
    Elliptic,
    Semigroup,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Problem {
    pub dim: usize,
    /// Row-major `d × d` matrix of expressions.
    pub a: Vec<Vec<String>>,
    pub b: Vec<String>,
    pub c: String,
    pub f: String,
    pub alpha: f64,
    pub time_window: [f64; 2],
    #[serde(default)]
    pub t_breakpoints: Vec<f64>,
    /// `g(x)`, evaluated at `t = S`.
    #[serde(default = "zero_expr")]
    pub final_condition: String,
}

fn zero_expr() -> String {
    "0".into()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    pub radius: f64,
    /// Points per axis.
    pub points: usize,
    pub time_steps: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SolverConfig {
    pub boundary_mode: BoundaryMode,
    pub blend: Blend,
    pub theta: f64,
    pub linear_tol: f64,
    pub max_linear_iter: usize,
    pub lambda_step: f64,
    pub picard_tol: f64,
    pub max_picard: usize,
    pub tol_stat: f64,
    pub max_horizon: f64,
    pub steps_per_unit: usize,
    /// Semigroup mode: `T_t g` is computed for this `t`.
    pub semigroup_time: f64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            boundary_mode: BoundaryMode::DirichletFinal,
            blend: Blend::Auto,
            theta: 0.5,
            linear_tol: 1e-10,
            max_linear_iter: 2000,
            lambda_step: 0.1,
            picard_tol: 1e-8,
            max_picard: 200,
            tol_stat: 1e-8,
            max_horizon: 200.0,
            steps_per_unit: 16,
            semigroup_time: 1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Outputs {
    pub dir: String,
    pub report: String,
    pub csv: String,
    pub plot: String,
}

impl Default for Outputs {
    fn default() -> Self {
        Outputs { dir: ".".into(), report: "report.json".into(), csv: "solution.csv".into(), plot: "plot.gp".into() }
    }
}

/// Parameter sweep over a placeholder such as `{beta}` in the problem strings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Sweep {
    #[serde(default = "beta")]
    pub parameter: String,
    pub values: Vec<f64>,
}

fn beta() -> String {
    "beta".into()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "name", rename_all = "snake_case", deny_unknown_fields)]
pub enum Suite {
    MaxPrinciple {
        #[serde(default = "d_mp")]
        threshold: f64,
        /// Extra seeded random operators with growing coefficients.
        #[serde(default)]
        random_specs: usize,
        #[serde(default = "d_drift")]
        drift_max: f64,
    },
    Schauder {
        #[serde(default = "d_spread")]
        threshold: f64,
        #[serde(default)]
        sweep: Option<Sweep>,
        /// Norms are taken this far inside the box.
        #[serde(default = "d_margin")]
        margin: f64,
    },
    TimeHolder {
        #[serde(default = "d_growth")]
        threshold: f64,
        #[serde(default)]
        window: Option<[f64; 2]>,
        #[serde(default)]
        ball_radius: Option<f64>,
        /// Gaps `4^{-1}, …, 4^{-levels}`.
        #[serde(default = "d_levels")]
        levels: u32,
    },
    IntegralResidual {
        #[serde(default = "d_residual")]
        threshold: f64,
    },
    GaugeIndependence {
        /// Grid steps per time step of each grid-aligned drift level (first axis).
        #[serde(default = "d_b0_steps")]
        b0_steps: Vec<i64>,
        /// Extra drift levels given directly; these are interpolated.
        #[serde(default)]
        b0_levels: Vec<Vec<f64>>,
        #[serde(default = "d_c0")]
        c0_levels: Vec<f64>,
        #[serde(default = "d_family")]
        family: usize,
        #[serde(default = "d_interp")]
        interp_tol: f64,
    },
    Localization {
        #[serde(default = "d_residual")]
        threshold: f64,
        #[serde(default = "d_eps")]
        eps: Vec<f64>,
        #[serde(default)]
        x0: Option<Vec<f64>>,
    },
    Embedding {
        #[serde(default = "d_growth")]
        threshold: f64,
        #[serde(default)]
        t: Option<f64>,
        #[serde(default)]
        x: Option<Vec<f64>>,
        /// `h² = 4^{-1}, …, 4^{-levels}`.
        #[serde(default = "d_levels")]
        levels: u32,
    },
}

fn d_mp() -> f64 {
    1.01
}
fn d_drift() -> f64 {
    20.0
}
fn d_spread() -> f64 {
    2.0
}
fn d_margin() -> f64 {
    0.5
}
fn d_growth() -> f64 {
    0.15
}
fn d_levels() -> u32 {
    4
}
fn d_residual() -> f64 {
    1e-2
}
fn d_b0_steps() -> Vec<i64> {
    vec![1, -1]
}
fn d_c0() -> Vec<f64> {
    vec![0.0, 1.0, 10.0]
}
fn d_family() -> usize {
    3
}
fn d_interp() -> f64 {
    1e-2
}
fn d_eps() -> Vec<f64> {
    vec![0.4, 0.2, 0.1]
}

impl Suite {
    pub fn name(&self) -> &'static str {
        match self {
            Suite::MaxPrinciple { .. } => "max_principle",
            Suite::Schauder { .. } => "schauder",
            Suite::TimeHolder { .. } => "time_holder",
            Suite::IntegralResidual { .. } => "integral_residual",
            Suite::GaugeIndependence { .. } => "gauge_independence",
            Suite::Localization { .. } => "localization",
            Suite::Embedding { .. } => "embedding",
        }
    }

    /// Whether the suite reads the configured problem's time-dependent solution.
    pub fn needs_solution(&self) -> bool {
        !matches!(self, Suite::Schauder { .. } | Suite::GaugeIndependence { .. })
    }
}

impl Problem {
    /// Replaces `{name}` by `value` in every expression.
    pub fn substituted(&self, name: &str, value: f64) -> Problem {
        let key = format!("{{{name}}}");
        let sub = |s: &String| s.replace(&key, &format!("({value:?})"));
        Problem {
            a: self.a.iter().map(|r| r.iter().map(sub).collect()).collect(),
            b: self.b.iter().map(sub).collect(),
            c: sub(&self.c),
            f: sub(&self.f),
            final_condition: sub(&self.final_condition),
            ..self.clone()
        }
    }

    pub fn spec_text(&self) -> SpecText {
        SpecText {
            dim: self.dim,
            a: self.a.clone(),
            b: self.b.clone(),
            c: self.c.clone(),
            f: self.f.clone(),
            alpha: self.alpha,
            time_window: self.time_window,
            t_breakpoints: self.t_breakpoints.clone(),
        }
    }

    pub fn compile(&self) -> Result<OperatorSpec, CliError> {
        self.spec_text().compile().map_err(|e| CliError::Config(e.to_string()))
    }

    /// `g` on the grid, evaluated at the end of the time window.
    pub fn final_values(&self, grid: SpaceGrid) -> Result<GridFn, CliError> {
        let g = parse_expr(&self.final_condition).map_err(|e| CliError::Config(format!("final_condition: {e}")))?;
        let s = self.time_window[1];
        grid.try_sample(|x| g.eval(s, x)).map_err(|e| CliError::Numerical(format!("final_condition: {e}")))
    }
}

impl GridConfig {
    pub fn space(&self, d: usize) -> Result<SpaceGrid, CliError> {
        SpaceGrid::new(d, self.radius, self.points).map_err(|e| CliError::Config(e.to_string()))
    }
}

fn positive(name: &str, v: f64) -> Result<(), CliError> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(CliError::Config(format!("{name} must be positive and finite")))
    }
}

/// Parses and validates a configuration without touching numerical code.
pub fn parse_config(text: &str) -> Result<RunConfig, CliError> {
    let cfg: RunConfig = serde_json::from_str(text).map_err(|e| CliError::Config(format!("invalid config: {e}")))?;
    cfg.validate()?;
    Ok(cfg)
}

impl RunConfig {
    pub fn validate(&self) -> Result<(), CliError> {
        if self.schema_version != SCHEMA_VERSION {
            return Err(CliError::Config(format!("schema_version {} unsupported (expected {SCHEMA_VERSION})", self.schema_version)));
        }
        let p = &self.problem;
        if !(p.alpha > 0.0 && p.alpha < 1.0) {
            return Err(CliError::Config("alpha out of (0,1)".into()));
        }
        if !(1..=3).contains(&p.dim) {
            return Err(CliError::Config("dim out of {1,2,3}".into()));
        }
        let [t0, s] = p.time_window;
        if !(t0.is_finite() && s.is_finite() && t0 < s) {
            return Err(CliError::Config("time_window must satisfy T < S".into()));
        }
        positive("grid.radius", self.grid.radius)?;
        if !(3..=MAX_POINTS).contains(&self.grid.points) {
            return Err(CliError::Config(format!("grid.points out of [3, {MAX_POINTS}]")));
        }
        if !(2..=MAX_TIME_STEPS).contains(&self.grid.time_steps) {
            return Err(CliError::Config(format!("grid.time_steps out of [2, {MAX_TIME_STEPS}]")));
        }
        if self.grid.points.checked_pow(p.dim as u32).map_or(true, |n| n > 4_000_000) {
            return Err(CliError::Config("grid too large".into()));
        }
        if self.truncation == Some(0) {
            return Err(CliError::Config("truncation level must be at least 1".into()));
        }
        let sv = &self.solver;
        if !(sv.theta >= 0.5 && sv.theta <= 1.0) {
            return Err(CliError::Config("solver.theta out of [1/2, 1]".into()));
        }
        if !(sv.lambda_step > 0.0 && sv.lambda_step <= 1.0) {
            return Err(CliError::Config("solver.lambda_step out of (0, 1]".into()));
        }
        positive("solver.linear_tol", sv.linear_tol)?;
        positive("solver.picard_tol", sv.picard_tol)?;
        positive("solver.tol_stat", sv.tol_stat)?;
        positive("solver.max_horizon", sv.max_horizon)?;
        positive("solver.semigroup_time", sv.semigroup_time)?;
        if sv.max_linear_iter == 0 || sv.max_picard == 0 || sv.steps_per_unit == 0 {
            return Err(CliError::Config("iteration limits must be positive".into()));
        }
        let mut names: Vec<&str> = self.suites.iter().map(Suite::name).collect();
        names.sort_unstable();
        if names.windows(2).any(|w| w[0] == w[1]) {
            return Err(CliError::Config("each suite may appear once".into()));
        }
        let time_dependent = matches!(self.mode, Mode::Cauchy | Mode::Continuation);
        for suite in &self.suites {
            if suite.needs_solution() && !time_dependent {
                return Err(CliError::Config(format!("suite {} needs mode cauchy or continuation", suite.name())));
            }
            self.validate_suite(suite)?;
        }
        // Expressions: every sweep value must compile.
        let problems: Vec<Problem> = match self.sweep() {
            Some(sw) => sw.values.iter().map(|v| p.substituted(&sw.parameter, *v)).collect(),
            None => vec![p.clone()],
        };
        for q in &problems {
            let spec = q.compile()?;
            parse_expr(&q.final_condition).map_err(|e| CliError::Config(format!("final_condition: {e}")))?;
            if matches!(self.mode, Mode::Elliptic | Mode::Semigroup) && !spec.is_time_independent() {
                return Err(CliError::Config("elliptic and semigroup modes need time-independent coefficients".into()));
            }
        }
        Ok(())
    }

    pub fn sweep(&self) -> Option<&Sweep> {
        self.suites.iter().find_map(|s| match s {
            Suite::Schauder { sweep: Some(sw), .. } => Some(sw),
            _ => None,
        })
    }

    fn validate_suite(&self, suite: &Suite) -> Result<(), CliError> {
        let d = self.problem.dim;
        match suite {
            Suite::MaxPrinciple { threshold, random_specs, drift_max } => {
                positive("max_principle.threshold", *threshold)?;
                if !(*drift_max >= 0.0 && drift_max.is_finite()) || *random_specs > 100 {
                    return Err(CliError::Config("max_principle: drift_max ≥ 0 and at most 100 random specs".into()));
                }
            }
            Suite::Schauder { threshold, sweep, margin } => {
                positive("schauder.threshold", *threshold)?;
                if !(*margin >= 0.0 && *margin < self.grid.radius) {
                    return Err(CliError::Config("schauder.margin out of [0, radius)".into()));
                }
                if let Some(sw) = sweep {
                    if sw.values.is_empty() || sw.values.len() > 16 || sw.values.iter().any(|v| !v.is_finite()) {
                        return Err(CliError::Config("schauder.sweep needs 1 to 16 finite values".into()));
                    }
                    if sw.parameter.is_empty() || !sw.parameter.chars().all(|c| c.is_ascii_alphanumeric() || c == '_') {
                        return Err(CliError::Config("schauder.sweep.parameter must be an identifier".into()));
                    }
                }
            }
            Suite::TimeHolder { threshold, window, ball_radius, levels } => {
                positive("time_holder.threshold", *threshold)?;
                if let Some([a, b]) = window {
                    if !(a < b) {
                        return Err(CliError::Config("time_holder.window must be increasing".into()));
                    }
                }
                if let Some(r) = ball_radius {
                    positive("time_holder.ball_radius", *r)?;
                }
                if !(1..=8).contains(levels) {
                    return Err(CliError::Config("time_holder.levels out of [1, 8]".into()));
                }
            }
            Suite::IntegralResidual { threshold } => positive("integral_residual.threshold", *threshold)?,
            Suite::GaugeIndependence { b0_steps, b0_levels, c0_levels, family, interp_tol } => {
                positive("gauge_independence.interp_tol", *interp_tol)?;
                if *family == 0 || *family > 16 {
                    return Err(CliError::Config("gauge_independence.family out of [1, 16]".into()));
                }
                if b0_steps.iter().any(|s| s.unsigned_abs() > 64) {
                    return Err(CliError::Config("gauge_independence.b0_steps out of [-64, 64]".into()));
                }
                if b0_levels.iter().any(|l| l.len() != d || l.iter().any(|v| !v.is_finite())) {
                    return Err(CliError::Config("gauge_independence.b0_levels must be finite vectors of length dim".into()));
                }
                if c0_levels.iter().any(|c| !(*c >= 0.0 && c.is_finite())) {
                    return Err(CliError::Config("gauge_independence.c0_levels must be non-negative".into()));
                }
            }
            Suite::Localization { threshold, eps, x0 } => {
                positive("localization.threshold", *threshold)?;
                if eps.is_empty() || eps.iter().any(|e| !(*e > 0.0 && *e < 0.5)) {
                    return Err(CliError::Config("localization.eps values must lie in (0, 1/2)".into()));
                }
                if x0.as_ref().is_some_and(|x| x.len() != d || x.iter().any(|v| !v.is_finite())) {
                    return Err(CliError::Config("localization.x0 must be a finite point of length dim".into()));
                }
            }
            Suite::Embedding { threshold, t, x, levels } => {
                positive("embedding.threshold", *threshold)?;
                if t.is_some_and(|t| !t.is_finite()) || x.as_ref().is_some_and(|x| x.len() != d || x.iter().any(|v| !v.is_finite())) {
                    return Err(CliError::Config("embedding anchor must be finite and of length dim".into()));
                }
                if !(1..=8).contains(levels) {
                    return Err(CliError::Config("embedding.levels out of [1, 8]".into()));
                }
            }
        }
        Ok(())
    }
}
