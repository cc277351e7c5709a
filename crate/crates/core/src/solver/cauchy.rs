use serde::{Deserialize, Serialize};

use super::scheme::{apply_operator, assemble, march, time_derivative, time_nodes, BoundaryMode, March, MarchStats, Scheme};
use super::sparse::Csr;
use crate::coeffspec::{check_hypotheses, HypothesisReport, OperatorSpec, SampleConfig};
use crate::error::{Error, Result};
use crate::expr::{parse_expr, BinaryOp, ExprNode, UnaryOp};
use crate::holder::{fd_hessian, trace, GridFn, SpaceGrid, SpaceTimeFn};

/// `f̃(t) = e^{s−t}·term` for `t > s`.
#[derive(Debug, Clone, PartialEq)]
pub struct ForcingTail {
    pub s: f64,
    pub term: GridFn,
}

/// `u_t + Lu = f` on `[T, S] × box`, `u(S) = g`.
#[derive(Debug, Clone)]
pub struct CauchyProblem {
    pub spec: OperatorSpec,
    pub g: GridFn,
    pub n_time: usize,
    /// Truncation level for `b, c, f`; 0 leaves them untouched.
    pub n_trunc: usize,
    pub boundary_mode: BoundaryMode,
    pub scheme: Scheme,
    /// Hypothesis violations are errors instead of warnings.
    pub strict: bool,
    pub tail: Option<ForcingTail>,
}

impl CauchyProblem {
    pub fn new(spec: OperatorSpec, g: GridFn, n_time: usize) -> Self {
        CauchyProblem {
            spec,
            g,
            n_time,
            n_trunc: 0,
            boundary_mode: BoundaryMode::default(),
            scheme: Scheme::default(),
            strict: false,
            tail: None,
        }
    }

    pub fn grid(&self) -> SpaceGrid {
        self.g.grid
    }

    pub fn with_boundary(mut self, mode: BoundaryMode) -> Self {
        self.boundary_mode = mode;
        self
    }

    pub fn with_scheme(mut self, scheme: Scheme) -> Self {
        self.scheme = scheme;
        self
    }

    pub fn with_truncation(mut self, n: usize) -> Self {
        self.n_trunc = n;
        self
    }

    /// The spec actually solved: truncated when `n_trunc > 0`.
    pub fn effective_spec(&self) -> OperatorSpec {
        if self.n_trunc > 0 {
            truncate_coeffs(&self.spec, self.n_trunc)
        } else {
            self.spec.clone()
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ResidualReport {
    /// Largest `|u(t_{k+1}) − u(t_k) − ∫ u_t|` with the trapezoid rule.
    pub max_abs: f64,
    /// `max_abs / max(sup|u|, 1e-300)`.
    pub relative: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct IterationCounts {
    pub time_steps: usize,
    pub linear_iterations: usize,
    pub worst_linear_residual: f64,
    /// Continuation only: the λ reached after each step.
    pub lambdas: Vec<f64>,
    pub picard: Vec<usize>,
    pub contraction_factors: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolveResult {
    pub u: SpaceTimeFn,
    pub residual_report: ResidualReport,
    /// Largest `|u|` difference between a node adjacent to the boundary and
    /// its boundary neighbour.
    pub boundary_influence: f64,
    pub iterations: IterationCounts,
    pub hypotheses: Option<HypothesisReport>,
    pub warnings: Vec<String>,
}

/// `b, c, f` wrapped in `χ_n(τ) = max(−n, min(τ, n))`; `a` untouched.
pub fn truncate_coeffs(spec: &OperatorSpec, n: usize) -> OperatorSpec {
    let n = n.max(1) as f64;
    let d = spec.dim();
    let b = (0..d).map(|i| spec.b(i).clone().clamped(n)).collect();
    spec.clone()
        .with_b(b)
        .with_c(spec.c().clone().clamped(n))
        .with_f(spec.f().clone().clamped(n))
}

pub(crate) fn hypothesis_sample(grid: &SpaceGrid) -> SampleConfig {
    SampleConfig::new(grid.radius, grid.n.min(9), 5, 4)
}

pub(crate) fn screen_hypotheses(spec: &OperatorSpec, grid: &SpaceGrid, strict: bool, warnings: &mut Vec<String>) -> Result<HypothesisReport> {
    let report = check_hypotheses(spec, &hypothesis_sample(grid))?;
    if !report.holds() {
        let msg = format!(
            "hypotheses fail on the box: δ = {}, {} violation(s)",
            report.delta,
            report.violations.len()
        );
        if strict {
            return Err(Error::HypothesisViolation(msg));
        }
        warnings.push(msg);
    }
    Ok(report)
}

pub(crate) fn operator_at(spec: &OperatorSpec, grid: &SpaceGrid, scheme: &Scheme, mode: BoundaryMode, t: f64) -> Result<Csr> {
    let coeffs = |x: &[f64]| spec.eval_all(t, x);
    assemble(grid, &coeffs, scheme.blend, mode)
}

pub(crate) fn source_at(spec: &OperatorSpec, tail: Option<&ForcingTail>, grid: &SpaceGrid, t: f64) -> Result<Vec<f64>> {
    if let Some(tail) = tail {
        if t > tail.s {
            return Ok(tail.term.scaled((tail.s - t).exp()).values);
        }
    }
    Ok(grid.try_sample(|x| spec.eval_f(t, x))?.values)
}

pub(crate) fn boundary_influence(u: &SpaceTimeFn) -> f64 {
    let g = u.grid;
    let n = g.n;
    let mut worst = 0.0f64;
    for node in 0..g.len() {
        if g.is_boundary(node) {
            continue;
        }
        let idx = g.multi_index(node);
        for a in 0..g.d {
            let off = if idx[a] == 1 {
                -1
            } else if idx[a] == n - 2 {
                1
            } else {
                continue;
            };
            let mut e = [0i64; 3];
            e[a] = off;
            let b = g.offset(node, &e[..g.d]).expect("neighbour");
            for s in &u.slices {
                worst = worst.max((s.values[node] - s.values[b]).abs());
            }
        }
    }
    worst
}

pub(crate) fn residual_report(u: &SpaceTimeFn) -> ResidualReport {
    let max_abs = u.fundamental_theorem_residual().unwrap_or(0.0);
    ResidualReport { max_abs, relative: max_abs / u.sup().max(1e-300) }
}

/// Solves with a fully prepared spec (no truncation, no screening).
pub(crate) fn solve_prepared(
    spec: &OperatorSpec,
    g: &GridFn,
    n_time: usize,
    mode: BoundaryMode,
    scheme: &Scheme,
    tail: Option<&ForcingTail>,
) -> Result<(SpaceTimeFn, MarchStats)> {
    let grid = g.grid;
    let (t0, s) = spec.window();
    let mut bps = spec.breakpoints().to_vec();
    if let Some(tail) = tail {
        bps.push(tail.s);
    }
    let times = time_nodes(t0, s, &bps, n_time);
    let op = |t: f64| operator_at(spec, &grid, scheme, mode, t);
    let src = |t: f64| source_at(spec, tail, &grid, t);
    let (slices, stats) = march(&March {
        grid,
        times: &times,
        final_values: g,
        boundary: mode,
        scheme: *scheme,
        operator: &op,
        source: &src,
        frozen_operator: spec.is_time_independent() && tail.is_none(),
    })?;
    let mut dts = Vec::with_capacity(slices.len());
    for (u, &t) in slices.iter().zip(&times) {
        dts.push(time_derivative(&op(t)?, &src(t)?, u, mode));
    }
    Ok((SpaceTimeFn::new(times, slices, Some(dts))?, stats))
}

fn validate(p: &CauchyProblem) -> Result<()> {
    if p.n_time < 2 {
        return Err(Error::InvalidArgument("need at least 2 time steps".into()));
    }
    if p.g.grid.d != p.spec.dim() {
        return Err(Error::InvalidArgument("final condition and operator dimensions differ".into()));
    }
    if !(p.scheme.theta >= 0.5 && p.scheme.theta <= 1.0) {
        return Err(Error::InvalidArgument(format!("θ = {} outside [1/2, 1]", p.scheme.theta)));
    }
    Ok(())
}

/// Backward θ-scheme for `u_t + Lu = f`, `u(S) = g`.
pub fn solve_cauchy(p: &CauchyProblem) -> Result<SolveResult> {
    validate(p)?;
    let spec = p.effective_spec();
    let mut warnings = Vec::new();
    let report = screen_hypotheses(&spec, &p.grid(), p.strict, &mut warnings)?;
    let (u, stats) = solve_prepared(&spec, &p.g, p.n_time, p.boundary_mode, &p.scheme, p.tail.as_ref())?;
    Ok(SolveResult {
        residual_report: residual_report(&u),
        boundary_influence: boundary_influence(&u),
        iterations: IterationCounts {
            time_steps: stats.steps,
            linear_iterations: stats.linear_iterations,
            worst_linear_residual: stats.worst_linear_residual,
            ..IterationCounts::default()
        },
        u,
        hypotheses: Some(report),
        warnings,
    })
}

/// `e·(1 − step(t − s)) + tail·step(t − s)`.
fn switch_at(e: &ExprNode, tail: ExprNode, s: f64) -> ExprNode {
    let step = ExprNode::unary(UnaryOp::Step, ExprNode::binary(BinaryOp::Sub, ExprNode::var_t(), ExprNode::num(s)));
    let keep = ExprNode::binary(BinaryOp::Sub, ExprNode::num(1.0), step.clone());
    ExprNode::binary(BinaryOp::Add, ExprNode::binary(BinaryOp::Mul, e.clone(), keep), ExprNode::binary(BinaryOp::Mul, tail, step))
}

/// Extension past `S`: for `t > S` the operator becomes `Δ − δ` and the
/// forcing `e^{S−t}(Δ_h g − (1+δ)g)`, so that `e^{S−t}g` solves the extended
/// equation there.
#[derive(Debug, Clone)]
pub struct Extension {
    pub spec: OperatorSpec,
    pub tail: ForcingTail,
}

impl Extension {
    /// The extended problem on `[s, s + horizon]` with final value `e^{−horizon} g`.
    pub fn plateau_problem(&self, g: &GridFn, horizon: f64, n_time: usize) -> Result<CauchyProblem> {
        let s = self.tail.s;
        let spec = self.spec.clone().with_window((s, s + horizon))?;
        let mut p = CauchyProblem::new(spec, g.scaled((-horizon).exp()), n_time);
        p.tail = Some(self.tail.clone());
        Ok(p)
    }
}

pub fn extend_final_condition(spec: &OperatorSpec, g: &GridFn, delta: f64, horizon: f64) -> Result<Extension> {
    if !(horizon > 0.0) {
        return Err(Error::InvalidArgument("extension horizon must be positive".into()));
    }
    let d = spec.dim();
    let (t0, s) = spec.window();
    let a = (0..d)
        .map(|i| (0..d).map(|j| switch_at(spec.a(i, j), ExprNode::num(if i == j { 1.0 } else { 0.0 }), s)).collect())
        .collect();
    let b = (0..d).map(|i| switch_at(spec.b(i), ExprNode::num(0.0), s)).collect();
    let c = switch_at(spec.c(), ExprNode::num(delta), s);
    let f = switch_at(spec.f(), ExprNode::num(0.0), s);
    let mut bps = spec.breakpoints().to_vec();
    bps.push(s);
    let ext = OperatorSpec::new(d, a, b, c, f, spec.alpha(), (t0, s + horizon), bps)?;
    let lap = trace(&fd_hessian(g));
    let term = lap.zip_map(g, |l, v| l - (1.0 + delta) * v);
    Ok(Extension { spec: ext, tail: ForcingTail { s, term } })
}

#[derive(Debug, Clone, PartialEq)]
pub struct DegenerateResult {
    /// `v = e^{S−t}u`, the solution of the original problem.
    pub result: SolveResult,
    /// `u` solving `u_t + Lu − u = e^{t−S}f`.
    pub inner: SolveResult,
    /// `e^{S−T}`, the factor relating bounds for `u` and `v`.
    pub inflation: f64,
}

/// For `c ≥ 0` only: solves `u_t + (L − 1)u = e^{t−S}f`, `u(S) = g`, and
/// returns `v = e^{S−t}u`.
pub fn solve_degenerate_c(p: &CauchyProblem) -> Result<DegenerateResult> {
    validate(p)?;
    let spec = p.effective_spec();
    let (t0, s) = spec.window();
    let shifted_c = ExprNode::binary(BinaryOp::Add, spec.c().clone(), ExprNode::num(1.0));
    let weight = parse_expr(&format!("exp(t - ({s}))")).map_err(|e| Error::InvalidSpec(e.to_string()))?;
    let inner_spec = spec.clone().with_c(shifted_c).with_f(ExprNode::binary(BinaryOp::Mul, spec.f().clone(), weight));
    let mut q = p.clone();
    q.spec = inner_spec;
    q.n_trunc = 0;
    let inner = solve_cauchy(&q)?;
    let u = &inner.u;
    let mut slices = Vec::new();
    let mut dts = Vec::new();
    for (k, &t) in u.times.iter().enumerate() {
        let e = (s - t).exp();
        slices.push(u.slices[k].scaled(e));
        let dt = &u.dt_slices.as_ref().expect("solver stores u_t")[k];
        dts.push(dt.zip_map(&u.slices[k], |a, b| e * (a - b)));
    }
    let v = SpaceTimeFn::new(u.times.clone(), slices, Some(dts))?;
    let result = SolveResult {
        residual_report: residual_report(&v),
        boundary_influence: boundary_influence(&v),
        iterations: inner.iterations.clone(),
        hypotheses: inner.hypotheses.clone(),
        warnings: inner.warnings.clone(),
        u: v,
    };
    Ok(DegenerateResult { result, inner, inflation: (s - t0).exp() })
}

/// `T_t g`: the solution at elapsed time `t` of the problem with the spec's
/// (time-independent) coefficients, `f = 0`, marched by the monotone scheme
/// in steps of at most `max_dt`.
pub fn semigroup_t(spec: &OperatorSpec, g: &GridFn, t: f64, max_dt: f64) -> Result<GridFn> {
    if !(t >= 0.0) {
        return Err(Error::InvalidArgument(format!("duration {t} must be non-negative")));
    }
    if !spec.is_time_independent() {
        return Err(Error::InvalidArgument("semigroup needs time-independent coefficients".into()));
    }
    if t == 0.0 {
        return Ok(g.clone());
    }
    let spec = spec.clone().with_f(ExprNode::num(0.0)).with_window((0.0, t))?.with_breakpoints(Vec::new());
    let n = ((t / max_dt) - 1e-9).ceil().max(2.0) as usize;
    let scheme = Scheme { linear_tol: 1e-13, ..Scheme::monotone() };
    let (u, _) = solve_prepared(&spec, g, n, BoundaryMode::DirichletFinal, &scheme, None)?;
    Ok(u.slices[0].clone())
}

/// `L_h u` for a spec at time `t` (helper shared with the auditors).
pub fn discrete_l(spec: &OperatorSpec, u: &GridFn, t: f64, scheme: &Scheme, mode: BoundaryMode) -> Result<GridFn> {
    Ok(apply_operator(&operator_at(spec, &u.grid, scheme, mode, t)?, u))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernel::heat_semigroup;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn spec(d: usize, text: (&[&str], &str, &str), window: (f64, f64)) -> OperatorSpec {
        let (b, c, f) = text;
        OperatorSpec::constant(d, &vec![1.0; d], &vec![0.0; d], 1.0, 0.0, 0.5, window)
            .unwrap()
            .with_b(b.iter().map(|s| parse_expr(s).unwrap()).collect())
            .with_c(parse_expr(c).unwrap())
            .with_f(parse_expr(f).unwrap())
    }

    #[test]
    fn truncation_clamps_b_c_f_only() {
        let s = spec(1, (&["x1"], "1 + x1*x1", "x1"), (0.0, 1.0));
        let t = truncate_coeffs(&s, 5);
        let k = t.eval_all(0.0, &[10.0]).unwrap();
        assert_eq!((k.b[0], k.c, k.f), (5.0, 5.0, 5.0));
        let k = t.eval_all(0.0, &[-0.5]).unwrap();
        assert_eq!((k.b[0], k.c, k.f), (-0.5, 1.25, -0.5));
        assert_eq!(t.a(0, 0), s.a(0, 0));
    }

    #[test]
    fn spatially_constant_ode() {
        let delta = 0.8;
        let s = OperatorSpec::constant(2, &[2.0, 0.5], &[3.0, -1.0], delta, 0.0, 0.5, (0.0, 1.0)).unwrap();
        let g = GridFn::constant(SpaceGrid::new(2, 1.0, 9).unwrap(), 1.0);
        let p = CauchyProblem::new(s, g, 64).with_boundary(BoundaryMode::ZerothOrder);
        let r = solve_cauchy(&p).unwrap();
        for (t, slice) in r.u.times.iter().zip(&r.u.slices) {
            let exact = (delta * (t - 1.0)).exp();
            assert!(slice.values.iter().all(|v| (v - exact).abs() < 1e-5), "{t}");
        }
        assert_eq!(r.u.slices.last().unwrap(), &p.g);
    }

    #[test]
    fn heat_with_potential_matches_semigroup() {
        let delta = 0.5;
        let g = SpaceGrid::new(1, 8.0, 257).unwrap();
        let fin = g.sample(|x| (-x[0] * x[0]).exp());
        let s = OperatorSpec::constant(1, &[1.0], &[0.0], delta, 0.0, 0.5, (0.0, 1.0)).unwrap();
        let r = solve_cauchy(&CauchyProblem::new(s, fin.clone(), 128)).unwrap();
        let exact = heat_semigroup(&fin, 1.0).unwrap().scaled((-delta).exp());
        assert!(r.u.slices[0].dist_sup(&exact) <= 0.01 * exact.sup());
    }

    #[test]
    fn ornstein_uhlenbeck_manufactured() {
        let g = SpaceGrid::new(2, 4.0, 65).unwrap();
        let s = spec(2, (&["-x1", "-x2"], "1", "exp(t - 1)*exp(-(x1^2 + x2^2))*(1 - 4 + 4*(x1^2 + x2^2) + 2*(x1^2 + x2^2) - 1)"), (0.0, 1.0));
        let exact = |t: f64, x: &[f64]| (t - 1.0).exp() * (-(x[0] * x[0] + x[1] * x[1])).exp();
        let fin = g.sample(|x| exact(1.0, x));
        let r = solve_cauchy(&CauchyProblem::new(s, fin, 64)).unwrap();
        let mut err = 0.0f64;
        for (t, slice) in r.u.times.iter().zip(&r.u.slices) {
            err = err.max(slice.dist_sup(&g.sample(|x| exact(*t, x))));
        }
        assert!(err < 0.01, "{err}");
        assert!(r.residual_report.relative < 1e-2);
    }

    #[test]
    fn extension_gives_a_plateau() {
        let delta = 1.0;
        let g = SpaceGrid::new(1, 6.0, 121).unwrap();
        let fin = g.sample(|x| (-x[0] * x[0]).exp());
        let s = OperatorSpec::constant(1, &[1.0], &[0.5], delta, 0.0, 0.5, (0.0, 1.0)).unwrap();
        let ext = extend_final_condition(&s, &fin, delta, 2.0).unwrap();
        let x = [0.3];
        let k = ext.spec.eval_all(1.5, &x).unwrap();
        assert_eq!((k.a.m[0][0], k.b[0], k.c, k.f), (1.0, 0.0, delta, 0.0));
        assert_eq!(ext.spec.eval_all(0.5, &x).unwrap().b[0], 0.5);
        let node = g.nearest(&[0.0]).unwrap();
        let direct = -2.0 * fin.values[node] - (1.0 + delta) * fin.values[node];
        // Second differences are off by at most h²·max|g⁗|/12 = 0.01.
        assert!((ext.tail.term.values[node] - direct).abs() < 1.2e-2);
        let p = ext.plateau_problem(&fin, 1.0, 64).unwrap();
        let r = solve_cauchy(&p).unwrap();
        for (t, slice) in r.u.times.iter().zip(&r.u.slices) {
            let exact = fin.scaled((1.0 - t).exp());
            assert!(slice.dist_sup(&exact) < 1e-4, "{t} {}", slice.dist_sup(&exact));
        }
        let zero = extend_final_condition(&s, &GridFn::zeros(g), delta, 1.0).unwrap();
        assert!(zero.tail.term.values.iter().all(|v| *v == 0.0));
    }

    #[test]
    fn degenerate_potential() {
        let g = SpaceGrid::new(1, 2.0, 21).unwrap();
        let s = OperatorSpec::constant(1, &[1.0], &[0.0], 0.0, 1.0, 0.5, (0.0, 1.0)).unwrap();
        let p = CauchyProblem::new(s, GridFn::zeros(g), 128).with_boundary(BoundaryMode::ZerothOrder);
        let r = solve_degenerate_c(&p).unwrap();
        for (t, slice) in r.result.u.times.iter().zip(&r.result.u.slices) {
            assert!(slice.values.iter().all(|v| (v - (t - 1.0)).abs() < 1e-5));
        }
        assert!((r.inflation - 1f64.exp()).abs() < 1e-15);

        let g = SpaceGrid::new(1, 6.0, 121).unwrap();
        let fin = g.sample(|x| (-x[0] * x[0]).exp());
        let heat = OperatorSpec::constant(1, &[1.0], &[0.0], 0.0, 0.0, 0.5, (0.0, 1.0)).unwrap();
        let v = solve_degenerate_c(&CauchyProblem::new(heat, fin.clone(), 64)).unwrap();
        assert!(v.result.u.sup() <= fin.sup() * (1.0 + 1e-9));

        let s = spec(1, (&["0.5*sin(x1)"], "1 + 0.5*cos(x1)", "exp(-x1^2)"), (0.0, 1.0));
        let p = CauchyProblem::new(s, fin, 128);
        let a = solve_cauchy(&p).unwrap();
        let b = solve_degenerate_c(&p).unwrap();
        assert!(a.u.dist_sup(&b.result.u) < 1e-3, "{}", a.u.dist_sup(&b.result.u));
    }

    #[test]
    fn semigroup_contracts_and_composes() {
        let g = SpaceGrid::new(2, 3.0, 33).unwrap();
        let s = spec(2, (&["-2*x1", "sin(x1) - x2"], "1 + 0.2*x2*x2", "0"), (0.0, 1.0));
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..3 {
            let c: Vec<f64> = (0..4).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let fin = g.sample(|x| c[0] * (c[1] * x[0] + c[2] * x[1]).sin() + c[3] * (-x[0] * x[0]).exp());
            assert_eq!(semigroup_t(&s, &fin, 0.0, 0.05).unwrap(), fin);
            let ts = semigroup_t(&s, &fin, 0.3, 0.05).unwrap();
            assert!(ts.sup() <= fin.sup() + 1e-8);
            let direct = semigroup_t(&s, &fin, 0.5, 0.05).unwrap();
            let composed = semigroup_t(&s, &semigroup_t(&s, &fin, 0.3, 0.05).unwrap(), 0.2, 0.05).unwrap();
            assert!(direct.dist_sup(&composed) <= 0.01 * fin.sup());
        }
        assert!(semigroup_t(&s, &GridFn::zeros(g), -1.0, 0.1).is_err());
    }

    #[test]
    fn boundary_modes() {
        let g = SpaceGrid::new(1, 2.0, 41).unwrap();
        let fin = GridFn::constant(g, 1.0);
        let s = OperatorSpec::constant(1, &[1.0], &[0.0], 1.0, 0.0, 0.5, (0.0, 1.0)).unwrap();
        let zero = solve_cauchy(&CauchyProblem::new(s.clone(), fin.clone(), 32).with_boundary(BoundaryMode::DirichletZero)).unwrap();
        assert_eq!(zero.u.slices[0].values[0], 0.0);
        let held = solve_cauchy(&CauchyProblem::new(s, fin, 32)).unwrap();
        assert_eq!(held.u.slices[0].values[0], 1.0);
        assert!(held.boundary_influence > 0.0);
    }

    #[test]
    fn strict_mode_rejects_violations() {
        let g = SpaceGrid::new(1, 2.0, 21).unwrap();
        let s = OperatorSpec::constant(1, &[1.0], &[0.0], 0.0, 0.0, 0.5, (0.0, 1.0)).unwrap();
        let mut p = CauchyProblem::new(s, GridFn::zeros(g), 8);
        assert!(!solve_cauchy(&p).unwrap().warnings.is_empty());
        p.strict = true;
        assert!(matches!(solve_cauchy(&p), Err(Error::HypothesisViolation(_))));
    }
}
