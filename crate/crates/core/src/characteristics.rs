//! Drift flow, frozen coefficients, gauge transforms and the moving cutoff.

use serde::{Deserialize, Serialize};

use crate::coeffspec::{pair_directions, HypothesisReport, OperatorSpec, PointCoeffs};
use crate::error::{Error, Result};
use crate::holder::{fd_gradient, GridFn, SpaceGrid, SpaceTimeFn};
use crate::quad::{midpoint_cells, Composite};

/// A solution of `x' = b(t, x)` sampled at the integrator's steps.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FlowPath {
    pub t0: f64,
    pub x0: Vec<f64>,
    /// Monotone in the direction of integration; `times[0] = t0`.
    pub times: Vec<f64>,
    pub points: Vec<Vec<f64>>,
    /// `b(t, x(t))` at every stored point.
    pub velocities: Vec<Vec<f64>>,
    pub steps: usize,
    pub evaluations: usize,
}

impl FlowPath {
    pub fn dim(&self) -> usize {
        self.x0.len()
    }

    pub fn end_time(&self) -> f64 {
        self.times[self.times.len() - 1]
    }

    pub fn covers(&self, t: f64) -> bool {
        let (lo, hi) = if self.end_time() >= self.t0 { (self.t0, self.end_time()) } else { (self.end_time(), self.t0) };
        t >= lo - 1e-12 && t <= hi + 1e-12
    }

    fn locate(&self, t: f64) -> (usize, f64) {
        let forward = self.end_time() >= self.t0;
        let n = self.times.len();
        if n == 1 {
            return (0, 0.0);
        }
        let k = if forward {
            self.times.partition_point(|&s| s <= t)
        } else {
            self.times.partition_point(|&s| s >= t)
        }
        .clamp(1, n - 1);
        let (a, b) = (self.times[k - 1], self.times[k]);
        let w = if b != a { ((t - a) / (b - a)).clamp(0.0, 1.0) } else { 0.0 };
        (k, w)
    }

    /// `x(t)` by linear interpolation between stored steps.
    pub fn at(&self, t: f64) -> Vec<f64> {
        let (k, w) = self.locate(t);
        if self.times.len() == 1 {
            return self.points[0].clone();
        }
        self.points[k - 1].iter().zip(&self.points[k]).map(|(a, b)| (1.0 - w) * a + w * b).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FlowOpts {
    pub step: f64,
    /// `|x(t)|` above this aborts the integration.
    pub cap: f64,
}

impl FlowOpts {
    pub fn new(step: f64) -> Self {
        FlowOpts { step, cap: 1e8 }
    }
}

fn eval_b(spec: &OperatorSpec, t: f64, x: &[f64], evals: &mut usize) -> Result<Vec<f64>> {
    *evals += 1;
    Ok(spec.eval_b(t, x)?[..spec.dim()].to_vec())
}

/// Classical fourth-order Runge–Kutta for `x' = b(t, x)` from `(t0, x0)` to
/// `t1` (either direction), with step boundaries on every coefficient
/// breakpoint. Stage times are kept strictly inside each breakpoint-free
/// piece so a jump is never sampled from the wrong side.
pub fn flow(spec: &OperatorSpec, t0: f64, x0: &[f64], t1: f64, opts: &FlowOpts) -> Result<FlowPath> {
    let d = spec.dim();
    if x0.len() != d {
        return Err(Error::InvalidArgument(format!("start point has {} coordinates, expected {d}", x0.len())));
    }
    if !(opts.step > 0.0) {
        return Err(Error::InvalidArgument("flow step must be positive".into()));
    }
    let (lo, hi) = spec.window();
    for t in [t0, t1] {
        if t < lo - 1e-12 || t > hi + 1e-12 {
            return Err(Error::InvalidArgument(format!("time {t} outside the window [{lo}, {hi}]")));
        }
    }
    let dir = if t1 >= t0 { 1.0 } else { -1.0 };
    let mut cuts: Vec<f64> = spec
        .breakpoints()
        .iter()
        .copied()
        .filter(|&b| (b - t0) * dir > 0.0 && (t1 - b) * dir > 0.0)
        .collect();
    if dir < 0.0 {
        cuts.reverse();
    }
    cuts.insert(0, t0);
    cuts.push(t1);
    let mut evals = 0usize;
    let mut steps = 0usize;
    let mut x = x0.to_vec();
    let mut times = vec![t0];
    let mut points = vec![x.clone()];
    let mut velocities = vec![eval_b(spec, t0, &x, &mut evals)?];
    for seg in cuts.windows(2) {
        let (a, b) = (seg[0], seg[1]);
        let len = (b - a).abs();
        if len == 0.0 {
            continue;
        }
        let n = ((len / opts.step) - 1e-9).ceil().max(1.0) as usize;
        let hstep = (b - a) / n as f64;
        let guard = 1e-12 * len.max(1.0);
        let inside = |t: f64| {
            let (l, r) = if a < b { (a, b) } else { (b, a) };
            t.clamp(l + guard, r - guard)
        };
        for k in 0..n {
            let t = a + hstep * k as f64;
            let k1 = eval_b(spec, inside(t), &x, &mut evals)?;
            let y2: Vec<f64> = x.iter().zip(&k1).map(|(xi, ki)| xi + 0.5 * hstep * ki).collect();
            let k2 = eval_b(spec, inside(t + 0.5 * hstep), &y2, &mut evals)?;
            let y3: Vec<f64> = x.iter().zip(&k2).map(|(xi, ki)| xi + 0.5 * hstep * ki).collect();
            let k3 = eval_b(spec, inside(t + 0.5 * hstep), &y3, &mut evals)?;
            let y4: Vec<f64> = x.iter().zip(&k3).map(|(xi, ki)| xi + hstep * ki).collect();
            let k4 = eval_b(spec, inside(t + hstep), &y4, &mut evals)?;
            for i in 0..d {
                x[i] += hstep / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
            }
            steps += 1;
            let tn = if k + 1 == n { b } else { a + hstep * (k + 1) as f64 };
            let norm = x.iter().map(|v| v * v).sum::<f64>().sqrt();
            if !(norm <= opts.cap) {
                return Err(Error::FlowBlowUp { t: tn, norm });
            }
            times.push(tn);
            points.push(x.clone());
            velocities.push(eval_b(spec, inside(tn), &x, &mut evals)?);
        }
    }
    Ok(FlowPath { t0, x0: x0.to_vec(), times, points, velocities, steps, evaluations: evals })
}

/// Coefficients of `spec` frozen along a characteristic.
#[derive(Debug, Clone)]
pub struct FrozenOperator {
    pub spec: OperatorSpec,
    pub path: FlowPath,
}

/// Largest deviation of the coefficients from their frozen values within
/// distance `2ε` of the path, against the bounds `2^α K ε^α` (`a`, `c`),
/// `2^α K ε^α d` (`|b|`) and `2^α F_α ε^α` (`f`).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DeviationReport {
    pub eps: f64,
    pub max_a: f64,
    pub max_b: f64,
    pub max_c: f64,
    pub max_f: f64,
    pub bound_a: f64,
    pub bound_b: f64,
    pub bound_c: f64,
    pub bound_f: f64,
}

impl DeviationReport {
    pub fn within_bounds(&self) -> bool {
        let ok = |m: f64, b: f64| m <= b * (1.0 + 1e-9) + 1e-14;
        ok(self.max_a, self.bound_a) && ok(self.max_b, self.bound_b) && ok(self.max_c, self.bound_c) && ok(self.max_f, self.bound_f)
    }
}

impl FrozenOperator {
    pub fn at(&self, t: f64) -> Result<PointCoeffs> {
        self.spec.eval_all(t, &self.path.at(t))
    }

    /// Deviation diagnostic, sampling the ball of radius `2ε` around `x(t)` at
    /// every stored path time along coordinate and diagonal directions at
    /// `n_radii` equally spaced radii.
    pub fn deviation(&self, eps: f64, report: &HypothesisReport, n_radii: usize) -> Result<DeviationReport> {
        let d = self.spec.dim();
        let alpha = self.spec.alpha();
        let dirs = pair_directions(d);
        let scale = 2f64.powf(alpha) * eps.powf(alpha);
        let mut out = DeviationReport {
            eps,
            max_a: 0.0,
            max_b: 0.0,
            max_c: 0.0,
            max_f: 0.0,
            bound_a: scale * report.big_k,
            bound_b: scale * report.big_k * d as f64,
            bound_c: scale * report.big_k,
            bound_f: scale * report.f_alpha,
        };
        for (t, xt) in self.path.times.iter().zip(&self.path.points) {
            let frozen = self.spec.eval_all(*t, xt)?;
            for dir in &dirs {
                for sign in [1.0, -1.0] {
                    for k in 1..=n_radii.max(1) {
                        let r = 2.0 * eps * k as f64 / n_radii.max(1) as f64;
                        let y: Vec<f64> = (0..d).map(|i| xt[i] + sign * r * dir[i]).collect();
                        let here = self.spec.eval_all(*t, &y)?;
                        for i in 0..d {
                            for j in 0..d {
                                out.max_a = out.max_a.max((here.a.m[i][j] - frozen.a.m[i][j]).abs());
                            }
                        }
                        let db = (0..d).map(|i| (here.b[i] - frozen.b[i]).powi(2)).sum::<f64>().sqrt();
                        out.max_b = out.max_b.max(db);
                        out.max_c = out.max_c.max((here.c - frozen.c).abs());
                        out.max_f = out.max_f.max((here.f - frozen.f).abs());
                    }
                }
            }
        }
        Ok(out)
    }
}

pub fn freeze(spec: &OperatorSpec, path: &FlowPath) -> Result<FrozenOperator> {
    if path.dim() != spec.dim() {
        return Err(Error::InvalidArgument("path and operator dimensions differ".into()));
    }
    let (lo, hi) = spec.window();
    if path.times.iter().any(|&t| t < lo - 1e-12 || t > hi + 1e-12) {
        return Err(Error::InvalidArgument("path leaves the operator's time window".into()));
    }
    Ok(FrozenOperator { spec: spec.clone(), path: path.clone() })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct U0Value {
    pub value: f64,
    /// Tail cutoff `Δ = ln(F₀/tol)/δ`.
    pub horizon: f64,
}

/// `u₀(t) = −∫ₜ^{t+Δ} f₀(s) exp(−∫ₜˢ c₀) ds`, with `f₀` taken as zero past the
/// end of the time window. Both integrals use midpoint cells of width at most
/// `max_dt`, cut at the coefficient breakpoints.
pub fn particular_u0(frozen: &FrozenOperator, t: f64, tol: f64, report: &HypothesisReport, max_dt: f64) -> Result<U0Value> {
    let delta = report.delta;
    if !(delta > 0.0) {
        return Err(Error::HypothesisViolation(format!("u0 needs c0 ≥ δ > 0, got δ = {delta}")));
    }
    if !(tol > 0.0) {
        return Err(Error::InvalidArgument("tolerance must be positive".into()));
    }
    let horizon = if report.f0 > tol { (report.f0 / tol).ln() / delta } else { 0.0 };
    let end = (t + horizon).min(frozen.spec.window().1);
    if end <= t {
        return Ok(U0Value { value: 0.0, horizon });
    }
    if !frozen.path.covers(t) || !frozen.path.covers(end) {
        return Err(Error::InvalidArgument(format!("flow path does not cover [{t}, {end}]")));
    }
    let mut acc = 0.0;
    let mut c_int = 0.0;
    for (m, w) in midpoint_cells(t, end, frozen.spec.breakpoints(), max_dt) {
        let k = frozen.at(m)?;
        acc += w * k.f * (-(c_int + 0.5 * w * k.c)).exp();
        c_int += w * k.c;
    }
    Ok(U0Value { value: -acc, horizon })
}

/// `∫₀ᵗ` of a time-only field, split at `breakpoints`.
fn integrate_from_zero(g: &dyn Fn(f64) -> f64, t: f64, breakpoints: &[f64]) -> f64 {
    if t == 0.0 {
        return 0.0;
    }
    let rule = Composite::new(8, 8);
    let (a, b, sign) = if t > 0.0 { (0.0, t, 1.0) } else { (t, 0.0, -1.0) };
    let v: std::result::Result<f64, ()> = rule.integrate(a, b, breakpoints, |s| Ok(g(s)));
    sign * v.expect("infallible")
}

/// Result of a translation gauge: `v(t,x) = u(t, x + B(t))` on the nodes whose
/// shifted point lies in the box.
#[derive(Debug, Clone, PartialEq)]
pub struct Translated {
    pub v: SpaceTimeFn,
    /// Per slice, whether the node's shifted point was inside the box.
    pub valid: Vec<Vec<bool>>,
    pub shifts: Vec<Vec<f64>>,
    /// Per slice, whether the shift was a whole number of grid steps.
    pub exact: Vec<bool>,
}

fn shift_slice(u: &GridFn, shift: &[f64]) -> (GridFn, Vec<bool>, bool) {
    let g = u.grid;
    let h = g.h();
    let steps: Vec<f64> = shift.iter().map(|s| s / h).collect();
    let aligned = steps.iter().all(|s| (s - s.round()).abs() <= 1e-9);
    let mut out = GridFn::zeros(g);
    let mut valid = vec![false; g.len()];
    if aligned {
        let off: Vec<i64> = steps.iter().map(|s| s.round() as i64).collect();
        for k in 0..g.len() {
            if let Some(src) = g.offset(k, &off) {
                out.values[k] = u.values[src];
                valid[k] = true;
            }
        }
    } else {
        for k in 0..g.len() {
            let p = g.point(k);
            let y: Vec<f64> = (0..g.d).map(|a| p[a] + shift[a]).collect();
            if let Some(v) = u.interpolate(&y) {
                out.values[k] = v;
                valid[k] = true;
            }
        }
    }
    (out, valid, aligned)
}

/// `v(t,x) = u(t, x + B(t))`, `B(t) = ∫₀ᵗ b₀`. Grid-aligned shifts re-index
/// nodes exactly; others interpolate linearly. Out-of-box nodes hold 0 and are
/// marked invalid. When `u` carries `u_t`, `v_t = (u_t + b₀·Du)(t, x + B(t))`.
pub fn gauge_translate(u: &SpaceTimeFn, b0: &dyn Fn(f64) -> Vec<f64>, breakpoints: &[f64]) -> Translated {
    let d = u.grid.d;
    let mut slices = Vec::new();
    let mut dts = Vec::new();
    let mut valid = Vec::new();
    let mut shifts = Vec::new();
    let mut exact = Vec::new();
    for (k, &t) in u.times.iter().enumerate() {
        let shift: Vec<f64> = (0..d).map(|i| integrate_from_zero(&|s| b0(s)[i], t, breakpoints)).collect();
        let (v, ok, aligned) = shift_slice(&u.slices[k], &shift);
        if let Some(dt) = &u.dt_slices {
            let grad = fd_gradient(&u.slices[k]);
            let drift = b0(t);
            let mut w = dt[k].clone();
            for (i, gi) in grad.iter().enumerate() {
                w = w.zip_map(gi, |a, b| a + drift[i] * b);
            }
            dts.push(shift_slice(&w, &shift).0);
        }
        slices.push(v);
        valid.push(ok);
        shifts.push(shift);
        exact.push(aligned);
    }
    let dt_slices = u.dt_slices.as_ref().map(|_| dts);
    Translated {
        v: SpaceTimeFn { grid: u.grid, times: u.times.clone(), slices, dt_slices },
        valid,
        shifts,
        exact,
    }
}

/// `v = e^{−C(t)} u`, `C(t) = ∫₀ᵗ c₀`; `v_t = e^{−C}(u_t − c₀u)`.
pub fn gauge_exp(u: &SpaceTimeFn, c0: &dyn Fn(f64) -> f64, breakpoints: &[f64]) -> Result<SpaceTimeFn> {
    let mut slices = Vec::new();
    let mut dts = Vec::new();
    for (k, &t) in u.times.iter().enumerate() {
        let c = c0(t);
        if c < 0.0 {
            return Err(Error::InvalidArgument(format!("c0({t}) = {c} is negative")));
        }
        let factor = (-integrate_from_zero(c0, t, breakpoints)).exp();
        slices.push(u.slices[k].scaled(factor));
        if let Some(dt) = &u.dt_slices {
            dts.push(dt[k].zip_map(&u.slices[k], |a, b| factor * (a - c * b)));
        }
    }
    let dt_slices = u.dt_slices.as_ref().map(|_| dts);
    Ok(SpaceTimeFn { grid: u.grid, times: u.times.clone(), slices, dt_slices })
}

/// Quintic smoothstep, `C²` with vanishing first and second derivatives at 0
/// and 1.
fn smoothstep(s: f64) -> f64 {
    let s = s.clamp(0.0, 1.0);
    s * s * s * (10.0 - 15.0 * s + 6.0 * s * s)
}

fn smoothstep_prime(s: f64) -> f64 {
    if !(0.0..=1.0).contains(&s) {
        return 0.0;
    }
    30.0 * s * s * (1.0 - s) * (1.0 - s)
}

/// Radial cutoff: 1 on `|y| ≤ ε`, 0 on `|y| ≥ 2ε`.
pub fn zeta(y: &[f64], eps: f64) -> f64 {
    let r = y.iter().map(|v| v * v).sum::<f64>().sqrt();
    smoothstep((2.0 * eps - r) / eps)
}

pub fn zeta_gradient(y: &[f64], eps: f64) -> Vec<f64> {
    let r = y.iter().map(|v| v * v).sum::<f64>().sqrt();
    if r <= eps || r >= 2.0 * eps {
        return vec![0.0; y.len()];
    }
    let ds = -smoothstep_prime((2.0 * eps - r) / eps) / eps;
    y.iter().map(|v| ds * v / r).collect()
}

/// `η(t,x) = ζ(x − x(t))` at the path's stored times, with
/// `η_t = −b₀(t)·Dζ(x − x(t))`.
pub fn cutoff_eta(path: &FlowPath, eps: f64, grid: &SpaceGrid) -> Result<SpaceTimeFn> {
    if !(eps > 0.0 && eps < 0.5) {
        return Err(Error::InvalidArgument(format!("cutoff radius {eps} not in (0, 1/2)")));
    }
    if 2.0 * eps > grid.radius {
        return Err(Error::InvalidArgument(format!("cutoff support 2ε = {} exceeds the box radius", 2.0 * eps)));
    }
    if path.dim() != grid.d {
        return Err(Error::InvalidArgument("path and grid dimensions differ".into()));
    }
    let d = grid.d;
    let mut times = Vec::new();
    let mut slices = Vec::new();
    let mut dts = Vec::new();
    let order: Vec<usize> = if path.end_time() >= path.t0 {
        (0..path.times.len()).collect()
    } else {
        (0..path.times.len()).rev().collect()
    };
    for k in order {
        let xt = &path.points[k];
        let vel = &path.velocities[k];
        times.push(path.times[k]);
        slices.push(grid.sample(|x| {
            let y: Vec<f64> = (0..d).map(|i| x[i] - xt[i]).collect();
            zeta(&y, eps)
        }));
        dts.push(grid.sample(|x| {
            let y: Vec<f64> = (0..d).map(|i| x[i] - xt[i]).collect();
            -zeta_gradient(&y, eps).iter().zip(vel).map(|(g, v)| g * v).sum::<f64>()
        }));
    }
    SpaceTimeFn::new(times, slices, Some(dts))
}

/// `max |(η(t_{k+1}) − η(t_{k−1}))/(t_{k+1} − t_{k−1}) + b₀(t_k)·Dζ(x − x(t_k))|`
/// over interior path steps and grid nodes.
pub fn transport_residual(path: &FlowPath, eps: f64, grid: &SpaceGrid) -> f64 {
    let d = grid.d;
    let mut worst = 0.0f64;
    for k in 1..path.times.len().saturating_sub(1) {
        let dt = path.times[k + 1] - path.times[k - 1];
        for node in 0..grid.len() {
            let x = grid.point(node);
            let y = |j: usize| -> Vec<f64> { (0..d).map(|i| x[i] - path.points[j][i]).collect() };
            let fd = (zeta(&y(k + 1), eps) - zeta(&y(k - 1), eps)) / dt;
            let adv: f64 = zeta_gradient(&y(k), eps).iter().zip(&path.velocities[k]).map(|(g, v)| g * v).sum();
            worst = worst.max((fd + adv).abs());
        }
    }
    worst
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coeffspec::{check_hypotheses, SampleConfig};
    use crate::expr::{parse_expr, ExprNode};
    use crate::holder::hessian_seminorm;

    fn spec_with_b(d: usize, b: &[&str], window: (f64, f64)) -> OperatorSpec {
        OperatorSpec::constant(d, &vec![1.0; d], &vec![0.0; d], 1.0, 0.0, 0.5, window)
            .unwrap()
            .with_b(b.iter().map(|s| parse_expr(s).unwrap()).collect())
    }

    #[test]
    fn zero_and_constant_drift() {
        let s = spec_with_b(2, &["0", "0"], (0.0, 3.0));
        let p = flow(&s, 0.0, &[0.3, -0.2], 2.0, &FlowOpts::new(0.1)).unwrap();
        assert!(p.points.iter().all(|x| x == &vec![0.3, -0.2]));
        let s = spec_with_b(2, &["1", "0"], (0.0, 3.0));
        let p = flow(&s, 0.0, &[0.3, -0.2], 2.0, &FlowOpts::new(0.1)).unwrap();
        let end = p.points.last().unwrap();
        assert!((end[0] - 2.3).abs() < 1e-14 && (end[1] + 0.2).abs() < 1e-15);
    }

    #[test]
    fn exponential_decay() {
        let s = spec_with_b(1, &["-x1"], (0.0, 2.0));
        let p = flow(&s, 0.0, &[1.5], 2.0, &FlowOpts::new(1e-3)).unwrap();
        for (t, x) in p.times.iter().zip(&p.points) {
            assert!((x[0] - 1.5 * (-t).exp()).abs() < 1e-8);
        }
        let back = flow(&s, 2.0, &[1.5 * (-2f64).exp()], 0.0, &FlowOpts::new(1e-3)).unwrap();
        assert!((back.points.last().unwrap()[0] - 1.5).abs() < 1e-8);
    }

    #[test]
    fn flow_semigroup() {
        let s = spec_with_b(2, &["sin(x2) + step(t - 0.7)", "-0.5*x1"], (0.0, 2.0)).with_breakpoints(vec![0.7]);
        let opts = FlowOpts::new(1e-3);
        let direct = flow(&s, 0.0, &[0.1, 0.4], 1.6, &opts).unwrap();
        let first = flow(&s, 0.0, &[0.1, 0.4], 0.9, &opts).unwrap();
        let second = flow(&s, 0.9, first.points.last().unwrap(), 1.6, &opts).unwrap();
        let (a, b) = (direct.points.last().unwrap(), second.points.last().unwrap());
        assert!((a[0] - b[0]).abs() < 1e-10 && (a[1] - b[1]).abs() < 1e-10);
    }

    #[test]
    fn blow_up_is_reported() {
        let s = spec_with_b(1, &["x1*x1"], (0.0, 2.0));
        let opts = FlowOpts { step: 1e-3, cap: 1e6 };
        assert!(matches!(flow(&s, 0.0, &[1.0], 1.5, &opts), Err(Error::FlowBlowUp { .. })));
        assert!(flow(&s, 0.0, &[1.0], 3.0, &opts).is_err());
    }

    #[test]
    fn frozen_coefficients() {
        let s = spec_with_b(1, &["x1"], (0.0, 1.0));
        let p = flow(&s, 0.0, &[1.0], 1.0, &FlowOpts::new(1e-3)).unwrap();
        let fr = freeze(&s, &p).unwrap();
        for t in [0.0, 0.37, 1.0] {
            assert!((fr.at(t).unwrap().b[0] - t.exp()).abs() < 1e-6);
        }
        let c = OperatorSpec::constant(2, &[2.0, 1.0], &[0.5, -1.0], 3.0, 0.25, 0.5, (0.0, 1.0)).unwrap();
        let p = flow(&c, 0.0, &[0.0, 0.0], 1.0, &FlowOpts::new(0.1)).unwrap();
        let fr = freeze(&c, &p).unwrap();
        let k = fr.at(0.5).unwrap();
        assert_eq!((k.a.m[0][0], k.b[1], k.c, k.f), (2.0, -1.0, 3.0, 0.25));
    }

    #[test]
    fn deviation_is_zero_for_constant_diffusion() {
        let s = spec_with_b(2, &["x1", "sin(x2)"], (0.0, 1.0)).with_c(parse_expr("1 + abs(x1)^0.5").unwrap());
        let report = check_hypotheses(&s, &SampleConfig::new(2.0, 9, 3, 6)).unwrap();
        let p = flow(&s, 0.0, &[0.2, 0.1], 0.5, &FlowOpts::new(0.05)).unwrap();
        let dev = freeze(&s, &p).unwrap().deviation(0.2, &report, 8).unwrap();
        assert_eq!(dev.max_a, 0.0);
        assert!(dev.max_b > 0.0 && dev.within_bounds(), "{dev:?}");
    }

    #[test]
    fn u0_for_unit_data() {
        let s = OperatorSpec::constant(1, &[1.0], &[0.0], 1.0, 1.0, 0.5, (0.0, 60.0)).unwrap();
        let report = check_hypotheses(&s, &SampleConfig::new(1.0, 5, 3, 4)).unwrap();
        let p = flow(&s, 0.0, &[0.0], 60.0, &FlowOpts::new(1.0)).unwrap();
        let fr = freeze(&s, &p).unwrap();
        let tol = 1e-6;
        let u0 = particular_u0(&fr, 0.0, tol, &report, 1e-3).unwrap();
        assert!((u0.value + 1.0).abs() < 2.0 * tol, "{}", u0.value);
        assert!(u0.value.abs() <= report.f0 * (1.0 + 1e-12));
    }

    #[test]
    fn u0_tail_self_check() {
        let s = OperatorSpec::constant(1, &[1.0], &[0.0], 1.0, 0.0, 0.5, (0.0, 80.0))
            .unwrap()
            .with_c(parse_expr("1 + 0.5*sin(t)").unwrap())
            .with_f(parse_expr("cos(3*t)").unwrap());
        let report = check_hypotheses(&s, &SampleConfig::new(1.0, 5, 64, 4)).unwrap();
        let p = flow(&s, 0.0, &[0.0], 80.0, &FlowOpts::new(1.0)).unwrap();
        let fr = freeze(&s, &p).unwrap();
        let tol = 1e-5;
        let a = particular_u0(&fr, 1.0, tol, &report, 1e-3).unwrap();
        let b = particular_u0(&fr, 1.0, tol * tol, &report, 1e-3).unwrap();
        assert!((b.horizon - a.horizon - (1.0 / tol).ln() / report.delta).abs() < 1e-9);
        assert!((a.value - b.value).abs() <= tol, "{} {}", a.value, b.value);
        assert!(a.value.abs() <= report.f0);
        let bad = HypothesisReport { delta: 0.0, ..report };
        assert!(particular_u0(&fr, 1.0, tol, &bad, 1e-3).is_err());
    }

    fn sample_u(grid: SpaceGrid) -> SpaceTimeFn {
        let times: Vec<f64> = (0..=8).map(|k| k as f64 * 0.125).collect();
        SpaceTimeFn::sample(
            grid,
            &times,
            |t, x| (1.0 + t) * (-(x[0] - 0.2).powi(2) * 4.0).exp() * (1.0 + x[1].powi(2)).recip(),
            Some(&|_, x| (-(x[0] - 0.2).powi(2) * 4.0).exp() * (1.0 + x[1].powi(2)).recip()),
        )
    }

    #[test]
    fn translation_gauge() {
        let g = SpaceGrid::new(2, 2.0, 33).unwrap();
        let u = sample_u(g);
        let same = gauge_translate(&u, &|_| vec![0.0, 0.0], &[]);
        assert_eq!(same.v, u);
        // b0 = h per 0.125 time units: shifts of one node per slice.
        let h = g.h();
        let moved = gauge_translate(&u, &|_| vec![h / 0.125, 0.0], &[]);
        for (k, slice) in moved.v.slices.iter().enumerate() {
            assert!(moved.exact[k]);
            for node in 0..g.len() {
                if moved.valid[k][node] {
                    let src = g.offset(node, &[k as i64, 0, 0]).unwrap();
                    assert_eq!(slice.values[node].to_bits(), u.slices[k].values[src].to_bits());
                }
            }
            // Seminorms agree on the common support, excluding nodes whose
            // Hessian stencil reaches an invalid or boundary node.
            let eroded = |valid: &[bool]| -> Vec<bool> {
                (0..g.len())
                    .map(|n| {
                        valid[n] && !g.is_boundary(n) && (0..2).all(|a| {
                            let mut e = [0i64; 3];
                            e[a] = 1;
                            let plus = g.offset(n, &e).is_some_and(|m| valid[m]);
                            e[a] = -1;
                            plus && g.offset(n, &e).is_some_and(|m| valid[m])
                        })
                    })
                    .collect()
            };
            let mask_v = eroded(&moved.valid[k]);
            let mut mask_u = vec![false; g.len()];
            for n in 0..g.len() {
                if mask_v[n] {
                    mask_u[g.offset(n, &[k as i64, 0, 0]).unwrap()] = true;
                }
            }
            let sv = hessian_seminorm(slice, 0.5, 1.0, Some(&mask_v));
            let su = hessian_seminorm(&u.slices[k], 0.5, 1.0, Some(&mask_u));
            assert_eq!(sv, su);
        }
        let off = gauge_translate(&u, &|_| vec![0.3 * h / 0.125, 0.0], &[]);
        assert!(!off.exact[1]);
    }

    #[test]
    fn exponential_gauge() {
        let g = SpaceGrid::new(2, 2.0, 33).unwrap();
        let u = sample_u(g);
        assert_eq!(gauge_exp(&u, &|_| 0.0, &[]).unwrap(), u);
        let v = gauge_exp(&u, &|_| 1.0, &[]).unwrap();
        let k = u.time_index(1.0).unwrap();
        assert!(v.slices[k].dist_sup(&u.slices[k].scaled((-1f64).exp())) < 1e-15);
        let su = hessian_seminorm(&u.slices[k], 0.5, 1.0, None);
        let sv = hessian_seminorm(&v.slices[k], 0.5, 1.0, None);
        assert!((sv - (-1f64).exp() * su).abs() <= 1e-12 * sv);
        assert!(gauge_exp(&u, &|_| -1.0, &[]).is_err());
    }

    #[test]
    fn cutoff_values_and_transport() {
        let s = spec_with_b(2, &["1 + 0.5*sin(3*t)", "-0.5"], (0.0, 1.0));
        let g = SpaceGrid::new(2, 2.0, 41).unwrap();
        let eps = 0.3;
        let p = flow(&s, 0.0, &[-0.5, 0.3], 1.0, &FlowOpts::new(0.01)).unwrap();
        let eta = cutoff_eta(&p, eps, &g).unwrap();
        for (k, slice) in eta.slices.iter().enumerate() {
            let xt = &p.points[k];
            for node in 0..g.len() {
                let x = g.point(node);
                let r = ((x[0] - xt[0]).powi(2) + (x[1] - xt[1]).powi(2)).sqrt();
                if r <= eps {
                    assert_eq!(slice.values[node], 1.0);
                }
                if r >= 2.0 * eps {
                    assert_eq!(slice.values[node], 0.0);
                }
            }
        }
        let r1 = transport_residual(&p, eps, &g);
        let p2 = flow(&s, 0.0, &[-0.5, 0.3], 1.0, &FlowOpts::new(0.005)).unwrap();
        let r2 = transport_residual(&p2, eps, &g);
        let order = (r1 / r2).log2();
        assert!(order > 1.7, "{r1} {r2} {order}");
        assert!(cutoff_eta(&p, 0.6, &g).is_err());
        assert!(cutoff_eta(&p, 0.3, &SpaceGrid::new(2, 0.5, 9).unwrap()).is_err());
    }

    #[test]
    fn smoothstep_is_c2() {
        let h = 1e-4;
        for s in [0.0, 1.0] {
            let d1 = (smoothstep(s + h) - smoothstep(s - h)) / (2.0 * h);
            let d2 = (smoothstep(s + h) - 2.0 * smoothstep(s) + smoothstep(s - h)) / (h * h);
            assert!(d1.abs() < 1e-6 && d2.abs() < 1e-2);
        }
        let _ = ExprNode::num(0.0);
    }
}
