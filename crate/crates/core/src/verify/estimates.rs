//! Maximum principle, Schauder ratio, time regularity and integral-form
//! residual audits.

use rayon::prelude::*;

use super::report::{log_log_slope, spread, AuditReport, Check, Measurement};
use crate::coeffspec::{check_hypotheses, OperatorSpec, SampleConfig};
use crate::error::{Error, Result};
use crate::holder::{fd_gradient, fd_hessian, holder_seminorm_vec, norm_2alpha, pointwise_norm, GridFn, SpaceGrid, SpaceTimeFn};
use crate::solver::{solve_cauchy, CauchyProblem, SolveResult};

/// `max |f|/c` over grid nodes at the stored times and the cell midpoints.
pub fn grid_f0(spec: &OperatorSpec, u: &SpaceTimeFn) -> Result<f64> {
    let mut ts = u.times.clone();
    ts.extend(u.times.windows(2).map(|w| 0.5 * (w[0] + w[1])));
    let (lo, hi) = spec.window();
    let mut f0 = 0.0f64;
    for t in ts.into_iter().filter(|t| *t >= lo && *t <= hi) {
        for node in 0..u.grid.len() {
            let p = u.grid.point(node);
            let x = &p[..u.grid.d];
            let (f, c) = (spec.eval_f(t, x)?, spec.eval_c(t, x)?);
            if f != 0.0 {
                f0 = f0.max(if c > 0.0 { f.abs() / c } else { f64::INFINITY });
            }
        }
    }
    Ok(f0)
}

/// `sup|u| / max(F₀, ‖g‖₀)` with `F₀ = max|f|/c` on the grid (comparison with
/// the constant `max(F₀, ‖g‖₀)`); `sup|u|` itself when both vanish.
pub fn audit_max_principle(result: &SolveResult, spec: &OperatorSpec, threshold: f64) -> Result<AuditReport> {
    let u = &result.u;
    let f0 = grid_f0(spec, u)?;
    let g = u.slices.last().expect("final slice").sup();
    let bound = f0.max(g);
    let mut worst = (0.0f64, u.times[0]);
    for (t, s) in u.times.iter().zip(&u.slices) {
        if s.sup() > worst.0 {
            worst = (s.sup(), *t);
        }
    }
    let value = if bound > 0.0 { worst.0 / bound } else { worst.0 };
    let label = if bound > 0.0 { "sup|u|/max(F0,|g|)" } else { "sup|u| (zero data)" };
    let threshold = if bound > 0.0 { threshold } else { 0.0 };
    Ok(AuditReport::new(
        "max_principle",
        vec![Measurement { config: label.into(), value }],
        vec![Check::at_most(label, value, threshold)],
        vec![format!("F0 = {f0}, |g| = {g}, worst slice t = {}", worst.1)],
    ))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SchauderRatio {
    /// `max_t ‖u(t,·)‖_{2+α}`.
    pub numerator: f64,
    pub f0: f64,
    pub f_alpha: f64,
    pub g_norm: f64,
    /// `numerator / (F₀ + F_α + ‖g‖_{2+α})`.
    pub n_emp: f64,
}

/// The sample used for `F₀, F_α` in the Schauder audit.
pub fn schauder_sample(radius: f64) -> SampleConfig {
    SampleConfig::new(radius, 33, 9, 6)
}

/// Nodes at least `margin` inside the box in every coordinate.
pub fn interior_mask(grid: &SpaceGrid, margin: f64) -> Vec<bool> {
    (0..grid.len()).map(|k| grid.point(k)[..grid.d].iter().all(|v| v.abs() <= grid.radius - margin + 1e-12)).collect()
}

/// `‖u‖_{2+α}` restricted to the nodes in `mask` (pairs with both ends in it).
pub fn masked_norm_2alpha(u: &GridFn, alpha: f64, mask: &[bool]) -> f64 {
    let grad = fd_gradient(u);
    let hess = fd_hessian(u);
    let grad_refs: Vec<&GridFn> = grad.iter().collect();
    let hess_refs: Vec<&GridFn> = hess.iter().flatten().collect();
    let (gn, hn) = (pointwise_norm(&grad_refs), pointwise_norm(&hess_refs));
    let sup_on = |f: &GridFn| f.values.iter().zip(mask).filter(|(_, m)| **m).fold(0.0f64, |a, (v, _)| a.max(v.abs()));
    sup_on(u) + sup_on(&gn) + sup_on(&hn) + holder_seminorm_vec(&hess_refs, alpha, 1.0, Some(mask))
}

/// `N_emp` with the norms of `u` taken at least `margin` inside the box, away
/// from the layer the artificial boundary condition leaves behind.
pub fn schauder_ratio(u: &SpaceTimeFn, spec: &OperatorSpec, g: &GridFn, margin: f64) -> Result<SchauderRatio> {
    let alpha = spec.alpha();
    let report = check_hypotheses(spec, &schauder_sample(u.grid.radius))?;
    let mask = interior_mask(&u.grid, margin);
    if !mask.iter().any(|m| *m) {
        return Err(Error::InvalidArgument(format!("margin {margin} leaves no interior node")));
    }
    let numerator = u.slices.par_iter().map(|s| masked_norm_2alpha(s, alpha, &mask)).reduce(|| 0.0, f64::max);
    let g_norm = if g.sup() == 0.0 { 0.0 } else { norm_2alpha(g, alpha).norm_2alpha };
    let denom = report.f0 + report.f_alpha + g_norm;
    let n_emp = if denom > 0.0 {
        numerator / denom
    } else if numerator == 0.0 {
        0.0
    } else {
        f64::INFINITY
    };
    Ok(SchauderRatio { numerator, f0: report.f0, f_alpha: report.f_alpha, g_norm, n_emp })
}

/// Solves each problem and reports `N_emp` per configuration (norms taken
/// `margin` inside the box) with the check `max/min ≤ threshold`.
pub fn audit_schauder(problems: &[(String, CauchyProblem)], margin: f64, threshold: f64) -> Result<AuditReport> {
    let ratios: Result<Vec<SchauderRatio>> = problems
        .par_iter()
        .map(|(_, p)| {
            let r = solve_cauchy(p)?;
            schauder_ratio(&r.u, &p.effective_spec(), &p.g, margin)
        })
        .collect();
    let ratios = ratios?;
    let mut details = Vec::new();
    let mut measured = Vec::new();
    for ((label, _), r) in problems.iter().zip(&ratios) {
        if r.n_emp.is_infinite() {
            details.push(format!("{label}: nonzero solution with vanishing data norms"));
        }
        details.push(format!(
            "{label}: sup‖u‖ = {:.6e}, F0 = {:.6e}, Fα = {:.6e}, ‖g‖ = {:.6e}",
            r.numerator, r.f0, r.f_alpha, r.g_norm
        ));
        measured.push(Measurement { config: label.clone(), value: r.n_emp });
    }
    let values: Vec<f64> = ratios.iter().map(|r| r.n_emp).collect();
    let s = spread(&values);
    let mut report = AuditReport::new("schauder", measured, vec![Check::at_most("spread max/min N_emp", s, threshold)], details);
    report.spread = Some(s);
    Ok(report)
}

fn hessian_parts(u: &GridFn) -> Vec<GridFn> {
    fd_hessian(u).into_iter().flatten().collect()
}

/// Sups of `|Δu|/τ`, `|ΔDu|/τ^{(1+α)/2}` and `|ΔD²u|/τ^{α/2}` over stored
/// slice pairs `τ` apart inside `window` and nodes with `|x| ≤ ball_radius`,
/// for each requested gap `τ`. Passes when none of the three grows as `τ`
/// shrinks by more than a log-log slope of `threshold`.
pub fn audit_time_holder(u: &SpaceTimeFn, alpha: f64, window: (f64, f64), ball_radius: f64, gaps: &[f64], threshold: f64) -> Result<AuditReport> {
    let g = u.grid;
    let nodes: Vec<usize> = (0..g.len())
        .filter(|&k| {
            let p = g.point(k);
            !g.is_boundary(k) && p[..g.d].iter().map(|v| v * v).sum::<f64>().sqrt() <= ball_radius
        })
        .collect();
    if nodes.is_empty() {
        return Err(Error::InvalidArgument("no interior node within the ball".into()));
    }
    let idx: Vec<usize> = (0..u.times.len()).filter(|&k| u.times[k] >= window.0 - 1e-12 && u.times[k] <= window.1 + 1e-12).collect();
    let derived: Vec<(Vec<GridFn>, Vec<GridFn>)> = idx.iter().map(|&k| (fd_gradient(&u.slices[k]), hessian_parts(&u.slices[k]))).collect();
    let mut rows: Vec<(f64, [f64; 3])> = Vec::new();
    let mut details = Vec::new();
    for &gap in gaps {
        let mut sup = [0.0f64; 3];
        let mut found = false;
        for (a, &ka) in idx.iter().enumerate() {
            for (b, &kb) in idx.iter().enumerate().skip(a + 1) {
                let dt = u.times[kb] - u.times[ka];
                if (dt - gap).abs() > 1e-9 * gap.max(1e-300) {
                    continue;
                }
                found = true;
                let (ga, ha) = &derived[a];
                let (gb, hb) = &derived[b];
                for &n in &nodes {
                    let du = (u.slices[kb].values[n] - u.slices[ka].values[n]).abs();
                    let dg = ga.iter().zip(gb).map(|(p, q)| (q.values[n] - p.values[n]).powi(2)).sum::<f64>().sqrt();
                    let dh = ha.iter().zip(hb).map(|(p, q)| (q.values[n] - p.values[n]).powi(2)).sum::<f64>().sqrt();
                    sup[0] = sup[0].max(du / gap);
                    sup[1] = sup[1].max(dg / gap.powf(0.5 * (1.0 + alpha)));
                    sup[2] = sup[2].max(dh / gap.powf(0.5 * alpha));
                }
            }
        }
        if found {
            rows.push((gap, sup));
        } else {
            details.push(format!("no stored slice pair {gap} apart"));
        }
    }
    if rows.is_empty() {
        return Err(Error::InvalidArgument("no requested time gap matches stored slices".into()));
    }
    let mut measured = Vec::new();
    for (gap, sup) in &rows {
        for (name, v) in ["r_u", "r_Du", "r_D2u"].iter().zip(sup) {
            measured.push(Measurement { config: format!("{name} gap={gap}"), value: *v });
        }
    }
    let xs: Vec<f64> = rows.iter().map(|r| r.0).collect();
    let mut growth = 0.0f64;
    for i in 0..3 {
        let ys: Vec<f64> = rows.iter().map(|r| r.1[i]).collect();
        if ys.iter().any(|v| !v.is_finite()) {
            growth = f64::INFINITY;
        } else if let Some(s) = log_log_slope(&xs, &ys) {
            growth = growth.max(-s);
        }
    }
    Ok(AuditReport::new("time_holder", measured, vec![Check::at_most("growth as gap shrinks (−slope)", growth, threshold)], details))
}

/// `f − Lu` at time `t` with centred finite differences; zero on boundary nodes.
pub fn pde_defect(spec: &OperatorSpec, u: &GridFn, t: f64) -> Result<GridFn> {
    let g = u.grid;
    let d = g.d;
    let grad = fd_gradient(u);
    let hess = fd_hessian(u);
    let mut out = GridFn::zeros(g);
    for node in 0..g.len() {
        if g.is_boundary(node) {
            continue;
        }
        let p = g.point(node);
        let k = spec.eval_all(t, &p[..d])?;
        let mut lu = -k.c * u.values[node];
        for i in 0..d {
            lu += k.b[i] * grad[i].values[node];
            for j in 0..d {
                lu += k.a.m[i][j] * hess[i][j].values[node];
            }
        }
        out.values[node] = k.f - lu;
    }
    Ok(out)
}

/// `r = |u(t) − u(s) − ∫ₛᵗ (f − Lu)|` at interior nodes, with the trapezoid
/// rule over stored slices and `Lu` by centred differences, over spans of
/// `1, 2, 4, …` steps. Reports `sup r / sup|u|`.
pub fn audit_integral_residual(u: &SpaceTimeFn, spec: &OperatorSpec, threshold: f64) -> Result<AuditReport> {
    let defects: Result<Vec<GridFn>> = u.times.par_iter().zip(&u.slices).map(|(t, s)| pde_defect(spec, s, *t)).collect();
    let defects = defects?;
    let g = u.grid;
    let n = u.times.len();
    let mut measured = Vec::new();
    let mut worst = 0.0f64;
    let mut span = 1;
    while span < n {
        let mut r = 0.0f64;
        for k in 0..n - span {
            let j = k + span;
            for node in 0..g.len() {
                if g.is_boundary(node) {
                    continue;
                }
                let mut integral = 0.0;
                for i in k..j {
                    integral += 0.5 * (u.times[i + 1] - u.times[i]) * (defects[i].values[node] + defects[i + 1].values[node]);
                }
                r = r.max((u.slices[j].values[node] - u.slices[k].values[node] - integral).abs());
            }
        }
        measured.push(Measurement { config: format!("span={span}"), value: r });
        worst = worst.max(r);
        span *= 2;
    }
    let scale = u.sup();
    let value = if scale > 0.0 { worst / scale } else { worst };
    Ok(AuditReport::new(
        "integral_residual",
        measured,
        vec![Check::at_most("sup r / sup|u|", value, threshold)],
        vec![format!("sup r = {worst}, sup|u| = {scale}")],
    ))
}

/// `max_x |Du|` and trace of `D²u` for CSV output and diagnostics.
pub fn gradient_and_laplacian(u: &GridFn) -> (GridFn, GridFn) {
    let grad = fd_gradient(u);
    let refs: Vec<&GridFn> = grad.iter().collect();
    (pointwise_norm(&refs), crate::holder::trace(&fd_hessian(u)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::parse_expr;
    use crate::holder::SpaceGrid;
    use crate::kernel::{heat_solve, HeatSolveOpts, Source};
    use crate::solver::BoundaryMode;

    fn constant_spec(c: f64, f: f64) -> OperatorSpec {
        OperatorSpec::constant(1, &[1.0], &[0.0], c, f, 0.5, (0.0, 1.0)).unwrap()
    }

    #[test]
    fn sharpness_witness_and_zero_data() {
        let g = SpaceGrid::new(1, 2.0, 41).unwrap();
        let spec = constant_spec(1.0, -1.0);
        let r = solve_cauchy(&CauchyProblem::new(spec.clone(), GridFn::constant(g, 1.0), 32)).unwrap();
        let a = audit_max_principle(&r, &spec, 1.01).unwrap();
        assert!((a.measured[0].value - 1.0).abs() < 1e-9 && a.pass);
        let spec = constant_spec(1.0, 0.0);
        let r = solve_cauchy(&CauchyProblem::new(spec.clone(), GridFn::zeros(g), 8)).unwrap();
        assert!(audit_max_principle(&r, &spec, 1.01).unwrap().pass);
    }

    #[test]
    fn max_principle_negative_control() {
        let g = SpaceGrid::new(1, 3.0, 61).unwrap();
        let spec = constant_spec(1.0, 0.0).with_f(parse_expr("exp(-x1^2)").unwrap());
        let mut r = solve_cauchy(&CauchyProblem::new(spec.clone(), GridFn::zeros(g), 32)).unwrap();
        assert!(audit_max_principle(&r, &spec, 1.01).unwrap().pass);
        // Corruption: inflate the solution beyond the bound.
        let f0 = grid_f0(&spec, &r.u).unwrap();
        r.u.slices[3] = GridFn::constant(g, 1.5 * f0);
        assert!(!audit_max_principle(&r, &spec, 1.01).unwrap().pass);
    }

    #[test]
    fn schauder_zero_data_and_sweep_plumbing() {
        let g = SpaceGrid::new(1, 2.0, 41).unwrap();
        let spec = constant_spec(1.0, 0.0);
        let p = CauchyProblem::new(spec, GridFn::zeros(g), 8);
        let a = audit_schauder(&[("zero".into(), p.clone()), ("zero2".into(), p)], 0.5, 2.0).unwrap();
        assert_eq!(a.measured[0].value, 0.0);
        assert_eq!(a.spread, Some(1.0));
        assert!(a.pass);
    }

    #[test]
    fn time_holder_trivial_cases() {
        let g = SpaceGrid::new(1, 2.0, 41).unwrap();
        let times: Vec<f64> = (0..=16).map(|k| k as f64 / 16.0).collect();
        let still = SpaceTimeFn::sample(g, &times, |_, x| x[0].sin(), None);
        let a = audit_time_holder(&still, 0.5, (0.0, 1.0), 1.0, &[0.25, 0.0625], 0.15).unwrap();
        assert!(a.measured.iter().all(|m| m.value == 0.0) && a.pass);
        let linear = SpaceTimeFn::sample(g, &times, |t, x| t * (1.0 + x[0] * x[0]).recip(), None);
        let a = audit_time_holder(&linear, 0.5, (0.0, 1.0), 1.0, &[0.25, 0.0625], 0.15).unwrap();
        let sup_phi = 1.0;
        assert!((a.measured[0].value - sup_phi).abs() < 1e-12);
        // Corruption: a jump between two slices makes the ratios blow up as the gap shrinks.
        let mut bad = linear.clone();
        for k in 9..=16 {
            bad.slices[k] = bad.slices[k].map(|v| v + 0.05);
        }
        let a = audit_time_holder(&bad, 0.5, (0.0, 1.0), 1.0, &[0.25, 0.125, 0.0625], 0.15).unwrap();
        assert!(!a.pass);
    }

    #[test]
    fn time_holder_of_heat_solution() {
        let g = SpaceGrid::new(1, 6.0, 121).unwrap();
        let f = |t: f64, x: &[f64]| if t < 1.0 { (-x[0] * x[0]).exp() * (1.0 + t) } else { 0.0 };
        let u = heat_solve(Source::func(&f), 1.0, (0.0, 1.0), &g, &HeatSolveOpts { n_time: 256, plateau: 0, final_data: None }).unwrap();
        let gaps: Vec<f64> = (1..=4).map(|k| 4f64.powi(-k)).collect();
        let a = audit_time_holder(&u, 0.5, (0.0, 1.0), 2.0, &gaps, 0.15).unwrap();
        assert!(a.pass, "{:?}", a.checks);
    }

    #[test]
    fn integral_residual_controls() {
        let g = SpaceGrid::new(1, 2.0, 41).unwrap();
        // u ≡ κ solves u_t + Lu = −cκ for any drift.
        let kappa = 2.0;
        let spec = constant_spec(1.5, -1.5 * kappa).with_b(vec![parse_expr("3*x1 + sin(x1)").unwrap()]);
        let r = solve_cauchy(&CauchyProblem::new(spec.clone(), GridFn::constant(g, kappa), 16)).unwrap();
        let a = audit_integral_residual(&r.u, &spec, 1e-10).unwrap();
        assert!(a.pass, "{:?}", a.checks);

        let g = SpaceGrid::new(1, 4.0, 81).unwrap();
        let spec = constant_spec(1.0, 0.0)
            .with_b(vec![parse_expr("-x1").unwrap()])
            .with_f(parse_expr("exp(t - 1)*exp(-x1^2)*(4*x1^2 - 2 + 2*x1^2)").unwrap());
        let fin = g.sample(|x| (-x[0] * x[0]).exp());
        let r = solve_cauchy(&CauchyProblem::new(spec.clone(), fin, 64).with_boundary(BoundaryMode::DirichletFinal)).unwrap();
        let clean = audit_integral_residual(&r.u, &spec, 1e-2).unwrap();
        assert!(clean.pass, "{:?}", clean.checks);
        let mut noisy = r.u.clone();
        for (k, s) in noisy.slices.iter_mut().enumerate() {
            for (i, v) in s.values.iter_mut().enumerate() {
                *v += 1e-2 * (((i * 7 + k * 13) % 11) as f64 / 5.0 - 1.0);
            }
        }
        let dirty = audit_integral_residual(&noisy, &spec, 1e-2).unwrap();
        assert!(!dirty.pass && dirty.checks[0].value > 10.0 * clean.checks[0].value);
    }
}
