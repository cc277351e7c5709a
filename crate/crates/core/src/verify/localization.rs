//! Executable check of the localization identity along a characteristic.

use rayon::prelude::*;

use super::estimates::schauder_sample;
use super::report::{log_log_slope, AuditReport, Check, Measurement};
use crate::characteristics::{flow, freeze, particular_u0, zeta, FlowOpts};
use crate::coeffspec::{check_hypotheses, HypothesisReport, OperatorSpec};
use crate::error::{Error, Result};
use crate::holder::{fd_gradient, fd_hessian, pointwise_norm, GridFn, SpaceTimeFn};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LocalizationRow {
    pub eps: f64,
    /// `max |(v_t + L₀v) − RHS|` over interior nodes and stored slices.
    pub residual: f64,
    /// Largest single term of the identity, for scale.
    pub scale: f64,
    /// `max |η(f − f₀) + η(L₀ − L)u|`.
    pub deviation: f64,
    /// `2^α ε^α (F_α + K(d·|D²u| + d·|Du| + |u|))`.
    pub deviation_bound: f64,
}

/// Node of the first slice where the Hessian (Frobenius) is largest, among
/// nodes at least `margin` inside the box.
pub fn worst_hessian_point(u: &GridFn, margin: f64) -> Option<Vec<f64>> {
    let g = u.grid;
    let hess = fd_hessian(u);
    let parts: Vec<&GridFn> = hess.iter().flatten().collect();
    let norm = pointwise_norm(&parts);
    let mut best: Option<(f64, usize)> = None;
    for k in 0..g.len() {
        let p = g.point(k);
        if p[..g.d].iter().any(|v| v.abs() > g.radius - margin) {
            continue;
        }
        if best.map_or(true, |b| norm.values[k] > b.0) {
            best = Some((norm.values[k], k));
        }
    }
    best.map(|(_, k)| g.point(k)[..g.d].to_vec())
}

/// Evaluates the identity
/// `v_t + L₀v = η(f−f₀) + η(L₀−L)u + (u−u₀)a₀^{ij}η_{ij} + 2a₀^{ij}η_i u_j`,
/// `v = (u − u₀)η`, at every stored slice, with the coefficients frozen along
/// the characteristic from `(T, x0)`, `u_t` the stored derivative and all
/// spatial derivatives by centred differences.
pub fn localization_row(spec: &OperatorSpec, u: &SpaceTimeFn, report: &HypothesisReport, x0: &[f64], eps: f64, u0_tol: f64) -> Result<LocalizationRow> {
    if !(eps > 0.0 && eps < 0.5) {
        return Err(Error::InvalidArgument(format!("cutoff radius {eps} not in (0, 1/2)")));
    }
    let ut = u.dt_slices.as_ref().ok_or_else(|| Error::InvalidArgument("solution needs stored time derivatives".into()))?;
    let g = u.grid;
    let d = g.d;
    let (t0, s) = (u.times[0], *u.times.last().expect("slices"));
    let step = u.times.windows(2).map(|w| w[1] - w[0]).fold(f64::INFINITY, f64::min);
    let path = flow(spec, t0, x0, s, &FlowOpts::new(step))?;
    let margin = 2.0 * eps + 2.0 * g.h();
    for &t in &u.times {
        let x = path.at(t);
        if x.iter().any(|v| v.abs() > g.radius - margin) {
            return Err(Error::InvalidArgument(format!("characteristic exits the box at t = {t}, x = {x:?}")));
        }
    }
    let frozen = freeze(spec, &path)?;
    let rows: Result<Vec<[f64; 3]>> = (0..u.times.len())
        .into_par_iter()
        .map(|k| {
            let t = u.times[k];
            let xt = path.at(t);
            let k0 = frozen.at(t)?;
            let u0 = particular_u0(&frozen, t, u0_tol, report, step / 4.0)?.value;
            let du0 = k0.f + k0.c * u0;
            let eta = g.sample(|x| zeta(&x.iter().zip(&xt).map(|(a, b)| a - b).collect::<Vec<_>>(), eps));
            let slice = &u.slices[k];
            let w = slice.map(|v| v - u0);
            let v = w.zip_map(&eta, |a, b| a * b);
            let (dv, hv) = (fd_gradient(&v), fd_hessian(&v));
            let (du, hu) = (fd_gradient(slice), fd_hessian(slice));
            let (de, he) = (fd_gradient(&eta), fd_hessian(&eta));
            let mut out = [0.0f64; 3];
            for node in 0..g.len() {
                if g.is_boundary(node) {
                    continue;
                }
                let p = g.point(node);
                let kx = spec.eval_all(t, &p[..d])?;
                let e = eta.values[node];
                let eta_t = -(0..d).map(|i| k0.b[i] * de[i].values[node]).sum::<f64>();
                let mut l0v = -k0.c * v.values[node];
                let mut diff_lu = -(k0.c - kx.c) * slice.values[node];
                let mut cut_second = 0.0;
                let mut cross = 0.0;
                for i in 0..d {
                    l0v += k0.b[i] * dv[i].values[node];
                    diff_lu += (k0.b[i] - kx.b[i]) * du[i].values[node];
                    for j in 0..d {
                        l0v += k0.a.m[i][j] * hv[i][j].values[node];
                        diff_lu += (k0.a.m[i][j] - kx.a.m[i][j]) * hu[i][j].values[node];
                        cut_second += k0.a.m[i][j] * he[i][j].values[node];
                        cross += k0.a.m[i][j] * de[i].values[node] * du[j].values[node];
                    }
                }
                let vt = (ut[k].values[node] - du0) * e + w.values[node] * eta_t;
                let lhs = vt + l0v;
                let deviation = e * (kx.f - k0.f) + e * diff_lu;
                let terms = [deviation, w.values[node] * cut_second, 2.0 * cross];
                let rhs: f64 = terms.iter().sum();
                out[0] = out[0].max((lhs - rhs).abs());
                out[1] = out[1].max(terms.iter().fold(lhs.abs(), |m, v| m.max(v.abs())));
                out[2] = out[2].max(deviation.abs());
            }
            Ok(out)
        })
        .collect();
    let rows = rows?;
    let fold = |i: usize| rows.iter().fold(0.0f64, |m, r| m.max(r[i]));
    let (mut hs, mut gs, mut us) = (0.0f64, 0.0f64, 0.0f64);
    for sl in &u.slices {
        let hess = fd_hessian(sl);
        let grad = fd_gradient(sl);
        hs = hs.max(pointwise_norm(&hess.iter().flatten().collect::<Vec<_>>()).sup());
        gs = gs.max(pointwise_norm(&grad.iter().collect::<Vec<_>>()).sup());
        us = us.max(sl.sup());
    }
    let alpha = spec.alpha();
    let df = d as f64;
    let deviation_bound = (2.0 * eps).powf(alpha) * (report.f_alpha + report.big_k * (df * hs + df * gs + us));
    Ok(LocalizationRow { eps, residual: fold(0), scale: fold(1), deviation: fold(2), deviation_bound })
}

/// Localization audit over the cutoff radii `eps_list` through `x0` (default:
/// the worst Hessian node of the first slice). Passes when the identity
/// residual is at most `residual_tol` relative to the largest term and the
/// frozen deviation stays under its `ε^α` bound; the fitted log-log slope of
/// the deviation against `ε` is reported.
pub fn audit_localization(spec: &OperatorSpec, u: &SpaceTimeFn, eps_list: &[f64], x0: Option<&[f64]>, residual_tol: f64) -> Result<AuditReport> {
    if eps_list.is_empty() {
        return Err(Error::InvalidArgument("no cutoff radius given".into()));
    }
    let report = check_hypotheses(spec, &schauder_sample(u.grid.radius))?;
    let eps_max = eps_list.iter().cloned().fold(0.0, f64::max);
    let x0 = match x0 {
        Some(x) => x.to_vec(),
        None => worst_hessian_point(&u.slices[0], 2.0 * eps_max + 2.0 * u.grid.h())
            .ok_or_else(|| Error::InvalidArgument("box too small for the cutoff".into()))?,
    };
    let u0_tol = 1e-10;
    let mut measured = Vec::new();
    let mut checks = Vec::new();
    let mut devs = Vec::new();
    for &eps in eps_list {
        let row = localization_row(spec, u, &report, &x0, eps, u0_tol)?;
        let rel = row.residual / row.scale.max(f64::MIN_POSITIVE);
        measured.push(Measurement { config: format!("eps={eps} residual"), value: rel });
        measured.push(Measurement { config: format!("eps={eps} deviation"), value: row.deviation });
        checks.push(Check::at_most(&format!("eps={eps} identity residual (relative)"), rel, residual_tol));
        checks.push(Check::at_most(&format!("eps={eps} frozen deviation"), row.deviation, row.deviation_bound));
        devs.push(row.deviation);
    }
    let mut details = vec![format!("anchor x0 = {x0:?}")];
    if let Some(slope) = log_log_slope(eps_list, &devs) {
        measured.push(Measurement { config: "deviation slope".into(), value: slope });
        details.push(format!("deviation ~ eps^{slope:.3}, alpha = {}", spec.alpha()));
    }
    Ok(AuditReport::new("localization", measured, checks, details))
}
