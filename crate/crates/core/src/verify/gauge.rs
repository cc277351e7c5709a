//! Model-operator Schauder ratio and its invariance under the translation and
//! exponential gauges.

use rayon::prelude::*;

use super::report::{AuditReport, Check, Measurement};
use crate::characteristics::{gauge_exp, gauge_translate};
use crate::error::{Error, Result};
use crate::holder::{fd_gradient, fd_hessian, hessian_seminorm, holder_seminorm, GridFn, SpaceGrid, SpaceTimeFn};
use crate::kernel::TimeMatrixPath;

/// Time derivative from the slices alone: central differences inside,
/// one-sided at the ends.
pub fn differenced_dt(u: &SpaceTimeFn) -> Vec<GridFn> {
    let n = u.times.len();
    (0..n)
        .map(|k| {
            if n < 2 {
                return GridFn::zeros(u.grid);
            }
            let (lo, hi) = (k.saturating_sub(1), (k + 1).min(n - 1));
            let tau = u.times[hi] - u.times[lo];
            u.slices[hi].zip_map(&u.slices[lo], |a, b| (a - b) / tau)
        })
        .collect()
}

/// Per-slice pieces of the model ratio.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelRatio {
    pub ratio: f64,
    /// `[D²u(t_k)]_α`.
    pub numerators: Vec<f64>,
    /// `[(u_t + a(t)^{ij}D_{ij}u + b₀·Du − c₀u)(t_k)]_α`.
    pub data: Vec<f64>,
}

/// `max_k [D²u(t_k)]_α / max_{j ≥ k} [(u_t + L₀u + b₀·Du − c₀u)(t_j)]_α` with
/// `L₀ = a^{ij}(t)D_{ij}`. `u_t` is the stored derivative when `stored_dt`
/// holds and present, otherwise differenced from the slices.
pub fn model_ratio(u: &SpaceTimeFn, model: &TimeMatrixPath, alpha: f64, b0: &[f64], c0: f64, stored_dt: bool) -> Result<ModelRatio> {
    let d = u.grid.d;
    if model.dim() != d || b0.len() != d {
        return Err(Error::InvalidArgument("model, drift and grid dimensions differ".into()));
    }
    let dt = match (&u.dt_slices, stored_dt) {
        (Some(dt), true) => dt.clone(),
        _ => differenced_dt(u),
    };
    let rows: Result<Vec<(f64, f64)>> = (0..u.times.len())
        .into_par_iter()
        .map(|k| {
            let s = &u.slices[k];
            let a = model.eval(u.times[k])?;
            let hess = fd_hessian(s);
            let grad = fd_gradient(s);
            let mut data = dt[k].zip_map(s, |ut, v| ut - c0 * v);
            for i in 0..d {
                data = data.zip_map(&grad[i], |acc, g| acc + b0[i] * g);
                for j in 0..d {
                    data = data.zip_map(&hess[i][j], |acc, h| acc + a.m[i][j] * h);
                }
            }
            Ok((hessian_seminorm(s, alpha, 1.0, None), holder_seminorm(&data, alpha, 1.0)))
        })
        .collect();
    let (numerators, data): (Vec<f64>, Vec<f64>) = rows?.into_iter().unzip();
    let mut ratio = 0.0f64;
    let mut tail = 0.0f64;
    for k in (0..numerators.len()).rev() {
        tail = tail.max(data[k]);
        let r = if tail > 0.0 {
            numerators[k] / tail
        } else if numerators[k] > 0.0 {
            f64::INFINITY
        } else {
            0.0
        };
        ratio = ratio.max(r);
    }
    Ok(ModelRatio { ratio, numerators, data })
}

/// `w_m(t,x) = φ_m(t) ψ_m(x)` with `ψ_m = (1 − |x − x_m|²/r²)³₊`,
/// `r = R/4`, centres on a small circle around the origin and
/// `φ_m(t) = 2 + cos((m+1)t)`; the stored `u_t` is exact.
pub fn compact_family(grid: SpaceGrid, times: &[f64], count: usize) -> Vec<SpaceTimeFn> {
    let r = grid.radius / 4.0;
    (0..count)
        .map(|m| {
            let angle = m as f64 * 2.0 * std::f64::consts::PI / count.max(1) as f64;
            let mut centre = vec![0.0; grid.d];
            centre[0] = 0.1 * r * angle.cos();
            if grid.d > 1 {
                centre[1] = 0.1 * r * angle.sin();
            }
            let freq = (m + 1) as f64;
            let psi = move |x: &[f64]| {
                let q: f64 = x.iter().zip(&centre).map(|(a, b)| (a - b) * (a - b)).sum::<f64>() / (r * r);
                if q >= 1.0 {
                    0.0
                } else {
                    (1.0 - q).powi(3)
                }
            };
            let psi2 = psi.clone();
            let dt = move |t: f64, x: &[f64]| -freq * (freq * t).sin() * psi2(x);
            SpaceTimeFn::sample(grid, times, |t, x| (2.0 + (freq * t).cos()) * psi(x), Some(&dt))
        })
        .collect()
}

/// Gauge-invariance audit over a family of compactly supported test
/// functions `w`.
///
/// Drift levels: `u = w(t, x − b₀t)` solves the problem with drift `b₀` and
/// the same data translated; its ratio is measured after translating back
/// (slice differences for `u_t`). Grid-aligned levels must reproduce the
/// `b₀ = 0` ratio bit for bit, the others within `interp_tol` relative.
///
/// Potential levels: `u = e^{c₀t}w` with exact `u_t`; the ratio with
/// potential `c₀` must not exceed the `c₀ = 0` ratio by more than `1e−6`
/// relative, and `gauge_exp` must scale `[D²u]_α` by `e^{−c₀t}` within
/// `1e−12` relative.
pub fn audit_gauge_independence(
    model: &TimeMatrixPath,
    family: &[SpaceTimeFn],
    alpha: f64,
    b0_levels: &[Vec<f64>],
    c0_levels: &[f64],
    interp_tol: f64,
) -> Result<AuditReport> {
    if family.is_empty() {
        return Err(Error::InvalidArgument("empty test family".into()));
    }
    let mut measured = Vec::new();
    let mut checks = Vec::new();
    let mut details = Vec::new();
    for (m, w) in family.iter().enumerate() {
        let d = w.grid.d;
        let zero = vec![0.0; d];
        let base = model_ratio(w, model, alpha, &zero, 0.0, false)?.ratio;
        let base_exact = model_ratio(w, model, alpha, &zero, 0.0, true)?.ratio;
        measured.push(Measurement { config: format!("w{m} b0=0 c0=0"), value: base });
        for b0 in b0_levels {
            let (fwd, back) = (b0.clone(), b0.iter().map(|v| -v).collect::<Vec<f64>>());
            let moved = gauge_translate(w, &move |_| back.clone(), &[]);
            let returned = gauge_translate(&moved.v, &move |_| fwd.clone(), &[]);
            let aligned = moved.exact.iter().chain(&returned.exact).all(|e| *e);
            let ratio = model_ratio(&returned.v, model, alpha, &zero, 0.0, false)?.ratio;
            let label = format!("w{m} b0={b0:?}");
            measured.push(Measurement { config: label.clone(), value: ratio });
            if aligned {
                if returned.v.slices != w.slices {
                    details.push(format!("{label}: support left the box under translation"));
                }
                checks.push(Check::identical(&format!("{label} identical to b0=0"), ratio, base));
            } else {
                let rel = (ratio - base).abs() / base.max(f64::MIN_POSITIVE);
                checks.push(Check::at_most(&format!("{label} relative change"), rel, interp_tol));
            }
        }
        for &c0 in c0_levels {
            let (lifted, factors) = exp_lift(w, c0)?;
            let ratio = model_ratio(&lifted, model, alpha, &zero, c0, true)?.ratio;
            let label = format!("w{m} c0={c0}");
            measured.push(Measurement { config: label.clone(), value: ratio });
            checks.push(Check::at_most(&format!("{label} ratio/ratio(0)"), ratio / base_exact, 1.0 + 1e-6));
            let v = gauge_exp(&lifted, &move |_| c0, &[])?;
            let mut worst = 0.0f64;
            for k in 0..v.times.len() {
                let expected = hessian_seminorm(&lifted.slices[k], alpha, 1.0, None) / factors[k];
                let got = hessian_seminorm(&v.slices[k], alpha, 1.0, None);
                if expected > 0.0 {
                    worst = worst.max((got - expected).abs() / expected);
                }
            }
            checks.push(Check::at_most(&format!("{label} exp-gauge scaling error"), worst, 1e-12));
        }
    }
    Ok(AuditReport::new("gauge_independence", measured, checks, details))
}

/// `u = e^{c₀t}w`, `u_t = e^{c₀t}(w_t + c₀w)`; also returns `e^{c₀t_k}`.
fn exp_lift(w: &SpaceTimeFn, c0: f64) -> Result<(SpaceTimeFn, Vec<f64>)> {
    let dt = w.dt_slices.as_ref().ok_or_else(|| Error::InvalidArgument("test function needs a stored time derivative".into()))?;
    let factors: Vec<f64> = w.times.iter().map(|t| (c0 * t).exp()).collect();
    let slices = w.slices.iter().zip(&factors).map(|(s, e)| s.scaled(*e)).collect();
    let dts = dt.iter().zip(&w.slices).zip(&factors).map(|((d, s), e)| d.zip_map(s, |a, b| e * (a + c0 * b))).collect();
    Ok((SpaceTimeFn::new(w.times.clone(), slices, Some(dts))?, factors))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::SmallMat;

    fn setup() -> (SpaceGrid, Vec<f64>) {
        let g = SpaceGrid::new(1, 4.0, 81).unwrap();
        let times: Vec<f64> = (0..=10).map(|k| 0.1 * k as f64).collect();
        (g, times)
    }

    #[test]
    fn zero_levels_reduce_to_model_ratio() {
        let (g, times) = setup();
        let fam = compact_family(g, &times, 2);
        let model = TimeMatrixPath::identity(1);
        let a = audit_gauge_independence(&model, &fam, 0.5, &[vec![0.0]], &[0.0], 1e-3).unwrap();
        let direct = model_ratio(&fam[0], &model, 0.5, &[0.0], 0.0, false).unwrap().ratio;
        assert_eq!(a.measured[0].value, direct);
        assert!(a.pass, "{:?}", a.checks);
    }

    #[test]
    fn aligned_drift_and_potentials_pass() {
        let (g, times) = setup();
        let fam = compact_family(g, &times, 2);
        // One grid step per time step.
        let b0 = g.h() / 0.1;
        let model = TimeMatrixPath::constant(&SmallMat::diag(&[1.3]));
        let a = audit_gauge_independence(&model, &fam, 0.5, &[vec![b0], vec![-2.0 * b0]], &[0.0, 1.0, 10.0], 1e-2).unwrap();
        assert!(a.pass, "{:?}", a.checks);
        assert!(a.checks.iter().any(|c| c.name.contains("identical")));
    }

    #[test]
    fn exp_lift_is_a_solution_of_the_potential_problem() {
        let (g, times) = setup();
        let w = &compact_family(g, &times, 1)[0];
        let (u, _) = exp_lift(w, 2.0).unwrap();
        let back = gauge_exp(&u, &|_| 2.0, &[]).unwrap();
        assert!(back.dist_sup(w) < 1e-12);
        let dt = back.dt_slices.unwrap();
        let wdt = w.dt_slices.as_ref().unwrap();
        let err = dt.iter().zip(wdt).fold(0.0f64, |m, (a, b)| m.max(a.dist_sup(b)));
        assert!(err < 1e-12, "{err}");
    }

    #[test]
    fn negative_control_support_touching_the_boundary() {
        let (g, times) = setup();
        // Not compactly supported: translation pushes mass through the boundary.
        let wide = SpaceTimeFn::sample(g, &times, |t, x| (1.0 + t) * (0.7 * x[0]).sin(), Some(&|_, x: &[f64]| (0.7 * x[0]).sin()));
        let b0 = g.h() / 0.1;
        let a = audit_gauge_independence(&TimeMatrixPath::identity(1), &[wide], 0.5, &[vec![b0]], &[], 1e-2).unwrap();
        assert!(!a.pass);
        assert!(!a.details.is_empty());
    }

    #[test]
    fn differenced_dt_is_exact_for_linear_time() {
        let (g, times) = setup();
        let u = SpaceTimeFn::sample(g, &times, |t, x| 3.0 * t + x[0], None);
        for s in differenced_dt(&u) {
            assert!(s.values.iter().all(|v| (v - 3.0).abs() < 1e-12));
        }
    }
}
