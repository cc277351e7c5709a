use serde::{Deserialize, Serialize};

use super::cauchy::{boundary_influence, operator_at, residual_report, screen_hypotheses, source_at, CauchyProblem, IterationCounts, SolveResult};
use super::scheme::{assemble, march, time_derivative, time_nodes, BoundaryMode, March, Scheme};
use super::sparse::Csr;
use crate::coeffspec::{OperatorSpec, PointCoeffs};
use crate::error::{Error, Result};
use crate::holder::{holder_seminorm, norm_2alpha, GridFn, SpaceGrid, SpaceTimeFn};
use crate::kernel::{heat_solve, HeatSolveOpts, Source};
use crate::linalg::SmallMat;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ContinuationOpts {
    pub lambda_step: f64,
    pub picard_tol: f64,
    pub max_picard: usize,
    /// Where the march stops; 1 solves the target equation.
    pub lambda_target: f64,
    /// `δ` in the base operator `Δ − δ`; taken from the sampled hypotheses when
    /// absent.
    pub delta: Option<f64>,
}

impl Default for ContinuationOpts {
    fn default() -> Self {
        ContinuationOpts { lambda_step: 0.1, picard_tol: 1e-8, max_picard: 200, lambda_target: 1.0, delta: None }
    }
}

/// Distance of iterates in the discrete `𝔉^{2+α}` norm:
/// `max_t ‖u − w‖_{2+α} + max_t (‖u_t − w_t‖₀ + [u_t − w_t]_α)`.
fn picard_distance(u: &SpaceTimeFn, w: &SpaceTimeFn, alpha: f64) -> f64 {
    let mut space = 0.0f64;
    let mut time = 0.0f64;
    let (du, dw) = (u.dt_slices.as_ref(), w.dt_slices.as_ref());
    for k in 0..u.slices.len() {
        let diff = u.slices[k].zip_map(&w.slices[k], |a, b| a - b);
        space = space.max(norm_2alpha(&diff, alpha).norm_2alpha);
        if let (Some(a), Some(b)) = (du, dw) {
            let dd = a[k].zip_map(&b[k], |p, q| p - q);
            time = time.max(dd.sup() + holder_seminorm(&dd, alpha, 1.0));
        }
    }
    space + time
}

struct Family {
    grid: SpaceGrid,
    times: Vec<f64>,
    /// `L_h` and `(Δ_h − δ)` at stored times and at cell midpoints.
    l_nodes: Vec<Csr>,
    h_nodes: Vec<Csr>,
    l_mid: Vec<Csr>,
    h_mid: Vec<Csr>,
    f_nodes: Vec<Vec<f64>>,
    f_mid: Vec<Vec<f64>>,
}

impl Family {
    fn build(spec: &OperatorSpec, grid: SpaceGrid, n_time: usize, scheme: &Scheme, mode: BoundaryMode, delta: f64) -> Result<Family> {
        let (t0, s) = spec.window();
        let times = time_nodes(t0, s, spec.breakpoints(), n_time);
        let mids: Vec<f64> = times.windows(2).map(|w| 0.5 * (w[0] + w[1])).collect();
        let heat = |_: &[f64]| Ok(PointCoeffs { a: SmallMat::identity(grid.d), b: [0.0; 3], c: delta, f: 0.0 });
        let h_op = assemble(&grid, &heat, scheme.blend, mode)?;
        let frozen = spec.is_time_independent();
        let ops = |ts: &[f64]| -> Result<Vec<Csr>> {
            if frozen {
                let op = operator_at(spec, &grid, scheme, mode, ts[0])?;
                Ok(vec![op; ts.len()])
            } else {
                ts.iter().map(|&t| operator_at(spec, &grid, scheme, mode, t)).collect()
            }
        };
        let src = |ts: &[f64]| -> Result<Vec<Vec<f64>>> { ts.iter().map(|&t| source_at(spec, None, &grid, t)).collect() };
        Ok(Family {
            grid,
            l_nodes: ops(&times)?,
            h_nodes: vec![h_op.clone(); times.len()],
            l_mid: ops(&mids)?,
            h_mid: vec![h_op; mids.len()],
            f_nodes: src(&times)?,
            f_mid: src(&mids)?,
            times,
        })
    }

    /// `((Δ_h − δ) − L_h) v` at stored times.
    fn defect(&self, v: &SpaceTimeFn) -> Vec<Vec<f64>> {
        (0..self.times.len())
            .map(|k| {
                let h = self.h_nodes[k].matvec(&v.slices[k].values);
                let l = self.l_nodes[k].matvec(&v.slices[k].values);
                h.iter().zip(&l).map(|(a, b)| a - b).collect()
            })
            .collect()
    }
}

/// One application of `ℛ`: solves
/// `u_t + [λ₀L + (1−λ₀)(Δ−δ)]u = f + (λ−λ₀)((Δ−δ) − L)v`, `u(S) = g`.
#[allow(clippy::too_many_arguments)]
fn apply_r(
    fam: &Family,
    g: &GridFn,
    v: &SpaceTimeFn,
    lambda0: f64,
    lambda: f64,
    delta: f64,
    scheme: &Scheme,
    mode: BoundaryMode,
) -> Result<(SpaceTimeFn, usize)> {
    let grid = fam.grid;
    let step = lambda - lambda0;
    let defect = fam.defect(v);
    let total: Vec<GridFn> = (0..fam.times.len())
        .map(|k| GridFn {
            grid,
            values: fam.f_nodes[k].iter().zip(&defect[k]).map(|(f, m)| f + step * m).collect(),
        })
        .collect();
    if lambda0 == 0.0 {
        let src = SpaceTimeFn::new(fam.times.clone(), total, None)?;
        let (t0, s) = (fam.times[0], fam.times[fam.times.len() - 1]);
        let opts = HeatSolveOpts { n_time: fam.times.len() - 1, plateau: 0, final_data: Some(g.clone()) };
        let u = heat_solve(Source::Slices(&src), delta, (t0, s), &grid, &opts)?;
        return Ok((u, 0));
    }
    let locate = |t: f64| fam.times.partition_point(|&s| s < t).saturating_sub(1).min(fam.times.len() - 2);
    let op = |t: f64| -> Result<Csr> {
        let k = locate(t);
        Ok(fam.l_mid[k].lin_comb(lambda0, &fam.h_mid[k], 1.0 - lambda0))
    };
    let theta = scheme.theta;
    let src = |t: f64| -> Result<Vec<f64>> {
        let k = locate(t);
        Ok((0..grid.len())
            .map(|i| fam.f_mid[k][i] + step * (theta * defect[k][i] + (1.0 - theta) * defect[k + 1][i]))
            .collect())
    };
    let (slices, stats) = march(&March {
        grid,
        times: &fam.times,
        final_values: g,
        boundary: mode,
        scheme: *scheme,
        operator: &op,
        source: &src,
        frozen_operator: false,
    })?;
    let dts = (0..fam.times.len())
        .map(|k| {
            let opk = fam.l_nodes[k].lin_comb(lambda0, &fam.h_nodes[k], 1.0 - lambda0);
            time_derivative(&opk, &total[k].values, &slices[k], mode)
        })
        .collect();
    Ok((SpaceTimeFn::new(fam.times.clone(), slices, Some(dts))?, stats.linear_iterations))
}

/// Method of continuity from `Δ − δ` to `L`: `λ` advances by `lambda_step`;
/// at each step the fixed point of `ℛ` is found by Picard iteration in the
/// discrete `2+α` norm, starting from the previous step's solution. The base
/// solves (`λ₀ = 0`) use the kernel heat solver; later ones the θ-scheme.
pub fn continuation_solve(p: &CauchyProblem, opts: &ContinuationOpts) -> Result<SolveResult> {
    if !(opts.lambda_step > 0.0 && opts.lambda_step <= 1.0) {
        return Err(Error::InvalidArgument(format!("λ step {} not in (0, 1]", opts.lambda_step)));
    }
    if !(0.0..=1.0).contains(&opts.lambda_target) {
        return Err(Error::InvalidArgument(format!("λ target {} not in [0, 1]", opts.lambda_target)));
    }
    if !(opts.picard_tol > 0.0) {
        return Err(Error::InvalidArgument("Picard tolerance must be positive".into()));
    }
    if p.n_time < 2 || p.g.grid.d != p.spec.dim() {
        return Err(Error::InvalidArgument("need n_time ≥ 2 and matching dimensions".into()));
    }
    let spec = p.effective_spec();
    let grid = p.grid();
    let mut warnings = Vec::new();
    let report = screen_hypotheses(&spec, &grid, p.strict, &mut warnings)?;
    let delta = opts.delta.unwrap_or(report.delta).max(0.0);
    let alpha = spec.alpha();
    let mode = p.boundary_mode;
    let fam = Family::build(&spec, grid, p.n_time, &p.scheme, mode, delta)?;
    let f = |t: f64, x: &[f64]| spec.eval_f(t, x).unwrap_or(f64::NAN);
    let (t0, s) = spec.window();
    let base = HeatSolveOpts { n_time: p.n_time, plateau: 0, final_data: Some(p.g.clone()) };
    let mut u = heat_solve(Source::Func { f: &f, breakpoints: spec.breakpoints() }, delta, (t0, s), &grid, &base)?;
    let mut counts = IterationCounts::default();
    let mut lambda0 = 0.0;
    while lambda0 < opts.lambda_target {
        let lambda = (lambda0 + opts.lambda_step).min(opts.lambda_target);
        let lambda = if opts.lambda_target - lambda < 1e-12 { opts.lambda_target } else { lambda };
        let mut prev_dist: Option<f64> = None;
        let mut factor = 0.0f64;
        let mut iters = 0;
        loop {
            let (next, lin) = apply_r(&fam, &p.g, &u, lambda0, lambda, delta, &p.scheme, mode)?;
            counts.linear_iterations += lin;
            iters += 1;
            let dist = picard_distance(&next, &u, alpha);
            u = next;
            if let Some(pd) = prev_dist {
                if pd > 0.0 {
                    let q = dist / pd;
                    // Ratios of differences near roundoff carry no information.
                    if dist > 1e3 * f64::EPSILON * u.sup().max(1.0) {
                        factor = factor.max(q);
                        if q >= 1.0 && iters > 2 {
                            return Err(Error::NoContraction { lambda, factor: q });
                        }
                    }
                }
            }
            if dist < opts.picard_tol {
                break;
            }
            if iters >= opts.max_picard {
                return Err(Error::PicardStalled { lambda, iterations: iters });
            }
            prev_dist = Some(dist);
        }
        counts.lambdas.push(lambda);
        counts.picard.push(iters);
        counts.contraction_factors.push(factor);
        lambda0 = lambda;
    }
    // u_t from the equation reached.
    let lam = opts.lambda_target;
    if lam > 0.0 {
        let dts = (0..fam.times.len())
            .map(|k| {
                let op = fam.l_nodes[k].lin_comb(lam, &fam.h_nodes[k], 1.0 - lam);
                time_derivative(&op, &fam.f_nodes[k], &u.slices[k], mode)
            })
            .collect();
        u.dt_slices = Some(dts);
    }
    counts.time_steps = fam.times.len() - 1;
    Ok(SolveResult {
        residual_report: residual_report(&u),
        boundary_influence: boundary_influence(&u),
        iterations: counts,
        u,
        hypotheses: Some(report),
        warnings,
    })
}
