//! Grid functions, finite differences and Hölder norms.
//!
//! `|Du|` is the Euclidean norm of the gradient and `|D²u|` the Frobenius norm
//! of the Hessian, both pointwise. Seminorms only compare points at distance at
//! most `max_dist` (1 by default).

mod cone;
mod diff;
mod embedding;
mod grid;
mod seminorm;

use serde::{Deserialize, Serialize};

pub use cone::{cone_matrix_bound, polarization_recover, ConeSpec, PolarizationBound};
pub use diff::{fd_gradient, fd_hessian, fd_partial, pointwise_norm, trace};
pub use embedding::{embedding_check, embedding_envelope, envelope_slope, EmbeddingRow};
pub use grid::{GridFn, SpaceGrid, SpaceTimeFn};
pub use seminorm::{
    holder_seminorm, holder_seminorm_brute, holder_seminorm_detailed, holder_seminorm_vec, pair_offsets,
    PairOffset, SeminormWitness, BRUTE_FORCE_MAX_NODES,
};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HolderReport {
    pub sup: f64,
    pub grad_sup: f64,
    pub hess_sup: f64,
    pub seminorm_alpha: f64,
    pub seminorm_2alpha: f64,
    pub norm_2alpha: f64,
}

fn flatten(hess: &[Vec<GridFn>]) -> Vec<&GridFn> {
    hess.iter().flat_map(|row| row.iter()).collect()
}

/// `[D²u]_α`, the Hessian difference measured in the Frobenius norm.
pub fn hessian_seminorm(u: &GridFn, alpha: f64, max_dist: f64, mask: Option<&[bool]>) -> f64 {
    let hess = fd_hessian(u);
    holder_seminorm_vec(&flatten(&hess), alpha, max_dist, mask)
}

pub fn norm_2alpha(u: &GridFn, alpha: f64) -> HolderReport {
    let grad = fd_gradient(u);
    let hess = fd_hessian(u);
    let grad_refs: Vec<&GridFn> = grad.iter().collect();
    let hess_refs = flatten(&hess);
    let sup = u.sup();
    let grad_sup = pointwise_norm(&grad_refs).sup();
    let hess_sup = pointwise_norm(&hess_refs).sup();
    let seminorm_alpha = holder_seminorm(u, alpha, 1.0);
    let seminorm_2alpha = holder_seminorm_vec(&hess_refs, alpha, 1.0, None);
    HolderReport {
        sup,
        grad_sup,
        hess_sup,
        seminorm_alpha,
        seminorm_2alpha,
        norm_2alpha: sup + grad_sup + hess_sup + seminorm_2alpha,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InterpolationRow {
    pub eps: f64,
    /// Least `N ≥ 0` with `‖v‖₂ ≤ N‖v‖₀ + ε[v]_{2+α}` over the family.
    pub n_min: f64,
    pub finite: bool,
}

pub fn check_interpolation(fns: &[GridFn], alpha: f64, eps_list: &[f64]) -> Vec<InterpolationRow> {
    let reports: Vec<HolderReport> = fns.iter().map(|v| norm_2alpha(v, alpha)).collect();
    eps_list
        .iter()
        .map(|&eps| {
            let mut n_min = 0.0f64;
            for r in &reports {
                let excess = r.sup + r.grad_sup + r.hess_sup - eps * r.seminorm_2alpha;
                if excess <= 0.0 {
                    continue;
                }
                n_min = n_min.max(if r.sup > 0.0 { excess / r.sup } else { f64::INFINITY });
            }
            InterpolationRow { eps, n_min, finite: n_min.is_finite() }
        })
        .collect()
}

/// Whether two interpolation tables (same `eps_list`, coarse and refined
/// grids) agree within `rel_tol`.
pub fn interpolation_stable(coarse: &[InterpolationRow], fine: &[InterpolationRow], rel_tol: f64) -> bool {
    coarse.len() == fine.len()
        && coarse.iter().zip(fine).all(|(a, b)| {
            a.finite && b.finite && (a.n_min - b.n_min).abs() <= rel_tol * a.n_min.abs().max(b.n_min.abs()).max(1.0)
        })
}
