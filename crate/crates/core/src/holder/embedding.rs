use serde::{Deserialize, Serialize};

use super::diff::{fd_gradient, fd_hessian};
use super::grid::SpaceTimeFn;
use super::hessian_seminorm;
use super::seminorm::holder_seminorm;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmbeddingRow {
    pub h: f64,
    /// `|D²u(t,x) − D²u(t−h²,x)| / (I_h h^α)`.
    pub r2: f64,
    /// `|Du(t,x) − Du(t−h²,x)| / (I_h h^{1+α})`.
    pub r1: f64,
    pub i_h: f64,
}

/// Time-increment ratios of `Du` and `D²u` at `(t, x)` against the
/// spatial seminorms of `u_t` and `D²u` over the slices in `[t − h², t]`.
pub fn embedding_check(u: &SpaceTimeFn, alpha: f64, t: f64, x: &[f64], h_list: &[f64]) -> Result<Vec<EmbeddingRow>> {
    let dt = u
        .dt_slices
        .as_ref()
        .ok_or_else(|| Error::InvalidArgument("embedding check needs stored time derivatives".into()))?;
    let grid = u.grid;
    let node = grid
        .nearest(x)
        .filter(|&k| (0..grid.d).all(|a| (grid.point(k)[a] - x[a]).abs() <= 1e-9 * grid.radius.max(1.0)))
        .ok_or_else(|| Error::InvalidArgument(format!("anchor {x:?} is not a grid node")))?;
    let top = u
        .time_index(t)
        .ok_or_else(|| Error::InvalidArgument(format!("anchor time {t} is not a stored slice")))?;

    let mut seminorm_cache: Vec<Option<f64>> = vec![None; u.times.len()];
    let mut slice_seminorm = |k: usize| -> f64 {
        *seminorm_cache[k].get_or_insert_with(|| {
            holder_seminorm(&dt[k], alpha, 1.0) + hessian_seminorm(&u.slices[k], alpha, 1.0, None)
        })
    };
    let local = |k: usize| {
        let g = fd_gradient(&u.slices[k]).iter().map(|p| p.values[node]).collect::<Vec<_>>();
        let h = fd_hessian(&u.slices[k])
            .iter()
            .flat_map(|row| row.iter().map(|e| e.values[node]).collect::<Vec<_>>())
            .collect::<Vec<_>>();
        (g, h)
    };
    let (g_top, h_top) = local(top);

    let mut rows = Vec::with_capacity(h_list.len());
    for &h in h_list {
        let lo_t = t - h * h;
        let lo = u.time_index(lo_t).ok_or_else(|| {
            Error::InvalidArgument(format!("t − h² = {lo_t} is not a stored slice (h = {h})"))
        })?;
        let mut i_h = 0.0f64;
        for k in lo..=top {
            i_h = i_h.max(slice_seminorm(k));
        }
        let (g_lo, h_lo) = local(lo);
        let dist = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(p, q)| (p - q) * (p - q)).sum::<f64>().sqrt();
        let n2 = dist(&h_top, &h_lo);
        let n1 = dist(&g_top, &g_lo);
        let ratio = |num: f64, scale: f64| if num == 0.0 && i_h == 0.0 { 0.0 } else { num / (i_h * scale) };
        rows.push(EmbeddingRow { h, r2: ratio(n2, h.powf(alpha)), r1: ratio(n1, h.powf(1.0 + alpha)), i_h });
    }
    Ok(rows)
}

/// Running supremum of `max(r₁, r₂)` from the coarsest `h` down, paired with
/// `h` (descending).
pub fn embedding_envelope(rows: &[EmbeddingRow]) -> Vec<(f64, f64)> {
    let mut sorted: Vec<&EmbeddingRow> = rows.iter().collect();
    sorted.sort_by(|a, b| b.h.total_cmp(&a.h));
    let mut run = 0.0f64;
    sorted
        .into_iter()
        .map(|r| {
            run = run.max(r.r1.max(r.r2));
            (r.h, run)
        })
        .collect()
}

/// Log-log slope of [`embedding_envelope`] against `h`; near 0 when the
/// ratios stay bounded, negative when they grow as `h` shrinks.
pub fn envelope_slope(rows: &[EmbeddingRow]) -> Option<f64> {
    let env = embedding_envelope(rows);
    let (h, e): (Vec<f64>, Vec<f64>) = env.into_iter().unzip();
    crate::verify::log_log_slope(&h, &e)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::holder::grid::SpaceGrid;

    fn dyadic_times(t: f64, levels: usize) -> Vec<f64> {
        let mut times: Vec<f64> = (0..=levels).map(|k| t - 4f64.powi(-(k as i32))).collect();
        times.push(t);
        times.sort_by(f64::total_cmp);
        times.dedup();
        times
    }

    #[test]
    fn time_independent_gives_zero() {
        let g = SpaceGrid::new(1, 1.0, 33).unwrap();
        let times = dyadic_times(1.0, 3);
        let u = SpaceTimeFn::sample(g, &times, |_, x| x[0] * x[0] * x[0], Some(&|_, _| 0.0));
        let rows = embedding_check(&u, 0.5, 1.0, &[0.0], &[0.5, 0.25]).unwrap();
        assert!(rows.iter().all(|r| r.r1 == 0.0 && r.r2 == 0.0));
    }

    #[test]
    fn linear_in_time_quadratic_in_space() {
        let g = SpaceGrid::new(1, 1.0, 33).unwrap();
        let times = dyadic_times(1.0, 3);
        let u = SpaceTimeFn::sample(g, &times, |t, x| t * x[0] * x[0], Some(&|_, x| x[0] * x[0]));
        let alpha = 0.5;
        let x = 0.5;
        let rows = embedding_check(&u, alpha, 1.0, &[x], &[0.5, 0.25, 0.125]).unwrap();
        // [x²]_α on [-1,1] with |x−y| ≤ 1: sup of |x+y|·|x−y|^{1−α}, attained at
        // x=1, y=0 (value 1); D²u is constant in x.
        let semi = holder_seminorm(&g.sample(|p| p[0] * p[0]), alpha, 1.0);
        for r in rows {
            assert!((r.i_h - semi).abs() < 1e-12);
            let num2 = 2.0 * r.h * r.h;
            let num1 = 2.0 * x * r.h * r.h;
            assert!((r.r2 - num2 / (semi * r.h.powf(alpha))).abs() < 1e-10);
            assert!((r.r1 - num1 / (semi * r.h.powf(1.0 + alpha))).abs() < 1e-10);
        }
    }

    #[test]
    fn envelope_is_monotone() {
        let row = |h: f64, r1: f64, r2: f64| EmbeddingRow { h, r1, r2, i_h: 1.0 };
        let rows = [row(0.25, 0.1, 0.3), row(0.5, 0.2, 0.1), row(0.125, 0.05, 0.01)];
        assert_eq!(embedding_envelope(&rows), vec![(0.5, 0.2), (0.25, 0.3), (0.125, 0.3)]);
        let growing = [row(0.5, 1.0, 0.0), row(0.25, 2.0, 0.0), row(0.125, 4.0, 0.0)];
        assert!((envelope_slope(&growing).unwrap() + 1.0).abs() < 1e-12);
    }

    #[test]
    fn missing_derivative_is_an_error() {
        let g = SpaceGrid::new(1, 1.0, 9).unwrap();
        let u = SpaceTimeFn::sample(g, &[0.0, 1.0], |_, _| 0.0, None);
        assert!(embedding_check(&u, 0.5, 1.0, &[0.0], &[1.0]).is_err());
    }
}
