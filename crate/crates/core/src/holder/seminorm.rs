use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::grid::{GridFn, SpaceGrid};
use crate::error::{Error, Result};

/// Largest grid (node count) accepted by the all-pairs oracle.
pub const BRUTE_FORCE_MAX_NODES: usize = 64 * 64;

/// A pair offset in grid steps together with its Euclidean length.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PairOffset {
    pub steps: [i64; 3],
    pub dist: f64,
}

/// The maximising pair found by a seminorm scan.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SeminormWitness {
    pub value: f64,
    pub anchor: usize,
    pub partner: usize,
}

fn integer_directions(d: usize) -> Vec<[i64; 3]> {
    let mut dirs = Vec::new();
    for i in 0..d {
        let mut e = [0; 3];
        e[i] = 1;
        dirs.push(e);
    }
    for i in 0..d {
        for j in i + 1..d {
            for s in [1, -1] {
                let mut e = [0; 3];
                e[i] = 1;
                e[j] = s;
                dirs.push(e);
            }
        }
    }
    if d == 3 {
        for (s1, s2) in [(1, 1), (1, -1), (-1, 1), (-1, -1)] {
            dirs.push([1, s1, s2]);
        }
    }
    dirs
}

/// Offsets scanned by [`holder_seminorm`]: along every coordinate and diagonal
/// direction, the grid multiples closest below the dyadic distances
/// `max_dist/2^k`, together with all power-of-two multiples within reach.
pub fn pair_offsets(grid: &SpaceGrid, max_dist: f64) -> Vec<PairOffset> {
    let h = grid.h();
    let max_steps = (grid.n - 1) as i64;
    let mut out = Vec::new();
    for dir in integer_directions(grid.d) {
        let len = (dir.iter().map(|v| v * v).sum::<i64>() as f64).sqrt();
        let step = h * len;
        let mut multiples = Vec::new();
        let mut k = 0;
        loop {
            let m = (max_dist / (2f64.powi(k) * step) + 1e-9).floor() as i64;
            if m < 1 {
                break;
            }
            multiples.push(m.min(max_steps));
            k += 1;
        }
        let mut p = 1i64;
        while p <= max_steps && (p as f64) * step <= max_dist * (1.0 + 1e-12) {
            multiples.push(p);
            p *= 2;
        }
        multiples.sort_unstable();
        multiples.dedup();
        for m in multiples {
            let steps = [dir[0] * m, dir[1] * m, dir[2] * m];
            let dist = (m as f64) * step;
            if dist <= max_dist * (1.0 + 1e-12) {
                out.push(PairOffset { steps, dist });
            }
        }
    }
    out
}

fn better(a: Option<SeminormWitness>, b: Option<SeminormWitness>) -> Option<SeminormWitness> {
    match (a, b) {
        (None, x) | (x, None) => x,
        (Some(x), Some(y)) => {
            if y.value > x.value || (y.value == x.value && (y.anchor, y.partner) < (x.anchor, x.partner)) {
                Some(y)
            } else {
                Some(x)
            }
        }
    }
}

/// Structured-pair Hölder seminorm of a vector-valued field, the difference
/// measured in the Euclidean norm over `parts`. Pairs with an endpoint outside
/// `mask` are skipped.
pub fn holder_seminorm_detailed(
    parts: &[&GridFn],
    alpha: f64,
    max_dist: f64,
    mask: Option<&[bool]>,
) -> Option<SeminormWitness> {
    let grid = parts[0].grid;
    let offsets = pair_offsets(&grid, max_dist);
    let powers: Vec<f64> = offsets.iter().map(|o| o.dist.powf(alpha)).collect();
    let inside = |k: usize| mask.map_or(true, |m| m[k]);
    const CHUNK: usize = 1024;
    (0..grid.len())
        .into_par_iter()
        .chunks(CHUNK)
        .map(|anchors| {
            let mut best: Option<SeminormWitness> = None;
            for x in anchors {
                if !inside(x) {
                    continue;
                }
                for (o, pw) in offsets.iter().zip(&powers) {
                    let Some(y) = grid.offset(x, &o.steps) else { continue };
                    if !inside(y) {
                        continue;
                    }
                    let diff2: f64 = parts
                        .iter()
                        .map(|p| {
                            let d = p.values[x] - p.values[y];
                            d * d
                        })
                        .sum();
                    let q = diff2.sqrt() / pw;
                    if best.map_or(true, |b| q > b.value) {
                        best = Some(SeminormWitness { value: q, anchor: x, partner: y });
                    }
                }
            }
            best
        })
        .reduce(|| None, better)
}

/// `[g]_α` over the structured pair set with `|x − y| ≤ max_dist`; 0 when no
/// pair exists.
pub fn holder_seminorm(u: &GridFn, alpha: f64, max_dist: f64) -> f64 {
    holder_seminorm_detailed(&[u], alpha, max_dist, None).map_or(0.0, |w| w.value)
}

pub fn holder_seminorm_vec(parts: &[&GridFn], alpha: f64, max_dist: f64, mask: Option<&[bool]>) -> f64 {
    holder_seminorm_detailed(parts, alpha, max_dist, mask).map_or(0.0, |w| w.value)
}

/// Every pair of nodes with `|x − y| ≤ max_dist`. Small grids only.
pub fn holder_seminorm_brute(u: &GridFn, alpha: f64, max_dist: f64) -> Result<f64> {
    let g = u.grid;
    if g.len() > BRUTE_FORCE_MAX_NODES {
        return Err(Error::InvalidArgument(format!(
            "all-pairs seminorm limited to {BRUTE_FORCE_MAX_NODES} nodes, grid has {}",
            g.len()
        )));
    }
    let pts: Vec<[f64; 3]> = (0..g.len()).map(|k| g.point(k)).collect();
    let mut best = 0.0f64;
    for i in 0..g.len() {
        for j in i + 1..g.len() {
            let dist = (0..g.d).map(|a| (pts[i][a] - pts[j][a]).powi(2)).sum::<f64>().sqrt();
            if dist <= max_dist * (1.0 + 1e-12) {
                best = best.max((u.values[i] - u.values[j]).abs() / dist.powf(alpha));
            }
        }
    }
    Ok(best)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn constant_and_linear() {
        let g = SpaceGrid::new(2, 1.0, 17).unwrap();
        assert_eq!(holder_seminorm(&GridFn::constant(g, 3.0), 0.5, 1.0), 0.0);
        let lin = g.sample(|x| x[0]);
        assert!((holder_seminorm(&lin, 0.5, 1.0) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn power_function_approaches_one() {
        let alpha = 0.5;
        let mut last = 0.0;
        // Even n keeps the cusp off the grid, so the sup is approached from below.
        for n in [16, 32, 64] {
            let g = SpaceGrid::new(1, 1.0, n).unwrap();
            let u = g.sample(|x| x[0].abs().powf(alpha));
            let fast = holder_seminorm(&u, alpha, 1.0);
            let brute = holder_seminorm_brute(&u, alpha, 1.0).unwrap();
            assert!(fast <= brute + 1e-14);
            assert!(brute <= 1.0 + 1e-12);
            assert!(brute >= last - 1e-12);
            last = brute;
        }
        assert!(last > 0.85, "{last}");
    }

    #[test]
    fn structured_scan_matches_brute_force_on_smooth_data() {
        let g = SpaceGrid::new(2, 1.0, 21).unwrap();
        let u = g.sample(|x| (2.0 * x[0]).sin() * x[1].cos());
        let fast = holder_seminorm(&u, 0.5, 1.0);
        let brute = holder_seminorm_brute(&u, 0.5, 1.0).unwrap();
        assert!(fast <= brute + 1e-14);
        assert!(fast >= 0.9 * brute, "{fast} vs {brute}");
    }

    #[test]
    fn single_pair_set_is_zero() {
        let g = SpaceGrid::new(1, 1.0, 5).unwrap();
        let u = g.sample(|x| x[0]);
        assert_eq!(holder_seminorm(&u, 0.5, 0.1), 0.0);
    }

    #[test]
    fn brute_force_refuses_large_grids() {
        let g = SpaceGrid::new(2, 1.0, 65).unwrap();
        assert!(holder_seminorm_brute(&GridFn::zeros(g), 0.5, 1.0).is_err());
    }

    #[test]
    fn witness_prefers_smallest_anchor() {
        let g = SpaceGrid::new(1, 1.0, 9).unwrap();
        let u = g.sample(|x| x[0]);
        let w = holder_seminorm_detailed(&[&u], 0.5, 1.0, None).unwrap();
        assert_eq!(w.anchor, 0);
    }

    proptest! {
        #[test]
        fn scaling_is_exact_for_powers_of_two(k in -4i32..4, neg in any::<bool>(), seed in 0u64..1000) {
            let g = SpaceGrid::new(2, 1.0, 9).unwrap();
            let s = seed as f64;
            let u = g.sample(|x| (x[0] * (1.0 + s * 0.01)).sin() + x[1] * x[1] * s.cos());
            let lambda = if neg { -(2f64.powi(k)) } else { 2f64.powi(k) };
            let a = holder_seminorm(&u.scaled(lambda), 0.4, 1.0);
            let b = holder_seminorm(&u, 0.4, 1.0);
            prop_assert_eq!(a, lambda.abs() * b);
        }

        #[test]
        fn scaling_is_tight_for_general_factors(lambda in -10.0f64..10.0) {
            let g = SpaceGrid::new(1, 1.0, 33).unwrap();
            let u = g.sample(|x| x[0].abs().sqrt());
            let a = holder_seminorm(&u.scaled(lambda), 0.5, 1.0);
            let b = lambda.abs() * holder_seminorm(&u, 0.5, 1.0);
            prop_assert!((a - b).abs() <= 1e-14 * b.max(1.0));
        }

        #[test]
        fn grid_shift_preserves_seminorm(shift in 1usize..6) {
            let g = SpaceGrid::new(2, 1.0, 17).unwrap();
            let base = g.sample(|x| (3.0 * x[0]).sin() * (x[1] + 0.3).abs().powf(0.7));
            // Shifted copy: v(i) = u(i + shift e1); compare on the common support.
            let mut v = GridFn::zeros(g);
            let mut mask_v = vec![false; g.len()];
            let mut mask_u = vec![false; g.len()];
            for k in 0..g.len() {
                if let Some(src) = g.offset(k, &[shift as i64, 0, 0]) {
                    v.values[k] = base.values[src];
                    mask_v[k] = true;
                    mask_u[src] = true;
                }
            }
            let a = holder_seminorm_vec(&[&v], 0.5, 1.0, Some(&mask_v));
            let b = holder_seminorm_vec(&[&base], 0.5, 1.0, Some(&mask_u));
            prop_assert_eq!(a, b);
        }
    }
}
