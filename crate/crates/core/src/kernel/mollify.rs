use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::holder::GridFn;
use crate::quad::Composite;

/// Unnormalised bump `exp(−1/(1−|x|²))` on the unit ball.
pub fn bump(x: &[f64]) -> f64 {
    let r2: f64 = x.iter().map(|v| v * v).sum();
    if r2 >= 1.0 {
        0.0
    } else {
        (-1.0 / (1.0 - r2)).exp()
    }
}

/// `c_d` with `∫ c_d·bump = 1` in dimension `d`, by radial quadrature.
pub fn bump_normalization(d: usize) -> f64 {
    let sphere = match d {
        1 => 2.0,
        2 => 2.0 * std::f64::consts::PI,
        _ => 4.0 * std::f64::consts::PI,
    };
    let radial: std::result::Result<f64, ()> =
        Composite::new(10, 64).integrate(0.0, 1.0, &[], |r| Ok(bump(&[r]) * r.powi(d as i32 - 1)));
    1.0 / (sphere * radial.expect("infallible"))
}

/// `f * ζ_ε` with `ζ_ε(y) = ε^{−d} c_d bump(y/ε)`. The lattice weights are
/// normalised by their sum, so every output is a convex combination of values
/// within distance `ε`; beyond the box the nearest boundary value is used.
pub fn mollify(u: &GridFn, eps: f64) -> Result<GridFn> {
    if !(eps > 0.0 && eps.is_finite()) {
        return Err(Error::InvalidArgument(format!("mollifier radius {eps} must be positive")));
    }
    let g = u.grid;
    let d = g.d;
    let h = g.h();
    let m = (eps / h).floor() as i64;
    let span = (2 * m + 1) as usize;
    let mut stencil: Vec<([i64; 3], f64)> = Vec::new();
    for flat in 0..span.pow(d as u32) {
        let mut rem = flat;
        let mut k = [0i64; 3];
        for kk in k.iter_mut().take(d) {
            *kk = (rem % span) as i64 - m;
            rem /= span;
        }
        let y: Vec<f64> = k[..d].iter().map(|&v| v as f64 * h / eps).collect();
        let w = bump(&y);
        if w > 0.0 {
            stencil.push((k, w));
        }
    }
    let z: f64 = stencil.iter().map(|s| s.1).sum();
    let n = g.n as i64;
    let values = (0..g.len())
        .into_par_iter()
        .map(|node| {
            let idx = g.multi_index(node);
            let mut acc = 0.0;
            for (k, w) in &stencil {
                let mut src = [0usize; 3];
                for a in 0..d {
                    src[a] = (idx[a] as i64 - k[a]).clamp(0, n - 1) as usize;
                }
                acc += w * u.values[g.flat(&src[..d])];
            }
            acc / z
        })
        .collect();
    Ok(GridFn { grid: g, values })
}
