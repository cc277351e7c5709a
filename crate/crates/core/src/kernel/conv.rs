//! Discrete Gaussian convolution on grids.
//!
//! Weights are the kernel values on the lattice, truncated at 8 standard
//! deviations and normalised by their own sum, so constants are reproduced
//! exactly and kernels narrower than the grid step degrade to the identity.

use rayon::prelude::*;

use crate::holder::{GridFn, SpaceGrid};
use crate::linalg::SmallMat;

/// How values outside the grid box are supplied.
#[derive(Clone, Copy)]
pub enum Outside<'a> {
    /// Nearest boundary value.
    Clamp,
    Zero,
    /// Evaluate a function at the exterior point.
    Eval(&'a (dyn Fn(&[f64]) -> f64 + Sync)),
}

pub const TAIL_SIGMAS: f64 = 8.0;

/// Lattice half-width (in steps) covering `TAIL_SIGMAS` standard deviations of
/// the kernel `exp(−x²/(4a))`.
pub fn half_width(a: f64, h: f64) -> usize {
    if a <= 0.0 {
        0
    } else {
        (TAIL_SIGMAS * (2.0 * a).sqrt() / h).ceil() as usize
    }
}

pub fn weights_1d(a: f64, h: f64) -> Vec<f64> {
    let m = half_width(a, h) as i64;
    if m == 0 {
        return vec![1.0];
    }
    let mut w: Vec<f64> = (-m..=m).map(|k| (-(k as f64 * h).powi(2) / (4.0 * a)).exp()).collect();
    let z: f64 = w.iter().sum();
    w.iter_mut().for_each(|v| *v /= z);
    w
}

struct Extended {
    d: usize,
    dims: [usize; 3],
    data: Vec<f64>,
}

fn extend(u: &GridFn, margin: [usize; 3], outside: Outside) -> Extended {
    let g = u.grid;
    let d = g.d;
    let mut dims = [1usize; 3];
    for a in 0..d {
        dims[a] = g.n + 2 * margin[a];
    }
    let total: usize = dims[..d].iter().product();
    let h = g.h();
    let data = (0..total)
        .into_par_iter()
        .map(|flat| {
            let mut rem = flat;
            let mut idx = [0i64; 3];
            for a in (0..d).rev() {
                idx[a] = (rem % dims[a]) as i64 - margin[a] as i64;
                rem /= dims[a];
            }
            let inside = (0..d).all(|a| idx[a] >= 0 && idx[a] < g.n as i64);
            if inside {
                let ui: Vec<usize> = idx[..d].iter().map(|&i| i as usize).collect();
                return u.values[g.flat(&ui)];
            }
            match outside {
                Outside::Zero => 0.0,
                Outside::Clamp => {
                    let ui: Vec<usize> = idx[..d].iter().map(|&i| i.clamp(0, g.n as i64 - 1) as usize).collect();
                    u.values[g.flat(&ui)]
                }
                Outside::Eval(f) => {
                    let x: Vec<f64> = idx[..d].iter().map(|&i| -g.radius + h * i as f64).collect();
                    f(&x)
                }
            }
        })
        .collect();
    Extended { d, dims, data }
}

fn conv_axis(ext: Extended, axis: usize, w: &[f64]) -> Extended {
    let m = w.len() / 2;
    let d = ext.d;
    let mut dims = ext.dims;
    dims[axis] -= 2 * m;
    let stride_in: usize = ext.dims[axis + 1..d].iter().product();
    let total: usize = dims[..d].iter().product();
    let data = (0..total)
        .into_par_iter()
        .map(|flat| {
            let mut rem = flat;
            let mut src = 0usize;
            let mut mult = 1usize;
            for a in (0..d).rev() {
                let i = rem % dims[a];
                rem /= dims[a];
                src += i * mult;
                mult *= ext.dims[a];
            }
            let mut acc = 0.0;
            for (k, wk) in w.iter().enumerate() {
                acc += wk * ext.data[src + k * stride_in];
            }
            acc
        })
        .collect();
    Extended { d, dims, data }
}

/// `Σ_k w_k u(x − y_k)` with the lattice Gaussian of covariance parameter `A`
/// (kernel `exp(−(A⁻¹y, y)/4)`). Diagonal `A` is applied axis by axis.
pub fn gaussian_convolve(u: &GridFn, a: &SmallMat, outside: Outside) -> GridFn {
    let g = u.grid;
    let h = g.h();
    let d = g.d;
    let diagonal = (0..d).all(|i| (0..d).all(|j| i == j || a.m[i][j] == 0.0));
    if diagonal {
        let ws: Vec<Vec<f64>> = (0..d).map(|i| weights_1d(a.m[i][i], h)).collect();
        let mut margin = [0usize; 3];
        for i in 0..d {
            margin[i] = ws[i].len() / 2;
        }
        let mut ext = extend(u, margin, outside);
        for (axis, w) in ws.iter().enumerate() {
            ext = conv_axis(ext, axis, w);
        }
        debug_assert_eq!(ext.data.len(), g.len());
        return GridFn { grid: g, values: ext.data };
    }
    let b = a.inverse().expect("positive definite diffusion");
    let ev = a.sym_eigenvalues();
    let m = half_width(ev[d - 1], h);
    let mut offsets: Vec<([i64; 3], f64)> = Vec::new();
    let span = 2 * m + 1;
    // (By, y)/4 ≤ 8²/2 keeps the ellipsoid of 8 standard deviations.
    let cutoff = 2.0 * TAIL_SIGMAS * TAIL_SIGMAS;
    for flat in 0..span.pow(d as u32) {
        let mut rem = flat;
        let mut k = [0i64; 3];
        for kk in k.iter_mut().take(d) {
            *kk = (rem % span) as i64 - m as i64;
            rem /= span;
        }
        let y: Vec<f64> = k[..d].iter().map(|&v| v as f64 * h).collect();
        let q = b.quad_form(&y);
        if q <= cutoff {
            offsets.push((k, (-0.25 * q).exp()));
        }
    }
    let z: f64 = offsets.iter().map(|o| o.1).sum();
    let ext = extend(u, [m; 3], outside);
    let dims = ext.dims;
    let values = (0..g.len())
        .into_par_iter()
        .map(|node| {
            let idx = g.multi_index(node);
            let mut acc = 0.0;
            for (k, w) in &offsets {
                let mut flat = 0usize;
                for a in 0..d {
                    // Subtracting the offset realises u(x − y).
                    flat = flat * dims[a] + (idx[a] as i64 + m as i64 - k[a]) as usize;
                }
                acc += w * ext.data[flat];
            }
            acc / z
        })
        .collect();
    GridFn { grid: g, values }
}

/// Samples `f` on `grid` and convolves, sampling `f` outside the box too.
pub fn gaussian_convolve_fn(grid: &SpaceGrid, a: &SmallMat, f: &(dyn Fn(&[f64]) -> f64 + Sync)) -> GridFn {
    let inside = grid.sample(f);
    gaussian_convolve(&inside, a, Outside::Eval(f))
}
