use super::conv::{gaussian_convolve, Outside};
use super::path::{integrate_path, default_rule, TimeMatrixPath};
use crate::error::{Error, Result};
use crate::holder::{GridFn, SpaceGrid, SpaceTimeFn};
use crate::linalg::SmallMat;
use crate::quad::midpoint_cells;

/// Space-time data for the potential and the heat solver.
#[derive(Clone, Copy)]
pub enum Source<'a> {
    /// A function of `(t, x)`, sampled wherever needed; `breakpoints` lists
    /// its jumps in `t`.
    Func { f: &'a (dyn Fn(f64, &[f64]) -> f64 + Sync), breakpoints: &'a [f64] },
    /// Stored slices, linear in `t` between them, zero outside the box and
    /// outside the stored time range.
    Slices(&'a SpaceTimeFn),
}

impl<'a> Source<'a> {
    pub fn func(f: &'a (dyn Fn(f64, &[f64]) -> f64 + Sync)) -> Self {
        Source::Func { f, breakpoints: &[] }
    }

    pub fn breakpoints(&self) -> Vec<f64> {
        match self {
            Source::Func { breakpoints, .. } => breakpoints.to_vec(),
            Source::Slices(u) => u.times.clone(),
        }
    }

    /// The slice at time `t` on `grid`.
    pub fn slice(&self, t: f64, grid: &SpaceGrid) -> Result<GridFn> {
        let out = match self {
            Source::Func { f, .. } => grid.sample(|x| f(t, x)),
            Source::Slices(u) => {
                if u.grid != *grid {
                    return Err(Error::InvalidArgument("source slices live on a different grid".into()));
                }
                let times = &u.times;
                if t < times[0] || t > times[times.len() - 1] {
                    GridFn::zeros(*grid)
                } else {
                    let k = times.partition_point(|&s| s <= t).clamp(1, times.len() - 1);
                    let (t0, t1) = (times[k - 1], times[k]);
                    let w = if t1 > t0 { (t - t0) / (t1 - t0) } else { 0.0 };
                    u.slices[k - 1].zip_map(&u.slices[k], |a, b| (1.0 - w) * a + w * b)
                }
            }
        };
        if out.values.iter().any(|v| !v.is_finite()) {
            return Err(Error::Unbounded(format!("source is not finite at t = {t}")));
        }
        Ok(out)
    }

    /// Convolution of the slice at `t` with the lattice Gaussian of parameter
    /// `a`, using exterior values where the source defines them.
    pub fn convolve(&self, t: f64, grid: &SpaceGrid, a: &SmallMat) -> Result<GridFn> {
        let inside = self.slice(t, grid)?;
        Ok(match self {
            Source::Func { f, .. } => {
                let g = |x: &[f64]| f(t, x);
                gaussian_convolve(&inside, a, Outside::Eval(&g))
            }
            Source::Slices(_) => gaussian_convolve(&inside, a, Outside::Zero),
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PotentialOpts {
    /// Largest midpoint cell in time.
    pub max_dt: f64,
}

impl Default for PotentialOpts {
    fn default() -> Self {
        PotentialOpts { max_dt: 1.0 / 128.0 }
    }
}

/// `Gf(s,·) = ∫ₛ^{t_end} p(s,t,·) * f(t,·) dt`, midpoint rule in time with cells
/// cut at every breakpoint of the path and the source.
pub fn potential_g(
    path: &TimeMatrixPath,
    f: Source,
    s: f64,
    grid: &SpaceGrid,
    t_end: f64,
    opts: &PotentialOpts,
) -> Result<GridFn> {
    if path.dim() != grid.d {
        return Err(Error::InvalidArgument("path and grid dimensions differ".into()));
    }
    let mut acc = GridFn::zeros(*grid);
    if t_end <= s {
        return Ok(acc);
    }
    let mut cuts = path.breakpoints().to_vec();
    cuts.extend(f.breakpoints());
    let rule = default_rule();
    let mut a = SmallMat::zeros(grid.d);
    let mut prev = s;
    for (t, w) in midpoint_cells(s, t_end, &cuts, opts.max_dt) {
        a = a.add(&integrate_path(path, prev, t, &rule)?);
        prev = t;
        let conv = f.convolve(t, grid, &a)?;
        for (o, v) in acc.values.iter_mut().zip(&conv.values) {
            *o += w * v;
        }
    }
    Ok(acc)
}
