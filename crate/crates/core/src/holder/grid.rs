use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Uniform box grid `[-radius, radius]^d` with `n` points per axis.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpaceGrid {
    pub d: usize,
    pub radius: f64,
    pub n: usize,
}

impl SpaceGrid {
    pub fn new(d: usize, radius: f64, n: usize) -> Result<Self> {
        if !(1..=3).contains(&d) {
            return Err(Error::InvalidArgument(format!("grid dimension {d} not in 1..=3")));
        }
        if n < 5 {
            return Err(Error::InvalidArgument(format!("grid needs at least 5 points per axis, got {n}")));
        }
        if !(radius > 0.0 && radius.is_finite()) {
            return Err(Error::InvalidArgument(format!("grid radius {radius} must be positive")));
        }
        Ok(SpaceGrid { d, radius, n })
    }

    pub fn h(&self) -> f64 {
        2.0 * self.radius / (self.n - 1) as f64
    }

    pub fn len(&self) -> usize {
        self.n.pow(self.d as u32)
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Coordinate of index `i` along any axis.
    pub fn coord(&self, i: usize) -> f64 {
        -self.radius + (2.0 * self.radius * i as f64) / (self.n - 1) as f64
    }

    /// Stride of `axis` in the flat layout (last axis fastest).
    pub fn stride(&self, axis: usize) -> usize {
        self.n.pow((self.d - 1 - axis) as u32)
    }

    pub fn multi_index(&self, mut flat: usize) -> [usize; 3] {
        let mut idx = [0usize; 3];
        for axis in (0..self.d).rev() {
            idx[axis] = flat % self.n;
            flat /= self.n;
        }
        idx
    }

    pub fn flat(&self, idx: &[usize]) -> usize {
        idx.iter().take(self.d).fold(0, |acc, &i| acc * self.n + i)
    }

    /// Coordinates of node `flat`; entries past `d` are zero.
    pub fn point(&self, flat: usize) -> [f64; 3] {
        let idx = self.multi_index(flat);
        let mut x = [0.0; 3];
        for a in 0..self.d {
            x[a] = self.coord(idx[a]);
        }
        x
    }

    pub fn is_boundary(&self, flat: usize) -> bool {
        let idx = self.multi_index(flat);
        idx.iter().take(self.d).any(|&i| i == 0 || i == self.n - 1)
    }

    /// Flat index of the node `flat` moved by `offset` (grid steps), if inside.
    pub fn offset(&self, flat: usize, offset: &[i64]) -> Option<usize> {
        let idx = self.multi_index(flat);
        let mut out = 0usize;
        for a in 0..self.d {
            let j = idx[a] as i64 + offset[a];
            if j < 0 || j >= self.n as i64 {
                return None;
            }
            out = out * self.n + j as usize;
        }
        Some(out)
    }

    /// Nearest node to `x`, if `x` lies in the box.
    pub fn nearest(&self, x: &[f64]) -> Option<usize> {
        let mut idx = [0usize; 3];
        for a in 0..self.d {
            let s = (x[a] + self.radius) / self.h();
            if !(-1e-9..=(self.n - 1) as f64 + 1e-9).contains(&s) {
                return None;
            }
            idx[a] = s.round().clamp(0.0, (self.n - 1) as f64) as usize;
        }
        Some(self.flat(&idx[..self.d]))
    }

    pub fn sample(&self, f: impl Fn(&[f64]) -> f64) -> GridFn {
        let values = (0..self.len()).map(|k| f(&self.point(k)[..self.d])).collect();
        GridFn { grid: *self, values }
    }

    pub fn try_sample<E>(&self, f: impl Fn(&[f64]) -> std::result::Result<f64, E>) -> std::result::Result<GridFn, E> {
        let values = (0..self.len())
            .map(|k| f(&self.point(k)[..self.d]))
            .collect::<std::result::Result<Vec<_>, E>>()?;
        Ok(GridFn { grid: *self, values })
    }
}

/// A function sampled at every node of a [`SpaceGrid`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridFn {
    pub grid: SpaceGrid,
    pub values: Vec<f64>,
}

impl GridFn {
    pub fn new(grid: SpaceGrid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::InvalidArgument(format!(
                "expected {} values, got {}",
                grid.len(),
                values.len()
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument("grid values must be finite".into()));
        }
        Ok(GridFn { grid, values })
    }

    pub fn zeros(grid: SpaceGrid) -> Self {
        GridFn { grid, values: vec![0.0; grid.len()] }
    }

    pub fn constant(grid: SpaceGrid, c: f64) -> Self {
        GridFn { grid, values: vec![c; grid.len()] }
    }

    pub fn sup(&self) -> f64 {
        self.values.iter().fold(0.0f64, |m, v| m.max(v.abs()))
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> GridFn {
        GridFn { grid: self.grid, values: self.values.iter().map(|v| f(*v)).collect() }
    }

    pub fn zip_map(&self, other: &GridFn, f: impl Fn(f64, f64) -> f64) -> GridFn {
        debug_assert_eq!(self.grid, other.grid);
        GridFn {
            grid: self.grid,
            values: self.values.iter().zip(&other.values).map(|(a, b)| f(*a, *b)).collect(),
        }
    }

    pub fn scaled(&self, s: f64) -> GridFn {
        self.map(|v| v * s)
    }

    /// `sup |self - other|`.
    pub fn dist_sup(&self, other: &GridFn) -> f64 {
        self.values
            .iter()
            .zip(&other.values)
            .fold(0.0f64, |m, (a, b)| m.max((a - b).abs()))
    }

    /// Multilinear interpolation at `x`; `None` outside the box.
    pub fn interpolate(&self, x: &[f64]) -> Option<f64> {
        let g = &self.grid;
        let h = g.h();
        let mut base = [0usize; 3];
        let mut frac = [0.0; 3];
        for a in 0..g.d {
            let s = (x[a] + g.radius) / h;
            if !(-1e-12..=(g.n - 1) as f64 + 1e-12).contains(&s) {
                return None;
            }
            let s = s.clamp(0.0, (g.n - 1) as f64);
            let i = (s.floor() as usize).min(g.n - 2);
            base[a] = i;
            frac[a] = s - i as f64;
        }
        let mut acc = 0.0;
        for corner in 0..(1usize << g.d) {
            let mut w = 1.0;
            let mut idx = [0usize; 3];
            for a in 0..g.d {
                let bit = (corner >> a) & 1;
                idx[a] = base[a] + bit;
                w *= if bit == 1 { frac[a] } else { 1.0 - frac[a] };
            }
            if w != 0.0 {
                acc += w * self.values[g.flat(&idx[..g.d])];
            }
        }
        Some(acc)
    }
}

/// Time-sliced grid function with an optional stored generalized time
/// derivative.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpaceTimeFn {
    pub grid: SpaceGrid,
    pub times: Vec<f64>,
    pub slices: Vec<GridFn>,
    pub dt_slices: Option<Vec<GridFn>>,
}

impl SpaceTimeFn {
    pub fn new(times: Vec<f64>, slices: Vec<GridFn>, dt_slices: Option<Vec<GridFn>>) -> Result<Self> {
        if times.is_empty() || times.len() != slices.len() {
            return Err(Error::InvalidArgument("one slice per time required".into()));
        }
        if times.windows(2).any(|w| !(w[0] < w[1])) || times.iter().any(|t| !t.is_finite()) {
            return Err(Error::InvalidArgument("times must be finite and increasing".into()));
        }
        let grid = slices[0].grid;
        if slices.iter().any(|s| s.grid != grid) {
            return Err(Error::InvalidArgument("slices must share one grid".into()));
        }
        if let Some(dt) = &dt_slices {
            if dt.len() != times.len() || dt.iter().any(|s| s.grid != grid) {
                return Err(Error::InvalidArgument("dt_slices must match slices".into()));
            }
        }
        Ok(SpaceTimeFn { grid, times, slices, dt_slices })
    }

    /// Samples `u(t, x)` and, if given, `u_t(t, x)` at the listed times.
    pub fn sample(
        grid: SpaceGrid,
        times: &[f64],
        u: impl Fn(f64, &[f64]) -> f64,
        ut: Option<&dyn Fn(f64, &[f64]) -> f64>,
    ) -> Self {
        let slices = times.iter().map(|&t| grid.sample(|x| u(t, x))).collect();
        let dt_slices = ut.map(|g| times.iter().map(|&t| grid.sample(|x| g(t, x))).collect());
        SpaceTimeFn { grid, times: times.to_vec(), slices, dt_slices }
    }

    /// Index of a stored time equal to `t` up to a relative 1e-9.
    pub fn time_index(&self, t: f64) -> Option<usize> {
        let scale = self.times.iter().fold(1.0f64, |m, v| m.max(v.abs()));
        self.times.iter().position(|&s| (s - t).abs() <= 1e-9 * scale)
    }

    pub fn sup(&self) -> f64 {
        self.slices.iter().fold(0.0f64, |m, s| m.max(s.sup()))
    }

    pub fn dist_sup(&self, other: &SpaceTimeFn) -> f64 {
        self.slices
            .iter()
            .zip(&other.slices)
            .fold(0.0f64, |m, (a, b)| m.max(a.dist_sup(b)))
    }

    /// Largest |Δ| between the stored `dt_slices` and the finite difference of
    /// consecutive slices, measured by the trapezoid rule of the
    /// fundamental-theorem identity `u(t) - u(s) = ∫ u_t`.
    pub fn fundamental_theorem_residual(&self) -> Option<f64> {
        let dt = self.dt_slices.as_ref()?;
        let mut worst = 0.0f64;
        for k in 0..self.times.len().saturating_sub(1) {
            let tau = self.times[k + 1] - self.times[k];
            for i in 0..self.grid.len() {
                let lhs = self.slices[k + 1].values[i] - self.slices[k].values[i];
                let rhs = 0.5 * tau * (dt[k].values[i] + dt[k + 1].values[i]);
                worst = worst.max((lhs - rhs).abs());
            }
        }
        Some(worst)
    }
}
