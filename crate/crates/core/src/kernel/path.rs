use serde::{Deserialize, Serialize};

use crate::coeffspec::OperatorSpec;
use crate::error::{Error, Result};
use crate::expr::ExprNode;
use crate::linalg::SmallMat;
use crate::quad::Composite;

/// A diffusion matrix `a(t)` depending on time only.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimeMatrixPath {
    d: usize,
    entries: Vec<Vec<ExprNode>>,
    breakpoints: Vec<f64>,
}

impl TimeMatrixPath {
    /// `a` must be square of size 1..=3 and free of `x`; an asymmetric input is
    /// replaced by its symmetric part.
    pub fn new(a: Vec<Vec<ExprNode>>, mut breakpoints: Vec<f64>) -> Result<Self> {
        let d = a.len();
        if !(1..=3).contains(&d) || a.iter().any(|row| row.len() != d) {
            return Err(Error::InvalidArgument("diffusion path must be a square matrix of size 1..=3".into()));
        }
        if a.iter().flatten().any(ExprNode::depends_on_x) {
            return Err(Error::InvalidArgument("diffusion path may depend on t only".into()));
        }
        if breakpoints.iter().any(|b| !b.is_finite()) {
            return Err(Error::InvalidArgument("breakpoints must be finite".into()));
        }
        breakpoints.sort_by(f64::total_cmp);
        breakpoints.dedup();
        let mut entries = a.clone();
        for i in 0..d {
            for j in 0..d {
                if i != j && a[i][j] != a[j][i] {
                    entries[i][j] = (a[i][j].clone() + a[j][i].clone()) * ExprNode::num(0.5);
                }
            }
        }
        Ok(TimeMatrixPath { d, entries, breakpoints })
    }

    pub fn constant(m: &SmallMat) -> Self {
        let s = m.symmetrized();
        let entries = (0..s.d).map(|i| (0..s.d).map(|j| ExprNode::num(s.m[i][j])).collect()).collect();
        TimeMatrixPath { d: s.d, entries, breakpoints: Vec::new() }
    }

    pub fn identity(d: usize) -> Self {
        Self::constant(&SmallMat::identity(d))
    }

    /// The diffusion of `spec`, which must not depend on `x`.
    pub fn from_spec(spec: &OperatorSpec) -> Result<Self> {
        let d = spec.dim();
        let a = (0..d).map(|i| (0..d).map(|j| spec.a(i, j).clone()).collect()).collect();
        Self::new(a, spec.breakpoints().to_vec())
    }

    /// `K·a(t)` for a scalar `K`.
    pub fn scaled(&self, k: f64) -> Self {
        let entries = self
            .entries
            .iter()
            .map(|row| row.iter().map(|e| ExprNode::num(k) * e.clone()).collect())
            .collect();
        TimeMatrixPath { d: self.d, entries, breakpoints: self.breakpoints.clone() }
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn breakpoints(&self) -> &[f64] {
        &self.breakpoints
    }

    pub fn entry(&self, i: usize, j: usize) -> &ExprNode {
        &self.entries[i][j]
    }

    pub fn eval(&self, t: f64) -> Result<SmallMat> {
        let mut m = SmallMat::zeros(self.d);
        for i in 0..self.d {
            for j in 0..self.d {
                m.m[i][j] = self.entries[i][j].eval(t, &[]).map_err(|source| Error::Eval {
                    field: format!("a{}{}", i + 1, j + 1),
                    t,
                    x: Vec::new(),
                    source,
                })?;
            }
        }
        Ok(m)
    }

    /// Smallest and largest eigenvalue of `a(t)` over `n` samples in each
    /// piece between breakpoints of `[t0, t1]`.
    pub fn ellipticity(&self, t0: f64, t1: f64, n: usize) -> Result<(f64, f64)> {
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for (t, _) in crate::quad::midpoint_cells(t0, t1, &self.breakpoints, (t1 - t0) / n.max(1) as f64) {
            let ev = self.eval(t)?.sym_eigenvalues();
            lo = lo.min(ev[0]);
            hi = hi.max(ev[ev.len() - 1]);
        }
        Ok((lo, hi))
    }
}

/// `A = ∫ₛᵗ a`, its inverse `B` and `det B`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GaussParams {
    pub a: SmallMat,
    pub b: SmallMat,
    pub det_b: f64,
    pub s: f64,
    pub t: f64,
}

impl GaussParams {
    /// Parameters for an already accumulated `A` over `(s, t)`.
    pub fn from_accumulated(a: SmallMat, s: f64, t: f64) -> Result<Self> {
        if !(t > s) {
            return Err(Error::InvalidArgument(format!("need t > s, got s={s}, t={t}")));
        }
        let b = a
            .inverse()
            .ok_or_else(|| Error::Singular(format!("accumulated diffusion over [{s}, {t}] is singular")))?;
        let det_b = b.det();
        if !(det_b > 0.0) {
            return Err(Error::Singular(format!(
                "accumulated diffusion over [{s}, {t}] is not positive definite"
            )));
        }
        Ok(GaussParams { a, b, det_b, s, t })
    }

    /// Largest eigenvalue of `A`; the kernel's variance along its worst
    /// direction is twice this.
    pub fn a_max(&self) -> f64 {
        let ev = self.a.sym_eigenvalues();
        ev[ev.len() - 1]
    }
}

/// Quadrature used by [`accumulate_a`]: 8-point Gauss–Legendre on 16 cells per
/// breakpoint-free piece.
pub fn default_rule() -> Composite {
    Composite::new(8, 16)
}

/// Entrywise `∫ₛᵗ a(r) dr`.
pub fn integrate_path(path: &TimeMatrixPath, s: f64, t: f64, rule: &Composite) -> Result<SmallMat> {
    let mut acc = SmallMat::zeros(path.d);
    for (r, w) in rule.rule(s, t, &path.breakpoints) {
        acc = acc.add(&path.eval(r)?.scale(w));
    }
    Ok(acc)
}

pub fn accumulate_a(path: &TimeMatrixPath, s: f64, t: f64) -> Result<GaussParams> {
    if !(t > s) {
        return Err(Error::InvalidArgument(format!("need t > s, got s={s}, t={t}")));
    }
    let a = integrate_path(path, s, t, &default_rule())?;
    GaussParams::from_accumulated(a, s, t)
}

/// `p(s,t,x) = (4π)^{−d/2} (det B)^{1/2} exp(−(Bx,x)/4)` for `t > s`, else 0.
pub fn gauss_kernel(params: &GaussParams, x: &[f64]) -> f64 {
    if params.t <= params.s {
        return 0.0;
    }
    let d = params.a.d as i32;
    (4.0 * std::f64::consts::PI).powf(-0.5 * d as f64) * params.det_b.sqrt() * (-0.25 * params.b.quad_form(x)).exp()
}
