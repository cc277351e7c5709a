//! Finite-difference operator assembly and the backward θ-scheme.

use std::collections::HashMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::sparse::{bicgstab, Csr, Ilu0};
use crate::coeffspec::PointCoeffs;
use crate::error::{Error, Result};
use crate::holder::{GridFn, SpaceGrid};
use crate::quad::cell_edges;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum BoundaryMode {
    /// Boundary nodes keep the final value `g`.
    #[default]
    DirichletFinal,
    /// Boundary nodes are 0 before `S`.
    DirichletZero,
    /// Boundary nodes follow `u_t − cu = f` (all derivatives dropped).
    ZerothOrder,
}

/// Drift discretisation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum Blend {
    /// Upwind weight `max(0, 1 − 1/Pe)`, `Pe = |bᵢ|h/(2aᵢᵢ)`.
    #[default]
    Auto,
    Upwind,
    Centered,
}

impl Blend {
    pub fn weight(self, peclet: f64) -> f64 {
        match self {
            Blend::Auto => (1.0 - 1.0 / peclet).max(0.0),
            Blend::Upwind => 1.0,
            Blend::Centered => 0.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Scheme {
    /// Implicit weight: 1/2 is Crank–Nicolson, 1 backward Euler.
    pub theta: f64,
    pub blend: Blend,
    /// Relative residual for each linear solve.
    pub linear_tol: f64,
    pub max_linear_iter: usize,
}

impl Default for Scheme {
    fn default() -> Self {
        Scheme { theta: 0.5, blend: Blend::Auto, linear_tol: 1e-10, max_linear_iter: 2000 }
    }
}

impl Scheme {
    /// Backward Euler with full upwinding.
    pub fn monotone() -> Self {
        Scheme { theta: 1.0, blend: Blend::Upwind, ..Scheme::default() }
    }
}

/// Stencil rows of `a^{ij}D_{ij} + bⁱD_i − c` at interior nodes; boundary rows
/// are empty, or `−c` in [`BoundaryMode::ZerothOrder`].
pub fn assemble(
    grid: &SpaceGrid,
    coeffs: &(dyn Fn(&[f64]) -> Result<PointCoeffs> + Sync),
    blend: Blend,
    boundary: BoundaryMode,
) -> Result<Csr> {
    let d = grid.d;
    let h = grid.h();
    let h2 = h * h;
    let rows: Result<Vec<Vec<(usize, f64)>>> = (0..grid.len())
        .into_par_iter()
        .map(|node| {
            let p = grid.point(node);
            let k = coeffs(&p[..d])?;
            if grid.is_boundary(node) {
                return Ok(match boundary {
                    BoundaryMode::ZerothOrder => vec![(node, -k.c)],
                    _ => Vec::new(),
                });
            }
            let mut row = vec![(node, -k.c)];
            let nb = |off: [i64; 3]| grid.offset(node, &off[..d]).expect("interior node");
            for i in 0..d {
                let mut e = [0i64; 3];
                e[i] = 1;
                let plus = nb(e);
                e[i] = -1;
                let minus = nb(e);
                let aii = k.a.m[i][i];
                let b = k.b[i];
                let mut wp = aii / h2;
                let mut wm = aii / h2;
                if b != 0.0 {
                    let pe = if aii > 0.0 { b.abs() * h / (2.0 * aii) } else { f64::INFINITY };
                    let w = blend.weight(pe);
                    let cen = (1.0 - w) * b / (2.0 * h);
                    let up = w * b.abs() / h;
                    wp += cen;
                    wm -= cen;
                    if b > 0.0 {
                        wp += up;
                    } else {
                        wm += up;
                    }
                    if blend != Blend::Centered {
                        // Zero up to roundoff when the blend sits exactly at the bound.
                        wp = wp.max(0.0);
                        wm = wm.max(0.0);
                    }
                }
                row.push((plus, wp));
                row.push((minus, wm));
                row.push((node, -(wp + wm)));
                for j in i + 1..d {
                    let aij = k.a.m[i][j];
                    if aij == 0.0 {
                        continue;
                    }
                    let w = 2.0 * aij / (4.0 * h2);
                    for (si, sj, s) in [(1, 1, 1.0), (1, -1, -1.0), (-1, 1, -1.0), (-1, -1, 1.0)] {
                        let mut e = [0i64; 3];
                        e[i] = si;
                        e[j] = sj;
                        row.push((nb(e), s * w));
                    }
                }
            }
            Ok(row)
        })
        .collect();
    Ok(Csr::from_rows(rows?))
}

/// `L_h u` as a grid function.
pub fn apply_operator(op: &Csr, u: &GridFn) -> GridFn {
    GridFn { grid: u.grid, values: op.matvec(&u.values) }
}

/// Time nodes on `[t0, s]`: boundaries of the midpoint cells of width at most
/// `(s − t0)/n`, cut at `breakpoints`, ending with `s`.
pub fn time_nodes(t0: f64, s: f64, breakpoints: &[f64], n: usize) -> Vec<f64> {
    cell_edges(t0, s, breakpoints, (s - t0) / n as f64)
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct MarchStats {
    pub steps: usize,
    pub linear_iterations: usize,
    pub worst_linear_residual: f64,
}

pub(crate) struct March<'a> {
    pub grid: SpaceGrid,
    pub times: &'a [f64],
    pub final_values: &'a GridFn,
    pub boundary: BoundaryMode,
    pub scheme: Scheme,
    /// `L_h` at a time.
    pub operator: &'a dyn Fn(f64) -> Result<Csr>,
    /// Right-hand side at a time; boundary entries are ignored in Dirichlet
    /// modes.
    pub source: &'a dyn Fn(f64) -> Result<Vec<f64>>,
    /// Whether `operator` is the same at every time.
    pub frozen_operator: bool,
}

/// Backward θ-scheme from `times.last()` with operator and source taken at
/// each step's midpoint:
/// `(I − θΔL)uᵏ = (I + (1−θ)ΔL)uᵏ⁺¹ − Δ f`. Returns slices in time order.
pub(crate) fn march(m: &March) -> Result<(Vec<GridFn>, MarchStats)> {
    let n = m.grid.len();
    let boundary: Vec<usize> = (0..n).filter(|&k| m.grid.is_boundary(k)).collect();
    let mut stats = MarchStats::default();
    let mut cache: HashMap<u64, (Csr, Csr, Ilu0)> = HashMap::new();
    let fixed_op = if m.frozen_operator { Some((m.operator)(m.times[0])?) } else { None };
    let mut slices = vec![m.final_values.clone()];
    for k in (0..m.times.len() - 1).rev() {
        let (t_lo, t_hi) = (m.times[k], m.times[k + 1]);
        let dt = t_hi - t_lo;
        let mid = 0.5 * (t_lo + t_hi);
        let built;
        let (implicit, explicit, pre) = match &fixed_op {
            Some(op) => {
                let entry = cache.entry(dt.to_bits());
                let e = match entry {
                    std::collections::hash_map::Entry::Occupied(o) => o.into_mut(),
                    std::collections::hash_map::Entry::Vacant(v) => {
                        let imp = op.shifted_identity(-m.scheme.theta * dt);
                        let exp = op.shifted_identity((1.0 - m.scheme.theta) * dt);
                        let pre = Ilu0::new(&imp)?;
                        v.insert((imp, exp, pre))
                    }
                };
                (&e.0, &e.1, &e.2)
            }
            None => {
                let op = (m.operator)(mid)?;
                let imp = op.shifted_identity(-m.scheme.theta * dt);
                let exp = op.shifted_identity((1.0 - m.scheme.theta) * dt);
                let pre = Ilu0::new(&imp)?;
                built = (imp, exp, pre);
                (&built.0, &built.1, &built.2)
            }
        };
        let next = slices.last().expect("slice");
        let f = (m.source)(mid)?;
        let mut rhs = explicit.matvec(&next.values);
        for i in 0..n {
            rhs[i] -= dt * f[i];
        }
        match m.boundary {
            BoundaryMode::DirichletFinal => {
                for &b in &boundary {
                    rhs[b] = next.values[b];
                }
            }
            BoundaryMode::DirichletZero => {
                for &b in &boundary {
                    rhs[b] = 0.0;
                }
            }
            BoundaryMode::ZerothOrder => {}
        }
        let mut x = next.values.clone();
        let st = bicgstab(implicit, pre, &rhs, &mut x, m.scheme.linear_tol, m.scheme.max_linear_iter)?;
        stats.steps += 1;
        stats.linear_iterations += st.iterations;
        stats.worst_linear_residual = stats.worst_linear_residual.max(st.relative_residual);
        if x.iter().any(|v| !v.is_finite()) {
            return Err(Error::Unbounded(format!("non-finite values at t = {t_lo}")));
        }
        slices.push(GridFn { grid: m.grid, values: x });
    }
    slices.reverse();
    Ok((slices, stats))
}

/// `u_t = f − L_h u` with boundary rows following the boundary mode.
pub(crate) fn time_derivative(op: &Csr, f: &[f64], u: &GridFn, boundary: BoundaryMode) -> GridFn {
    let lu = op.matvec(&u.values);
    let values = (0..u.values.len())
        .map(|i| {
            if boundary != BoundaryMode::ZerothOrder && u.grid.is_boundary(i) {
                0.0
            } else {
                f[i] - lu[i]
            }
        })
        .collect();
    GridFn { grid: u.grid, values }
}
