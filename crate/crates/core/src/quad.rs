//! Gauss–Legendre quadrature.

use std::f64::consts::PI;

/// Nodes and weights on [-1, 1], by Newton iteration on the Legendre
/// recurrence.
pub fn gauss_legendre(order: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(order >= 1);
    let mut nodes = vec![0.0; order];
    let mut weights = vec![0.0; order];
    let n = order as f64;
    for i in 0..order.div_ceil(2) {
        let mut x = (PI * (i as f64 + 0.75) / (n + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, x);
            for k in 2..=order {
                let k = k as f64;
                let p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
                p0 = p1;
                p1 = p2;
            }
            dp = n * (x * p1 - p0) / (x * x - 1.0);
            let dx = p1 / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        nodes[i] = -x;
        nodes[order - 1 - i] = x;
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        weights[i] = w;
        weights[order - 1 - i] = w;
    }
    (nodes, weights)
}

/// Composite rule: `[a, b]` cut at every breakpoint inside it, each piece split
/// into `n_sub` cells with an `order`-point rule per cell.
#[derive(Debug, Clone)]
pub struct Composite {
    nodes: Vec<f64>,
    weights: Vec<f64>,
    n_sub: usize,
}

impl Composite {
    pub fn new(order: usize, n_sub: usize) -> Self {
        let (nodes, weights) = gauss_legendre(order);
        Composite { nodes, weights, n_sub: n_sub.max(1) }
    }

    /// Points and weights of the rule on `[a, b]` (`a < b`).
    pub fn rule(&self, a: f64, b: f64, breakpoints: &[f64]) -> Vec<(f64, f64)> {
        let mut cuts = vec![a];
        cuts.extend(breakpoints.iter().copied().filter(|&p| p > a && p < b));
        cuts.push(b);
        let mut out = Vec::new();
        for w in cuts.windows(2) {
            let cell = (w[1] - w[0]) / self.n_sub as f64;
            for c in 0..self.n_sub {
                let lo = w[0] + cell * c as f64;
                let mid = lo + 0.5 * cell;
                for (x, wt) in self.nodes.iter().zip(&self.weights) {
                    out.push((mid + 0.5 * cell * x, 0.5 * cell * wt));
                }
            }
        }
        out
    }

    pub fn integrate<E>(
        &self,
        a: f64,
        b: f64,
        breakpoints: &[f64],
        mut f: impl FnMut(f64) -> Result<f64, E>,
    ) -> Result<f64, E> {
        let mut s = 0.0;
        for (x, w) in self.rule(a, b, breakpoints) {
            s += w * f(x)?;
        }
        Ok(s)
    }
}

/// Midpoint cells on `[a, b]`, cut at breakpoints, no wider than `max_step`.
/// Returns `(midpoint, width)` pairs in increasing order.
pub fn midpoint_cells(a: f64, b: f64, breakpoints: &[f64], max_step: f64) -> Vec<(f64, f64)> {
    let mut cuts = vec![a];
    cuts.extend(breakpoints.iter().copied().filter(|&p| p > a && p < b));
    cuts.push(b);
    let mut out = Vec::new();
    for w in cuts.windows(2) {
        let len = w[1] - w[0];
        let n = ((len / max_step) - 1e-9).ceil().max(1.0) as usize;
        let cell = len / n as f64;
        for k in 0..n {
            out.push((w[0] + cell * (k as f64 + 0.5), cell));
        }
    }
    out
}

/// Edges of the cells of [`midpoint_cells`], with every cut point and both
/// ends represented exactly.
pub fn cell_edges(a: f64, b: f64, breakpoints: &[f64], max_step: f64) -> Vec<f64> {
    let mut cuts = vec![a];
    cuts.extend(breakpoints.iter().copied().filter(|&p| p > a && p < b));
    cuts.push(b);
    let mut out = vec![a];
    for w in cuts.windows(2) {
        let len = w[1] - w[0];
        let n = ((len / max_step) - 1e-9).ceil().max(1.0) as usize;
        let cell = len / n as f64;
        for k in 1..n {
            out.push(w[0] + cell * k as f64);
        }
        out.push(w[1]);
    }
    out
}
