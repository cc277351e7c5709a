use serde::{Deserialize, Serialize};

use super::cauchy::{operator_at, solve_prepared, source_at};
use super::scheme::{BoundaryMode, Scheme};
use super::sparse::{bicgstab, Ilu0};
use crate::coeffspec::OperatorSpec;
use crate::error::{Error, Result};
use crate::holder::{GridFn, SpaceGrid};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EllipticOpts {
    /// Stationarity threshold on `‖u(t) − u(t + 1)‖₀`.
    pub tol_stat: f64,
    /// Longest backward march of the parabolic route.
    pub max_horizon: f64,
    /// Time steps per unit time in the parabolic route.
    pub steps_per_unit: usize,
    /// Whether to run the parabolic route at all.
    pub parabolic_route: bool,
}

impl Default for EllipticOpts {
    fn default() -> Self {
        EllipticOpts { tol_stat: 1e-8, max_horizon: 200.0, steps_per_unit: 16, parabolic_route: true }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EllipticSolution {
    /// Direct sparse solve of `L_h u = f`.
    pub direct: GridFn,
    /// Stationary limit of the backward march, with the horizon it took.
    pub parabolic: Option<(GridFn, f64)>,
    pub linear_iterations: usize,
}

fn check_time_independent(spec: &OperatorSpec) -> Result<()> {
    if spec.is_time_independent() {
        return Ok(());
    }
    // Expressions may mention t without depending on it; sample to decide.
    let (t0, t1) = spec.window();
    let probe = [0.37, -0.21, 0.55];
    let x = &probe[..spec.dim()];
    let first = spec.eval_all(t0, x)?;
    for k in 1..=8 {
        let t = t0 + (t1 - t0) * k as f64 / 8.0;
        if spec.eval_all(t, x)? != first {
            return Err(Error::InvalidArgument("elliptic problems need time-independent data".into()));
        }
    }
    Ok(())
}

/// `a^{ij}D_{ij}u + bⁱD_iu − cu = f` on the box, with boundary nodes obeying
/// `−cu = f`. The direct route is a sparse solve; the parabolic route marches
/// `u_t + Lu = f` backward from `u = 0` one unit of time at a time until
/// consecutive unit-spaced slices differ by less than `tol_stat`.
pub fn solve_elliptic(spec: &OperatorSpec, grid: &SpaceGrid, opts: &EllipticOpts) -> Result<EllipticSolution> {
    if grid.d != spec.dim() {
        return Err(Error::InvalidArgument("grid and operator dimensions differ".into()));
    }
    check_time_independent(spec)?;
    let t = spec.window().0;
    let scheme = Scheme { linear_tol: 1e-12, max_linear_iter: 20_000, ..Scheme::default() };
    let mode = BoundaryMode::ZerothOrder;
    let op = operator_at(spec, grid, &scheme, mode, t)?;
    let f = source_at(spec, None, grid, t)?;
    let neg = op.lin_comb(-1.0, &op, 0.0);
    let rhs: Vec<f64> = f.iter().map(|v| -v).collect();
    let pre = Ilu0::new(&neg)?;
    let mut x = vec![0.0; grid.len()];
    let stats = bicgstab(&neg, &pre, &rhs, &mut x, scheme.linear_tol, scheme.max_linear_iter)?;
    let direct = GridFn::new(*grid, x)?;

    let parabolic = if opts.parabolic_route {
        let unit = spec.clone().with_window((0.0, 1.0))?.with_breakpoints(Vec::new());
        let be = Scheme { theta: 1.0, ..scheme };
        let mut g = GridFn::zeros(*grid);
        let mut horizon = 0.0;
        loop {
            let (u, _) = solve_prepared(&unit, &g, opts.steps_per_unit.max(2), mode, &be, None)?;
            let next = u.slices[0].clone();
            horizon += 1.0;
            let change = next.dist_sup(&g);
            g = next;
            if change < opts.tol_stat {
                break Some((g, horizon));
            }
            if horizon >= opts.max_horizon {
                return Err(Error::NotStationary { horizon, change });
            }
        }
    } else {
        None
    };
    Ok(EllipticSolution { direct, parabolic, linear_iterations: stats.iterations })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::parse_expr;

    #[test]
    fn constants() {
        let g = SpaceGrid::new(2, 1.0, 17).unwrap();
        let s = OperatorSpec::constant(2, &[1.0, 1.0], &[0.0, 0.0], 1.0, -1.0, 0.5, (0.0, 1.0)).unwrap();
        let sol = solve_elliptic(&s, &g, &EllipticOpts::default()).unwrap();
        assert!(sol.direct.values.iter().all(|v| (v - 1.0).abs() < 1e-10));
        let (par, horizon) = sol.parabolic.unwrap();
        assert!(par.dist_sup(&sol.direct) < 1e-7);
        assert!(horizon > 5.0);
    }

    #[test]
    fn ornstein_uhlenbeck_manufactured() {
        // u = exp(−x²/2): u'' − x u' − u = (2x² − 2) u.
        let g = SpaceGrid::new(1, 8.0, 257).unwrap();
        let s = OperatorSpec::constant(1, &[1.0], &[0.0], 1.0, 0.0, 0.5, (0.0, 1.0))
            .unwrap()
            .with_b(vec![parse_expr("-x1").unwrap()])
            .with_f(parse_expr("(2*x1^2 - 2)*exp(-x1^2/2)").unwrap());
        let sol = solve_elliptic(&s, &g, &EllipticOpts::default()).unwrap();
        let exact = g.sample(|x| (-x[0] * x[0] / 2.0).exp());
        assert!(sol.direct.dist_sup(&exact) < 0.01, "{}", sol.direct.dist_sup(&exact));
        let (par, _) = sol.parabolic.unwrap();
        assert!(par.dist_sup(&sol.direct) < 1e-6);
    }

    #[test]
    fn time_dependence_is_rejected() {
        let g = SpaceGrid::new(1, 1.0, 9).unwrap();
        let s = OperatorSpec::constant(1, &[1.0], &[0.0], 1.0, 0.0, 0.5, (0.0, 1.0))
            .unwrap()
            .with_f(parse_expr("t").unwrap());
        assert!(solve_elliptic(&s, &g, &EllipticOpts::default()).is_err());
        let s = s.with_f(parse_expr("t - t + 1").unwrap());
        assert!(solve_elliptic(&s, &g, &EllipticOpts { parabolic_route: false, ..EllipticOpts::default() }).is_ok());
    }
}
