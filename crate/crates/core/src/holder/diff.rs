use super::grid::GridFn;

/// Applies `op` to every grid line along `axis`.
fn along_axis(u: &GridFn, axis: usize, op: impl Fn(&[f64], f64, &mut [f64])) -> GridFn {
    let g = u.grid;
    let n = g.n;
    let stride = g.stride(axis);
    let h = g.h();
    let mut out = vec![0.0; g.len()];
    let mut line = vec![0.0; n];
    let mut res = vec![0.0; n];
    for start in 0..g.len() {
        if g.multi_index(start)[axis] != 0 {
            continue;
        }
        for (k, v) in line.iter_mut().enumerate() {
            *v = u.values[start + k * stride];
        }
        op(&line, h, &mut res);
        for (k, v) in res.iter().enumerate() {
            out[start + k * stride] = *v;
        }
    }
    GridFn { grid: g, values: out }
}

fn first_derivative(line: &[f64], h: f64, out: &mut [f64]) {
    let n = line.len();
    out[0] = (-3.0 * line[0] + 4.0 * line[1] - line[2]) / (2.0 * h);
    out[n - 1] = (3.0 * line[n - 1] - 4.0 * line[n - 2] + line[n - 3]) / (2.0 * h);
    for k in 1..n - 1 {
        out[k] = (line[k + 1] - line[k - 1]) / (2.0 * h);
    }
}

fn second_derivative(line: &[f64], h: f64, out: &mut [f64]) {
    let n = line.len();
    let h2 = h * h;
    out[0] = (2.0 * line[0] - 5.0 * line[1] + 4.0 * line[2] - line[3]) / h2;
    out[n - 1] = (2.0 * line[n - 1] - 5.0 * line[n - 2] + 4.0 * line[n - 3] - line[n - 4]) / h2;
    for k in 1..n - 1 {
        out[k] = (line[k + 1] - 2.0 * line[k] + line[k - 1]) / h2;
    }
}

pub fn fd_partial(u: &GridFn, axis: usize) -> GridFn {
    along_axis(u, axis, first_derivative)
}

/// Central differences inside, one-sided second order on the boundary.
pub fn fd_gradient(u: &GridFn) -> Vec<GridFn> {
    (0..u.grid.d).map(|a| fd_partial(u, a)).collect()
}

/// Second derivatives; mixed entries average the two nested orders so the
/// result is symmetric.
pub fn fd_hessian(u: &GridFn) -> Vec<Vec<GridFn>> {
    let d = u.grid.d;
    let grad = fd_gradient(u);
    let mut out: Vec<Vec<GridFn>> = (0..d).map(|_| Vec::with_capacity(d)).collect();
    for i in 0..d {
        for j in 0..d {
            let entry = if i == j {
                along_axis(u, i, second_derivative)
            } else if j < i {
                out[j][i].clone()
            } else {
                let dij = fd_partial(&grad[j], i);
                let dji = fd_partial(&grad[i], j);
                dij.zip_map(&dji, |a, b| 0.5 * (a + b))
            };
            out[i].push(entry);
        }
    }
    out
}

/// Pointwise Euclidean norm of a family of grid functions.
pub fn pointwise_norm(parts: &[&GridFn]) -> GridFn {
    let g = parts[0].grid;
    let values = (0..g.len())
        .map(|k| parts.iter().map(|p| p.values[k] * p.values[k]).sum::<f64>().sqrt())
        .collect();
    GridFn { grid: g, values }
}

pub fn trace(hess: &[Vec<GridFn>]) -> GridFn {
    let mut out = hess[0][0].clone();
    for (i, row) in hess.iter().enumerate().skip(1) {
        out = out.zip_map(&row[i], |a, b| a + b);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::holder::grid::SpaceGrid;
    use proptest::prelude::*;

    #[test]
    fn gradient_of_linear_is_exact() {
        let g = SpaceGrid::new(2, 1.0, 9).unwrap();
        let u = g.sample(|x| 3.0 + x[0] - 2.0 * x[1]);
        let du = fd_gradient(&u);
        assert!(du[0].values.iter().all(|v| (v - 1.0).abs() < 1e-13));
        assert!(du[1].values.iter().all(|v| (v + 2.0).abs() < 1e-13));
        let c = fd_gradient(&GridFn::constant(g, 7.0));
        assert!(c.iter().all(|p| p.sup() == 0.0));
    }

    #[test]
    fn gradient_of_sine_is_second_order() {
        let g = SpaceGrid::new(1, 2.0, 81).unwrap();
        let h = g.h();
        assert!((h - 0.05).abs() < 1e-15);
        let du = fd_gradient(&g.sample(|x| x[0].sin()));
        let err = (0..g.len())
            .map(|k| (du[0].values[k] - g.point(k)[0].cos()).abs())
            .fold(0.0, f64::max);
        // Interior truncation error is h²/6·|u'''|; the one-sided end stencil
        // carries h²/3·|u'''|.
        assert!(err <= h * h / 3.0 + 1e-12, "{err}");
        let interior = (1..g.len() - 1)
            .map(|k| (du[0].values[k] - g.point(k)[0].cos()).abs())
            .fold(0.0, f64::max);
        assert!(interior <= h * h / 6.0 + 1e-12, "{interior}");
    }

    #[test]
    fn hessian_of_quadratics() {
        let g = SpaceGrid::new(2, 1.0, 7).unwrap();
        let h1 = fd_hessian(&g.sample(|x| x[0] * x[0]));
        assert!(h1[0][0].values.iter().all(|v| (v - 2.0).abs() < 1e-11));
        assert!(h1[0][1].sup() < 1e-11 && h1[1][1].sup() < 1e-11);
        let h2 = fd_hessian(&g.sample(|x| x[0] * x[1]));
        assert!(h2[0][1].values.iter().all(|v| (v - 1.0).abs() < 1e-12));
        assert_eq!(h2[0][1], h2[1][0]);
    }

    #[test]
    fn hessian_of_exponential_converges_at_second_order() {
        let err = |n: usize| {
            let g = SpaceGrid::new(2, 1.0, n).unwrap();
            let hs = fd_hessian(&g.sample(|x| (x[0] + x[1]).exp()));
            let mut worst: f64 = 0.0;
            for k in 0..g.len() {
                let p = g.point(k);
                let exact = (p[0] + p[1]).exp();
                for row in &hs {
                    for e in row {
                        worst = worst.max((e.values[k] - exact).abs() / exact);
                    }
                }
            }
            worst
        };
        let (e1, e2, e3) = (err(17), err(33), err(65));
        let order1 = (e1 / e2).log2();
        let order2 = (e2 / e3).log2();
        assert!((1.8..2.3).contains(&order1), "{order1}");
        assert!((1.8..2.3).contains(&order2), "{order2}");
    }

    proptest! {
        #[test]
        fn hessian_exact_on_quadratic_polynomials(coef in prop::array::uniform10(-3.0f64..3.0)) {
            let g = SpaceGrid::new(3, 1.5, 6).unwrap();
            let c = coef;
            let u = g.sample(|x| {
                c[0] + c[1] * x[0] + c[2] * x[1] + c[3] * x[2]
                    + c[4] * x[0] * x[0] + c[5] * x[1] * x[1] + c[6] * x[2] * x[2]
                    + c[7] * x[0] * x[1] + c[8] * x[0] * x[2] + c[9] * x[1] * x[2]
            });
            let hs = fd_hessian(&u);
            let exact = [
                [2.0 * c[4], c[7], c[8]],
                [c[7], 2.0 * c[5], c[9]],
                [c[8], c[9], 2.0 * c[6]],
            ];
            for i in 0..3 {
                for j in 0..3 {
                    for v in &hs[i][j].values {
                        prop_assert!((v - exact[i][j]).abs() < 1e-10);
                    }
                }
            }
        }
    }
}
