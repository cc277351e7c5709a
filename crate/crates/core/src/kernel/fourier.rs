use rustfft::num_complex::Complex64;
use rustfft::FftPlanner;

use super::path::{default_rule, integrate_path, TimeMatrixPath};
use super::potential::{PotentialOpts, Source};
use crate::error::{Error, Result};
use crate::holder::{GridFn, SpaceGrid};
use crate::quad::midpoint_cells;

/// Frequency-side solution of the model equation in one dimension.
#[derive(Debug, Clone)]
pub struct FourierSolution {
    pub xi: Vec<f64>,
    pub u_hat: Vec<Complex64>,
    pub u: GridFn,
}

/// `û(t,ξ) = −∫ₜ^{t_end} exp(−A_{tr} ξ²) f̂(r,ξ) dr` on the DFT frequencies of
/// the grid zero-padded to twice its length, then transformed back. Uses the
/// same time cells as [`super::potential_g`].
pub fn fourier_oracle_1d(
    path: &TimeMatrixPath,
    f: Source,
    t: f64,
    grid: &SpaceGrid,
    t_end: f64,
    opts: &PotentialOpts,
) -> Result<FourierSolution> {
    if grid.d != 1 || path.dim() != 1 {
        return Err(Error::Unsupported("the Fourier oracle is one-dimensional".into()));
    }
    let n = grid.n;
    let len = 2 * n;
    let h = grid.h();
    let xi: Vec<f64> = (0..len)
        .map(|k| {
            let k = if k < len / 2 { k as f64 } else { k as f64 - len as f64 };
            2.0 * std::f64::consts::PI * k / (len as f64 * h)
        })
        .collect();
    let mut planner = FftPlanner::<f64>::new();
    let forward = planner.plan_fft_forward(len);
    let inverse = planner.plan_fft_inverse(len);
    let mut acc = vec![Complex64::new(0.0, 0.0); len];
    if t_end > t {
        let mut cuts = path.breakpoints().to_vec();
        cuts.extend(f.breakpoints());
        let rule = default_rule();
        let mut a = 0.0;
        let mut prev = t;
        let mut buf = vec![Complex64::new(0.0, 0.0); len];
        for (r, w) in midpoint_cells(t, t_end, &cuts, opts.max_dt) {
            a += integrate_path(path, prev, r, &rule)?.m[0][0];
            prev = r;
            let slice = f.slice(r, grid)?;
            for (k, b) in buf.iter_mut().enumerate() {
                *b = Complex64::new(if k < n { slice.values[k] } else { 0.0 }, 0.0);
            }
            forward.process(&mut buf);
            for ((o, b), x) in acc.iter_mut().zip(&buf).zip(&xi) {
                *o += b * (w * (-a * x * x).exp());
            }
        }
    }
    let u_hat: Vec<Complex64> = acc.iter().map(|v| -v).collect();
    let mut back = u_hat.clone();
    inverse.process(&mut back);
    let values = back[..n].iter().map(|v| v.re / len as f64).collect();
    Ok(FourierSolution { xi, u_hat, u: GridFn { grid: *grid, values } })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernel::potential_g;

    #[test]
    fn zero_source() {
        let g = SpaceGrid::new(1, 1.0, 17).unwrap();
        let zero = |_: f64, _: &[f64]| 0.0;
        let sol = fourier_oracle_1d(&TimeMatrixPath::identity(1), Source::func(&zero), 0.0, &g, 1.0, &Default::default())
            .unwrap();
        assert!(sol.u_hat.iter().all(|v| v.norm() == 0.0));
        assert_eq!(sol.u.sup(), 0.0);
    }

    #[test]
    fn empty_range_after_support() {
        let g = SpaceGrid::new(1, 1.0, 17).unwrap();
        let f = |t: f64, x: &[f64]| if t <= 1.0 { (-x[0] * x[0]).exp() } else { 0.0 };
        let sol =
            fourier_oracle_1d(&TimeMatrixPath::identity(1), Source::func(&f), 1.0, &g, 1.0, &Default::default()).unwrap();
        assert_eq!(sol.u.sup(), 0.0);
    }

    #[test]
    fn agrees_with_the_potential() {
        let g = SpaceGrid::new(1, 8.0, 257).unwrap();
        let f = |t: f64, x: &[f64]| (-(x[0] - 0.5).powi(2)).exp() * (3.0 * t).cos() + 0.5 * (-(x[0] + 1.0).powi(2) * 2.0).exp();
        let path = TimeMatrixPath::new(vec![vec![crate::expr::parse_expr("1 + 0.5*step(t - 0.3)").unwrap()]], vec![0.3]).unwrap();
        let opts = PotentialOpts { max_dt: 1.0 / 64.0 };
        let gf = potential_g(&path, Source::func(&f), 0.0, &g, 1.0, &opts).unwrap();
        let four = fourier_oracle_1d(&path, Source::func(&f), 0.0, &g, 1.0, &opts).unwrap();
        let err = four.u.zip_map(&gf, |a, b| a + b).sup();
        assert!(err <= 1e-3 * gf.sup(), "{err}");
        assert!(fourier_oracle_1d(&TimeMatrixPath::identity(2), Source::func(&f), 0.0, &SpaceGrid::new(2, 1.0, 9).unwrap(), 1.0, &opts).is_err());
    }
}
