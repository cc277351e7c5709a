use super::conv::{gaussian_convolve, Outside};
use super::potential::Source;
use crate::error::{Error, Result};
use crate::holder::{fd_hessian, trace, GridFn, SpaceGrid, SpaceTimeFn};
use crate::linalg::SmallMat;
use crate::quad::cell_edges;

/// `T_τ h = p(τ,·) * h` with `a = I`; values beyond the box are taken from the
/// nearest boundary node.
pub fn heat_semigroup(h: &GridFn, tau: f64) -> Result<GridFn> {
    if !(tau >= 0.0) {
        return Err(Error::InvalidArgument(format!("semigroup time {tau} must be non-negative")));
    }
    if tau == 0.0 {
        return Ok(h.clone());
    }
    let a = SmallMat::identity(h.grid.d).scale(tau);
    Ok(gaussian_convolve(h, &a, Outside::Clamp))
}

fn heat_with_source(f: &Source, t: f64, tau: f64, grid: &SpaceGrid) -> Result<GridFn> {
    if tau == 0.0 {
        return f.slice(t, grid);
    }
    f.convolve(t, grid, &SmallMat::identity(grid.d).scale(tau))
}

#[derive(Debug, Clone)]
pub struct HeatSolveOpts {
    /// Time steps on `[T, S]` (more are added to land on breakpoints).
    pub n_time: usize,
    /// Extra slices stored past `S`, spaced like the last step.
    pub plateau: usize,
    /// Final value at `S`; zero when absent.
    pub final_data: Option<GridFn>,
}

impl Default for HeatSolveOpts {
    fn default() -> Self {
        HeatSolveOpts { n_time: 128, plateau: 0, final_data: None }
    }
}

/// Solves `u_t + Δu − δu = f` on `[T, S]` with `u(S) = g` (default 0), `f`
/// vanishing after `S`, by
/// `u(t) = e^{−δ(S−t)} T_{S−t} g − ∫ₜ^S e^{−δ(r−t)} T_{r−t} f(r) dr`
/// marched backwards: each step propagates the previous slice exactly and adds
/// the midpoint value of the source integral.
pub fn heat_solve(f: Source, delta: f64, window: (f64, f64), grid: &SpaceGrid, opts: &HeatSolveOpts) -> Result<SpaceTimeFn> {
    let (t0, s) = window;
    if !(t0 < s) {
        return Err(Error::InvalidArgument(format!("need T < S, got [{t0}, {s}]")));
    }
    if opts.n_time < 2 {
        return Err(Error::InvalidArgument("need at least 2 time steps".into()));
    }
    let mut times = cell_edges(t0, s, &f.breakpoints(), (s - t0) / opts.n_time as f64);
    let cells: Vec<(f64, f64)> = times.windows(2).map(|e| (0.5 * (e[0] + e[1]), e[1] - e[0])).collect();
    let final_slice = match &opts.final_data {
        Some(g) if g.grid != *grid => return Err(Error::InvalidArgument("final data on a different grid".into())),
        Some(g) => g.clone(),
        None => GridFn::zeros(*grid),
    };
    let mut slices = vec![final_slice];
    for &(mid, w) in cells.iter().rev() {
        let next = slices.last().expect("final slice");
        let propagated = heat_semigroup(next, w)?.scaled((-delta * w).exp());
        let source = heat_with_source(&f, mid, 0.5 * w, grid)?.scaled(w * (-delta * 0.5 * w).exp());
        slices.push(propagated.zip_map(&source, |a, b| a - b));
    }
    slices.reverse();
    let mut dt_slices = Vec::with_capacity(slices.len());
    for (u, &t) in slices.iter().zip(&times) {
        let ft = if t < s { f.slice(t, grid)? } else { GridFn::zeros(*grid) };
        let lap = trace(&fd_hessian(u));
        // u_t = f − Δu + δu.
        dt_slices.push(
            ft.zip_map(&lap, |a, b| a - b).zip_map(u, |a, b| a + delta * b),
        );
    }
    if opts.plateau > 0 {
        let step = cells.last().map_or(1.0, |c| c.1);
        let last = slices.last().expect("final slice").clone();
        for k in 1..=opts.plateau {
            times.push(s + step * k as f64);
            slices.push(last.clone());
            dt_slices.push(GridFn::zeros(*grid));
        }
    }
    SpaceTimeFn::new(times, slices, Some(dt_slices))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernel::path::TimeMatrixPath;
    use crate::kernel::potential::{potential_g, PotentialOpts};

    #[test]
    fn semigroup_preserves_constants_and_gaussians() {
        let g = SpaceGrid::new(2, 5.0, 81).unwrap();
        let one = heat_semigroup(&GridFn::constant(g, 1.0), 0.7).unwrap();
        assert!(one.values.iter().all(|v| (v - 1.0).abs() < 1e-13));
        let (sigma, tau) = (0.2, 0.3);
        let gauss = g.sample(|x| (-(x[0] * x[0] + x[1] * x[1]) / (4.0 * sigma)).exp());
        let out = heat_semigroup(&gauss, tau).unwrap();
        let exact = g.sample(|x| sigma / (sigma + tau) * (-(x[0] * x[0] + x[1] * x[1]) / (4.0 * (sigma + tau))).exp());
        assert!(out.dist_sup(&exact) < 1e-10, "{}", out.dist_sup(&exact));
    }

    #[test]
    fn semigroup_tends_to_identity() {
        let g = SpaceGrid::new(1, 2.0, 81).unwrap();
        let u = g.sample(|x| x[0].sin());
        let mut last = f64::INFINITY;
        for k in 0..4 {
            let tau = g.h() * g.h() * 10f64.powi(-k);
            let err = heat_semigroup(&u, tau).unwrap().dist_sup(&u);
            assert!(err < last);
            last = err;
        }
        assert!(last < 1e-9, "{last}");
        assert!(heat_semigroup(&GridFn::zeros(SpaceGrid::new(1, 1.0, 5).unwrap()), -1.0).is_err());
    }

    #[test]
    fn zero_source_and_zero_after_s() {
        let g = SpaceGrid::new(1, 3.0, 33).unwrap();
        let zero = |_: f64, _: &[f64]| 0.0;
        let u = heat_solve(Source::func(&zero), 1.0, (0.0, 1.0), &g, &HeatSolveOpts::default()).unwrap();
        assert_eq!(u.sup(), 0.0);
        let f = |t: f64, x: &[f64]| if t < 1.0 { (-x[0] * x[0]).exp() } else { 0.0 };
        let opts = HeatSolveOpts { n_time: 32, plateau: 4, final_data: None };
        let u = heat_solve(Source::func(&f), 1.0, (0.0, 1.0), &g, &opts).unwrap();
        for (t, slice) in u.times.iter().zip(&u.slices) {
            if *t >= 1.0 {
                assert!(slice.values.iter().all(|v| *v == 0.0));
            }
        }
        assert!(u.sup() > 0.0);
    }

    #[test]
    fn manufactured_solution() {
        // w = φ(t) e^{−x²}, φ(t) = sin²(πt) on [0,1]; f = w_t + w'' − δw.
        let delta = 0.5;
        let g = SpaceGrid::new(1, 6.0, 193).unwrap();
        let pi = std::f64::consts::PI;
        let w = |t: f64, x: f64| (pi * t).sin().powi(2) * (-x * x).exp();
        let f = move |t: f64, x: &[f64]| {
            if t >= 1.0 {
                return 0.0;
            }
            let x = x[0];
            let phi = (pi * t).sin().powi(2);
            let dphi = pi * (2.0 * pi * t).sin();
            let e = (-x * x).exp();
            dphi * e + phi * (4.0 * x * x - 2.0) * e - delta * phi * e
        };
        let opts = HeatSolveOpts { n_time: 256, plateau: 0, final_data: None };
        let u = heat_solve(Source::func(&f), delta, (0.0, 1.0), &g, &opts).unwrap();
        let mut err: f64 = 0.0;
        for (t, slice) in u.times.iter().zip(&u.slices) {
            for k in 0..g.len() {
                err = err.max((slice.values[k] - w(*t, g.point(k)[0])).abs());
            }
        }
        assert!(err <= 0.01, "{err}");
    }

    #[test]
    fn matches_the_potential_representation() {
        // u(t) = −e^{δt} G₀(e^{−δ·} f)(t).
        let delta = 0.7;
        let g = SpaceGrid::new(1, 6.0, 129).unwrap();
        let f = |t: f64, x: &[f64]| if t < 1.0 { (-(x[0] - 0.3).powi(2)).exp() * (1.0 + t) } else { 0.0 };
        let opts = HeatSolveOpts { n_time: 128, plateau: 0, final_data: None };
        let u = heat_solve(Source::func(&f), delta, (0.0, 1.0), &g, &opts).unwrap();
        let weighted = move |t: f64, x: &[f64]| (-delta * t).exp() * f(t, x);
        let t = 0.25;
        let gf = potential_g(
            &TimeMatrixPath::identity(1),
            Source::func(&weighted),
            t,
            &g,
            1.0,
            &PotentialOpts { max_dt: 1.0 / 128.0 },
        )
        .unwrap();
        let direct = gf.scaled(-(delta * t).exp());
        let k = u.time_index(t).unwrap();
        let diff = direct.dist_sup(&u.slices[k]);
        assert!(diff <= 1e-3 * direct.sup(), "{diff}");
    }

    #[test]
    fn final_data_propagates() {
        // Wide enough that the boundary extension never sees the data.
        let g = SpaceGrid::new(1, 12.0, 241).unwrap();
        let zero = |_: f64, _: &[f64]| 0.0;
        let sigma = 0.5;
        let fin = g.sample(|x| (-x[0] * x[0] / (4.0 * sigma)).exp());
        let opts = HeatSolveOpts { n_time: 16, plateau: 0, final_data: Some(fin) };
        let delta = 0.3;
        let u = heat_solve(Source::func(&zero), delta, (0.0, 1.0), &g, &opts).unwrap();
        let exact = g.sample(|x| {
            (-delta).exp() * (sigma / (sigma + 1.0)).sqrt() * (-x[0] * x[0] / (4.0 * (sigma + 1.0))).exp()
        });
        assert!(u.slices[0].dist_sup(&exact) < 1e-10, "{}", u.slices[0].dist_sup(&exact));
    }
}
