//! Gaussian kernels of operators `a^{ij}(t) D_{ij}` whose coefficients depend
//! on time only, and the potentials, semigroups and solvers built on them.

mod conv;
mod fourier;
mod heat;
mod mollify;
mod path;
mod potential;

pub use conv::{gaussian_convolve, gaussian_convolve_fn, half_width, weights_1d, Outside, TAIL_SIGMAS};
pub use fourier::{fourier_oracle_1d, FourierSolution};
pub use heat::{heat_semigroup, heat_solve, HeatSolveOpts};
pub use mollify::{bump, bump_normalization, mollify};
pub use path::{accumulate_a, default_rule, gauss_kernel, integrate_path, GaussParams, TimeMatrixPath};
pub use potential::{potential_g, PotentialOpts, Source};
