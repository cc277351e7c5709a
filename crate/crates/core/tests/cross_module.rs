use schauder_core::coeffspec::OperatorSpec;
use schauder_core::expr::parse_expr;
use schauder_core::holder::{GridFn, SpaceGrid};
use schauder_core::kernel::{heat_solve, HeatSolveOpts, Source};
use schauder_core::solver::{solve_cauchy, CauchyProblem};
use schauder_core::verify::schauder_ratio;

#[test]
fn schauder_ratio_of_model_operator_matches_kernel_solution() {
    let delta = 1.0;
    let grid = SpaceGrid::new(1, 6.0, 241).unwrap();
    let text = "max(0, 1 - x1^2)^3*(1 + 0.5*sin(3*t))";
    let spec = OperatorSpec::constant(1, &[1.0], &[0.0], delta, 0.0, 0.5, (0.0, 1.0))
        .unwrap()
        .with_f(parse_expr(text).unwrap());
    let zero = GridFn::zeros(grid);
    let fd = solve_cauchy(&CauchyProblem::new(spec.clone(), zero.clone(), 256)).unwrap();
    let f = |t: f64, x: &[f64]| (1.0 - x[0] * x[0]).max(0.0).powi(3) * (1.0 + 0.5 * (3.0 * t).sin());
    let kernel = heat_solve(Source::func(&f), delta, (0.0, 1.0), &grid, &HeatSolveOpts { n_time: 256, plateau: 0, final_data: None }).unwrap();
    let a = schauder_ratio(&fd.u, &spec, &zero, 0.5).unwrap();
    let b = schauder_ratio(&kernel, &spec, &zero, 0.5).unwrap();
    let rel = (a.n_emp - b.n_emp).abs() / b.n_emp;
    assert!(rel <= 0.1, "{} vs {}", a.n_emp, b.n_emp);
}
