//! Seeded random operators with growing drift and potential.

use crate::coeffspec::{OperatorSpec, SpecText};
use crate::error::Result;

/// Shape of the random family.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RandomSpecOpts {
    pub dim: usize,
    pub alpha: f64,
    pub window: (f64, f64),
    /// Linear drift rates are drawn from `[−drift_max, drift_max]`.
    pub drift_max: f64,
    /// `|f| ≤ f0·c` by construction.
    pub f0: f64,
}

fn num(v: f64) -> String {
    format!("({v:?})")
}

/// Draws one operator from uniform variates in `[0, 1)`:
/// `a = diag(1 + ρ_i sin(ω_i x_i + φ_i))` with `ρ_i ≤ 1/2`,
/// `b_i = κ_i x_i + σ_i sin(x_{i+1})` with `|κ_i| ≤ drift_max`, `|σ_i| ≤ 1`,
/// `c = δ + γ(√(1+|x|²) − 1)` with `δ ∈ [1/2, 2]`, `γ ∈ [0, 5]`, and
/// `f = f0·μ·c·cos(ν·x + τt)` with `μ ∈ [1/2, 1]`.
pub fn random_growing_spec(opts: &RandomSpecOpts, uniform: &mut dyn FnMut() -> f64) -> Result<OperatorSpec> {
    let d = opts.dim;
    let mut u = |lo: f64, hi: f64| lo + (hi - lo) * uniform();
    let mut a = vec![vec!["0".to_string(); d]; d];
    for (i, row) in a.iter_mut().enumerate() {
        row[i] = format!("1 + {}*sin({}*x{} + {})", num(u(0.0, 0.5)), num(u(0.5, 2.0)), i + 1, num(u(0.0, 6.0)));
    }
    let b = (0..d)
        .map(|i| format!("{}*x{} + {}*sin(x{})", num(u(-opts.drift_max, opts.drift_max)), i + 1, num(u(-1.0, 1.0)), (i + 1) % d + 1))
        .collect();
    let r2 = (1..=d).map(|i| format!("x{i}^2")).collect::<Vec<_>>().join(" + ");
    let c = format!("{} + {}*(sqrt(1 + {r2}) - 1)", num(u(0.5, 2.0)), num(u(0.0, 5.0)));
    let phase = (1..=d).map(|i| format!("{}*x{i}", num(u(-2.0, 2.0)))).collect::<Vec<_>>().join(" + ");
    let f = format!("{}*({c})*cos({phase} + {}*t)", num(opts.f0 * u(0.5, 1.0)), num(u(-3.0, 3.0)));
    SpecText {
        dim: d,
        a,
        b,
        c,
        f,
        alpha: opts.alpha,
        time_window: [opts.window.0, opts.window.1],
        t_breakpoints: Vec::new(),
    }
    .compile()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coeffspec::{check_hypotheses, SampleConfig};

    #[test]
    fn draws_satisfy_the_growth_hypotheses() {
        let mut state = 0x2545_f491_4f6c_dd1du64;
        let mut uniform = move || {
            state ^= state << 13;
            state ^= state >> 7;
            state ^= state << 17;
            (state >> 11) as f64 / (1u64 << 53) as f64
        };
        for d in [1, 2] {
            let opts = RandomSpecOpts { dim: d, alpha: 0.5, window: (0.0, 1.0), drift_max: 20.0, f0: 1.0 };
            for _ in 0..5 {
                let spec = random_growing_spec(&opts, &mut uniform).unwrap();
                let rep = check_hypotheses(&spec, &SampleConfig::new(3.0, 9, 5, 4)).unwrap();
                assert!(rep.holds(), "{:?}", rep.violations);
                assert!(rep.delta >= 0.49 && rep.f0 <= 1.0 + 1e-12);
            }
        }
    }
}
