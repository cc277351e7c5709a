//! Operator data `L u = a^{ij} D_{ij} u + b^i D_i u - c u` with right-hand
//! side `f`, and sampled verification of the structural hypotheses
//! (uniform ellipticity, `c ≥ δ`, local Hölder continuity in `x` on pairs
//! with `|x - y| ≤ 1`, and `|f| ≤ F₀ c`).

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::expr::{parse_expr, ExprNode, MAX_DIM};
use crate::linalg::SmallMat;

/// Index of `(i, j)` in packed upper-triangular storage.
fn sym_index(d: usize, i: usize, j: usize) -> usize {
    let (i, j) = if i <= j { (i, j) } else { (j, i) };
    i * d - i * (i + 1) / 2 + j
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OperatorSpec {
    d: usize,
    /// Packed upper triangle; `a^{ij}` and `a^{ji}` are the same node.
    a: Vec<ExprNode>,
    b: Vec<ExprNode>,
    c: ExprNode,
    f: ExprNode,
    alpha: f64,
    window: (f64, f64),
    t_breakpoints: Vec<f64>,
}

/// Coefficients evaluated at one point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PointCoeffs {
    pub a: SmallMat,
    pub b: [f64; 3],
    pub c: f64,
    pub f: f64,
}

/// Textual form of an operator, as found in configuration files.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpecText {
    pub dim: usize,
    pub a: Vec<Vec<String>>,
    pub b: Vec<String>,
    pub c: String,
    pub f: String,
    pub alpha: f64,
    pub time_window: [f64; 2],
    #[serde(default)]
    pub t_breakpoints: Vec<f64>,
}

impl SpecText {
    pub fn compile(&self) -> Result<OperatorSpec> {
        let d = self.dim;
        if !(1..=MAX_DIM).contains(&d) {
            return Err(Error::InvalidSpec(format!("dimension {d} not in 1..=3")));
        }
        if self.a.len() != d || self.a.iter().any(|row| row.len() != d) {
            return Err(Error::InvalidSpec(format!("a must be {d}x{d}")));
        }
        if self.b.len() != d {
            return Err(Error::InvalidSpec(format!("b must have {d} entries")));
        }
        let parse = |field: String, text: &str| {
            parse_expr(text).map_err(|source| Error::Parse { field, source })
        };
        let mut a = Vec::with_capacity(d);
        for (i, row) in self.a.iter().enumerate() {
            let mut r = Vec::with_capacity(d);
            for (j, s) in row.iter().enumerate() {
                r.push(parse(format!("a[{}][{}]", i + 1, j + 1), s)?);
            }
            a.push(r);
        }
        let b = self
            .b
            .iter()
            .enumerate()
            .map(|(i, s)| parse(format!("b[{}]", i + 1), s))
            .collect::<Result<Vec<_>>>()?;
        OperatorSpec::new(
            d,
            a,
            b,
            parse("c".into(), &self.c)?,
            parse("f".into(), &self.f)?,
            self.alpha,
            (self.time_window[0], self.time_window[1]),
            self.t_breakpoints.clone(),
        )
    }
}

impl OperatorSpec {
    /// Builds a spec from a full `d×d` matrix. Entries that are not
    /// structurally symmetric are replaced by `(a^{ij} + a^{ji})/2`.
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        d: usize,
        a: Vec<Vec<ExprNode>>,
        b: Vec<ExprNode>,
        c: ExprNode,
        f: ExprNode,
        alpha: f64,
        window: (f64, f64),
        t_breakpoints: Vec<f64>,
    ) -> Result<Self> {
        if !(1..=MAX_DIM).contains(&d) {
            return Err(Error::InvalidSpec(format!("dimension {d} not in 1..=3")));
        }
        if a.len() != d || a.iter().any(|r| r.len() != d) || b.len() != d {
            return Err(Error::InvalidSpec("coefficient shapes do not match dimension".into()));
        }
        if !(alpha > 0.0 && alpha < 1.0) {
            return Err(Error::InvalidSpec(format!("alpha {alpha} out of (0,1)")));
        }
        let (t0, t1) = window;
        if !(t0.is_finite() && t1.is_finite() && t0 < t1) {
            return Err(Error::InvalidSpec(format!("time window [{t0}, {t1}] must satisfy T < S")));
        }
        if t_breakpoints.iter().any(|t| !t.is_finite())
            || t_breakpoints.windows(2).any(|w| w[0] >= w[1])
        {
            return Err(Error::InvalidSpec("breakpoints must be finite and strictly increasing".into()));
        }
        let mut packed = Vec::with_capacity(d * (d + 1) / 2);
        for i in 0..d {
            for j in i..d {
                let node = if a[i][j] == a[j][i] {
                    a[i][j].clone()
                } else {
                    (a[i][j].clone() + a[j][i].clone()) * ExprNode::num(0.5)
                };
                packed.push(node);
            }
        }
        let spec = OperatorSpec {
            d,
            a: packed,
            b,
            c,
            f,
            alpha,
            window,
            t_breakpoints,
        };
        let used = spec.fields().map(|(_, e)| e.max_coordinate()).max().unwrap_or(0);
        if used > d {
            return Err(Error::InvalidSpec(format!(
                "x{used} referenced but dimension is {d}"
            )));
        }
        Ok(spec)
    }

    /// Constant-coefficient spec with `a = a_diag` (diagonal), given `b`, `c`, `f`.
    pub fn constant(d: usize, a_diag: &[f64], b: &[f64], c: f64, f: f64, alpha: f64, window: (f64, f64)) -> Result<Self> {
        let a = (0..d)
            .map(|i| (0..d).map(|j| ExprNode::num(if i == j { a_diag[i] } else { 0.0 })).collect())
            .collect();
        Self::new(
            d,
            a,
            b.iter().map(|v| ExprNode::num(*v)).collect(),
            ExprNode::num(c),
            ExprNode::num(f),
            alpha,
            window,
            Vec::new(),
        )
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn window(&self) -> (f64, f64) {
        self.window
    }

    pub fn breakpoints(&self) -> &[f64] {
        &self.t_breakpoints
    }

    pub fn a(&self, i: usize, j: usize) -> &ExprNode {
        &self.a[sym_index(self.d, i, j)]
    }

    pub fn b(&self, i: usize) -> &ExprNode {
        &self.b[i]
    }

    pub fn c(&self) -> &ExprNode {
        &self.c
    }

    pub fn f(&self) -> &ExprNode {
        &self.f
    }

    /// Named fields, upper triangle of `a` first.
    pub fn fields(&self) -> impl Iterator<Item = (String, &ExprNode)> {
        let d = self.d;
        let a = (0..d).flat_map(move |i| (i..d).map(move |j| (i, j))).map(move |(i, j)| {
            (format!("a[{}][{}]", i + 1, j + 1), &self.a[sym_index(d, i, j)])
        });
        let b = self.b.iter().enumerate().map(|(i, e)| (format!("b[{}]", i + 1), e));
        a.chain(b)
            .chain(std::iter::once(("c".to_string(), &self.c)))
            .chain(std::iter::once(("f".to_string(), &self.f)))
    }

    pub fn with_b(mut self, b: Vec<ExprNode>) -> Self {
        assert_eq!(b.len(), self.d);
        self.b = b;
        self
    }

    pub fn with_c(mut self, c: ExprNode) -> Self {
        self.c = c;
        self
    }

    pub fn with_f(mut self, f: ExprNode) -> Self {
        self.f = f;
        self
    }

    pub fn with_window(mut self, window: (f64, f64)) -> Result<Self> {
        if !(window.0 < window.1) {
            return Err(Error::InvalidSpec("T < S required".into()));
        }
        self.window = window;
        Ok(self)
    }

    pub fn with_breakpoints(mut self, mut bp: Vec<f64>) -> Self {
        bp.sort_by(f64::total_cmp);
        bp.dedup();
        self.t_breakpoints = bp;
        self
    }

    /// True when no coefficient nor `f` depends on `t`.
    pub fn is_time_independent(&self) -> bool {
        self.fields().all(|(_, e)| !e.depends_on_t())
    }

    /// True when `a`, `b`, `c` do not depend on `x` (`f` may).
    pub fn coefficients_x_independent(&self) -> bool {
        self.a.iter().chain(self.b.iter()).chain(std::iter::once(&self.c)).all(|e| !e.depends_on_x())
    }

    fn eval_field(&self, name: &str, e: &ExprNode, t: f64, x: &[f64]) -> Result<f64> {
        e.eval(t, x).map_err(|source| Error::Eval {
            field: name.to_string(),
            t,
            x: x.to_vec(),
            source,
        })
    }

    pub fn eval_a(&self, t: f64, x: &[f64]) -> Result<SmallMat> {
        let mut m = SmallMat::zeros(self.d);
        for i in 0..self.d {
            for j in i..self.d {
                let v = self.eval_field("a", self.a(i, j), t, x)?;
                m.m[i][j] = v;
                m.m[j][i] = v;
            }
        }
        Ok(m)
    }

    pub fn eval_b(&self, t: f64, x: &[f64]) -> Result<[f64; 3]> {
        let mut out = [0.0; 3];
        for (i, o) in out.iter_mut().enumerate().take(self.d) {
            *o = self.eval_field("b", &self.b[i], t, x)?;
        }
        Ok(out)
    }

    pub fn eval_c(&self, t: f64, x: &[f64]) -> Result<f64> {
        self.eval_field("c", &self.c, t, x)
    }

    pub fn eval_f(&self, t: f64, x: &[f64]) -> Result<f64> {
        self.eval_field("f", &self.f, t, x)
    }

    pub fn eval_all(&self, t: f64, x: &[f64]) -> Result<PointCoeffs> {
        Ok(PointCoeffs {
            a: self.eval_a(t, x)?,
            b: self.eval_b(t, x)?,
            c: self.eval_c(t, x)?,
            f: self.eval_f(t, x)?,
        })
    }
}

// ---------------------------------------------------------------------------
// Hypothesis checking

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SampleConfig {
    /// Half-width of the sampled box `[-R, R]^d`.
    pub box_radius: f64,
    /// Points per axis.
    pub n_space: usize,
    /// Points in `[T, S]`.
    pub n_time: usize,
    /// Number of dyadic distance levels `1, 1/2, …` (times `max_dist`).
    pub n_pairs: usize,
    pub max_dist: f64,
    /// Quotients above this are reported as unbounded-looking.
    pub quotient_cap: f64,
}

impl SampleConfig {
    pub fn new(box_radius: f64, n_space: usize, n_time: usize, n_pairs: usize) -> Self {
        SampleConfig {
            box_radius,
            n_space,
            n_time,
            n_pairs,
            max_dist: 1.0,
            quotient_cap: 1e6,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum ViolationKind {
    NonPositiveLowerBound,
    QuotientAboveCap,
    EvaluationFailed(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Violation {
    pub field: String,
    pub kind: ViolationKind,
    pub t: f64,
    pub x: Vec<f64>,
    pub y: Option<Vec<f64>>,
    pub value: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HypothesisReport {
    pub delta: f64,
    pub big_k: f64,
    pub f0: f64,
    pub f_alpha: f64,
    pub violations: Vec<Violation>,
}

impl HypothesisReport {
    pub fn holds(&self) -> bool {
        self.delta > 0.0 && self.violations.is_empty()
    }
}

/// Unit directions used for Hölder pairs: coordinate axes, then the
/// two face diagonals of every coordinate plane, then (d = 3) the four
/// body diagonals. Only one of `±v` is listed.
pub fn pair_directions(d: usize) -> Vec<Vec<f64>> {
    let mut dirs = Vec::new();
    for i in 0..d {
        let mut v = vec![0.0; d];
        v[i] = 1.0;
        dirs.push(v);
    }
    let s2 = std::f64::consts::FRAC_1_SQRT_2;
    for i in 0..d {
        for j in i + 1..d {
            for sign in [1.0, -1.0] {
                let mut v = vec![0.0; d];
                v[i] = s2;
                v[j] = sign * s2;
                dirs.push(v);
            }
        }
    }
    if d == 3 {
        let s3 = 1.0 / 3f64.sqrt();
        for (sy, sz) in [(1.0, 1.0), (1.0, -1.0), (-1.0, 1.0), (-1.0, -1.0)] {
            dirs.push(vec![s3, sy * s3, sz * s3]);
        }
    }
    dirs
}

/// `n` points spanning `[lo, hi]`; nested under `n → 2n - 1`.
fn lattice(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![lo];
    }
    (0..n)
        .map(|i| lo + ((hi - lo) * i as f64) / (n - 1) as f64)
        .collect()
}

fn space_samples(d: usize, radius: f64, n: usize) -> Vec<Vec<f64>> {
    let axis = lattice(-radius, radius, n);
    let total = n.pow(d as u32);
    (0..total)
        .map(|mut k| {
            let mut x = vec![0.0; d];
            for slot in x.iter_mut().rev() {
                *slot = axis[k % n];
                k /= n;
            }
            x
        })
        .collect()
}

/// Samples the hypotheses on `[T, S] × [-R, R]^d`.
///
/// `δ` is the minimum over samples of `min(λ_min(a), c)`; `K` the maximum of
/// `λ_max(a)` and of the x-Hölder quotient of `|Δa^{ij}| + |Δb^i| + |Δc|`;
/// `F₀ = max |f|/c`; `F_α` the maximum Hölder quotient of `f`. Pairs share
/// the same `t`.
pub fn check_hypotheses(spec: &OperatorSpec, cfg: &SampleConfig) -> Result<HypothesisReport> {
    if !(cfg.box_radius > 0.0) || cfg.n_space < 2 || cfg.n_time < 2 || cfg.n_pairs < 1 {
        return Err(Error::InvalidArgument(
            "box_radius > 0 and sample counts ≥ 2 required".into(),
        ));
    }
    let d = spec.dim();
    let alpha = spec.alpha();
    let (t0, t1) = spec.window();
    let times = lattice(t0, t1, cfg.n_time);
    let points = space_samples(d, cfg.box_radius, cfg.n_space);
    let dirs = pair_directions(d);
    let dists: Vec<f64> = (0..cfg.n_pairs).map(|k| cfg.max_dist / (1u64 << k) as f64).collect();

    let mut report = HypothesisReport {
        delta: f64::INFINITY,
        big_k: 0.0,
        f0: 0.0,
        f_alpha: 0.0,
        violations: Vec::new(),
    };
    let eval_failed = |field: &str, t: f64, x: &[f64], e: &Error| Violation {
        field: field.to_string(),
        kind: ViolationKind::EvaluationFailed(e.to_string()),
        t,
        x: x.to_vec(),
        y: None,
        value: None,
    };

    for &t in &times {
        for x in &points {
            let px = match spec.eval_all(t, x) {
                Ok(p) => p,
                Err(e) => {
                    report.violations.push(eval_failed("coefficients", t, x, &e));
                    continue;
                }
            };
            let ev = px.a.sym_eigenvalues();
            let (lo, hi) = (ev[0], ev[d - 1]);
            if lo <= 0.0 {
                report.violations.push(Violation {
                    field: "a".into(),
                    kind: ViolationKind::NonPositiveLowerBound,
                    t,
                    x: x.clone(),
                    y: None,
                    value: Some(lo),
                });
            }
            if px.c <= 0.0 {
                report.violations.push(Violation {
                    field: "c".into(),
                    kind: ViolationKind::NonPositiveLowerBound,
                    t,
                    x: x.clone(),
                    y: None,
                    value: Some(px.c),
                });
            } else {
                report.f0 = report.f0.max(px.f.abs() / px.c);
            }
            report.delta = report.delta.min(lo.min(px.c));
            report.big_k = report.big_k.max(hi);

            for dir in &dirs {
                for &r in &dists {
                    let y: Vec<f64> = x.iter().zip(dir).map(|(xi, di)| xi + r * di).collect();
                    let py = match spec.eval_all(t, &y) {
                        Ok(p) => p,
                        Err(e) => {
                            report.violations.push(eval_failed("coefficients", t, &y, &e));
                            continue;
                        }
                    };
                    let dist = x
                        .iter()
                        .zip(&y)
                        .map(|(a, b)| (a - b) * (a - b))
                        .sum::<f64>()
                        .sqrt();
                    if dist == 0.0 {
                        continue;
                    }
                    let denom = dist.powf(alpha);
                    let dc = (px.c - py.c).abs();
                    let mut q_coef: f64 = 0.0;
                    for i in 0..d {
                        let db = (px.b[i] - py.b[i]).abs();
                        for j in 0..d {
                            let da = (px.a.m[i][j] - py.a.m[i][j]).abs();
                            q_coef = q_coef.max((da + db + dc) / denom);
                        }
                    }
                    let q_f = (px.f - py.f).abs() / denom;
                    for (field, q) in [("a,b,c", q_coef), ("f", q_f)] {
                        if q > cfg.quotient_cap {
                            report.violations.push(Violation {
                                field: field.into(),
                                kind: ViolationKind::QuotientAboveCap,
                                t,
                                x: x.clone(),
                                y: Some(y.clone()),
                                value: Some(q),
                            });
                        }
                    }
                    report.big_k = report.big_k.max(q_coef);
                    report.f_alpha = report.f_alpha.max(q_f);
                }
            }
        }
    }
    if !report.delta.is_finite() {
        report.delta = 0.0;
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn text(a: &[&[&str]], b: &[&str], c: &str, f: &str) -> SpecText {
        SpecText {
            dim: b.len(),
            a: a.iter().map(|r| r.iter().map(|s| s.to_string()).collect()).collect(),
            b: b.iter().map(|s| s.to_string()).collect(),
            c: c.into(),
            f: f.into(),
            alpha: 0.5,
            time_window: [0.0, 1.0],
            t_breakpoints: vec![],
        }
    }

    #[test]
    fn identity_data() {
        let spec = text(&[&["1", "0"], &["0", "1"]], &["0", "0"], "1", "0").compile().unwrap();
        let r = check_hypotheses(&spec, &SampleConfig::new(2.0, 5, 3, 4)).unwrap();
        assert_eq!((r.delta, r.big_k, r.f0, r.f_alpha), (1.0, 1.0, 0.0, 0.0));
        assert!(r.holds());
    }

    #[test]
    fn diagonal_eigenvalues() {
        let spec = text(&[&["2", "0"], &["0", "1"]], &["0", "0"], "1", "0").compile().unwrap();
        let r = check_hypotheses(&spec, &SampleConfig::new(2.0, 5, 3, 4)).unwrap();
        assert_eq!(r.delta, 1.0);
        assert_eq!(r.big_k, 2.0);
    }

    #[test]
    fn linear_drift_holder_constant_is_one_at_unit_distance() {
        // sup of |x-y|^{1-α} over |x-y| ≤ 1 is attained at distance 1.
        let spec = text(&[&["0.5"]], &["x1"], "1", "0").compile().unwrap();
        for n_pairs in [1, 3, 6] {
            let r = check_hypotheses(&spec, &SampleConfig::new(3.0, 7, 2, n_pairs)).unwrap();
            assert!((r.big_k - 1.0).abs() < 1e-12, "K = {}", r.big_k);
        }
    }

    #[test]
    fn violations_are_reported_not_fatal() {
        let spec = text(&[&["1"]], &["0"], "x1", "1/x1").compile().unwrap();
        let r = check_hypotheses(&spec, &SampleConfig::new(1.0, 5, 2, 2)).unwrap();
        assert!(!r.holds());
        assert!(r.delta <= 0.0);
        assert!(r.violations.iter().any(|v| v.kind == ViolationKind::NonPositiveLowerBound));
        assert!(r
            .violations
            .iter()
            .any(|v| matches!(v.kind, ViolationKind::EvaluationFailed(_))));
    }

    #[test]
    fn step_in_time_does_not_enter_holder_quotients() {
        let spec = text(&[&["1 + step(t - 0.5)"]], &["0"], "1", "0").compile().unwrap();
        let r = check_hypotheses(&spec, &SampleConfig::new(1.0, 5, 9, 3)).unwrap();
        // λ_max is 2 after the jump; the Hölder part sees no x-variation.
        assert_eq!(r.big_k, 2.0);
        assert!(r.holds());
    }

    #[test]
    fn rejects_bad_specs() {
        let mut t = text(&[&["1"]], &["0"], "1", "0");
        t.alpha = 1.5;
        assert!(matches!(t.compile(), Err(Error::InvalidSpec(_))));
        let mut t = text(&[&["1"]], &["x2"], "1", "0");
        t.alpha = 0.5;
        assert!(t.compile().is_err());
        let mut t = text(&[&["1"]], &["0"], "1", "0");
        t.time_window = [1.0, 0.0];
        assert!(t.compile().is_err());
        let t = text(&[&["1"]], &["0"], "1", "2+*x1");
        assert!(matches!(t.compile(), Err(Error::Parse { .. })));
    }

    #[test]
    fn asymmetric_input_is_symmetrized_structurally() {
        let spec = text(&[&["2", "x1"], &["0", "2"]], &["0", "0"], "1", "0").compile().unwrap();
        assert!(std::ptr::eq(spec.a(0, 1), spec.a(1, 0)));
        let a = spec.eval_a(0.0, &[1.0, 0.0]).unwrap();
        assert_eq!(a.m[0][1], 0.5);
        assert_eq!(a.m[1][0], 0.5);
    }

    fn arb_field() -> impl Strategy<Value = String> {
        prop_oneof![
            (0.5f64..2.0).prop_map(|v| format!("{v}")),
            (0.1f64..1.0).prop_map(|v| format!("{v}*sin(x1)")),
            (0.1f64..1.0).prop_map(|v| format!("{v}*abs(x2)^0.5")),
            (0.1f64..1.0).prop_map(|v| format!("{v}*cos(x1*x2) + step(t-0.3)")),
        ]
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]

        #[test]
        fn symmetrization_leaves_report_unchanged(
            a12 in arb_field(), a21 in arb_field(), b in arb_field(), f in arb_field(),
        ) {
            let raw = text(&[&["3", &a12], &[&a21, "3"]], &[&b, "0"], "1 + x1^2", &f);
            let sym12 = format!("(({a12}) + ({a21}))*0.5");
            let sym = text(&[&["3", &sym12], &[&sym12, "3"]], &[&b, "0"], "1 + x1^2", &f);
            let cfg = SampleConfig::new(1.5, 4, 3, 3);
            let r1 = check_hypotheses(&raw.compile().unwrap(), &cfg).unwrap();
            let r2 = check_hypotheses(&sym.compile().unwrap(), &cfg).unwrap();
            prop_assert!((r1.delta - r2.delta).abs() <= 1e-12 * r1.delta.abs().max(1.0));
            prop_assert!((r1.big_k - r2.big_k).abs() <= 1e-12 * r1.big_k.abs().max(1.0));
        }

        #[test]
        fn enlarging_samples_is_monotone(
            a11 in arb_field(), b in arb_field(), c in arb_field(), f in arb_field(),
            n in 2usize..5, m in 2usize..4, p in 1usize..4,
        ) {
            let spec = text(&[&[&a11, "0"], &["0", "1"]], &[&b, "x1"], &format!("0.5 + ({c})^2"), &f)
                .compile()
                .unwrap();
            let small = check_hypotheses(&spec, &SampleConfig::new(1.0, n, m, p)).unwrap();
            let big = check_hypotheses(&spec, &SampleConfig::new(1.0, 2 * n - 1, 2 * m - 1, p + 1)).unwrap();
            prop_assert!(big.big_k >= small.big_k);
            prop_assert!(big.f0 >= small.f0);
            prop_assert!(big.f_alpha >= small.f_alpha);
            prop_assert!(big.delta <= small.delta);
        }
    }
}
