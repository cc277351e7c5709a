use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::SmallMat;

/// Round convex cone with vertex at the origin, axis `axis` and opening `gamma`:
/// every unit ball inside the cone has its centre at distance at least `gamma`
/// from the vertex, which fixes the half-angle at `asin(1/gamma)`. `gamma = 1`
/// is a half-space.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConeSpec {
    pub axis: Vec<f64>,
    pub gamma: f64,
    pub h: f64,
}

impl ConeSpec {
    pub fn new(axis: Vec<f64>, gamma: f64, h: f64) -> Result<Self> {
        let cone = ConeSpec { axis, gamma, h };
        cone.validate()?;
        Ok(cone)
    }

    pub fn half_space(d: usize) -> Self {
        let mut axis = vec![0.0; d];
        axis[d - 1] = 1.0;
        ConeSpec { axis, gamma: 1.0, h: 1.0 }
    }

    fn validate(&self) -> Result<()> {
        let d = self.axis.len();
        if !(1..=3).contains(&d) {
            return Err(Error::InvalidArgument(format!("cone dimension {d} not in 1..=3")));
        }
        let norm = self.axis.iter().map(|v| v * v).sum::<f64>().sqrt();
        if (norm - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidArgument(format!("cone axis has length {norm}, expected 1")));
        }
        if !(self.gamma >= 1.0 && self.gamma.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "cone parameter gamma = {} leaves no unit direction (need 1 ≤ gamma < ∞)",
                self.gamma
            )));
        }
        if !(self.h > 0.0) {
            return Err(Error::InvalidArgument(format!("cone height {} must be positive", self.h)));
        }
        Ok(())
    }

    pub fn half_angle(&self) -> f64 {
        (1.0 / self.gamma).asin()
    }

    pub fn contains(&self, xi: &[f64]) -> bool {
        let norm = xi.iter().map(|v| v * v).sum::<f64>().sqrt();
        if norm == 0.0 {
            return true;
        }
        let cos = dot(xi, &self.axis) / norm;
        cos >= self.half_angle().cos() - 1e-12
    }

    /// Orthonormal basis of the complement of the axis.
    fn complement(&self) -> Vec<Vec<f64>> {
        let d = self.axis.len();
        let mut basis: Vec<Vec<f64>> = Vec::new();
        for k in 0..d {
            let mut v = vec![0.0; d];
            v[k] = 1.0;
            let mut w = v.clone();
            for b in std::iter::once(&self.axis).chain(basis.iter()) {
                let p = dot(&v, b);
                for (wi, bi) in w.iter_mut().zip(b) {
                    *wi -= p * bi;
                }
            }
            let n = dot(&w, &w).sqrt();
            if n > 1e-6 && basis.len() < d - 1 {
                basis.push(w.iter().map(|x| x / n).collect());
            }
        }
        basis
    }

    /// Deterministic unit directions filling the cone's spherical cap.
    pub fn sample_directions(&self, n_dirs: usize) -> Vec<Vec<f64>> {
        let d = self.axis.len();
        let theta = self.half_angle();
        let perp = self.complement();
        match d {
            1 => vec![self.axis.clone()],
            2 => (0..n_dirs)
                .map(|k| {
                    let phi = if n_dirs == 1 {
                        0.0
                    } else {
                        -theta + 2.0 * theta * k as f64 / (n_dirs - 1) as f64
                    };
                    (0..2).map(|i| phi.cos() * self.axis[i] + phi.sin() * perp[0][i]).collect()
                })
                .collect(),
            _ => {
                // Fibonacci spiral on the cap {cos ψ ≥ cos θ}, uniform in area.
                let golden = std::f64::consts::PI * (3.0 - 5f64.sqrt());
                let cmin = theta.cos();
                (0..n_dirs)
                    .map(|k| {
                        let z = 1.0 - (1.0 - cmin) * (k as f64 + 0.5) / n_dirs as f64;
                        let r = (1.0 - z * z).max(0.0).sqrt();
                        let phi = golden * k as f64;
                        (0..3)
                            .map(|i| {
                                z * self.axis[i] + r * (phi.cos() * perp[0][i] + phi.sin() * perp[1][i])
                            })
                            .collect()
                    })
                    .collect()
            }
        }
    }

    /// `d` independent unit directions inside the cone: the axis and the axis
    /// tilted by half the half-angle towards each complement direction.
    pub fn basis_directions(&self) -> Vec<Vec<f64>> {
        let phi = 0.5 * self.half_angle();
        let mut out = vec![self.axis.clone()];
        for w in self.complement() {
            out.push(self.axis.iter().zip(&w).map(|(a, b)| phi.cos() * a + phi.sin() * b).collect());
        }
        out
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// `max |ξᵀMξ|` over `n_dirs` sampled unit directions of the cone.
pub fn cone_matrix_bound(m: &SmallMat, cone: &ConeSpec, n_dirs: usize) -> Result<f64> {
    cone.validate()?;
    if cone.axis.len() != m.d {
        return Err(Error::InvalidArgument("cone and matrix dimensions differ".into()));
    }
    if m.sub(&m.transpose()).max_abs() > 1e-12 * m.max_abs().max(1.0) {
        return Err(Error::InvalidArgument("matrix must be symmetric".into()));
    }
    Ok(cone
        .sample_directions(n_dirs.max(1))
        .iter()
        .map(|xi| m.quad_form(xi).abs())
        .fold(0.0, f64::max))
}

/// Entries of `M` reconstructed from quadratic-form values.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PolarizationBound {
    pub recovered: SmallMat,
    /// `max |q(ξ)|` over the unit directions used.
    pub qmax: f64,
    /// `N` with `|M^{ij}| ≤ N·qmax` for every symmetric `M`.
    pub constant: f64,
}

/// Recovers a symmetric matrix from the quadratic form `q(ξ) = ξᵀMξ` on the
/// unit directions `basis` and the normalised pairwise sums, all of which lie
/// in any convex cone containing `basis`.
pub fn polarization_recover(q: impl Fn(&[f64]) -> f64, basis: &[Vec<f64>]) -> Result<PolarizationBound> {
    let d = basis.len();
    if !(1..=3).contains(&d) || basis.iter().any(|v| v.len() != d) {
        return Err(Error::InvalidArgument("need d unit directions in dimension d".into()));
    }
    let v = SmallMat::from_fn(d, |i, k| basis[k][i]);
    let vinv = v
        .inverse()
        .ok_or_else(|| Error::Singular("polarization directions are linearly dependent".into()))?;
    let mut qmax = 0.0f64;
    let diag: Vec<f64> = basis.iter().map(|b| q(b)).collect();
    for x in &diag {
        qmax = qmax.max(x.abs());
    }
    // P = Vᵀ M V from q(v_k), q(v_l) and q((v_k+v_l)/|v_k+v_l|).
    let mut p = SmallMat::zeros(d);
    for k in 0..d {
        p.m[k][k] = diag[k];
        for l in k + 1..d {
            let sum: Vec<f64> = basis[k].iter().zip(&basis[l]).map(|(a, b)| a + b).collect();
            let n2 = dot(&sum, &sum);
            let unit: Vec<f64> = sum.iter().map(|x| x / n2.sqrt()).collect();
            let qs = q(&unit);
            qmax = qmax.max(qs.abs());
            let off = 0.5 * (n2 * qs - diag[k] - diag[l]);
            p.m[k][l] = off;
            p.m[l][k] = off;
        }
    }
    let recovered = vinv.transpose().mul(&p).mul(&vinv);
    // |P_kl| ≤ (|v_k+v_l|² + 2)/2 · qmax ≤ 3 qmax.
    let mut constant = 0.0f64;
    for i in 0..d {
        for j in 0..d {
            let mut s = 0.0;
            for k in 0..d {
                for l in 0..d {
                    s += vinv.m[k][i].abs() * vinv.m[l][j].abs();
                }
            }
            constant = constant.max(3.0 * s);
        }
    }
    Ok(PolarizationBound { recovered, qmax, constant })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn half_space_bound_of_diagonal() {
        let m = SmallMat::diag(&[1.0, 2.0]);
        let bound = cone_matrix_bound(&m, &ConeSpec::half_space(2), 721).unwrap();
        assert!((bound - 2.0).abs() < 1e-12);
        assert!(m.m[0][0].abs() <= bound);
    }

    #[test]
    fn polarization_recovers_off_diagonal_entry() {
        let mut m = SmallMat::zeros(2);
        m.m[0][1] = 1.0;
        m.m[1][0] = 1.0;
        let basis = vec![vec![1.0, 0.0], vec![0.0, 1.0]];
        let r = polarization_recover(|xi| m.quad_form(xi), &basis).unwrap();
        assert!((r.recovered.m[0][1] - 1.0).abs() < 1e-15);
        assert!(r.recovered.m[0][0].abs() < 1e-15);
    }

    #[test]
    fn degenerate_cones_are_rejected() {
        let m = SmallMat::identity(2);
        for gamma in [0.5, f64::INFINITY, f64::NAN] {
            let cone = ConeSpec { axis: vec![0.0, 1.0], gamma, h: 1.0 };
            assert!(cone_matrix_bound(&m, &cone, 10).is_err());
        }
        assert!(ConeSpec::new(vec![1.0, 1.0], 2.0, 1.0).is_err());
    }

    #[test]
    fn random_symmetric_matches_dense_sampling() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..5 {
            let e: Vec<f64> = (0..9).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let m = SmallMat::from_fn(3, |i, j| e[3 * i + j]).symmetrized();
            let sampled = cone_matrix_bound(&m, &ConeSpec::half_space(3), 4000).unwrap();
            let mut brute = 0.0f64;
            for _ in 0..100_000 {
                let v: Vec<f64> = (0..3).map(|_| rng.gen_range(-1.0..1.0)).collect();
                let n = dot(&v, &v).sqrt();
                if n < 1e-3 || n > 1.0 {
                    continue;
                }
                let u: Vec<f64> = v.iter().map(|x| x / n).collect();
                brute = brute.max(m.quad_form(&u).abs());
            }
            assert!((sampled - brute).abs() <= 0.01 * brute, "{sampled} vs {brute}");
        }
    }

    proptest! {
        #[test]
        fn polarization_inside_narrow_cones(
            entries in prop::array::uniform9(-2.0f64..2.0),
            gamma in 1.0f64..10.0,
            ax in prop::array::uniform3(-1.0f64..1.0),
        ) {
            let n = dot(&ax, &ax).sqrt();
            prop_assume!(n > 0.1);
            let axis: Vec<f64> = ax.iter().map(|x| x / n).collect();
            let cone = ConeSpec::new(axis, gamma, 1.0).unwrap();
            let m = SmallMat::from_fn(3, |i, j| entries[3 * i + j]).symmetrized();
            let basis = cone.basis_directions();
            for b in &basis {
                prop_assert!(cone.contains(b));
            }
            let r = polarization_recover(|xi| m.quad_form(xi), &basis).unwrap();
            prop_assert!(r.recovered.sub(&m).max_abs() <= 1e-8 * r.constant.max(1.0));
            prop_assert!(m.max_abs() <= r.constant * r.qmax * (1.0 + 1e-9));
        }
    }
}
