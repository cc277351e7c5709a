//! Dense d×d matrices for d ≤ 3.

use serde::{Deserialize, Serialize};

/// A square matrix of dimension `d ≤ 3`, stored row-major in a fixed array.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SmallMat {
    pub d: usize,
    pub m: [[f64; 3]; 3],
}

impl SmallMat {
    pub fn zeros(d: usize) -> Self {
        assert!((1..=3).contains(&d), "dimension must be 1, 2 or 3");
        SmallMat { d, m: [[0.0; 3]; 3] }
    }

    pub fn identity(d: usize) -> Self {
        let mut out = Self::zeros(d);
        for i in 0..d {
            out.m[i][i] = 1.0;
        }
        out
    }

    pub fn diag(values: &[f64]) -> Self {
        let mut out = Self::zeros(values.len());
        for (i, v) in values.iter().enumerate() {
            out.m[i][i] = *v;
        }
        out
    }

    pub fn from_fn(d: usize, f: impl Fn(usize, usize) -> f64) -> Self {
        let mut out = Self::zeros(d);
        for i in 0..d {
            for j in 0..d {
                out.m[i][j] = f(i, j);
            }
        }
        out
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.m[i][j]
    }

    pub fn scale(&self, s: f64) -> Self {
        Self::from_fn(self.d, |i, j| self.m[i][j] * s)
    }

    pub fn add(&self, other: &Self) -> Self {
        debug_assert_eq!(self.d, other.d);
        Self::from_fn(self.d, |i, j| self.m[i][j] + other.m[i][j])
    }

    pub fn sub(&self, other: &Self) -> Self {
        debug_assert_eq!(self.d, other.d);
        Self::from_fn(self.d, |i, j| self.m[i][j] - other.m[i][j])
    }

    pub fn mul(&self, other: &Self) -> Self {
        debug_assert_eq!(self.d, other.d);
        Self::from_fn(self.d, |i, j| {
            (0..self.d).map(|k| self.m[i][k] * other.m[k][j]).sum()
        })
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.d, |i, j| self.m[j][i])
    }

    /// (A + Aᵀ)/2.
    pub fn symmetrized(&self) -> Self {
        Self::from_fn(self.d, |i, j| 0.5 * (self.m[i][j] + self.m[j][i]))
    }

    /// xᵀ A x.
    pub fn quad_form(&self, x: &[f64]) -> f64 {
        let mut s = 0.0;
        for i in 0..self.d {
            for j in 0..self.d {
                s += self.m[i][j] * x[i] * x[j];
            }
        }
        s
    }

    pub fn mul_vec(&self, x: &[f64]) -> [f64; 3] {
        let mut out = [0.0; 3];
        for (i, o) in out.iter_mut().enumerate().take(self.d) {
            *o = (0..self.d).map(|j| self.m[i][j] * x[j]).sum();
        }
        out
    }

    pub fn max_abs(&self) -> f64 {
        let mut m: f64 = 0.0;
        for i in 0..self.d {
            for j in 0..self.d {
                m = m.max(self.m[i][j].abs());
            }
        }
        m
    }

    pub fn det(&self) -> f64 {
        let m = &self.m;
        match self.d {
            1 => m[0][0],
            2 => m[0][0] * m[1][1] - m[0][1] * m[1][0],
            _ => {
                m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1])
                    - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
                    + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
            }
        }
    }

    /// Inverse by closed form for d ≤ 2 and by Gauss–Jordan elimination with
    /// partial pivoting for d = 3. Returns `None` when (numerically) singular.
    pub fn inverse(&self) -> Option<Self> {
        let scale = self.max_abs();
        if scale == 0.0 || !scale.is_finite() {
            return None;
        }
        let tiny = 1e-14 * scale;
        match self.d {
            1 => {
                let a = self.m[0][0];
                (a.abs() > tiny).then(|| Self::diag(&[1.0 / a]))
            }
            2 => {
                let det = self.det();
                if det.abs() <= tiny * scale {
                    return None;
                }
                let m = &self.m;
                let mut out = Self::zeros(2);
                out.m[0][0] = m[1][1] / det;
                out.m[0][1] = -m[0][1] / det;
                out.m[1][0] = -m[1][0] / det;
                out.m[1][1] = m[0][0] / det;
                Some(out)
            }
            _ => {
                let mut a = self.m;
                let mut inv = Self::identity(3).m;
                for col in 0..3 {
                    let pivot = (col..3)
                        .max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))
                        .expect("non-empty range");
                    if a[pivot][col].abs() <= tiny {
                        return None;
                    }
                    a.swap(col, pivot);
                    inv.swap(col, pivot);
                    let p = a[col][col];
                    for k in 0..3 {
                        a[col][k] /= p;
                        inv[col][k] /= p;
                    }
                    for row in 0..3 {
                        if row != col {
                            let factor = a[row][col];
                            for k in 0..3 {
                                a[row][k] -= factor * a[col][k];
                                inv[row][k] -= factor * inv[col][k];
                            }
                        }
                    }
                }
                Some(SmallMat { d: 3, m: inv })
            }
        }
    }

    /// Eigenvalues of the symmetric part, ascending. Closed form for d ≤ 2,
    /// cyclic Jacobi rotations for d = 3.
    pub fn sym_eigenvalues(&self) -> Vec<f64> {
        let s = self.symmetrized();
        let m = &s.m;
        match self.d {
            1 => vec![m[0][0]],
            2 => {
                let mean = 0.5 * (m[0][0] + m[1][1]);
                let half_diff = 0.5 * (m[0][0] - m[1][1]);
                let r = half_diff.hypot(m[0][1]);
                vec![mean - r, mean + r]
            }
            _ => {
                let mut ev = jacobi_eigenvalues(s.m);
                ev.sort_by(f64::total_cmp);
                ev.to_vec()
            }
        }
    }
}

fn jacobi_eigenvalues(mut a: [[f64; 3]; 3]) -> [f64; 3] {
    for _sweep in 0..50 {
        let off = a[0][1] * a[0][1] + a[0][2] * a[0][2] + a[1][2] * a[1][2];
        let diag = a[0][0] * a[0][0] + a[1][1] * a[1][1] + a[2][2] * a[2][2];
        if off <= 1e-30 * diag.max(1e-300) {
            break;
        }
        for (p, q) in [(0, 1), (0, 2), (1, 2)] {
            if a[p][q] == 0.0 {
                continue;
            }
            let theta = (a[q][q] - a[p][p]) / (2.0 * a[p][q]);
            let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
            let t = if theta == 0.0 { 1.0 } else { t };
            let c = 1.0 / (t * t + 1.0).sqrt();
            let s = t * c;
            // A ← Jᵀ A J with the rotation in the (p, q) plane.
            for k in 0..3 {
                let akp = a[k][p];
                let akq = a[k][q];
                a[k][p] = c * akp - s * akq;
                a[k][q] = s * akp + c * akq;
            }
            for k in 0..3 {
                let apk = a[p][k];
                let aqk = a[q][k];
                a[p][k] = c * apk - s * aqk;
                a[q][k] = s * apk + c * aqk;
            }
        }
    }
    [a[0][0], a[1][1], a[2][2]]
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn closed_form_eigenvalues() {
        assert_eq!(SmallMat::diag(&[2.0, 1.0]).sym_eigenvalues(), vec![1.0, 2.0]);
        let m = SmallMat::from_fn(2, |i, j| if i == j { 2.0 } else { 1.0 });
        let ev = m.sym_eigenvalues();
        assert!((ev[0] - 1.0).abs() < 1e-15 && (ev[1] - 3.0).abs() < 1e-15);
    }

    #[test]
    fn jacobi_matches_known_spectrum() {
        // Tridiagonal (2, -1) has eigenvalues 2 - 2 cos(kπ/4).
        let m = SmallMat::from_fn(3, |i, j| match (i as i64 - j as i64).abs() {
            0 => 2.0,
            1 => -1.0,
            _ => 0.0,
        });
        let ev = m.sym_eigenvalues();
        for (k, v) in ev.iter().enumerate() {
            let exact = 2.0 - 2.0 * (((k + 1) as f64) * std::f64::consts::PI / 4.0).cos();
            assert!((v - exact).abs() < 1e-12, "{v} vs {exact}");
        }
    }

    #[test]
    fn singular_inverse_is_none() {
        assert!(SmallMat::zeros(2).inverse().is_none());
        let m = SmallMat::from_fn(3, |i, _| i as f64);
        assert!(m.inverse().is_none());
    }

    proptest! {
        #[test]
        fn inverse_times_matrix_is_identity(
            d in 1usize..=3,
            entries in prop::array::uniform9(-1.0f64..1.0),
        ) {
            // Diagonally dominant so the inverse exists and is well conditioned.
            let m = SmallMat::from_fn(d, |i, j| entries[3 * i + j] + if i == j { 4.0 } else { 0.0 });
            let inv = m.inverse().unwrap();
            let prod = m.mul(&inv);
            prop_assert!(prod.sub(&SmallMat::identity(d)).max_abs() < 1e-12);
        }

        #[test]
        fn eigenvalues_sum_to_trace(entries in prop::array::uniform9(-3.0f64..3.0)) {
            let m = SmallMat::from_fn(3, |i, j| entries[3 * i + j]).symmetrized();
            let ev = m.sym_eigenvalues();
            let trace = m.m[0][0] + m.m[1][1] + m.m[2][2];
            prop_assert!((ev.iter().sum::<f64>() - trace).abs() < 1e-10);
            prop_assert!((ev.iter().product::<f64>() - m.det()).abs() < 1e-8);
        }
    }
}
