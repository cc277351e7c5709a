//! Compressed sparse rows, ILU(0) and BiCGSTAB.

use rayon::prelude::*;

use crate::error::{Error, Result};

const PAR_ROWS: usize = 4096;

#[derive(Debug, Clone, PartialEq)]
pub struct Csr {
    pub n: usize,
    pub row_ptr: Vec<usize>,
    pub cols: Vec<usize>,
    pub vals: Vec<f64>,
}

impl Csr {
    /// Builds from per-row entry lists; duplicate columns are summed and
    /// columns sorted.
    pub fn from_rows(rows: Vec<Vec<(usize, f64)>>) -> Csr {
        let n = rows.len();
        let mut row_ptr = Vec::with_capacity(n + 1);
        let mut cols = Vec::new();
        let mut vals = Vec::new();
        row_ptr.push(0);
        for mut row in rows {
            row.sort_by_key(|e| e.0);
            let mut last: Option<usize> = None;
            for (c, v) in row {
                debug_assert!(c < n);
                if last == Some(c) {
                    *vals.last_mut().expect("entry") += v;
                } else {
                    cols.push(c);
                    vals.push(v);
                    last = Some(c);
                }
            }
            row_ptr.push(cols.len());
        }
        Csr { n, row_ptr, cols, vals }
    }

    pub fn identity(n: usize) -> Csr {
        Csr { n, row_ptr: (0..=n).collect(), cols: (0..n).collect(), vals: vec![1.0; n] }
    }

    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        (self.row_ptr[i]..self.row_ptr[i + 1]).map(move |k| (self.cols[k], self.vals[k]))
    }

    fn row_dot(&self, i: usize, x: &[f64]) -> f64 {
        let mut acc = 0.0;
        for k in self.row_ptr[i]..self.row_ptr[i + 1] {
            acc += self.vals[k] * x[self.cols[k]];
        }
        acc
    }

    pub fn matvec_into(&self, x: &[f64], y: &mut [f64]) {
        if self.n >= PAR_ROWS {
            y.par_iter_mut().enumerate().for_each(|(i, yi)| *yi = self.row_dot(i, x));
        } else {
            for (i, yi) in y.iter_mut().enumerate() {
                *yi = self.row_dot(i, x);
            }
        }
    }

    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.n];
        self.matvec_into(x, &mut y);
        y
    }

    /// `α·self + β·other`.
    pub fn lin_comb(&self, alpha: f64, other: &Csr, beta: f64) -> Csr {
        assert_eq!(self.n, other.n);
        let rows = (0..self.n)
            .map(|i| {
                self.row(i)
                    .map(|(c, v)| (c, alpha * v))
                    .chain(other.row(i).map(|(c, v)| (c, beta * v)))
                    .collect()
            })
            .collect();
        Csr::from_rows(rows)
    }

    /// `I + s·self`.
    pub fn shifted_identity(&self, s: f64) -> Csr {
        Csr::identity(self.n).lin_comb(1.0, self, s)
    }

    /// Whether off-diagonal entries are `≤ 0` and every row is weakly
    /// diagonally dominant with positive diagonal.
    pub fn is_m_matrix_like(&self) -> bool {
        (0..self.n).all(|i| {
            let mut diag = 0.0;
            let mut off = 0.0;
            for (c, v) in self.row(i) {
                if c == i {
                    diag += v;
                } else if v > 0.0 {
                    return false;
                } else {
                    off -= v;
                }
            }
            diag > 0.0 && diag >= off * (1.0 - 1e-12)
        })
    }
}

/// Incomplete LU factorisation with the sparsity pattern of `A`.
#[derive(Debug, Clone)]
pub struct Ilu0 {
    lu: Csr,
    diag: Vec<usize>,
}

impl Ilu0 {
    pub fn new(a: &Csr) -> Result<Ilu0> {
        let mut lu = a.clone();
        let n = a.n;
        let mut diag = vec![usize::MAX; n];
        for i in 0..n {
            for k in lu.row_ptr[i]..lu.row_ptr[i + 1] {
                if lu.cols[k] == i {
                    diag[i] = k;
                }
            }
            if diag[i] == usize::MAX {
                return Err(Error::Singular(format!("row {i} has no diagonal entry")));
            }
        }
        let mut pos = vec![usize::MAX; n];
        for i in 0..n {
            let (start, end) = (lu.row_ptr[i], lu.row_ptr[i + 1]);
            for k in start..end {
                pos[lu.cols[k]] = k;
            }
            for k in start..end {
                let j = lu.cols[k];
                if j >= i {
                    break;
                }
                let pivot = lu.vals[diag[j]];
                let factor = lu.vals[k] / pivot;
                lu.vals[k] = factor;
                for m in diag[j] + 1..lu.row_ptr[j + 1] {
                    let p = pos[lu.cols[m]];
                    if p != usize::MAX {
                        lu.vals[p] -= factor * lu.vals[m];
                    }
                }
            }
            for k in start..end {
                pos[lu.cols[k]] = usize::MAX;
            }
            let d = lu.vals[diag[i]];
            if d == 0.0 || !d.is_finite() {
                return Err(Error::Singular(format!("zero pivot in row {i}")));
            }
        }
        Ok(Ilu0 { lu, diag })
    }

    /// Solves `LU z = r`.
    pub fn apply(&self, r: &[f64], z: &mut [f64]) {
        let lu = &self.lu;
        for i in 0..lu.n {
            let mut acc = r[i];
            for k in lu.row_ptr[i]..self.diag[i] {
                acc -= lu.vals[k] * z[lu.cols[k]];
            }
            z[i] = acc;
        }
        for i in (0..lu.n).rev() {
            let mut acc = z[i];
            for k in self.diag[i] + 1..lu.row_ptr[i + 1] {
                acc -= lu.vals[k] * z[lu.cols[k]];
            }
            z[i] = acc / lu.vals[self.diag[i]];
        }
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolveStats {
    pub iterations: usize,
    pub relative_residual: f64,
}

/// Right-preconditioned BiCGSTAB for `A x = b` starting from `x`, stopping at
/// `‖b − Ax‖ ≤ tol·‖b‖`.
pub fn bicgstab(a: &Csr, pre: &Ilu0, b: &[f64], x: &mut [f64], tol: f64, max_iter: usize) -> Result<SolveStats> {
    let n = a.n;
    let bn = norm(b);
    if bn == 0.0 {
        x.iter_mut().for_each(|v| *v = 0.0);
        return Ok(SolveStats { iterations: 0, relative_residual: 0.0 });
    }
    let mut r = a.matvec(x);
    for i in 0..n {
        r[i] = b[i] - r[i];
    }
    let r_hat = r.clone();
    let mut rho = 1.0;
    let mut alpha = 1.0;
    let mut omega = 1.0;
    let mut v = vec![0.0; n];
    let mut p = vec![0.0; n];
    let mut y = vec![0.0; n];
    let mut z = vec![0.0; n];
    let mut s = vec![0.0; n];
    let mut t = vec![0.0; n];
    let mut res = norm(&r) / bn;
    if res <= tol {
        return Ok(SolveStats { iterations: 0, relative_residual: res });
    }
    for it in 1..=max_iter {
        let rho_new = dot(&r_hat, &r);
        if rho_new == 0.0 || omega == 0.0 {
            break;
        }
        let beta = (rho_new / rho) * (alpha / omega);
        rho = rho_new;
        for i in 0..n {
            p[i] = r[i] + beta * (p[i] - omega * v[i]);
        }
        pre.apply(&p, &mut y);
        a.matvec_into(&y, &mut v);
        let rv = dot(&r_hat, &v);
        if rv == 0.0 {
            break;
        }
        alpha = rho / rv;
        for i in 0..n {
            s[i] = r[i] - alpha * v[i];
        }
        if norm(&s) / bn <= tol {
            for i in 0..n {
                x[i] += alpha * y[i];
            }
            return Ok(SolveStats { iterations: it, relative_residual: norm(&s) / bn });
        }
        pre.apply(&s, &mut z);
        a.matvec_into(&z, &mut t);
        let tt = dot(&t, &t);
        omega = if tt > 0.0 { dot(&t, &s) / tt } else { 0.0 };
        for i in 0..n {
            x[i] += alpha * y[i] + omega * z[i];
            r[i] = s[i] - omega * t[i];
        }
        res = norm(&r) / bn;
        if res <= tol {
            return Ok(SolveStats { iterations: it, relative_residual: res });
        }
    }
    // Confirm against the true residual before giving up.
    let ax = a.matvec(x);
    let true_res = norm(&ax.iter().zip(b).map(|(p, q)| q - p).collect::<Vec<_>>()) / bn;
    if true_res <= tol {
        return Ok(SolveStats { iterations: max_iter, relative_residual: true_res });
    }
    Err(Error::LinearSolve { iterations: max_iter, residual: true_res })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn laplacian_1d(n: usize, shift: f64) -> Csr {
        Csr::from_rows(
            (0..n)
                .map(|i| {
                    let mut r = vec![(i, 2.0 + shift)];
                    if i > 0 {
                        r.push((i - 1, -1.0));
                    }
                    if i + 1 < n {
                        r.push((i + 1, -1.0));
                    }
                    r
                })
                .collect(),
        )
    }

    #[test]
    fn ilu_is_exact_for_tridiagonal() {
        let a = laplacian_1d(50, 0.1);
        let pre = Ilu0::new(&a).unwrap();
        let x: Vec<f64> = (0..50).map(|i| (i as f64 * 0.3).sin()).collect();
        let b = a.matvec(&x);
        let mut z = vec![0.0; 50];
        pre.apply(&b, &mut z);
        let err = z.iter().zip(&x).map(|(p, q)| (p - q).abs()).fold(0.0, f64::max);
        assert!(err < 1e-12);
    }

    #[test]
    fn duplicates_are_summed() {
        let a = Csr::from_rows(vec![vec![(1, 1.0), (0, 2.0), (1, 3.0)], vec![(1, 1.0)]]);
        assert_eq!(a.cols, vec![0, 1, 1]);
        assert_eq!(a.vals, vec![2.0, 4.0, 1.0]);
        assert!(Ilu0::new(&Csr::from_rows(vec![vec![(1, 1.0)], vec![(1, 1.0)]])).is_err());
    }

    #[test]
    fn m_matrix_detection() {
        assert!(laplacian_1d(10, 0.0).is_m_matrix_like());
        let bad = Csr::from_rows(vec![vec![(0, 1.0), (1, 0.5)], vec![(1, 1.0)]]);
        assert!(!bad.is_m_matrix_like());
    }

    proptest! {
        #[test]
        fn bicgstab_solves_nonsymmetric_systems(seed in 0u64..1000, n in 20usize..200) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let rows = (0..n)
                .map(|i| {
                    let mut r = vec![(i, 4.0 + rng.gen::<f64>())];
                    for _ in 0..3 {
                        let j = rng.gen_range(0..n);
                        if j != i {
                            r.push((j, rng.gen_range(-1.0..1.0)));
                        }
                    }
                    r
                })
                .collect();
            let a = Csr::from_rows(rows);
            let truth: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let b = a.matvec(&truth);
            let pre = Ilu0::new(&a).unwrap();
            let mut x = vec![0.0; n];
            let stats = bicgstab(&a, &pre, &b, &mut x, 1e-12, 500).unwrap();
            prop_assert!(stats.relative_residual <= 1e-12);
            let err = x.iter().zip(&truth).map(|(p, q)| (p - q).abs()).fold(0.0, f64::max);
            prop_assert!(err < 1e-9);
        }
    }
}
