//! Compressed-row matrices and the linear solvers behind [`super::solve`].
//!
//! The default path is a banded LU factorization with partial pivoting.
//! Tensor-grid operators have bandwidth `nx + 2`, so the band is narrow
//! and the factorization is exact up to rounding. A Jacobi-preconditioned
//! BiCGSTAB is kept as an alternative with the same residual contract.

use crate::error::{Error, Result};

/// Square sparse matrix in compressed-row form with sorted column indices.
#[derive(Debug, Clone, PartialEq)]
pub struct CsrMatrix {
    n: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    values: Vec<f64>,
}

/// Accumulates `(row, col, value)` contributions; duplicates are summed in
/// insertion order so the result does not depend on anything but the input sequence.
#[derive(Debug, Clone)]
pub struct TripletBuilder {
    n: usize,
    entries: Vec<(usize, usize, f64)>,
}

impl TripletBuilder {
    pub fn new(n: usize) -> Self {
        Self { n, entries: Vec::new() }
    }

    pub fn with_capacity(n: usize, cap: usize) -> Self {
        Self { n, entries: Vec::with_capacity(cap) }
    }

    #[inline]
    pub fn add(&mut self, row: usize, col: usize, value: f64) {
        debug_assert!(row < self.n && col < self.n);
        self.entries.push((row, col, value));
    }

    pub fn build(mut self) -> CsrMatrix {
        // stable sort keeps insertion order within equal (row, col) keys
        self.entries.sort_by_key(|&(r, c, _)| (r, c));
        let mut row_ptr = vec![0usize; self.n + 1];
        let mut col_idx = Vec::with_capacity(self.entries.len() / 2);
        let mut values: Vec<f64> = Vec::with_capacity(self.entries.len() / 2);
        let mut last: Option<(usize, usize)> = None;
        for &(r, c, v) in &self.entries {
            if last == Some((r, c)) {
                *values.last_mut().unwrap() += v;
            } else {
                col_idx.push(c);
                values.push(v);
                row_ptr[r + 1] += 1;
                last = Some((r, c));
            }
        }
        for r in 0..self.n {
            row_ptr[r + 1] += row_ptr[r];
        }
        CsrMatrix { n: self.n, row_ptr, col_idx, values }
    }
}

impl CsrMatrix {
    pub fn identity(n: usize) -> Self {
        Self { n, row_ptr: (0..=n).collect(), col_idx: (0..n).collect(), values: vec![1.0; n] }
    }

    pub fn from_dense(rows: &[Vec<f64>]) -> Self {
        let n = rows.len();
        let mut b = TripletBuilder::new(n);
        for (r, row) in rows.iter().enumerate() {
            assert_eq!(row.len(), n, "matrix must be square");
            for (c, &v) in row.iter().enumerate() {
                if v != 0.0 || r == c {
                    b.add(r, c, v);
                }
            }
        }
        b.build()
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn row(&self, r: usize) -> (&[usize], &[f64]) {
        let range = self.row_ptr[r]..self.row_ptr[r + 1];
        (&self.col_idx[range.clone()], &self.values[range])
    }

    pub(crate) fn row_mut(&mut self, r: usize) -> (&[usize], &mut [f64]) {
        let range = self.row_ptr[r]..self.row_ptr[r + 1];
        (&self.col_idx[range.clone()], &mut self.values[range])
    }

    /// Position of entry `(r, c)` in the value array, if structurally present.
    pub fn find(&self, r: usize, c: usize) -> Option<usize> {
        let start = self.row_ptr[r];
        let cols = &self.col_idx[start..self.row_ptr[r + 1]];
        cols.binary_search(&c).ok().map(|k| start + k)
    }

    pub fn get(&self, r: usize, c: usize) -> f64 {
        self.find(r, c).map_or(0.0, |k| self.values[k])
    }

    pub(crate) fn value_mut(&mut self, pos: usize) -> &mut f64 {
        &mut self.values[pos]
    }

    pub fn has_full_diagonal(&self) -> bool {
        (0..self.n).all(|r| self.find(r, r).is_some())
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.n];
        self.mul_vec_into(x, &mut y);
        y
    }

    pub fn mul_vec_into(&self, x: &[f64], y: &mut [f64]) {
        for r in 0..self.n {
            let (cols, vals) = self.row(r);
            y[r] = cols.iter().zip(vals).map(|(&c, &v)| v * x[c]).sum();
        }
    }

    pub fn to_dense(&self) -> Vec<Vec<f64>> {
        let mut d = vec![vec![0.0; self.n]; self.n];
        for (r, row) in d.iter_mut().enumerate() {
            let (cols, vals) = self.row(r);
            for (&c, &v) in cols.iter().zip(vals) {
                row[c] = v;
            }
        }
        d
    }

    /// Lower and upper bandwidths.
    pub fn bandwidth(&self) -> (usize, usize) {
        let mut kl = 0;
        let mut ku = 0;
        for r in 0..self.n {
            let (cols, _) = self.row(r);
            for &c in cols {
                if c < r {
                    kl = kl.max(r - c);
                } else {
                    ku = ku.max(c - r);
                }
            }
        }
        (kl, ku)
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0_f64, |m, v| m.max(v.abs()))
    }
}

pub fn norm2(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// `||A x - b|| / ||b||`, or the absolute residual when `b = 0`.
pub fn relative_residual(a: &CsrMatrix, x: &[f64], b: &[f64]) -> f64 {
    let ax = a.mul_vec(x);
    let r: Vec<f64> = ax.iter().zip(b).map(|(p, q)| p - q).collect();
    let nb = norm2(b);
    if nb > 0.0 {
        norm2(&r) / nb
    } else {
        norm2(&r)
    }
}

/// Banded LU factorization with partial pivoting (LAPACK `gbtrf` layout).
#[derive(Debug, Clone)]
pub struct BandLu {
    n: usize,
    kl: usize,
    ku: usize,
    ld: usize,
    ab: Vec<f64>,
    piv: Vec<usize>,
}

impl BandLu {
    pub fn factor(a: &CsrMatrix) -> Result<Self> {
        let n = a.dim();
        let (kl, ku) = a.bandwidth();
        let kv = kl + ku;
        let ld = 2 * kl + ku + 1;
        let mut ab = vec![0.0; ld * n];
        for r in 0..n {
            let (cols, vals) = a.row(r);
            for (&c, &v) in cols.iter().zip(vals) {
                ab[c * ld + kv + r - c] = v;
            }
        }
        let scale = a.max_abs();
        let tiny = scale * 1e-13;
        let mut piv = vec![0usize; n];
        let mut ju = 0usize;
        let idx = |r: usize, c: usize| c * ld + kv + r - c;
        for j in 0..n {
            let km = kl.min(n - 1 - j);
            let mut jp = 0;
            let mut best = ab[idx(j, j)].abs();
            for i in 1..=km {
                let v = ab[idx(j + i, j)].abs();
                if v > best {
                    best = v;
                    jp = i;
                }
            }
            piv[j] = j + jp;
            if best <= tiny || best == 0.0 {
                return Err(Error::Singular { row: j, pivot: best });
            }
            ju = ju.max((j + ku + jp).min(n - 1));
            if jp != 0 {
                for c in j..=ju {
                    ab.swap(idx(j, c), idx(j + jp, c));
                }
            }
            let pivot = ab[idx(j, j)];
            let col_start = idx(j + 1, j);
            for i in 0..km {
                ab[col_start + i] /= pivot;
            }
            for c in (j + 1)..=ju {
                let t = ab[idx(j, c)];
                if t != 0.0 {
                    let dst = idx(j + 1, c);
                    for i in 0..km {
                        ab[dst + i] -= ab[col_start + i] * t;
                    }
                }
            }
        }
        Ok(Self { n, kl, ku, ld, ab, piv })
    }

    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let mut x = b.to_vec();
        self.solve_in_place(&mut x);
        x
    }

    pub fn solve_in_place(&self, x: &mut [f64]) {
        let (n, kl, ld) = (self.n, self.kl, self.ld);
        let kv = self.kl + self.ku;
        for j in 0..n {
            let p = self.piv[j];
            if p != j {
                x.swap(j, p);
            }
            let km = kl.min(n - 1 - j);
            let xj = x[j];
            if xj != 0.0 {
                let base = j * ld + kv + 1;
                for i in 0..km {
                    x[j + 1 + i] -= self.ab[base + i] * xj;
                }
            }
        }
        for j in (0..n).rev() {
            let diag = self.ab[j * ld + kv];
            x[j] /= diag;
            let xj = x[j];
            if xj != 0.0 {
                let lo = j.saturating_sub(kv);
                for i in lo..j {
                    x[i] -= self.ab[j * ld + kv + i - j] * xj;
                }
            }
        }
    }
}

/// Jacobi-preconditioned BiCGSTAB. Returns the solution and the achieved relative residual.
pub fn bicgstab(a: &CsrMatrix, b: &[f64], tol: f64, max_iter: usize) -> (Vec<f64>, f64) {
    let n = a.dim();
    let inv_diag: Vec<f64> = (0..n)
        .map(|r| {
            let d = a.get(r, r);
            if d != 0.0 {
                1.0 / d
            } else {
                1.0
            }
        })
        .collect();
    let nb = norm2(b);
    if nb == 0.0 {
        return (vec![0.0; n], 0.0);
    }
    let mut x = vec![0.0; n];
    let mut r = b.to_vec();
    let r_hat = r.clone();
    let (mut rho, mut alpha, mut omega) = (1.0, 1.0, 1.0);
    let mut v = vec![0.0; n];
    let mut p = vec![0.0; n];
    let mut y = vec![0.0; n];
    let mut z = vec![0.0; n];
    let mut t = vec![0.0; n];
    for _ in 0..max_iter {
        let rho_new: f64 = r_hat.iter().zip(&r).map(|(a, b)| a * b).sum();
        if rho_new == 0.0 {
            break;
        }
        let beta = (rho_new / rho) * (alpha / omega);
        rho = rho_new;
        for i in 0..n {
            p[i] = r[i] + beta * (p[i] - omega * v[i]);
            y[i] = inv_diag[i] * p[i];
        }
        a.mul_vec_into(&y, &mut v);
        let denom: f64 = r_hat.iter().zip(&v).map(|(a, b)| a * b).sum();
        if denom == 0.0 {
            break;
        }
        alpha = rho / denom;
        let mut s = r.clone();
        for i in 0..n {
            s[i] -= alpha * v[i];
        }
        if norm2(&s) / nb <= tol {
            for i in 0..n {
                x[i] += alpha * y[i];
            }
            let res = relative_residual(a, &x, b);
            if res <= tol {
                return (x, res);
            }
        }
        for i in 0..n {
            z[i] = inv_diag[i] * s[i];
        }
        a.mul_vec_into(&z, &mut t);
        let tt: f64 = t.iter().map(|v| v * v).sum();
        if tt == 0.0 {
            break;
        }
        omega = t.iter().zip(&s).map(|(a, b)| a * b).sum::<f64>() / tt;
        for i in 0..n {
            x[i] += alpha * y[i] + omega * z[i];
            r[i] = s[i] - omega * t[i];
        }
        if norm2(&r) / nb <= tol {
            let res = relative_residual(a, &x, b);
            if res <= tol {
                return (x, res);
            }
        }
        if omega == 0.0 {
            break;
        }
    }
    let res = relative_residual(a, &x, b);
    (x, res)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tridiag(n: usize) -> CsrMatrix {
        let mut b = TripletBuilder::new(n);
        for i in 0..n {
            b.add(i, i, 4.0);
            if i > 0 {
                b.add(i, i - 1, -1.0);
            }
            if i + 1 < n {
                b.add(i, i + 1, -1.5);
            }
        }
        b.build()
    }

    #[test]
    fn duplicates_are_summed() {
        let mut b = TripletBuilder::new(2);
        b.add(0, 0, 1.0);
        b.add(0, 0, 2.0);
        b.add(1, 0, -1.0);
        b.add(1, 1, 5.0);
        let m = b.build();
        assert_eq!(m.get(0, 0), 3.0);
        assert_eq!(m.get(0, 1), 0.0);
        assert_eq!(m.nnz(), 3);
    }

    #[test]
    fn band_lu_matches_dense_solution() {
        let a = tridiag(30);
        let b: Vec<f64> = (0..30).map(|i| (i as f64 * 0.3).cos()).collect();
        let lu = BandLu::factor(&a).unwrap();
        let x = lu.solve(&b);
        assert!(relative_residual(&a, &x, &b) < 1e-14);
    }

    #[test]
    fn band_lu_pivots_when_needed() {
        let a = CsrMatrix::from_dense(&[vec![0.0, 2.0, 0.0], vec![1.0, 1.0, 0.0], vec![0.0, 3.0, 1.0]]);
        let b = vec![2.0, 3.0, 4.0];
        let x = BandLu::factor(&a).unwrap().solve(&b);
        assert!((x[0] - 2.0).abs() < 1e-14 && (x[1] - 1.0).abs() < 1e-14 && (x[2] - 1.0).abs() < 1e-14);
    }

    #[test]
    fn singular_matrix_detected() {
        let a = CsrMatrix::from_dense(&[vec![1.0, -1.0], vec![-1.0, 1.0]]);
        assert!(matches!(BandLu::factor(&a), Err(Error::Singular { .. })));
    }

    #[test]
    fn bicgstab_converges_on_nonsymmetric_system() {
        let a = tridiag(50);
        let b: Vec<f64> = (0..50).map(|i| 1.0 + i as f64).collect();
        let (x, res) = bicgstab(&a, &b, 1e-12, 500);
        assert!(res <= 1e-12);
        assert!(relative_residual(&a, &x, &b) <= 1e-12);
    }
}
