//! Envelope (skyline) Cholesky factorization for sparse SPD systems, with a
//! reverse Cuthill-McKee reordering to keep the profile small.

use std::collections::VecDeque;

use crate::error::{Error, Result};
use crate::linalg::sparse::CsrMatrix;

#[derive(Debug, Clone)]
pub struct SkylineCholesky {
    n: usize,
    /// `perm[new] = old`
    perm: Vec<usize>,
    /// `inv[old] = new`
    inv: Vec<usize>,
    /// First stored column of each row of L (in permuted numbering).
    first: Vec<usize>,
    /// Offset of row i's storage; row i holds columns `first[i]..=i`.
    start: Vec<usize>,
    vals: Vec<f64>,
    condition_estimate: f64,
}

/// Reverse Cuthill-McKee ordering of the symmetric pattern of `a`.
pub fn reverse_cuthill_mckee(a: &CsrMatrix) -> Vec<usize> {
    let n = a.nrows();
    let degree: Vec<usize> = (0..n)
        .map(|i| a.row(i).filter(|&(j, _)| j != i).count())
        .collect();
    let mut visited = vec![false; n];
    let mut order = Vec::with_capacity(n);
    let mut by_degree: Vec<usize> = (0..n).collect();
    by_degree.sort_by_key(|&i| (degree[i], i));
    let mut queue = VecDeque::new();
    let mut nbrs = Vec::new();
    for &seed in &by_degree {
        if visited[seed] {
            continue;
        }
        visited[seed] = true;
        queue.push_back(seed);
        while let Some(v) = queue.pop_front() {
            order.push(v);
            nbrs.clear();
            nbrs.extend(a.row(v).map(|(j, _)| j).filter(|&j| j != v && !visited[j]));
            nbrs.sort_by_key(|&j| (degree[j], j));
            for &j in &nbrs {
                if !visited[j] {
                    visited[j] = true;
                    queue.push_back(j);
                }
            }
        }
    }
    order.reverse();
    order
}

impl SkylineCholesky {
    /// Factors a symmetric positive definite matrix. Only the lower triangle
    /// (after reordering) is read, so `a` must be numerically symmetric.
    pub fn factor(a: &CsrMatrix) -> Result<Self> {
        let n = a.nrows();
        if a.ncols() != n {
            return Err(Error::DimensionMismatch {
                what: "square matrix",
                expected: n,
                found: a.ncols(),
            });
        }
        let perm = reverse_cuthill_mckee(a);
        let mut inv = vec![0; n];
        for (new, &old) in perm.iter().enumerate() {
            inv[old] = new;
        }

        let mut first: Vec<usize> = (0..n).collect();
        for old in 0..n {
            let i = inv[old];
            for (jold, _) in a.row(old) {
                let j = inv[jold];
                if j < first[i] {
                    first[i] = j;
                }
            }
        }
        let mut start = Vec::with_capacity(n + 1);
        let mut total = 0;
        for i in 0..n {
            start.push(total);
            total += i - first[i] + 1;
        }
        start.push(total);
        let mut vals = vec![0.0; total];
        for old in 0..n {
            let i = inv[old];
            for (jold, v) in a.row(old) {
                let j = inv[jold];
                if j <= i {
                    vals[start[i] + j - first[i]] += v;
                }
            }
        }

        let mut dmax: f64 = 0.0;
        let mut dmin = f64::INFINITY;
        for i in 0..n {
            let fi = first[i];
            for j in fi..i {
                let fj = first[j];
                let k0 = fi.max(fj);
                let mut s = vals[start[i] + j - fi];
                let ri = start[i] + k0 - fi;
                let rj = start[j] + k0 - fj;
                for k in 0..(j - k0) {
                    s -= vals[ri + k] * vals[rj + k];
                }
                vals[start[i] + j - fi] = s / vals[start[j] + j - fj];
            }
            let di = start[i] + i - fi;
            let mut d = vals[di];
            for k in start[i]..di {
                d -= vals[k] * vals[k];
            }
            if !(d > 0.0) || !d.is_finite() {
                return Err(Error::NotPositiveDefinite(format!(
                    "pivot {i} of {n} is {d:.3e}"
                )));
            }
            let l = d.sqrt();
            vals[di] = l;
            dmax = dmax.max(d);
            dmin = dmin.min(d);
        }
        Ok(Self {
            n,
            perm,
            inv,
            first,
            start,
            vals,
            condition_estimate: if n == 0 { 1.0 } else { dmax / dmin },
        })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    /// Ratio of the largest to smallest squared pivot; a cheap lower-bound
    /// style indicator of the spectral condition number.
    pub fn condition_estimate(&self) -> f64 {
        self.condition_estimate
    }

    pub fn solve_in_place(&self, b: &mut [f64]) {
        assert_eq!(b.len(), self.n);
        let mut y: Vec<f64> = (0..self.n).map(|i| b[self.perm[i]]).collect();
        // L y = b
        for i in 0..self.n {
            let fi = self.first[i];
            let row = &self.vals[self.start[i]..self.start[i + 1]];
            let mut s = y[i];
            for (k, &l) in row[..i - fi].iter().enumerate() {
                s -= l * y[fi + k];
            }
            y[i] = s / row[i - fi];
        }
        // L^T x = y
        for i in (0..self.n).rev() {
            let fi = self.first[i];
            let row = &self.vals[self.start[i]..self.start[i + 1]];
            let xi = y[i] / row[i - fi];
            y[i] = xi;
            for (k, &l) in row[..i - fi].iter().enumerate() {
                y[fi + k] -= l * xi;
            }
        }
        for (old, bi) in b.iter_mut().enumerate() {
            *bi = y[self.inv[old]];
        }
    }

    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let mut x = b.to_vec();
        self.solve_in_place(&mut x);
        x
    }

    /// Solves for every column of `b`.
    pub fn solve_dense(&self, b: &nalgebra::DMatrix<f64>) -> nalgebra::DMatrix<f64> {
        assert_eq!(b.nrows(), self.n);
        let mut out = b.clone();
        let mut buf = vec![0.0; self.n];
        for c in 0..out.ncols() {
            buf.copy_from_slice(out.column(c).as_slice());
            self.solve_in_place(&mut buf);
            out.column_mut(c).copy_from_slice(&buf);
        }
        out
    }

    pub fn profile_size(&self) -> usize {
        self.vals.len()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn laplacian_1d(n: usize) -> CsrMatrix {
        let mut t = Vec::new();
        for i in 0..n {
            t.push((i, i, 2.0));
            if i > 0 {
                t.push((i, i - 1, -1.0));
                t.push((i - 1, i, -1.0));
            }
        }
        CsrMatrix::from_triplets(n, n, &t)
    }

    #[test]
    fn solves_tridiagonal_system() {
        let a = laplacian_1d(50);
        let x0: Vec<f64> = (0..50).map(|i| (i as f64 * 0.3).sin()).collect();
        let b = a.mul_vec(&x0);
        let f = SkylineCholesky::factor(&a).unwrap();
        let x = f.solve(&b);
        for (u, v) in x.iter().zip(&x0) {
            assert!((u - v).abs() < 1e-11);
        }
    }

    #[test]
    fn rejects_indefinite_matrix() {
        let a =
            CsrMatrix::from_triplets(2, 2, &[(0, 0, 1.0), (0, 1, 2.0), (1, 0, 2.0), (1, 1, 1.0)]);
        assert!(matches!(
            SkylineCholesky::factor(&a),
            Err(Error::NotPositiveDefinite(_))
        ));
    }

    #[test]
    fn rcm_is_a_permutation() {
        let a = laplacian_1d(17);
        let mut p = reverse_cuthill_mckee(&a);
        p.sort_unstable();
        assert_eq!(p, (0..17).collect::<Vec<_>>());
    }
}
