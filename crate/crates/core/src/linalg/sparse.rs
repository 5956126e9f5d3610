//! Compressed sparse row matrices.
//!
//! Column indices within a row are kept sorted, so patterns built from the
//! same triplet structure compare equal and lookups are binary searches.

use std::io::Write;

use nalgebra::DMatrix;

#[derive(Debug, Clone, PartialEq)]
pub struct CsrMatrix {
    nrows: usize,
    ncols: usize,
    indptr: Vec<usize>,
    indices: Vec<usize>,
    data: Vec<f64>,
}

impl CsrMatrix {
    /// Builds a matrix from `(row, col, value)` triplets, summing duplicates in
    /// the order they appear.
    pub fn from_triplets(nrows: usize, ncols: usize, triplets: &[(usize, usize, f64)]) -> Self {
        let mut counts = vec![0usize; nrows + 1];
        for &(r, c, _) in triplets {
            assert!(r < nrows && c < ncols, "triplet ({r}, {c}) out of bounds");
            counts[r + 1] += 1;
        }
        for i in 0..nrows {
            counts[i + 1] += counts[i];
        }
        // Stable bucket sort by row keeps duplicate summation order deterministic.
        let mut next = counts.clone();
        let mut order = vec![0usize; triplets.len()];
        for (t, &(r, _, _)) in triplets.iter().enumerate() {
            order[next[r]] = t;
            next[r] += 1;
        }

        let mut indptr = Vec::with_capacity(nrows + 1);
        let mut indices = Vec::new();
        let mut data = Vec::new();
        indptr.push(0);
        let mut row_buf: Vec<(usize, usize)> = Vec::new();
        for r in 0..nrows {
            row_buf.clear();
            for (pos, &t) in order[counts[r]..counts[r + 1]].iter().enumerate() {
                row_buf.push((triplets[t].1, pos));
            }
            row_buf.sort_unstable();
            let start = counts[r];
            let mut last: Option<usize> = None;
            for &(c, pos) in row_buf.iter() {
                let v = triplets[order[start + pos]].2;
                if last == Some(c) {
                    *data.last_mut().unwrap() += v;
                } else {
                    indices.push(c);
                    data.push(v);
                    last = Some(c);
                }
            }
            indptr.push(indices.len());
        }
        Self {
            nrows,
            ncols,
            indptr,
            indices,
            data,
        }
    }

    /// Matrix sharing the sparsity pattern of `self` with new values.
    pub fn with_values(&self, data: Vec<f64>) -> Self {
        assert_eq!(data.len(), self.data.len());
        Self {
            nrows: self.nrows,
            ncols: self.ncols,
            indptr: self.indptr.clone(),
            indices: self.indices.clone(),
            data,
        }
    }

    pub(crate) fn from_raw(
        nrows: usize,
        ncols: usize,
        indptr: Vec<usize>,
        indices: Vec<usize>,
        data: Vec<f64>,
    ) -> Self {
        debug_assert_eq!(indptr.len(), nrows + 1);
        debug_assert_eq!(indices.len(), data.len());
        Self {
            nrows,
            ncols,
            indptr,
            indices,
            data,
        }
    }

    pub fn nrows(&self) -> usize {
        self.nrows
    }

    pub fn ncols(&self) -> usize {
        self.ncols
    }

    pub fn nnz(&self) -> usize {
        self.data.len()
    }

    pub fn indptr(&self) -> &[usize] {
        &self.indptr
    }

    pub fn indices(&self) -> &[usize] {
        &self.indices
    }

    pub fn values(&self) -> &[f64] {
        &self.data
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let r = self.indptr[i]..self.indptr[i + 1];
        self.indices[r.clone()]
            .iter()
            .copied()
            .zip(self.data[r].iter().copied())
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        let r = self.indptr[i]..self.indptr[i + 1];
        match self.indices[r.clone()].binary_search(&j) {
            Ok(p) => self.data[r.start + p],
            Err(_) => 0.0,
        }
    }

    /// Position of entry `(i, j)` in the value array, if stored.
    pub fn position(&self, i: usize, j: usize) -> Option<usize> {
        let r = self.indptr[i]..self.indptr[i + 1];
        self.indices[r.clone()]
            .binary_search(&j)
            .ok()
            .map(|p| r.start + p)
    }

    /// `y = A x`
    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.nrows];
        self.mul_vec_into(x, &mut y);
        y
    }

    pub fn mul_vec_into(&self, x: &[f64], y: &mut [f64]) {
        assert_eq!(x.len(), self.ncols);
        assert_eq!(y.len(), self.nrows);
        for (i, yi) in y.iter_mut().enumerate() {
            let mut s = 0.0;
            for p in self.indptr[i]..self.indptr[i + 1] {
                s += self.data[p] * x[self.indices[p]];
            }
            *yi = s;
        }
    }

    /// Product restricted to the leading `rows` rows and `cols` columns,
    /// i.e. `A[..rows, ..cols] x` with `x.len() == cols`.
    pub fn mul_vec_block(&self, rows: usize, cols: usize, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), cols);
        let mut y = vec![0.0; rows];
        for (i, yi) in y.iter_mut().enumerate() {
            let mut s = 0.0;
            for p in self.indptr[i]..self.indptr[i + 1] {
                let j = self.indices[p];
                if j < cols {
                    s += self.data[p] * x[j];
                }
            }
            *yi = s;
        }
        y
    }

    /// Dense product `A[..rows, ..cols] X` where `X` has `cols` rows.
    pub fn mul_dense_block(&self, rows: usize, cols: usize, x: &DMatrix<f64>) -> DMatrix<f64> {
        assert_eq!(x.nrows(), cols);
        let n = x.ncols();
        let mut out = DMatrix::zeros(rows, n);
        for c in 0..n {
            let xc = x.column(c);
            let mut oc = out.column_mut(c);
            for i in 0..rows {
                let mut s = 0.0;
                for p in self.indptr[i]..self.indptr[i + 1] {
                    let j = self.indices[p];
                    if j < cols {
                        s += self.data[p] * xc[j];
                    }
                }
                oc[i] = s;
            }
        }
        out
    }

    /// Leading principal block `A[..rows, ..cols]` as a new sparse matrix.
    pub fn leading_block(&self, rows: usize, cols: usize) -> CsrMatrix {
        let mut indptr = Vec::with_capacity(rows + 1);
        let mut indices = Vec::new();
        let mut data = Vec::new();
        indptr.push(0);
        for i in 0..rows {
            for p in self.indptr[i]..self.indptr[i + 1] {
                if self.indices[p] < cols {
                    indices.push(self.indices[p]);
                    data.push(self.data[p]);
                }
            }
            indptr.push(indices.len());
        }
        CsrMatrix::from_raw(rows, cols, indptr, indices, data)
    }

    /// Dense copy of `A[..rows, ..cols]`.
    pub fn to_dense_block(&self, rows: usize, cols: usize) -> DMatrix<f64> {
        let mut out = DMatrix::zeros(rows, cols);
        for i in 0..rows {
            for p in self.indptr[i]..self.indptr[i + 1] {
                let j = self.indices[p];
                if j < cols {
                    out[(i, j)] += self.data[p];
                }
            }
        }
        out
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        self.to_dense_block(self.nrows, self.ncols)
    }

    pub fn transpose(&self) -> CsrMatrix {
        let mut trip = Vec::with_capacity(self.nnz());
        for i in 0..self.nrows {
            for (j, v) in self.row(i) {
                trip.push((j, i, v));
            }
        }
        CsrMatrix::from_triplets(self.ncols, self.nrows, &trip)
    }

    /// Frobenius norm.
    pub fn norm_fro(&self) -> f64 {
        self.data.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    /// Maximum absolute entry.
    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn same_pattern(&self, other: &CsrMatrix) -> bool {
        self.nrows == other.nrows
            && self.ncols == other.ncols
            && self.indptr == other.indptr
            && self.indices == other.indices
    }

    /// Writes `row col value` lines in row-major order.
    pub fn write_coo<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "# {} {} {}", self.nrows, self.ncols, self.nnz())?;
        for i in 0..self.nrows {
            for (j, v) in self.row(i) {
                writeln!(w, "{i} {j} {v:e}")?;
            }
        }
        Ok(())
    }
}
