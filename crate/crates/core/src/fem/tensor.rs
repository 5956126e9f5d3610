//! Sparse rank-3 tensors stored as a CSR "slot" pattern over two indices,
//! with a sorted list of (third index, value) pairs per slot.

use std::collections::BTreeMap;

use crate::linalg::CsrMatrix;

#[derive(Debug, Clone, PartialEq)]
pub struct TripleTensor {
    n: usize,
    /// Slot pattern over (row, col); values are placeholders.
    slots: CsrMatrix,
    third_ptr: Vec<usize>,
    third_idx: Vec<usize>,
    third_val: Vec<f64>,
}

impl TripleTensor {
    /// Builds from entries keyed `(row, col, third)`, already accumulated.
    pub(crate) fn from_sorted(n: usize, entries: &BTreeMap<(usize, usize, usize), f64>) -> Self {
        let mut indptr = vec![0usize; n + 1];
        let mut indices = Vec::new();
        let mut third_ptr = vec![0usize];
        let mut third_idx = Vec::with_capacity(entries.len());
        let mut third_val = Vec::with_capacity(entries.len());
        let mut current: Option<(usize, usize)> = None;
        for (&(r, c, t), &v) in entries {
            if current != Some((r, c)) {
                if current.is_some() {
                    third_ptr.push(third_idx.len());
                }
                indices.push(c);
                indptr[r + 1] += 1;
                current = Some((r, c));
            }
            third_idx.push(t);
            third_val.push(v);
        }
        if current.is_some() {
            third_ptr.push(third_idx.len());
        }
        for i in 0..n {
            indptr[i + 1] += indptr[i];
        }
        let data = vec![0.0; indices.len()];
        Self {
            n,
            slots: CsrMatrix::from_raw(n, n, indptr, indices, data),
            third_ptr,
            third_idx,
            third_val,
        }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    /// Number of stored (row, col, third) entries.
    pub fn nnz(&self) -> usize {
        self.third_val.len()
    }

    pub fn slot_pattern(&self) -> &CsrMatrix {
        &self.slots
    }

    pub fn get(&self, row: usize, col: usize, third: usize) -> f64 {
        match self.slots.position(row, col) {
            None => 0.0,
            Some(s) => {
                let r = self.third_ptr[s]..self.third_ptr[s + 1];
                match self.third_idx[r.clone()].binary_search(&third) {
                    Ok(p) => self.third_val[r.start + p],
                    Err(_) => 0.0,
                }
            }
        }
    }

    /// Matrix `X[row][col] = col_scale[col] * sum_t v[t] T[row][col][t]` on
    /// the slot pattern. `col_scale = None` means no scaling.
    pub fn contract_third(&self, v: &[f64], col_scale: Option<&[f64]>) -> CsrMatrix {
        assert_eq!(v.len(), self.n);
        let idx = self.slots.indices();
        let data: Vec<f64> = (0..idx.len())
            .map(|s| {
                let mut acc = 0.0;
                for p in self.third_ptr[s]..self.third_ptr[s + 1] {
                    acc += self.third_val[p] * v[self.third_idx[p]];
                }
                match col_scale {
                    Some(w) => acc * w[idx[s]],
                    None => acc,
                }
            })
            .collect();
        self.slots.with_values(data)
    }

    /// Vector `y[row] = sum_{col,t} a[t] b[col] T[row][col][t]`.
    pub fn contract_both(&self, a: &[f64], b: &[f64]) -> Vec<f64> {
        assert_eq!(a.len(), self.n);
        assert_eq!(b.len(), self.n);
        let ptr = self.slots.indptr();
        let idx = self.slots.indices();
        (0..self.n)
            .map(|r| {
                let mut y = 0.0;
                for s in ptr[r]..ptr[r + 1] {
                    let mut acc = 0.0;
                    for p in self.third_ptr[s]..self.third_ptr[s + 1] {
                        acc += self.third_val[p] * a[self.third_idx[p]];
                    }
                    y += acc * b[idx[s]];
                }
                y
            })
            .collect()
    }

    /// Visits every stored entry as `(row, col, third, value)` in storage order.
    pub fn for_each(&self, mut f: impl FnMut(usize, usize, usize, f64)) {
        let ptr = self.slots.indptr();
        let idx = self.slots.indices();
        for r in 0..self.n {
            for s in ptr[r]..ptr[r + 1] {
                for p in self.third_ptr[s]..self.third_ptr[s + 1] {
                    f(r, idx[s], self.third_idx[p], self.third_val[p]);
                }
            }
        }
    }
}
