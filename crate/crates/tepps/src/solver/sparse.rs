//! Minimal sparse linear algebra for the embedded solvers: a row-major
//! matrix for problem assembly and a compressed-column form used by the
//! simplex basis factorization.

use serde::{Deserialize, Serialize};

/// Row-major sparse matrix. Rows are kept in insertion order; entries within
/// a row are sorted by column and duplicates are combined on push.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct SparseMatrix {
    ncols: usize,
    rows: Vec<Vec<(usize, f64)>>,
}

impl SparseMatrix {
    pub fn new(ncols: usize) -> Self {
        Self {
            ncols,
            rows: Vec::new(),
        }
    }

    pub fn nrows(&self) -> usize {
        self.rows.len()
    }

    pub fn ncols(&self) -> usize {
        self.ncols
    }

    pub fn nnz(&self) -> usize {
        self.rows.iter().map(|r| r.len()).sum()
    }

    /// Append a row given as (column, value) pairs. Duplicate columns are
    /// summed; zero entries are dropped. Returns the row index.
    pub fn push_row(&mut self, entries: &[(usize, f64)]) -> usize {
        let mut row: Vec<(usize, f64)> = Vec::with_capacity(entries.len());
        for &(c, v) in entries {
            assert!(c < self.ncols, "column {c} out of bounds ({})", self.ncols);
            row.push((c, v));
        }
        row.sort_unstable_by_key(|&(c, _)| c);
        let mut merged: Vec<(usize, f64)> = Vec::with_capacity(row.len());
        for (c, v) in row {
            match merged.last_mut() {
                Some((lc, lv)) if *lc == c => *lv += v,
                _ => merged.push((c, v)),
            }
        }
        merged.retain(|&(_, v)| v != 0.0);
        self.rows.push(merged);
        self.rows.len() - 1
    }

    pub fn row(&self, i: usize) -> &[(usize, f64)] {
        &self.rows[i]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[(usize, f64)]> {
        self.rows.iter().map(|r| r.as_slice())
    }

    /// Scale row `i` by `factor`.
    pub fn scale_row(&mut self, i: usize, factor: f64) {
        for (_, v) in &mut self.rows[i] {
            *v *= factor;
        }
    }

    /// Largest absolute value in row `i`, or 0 for an empty row.
    pub fn row_max_abs(&self, i: usize) -> f64 {
        self.rows[i]
            .iter()
            .map(|&(_, v)| v.abs())
            .fold(0.0, f64::max)
    }

    /// y = A x.
    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.ncols);
        self.rows
            .iter()
            .map(|row| row.iter().map(|&(c, v)| v * x[c]).sum())
            .collect()
    }

    /// y = A' x (x has one entry per row).
    pub fn mul_transpose_vec(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.nrows());
        let mut out = vec![0.0; self.ncols];
        for (i, row) in self.rows.iter().enumerate() {
            let xi = x[i];
            if xi != 0.0 {
                for &(c, v) in row {
                    out[c] += v * xi;
                }
            }
        }
        out
    }

    /// Dot product of row `i` with `x`.
    pub fn row_dot(&self, i: usize, x: &[f64]) -> f64 {
        self.rows[i].iter().map(|&(c, v)| v * x[c]).sum()
    }
}

/// Compressed-column matrix used inside the simplex engine.
#[derive(Debug, Clone)]
pub struct ColMatrix {
    pub nrows: usize,
    pub col_ptr: Vec<usize>,
    pub row_idx: Vec<usize>,
    pub values: Vec<f64>,
}

impl ColMatrix {
    pub fn ncols(&self) -> usize {
        self.col_ptr.len() - 1
    }

    pub fn col(&self, j: usize) -> (&[usize], &[f64]) {
        let range = self.col_ptr[j]..self.col_ptr[j + 1];
        (&self.row_idx[range.clone()], &self.values[range])
    }

    /// Build from vertically stacked row-major blocks.
    pub fn from_row_blocks(blocks: &[&SparseMatrix], ncols: usize) -> Self {
        let nrows: usize = blocks.iter().map(|b| b.nrows()).sum();
        let mut counts = vec![0usize; ncols + 1];
        for b in blocks {
            for row in b.rows() {
                for &(c, _) in row {
                    counts[c + 1] += 1;
                }
            }
        }
        for j in 0..ncols {
            counts[j + 1] += counts[j];
        }
        let col_ptr = counts.clone();
        let nnz = col_ptr[ncols];
        let mut row_idx = vec![0usize; nnz];
        let mut values = vec![0.0f64; nnz];
        let mut cursor = col_ptr.clone();
        let mut row_offset = 0;
        for b in blocks {
            for (i, row) in b.rows().enumerate() {
                for &(c, v) in row {
                    let p = cursor[c];
                    row_idx[p] = row_offset + i;
                    values[p] = v;
                    cursor[c] += 1;
                }
            }
            row_offset += b.nrows();
        }
        Self {
            nrows,
            col_ptr,
            row_idx,
            values,
        }
    }
}
