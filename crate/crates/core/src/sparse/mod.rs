//! Compressed sparse row matrices and a direct LU solver.

mod lu;

use nalgebra::DMatrix;
use thiserror::Error;

pub use lu::{factorize, Factorization, DEFAULT_PIVOT_TOL};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SparseError {
    #[error("matrix is structurally singular (column {column} has no admissible pivot)")]
    StructurallySingular { column: usize },
    #[error("matrix is numerically singular (pivot {pivot} below tolerance)")]
    NumericallySingular { pivot: usize },
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("matrix is not square ({rows}x{cols})")]
    NotSquare { rows: usize, cols: usize },
    #[error("fill-reducing ordering failed: {0}")]
    Ordering(String),
}

/// Accumulates `(row, col, value)` entries; duplicates are summed on conversion.
#[derive(Clone, Debug, Default)]
pub struct Triplets {
    nrows: usize,
    ncols: usize,
    entries: Vec<(usize, usize, f64)>,
}

impl Triplets {
    pub fn new(nrows: usize, ncols: usize) -> Self {
        Triplets {
            nrows,
            ncols,
            entries: Vec::new(),
        }
    }

    pub fn with_capacity(nrows: usize, ncols: usize, cap: usize) -> Self {
        Triplets {
            nrows,
            ncols,
            entries: Vec::with_capacity(cap),
        }
    }

    pub fn push(&mut self, row: usize, col: usize, value: f64) {
        debug_assert!(row < self.nrows && col < self.ncols);
        self.entries.push((row, col, value));
    }

    pub fn extend(&mut self, other: Triplets) {
        assert_eq!((self.nrows, self.ncols), (other.nrows, other.ncols));
        self.entries.extend(other.entries);
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn to_csr(&self) -> SparseMatrix {
        SparseMatrix::from_triplets(self.nrows, self.ncols, &self.entries)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SparseMatrix {
    nrows: usize,
    ncols: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    values: Vec<f64>,
}

impl SparseMatrix {
    /// Builds a CSR matrix; duplicate entries are summed and exact zeros dropped.
    pub fn from_triplets(nrows: usize, ncols: usize, entries: &[(usize, usize, f64)]) -> Self {
        let mut sorted: Vec<(usize, usize, f64)> = entries.to_vec();
        sorted.sort_by(|a, b| (a.0, a.1).cmp(&(b.0, b.1)));
        let mut row_ptr = vec![0usize; nrows + 1];
        let mut col_idx = Vec::with_capacity(sorted.len());
        let mut values: Vec<f64> = Vec::with_capacity(sorted.len());
        let mut rows = Vec::with_capacity(sorted.len());
        let mut i = 0;
        while i < sorted.len() {
            let (r, c, _) = sorted[i];
            assert!(r < nrows && c < ncols, "entry ({r},{c}) out of bounds");
            let mut v = 0.0;
            while i < sorted.len() && sorted[i].0 == r && sorted[i].1 == c {
                v += sorted[i].2;
                i += 1;
            }
            if v != 0.0 {
                rows.push(r);
                col_idx.push(c);
                values.push(v);
            }
        }
        for &r in &rows {
            row_ptr[r + 1] += 1;
        }
        for r in 0..nrows {
            row_ptr[r + 1] += row_ptr[r];
        }
        SparseMatrix {
            nrows,
            ncols,
            row_ptr,
            col_idx,
            values,
        }
    }

    pub fn zeros(nrows: usize, ncols: usize) -> Self {
        SparseMatrix {
            nrows,
            ncols,
            row_ptr: vec![0; nrows + 1],
            col_idx: Vec::new(),
            values: Vec::new(),
        }
    }

    pub fn identity(n: usize) -> Self {
        SparseMatrix {
            nrows: n,
            ncols: n,
            row_ptr: (0..=n).collect(),
            col_idx: (0..n).collect(),
            values: vec![1.0; n],
        }
    }

    pub fn from_dense(a: &DMatrix<f64>) -> Self {
        let mut entries = Vec::new();
        for i in 0..a.nrows() {
            for j in 0..a.ncols() {
                if a[(i, j)] != 0.0 {
                    entries.push((i, j, a[(i, j)]));
                }
            }
        }
        Self::from_triplets(a.nrows(), a.ncols(), &entries)
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        let mut d = DMatrix::zeros(self.nrows, self.ncols);
        for (i, j, v) in self.iter() {
            d[(i, j)] += v;
        }
        d
    }

    pub fn nrows(&self) -> usize {
        self.nrows
    }

    pub fn ncols(&self) -> usize {
        self.ncols
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn row_ptr(&self) -> &[usize] {
        &self.row_ptr
    }

    pub fn col_idx(&self) -> &[usize] {
        &self.col_idx
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let r = self.row_ptr[i]..self.row_ptr[i + 1];
        self.col_idx[r.clone()].iter().copied().zip(self.values[r].iter().copied())
    }

    pub fn iter(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        (0..self.nrows).flat_map(move |i| self.row(i).map(move |(j, v)| (i, j, v)))
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        let r = self.row_ptr[i]..self.row_ptr[i + 1];
        match self.col_idx[r.clone()].binary_search(&j) {
            Ok(p) => self.values[r.start + p],
            Err(_) => 0.0,
        }
    }

    pub fn matvec(&self, x: &[f64]) -> Result<Vec<f64>, SparseError> {
        if x.len() != self.ncols {
            return Err(SparseError::DimensionMismatch {
                expected: self.ncols,
                got: x.len(),
            });
        }
        Ok((0..self.nrows).map(|i| self.row(i).map(|(j, v)| v * x[j]).sum()).collect())
    }

    pub fn transpose(&self) -> SparseMatrix {
        let entries: Vec<_> = self.iter().map(|(i, j, v)| (j, i, v)).collect();
        Self::from_triplets(self.ncols, self.nrows, &entries)
    }

    pub fn scale(&self, c: f64) -> SparseMatrix {
        let mut out = self.clone();
        out.values.iter_mut().for_each(|v| *v *= c);
        out
    }

    /// Copy without the entries of magnitude at most `tol`.
    pub fn drop_small(&self, tol: f64) -> SparseMatrix {
        let mut row_ptr = Vec::with_capacity(self.nrows + 1);
        let mut col_idx = Vec::with_capacity(self.nnz());
        let mut values = Vec::with_capacity(self.nnz());
        row_ptr.push(0);
        for i in 0..self.nrows {
            for (j, v) in self.row(i) {
                if v.abs() > tol {
                    col_idx.push(j);
                    values.push(v);
                }
            }
            row_ptr.push(col_idx.len());
        }
        SparseMatrix {
            nrows: self.nrows,
            ncols: self.ncols,
            row_ptr,
            col_idx,
            values,
        }
    }

    /// `self + c * other`.
    pub fn add_scaled(&self, c: f64, other: &SparseMatrix) -> Result<SparseMatrix, SparseError> {
        if (self.nrows, self.ncols) != (other.nrows, other.ncols) {
            return Err(SparseError::DimensionMismatch {
                expected: self.nrows,
                got: other.nrows,
            });
        }
        let mut entries: Vec<_> = self.iter().collect();
        entries.extend(other.iter().map(|(i, j, v)| (i, j, c * v)));
        Ok(Self::from_triplets(self.nrows, self.ncols, &entries))
    }

    /// Infinity norm (maximum absolute row sum).
    pub fn norm_inf(&self) -> f64 {
        (0..self.nrows)
            .map(|i| self.row(i).map(|(_, v)| v.abs()).sum::<f64>())
            .fold(0.0, f64::max)
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// `max |a_ij - a_ji|`.
    pub fn asymmetry(&self) -> f64 {
        if self.nrows != self.ncols {
            return f64::INFINITY;
        }
        self.iter()
            .map(|(i, j, v)| (v - self.get(j, i)).abs())
            .fold(0.0, f64::max)
    }

    pub fn has_symmetric_pattern(&self) -> bool {
        self.nrows == self.ncols && self.iter().all(|(i, j, _)| self.get(j, i) != 0.0)
    }

    /// Keeps the listed rows and columns, in the given order.
    pub fn submatrix(&self, rows: &[usize], cols: &[usize]) -> SparseMatrix {
        let mut col_map = vec![usize::MAX; self.ncols];
        for (new, &old) in cols.iter().enumerate() {
            col_map[old] = new;
        }
        let mut entries = Vec::new();
        for (new_i, &i) in rows.iter().enumerate() {
            for (j, v) in self.row(i) {
                if col_map[j] != usize::MAX {
                    entries.push((new_i, col_map[j], v));
                }
            }
        }
        Self::from_triplets(rows.len(), cols.len(), &entries)
    }

    /// Writes `i j value` lines (0-based) with 17 significant digits.
    pub fn write_coordinate(&self, mut w: impl std::io::Write) -> std::io::Result<()> {
        writeln!(w, "{} {} {}", self.nrows, self.ncols, self.nnz())?;
        for (i, j, v) in self.iter() {
            writeln!(w, "{i} {j} {v:.16e}")?;
        }
        Ok(())
    }
}
