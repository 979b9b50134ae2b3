//! Dense (row-major) and compressed-sparse-row matrices.

use crate::error::{Error, Result};
use crate::grouped::dot;

#[derive(Clone, Debug, PartialEq)]
pub struct DenseMatrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl DenseMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.data[i * n + i] = 1.0;
        }
        m
    }

    pub fn from_diag(diag: &[f64]) -> Self {
        let n = diag.len();
        let mut m = Self::zeros(n, n);
        for (i, &v) in diag.iter().enumerate() {
            m.data[i * n + i] = v;
        }
        m
    }

    pub fn from_row_major(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::DimensionMismatch {
                expected: rows * cols,
                found: data.len(),
            });
        }
        if let Some(k) = data.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite(format!(
                "entry ({}, {}) of dense matrix",
                k / cols.max(1),
                k % cols.max(1)
            )));
        }
        Ok(Self { rows, cols, data })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let r = rows.len();
        let c = rows.first().map_or(0, Vec::len);
        if let Some(bad) = rows.iter().find(|row| row.len() != c) {
            return Err(Error::DimensionMismatch {
                expected: c,
                found: bad.len(),
            });
        }
        Self::from_row_major(r, c, rows.concat())
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.data
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.cols + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.cols + j] = v;
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        (0..self.rows).map(|i| self.get(i, j)).collect()
    }

    pub fn transpose(&self) -> Self {
        let mut t = Self::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                t.data[j * self.rows + i] = self.data[i * self.cols + j];
            }
        }
        t
    }

    pub fn matmul(&self, other: &DenseMatrix) -> Result<DenseMatrix> {
        if self.cols != other.rows {
            return Err(Error::DimensionMismatch {
                expected: self.cols,
                found: other.rows,
            });
        }
        let mut out = Self::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            let orow = &mut out.data[i * other.cols..(i + 1) * other.cols];
            for k in 0..self.cols {
                let a = self.data[i * self.cols + k];
                if a == 0.0 {
                    continue;
                }
                for (o, b) in orow.iter_mut().zip(other.row(k)) {
                    *o += a * b;
                }
            }
        }
        Ok(out)
    }

    pub fn sub(&self, other: &DenseMatrix) -> Result<DenseMatrix> {
        if self.rows != other.rows || self.cols != other.cols {
            return Err(Error::DimensionMismatch {
                expected: self.rows * self.cols,
                found: other.rows * other.cols,
            });
        }
        let data = self.data.iter().zip(&other.data).map(|(a, b)| a - b).collect();
        Ok(Self {
            rows: self.rows,
            cols: self.cols,
            data,
        })
    }

    pub fn frobenius_norm(&self) -> f64 {
        crate::norms::lq_norm(&self.data, crate::norms::Exponent::TWO)
    }

    /// `trace(selfᵀ other)`, summed row-major.
    pub fn frobenius_dot(&self, other: &DenseMatrix) -> f64 {
        dot(&self.data, &other.data)
    }
}

/// Compressed sparse row matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct SparseMatrix {
    rows: usize,
    cols: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    values: Vec<f64>,
}

impl SparseMatrix {
    pub fn new(
        rows: usize,
        cols: usize,
        row_ptr: Vec<usize>,
        col_idx: Vec<usize>,
        values: Vec<f64>,
    ) -> Result<Self> {
        if row_ptr.len() != rows + 1 {
            return Err(Error::InvalidSparse(format!(
                "row pointer has length {}, expected {}",
                row_ptr.len(),
                rows + 1
            )));
        }
        if row_ptr[0] != 0 || row_ptr[rows] != col_idx.len() || col_idx.len() != values.len() {
            return Err(Error::InvalidSparse(
                "row pointer does not match index/value arrays".into(),
            ));
        }
        for i in 0..rows {
            let (a, b) = (row_ptr[i], row_ptr[i + 1]);
            if b < a {
                return Err(Error::InvalidSparse(format!("row pointer decreases at row {i}")));
            }
            let cols_i = &col_idx[a..b];
            if cols_i.iter().any(|&c| c >= cols) {
                return Err(Error::InvalidSparse(format!("column index out of bounds in row {i}")));
            }
            if cols_i.windows(2).any(|w| w[1] <= w[0]) {
                return Err(Error::InvalidSparse(format!(
                    "column indices not strictly increasing in row {i}"
                )));
            }
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("sparse matrix value".into()));
        }
        Ok(Self {
            rows,
            cols,
            row_ptr,
            col_idx,
            values,
        })
    }

    /// Builds a CSR matrix from `(row, col, value)` triplets in any order.
    /// Duplicate coordinates are summed.
    pub fn from_triplets(rows: usize, cols: usize, triplets: &[(usize, usize, f64)]) -> Result<Self> {
        let mut sorted = triplets.to_vec();
        for &(r, c, _) in &sorted {
            if r >= rows || c >= cols {
                return Err(Error::InvalidSparse(format!(
                    "entry ({r}, {c}) outside {rows}x{cols}"
                )));
            }
        }
        sorted.sort_by_key(|&(r, c, _)| (r, c));
        let mut row_ptr = vec![0usize; rows + 1];
        let mut col_idx = Vec::with_capacity(sorted.len());
        let mut values: Vec<f64> = Vec::with_capacity(sorted.len());
        let mut last: Option<(usize, usize)> = None;
        for (r, c, v) in sorted {
            if last == Some((r, c)) {
                *values.last_mut().unwrap() += v;
                continue;
            }
            last = Some((r, c));
            row_ptr[r + 1] += 1;
            col_idx.push(c);
            values.push(v);
        }
        for i in 0..rows {
            row_ptr[i + 1] += row_ptr[i];
        }
        Self::new(rows, cols, row_ptr, col_idx, values)
    }

    pub fn from_dense(m: &DenseMatrix) -> Self {
        let mut row_ptr = Vec::with_capacity(m.rows() + 1);
        let mut col_idx = Vec::new();
        let mut values = Vec::new();
        row_ptr.push(0);
        for i in 0..m.rows() {
            for (j, &v) in m.row(i).iter().enumerate() {
                if v != 0.0 {
                    col_idx.push(j);
                    values.push(v);
                }
            }
            row_ptr.push(col_idx.len());
        }
        Self {
            rows: m.rows(),
            cols: m.cols(),
            row_ptr,
            col_idx,
            values,
        }
    }

    pub fn identity(n: usize) -> Self {
        Self {
            rows: n,
            cols: n,
            row_ptr: (0..=n).collect(),
            col_idx: (0..n).collect(),
            values: vec![1.0; n],
        }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn row_ptr(&self) -> &[usize] {
        &self.row_ptr
    }

    pub fn col_indices(&self) -> &[usize] {
        &self.col_idx
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    /// Column indices and values of row `i`.
    #[inline]
    pub fn row(&self, i: usize) -> (&[usize], &[f64]) {
        let (a, b) = (self.row_ptr[i], self.row_ptr[i + 1]);
        (&self.col_idx[a..b], &self.values[a..b])
    }

    pub fn triplets(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        (0..self.rows).flat_map(move |i| {
            let (c, v) = self.row(i);
            c.iter().zip(v).map(move |(&j, &x)| (i, j, x))
        })
    }

    pub fn to_dense(&self) -> DenseMatrix {
        let mut m = DenseMatrix::zeros(self.rows, self.cols);
        for (i, j, v) in self.triplets() {
            m.set(i, j, v);
        }
        m
    }

    pub fn frobenius_norm_sq(&self) -> f64 {
        self.values.iter().fold(0.0, |acc, v| acc + v * v)
    }

    /// Dot product of row `i` with a dense vector, or a strided view of one.
    #[inline]
    pub(crate) fn row_dot_strided(&self, i: usize, x: &[f64], stride: usize, offset: usize) -> f64 {
        let (c, v) = self.row(i);
        c.iter()
            .zip(v)
            .fold(0.0, |acc, (&j, &a)| acc + a * x[j * stride + offset])
    }
}

/// `A x` with sequential in-row accumulation.
pub fn sparse_matvec(a: &SparseMatrix, x: &[f64]) -> Result<Vec<f64>> {
    if x.len() != a.cols {
        return Err(Error::DimensionMismatch {
            expected: a.cols,
            found: x.len(),
        });
    }
    Ok((0..a.rows).map(|i| a.row_dot_strided(i, x, 1, 0)).collect())
}

/// `Aᵀ x`.
pub fn sparse_matvec_transpose(a: &SparseMatrix, x: &[f64]) -> Result<Vec<f64>> {
    if x.len() != a.rows {
        return Err(Error::DimensionMismatch {
            expected: a.rows,
            found: x.len(),
        });
    }
    let mut out = vec![0.0; a.cols];
    for (i, &xi) in x.iter().enumerate() {
        let (c, v) = a.row(i);
        for (&j, &aij) in c.iter().zip(v) {
            out[j] += aij * xi;
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn identity_matvec() {
        let a = SparseMatrix::identity(2);
        assert_eq!(sparse_matvec(&a, &[3.0, 4.0]).unwrap(), vec![3.0, 4.0]);
    }

    #[test]
    fn zero_matvec() {
        let a = SparseMatrix::from_triplets(3, 2, &[]).unwrap();
        assert_eq!(sparse_matvec(&a, &[3.0, -1.0]).unwrap(), vec![0.0; 3]);
    }

    #[test]
    fn hand_expanded_matvec() {
        let a = SparseMatrix::new(2, 2, vec![0, 2, 3], vec![0, 1, 1], vec![1.0, 2.0, 3.0]).unwrap();
        assert_eq!(sparse_matvec(&a, &[1.0, 1.0]).unwrap(), vec![3.0, 3.0]);
    }

    #[test]
    fn matvec_dimension_mismatch() {
        let a = SparseMatrix::identity(2);
        assert!(matches!(
            sparse_matvec(&a, &[1.0]),
            Err(Error::DimensionMismatch { expected: 2, found: 1 })
        ));
    }

    #[test]
    fn csr_validation() {
        // unsorted columns
        assert!(SparseMatrix::new(1, 3, vec![0, 2], vec![2, 1], vec![1.0, 1.0]).is_err());
        // out of bounds
        assert!(SparseMatrix::new(1, 2, vec![0, 1], vec![2], vec![1.0]).is_err());
        assert!(SparseMatrix::new(1, 2, vec![0, 1], vec![0], vec![f64::INFINITY]).is_err());
    }

    #[test]
    fn triplets_sum_duplicates() {
        let a = SparseMatrix::from_triplets(2, 2, &[(1, 1, 1.0), (0, 0, 2.0), (1, 1, 0.5)]).unwrap();
        assert_eq!(a.nnz(), 2);
        assert_eq!(a.to_dense().get(1, 1), 1.5);
    }

    #[test]
    fn matvec_matches_dense_reference() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..10 {
            let mut trip = Vec::new();
            for i in 0..50 {
                for j in 0..50 {
                    if rng.random::<f64>() < 0.2 {
                        trip.push((i, j, rng.random_range(-1.0..1.0)));
                    }
                }
            }
            let a = SparseMatrix::from_triplets(50, 50, &trip).unwrap();
            let dense = a.to_dense();
            let x: Vec<f64> = (0..50).map(|_| rng.random_range(-1.0..1.0)).collect();
            let y = sparse_matvec(&a, &x).unwrap();
            for i in 0..50 {
                let reference: f64 = (0..50).map(|j| dense.get(i, j) * x[j]).sum();
                let scale = dense.row(i).iter().zip(&x).map(|(a, b)| (a * b).abs()).sum::<f64>();
                assert!((y[i] - reference).abs() <= 1e-13 * scale.max(1e-300));
            }
            let yt = sparse_matvec_transpose(&a, &x).unwrap();
            let at = SparseMatrix::from_dense(&dense.transpose());
            let yt_ref = sparse_matvec(&at, &x).unwrap();
            for (u, v) in yt.iter().zip(&yt_ref) {
                assert!((u - v).abs() <= 1e-12);
            }
        }
    }

    #[test]
    fn dense_helpers() {
        let a = DenseMatrix::from_rows(&[vec![1.0, 2.0], vec![3.0, 4.0]]).unwrap();
        let i = DenseMatrix::identity(2);
        assert_eq!(a.matmul(&i).unwrap(), a);
        assert_eq!(a.transpose().get(0, 1), 3.0);
        assert_eq!(a.frobenius_dot(&i), 5.0);
        assert!(DenseMatrix::from_rows(&[vec![1.0], vec![1.0, 2.0]]).is_err());
    }
}
