use std::fmt;

use super::LinalgError;

/// Column-major dense matrix. Used both for pattern-scale operators and for
/// blocks of interface vectors (one column per vector).
#[derive(Clone, PartialEq)]
pub struct DenseBlock {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl fmt::Debug for DenseBlock {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "DenseBlock({}x{})", self.rows, self.cols)?;
        if self.rows * self.cols <= 64 {
            for i in 0..self.rows {
                write!(f, "\n ")?;
                for j in 0..self.cols {
                    write!(f, " {:>12.5e}", self.get(i, j))?;
                }
            }
        }
        Ok(())
    }
}

impl DenseBlock {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        DenseBlock {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.set(i, i, 1.0);
        }
        m
    }

    pub fn from_col_major(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self, LinalgError> {
        if data.len() != rows * cols {
            return Err(LinalgError::DimensionMismatch {
                expected: rows * cols,
                found: data.len(),
            });
        }
        if data.iter().any(|x| !x.is_finite()) {
            return Err(LinalgError::NonFinite);
        }
        Ok(DenseBlock { rows, cols, data })
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for j in 0..cols {
            for i in 0..rows {
                data.push(f(i, j));
            }
        }
        DenseBlock { rows, cols, data }
    }

    /// Builds a block from equally long column vectors.
    pub fn from_columns(rows: usize, columns: &[Vec<f64>]) -> Result<Self, LinalgError> {
        let mut data = Vec::with_capacity(rows * columns.len());
        for c in columns {
            if c.len() != rows {
                return Err(LinalgError::DimensionMismatch {
                    expected: rows,
                    found: c.len(),
                });
            }
            data.extend_from_slice(c);
        }
        Ok(DenseBlock {
            rows,
            cols: columns.len(),
            data,
        })
    }

    pub fn column_vector(v: &[f64]) -> Self {
        DenseBlock {
            rows: v.len(),
            cols: 1,
            data: v.to_vec(),
        }
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i + j * self.rows]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.data[i + j * self.rows] = v;
    }

    #[inline]
    pub fn add_at(&mut self, i: usize, j: usize, v: f64) {
        self.data[i + j * self.rows] += v;
    }

    #[inline]
    pub fn col(&self, j: usize) -> &[f64] {
        &self.data[j * self.rows..(j + 1) * self.rows]
    }

    #[inline]
    pub fn col_mut(&mut self, j: usize) -> &mut [f64] {
        &mut self.data[j * self.rows..(j + 1) * self.rows]
    }

    pub fn columns(&self) -> impl Iterator<Item = &[f64]> {
        (0..self.cols).map(move |j| self.col(j))
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

    pub fn transpose(&self) -> DenseBlock {
        DenseBlock::from_fn(self.cols, self.rows, |i, j| self.get(j, i))
    }

    /// `self * other`.
    pub fn mul(&self, other: &DenseBlock) -> DenseBlock {
        assert_eq!(self.cols, other.rows, "inner dimensions differ");
        let mut out = DenseBlock::zeros(self.rows, other.cols);
        for j in 0..other.cols {
            let oc = other.col(j);
            let dst = &mut out.data[j * self.rows..(j + 1) * self.rows];
            for (k, &b) in oc.iter().enumerate() {
                if b != 0.0 {
                    axpy(b, self.col(k), dst);
                }
            }
        }
        out
    }

    /// `selfᵀ * other`.
    pub fn tr_mul(&self, other: &DenseBlock) -> DenseBlock {
        assert_eq!(self.rows, other.rows, "row counts differ");
        DenseBlock::from_fn(self.cols, other.cols, |i, j| dot(self.col(i), other.col(j)))
    }

    /// `self * v`.
    pub fn mul_vec(&self, v: &[f64]) -> Vec<f64> {
        assert_eq!(self.cols, v.len());
        let mut out = vec![0.0; self.rows];
        for (k, &b) in v.iter().enumerate() {
            if b != 0.0 {
                axpy(b, self.col(k), &mut out);
            }
        }
        out
    }

    /// `selfᵀ * v`.
    pub fn tr_mul_vec(&self, v: &[f64]) -> Vec<f64> {
        assert_eq!(self.rows, v.len());
        self.columns().map(|c| dot(c, v)).collect()
    }

    pub fn scale(&mut self, s: f64) {
        self.data.iter_mut().for_each(|x| *x *= s);
    }

    /// `self += s * other`.
    pub fn add_scaled(&mut self, s: f64, other: &DenseBlock) {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        axpy(s, &other.data, &mut self.data);
    }

    pub fn sub(&self, other: &DenseBlock) -> DenseBlock {
        let mut out = self.clone();
        out.add_scaled(-1.0, other);
        out
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0_f64, |m, x| m.max(x.abs()))
    }

    pub fn norm_fro(&self) -> f64 {
        norm(&self.data)
    }

    /// Largest `|A_ij - A_ji|` for a square matrix.
    pub fn asymmetry(&self) -> f64 {
        assert_eq!(self.rows, self.cols);
        let mut m = 0.0_f64;
        for j in 0..self.cols {
            for i in j + 1..self.rows {
                m = m.max((self.get(i, j) - self.get(j, i)).abs());
            }
        }
        m
    }

    /// Copy of the given columns, in order.
    pub fn select_columns(&self, idx: &[usize]) -> DenseBlock {
        let mut data = Vec::with_capacity(self.rows * idx.len());
        for &j in idx {
            data.extend_from_slice(self.col(j));
        }
        DenseBlock {
            rows: self.rows,
            cols: idx.len(),
            data,
        }
    }

    /// Submatrix with the given row and column index lists.
    pub fn submatrix(&self, rows: &[usize], cols: &[usize]) -> DenseBlock {
        DenseBlock::from_fn(rows.len(), cols.len(), |i, j| self.get(rows[i], cols[j]))
    }

    /// Horizontal concatenation.
    pub fn hstack(blocks: &[&DenseBlock]) -> DenseBlock {
        let rows = blocks.first().map_or(0, |b| b.rows);
        let mut data = Vec::new();
        let mut cols = 0;
        for b in blocks {
            assert_eq!(b.rows, rows, "hstack row mismatch");
            data.extend_from_slice(&b.data);
            cols += b.cols;
        }
        DenseBlock { rows, cols, data }
    }

    pub fn push_column(&mut self, c: &[f64]) {
        assert_eq!(c.len(), self.rows);
        self.data.extend_from_slice(c);
        self.cols += 1;
    }

    pub(crate) fn to_nalgebra(&self) -> nalgebra::DMatrix<f64> {
        nalgebra::DMatrix::from_column_slice(self.rows, self.cols, &self.data)
    }
}

#[inline]
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    // four accumulators: fixed order, vectorizes
    let mut acc = [0.0; 4];
    let chunks = a.len() / 4;
    for k in 0..chunks {
        let i = 4 * k;
        acc[0] += a[i] * b[i];
        acc[1] += a[i + 1] * b[i + 1];
        acc[2] += a[i + 2] * b[i + 2];
        acc[3] += a[i + 3] * b[i + 3];
    }
    let mut s = (acc[0] + acc[1]) + (acc[2] + acc[3]);
    for i in 4 * chunks..a.len() {
        s += a[i] * b[i];
    }
    s
}

#[inline]
pub fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    debug_assert_eq!(x.len(), y.len());
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

#[inline]
pub fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn products_agree_with_definition() {
        let a = DenseBlock::from_fn(3, 2, |i, j| (i + 2 * j) as f64);
        let b = DenseBlock::from_fn(2, 4, |i, j| (i as f64) - (j as f64));
        let c = a.mul(&b);
        for i in 0..3 {
            for j in 0..4 {
                let expect: f64 = (0..2).map(|k| a.get(i, k) * b.get(k, j)).sum();
                assert_eq!(c.get(i, j), expect);
            }
        }
        let t = a.tr_mul(&a);
        assert_eq!(t.rows(), 2);
        assert_eq!(t.get(0, 1), dot(a.col(0), a.col(1)));
    }

    #[test]
    fn from_col_major_rejects_bad_input() {
        assert!(DenseBlock::from_col_major(2, 2, vec![1.0; 3]).is_err());
        assert!(DenseBlock::from_col_major(1, 1, vec![f64::NAN]).is_err());
    }

    #[test]
    fn dot_handles_tails() {
        let a: Vec<f64> = (0..7).map(|i| i as f64).collect();
        assert_eq!(dot(&a, &a), 91.0);
    }
}
