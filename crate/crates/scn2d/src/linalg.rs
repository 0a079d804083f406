//! Minimal dense linear algebra used by the rest of the crate.
//!
//! A [`Matrix`] is an immutable dense 2-D array of `f64` in row-major order.
//! Every constructor validates that all entries are finite, so downstream
//! code can rely on finiteness without re-checking.

use crate::error::{Error, Result};

/// Dense row-major matrix of `f64`.
///
/// Dimensions may be zero (an empty network has a `0 x m` output weight
/// matrix); data length always equals `rows * cols` and every entry is finite.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Matrix {
    /// Build a matrix from row-major data, validating length and finiteness.
    pub fn new(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::Shape(format!(
                "matrix {}x{} requires {} entries, got {}",
                rows,
                cols,
                rows * cols,
                data.len()
            )));
        }
        if let Some(idx) = data.iter().position(|x| !x.is_finite()) {
            return Err(Error::NonFinite(format!(
                "entry ({},{}) of a {}x{} matrix is {}",
                idx / cols.max(1),
                idx % cols.max(1),
                rows,
                cols,
                data[idx]
            )));
        }
        Ok(Self { rows, cols, data })
    }

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

    /// Build from a closure over `(row, col)`; validates finiteness.
    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> f64) -> Result<Self> {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Self::new(rows, cols, data)
    }

    /// Build a `rows x cols` matrix from column-major data.
    pub fn from_col_major(rows: usize, cols: usize, data: &[f64]) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::Shape(format!(
                "matrix {}x{} requires {} entries, got {}",
                rows,
                cols,
                rows * cols,
                data.len()
            )));
        }
        Self::from_fn(rows, cols, |i, j| data[j * rows + i])
    }

    /// Column vector from a slice.
    pub fn column_vector(v: &[f64]) -> Result<Self> {
        Self::new(v.len(), 1, v.to_vec())
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        debug_assert!(i < self.rows && j < self.cols);
        self.data[i * self.cols + j]
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        (0..self.rows).map(|i| self.get(i, j)).collect()
    }

    pub fn transpose(&self) -> Matrix {
        let mut data = Vec::with_capacity(self.data.len());
        for j in 0..self.cols {
            for i in 0..self.rows {
                data.push(self.get(i, j));
            }
        }
        Matrix {
            rows: self.cols,
            cols: self.rows,
            data,
        }
    }

    /// Standard matrix product.
    pub fn matmul(&self, other: &Matrix) -> Result<Matrix> {
        if self.cols != other.rows {
            return Err(Error::Shape(format!(
                "matmul: {}x{} incompatible with {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        let mut data = vec![0.0; self.rows * other.cols];
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self.data[i * self.cols + k];
                if a == 0.0 {
                    continue;
                }
                let brow = &other.data[k * other.cols..(k + 1) * other.cols];
                let out = &mut data[i * other.cols..(i + 1) * other.cols];
                for (o, &b) in out.iter_mut().zip(brow) {
                    *o += a * b;
                }
            }
        }
        Matrix::new(self.rows, other.cols, data)
    }

    /// Entrywise product; shapes must match.
    pub fn hadamard(&self, other: &Matrix) -> Result<Matrix> {
        if self.rows != other.rows || self.cols != other.cols {
            return Err(Error::Shape(format!(
                "hadamard: {}x{} vs {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        let data = self
            .data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| a * b)
            .collect();
        Matrix::new(self.rows, self.cols, data)
    }

    pub fn add(&self, other: &Matrix) -> Result<Matrix> {
        if self.rows != other.rows || self.cols != other.cols {
            return Err(Error::Shape(format!(
                "add: {}x{} vs {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        let data = self
            .data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| a + b)
            .collect();
        Matrix::new(self.rows, self.cols, data)
    }

    pub fn sub(&self, other: &Matrix) -> Result<Matrix> {
        if self.rows != other.rows || self.cols != other.cols {
            return Err(Error::Shape(format!(
                "sub: {}x{} vs {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        let data = self
            .data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| a - b)
            .collect();
        Matrix::new(self.rows, self.cols, data)
    }

    pub fn scale(&self, c: f64) -> Result<Matrix> {
        Matrix::new(self.rows, self.cols, self.data.iter().map(|x| x * c).collect())
    }

    /// Square root of the sum of squared entries.
    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|x| x * x).sum::<f64>().sqrt()
    }

    /// Column-major stacking into a `rows*cols x 1` column vector:
    /// output index `j*rows + i` holds entry `(i, j)`.
    pub fn vectorize(&self) -> Matrix {
        let mut data = Vec::with_capacity(self.data.len());
        for j in 0..self.cols {
            for i in 0..self.rows {
                data.push(self.get(i, j));
            }
        }
        Matrix {
            rows: self.data.len(),
            cols: 1,
            data,
        }
    }
}

/// Dot product of equal-length slices.
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm2(v: &[f64]) -> f64 {
    dot(v, v).sqrt()
}

/// Rank-1 outer product `u v^T` with entry `(i, j) = u_i * v_j`.
pub fn outer(u: &[f64], v: &[f64]) -> Matrix {
    let mut data = Vec::with_capacity(u.len() * v.len());
    for &ui in u {
        for &vj in v {
            data.push(ui * vj);
        }
    }
    Matrix {
        rows: u.len(),
        cols: v.len(),
        data,
    }
}

/// `u^T x v`, computed as `(u^T x)` then a dot with `v`.
pub fn bilinear_form(u: &[f64], x: &Matrix, v: &[f64]) -> Result<f64> {
    if u.len() != x.rows() || v.len() != x.cols() {
        return Err(Error::Shape(format!(
            "bilinear_form: u len {}, x {}x{}, v len {}",
            u.len(),
            x.rows(),
            x.cols(),
            v.len()
        )));
    }
    let mut acc = 0.0;
    for (i, &ui) in u.iter().enumerate() {
        if ui == 0.0 {
            continue;
        }
        acc += ui * dot(x.row(i), v);
    }
    Ok(acc)
}

/// Minimum-Frobenius-norm minimizer of `||H beta - T||_F`.
///
/// Solved through a singular value decomposition; singular values below
/// `max(N, L) * eps * sigma_max` are treated as zero, so rank-deficient
/// systems yield the pseudo-inverse (minimum-norm) solution.
pub fn least_squares(h: &Matrix, t: &Matrix) -> Result<Matrix> {
    if h.rows() != t.rows() {
        return Err(Error::Shape(format!(
            "least_squares: H {}x{} vs T {}x{}",
            h.rows(),
            h.cols(),
            t.rows(),
            t.cols()
        )));
    }
    if h.cols() == 0 {
        return Ok(Matrix::zeros(0, t.cols()));
    }
    let na_h = nalgebra::DMatrix::from_row_slice(h.rows(), h.cols(), h.data());
    let na_t = nalgebra::DMatrix::from_row_slice(t.rows(), t.cols(), t.data());
    let svd = na_h.svd(true, true);
    let sigma_max = svd.singular_values.iter().cloned().fold(0.0, f64::max);
    let cutoff = (h.rows().max(h.cols()) as f64) * f64::EPSILON * sigma_max;
    let beta = svd
        .solve(&na_t, cutoff)
        .map_err(|e| Error::NonFinite(format!("svd solve failed: {e}")))?;
    let mut data = Vec::with_capacity(beta.nrows() * beta.ncols());
    for i in 0..beta.nrows() {
        for j in 0..beta.ncols() {
            data.push(beta[(i, j)]);
        }
    }
    Matrix::new(h.cols(), t.cols(), data)
}
