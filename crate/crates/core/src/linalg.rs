//! Dense row-major matrices and the handful of vector kernels the solvers need.

use crate::error::{Error, Result};

/// Dense row-major matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Matrix {
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
            m[(i, i)] = 1.0;
        }
        m
    }

    pub fn from_vec(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::DimensionMismatch {
                expected: rows * cols,
                actual: data.len(),
                context: "matrix storage length",
            });
        }
        Ok(Self { rows, cols, data })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let cols = rows.first().map_or(0, Vec::len);
        let mut data = Vec::with_capacity(rows.len() * cols);
        for r in rows {
            if r.len() != cols {
                return Err(Error::DimensionMismatch {
                    expected: cols,
                    actual: r.len(),
                    context: "ragged matrix rows",
                });
            }
            data.extend_from_slice(r);
        }
        Ok(Self {
            rows: rows.len(),
            cols,
            data,
        })
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Self { rows, cols, data }
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

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn row_mut(&mut self, i: usize) -> &mut [f64] {
        &mut self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        (0..self.rows).map(|i| self[(i, j)]).collect()
    }

    pub fn transpose(&self) -> Matrix {
        Matrix::from_fn(self.cols, self.rows, |i, j| self[(j, i)])
    }

    pub fn matmul(&self, other: &Matrix) -> Result<Matrix> {
        if self.cols != other.rows {
            return Err(Error::DimensionMismatch {
                expected: self.cols,
                actual: other.rows,
                context: "matrix product inner dimension",
            });
        }
        let mut out = Matrix::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            let out_row = &mut out.data[i * other.cols..(i + 1) * other.cols];
            for (k, &a) in self.row(i).iter().enumerate() {
                if a != 0.0 {
                    axpy(a, other.row(k), out_row);
                }
            }
        }
        Ok(out)
    }

    pub fn frobenius_norm(&self) -> f64 {
        norm(&self.data)
    }

    pub fn max_abs_diff(&self, other: &Matrix) -> f64 {
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }
}

impl std::ops::Index<(usize, usize)> for Matrix {
    type Output = f64;

    #[inline]
    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        &self.data[i * self.cols + j]
    }
}

impl std::ops::IndexMut<(usize, usize)> for Matrix {
    #[inline]
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut f64 {
        &mut self.data[i * self.cols + j]
    }
}

/// Square symmetric matrix stored in full row-major form.
///
/// Construction either checks symmetry or produces it by construction, so the
/// eigensolvers can take symmetry as given.
#[derive(Debug, Clone, PartialEq)]
pub struct SymMatrix(Matrix);

impl SymMatrix {
    pub const SYMMETRY_TOL: f64 = 1e-12;

    pub fn zeros(n: usize) -> Self {
        Self(Matrix::zeros(n, n))
    }

    /// Builds from the upper triangle (`j >= i`) of `f`, mirrored.
    pub fn from_upper(n: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut m = Matrix::zeros(n, n);
        for i in 0..n {
            for j in i..n {
                let v = f(i, j);
                m[(i, j)] = v;
                m[(j, i)] = v;
            }
        }
        Self(m)
    }

    pub fn from_diagonal(diag: &[f64]) -> Self {
        let n = diag.len();
        Self::from_upper(n, |i, j| if i == j { diag[i] } else { 0.0 })
    }

    /// Checks symmetry to [`SymMatrix::SYMMETRY_TOL`] (absolute, scaled by the
    /// largest entry when that exceeds one).
    pub fn new(m: Matrix) -> Result<Self> {
        Self::with_tolerance(m, Self::SYMMETRY_TOL)
    }

    pub fn with_tolerance(m: Matrix, tol: f64) -> Result<Self> {
        check_symmetry(&m, tol)?;
        Ok(Self(m))
    }

    pub fn n(&self) -> usize {
        self.0.rows()
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.0[(i, j)]
    }

    pub fn row(&self, i: usize) -> &[f64] {
        self.0.row(i)
    }

    pub fn as_matrix(&self) -> &Matrix {
        &self.0
    }

    pub fn into_matrix(self) -> Matrix {
        self.0
    }

    pub(crate) fn as_mut_slice(&mut self) -> &mut [f64] {
        self.0.as_mut_slice()
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.0.frobenius_norm()
    }

    pub fn trace(&self) -> f64 {
        (0..self.n()).map(|i| self.get(i, i)).sum()
    }

    /// Adds `shift` to every diagonal entry.
    pub fn shifted(&self, shift: f64) -> SymMatrix {
        let mut m = self.clone();
        let n = m.n();
        for i in 0..n {
            m.0[(i, i)] += shift;
        }
        m
    }

    pub fn matvec(&self, x: &[f64], out: &mut [f64]) {
        for (i, o) in out.iter_mut().enumerate() {
            *o = dot(self.row(i), x);
        }
    }

    /// `out[c] = A * xs[c]` for every column of the block, reading `A` once.
    pub fn matvec_block(&self, xs: &[Vec<f64>], outs: &mut [Vec<f64>]) {
        for i in 0..self.n() {
            let row = self.row(i);
            for (x, o) in xs.iter().zip(outs.iter_mut()) {
                o[i] = dot(row, x);
            }
        }
    }

    /// Quadratic form `x^T A x`.
    pub fn quadratic_form(&self, x: &[f64]) -> f64 {
        (0..self.n()).map(|i| x[i] * dot(self.row(i), x)).sum()
    }
}

/// Fails with the first pair whose asymmetry exceeds `tol` (scaled by the
/// largest entry when that exceeds one).
pub fn check_symmetry(m: &Matrix, tol: f64) -> Result<()> {
    if m.rows() != m.cols() {
        return Err(Error::DimensionMismatch {
            expected: m.rows(),
            actual: m.cols(),
            context: "symmetric matrix must be square",
        });
    }
    let scale = m.as_slice().iter().fold(1.0_f64, |acc, v| acc.max(v.abs()));
    let n = m.rows();
    // Tile the comparison so the transposed reads stay in cache.
    const TILE: usize = 64;
    for bi in (0..n).step_by(TILE) {
        for bj in (bi..n).step_by(TILE) {
            for i in bi..(bi + TILE).min(n) {
                for j in bj.max(i + 1)..(bj + TILE).min(n) {
                    let d = (m[(i, j)] - m[(j, i)]).abs();
                    if d > tol * scale || d.is_nan() {
                        return Err(Error::NotSymmetric {
                            row: i,
                            col: j,
                            deviation: d,
                        });
                    }
                }
            }
        }
    }
    Ok(())
}

/// Something that can multiply blocks of vectors by a symmetric matrix.
pub trait SymOperator: Sync {
    fn n(&self) -> usize;
    /// `outs[c] = A xs[c]`; outputs are overwritten.
    fn apply_block(&self, xs: &[Vec<f64>], outs: &mut [Vec<f64>]);
    fn frobenius_norm(&self) -> f64;
    fn to_dense(&self) -> SymMatrix;
}

impl SymOperator for SymMatrix {
    fn n(&self) -> usize {
        SymMatrix::n(self)
    }

    fn apply_block(&self, xs: &[Vec<f64>], outs: &mut [Vec<f64>]) {
        self.matvec_block(xs, outs)
    }

    fn frobenius_norm(&self) -> f64 {
        SymMatrix::frobenius_norm(self)
    }

    fn to_dense(&self) -> SymMatrix {
        self.clone()
    }
}

/// Compressed sparse rows of a symmetric matrix (both triangles stored).
#[derive(Debug, Clone, PartialEq)]
pub struct CsrMatrix {
    n: usize,
    indptr: Vec<usize>,
    indices: Vec<u32>,
    values: Vec<f64>,
}

impl CsrMatrix {
    pub fn from_dense(a: &SymMatrix) -> Self {
        let n = a.n();
        let mut indptr = Vec::with_capacity(n + 1);
        let mut indices = Vec::new();
        let mut values = Vec::new();
        indptr.push(0);
        for i in 0..n {
            for (j, &v) in a.row(i).iter().enumerate() {
                if v != 0.0 {
                    indices.push(j as u32);
                    values.push(v);
                }
            }
            indptr.push(indices.len());
        }
        Self {
            n,
            indptr,
            indices,
            values,
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    /// Column indices and values of row `i`.
    pub fn row(&self, i: usize) -> (&[u32], &[f64]) {
        let r = self.indptr[i]..self.indptr[i + 1];
        (&self.indices[r.clone()], &self.values[r])
    }

    /// `outs[c] += alpha * A xs[c]`
    pub fn accumulate_block(&self, alpha: f64, xs: &[Vec<f64>], outs: &mut [Vec<f64>]) {
        self.accumulate_packed(alpha, &pack_columns(xs), outs);
    }

    /// Same as [`CsrMatrix::accumulate_block`] with the inputs interleaved as
    /// by [`pack_columns`], so each stored entry is read once for the block.
    pub fn accumulate_packed(&self, alpha: f64, packed: &[f64], outs: &mut [Vec<f64>]) {
        let b = outs.len();
        if b == 0 {
            return;
        }
        debug_assert_eq!(packed.len(), self.n * b);
        let mut s = vec![0.0; b];
        for i in 0..self.n {
            let (idx, val) = self.row(i);
            s.iter_mut().for_each(|x| *x = 0.0);
            for (&j, &v) in idx.iter().zip(val) {
                let x = &packed[j as usize * b..(j as usize + 1) * b];
                for (acc, xc) in s.iter_mut().zip(x) {
                    *acc += v * xc;
                }
            }
            for (o, acc) in outs.iter_mut().zip(&s) {
                o[i] += alpha * acc;
            }
        }
    }

    pub fn quadratic_form(&self, x: &[f64]) -> f64 {
        (0..self.n)
            .map(|i| {
                let (idx, val) = self.row(i);
                x[i] * idx
                    .iter()
                    .zip(val)
                    .map(|(&j, &v)| v * x[j as usize])
                    .sum::<f64>()
            })
            .sum()
    }

    /// Frobenius inner product `Σ_ij A_ij B_ij`.
    pub fn frobenius_dot(&self, other: &CsrMatrix) -> f64 {
        let mut total = 0.0;
        for i in 0..self.n {
            let (ia, va) = self.row(i);
            let (ib, vb) = other.row(i);
            let (mut p, mut q) = (0, 0);
            while p < ia.len() && q < ib.len() {
                match ia[p].cmp(&ib[q]) {
                    std::cmp::Ordering::Less => p += 1,
                    std::cmp::Ordering::Greater => q += 1,
                    std::cmp::Ordering::Equal => {
                        total += va[p] * vb[q];
                        p += 1;
                        q += 1;
                    }
                }
            }
        }
        total
    }
}

/// Dot product with eight independent accumulators so it vectorizes.
#[inline]
/// Row-major `n × b` copy of `b` column vectors.
pub fn pack_columns(xs: &[Vec<f64>]) -> Vec<f64> {
    let b = xs.len();
    let n = xs.first().map_or(0, Vec::len);
    let mut packed = vec![0.0; n * b];
    for (c, x) in xs.iter().enumerate() {
        for (j, &v) in x.iter().enumerate() {
            packed[j * b + c] = v;
        }
    }
    packed
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    let mut acc = [0.0_f64; 8];
    let ca = a.chunks_exact(8);
    let cb = b.chunks_exact(8);
    let (ra, rb) = (ca.remainder(), cb.remainder());
    for (x, y) in ca.zip(cb) {
        for k in 0..8 {
            acc[k] += x[k] * y[k];
        }
    }
    let mut tail = 0.0;
    for (x, y) in ra.iter().zip(rb) {
        tail += x * y;
    }
    ((acc[0] + acc[4]) + (acc[1] + acc[5])) + ((acc[2] + acc[6]) + (acc[3] + acc[7])) + tail
}

/// `y += alpha * x`
#[inline]
pub fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

#[inline]
pub fn norm(x: &[f64]) -> f64 {
    dot(x, x).sqrt()
}

pub fn scale(x: &mut [f64], alpha: f64) {
    for v in x {
        *v *= alpha;
    }
}

/// Squared Euclidean distance.
#[inline]
pub fn dist2(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Cholesky factor `L` (lower triangular, row-major) of a small SPD matrix.
/// Returns `None` when a pivot is not strictly positive.
pub fn cholesky(a: &Matrix) -> Option<Matrix> {
    let n = a.rows();
    let mut l = Matrix::zeros(n, n);
    for i in 0..n {
        for j in 0..=i {
            let mut s = a[(i, j)];
            for k in 0..j {
                s -= l[(i, k)] * l[(j, k)];
            }
            if i == j {
                if s <= 0.0 || !s.is_finite() {
                    return None;
                }
                l[(i, i)] = s.sqrt();
            } else {
                l[(i, j)] = s / l[(j, j)];
            }
        }
    }
    Some(l)
}

/// Solves `L z = b` for lower-triangular `L` in place.
pub fn forward_substitute(l: &Matrix, b: &mut [f64]) {
    let n = l.rows();
    for i in 0..n {
        let mut s = b[i];
        for k in 0..i {
            s -= l[(i, k)] * b[k];
        }
        b[i] = s / l[(i, i)];
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn symmetric_check_rejects_asymmetry() {
        let m = Matrix::from_rows(&[vec![0.0, 1.0], vec![1.0 + 1e-9, 0.0]]).unwrap();
        assert!(matches!(SymMatrix::new(m), Err(Error::NotSymmetric { .. })));
        let m = Matrix::from_rows(&[vec![0.0, 1.0], vec![1.0, 0.0]]).unwrap();
        assert!(SymMatrix::new(m).is_ok());
    }

    #[test]
    fn dot_matches_naive_sum() {
        let a: Vec<f64> = (0..37).map(|i| i as f64 * 0.5).collect();
        let b: Vec<f64> = (0..37).map(|i| 1.0 - i as f64).collect();
        let naive: f64 = a.iter().zip(&b).map(|(x, y)| x * y).sum();
        assert!((dot(&a, &b) - naive).abs() < 1e-9);
    }

    #[test]
    fn cholesky_reconstructs() {
        let a = Matrix::from_rows(&[vec![4.0, 2.0], vec![2.0, 3.0]]).unwrap();
        let l = cholesky(&a).unwrap();
        let llt = l.matmul(&l.transpose()).unwrap();
        assert!(llt.max_abs_diff(&a) < 1e-14);
        let singular = Matrix::from_rows(&[vec![1.0, 1.0], vec![1.0, 1.0]]).unwrap();
        assert!(cholesky(&singular).is_none());
    }

    #[test]
    fn csr_matches_dense() {
        let a = SymMatrix::from_upper(5, |i, j| {
            if (i + j) % 3 == 0 && i != j {
                (i + 2 * j) as f64
            } else {
                0.0
            }
        });
        let s = CsrMatrix::from_dense(&a);
        let xs = vec![
            vec![1.0, -2.0, 0.5, 3.0, 1.5],
            vec![0.0, 1.0, 0.0, 0.0, -1.0],
        ];
        let mut dense = vec![vec![0.0; 5]; 2];
        let mut sparse = vec![vec![0.0; 5]; 2];
        a.apply_block(&xs, &mut dense);
        s.accumulate_block(1.0, &xs, &mut sparse);
        assert_eq!(dense, sparse);
        assert_eq!(s.quadratic_form(&xs[0]), a.quadratic_form(&xs[0]));
        assert!((s.frobenius_dot(&s).sqrt() - a.frobenius_norm()).abs() < 1e-12);
    }
}
