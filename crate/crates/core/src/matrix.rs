//! Dense complex matrices and the handful of exact-shape operations the
//! analysis is built from: Kronecker products, block diagonals and
//! SVD-based numerical rank.
//!
//! Every matrix is stored row-major with `Complex<f64>` entries. Real inputs
//! simply carry a zero imaginary part; eigenvalues of real topologies are
//! routinely complex so there is no separate real code path.

use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use nalgebra::DMatrix;
use num_complex::Complex;

use crate::error::{Error, Result};

pub type C64 = Complex<f64>;

/// A row vector, as used for left eigenvectors.
pub type RowVec = Vec<C64>;

pub(crate) const ZERO: C64 = C64 { re: 0.0, im: 0.0 };
pub(crate) const ONE: C64 = C64 { re: 1.0, im: 0.0 };

/// Relative thresholds used by every numerical decision in the crate.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Tolerances {
    /// Singular values at or below `rank_rel * sigma_max * max(rows, cols)`
    /// are treated as zero.
    pub rank_rel: f64,
    /// Eigenvalues closer than `eig_cluster_rel * (1 + max |mu|)` are one
    /// eigenvalue.
    pub eig_cluster_rel: f64,
    /// Relative residual bound for verification checks.
    pub residual_rel: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            rank_rel: 1e-12,
            eig_cluster_rel: 1e-8,
            residual_rel: 1e-9,
        }
    }
}

impl Tolerances {
    pub fn new(rank_rel: f64, eig_cluster_rel: f64, residual_rel: f64) -> Result<Self> {
        let tol = Self {
            rank_rel,
            eig_cluster_rel,
            residual_rel,
        };
        tol.validate()?;
        Ok(tol)
    }

    pub fn validate(&self) -> Result<()> {
        for (name, value) in [
            ("rank_rel", self.rank_rel),
            ("eig_cluster_rel", self.eig_cluster_rel),
            ("residual_rel", self.residual_rel),
        ] {
            if !(value > 0.0 && value < 1.0) {
                return Err(Error::InvalidInput(format!(
                    "tolerance {name} must lie in (0, 1), got {value}"
                )));
            }
        }
        Ok(())
    }
}

#[derive(Clone, PartialEq)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<C64>,
}

impl Matrix {
    /// Builds a matrix from row-major entries. Rejects empty shapes, length
    /// mismatches and non-finite entries.
    pub fn new(rows: usize, cols: usize, data: Vec<C64>) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::InvalidInput(format!(
                "matrix dimensions must be positive, got {rows}x{cols}"
            )));
        }
        if data.len() != rows * cols {
            return Err(Error::InvalidInput(format!(
                "{rows}x{cols} matrix needs {} entries, got {}",
                rows * cols,
                data.len()
            )));
        }
        if let Some(pos) = data.iter().position(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::InvalidInput(format!(
                "non-finite entry at ({}, {})",
                pos / cols,
                pos % cols
            )));
        }
        Ok(Self { rows, cols, data })
    }

    pub fn from_real(rows: usize, cols: usize, data: &[f64]) -> Result<Self> {
        Self::new(rows, cols, data.iter().map(|&x| C64::new(x, 0.0)).collect())
    }

    /// Builds a real matrix from a slice of equally long rows.
    pub fn from_real_rows<R: AsRef<[f64]>>(rows: &[R]) -> Result<Self> {
        let cols = rows.first().map_or(0, |r| r.as_ref().len());
        if let Some(bad) = rows.iter().position(|r| r.as_ref().len() != cols) {
            return Err(Error::InvalidInput(format!(
                "row {bad} has {} entries, expected {cols}",
                rows[bad].as_ref().len()
            )));
        }
        let data: Vec<f64> = rows.iter().flat_map(|r| r.as_ref().iter().copied()).collect();
        Self::from_real(rows.len(), cols, &data)
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        assert!(rows > 0 && cols > 0, "matrix dimensions must be positive");
        Self {
            rows,
            cols,
            data: vec![ZERO; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.data[i * n + i] = ONE;
        }
        m
    }

    pub fn diag(values: &[C64]) -> Self {
        let n = values.len();
        let mut m = Self::zeros(n, n);
        for (i, &v) in values.iter().enumerate() {
            m.data[i * n + i] = v;
        }
        m
    }

    pub fn row_vector(values: &[C64]) -> Self {
        Self {
            rows: 1,
            cols: values.len(),
            data: values.to_vec(),
        }
    }

    /// Stacks row vectors of equal length.
    pub fn from_row_vectors(vectors: &[RowVec]) -> Result<Self> {
        let cols = vectors.first().map_or(0, Vec::len);
        if vectors.iter().any(|v| v.len() != cols) {
            return Err(Error::InvalidInput(
                "row vectors must all have the same length".into(),
            ));
        }
        Self::new(vectors.len(), cols, vectors.concat())
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn entries(&self) -> &[C64] {
        &self.data
    }

    pub fn get(&self, i: usize, j: usize) -> C64 {
        assert!(i < self.rows && j < self.cols, "index ({i}, {j}) out of bounds");
        self.data[i * self.cols + j]
    }

    pub fn set(&mut self, i: usize, j: usize, value: C64) {
        assert!(i < self.rows && j < self.cols, "index ({i}, {j}) out of bounds");
        self.data[i * self.cols + j] = value;
    }

    pub fn row(&self, i: usize) -> RowVec {
        self.data[i * self.cols..(i + 1) * self.cols].to_vec()
    }

    pub fn col(&self, j: usize) -> Vec<C64> {
        (0..self.rows).map(|i| self.get(i, j)).collect()
    }

    pub fn row_vectors(&self) -> Vec<RowVec> {
        (0..self.rows).map(|i| self.row(i)).collect()
    }

    pub fn is_real(&self) -> bool {
        self.data.iter().all(|z| z.im == 0.0)
    }

    /// Exact test: every entry is `0 + 0i`.
    pub fn is_zero(&self) -> bool {
        self.data.iter().all(|z| *z == ZERO)
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    pub fn transpose(&self) -> Self {
        let mut out = Self::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                out.data[j * self.rows + i] = self.data[i * self.cols + j];
            }
        }
        out
    }

    pub fn conj_transpose(&self) -> Self {
        let mut out = self.transpose();
        out.data.iter_mut().for_each(|z| *z = z.conj());
        out
    }

    pub fn scale(&self, factor: C64) -> Self {
        self.map(|z| z * factor)
    }

    pub fn map(&self, f: impl Fn(C64) -> C64) -> Self {
        Self {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|&z| f(z)).collect(),
        }
    }

    /// `self - mu * I`.
    pub fn shifted(&self, mu: C64) -> Self {
        assert!(self.is_square(), "shift needs a square matrix");
        let mut out = self.clone();
        for i in 0..self.rows {
            out.data[i * self.cols + i] -= mu;
        }
        out
    }

    /// Selects the given rows and columns, in the given order.
    pub fn select(&self, rows: &[usize], cols: &[usize]) -> Self {
        let mut out = Self::zeros(rows.len().max(1), cols.len().max(1));
        for (a, &i) in rows.iter().enumerate() {
            for (b, &j) in cols.iter().enumerate() {
                out.data[a * out.cols + b] = self.get(i, j);
            }
        }
        out
    }

    /// Writes `block` with its top-left corner at `(r0, c0)`.
    pub fn set_block(&mut self, r0: usize, c0: usize, block: &Matrix) {
        assert!(r0 + block.rows <= self.rows && c0 + block.cols <= self.cols);
        for i in 0..block.rows {
            let dst = (r0 + i) * self.cols + c0;
            self.data[dst..dst + block.cols]
                .copy_from_slice(&block.data[i * block.cols..(i + 1) * block.cols]);
        }
    }

    pub fn block(&self, r0: usize, c0: usize, rows: usize, cols: usize) -> Self {
        let r: Vec<usize> = (r0..r0 + rows).collect();
        let c: Vec<usize> = (c0..c0 + cols).collect();
        self.select(&r, &c)
    }

    pub fn hstack(parts: &[&Matrix]) -> Result<Self> {
        let rows = parts.first().map_or(0, |m| m.rows);
        if parts.is_empty() || parts.iter().any(|m| m.rows != rows) {
            return Err(Error::InvalidInput("hstack needs equal row counts".into()));
        }
        let cols = parts.iter().map(|m| m.cols).sum();
        let mut out = Self::zeros(rows, cols);
        let mut c0 = 0;
        for m in parts {
            out.set_block(0, c0, m);
            c0 += m.cols;
        }
        Ok(out)
    }

    pub fn vstack(parts: &[&Matrix]) -> Result<Self> {
        let cols = parts.first().map_or(0, |m| m.cols);
        if parts.is_empty() || parts.iter().any(|m| m.cols != cols) {
            return Err(Error::InvalidInput("vstack needs equal column counts".into()));
        }
        let rows = parts.iter().map(|m| m.rows).sum();
        let mut out = Self::zeros(rows, cols);
        let mut r0 = 0;
        for m in parts {
            out.set_block(r0, 0, m);
            r0 += m.rows;
        }
        Ok(out)
    }

    pub fn try_mul(&self, rhs: &Matrix) -> Result<Matrix> {
        if self.cols != rhs.rows {
            return Err(Error::InvalidInput(format!(
                "cannot multiply {}x{} by {}x{}",
                self.rows, self.cols, rhs.rows, rhs.cols
            )));
        }
        let mut out = Self::zeros(self.rows, rhs.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self.data[i * self.cols + k];
                if a == ZERO {
                    continue;
                }
                let src = &rhs.data[k * rhs.cols..(k + 1) * rhs.cols];
                let dst = &mut out.data[i * rhs.cols..(i + 1) * rhs.cols];
                for (d, &b) in dst.iter_mut().zip(src) {
                    *d += a * b;
                }
            }
        }
        Ok(out)
    }

    /// Inverse via LU; `None` when singular to working precision.
    pub fn try_inverse(&self) -> Option<Matrix> {
        if !self.is_square() {
            return None;
        }
        let inv = self.to_nalgebra().try_inverse()?;
        let out = Self::from_nalgebra(&inv);
        out.data
            .iter()
            .all(|z| z.re.is_finite() && z.im.is_finite())
            .then_some(out)
    }

    pub(crate) fn to_nalgebra(&self) -> DMatrix<C64> {
        DMatrix::from_row_slice(self.rows, self.cols, &self.data)
    }

    pub(crate) fn to_faer(&self) -> faer::Mat<C64> {
        faer::Mat::from_fn(self.rows, self.cols, |i, j| self.get(i, j))
    }

    pub(crate) fn from_nalgebra(m: &DMatrix<C64>) -> Self {
        let mut out = Self::zeros(m.nrows().max(1), m.ncols().max(1));
        for i in 0..m.nrows() {
            for j in 0..m.ncols() {
                out.data[i * out.cols + j] = m[(i, j)];
            }
        }
        out
    }
}

impl fmt::Debug for Matrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "Matrix {}x{} [", self.rows, self.cols)?;
        for i in 0..self.rows {
            write!(f, "  ")?;
            for j in 0..self.cols {
                let z = self.get(i, j);
                if z.im == 0.0 {
                    write!(f, "{:>10.4} ", z.re)?;
                } else {
                    write!(f, "{:>8.4}{:+.4}i ", z.re, z.im)?;
                }
            }
            writeln!(f)?;
        }
        write!(f, "]")
    }
}

impl Mul for &Matrix {
    type Output = Matrix;

    fn mul(self, rhs: &Matrix) -> Matrix {
        self.try_mul(rhs).expect("matrix product shape mismatch")
    }
}

impl Add for &Matrix {
    type Output = Matrix;

    fn add(self, rhs: &Matrix) -> Matrix {
        assert_eq!(self.shape(), rhs.shape(), "matrix sum shape mismatch");
        Matrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&rhs.data).map(|(a, b)| a + b).collect(),
        }
    }
}

impl Sub for &Matrix {
    type Output = Matrix;

    fn sub(self, rhs: &Matrix) -> Matrix {
        assert_eq!(self.shape(), rhs.shape(), "matrix difference shape mismatch");
        Matrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&rhs.data).map(|(a, b)| a - b).collect(),
        }
    }
}

impl Neg for &Matrix {
    type Output = Matrix;

    fn neg(self) -> Matrix {
        self.map(|z| -z)
    }
}

/// Kronecker product: block `(i, j)` of the result is `a[i, j] * b`.
pub fn kron(a: &Matrix, b: &Matrix) -> Matrix {
    let (p, q) = b.shape();
    let mut out = Matrix::zeros(a.rows * p, a.cols * q);
    for i in 0..a.rows {
        for j in 0..a.cols {
            let s = a.get(i, j);
            if s == ZERO {
                continue;
            }
            for k in 0..p {
                for l in 0..q {
                    out.data[(i * p + k) * out.cols + j * q + l] = s * b.get(k, l);
                }
            }
        }
    }
    out
}

/// Kronecker product of two row vectors.
pub fn kron_vec(a: &[C64], b: &[C64]) -> RowVec {
    a.iter().flat_map(|&x| b.iter().map(move |&y| x * y)).collect()
}

pub fn block_diag(blocks: &[Matrix]) -> Result<Matrix> {
    if blocks.is_empty() {
        return Err(Error::InvalidInput("block_diag needs at least one block".into()));
    }
    let rows = blocks.iter().map(Matrix::rows).sum();
    let cols = blocks.iter().map(Matrix::cols).sum();
    let mut out = Matrix::zeros(rows, cols);
    let (mut r0, mut c0) = (0, 0);
    for b in blocks {
        out.set_block(r0, c0, b);
        r0 += b.rows;
        c0 += b.cols;
    }
    Ok(out)
}

pub fn vec_norm(v: &[C64]) -> f64 {
    v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// Row vector times matrix.
pub fn vec_mul(v: &[C64], m: &Matrix) -> RowVec {
    assert_eq!(v.len(), m.rows, "row vector length must match matrix rows");
    let mut out = vec![ZERO; m.cols];
    for (k, &a) in v.iter().enumerate() {
        if a == ZERO {
            continue;
        }
        for (o, &b) in out.iter_mut().zip(&m.data[k * m.cols..(k + 1) * m.cols]) {
            *o += a * b;
        }
    }
    out
}

/// `‖vM − mu·v‖`.
pub fn left_residual(v: &[C64], m: &Matrix, mu: C64) -> f64 {
    let vm = vec_mul(v, m);
    vm.iter()
        .zip(v)
        .map(|(a, b)| (a - mu * b).norm_sqr())
        .sum::<f64>()
        .sqrt()
}

/// Thin SVD `A = U Σ Vᴴ` with singular values in descending order.
/// `u` and `v` hold the singular vectors as columns.
pub(crate) struct Svd {
    pub u: Vec<Vec<C64>>,
    pub sv: Vec<f64>,
    pub v: Vec<Vec<C64>>,
}

const SVD_CHECK: f64 = 1e-10;

/// Thin SVD, verified by reconstruction and orthonormality; the adjoint
/// is tried when the direct factorization fails the check.
pub(crate) fn svd(m: &Matrix) -> Result<Svd> {
    for adjoint in [false, true] {
        let a = if adjoint { m.conj_transpose() } else { m.clone() };
        let Ok(f) = a.to_faer().thin_svd() else {
            continue;
        };
        let columns = |x: faer::MatRef<'_, C64>| -> Vec<Vec<C64>> {
            (0..x.ncols()).map(|k| (0..x.nrows()).map(|i| x[(i, k)]).collect()).collect()
        };
        let (mut u, mut v) = (columns(f.U()), columns(f.V()));
        if adjoint {
            std::mem::swap(&mut u, &mut v);
        }
        let sv: Vec<f64> = f.S().column_vector().iter().map(|z| z.re).collect();
        let out = Svd { u, sv, v };
        if svd_is_accurate(m, &out) {
            return Ok(out);
        }
    }
    Err(Error::NumericalFailure {
        operation: "singular value decomposition",
        rows: m.rows,
        cols: m.cols,
    })
}

fn svd_is_accurate(m: &Matrix, f: &Svd) -> bool {
    let norm = m.frobenius_norm();
    let k = f.sv.len();
    let slack = SVD_CHECK * (1 + k) as f64;
    let mut residual = 0.0;
    for i in 0..m.rows {
        for j in 0..m.cols {
            let recon: C64 = (0..k).map(|l| f.u[l][i] * f.sv[l] * f.v[l][j].conj()).sum();
            residual += (m.get(i, j) - recon).norm_sqr();
        }
    }
    let orthonormal = |cols: &[Vec<C64>]| {
        cols.iter().enumerate().all(|(a, x)| {
            cols.iter().enumerate().all(|(b, y)| {
                let dot: C64 = x.iter().zip(y).map(|(p, q)| p.conj() * q).sum();
                let target = if a == b { 1.0 } else { 0.0 };
                (dot - target).norm() <= slack
            })
        })
    };
    residual.sqrt() <= slack * norm
        && orthonormal(&f.u)
        && orthonormal(&f.v)
        && f.sv.windows(2).all(|w| w[0] >= w[1])
}

/// Singular values in descending order.
pub fn singular_values(m: &Matrix) -> Result<Vec<f64>> {
    Ok(svd(m)?.sv)
}

/// Thin SVD left factor: columns of `U` (as vectors) and the descending
/// singular values.
pub(crate) fn left_singular_vectors(m: &Matrix) -> Result<(Vec<Vec<C64>>, Vec<f64>)> {
    let Svd { u, sv, .. } = svd(m)?;
    Ok((u, sv))
}

/// Rank cutoff for a matrix with the given shape and largest singular value.
pub fn rank_cutoff(sigma_max: f64, rows: usize, cols: usize, tol: &Tolerances) -> f64 {
    tol.rank_rel * sigma_max * rows.max(cols) as f64
}

/// Count of singular values above `rank_rel · σ_max · max(rows, cols)`.
pub fn numerical_rank(m: &Matrix, tol: &Tolerances) -> Result<usize> {
    let sv = singular_values(m)?;
    Ok(rank_from_singular_values(&sv, m.rows, m.cols, tol))
}

pub(crate) fn rank_from_singular_values(sv: &[f64], rows: usize, cols: usize, tol: &Tolerances) -> usize {
    let smax = sv.first().copied().unwrap_or(0.0);
    let cut = rank_cutoff(smax, rows, cols, tol);
    sv.iter().filter(|&&s| s > cut).count()
}

/// True iff the stacked vectors have full row rank. An empty list is
/// trivially independent.
pub fn linearly_independent(vs: &[RowVec], tol: &Tolerances) -> Result<bool> {
    if vs.is_empty() {
        return Ok(true);
    }
    let len = vs[0].len();
    if let Some(bad) = vs.iter().position(|v| v.len() != len) {
        return Err(Error::InvalidInput(format!(
            "vector {bad} has length {}, expected {len}",
            vs[bad].len()
        )));
    }
    if len == 0 {
        return Err(Error::InvalidInput("vectors must be nonempty".into()));
    }
    if vs.len() > len {
        return Ok(false);
    }
    let stacked = Matrix::from_row_vectors(vs)?;
    Ok(numerical_rank(&stacked, tol)? == vs.len())
}

/// Orthonormal basis of the left null space `{x : x·m = 0}` together with
/// the complete (descending) singular spectrum of `m`. At least `min_dim`
/// vectors are returned even when the cutoff would report fewer.
pub(crate) fn left_null_space(m: &Matrix, tol: &Tolerances, min_dim: usize) -> Result<(Vec<RowVec>, Vec<f64>)> {
    // x·m = 0  <=>  mᵀ xᵀ = 0. Pad mᵀ with zero rows so the thin SVD still
    // yields a full set of right singular vectors.
    let mt = m.transpose();
    let n = mt.cols;
    let padded = if mt.rows < n {
        let pad = Matrix::zeros(n - mt.rows, n);
        Matrix::vstack(&[&mt, &pad])?
    } else {
        mt
    };
    let Svd { sv, v, .. } = svd(&padded)?;
    let rank = rank_from_singular_values(&sv, m.rows, m.cols, tol).min(n);
    let dim = (n - rank).max(min_dim.min(n));
    let basis = v[n - dim..n].to_vec();
    // Report only the singular values of m itself, not of the padding.
    let real_count = m.rows.min(m.cols);
    let mut spectrum = sv;
    spectrum.truncate(real_count.max(1));
    Ok((basis, spectrum))
}

/// Row-reduces a set of vectors (partial pivoting) and returns the nonzero
/// rows of the result. Used to give eigenspace bases a canonical shape.
pub(crate) fn row_echelon(vectors: &[RowVec]) -> Vec<RowVec> {
    let mut rows: Vec<RowVec> = vectors.to_vec();
    let ncols = rows.first().map_or(0, Vec::len);
    let scale = rows.iter().map(|v| vec_norm(v)).fold(0.0, f64::max);
    let eps = 1e-12 * scale.max(f64::MIN_POSITIVE);
    let mut pivot_row = 0;
    for col in 0..ncols {
        if pivot_row == rows.len() {
            break;
        }
        let (best, mag) = (pivot_row..rows.len())
            .map(|r| (r, rows[r][col].norm()))
            .fold((pivot_row, -1.0), |acc, x| if x.1 > acc.1 { x } else { acc });
        if mag <= eps {
            continue;
        }
        rows.swap(pivot_row, best);
        let p = rows[pivot_row][col];
        rows[pivot_row].iter_mut().for_each(|z| *z /= p);
        let pivot = rows[pivot_row].clone();
        for (r, row) in rows.iter_mut().enumerate() {
            if r == pivot_row {
                continue;
            }
            let f = row[col];
            if f != ZERO {
                row.iter_mut().zip(&pivot).for_each(|(z, &q)| *z -= f * q);
            }
        }
        pivot_row += 1;
    }
    rows.truncate(pivot_row);
    rows
}

/// Unit-normalizes `v` and rotates its first significant entry onto the
/// positive real axis.
pub fn normalize_phase(v: &mut [C64]) {
    let norm = vec_norm(v);
    if norm == 0.0 {
        return;
    }
    let lead = v
        .iter()
        .copied()
        .find(|z| z.norm() > 1e-12 * norm)
        .unwrap_or(ONE);
    let rot = lead.conj() / lead.norm() / norm;
    v.iter_mut().for_each(|z| *z *= rot);
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn svd_of_nearly_rank_one_tall_matrix() {
        let w0 = [0.6106325395161039, -0.3053162697580518, -0.9159488092741558, -0.4579744046370781];
        let w1 = [0.5838051064926234, -0.29190255324631165, -0.875707659738935, -0.4378538298694677];
        let rows: Vec<Vec<f64>> = (0..4).map(|i| vec![w0[i], w1[i]]).collect();
        let m = Matrix::from_real_rows(&rows).unwrap();
        let s = svd(&m).unwrap();
        let frob = m.frobenius_norm();
        assert!((s.sv[0] - frob).abs() < 1e-12, "{:?}", s.sv);
        assert!(s.sv[1] < 1e-14);
        // Leading left singular vector is parallel to the columns.
        let dot: f64 = (0..4).map(|i| s.u[0][i].re * w0[i]).sum();
        assert!((dot.abs() - vec_norm(&w0.map(|x| C64::new(x, 0.0)))).abs() < 1e-12);
    }

    fn real(rows: &[&[f64]]) -> Matrix {
        Matrix::from_real_rows(rows).unwrap()
    }

    #[test]
    fn kron_of_identity_is_block_diagonal() {
        let m = real(&[&[1.0, 2.0], &[3.0, 4.0]]);
        let k = kron(&Matrix::identity(2), &m);
        assert_eq!(k, block_diag(&[m.clone(), m]).unwrap());
    }

    #[test]
    fn kron_with_zero_factor_is_zero() {
        let z = Matrix::zeros(2, 3);
        let b = real(&[&[1.0, -1.0], &[2.0, 5.0]]);
        assert!(kron(&z, &b).is_zero());
        assert_eq!(kron(&z, &b).shape(), (4, 6));
    }

    #[test]
    fn kron_hand_expansion() {
        let a = real(&[&[0.0, 1.0], &[1.0, 0.0]]);
        let b = real(&[&[1.0, 0.0], &[0.0, 0.0]]);
        let expected = real(&[
            &[0.0, 0.0, 1.0, 0.0],
            &[0.0, 0.0, 0.0, 0.0],
            &[1.0, 0.0, 0.0, 0.0],
            &[0.0, 0.0, 0.0, 0.0],
        ]);
        assert_eq!(kron(&a, &b), expected);
    }

    #[test]
    fn block_diag_cases() {
        let m = real(&[&[1.0, 2.0], &[3.0, 4.0]]);
        assert_eq!(block_diag(std::slice::from_ref(&m)).unwrap(), m);
        assert_eq!(
            block_diag(&[Matrix::identity(1), Matrix::identity(2)]).unwrap(),
            Matrix::identity(3)
        );
        let got = block_diag(&[real(&[&[1.0, 2.0]]), real(&[&[3.0], &[4.0]])]).unwrap();
        let expected = real(&[&[1.0, 2.0, 0.0], &[0.0, 0.0, 3.0], &[0.0, 0.0, 4.0]]);
        assert_eq!(got, expected);
        assert!(matches!(block_diag(&[]), Err(Error::InvalidInput(_))));
    }

    #[test]
    fn rank_examples() {
        let tol = Tolerances::default();
        assert_eq!(numerical_rank(&Matrix::identity(3), &tol).unwrap(), 3);
        assert_eq!(numerical_rank(&Matrix::zeros(2, 5), &tol).unwrap(), 0);
        assert_eq!(numerical_rank(&real(&[&[1.0, 2.0], &[2.0, 4.0]]), &tol).unwrap(), 1);
    }

    #[test]
    fn independence_examples() {
        let tol = Tolerances::default();
        let r = |xs: &[f64]| xs.iter().map(|&x| C64::new(x, 0.0)).collect::<RowVec>();
        let example = [r(&[1.0, 0.0, -1.0]), r(&[0.0, 1.0, 0.0]), r(&[0.0, 0.0, -1.0])];
        assert!(linearly_independent(&example, &tol).unwrap());
        let v = r(&[0.3, -2.0, 1.0]);
        assert!(!linearly_independent(&[v.clone(), v], &tol).unwrap());
        assert!(matches!(
            linearly_independent(&[r(&[1.0]), r(&[1.0, 2.0])], &tol),
            Err(Error::InvalidInput(_))
        ));
    }

    #[test]
    fn nearly_parallel_pair_is_dependent() {
        // Oracle: singular values of the 2x2 stack from the eigenvalues of
        // its Gram matrix, closed form for a symmetric 2x2.
        let a: [f64; 2] = [1.0, 1.0];
        let b: [f64; 2] = [1.0, 1.0 + 1e-15];
        let g11 = a[0] * a[0] + a[1] * a[1];
        let g22 = b[0] * b[0] + b[1] * b[1];
        // det(Gram) = det([a; b])^2 avoids cancellation in the Gram determinant.
        let cross = a[0] * b[1] - a[1] * b[0];
        let mean = 0.5 * (g11 + g22);
        let s_max = (mean + (mean * mean - cross * cross).max(0.0).sqrt()).sqrt();
        let s_min = cross.abs() / s_max;
        let tol = Tolerances::default();
        assert!(s_min <= rank_cutoff(s_max, 2, 2, &tol));

        let r = |xs: &[f64]| xs.iter().map(|&x| C64::new(x, 0.0)).collect::<RowVec>();
        assert!(!linearly_independent(&[r(&a), r(&b)], &tol).unwrap());
    }

    #[test]
    fn rejects_non_finite_entries() {
        assert!(Matrix::from_real(1, 2, &[1.0, f64::NAN]).is_err());
        assert!(Matrix::from_real(1, 1, &[f64::INFINITY]).is_err());
        assert!(Matrix::from_real(2, 2, &[1.0]).is_err());
    }

    #[test]
    fn tolerances_validation() {
        assert!(Tolerances::default().validate().is_ok());
        assert!(Tolerances::new(0.0, 1e-8, 1e-9).is_err());
        assert!(Tolerances::new(1e-12, 1.0, 1e-9).is_err());
        assert!(Tolerances::new(1e-12, 1e-8, -1.0).is_err());
    }

    #[test]
    fn left_null_space_of_nilpotent_block() {
        let m = real(&[&[0.0, 1.0], &[0.0, 0.0]]);
        let (basis, _) = left_null_space(&m, &Tolerances::default(), 0).unwrap();
        assert_eq!(basis.len(), 1);
        let mut v = basis[0].clone();
        normalize_phase(&mut v);
        assert!((v[0].norm()) < 1e-15);
        assert!((v[1] - ONE).norm() < 1e-15);
    }
}
