//! Small dense complex linear algebra.
//!
//! Sizes here are tiny (a handful of antennas and relays), so everything is
//! plain row-major `Vec<Complex64>` with direct loops. The only non-trivial
//! routine is the right pseudo-inverse `H^H (H H^H)^{-1}` used for
//! zero-forcing.

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};

/// Condition-number cap above which a Gram matrix is treated as singular.
pub const CONDITION_CAP: f64 = 1e12;

fn check_finite(entries: &[Complex64]) -> Result<()> {
    match entries.iter().position(|z| !z.re.is_finite() || !z.im.is_finite()) {
        Some(i) => Err(Error::NonFinite(i)),
        None => Ok(()),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CVector(Vec<Complex64>);

impl CVector {
    pub fn new(entries: Vec<Complex64>) -> Result<Self> {
        check_finite(&entries)?;
        Ok(Self(entries))
    }

    /// Builds a vector from real entries.
    pub fn from_real(entries: &[f64]) -> Result<Self> {
        Self::new(entries.iter().map(|&x| Complex64::new(x, 0.0)).collect())
    }

    pub fn zeros(len: usize) -> Self {
        Self(vec![Complex64::new(0.0, 0.0); len])
    }

    pub(crate) fn from_vec_unchecked(entries: Vec<Complex64>) -> Self {
        Self(entries)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[Complex64] {
        &self.0
    }

    pub fn iter(&self) -> std::slice::Iter<'_, Complex64> {
        self.0.iter()
    }

    pub fn scaled(&self, c: Complex64) -> Self {
        Self(self.0.iter().map(|z| z * c).collect())
    }

    pub fn norm_sq(&self) -> f64 {
        norm_sq(self)
    }

    pub fn norm(&self) -> f64 {
        norm(self)
    }
}

impl std::ops::Index<usize> for CVector {
    type Output = Complex64;

    fn index(&self, i: usize) -> &Complex64 {
        &self.0[i]
    }
}

/// Row-major dense complex matrix.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CMatrix {
    rows: usize,
    cols: usize,
    data: Vec<Complex64>,
}

impl CMatrix {
    pub fn new(rows: usize, cols: usize, data: Vec<Complex64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::DimensionMismatch {
                expected: rows * cols,
                actual: data.len(),
            });
        }
        check_finite(&data)?;
        Ok(Self { rows, cols, data })
    }

    pub(crate) fn from_vec_unchecked(rows: usize, cols: usize, data: Vec<Complex64>) -> Self {
        debug_assert_eq!(data.len(), rows * cols);
        Self { rows, cols, data }
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self::from_vec_unchecked(rows, cols, vec![Complex64::new(0.0, 0.0); rows * cols])
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = Complex64::new(1.0, 0.0);
        }
        m
    }

    pub fn from_real_diag(diag: &[f64]) -> Self {
        let mut m = Self::zeros(diag.len(), diag.len());
        for (i, &d) in diag.iter().enumerate() {
            m[(i, i)] = Complex64::new(d, 0.0);
        }
        m
    }

    /// Builds a matrix from real row slices. Panics on ragged input.
    pub fn from_real_rows(rows: &[&[f64]]) -> Self {
        let cols = rows.first().map_or(0, |r| r.len());
        let data = rows
            .iter()
            .flat_map(|r| {
                assert_eq!(r.len(), cols, "ragged rows");
                r.iter().map(|&x| Complex64::new(x, 0.0))
            })
            .collect();
        Self::from_vec_unchecked(rows.len(), cols, data)
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn as_slice(&self) -> &[Complex64] {
        &self.data
    }

    pub fn row(&self, i: usize) -> &[Complex64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn column(&self, j: usize) -> CVector {
        CVector((0..self.rows).map(|i| self[(i, j)]).collect())
    }

    /// Sub-matrix made of the given rows, in the given order.
    pub fn select_rows(&self, rows: &[usize]) -> Self {
        let mut data = Vec::with_capacity(rows.len() * self.cols);
        for &r in rows {
            data.extend_from_slice(self.row(r));
        }
        Self::from_vec_unchecked(rows.len(), self.cols, data)
    }

    pub fn matmul(&self, rhs: &CMatrix) -> Result<CMatrix> {
        if self.cols != rhs.rows {
            return Err(Error::DimensionMismatch {
                expected: self.cols,
                actual: rhs.rows,
            });
        }
        let mut out = CMatrix::zeros(self.rows, rhs.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self[(i, k)];
                for j in 0..rhs.cols {
                    out.data[i * rhs.cols + j] += a * rhs.data[k * rhs.cols + j];
                }
            }
        }
        Ok(out)
    }

    /// Largest absolute entry of `self - I`. Requires a square matrix.
    pub fn max_abs_deviation_from_identity(&self) -> f64 {
        let mut worst = 0.0f64;
        for i in 0..self.rows {
            for j in 0..self.cols {
                let target = if i == j { 1.0 } else { 0.0 };
                worst = worst.max((self[(i, j)] - target).norm());
            }
        }
        worst
    }
}

impl std::ops::Index<(usize, usize)> for CMatrix {
    type Output = Complex64;

    fn index(&self, (i, j): (usize, usize)) -> &Complex64 {
        &self.data[i * self.cols + j]
    }
}

impl std::ops::IndexMut<(usize, usize)> for CMatrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut Complex64 {
        &mut self.data[i * self.cols + j]
    }
}

pub fn conj_transpose(a: &CMatrix) -> CMatrix {
    let mut out = CMatrix::zeros(a.cols, a.rows);
    for i in 0..a.rows {
        for j in 0..a.cols {
            out[(j, i)] = a[(i, j)].conj();
        }
    }
    out
}

fn one_norm(a: &CMatrix) -> f64 {
    (0..a.cols)
        .map(|j| (0..a.rows).map(|i| a[(i, j)].norm()).sum::<f64>())
        .fold(0.0, f64::max)
}

/// Inverse of a square matrix by Gauss-Jordan elimination with partial
/// pivoting. Returns `SingularChannel` when a pivot vanishes or the 1-norm
/// condition estimate exceeds [`CONDITION_CAP`].
fn invert(a: &CMatrix) -> Result<CMatrix> {
    let n = a.rows;
    let mut work = a.clone();
    let mut inv = CMatrix::identity(n);
    for col in 0..n {
        let pivot = (col..n)
            .max_by(|&x, &y| work[(x, col)].norm().total_cmp(&work[(y, col)].norm()))
            .expect("non-empty pivot range");
        let pivot_val = work[(pivot, col)];
        if pivot_val.norm() == 0.0 || !pivot_val.norm().is_finite() {
            return Err(Error::SingularChannel {
                condition: f64::INFINITY,
            });
        }
        if pivot != col {
            for j in 0..n {
                work.data.swap(pivot * n + j, col * n + j);
                inv.data.swap(pivot * n + j, col * n + j);
            }
        }
        let scale = pivot_val.inv();
        for j in 0..n {
            work[(col, j)] *= scale;
            inv[(col, j)] *= scale;
        }
        for r in 0..n {
            if r == col {
                continue;
            }
            let factor = work[(r, col)];
            if factor.norm() == 0.0 {
                continue;
            }
            for j in 0..n {
                let w = work[(col, j)];
                let v = inv[(col, j)];
                work[(r, j)] -= factor * w;
                inv[(r, j)] -= factor * v;
            }
        }
    }
    let condition = one_norm(a) * one_norm(&inv);
    if !condition.is_finite() || condition > CONDITION_CAP {
        return Err(Error::SingularChannel { condition });
    }
    Ok(inv)
}

/// Right pseudo-inverse `H^H (H H^H)^{-1}` of a wide or square `L x N`
/// matrix. Column `j` of the result is the unnormalized zero-forcing
/// beamformer for row `j`.
pub fn right_pseudo_inverse(h: &CMatrix) -> Result<CMatrix> {
    if h.rows > h.cols {
        return Err(Error::DimensionMismatch {
            expected: h.cols,
            actual: h.rows,
        });
    }
    let hh = conj_transpose(h);
    let gram = h.matmul(&hh)?;
    let gram_inv = invert(&gram)?;
    hh.matmul(&gram_inv)
}

/// Determinant of the 2x2 Hermitian matrix `[[c11, c12], [conj(c12), c22]]`.
pub fn hermitian_det2(c11: f64, c22: f64, c12: Complex64) -> f64 {
    c11 * c22 - c12.norm_sqr()
}

/// `sum_i a_i * conj(b_i)`; conjugation falls on the second argument.
pub fn inner_product(a: &CVector, b: &CVector) -> Result<Complex64> {
    if a.len() != b.len() {
        return Err(Error::DimensionMismatch {
            expected: a.len(),
            actual: b.len(),
        });
    }
    Ok(inner_slices(a.as_slice(), b.as_slice()))
}

pub(crate) fn inner_slices(a: &[Complex64], b: &[Complex64]) -> Complex64 {
    a.iter().zip(b).map(|(x, y)| x * y.conj()).sum()
}

pub fn norm_sq(a: &CVector) -> f64 {
    a.iter().map(|z| z.norm_sqr()).sum()
}

pub fn norm(a: &CVector) -> f64 {
    norm_sq(a).sqrt()
}
