//! Small dense linear algebra over complex and real doubles.
//!
//! Everything here is sized for desk-scale problems (dimensions up to a few
//! dozen), so the routines are plain O(n^3) eliminations without blocking.

use std::fmt;
use std::ops::{Index, IndexMut};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Tolerances for rank decisions and kernel residual checks.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NumTol {
    /// A pivot counts towards the rank when it exceeds this fraction of the largest pivot.
    pub rank_rel_tol: f64,
    /// Kernel vectors must satisfy `|A v| <= residual_rel_tol * |A| * |v|`.
    pub residual_rel_tol: f64,
}

impl Default for NumTol {
    fn default() -> Self {
        Self {
            rank_rel_tol: 1e-10,
            residual_rel_tol: 1e-9,
        }
    }
}

impl NumTol {
    pub fn new(rank_rel_tol: f64, residual_rel_tol: f64) -> Result<Self> {
        if !(rank_rel_tol > 0.0 && residual_rel_tol > 0.0) {
            return Err(Error::InvalidConfig(
                "tolerances must be strictly positive".into(),
            ));
        }
        Ok(Self {
            rank_rel_tol,
            residual_rel_tol,
        })
    }
}

/// Dense row-major complex matrix.
#[derive(Clone, PartialEq, Serialize, Deserialize)]
pub struct CMatrix {
    rows: usize,
    cols: usize,
    data: Vec<Complex64>,
}

impl fmt::Debug for CMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "CMatrix {}x{} [", self.rows, self.cols)?;
        for r in 0..self.rows {
            write!(f, "  ")?;
            for c in 0..self.cols {
                let z = self[(r, c)];
                write!(f, "{:+.6e}{:+.6e}i ", z.re, z.im)?;
            }
            writeln!(f)?;
        }
        write!(f, "]")
    }
}

impl CMatrix {
    /// Builds a matrix from row-major data, rejecting non-finite entries.
    pub fn from_vec(rows: usize, cols: usize, data: Vec<Complex64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::DimensionMismatch(format!(
                "{} entries for a {rows}x{cols} matrix",
                data.len()
            )));
        }
        if let Some(pos) = data.iter().position(|z| !(z.re.is_finite() && z.im.is_finite())) {
            return Err(Error::NonFinite {
                row: pos / cols.max(1),
                col: pos % cols.max(1),
            });
        }
        Ok(Self { rows, cols, data })
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![Complex64::new(0.0, 0.0); rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = Complex64::new(1.0, 0.0);
        }
        m
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> Complex64) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for r in 0..rows {
            for c in 0..cols {
                data.push(f(r, c));
            }
        }
        Self { rows, cols, data }
    }

    /// Real-valued rows, convenience for tests and literals.
    pub fn from_real_rows(rows: &[&[f64]]) -> Result<Self> {
        let r = rows.len();
        let c = rows.first().map_or(0, |row| row.len());
        if rows.iter().any(|row| row.len() != c) {
            return Err(Error::DimensionMismatch("ragged rows".into()));
        }
        let data = rows
            .iter()
            .flat_map(|row| row.iter().map(|&x| Complex64::new(x, 0.0)))
            .collect();
        Self::from_vec(r, c, data)
    }

    pub fn diag(d: &[Complex64]) -> Self {
        let mut m = Self::zeros(d.len(), d.len());
        for (i, &x) in d.iter().enumerate() {
            m[(i, i)] = x;
        }
        m
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

    pub fn as_slice(&self) -> &[Complex64] {
        &self.data
    }

    pub fn column(&self, c: usize) -> Vec<Complex64> {
        (0..self.rows).map(|r| self[(r, c)]).collect()
    }

    pub fn map(&self, f: impl Fn(Complex64) -> Complex64) -> Self {
        Self {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|&z| f(z)).collect(),
        }
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    /// True when every entry has an exactly zero imaginary part.
    pub fn is_real(&self) -> bool {
        self.data.iter().all(|z| z.im == 0.0)
    }

    pub fn scale(&self, s: Complex64) -> Self {
        self.map(|z| z * s)
    }

    /// Entrywise `self + other`.
    pub fn add(&self, other: &CMatrix) -> Result<CMatrix> {
        self.zip_with(other, |a, b| a + b)
    }

    /// Entrywise `self - other`.
    pub fn sub(&self, other: &CMatrix) -> Result<CMatrix> {
        self.zip_with(other, |a, b| a - b)
    }

    fn zip_with(&self, other: &CMatrix, f: impl Fn(Complex64, Complex64) -> Complex64) -> Result<CMatrix> {
        if self.shape() != other.shape() {
            return Err(Error::DimensionMismatch(format!(
                "{:?} vs {:?}",
                self.shape(),
                other.shape()
            )));
        }
        Ok(CMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self
                .data
                .iter()
                .zip(&other.data)
                .map(|(&a, &b)| f(a, b))
                .collect(),
        })
    }

    /// Matrix-vector product.
    pub fn mul_vec(&self, v: &[Complex64]) -> Result<Vec<Complex64>> {
        if v.len() != self.cols {
            return Err(Error::DimensionMismatch(format!(
                "{}x{} times vector of length {}",
                self.rows,
                self.cols,
                v.len()
            )));
        }
        Ok((0..self.rows)
            .map(|r| {
                self.data[r * self.cols..(r + 1) * self.cols]
                    .iter()
                    .zip(v)
                    .map(|(a, b)| a * b)
                    .sum()
            })
            .collect())
    }

    fn swap_rows(&mut self, a: usize, b: usize) {
        if a == b {
            return;
        }
        for c in 0..self.cols {
            self.data.swap(a * self.cols + c, b * self.cols + c);
        }
    }

    fn swap_cols(&mut self, a: usize, b: usize) {
        if a == b {
            return;
        }
        for r in 0..self.rows {
            self.data.swap(r * self.cols + a, r * self.cols + b);
        }
    }
}

impl Index<(usize, usize)> for CMatrix {
    type Output = Complex64;

    fn index(&self, (r, c): (usize, usize)) -> &Complex64 {
        debug_assert!(r < self.rows && c < self.cols);
        &self.data[r * self.cols + c]
    }
}

impl IndexMut<(usize, usize)> for CMatrix {
    fn index_mut(&mut self, (r, c): (usize, usize)) -> &mut Complex64 {
        debug_assert!(r < self.rows && c < self.cols);
        &mut self.data[r * self.cols + c]
    }
}

/// Dense row-major real matrix, used for Jacobians.
#[derive(Debug, Clone, PartialEq)]
pub struct RMatrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl RMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn from_vec(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::DimensionMismatch(format!(
                "{} entries for a {rows}x{cols} matrix",
                data.len()
            )));
        }
        if let Some(pos) = data.iter().position(|x| !x.is_finite()) {
            return Err(Error::NonFinite {
                row: pos / cols.max(1),
                col: pos % cols.max(1),
            });
        }
        Ok(Self { rows, cols, data })
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = 1.0;
        }
        m
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn column_norm(&self, c: usize) -> f64 {
        (0..self.rows)
            .map(|r| self[(r, c)].powi(2))
            .sum::<f64>()
            .sqrt()
    }

    pub fn mul_vec(&self, v: &[f64]) -> Result<Vec<f64>> {
        if v.len() != self.cols {
            return Err(Error::DimensionMismatch(format!(
                "{}x{} times vector of length {}",
                self.rows,
                self.cols,
                v.len()
            )));
        }
        Ok((0..self.rows)
            .map(|r| {
                self.data[r * self.cols..(r + 1) * self.cols]
                    .iter()
                    .zip(v)
                    .map(|(a, b)| a * b)
                    .sum()
            })
            .collect())
    }
}

impl Index<(usize, usize)> for RMatrix {
    type Output = f64;

    fn index(&self, (r, c): (usize, usize)) -> &f64 {
        &self.data[r * self.cols + c]
    }
}

impl IndexMut<(usize, usize)> for RMatrix {
    fn index_mut(&mut self, (r, c): (usize, usize)) -> &mut f64 {
        &mut self.data[r * self.cols + c]
    }
}

pub fn matmul(a: &CMatrix, b: &CMatrix) -> Result<CMatrix> {
    if a.cols != b.rows {
        return Err(Error::DimensionMismatch(format!(
            "{}x{} times {}x{}",
            a.rows, a.cols, b.rows, b.cols
        )));
    }
    let mut out = CMatrix::zeros(a.rows, b.cols);
    for i in 0..a.rows {
        for p in 0..a.cols {
            let aip = a[(i, p)];
            if aip == Complex64::new(0.0, 0.0) {
                continue;
            }
            for j in 0..b.cols {
                out[(i, j)] += aip * b[(p, j)];
            }
        }
    }
    Ok(out)
}

/// Result of Gauss-Jordan elimination with complete pivoting.
///
/// `reduced` holds `[I_r B; 0 *]` in the permuted column order `colperm`.
struct Elimination {
    reduced: CMatrix,
    colperm: Vec<usize>,
    rank: usize,
}

fn eliminate(a: &CMatrix, tol: &NumTol) -> Elimination {
    let mut m = a.clone();
    let mut colperm: Vec<usize> = (0..a.cols).collect();
    let steps = a.rows.min(a.cols);
    let mut largest = 0.0_f64;
    let mut rank = 0;

    for step in 0..steps {
        let (mut pr, mut pc, mut pmag) = (step, step, -1.0_f64);
        for r in step..m.rows {
            for c in step..m.cols {
                let mag = m[(r, c)].norm();
                if mag > pmag {
                    (pr, pc, pmag) = (r, c, mag);
                }
            }
        }
        if step == 0 {
            largest = pmag;
        }
        if largest <= 0.0 || pmag <= tol.rank_rel_tol * largest {
            break;
        }
        m.swap_rows(step, pr);
        m.swap_cols(step, pc);
        colperm.swap(step, pc);

        let inv = m[(step, step)].inv();
        for c in step..m.cols {
            m[(step, c)] *= inv;
        }
        for r in 0..m.rows {
            if r == step {
                continue;
            }
            let factor = m[(r, step)];
            if factor == Complex64::new(0.0, 0.0) {
                continue;
            }
            for c in step..m.cols {
                let delta = factor * m[(step, c)];
                m[(r, c)] -= delta;
            }
        }
        rank += 1;
    }

    Elimination {
        reduced: m,
        colperm,
        rank,
    }
}

/// Numerical rank from complete-pivoting elimination.
pub fn rank(a: &CMatrix, tol: &NumTol) -> usize {
    if a.rows == 0 || a.cols == 0 {
        return 0;
    }
    eliminate(a, tol).rank
}

/// Orthonormal basis of the numerical kernel of `a`, one vector per column.
///
/// Returns a `cols x 0` matrix when the kernel is trivial.
pub fn nullspace(a: &CMatrix, tol: &NumTol) -> CMatrix {
    let n = a.cols;
    if a.rows == 0 {
        return CMatrix::identity(n);
    }
    let Elimination {
        reduced,
        colperm,
        rank,
    } = eliminate(a, tol);

    let mut basis: Vec<Vec<Complex64>> = Vec::with_capacity(n - rank);
    for free in rank..n {
        let mut v = vec![Complex64::new(0.0, 0.0); n];
        v[colperm[free]] = Complex64::new(1.0, 0.0);
        for pivot in 0..rank {
            v[colperm[pivot]] = -reduced[(pivot, free)];
        }
        basis.push(v);
    }
    orthonormalize(&mut basis);

    let cols = basis.len();
    CMatrix::from_fn(n, cols, |r, c| basis[c][r])
}

/// Modified Gram-Schmidt, run twice for stability.
fn orthonormalize(vs: &mut [Vec<Complex64>]) {
    for i in 0..vs.len() {
        for _ in 0..2 {
            for j in 0..i {
                let proj: Complex64 = vs[j].iter().zip(&vs[i]).map(|(q, v)| q.conj() * v).sum();
                let (head, tail) = vs.split_at_mut(i);
                for (v, q) in tail[0].iter_mut().zip(&head[j]) {
                    *v -= proj * q;
                }
            }
        }
        let norm = vs[i].iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        for z in vs[i].iter_mut() {
            *z /= norm;
        }
    }
}

/// Solves `min |J s + r|^2 + lambda |s|^2` by Householder QR of the stacked
/// system `[J; sqrt(lambda) I] s = [-r; 0]`.
pub fn damped_lls(jac: &RMatrix, resid: &[f64], lambda: f64) -> Result<Vec<f64>> {
    if jac.rows != resid.len() {
        return Err(Error::DimensionMismatch(format!(
            "jacobian has {} rows, residual has {}",
            jac.rows,
            resid.len()
        )));
    }
    if !(lambda >= 0.0) {
        return Err(Error::InvalidConfig(format!("damping must be nonnegative, got {lambda}")));
    }
    let n = jac.cols;
    let m = jac.rows + n;
    // stacked and augmented, column-major for cheap Householder updates
    let mut a = vec![vec![0.0; m]; n];
    for (c, col) in a.iter_mut().enumerate() {
        for r in 0..jac.rows {
            col[r] = jac[(r, c)];
        }
        col[jac.rows + c] = lambda.sqrt();
    }
    let mut b = vec![0.0; m];
    for (bi, ri) in b.iter_mut().zip(resid) {
        *bi = -ri;
    }

    let mut diag = vec![0.0; n];
    for k in 0..n {
        let norm = a[k][k..].iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm == 0.0 {
            return Err(Error::Singular { lambda });
        }
        let alpha = if a[k][k] > 0.0 { -norm } else { norm };
        let mut v: Vec<f64> = a[k][k..].to_vec();
        v[0] -= alpha;
        let vnorm2: f64 = v.iter().map(|x| x * x).sum();
        diag[k] = alpha;
        if vnorm2 > 0.0 {
            for col in a.iter_mut().skip(k + 1) {
                let dot: f64 = v.iter().zip(&col[k..]).map(|(x, y)| x * y).sum();
                let f = 2.0 * dot / vnorm2;
                for (x, vi) in col[k..].iter_mut().zip(&v) {
                    *x -= f * vi;
                }
            }
            let dot: f64 = v.iter().zip(&b[k..]).map(|(x, y)| x * y).sum();
            let f = 2.0 * dot / vnorm2;
            for (x, vi) in b[k..].iter_mut().zip(&v) {
                *x -= f * vi;
            }
        }
    }

    let max_diag = diag.iter().fold(0.0_f64, |acc, d| acc.max(d.abs()));
    if diag.iter().any(|d| d.abs() <= 1e-13 * max_diag) {
        return Err(Error::Singular { lambda });
    }

    let mut s = vec![0.0; n];
    for k in (0..n).rev() {
        let mut acc = b[k];
        for (j, col) in a.iter().enumerate().skip(k + 1) {
            acc -= col[k] * s[j];
        }
        s[k] = acc / diag[k];
    }
    Ok(s)
}
