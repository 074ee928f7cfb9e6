//! Dense complex matrices and the handful of factorizations the rest of the
//! crate needs: tolerance-aware rank, pivoted solves and symmetric
//! permutations.
//!
//! Everything here is sized for the small (n <= 32) matrices that describe a
//! single vertex, so storage is a flat row-major `Vec` and the algorithms are
//! plain Gaussian elimination.

use std::fmt;
use std::ops::{Add, Index, IndexMut, Mul, Sub};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const DEFAULT_RANK_TOL: f64 = 1e-8;
pub const DEFAULT_EQ_TOL: f64 = 1e-9;

/// Thresholds shared by every numerical decision in the crate.
///
/// `rank_tol` is relative to the largest pivot of the matrix being
/// factored; `eq_tol` is an absolute entrywise bound used when comparing
/// matrices that are O(1) by construction.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Tolerance {
    pub rank_tol: f64,
    pub eq_tol: f64,
}

impl Tolerance {
    pub fn new(rank_tol: f64, eq_tol: f64) -> Result<Self> {
        for (name, v) in [("rank_tol", rank_tol), ("eq_tol", eq_tol)] {
            if !(v > 0.0 && v < 1.0) {
                return Err(Error::InvalidTolerance(format!(
                    "{name} = {v} must lie strictly between 0 and 1"
                )));
            }
        }
        Ok(Self { rank_tol, eq_tol })
    }

    pub fn with_eq_tol(self, eq_tol: f64) -> Result<Self> {
        Self::new(self.rank_tol, eq_tol)
    }

    pub fn with_rank_tol(self, rank_tol: f64) -> Result<Self> {
        Self::new(rank_tol, self.eq_tol)
    }
}

impl Default for Tolerance {
    fn default() -> Self {
        Self {
            rank_tol: DEFAULT_RANK_TOL,
            eq_tol: DEFAULT_EQ_TOL,
        }
    }
}

#[derive(Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "MatrixJson", into = "MatrixJson")]
pub struct ComplexMatrix {
    rows: usize,
    cols: usize,
    data: Vec<Complex64>,
}

/// Wire form: `{ "rows": r, "cols": c, "data": [[re, im], ...] }`, row-major.
#[derive(Serialize, Deserialize)]
struct MatrixJson {
    rows: usize,
    cols: usize,
    data: Vec<[f64; 2]>,
}

impl TryFrom<MatrixJson> for ComplexMatrix {
    type Error = Error;

    fn try_from(raw: MatrixJson) -> Result<Self> {
        let data = raw
            .data
            .into_iter()
            .map(|[re, im]| Complex64::new(re, im))
            .collect();
        ComplexMatrix::new(raw.rows, raw.cols, data)
    }
}

impl From<ComplexMatrix> for MatrixJson {
    fn from(m: ComplexMatrix) -> Self {
        MatrixJson {
            rows: m.rows,
            cols: m.cols,
            data: m.data.iter().map(|z| [z.re, z.im]).collect(),
        }
    }
}

impl ComplexMatrix {
    /// Builds a matrix from row-major data, rejecting shape mismatches and
    /// non-finite entries.
    pub fn new(rows: usize, cols: usize, data: Vec<Complex64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::Dimension(format!(
                "{rows}x{cols} matrix needs {} entries, got {}",
                rows * cols,
                data.len()
            )));
        }
        if let Some(pos) = data
            .iter()
            .position(|z| !z.re.is_finite() || !z.im.is_finite())
        {
            return Err(Error::NonFinite {
                row: pos / cols.max(1),
                col: pos % cols.max(1),
            });
        }
        Ok(Self { rows, cols, data })
    }

    pub fn from_real(rows: usize, cols: usize, data: &[f64]) -> Result<Self> {
        Self::new(
            rows,
            cols,
            data.iter().map(|&x| Complex64::new(x, 0.0)).collect(),
        )
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> Complex64) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Self { rows, cols, data }
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![Complex64::new(0.0, 0.0); rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        Self::from_fn(n, n, |i, j| {
            if i == j {
                Complex64::new(1.0, 0.0)
            } else {
                Complex64::new(0.0, 0.0)
            }
        })
    }

    /// Matrix with every entry equal to one.
    pub fn ones(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![Complex64::new(1.0, 0.0); rows * cols],
        }
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

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn data(&self) -> &[Complex64] {
        &self.data
    }

    pub fn row(&self, i: usize) -> &[Complex64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn map(&self, f: impl Fn(Complex64) -> Complex64) -> Self {
        Self {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|&z| f(z)).collect(),
        }
    }

    pub fn scale(&self, factor: Complex64) -> Self {
        self.map(|z| z * factor)
    }

    pub fn scale_real(&self, factor: f64) -> Self {
        self.map(|z| z * factor)
    }

    /// Conjugate transpose.
    pub fn adjoint(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self[(j, i)].conj())
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self[(j, i)])
    }

    pub fn submatrix(&self, row0: usize, col0: usize, rows: usize, cols: usize) -> Self {
        assert!(
            row0 + rows <= self.rows && col0 + cols <= self.cols,
            "submatrix out of bounds"
        );
        Self::from_fn(rows, cols, |i, j| self[(row0 + i, col0 + j)])
    }

    /// Assembles `[[a, b], [c, d]]` from four conforming blocks.
    pub fn from_blocks(a: &Self, b: &Self, c: &Self, d: &Self) -> Result<Self> {
        if a.rows != b.rows || c.rows != d.rows || a.cols != c.cols || b.cols != d.cols {
            return Err(Error::Dimension(format!(
                "blocks {:?} {:?} / {:?} {:?} do not conform",
                a.shape(),
                b.shape(),
                c.shape(),
                d.shape()
            )));
        }
        let (top, left) = (a.rows, a.cols);
        Ok(Self::from_fn(
            a.rows + c.rows,
            a.cols + b.cols,
            |i, j| match (i < top, j < left) {
                (true, true) => a[(i, j)],
                (true, false) => b[(i, j - left)],
                (false, true) => c[(i - top, j)],
                (false, false) => d[(i - top, j - left)],
            },
        ))
    }

    pub fn vstack(top: &Self, bottom: &Self) -> Result<Self> {
        Self::from_blocks(
            top,
            &Self::zeros(top.rows, 0),
            bottom,
            &Self::zeros(bottom.rows, 0),
        )
    }

    pub fn hstack(left: &Self, right: &Self) -> Result<Self> {
        Self::from_blocks(
            left,
            right,
            &Self::zeros(0, left.cols),
            &Self::zeros(0, right.cols),
        )
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    /// Largest entrywise modulus of `self - other`.
    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        assert_eq!(
            self.shape(),
            other.shape(),
            "shape mismatch in max_abs_diff"
        );
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }

    pub fn approx_eq(&self, other: &Self, tol: f64) -> bool {
        self.shape() == other.shape() && self.max_abs_diff(other) <= tol
    }

    /// `max |M - M^dagger|`; infinite for non-square input.
    pub fn hermitian_residual(&self) -> f64 {
        if !self.is_square() {
            return f64::INFINITY;
        }
        self.max_abs_diff(&self.adjoint())
    }

    /// `max |M^dagger M - I|`; infinite for non-square input.
    pub fn unitary_residual(&self) -> f64 {
        if !self.is_square() {
            return f64::INFINITY;
        }
        (&self.adjoint() * self).max_abs_diff(&Self::identity(self.rows))
    }

    pub fn trace(&self) -> Complex64 {
        (0..self.rows.min(self.cols)).map(|i| self[(i, i)]).sum()
    }
}

impl fmt::Debug for ComplexMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "ComplexMatrix {}x{} [", self.rows, self.cols)?;
        for i in 0..self.rows {
            write!(f, "  ")?;
            for z in self.row(i) {
                write!(f, "{:>+.6}{:+.6}i  ", z.re, z.im)?;
            }
            writeln!(f)?;
        }
        write!(f, "]")
    }
}

impl Index<(usize, usize)> for ComplexMatrix {
    type Output = Complex64;

    fn index(&self, (i, j): (usize, usize)) -> &Complex64 {
        debug_assert!(i < self.rows && j < self.cols);
        &self.data[i * self.cols + j]
    }
}

impl IndexMut<(usize, usize)> for ComplexMatrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut Complex64 {
        debug_assert!(i < self.rows && j < self.cols);
        &mut self.data[i * self.cols + j]
    }
}

impl Mul for &ComplexMatrix {
    type Output = ComplexMatrix;

    fn mul(self, rhs: &ComplexMatrix) -> ComplexMatrix {
        assert_eq!(
            self.cols, rhs.rows,
            "cannot multiply {}x{} by {}x{}",
            self.rows, self.cols, rhs.rows, rhs.cols
        );
        let mut out = ComplexMatrix::zeros(self.rows, rhs.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self[(i, k)];
                if a == Complex64::new(0.0, 0.0) {
                    continue;
                }
                for j in 0..rhs.cols {
                    out[(i, j)] += a * rhs[(k, j)];
                }
            }
        }
        out
    }
}

impl Add for &ComplexMatrix {
    type Output = ComplexMatrix;

    fn add(self, rhs: &ComplexMatrix) -> ComplexMatrix {
        assert_eq!(self.shape(), rhs.shape(), "shape mismatch in add");
        ComplexMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self
                .data
                .iter()
                .zip(&rhs.data)
                .map(|(a, b)| a + b)
                .collect(),
        }
    }
}

impl Sub for &ComplexMatrix {
    type Output = ComplexMatrix;

    fn sub(self, rhs: &ComplexMatrix) -> ComplexMatrix {
        assert_eq!(self.shape(), rhs.shape(), "shape mismatch in sub");
        ComplexMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self
                .data
                .iter()
                .zip(&rhs.data)
                .map(|(a, b)| a - b)
                .collect(),
        }
    }
}

/// Gaussian elimination with complete pivoting. Returns the pivot columns in
/// the order they were selected; their count is the numerical rank.
///
/// Elimination stops once the largest remaining entry falls below
/// `rank_tol` times the first (largest) pivot.
pub fn pivot_columns(m: &ComplexMatrix, tol: &Tolerance) -> Result<Vec<usize>> {
    if m.is_empty() {
        return Err(Error::Dimension("rank of an empty matrix".into()));
    }
    let mut work = m.clone();
    let (rows, cols) = m.shape();
    let mut row_of: Vec<usize> = (0..rows).collect();
    let mut col_of: Vec<usize> = (0..cols).collect();
    let mut pivots = Vec::new();
    let mut threshold = None;

    for step in 0..rows.min(cols) {
        let mut best = (step, step, -1.0);
        for i in step..rows {
            for j in step..cols {
                let v = work[(row_of[i], col_of[j])].norm();
                if v > best.2 {
                    best = (i, j, v);
                }
            }
        }
        let (pi, pj, mag) = best;
        let threshold = *threshold.get_or_insert(tol.rank_tol * mag);
        if mag == 0.0 || mag <= threshold {
            break;
        }
        row_of.swap(step, pi);
        col_of.swap(step, pj);
        pivots.push(col_of[step]);

        let pr = row_of[step];
        let pivot = work[(pr, col_of[step])];
        for &r in &row_of[step + 1..rows] {
            let factor = work[(r, col_of[step])] / pivot;
            if factor == Complex64::new(0.0, 0.0) {
                continue;
            }
            for &c in &col_of[step..cols] {
                let delta = factor * work[(pr, c)];
                work[(r, c)] -= delta;
            }
        }
    }
    Ok(pivots)
}

pub fn rank(m: &ComplexMatrix, tol: &Tolerance) -> Result<usize> {
    pivot_columns(m, tol).map(|p| p.len())
}

/// Solves `A X = B` by LU with partial pivoting.
///
/// A pivot smaller than `rank_tol * max|A|` is reported as singular, with the
/// elimination step at which it occurred.
pub fn solve(a: &ComplexMatrix, b: &ComplexMatrix, tol: &Tolerance) -> Result<ComplexMatrix> {
    if !a.is_square() {
        return Err(Error::Dimension(format!(
            "solve needs a square matrix, got {}x{}",
            a.rows, a.cols
        )));
    }
    if a.rows != b.rows {
        return Err(Error::Dimension(format!(
            "right-hand side has {} rows, matrix has {}",
            b.rows, a.rows
        )));
    }
    if a.is_empty() {
        return Err(Error::Dimension("solve with an empty matrix".into()));
    }
    let n = a.rows;
    let scale = a.max_abs();
    let threshold = tol.rank_tol * scale;
    let mut lu = a.clone();
    let mut x = b.clone();

    for k in 0..n {
        let (p, mag) = (k..n)
            .map(|i| (i, lu[(i, k)].norm()))
            .fold(
                (k, -1.0),
                |best, cur| if cur.1 > best.1 { cur } else { best },
            );
        if mag == 0.0 || mag <= threshold {
            return Err(Error::Singular {
                pivot: k,
                magnitude: mag,
                threshold,
            });
        }
        if p != k {
            for j in 0..n {
                lu.data.swap(k * n + j, p * n + j);
            }
            for j in 0..x.cols {
                x.data.swap(k * x.cols + j, p * x.cols + j);
            }
        }
        let pivot = lu[(k, k)];
        for i in k + 1..n {
            let factor = lu[(i, k)] / pivot;
            if factor == Complex64::new(0.0, 0.0) {
                continue;
            }
            for j in k..n {
                let delta = factor * lu[(k, j)];
                lu[(i, j)] -= delta;
            }
            for j in 0..x.cols {
                let delta = factor * x[(k, j)];
                x[(i, j)] -= delta;
            }
        }
    }

    for k in (0..n).rev() {
        let pivot = lu[(k, k)];
        for j in 0..x.cols {
            let mut acc = x[(k, j)];
            for l in k + 1..n {
                acc -= lu[(k, l)] * x[(l, j)];
            }
            x[(k, j)] = acc / pivot;
        }
    }
    Ok(x)
}

pub fn inverse(a: &ComplexMatrix, tol: &Tolerance) -> Result<ComplexMatrix> {
    solve(a, &ComplexMatrix::identity(a.rows), tol)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    Rows,
    Cols,
    Both,
}

pub fn validate_permutation(perm: &[usize], len: usize) -> Result<()> {
    if perm.len() != len {
        return Err(Error::InvalidPermutation(format!(
            "expected {len} indices, got {}",
            perm.len()
        )));
    }
    let mut seen = vec![false; len];
    for &p in perm {
        if p >= len || std::mem::replace(&mut seen[p], true) {
            return Err(Error::InvalidPermutation(format!(
                "{perm:?} is not a permutation of 0..{len}"
            )));
        }
    }
    Ok(())
}

pub fn invert_permutation(perm: &[usize]) -> Vec<usize> {
    let mut inv = vec![0; perm.len()];
    for (i, &p) in perm.iter().enumerate() {
        inv[p] = i;
    }
    inv
}

/// Reorders rows and/or columns so that `out[(i, j)] = m[(perm[i], perm[j])]`
/// (for `Side::Both`), i.e. `P M P^T` with `P` the permutation matrix whose
/// i-th row is `e_{perm[i]}`.
pub fn apply_permutation(m: &ComplexMatrix, perm: &[usize], side: Side) -> Result<ComplexMatrix> {
    match side {
        Side::Rows => validate_permutation(perm, m.rows)?,
        Side::Cols => validate_permutation(perm, m.cols)?,
        Side::Both => {
            validate_permutation(perm, m.rows)?;
            validate_permutation(perm, m.cols)?;
        }
    }
    Ok(ComplexMatrix::from_fn(m.rows, m.cols, |i, j| match side {
        Side::Rows => m[(perm[i], j)],
        Side::Cols => m[(i, perm[j])],
        Side::Both => m[(perm[i], perm[j])],
    }))
}
