//! Dense exact matrices over the Gaussian rationals.
//!
//! Small dimensions only (ranks of the structures at hand), so plain
//! fraction-free-ish Gaussian elimination on `Q(i)` entries is all we need.

use alloc::vec;
use alloc::vec::Vec;
use core::fmt;
use core::ops::{Add, Mul, Sub};

use crate::error::{Error, Result};
use crate::scalar::{rat, Gaussian};

/// Row-major matrix over `Q(i)`.
#[derive(Clone, PartialEq, Eq)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    entries: Vec<Gaussian>,
}

impl Matrix {
    pub fn zero(rows: usize, cols: usize) -> Self {
        Matrix {
            rows,
            cols,
            entries: vec![Gaussian::zero(); rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Matrix::zero(n, n);
        for i in 0..n {
            m[(i, i)] = Gaussian::one();
        }
        m
    }

    pub fn from_rows(rows: Vec<Vec<Gaussian>>) -> Self {
        let r = rows.len();
        let c = rows.first().map_or(0, Vec::len);
        assert!(rows.iter().all(|row| row.len() == c), "ragged rows");
        Matrix {
            rows: r,
            cols: c,
            entries: rows.into_iter().flatten().collect(),
        }
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> Gaussian) -> Self {
        let mut entries = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                entries.push(f(i, j));
            }
        }
        Matrix {
            rows,
            cols,
            entries,
        }
    }

    /// Integer matrix helper, mostly for tests and fixtures.
    pub fn from_ints(rows: &[&[i64]]) -> Self {
        Matrix::from_rows(
            rows.iter()
                .map(|r| r.iter().map(|&x| Gaussian::from_int(x)).collect())
                .collect(),
        )
    }

    pub fn n_rows(&self) -> usize {
        self.rows
    }

    pub fn n_cols(&self) -> usize {
        self.cols
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn row(&self, i: usize) -> &[Gaussian] {
        &self.entries[i * self.cols..(i + 1) * self.cols]
    }

    pub fn rows_vec(&self) -> Vec<Vec<Gaussian>> {
        (0..self.rows).map(|i| self.row(i).to_vec()).collect()
    }

    pub fn transpose(&self) -> Matrix {
        Matrix::from_fn(self.cols, self.rows, |i, j| self[(j, i)].clone())
    }

    pub fn conj(&self) -> Matrix {
        Matrix::from_fn(self.rows, self.cols, |i, j| self[(i, j)].conj())
    }

    pub fn scale(&self, c: &Gaussian) -> Matrix {
        Matrix::from_fn(self.rows, self.cols, |i, j| &self[(i, j)] * c)
    }

    pub fn is_zero(&self) -> bool {
        self.entries.iter().all(Gaussian::is_zero)
    }

    pub fn is_identity(&self) -> bool {
        self.is_square()
            && (0..self.rows).all(|i| {
                (0..self.cols).all(|j| {
                    if i == j {
                        self[(i, j)] == Gaussian::one()
                    } else {
                        self[(i, j)].is_zero()
                    }
                })
            })
    }

    /// Stack `other` below `self`.
    pub fn vstack(&self, other: &Matrix) -> Matrix {
        assert_eq!(self.cols, other.cols, "vstack column mismatch");
        let mut entries = self.entries.clone();
        entries.extend(other.entries.iter().cloned());
        Matrix {
            rows: self.rows + other.rows,
            cols: self.cols,
            entries,
        }
    }

    pub fn mul_vec(&self, v: &[Gaussian]) -> Vec<Gaussian> {
        assert_eq!(self.cols, v.len(), "matrix-vector shape");
        (0..self.rows)
            .map(|i| {
                let mut acc = Gaussian::zero();
                for j in 0..self.cols {
                    if !self[(i, j)].is_zero() && !v[j].is_zero() {
                        acc = &acc + &(&self[(i, j)] * &v[j]);
                    }
                }
                acc
            })
            .collect()
    }

    /// Reduced row-echelon form; returns (rref, pivot columns).
    pub fn rref(&self) -> (Matrix, Vec<usize>) {
        let mut m = self.clone();
        let mut pivots = Vec::new();
        let mut r = 0;
        for c in 0..m.cols {
            if r == m.rows {
                break;
            }
            let Some(p) = (r..m.rows).find(|&i| !m[(i, c)].is_zero()) else {
                continue;
            };
            m.swap_rows(r, p);
            let inv = m[(r, c)].inv().expect("pivot nonzero");
            for j in c..m.cols {
                m[(r, j)] = &m[(r, j)] * &inv;
            }
            for i in 0..m.rows {
                if i != r && !m[(i, c)].is_zero() {
                    let f = m[(i, c)].clone();
                    for j in c..m.cols {
                        let delta = &m[(r, j)] * &f;
                        m[(i, j)] = &m[(i, j)] - &delta;
                    }
                }
            }
            pivots.push(c);
            r += 1;
        }
        (m, pivots)
    }

    pub fn rank(&self) -> usize {
        self.rref().1.len()
    }

    /// Basis of the right kernel, as rows.
    pub fn kernel(&self) -> Matrix {
        let (r, pivots) = self.rref();
        let free: Vec<usize> = (0..self.cols).filter(|c| !pivots.contains(c)).collect();
        let mut rows = Vec::with_capacity(free.len());
        for &f in &free {
            let mut v = vec![Gaussian::zero(); self.cols];
            v[f] = Gaussian::one();
            for (pi, &pc) in pivots.iter().enumerate() {
                v[pc] = -&r[(pi, f)];
            }
            rows.push(v);
        }
        if rows.is_empty() {
            Matrix::zero(0, self.cols)
        } else {
            Matrix::from_rows(rows)
        }
    }

    pub fn inverse(&self) -> Result<Matrix> {
        if !self.is_square() {
            return Err(Error::Shape("inverse of non-square matrix".into()));
        }
        let n = self.rows;
        let mut aug = Matrix::zero(n, 2 * n);
        for i in 0..n {
            for j in 0..n {
                aug[(i, j)] = self[(i, j)].clone();
            }
            aug[(i, n + i)] = Gaussian::one();
        }
        let (r, pivots) = aug.rref();
        if pivots.len() < n || pivots[n - 1] >= n {
            return Err(Error::Invalid("singular matrix".into()));
        }
        Ok(Matrix::from_fn(n, n, |i, j| r[(i, n + j)].clone()))
    }

    pub fn det(&self) -> Result<Gaussian> {
        if !self.is_square() {
            return Err(Error::Shape("determinant of non-square matrix".into()));
        }
        let mut m = self.clone();
        let n = m.rows;
        let mut det = Gaussian::one();
        for c in 0..n {
            let Some(p) = (c..n).find(|&i| !m[(i, c)].is_zero()) else {
                return Ok(Gaussian::zero());
            };
            if p != c {
                m.swap_rows(c, p);
                det = -&det;
            }
            det = &det * &m[(c, c)];
            let inv = m[(c, c)].inv().expect("pivot nonzero");
            for i in c + 1..n {
                if !m[(i, c)].is_zero() {
                    let f = &m[(i, c)] * &inv;
                    for j in c..n {
                        let delta = &m[(c, j)] * &f;
                        m[(i, j)] = &m[(i, j)] - &delta;
                    }
                }
            }
        }
        Ok(det)
    }

    pub fn trace(&self) -> Result<Gaussian> {
        if !self.is_square() {
            return Err(Error::Shape("trace of non-square matrix".into()));
        }
        let mut t = Gaussian::zero();
        for i in 0..self.rows {
            t = &t + &self[(i, i)];
        }
        Ok(t)
    }

    /// Kronecker product.
    pub fn kron(&self, other: &Matrix) -> Matrix {
        Matrix::from_fn(
            self.rows * other.rows,
            self.cols * other.cols,
            |i, j| {
                let (ia, ib) = (i / other.rows, i % other.rows);
                let (ja, jb) = (j / other.cols, j % other.cols);
                &self[(ia, ja)] * &other[(ib, jb)]
            },
        )
    }

    /// Solve `x * self = rhs` row-wise, i.e. express the rows of `rhs` in
    /// terms of the rows of `self`. Fails when a row is outside the span.
    pub fn solve_rows(&self, rhs: &Matrix) -> Result<Matrix> {
        if self.cols != rhs.cols {
            return Err(Error::Shape("solve_rows width mismatch".into()));
        }
        // Row-reduce [self | I] to express reduced rows as combinations.
        let k = self.rows;
        let mut aug = Matrix::zero(k, self.cols + k);
        for i in 0..k {
            for j in 0..self.cols {
                aug[(i, j)] = self[(i, j)].clone();
            }
            aug[(i, self.cols + i)] = Gaussian::one();
        }
        let (red, _) = aug.rref();
        // pivot columns within the original block
        let mut piv = Vec::new();
        for i in 0..k {
            if let Some(c) = (0..self.cols).find(|&c| !red[(i, c)].is_zero()) {
                piv.push((i, c));
            }
        }
        let mut out = Matrix::zero(rhs.rows, k);
        for r in 0..rhs.rows {
            let mut v: Vec<Gaussian> = rhs.row(r).to_vec();
            let mut coeffs = vec![Gaussian::zero(); k];
            for &(ri, c) in &piv {
                if !v[c].is_zero() {
                    let f = v[c].clone();
                    for j in 0..self.cols {
                        let delta = &red[(ri, j)] * &f;
                        v[j] = &v[j] - &delta;
                    }
                    for j in 0..k {
                        let delta = &red[(ri, self.cols + j)] * &f;
                        coeffs[j] = &coeffs[j] + &delta;
                    }
                }
            }
            if v.iter().any(|x| !x.is_zero()) {
                return Err(Error::Invalid("row not in span".into()));
            }
            for j in 0..k {
                out[(r, j)] = coeffs[j].clone();
            }
        }
        Ok(out)
    }

    fn swap_rows(&mut self, a: usize, b: usize) {
        if a == b {
            return;
        }
        for j in 0..self.cols {
            self.entries.swap(a * self.cols + j, b * self.cols + j);
        }
    }

    /// Matrix power with nonnegative exponent.
    pub fn pow(&self, mut e: u64) -> Matrix {
        assert!(self.is_square());
        let mut base = self.clone();
        let mut acc = Matrix::identity(self.rows);
        while e > 0 {
            if e & 1 == 1 {
                acc = &acc * &base;
            }
            base = &base * &base;
            e >>= 1;
        }
        acc
    }
}

impl core::ops::Index<(usize, usize)> for Matrix {
    type Output = Gaussian;
    fn index(&self, (i, j): (usize, usize)) -> &Gaussian {
        &self.entries[i * self.cols + j]
    }
}

impl core::ops::IndexMut<(usize, usize)> for Matrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut Gaussian {
        &mut self.entries[i * self.cols + j]
    }
}

impl Mul for &Matrix {
    type Output = Matrix;
    fn mul(self, rhs: &Matrix) -> Matrix {
        assert_eq!(self.cols, rhs.rows, "matrix product shape");
        Matrix::from_fn(self.rows, rhs.cols, |i, j| {
            let mut acc = Gaussian::zero();
            for k in 0..self.cols {
                if !self[(i, k)].is_zero() && !rhs[(k, j)].is_zero() {
                    acc = &acc + &(&self[(i, k)] * &rhs[(k, j)]);
                }
            }
            acc
        })
    }
}

impl Add for &Matrix {
    type Output = Matrix;
    fn add(self, rhs: &Matrix) -> Matrix {
        assert_eq!((self.rows, self.cols), (rhs.rows, rhs.cols));
        Matrix::from_fn(self.rows, self.cols, |i, j| &self[(i, j)] + &rhs[(i, j)])
    }
}

impl Sub for &Matrix {
    type Output = Matrix;
    fn sub(self, rhs: &Matrix) -> Matrix {
        assert_eq!((self.rows, self.cols), (rhs.rows, rhs.cols));
        Matrix::from_fn(self.rows, self.cols, |i, j| &self[(i, j)] - &rhs[(i, j)])
    }
}

impl fmt::Debug for Matrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "[{}x{}]", self.rows, self.cols)?;
        for i in 0..self.rows {
            write!(f, "  [")?;
            for j in 0..self.cols {
                if j > 0 {
                    write!(f, ", ")?;
                }
                write!(f, "{}", self[(i, j)])?;
            }
            writeln!(f, "]")?;
        }
        Ok(())
    }
}

/// Scale helper: rational multiple of the identity.
pub fn scalar_matrix(n: usize, c: &Gaussian) -> Matrix {
    let mut m = Matrix::zero(n, n);
    for i in 0..n {
        m[(i, i)] = c.clone();
    }
    m
}

/// A rational as a Gaussian for convenience in matrix code.
pub fn g(num: i64, den: i64) -> Gaussian {
    Gaussian::from_rat(rat(num, den))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rref_rank_kernel() {
        let m = Matrix::from_ints(&[&[1, 2, 3], &[2, 4, 6], &[0, 1, 1]]);
        assert_eq!(m.rank(), 2);
        let k = m.kernel();
        assert_eq!(k.n_rows(), 1);
        // check kernel row really annihilates
        let prod = &m * &k.transpose();
        assert!(prod.is_zero());
    }

    #[test]
    fn inverse_roundtrip() {
        let m = Matrix::from_ints(&[&[1, 2], &[3, 5]]);
        let inv = m.inverse().unwrap();
        assert!((&m * &inv).is_identity());
        let s = Matrix::from_ints(&[&[1, 2], &[2, 4]]);
        assert!(s.inverse().is_err());
    }

    #[test]
    fn solve_rows_expresses_combinations() {
        let basis = Matrix::from_ints(&[&[1, 0, 1], &[0, 1, 1]]);
        let rhs = Matrix::from_ints(&[&[2, 3, 5]]);
        let c = basis.solve_rows(&rhs).unwrap();
        assert_eq!(c, Matrix::from_ints(&[&[2, 3]]));
        let bad = Matrix::from_ints(&[&[0, 0, 1]]);
        assert!(basis.solve_rows(&bad).is_err());
    }

    #[test]
    fn det_and_trace() {
        let m = Matrix::from_ints(&[&[2, 1], &[1, 1]]);
        assert_eq!(m.det().unwrap(), Gaussian::from_int(1));
        assert_eq!(m.trace().unwrap(), Gaussian::from_int(3));
    }
}
