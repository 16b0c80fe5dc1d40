use std::collections::hash_map::DefaultHasher;
use std::hash::Hasher;

use num_complex::Complex;

use crate::error::{Error, Result};
use crate::numeric::{Cx, Element};

/// Identity of an operand's contents, used to bind cached corrections to the
/// matrix they were computed from.
pub type Fingerprint = u64;

/// Dense row-major matrix. Both dimensions are at least 1.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix<T> {
    rows: usize,
    cols: usize,
    data: Vec<T>,
}

/// Complex matrix over one scalar domain.
pub type CMatrix<T> = Matrix<Cx<T>>;

impl<T: Clone> Matrix<T> {
    pub fn new(rows: usize, cols: usize, data: Vec<T>) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::InvalidShape { rows, cols });
        }
        if data.len() != rows * cols {
            return Err(Error::DimensionMismatch(format!(
                "{rows}x{cols} matrix needs {} values, got {}",
                rows * cols,
                data.len()
            )));
        }
        Ok(Matrix { rows, cols, data })
    }

    pub fn from_rows(rows: Vec<Vec<T>>) -> Result<Self> {
        let n_rows = rows.len();
        let n_cols = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != n_cols) {
            return Err(Error::DimensionMismatch("ragged rows".into()));
        }
        Matrix::new(n_rows, n_cols, rows.into_iter().flatten().collect())
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> T) -> Result<Self> {
        let mut data = Vec::with_capacity(rows * cols);
        for r in 0..rows {
            for c in 0..cols {
                data.push(f(r, c));
            }
        }
        Matrix::new(rows, cols, data)
    }

    /// A single-column matrix holding `v`.
    pub fn column(v: &[T]) -> Result<Self> {
        Matrix::new(v.len(), 1, v.to_vec())
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

    pub fn data(&self) -> &[T] {
        &self.data
    }

    pub fn into_data(self) -> Vec<T> {
        self.data
    }

    pub fn get(&self, r: usize, c: usize) -> &T {
        &self.data[r * self.cols + c]
    }

    pub fn set(&mut self, r: usize, c: usize, v: T) {
        self.data[r * self.cols + c] = v;
    }

    pub fn row(&self, r: usize) -> &[T] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn col(&self, c: usize) -> impl Iterator<Item = &T> + '_ {
        (0..self.rows).map(move |r| self.get(r, c))
    }

    pub fn transpose(&self) -> Self {
        Matrix::from_fn(self.cols, self.rows, |r, c| self.get(c, r).clone())
            .expect("transpose preserves a valid shape")
    }

    pub fn map<U: Clone>(&self, f: impl FnMut(&T) -> U) -> Matrix<U> {
        Matrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(f).collect(),
        }
    }

    /// The `rows x cols` block whose top-left corner is `(r0, c0)`.
    pub fn block(&self, r0: usize, c0: usize, rows: usize, cols: usize) -> Result<Self> {
        if r0 + rows > self.rows || c0 + cols > self.cols {
            return Err(Error::DimensionMismatch(format!(
                "block {rows}x{cols} at ({r0},{c0}) exceeds {}x{}",
                self.rows, self.cols
            )));
        }
        Matrix::from_fn(rows, cols, |r, c| self.get(r0 + r, c0 + c).clone())
    }
}

impl<T: Element> Matrix<T> {
    pub fn zeros(rows: usize, cols: usize) -> Result<Self> {
        Matrix::new(rows, cols, vec![T::zero(); rows * cols])
    }

    pub fn identity(n: usize) -> Result<Self> {
        Matrix::from_fn(n, n, |r, c| if r == c { T::one() } else { T::zero() })
    }

    pub fn from_i64_rows(rows: &[&[i64]]) -> Result<Self> {
        Matrix::from_rows(
            rows.iter()
                .map(|r| r.iter().map(|&v| T::from_i64(v)).collect())
                .collect(),
        )
    }

    /// Element-wise doubling; the scale every square-based datapath produces.
    pub fn doubled(&self) -> Self {
        self.map(|v| v.clone() + v.clone())
    }
}

impl<T: Element> Matrix<Complex<T>> {
    pub fn czeros(rows: usize, cols: usize) -> Result<Self> {
        Matrix::new(rows, cols, vec![Cx::new(T::zero(), T::zero()); rows * cols])
    }

    pub fn cidentity(n: usize) -> Result<Self> {
        Matrix::from_fn(n, n, |r, c| {
            Cx::new(if r == c { T::one() } else { T::zero() }, T::zero())
        })
    }

    pub fn from_i64_pairs(rows: &[&[(i64, i64)]]) -> Result<Self> {
        Matrix::from_rows(
            rows.iter()
                .map(|r| {
                    r.iter()
                        .map(|&(re, im)| Cx::new(T::from_i64(re), T::from_i64(im)))
                        .collect()
                })
                .collect(),
        )
    }

    pub fn cdoubled(&self) -> Self {
        self.map(|v| Cx::new(v.re.clone() + v.re.clone(), v.im.clone() + v.im.clone()))
    }
}

/// Hashing support for operand fingerprints.
pub trait Fingerprinted {
    fn feed(&self, state: &mut DefaultHasher);
}

impl<T: Element> Fingerprinted for T {
    fn feed(&self, state: &mut DefaultHasher) {
        self.hash_into(state);
    }
}

impl<T: Element> Fingerprinted for Complex<T> {
    fn feed(&self, state: &mut DefaultHasher) {
        self.re.hash_into(state);
        self.im.hash_into(state);
    }
}

impl<T: Clone + Fingerprinted> Matrix<T> {
    pub fn fingerprint(&self) -> Fingerprint {
        let mut state = DefaultHasher::new();
        state.write_usize(self.rows);
        state.write_usize(self.cols);
        for v in &self.data {
            v.feed(&mut state);
        }
        state.finish()
    }
}

/// Fingerprint of a vector operand (kernel taps, transform input).
pub fn fingerprint_slice<T: Fingerprinted>(v: &[T]) -> Fingerprint {
    let mut state = DefaultHasher::new();
    state.write_usize(v.len());
    for x in v {
        x.feed(&mut state);
    }
    state.finish()
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_bigint::BigInt;

    #[test]
    fn shape_checks() {
        assert!(Matrix::<BigInt>::zeros(0, 2).is_err());
        assert!(Matrix::new(2, 2, vec![1.0f64; 3]).is_err());
        assert!(Matrix::from_rows(vec![vec![1.0f64], vec![1.0, 2.0]]).is_err());
    }

    #[test]
    fn fingerprint_tracks_content_and_shape() {
        let a = Matrix::<BigInt>::from_i64_rows(&[&[1, 2], &[3, 4]]).unwrap();
        let b = Matrix::<BigInt>::from_i64_rows(&[&[1, 2, 3, 4]]).unwrap();
        let mut c = a.clone();
        assert_eq!(a.fingerprint(), c.fingerprint());
        c.set(1, 1, BigInt::from(5));
        assert_ne!(a.fingerprint(), c.fingerprint());
        assert_ne!(a.fingerprint(), b.fingerprint());
    }

    #[test]
    fn block_and_transpose() {
        let a = Matrix::<BigInt>::from_i64_rows(&[&[1, 2, 3], &[4, 5, 6]]).unwrap();
        assert_eq!(
            a.block(0, 1, 2, 2).unwrap(),
            Matrix::from_i64_rows(&[&[2, 3], &[5, 6]]).unwrap()
        );
        assert!(a.block(1, 1, 2, 2).is_err());
        assert_eq!(a.transpose().shape(), (3, 2));
        assert_eq!(a.col(2).cloned().collect::<Vec<_>>(), vec![BigInt::from(3), BigInt::from(6)]);
    }
}
