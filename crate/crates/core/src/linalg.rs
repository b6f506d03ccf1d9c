//! Small dense linear algebra: the design matrices here are at most a few
//! hundred columns, so products use plain row-major `Vec` storage.
//! Factorizations are delegated to nalgebra in `f64`.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::scalar::{lit, wide, Scalar};

/// Row-major dense matrix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DenseMatrix<T> {
    rows: usize,
    cols: usize,
    entries: Vec<T>,
}

impl<T: Scalar> DenseMatrix<T> {
    pub fn new(rows: usize, cols: usize, entries: Vec<T>) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(invalid("matrix dimensions must be positive"));
        }
        if entries.len() != rows * cols {
            return Err(Error::DimensionMismatch {
                expected: rows * cols,
                got: entries.len(),
            });
        }
        if entries.iter().any(|v| !v.is_finite()) {
            return Err(invalid("matrix entries must be finite"));
        }
        Ok(Self {
            rows,
            cols,
            entries,
        })
    }

    pub fn from_rows(rows: &[Vec<T>]) -> Result<Self> {
        let cols = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != cols) {
            return Err(invalid("ragged rows"));
        }
        Self::new(rows.len(), cols, rows.concat())
    }

    pub fn identity(n: usize) -> Self {
        let mut entries = vec![T::zero(); n * n];
        for i in 0..n {
            entries[i * n + i] = T::one();
        }
        Self {
            rows: n,
            cols: n,
            entries,
        }
    }

    /// Square diagonal matrix.
    pub fn diag(values: &[T]) -> Result<Self> {
        let n = values.len();
        let mut entries = vec![T::zero(); n * n];
        for (i, &v) in values.iter().enumerate() {
            entries[i * n + i] = v;
        }
        Self::new(n, n, entries)
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn entries(&self) -> &[T] {
        &self.entries
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> T {
        self.entries[i * self.cols + j]
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[T] {
        &self.entries[i * self.cols..(i + 1) * self.cols]
    }

    pub fn is_zero(&self) -> bool {
        self.entries.iter().all(|v| v.is_zero())
    }

    /// `A x`.
    pub fn matvec(&self, x: &[T]) -> Vec<T> {
        debug_assert_eq!(x.len(), self.cols);
        (0..self.rows).map(|i| dot(self.row(i), x)).collect()
    }

    /// `Aᵀ y`.
    pub fn t_matvec(&self, y: &[T]) -> Vec<T> {
        debug_assert_eq!(y.len(), self.rows);
        let mut out = vec![T::zero(); self.cols];
        for (i, &yi) in y.iter().enumerate() {
            if yi.is_zero() {
                continue;
            }
            for (o, &a) in out.iter_mut().zip(self.row(i)) {
                *o = *o + a * yi;
            }
        }
        out
    }

    /// Gram matrix `AᵀA` (cols × cols).
    pub fn gram(&self) -> DenseMatrix<T> {
        let n = self.cols;
        let mut g = vec![T::zero(); n * n];
        for i in 0..self.rows {
            let r = self.row(i);
            for p in 0..n {
                let rp = r[p];
                if rp.is_zero() {
                    continue;
                }
                for q in p..n {
                    g[p * n + q] = g[p * n + q] + rp * r[q];
                }
            }
        }
        for p in 0..n {
            for q in 0..p {
                g[p * n + q] = g[q * n + p];
            }
        }
        DenseMatrix {
            rows: n,
            cols: n,
            entries: g,
        }
    }

    /// Adds `shift` to the diagonal of a square matrix.
    pub fn shifted(&self, shift: T) -> DenseMatrix<T> {
        let mut out = self.clone();
        for i in 0..self.rows.min(self.cols) {
            out.entries[i * self.cols + i] = out.entries[i * self.cols + i] + shift;
        }
        out
    }

    /// Comma separated, one row per line, 17 significant digits.
    pub fn to_csv(&self) -> String {
        let mut s = String::new();
        for i in 0..self.rows {
            let line: Vec<String> = self.row(i).iter().map(|v| fmt_f64(*v)).collect();
            s.push_str(&line.join(","));
            s.push('\n');
        }
        s
    }
}

/// Formats a scalar with 17 significant digits (round-trips an `f64`).
pub fn fmt_f64<T: Scalar>(v: T) -> String {
    format!("{:.16e}", crate::scalar::wide(v))
}

#[inline]
pub fn dot<T: Scalar>(a: &[T], b: &[T]) -> T {
    a.iter().zip(b).fold(T::zero(), |acc, (&x, &y)| acc + x * y)
}

#[inline]
pub fn norm<T: Scalar>(a: &[T]) -> T {
    dot(a, a).sqrt()
}

pub fn sub<T: Scalar>(a: &[T], b: &[T]) -> Vec<T> {
    a.iter().zip(b).map(|(&x, &y)| x - y).collect()
}

pub fn add<T: Scalar>(a: &[T], b: &[T]) -> Vec<T> {
    a.iter().zip(b).map(|(&x, &y)| x + y).collect()
}

/// `a + s·b`
pub fn axpy<T: Scalar>(a: &[T], s: T, b: &[T]) -> Vec<T> {
    a.iter().zip(b).map(|(&x, &y)| x + s * y).collect()
}

pub fn scale<T: Scalar>(a: &[T], s: T) -> Vec<T> {
    a.iter().map(|&x| x * s).collect()
}

pub fn distance<T: Scalar>(a: &[T], b: &[T]) -> T {
    a.iter()
        .zip(b)
        .fold(T::zero(), |acc, (&x, &y)| acc + (x - y) * (x - y))
        .sqrt()
}

fn to_nalgebra<T: Scalar>(a: &DenseMatrix<T>) -> nalgebra::DMatrix<f64> {
    nalgebra::DMatrix::from_row_iterator(a.rows(), a.cols(), a.entries().iter().map(|&v| wide(v)))
}

/// Cholesky factor of a symmetric positive definite matrix, held in `f64`.
#[derive(Debug, Clone)]
pub struct Cholesky<T> {
    factor: nalgebra::Cholesky<f64, nalgebra::Dyn>,
    _scalar: std::marker::PhantomData<T>,
}

impl<T: Scalar> Cholesky<T> {
    /// Returns `None` when the matrix is not (numerically) positive definite.
    pub fn factor(a: &DenseMatrix<T>) -> Option<Self> {
        if a.rows() != a.cols() {
            return None;
        }
        Some(Self {
            factor: to_nalgebra(a).cholesky()?,
            _scalar: std::marker::PhantomData,
        })
    }

    pub fn solve(&self, b: &[T]) -> Vec<T> {
        let rhs = nalgebra::DVector::from_iterator(b.len(), b.iter().map(|&v| wide(v)));
        self.factor.solve(&rhs).iter().map(|&v| lit(v)).collect()
    }
}

/// Eigenvalues of a symmetric matrix, ascending.
pub fn symmetric_eigenvalues<T: Scalar>(a: &DenseMatrix<T>) -> Vec<T> {
    assert_eq!(a.rows(), a.cols(), "symmetric_eigenvalues needs a square matrix");
    let mut eig: Vec<f64> = to_nalgebra(a).symmetric_eigenvalues().iter().copied().collect();
    eig.sort_by(|a, b| a.partial_cmp(b).expect("finite eigenvalues"));
    eig.into_iter().map(lit).collect()
}
