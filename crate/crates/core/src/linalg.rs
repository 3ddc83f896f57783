//! Minimal dense linear algebra: row-major matrices, Gaussian elimination,
//! and a power-iteration eigenvalue estimate. Sizes here are small (1D basis
//! counts), so no external solver is warranted.

use crate::error::{Error, Result};
use crate::real::Real;

/// Dense row-major matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct DMat<R> {
    rows: usize,
    cols: usize,
    data: Vec<R>,
}

impl<R: Real> DMat<R> {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![R::zero(); rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = R::one();
        }
        m
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> R) -> Self {
        let mut m = Self::zeros(rows, cols);
        for i in 0..rows {
            for j in 0..cols {
                m[(i, j)] = f(i, j);
            }
        }
        m
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn row(&self, i: usize) -> &[R] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn row_mut(&mut self, i: usize) -> &mut [R] {
        &mut self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn data(&self) -> &[R] {
        &self.data
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self[(j, i)])
    }

    pub fn max_abs(&self) -> R {
        self.data.iter().fold(R::zero(), |acc, &v| acc.max(v.abs()))
    }

    pub fn max_abs_diff(&self, other: &Self) -> R {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        self.data
            .iter()
            .zip(&other.data)
            .fold(R::zero(), |acc, (&a, &b)| acc.max((a - b).abs()))
    }

    pub fn add_scaled(&mut self, other: &Self, c: R) {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        for (a, &b) in self.data.iter_mut().zip(&other.data) {
            *a += c * b;
        }
    }

    pub fn scale(&mut self, c: R) {
        for a in &mut self.data {
            *a *= c;
        }
    }

    /// y = x^T A for a row vector x (the source/target convention used by the
    /// transform matrices: entry (i, j) maps source i to target j).
    pub fn apply_left(&self, x: &[R]) -> Vec<R> {
        assert_eq!(x.len(), self.rows);
        let mut y = vec![R::zero(); self.cols];
        for (i, &xi) in x.iter().enumerate() {
            if xi == R::zero() {
                continue;
            }
            for (j, &a) in self.row(i).iter().enumerate() {
                y[j] += xi * a;
            }
        }
        y
    }

    pub fn matmul(&self, other: &Self) -> Self {
        assert_eq!(self.cols, other.rows);
        let mut out = Self::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self[(i, k)];
                if a == R::zero() {
                    continue;
                }
                for j in 0..other.cols {
                    out[(i, j)] += a * other[(k, j)];
                }
            }
        }
        out
    }
}

impl<R: Real> std::ops::Index<(usize, usize)> for DMat<R> {
    type Output = R;
    fn index(&self, (i, j): (usize, usize)) -> &R {
        &self.data[i * self.cols + j]
    }
}

impl<R: Real> std::ops::IndexMut<(usize, usize)> for DMat<R> {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut R {
        &mut self.data[i * self.cols + j]
    }
}

/// Solves `A X = B` with partial pivoting; `B` holds one right-hand side per
/// column and is overwritten with the solution.
pub fn solve_multi<R: Real>(a: &DMat<R>, b: &DMat<R>) -> Result<DMat<R>> {
    let n = a.rows();
    if a.cols() != n || b.rows() != n {
        return Err(Error::ShapeMismatch(format!(
            "solve: {}x{} matrix with {}x{} rhs",
            a.rows(),
            a.cols(),
            b.rows(),
            b.cols()
        )));
    }
    let mut a = a.clone();
    let mut b = b.clone();
    for col in 0..n {
        let pivot_row = (col..n)
            .max_by(|&i, &j| {
                a[(i, col)]
                    .abs()
                    .partial_cmp(&a[(j, col)].abs())
                    .unwrap_or(std::cmp::Ordering::Equal)
            })
            .unwrap();
        if a[(pivot_row, col)].abs() <= R::epsilon() * R::of(16.0) {
            return Err(Error::SingularSystem);
        }
        if pivot_row != col {
            for j in 0..n {
                let tmp = a[(col, j)];
                a[(col, j)] = a[(pivot_row, j)];
                a[(pivot_row, j)] = tmp;
            }
            for j in 0..b.cols() {
                let tmp = b[(col, j)];
                b[(col, j)] = b[(pivot_row, j)];
                b[(pivot_row, j)] = tmp;
            }
        }
        let inv = R::one() / a[(col, col)];
        for i in (col + 1)..n {
            let f = a[(i, col)] * inv;
            if f == R::zero() {
                continue;
            }
            a[(i, col)] = R::zero();
            for j in (col + 1)..n {
                let v = a[(col, j)];
                a[(i, j)] = a[(i, j)] - f * v;
            }
            for j in 0..b.cols() {
                let v = b[(col, j)];
                b[(i, j)] = b[(i, j)] - f * v;
            }
        }
    }
    for col in (0..n).rev() {
        let inv = R::one() / a[(col, col)];
        for j in 0..b.cols() {
            let mut acc = b[(col, j)];
            for k in (col + 1)..n {
                acc = acc - a[(col, k)] * b[(k, j)];
            }
            b[(col, j)] = acc * inv;
        }
    }
    Ok(b)
}

pub fn solve<R: Real>(a: &DMat<R>, rhs: &[R]) -> Result<Vec<R>> {
    let b = DMat::from_fn(rhs.len(), 1, |i, _| rhs[i]);
    let x = solve_multi(a, &b)?;
    Ok((0..rhs.len()).map(|i| x[(i, 0)]).collect())
}

pub fn invert<R: Real>(a: &DMat<R>) -> Result<DMat<R>> {
    solve_multi(a, &DMat::identity(a.rows()))
}

/// Largest (signed) eigenvalue of a symmetric matrix by shifted power
/// iteration. Deterministic start vector.
pub fn symmetric_max_eigenvalue<R: Real>(a: &DMat<R>, iters: usize) -> R {
    let n = a.rows();
    assert_eq!(n, a.cols());
    let radius = power_radius(a, iters);
    // Shift so the top of the spectrum dominates in magnitude.
    let shift = radius + R::one();
    let mut shifted = a.clone();
    for i in 0..n {
        shifted[(i, i)] += shift;
    }
    power_radius(&shifted, iters) - shift
}

fn power_radius<R: Real>(a: &DMat<R>, iters: usize) -> R {
    let n = a.rows();
    let mut v: Vec<R> = (0..n)
        .map(|i| R::one() + R::of_usize(i % 7) * R::of(0.1))
        .collect();
    let mut lambda = R::zero();
    for _ in 0..iters {
        let w = a.apply_left(&v);
        let norm = w.iter().map(|&x| x * x).sum::<R>().sqrt();
        if norm == R::zero() {
            return R::zero();
        }
        lambda = norm;
        v = w.into_iter().map(|x| x / norm).collect();
    }
    lambda
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn solves_small_system() {
        let a = DMat::from_fn(3, 3, |i, j| if i == j { 2.0 } else { 0.5 });
        let rhs = vec![1.0, 2.0, 3.0];
        let x = solve(&a, &rhs).unwrap();
        for i in 0..3 {
            let got: f64 = (0..3).map(|j| a[(i, j)] * x[j]).sum();
            assert!((got - rhs[i]).abs() < 1e-12);
        }
    }

    #[test]
    fn inverse_roundtrip() {
        let a = DMat::from_fn(4, 4, |i, j| {
            1.0 / (1.0 + i as f64 + j as f64) + if i == j { 1.0 } else { 0.0 }
        });
        let inv = invert(&a).unwrap();
        let prod = a.matmul(&inv);
        assert!(prod.max_abs_diff(&DMat::identity(4)) < 1e-10);
    }

    #[test]
    fn singular_matrix_rejected() {
        let a = DMat::from_fn(2, 2, |_, j| if j == 0 { 1.0 } else { 2.0 });
        assert!(matches!(solve(&a, &[1.0, 1.0]), Err(Error::SingularSystem)));
    }

    #[test]
    fn max_eigenvalue_of_diagonal() {
        let mut a = DMat::<f64>::zeros(3, 3);
        a[(0, 0)] = -5.0;
        a[(1, 1)] = -1.0;
        a[(2, 2)] = -0.25;
        let top = symmetric_max_eigenvalue(&a, 200);
        assert!((top + 0.25).abs() < 1e-8, "got {top}");
    }
}
