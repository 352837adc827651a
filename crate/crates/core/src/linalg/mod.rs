//! Small dense linear algebra for the 5×5 problems in this crate.

#![allow(clippy::needless_range_loop)]

mod eigen;

pub use eigen::{char_poly, eigenvalues, Spectrum};

use std::ops::{Index, IndexMut, Mul};

use serde::{Deserialize, Serialize};

/// A 5×5 real matrix, row-major. Serializes as five rows of five numbers.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Matrix5(pub [[f64; 5]; 5]);

impl Matrix5 {
    pub const fn zeros() -> Self {
        Matrix5([[0.0; 5]; 5])
    }

    pub fn identity() -> Self {
        let mut m = Self::zeros();
        for i in 0..5 {
            m.0[i][i] = 1.0;
        }
        m
    }

    pub fn from_diagonal(d: [f64; 5]) -> Self {
        let mut m = Self::zeros();
        for i in 0..5 {
            m.0[i][i] = d[i];
        }
        m
    }

    pub fn transpose(&self) -> Self {
        let mut t = Self::zeros();
        for i in 0..5 {
            for j in 0..5 {
                t.0[j][i] = self.0[i][j];
            }
        }
        t
    }

    pub fn trace(&self) -> f64 {
        (0..5).map(|i| self.0[i][i]).sum()
    }

    /// Frobenius norm.
    pub fn norm(&self) -> f64 {
        self.0.iter().flatten().map(|x| x * x).sum::<f64>().sqrt()
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().flatten().all(|x| x.is_finite())
    }

    pub fn mul_vec(&self, x: &[f64; 5]) -> [f64; 5] {
        let mut y = [0.0; 5];
        for i in 0..5 {
            y[i] = (0..5).map(|j| self.0[i][j] * x[j]).sum();
        }
        y
    }

    /// Solves `self · x = b` by LU with partial pivoting.
    /// Returns `None` if a pivot vanishes.
    pub fn solve(&self, b: &[f64; 5]) -> Option<[f64; 5]> {
        let mut a = self.0;
        let mut x = *b;
        for k in 0..5 {
            let piv = (k..5)
                .max_by(|&i, &j| a[i][k].abs().total_cmp(&a[j][k].abs()))
                .unwrap();
            if a[piv][k] == 0.0 || !a[piv][k].is_finite() {
                return None;
            }
            a.swap(k, piv);
            x.swap(k, piv);
            for i in k + 1..5 {
                let f = a[i][k] / a[k][k];
                for j in k..5 {
                    a[i][j] -= f * a[k][j];
                }
                x[i] -= f * x[k];
            }
        }
        for k in (0..5).rev() {
            let s: f64 = (k + 1..5).map(|j| a[k][j] * x[j]).sum();
            x[k] = (x[k] - s) / a[k][k];
        }
        x.iter().all(|v| v.is_finite()).then_some(x)
    }
}

impl Index<(usize, usize)> for Matrix5 {
    type Output = f64;
    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        &self.0[i][j]
    }
}

impl IndexMut<(usize, usize)> for Matrix5 {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut f64 {
        &mut self.0[i][j]
    }
}

impl Mul for Matrix5 {
    type Output = Matrix5;
    fn mul(self, rhs: Matrix5) -> Matrix5 {
        let mut c = Matrix5::zeros();
        for i in 0..5 {
            for k in 0..5 {
                let a = self.0[i][k];
                for j in 0..5 {
                    c.0[i][j] += a * rhs.0[k][j];
                }
            }
        }
        c
    }
}

/// Numerical rank by Householder QR with column pivoting.
///
/// A diagonal entry of R counts as zero when it is at most `rel_tol` times the
/// largest one.
pub fn rank(m: &Matrix5, rel_tol: f64) -> usize {
    let diag = pivoted_qr_diagonal(m);
    let scale = diag[0];
    if scale == 0.0 {
        return 0;
    }
    diag.iter().filter(|d| **d > rel_tol * scale).count()
}

fn pivoted_qr_diagonal(m: &Matrix5) -> [f64; 5] {
    let mut a = m.0;
    let mut out = [0.0; 5];
    for k in 0..5 {
        // Column with the largest remaining norm.
        let col_norm = |a: &[[f64; 5]; 5], j: usize| (k..5).map(|i| a[i][j] * a[i][j]).sum::<f64>();
        let p = (k..5)
            .max_by(|&x, &y| col_norm(&a, x).total_cmp(&col_norm(&a, y)))
            .unwrap();
        for row in a.iter_mut() {
            row.swap(k, p);
        }
        let norm = col_norm(&a, k).sqrt();
        out[k] = norm;
        if norm == 0.0 {
            continue;
        }
        let alpha = if a[k][k] > 0.0 { -norm } else { norm };
        let mut v = [0.0; 5];
        for i in k..5 {
            v[i] = a[i][k];
        }
        v[k] -= alpha;
        let vn: f64 = (k..5).map(|i| v[i] * v[i]).sum();
        if vn == 0.0 {
            continue;
        }
        for j in k..5 {
            let dot: f64 = (k..5).map(|i| v[i] * a[i][j]).sum();
            let f = 2.0 * dot / vn;
            for i in k..5 {
                a[i][j] -= f * v[i];
            }
        }
    }
    out
}

/// Least-squares solution of an overdetermined `rows × cols` system
/// (`rows ≥ cols`) by Householder QR. Returns `None` on rank deficiency.
pub fn least_squares(a: &[Vec<f64>], b: &[f64]) -> Option<Vec<f64>> {
    let rows = a.len();
    let cols = a.first()?.len();
    if rows < cols || b.len() != rows {
        return None;
    }
    let mut a: Vec<Vec<f64>> = a.to_vec();
    let mut b = b.to_vec();
    for k in 0..cols {
        let norm: f64 = (k..rows).map(|i| a[i][k] * a[i][k]).sum::<f64>().sqrt();
        if norm == 0.0 {
            return None;
        }
        let alpha = if a[k][k] > 0.0 { -norm } else { norm };
        let mut v = vec![0.0; rows];
        for i in k..rows {
            v[i] = a[i][k];
        }
        v[k] -= alpha;
        let vn: f64 = (k..rows).map(|i| v[i] * v[i]).sum();
        if vn == 0.0 {
            continue;
        }
        for j in k..cols {
            let dot: f64 = (k..rows).map(|i| v[i] * a[i][j]).sum();
            let f = 2.0 * dot / vn;
            for i in k..rows {
                a[i][j] -= f * v[i];
            }
        }
        let dot: f64 = (k..rows).map(|i| v[i] * b[i]).sum();
        let f = 2.0 * dot / vn;
        for i in k..rows {
            b[i] -= f * v[i];
        }
    }
    let mut x = vec![0.0; cols];
    for k in (0..cols).rev() {
        let s: f64 = (k + 1..cols).map(|j| a[k][j] * x[j]).sum();
        if a[k][k] == 0.0 {
            return None;
        }
        x[k] = (b[k] - s) / a[k][k];
    }
    x.iter().all(|v| v.is_finite()).then_some(x)
}

/// Null vector of a rank-4 matrix with component `pivot` fixed to `value`.
///
/// Moves the pivot column to the right-hand side and solves the remaining
/// 5×4 system in the least-squares sense.
pub fn null_vector(m: &Matrix5, pivot: usize, value: f64) -> Option<[f64; 5]> {
    let others: Vec<usize> = (0..5).filter(|&j| j != pivot).collect();
    let a: Vec<Vec<f64>> = (0..5)
        .map(|i| others.iter().map(|&j| m.0[i][j]).collect())
        .collect();
    let b: Vec<f64> = (0..5).map(|i| -m.0[i][pivot] * value).collect();
    let y = least_squares(&a, &b)?;
    let mut w = [0.0; 5];
    w[pivot] = value;
    for (k, &j) in others.iter().enumerate() {
        w[j] = y[k];
    }
    Some(w)
}

pub fn max_abs(x: &[f64]) -> f64 {
    x.iter().fold(0.0, |m, v| m.max(v.abs()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn solve_recovers_known_solution() {
        let m = Matrix5([
            [4.0, 1.0, 0.0, 0.0, 2.0],
            [1.0, 5.0, 1.0, 0.0, 0.0],
            [0.0, 1.0, 6.0, 1.0, 0.0],
            [3.0, 0.0, 1.0, 7.0, 1.0],
            [0.0, 2.0, 0.0, 1.0, 8.0],
        ]);
        let x = [1.0, -2.0, 3.0, -4.0, 5.0];
        let b = m.mul_vec(&x);
        let got = m.solve(&b).unwrap();
        for (g, w) in got.iter().zip(x) {
            assert!((g - w).abs() < 1e-13);
        }
        assert!(Matrix5::zeros().solve(&b).is_none());
    }

    #[test]
    fn rank_and_null_vector() {
        // Row 2 = row 0 + row 1, so rank 4.
        let mut m = Matrix5([
            [1.0, 2.0, 0.0, 1.0, 0.0],
            [0.0, 1.0, 3.0, 0.0, 1.0],
            [1.0, 3.0, 3.0, 1.0, 1.0],
            [2.0, 0.0, 1.0, 1.0, 0.0],
            [0.0, 0.0, 1.0, 2.0, 5.0],
        ]);
        assert_eq!(rank(&m, 1e-12), 4);
        let w = null_vector(&m, 4, 1.0).unwrap();
        assert_eq!(w[4], 1.0);
        assert!(max_abs(&m.mul_vec(&w)) < 1e-12);
        m.0[2][2] += 1.0;
        assert_eq!(rank(&m, 1e-12), 5);
        assert_eq!(rank(&Matrix5::zeros(), 1e-12), 0);
    }

    #[test]
    fn product_and_transpose() {
        let mut a = Matrix5::identity();
        a.0[0][4] = 2.0;
        let b = a * a.transpose();
        assert_eq!(b.0[0][0], 5.0);
        assert_eq!(b.0[0][4], 2.0);
        assert_eq!(b.trace(), 9.0);
    }
}
