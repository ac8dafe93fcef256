//! Half-vectorisation of symmetric matrices.
//!
//! Coordinates are ordered by `τ(i, j) = i + j(j − 1)/2` for `1 ≤ i ≤ j ≤ N`
//! (1-based), i.e. column by column through the upper triangle. Internally
//! everything is 0-based: `sym_index(i, j) = i + j(j + 1)/2` for `i ≤ j`.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Number of free entries of a symmetric `n × n` matrix.
pub fn sym_len(n_dim: usize) -> usize {
    n_dim * (n_dim + 1) / 2
}

/// Dimension `L = N(N+1)/2 + 2` of the conditional vector
/// `(∇²X(t), X(t), X(0))`.
pub fn cond_len(n_dim: usize) -> usize {
    sym_len(n_dim) + 2
}

/// The 1-based index map `τ(i, j) = i + j(j−1)/2`, `1 ≤ i ≤ j ≤ N`.
pub fn tau_index(i: usize, j: usize, n_dim: usize) -> Result<usize> {
    if i < 1 || i > j || j > n_dim {
        return Err(Error::Domain(format!(
            "tau_index requires 1 <= i <= j <= N, got i={i}, j={j}, N={n_dim}"
        )));
    }
    Ok(i + j * (j - 1) / 2)
}

/// 0-based position of entry `(i, j)` in the half-vectorisation; the
/// arguments may be given in either order.
#[inline]
pub fn sym_index(i: usize, j: usize) -> usize {
    let (i, j) = if i <= j { (i, j) } else { (j, i) };
    i + j * (j + 1) / 2
}

/// Rebuild the symmetric matrix from the first `N(N+1)/2` coordinates of `a`;
/// any further coordinates are ignored.
pub fn matriculate(a: &[f64], n_dim: usize) -> Result<DMatrix<f64>> {
    let len = sym_len(n_dim);
    if a.len() < len {
        return Err(Error::Domain(format!(
            "matriculation of order {n_dim} needs {len} coordinates, got {}",
            a.len()
        )));
    }
    Ok(DMatrix::from_fn(n_dim, n_dim, |i, j| a[sym_index(i, j)]))
}

/// Half-vectorise a square matrix, reading its upper triangle.
pub fn vectorize_sym(m: &DMatrix<f64>) -> Result<Vec<f64>> {
    if !m.is_square() {
        return Err(Error::Domain(format!(
            "vectorize_sym needs a square matrix, got {}x{}",
            m.nrows(),
            m.ncols()
        )));
    }
    let n = m.nrows();
    let mut out = vec![0.0; sym_len(n)];
    for j in 0..n {
        for i in 0..=j {
            out[sym_index(i, j)] = m[(i, j)];
        }
    }
    Ok(out)
}

/// A half-vectorised symmetric matrix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SymVec {
    pub n_dim: usize,
    pub data: Vec<f64>,
}

impl SymVec {
    pub fn new(n_dim: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != sym_len(n_dim) {
            return Err(Error::Domain(format!(
                "SymVec of order {n_dim} needs {} entries, got {}",
                sym_len(n_dim),
                data.len()
            )));
        }
        Ok(Self { n_dim, data })
    }

    pub fn from_matrix(m: &DMatrix<f64>) -> Result<Self> {
        Ok(Self {
            n_dim: m.nrows(),
            data: vectorize_sym(m)?,
        })
    }

    pub fn to_matrix(&self) -> DMatrix<f64> {
        DMatrix::from_fn(self.n_dim, self.n_dim, |i, j| self.data[sym_index(i, j)])
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[sym_index(i, j)]
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tau_small_cases() {
        assert_eq!(tau_index(1, 1, 3).unwrap(), 1);
        assert_eq!(tau_index(2, 3, 3).unwrap(), 5);
        assert!(tau_index(3, 2, 3).is_err());
        assert!(tau_index(0, 1, 3).is_err());
        assert!(tau_index(1, 4, 3).is_err());
    }

    #[test]
    fn tau_is_a_bijection_onto_the_triangle() {
        let n = 5;
        let mut seen = vec![false; sym_len(n)];
        for j in 1..=n {
            for i in 1..=j {
                let k = tau_index(i, j, n).unwrap();
                assert!(!seen[k - 1]);
                seen[k - 1] = true;
                assert_eq!(sym_index(i - 1, j - 1) + 1, k);
                assert_eq!(sym_index(j - 1, i - 1) + 1, k);
            }
        }
        assert!(seen.iter().all(|&s| s));
    }

    #[test]
    fn matriculate_two_by_two() {
        let m = matriculate(&[1.0, 2.0, 3.0, 99.0], 2).unwrap();
        assert_eq!(m, DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 2.0, 3.0]));
        assert!(matriculate(&[1.0, 2.0], 2).is_err());
        assert_eq!(matriculate(&[0.0; 6], 3).unwrap(), DMatrix::zeros(3, 3));
    }
}
