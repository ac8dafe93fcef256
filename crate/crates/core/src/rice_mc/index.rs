//! Hessian index classification.

use crate::covariance_core::{matriculate, sym_len};
use nalgebra::DMatrix;
use serde::Serialize;

/// Number of negative eigenvalues of a symmetric matrix, with a degeneracy
/// flag for eigenvalues within `1e−10·‖M‖_F` of zero.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct HessianIndex {
    /// Eigenvalues below `−tol`.
    pub index: usize,
    /// Some eigenvalue satisfies `|λ| ≤ tol`.
    pub degenerate: bool,
    /// `det M`.
    pub det: f64,
}

const RELATIVE_TOL: f64 = 1e-10;

/// Classify a symmetric matrix by the signs of its eigenvalues.
pub fn hessian_index(m: &DMatrix<f64>) -> HessianIndex {
    assert_eq!(m.nrows(), m.ncols(), "Hessian must be square");
    if m.nrows() == 2 {
        return classify_2x2(m[(0, 0)], m[(0, 1)], m[(1, 1)]);
    }
    let tol = RELATIVE_TOL * m.norm();
    let eig = m.clone().symmetric_eigen();
    let index = eig.eigenvalues.iter().filter(|&&v| v < -tol).count();
    let degenerate = eig.eigenvalues.iter().any(|v| v.abs() <= tol);
    HessianIndex {
        index,
        degenerate,
        det: eig.eigenvalues.product(),
    }
}

/// Classify `Matri_N(h)` for a half-vectorised Hessian `h`.
pub fn classify_vech(h: &[f64], n_dim: usize) -> HessianIndex {
    debug_assert_eq!(h.len(), sym_len(n_dim));
    if n_dim == 2 {
        return classify_2x2(h[0], h[1], h[2]);
    }
    hessian_index(&matriculate(h, n_dim).expect("length checked by the caller"))
}

fn classify_2x2(p: f64, q: f64, s: f64) -> HessianIndex {
    let tol = RELATIVE_TOL * (p * p + 2.0 * q * q + s * s).sqrt();
    let det = p.mul_add(s, -q * q);
    let mean = 0.5 * (p + s);
    let radius = (0.5 * (p - s)).hypot(q);
    // The eigenvalue of larger magnitude is formed without cancellation; the
    // other one follows from the determinant.
    let big = if mean >= 0.0 {
        mean + radius
    } else {
        mean - radius
    };
    let small = if big == 0.0 { 0.0 } else { det / big };
    let index = usize::from(big < -tol) + usize::from(small < -tol);
    let degenerate = big.abs() <= tol || small.abs() <= tol;
    HessianIndex {
        index,
        degenerate,
        det,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn simple_cases() {
        let m = -DMatrix::<f64>::identity(3, 3);
        assert_eq!(hessian_index(&m).index, 3);
        let m = DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, -1.0]);
        let c = hessian_index(&m);
        assert_eq!((c.index, c.degenerate), (1, false));
        assert_eq!(c.det, -1.0);
        let m = DMatrix::from_row_slice(2, 2, &[1.0, 1.0, 1.0, 1.0]);
        assert!(hessian_index(&m).degenerate);
        assert_eq!(classify_vech(&[-2.0, 0.5, -1.0], 2).index, 2);
    }
}
