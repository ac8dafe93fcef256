//! The small-`r` expansion `Σ(ru) = Σ₀ + Σ₂r² + o(r²)`.

use nalgebra::DMatrix;

use super::conditional::{matrix_rows, validate_direction};
use super::model::RadialModel;
use super::symvec::{cond_len, sym_index, sym_len};
use crate::error::Result;

/// The coefficients `Σ₀` and `Σ₂` along a direction `u`.
#[derive(Debug, Clone, PartialEq)]
pub struct SigmaExpansion {
    pub n_dim: usize,
    pub direction: Vec<f64>,
    pub sigma0: DMatrix<f64>,
    pub sigma2: DMatrix<f64>,
}

impl SigmaExpansion {
    /// `Σ₀ + Σ₂r²`.
    pub fn evaluate(&self, r: f64) -> DMatrix<f64> {
        &self.sigma0 + &self.sigma2 * (r * r)
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::json!({
            "N": self.n_dim,
            "L": cond_len(self.n_dim),
            "u": self.direction,
            "sigma0": matrix_rows(&self.sigma0),
            "sigma2": matrix_rows(&self.sigma2),
        })
    }
}

/// Closed-form `Σ₀` and `Σ₂` for direction `u`.
pub fn sigma_expansion(model: &RadialModel, u: &[f64]) -> Result<SigmaExpansion> {
    validate_direction(model, u)?;
    let n = model.n_dim;
    let h = sym_len(n);
    let l = cond_len(n);
    let (r1, r2, r3) = (model.d1(0.0), model.d2(0.0), model.d3(0.0));
    let alpha = r2 * r2 / r1;
    let beta = r3;
    let alpha_p = r2;
    let beta_p = r1 * r3 / r2;
    let d = |i: usize, j: usize| if i == j { 1.0 } else { 0.0 };

    let mut pairs = vec![(0, 0); h];
    for j in 0..n {
        for i in 0..=j {
            pairs[sym_index(i, j)] = (i, j);
        }
    }

    let mut s0 = DMatrix::<f64>::zeros(l, l);
    let mut s2 = DMatrix::<f64>::zeros(l, l);
    for (a, &(i1, j1)) in pairs.iter().enumerate() {
        for (b, &(i2, j2)) in pairs.iter().enumerate() {
            let quartic = u[i1] * u[j1] * u[i2] * u[j2];
            let mixed = d(j1, j2) * u[i1] * u[i2]
                + d(i1, j2) * u[j1] * u[i2]
                + d(i2, j1) * u[i1] * u[j2]
                + d(i1, i2) * u[j1] * u[j2];
            s0[(a, b)] =
                4.0 * r2 * (d(i2, j1) * d(i1, j2) + d(i1, i2) * d(j1, j2) - mixed + 2.0 * quartic)
                    + 8.0 / 3.0 * r2 * (d(i1, j1) - u[i1] * u[j1]) * (d(i2, j2) - u[i2] * u[j2]);
            s2[(a, b)] = (2.0 * alpha - 14.0 / 9.0 * beta) * d(i1, j1) * d(i2, j2)
                + (4.0 * alpha - 52.0 / 9.0 * beta)
                    * (d(i2, j2) * u[i1] * u[j1] + d(i1, j1) * u[i2] * u[j2])
                + (2.0 * alpha - 6.0 * beta) * mixed
                + 64.0 / 9.0 * beta * quartic;
        }
        let side0 = 4.0 / 3.0 * r1 * (d(i1, j1) - u[i1] * u[j1]);
        let side2 = (alpha_p / 3.0 - beta_p / 9.0) * d(i1, j1)
            + (2.0 / 3.0 * alpha_p - 14.0 / 9.0 * beta_p) * u[i1] * u[j1];
        for c in [l - 2, l - 1] {
            s0[(a, c)] = side0;
            s0[(c, a)] = side0;
            s2[(a, c)] = side2;
            s2[(c, a)] = side2;
        }
    }
    let corner0 = 1.0 - r1 * r1 / (3.0 * r2);
    let corner2 = -r1 / 6.0 + 5.0 / 18.0 * r1 * r1 * r3 / (r2 * r2);
    for a in [l - 2, l - 1] {
        for b in [l - 2, l - 1] {
            s0[(a, b)] = corner0;
            s2[(a, b)] = corner2;
        }
    }
    Ok(SigmaExpansion {
        n_dim: n,
        direction: u.to_vec(),
        sigma0: s0,
        sigma2: s2,
    })
}

/// Row order that turns `Σ₀` along `u₀ = e_N` into its block form: the
/// diagonal Hessian entries `X_kk` (`k < N`), then `X(t)`, `X(0)`, the
/// off-diagonal entries `X_ij` (`i < j < N`), and finally the last column
/// `X_iN`. Entries are 0-based positions in the original ordering.
pub fn sigma0_permutation(n_dim: usize) -> Vec<usize> {
    let l = cond_len(n_dim);
    let mut order: Vec<usize> = (0..n_dim - 1).map(|k| sym_index(k, k)).collect();
    order.extend([l - 2, l - 1]);
    for j in 0..n_dim - 1 {
        for i in 0..j {
            order.push(sym_index(i, j));
        }
    }
    order.extend((0..n_dim).map(|i| sym_index(i, n_dim - 1)));
    order
}
