//! The limit polynomial `h₀(y) = lim_{r→0} r^{−1} det Matri(A(r)y)`.

use std::collections::BTreeMap;

use nalgebra::{DMatrix, DVector};

use super::eigenpath::{eigenpath, SpectralExpansion, DEFAULT_R_GRID};
use crate::covariance_core::{matriculate, RadialModel};
use crate::error::{Error, Result};

/// `h₀(y) = Σ_{i ≥ L−N} y_i K_i(y_1, …, y_{L−N−1})` (1-based), stored as
/// monomial coefficients keyed by the sorted 0-based index multiset, together
/// with the factors needed for direct evaluation.
#[derive(Debug, Clone)]
pub struct LimitPolynomial {
    pub n_dim: usize,
    pub l: usize,
    pub rank0: usize,
    pub coefficients: BTreeMap<Vec<usize>, f64>,
    /// `A₀` (its null columns are zero).
    a0: DMatrix<f64>,
    /// The null-column part of `A₁`, i.e. `λ_{i,2}^{1/2} P₀^{(i)}`.
    a1_null: DMatrix<f64>,
}

impl LimitPolynomial {
    pub fn from_expansion(exp: &SpectralExpansion) -> Self {
        let (n, l, rank0) = (exp.n_dim, exp.l, exp.rank0);
        let mut a1_null = exp.a1.clone();
        for c in 0..rank0 {
            a1_null.column_mut(c).fill(0.0);
        }
        let a0 = exp.a0.clone();

        let mut coefficients = BTreeMap::new();
        let mut rank_tuple = vec![0usize; n.saturating_sub(1)];
        loop {
            for slot in 0..n {
                for b in rank0..l {
                    let mut v = Vec::with_capacity(n);
                    let mut k = 0;
                    for pos in 0..n {
                        if pos == slot {
                            v.push(b);
                        } else {
                            v.push(rank_tuple[k]);
                            k += 1;
                        }
                    }
                    let det = mixed_bv_determinant(&a0, &a1_null, &v, slot);
                    if det != 0.0 {
                        let mut key = v.clone();
                        key.sort_unstable();
                        *coefficients.entry(key).or_insert(0.0) += det;
                    }
                }
            }
            // advance the odometer over rank indices
            let mut pos = 0;
            loop {
                if pos == rank_tuple.len() {
                    return Self {
                        n_dim: n,
                        l,
                        rank0,
                        coefficients,
                        a0,
                        a1_null,
                    };
                }
                rank_tuple[pos] += 1;
                if rank_tuple[pos] < rank0 {
                    break;
                }
                rank_tuple[pos] = 0;
                pos += 1;
            }
        }
    }

    /// Direct evaluation: `Σ_i det` of `Matri(A₀y)` with row `i` replaced by
    /// row `i` of `Matri(A₁y)` (null columns of `A₁` only).
    pub fn evaluate(&self, y: &[f64]) -> Result<f64> {
        if y.len() != self.l {
            return Err(Error::Domain(format!(
                "y must have length L = {}, got {}",
                self.l,
                y.len()
            )));
        }
        let yv = DVector::from_column_slice(y);
        let m0 = matri(&(&self.a0 * &yv), self.n_dim);
        let m1 = matri(&(&self.a1_null * &yv), self.n_dim);
        let mut total = 0.0;
        for i in 0..self.n_dim {
            let mut m = m0.clone();
            m.set_row(i, &m1.row(i));
            total += m.determinant();
        }
        Ok(total)
    }

    /// Evaluation through the stored monomial coefficients.
    pub fn evaluate_monomials(&self, y: &[f64]) -> f64 {
        self.coefficients
            .iter()
            .map(|(key, c)| c * key.iter().map(|&k| y[k]).product::<f64>())
            .sum()
    }

    /// `y ↦ (y₁, …, y_{L−N−1}, −y_{L−N}, …, −y_L)`.
    pub fn flip(&self, y: &[f64]) -> Vec<f64> {
        y.iter()
            .enumerate()
            .map(|(k, &v)| if k >= self.rank0 { -v } else { v })
            .collect()
    }

    pub fn to_json(&self) -> serde_json::Value {
        let terms: Vec<serde_json::Value> = self
            .coefficients
            .iter()
            .filter(|(_, c)| c.abs() > 1e-14)
            .map(|(k, c)| {
                serde_json::json!({
                    "monomial": k.iter().map(|i| i + 1).collect::<Vec<_>>(),
                    "coefficient": c,
                })
            })
            .collect();
        serde_json::json!({
            "N": self.n_dim,
            "L": self.l,
            "rank0": self.rank0,
            "terms": terms,
        })
    }
}

fn matri(v: &DVector<f64>, n: usize) -> DMatrix<f64> {
    matriculate(v.as_slice(), n).expect("vector has L entries")
}

/// `det B^v` where row `slot` is read from `A₁` and all other rows from `A₀`.
fn mixed_bv_determinant(a0: &DMatrix<f64>, a1: &DMatrix<f64>, v: &[usize], slot: usize) -> f64 {
    let n = v.len();
    let b = DMatrix::from_fn(n, n, |i, j| {
        let src = if i == slot { a1 } else { a0 };
        src[(crate::covariance_core::sym_index(i, j), v[i])]
    });
    b.determinant()
}

/// `h₀` along `u` from the default eigenpath grid.
pub fn limit_polynomial(model: &RadialModel, u: &[f64]) -> Result<LimitPolynomial> {
    let exp = eigenpath(model, u, &DEFAULT_R_GRID)?;
    Ok(LimitPolynomial::from_expansion(&exp))
}

/// `h_r(y) = r^{−1} det Matri(A(r)y)` with `A(r) = P(r)Λ(r)^{1/2}` taken
/// from the continuous eigenpath (the default grid plus `r`).
pub fn h_r(model: &RadialModel, u: &[f64], r: f64, y: &[f64]) -> Result<f64> {
    let mut grid: Vec<f64> = DEFAULT_R_GRID.to_vec();
    if !grid.iter().any(|&g| (g - r).abs() <= 1e-12 * r) {
        grid.push(r);
        grid.sort_by(|a, b| b.partial_cmp(a).unwrap());
    }
    let exp = eigenpath(model, u, &grid)?;
    h_r_from(&exp, r, y)
}

/// `h_r` for a grid point of an existing expansion.
pub fn h_r_from(exp: &SpectralExpansion, r: f64, y: &[f64]) -> Result<f64> {
    if y.len() != exp.l {
        return Err(Error::Domain(format!(
            "y must have length L = {}, got {}",
            exp.l,
            y.len()
        )));
    }
    let a = exp.point(r)?.factor();
    let m = matri(&(a * DVector::from_column_slice(y)), exp.n_dim);
    Ok(m.determinant() / r)
}
