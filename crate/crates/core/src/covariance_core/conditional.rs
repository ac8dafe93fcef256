//! Closed-form conditional covariance `Σ(t)` of `(∇²X(t), X(t), X(0))`
//! given `∇X(t) = ∇X(0) = 0`.
//!
//! With `V₂₂ = −2ρ′(0) [[I, B], [B, I]]`, `B = k₁I + k₂ttᵀ`, the inverse of
//! `V₂₂` is available in closed form, and the Schur complement reduces to
//! rank-one corrections scaled by `k₄` and `k₅`.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::model::RadialModel;
use super::symvec::{cond_len, sym_index, sym_len};
use crate::error::{Error, Result};

/// The scalar coefficients of the blocked covariance at `x = ‖t‖²`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KCoefficients {
    /// `ρ′(x)/ρ′(0)`
    pub k1: f64,
    /// `2ρ″(x)/ρ′(0)`
    pub k2: f64,
    /// `k₁ + k₂x`, the eigenvalue of `B` along `t`.
    pub k_star: f64,
    /// `k₂(k₁ + k_*)/(1 − k_*²)`
    pub k4: f64,
    /// `k₂(1 + k₁k_*)/(1 − k_*²)`
    pub k5: f64,
    /// `1 − k₁²`, evaluated without cancellation.
    pub one_minus_k1_sq: f64,
    /// `1 − k_*²`, evaluated without cancellation.
    pub one_minus_kstar_sq: f64,
}

impl KCoefficients {
    pub fn new(model: &RadialModel, x: f64) -> Result<Self> {
        let r1_0 = model.d1(0.0);
        let inc = model.d1_increment(x);
        let r2_x = model.d2(x);
        let k1 = model.d1(x) / r1_0;
        let k2 = 2.0 * r2_x / r1_0;
        let k_star = k1 + k2 * x;
        // 1 − k₁ = −(ρ′(x) − ρ′(0))/ρ′(0), and likewise for k_*.
        let one_minus_k1 = -inc / r1_0;
        let one_minus_kstar = -(inc + 2.0 * x * r2_x) / r1_0;
        let one_minus_k1_sq = one_minus_k1 * (2.0 - one_minus_k1);
        let one_minus_kstar_sq = one_minus_kstar * (2.0 - one_minus_kstar);
        if !(one_minus_k1_sq > 0.0) {
            return Err(Error::SingularConditioning(format!(
                "1 − k₁² = {one_minus_k1_sq:e} ≤ 0 at ‖t‖² = {x}"
            )));
        }
        if !(one_minus_kstar_sq > 0.0) {
            return Err(Error::SingularConditioning(format!(
                "1 − k_*² = {one_minus_kstar_sq:e} ≤ 0 at ‖t‖² = {x}"
            )));
        }
        Ok(Self {
            k1,
            k2,
            k_star,
            k4: k2 * (k1 + k_star) / one_minus_kstar_sq,
            k5: k2 * (1.0 + k1 * k_star) / one_minus_kstar_sq,
            one_minus_k1_sq,
            one_minus_kstar_sq,
        })
    }
}

/// Which part of `Σ` an entry belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Block {
    /// Hessian × Hessian.
    Main,
    /// Hessian × `X(t)` or `X(0)`.
    Side,
    /// `X(t)`, `X(0)` × `X(t)`, `X(0)`.
    Corner,
}

/// The `L × L` conditional covariance at `t = r u`.
#[derive(Debug, Clone, PartialEq)]
pub struct CondCov {
    pub n_dim: usize,
    pub l: usize,
    pub sigma: DMatrix<f64>,
    pub t_norm: f64,
    pub direction: Vec<f64>,
    /// Closed-form coefficients; `None` when produced by the oracle.
    pub k: Option<KCoefficients>,
    /// `ln det V₂₂`, the log-determinant of the gradient covariance.
    pub log_det_v22: f64,
}

impl CondCov {
    pub fn block_of(&self, i: usize, j: usize) -> Block {
        let h = self.l - 2;
        match (i < h, j < h) {
            (true, true) => Block::Main,
            (false, false) => Block::Corner,
            _ => Block::Side,
        }
    }

    /// JSON dump: row-major matrix with an `{N, L, r, u}` header.
    pub fn to_json(&self) -> serde_json::Value {
        serde_json::json!({
            "N": self.n_dim,
            "L": self.l,
            "r": self.t_norm,
            "u": self.direction,
            "sigma": matrix_rows(&self.sigma),
        })
    }
}

/// Row-major nested vectors for serialisation.
pub(crate) fn matrix_rows(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    (0..m.nrows())
        .map(|i| m.row(i).iter().copied().collect())
        .collect()
}

/// Check that `u` is a unit vector of the model's dimension.
pub(crate) fn validate_direction(model: &RadialModel, u: &[f64]) -> Result<()> {
    if u.len() != model.n_dim {
        return Err(Error::Domain(format!(
            "direction has dimension {}, model has N = {}",
            u.len(),
            model.n_dim
        )));
    }
    let norm = u.iter().map(|v| v * v).sum::<f64>().sqrt();
    if (norm - 1.0).abs() > 1e-10 {
        return Err(Error::Domain(format!(
            "direction must be a unit vector, ‖u‖ = {norm}"
        )));
    }
    Ok(())
}

pub(crate) fn validate_radius(model: &RadialModel, r: f64) -> Result<()> {
    if !(r > 0.0 && r.is_finite()) {
        return Err(Error::Domain(format!(
            "pair distance r must be positive, got {r}"
        )));
    }
    if r > model.validity_radius * (1.0 + 1e-12) {
        return Err(Error::Domain(format!(
            "r = {r} exceeds the validity radius {}",
            model.validity_radius
        )));
    }
    Ok(())
}

/// `Σ(ru)` from the blocked closed form.
pub fn conditional_covariance(model: &RadialModel, r: f64, u: &[f64]) -> Result<CondCov> {
    validate_direction(model, u)?;
    validate_radius(model, r)?;
    let n = model.n_dim;
    let h = sym_len(n);
    let l = cond_len(n);
    let t: Vec<f64> = u.iter().map(|v| r * v).collect();
    let x = r * r;
    let k = KCoefficients::new(model, x)?;

    let (r1_0, r2_0) = (model.d1(0.0), model.d2(0.0));
    let (r0_x, r1_x, r2_x, r3_x) = (model.rho(x), model.d1(x), model.d2(x), model.d3(x));
    let d = |i: usize, j: usize| if i == j { 1.0 } else { 0.0 };

    // Hessian coordinates as (i, j) pairs in τ order.
    let mut pairs = vec![(0, 0); h];
    for j in 0..n {
        for i in 0..=j {
            pairs[sym_index(i, j)] = (i, j);
        }
    }

    // V₁₁
    let mut sigma = DMatrix::<f64>::zeros(l, l);
    for (a, &(i, j)) in pairs.iter().enumerate() {
        for (b, &(p, q)) in pairs.iter().enumerate() {
            sigma[(a, b)] =
                4.0 * r2_0 * (d(i, j) * d(p, q) + d(i, p) * d(j, q) + d(i, q) * d(j, p));
        }
        sigma[(a, l - 2)] = 2.0 * r1_0 * d(i, j);
        sigma[(a, l - 1)] = 2.0 * r1_x * d(i, j) + 4.0 * t[i] * t[j] * r2_x;
    }
    sigma[(l - 2, l - 2)] = 1.0;
    sigma[(l - 1, l - 1)] = 1.0;
    sigma[(l - 2, l - 1)] = r0_x;

    // F = [G₂₁(t); G₀₁(t)], an (h+1) × N matrix, and h = G₀₁(t).
    let mut f = DMatrix::<f64>::zeros(h + 1, n);
    for (a, &(i, j)) in pairs.iter().enumerate() {
        for m in 0..n {
            f[(a, m)] = 4.0 * (d(i, j) * t[m] + d(i, m) * t[j] + d(j, m) * t[i]) * r2_x
                + 8.0 * t[i] * t[j] * t[m] * r3_x;
        }
    }
    let g01 = DVector::from_iterator(n, t.iter().map(|&tm| 2.0 * tm * r1_x));
    f.row_mut(h).copy_from(&g01.transpose());
    let tv = DVector::from_column_slice(&t);
    let ft = &f * &tv;
    let ht = g01.dot(&tv);

    let scale = 1.0 / (2.0 * r1_0 * k.one_minus_k1_sq);
    let fft = &f * f.transpose();
    for a in 0..=h {
        for b in 0..=h {
            sigma[(a, b)] += scale * (fft[(a, b)] + k.k4 * ft[a] * ft[b]);
        }
        let fh = f.row(a).transpose().dot(&g01);
        sigma[(a, l - 1)] += scale * (k.k1 * fh + k.k5 * ft[a] * ht);
    }
    sigma[(l - 1, l - 1)] += scale * (g01.dot(&g01) + k.k4 * ht * ht);

    // Only the upper triangle of the side and corner parts was assembled.
    for a in 0..l {
        for b in 0..a {
            sigma[(a, b)] = sigma[(b, a)];
        }
    }

    let s = -2.0 * r1_0;
    let log_det_v22 = 2.0 * n as f64 * s.ln()
        + (n as f64 - 1.0) * k.one_minus_k1_sq.ln()
        + k.one_minus_kstar_sq.ln();

    Ok(CondCov {
        n_dim: n,
        l,
        sigma,
        t_norm: r,
        direction: u.to_vec(),
        k: Some(k),
        log_det_v22,
    })
}
