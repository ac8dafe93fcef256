//! The matrix `H(u)` and the determinants `det B^v(r)`.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::eigenpath::{eigenpath, SpectralExpansion};
use crate::covariance_core::{cond_len, sym_index, RadialModel};
use crate::error::{Error, Result};

/// `H(u) ∈ R^{N×L}` with `h_{k,τ(i,j)} = δ_{jk}u_i + (1 − δ_{jk})δ_{ik}u_j`
/// and zero last two columns, so that `H(u)a = Matri(a)u`.
pub fn h_matrix(u: &[f64]) -> DMatrix<f64> {
    let n = u.len();
    let mut h = DMatrix::zeros(n, cond_len(n));
    for j in 0..n {
        for i in 0..=j {
            let col = sym_index(i, j);
            for k in 0..n {
                h[(k, col)] = if j == k {
                    u[i]
                } else if i == k {
                    u[j]
                } else {
                    0.0
                };
            }
        }
    }
    h
}

/// `det B^v` with `b_{ij} = a_{τ(i,j), v_i}`: row `i` of `B^v` is row `i` of
/// `Matri(A^{(v_i)})`. Indices in `v` are 0-based columns of `A`.
pub fn bv_determinant(a: &DMatrix<f64>, v: &[usize]) -> Result<f64> {
    let n = v.len();
    if a.nrows() < n * (n + 1) / 2 || v.iter().any(|&c| c >= a.ncols()) {
        return Err(Error::Domain(format!(
            "index vector {v:?} incompatible with a {}x{} factor",
            a.nrows(),
            a.ncols()
        )));
    }
    let b = DMatrix::from_fn(n, n, |i, j| a[(sym_index(i, j), v[i])]);
    Ok(b.determinant())
}

/// All permutations of `0..n` (Heap's algorithm).
pub(crate) fn permutations(n: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut p: Vec<usize> = (0..n).collect();
    let mut c = vec![0; n];
    out.push(p.clone());
    let mut i = 0;
    while i < n {
        if c[i] < i {
            if i % 2 == 0 {
                p.swap(0, i);
            } else {
                p.swap(c[i], i);
            }
            out.push(p.clone());
            c[i] += 1;
            i = 0;
        } else {
            c[i] = 0;
            i += 1;
        }
    }
    out
}

/// `Σ_σ det B^{σ(v)}` over all permutations of the positions of `v`.
pub fn bv_symmetrized(a: &DMatrix<f64>, v: &[usize]) -> Result<f64> {
    let mut total = 0.0;
    for perm in permutations(v.len()) {
        let pv: Vec<usize> = perm.iter().map(|&k| v[k]).collect();
        total += bv_determinant(a, &pv)?;
    }
    Ok(total)
}

/// Asymptotic order of `Σ_σ det B^{σ(v)}(r)` as `r → 0`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ScalingClass {
    /// `o(r)`: log-log slope at least 1.5, or numerically zero.
    LittleO,
    /// `Θ(r)`: slope within 0.5 of 1.
    Theta,
    /// Neither (slope below 0.5).
    Unresolved,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalingReport {
    pub v: Vec<usize>,
    pub r: Vec<f64>,
    pub values: Vec<f64>,
    pub slope: f64,
    pub class: ScalingClass,
}

/// Radii at which the scaling is probed.
pub const SCALING_RADII: [f64; 3] = [1e-2, 1e-3, 1e-4];

/// Absolute size below which a symmetrised determinant counts as zero.
const ZERO_LEVEL: f64 = 1e-12;

/// Classify `v` using the eigenpath factors `A(r) = P(r)Λ(r)^{1/2}`.
pub fn classify_scaling(expansion: &SpectralExpansion, v: &[usize]) -> Result<ScalingReport> {
    let mut values = Vec::with_capacity(SCALING_RADII.len());
    for &r in &SCALING_RADII {
        let a = expansion.point(r)?.factor();
        values.push(bv_symmetrized(&a, v)?);
    }
    let xs: Vec<f64> = SCALING_RADII.iter().map(|r| r.ln()).collect();
    let (slope, class) = if values.iter().all(|s| s.abs() < ZERO_LEVEL) {
        (f64::INFINITY, ScalingClass::LittleO)
    } else {
        let ys: Vec<f64> = values
            .iter()
            .map(|s| s.abs().max(f64::MIN_POSITIVE).ln())
            .collect();
        let mx = xs.iter().sum::<f64>() / xs.len() as f64;
        let my = ys.iter().sum::<f64>() / ys.len() as f64;
        let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
        let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
        let slope = sxy / sxx;
        let class = if slope >= 1.5 {
            ScalingClass::LittleO
        } else if (slope - 1.0).abs() < 0.5 {
            ScalingClass::Theta
        } else {
            ScalingClass::Unresolved
        };
        (slope, class)
    };
    Ok(ScalingReport {
        v: v.to_vec(),
        r: SCALING_RADII.to_vec(),
        values,
        slope,
        class,
    })
}

/// Grid that contains [`SCALING_RADII`] and is fine enough for tracking.
pub const SCALING_GRID: [f64; 7] = [1e-2, 5e-3, 2e-3, 1e-3, 5e-4, 2e-4, 1e-4];

/// `scaling_class(model, u, v)`: builds the eigenpath on [`SCALING_GRID`].
pub fn scaling_class(model: &RadialModel, u: &[f64], v: &[usize]) -> Result<ScalingReport> {
    let expansion = eigenpath(model, u, &SCALING_GRID)?;
    classify_scaling(&expansion, v)
}
