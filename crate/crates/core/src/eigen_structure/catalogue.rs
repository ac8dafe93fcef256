//! Closed-form spectrum of `Σ₀` along `u₀`.

use serde::{Deserialize, Serialize};

use crate::covariance_core::{cond_len, RadialModel};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CatalogueEntry {
    pub label: String,
    pub value: f64,
    pub multiplicity: usize,
}

/// The eigenvalues `λ₊, λ₋, 4ρ″(0), 8ρ″(0), 0` of `Σ₀` with their
/// multiplicities `1, 1, (N−1)(N−2)/2, N−2, N+1`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectralCatalogue {
    pub n_dim: usize,
    pub l: usize,
    /// The 2×2 block `W = [[a, b], [c, d]]` whose eigenvalues are `λ±`.
    pub w: [[f64; 2]; 2],
    pub entries: Vec<CatalogueEntry>,
}

impl SpectralCatalogue {
    pub fn lambda_plus(&self) -> f64 {
        self.entries[0].value
    }

    pub fn lambda_minus(&self) -> f64 {
        self.entries[1].value
    }

    /// All eigenvalues with multiplicity, in descending order.
    pub fn sorted_values(&self) -> Vec<f64> {
        let mut v: Vec<f64> = self
            .entries
            .iter()
            .flat_map(|e| std::iter::repeat_n(e.value, e.multiplicity))
            .collect();
        v.sort_by(|a, b| b.partial_cmp(a).unwrap());
        v
    }

    /// Rank of `Σ₀`, i.e. `L − N − 1`.
    pub fn rank(&self) -> usize {
        self.l - self.n_dim - 1
    }
}

/// Evaluate the spectral catalogue of `Σ₀`.
///
/// Fails with [`Error::MultiplicityCollision`] when `λ₋` coincides with
/// `4ρ″(0)` or `8ρ″(0)`; `find_rescaling` provides a scale that avoids it.
pub fn spectrum_sigma0(model: &RadialModel) -> Result<SpectralCatalogue> {
    let n = model.n_dim;
    let nf = n as f64;
    let (r1, r2) = (model.d1(0.0), model.d2(0.0));
    let a = (32.0 + 8.0 * (nf - 2.0)) * r2 / 3.0;
    let b = 8.0 * r1 / 3.0;
    let c = 4.0 * (nf - 1.0) * r1 / 3.0;
    let d = 2.0 * (1.0 - r1 * r1 / (3.0 * r2));
    let disc = ((a - d).powi(2) + 4.0 * b * c).sqrt();
    let lambda_plus = 0.5 * (a + d + disc);
    // λ₋ = (ad − bc)/λ₊ avoids cancellation.
    let lambda_minus = (a * d - b * c) / lambda_plus;
    let four = 4.0 * r2;
    let eight = 8.0 * r2;
    let tol = 1e-9 * lambda_plus.abs();
    for fixed in [four, eight] {
        if (lambda_minus - fixed).abs() <= tol {
            return Err(Error::MultiplicityCollision {
                lambda_s: lambda_minus,
                fixed,
            });
        }
    }
    if !(lambda_plus > eight) || !(lambda_minus.abs() > tol) {
        return Err(Error::Domain(format!(
            "unexpected Σ₀ spectrum: λ₊ = {lambda_plus}, λ₋ = {lambda_minus}, 8ρ″(0) = {eight}"
        )));
    }
    let entries = vec![
        CatalogueEntry {
            label: "lambda_plus".into(),
            value: lambda_plus,
            multiplicity: 1,
        },
        CatalogueEntry {
            label: "lambda_minus".into(),
            value: lambda_minus,
            multiplicity: 1,
        },
        CatalogueEntry {
            label: "four_rho2".into(),
            value: four,
            multiplicity: (n - 1) * (n - 2) / 2,
        },
        CatalogueEntry {
            label: "eight_rho2".into(),
            value: eight,
            multiplicity: n - 2,
        },
        CatalogueEntry {
            label: "zero".into(),
            value: 0.0,
            multiplicity: n + 1,
        },
    ];
    Ok(SpectralCatalogue {
        n_dim: n,
        l: cond_len(n),
        w: [[a, b], [c, d]],
        entries,
    })
}
