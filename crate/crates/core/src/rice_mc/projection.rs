//! The point of the threshold region `{Ã_{(L−1)}y > u, Ã_{(L)}y > u}`
//! closest to the origin, and the Hessian it induces.

use super::index::hessian_index;
use crate::covariance_core::{
    conditional_covariance, matriculate, reference_direction, sigma_expansion, sym_len, RadialModel,
};
use crate::error::{Error, Result};
use crate::linalg::psd_sqrt;
use nalgebra::DVector;
use serde::{Deserialize, Serialize};

/// Which candidate attains the minimum distance.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProjectionKind {
    /// Projection onto the hyperplane `Ã_{(L−1)}y = u`.
    FaceX,
    /// Projection onto the hyperplane `Ã_{(L)}y = u`.
    FaceZ,
    /// Projection onto the intersection of both hyperplanes.
    Edge,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProjectionDiag {
    pub r: f64,
    pub u_threshold: f64,
    pub y_hat: Vec<f64>,
    pub which: ProjectionKind,
    /// Eigenvalues of `Matri_N(Ã ŷ)`, ascending.
    pub hessian_eigs: Vec<f64>,
    /// Number of negative eigenvalues.
    pub index: usize,
    /// Candidate distances `(face L−1, face L, edge)`; `None` if undefined.
    pub distances: [Option<f64>; 3],
}

/// Closest point of the closed threshold region to the origin, along
/// `u₀ = e_N`. Valid for `r ≥ 0`; `r = 0` uses the limit `Σ₀`.
pub fn projection_point(model: &RadialModel, r: f64, u_thr: f64) -> Result<ProjectionDiag> {
    if !(u_thr > 0.0 && u_thr.is_finite()) {
        return Err(Error::Domain(format!(
            "threshold must be positive, got {u_thr}"
        )));
    }
    let n = model.n_dim;
    let u0 = reference_direction(n);
    let sigma = if r == 0.0 {
        sigma_expansion(model, &u0)?.sigma0
    } else {
        conditional_covariance(model, r, &u0)?.sigma
    };
    let l = sigma.nrows();
    let a_tilde = psd_sqrt(&sigma)?;
    let (ix, iz) = (l - 2, l - 1);
    let row = |i: usize| a_tilde.row(i).transpose();

    let mut candidates: Vec<(ProjectionKind, DVector<f64>)> = Vec::new();
    for (kind, i) in [(ProjectionKind::FaceX, ix), (ProjectionKind::FaceZ, iz)] {
        let s = sigma[(i, i)];
        if !(s > 0.0) {
            return Err(Error::SingularConditioning(format!("Σ[{i},{i}] = {s:e}")));
        }
        candidates.push((kind, row(i) * (u_thr / s)));
    }
    // The block is nearly singular for small r; writing it through the small
    // differences `a − b` and `c − b` keeps the solve accurate.
    let a = sigma[(ix, ix)];
    let b = sigma[(ix, iz)];
    let c = sigma[(iz, iz)];
    let (d1, d2) = (a - b, c - b);
    let det = b * (d1 + d2) + d1 * d2;
    if det > 1e-14 * a * c {
        let beta_x = u_thr * d2 / det;
        let beta_z = u_thr * d1 / det;
        candidates.push((ProjectionKind::Edge, row(ix) * beta_x + row(iz) * beta_z));
    } else if r > 0.0 {
        return Err(Error::SingularConditioning(format!(
            "threshold block of Σ(r) is singular at r = {r} (determinant {det:e})"
        )));
    }

    let slack = 1e-10 * u_thr;
    let mut distances = [None; 3];
    let mut best: Option<(ProjectionKind, DVector<f64>, f64)> = None;
    for (kind, y) in candidates {
        let norm = y.norm();
        distances[kind as usize] = Some(norm);
        let feasible = a_tilde.row(ix).dot(&y.transpose()) >= u_thr - slack
            && a_tilde.row(iz).dot(&y.transpose()) >= u_thr - slack;
        if feasible && best.as_ref().is_none_or(|(_, _, d)| norm < *d - 1e-12 * d) {
            best = Some((kind, y, norm));
        }
    }
    let (which, y, _) =
        best.ok_or_else(|| Error::SingularConditioning("no feasible projection candidate".into()))?;
    let x = &a_tilde * &y;
    let hess = matriculate(&x.as_slice()[..sym_len(n)], n)?;
    let class = hessian_index(&hess);
    let mut eigs: Vec<f64> = hess.symmetric_eigenvalues().iter().copied().collect();
    eigs.sort_by(f64::total_cmp);
    Ok(ProjectionDiag {
        r,
        u_threshold: u_thr,
        y_hat: y.iter().copied().collect(),
        which,
        hessian_eigs: eigs,
        index: class.index,
        distances,
    })
}
