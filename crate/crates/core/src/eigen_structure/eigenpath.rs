//! Continuous eigenpaths of `Σ_u(r)` and their small-`r` coefficients.

use nalgebra::{DMatrix, DVector};

use crate::covariance_core::{
    conditional_covariance, matriculate, sigma_expansion, RadialModel, SigmaExpansion,
};
use crate::error::{Error, Result};
use crate::linalg::{
    least_squares, max_weight_assignment, nearest_orthonormal, ordered_eigendecomposition,
};

/// Grid used when none is given.
pub const DEFAULT_R_GRID: [f64; 6] = [5e-2, 2e-2, 1e-2, 5e-3, 2e-3, 1e-3];

/// Smallest overlap `|⟨p_prev, p_next⟩|` accepted for an isolated eigenvector.
const MIN_OVERLAP: f64 = 0.9;

/// Eigen-decomposition of `Σ_u(r)` at one grid point, columns in path order.
#[derive(Debug, Clone, PartialEq)]
pub struct EigenpathPoint {
    pub r: f64,
    pub lambda: DVector<f64>,
    pub p: DMatrix<f64>,
}

impl EigenpathPoint {
    /// `A(r) = P(r)Λ(r)^{1/2}`, negative round-off eigenvalues clipped to 0.
    pub fn factor(&self) -> DMatrix<f64> {
        let roots = self.lambda.map(|v| v.max(0.0).sqrt());
        &self.p * DMatrix::from_diagonal(&roots)
    }
}

/// Eigenpaths and the coefficients of
/// `Λ(r) = Λ₀ + Λ₁r + Λ₂r² + …`, `P(r) = P₀ + P₁r + …`.
#[derive(Debug, Clone)]
pub struct SpectralExpansion {
    pub n_dim: usize,
    pub l: usize,
    pub direction: Vec<f64>,
    /// `rank(Σ₀) = L − N − 1`.
    pub rank0: usize,
    pub points: Vec<EigenpathPoint>,
    /// `Λ₀`, with the null block set to exactly zero.
    pub lambda0: DVector<f64>,
    /// Fitted `Λ₀` before zeroing the null block (diagnostic).
    pub lambda0_fit: DVector<f64>,
    /// Unconstrained linear coefficient `Λ₁` (should vanish).
    pub lambda1: DVector<f64>,
    pub lambda2: DVector<f64>,
    pub p0: DMatrix<f64>,
    pub p1: DMatrix<f64>,
    pub a0: DMatrix<f64>,
    pub a1: DMatrix<f64>,
    pub sigma: SigmaExpansion,
}

impl SpectralExpansion {
    /// The grid point whose `r` is closest to the request.
    pub fn point(&self, r: f64) -> Result<&EigenpathPoint> {
        self.points
            .iter()
            .find(|p| (p.r - r).abs() <= 1e-12 * r.abs().max(1e-300))
            .ok_or_else(|| Error::Domain(format!("r = {r} is not on the eigenpath grid")))
    }

    /// `‖H(u)A(r)^{(i)}‖`-style diagnostics need the Hessian block of a
    /// column; exposed for convenience.
    pub fn matri_of_column(a: &DMatrix<f64>, col: usize, n_dim: usize) -> DMatrix<f64> {
        let c: Vec<f64> = a.column(col).iter().copied().collect();
        matriculate(&c, n_dim).expect("column has L ≥ N(N+1)/2 entries")
    }

    pub fn to_json(&self) -> serde_json::Value {
        let rows = |m: &DMatrix<f64>| -> Vec<Vec<f64>> {
            (0..m.nrows())
                .map(|i| m.row(i).iter().copied().collect())
                .collect()
        };
        let vec = |v: &DVector<f64>| -> Vec<f64> { v.iter().copied().collect() };
        serde_json::json!({
            "N": self.n_dim,
            "L": self.l,
            "u": self.direction,
            "rank0": self.rank0,
            "r_grid": self.points.iter().map(|p| p.r).collect::<Vec<_>>(),
            "lambda_path": self.points.iter().map(|p| vec(&p.lambda)).collect::<Vec<_>>(),
            "lambda0": vec(&self.lambda0),
            "lambda1": vec(&self.lambda1),
            "lambda2": vec(&self.lambda2),
            "P0": rows(&self.p0),
            "P1": rows(&self.p1),
            "A0": rows(&self.a0),
            "A1": rows(&self.a1),
        })
    }
}

/// Clusters of (numerically) equal eigenvalues as index ranges.
fn clusters(values: &DVector<f64>) -> Vec<std::ops::Range<usize>> {
    let n = values.len();
    let tol = 1e-9
        * values
            .iter()
            .map(|v| v.abs())
            .sum::<f64>()
            .max(f64::MIN_POSITIVE);
    let mut out = Vec::new();
    let mut start = 0;
    while start < n {
        let mut end = start + 1;
        while end < n && (values[end - 1] - values[end]).abs() < tol {
            end += 1;
        }
        out.push(start..end);
        start = end;
    }
    out
}

/// Reorder and rotate the fresh decomposition `(lambda, p)` to continue the
/// path `prev`.
fn continue_path(
    prev: &DMatrix<f64>,
    lambda: &DVector<f64>,
    p: &DMatrix<f64>,
    sigma: &DMatrix<f64>,
    r: f64,
) -> Result<(DVector<f64>, DMatrix<f64>)> {
    let l = p.ncols();
    let overlap = (prev.transpose() * p).map(f64::abs);
    // assignment[j] = path index of fresh column j
    let assignment = max_weight_assignment(&overlap);
    let mut matched = DMatrix::<f64>::zeros(l, l);
    for (j, &i) in assignment.iter().enumerate() {
        matched.set_column(i, &p.column(j));
    }
    let mut in_cluster = vec![false; l];
    for range in clusters(lambda) {
        if range.len() < 2 {
            continue;
        }
        let paths: Vec<usize> = range.clone().map(|j| assignment[j]).collect();
        for &i in &paths {
            in_cluster[i] = true;
        }
        // Procrustes: rotate the cluster basis onto the previous vectors.
        let old = DMatrix::from_fn(l, paths.len(), |a, k| prev[(a, paths[k])]);
        let new = DMatrix::from_fn(l, paths.len(), |a, k| matched[(a, paths[k])]);
        let m = old.transpose() * &new;
        let svd = m.svd(true, true);
        let rot =
            svd.v_t.expect("Vᵀ requested").transpose() * svd.u.expect("U requested").transpose();
        let rotated = new * rot;
        for (k, &i) in paths.iter().enumerate() {
            matched.set_column(i, &rotated.column(k));
        }
    }
    let mut values = DVector::<f64>::zeros(l);
    for i in 0..l {
        let dot = prev.column(i).dot(&matched.column(i));
        if !in_cluster[i] && dot.abs() < MIN_OVERLAP {
            return Err(Error::Path {
                r,
                detail: format!(
                    "eigenvector {i} overlaps its predecessor by only {:.3}",
                    dot.abs()
                ),
            });
        }
        if dot < 0.0 {
            let flipped = -matched.column(i);
            matched.set_column(i, &flipped);
        }
        let col = matched.column(i);
        values[i] = col.dot(&(sigma * col));
    }
    Ok((values, matched))
}

/// Track ordered eigenpaths of `Σ_u(r)` along a decreasing grid and
/// extrapolate the expansion coefficients.
///
/// `Λ` is fitted per path with `{1, r, r², r⁴, r⁶}` (the `r` coefficient is
/// reported as `Λ₁`) and again with the even basis `{1, r², r⁴, r⁶}` to
/// obtain `Λ₀`, `Λ₂`; `P` is fitted entrywise with `{1, r, r², r⁴}`. `P₀` is
/// re-orthonormalised and `P₁` is projected onto the gauge fixed by
/// `Σ₀P₁^{(i)} = λ_{i,0}P₁^{(i)}` and `P₀^{(i)}ᵀP₁^{(i)} = 0`.
pub fn eigenpath(model: &RadialModel, u: &[f64], r_grid: &[f64]) -> Result<SpectralExpansion> {
    if r_grid.len() < 5 {
        return Err(Error::Domain(format!(
            "eigenpath needs at least 5 grid points, got {}",
            r_grid.len()
        )));
    }
    if r_grid.windows(2).any(|w| !(w[0] > w[1])) || r_grid.iter().any(|&r| !(r > 0.0)) {
        return Err(Error::Domain(
            "r grid must be positive and strictly decreasing".into(),
        ));
    }
    let n = model.n_dim;
    let sigma = sigma_expansion(model, u)?;
    let l = sigma.sigma0.nrows();
    let rank0 = l - n - 1;

    let mut points: Vec<EigenpathPoint> = Vec::with_capacity(r_grid.len());
    for &r in r_grid {
        let s = conditional_covariance(model, r, u)?.sigma;
        let (lambda, p) = ordered_eigendecomposition(&s)?;
        let point = match points.last() {
            None => EigenpathPoint { r, lambda, p },
            Some(prev) => {
                let (lambda, p) = continue_path(&prev.p, &lambda, &p, &s, r)?;
                EigenpathPoint { r, lambda, p }
            }
        };
        points.push(point);
    }

    // Order paths by their value at the smallest r.
    let last = points.last().expect("non-empty grid");
    let mut order: Vec<usize> = (0..l).collect();
    order.sort_by(|&a, &b| last.lambda[b].partial_cmp(&last.lambda[a]).unwrap());
    for pt in &mut points {
        pt.lambda = DVector::from_iterator(l, order.iter().map(|&i| pt.lambda[i]));
        pt.p = DMatrix::from_fn(l, l, |a, c| pt.p[(a, order[c])]);
    }

    let k = points.len();
    let design = |powers: &[i32]| {
        DMatrix::from_fn(k, powers.len(), |row, col| points[row].r.powi(powers[col]))
    };
    let full = design(&[0, 1, 2, 4, 6]);
    let even = design(&[0, 2, 4, 6]);
    let pdesign = design(&[0, 1, 2, 4]);

    let mut lambda0_fit = DVector::zeros(l);
    let mut lambda1 = DVector::zeros(l);
    let mut lambda2 = DVector::zeros(l);
    for i in 0..l {
        let y = DVector::from_iterator(k, points.iter().map(|p| p.lambda[i]));
        lambda1[i] = least_squares(&full, &y)[1];
        let c = least_squares(&even, &y);
        lambda0_fit[i] = c[0];
        lambda2[i] = c[1];
    }
    let mut lambda0 = lambda0_fit.clone();
    for i in rank0..l {
        lambda0[i] = 0.0;
    }

    let mut p0 = DMatrix::zeros(l, l);
    let mut p1 = DMatrix::zeros(l, l);
    for a in 0..l {
        for c in 0..l {
            let y = DVector::from_iterator(k, points.iter().map(|p| p.p[(a, c)]));
            let coef = least_squares(&pdesign, &y);
            p0[(a, c)] = coef[0];
            p1[(a, c)] = coef[1];
        }
    }
    let p0 = nearest_orthonormal(&p0);
    let p1 = gauge_fix(&sigma.sigma0, &lambda0, &p0, &p1);

    let a0 = &p0 * DMatrix::from_diagonal(&lambda0.map(|v| v.max(0.0).sqrt()));
    let mut a1 = DMatrix::zeros(l, l);
    for i in 0..l {
        let col = if i < rank0 {
            p1.column(i) * lambda0[i].max(0.0).sqrt()
        } else {
            p0.column(i) * lambda2[i].max(0.0).sqrt()
        };
        a1.set_column(i, &col);
    }

    Ok(SpectralExpansion {
        n_dim: n,
        l,
        direction: u.to_vec(),
        rank0,
        points,
        lambda0,
        lambda0_fit,
        lambda1,
        lambda2,
        p0,
        p1,
        a0,
        a1,
        sigma,
    })
}

/// Project each `P₁^{(i)}` onto the `λ_{i,0}`-eigenspace of `Σ₀` and remove
/// its component along `P₀^{(i)}`.
fn gauge_fix(
    sigma0: &DMatrix<f64>,
    lambda0: &DVector<f64>,
    p0: &DMatrix<f64>,
    p1: &DMatrix<f64>,
) -> DMatrix<f64> {
    let l = p0.ncols();
    let scale = lambda0.amax().max(1.0);
    let (values, vectors) =
        ordered_eigendecomposition(&((sigma0 + sigma0.transpose()) * 0.5)).expect("symmetric");
    let mut out = DMatrix::zeros(l, l);
    for i in 0..l {
        let target = lambda0[i];
        let idx: Vec<usize> = (0..l)
            .filter(|&j| (values[j] - target).abs() < 1e-6 * scale)
            .collect();
        let q = DMatrix::from_fn(l, idx.len(), |a, c| vectors[(a, idx[c])]);
        let mut v = &q * (q.transpose() * p1.column(i));
        let along = p0.column(i).dot(&v);
        v -= p0.column(i) * along;
        out.set_column(i, &v);
    }
    out
}
