//! Small dense linear-algebra helpers on top of `nalgebra`.

use std::cmp::Ordering;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// Relative asymmetry `max|S − Sᵀ| / max(1, max|S|)`.
pub fn asymmetry(s: &DMatrix<f64>) -> f64 {
    let scale = s.amax().max(1.0);
    let mut worst: f64 = 0.0;
    for i in 0..s.nrows() {
        for j in 0..i {
            worst = worst.max((s[(i, j)] - s[(j, i)]).abs());
        }
    }
    worst / scale
}

fn require_symmetric(s: &DMatrix<f64>) -> Result<()> {
    if !s.is_square() {
        return Err(Error::Domain(format!(
            "expected a square matrix, got {}x{}",
            s.nrows(),
            s.ncols()
        )));
    }
    let asym = asymmetry(s);
    if asym > 1e-10 {
        return Err(Error::Domain(format!(
            "matrix is not symmetric (relative asymmetry {asym:e})"
        )));
    }
    Ok(())
}

/// Flip `v` so that its first coordinate with magnitude above `1e−12` is
/// positive.
pub fn sign_canonicalize(v: &mut [f64]) {
    if let Some(first) = v.iter().find(|x| x.abs() > 1e-12) {
        if *first < 0.0 {
            v.iter_mut().for_each(|x| *x = -*x);
        }
    }
}

/// Lexicographic comparison with a small tolerance on each coordinate.
fn lex_cmp(a: &[f64], b: &[f64]) -> Ordering {
    for (x, y) in a.iter().zip(b) {
        if (x - y).abs() > 1e-12 {
            return x.partial_cmp(y).unwrap_or(Ordering::Equal);
        }
    }
    Ordering::Equal
}

/// Basis of the column space of `q` (orthonormal columns) that depends only
/// on the subspace: greedy pivoting on the projected unit vectors `Π e_k`,
/// taking the largest residual first (smallest `k` on ties).
fn canonical_subspace_basis(q: &DMatrix<f64>) -> DMatrix<f64> {
    let (n, m) = q.shape();
    let mut residual = q * q.transpose();
    let mut out = DMatrix::<f64>::zeros(n, m);
    for c in 0..m {
        let mut best = 0;
        let mut best_norm = -1.0;
        for k in 0..n {
            let norm = residual.column(k).norm();
            if norm > best_norm * (1.0 + 1e-9) {
                best = k;
                best_norm = norm;
            }
        }
        let v = residual.column(best) / best_norm;
        let proj = v.transpose() * &residual;
        residual -= &v * proj;
        out.set_column(c, &v);
    }
    out
}

/// Eigen-decomposition `S = P diag(Λ) Pᵀ` with `Λ` descending.
///
/// Eigenvalues closer than `1e−9·Σ|λ|` form a cluster. Each cluster's
/// eigenvectors are replaced by a basis that depends only on the eigenspace,
/// every column is sign-canonicalised (first non-negligible entry positive)
/// and columns inside a cluster are ordered lexicographically, largest first.
/// For the identity this yields `P = I`.
pub fn ordered_eigendecomposition(s: &DMatrix<f64>) -> Result<(DVector<f64>, DMatrix<f64>)> {
    require_symmetric(s)?;
    let n = s.nrows();
    let sym = (s + s.transpose()) * 0.5;
    let eig = sym.symmetric_eigen();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| {
        eig.eigenvalues[b]
            .partial_cmp(&eig.eigenvalues[a])
            .unwrap_or(Ordering::Equal)
    });
    let values = DVector::from_iterator(n, order.iter().map(|&i| eig.eigenvalues[i]));
    let mut vectors = DMatrix::from_fn(n, n, |r, c| eig.eigenvectors[(r, order[c])]);

    let tol = 1e-9
        * values
            .iter()
            .map(|v| v.abs())
            .sum::<f64>()
            .max(f64::MIN_POSITIVE);
    let mut start = 0;
    while start < n {
        let mut end = start + 1;
        while end < n && values[end - 1] - values[end] < tol {
            end += 1;
        }
        let q = vectors.columns(start, end - start).into_owned();
        let basis = if end - start > 1 {
            canonical_subspace_basis(&q)
        } else {
            q
        };
        let mut cols: Vec<Vec<f64>> = basis
            .column_iter()
            .map(|c| {
                let mut v: Vec<f64> = c.iter().copied().collect();
                sign_canonicalize(&mut v);
                v
            })
            .collect();
        cols.sort_by(|a, b| lex_cmp(b, a));
        for (k, c) in cols.iter().enumerate() {
            vectors.set_column(start + k, &DVector::from_column_slice(c));
        }
        start = end;
    }
    Ok((values, vectors))
}

/// Symmetric positive semi-definite square root. Eigenvalues down to
/// `−1e−10·trace` are treated as zero; anything more negative is an error.
pub fn psd_sqrt(s: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    require_symmetric(s)?;
    let sym = (s + s.transpose()) * 0.5;
    let trace = sym.trace().abs().max(f64::MIN_POSITIVE);
    let eig = sym.symmetric_eigen();
    let min = eig.eigenvalues.min();
    if min < -1e-10 * trace {
        return Err(Error::SingularConditioning(format!(
            "matrix is not positive semi-definite (smallest eigenvalue {min:e})"
        )));
    }
    let roots = eig.eigenvalues.map(|v| v.max(0.0).sqrt());
    let q = &eig.eigenvectors;
    Ok(q * DMatrix::from_diagonal(&roots) * q.transpose())
}

/// Assignment maximising `Σ_j w[(π(j), j)]` over permutations `π`; returns
/// `π` as a vector (column `j` is matched with row `π[j]`).
pub fn max_weight_assignment(w: &DMatrix<f64>) -> Vec<usize> {
    let n = w.nrows();
    assert_eq!(n, w.ncols(), "assignment needs a square weight matrix");
    // Hungarian algorithm (shortest augmenting paths) on cost = −w.
    let cost = |i: usize, j: usize| -w[(i - 1, j - 1)];
    let inf = f64::INFINITY;
    let mut u = vec![0.0; n + 1];
    let mut v = vec![0.0; n + 1];
    let mut p = vec![0usize; n + 1];
    let mut way = vec![0usize; n + 1];
    for i in 1..=n {
        p[0] = i;
        let mut j0 = 0;
        let mut minv = vec![inf; n + 1];
        let mut used = vec![false; n + 1];
        loop {
            used[j0] = true;
            let i0 = p[j0];
            let mut delta = inf;
            let mut j1 = 0;
            for j in 1..=n {
                if !used[j] {
                    let cur = cost(i0, j) - u[i0] - v[j];
                    if cur < minv[j] {
                        minv[j] = cur;
                        way[j] = j0;
                    }
                    if minv[j] < delta {
                        delta = minv[j];
                        j1 = j;
                    }
                }
            }
            for j in 0..=n {
                if used[j] {
                    u[p[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
            if p[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            p[j0] = p[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }
    let mut assignment = vec![0; n];
    for j in 1..=n {
        assignment[j - 1] = p[j] - 1;
    }
    assignment
}

/// Least-squares solution of `X β ≈ y` via SVD.
pub fn least_squares(design: &DMatrix<f64>, y: &DVector<f64>) -> DVector<f64> {
    let svd = design.clone().svd(true, true);
    svd.solve(y, 1e-14).expect("SVD with both factors computed")
}

/// Nearest matrix with orthonormal columns (polar factor `UVᵀ`).
pub fn nearest_orthonormal(m: &DMatrix<f64>) -> DMatrix<f64> {
    let svd = m.clone().svd(true, true);
    let u = svd.u.expect("U requested");
    let vt = svd.v_t.expect("Vᵀ requested");
    u * vt
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identity_decomposes_to_identity() {
        let (l, p) = ordered_eigendecomposition(&DMatrix::identity(5, 5)).unwrap();
        assert!(l.iter().all(|&v| (v - 1.0).abs() < 1e-15));
        assert!((p - DMatrix::<f64>::identity(5, 5)).amax() < 1e-12);
    }

    #[test]
    fn descending_order_and_reconstruction() {
        let s = DMatrix::from_row_slice(3, 3, &[2.0, 1.0, 0.0, 1.0, 2.0, 0.0, 0.0, 0.0, 5.0]);
        let (l, p) = ordered_eigendecomposition(&s).unwrap();
        assert!(
            (l[0] - 5.0).abs() < 1e-12 && (l[1] - 3.0).abs() < 1e-12 && (l[2] - 1.0).abs() < 1e-12
        );
        let back = &p * DMatrix::from_diagonal(&l) * p.transpose();
        assert!((back - s).amax() < 1e-12);
    }

    #[test]
    fn rejects_nonsymmetric() {
        let s = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 0.0, 1.0]);
        assert!(ordered_eigendecomposition(&s).is_err());
    }

    #[test]
    fn assignment_finds_the_permutation() {
        let w = DMatrix::from_row_slice(3, 3, &[0.1, 0.9, 0.0, 0.0, 0.2, 0.95, 0.99, 0.0, 0.1]);
        assert_eq!(max_weight_assignment(&w), vec![2, 0, 1]);
    }

    #[test]
    fn psd_sqrt_squares_back() {
        let s = DMatrix::from_row_slice(2, 2, &[4.0, 2.0, 2.0, 2.0]);
        let r = psd_sqrt(&s).unwrap();
        assert!((&r * &r - s).amax() < 1e-12);
        assert!(psd_sqrt(&DMatrix::from_row_slice(1, 1, &[-1.0])).is_err());
    }
}
