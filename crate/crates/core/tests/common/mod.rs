//! Deterministic quadrature oracles shared by integration tests.
#![allow(dead_code)]

use critfield::covariance_core::{
    conditional_covariance_oracle, cov_partials, reference_direction, RadialModel,
};
use gauss_quad::GaussLegendre;
use nalgebra::{DMatrix, DVector, Vector3};
use statrs::function::erf::erfc;
use std::f64::consts::{PI, SQRT_2};

/// Gauss–Legendre nodes and weights mapped to `[a, b]`.
pub fn legendre(n: usize, a: f64, b: f64) -> Vec<(f64, f64)> {
    GaussLegendre::new(n)
        .unwrap()
        .into_node_weight_pairs()
        .into_iter()
        .map(|(x, w)| (0.5 * ((b - a) * x + b + a), 0.5 * (b - a) * w))
        .collect()
}

/// Composite Gauss–Legendre rule on `[a, b]` with `panels` panels.
pub fn composite(panels: usize, nodes: usize, a: f64, b: f64) -> Vec<(f64, f64)> {
    let h = (b - a) / panels as f64;
    (0..panels)
        .flat_map(|i| legendre(nodes, a + i as f64 * h, a + (i + 1) as f64 * h))
        .collect()
}

pub fn upper_tail(x: f64) -> f64 {
    0.5 * erfc(x / SQRT_2)
}

fn phi(x: f64) -> f64 {
    (-0.5 * x * x).exp() / (2.0 * PI).sqrt()
}

/// `P(X > 0, Y > 0)` for a bivariate normal with means `m`, standard
/// deviations `s` and correlation `rho`, as a one-dimensional integral over
/// the standardised first coordinate.
pub fn positive_orthant(m: [f64; 2], s: [f64; 2], rho: f64, rule: &[(f64, f64)]) -> f64 {
    let h = -m[0] / s[0];
    let k = -m[1] / s[1];
    let c = (1.0 - rho * rho).sqrt();
    // `rule` is a unit-interval rule stretched over [h, h + 12].
    rule.iter()
        .map(|&(t, w)| {
            let z = h + 12.0 * t;
            12.0 * w * phi(z) * upper_tail((k - rho * z) / c)
        })
        .sum()
}

/// `∫ |det H| φ(H; 0, cov) g(H) dH` over negative-definite 2×2 matrices
/// `H = [[−p, b], [b, −q]]` (vech order `(H₁₁, H₁₂, H₂₂)`), using
/// `p = v²`, `q = w²`, `b = s·vw`, which makes the Jacobian polynomial.
pub fn negative_definite_integral(cov: &DMatrix<f64>, g: impl Fn(&[f64; 3]) -> f64 + Sync) -> f64 {
    let inv = cov.clone().try_inverse().unwrap();
    let norm = 1.0 / ((2.0 * PI).powi(3) * cov.determinant()).sqrt();
    let vmax = 6.0 * cov[(0, 0)].max(cov[(2, 2)]).sqrt().sqrt() + 2.0;
    let vs = composite(4, 24, 0.0, vmax);
    let ss = legendre(48, -1.0, 1.0);
    let mut total = 0.0;
    for &(v, wv) in &vs {
        for &(w, ww) in &vs {
            for &(s, wsn) in &ss {
                let h = [-v * v, s * v * w, -w * w];
                let x = Vector3::new(h[0], h[1], h[2]);
                let q = x.dot(&(inv.fixed_view::<3, 3>(0, 0) * x));
                let jac = 4.0 * v.powi(4) * w.powi(4) * (1.0 - s * s);
                total += wv * ww * wsn * jac * norm * (-0.5 * q).exp() * g(&h);
            }
        }
    }
    total
}

/// Gradient covariance `V₂₂` of `(∇X(t), ∇X(0))`, straight from the
/// covariance function.
pub fn gradient_pair_covariance(model: &RadialModel, t: &[f64]) -> DMatrix<f64> {
    let n = model.n_dim;
    let zero = vec![0.0; n];
    let mut v = DMatrix::zeros(2 * n, 2 * n);
    for i in 0..n {
        for j in 0..n {
            let same = -cov_partials(model, &zero, &[i, j]).unwrap();
            let cross = -cov_partials(model, t, &[i, j]).unwrap();
            v[(i, j)] = same;
            v[(n + i, n + j)] = same;
            v[(i, n + j)] = cross;
            v[(n + i, j)] = cross;
        }
    }
    v
}

/// Quadrature value of `f_{u,N}(r e_N)` for `N = 2` (local maxima at the
/// second point), built from the Schur-complement oracle.
pub fn maxima_density_quadrature(model: &RadialModel, r: f64, u_thr: f64) -> f64 {
    assert_eq!(model.n_dim, 2);
    let u0 = reference_direction(2);
    let sigma = conditional_covariance_oracle(model, r, &u0).unwrap().sigma;
    let s_hh = sigma.view((0, 0), (3, 3)).into_owned();
    let s_ch = sigma.view((3, 0), (2, 3)).into_owned();
    let s_cc = sigma.view((3, 3), (2, 2)).into_owned();
    let gain = &s_ch * s_hh.clone().try_inverse().unwrap();
    let cond = &s_cc - &gain * s_ch.transpose();
    let sd = [cond[(0, 0)].sqrt(), cond[(1, 1)].sqrt()];
    let rho = cond[(0, 1)] / (sd[0] * sd[1]);
    let rule = composite(24, 12, 0.0, 1.0);
    let integral = negative_definite_integral(&s_hh, |h| {
        let m = &gain * DVector::from_column_slice(h);
        positive_orthant([m[0] - u_thr, m[1] - u_thr], sd, rho, &rule)
    });
    let t: Vec<f64> = u0.iter().map(|v| r * v).collect();
    let v22 = gradient_pair_covariance(model, &t);
    let p_t = 1.0 / ((2.0 * PI).powi(4) * v22.determinant()).sqrt();
    let p0 = (-4.0 * PI * model.d1(0.0)).powi(-1);
    integral * p_t / (p0 * upper_tail(u_thr))
}

/// Expected number of local maxima per unit area of a 2-D field (no
/// threshold), by quadrature over the Hessian law.
pub fn maxima_per_area_quadrature(model: &RadialModel) -> f64 {
    assert_eq!(model.n_dim, 2);
    let zero = [0.0, 0.0];
    let idx = [(0, 0), (0, 1), (1, 1)];
    let mut cov = DMatrix::zeros(3, 3);
    for (a, &(i, j)) in idx.iter().enumerate() {
        for (b, &(k, l)) in idx.iter().enumerate() {
            cov[(a, b)] = cov_partials(model, &zero, &[i, j, k, l]).unwrap();
        }
    }
    let gradient_density = 1.0 / (-4.0 * PI * model.d1(0.0));
    gradient_density * negative_definite_integral(&cov, |_| 1.0)
}
