//! Independent brute-force conditional covariance.
//!
//! The joint covariance of `(∇²X(t), X(t), X(0), ∇X(t), ∇X(0))` is built
//! entry by entry from partial derivatives of `R(s) = ρ(‖s‖²)`, obtained by
//! Taylor-mode differentiation: `R(s + ε) = Σ_k ρ^{(k)}(‖s‖²) δ^k / k!` with
//! `δ = 2s·ε + ‖ε‖²`, truncated as a multivariate polynomial in `ε`. The
//! conditioning is a generic Cholesky-based Schur complement; none of the
//! closed-form `k`-coefficients are used.

use std::collections::HashMap;

use nalgebra::DMatrix;

use super::conditional::{validate_direction, validate_radius, CondCov};
use super::model::RadialModel;
use super::symvec::{cond_len, sym_index};
use crate::error::{Error, Result};

/// Truncated multivariate Taylor polynomials in `n` variables.
struct JetSpace {
    n: usize,
    degree: usize,
    monomials: Vec<Vec<u8>>,
    lookup: HashMap<Vec<u8>, usize>,
    /// `(a, b, c)`: monomial `a` times monomial `b` is monomial `c`.
    products: Vec<(usize, usize, usize)>,
}

impl JetSpace {
    fn new(n: usize, degree: usize) -> Self {
        let mut monomials = Vec::new();
        let mut current = vec![0u8; n];
        fn rec(pos: usize, left: usize, cur: &mut Vec<u8>, out: &mut Vec<Vec<u8>>) {
            if pos == cur.len() {
                out.push(cur.clone());
                return;
            }
            for e in 0..=left {
                cur[pos] = e as u8;
                rec(pos + 1, left - e, cur, out);
            }
            cur[pos] = 0;
        }
        rec(0, degree, &mut current, &mut monomials);
        let lookup: HashMap<Vec<u8>, usize> = monomials
            .iter()
            .enumerate()
            .map(|(i, m)| (m.clone(), i))
            .collect();
        let mut products = Vec::new();
        for (a, ma) in monomials.iter().enumerate() {
            for (b, mb) in monomials.iter().enumerate() {
                let prod: Vec<u8> = ma.iter().zip(mb).map(|(x, y)| x + y).collect();
                if let Some(&c) = lookup.get(&prod) {
                    products.push((a, b, c));
                }
            }
        }
        Self {
            n,
            degree,
            monomials,
            lookup,
            products,
        }
    }

    fn zero(&self) -> Vec<f64> {
        vec![0.0; self.monomials.len()]
    }

    fn mul(&self, x: &[f64], y: &[f64]) -> Vec<f64> {
        let mut out = self.zero();
        for &(a, b, c) in &self.products {
            out[c] += x[a] * y[b];
        }
        out
    }

    /// Jet of `R(s + ε)` in `ε`.
    fn radial_jet(&self, model: &RadialModel, s: &[f64]) -> Result<Vec<f64>> {
        let x0: f64 = s.iter().map(|v| v * v).sum();
        // δ = 2 s·ε + ‖ε‖²
        let mut delta = self.zero();
        for i in 0..self.n {
            let mut e = vec![0u8; self.n];
            e[i] = 1;
            if let Some(&k) = self.lookup.get(&e) {
                delta[k] = 2.0 * s[i];
            }
            e[i] = 2;
            if let Some(&k) = self.lookup.get(&e) {
                delta[k] = 1.0;
            }
        }
        let min_degree = if x0 == 0.0 { 2 } else { 1 };
        let kmax = self.degree / min_degree;
        let mut factorial = 1.0;
        let mut coeffs = Vec::with_capacity(kmax + 1);
        for k in 0..=kmax {
            if k > 0 {
                factorial *= k as f64;
            }
            coeffs.push(radial_derivative(model, k, x0)? / factorial);
        }
        // Horner in δ.
        let mut acc = self.zero();
        acc[0] = coeffs[kmax];
        for k in (0..kmax).rev() {
            acc = self.mul(&acc, &delta);
            acc[0] += coeffs[k];
        }
        Ok(acc)
    }

    /// `∂^α R(s)` from a jet, with `α` given as a multiset of coordinates.
    fn partial(&self, jet: &[f64], index: &[usize]) -> f64 {
        let mut e = vec![0u8; self.n];
        for &i in index {
            e[i] += 1;
        }
        let factorial: f64 = e
            .iter()
            .map(|&k| (1..=k as u32).map(f64::from).product::<f64>())
            .product();
        self.lookup.get(&e).map_or(0.0, |&k| factorial * jet[k])
    }
}

/// `ρ^{(k)}(x)`; the fourth derivative falls back to a central difference of
/// `ρ‴` with step `1e−5·max(1, x)` when the model does not supply it.
fn radial_derivative(model: &RadialModel, k: usize, x: f64) -> Result<f64> {
    if k == 4 && model.d4(x).is_none() {
        let h = 1e-5 * x.max(1.0);
        let lo = (x - h).max(0.0);
        return Ok((model.d3(x + h) - model.d3(lo)) / (x + h - lo));
    }
    model.derivative(k, x)
}

/// Location of a component of the joint vector.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Location {
    /// The point `t`.
    T,
    /// The origin.
    Origin,
}

/// `∂_I X(p)` with `I` a multiset of 0-based coordinates.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct JointComponent {
    pub location: Location,
    pub index: Vec<usize>,
}

impl JointComponent {
    pub fn at_t(index: &[usize]) -> Self {
        Self {
            location: Location::T,
            index: index.to_vec(),
        }
    }
    pub fn at_origin(index: &[usize]) -> Self {
        Self {
            location: Location::Origin,
            index: index.to_vec(),
        }
    }
}

/// Covariance matrix of the given derivative components at `t` and `0`,
/// using `Cov[X_I(p), X_J(q)] = (−1)^{|J|} R_{IJ}(p − q)`.
pub fn joint_covariance(
    model: &RadialModel,
    t: &[f64],
    components: &[JointComponent],
) -> Result<DMatrix<f64>> {
    let n = model.n_dim;
    if t.len() != n {
        return Err(Error::Domain(format!(
            "point has dimension {}, model has N = {n}",
            t.len()
        )));
    }
    if components.iter().any(|c| c.index.len() > 2) {
        return Err(Error::Domain(
            "joint covariance supports derivatives up to order 2".into(),
        ));
    }
    let same = |a: &JointComponent, b: &JointComponent| a.location == b.location;
    let max_degree = |same_point: bool| {
        let mut m = 0;
        for a in components {
            for b in components {
                if same(a, b) == same_point {
                    m = m.max(a.index.len() + b.index.len());
                }
            }
        }
        m
    };
    let origin_space = JetSpace::new(n, max_degree(true));
    let cross_space = JetSpace::new(n, max_degree(false));
    let minus_t: Vec<f64> = t.iter().map(|v| -v).collect();
    let jet_zero = origin_space.radial_jet(model, &vec![0.0; n])?;
    let jet_plus = cross_space.radial_jet(model, t)?;
    let jet_minus = cross_space.radial_jet(model, &minus_t)?;

    let m = components.len();
    let mut cov = DMatrix::<f64>::zeros(m, m);
    for (a, ca) in components.iter().enumerate() {
        for (b, cb) in components.iter().enumerate() {
            let mut index = ca.index.clone();
            index.extend_from_slice(&cb.index);
            let value = match (ca.location, cb.location) {
                (Location::T, Location::T) | (Location::Origin, Location::Origin) => {
                    origin_space.partial(&jet_zero, &index)
                }
                (Location::T, Location::Origin) => cross_space.partial(&jet_plus, &index),
                (Location::Origin, Location::T) => cross_space.partial(&jet_minus, &index),
            };
            let sign = if cb.index.len() % 2 == 1 { -1.0 } else { 1.0 };
            cov[(a, b)] = sign * value;
        }
    }
    Ok(cov)
}

/// Components `(∇²X(t), X(t), X(0), ∇X(t), ∇X(0))` in that order, the
/// Hessian in τ order.
pub(crate) fn conditioning_components(n: usize) -> Vec<JointComponent> {
    let mut comps = vec![JointComponent::at_t(&[]); cond_len(n) - 2];
    for j in 0..n {
        for i in 0..=j {
            comps[sym_index(i, j)] = JointComponent::at_t(&[i, j]);
        }
    }
    comps.push(JointComponent::at_t(&[]));
    comps.push(JointComponent::at_origin(&[]));
    comps.extend((0..n).map(|i| JointComponent::at_t(&[i])));
    comps.extend((0..n).map(|i| JointComponent::at_origin(&[i])));
    comps
}

/// `Σ(ru)` via an explicit Schur complement of the full joint covariance.
pub fn conditional_covariance_oracle(model: &RadialModel, r: f64, u: &[f64]) -> Result<CondCov> {
    validate_direction(model, u)?;
    validate_radius(model, r)?;
    let n = model.n_dim;
    let l = cond_len(n);
    let t: Vec<f64> = u.iter().map(|v| r * v).collect();
    let joint = joint_covariance(model, &t, &conditioning_components(n))?;
    let v11 = joint.view((0, 0), (l, l)).into_owned();
    let v12 = joint.view((0, l), (l, 2 * n)).into_owned();
    let v22 = joint.view((l, l), (2 * n, 2 * n)).into_owned();
    let chol = v22.clone().cholesky().ok_or_else(|| {
        Error::SingularConditioning(format!(
            "gradient covariance V₂₂ is not positive definite at r = {r}"
        ))
    })?;
    let log_det_v22 = 2.0 * chol.l().diagonal().iter().map(|d| d.ln()).sum::<f64>();
    let solved = chol.solve(&v12.transpose());
    let mut sigma = v11 - &v12 * solved;
    sigma = (&sigma + sigma.transpose()) * 0.5;
    Ok(CondCov {
        n_dim: n,
        l,
        sigma,
        t_norm: r,
        direction: u.to_vec(),
        k: None,
        log_det_v22,
    })
}
