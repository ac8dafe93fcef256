//! Closed-form partial derivatives of `R(t) = ρ(‖t‖²)` up to order four.

use super::model::RadialModel;
use crate::error::{Error, Result};

#[inline]
fn delta(i: usize, j: usize) -> f64 {
    if i == j {
        1.0
    } else {
        0.0
    }
}

/// `R_{i₁…i_k}(t) = ∂^k R / ∂t_{i₁}…∂t_{i_k}` for `k ≤ 4` (0-based
/// coordinate indices). Since `Cov[X_I(s), X_J(t)] = (−1)^{|J|} R_{IJ}(s − t)`,
/// these are all covariances between derivatives of the field.
pub fn cov_partials(model: &RadialModel, t: &[f64], index: &[usize]) -> Result<f64> {
    let n = model.n_dim;
    if t.len() != n {
        return Err(Error::Domain(format!(
            "point has dimension {}, model has N = {n}",
            t.len()
        )));
    }
    if let Some(&bad) = index.iter().find(|&&i| i >= n) {
        return Err(Error::Domain(format!(
            "coordinate index {bad} out of range for N = {n}"
        )));
    }
    let x: f64 = t.iter().map(|v| v * v).sum();
    let radius = model.validity_radius;
    if x > radius * radius * (1.0 + 1e-12) {
        return Err(Error::Domain(format!(
            "‖t‖ = {} exceeds the validity radius {radius}",
            x.sqrt()
        )));
    }
    Ok(match *index {
        [] => model.rho(x),
        [i] => 2.0 * t[i] * model.d1(x),
        [i, j] => 2.0 * model.d1(x) * delta(i, j) + 4.0 * t[i] * t[j] * model.d2(x),
        [i, j, k] => {
            4.0 * (delta(i, j) * t[k] + delta(i, k) * t[j] + delta(j, k) * t[i]) * model.d2(x)
                + 8.0 * t[i] * t[j] * t[k] * model.d3(x)
        }
        [i, j, k, l] => {
            let pairs =
                delta(i, j) * delta(k, l) + delta(i, k) * delta(j, l) + delta(i, l) * delta(j, k);
            let mixed = delta(i, j) * t[k] * t[l]
                + delta(i, k) * t[j] * t[l]
                + delta(i, l) * t[j] * t[k]
                + delta(j, k) * t[i] * t[l]
                + delta(j, l) * t[i] * t[k]
                + delta(k, l) * t[i] * t[j];
            let quartic = t[i] * t[j] * t[k] * t[l];
            let fourth = if quartic == 0.0 {
                0.0
            } else {
                16.0 * quartic * model.derivative(4, x)?
            };
            4.0 * pairs * model.d2(x) + 8.0 * mixed * model.d3(x) + fourth
        }
        _ => {
            return Err(Error::Domain(format!(
                "partials of order {} are not supported (max 4)",
                index.len()
            )))
        }
    })
}

/// `Var[X₁₁₁(0)] = −R₁₁₁₁₁₁(0) = −120 ρ‴(0)`.
pub fn third_derivative_variance(model: &RadialModel) -> f64 {
    -120.0 * model.d3(0.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn first_partial_of_unit_gaussian() {
        let m = RadialModel::gaussian(2);
        let v = cov_partials(&m, &[1.0, 0.0], &[0]).unwrap();
        assert!((v + 2.0 * (-1.0f64).exp()).abs() < 1e-15);
    }

    #[test]
    fn odd_partials_vanish_at_origin() {
        let m = RadialModel::gaussian(3);
        for i in 0..3 {
            assert_eq!(cov_partials(&m, &[0.0; 3], &[i]).unwrap(), 0.0);
            for j in 0..3 {
                for k in 0..3 {
                    assert_eq!(cov_partials(&m, &[0.0; 3], &[i, j, k]).unwrap(), 0.0);
                }
            }
        }
    }

    #[test]
    fn mixed_fourth_partial_at_origin() {
        let m = RadialModel::gaussian(2);
        let v = cov_partials(&m, &[0.0, 0.0], &[0, 0, 1, 1]).unwrap();
        assert_eq!(v, 4.0 * m.d2(0.0));
        let v = cov_partials(&m, &[0.0, 0.0], &[0, 0, 0, 0]).unwrap();
        assert_eq!(v, 12.0 * m.d2(0.0));
    }

    #[test]
    fn rejects_bad_requests() {
        let m = RadialModel::gaussian(2);
        assert!(cov_partials(&m, &[0.0; 2], &[0; 5]).is_err());
        assert!(cov_partials(&m, &[0.0; 3], &[0]).is_err());
        assert!(cov_partials(&m, &[0.0; 2], &[2]).is_err());
        assert!(cov_partials(&m, &[2.0, 0.0], &[0]).is_err());
    }

    #[test]
    fn third_derivative_variance_of_unit_gaussian() {
        assert_eq!(third_derivative_variance(&RadialModel::gaussian(2)), 120.0);
    }
}
