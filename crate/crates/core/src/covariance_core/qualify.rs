//! Numerical checks of the regularity conditions on `ρ`.

use serde::{Deserialize, Serialize};

use super::model::RadialModel;
use super::oracle::{joint_covariance, JointComponent};
use super::partials::{cov_partials, third_derivative_variance};

/// Outcome of a single condition.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QualCheck {
    pub name: String,
    pub description: String,
    pub passed: bool,
    /// The scalar that decides the check (a margin: positive means passing,
    /// unless stated otherwise in the description).
    pub value: f64,
}

/// All conditions; `overall_pass` is their conjunction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QualReport {
    pub model: String,
    pub n_dim: usize,
    pub checks: Vec<QualCheck>,
    pub overall_pass: bool,
}

impl QualReport {
    pub fn check(&self, name: &str) -> Option<&QualCheck> {
        self.checks.iter().find(|c| c.name == name)
    }

    pub fn failed(&self) -> Vec<&str> {
        self.checks
            .iter()
            .filter(|c| !c.passed)
            .map(|c| c.name.as_str())
            .collect()
    }
}

/// Number of points in the scalar-inequality grids.
const GRID_POINTS: usize = 256;

/// 256 log-spaced points in `(0, δ²]`, from `1e−8·δ²` up to `δ²`.
fn x_grid(radius: f64) -> Vec<f64> {
    let top = radius * radius;
    (0..GRID_POINTS)
        .map(|k| top * 10f64.powf(-8.0 + 8.0 * k as f64 / (GRID_POINTS - 1) as f64))
        .collect()
}

/// Evaluate every qualification condition for `model`.
pub fn check_qualified(model: &RadialModel) -> QualReport {
    let n = model.n_dim;
    let (r0, r1, r2, r3) = (model.rho(0.0), model.d1(0.0), model.d2(0.0), model.d3(0.0));
    let mut checks = Vec::new();
    let mut push = |name: &str, description: &str, passed: bool, value: f64| {
        checks.push(QualCheck {
            name: name.to_string(),
            description: description.to_string(),
            passed,
            value,
        });
    };

    let err = (r0 - 1.0).abs();
    push(
        "unit_variance",
        "|ρ(0) − 1| (must be below 1e−12)",
        err < 1e-12,
        err,
    );
    push("rho1_negative", "ρ′(0) < 0", r1 < 0.0, r1);
    push("rho2_positive", "ρ″(0) > 0", r2 > 0.0, r2);
    push("rho3_negative", "ρ‴(0) < 0", r3 < 0.0, r3);

    let alpha = r2 * r2 / r1;
    let beta = r3;
    let margin = alpha - 5.0 * beta / 3.0;
    push(
        "alpha_beta",
        "α − 5β/3 > 0 with α = ρ″(0)²/ρ′(0), β = ρ‴(0)",
        margin > 0.0,
        margin,
    );

    let ratio = r2 / (r1 * r1) - n as f64 / (n as f64 + 2.0);
    push(
        "spectral_moment_ratio",
        "ρ″(0)/ρ′(0)² − N/(N+2) > 0",
        ratio > 0.0,
        ratio,
    );

    let grid = x_grid(model.validity_radius);
    let mut abs_margin = f64::INFINITY;
    let mut gc2_margin = f64::INFINITY;
    for &x in &grid {
        let (d1, d2, inc) = (model.d1(x), model.d2(x), model.d1_increment(x));
        // −ρ′(0) − |ρ′(x)|, written through the increment when ρ′(x) ≤ 0.
        let m = if d1 <= 0.0 { inc } else { -r1 - d1 };
        abs_margin = abs_margin.min(m);
        // ρ′(0)² − ρ′(x)² − 2ρ′(x)ρ″(x)x − 4ρ″(x)²x², and ρ′(x) < 0.
        let g = -inc * (d1 + r1) - 2.0 * d1 * d2 * x - 4.0 * d2 * d2 * x * x;
        gc2_margin = gc2_margin.min(if d1 < 0.0 { g } else { -d1.abs() });
    }
    push(
        "gradient_decorrelation",
        "min over x ∈ (0, δ²] of −ρ′(0) − |ρ′(x)| > 0",
        abs_margin > 0.0,
        abs_margin,
    );
    push(
        "gc2",
        "min over x ∈ (0, δ²] of ρ′(0)² − ρ′(x)² − 2ρ′(x)ρ″(x)x − 4ρ″(x)²x² > 0 with ρ′(x) < 0",
        gc2_margin > 0.0,
        gc2_margin,
    );

    let growth = fourth_partial_growth(model);
    push(
        "fourth_partial_lipschitz",
        "|R₁₁₁₁(0) − R₁₁₁₁(t)|/‖t‖ on shrinking t stays bounded (value: largest ratio)",
        growth.is_finite(),
        growth,
    );

    let var3 = third_derivative_variance(model);
    let nondeg = joint_nondegeneracy(model);
    push(
        "joint_nondegeneracy",
        "min relative eigenvalue of Cov(∇²X(t), ∇X(t), X(t), ∇X(0), X(0)) at sampled t \
         above 1e−12, and Var X₁₁₁(0) > 0",
        nondeg > 1e-12 && var3 > 0.0,
        nondeg,
    );

    let overall_pass = checks.iter().all(|c| c.passed);
    QualReport {
        model: model.label(),
        n_dim: n,
        checks,
        overall_pass,
    }
}

/// Largest `|R₁₁₁₁(0) − R₁₁₁₁(t)|/‖t‖` over `t = s(1,…,1)/√N`,
/// `s ∈ {1e−1, 1e−2, 1e−3}·δ`; infinite if the ratios grow as `s` shrinks.
fn fourth_partial_growth(model: &RadialModel) -> f64 {
    let n = model.n_dim;
    let w = 1.0 / (n as f64).sqrt();
    let r1111 = |s: f64| -> f64 {
        let t = vec![s * w; n];
        match cov_partials(model, &t, &[0, 0, 0, 0]) {
            Ok(v) => v,
            Err(_) => {
                let h = 1e-5 * s.max(1e-3);
                let mut tp = t.clone();
                let mut tm = t.clone();
                tp[0] += h;
                tm[0] -= h;
                let a = cov_partials(model, &tp, &[0, 0, 0]).unwrap_or(f64::NAN);
                let b = cov_partials(model, &tm, &[0, 0, 0]).unwrap_or(f64::NAN);
                (a - b) / (2.0 * h)
            }
        }
    };
    let at_zero = 12.0 * model.d2(0.0);
    let ratios: Vec<f64> = [1e-1, 1e-2, 1e-3]
        .iter()
        .map(|&f| {
            let s = f * model.validity_radius;
            (at_zero - r1111(s)).abs() / s
        })
        .collect();
    let bounded = ratios
        .windows(2)
        .all(|p| p[1] <= p[0] * (1.0 + 1e-6) + 1e-9);
    if bounded && ratios.iter().all(|v| v.is_finite()) {
        ratios.iter().cloned().fold(0.0, f64::max)
    } else {
        f64::INFINITY
    }
}

/// Smallest eigenvalue, relative to the largest, of the joint covariance of
/// `(∇²X(t), ∇X(t), X(t), ∇X(0), X(0))` over a few `t` inside the validity
/// radius.
fn joint_nondegeneracy(model: &RadialModel) -> f64 {
    let n = model.n_dim;
    let mut comps = Vec::new();
    for j in 0..n {
        for i in 0..=j {
            comps.push(JointComponent::at_t(&[i, j]));
        }
    }
    comps.extend((0..n).map(|i| JointComponent::at_t(&[i])));
    comps.push(JointComponent::at_t(&[]));
    comps.extend((0..n).map(|i| JointComponent::at_origin(&[i])));
    comps.push(JointComponent::at_origin(&[]));

    let mut axis = vec![0.0; n];
    axis[n - 1] = 1.0;
    let diagonal = vec![1.0 / (n as f64).sqrt(); n];
    let mut worst = f64::INFINITY;
    for dir in [&axis, &diagonal] {
        for f in [0.25, 0.5, 1.0] {
            let t: Vec<f64> = dir.iter().map(|v| v * f * model.validity_radius).collect();
            let Ok(cov) = joint_covariance(model, &t, &comps) else {
                return f64::NAN;
            };
            let eig = cov.symmetric_eigenvalues();
            let max = eig.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            let min = eig.iter().cloned().fold(f64::INFINITY, f64::min);
            worst = worst.min(min / max);
        }
    }
    worst
}
