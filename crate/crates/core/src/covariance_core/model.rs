//! Radial covariance models `ρ` with analytic derivatives.

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Validity radius `δ_ρ` used when none is configured.
pub const DEFAULT_VALIDITY_RADIUS: f64 = 1.0;

/// A radial profile `x ↦ ρ(x)`, `x = ‖t‖² ≥ 0`, with derivatives in `x`.
///
/// Orders 0–3 are mandatory; the fourth derivative is optional and only
/// needed for fourth-order partials of `R` away from the origin.
pub trait RadialProfile: Send + Sync + fmt::Debug {
    fn value(&self, x: f64) -> f64;
    fn d1(&self, x: f64) -> f64;
    fn d2(&self, x: f64) -> f64;
    fn d3(&self, x: f64) -> f64;
    fn d4(&self, _x: f64) -> Option<f64> {
        None
    }

    /// `ρ′(x) − ρ′(0)`; override when it can be evaluated without
    /// cancellation for small `x`.
    fn d1_increment(&self, x: f64) -> f64 {
        self.d1(x) - self.d1(0.0)
    }

    /// Built-in family, if any (used for serialisation of configurations).
    fn family(&self) -> Option<ModelFamily> {
        None
    }

    fn label(&self) -> String;
}

/// Parametrised built-in families.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "lowercase")]
pub enum ModelFamily {
    /// `ρ(x) = exp(−a x)`.
    Gaussian { a: f64 },
    /// `ρ(x) = (1 + x/ℓ)^(−ν)`.
    Cauchy { ell: f64, nu: f64 },
}

impl ModelFamily {
    pub fn profile(&self) -> Result<Arc<dyn RadialProfile>> {
        match *self {
            ModelFamily::Gaussian { a } => Ok(Arc::new(GaussianProfile::new(a)?)),
            ModelFamily::Cauchy { ell, nu } => Ok(Arc::new(CauchyProfile::new(ell, nu)?)),
        }
    }
}

impl fmt::Display for ModelFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ModelFamily::Gaussian { a } => write!(f, "gaussian:a={a}"),
            ModelFamily::Cauchy { ell, nu } => write!(f, "cauchy:ell={ell},nu={nu}"),
        }
    }
}

impl FromStr for ModelFamily {
    type Err = Error;

    /// Parses `gaussian[:a=..]` or `cauchy[:ell=..,nu=..]`.
    fn from_str(s: &str) -> Result<Self> {
        let (name, params) = match s.split_once(':') {
            Some((n, p)) => (n.trim(), p.trim()),
            None => (s.trim(), ""),
        };
        let mut kv = Vec::new();
        for item in params.split(',').filter(|p| !p.trim().is_empty()) {
            let (k, v) = item
                .split_once('=')
                .ok_or_else(|| Error::Domain(format!("malformed model parameter '{item}'")))?;
            let v: f64 = v
                .trim()
                .parse()
                .map_err(|_| Error::Domain(format!("non-numeric model parameter '{item}'")))?;
            kv.push((k.trim().to_ascii_lowercase(), v));
        }
        let take = |keys: &[&str], default: f64| {
            kv.iter()
                .find(|(k, _)| keys.contains(&k.as_str()))
                .map_or(default, |&(_, v)| v)
        };
        let known: &[&str] = match name.to_ascii_lowercase().as_str() {
            "gaussian" => &["a"],
            "cauchy" => &["ell", "l", "nu"],
            other => return Err(Error::Domain(format!("unknown model family '{other}'"))),
        };
        if let Some((k, _)) = kv.iter().find(|(k, _)| !known.contains(&k.as_str())) {
            return Err(Error::Domain(format!(
                "unknown parameter '{k}' for model '{name}'"
            )));
        }
        let family = if known.contains(&"a") {
            ModelFamily::Gaussian {
                a: take(&["a"], 1.0),
            }
        } else {
            ModelFamily::Cauchy {
                ell: take(&["ell", "l"], 1.0),
                nu: take(&["nu"], 2.0),
            }
        };
        family.profile()?;
        Ok(family)
    }
}

/// `ρ(x) = exp(−a x)`, `a > 0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GaussianProfile {
    pub a: f64,
}

impl GaussianProfile {
    pub fn new(a: f64) -> Result<Self> {
        if !(a > 0.0 && a.is_finite()) {
            return Err(Error::Domain(format!(
                "gaussian model needs a > 0, got {a}"
            )));
        }
        Ok(Self { a })
    }

    fn derivative(&self, k: i32, x: f64) -> f64 {
        (-self.a).powi(k) * (-self.a * x).exp()
    }
}

impl RadialProfile for GaussianProfile {
    fn value(&self, x: f64) -> f64 {
        self.derivative(0, x)
    }
    fn d1(&self, x: f64) -> f64 {
        self.derivative(1, x)
    }
    fn d2(&self, x: f64) -> f64 {
        self.derivative(2, x)
    }
    fn d3(&self, x: f64) -> f64 {
        self.derivative(3, x)
    }
    fn d4(&self, x: f64) -> Option<f64> {
        Some(self.derivative(4, x))
    }
    fn d1_increment(&self, x: f64) -> f64 {
        -self.a * (-self.a * x).exp_m1()
    }
    fn family(&self) -> Option<ModelFamily> {
        Some(ModelFamily::Gaussian { a: self.a })
    }
    fn label(&self) -> String {
        format!("gaussian:a={}", self.a)
    }
}

/// `ρ(x) = (1 + x/ℓ)^(−ν)`, `ℓ, ν > 0`; a scale mixture of Gaussians and
/// therefore positive definite in every dimension.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CauchyProfile {
    pub ell: f64,
    pub nu: f64,
}

impl CauchyProfile {
    pub fn new(ell: f64, nu: f64) -> Result<Self> {
        if !(ell > 0.0 && nu > 0.0 && ell.is_finite() && nu.is_finite()) {
            return Err(Error::Domain(format!(
                "cauchy model needs ell > 0 and nu > 0, got ell={ell}, nu={nu}"
            )));
        }
        Ok(Self { ell, nu })
    }

    /// `(−1)^k ν(ν+1)…(ν+k−1) ℓ^{−k}`.
    fn coefficient(&self, k: u32) -> f64 {
        (0..k).fold(1.0, |acc, m| -acc * (self.nu + m as f64) / self.ell)
    }

    fn derivative(&self, k: u32, x: f64) -> f64 {
        self.coefficient(k) * (-(self.nu + k as f64) * (x / self.ell).ln_1p()).exp()
    }
}

impl RadialProfile for CauchyProfile {
    fn value(&self, x: f64) -> f64 {
        self.derivative(0, x)
    }
    fn d1(&self, x: f64) -> f64 {
        self.derivative(1, x)
    }
    fn d2(&self, x: f64) -> f64 {
        self.derivative(2, x)
    }
    fn d3(&self, x: f64) -> f64 {
        self.derivative(3, x)
    }
    fn d4(&self, x: f64) -> Option<f64> {
        Some(self.derivative(4, x))
    }
    fn d1_increment(&self, x: f64) -> f64 {
        self.coefficient(1) * (-(self.nu + 1.0) * (x / self.ell).ln_1p()).exp_m1()
    }
    fn family(&self) -> Option<ModelFamily> {
        Some(ModelFamily::Cauchy {
            ell: self.ell,
            nu: self.nu,
        })
    }
    fn label(&self) -> String {
        format!("cauchy:ell={},nu={}", self.ell, self.nu)
    }
}

/// Shared closure type for user-supplied derivatives.
pub type RadialFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// A user model given by derivative closures.
#[derive(Clone)]
pub struct ClosureProfile {
    pub name: String,
    pub rho: RadialFn,
    pub rho_d1: RadialFn,
    pub rho_d2: RadialFn,
    pub rho_d3: RadialFn,
    pub rho_d4: Option<RadialFn>,
}

impl fmt::Debug for ClosureProfile {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ClosureProfile")
            .field("name", &self.name)
            .field("has_d4", &self.rho_d4.is_some())
            .finish()
    }
}

impl RadialProfile for ClosureProfile {
    fn value(&self, x: f64) -> f64 {
        (self.rho)(x)
    }
    fn d1(&self, x: f64) -> f64 {
        (self.rho_d1)(x)
    }
    fn d2(&self, x: f64) -> f64 {
        (self.rho_d2)(x)
    }
    fn d3(&self, x: f64) -> f64 {
        (self.rho_d3)(x)
    }
    fn d4(&self, x: f64) -> Option<f64> {
        self.rho_d4.as_ref().map(|f| f(x))
    }
    fn label(&self) -> String {
        self.name.clone()
    }
}

/// A radial covariance `ρ`, the dimension `N`, the rescaling factor `C`
/// (the model represents `x ↦ ρ(Cx)`), and the validity radius `δ_ρ`.
#[derive(Debug, Clone)]
pub struct RadialModel {
    pub n_dim: usize,
    pub profile: Arc<dyn RadialProfile>,
    pub scale: f64,
    pub validity_radius: f64,
}

impl RadialModel {
    pub fn new(profile: Arc<dyn RadialProfile>, n_dim: usize) -> Result<Self> {
        if n_dim < 2 {
            return Err(Error::Domain(format!(
                "dimension N must be >= 2, got {n_dim}"
            )));
        }
        Ok(Self {
            n_dim,
            profile,
            scale: 1.0,
            validity_radius: DEFAULT_VALIDITY_RADIUS,
        })
    }

    pub fn from_family(family: ModelFamily, n_dim: usize) -> Result<Self> {
        Self::new(family.profile()?, n_dim)
    }

    /// `ρ(x) = e^{−x}` in dimension `n_dim`.
    pub fn gaussian(n_dim: usize) -> Self {
        Self::new(Arc::new(GaussianProfile { a: 1.0 }), n_dim)
            .expect("dimension must be at least 2")
    }

    pub fn with_validity_radius(mut self, radius: f64) -> Self {
        self.validity_radius = radius;
        self
    }

    pub fn with_dimension(&self, n_dim: usize) -> Result<Self> {
        let mut m = Self::new(self.profile.clone(), n_dim)?;
        m.scale = self.scale;
        m.validity_radius = self.validity_radius;
        Ok(m)
    }

    pub fn rho(&self, x: f64) -> f64 {
        self.profile.value(self.scale * x)
    }
    pub fn d1(&self, x: f64) -> f64 {
        self.scale * self.profile.d1(self.scale * x)
    }
    pub fn d2(&self, x: f64) -> f64 {
        self.scale.powi(2) * self.profile.d2(self.scale * x)
    }
    pub fn d3(&self, x: f64) -> f64 {
        self.scale.powi(3) * self.profile.d3(self.scale * x)
    }
    pub fn d4(&self, x: f64) -> Option<f64> {
        self.profile
            .d4(self.scale * x)
            .map(|v| self.scale.powi(4) * v)
    }

    /// `ρ′(x) − ρ′(0)` without cancellation for built-in profiles.
    pub fn d1_increment(&self, x: f64) -> f64 {
        self.scale * self.profile.d1_increment(self.scale * x)
    }

    /// `ρ^{(k)}(x)` for `k ≤ 4`.
    pub fn derivative(&self, k: usize, x: f64) -> Result<f64> {
        match k {
            0 => Ok(self.rho(x)),
            1 => Ok(self.d1(x)),
            2 => Ok(self.d2(x)),
            3 => Ok(self.d3(x)),
            4 => self.d4(x).ok_or_else(|| {
                Error::Domain(format!(
                    "model '{}' does not provide a fourth derivative",
                    self.label()
                ))
            }),
            _ => Err(Error::Domain(format!(
                "derivative order {k} is not supported"
            ))),
        }
    }

    /// Correlation length `1/√λ₂` with second spectral moment `λ₂ = −2ρ′(0)`.
    pub fn correlation_length(&self) -> f64 {
        1.0 / (-2.0 * self.d1(0.0)).sqrt()
    }

    pub fn label(&self) -> String {
        if self.scale == 1.0 {
            self.profile.label()
        } else {
            format!("{} (scale {})", self.profile.label(), self.scale)
        }
    }

    /// JSON description embedded in artifacts.
    pub fn describe(&self) -> serde_json::Value {
        serde_json::json!({
            "family": self.profile.family(),
            "label": self.profile.label(),
            "N": self.n_dim,
            "scale": self.scale,
            "validity_radius": self.validity_radius,
        })
    }
}

/// The rescaled model `ρ̃(x) = ρ(Cx)`, so `ρ̃^{(k)}(0) = C^k ρ^{(k)}(0)`.
/// The validity radius shrinks to `δ_ρ/√C` so that `ρ̃` is only evaluated
/// where `ρ` was.
pub fn rescale(model: &RadialModel, c: f64) -> Result<RadialModel> {
    if !(c > 0.0 && c.is_finite()) {
        return Err(Error::Domain(format!(
            "rescaling factor must be positive, got {c}"
        )));
    }
    let mut out = model.clone();
    out.scale *= c;
    out.validity_radius /= c.sqrt();
    Ok(out)
}

/// Smallest power of two `C ≥ 1` with `f(C) < 0`, where
/// `f(C) = ((a − 8ρ″)C² + d)² − (aC² − d)² − 4bcC²` and `a, b, c, d` are
/// the entries of the 2×2 block `W` of `Σ₀` for the unscaled model. The
/// sign condition guarantees `λ_s(C) < 4ρ̃″(0)`, so the small eigenvalue of
/// `Σ₀` cannot collide with the fixed eigenvalues `4ρ̃″(0)` and `8ρ̃″(0)`.
pub fn find_rescaling(model: &RadialModel) -> f64 {
    let n = model.n_dim as f64;
    let (r1, r2) = (model.d1(0.0), model.d2(0.0));
    let a = (32.0 + 8.0 * (n - 2.0)) * r2 / 3.0;
    let b = 8.0 * r1 / 3.0;
    let c = 4.0 * (n - 1.0) * r1 / 3.0;
    let d = 2.0 * (1.0 - r1 * r1 / (3.0 * r2));
    let f = |s: f64| {
        let s2 = s * s;
        ((a - 8.0 * r2) * s2 + d).powi(2) - (a * s2 - d).powi(2) - 4.0 * b * c * s2
    };
    let mut scale = 1.0;
    // The leading coefficient 16ρ″(4ρ″ − a) is negative, so this terminates.
    while f(scale) >= 0.0 && scale < 1e12 {
        scale *= 2.0;
    }
    scale
}
