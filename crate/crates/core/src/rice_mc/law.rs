//! Samplers for the Gaussian law of a half-vectorised Hessian jointly with
//! one or two thresholded field values.

use super::normal::{upper_tail, upper_tail_inv};
use crate::error::{Error, Result};
use crate::linalg::{ordered_eigendecomposition, psd_sqrt};
use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::{Open01, StandardNormal};
use serde::{Deserialize, Serialize};

/// Square-root factor used by the direct sampler.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Factor {
    /// The nonnegative symmetric square root `Ã(r)`.
    #[default]
    Symmetric,
    /// The spectral factor `P(r)Λ(r)^{1/2}`.
    Spectral,
}

/// How samples of `(x″, x, z)` are produced.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "sampler", content = "factor")]
pub enum Sampler {
    /// Draw the thresholded values from their truncated laws, weight by the
    /// truncation probabilities, then draw the Hessian conditionally.
    #[default]
    TailConditioned,
    /// Draw `y ~ N(0, I_L)` and map it through a square-root factor.
    Direct(Factor),
    /// Spectral factor with the antithetic partner obtained by flipping the
    /// signs of the `N + 1` coordinates of the vanishing eigenvalues. In the
    /// limit `r → 0` this flip exchanges the two sign classes exactly, so the
    /// pair nearly cancels in sign contrasts.
    Reflected,
}

/// A prepared sampler. Each draw yields an antithetic pair of Hessians
/// together with their weights.
pub(crate) enum Law {
    Tail(TailLaw),
    Direct(DirectLaw),
}

pub(crate) struct TailLaw {
    nh: usize,
    u: f64,
    sd1: f64,
    w1: f64,
    /// `(slope, sd)` of the second value given the first.
    second: Option<(f64, f64)>,
    gain: DMatrix<f64>,
    noise: DMatrix<f64>,
}

pub(crate) struct DirectLaw {
    nh: usize,
    u: f64,
    factor: DMatrix<f64>,
    /// First flipped coordinate for the reflected pair; `None` pairs `y`
    /// with `−y`.
    reflect_from: Option<usize>,
}

/// Reusable buffers for one antithetic pair.
pub(crate) struct PairBuffers {
    pub hess: [Vec<f64>; 2],
    pub weight: [f64; 2],
    xi: DVector<f64>,
    cond: DVector<f64>,
}

impl Law {
    /// Law of `(x″, c₁, …, c_m)` with covariance `sigma`, where the last `m`
    /// coordinates must all exceed `u`.
    pub(crate) fn new(sigma: &DMatrix<f64>, nh: usize, u: f64, sampler: Sampler) -> Result<Self> {
        let m = sigma.nrows() - nh;
        assert!((1..=2).contains(&m), "one or two thresholded values");
        match sampler {
            Sampler::TailConditioned => Ok(Law::Tail(TailLaw::new(sigma, nh, m, u)?)),
            Sampler::Direct(Factor::Symmetric) => Ok(Law::Direct(DirectLaw {
                nh,
                u,
                factor: psd_sqrt(sigma)?,
                reflect_from: None,
            })),
            Sampler::Direct(Factor::Spectral) => Ok(Law::Direct(DirectLaw {
                nh,
                u,
                factor: spectral_factor(sigma)?,
                reflect_from: None,
            })),
            Sampler::Reflected => {
                if m != 2 {
                    return Err(Error::Domain(
                        "the reflected sampler needs a pair of thresholded values".into(),
                    ));
                }
                // N(N+1)/2 = nh; the last N + 1 eigen-directions vanish as r → 0.
                let n = ((((8 * nh + 1) as f64).sqrt() - 1.0) / 2.0).round() as usize;
                let reflect_from = Some(sigma.nrows() - n - 1);
                Ok(Law::Direct(DirectLaw {
                    nh,
                    u,
                    factor: spectral_factor(sigma)?,
                    reflect_from,
                }))
            }
        }
    }

    pub(crate) fn buffers(&self) -> PairBuffers {
        let (nh, dim) = match self {
            Law::Tail(t) => (t.nh, t.nh),
            Law::Direct(d) => (d.nh, d.factor.ncols()),
        };
        PairBuffers {
            hess: [vec![0.0; nh], vec![0.0; nh]],
            weight: [0.0; 2],
            xi: DVector::zeros(dim),
            cond: DVector::zeros(2),
        }
    }

    pub(crate) fn draw<R: Rng>(&self, rng: &mut R, buf: &mut PairBuffers) {
        match self {
            Law::Tail(t) => t.draw(rng, buf),
            Law::Direct(d) => d.draw(rng, buf),
        }
    }
}

/// `P Λ^{1/2}` with eigenvalues in descending order.
fn spectral_factor(sigma: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let (values, vectors) = ordered_eigendecomposition(sigma)?;
    let roots = values.map(|v| v.max(0.0).sqrt());
    Ok(vectors * DMatrix::from_diagonal(&roots))
}

impl TailLaw {
    fn new(sigma: &DMatrix<f64>, nh: usize, m: usize, u: f64) -> Result<Self> {
        let v1 = sigma[(nh, nh)];
        if !(v1 > 0.0) {
            return Err(Error::SingularConditioning(format!(
                "thresholded value has variance {v1:e}"
            )));
        }
        let s_hc = sigma.view((0, nh), (nh, m)).into_owned();
        let (second, gain) = if m == 1 {
            (None, s_hc / v1)
        } else {
            let c01 = sigma[(nh, nh + 1)];
            let v2 = sigma[(nh + 1, nh + 1)];
            let schur = v1.mul_add(v2, -c01 * c01);
            if !(schur > 0.0) {
                return Err(Error::SingularConditioning(format!(
                    "thresholded pair has a singular covariance (determinant {schur:e})"
                )));
            }
            let inv = DMatrix::from_row_slice(2, 2, &[v2, -c01, -c01, v1]) / schur;
            (Some((c01 / v1, (schur / v1).sqrt())), s_hc * inv)
        };
        let s_hh = sigma.view((0, 0), (nh, nh)).into_owned();
        let cond = &s_hh - &gain * sigma.view((nh, 0), (m, nh));
        let cond = (&cond + cond.transpose()) * 0.5;
        let noise = psd_sqrt(&cond)?;
        let sd1 = v1.sqrt();
        Ok(TailLaw {
            nh,
            u,
            sd1,
            w1: upper_tail(u / sd1),
            second,
            gain,
            noise,
        })
    }

    fn draw<R: Rng>(&self, rng: &mut R, buf: &mut PairBuffers) {
        let u1: f64 = rng.sample(Open01);
        let x1 = self.sd1 * upper_tail_inv(u1 * self.w1);
        buf.cond[0] = x1;
        let mut weight = self.w1;
        let m = if let Some((slope, sd)) = self.second {
            let mean = slope * x1;
            let w2 = upper_tail((self.u - mean) / sd);
            let u2: f64 = rng.sample(Open01);
            buf.cond[1] = mean + sd * upper_tail_inv(u2 * w2);
            weight *= w2;
            2
        } else {
            1
        };
        for v in buf.xi.iter_mut() {
            *v = rng.sample(StandardNormal);
        }
        if !(weight > 0.0) || !buf.cond.rows(0, m).iter().all(|v| v.is_finite()) {
            buf.weight = [0.0; 2];
            return;
        }
        for i in 0..self.nh {
            let mut mean = 0.0;
            for j in 0..m {
                mean += self.gain[(i, j)] * buf.cond[j];
            }
            let mut e = 0.0;
            for j in 0..self.nh {
                e += self.noise[(i, j)] * buf.xi[j];
            }
            buf.hess[0][i] = mean + e;
            buf.hess[1][i] = mean - e;
        }
        buf.weight = [weight; 2];
    }
}

impl DirectLaw {
    fn draw<R: Rng>(&self, rng: &mut R, buf: &mut PairBuffers) {
        for v in buf.xi.iter_mut() {
            *v = rng.sample(StandardNormal);
        }
        let x = &self.factor * &buf.xi;
        let partner = match self.reflect_from {
            None => -&x,
            Some(start) => {
                let tail = buf.xi.rows(start, buf.xi.len() - start);
                &x - self.factor.columns(start, tail.len()) * tail * 2.0
            }
        };
        for i in 0..self.nh {
            buf.hess[0][i] = x[i];
            buf.hess[1][i] = partner[i];
        }
        let above = |v: &DVector<f64>| v.iter().skip(self.nh).all(|&c| c > self.u);
        buf.weight = [
            f64::from(u8::from(above(&x))),
            f64::from(u8::from(above(&partner))),
        ];
    }
}
