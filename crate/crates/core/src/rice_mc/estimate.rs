//! Monte Carlo estimators of index-resolved Kac–Rice densities and their
//! ratios.

use super::index::classify_vech;
use super::law::{Law, Sampler};
use super::normal::upper_tail;
use crate::covariance_core::{
    conditional_covariance, cov_partials, reference_direction, sym_len, RadialModel,
};
use crate::error::{Error, Result};
use nalgebra::DMatrix;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

/// Antithetic pairs per RNG block. Block `b` always uses stream `b` of the
/// root seed, so estimates do not depend on how blocks are scheduled.
pub const BLOCK_PAIRS: u64 = 2048;

/// Sample budget, seeding and parallelism for one estimate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct McConfig {
    /// Number of samples (rounded up to whole antithetic pairs).
    pub n: u64,
    pub seed: u64,
    /// Worker threads; has no influence on the result.
    pub shards: usize,
    pub sampler: Sampler,
}

impl Default for McConfig {
    fn default() -> Self {
        McConfig {
            n: 2_000_000,
            seed: 0,
            shards: std::thread::available_parallelism().map_or(1, |v| v.get()),
            sampler: Sampler::default(),
        }
    }
}

impl McConfig {
    pub fn new(n: u64, seed: u64) -> Self {
        McConfig {
            n,
            seed,
            ..McConfig::default()
        }
    }

    pub fn with_sampler(mut self, sampler: Sampler) -> Self {
        self.sampler = sampler;
        self
    }

    pub fn with_shards(mut self, shards: usize) -> Self {
        self.shards = shards;
        self
    }
}

/// What an estimate refers to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind", content = "index")]
pub enum EstimateKind {
    /// `f_{u,k}`.
    Index(usize),
    /// `f_{u,+}`: even indices (positive Hessian determinant).
    Plus,
    /// `f_{u,−}`: odd indices.
    Minus,
    /// All indices.
    Total,
    /// `f_{u,+} / f_{u,−}`.
    SignRatio,
    /// `Σ_{k≤N−2} f_{u,k} / (f_{u,N−1} + f_{u,N})`.
    Psi,
    /// `f_{u,N} / (f_{u,N−1} + f_{u,N})`.
    Share,
}

/// A Monte Carlo estimate with its standard error.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RiceEstimate {
    pub value: f64,
    pub stderr: f64,
    /// Samples drawn.
    pub n: u64,
    pub seed: u64,
    pub kind: EstimateKind,
    /// Pair distance; `None` for the single-point density.
    pub r: Option<f64>,
    pub u_threshold: f64,
    /// Samples whose Hessian was numerically degenerate (excluded).
    pub degenerate: u64,
}

/// Per-unit sums over a shared sample: for each index `k` the weighted
/// `|det|·1{index = k}` averaged over an antithetic pair, plus all cross
/// products (for delta-method errors of ratios).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RiceSums {
    pub n_dim: usize,
    pub r: Option<f64>,
    pub u_threshold: f64,
    pub seed: u64,
    /// Antithetic pairs.
    pub units: u64,
    pub sum: Vec<f64>,
    /// Row-major `(N+1) × (N+1)`.
    pub cross: Vec<f64>,
    pub degenerate: u64,
    /// Closed-form factor turning the mean into a density.
    pub prefactor: f64,
}

impl RiceSums {
    pub fn samples(&self) -> u64 {
        2 * self.units
    }

    fn indicator(&self, set: &[usize]) -> Vec<f64> {
        let mut c = vec![0.0; self.n_dim + 1];
        for &k in set {
            if k <= self.n_dim {
                c[k] = 1.0;
            }
        }
        c
    }

    fn mean(&self, c: &[f64]) -> f64 {
        c.iter().zip(&self.sum).map(|(a, s)| a * s).sum::<f64>() / self.units as f64
    }

    /// Sample variance of `c·a` per unit.
    fn unit_variance(&self, c: &[f64]) -> f64 {
        let w = self.n_dim + 1;
        let m = self.units as f64;
        let mut second = 0.0;
        for i in 0..w {
            for j in 0..w {
                second += c[i] * c[j] * self.cross[i * w + j];
            }
        }
        let mean = self.mean(c);
        (second / m - mean * mean).max(0.0) * m / (m - 1.0).max(1.0)
    }

    fn estimate(&self, value: f64, stderr: f64, kind: EstimateKind) -> RiceEstimate {
        RiceEstimate {
            value,
            stderr,
            n: self.samples(),
            seed: self.seed,
            kind,
            r: self.r,
            u_threshold: self.u_threshold,
            degenerate: self.degenerate,
        }
    }

    /// Density over a set of indices.
    pub fn density_of(&self, set: &[usize], kind: EstimateKind) -> RiceEstimate {
        let c = self.indicator(set);
        let value = self.prefactor * self.mean(&c);
        let stderr = self.prefactor * (self.unit_variance(&c) / self.units as f64).sqrt();
        self.estimate(value, stderr, kind)
    }

    /// `f_{u,k}`; exactly zero for `k > N`.
    pub fn density(&self, k: usize) -> RiceEstimate {
        self.density_of(&[k], EstimateKind::Index(k))
    }

    pub fn plus(&self) -> RiceEstimate {
        self.density_of(&self.even(), EstimateKind::Plus)
    }

    pub fn minus(&self) -> RiceEstimate {
        self.density_of(&self.odd(), EstimateKind::Minus)
    }

    pub fn total(&self) -> RiceEstimate {
        let all: Vec<usize> = (0..=self.n_dim).collect();
        self.density_of(&all, EstimateKind::Total)
    }

    fn even(&self) -> Vec<usize> {
        (0..=self.n_dim).filter(|k| k % 2 == 0).collect()
    }

    fn odd(&self) -> Vec<usize> {
        (0..=self.n_dim).filter(|k| k % 2 == 1).collect()
    }

    /// Ratio of sums over two index sets with a delta-method standard error.
    /// The prefactor cancels and is never applied.
    pub fn ratio(&self, num: &[usize], den: &[usize], kind: EstimateKind) -> Result<RiceEstimate> {
        let c = self.indicator(num);
        let d = self.indicator(den);
        let s_num: f64 = c.iter().zip(&self.sum).map(|(a, s)| a * s).sum();
        let s_den: f64 = d.iter().zip(&self.sum).map(|(a, s)| a * s).sum();
        if !(s_den > 0.0) {
            return Err(Error::InsufficientSamples(format!(
                "no weighted samples in the denominator of the {kind:?} ratio"
            )));
        }
        let value = s_num / s_den;
        let combo: Vec<f64> = c.iter().zip(&d).map(|(a, b)| a - value * b).collect();
        let mean_den = s_den / self.units as f64;
        let stderr = (self.unit_variance(&combo) / self.units as f64).sqrt() / mean_den;
        Ok(self.estimate(value, stderr, kind))
    }

    pub fn sign_ratio(&self) -> Result<RiceEstimate> {
        self.ratio(&self.even(), &self.odd(), EstimateKind::SignRatio)
    }

    pub fn psi(&self) -> Result<RiceEstimate> {
        let n = self.n_dim;
        let num: Vec<usize> = (0..n - 1).collect();
        self.ratio(&num, &[n - 1, n], EstimateKind::Psi)
    }

    pub fn share(&self) -> Result<RiceEstimate> {
        let n = self.n_dim;
        self.ratio(&[n], &[n - 1, n], EstimateKind::Share)
    }
}

struct Accum {
    units: u64,
    sum: Vec<f64>,
    cross: Vec<f64>,
    degenerate: u64,
}

impl Accum {
    fn new(width: usize) -> Self {
        Accum {
            units: 0,
            sum: vec![0.0; width],
            cross: vec![0.0; width * width],
            degenerate: 0,
        }
    }

    fn add(&mut self, a: &[f64]) {
        let w = a.len();
        self.units += 1;
        for i in 0..w {
            if a[i] == 0.0 {
                continue;
            }
            self.sum[i] += a[i];
            for j in 0..w {
                self.cross[i * w + j] += a[i] * a[j];
            }
        }
    }

    fn merge(&mut self, other: &Accum) {
        self.units += other.units;
        self.degenerate += other.degenerate;
        for (a, b) in self.sum.iter_mut().zip(&other.sum) {
            *a += b;
        }
        for (a, b) in self.cross.iter_mut().zip(&other.cross) {
            *a += b;
        }
    }
}

fn run_law(law: &Law, n_dim: usize, cfg: &McConfig) -> Result<Accum> {
    if cfg.n == 0 {
        return Err(Error::InsufficientSamples(
            "sample size n must be positive".into(),
        ));
    }
    let pairs = cfg.n.div_ceil(2);
    let blocks = pairs.div_ceil(BLOCK_PAIRS);
    let width = n_dim + 1;
    let block = |b: u64| {
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        rng.set_stream(b);
        let count = BLOCK_PAIRS.min(pairs - b * BLOCK_PAIRS);
        let mut acc = Accum::new(width);
        let mut buf = law.buffers();
        let mut a = vec![0.0; width];
        for _ in 0..count {
            law.draw(&mut rng, &mut buf);
            a.iter_mut().for_each(|v| *v = 0.0);
            for s in 0..2 {
                let w = buf.weight[s];
                if w == 0.0 {
                    continue;
                }
                let class = classify_vech(&buf.hess[s], n_dim);
                if class.degenerate {
                    acc.degenerate += 1;
                    continue;
                }
                a[class.index] += 0.5 * w * class.det.abs();
            }
            acc.add(&a);
        }
        acc
    };
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.shards.max(1))
        .build()
        .map_err(|e| Error::Domain(format!("cannot start worker threads: {e}")))?;
    let parts: Vec<Accum> = pool.install(|| (0..blocks).into_par_iter().map(block).collect());
    let mut total = Accum::new(width);
    for part in &parts {
        total.merge(part);
    }
    Ok(total)
}

fn gradient_density_at_zero(model: &RadialModel) -> f64 {
    (-4.0 * PI * model.d1(0.0)).powf(-(model.n_dim as f64) / 2.0)
}

/// Shared-sample sums for `f_{u,k}(r u_dir)`, `k = 0..N`.
pub fn rice_sums(
    model: &RadialModel,
    r: f64,
    u_dir: &[f64],
    u_thr: f64,
    cfg: &McConfig,
) -> Result<RiceSums> {
    if !u_thr.is_finite() {
        return Err(Error::Domain(format!(
            "threshold must be finite, got {u_thr}"
        )));
    }
    let cond = conditional_covariance(model, r, u_dir)?;
    // Σ(r) is positive definite for r > 0, but its smallest eigenvalue
    // decays like a high power of r; only reject clear indefiniteness.
    let min = cond.sigma.symmetric_eigenvalues().min();
    if min < -1e-10 * cond.sigma.trace() {
        return Err(Error::SingularConditioning(format!(
            "Σ(r) is not positive semi-definite at r = {r} (eigenvalue {min:e})"
        )));
    }
    let n = model.n_dim;
    let law = Law::new(&cond.sigma, sym_len(n), u_thr, cfg.sampler)?;
    let acc = run_law(&law, n, cfg)?;
    let p_t = (2.0 * PI).powi(-(n as i32)) * (-0.5 * cond.log_det_v22).exp();
    let tail = upper_tail(u_thr / model.rho(0.0).sqrt());
    let prefactor = p_t / (tail * gradient_density_at_zero(model));
    Ok(RiceSums {
        n_dim: n,
        r: Some(r),
        u_threshold: u_thr,
        seed: cfg.seed,
        units: acc.units,
        sum: acc.sum,
        cross: acc.cross,
        degenerate: acc.degenerate,
        prefactor,
    })
}

/// `f_{u,k}(r u_dir)`: density of the mean measure of index-`k` critical
/// points above `u_thr` at `t = r u_dir`, given a critical point above
/// `u_thr` at the origin.
pub fn rice_density_mc(
    model: &RadialModel,
    r: f64,
    u_dir: &[f64],
    u_thr: f64,
    k: usize,
    n: u64,
    seed: u64,
) -> Result<RiceEstimate> {
    rice_density_with(model, r, u_dir, u_thr, k, &McConfig::new(n, seed))
}

pub fn rice_density_with(
    model: &RadialModel,
    r: f64,
    u_dir: &[f64],
    u_thr: f64,
    k: usize,
    cfg: &McConfig,
) -> Result<RiceEstimate> {
    Ok(rice_sums(model, r, u_dir, u_thr, cfg)?.density(k))
}

fn reference_sums(model: &RadialModel, r: f64, u_thr: f64, cfg: &McConfig) -> Result<RiceSums> {
    rice_sums(model, r, &reference_direction(model.n_dim), u_thr, cfg)
}

/// `f_{u,+}(r) / f_{u,−}(r)`.
pub fn sign_ratio(
    model: &RadialModel,
    r: f64,
    u_thr: f64,
    n: u64,
    seed: u64,
) -> Result<RiceEstimate> {
    sign_ratio_with(model, r, u_thr, &McConfig::new(n, seed))
}

pub fn sign_ratio_with(
    model: &RadialModel,
    r: f64,
    u_thr: f64,
    cfg: &McConfig,
) -> Result<RiceEstimate> {
    reference_sums(model, r, u_thr, cfg)?.sign_ratio()
}

/// `Ψ_u(r) = Σ_{k≤N−2} f_{u,k} / (f_{u,N−1} + f_{u,N})`.
pub fn psi_ratio(
    model: &RadialModel,
    r: f64,
    u_thr: f64,
    n: u64,
    seed: u64,
) -> Result<RiceEstimate> {
    psi_ratio_with(model, r, u_thr, &McConfig::new(n, seed))
}

pub fn psi_ratio_with(
    model: &RadialModel,
    r: f64,
    u_thr: f64,
    cfg: &McConfig,
) -> Result<RiceEstimate> {
    reference_sums(model, r, u_thr, cfg)?.psi()
}

/// `f_{u,N} / (f_{u,N−1} + f_{u,N})`.
pub fn maxima_share(
    model: &RadialModel,
    r: f64,
    u_thr: f64,
    n: u64,
    seed: u64,
) -> Result<RiceEstimate> {
    maxima_share_with(model, r, u_thr, &McConfig::new(n, seed))
}

pub fn maxima_share_with(
    model: &RadialModel,
    r: f64,
    u_thr: f64,
    cfg: &McConfig,
) -> Result<RiceEstimate> {
    reference_sums(model, r, u_thr, cfg)?.share()
}

/// Covariance of `(vech ∇²X(0), X(0))`.
fn single_point_covariance(model: &RadialModel) -> Result<DMatrix<f64>> {
    let n = model.n_dim;
    let nh = sym_len(n);
    let zero = vec![0.0; n];
    let pairs: Vec<(usize, usize)> = (0..n).flat_map(|j| (0..=j).map(move |i| (i, j))).collect();
    let mut s = DMatrix::zeros(nh + 1, nh + 1);
    for (a, &(i, j)) in pairs.iter().enumerate() {
        for (b, &(k, l)) in pairs.iter().enumerate() {
            s[(a, b)] = cov_partials(model, &zero, &[i, j, k, l])?;
        }
        let c = cov_partials(model, &zero, &[i, j])?;
        s[(a, nh)] = c;
        s[(nh, a)] = c;
    }
    s[(nh, nh)] = model.rho(0.0);
    Ok(s)
}

/// Shared-sample sums for the unconditional expected number of index-`k`
/// critical points above `u_thr` per unit volume.
pub fn critical_sums(model: &RadialModel, u_thr: f64, cfg: &McConfig) -> Result<RiceSums> {
    if !u_thr.is_finite() {
        return Err(Error::Domain(format!(
            "threshold must be finite, got {u_thr}"
        )));
    }
    let n = model.n_dim;
    let sigma = single_point_covariance(model)?;
    let law = Law::new(&sigma, sym_len(n), u_thr, cfg.sampler)?;
    let acc = run_law(&law, n, cfg)?;
    Ok(RiceSums {
        n_dim: n,
        r: None,
        u_threshold: u_thr,
        seed: cfg.seed,
        units: acc.units,
        sum: acc.sum,
        cross: acc.cross,
        degenerate: acc.degenerate,
        prefactor: gradient_density_at_zero(model),
    })
}

/// Expected number of index-`k` critical points above `u_thr` per unit
/// volume.
pub fn critical_density_mc(
    model: &RadialModel,
    u_thr: f64,
    k: usize,
    cfg: &McConfig,
) -> Result<RiceEstimate> {
    Ok(critical_sums(model, u_thr, cfg)?.density(k))
}
