//! Exact simulation on the torus by circulant embedding.

use crate::covariance_core::{ModelFamily, RadialModel};
use crate::error::{Error, Result};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rustfft::num_complex::Complex;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

/// A square periodic grid of `m × m` points with spacing `h`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    pub m: usize,
    pub h: f64,
}

impl Grid {
    pub fn new(m: usize, h: f64) -> Self {
        Grid { m, h }
    }

    pub fn extent(&self) -> f64 {
        self.m as f64 * self.h
    }
}

impl Default for Grid {
    /// 256 × 256 points with spacing 1/8 (extent 32).
    fn default() -> Self {
        Grid { m: 256, h: 0.125 }
    }
}

/// A sampled field on the periodic grid; `values[j * m + i]` is the value at
/// `(i h, j h)`.
#[derive(Debug, Clone, PartialEq)]
pub struct FieldRealization {
    pub n_dim: usize,
    pub grid: Grid,
    pub values: Vec<f64>,
    pub model: String,
    pub family: Option<ModelFamily>,
    pub seed: u64,
}

impl FieldRealization {
    pub fn extent(&self) -> f64 {
        self.grid.extent()
    }

    pub fn value(&self, i: usize, j: usize) -> f64 {
        self.values[j * self.grid.m + i]
    }
}

/// In-place 2-D FFT of an `m × m` row-major array.
pub(crate) fn fft2(data: &mut [Complex<f64>], m: usize, inverse: bool) {
    let mut planner = FftPlanner::new();
    let fft = if inverse {
        planner.plan_fft_inverse(m)
    } else {
        planner.plan_fft_forward(m)
    };
    for row in data.chunks_mut(m) {
        fft.process(row);
    }
    let mut column = vec![Complex::new(0.0, 0.0); m];
    for i in 0..m {
        for j in 0..m {
            column[j] = data[j * m + i];
        }
        fft.process(&mut column);
        for j in 0..m {
            data[j * m + i] = column[j];
        }
    }
}

/// Eigenvalues of the block-circulant covariance of the torus field.
fn circulant_spectrum(model: &RadialModel, grid: Grid) -> Vec<f64> {
    let m = grid.m;
    let lag = |k: usize| k.min(m - k) as f64 * grid.h;
    let mut c: Vec<Complex<f64>> = (0..m * m)
        .map(|idx| {
            let (i, j) = (idx % m, idx / m);
            let (dx, dy) = (lag(i), lag(j));
            Complex::new(model.rho(dx * dx + dy * dy), 0.0)
        })
        .collect();
    fft2(&mut c, m, false);
    c.iter().map(|z| z.re).collect()
}

/// Sample a stationary field with covariance `ρ(‖s − t‖²)` (distances taken
/// on the torus). If the embedding has eigenvalues below `−1e−10·max`, the
/// grid is doubled, at most twice.
pub fn sample_field(model: &RadialModel, grid: Grid, seed: u64) -> Result<FieldRealization> {
    if model.n_dim != 2 {
        return Err(Error::Domain(format!(
            "the field simulator is two-dimensional, model has N = {}",
            model.n_dim
        )));
    }
    if grid.m < 4 || !(grid.h > 0.0) {
        return Err(Error::Domain(format!("invalid grid {grid:?}")));
    }
    let needed = 8.0 * model.correlation_length();
    if grid.extent() < needed {
        return Err(Error::Domain(format!(
            "grid extent {} is below 8 correlation lengths ({needed})",
            grid.extent()
        )));
    }
    let mut grid = grid;
    let mut spectrum = circulant_spectrum(model, grid);
    for attempt in 0..=2 {
        let max = spectrum.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let min = spectrum.iter().copied().fold(f64::INFINITY, f64::min);
        if min >= -1e-10 * max {
            break;
        }
        if attempt == 2 {
            return Err(Error::Embedding(format!(
                "smallest eigenvalue {min:e} (largest {max:e}) on a {} × {} grid",
                grid.m, grid.m
            )));
        }
        grid.m *= 2;
        spectrum = circulant_spectrum(model, grid);
    }
    let m = grid.m;
    let total = (m * m) as f64;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut z: Vec<Complex<f64>> = spectrum
        .iter()
        .map(|&lambda| {
            let s = (lambda.max(0.0) / total).sqrt();
            let re: f64 = rng.sample(StandardNormal);
            let im: f64 = rng.sample(StandardNormal);
            Complex::new(s * re, s * im)
        })
        .collect();
    fft2(&mut z, m, false);
    Ok(FieldRealization {
        n_dim: 2,
        grid,
        values: z.iter().map(|v| v.re).collect(),
        model: model.label(),
        family: if model.scale == 1.0 {
            model.profile.family()
        } else {
            None
        },
        seed,
    })
}
