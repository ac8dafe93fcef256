//! Periodic bicubic B-spline interpolation on a square grid.

use super::sample::{fft2, FieldRealization};
use rustfft::num_complex::Complex;
use std::f64::consts::PI;

/// Value, gradient and Hessian `(xx, xy, yy)` of the interpolant.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SplineJet {
    pub value: f64,
    pub grad: [f64; 2],
    pub hess: [f64; 3],
}

/// `C²` periodic interpolant `f(x, y) = Σ c_{ij} β(x/h − i) β(y/h − j)`
/// with the cubic B-spline `β`.
#[derive(Debug, Clone)]
pub struct PeriodicSpline {
    m: usize,
    h: f64,
    coef: Vec<f64>,
}

/// Uniform cubic B-spline weights on a segment and their first two
/// derivatives, at local coordinate `s ∈ [0, 1]`.
fn basis(s: f64) -> ([f64; 4], [f64; 4], [f64; 4]) {
    let s2 = s * s;
    let s3 = s2 * s;
    let t = 1.0 - s;
    let w = [
        t * t * t / 6.0,
        (3.0 * s3 - 6.0 * s2 + 4.0) / 6.0,
        (-3.0 * s3 + 3.0 * s2 + 3.0 * s + 1.0) / 6.0,
        s3 / 6.0,
    ];
    let d = [
        -0.5 * t * t,
        1.5 * s2 - 2.0 * s,
        -1.5 * s2 + s + 0.5,
        0.5 * s2,
    ];
    let dd = [t, 3.0 * s - 2.0, -3.0 * s + 1.0, s];
    (w, d, dd)
}

/// B-spline to Bézier control points on one segment.
const TO_BEZIER: [[f64; 4]; 4] = [
    [1.0 / 6.0, 4.0 / 6.0, 1.0 / 6.0, 0.0],
    [0.0, 4.0 / 6.0, 2.0 / 6.0, 0.0],
    [0.0, 2.0 / 6.0, 4.0 / 6.0, 0.0],
    [0.0, 1.0 / 6.0, 4.0 / 6.0, 1.0 / 6.0],
];

impl PeriodicSpline {
    /// Interpolate the grid values: the coefficients solve the periodic
    /// convolution `values = c ∗ (1, 4, 1)/6` along both axes, by division
    /// of Fourier symbols `(4 + 2 cos ω)/6`.
    pub fn new(field: &FieldRealization) -> Self {
        let m = field.grid.m;
        let mut data: Vec<Complex<f64>> =
            field.values.iter().map(|&v| Complex::new(v, 0.0)).collect();
        let symbol: Vec<f64> = (0..m)
            .map(|k| (4.0 + 2.0 * (2.0 * PI * k as f64 / m as f64).cos()) / 6.0)
            .collect();
        fft2(&mut data, m, false);
        for j in 0..m {
            for i in 0..m {
                data[j * m + i] /= symbol[i] * symbol[j];
            }
        }
        fft2(&mut data, m, true);
        let scale = 1.0 / (m * m) as f64;
        PeriodicSpline {
            m,
            h: field.grid.h,
            coef: data.iter().map(|z| z.re * scale).collect(),
        }
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn h(&self) -> f64 {
        self.h
    }

    pub fn extent(&self) -> f64 {
        self.m as f64 * self.h
    }

    fn c(&self, i: isize, j: isize) -> f64 {
        let m = self.m as isize;
        self.coef[(j.rem_euclid(m) * m + i.rem_euclid(m)) as usize]
    }

    /// Cell index and local coordinate along one axis.
    fn locate(&self, x: f64) -> (isize, f64) {
        let u = (x / self.h).rem_euclid(self.m as f64);
        let i = u.floor();
        let i = (i as isize).min(self.m as isize - 1);
        (i, u - i as f64)
    }

    /// Value and derivatives at a point (any real coordinates; periodic).
    pub fn eval(&self, x: f64, y: f64) -> SplineJet {
        let (i, s) = self.locate(x);
        let (j, t) = self.locate(y);
        let (wx, dx, ddx) = basis(s);
        let (wy, dy, ddy) = basis(t);
        let mut out = [0.0; 6];
        for b in 0..4 {
            for a in 0..4 {
                let c = self.c(i - 1 + a as isize, j - 1 + b as isize);
                out[0] += c * wx[a] * wy[b];
                out[1] += c * dx[a] * wy[b];
                out[2] += c * wx[a] * dy[b];
                out[3] += c * ddx[a] * wy[b];
                out[4] += c * dx[a] * dy[b];
                out[5] += c * wx[a] * ddy[b];
            }
        }
        let (h1, h2) = (1.0 / self.h, 1.0 / (self.h * self.h));
        SplineJet {
            value: out[0],
            grad: [out[1] * h1, out[2] * h1],
            hess: [out[3] * h2, out[4] * h2, out[5] * h2],
        }
    }

    /// Bézier control net `P[a][b]` of cell `(i, j)` in local coordinates
    /// (`a` along x).
    pub(crate) fn cell_net(&self, i: usize, j: usize) -> [[f64; 4]; 4] {
        let mut c = [[0.0; 4]; 4];
        for (a, row) in c.iter_mut().enumerate() {
            for (b, v) in row.iter_mut().enumerate() {
                *v = self.c(i as isize - 1 + a as isize, j as isize - 1 + b as isize);
            }
        }
        let mut tmp = [[0.0; 4]; 4];
        for a in 0..4 {
            for b in 0..4 {
                tmp[a][b] = (0..4).map(|k| TO_BEZIER[a][k] * c[k][b]).sum();
            }
        }
        let mut p = [[0.0; 4]; 4];
        for a in 0..4 {
            for b in 0..4 {
                p[a][b] = (0..4).map(|k| tmp[a][k] * TO_BEZIER[b][k]).sum();
            }
        }
        p
    }
}
