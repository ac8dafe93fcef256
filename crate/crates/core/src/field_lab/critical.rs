//! Critical points of the periodic interpolant.
//!
//! Each grid cell is handled in Bézier form. A sub-box is discarded when a
//! gradient component has control points of one strict sign. Otherwise it is
//! split until the Hessian varies little enough over the box to guarantee at
//! most one zero of the gradient (`‖H(c)⁻¹‖·‖H(x) − H(c)‖ < ½` for all
//! `x` in the box, bounded through the Bézier nets of the second
//! derivatives). Newton's method is then started from the box centre.

use super::sample::FieldRealization;
use super::spline::{PeriodicSpline, SplineJet};
use crate::rice_mc::hessian_index;
use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

/// A converged critical point of the interpolant.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CriticalPoint {
    pub position: [f64; 2],
    pub value: f64,
    pub grad_norm: f64,
    /// `(∂xx, ∂xy, ∂yy)`.
    pub hessian: [f64; 3],
    /// Number of negative Hessian eigenvalues (2 = local maximum).
    pub index: usize,
    pub det: f64,
}

/// Work counters of a search.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct SearchDiagnostics {
    /// Cells whose gradient nets both change sign.
    pub cells_flagged: usize,
    /// Boxes on which Newton's method was started.
    pub newton_starts: usize,
    /// Starts that did not converge inside their box (no zero there).
    pub newton_left_box: usize,
    /// Starts that neither converged nor left the box; such boxes are
    /// skipped.
    pub newton_failures: usize,
    /// Boxes at the depth limit without a uniqueness certificate.
    pub uncertified_boxes: usize,
    /// Converged points discarded as duplicates.
    pub duplicates: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CriticalSearch {
    pub points: Vec<CriticalPoint>,
    pub diagnostics: SearchDiagnostics,
}

/// `#max − #saddle + #min` (generally `Σ (−1)^index`).
pub fn euler_count(points: &[CriticalPoint]) -> i64 {
    points
        .iter()
        .map(|p| if p.index % 2 == 0 { 1 } else { -1 })
        .sum()
}

const MAX_DEPTH: u32 = 12;
const GRAD_TOL: f64 = 1e-11;
const DEDUPE_FRACTION: f64 = 1e-6;

type Net = Vec<Vec<f64>>;

/// Split Bernstein coefficients at `t`, returning the two halves.
fn de_casteljau(c: &[f64], t: f64) -> (Vec<f64>, Vec<f64>) {
    let n = c.len();
    let mut work = c.to_vec();
    let mut left = Vec::with_capacity(n);
    let mut right = vec![0.0; n];
    left.push(work[0]);
    right[n - 1] = work[n - 1];
    for k in 1..n {
        for i in 0..n - k {
            work[i] = (1.0 - t) * work[i] + t * work[i + 1];
        }
        left.push(work[0]);
        right[n - 1 - k] = work[n - 1 - k];
    }
    (left, right)
}

/// Bernstein coefficients of the restriction to `[a, b] ⊂ [0, 1]`.
fn restrict(c: &[f64], a: f64, b: f64) -> Vec<f64> {
    let (left, _) = de_casteljau(c, b);
    if a == 0.0 {
        return left;
    }
    de_casteljau(&left, a / b).1
}

fn restrict_net(net: &Net, sx: (f64, f64), sy: (f64, f64)) -> Net {
    let rows: Net = net.iter().map(|row| restrict(row, sy.0, sy.1)).collect();
    let cols = rows[0].len();
    let mut out = vec![vec![0.0; cols]; rows.len()];
    for b in 0..cols {
        let column: Vec<f64> = rows.iter().map(|r| r[b]).collect();
        for (a, v) in restrict(&column, sx.0, sx.1).into_iter().enumerate() {
            out[a][b] = v;
        }
    }
    out
}

fn range(net: &Net) -> (f64, f64) {
    net.iter()
        .flatten()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| {
            (lo.min(v), hi.max(v))
        })
}

fn one_signed(net: &Net) -> bool {
    let (lo, hi) = range(net);
    lo > 0.0 || hi < 0.0
}

/// Local-coordinate derivative nets of one cell.
struct CellNets {
    gx: Net,
    gy: Net,
    hxx: Net,
    hxy: Net,
    hyy: Net,
}

impl CellNets {
    fn new(p: &[[f64; 4]; 4]) -> Self {
        let gx = (0..3)
            .map(|a| (0..4).map(|b| 3.0 * (p[a + 1][b] - p[a][b])).collect())
            .collect();
        let gy = (0..4)
            .map(|a| (0..3).map(|b| 3.0 * (p[a][b + 1] - p[a][b])).collect())
            .collect();
        let hxx = (0..2)
            .map(|a| {
                (0..4)
                    .map(|b| 6.0 * (p[a + 2][b] - 2.0 * p[a + 1][b] + p[a][b]))
                    .collect()
            })
            .collect();
        let hyy = (0..4)
            .map(|a| {
                (0..2)
                    .map(|b| 6.0 * (p[a][b + 2] - 2.0 * p[a][b + 1] + p[a][b]))
                    .collect()
            })
            .collect();
        let hxy = (0..3)
            .map(|a| {
                (0..3)
                    .map(|b| 9.0 * (p[a + 1][b + 1] - p[a + 1][b] - p[a][b + 1] + p[a][b]))
                    .collect()
            })
            .collect();
        CellNets {
            gx,
            gy,
            hxx,
            hxy,
            hyy,
        }
    }
}

fn torus_delta(a: f64, b: f64, period: f64) -> f64 {
    let d = (a - b).rem_euclid(period);
    d.min(period - d)
}

fn solve2(h: &[f64; 3], g: &[f64; 2]) -> Option<[f64; 2]> {
    let det = h[0] * h[2] - h[1] * h[1];
    if det == 0.0 || !det.is_finite() {
        return None;
    }
    Some([
        (h[2] * g[0] - h[1] * g[1]) / det,
        (h[0] * g[1] - h[1] * g[0]) / det,
    ])
}

enum Newton {
    Converged([f64; 2], SplineJet),
    LeftBox,
    Failed,
}

/// Simplified Newton with the centre Hessian (a contraction on certified
/// boxes), followed by full Newton polishing. `half` is the box half-width
/// in physical units.
fn newton(spline: &PeriodicSpline, centre: [f64; 2], half: [f64; 2], h_c: &[f64; 3]) -> Newton {
    let mut x = centre;
    let inside = |x: &[f64; 2]| {
        (x[0] - centre[0]).abs() <= 2.0 * half[0] + 1e-12
            && (x[1] - centre[1]).abs() <= 2.0 * half[1] + 1e-12
    };
    for _ in 0..60 {
        let jet = spline.eval(x[0], x[1]);
        let g = jet.grad;
        if g[0].hypot(g[1]) < GRAD_TOL {
            return Newton::Converged(x, jet);
        }
        let Some(step) = solve2(h_c, &g) else {
            return Newton::Failed;
        };
        x = [x[0] - step[0], x[1] - step[1]];
        if !inside(&x) {
            return Newton::LeftBox;
        }
    }
    for _ in 0..8 {
        let jet = spline.eval(x[0], x[1]);
        if jet.grad[0].hypot(jet.grad[1]) < GRAD_TOL {
            return Newton::Converged(x, jet);
        }
        let Some(step) = solve2(&jet.hess, &jet.grad) else {
            return Newton::Failed;
        };
        x = [x[0] - step[0], x[1] - step[1]];
        if !inside(&x) {
            return Newton::LeftBox;
        }
    }
    Newton::Failed
}

fn search_cell(
    spline: &PeriodicSpline,
    i: usize,
    j: usize,
    found: &mut Vec<([f64; 2], SplineJet)>,
    diag: &mut SearchDiagnostics,
) {
    let nets = CellNets::new(&spline.cell_net(i, j));
    if one_signed(&nets.gx) || one_signed(&nets.gy) {
        return;
    }
    diag.cells_flagged += 1;
    let h = spline.h();
    let mut stack = vec![((0.0, 1.0), (0.0, 1.0), 0u32)];
    while let Some((sx, sy, depth)) = stack.pop() {
        if depth > 0
            && (one_signed(&restrict_net(&nets.gx, sx, sy))
                || one_signed(&restrict_net(&nets.gy, sx, sy)))
        {
            continue;
        }
        let centre_local = [0.5 * (sx.0 + sx.1), 0.5 * (sy.0 + sy.1)];
        let centre = [
            (i as f64 + centre_local[0]) * h,
            (j as f64 + centre_local[1]) * h,
        ];
        let jet = spline.eval(centre[0], centre[1]);
        // Hessian in local (cell) units and its variation over the box.
        let hc = [
            jet.hess[0] * h * h,
            jet.hess[1] * h * h,
            jet.hess[2] * h * h,
        ];
        let dev = |net: &Net, c: f64| {
            let (lo, hi) = range(&restrict_net(net, sx, sy));
            (hi - c).abs().max((c - lo).abs())
        };
        let (exx, exy, eyy) = (
            dev(&nets.hxx, hc[0]),
            dev(&nets.hxy, hc[1]),
            dev(&nets.hyy, hc[2]),
        );
        let variation = (exx * exx + 2.0 * exy * exy + eyy * eyy).sqrt();
        let m = DMatrix::from_row_slice(2, 2, &[hc[0], hc[1], hc[1], hc[2]]);
        let smallest = m
            .symmetric_eigenvalues()
            .iter()
            .fold(f64::INFINITY, |a, v| a.min(v.abs()));
        let certified = smallest > 0.0 && variation < 0.5 * smallest;
        if !certified && depth < MAX_DEPTH {
            let (mx, my) = (centre_local[0], centre_local[1]);
            for qx in [(sx.0, mx), (mx, sx.1)] {
                for qy in [(sy.0, my), (my, sy.1)] {
                    stack.push((qx, qy, depth + 1));
                }
            }
            continue;
        }
        if !certified {
            diag.uncertified_boxes += 1;
        }
        diag.newton_starts += 1;
        let half = [0.5 * (sx.1 - sx.0) * h, 0.5 * (sy.1 - sy.0) * h];
        match newton(spline, centre, half, &jet.hess) {
            Newton::Converged(x, jet) => found.push((x, jet)),
            Newton::LeftBox => diag.newton_left_box += 1,
            Newton::Failed => diag.newton_failures += 1,
        }
    }
}

/// Critical points of the interpolant of a field with value above `u_thr`.
pub fn find_critical_points(field: &FieldRealization, u_thr: f64) -> CriticalSearch {
    find_critical_points_of(&PeriodicSpline::new(field), u_thr)
}

/// As [`find_critical_points`], for an existing interpolant.
pub fn find_critical_points_of(spline: &PeriodicSpline, u_thr: f64) -> CriticalSearch {
    let m = spline.m();
    let period = spline.extent();
    let mut diag = SearchDiagnostics::default();
    let mut found = Vec::new();
    for j in 0..m {
        for i in 0..m {
            search_cell(spline, i, j, &mut found, &mut diag);
        }
    }
    let radius = DEDUPE_FRACTION * spline.h();
    let mut points: Vec<CriticalPoint> = Vec::with_capacity(found.len());
    for (x, jet) in found {
        let position = [x[0].rem_euclid(period), x[1].rem_euclid(period)];
        let duplicate = points.iter().any(|p| {
            torus_delta(p.position[0], position[0], period) < radius
                && torus_delta(p.position[1], position[1], period) < radius
        });
        if duplicate {
            diag.duplicates += 1;
            continue;
        }
        let hm =
            DMatrix::from_row_slice(2, 2, &[jet.hess[0], jet.hess[1], jet.hess[1], jet.hess[2]]);
        let class = hessian_index(&hm);
        points.push(CriticalPoint {
            position,
            value: jet.value,
            grad_norm: jet.grad[0].hypot(jet.grad[1]),
            hessian: jet.hess,
            index: class.index,
            det: class.det,
        });
    }
    points.retain(|p| p.value > u_thr);
    points.sort_by(|a, b| {
        a.position[1]
            .total_cmp(&b.position[1])
            .then(a.position[0].total_cmp(&b.position[0]))
    });
    CriticalSearch {
        points,
        diagnostics: diag,
    }
}
