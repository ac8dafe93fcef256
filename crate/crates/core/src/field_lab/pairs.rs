//! Type composition of closely paired critical points.

use super::critical::CriticalPoint;
use serde::{Deserialize, Serialize};

/// Counts over unordered pairs of critical points closer than `eps`.
///
/// `counts[a][b]` (with `a ≤ b`) is the number of pairs whose indices are
/// `a` and `b`; entries below the diagonal stay zero.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairTable {
    pub eps: f64,
    pub n_dim: usize,
    pub pairs: usize,
    pub counts: Vec<Vec<usize>>,
    /// Pairs whose Hessian determinants have opposite signs.
    pub opposite_det: usize,
}

impl PairTable {
    pub fn empty(eps: f64, n_dim: usize) -> Self {
        PairTable {
            eps,
            n_dim,
            pairs: 0,
            counts: vec![vec![0; n_dim + 1]; n_dim + 1],
            opposite_det: 0,
        }
    }

    fn record(&mut self, a: &CriticalPoint, b: &CriticalPoint) {
        let (lo, hi) = if a.index <= b.index {
            (a.index, b.index)
        } else {
            (b.index, a.index)
        };
        self.pairs += 1;
        self.counts[lo][hi] += 1;
        if a.det * b.det < 0.0 {
            self.opposite_det += 1;
        }
    }

    /// Number of pairs with indices `a` and `b` (in either order).
    pub fn count(&self, a: usize, b: usize) -> usize {
        self.counts[a.min(b)][a.max(b)]
    }

    fn fraction(&self, k: usize) -> Option<f64> {
        (self.pairs > 0).then(|| k as f64 / self.pairs as f64)
    }

    /// Fraction of pairs made of a maximum and an index-`N−1` point.
    pub fn max_saddle_fraction(&self) -> Option<f64> {
        self.fraction(self.count(self.n_dim, self.n_dim - 1))
    }

    /// Fraction of pairs made of two maxima.
    pub fn max_max_fraction(&self) -> Option<f64> {
        self.fraction(self.count(self.n_dim, self.n_dim))
    }

    /// Fraction of pairs with opposite-sign Hessian determinants.
    pub fn opposite_det_fraction(&self) -> Option<f64> {
        self.fraction(self.opposite_det)
    }

    /// Add the counts of another table with the same `eps` and dimension.
    pub fn merge(&mut self, other: &PairTable) {
        assert_eq!(
            self.n_dim, other.n_dim,
            "merging tables of different dimension"
        );
        self.pairs += other.pairs;
        self.opposite_det += other.opposite_det;
        for (row, other_row) in self.counts.iter_mut().zip(&other.counts) {
            for (c, o) in row.iter_mut().zip(other_row) {
                *c += o;
            }
        }
    }
}

fn tabulate(
    points: &[CriticalPoint],
    eps: f64,
    dist: impl Fn(&[f64; 2], &[f64; 2]) -> f64,
) -> PairTable {
    let mut table = PairTable::empty(eps, 2);
    for (k, a) in points.iter().enumerate() {
        for b in &points[k + 1..] {
            if dist(&a.position, &b.position) < eps {
                table.record(a, b);
            }
        }
    }
    table
}

/// Pairs closer than `eps` in the plane.
pub fn pair_statistics(points: &[CriticalPoint], eps: f64) -> PairTable {
    tabulate(points, eps, |a, b| (a[0] - b[0]).hypot(a[1] - b[1]))
}

/// Pairs closer than `eps` on the square torus of side `period`.
pub fn pair_statistics_periodic(points: &[CriticalPoint], eps: f64, period: f64) -> PairTable {
    let wrap = |d: f64| {
        let d = d.rem_euclid(period);
        d.min(period - d)
    };
    tabulate(points, eps, |a, b| {
        wrap(a[0] - b[0]).hypot(wrap(a[1] - b[1]))
    })
}
