//! Empirical check on simulated fields: sample stationary isotropic fields on
//! a periodic grid, locate and classify the critical points of a smooth
//! interpolant, and tabulate the types of closely paired critical points.

mod critical;
mod io;
mod pairs;
mod sample;
mod spline;

pub use critical::{
    euler_count, find_critical_points, find_critical_points_of, CriticalPoint, CriticalSearch,
    SearchDiagnostics,
};
pub use io::{
    read_field, write_critical_points_csv, write_field, write_pair_table_csv, FieldSidecar,
};
pub use pairs::{pair_statistics, pair_statistics_periodic, PairTable};
pub use sample::{sample_field, FieldRealization, Grid};
pub use spline::{PeriodicSpline, SplineJet};
