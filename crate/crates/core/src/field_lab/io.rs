//! Persistence of fields (flat little-endian `f64` + JSON sidecar) and CSV
//! tables of critical points and pair statistics.

use super::critical::CriticalPoint;
use super::pairs::PairTable;
use super::sample::{FieldRealization, Grid};
use crate::covariance_core::ModelFamily;
use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

/// Metadata stored next to a binary field array.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FieldSidecar {
    pub extent: f64,
    pub h: f64,
    pub m: usize,
    pub seed: u64,
    pub model: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub family: Option<ModelFamily>,
}

fn io_err(path: &Path, e: impl std::fmt::Display) -> Error {
    Error::Io(format!("{}: {e}", path.display()))
}

fn sidecar_path(path: &Path) -> PathBuf {
    let mut name = path.as_os_str().to_owned();
    name.push(".json");
    PathBuf::from(name)
}

/// Write `field` to `path` (raw values, row-major) and `path.json`.
pub fn write_field(field: &FieldRealization, path: &Path) -> Result<()> {
    let bytes: Vec<u8> = field.values.iter().flat_map(|v| v.to_le_bytes()).collect();
    fs::write(path, bytes).map_err(|e| io_err(path, e))?;
    let sidecar = FieldSidecar {
        extent: field.extent(),
        h: field.grid.h,
        m: field.grid.m,
        seed: field.seed,
        model: field.model.clone(),
        family: field.family,
    };
    let side = sidecar_path(path);
    let json = serde_json::to_string_pretty(&sidecar).map_err(|e| io_err(&side, e))?;
    fs::write(&side, json).map_err(|e| io_err(&side, e))
}

/// Read a field written by [`write_field`].
pub fn read_field(path: &Path) -> Result<FieldRealization> {
    let side = sidecar_path(path);
    let text = fs::read_to_string(&side).map_err(|e| io_err(&side, e))?;
    let sidecar: FieldSidecar = serde_json::from_str(&text).map_err(|e| io_err(&side, e))?;
    let bytes = fs::read(path).map_err(|e| io_err(path, e))?;
    if bytes.len() != 8 * sidecar.m * sidecar.m {
        return Err(io_err(
            path,
            format!(
                "expected {} values, found {} bytes",
                sidecar.m * sidecar.m,
                bytes.len()
            ),
        ));
    }
    let values = bytes
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().expect("chunk of 8 bytes")))
        .collect();
    Ok(FieldRealization {
        n_dim: 2,
        grid: Grid::new(sidecar.m, sidecar.h),
        values,
        model: sidecar.model,
        family: sidecar.family,
        seed: sidecar.seed,
    })
}

#[derive(Serialize)]
struct PointRow {
    x: f64,
    y: f64,
    value: f64,
    grad_norm: f64,
    hxx: f64,
    hxy: f64,
    hyy: f64,
    index: usize,
}

/// CSV with one row per critical point.
pub fn write_critical_points_csv<W: Write>(points: &[CriticalPoint], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for p in points {
        w.serialize(PointRow {
            x: p.position[0],
            y: p.position[1],
            value: p.value,
            grad_norm: p.grad_norm,
            hxx: p.hessian[0],
            hxy: p.hessian[1],
            hyy: p.hessian[2],
            index: p.index,
        })
        .map_err(|e| Error::Io(e.to_string()))?;
    }
    w.flush().map_err(|e| Error::Io(e.to_string()))
}

#[derive(Serialize)]
struct PairRow {
    pair: String,
    count: usize,
    fraction: Option<f64>,
}

/// CSV with one row per index pair (`"a-b"`, `a ≤ b`) and a final
/// `opposite_det` row counting pairs with opposite-sign determinants.
pub fn write_pair_table_csv<W: Write>(table: &PairTable, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let fraction = |count: usize| (table.pairs > 0).then(|| count as f64 / table.pairs as f64);
    let mut rows = Vec::new();
    for a in 0..=table.n_dim {
        for b in a..=table.n_dim {
            rows.push((format!("{a}-{b}"), table.count(a, b)));
        }
    }
    rows.push(("opposite_det".to_string(), table.opposite_det));
    for (pair, count) in rows {
        w.serialize(PairRow {
            pair,
            count,
            fraction: fraction(count),
        })
        .map_err(|e| Error::Io(e.to_string()))?;
    }
    w.flush().map_err(|e| Error::Io(e.to_string()))
}
