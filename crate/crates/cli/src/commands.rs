//! Command implementations. Each builds an [`Artifact`] from the resolved
//! configuration; numerical contract violations are reported after the
//! artifact has been written.

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde_json::{json, Map, Value};
use std::time::Instant;

use critfield::covariance_core::{
    check_qualified, conditional_covariance, conditional_covariance_oracle, find_rescaling,
    reference_direction, rescale, sigma_expansion, RadialModel,
};
use critfield::eigen_structure::{eigenpath, limit_polynomial, spectrum_sigma0, DEFAULT_R_GRID};
use critfield::field_lab::{
    euler_count, find_critical_points, pair_statistics_periodic, sample_field,
    write_critical_points_csv, write_field, write_pair_table_csv, Grid, PairTable,
};
use critfield::rice_mc::{maxima_share_with, psi_ratio_with, sign_ratio_with, RiceEstimate};
use critfield::Error;

use crate::config::RunConfig;
use crate::output::{emit, Artifact};
use crate::{Command, Failure};

/// Tolerance of `sigma --verify`.
const ORACLE_TOLERANCE: f64 = 1e-8;
/// Tolerance of the `hpoly` antisymmetry residual.
const ANTISYMMETRY_TOLERANCE: f64 = 1e-8;
const ANTISYMMETRY_SAMPLES: usize = 10_000;

fn object(value: Value) -> Map<String, Value> {
    match value {
        Value::Object(map) => map,
        _ => unreachable!("rows are JSON objects"),
    }
}

/// Outcome of a command: the artifact and an optional contract failure.
type Outcome = Result<(Artifact, Option<Failure>), Failure>;

pub fn run(config: &RunConfig) -> Result<(), Failure> {
    let start = Instant::now();
    let (artifact, failure) = match config.command {
        Command::Check => check(config)?,
        Command::Sigma => sigma(config)?,
        Command::Spectrum => spectrum(config)?,
        Command::Hpoly => hpoly(config)?,
        Command::Ratio | Command::Psi | Command::Share => sweep(config)?,
        Command::Simulate => simulate(config)?,
        Command::Report => report(config)?,
    };
    emit(config, &artifact, start.elapsed().as_millis())?;
    failure.map_or(Ok(()), Err)
}

fn check(config: &RunConfig) -> Outcome {
    let model = config.model()?;
    let report = check_qualified(&model);
    let rows = report
        .checks
        .iter()
        .map(|c| object(json!({"check": c.name, "passed": c.passed, "value": c.value, "description": c.description})))
        .collect();
    let failure = (!report.overall_pass).then(|| {
        Failure::Numerical(format!(
            "model is not qualified: {}",
            report.failed().join(", ")
        ))
    });
    Ok((
        Artifact {
            rows,
            details: json!({"model": model.describe(), "report": report}),
        },
        failure,
    ))
}

fn sigma(config: &RunConfig) -> Outcome {
    let model = config.model()?;
    let u0 = reference_direction(model.n_dim);
    let mut rows = Vec::new();
    let mut matrices = Vec::new();
    let mut worst: Option<(f64, f64, usize, usize)> = None;
    for &r in &config.sweep.r {
        let cond = conditional_covariance(&model, r, &u0)?;
        let mut row = json!({"r": r, "L": cond.l, "log_det_v22": cond.log_det_v22});
        if config.verify {
            let oracle = conditional_covariance_oracle(&model, r, &u0)?;
            let mut max = (0.0, 0, 0);
            for i in 0..cond.l {
                for j in 0..cond.l {
                    let d = (cond.sigma[(i, j)] - oracle.sigma[(i, j)]).abs();
                    if d > max.0 || d.is_nan() {
                        max = (d, i, j);
                    }
                }
            }
            row["max_abs_diff"] = json!(max.0);
            row["location"] = json!([max.1, max.2]);
            if worst.is_none_or(|w| max.0 > w.0 || max.0.is_nan()) {
                worst = Some((max.0, r, max.1, max.2));
            }
        }
        rows.push(object(row));
        matrices.push(cond.to_json());
    }
    let expansion = sigma_expansion(&model, &u0)?;
    let failure = worst.filter(|w| !(w.0 < ORACLE_TOLERANCE)).map(|(d, r, i, j)| {
        Failure::Numerical(format!(
            "oracle mismatch: max |Σ − Σ_oracle| = {d:e} at entry ({i}, {j}) for r = {r} (tolerance {ORACLE_TOLERANCE:e})"
        ))
    });
    let details =
        json!({"model": model.describe(), "sigma": matrices, "expansion": expansion.to_json()});
    Ok((Artifact { rows, details }, failure))
}

/// The model itself, or its rescaling when the small eigenvalue of Σ₀
/// collides with a fixed one.
fn spectral_model(model: &RadialModel) -> Result<(RadialModel, f64), Failure> {
    match spectrum_sigma0(model) {
        Err(Error::MultiplicityCollision { .. }) => {
            let c = find_rescaling(model);
            Ok((rescale(model, c)?, c))
        }
        Err(e) => Err(e.into()),
        Ok(_) => Ok((model.clone(), 1.0)),
    }
}

fn spectrum(config: &RunConfig) -> Outcome {
    let (model, rescaled_by) = spectral_model(&config.model()?)?;
    let catalogue = spectrum_sigma0(&model)?;
    let u0 = reference_direction(model.n_dim);
    let path = eigenpath(&model, &u0, &DEFAULT_R_GRID)?;
    let rows = catalogue
        .entries
        .iter()
        .map(|e| {
            object(json!({"label": e.label, "value": e.value, "multiplicity": e.multiplicity}))
        })
        .collect();
    let details = json!({
        "model": model.describe(),
        "rescaled_by": rescaled_by,
        "catalogue": catalogue,
        "expansion": path.to_json(),
    });
    Ok((Artifact { rows, details }, None))
}

fn hpoly(config: &RunConfig) -> Outcome {
    let (model, rescaled_by) = spectral_model(&config.model()?)?;
    let poly = limit_polynomial(&model, &reference_direction(model.n_dim))?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.mc.seed);
    let mut residual: f64 = 0.0;
    for _ in 0..ANTISYMMETRY_SAMPLES {
        let y: Vec<f64> = (0..poly.l)
            .map(|_| StandardNormal.sample(&mut rng))
            .collect();
        let h = poly.evaluate_monomials(&y);
        let flipped = poly.evaluate_monomials(&poly.flip(&y));
        residual = residual.max((h + flipped).abs() / (1.0 + h.abs()));
    }
    let rows = poly
        .coefficients
        .iter()
        .map(|(monomial, c)| {
            let name: Vec<String> = monomial.iter().map(|i| format!("y{}", i + 1)).collect();
            object(json!({"monomial": name.join("*"), "coefficient": c}))
        })
        .collect();
    let failure = (!(residual < ANTISYMMETRY_TOLERANCE)).then(|| {
        Failure::Numerical(format!(
            "h₀ antisymmetry residual {residual:e} exceeds {ANTISYMMETRY_TOLERANCE:e}"
        ))
    });
    let details = json!({
        "model": model.describe(),
        "rescaled_by": rescaled_by,
        "polynomial": poly.to_json(),
        "antisymmetry_residual": residual,
        "samples": ANTISYMMETRY_SAMPLES,
    });
    Ok((Artifact { rows, details }, failure))
}

fn estimate_row(
    r: f64,
    u: f64,
    result: Result<RiceEstimate, Error>,
) -> Result<Map<String, Value>, Failure> {
    match result {
        Ok(e) => Ok(object(json!({
            "r": r, "u": u, "value": e.value, "stderr": e.stderr, "n": e.n, "seed": e.seed,
            "degenerate": e.degenerate, "error": null,
        }))),
        // An empty denominator is a property of the sweep point, not a failed run.
        Err(e @ Error::InsufficientSamples(_)) => Ok(object(json!({
            "r": r, "u": u, "value": null, "stderr": null, "error": e.to_string(),
        }))),
        Err(e) => Err(e.into()),
    }
}

fn sweep(config: &RunConfig) -> Outcome {
    let model = config.model()?;
    let mc = config.mc.mc();
    let mut rows = Vec::new();
    for &r in &config.sweep.r {
        for &u in &config.sweep.u {
            let result = match config.command {
                Command::Ratio => sign_ratio_with(&model, r, u, &mc),
                Command::Psi => psi_ratio_with(&model, r, u, &mc),
                _ => maxima_share_with(&model, r, u, &mc),
            };
            rows.push(estimate_row(r, u, result)?);
        }
    }
    let details = json!({"model": model.describe(), "mc": mc});
    Ok((Artifact { rows, details }, None))
}

/// Seed of realization `k`: substream `k` of the root seed.
fn realization_seed(root: u64, k: usize) -> u64 {
    let mut rng = ChaCha8Rng::seed_from_u64(root);
    rng.set_stream(k as u64);
    rng.next_u64()
}

struct Realization {
    seed: u64,
    counts: [usize; 3],
    euler: i64,
    newton_failures: usize,
    /// Per threshold: counts by index above it and the close-pair table.
    above: Vec<([usize; 3], PairTable)>,
}

fn simulate(config: &RunConfig) -> Outcome {
    let model = config.model()?;
    let sim = &config.sim;
    let grid = Grid::new(sim.grid, sim.spacing);
    let eps = sim.eps * model.correlation_length();
    let save = config.output.path.clone();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(config.mc.shards)
        .build()
        .map_err(|e| Failure::Validation(e.to_string()))?;
    let results: Vec<Result<Realization, Failure>> = pool.install(|| {
        (0..sim.realizations)
            .into_par_iter()
            .map(|k| {
                let seed = realization_seed(config.mc.seed, k);
                let field = sample_field(&model, grid, seed)?;
                let search = find_critical_points(&field, f64::NEG_INFINITY);
                let points = &search.points;
                let count = |u: f64| {
                    let mut c = [0usize; 3];
                    for p in points.iter().filter(|p| p.value > u) {
                        c[p.index] += 1;
                    }
                    c
                };
                let above = config
                    .sweep
                    .u
                    .iter()
                    .map(|&u| {
                        let kept: Vec<_> = points.iter().filter(|p| p.value > u).copied().collect();
                        (
                            count(u),
                            pair_statistics_periodic(&kept, eps, field.extent()),
                        )
                    })
                    .collect();
                if let Some(dir) = &save {
                    if sim.save_fields {
                        std::fs::create_dir_all(dir)
                            .map_err(|e| Failure::Validation(e.to_string()))?;
                        write_field(&field, &dir.join(format!("field_{k:04}.bin")))?;
                        let file = std::fs::File::create(dir.join(format!("points_{k:04}.csv")))
                            .map_err(|e| Failure::Validation(e.to_string()))?;
                        write_critical_points_csv(points, file)?;
                    }
                }
                Ok(Realization {
                    seed,
                    counts: count(f64::NEG_INFINITY),
                    euler: euler_count(points),
                    newton_failures: search.diagnostics.newton_failures,
                    above,
                })
            })
            .collect()
    });
    let results: Vec<Realization> = results.into_iter().collect::<Result<_, _>>()?;

    let mut rows = Vec::new();
    let mut merged: Vec<PairTable> = config
        .sweep
        .u
        .iter()
        .map(|_| PairTable::empty(eps, 2))
        .collect();
    for (k, real) in results.iter().enumerate() {
        for (t, (&u, (counts, table))) in config.sweep.u.iter().zip(&real.above).enumerate() {
            merged[t].merge(table);
            rows.push(object(json!({
                "realization": k, "seed": real.seed, "u": u,
                "n_max": counts[2], "n_saddle": counts[1], "n_min": counts[0],
                "pairs": table.pairs, "opposite_det": table.opposite_det,
                "max_saddle": table.count(2, 1),
                "euler_all": real.euler, "n_all": real.counts.iter().sum::<usize>(),
                "newton_failures": real.newton_failures,
            })));
        }
    }
    if let Some(dir) = &save {
        std::fs::create_dir_all(dir).map_err(|e| Failure::Validation(e.to_string()))?;
        for (&u, table) in config.sweep.u.iter().zip(&merged) {
            let file = std::fs::File::create(dir.join(format!("pairs_u{u}.csv")))
                .map_err(|e| Failure::Validation(e.to_string()))?;
            write_pair_table_csv(table, file)?;
        }
    }
    let summary: Vec<Value> = config
        .sweep
        .u
        .iter()
        .zip(&merged)
        .map(|(&u, table)| {
            json!({
                "u": u,
                "table": table,
                "opposite_det_fraction": table.opposite_det_fraction(),
                "max_saddle_fraction": table.max_saddle_fraction(),
            })
        })
        .collect();
    let euler_nonzero = results.iter().filter(|r| r.euler != 0).count();
    let details = json!({
        "model": model.describe(),
        "grid": grid,
        "eps_absolute": eps,
        "euler_nonzero_realizations": euler_nonzero,
        "pairs": summary,
    });
    Ok((Artifact { rows, details }, None))
}

fn report(config: &RunConfig) -> Outcome {
    let mut rows = Vec::new();
    let mut sources = Vec::new();
    for path in &config.inputs {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Failure::Validation(format!("{}: {e}", path.display())))?;
        let record: Value = serde_json::from_str(&text)
            .map_err(|e| Failure::Validation(format!("{}: {e}", path.display())))?;
        if record.get("schema") != Some(&json!(crate::output::SCHEMA)) {
            return Err(Failure::Validation(format!(
                "{}: not a schema-1 artifact",
                path.display()
            )));
        }
        let op = record.get("op").cloned().unwrap_or(Value::Null);
        for row in record
            .get("rows")
            .and_then(Value::as_array)
            .into_iter()
            .flatten()
        {
            let mut merged = Map::new();
            merged.insert("op".into(), op.clone());
            merged.insert("source".into(), json!(path.display().to_string()));
            if let Value::Object(fields) = row {
                merged.extend(fields.clone());
            }
            rows.push(merged);
        }
        sources.push(
            json!({"path": path.display().to_string(), "op": op, "config": record.get("config")}),
        );
    }
    Ok((
        Artifact {
            rows,
            details: json!({"sources": sources}),
        },
        None,
    ))
}
