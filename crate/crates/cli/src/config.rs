//! Run configuration: a JSON file merged with command-line overrides.

use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use critfield::covariance_core::{rescale, ModelFamily, RadialModel};
use critfield::rice_mc::{Factor, McConfig, Sampler};

use crate::{Cli, Command, Failure, Format, SamplerChoice};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelConfig {
    /// `gaussian` or `cauchy`.
    pub family: String,
    #[serde(default)]
    pub params: BTreeMap<String, f64>,
    #[serde(rename = "N")]
    pub n_dim: usize,
    #[serde(default = "one")]
    pub scale: f64,
}

fn one() -> f64 {
    1.0
}

impl ModelConfig {
    /// Parse the `family:key=value,...` shorthand.
    fn from_spec(spec: &str, n_dim: usize) -> Result<Self, Failure> {
        let family: ModelFamily = spec.parse().map_err(Failure::from)?;
        let (name, params) = match family {
            ModelFamily::Gaussian { a } => ("gaussian", BTreeMap::from([("a".to_string(), a)])),
            ModelFamily::Cauchy { ell, nu } => (
                "cauchy",
                BTreeMap::from([("ell".to_string(), ell), ("nu".to_string(), nu)]),
            ),
        };
        Ok(ModelConfig {
            family: name.into(),
            params,
            n_dim,
            scale: 1.0,
        })
    }

    pub fn spec(&self) -> String {
        let params: Vec<String> = self
            .params
            .iter()
            .map(|(k, v)| format!("{k}={v}"))
            .collect();
        if params.is_empty() {
            self.family.clone()
        } else {
            format!("{}:{}", self.family, params.join(","))
        }
    }

    pub fn build(&self) -> Result<RadialModel, Failure> {
        let family: ModelFamily = self.spec().parse()?;
        let model = RadialModel::from_family(family, self.n_dim)?;
        if self.scale == 1.0 {
            Ok(model)
        } else {
            Ok(rescale(&model, self.scale)?)
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    #[serde(default = "default_r")]
    pub r: Vec<f64>,
    #[serde(default = "default_u")]
    pub u: Vec<f64>,
}

fn default_r() -> Vec<f64> {
    vec![0.05, 0.02]
}

fn default_u() -> Vec<f64> {
    vec![1.0]
}

impl Default for SweepConfig {
    fn default() -> Self {
        SweepConfig {
            r: default_r(),
            u: default_u(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MonteCarloConfig {
    #[serde(default = "default_n")]
    pub n: u64,
    #[serde(default)]
    pub seed: u64,
    /// Worker threads; results do not depend on it.
    #[serde(default = "default_shards")]
    pub shards: usize,
    #[serde(default)]
    pub sampler: SamplerChoice,
}

fn default_n() -> u64 {
    2_000_000
}

fn default_shards() -> usize {
    std::thread::available_parallelism().map_or(1, |v| v.get())
}

impl Default for MonteCarloConfig {
    fn default() -> Self {
        MonteCarloConfig {
            n: default_n(),
            seed: 0,
            shards: default_shards(),
            sampler: SamplerChoice::default(),
        }
    }
}

impl MonteCarloConfig {
    pub fn mc(&self) -> McConfig {
        let sampler = match self.sampler {
            SamplerChoice::Tail => Sampler::TailConditioned,
            SamplerChoice::Direct => Sampler::Direct(Factor::Symmetric),
            SamplerChoice::Spectral => Sampler::Direct(Factor::Spectral),
            SamplerChoice::Reflected => Sampler::Reflected,
        };
        McConfig::new(self.n, self.seed)
            .with_shards(self.shards)
            .with_sampler(sampler)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimConfig {
    /// Grid points per axis.
    #[serde(default = "default_grid")]
    pub grid: usize,
    #[serde(default = "default_spacing")]
    pub spacing: f64,
    #[serde(default = "default_realizations")]
    pub realizations: usize,
    /// Pair distance in correlation lengths.
    #[serde(default = "default_eps")]
    pub eps: f64,
    /// Write each field and its critical points next to the artifact.
    #[serde(default)]
    pub save_fields: bool,
}

fn default_grid() -> usize {
    256
}

fn default_spacing() -> f64 {
    0.125
}

fn default_realizations() -> usize {
    50
}

fn default_eps() -> f64 {
    0.5
}

impl Default for SimConfig {
    fn default() -> Self {
        SimConfig {
            grid: default_grid(),
            spacing: default_spacing(),
            realizations: default_realizations(),
            eps: default_eps(),
            save_fields: false,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    /// Directory for artifacts; standard output when absent.
    #[serde(default)]
    pub path: Option<PathBuf>,
    #[serde(default)]
    pub format: Format,
}

/// The fully resolved configuration embedded in every artifact.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub command: Command,
    /// Required by every command except `report`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub model: Option<ModelConfig>,
    #[serde(default)]
    pub sweep: SweepConfig,
    #[serde(default)]
    pub mc: MonteCarloConfig,
    #[serde(default)]
    pub sim: SimConfig,
    #[serde(default)]
    pub output: OutputConfig,
    /// Compare against the independent oracle (`sigma`).
    #[serde(default)]
    pub verify: bool,
    /// Artifacts merged by `report`.
    #[serde(default)]
    pub inputs: Vec<PathBuf>,
}

/// A config file may be a bare config or a saved artifact embedding one.
fn load_file(path: &Path) -> Result<serde_json::Value, Failure> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Failure::Validation(format!("{}: {e}", path.display())))?;
    let value: serde_json::Value = serde_json::from_str(&text)
        .map_err(|e| Failure::Validation(format!("{}: {e}", path.display())))?;
    Ok(match value.get("config") {
        Some(config) if value.get("schema").is_some() => config.clone(),
        _ => value,
    })
}

fn nonempty(name: &str, list: &[f64]) -> Result<(), Failure> {
    if list.is_empty() {
        return Err(Failure::Validation(format!(
            "{name} list must not be empty"
        )));
    }
    Ok(())
}

impl RunConfig {
    /// Merge the config file (if any) with the flags; flags win.
    pub fn resolve(cli: &Cli) -> Result<Self, Failure> {
        let mut value = match &cli.config {
            Some(path) => load_file(path)?,
            None => serde_json::json!({}),
        };
        let object = value
            .as_object_mut()
            .ok_or_else(|| Failure::Validation("config must be a JSON object".into()))?;
        object.insert(
            "command".into(),
            serde_json::to_value(cli.command).expect("command serialises"),
        );
        let file_n = object
            .get("model")
            .and_then(|m| m.get("N"))
            .and_then(serde_json::Value::as_u64)
            .map(|n| n as usize);
        if let Some(spec) = &cli.model {
            let n_dim = cli.n_dim.or(file_n).unwrap_or(2);
            let mut model = ModelConfig::from_spec(spec, n_dim)?;
            if let Some(scale) = object
                .get("model")
                .and_then(|m| m.get("scale"))
                .and_then(|s| s.as_f64())
            {
                model.scale = scale;
            }
            object.insert(
                "model".into(),
                serde_json::to_value(model).expect("model serialises"),
            );
        } else if let (Some(n), Some(model)) = (cli.n_dim, object.get_mut("model")) {
            if let Some(model) = model.as_object_mut() {
                model.insert("N".into(), n.into());
            }
        }
        if !object.contains_key("model") && cli.command != Command::Report {
            return Err(Failure::Validation(
                "no model given (use --model or a config file)".into(),
            ));
        }
        let mut config: RunConfig = serde_json::from_value(value)
            .map_err(|e| Failure::Validation(format!("invalid config: {e}")))?;

        if let Some(r) = &cli.r {
            config.sweep.r = r.clone();
        }
        if let Some(u) = &cli.u {
            config.sweep.u = u.clone();
        }
        if let Some(n) = cli.n {
            config.mc.n = n;
        }
        if let Some(seed) = cli.seed {
            config.mc.seed = seed;
        }
        if let Some(shards) = cli.shards {
            config.mc.shards = shards;
        }
        if let Some(sampler) = cli.sampler {
            config.mc.sampler = sampler;
        }
        if let Some(grid) = cli.grid {
            config.sim.grid = grid;
        }
        if let Some(spacing) = cli.spacing {
            config.sim.spacing = spacing;
        }
        if let Some(k) = cli.realizations {
            config.sim.realizations = k;
        }
        if let Some(eps) = cli.eps {
            config.sim.eps = eps;
        }
        config.sim.save_fields |= cli.save_fields;
        if let Some(out) = &cli.out {
            config.output.path = Some(out.clone());
        }
        if let Some(format) = cli.format {
            config.output.format = format;
        }
        config.verify |= cli.verify;
        if !cli.inputs.is_empty() {
            config.inputs = cli.inputs.clone();
        }
        config.validate()?;
        Ok(config)
    }

    /// The configured model, built and validated.
    pub fn model(&self) -> Result<RadialModel, Failure> {
        self.model
            .as_ref()
            .ok_or_else(|| {
                Failure::Validation("no model given (use --model or a config file)".into())
            })?
            .build()
    }

    fn validate(&self) -> Result<(), Failure> {
        if let Some(model) = &self.model {
            if model.n_dim < 2 {
                return Err(Failure::Validation(format!(
                    "N must be at least 2, got {}",
                    model.n_dim
                )));
            }
        }
        nonempty("r", &self.sweep.r)?;
        nonempty("u", &self.sweep.u)?;
        if self.mc.shards == 0 {
            return Err(Failure::Validation("shards must be positive".into()));
        }
        if self.sim.realizations == 0 {
            return Err(Failure::Validation("realizations must be positive".into()));
        }
        if self.command == Command::Report && self.inputs.is_empty() {
            return Err(Failure::Validation(
                "report needs at least one input artifact".into(),
            ));
        }
        Ok(())
    }
}
