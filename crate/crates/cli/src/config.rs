use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use wiretap_core::{Caps, Distribution, Dmc, FactorizedKernel, WiretapCode, WiretapKernel};

/// An input given either as a path to a JSON file or inline.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Source<T> {
    Path(PathBuf),
    Inline(T),
}

impl<T: DeserializeOwned + Clone> Source<T> {
    pub fn load(&self, base: &Path) -> Result<T> {
        match self {
            Source::Inline(v) => Ok(v.clone()),
            Source::Path(p) => {
                let path = if p.is_absolute() { p.clone() } else { base.join(p) };
                let text = std::fs::read_to_string(&path)
                    .with_context(|| format!("cannot read input file {}", path.display()))?;
                serde_json::from_str(&text).with_context(|| format!("invalid contents in {}", path.display()))
            }
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Inputs {
    pub p: Option<Source<Distribution>>,
    pub q: Option<Source<Distribution>>,
    pub w: Option<Source<Dmc>>,
    pub v: Option<Source<Dmc>>,
    pub kernel: Option<Source<WiretapKernel>>,
    pub factorized_v: Option<Source<FactorizedKernel>>,
    pub code: Option<Source<WiretapCode>>,
}

/// Exhaustive sweep over deterministic codes with binary-style alphabets.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepParams {
    pub n_max: usize,
    #[serde(default = "two")]
    pub msg_count: usize,
    #[serde(default = "two")]
    pub feedback_size: usize,
}

fn two() -> usize {
    2
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Params {
    pub eps: Option<f64>,
    pub delta: Option<f64>,
    pub eta: Option<Vec<f64>>,
    pub n: Option<usize>,
    pub n_values: Option<Vec<usize>>,
    pub seed: Option<u64>,
    #[serde(default)]
    pub caps: Caps,
    pub tol: Option<f64>,
    pub restarts: Option<usize>,
    pub sweep: Option<SweepParams>,
    /// Multiplier on self-test trial counts.
    pub scale: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub command: Option<String>,
    #[serde(default)]
    pub inputs: Inputs,
    #[serde(default)]
    pub params: Params,
    pub out: Option<PathBuf>,
    /// Directory that relative input paths are resolved against.
    #[serde(skip)]
    pub base_dir: PathBuf,
}

impl ExperimentConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("cannot read config {}", path.display()))?;
        let mut cfg: ExperimentConfig =
            serde_json::from_str(&text).with_context(|| format!("invalid config {}", path.display()))?;
        cfg.base_dir = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Ok(cfg)
    }

    pub fn check_command(&self, name: &str) -> Result<()> {
        match &self.command {
            Some(c) if c != name => bail!("config is for command '{c}', not '{name}'"),
            _ => Ok(()),
        }
    }

    pub fn require<T: DeserializeOwned + Clone>(&self, src: &Option<Source<T>>, name: &str) -> Result<T> {
        match src {
            Some(s) => s.load(&self.base_dir).with_context(|| format!("input '{name}'")),
            None => bail!("config is missing input '{name}' (set inputs.{name} to a path or an inline object)"),
        }
    }

    pub fn optional<T: DeserializeOwned + Clone>(&self, src: &Option<Source<T>>, name: &str) -> Result<Option<T>> {
        src.as_ref().map(|s| s.load(&self.base_dir).with_context(|| format!("input '{name}'"))).transpose()
    }

    pub fn eps(&self, default: f64) -> Result<f64> {
        let eps = self.params.eps.unwrap_or(default);
        if !(0.0..1.0).contains(&eps) {
            bail!("params.eps must lie in [0, 1), got {eps}");
        }
        Ok(eps)
    }

    pub fn n_values(&self, default: &[usize]) -> Result<Vec<usize>> {
        let v = match (&self.params.n_values, self.params.n) {
            (Some(v), _) => v.clone(),
            (None, Some(n)) => vec![n],
            (None, None) => default.to_vec(),
        };
        if v.is_empty() || v.contains(&0) {
            bail!("params.n_values must be a non-empty list of positive integers");
        }
        Ok(v)
    }

    pub fn tol(&self) -> Result<f64> {
        let tol = self.params.tol.unwrap_or(1e-9);
        if tol.is_nan() || tol <= 0.0 {
            bail!("params.tol must be positive, got {tol}");
        }
        Ok(tol)
    }

    pub fn seed(&self) -> u64 {
        self.params.seed.unwrap_or(0)
    }

    /// The resolved configuration as one line of JSON.
    pub fn canonical_json(&self) -> String {
        serde_json::to_string(self).expect("config serializes")
    }
}
