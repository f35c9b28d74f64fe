//! Resolved run configuration, stored as TOML next to every run's outputs.

use std::path::{Path, PathBuf};

use clap::ValueEnum;
use serde::{Deserialize, Serialize};

use crate::data::{load_csv, noise_dataset, sine_dataset, RawDataset};
use crate::error::{Error, Result};
use crate::model::ModelConfig;
use crate::training::TrainConfig;

/// Layer and router choices of the benchmark families.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Preset {
    /// Hourly ETT: 1 layer, 8 routers.
    Ett,
    /// 2 layers, 4 routers.
    Traffic,
    /// 2 layers, 4 routers.
    Electricity,
    /// 10-minute Weather: 3 layers, 8 routers, 144-step day.
    Weather,
}

impl Preset {
    pub fn apply(self, model: &mut ModelSection) {
        let (l_phase, n_layers, m) = match self {
            Preset::Ett => (24, 1, 8),
            Preset::Traffic | Preset::Electricity => (24, 2, 4),
            Preset::Weather => (144, 3, 8),
        };
        model.l_phase = l_phase;
        model.n_layers = n_layers;
        model.m = m;
        model.d = 8;
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum SyntheticKind {
    /// Noisy sinusoid with period `period`.
    Sine,
    /// White Gaussian noise.
    Noise,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunSection {
    pub seed: u64,
    pub out: PathBuf,
    /// Record wall-clock seconds in the report (0 when false, which makes
    /// reports byte-reproducible).
    pub timing: bool,
}

impl Default for RunSection {
    fn default() -> Self {
        Self {
            seed: 0,
            out: PathBuf::from("out"),
            timing: true,
        }
    }
}

/// A CSV file or a synthetic series; the file wins when both are set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DataSection {
    pub path: Option<PathBuf>,
    pub synthetic: Option<SyntheticKind>,
    pub length: usize,
    pub period: usize,
    pub channels: usize,
    pub noise: f64,
}

impl Default for DataSection {
    fn default() -> Self {
        Self {
            path: None,
            synthetic: None,
            length: 10_000,
            period: 24,
            channels: 1,
            noise: 0.05,
        }
    }
}

impl DataSection {
    pub fn load(&self, seed: u64) -> Result<RawDataset> {
        match (&self.path, self.synthetic) {
            (Some(path), _) => load_csv(path),
            (None, Some(SyntheticKind::Sine)) => {
                Ok(sine_dataset(self.length, self.period, self.channels, self.noise, seed))
            }
            (None, Some(SyntheticKind::Noise)) => Ok(noise_dataset(self.length, self.channels, seed)),
            (None, None) => Err(Error::Config("no dataset: pass --data PATH or --synthetic KIND".into())),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ModelSection {
    pub l_in: usize,
    pub l_out: usize,
    pub l_phase: usize,
    pub d: usize,
    pub m: usize,
    pub n_layers: usize,
    pub n_heads: usize,
    pub residual: bool,
}

impl Default for ModelSection {
    fn default() -> Self {
        let c = ModelConfig::ett(720, 96);
        Self {
            l_in: c.l_in,
            l_out: c.l_out,
            l_phase: c.l_phase,
            d: c.d,
            m: c.m,
            n_layers: c.n_layers,
            n_heads: c.n_heads,
            residual: c.residual,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TrainSection {
    pub epochs: usize,
    pub batch: usize,
    pub patience: usize,
    pub lr: f64,
}

impl Default for TrainSection {
    fn default() -> Self {
        let t = TrainConfig::default();
        Self {
            epochs: t.epochs,
            batch: t.batch,
            patience: t.patience,
            lr: t.lr,
        }
    }
}

/// Everything a run depends on besides its input files.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub run: RunSection,
    pub data: DataSection,
    pub model: ModelSection,
    pub train: TrainSection,
}

impl RunConfig {
    /// Parses TOML; unknown sections or keys are errors.
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml(&text)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string_pretty(self).expect("config is always serializable")
    }

    pub fn model_config(&self) -> ModelConfig {
        let m = &self.model;
        ModelConfig {
            l_in: m.l_in,
            l_out: m.l_out,
            l_phase: m.l_phase,
            d: m.d,
            m: m.m,
            n_layers: m.n_layers,
            n_heads: m.n_heads,
            residual: m.residual,
            seed: self.run.seed,
        }
    }

    pub fn train_config(&self) -> TrainConfig {
        let t = &self.train;
        TrainConfig {
            epochs: t.epochs,
            batch: t.batch,
            patience: t.patience,
            lr: t.lr,
            seed: self.run.seed,
        }
    }
}
