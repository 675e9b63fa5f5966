use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use crate::calibration::{EceWeighting, DEFAULT_BINS};
use crate::data::BlobSpec;
use crate::ensemble::EnsembleConfig;
use crate::error::{Error, Result};
use crate::nn::{Activation, SgdConfig};

/// Training strategy being compared.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    /// One network.
    Single,
    /// Independently trained members, outputs averaged.
    Pure,
    /// Members trained with the negative-correlation penalty.
    Nc,
}

impl Mode {
    pub fn as_str(self) -> &'static str {
        match self {
            Mode::Single => "single",
            Mode::Pure => "pure",
            Mode::Nc => "nc",
        }
    }

    /// Best guess for an ensemble with no recorded mode.
    pub fn infer(members: usize, lambda: f64) -> Mode {
        if members == 1 {
            Mode::Single
        } else if lambda == 0.0 {
            Mode::Pure
        } else {
            Mode::Nc
        }
    }
}

fn default_members() -> usize {
    1
}

fn default_bins() -> usize {
    DEFAULT_BINS
}

fn default_activation() -> Activation {
    Activation::Relu
}

/// JSON run description consumed by `ncens train`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub mode: Mode,
    pub layer_sizes: Vec<usize>,
    #[serde(default = "default_activation")]
    pub activation: Activation,
    #[serde(rename = "M", alias = "members", default = "default_members")]
    pub members: usize,
    #[serde(default)]
    pub lambda: f64,
    #[serde(default)]
    pub sgd: SgdConfig,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_bins")]
    pub bins: usize,
    #[serde(default)]
    pub ece_weighting: EceWeighting,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub train_data: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eval_data: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label_col: Option<String>,
    /// Generate data in-process instead of reading CSV files.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub blobs: Option<BlobSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub test_fraction: Option<f64>,
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::InvalidConfig(format!("run config: {e}")))
    }

    /// Mode/M/λ consistency plus the optimizer and ensemble rules.
    pub fn validate(&self) -> Result<()> {
        self.validate_with(false)
    }

    /// `lambda_forced` skips the mode/λ pairing, used when λ is overridden on the command line.
    pub fn validate_with(&self, lambda_forced: bool) -> Result<()> {
        if self.mode == Mode::Single && self.members != 1 {
            return Err(Error::InvalidConfig(format!(
                "field `M`: mode `single` requires M = 1, got {}",
                self.members
            )));
        }
        if !lambda_forced {
            if self.mode == Mode::Pure && self.lambda != 0.0 {
                return Err(Error::InvalidConfig(format!(
                    "field `lambda`: mode `pure` requires lambda = 0, got {}",
                    self.lambda
                )));
            }
            if self.mode == Mode::Nc && (self.lambda.is_nan() || self.lambda <= 0.0) {
                return Err(Error::InvalidConfig(format!(
                    "field `lambda`: mode `nc` requires lambda > 0, got {}",
                    self.lambda
                )));
            }
        }
        if self.bins == 0 {
            return Err(Error::InvalidConfig("field `bins`: must be >= 1".into()));
        }
        if let Some(f) = self.test_fraction {
            if !(f > 0.0 && f < 1.0) {
                return Err(Error::InvalidConfig(format!(
                    "field `test_fraction`: must lie in (0, 1), got {f}"
                )));
            }
        }
        if let Some(spec) = &self.blobs {
            spec.validate()?;
        }
        self.ensemble_config().validate()?;
        crate::nn::NetworkParams::init(&self.layer_sizes, self.activation, 0).map(|_| ())
    }

    pub fn ensemble_config(&self) -> EnsembleConfig {
        EnsembleConfig::seeded(self.members, self.lambda, self.sgd, self.seed)
    }
}
