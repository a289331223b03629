//! Feed-forward regression network trained on a weighted squared loss.
//!
//! Architecture: `Dense(d → input_units)`, dropout, then `n_layers` blocks of
//! `Dense(relu)` + dropout, then `Dense(→ 1, linear)`. Gradients are computed
//! by hand-written backpropagation; parameters are updated with Adam.

mod adam;
mod mlp;
mod train;

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use adam::Adam;
pub use mlp::{build_mlp, build_mlp_with, forward, gradient_check, Dense, Gradients, Mlp};
pub use train::{train, TrainReport};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Activation {
    Linear,
    Relu,
}

impl std::str::FromStr for Activation {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "linear" => Ok(Self::Linear),
            "relu" => Ok(Self::Relu),
            other => Err(Error::InvalidArgument(format!(
                "unknown activation `{other}` (expected linear or relu)"
            ))),
        }
    }
}

/// Network and training settings. Missing JSON fields take the defaults;
/// unknown fields are rejected.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Hyperparams {
    pub input_units: usize,
    pub n_layers: usize,
    pub units: Vec<usize>,
    /// Dropout after the input layer.
    pub dropout_rate: f64,
    /// Dropout after each hidden layer.
    pub dropout_rates: Vec<f64>,
    pub learning_rate: f64,
    pub epochs: usize,
    pub batch_size: usize,
    /// Epochs without validation improvement before stopping.
    pub patience: usize,
    pub val_fraction: f64,
}

impl Default for Hyperparams {
    fn default() -> Self {
        Self {
            input_units: 64,
            n_layers: 2,
            units: vec![32, 16],
            dropout_rate: 0.1,
            dropout_rates: vec![0.1, 0.1],
            learning_rate: 1e-3,
            epochs: 200,
            batch_size: 64,
            patience: 20,
            val_fraction: 0.2,
        }
    }
}

impl Hyperparams {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidArgument(format!("hyperparameters: {m}")));
        if self.input_units == 0 {
            return bad("input_units must be positive");
        }
        if self.units.len() != self.n_layers || self.dropout_rates.len() != self.n_layers {
            return bad("units and dropout_rates must both have n_layers entries");
        }
        if self.units.contains(&0) {
            return bad("every hidden layer needs at least one unit");
        }
        let rate_ok = |r: &f64| (0.0..1.0).contains(r);
        if !rate_ok(&self.dropout_rate) || !self.dropout_rates.iter().all(rate_ok) {
            return bad("dropout rates must lie in [0, 1)");
        }
        if !(self.learning_rate >= 0.0 && self.learning_rate.is_finite()) {
            return bad("learning_rate must be finite and non-negative");
        }
        if self.epochs == 0 || self.batch_size == 0 || self.patience == 0 {
            return bad("epochs, batch_size and patience must be positive");
        }
        if !(self.val_fraction > 0.0 && self.val_fraction <= 0.5) {
            return bad("val_fraction must lie in (0, 0.5]");
        }
        Ok(())
    }

    pub fn from_json_str(s: &str) -> Result<Self> {
        let hp: Self = serde_json::from_str(s)?;
        hp.validate()?;
        Ok(hp)
    }

    pub fn from_json_file(path: &Path) -> Result<Self> {
        Self::from_json_str(&std::fs::read_to_string(path)?)
    }
}
