//! Flat key-value run configuration.
//!
//! Every field is optional; unset fields fall back to defaults when the
//! configuration is resolved against a dataset. Values merge in the order
//! file, then `COTM_SEED`, then command-line flags.

use std::path::{Path, PathBuf};

use cotm::eval::ScoreMode;
use cotm::{Config, EmptyClauseOutput};
use serde::{Deserialize, Serialize};

use crate::CliError;

pub const SEED_ENV: &str = "COTM_SEED";

macro_rules! run_config {
    ($($(#[$doc:meta])* $field:ident: $ty:ty,)*) => {
        #[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
        #[serde(deny_unknown_fields)]
        pub struct RunConfig {
            $(
                $(#[$doc])*
                #[serde(default, skip_serializing_if = "Option::is_none")]
                pub $field: Option<$ty>,
            )*
        }

        impl RunConfig {
            /// Fields set in `other` replace ours.
            pub fn overlay(mut self, other: RunConfig) -> Self {
                $(
                    if other.$field.is_some() {
                        self.$field = other.$field;
                    }
                )*
                self
            }
        }
    };
}

run_config! {
    /// Must match the dataset when given.
    n_outputs: usize,
    /// Must match the dataset when given.
    n_inputs: usize,
    n_clauses: usize,
    memory_depth: u32,
    voting_margin: u32,
    specificity: f64,
    multiclass_scalar: f64,
    /// Sets the multiclass scalar to `1/(m−1)`.
    one_hot: bool,
    boost_true_positive: bool,
    seed: u64,
    empty_clause_output: EmptyClauseOutput,
    train: PathBuf,
    test: PathBuf,
    epochs: usize,
    trials: usize,
    tail: usize,
    shuffle: bool,
    vanilla: bool,
    score_mode: ScoreMode,
    model_out: PathBuf,
    csv_out: PathBuf,
    json_out: PathBuf,
}

pub const DEFAULT_CLAUSES: usize = 1000;
pub const DEFAULT_EPOCHS: usize = 100;
pub const DEFAULT_TRIALS: usize = 10;
pub const DEFAULT_TAIL: usize = 25;

impl RunConfig {
    pub fn parse(text: &str) -> Result<Self, CliError> {
        toml::from_str(text).map_err(|e| CliError::Usage(format!("invalid run config: {e}")))
    }

    #[cfg(test)]
    pub fn to_text(&self) -> String {
        toml::to_string(self).expect("flat config always serializes")
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Data(format!("{}: {e}", path.display())))?;
        Self::parse(&text).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))
    }

    /// Applies `COTM_SEED` if set.
    pub fn with_env(mut self) -> Result<Self, CliError> {
        if let Ok(value) = std::env::var(SEED_ENV) {
            let seed = value
                .trim()
                .parse()
                .map_err(|_| CliError::Usage(format!("{SEED_ENV} must be an unsigned integer, got {value:?}")))?;
            self.seed = Some(seed);
        }
        Ok(self)
    }

    /// Model configuration for a dataset with `n_outputs` outputs and
    /// `n_inputs` inputs.
    pub fn model_config(&self, n_outputs: usize, n_inputs: usize) -> Result<Config, CliError> {
        if let Some(m) = self.n_outputs.filter(|&m| m != n_outputs) {
            return Err(CliError::Data(format!(
                "config expects {m} outputs but the dataset has {n_outputs}"
            )));
        }
        if let Some(o) = self.n_inputs.filter(|&o| o != n_inputs) {
            return Err(CliError::Data(format!(
                "config expects {o} inputs but the dataset has {n_inputs}"
            )));
        }
        let mut config = Config::new(n_outputs, self.n_clauses.unwrap_or(DEFAULT_CLAUSES), n_inputs);
        if let Some(v) = self.memory_depth {
            config = config.with_memory_depth(v);
        }
        if let Some(v) = self.voting_margin {
            config = config.with_voting_margin(v);
        }
        if let Some(v) = self.specificity {
            config = config.with_specificity(v);
        }
        if self.one_hot == Some(true) {
            config = config.one_hot();
        }
        if let Some(v) = self.multiclass_scalar {
            config = config.with_multiclass_scalar(v);
        }
        if let Some(v) = self.boost_true_positive {
            config = config.with_boost(v);
        }
        if let Some(v) = self.seed {
            config = config.with_seed(v);
        }
        config.empty_clause_output = self.empty_clause_output.unwrap_or_default();
        config.validate().map_err(|e| CliError::Usage(e.to_string()))?;
        Ok(config)
    }
}
