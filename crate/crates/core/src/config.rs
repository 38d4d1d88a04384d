use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// How an all-Exclude clause evaluates at prediction time.
///
/// Learning always treats an empty clause as matching (value 1).
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EmptyClauseOutput {
    /// The empty conjunction is true.
    #[default]
    Paper,
    /// Empty clauses never vote.
    Zero,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Config {
    /// Number of outputs `m`.
    pub n_outputs: usize,
    /// Number of clauses `n` in the shared pool.
    pub n_clauses: usize,
    /// Number of propositional inputs `o`.
    pub n_inputs: usize,
    /// Memory depth `N`; automaton states span `1..=2N`.
    pub memory_depth: u32,
    /// Voting margin `t`.
    pub voting_margin: u32,
    /// Specificity `s ≥ 1`.
    pub specificity: f64,
    /// Type II damping `e ∈ (0, 1]`.
    pub multiclass_scalar: f64,
    pub boost_true_positive: bool,
    pub seed: u64,
    /// Not part of the model file; a prediction-time choice.
    #[serde(default)]
    pub empty_clause_output: EmptyClauseOutput,
}

impl Config {
    pub fn new(n_outputs: usize, n_clauses: usize, n_inputs: usize) -> Self {
        Self {
            n_outputs,
            n_clauses,
            n_inputs,
            memory_depth: 128,
            voting_margin: 10,
            specificity: 3.9,
            multiclass_scalar: 1.0,
            boost_true_positive: true,
            seed: 0,
            empty_clause_output: EmptyClauseOutput::Paper,
        }
    }

    pub fn with_memory_depth(mut self, n: u32) -> Self {
        self.memory_depth = n;
        self
    }

    pub fn with_voting_margin(mut self, t: u32) -> Self {
        self.voting_margin = t;
        self
    }

    pub fn with_specificity(mut self, s: f64) -> Self {
        self.specificity = s;
        self
    }

    pub fn with_multiclass_scalar(mut self, e: f64) -> Self {
        self.multiclass_scalar = e;
        self
    }

    /// Sets `e = 1/(m-1)`, the damping for one-hot multi-class targets.
    pub fn one_hot(mut self) -> Self {
        if self.n_outputs > 1 {
            self.multiclass_scalar = 1.0 / (self.n_outputs - 1) as f64;
        }
        self
    }

    pub fn with_boost(mut self, boost: bool) -> Self {
        self.boost_true_positive = boost;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("n_outputs", self.n_outputs),
            ("n_clauses", self.n_clauses),
            ("n_inputs", self.n_inputs),
            ("memory_depth", self.memory_depth as usize),
            ("voting_margin", self.voting_margin as usize),
        ];
        for (name, value) in positive {
            if value == 0 {
                return Err(Error::Config(format!("{name} must be positive")));
            }
        }
        if self.memory_depth > u32::MAX / 2 {
            return Err(Error::Config("memory_depth too large".into()));
        }
        if !(self.specificity >= 1.0 && self.specificity.is_finite()) {
            return Err(Error::Config(format!(
                "specificity must be >= 1, got {}",
                self.specificity
            )));
        }
        if !(self.multiclass_scalar > 0.0 && self.multiclass_scalar <= 1.0) {
            return Err(Error::Config(format!(
                "multiclass_scalar must be in (0, 1], got {}",
                self.multiclass_scalar
            )));
        }
        Ok(())
    }

    /// Upper automaton state `2N`.
    #[inline]
    pub fn max_state(&self) -> u32 {
        2 * self.memory_depth
    }

    #[inline]
    pub fn n_literals(&self) -> usize {
        2 * self.n_inputs
    }
}
