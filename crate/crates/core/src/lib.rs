//! Coalesced Tsetlin Machine.
//!
//! A pool of `n` conjunctive clauses over `o` boolean inputs is shared by `m`
//! outputs. Each clause is a row of Tsetlin automaton states deciding, per
//! literal, Include or Exclude; each output reads the clause pool through a
//! row of signed integer weights and fires when its vote sum is non-negative.
//!
//! ```
//! use cotm::{Config, Model, BitVector};
//!
//! let model = Model::coalesced(Config::new(2, 8, 4).with_seed(1)).unwrap();
//! let y = model.predict(&BitVector::from_u8s(&[1, 0, 0, 1])).unwrap();
//! assert_eq!(y.len(), 2);
//! ```

pub mod bits;
pub mod config;
pub mod data;
pub mod error;
pub mod eval;
pub mod format;
pub mod learn;
pub mod model;
pub mod oracle;
pub mod rng;

pub use bits::{BitMatrix, BitVector};
pub use config::{Config, EmptyClauseOutput};
pub use data::Dataset;
pub use error::{Error, Result};
pub use eval::{evaluate, run_trials, Evaluation, ScoreMode, TrialSpec, TrialsReport};
pub use format::{decode_model, encode_model, load_model, save_model};
pub use learn::{fit_epoch, fit_example, TrainScratch};
pub use model::{
    action_map, clause_outputs, init_coalesced, init_vanilla, literalize, vote_sums, ActionMatrix, ClauseOutputs,
    LiteralVector, MemoryMatrix, Model, RenderedClause, VoteVector, WeightMatrix,
};
pub use rng::RandomSource;
