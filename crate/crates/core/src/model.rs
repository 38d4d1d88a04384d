//! Model representation and the prediction pipeline
//! `ŷ = U(W · And(Imply(G(C), x)))`.

use std::fmt;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::bits::{BitMatrix, BitVector};
use crate::config::{Config, EmptyClauseOutput};
use crate::error::{Error, Result};

/// `[x_1..x_o, ¬x_1..¬x_o]`, packed.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LiteralVector(BitVector);

impl LiteralVector {
    #[inline]
    pub fn bits(&self) -> &BitVector {
        &self.0
    }

    #[inline]
    pub fn words(&self) -> &[u64] {
        self.0.words()
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.0.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    #[inline]
    pub fn get(&self, k: usize) -> bool {
        self.0.get(k)
    }
}

pub fn literalize(x: &BitVector, n_inputs: usize) -> Result<LiteralVector> {
    if x.len() != n_inputs {
        return Err(Error::shape("input vector", n_inputs, x.len()));
    }
    let mut lits = BitVector::zeros(2 * n_inputs);
    for k in 0..n_inputs {
        if x.get(k) {
            lits.set(k, true);
        } else {
            lits.set(n_inputs + k, true);
        }
    }
    Ok(LiteralVector(lits))
}

/// `g(c)`: Include iff `c ≥ N+1`.
pub fn action(state: u32, depth: u32) -> Result<bool> {
    if state < 1 || state > 2 * depth {
        return Err(Error::Invariant(format!(
            "automaton state {state} outside [1, {}]",
            2 * depth
        )));
    }
    Ok(state > depth)
}

/// The `n × 2o` automaton states `C`, with a packed copy of `G(C)` kept in
/// sync for fast clause evaluation.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MemoryMatrix {
    n_clauses: usize,
    n_literals: usize,
    depth: u32,
    states: Vec<u32>,
    include: BitMatrix,
}

impl MemoryMatrix {
    /// Every state at `N`: all Exclude, one step away from Include.
    pub fn new(n_clauses: usize, n_literals: usize, depth: u32) -> Self {
        Self {
            n_clauses,
            n_literals,
            depth,
            states: vec![depth; n_clauses * n_literals],
            include: BitMatrix::zeros(n_clauses, n_literals),
        }
    }

    pub fn from_states(
        n_clauses: usize,
        n_literals: usize,
        depth: u32,
        states: Vec<u32>,
    ) -> Result<Self> {
        if states.len() != n_clauses * n_literals {
            return Err(Error::shape("memory matrix", n_clauses * n_literals, states.len()));
        }
        let mut include = BitMatrix::zeros(n_clauses, n_literals);
        for (idx, &c) in states.iter().enumerate() {
            if action(c, depth)? {
                include.set(idx / n_literals, idx % n_literals, true);
            }
        }
        Ok(Self {
            n_clauses,
            n_literals,
            depth,
            states,
            include,
        })
    }

    #[inline]
    pub fn n_clauses(&self) -> usize {
        self.n_clauses
    }

    #[inline]
    pub fn n_literals(&self) -> usize {
        self.n_literals
    }

    #[inline]
    pub fn depth(&self) -> u32 {
        self.depth
    }

    #[inline]
    pub fn get(&self, j: usize, k: usize) -> u32 {
        self.states[j * self.n_literals + k]
    }

    #[inline]
    pub fn row(&self, j: usize) -> &[u32] {
        &self.states[j * self.n_literals..(j + 1) * self.n_literals]
    }

    #[inline]
    pub fn states(&self) -> &[u32] {
        &self.states
    }

    pub fn set(&mut self, j: usize, k: usize, state: u32) -> Result<()> {
        let include = action(state, self.depth)?;
        self.states[j * self.n_literals + k] = state;
        self.include.set(j, k, include);
        Ok(())
    }

    #[inline]
    pub(crate) fn include_words(&self, j: usize) -> &[u64] {
        self.include.row_words(j)
    }

    /// States and packed include bits with their per-row strides.
    pub(crate) fn raw_mut(&mut self) -> (&mut [u32], &mut [u64], usize) {
        let (words, stride) = self.include.words_mut();
        (&mut self.states, words, stride)
    }

    /// Position of the first entry outside `[1, 2N]`, if any.
    pub fn first_out_of_bounds(&self) -> Option<(usize, usize)> {
        let hi = 2 * self.depth;
        self.states
            .iter()
            .position(|&c| c < 1 || c > hi)
            .map(|idx| (idx / self.n_literals, idx % self.n_literals))
    }
}

/// `A = G(C)`: one bit per memory entry, 1 = Include.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ActionMatrix(BitMatrix);

impl ActionMatrix {
    #[inline]
    pub fn get(&self, j: usize, k: usize) -> bool {
        self.0.get(j, k)
    }

    #[inline]
    pub fn n_clauses(&self) -> usize {
        self.0.rows()
    }

    #[inline]
    pub fn n_literals(&self) -> usize {
        self.0.cols()
    }

    #[inline]
    pub fn row_words(&self, j: usize) -> &[u64] {
        self.0.row_words(j)
    }

    pub fn from_bools(rows: &[Vec<bool>]) -> Result<Self> {
        let cols = rows.first().map_or(0, Vec::len);
        let rows = rows
            .iter()
            .map(|r| {
                if r.len() == cols {
                    Ok(BitVector::from_bools(r))
                } else {
                    Err(Error::shape("action matrix row", cols, r.len()))
                }
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self(BitMatrix::from_rows(cols, &rows)?))
    }
}

/// Entry-wise `g(c)` over the whole memory.
pub fn action_map(memory: &MemoryMatrix) -> Result<ActionMatrix> {
    let mut a = BitMatrix::zeros(memory.n_clauses, memory.n_literals);
    for j in 0..memory.n_clauses {
        for (k, &c) in memory.row(j).iter().enumerate() {
            if action(c, memory.depth)? {
                a.set(j, k, true);
            }
        }
    }
    Ok(ActionMatrix(a))
}

/// Clause value vector `c`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ClauseOutputs(BitVector);

impl ClauseOutputs {
    #[inline]
    pub fn get(&self, j: usize) -> bool {
        self.0.get(j)
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.0.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    #[inline]
    pub fn bits(&self) -> &BitVector {
        &self.0
    }

    pub fn from_bits(bits: BitVector) -> Self {
        Self(bits)
    }
}

/// A clause matches when none of its included literals is false.
#[inline]
pub(crate) fn clause_matches(include: &[u64], lits: &[u64]) -> bool {
    include.iter().zip(lits).all(|(a, l)| a & !l == 0)
}

pub fn clause_outputs(actions: &ActionMatrix, lits: &LiteralVector) -> Result<ClauseOutputs> {
    if actions.n_literals() != lits.len() {
        return Err(Error::shape("literal vector", actions.n_literals(), lits.len()));
    }
    let mut c = BitVector::zeros(actions.n_clauses());
    for j in 0..actions.n_clauses() {
        if clause_matches(actions.row_words(j), lits.words()) {
            c.set(j, true);
        }
    }
    Ok(ClauseOutputs(c))
}

/// The `m × n` clause-to-output weights plus the freeze mask used by the
/// vanilla (non-sharing) configuration.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct WeightMatrix {
    n_outputs: usize,
    n_clauses: usize,
    values: Vec<i32>,
    frozen: Vec<bool>,
}

impl WeightMatrix {
    pub fn from_values(n_outputs: usize, n_clauses: usize, values: Vec<i32>) -> Result<Self> {
        let frozen = vec![false; values.len()];
        Self::with_frozen(n_outputs, n_clauses, values, frozen)
    }

    pub fn with_frozen(
        n_outputs: usize,
        n_clauses: usize,
        values: Vec<i32>,
        frozen: Vec<bool>,
    ) -> Result<Self> {
        let len = n_outputs * n_clauses;
        if values.len() != len {
            return Err(Error::shape("weight matrix", len, values.len()));
        }
        if frozen.len() != len {
            return Err(Error::shape("freeze mask", len, frozen.len()));
        }
        Ok(Self {
            n_outputs,
            n_clauses,
            values,
            frozen,
        })
    }

    #[inline]
    pub fn n_outputs(&self) -> usize {
        self.n_outputs
    }

    #[inline]
    pub fn n_clauses(&self) -> usize {
        self.n_clauses
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> i32 {
        self.values[i * self.n_clauses + j]
    }

    #[inline]
    pub fn is_frozen(&self, i: usize, j: usize) -> bool {
        self.frozen[i * self.n_clauses + j]
    }

    /// A pair frozen at zero ties clause `j` to nothing at output `i` and is
    /// never selected for feedback.
    #[inline]
    pub fn is_related(&self, i: usize, j: usize) -> bool {
        let idx = i * self.n_clauses + j;
        !(self.frozen[idx] && self.values[idx] == 0)
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[i32] {
        &self.values[i * self.n_clauses..(i + 1) * self.n_clauses]
    }

    #[inline]
    pub fn values(&self) -> &[i32] {
        &self.values
    }

    #[inline]
    pub fn frozen(&self) -> &[bool] {
        &self.frozen
    }

    #[inline]
    pub(crate) fn add(&mut self, i: usize, j: usize, delta: i32) {
        let idx = i * self.n_clauses + j;
        if !self.frozen[idx] {
            self.values[idx] += delta;
        }
    }
}

/// Vote sums `v = W c`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct VoteVector(pub Vec<i64>);

impl VoteVector {
    /// The unit step `U(v)`, with `v = 0` mapping to 1.
    pub fn unit_step(&self) -> BitVector {
        let bits: Vec<bool> = self.0.iter().map(|&v| v >= 0).collect();
        BitVector::from_bools(&bits)
    }
}

pub fn vote_sums(weights: &WeightMatrix, c: &ClauseOutputs) -> Result<VoteVector> {
    if c.len() != weights.n_clauses {
        return Err(Error::shape("clause outputs", weights.n_clauses, c.len()));
    }
    let mut votes = vec![0i64; weights.n_outputs];
    for j in (0..c.len()).filter(|&j| c.get(j)) {
        for (i, v) in votes.iter_mut().enumerate() {
            *v += i64::from(weights.get(i, j));
        }
    }
    Ok(VoteVector(votes))
}

#[derive(Clone, Debug, PartialEq)]
pub struct Model {
    config: Config,
    memory: MemoryMatrix,
    weights: WeightMatrix,
}

impl Model {
    pub fn from_parts(config: Config, memory: MemoryMatrix, weights: WeightMatrix) -> Result<Self> {
        config.validate()?;
        if memory.n_clauses != config.n_clauses || memory.n_literals != config.n_literals() {
            return Err(Error::shape(
                "memory matrix",
                config.n_clauses * config.n_literals(),
                memory.n_clauses * memory.n_literals,
            ));
        }
        if memory.depth != config.memory_depth {
            return Err(Error::Config(format!(
                "memory depth {} does not match config {}",
                memory.depth, config.memory_depth
            )));
        }
        if weights.n_outputs != config.n_outputs || weights.n_clauses != config.n_clauses {
            return Err(Error::shape(
                "weight matrix",
                config.n_outputs * config.n_clauses,
                weights.n_outputs * weights.n_clauses,
            ));
        }
        Ok(Self {
            config,
            memory,
            weights,
        })
    }

    /// Coalesced model seeded from `config.seed`.
    pub fn coalesced(config: Config) -> Result<Self> {
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
        init_coalesced(config, &mut rng)
    }

    #[inline]
    pub fn config(&self) -> &Config {
        &self.config
    }

    pub fn config_mut(&mut self) -> &mut Config {
        &mut self.config
    }

    #[inline]
    pub fn memory(&self) -> &MemoryMatrix {
        &self.memory
    }

    #[inline]
    pub fn weights(&self) -> &WeightMatrix {
        &self.weights
    }

    pub(crate) fn parts_mut(&mut self) -> (&Config, &mut MemoryMatrix, &mut WeightMatrix) {
        (&self.config, &mut self.memory, &mut self.weights)
    }

    pub fn set_empty_clause_output(&mut self, mode: EmptyClauseOutput) {
        self.config.empty_clause_output = mode;
    }

    /// Clause outputs as used for learning (empty clauses match).
    pub fn clause_outputs(&self, lits: &LiteralVector) -> Result<ClauseOutputs> {
        self.evaluate(lits, EmptyClauseOutput::Paper)
    }

    fn evaluate(&self, lits: &LiteralVector, empty: EmptyClauseOutput) -> Result<ClauseOutputs> {
        if lits.len() != self.memory.n_literals {
            return Err(Error::shape("literal vector", self.memory.n_literals, lits.len()));
        }
        let mut c = BitVector::zeros(self.memory.n_clauses);
        for j in 0..self.memory.n_clauses {
            let include = self.memory.include_words(j);
            let fires = clause_matches(include, lits.words())
                && (empty == EmptyClauseOutput::Paper || include.iter().any(|&w| w != 0));
            if fires {
                c.set(j, true);
            }
        }
        Ok(ClauseOutputs(c))
    }

    /// Vote sums for `x` under the configured empty-clause rule.
    pub fn votes(&self, x: &BitVector) -> Result<VoteVector> {
        let lits = literalize(x, self.config.n_inputs)?;
        let c = self.evaluate(&lits, self.config.empty_clause_output)?;
        vote_sums(&self.weights, &c)
    }

    pub fn predict(&self, x: &BitVector) -> Result<BitVector> {
        Ok(self.votes(x)?.unit_step())
    }

    /// Renders clause `j` as a conjunction of its included literals.
    pub fn render_clause(&self, j: usize, names: Option<&[String]>) -> Result<RenderedClause> {
        if j >= self.config.n_clauses {
            return Err(Error::OutOfRange {
                index: j,
                len: self.config.n_clauses,
            });
        }
        let o = self.config.n_inputs;
        if let Some(names) = names {
            if names.len() != o {
                return Err(Error::shape("feature names", o, names.len()));
            }
        }
        let name = |k: usize| match names {
            Some(names) => names[k].clone(),
            None => format!("x{}", k + 1),
        };
        let include = self.memory.include_words(j);
        let is_in = |k: usize| (include[k / 64] >> (k % 64)) & 1 == 1;
        let mut terms = Vec::new();
        for k in 0..o {
            if is_in(k) {
                terms.push(name(k));
            }
            if is_in(o + k) {
                terms.push(format!("NOT {}", name(k)));
            }
        }
        let text = if terms.is_empty() {
            "TRUE".to_string()
        } else {
            terms.join(" AND ")
        };
        let weights = (0..self.config.n_outputs)
            .map(|i| self.weights.get(i, j))
            .collect();
        Ok(RenderedClause {
            index: j,
            text,
            weights,
        })
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RenderedClause {
    pub index: usize,
    pub text: String,
    pub weights: Vec<i32>,
}

impl RenderedClause {
    pub fn max_abs_weight(&self) -> i32 {
        self.weights.iter().map(|w| w.abs()).max().unwrap_or(0)
    }
}

impl fmt::Display for RenderedClause {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "#{}: {} ->", self.index + 1, self.text)?;
        for w in &self.weights {
            write!(f, " {w:+}")?;
        }
        Ok(())
    }
}

/// Every weight drawn uniformly from `{-1, +1}`; memory at `N`.
pub fn init_coalesced<R: Rng + ?Sized>(config: Config, rng: &mut R) -> Result<Model> {
    config.validate()?;
    let (m, n) = (config.n_outputs, config.n_clauses);
    let values = (0..m * n)
        .map(|_| if rng.gen::<bool>() { 1 } else { -1 })
        .collect();
    let weights = WeightMatrix::from_values(m, n, values)?;
    let memory = MemoryMatrix::new(n, config.n_literals(), config.memory_depth);
    Model::from_parts(config, memory, weights)
}

/// Per-output clause partitions with fixed `±1` weights and zeros elsewhere.
///
/// The first half of each partition votes `+1`, the second half `-1`.
pub fn init_vanilla(config: Config) -> Result<Model> {
    config.validate()?;
    let (m, n) = (config.n_outputs, config.n_clauses);
    if n % m != 0 {
        return Err(Error::Config(format!(
            "vanilla mode needs n_clauses ({n}) divisible by n_outputs ({m})"
        )));
    }
    let part = n / m;
    if part % 2 != 0 {
        return Err(Error::Config(format!(
            "vanilla mode needs an even partition size, got {part}"
        )));
    }
    let mut values = vec![0i32; m * n];
    for i in 0..m {
        for r in 0..part {
            values[i * n + i * part + r] = if r < part / 2 { 1 } else { -1 };
        }
    }
    let weights = WeightMatrix::with_frozen(m, n, values, vec![true; m * n])?;
    let memory = MemoryMatrix::new(n, config.n_literals(), config.memory_depth);
    Model::from_parts(config, memory, weights)
}
