//! One training step and the epoch loop.
//!
//! A step computes, from the pre-update model, the clause outputs `c`, votes
//! `v`, margins `q` and update probabilities `d`; draws the Type I / Type II
//! selections `R1`, `R2`; then updates `W` and `C`. Memory deltas are summed
//! over every output before clipping to `[1, 2N]`.
//!
//! Rows of `C` are independent within a step, so the memory update may run in
//! parallel over clauses. All randomness comes from [`RandomSource`] keyed by
//! coordinate, so the result does not depend on the thread count.

use rand::seq::SliceRandom;
use rayon::prelude::*;

use crate::bits::{tail_mask, BitMatrix, BitVector};
use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::model::{literalize, vote_sums, ActionMatrix, ClauseOutputs, LiteralVector, MemoryMatrix, Model, VoteVector, WeightMatrix};
use crate::rng::{threshold, OutputKey, PairStream, RandomSource, Site, StepKey};

/// Work size (clauses × literals) above which the memory update fans out
/// over the rayon pool.
const PARALLEL_MIN_WORK: usize = 1 << 15;

/// `q_i = t` if `y_i = 1`, else `-t`.
pub fn margins(y: &BitVector, t: u32) -> Vec<i64> {
    y.iter()
        .map(|b| if b { i64::from(t) } else { -i64::from(t) })
        .collect()
}

/// `d_i = |q_i − clip(v_i, −t, t)| / 2t`.
pub fn update_probabilities(votes: &[i64], margins: &[i64], t: u32) -> Result<Vec<f64>> {
    if t == 0 {
        return Err(Error::Config("voting margin must be positive".into()));
    }
    if votes.len() != margins.len() {
        return Err(Error::shape("margins", votes.len(), margins.len()));
    }
    let t = i64::from(t);
    Ok(votes
        .iter()
        .zip(margins)
        .map(|(&v, &q)| (q - v.clamp(-t, t)).abs() as f64 / (2 * t) as f64)
        .collect())
}

/// An `m × n` selection matrix (`R1` or `R2`).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Selection {
    n_outputs: usize,
    n_clauses: usize,
    bits: Vec<bool>,
}

impl Selection {
    pub fn zeros(n_outputs: usize, n_clauses: usize) -> Self {
        Self {
            n_outputs,
            n_clauses,
            bits: vec![false; n_outputs * n_clauses],
        }
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> bool {
        self.bits[i * self.n_clauses + j]
    }

    #[inline]
    pub fn n_outputs(&self) -> usize {
        self.n_outputs
    }

    #[inline]
    pub fn n_clauses(&self) -> usize {
        self.n_clauses
    }

    pub fn count(&self) -> usize {
        self.bits.iter().filter(|&&b| b).count()
    }

    /// Selections for output `i`.
    pub fn row(&self, i: usize) -> &[bool] {
        &self.bits[i * self.n_clauses..(i + 1) * self.n_clauses]
    }
}

fn select(
    weights: &WeightMatrix,
    y: &BitVector,
    probability: impl Fn(usize) -> f64,
    want_agreement: bool,
    site: Site,
    step: StepKey,
) -> Selection {
    let (m, n) = (weights.n_outputs(), weights.n_clauses());
    let mut out = Selection::zeros(m, n);
    for i in 0..m {
        let thr = threshold(probability(i));
        if thr == 0 {
            continue;
        }
        let yi = y.get(i);
        let key = step.output(site, i);
        for j in 0..n {
            let positive = weights.get(i, j) >= 0;
            if (yi == positive) == want_agreement
                && weights.is_related(i, j)
                && key.clause(j).below(0, thr)
            {
                out.bits[i * n + j] = true;
            }
        }
    }
    out
}

/// `R1_{i,j} = [y_i XNOR (w_{i,j} ≥ 0)] ∧ [π_{i,j} < d_i]`.
///
/// Pairs frozen at weight zero (vanilla mode, clause owned by another
/// output) are never selected.
pub fn select_type_i(weights: &WeightMatrix, y: &BitVector, d: &[f64], step: StepKey) -> Selection {
    select(weights, y, |i| d[i], true, Site::TypeI, step)
}

/// `R2_{i,j} = [y_i XOR (w_{i,j} ≥ 0)] ∧ [π_{i,j} < d_i·e]`.
pub fn select_type_ii(weights: &WeightMatrix, y: &BitVector, d: &[f64], e: f64, step: StepKey) -> Selection {
    select(weights, y, |i| d[i] * e, false, Site::TypeII, step)
}

/// Per-word masks shared by the dense feedback builders and the fused step.
#[inline(always)]
fn ia_word(fires: bool, lit: u64, base: usize, boost: bool, thr: u64, stream: PairStream) -> u64 {
    if !fires {
        0
    } else if boost {
        lit
    } else {
        stream.mask(base, lit, thr)
    }
}

#[inline(always)]
fn ib_word(fires: bool, lit: u64, valid: u64, base: usize, thr: u64, stream: PairStream) -> u64 {
    let eligible = if fires { !lit & valid } else { valid };
    stream.mask(base, eligible, thr)
}

#[inline(always)]
fn ii_word(fires: bool, lit: u64, include: u64, valid: u64) -> u64 {
    if fires {
        !lit & !include & valid
    } else {
        0
    }
}

#[inline]
fn valid_mask(w: usize, n_words: usize, n_literals: usize) -> u64 {
    if w + 1 == n_words {
        tail_mask(n_literals)
    } else {
        u64::MAX
    }
}

fn build_feedback(c: &ClauseOutputs, lits: &LiteralVector, word: impl Fn(usize, usize, u64) -> u64) -> BitMatrix {
    let n_literals = lits.len();
    let n_words = lits.words().len();
    let mut out = BitMatrix::zeros(c.len(), n_literals);
    for j in 0..c.len() {
        for w in 0..n_words {
            let mut bits = word(j, w, valid_mask(w, n_words, n_literals));
            while bits != 0 {
                let b = bits.trailing_zeros() as usize;
                out.set(j, w * 64 + b, true);
                bits &= bits - 1;
            }
        }
    }
    out
}

/// `F^Ia_i`: increments where the clause fires and the literal is true. Without
/// boosting, each entry is kept with probability `(s−1)/s`.
pub fn feedback_type_ia(
    c: &ClauseOutputs,
    lits: &LiteralVector,
    boost: bool,
    s: f64,
    step: StepKey,
    i: usize,
) -> BitMatrix {
    let thr = threshold((s - 1.0) / s);
    let key = step.output(Site::Ia, i);
    build_feedback(c, lits, |j, w, _| {
        ia_word(c.get(j), lits.words()[w], w * 64, boost, thr, key.clause(j))
    })
}

/// `F^Ib_i = B^i ∘ (¬lit ∨ ¬c)`, with `B^i` entries `π < 1/s`.
pub fn feedback_type_ib(c: &ClauseOutputs, lits: &LiteralVector, s: f64, step: StepKey, i: usize) -> BitMatrix {
    let thr = threshold(1.0 / s);
    let key = step.output(Site::Ib, i);
    build_feedback(c, lits, |j, w, valid| {
        ib_word(c.get(j), lits.words()[w], valid, w * 64, thr, key.clause(j))
    })
}

/// `F^II`: increments on excluded false literals of firing clauses.
pub fn feedback_type_ii(c: &ClauseOutputs, lits: &LiteralVector, actions: &ActionMatrix) -> BitMatrix {
    build_feedback(c, lits, |j, w, valid| {
        ii_word(c.get(j), lits.words()[w], actions.row_words(j)[w], valid)
    })
}

/// `C ← clip(C + Δ, 1, 2N)` with `Δ` given row-major `n × 2o`.
pub fn apply_memory_update(memory: &mut MemoryMatrix, delta: &[i32]) -> Result<()> {
    let (n, l) = (memory.n_clauses(), memory.n_literals());
    if delta.len() != n * l {
        return Err(Error::shape("memory delta", n * l, delta.len()));
    }
    let hi = i64::from(2 * memory.depth());
    for j in 0..n {
        for k in 0..l {
            let d = delta[j * l + k];
            if d != 0 {
                let next = (i64::from(memory.get(j, k)) + i64::from(d)).clamp(1, hi);
                memory.set(j, k, next as u32)?;
            }
        }
    }
    Ok(())
}

/// `W ← W + (R1 + R2) ∘ c ∘ (y − ȳ)`, skipping frozen entries.
pub fn apply_weight_update(
    weights: &mut WeightMatrix,
    r1: &Selection,
    r2: &Selection,
    c: &ClauseOutputs,
    y: &BitVector,
) {
    for i in 0..weights.n_outputs() {
        let step = if y.get(i) { 1 } else { -1 };
        for j in (0..weights.n_clauses()).filter(|&j| c.get(j)) {
            if r1.get(i, j) || r2.get(i, j) {
                weights.add(i, j, step);
            }
        }
    }
}

/// Intermediates of the most recent step.
#[derive(Clone, Debug)]
pub struct TrainScratch {
    pub lits: LiteralVector,
    pub c: ClauseOutputs,
    pub v: VoteVector,
    pub q: Vec<i64>,
    pub d: Vec<f64>,
    pub r1: Selection,
    pub r2: Selection,
}

struct RowContext<'a> {
    lits: &'a [u64],
    c: &'a ClauseOutputs,
    r1: &'a Selection,
    r2: &'a Selection,
    ia_keys: Vec<OutputKey>,
    ib_keys: Vec<OutputKey>,
    n_literals: usize,
    boost: bool,
    thr_ia: u64,
    thr_ib: u64,
    max_state: i64,
    depth: u32,
}

#[inline]
fn add_bits(delta: &mut [i32], base: usize, mut bits: u64, amount: i32) {
    while bits != 0 {
        let b = bits.trailing_zeros() as usize;
        delta[base + b] += amount;
        bits &= bits - 1;
    }
}

/// Per-thread buffers for [`update_row`]: the row's summed deltas and a
/// mask of the literals they touch.
struct RowBuffers {
    delta: Vec<i32>,
    touched: Vec<u64>,
}

impl RowBuffers {
    fn new(n_literals: usize, n_words: usize) -> Self {
        Self {
            delta: vec![0; n_literals],
            touched: vec![0; n_words],
        }
    }
}

#[inline]
fn step_state(states: &mut [u32], include: &mut [u64], w: usize, mut bits: u64, up: bool, ctx: &RowContext<'_>) {
    while bits != 0 {
        let b = bits.trailing_zeros() as usize;
        bits &= bits - 1;
        let k = w * 64 + b;
        let next = if up {
            (states[k] + 1).min(ctx.max_state as u32)
        } else {
            (states[k] - 1).max(1)
        };
        states[k] = next;
        if next > ctx.depth {
            include[w] |= 1 << b;
        } else {
            include[w] &= !(1 << b);
        }
    }
}

/// Feedback masks of output `i` for word `w` of row `j`: (increments, decrements).
#[inline(always)]
fn row_masks(ctx: &RowContext<'_>, i: usize, j: usize, w: usize, fires: bool, type_one: bool, include: u64) -> (u64, u64) {
    let n_words = ctx.lits.len();
    let lit = ctx.lits[w];
    let valid = valid_mask(w, n_words, ctx.n_literals);
    if type_one {
        let ib = ctx.ib_keys[i].clause(j);
        let ia = if ctx.boost { ib } else { ctx.ia_keys[i].clause(j) };
        (
            ia_word(fires, lit, w * 64, ctx.boost, ctx.thr_ia, ia),
            ib_word(fires, lit, valid, w * 64, ctx.thr_ib, ib),
        )
    } else {
        (ii_word(fires, lit, include, valid), 0)
    }
}

fn update_row(j: usize, states: &mut [u32], include: &mut [u64], ctx: &RowContext<'_>, buf: &mut RowBuffers) {
    let fires = ctx.c.get(j);
    let n_words = ctx.lits.len();
    // (output, is Type I) for every output giving this row feedback
    let mut first = None;
    let mut count = 0usize;
    for i in 0..ctx.r1.n_outputs() {
        let one = ctx.r1.get(i, j);
        if one || (fires && ctx.r2.get(i, j)) {
            count += 1;
            first.get_or_insert((i, one));
        }
    }
    let Some((i0, one0)) = first else {
        return;
    };
    if count == 1 {
        // a single contribution moves each entry by at most one step
        for w in 0..n_words {
            let (up, down) = row_masks(ctx, i0, j, w, fires, one0, include[w]);
            step_state(states, include, w, up, true, ctx);
            step_state(states, include, w, down, false, ctx);
        }
        return;
    }
    for i in 0..ctx.r1.n_outputs() {
        let one = ctx.r1.get(i, j);
        if !(one || (fires && ctx.r2.get(i, j))) {
            continue;
        }
        for w in 0..n_words {
            let (up, down) = row_masks(ctx, i, j, w, fires, one, include[w]);
            add_bits(&mut buf.delta, w * 64, up, 1);
            add_bits(&mut buf.delta, w * 64, down, -1);
            buf.touched[w] |= up | down;
        }
    }
    for w in 0..n_words {
        let mut bits = std::mem::take(&mut buf.touched[w]);
        while bits != 0 {
            let b = bits.trailing_zeros() as usize;
            bits &= bits - 1;
            let k = w * 64 + b;
            let d = std::mem::take(&mut buf.delta[k]);
            if d == 0 {
                continue;
            }
            let next = (i64::from(states[k]) + i64::from(d)).clamp(1, ctx.max_state) as u32;
            states[k] = next;
            if next > ctx.depth {
                include[w] |= 1 << b;
            } else {
                include[w] &= !(1 << b);
            }
        }
    }
}

/// Runs the learning step for one example against the model, reporting the
/// intermediates it used.
pub fn fit_example(
    model: &mut Model,
    x: &BitVector,
    y: &BitVector,
    rng: &RandomSource,
    epoch: u64,
    idx: u64,
) -> Result<TrainScratch> {
    let cfg = model.config().clone();
    if y.len() != cfg.n_outputs {
        return Err(Error::shape("target vector", cfg.n_outputs, y.len()));
    }
    let lits = literalize(x, cfg.n_inputs)?;
    let c = model.clause_outputs(&lits)?;
    let v = vote_sums(model.weights(), &c)?;
    let q = margins(y, cfg.voting_margin);
    let d = update_probabilities(&v.0, &q, cfg.voting_margin)?;
    let step = rng.step(epoch, idx);
    let r1 = select_type_i(model.weights(), y, &d, step);
    let r2 = select_type_ii(model.weights(), y, &d, cfg.multiclass_scalar, step);

    let (_, memory, weights) = model.parts_mut();
    apply_weight_update(weights, &r1, &r2, &c, y);

    if r1.count() + r2.count() > 0 {
        let n_literals = cfg.n_literals();
        let ctx = RowContext {
            lits: lits.words(),
            c: &c,
            r1: &r1,
            r2: &r2,
            ia_keys: (0..cfg.n_outputs).map(|i| step.output(Site::Ia, i)).collect(),
            ib_keys: (0..cfg.n_outputs).map(|i| step.output(Site::Ib, i)).collect(),
            n_literals,
            boost: cfg.boost_true_positive,
            thr_ia: threshold((cfg.specificity - 1.0) / cfg.specificity),
            thr_ib: threshold(1.0 / cfg.specificity),
            max_state: i64::from(cfg.max_state()),
            depth: cfg.memory_depth,
        };
        let (states, include, stride) = memory.raw_mut();
        let parallel = cfg.n_clauses * n_literals >= PARALLEL_MIN_WORK && rayon::current_num_threads() > 1;
        if parallel {
            states
                .par_chunks_mut(n_literals)
                .zip(include.par_chunks_mut(stride))
                .enumerate()
                .for_each_init(
                    || RowBuffers::new(n_literals, stride),
                    |buf, (j, (row, inc))| update_row(j, row, inc, &ctx, buf),
                );
        } else {
            let mut buf = RowBuffers::new(n_literals, stride);
            for (j, (row, inc)) in states
                .chunks_mut(n_literals)
                .zip(include.chunks_mut(stride))
                .enumerate()
            {
                update_row(j, row, inc, &ctx, &mut buf);
            }
        }
    }

    Ok(TrainScratch {
        lits,
        c,
        v,
        q,
        d,
        r1,
        r2,
    })
}

/// Visitation order for an epoch.
pub fn epoch_order(len: usize, rng: &RandomSource, epoch: u64, shuffle: bool) -> Vec<usize> {
    let mut order: Vec<usize> = (0..len).collect();
    if shuffle {
        order.shuffle(&mut rng.shuffle_rng(epoch));
    }
    order
}

/// One pass over `dataset`. Draws are keyed by `(epoch, row index)`.
pub fn fit_epoch(model: &mut Model, dataset: &Dataset, rng: &RandomSource, epoch: u64, shuffle: bool) -> Result<()> {
    if dataset.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let cfg = model.config();
    if dataset.n_inputs() != cfg.n_inputs {
        return Err(Error::shape("dataset inputs", cfg.n_inputs, dataset.n_inputs()));
    }
    if dataset.n_outputs() != cfg.n_outputs {
        return Err(Error::shape("dataset outputs", cfg.n_outputs, dataset.n_outputs()));
    }
    for r in epoch_order(dataset.len(), rng, epoch, shuffle) {
        fit_example(model, &dataset.input(r), &dataset.target(r), rng, epoch, r as u64)?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::Config;
    use crate::model::{action_map, init_vanilla};

    fn bits(v: &[u8]) -> BitVector {
        BitVector::from_u8s(v)
    }

    #[test]
    fn margin_examples() {
        assert_eq!(margins(&bits(&[1, 0, 1]), 8), vec![8, -8, 8]);
        assert_eq!(margins(&bits(&[1, 1]), 3), vec![3, 3]);
        assert_eq!(margins(&bits(&[0, 0]), 3), vec![-3, -3]);
    }

    #[test]
    fn probability_examples() {
        let t = 4;
        assert_eq!(update_probabilities(&[4, 9], &[4, 4], t).unwrap(), vec![0.0, 0.0]);
        assert_eq!(update_probabilities(&[-4, -20], &[4, 4], t).unwrap(), vec![1.0, 1.0]);
        assert_eq!(update_probabilities(&[0, 0], &[4, -4], t).unwrap(), vec![0.5, 0.5]);
        assert_eq!(update_probabilities(&[-5], &[-4], t).unwrap(), vec![0.0]);
        assert_eq!(update_probabilities(&[2], &[4], t).unwrap(), vec![0.25]);
        assert!(update_probabilities(&[0], &[0], 0).is_err());
    }

    #[test]
    fn selection_examples() {
        let step = RandomSource::new(3).step(0, 0);
        let w = WeightMatrix::from_values(1, 1, vec![2]).unwrap();
        assert!(select_type_i(&w, &bits(&[1]), &[1.0], step).get(0, 0));
        assert!(!select_type_ii(&w, &bits(&[1]), &[1.0], 1.0, step).get(0, 0));

        let w = WeightMatrix::from_values(1, 1, vec![-1]).unwrap();
        assert!(!select_type_i(&w, &bits(&[1]), &[1.0], step).get(0, 0));
        assert!(select_type_ii(&w, &bits(&[1]), &[1.0], 1.0, step).get(0, 0));

        let w = WeightMatrix::from_values(1, 1, vec![-3]).unwrap();
        assert!(select_type_i(&w, &bits(&[0]), &[1.0], step).get(0, 0));

        let w = WeightMatrix::from_values(1, 1, vec![0]).unwrap();
        assert!(select_type_ii(&w, &bits(&[0]), &[1.0], 1.0, step).get(0, 0));
        assert!(select_type_i(&w, &bits(&[1]), &[1.0], step).get(0, 0));

        let w = WeightMatrix::from_values(1, 1, vec![5]).unwrap();
        assert_eq!(select_type_i(&w, &bits(&[1]), &[0.0], step).count(), 0);
    }

    #[test]
    fn frozen_zero_pairs_are_not_selected() {
        let model = init_vanilla(Config::new(2, 4, 1)).unwrap();
        let step = RandomSource::new(0).step(0, 0);
        let r1 = select_type_i(model.weights(), &bits(&[1, 0]), &[1.0, 1.0], step);
        let r2 = select_type_ii(model.weights(), &bits(&[1, 0]), &[1.0, 1.0], 1.0, step);
        assert_eq!(r1.row(0), &[true, false, false, false]);
        assert_eq!(r1.row(1), &[false, false, false, true]);
        assert_eq!(r2.row(0), &[false, true, false, false]);
        assert_eq!(r2.row(1), &[false, false, true, false]);
    }

    #[test]
    fn type_ia_examples() {
        let step = RandomSource::new(1).step(0, 0);
        let lits = literalize(&bits(&[1, 0]), 2).unwrap();
        let c = ClauseOutputs::from_bits(bits(&[1, 0]));
        let f = feedback_type_ia(&c, &lits, true, 5.0, step, 0);
        assert_eq!(f.row(0), bits(&[1, 0, 0, 1]));
        assert_eq!(f.row(1), bits(&[0, 0, 0, 0]));

        // without boosting, s = 1 never reinforces
        let f = feedback_type_ia(&c, &lits, false, 1.0, step, 0);
        assert_eq!(f.row(0).count_ones(), 0);
    }

    #[test]
    fn type_ib_examples() {
        let step = RandomSource::new(1).step(0, 0);
        let lits = literalize(&bits(&[1, 0]), 2).unwrap();
        let c = ClauseOutputs::from_bits(bits(&[1, 0]));
        let f = feedback_type_ib(&c, &lits, 1.0, step, 0);
        assert_eq!(f.row(0), bits(&[0, 1, 1, 0]));
        assert_eq!(f.row(1), bits(&[1, 1, 1, 1]));
    }

    #[test]
    fn type_ii_example_row() {
        // N = 4, row [8, 1, 2, 1] includes x1 only; x = [1, 1]
        let mut memory = MemoryMatrix::from_states(1, 4, 4, vec![8, 1, 2, 1]).unwrap();
        let lits = literalize(&bits(&[1, 1]), 2).unwrap();
        let a = action_map(&memory).unwrap();
        let c = clause_outputs_of(&a, &lits);
        assert!(c.get(0));
        let f = feedback_type_ii(&c, &lits, &a);
        assert_eq!(f.row(0), bits(&[0, 0, 1, 1]));
        let delta: Vec<i32> = f.row(0).iter().map(i32::from).collect();
        apply_memory_update(&mut memory, &delta).unwrap();
        assert_eq!(memory.row(0), &[8, 1, 3, 2]);

        let idle = ClauseOutputs::from_bits(bits(&[0]));
        assert_eq!(feedback_type_ii(&idle, &lits, &a).row(0).count_ones(), 0);
    }

    fn clause_outputs_of(a: &ActionMatrix, lits: &LiteralVector) -> ClauseOutputs {
        crate::model::clause_outputs(a, lits).unwrap()
    }

    #[test]
    fn memory_clipping() {
        let mut memory = MemoryMatrix::from_states(1, 3, 4, vec![8, 1, 7]).unwrap();
        apply_memory_update(&mut memory, &[1, -1, 2]).unwrap();
        assert_eq!(memory.row(0), &[8, 1, 8]);
        assert!(apply_memory_update(&mut memory, &[1]).is_err());
    }

    #[test]
    fn weight_update_examples() {
        let c = ClauseOutputs::from_bits(bits(&[1, 1, 0]));
        let mut r1 = Selection::zeros(1, 3);
        let mut r2 = Selection::zeros(1, 3);
        r1.bits[0] = true;
        r2.bits[1] = true;
        r1.bits[2] = true;
        let mut w = WeightMatrix::from_values(1, 3, vec![3, -3, 7]).unwrap();
        apply_weight_update(&mut w, &r1, &r2, &c, &bits(&[1]));
        assert_eq!(w.values(), &[4, -2, 7]);

        let mut frozen = WeightMatrix::with_frozen(1, 3, vec![3, -3, 7], vec![true; 3]).unwrap();
        apply_weight_update(&mut frozen, &r1, &r2, &c, &bits(&[1]));
        assert_eq!(frozen.values(), &[3, -3, 7]);
    }

    #[test]
    fn saturated_margins_change_nothing() {
        // weights all +1 and every clause empty: v = n ≥ t for y = 1
        let config = Config::new(1, 6, 3).with_voting_margin(4).with_memory_depth(3);
        let memory = MemoryMatrix::new(6, 6, 3);
        let weights = WeightMatrix::from_values(1, 6, vec![1; 6]).unwrap();
        let mut model = Model::from_parts(config, memory, weights).unwrap();
        let before = model.clone();
        let scratch = fit_example(&mut model, &bits(&[1, 0, 1]), &bits(&[1]), &RandomSource::new(0), 0, 0).unwrap();
        assert_eq!(scratch.d, vec![0.0]);
        assert_eq!(model, before);
    }

    #[test]
    fn epoch_order_is_deterministic() {
        let rng = RandomSource::new(12);
        assert_eq!(epoch_order(5, &rng, 0, false), vec![0, 1, 2, 3, 4]);
        let a = epoch_order(100, &rng, 3, true);
        assert_eq!(a, epoch_order(100, &rng, 3, true));
        assert_ne!(a, epoch_order(100, &rng, 4, true));
        let mut sorted = a.clone();
        sorted.sort_unstable();
        assert_eq!(sorted, (0..100).collect::<Vec<_>>());
    }

    #[test]
    fn empty_dataset_rejected() {
        let mut model = Model::coalesced(Config::new(1, 2, 2)).unwrap();
        let ds = Dataset::new(BitMatrix::zeros(0, 2), BitMatrix::zeros(0, 1)).unwrap();
        assert!(matches!(
            fit_epoch(&mut model, &ds, &RandomSource::new(0), 0, false),
            Err(Error::EmptyDataset)
        ));
    }
}
