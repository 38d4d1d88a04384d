//! Metrics and the repeated-trial protocol.

use std::io::Write;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::bits::BitMatrix;
use crate::config::Config;
use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::learn::fit_epoch;
use crate::model::{init_vanilla, Model};
use crate::rng::RandomSource;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScoreMode {
    /// Single-label: the class with the largest score must be the true class.
    #[default]
    Argmax,
    /// Every output bit scored on its own.
    PerOutput,
}

/// Index of the largest value; ties go to the lowest index.
pub fn argmax<T: PartialOrd + Copy>(values: &[T]) -> Option<usize> {
    let mut best: Option<usize> = None;
    for (i, &v) in values.iter().enumerate() {
        match best {
            Some(b) if values[b] >= v => {}
            _ => best = Some(i),
        }
    }
    best
}

fn row_bits(m: &BitMatrix, r: usize) -> Vec<u8> {
    (0..m.cols()).map(|c| u8::from(m.get(r, c))).collect()
}

/// Fraction of rows (argmax) or bits (per output) that agree.
pub fn accuracy(pred: &BitMatrix, truth: &BitMatrix, mode: ScoreMode) -> Result<f64> {
    if pred.rows() != truth.rows() || pred.cols() != truth.cols() {
        return Err(Error::shape(
            "prediction matrix",
            truth.rows() * truth.cols(),
            pred.rows() * pred.cols(),
        ));
    }
    if truth.rows() == 0 {
        return Err(Error::EmptyDataset);
    }
    match mode {
        ScoreMode::Argmax => {
            let hits = (0..truth.rows())
                .filter(|&r| {
                    let label = (0..truth.cols()).find(|&c| truth.get(r, c));
                    label.is_some() && argmax(&row_bits(pred, r)) == label
                })
                .count();
            Ok(hits as f64 / truth.rows() as f64)
        }
        ScoreMode::PerOutput => {
            let total = truth.rows() * truth.cols();
            let hits = (0..truth.rows())
                .map(|r| (0..truth.cols()).filter(|&c| pred.get(r, c) == truth.get(r, c)).count())
                .sum::<usize>();
            Ok(hits as f64 / total as f64)
        }
    }
}

/// `2PR / (P + R)` for `class`, or 0 when both are 0.
pub fn per_class_f1(pred: &[usize], truth: &[usize], class: usize) -> f64 {
    let mut tp = 0usize;
    let mut fp = 0usize;
    let mut fn_ = 0usize;
    for (&p, &t) in pred.iter().zip(truth) {
        match (p == class, t == class) {
            (true, true) => tp += 1,
            (true, false) => fp += 1,
            (false, true) => fn_ += 1,
            _ => {}
        }
    }
    let precision = if tp + fp == 0 { 0.0 } else { tp as f64 / (tp + fp) as f64 };
    let recall = if tp + fn_ == 0 { 0.0 } else { tp as f64 / (tp + fn_) as f64 };
    if precision + recall == 0.0 {
        0.0
    } else {
        2.0 * precision * recall / (precision + recall)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Evaluation {
    pub n_examples: usize,
    /// Argmax over vote sums.
    pub accuracy_argmax: f64,
    /// Unit-step outputs against target bits.
    pub accuracy_per_output: f64,
    pub f1: Vec<f64>,
}

impl Evaluation {
    pub fn accuracy(&self, mode: ScoreMode) -> f64 {
        match mode {
            ScoreMode::Argmax => self.accuracy_argmax,
            ScoreMode::PerOutput => self.accuracy_per_output,
        }
    }
}

/// Scores `model` on every row of `dataset`. Rows without a set target bit
/// count as argmax misses and are skipped for F1.
pub fn evaluate(model: &Model, dataset: &Dataset) -> Result<Evaluation> {
    if dataset.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let cfg = model.config();
    if dataset.n_inputs() != cfg.n_inputs || dataset.n_outputs() != cfg.n_outputs {
        return Err(Error::shape(
            "dataset (inputs × outputs)",
            cfg.n_inputs * cfg.n_outputs,
            dataset.n_inputs() * dataset.n_outputs(),
        ));
    }
    let m = cfg.n_outputs;
    let mut argmax_hits = 0usize;
    let mut bit_hits = 0usize;
    let mut pred_labels = Vec::with_capacity(dataset.len());
    let mut true_labels = Vec::with_capacity(dataset.len());
    for r in 0..dataset.len() {
        let votes = model.votes(&dataset.input(r))?;
        let target = dataset.target(r);
        let predicted = argmax(&votes.0).unwrap_or(0);
        let bits = votes.unit_step();
        bit_hits += (0..m).filter(|&i| bits.get(i) == target.get(i)).count();
        if let Some(label) = target.first_one() {
            argmax_hits += usize::from(predicted == label);
            pred_labels.push(predicted);
            true_labels.push(label);
        }
    }
    let f1 = (0..m).map(|c| per_class_f1(&pred_labels, &true_labels, c)).collect();
    Ok(Evaluation {
        n_examples: dataset.len(),
        accuracy_argmax: argmax_hits as f64 / dataset.len() as f64,
        accuracy_per_output: bit_hits as f64 / (dataset.len() * m) as f64,
        f1,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrialSpec {
    pub config: Config,
    pub n_trials: usize,
    pub n_epochs: usize,
    pub tail: usize,
    pub shuffle: bool,
    pub vanilla: bool,
    pub mode: ScoreMode,
    /// Also score the training set after every epoch.
    pub eval_train: bool,
}

impl TrialSpec {
    pub fn new(config: Config) -> Self {
        Self {
            config,
            n_trials: 10,
            n_epochs: 100,
            tail: 25,
            shuffle: true,
            vanilla: false,
            mode: ScoreMode::Argmax,
            eval_train: true,
        }
    }

    fn validate(&self) -> Result<()> {
        if self.n_trials == 0 || self.n_epochs == 0 {
            return Err(Error::Config("trials and epochs must be positive".into()));
        }
        if self.tail == 0 || self.tail > self.n_epochs {
            return Err(Error::Config(format!(
                "tail must be in 1..={}, got {}",
                self.n_epochs, self.tail
            )));
        }
        self.config.validate()
    }

    /// Seed of trial `k`.
    pub fn trial_seed(&self, k: usize) -> u64 {
        self.config.seed.wrapping_add(k as u64)
    }

    /// Fresh model for trial `k`.
    pub fn init(&self, k: usize) -> Result<Model> {
        let config = self.config.clone().with_seed(self.trial_seed(k));
        if self.vanilla {
            init_vanilla(config)
        } else {
            Model::coalesced(config)
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    pub trial: usize,
    pub epoch: usize,
    pub train_accuracy: Option<f64>,
    pub test_accuracy: Option<f64>,
    pub train_seconds: f64,
    pub eval_seconds: f64,
}

impl EpochRecord {
    fn test_or_nan(&self) -> f64 {
        self.test_accuracy.unwrap_or(f64::NAN)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrialReport {
    pub seed: u64,
    pub epochs: Vec<EpochRecord>,
    /// Per-class F1 on the test set after the last epoch (empty without one).
    pub final_f1: Vec<f64>,
}

impl TrialReport {
    pub fn tail_mean(&self, tail: usize) -> f64 {
        let tail = &self.epochs[self.epochs.len() - tail..];
        tail.iter().map(EpochRecord::test_or_nan).sum::<f64>() / tail.len() as f64
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    /// Mean over trials of each trial's mean tail accuracy.
    pub mean: f64,
    /// Nearest-rank 95th percentile of all tail-epoch accuracies.
    pub p95: f64,
    pub peak: f64,
    pub mean_train_seconds: f64,
    pub mean_eval_seconds: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrialsReport {
    pub spec: TrialSpec,
    pub trials: Vec<TrialReport>,
    pub summary: Summary,
}

/// Nearest-rank percentile of `values` (`q` in `(0, 1]`).
pub fn percentile(values: &[f64], q: f64) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let rank = ((q * sorted.len() as f64).ceil() as usize).clamp(1, sorted.len());
    Some(sorted[rank - 1])
}

pub fn summarize(trials: &[TrialReport], tail: usize) -> Summary {
    let mean = trials.iter().map(|t| t.tail_mean(tail)).sum::<f64>() / trials.len() as f64;
    let tail_values: Vec<f64> = trials
        .iter()
        .flat_map(|t| t.epochs[t.epochs.len() - tail..].iter().map(EpochRecord::test_or_nan))
        .collect();
    let all: Vec<&EpochRecord> = trials.iter().flat_map(|t| &t.epochs).collect();
    let n = all.len() as f64;
    Summary {
        mean,
        p95: percentile(&tail_values, 0.95).unwrap_or(0.0),
        peak: tail_values.iter().copied().fold(f64::NEG_INFINITY, f64::max),
        mean_train_seconds: all.iter().map(|e| e.train_seconds).sum::<f64>() / n,
        mean_eval_seconds: all.iter().map(|e| e.eval_seconds).sum::<f64>() / n,
    }
}

/// Trains one trial, calling `on_epoch` after each epoch.
pub fn run_trial(
    spec: &TrialSpec,
    k: usize,
    train: &Dataset,
    test: Option<&Dataset>,
    on_epoch: &mut dyn FnMut(&EpochRecord),
) -> Result<(TrialReport, Model)> {
    let mut model = spec.init(k)?;
    let rng = RandomSource::new(spec.trial_seed(k));
    let mut epochs = Vec::with_capacity(spec.n_epochs);
    let mut last = None;
    for epoch in 0..spec.n_epochs {
        let start = Instant::now();
        fit_epoch(&mut model, train, &rng, epoch as u64, spec.shuffle)?;
        let train_seconds = start.elapsed().as_secs_f64();
        let start = Instant::now();
        let test_eval = test.map(|t| evaluate(&model, t)).transpose()?;
        let train_accuracy = if spec.eval_train {
            Some(evaluate(&model, train)?.accuracy(spec.mode))
        } else {
            None
        };
        let record = EpochRecord {
            trial: k,
            epoch,
            train_accuracy,
            test_accuracy: test_eval.as_ref().map(|e| e.accuracy(spec.mode)),
            train_seconds,
            eval_seconds: start.elapsed().as_secs_f64(),
        };
        on_epoch(&record);
        epochs.push(record);
        last = test_eval;
    }
    let report = TrialReport {
        seed: spec.trial_seed(k),
        epochs,
        final_f1: last.map(|e| e.f1).unwrap_or_default(),
    };
    Ok((report, model))
}

/// Runs `n_trials` independent trials, each from a fresh model seeded with
/// `seed + trial`.
pub fn run_trials(
    spec: &TrialSpec,
    train: &Dataset,
    test: &Dataset,
    on_epoch: &mut dyn FnMut(&EpochRecord),
) -> Result<TrialsReport> {
    spec.validate()?;
    let trials = (0..spec.n_trials)
        .map(|k| run_trial(spec, k, train, Some(test), on_epoch).map(|(r, _)| r))
        .collect::<Result<Vec<_>>>()?;
    let summary = summarize(&trials, spec.tail);
    Ok(TrialsReport {
        spec: spec.clone(),
        trials,
        summary,
    })
}

pub const CSV_HEADER: &str = "trial,seed,epoch,train_accuracy,test_accuracy,train_seconds,eval_seconds";

/// One row per epoch per trial. Accuracies not measured are left blank.
pub fn write_csv<W: Write>(out: &mut W, trials: &[TrialReport]) -> std::io::Result<()> {
    writeln!(out, "{CSV_HEADER}")?;
    for t in trials {
        for e in &t.epochs {
            let cell = |a: Option<f64>| a.map(|a| a.to_string()).unwrap_or_default();
            writeln!(
                out,
                "{},{},{},{},{},{:.6},{:.6}",
                e.trial,
                t.seed,
                e.epoch,
                cell(e.train_accuracy),
                cell(e.test_accuracy),
                e.train_seconds,
                e.eval_seconds
            )?;
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bits::BitVector;
    use crate::data::generate_noisy_xor;
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn matrix(rows: &[&[u8]]) -> BitMatrix {
        let rows: Vec<BitVector> = rows.iter().map(|r| BitVector::from_u8s(r)).collect();
        BitMatrix::from_rows(rows[0].len(), &rows).unwrap()
    }

    #[test]
    fn accuracy_examples() {
        let a = matrix(&[&[1, 0], &[0, 1], &[1, 0], &[0, 1]]);
        assert_eq!(accuracy(&a, &a, ScoreMode::Argmax).unwrap(), 1.0);
        assert_eq!(accuracy(&a, &a, ScoreMode::PerOutput).unwrap(), 1.0);
        assert_eq!(accuracy(&a.complement(), &a, ScoreMode::PerOutput).unwrap(), 0.0);
        let p = matrix(&[&[1, 0], &[0, 1], &[1, 0], &[1, 0]]);
        assert_eq!(accuracy(&p, &a, ScoreMode::Argmax).unwrap(), 0.75);
        assert!(accuracy(&p, &matrix(&[&[1, 0]]), ScoreMode::Argmax).is_err());
    }

    #[test]
    fn argmax_ties_to_lowest() {
        assert_eq!(argmax(&[3, 5, 5, 1]), Some(1));
        assert_eq!(argmax(&[-2, -2]), Some(0));
        assert_eq!(argmax::<i64>(&[]), None);
    }

    #[test]
    fn f1_examples() {
        assert_eq!(per_class_f1(&[0, 1, 2], &[0, 1, 2], 1), 1.0);
        assert_eq!(per_class_f1(&[0, 0, 0], &[0, 2, 2], 2), 0.0);
        // tp = 1, fp = 1, fn = 1
        assert_eq!(per_class_f1(&[1, 1, 0], &[1, 0, 1], 1), 0.5);
        assert_eq!(per_class_f1(&[0], &[0], 3), 0.0);
    }

    #[test]
    fn percentile_nearest_rank() {
        let v: Vec<f64> = (1..=100).map(f64::from).collect();
        assert_eq!(percentile(&v, 0.95), Some(95.0));
        assert_eq!(percentile(&[0.3], 0.95), Some(0.3));
        assert_eq!(percentile(&[], 0.95), None);
    }

    fn small_xor() -> (Dataset, Dataset) {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let split = generate_noisy_xor(200, 200, 0.1, &mut rng).unwrap();
        (split.train, split.test)
    }

    fn small_spec() -> TrialSpec {
        let config = Config::new(2, 20, 16).with_voting_margin(10).with_specificity(3.0).with_seed(9);
        TrialSpec {
            n_trials: 2,
            n_epochs: 3,
            tail: 2,
            ..TrialSpec::new(config)
        }
    }

    #[test]
    fn single_trial_tail_one_is_final_epoch() {
        let (train, test) = small_xor();
        let spec = TrialSpec {
            n_trials: 1,
            tail: 1,
            ..small_spec()
        };
        let report = run_trials(&spec, &train, &test, &mut |_| {}).unwrap();
        let last = report.trials[0].epochs.last().unwrap().test_accuracy.unwrap();
        assert_eq!(report.summary.mean, last);
        assert_eq!(report.trials[0].epochs.len(), 3);
    }

    #[test]
    fn trials_are_reproducible() {
        let (train, test) = small_xor();
        let a = run_trials(&small_spec(), &train, &test, &mut |_| {}).unwrap();
        let b = run_trials(&small_spec(), &train, &test, &mut |_| {}).unwrap();
        assert_eq!(a.summary.mean, b.summary.mean);
        let acc = |r: &TrialsReport| -> Vec<f64> {
            r.trials.iter().flat_map(|t| t.epochs.iter().map(EpochRecord::test_or_nan)).collect()
        };
        assert_eq!(acc(&a), acc(&b));
        assert_eq!(a.trials[1].seed, 10);
    }

    #[test]
    fn invalid_counts() {
        let (train, test) = small_xor();
        for spec in [
            TrialSpec { tail: 4, ..small_spec() },
            TrialSpec { tail: 0, ..small_spec() },
            TrialSpec { n_trials: 0, ..small_spec() },
        ] {
            assert!(run_trials(&spec, &train, &test, &mut |_| {}).is_err());
        }
    }

    #[test]
    fn csv_rows() {
        let report = TrialReport {
            seed: 3,
            epochs: vec![EpochRecord {
                trial: 0,
                epoch: 0,
                train_accuracy: None,
                test_accuracy: Some(0.5),
                train_seconds: 0.25,
                eval_seconds: 0.0,
            }],
            final_f1: vec![],
        };
        let mut out = Vec::new();
        write_csv(&mut out, &[report]).unwrap();
        let text = String::from_utf8(out).unwrap();
        assert_eq!(text, format!("{CSV_HEADER}\n0,3,0,,0.5,0.250000,0.000000\n"));
    }

    fn record(acc: f64) -> EpochRecord {
        EpochRecord {
            trial: 0,
            epoch: 0,
            train_accuracy: None,
            test_accuracy: Some(acc),
            train_seconds: 0.0,
            eval_seconds: 0.0,
        }
    }

    proptest! {
        #[test]
        fn summary_order_statistics(accs in proptest::collection::vec(
            proptest::collection::vec(0.0f64..=1.0, 5), 1..6)) {
            let trials: Vec<TrialReport> = accs
                .iter()
                .map(|a| TrialReport { seed: 0, epochs: a.iter().map(|&x| record(x)).collect(), final_f1: vec![] })
                .collect();
            let s = summarize(&trials, 3);
            prop_assert!(s.peak >= s.p95);
            prop_assert!(s.peak >= s.mean - 1e-12);
            let lo = accs.iter().flat_map(|a| a[2..].iter().copied()).fold(f64::INFINITY, f64::min);
            prop_assert!(s.mean >= lo - 1e-12);
        }
    }
}
