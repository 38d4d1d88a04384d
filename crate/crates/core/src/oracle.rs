//! Dense reference transcription of the CoTM equations.
//!
//! Nothing here is packed, fused or parallel. Every intermediate matrix of the
//! learning step is materialised as `Vec<Vec<_>>` and combined exactly as the
//! equations read, so the optimized engine in [`crate::learn`] can be checked
//! against it entry by entry.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::bits::BitVector;
use crate::config::Config;
use crate::error::{Error, Result};
use crate::learn;
use crate::model::{MemoryMatrix, Model, WeightMatrix};
use crate::rng::{RandomSource, Site};

/// Largest `n · o` the oracle will accept.
pub const ORACLE_MAX_SIZE: usize = 1_000_000;

type Dense<T> = Vec<Vec<T>>;

#[derive(Clone, Debug, PartialEq)]
pub struct OracleModel {
    pub config: Config,
    /// `n × 2o`.
    pub c: Dense<i64>,
    /// `m × n`.
    pub w: Dense<i64>,
    pub frozen: Dense<bool>,
}

impl OracleModel {
    pub fn from_model(model: &Model) -> Result<Self> {
        let cfg = model.config().clone();
        if cfg.n_clauses * cfg.n_inputs > ORACLE_MAX_SIZE {
            return Err(Error::Config(format!(
                "oracle refuses n·o = {} > {ORACLE_MAX_SIZE}",
                cfg.n_clauses * cfg.n_inputs
            )));
        }
        let c = (0..cfg.n_clauses)
            .map(|j| model.memory().row(j).iter().map(|&s| i64::from(s)).collect())
            .collect();
        let w = (0..cfg.n_outputs)
            .map(|i| model.weights().row(i).iter().map(|&v| i64::from(v)).collect())
            .collect();
        let frozen = (0..cfg.n_outputs)
            .map(|i| (0..cfg.n_clauses).map(|j| model.weights().is_frozen(i, j)).collect())
            .collect();
        Ok(Self {
            config: cfg,
            c,
            w,
            frozen,
        })
    }

    pub fn to_model(&self) -> Result<Model> {
        let cfg = &self.config;
        let states = self
            .c
            .iter()
            .flatten()
            .map(|&s| u32::try_from(s).map_err(|_| Error::Invariant(format!("state {s} out of range"))))
            .collect::<Result<Vec<_>>>()?;
        let memory = MemoryMatrix::from_states(cfg.n_clauses, cfg.n_literals(), cfg.memory_depth, states)?;
        let values = self
            .w
            .iter()
            .flatten()
            .map(|&v| i32::try_from(v).map_err(|_| Error::Invariant(format!("weight {v} overflows"))))
            .collect::<Result<Vec<_>>>()?;
        let frozen = self.frozen.iter().flatten().copied().collect();
        let weights = WeightMatrix::with_frozen(cfg.n_outputs, cfg.n_clauses, values, frozen)?;
        Model::from_parts(cfg.clone(), memory, weights)
    }
}

fn literals(x: &[bool]) -> Vec<bool> {
    x.iter().copied().chain(x.iter().map(|b| !b)).collect()
}

/// `G(C)`.
fn g(c: &Dense<i64>, n: i64) -> Dense<bool> {
    c.iter().map(|row| row.iter().map(|&v| v >= n + 1).collect()).collect()
}

/// `And(Imply(A, lits))`.
fn and_imply(a: &Dense<bool>, lits: &[bool]) -> Vec<bool> {
    a.iter()
        .map(|row| row.iter().zip(lits).all(|(&inc, &lit)| !inc || lit))
        .collect()
}

fn mat_vec(w: &Dense<i64>, c: &[bool]) -> Vec<i64> {
    w.iter()
        .map(|row| row.iter().zip(c).map(|(&wij, &cj)| wij * i64::from(cj)).sum())
        .collect()
}

fn check_shapes(model: &OracleModel, x: &[bool]) -> Result<()> {
    let cfg = &model.config;
    if x.len() != cfg.n_inputs {
        return Err(Error::shape("input vector", cfg.n_inputs, x.len()));
    }
    if cfg.n_clauses * cfg.n_inputs > ORACLE_MAX_SIZE {
        return Err(Error::Config("instance too large for the oracle".into()));
    }
    Ok(())
}

/// `U(W · And(Imply(G(C), x)))`, empty clauses evaluating to 1.
pub fn oracle_predict(model: &OracleModel, x: &[bool]) -> Result<Vec<bool>> {
    check_shapes(model, x)?;
    let a = g(&model.c, i64::from(model.config.memory_depth));
    let c = and_imply(&a, &literals(x));
    Ok(mat_vec(&model.w, &c).into_iter().map(|v| v >= 0).collect())
}

/// One learning step. `clip_hi` is `2N` except under fault injection.
fn fit_with_ceiling(
    model: &mut OracleModel,
    x: &[bool],
    y: &[bool],
    rng: &RandomSource,
    epoch: u64,
    idx: u64,
    clip_hi: i64,
) -> Result<()> {
    check_shapes(model, x)?;
    let cfg = model.config.clone();
    let (m, n, l) = (cfg.n_outputs, cfg.n_clauses, cfg.n_literals());
    if y.len() != m {
        return Err(Error::shape("target vector", m, y.len()));
    }
    let t = i64::from(cfg.voting_margin);
    let s = cfg.specificity;
    let uniform = |site, i, j, k| rng.uniform(epoch, idx, site, i, j, k);

    let lits = literals(x);
    let a = g(&model.c, i64::from(cfg.memory_depth));
    let c = and_imply(&a, &lits);
    let v = mat_vec(&model.w, &c);
    let q: Vec<i64> = y.iter().map(|&yi| if yi { t } else { -t }).collect();
    let d: Vec<f64> = (0..m)
        .map(|i| (q[i] - v[i].clamp(-t, t)).abs() as f64 / (2 * t) as f64)
        .collect();

    let related = |i: usize, j: usize| !(model.frozen[i][j] && model.w[i][j] == 0);
    let mut r1 = vec![vec![false; n]; m];
    let mut r2 = vec![vec![false; n]; m];
    for i in 0..m {
        for j in 0..n {
            let positive = model.w[i][j] >= 0;
            r1[i][j] = y[i] == positive && related(i, j) && uniform(Site::TypeI, i, j, 0) < d[i];
            r2[i][j] = y[i] != positive
                && related(i, j)
                && uniform(Site::TypeII, i, j, 0) < d[i] * cfg.multiclass_scalar;
        }
    }

    let mut delta = vec![vec![0i64; l]; n];
    for i in 0..m {
        let b: Dense<bool> = (0..n)
            .map(|j| (0..l).map(|k| uniform(Site::Ib, i, j, k) < 1.0 / s).collect())
            .collect();
        let f_ia: Dense<bool> = (0..n)
            .map(|j| {
                (0..l)
                    .map(|k| {
                        c[j] && lits[k]
                            && (cfg.boost_true_positive || uniform(Site::Ia, i, j, k) < (s - 1.0) / s)
                    })
                    .collect()
            })
            .collect();
        let f_ib: Dense<bool> = (0..n)
            .map(|j| (0..l).map(|k| b[j][k] && (!lits[k] || !c[j])).collect())
            .collect();
        let f_ii: Dense<bool> = (0..n)
            .map(|j| (0..l).map(|k| c[j] && !lits[k] && !a[j][k]).collect())
            .collect();
        let q1: Dense<bool> = (0..n).map(|j| vec![r1[i][j]; l]).collect();
        let q2: Dense<bool> = (0..n).map(|j| vec![r2[i][j]; l]).collect();
        for j in 0..n {
            for k in 0..l {
                delta[j][k] += i64::from(q2[j][k] && f_ii[j][k]) + i64::from(q1[j][k] && f_ia[j][k])
                    - i64::from(q1[j][k] && f_ib[j][k]);
            }
        }
    }

    for j in 0..n {
        for k in 0..l {
            model.c[j][k] = (model.c[j][k] + delta[j][k]).clamp(1, clip_hi);
        }
    }
    for i in 0..m {
        let sign = if y[i] { 1 } else { -1 };
        for j in 0..n {
            if !model.frozen[i][j] {
                model.w[i][j] += (i64::from(r1[i][j]) + i64::from(r2[i][j])) * i64::from(c[j]) * sign;
            }
        }
    }
    Ok(())
}

pub fn oracle_fit_example(
    model: &mut OracleModel,
    x: &[bool],
    y: &[bool],
    rng: &RandomSource,
    epoch: u64,
    idx: u64,
) -> Result<()> {
    let hi = i64::from(2 * model.config.memory_depth);
    fit_with_ceiling(model, x, y, rng, epoch, idx, hi)
}

/// Deliberate defects used to confirm the equivalence harness catches them.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Fault {
    /// Clip the memory at `2N − 1` instead of `2N`.
    ClipCeiling,
}

/// A randomly drawn small machine plus the example stream it is trained on.
#[derive(Clone, Debug)]
pub struct Instance {
    pub seed: u64,
    pub index: usize,
    pub model: Model,
    pub examples: Vec<(BitVector, BitVector)>,
}

fn random_bits<R: Rng>(rng: &mut R, len: usize) -> BitVector {
    let bits: Vec<bool> = (0..len).map(|_| rng.gen()).collect();
    BitVector::from_bools(&bits)
}

/// Draws an instance with `m ≤ 4`, `n ≤ 8`, `o ≤ 6`, `N ≤ 4`, `t ≤ 8`,
/// `s ∈ {1, 2, 4}` and `e ∈ {1, 1/(m−1)}`. Memory and weights start from
/// random values so that clipping and sign changes occur early.
pub fn random_instance(seed: u64, index: usize, steps: usize) -> Instance {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ (index as u64).wrapping_mul(0x2545_F491_4F6C_DD1D));
    let m = rng.gen_range(1..=4);
    let n = rng.gen_range(1..=8);
    let o = rng.gen_range(1..=6);
    let depth = rng.gen_range(1..=4u32);
    let mut config = Config::new(m, n, o)
        .with_memory_depth(depth)
        .with_voting_margin(rng.gen_range(1..=8))
        .with_specificity([1.0, 2.0, 4.0][rng.gen_range(0..3)])
        .with_boost(rng.gen())
        .with_seed(seed);
    if m > 1 && rng.gen() {
        config = config.one_hot();
    }
    let states = (0..n * 2 * o).map(|_| rng.gen_range(1..=2 * depth)).collect();
    let memory = MemoryMatrix::from_states(n, 2 * o, depth, states).expect("valid states");
    let vanilla = n % m == 0 && (n / m) % 2 == 0 && rng.gen_bool(0.25);
    let weights = if vanilla {
        crate::model::init_vanilla(config.clone())
            .expect("vanilla preconditions checked")
            .weights()
            .clone()
    } else {
        let values = (0..m * n).map(|_| rng.gen_range(-3..=3)).collect();
        WeightMatrix::from_values(m, n, values).expect("shape")
    };
    let model = Model::from_parts(config, memory, weights).expect("valid instance");
    let examples = (0..steps)
        .map(|_| (random_bits(&mut rng, o), random_bits(&mut rng, m)))
        .collect();
    Instance {
        seed,
        index,
        model,
        examples,
    }
}

/// First disagreement between engine and oracle.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Divergence {
    pub seed: u64,
    pub instance: usize,
    pub step: usize,
    /// `"C"`, `"W"` or `"y"`.
    pub matrix: &'static str,
    pub index: (usize, usize),
    pub oracle: i64,
    pub engine: i64,
}

impl std::fmt::Display for Divergence {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "divergence: seed {} instance {} step {} {}[{}][{}]: oracle {} engine {}",
            self.seed, self.instance, self.step, self.matrix, self.index.0, self.index.1, self.oracle, self.engine
        )
    }
}

fn compare(
    inst: &Instance,
    step: usize,
    oracle: &OracleModel,
    engine: &Model,
) -> Option<Divergence> {
    let div = |matrix, index, oracle, engine| Divergence {
        seed: inst.seed,
        instance: inst.index,
        step,
        matrix,
        index,
        oracle,
        engine,
    };
    for (j, row) in oracle.c.iter().enumerate() {
        for (k, &want) in row.iter().enumerate() {
            let got = i64::from(engine.memory().get(j, k));
            if got != want {
                return Some(div("C", (j, k), want, got));
            }
        }
    }
    for (i, row) in oracle.w.iter().enumerate() {
        for (j, &want) in row.iter().enumerate() {
            let got = i64::from(engine.weights().get(i, j));
            if got != want {
                return Some(div("W", (i, j), want, got));
            }
        }
    }
    None
}

/// Trains one instance with both implementations, checking `C`, `W` and the
/// prediction on every example after each step.
pub fn check_instance(inst: &Instance, fault: Option<Fault>) -> Result<Option<Divergence>> {
    let rng = RandomSource::new(inst.seed);
    let mut engine = inst.model.clone();
    let mut oracle = OracleModel::from_model(&engine)?;
    let hi = i64::from(2 * engine.config().memory_depth) - i64::from(fault == Some(Fault::ClipCeiling));
    for (step, (x, y)) in inst.examples.iter().enumerate() {
        let xb: Vec<bool> = x.iter().collect();
        let yb: Vec<bool> = y.iter().collect();
        learn::fit_example(&mut engine, x, y, &rng, 0, step as u64)?;
        fit_with_ceiling(&mut oracle, &xb, &yb, &rng, 0, step as u64, hi)?;
        if let Some(d) = compare(inst, step, &oracle, &engine) {
            return Ok(Some(d));
        }
        for (probe, _) in &inst.examples {
            let want = oracle_predict(&oracle, &probe.iter().collect::<Vec<_>>())?;
            let got = engine.predict(probe)?;
            if let Some(i) = (0..want.len()).find(|&i| want[i] != got.get(i)) {
                return Ok(Some(Divergence {
                    seed: inst.seed,
                    instance: inst.index,
                    step,
                    matrix: "y",
                    index: (i, 0),
                    oracle: i64::from(want[i]),
                    engine: i64::from(got.get(i)),
                }));
            }
        }
    }
    Ok(None)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct EquivalenceSummary {
    pub instances: usize,
    pub steps: usize,
}

/// Runs `instances` random instances for `steps` steps each. Instance `k`
/// uses seed `base_seed + k mod n_seeds`.
pub fn run_equivalence(
    instances: usize,
    steps: usize,
    base_seed: u64,
    n_seeds: u64,
    fault: Option<Fault>,
) -> Result<std::result::Result<EquivalenceSummary, Divergence>> {
    let n_seeds = n_seeds.max(1);
    for k in 0..instances {
        let inst = random_instance(base_seed + k as u64 % n_seeds, k, steps);
        if let Some(d) = check_instance(&inst, fault)? {
            return Ok(Err(d));
        }
    }
    Ok(Ok(EquivalenceSummary { instances, steps }))
}
