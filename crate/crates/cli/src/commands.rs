use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use cotm::data::{
    binarize_adaptive_gaussian, build_vocabulary, generate_noisy_xor, load_idx, sow_vectorize, subsample_imbalance,
    GrayImage, Imbalance, Vocabulary,
};
use cotm::eval::{run_trial, write_csv, EpochRecord, ScoreMode};
use cotm::oracle::{random_instance, run_equivalence, Fault};
use cotm::{evaluate, load_model, run_trials, save_model, BitMatrix, Dataset, EmptyClauseOutput, TrialSpec};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::config::{RunConfig, DEFAULT_EPOCHS, DEFAULT_TAIL, DEFAULT_TRIALS};
use crate::{
    CliError, EmptyClauseArg, EvalArgs, FaultArg, GenerateXorArgs, InspectArgs, OracleCheckArgs, PredictArgs,
    PrepareImageArgs, PrepareTextArgs, RunArgs, ScoreArg, SubsampleArgs, TrainArgs, TrialsArgs,
};

fn io_err(path: &Path, e: std::io::Error) -> CliError {
    CliError::Data(format!("{}: {e}", path.display()))
}

fn create(path: &Path) -> Result<BufWriter<File>, CliError> {
    File::create(path).map(BufWriter::new).map_err(|e| io_err(path, e))
}

fn load_dataset(path: &Path) -> Result<Dataset, CliError> {
    Dataset::load(path).map_err(|e| CliError::Data(format!("{}: {e}", path.display())))
}

pub fn generate_xor(args: &GenerateXorArgs) -> Result<(), CliError> {
    let mut rng = ChaCha8Rng::seed_from_u64(args.seed);
    let split = generate_noisy_xor(args.train, args.test, args.noise, &mut rng)?;
    std::fs::create_dir_all(&args.out_dir).map_err(|e| io_err(&args.out_dir, e))?;
    split.train.save(args.out_dir.join("train.cotd"))?;
    split.test.save(args.out_dir.join("test.cotd"))?;
    eprintln!(
        "wrote {} train ({} labels flipped) and {} test examples to {}",
        split.train.len(),
        split.flipped.len(),
        split.test.len(),
        args.out_dir.display()
    );
    Ok(())
}

pub fn prepare_image(args: &PrepareImageArgs) -> Result<(), CliError> {
    if args.window % 2 == 0 {
        return Err(CliError::Usage(format!("--window must be odd, got {}", args.window)));
    }
    let images = load_idx(&args.images)?;
    let labels = load_idx(&args.labels)?;
    if images.dims.len() != 3 {
        return Err(CliError::Data(format!(
            "{}: expected a 3-dimensional image tensor, got {} dimensions",
            args.images.display(),
            images.dims.len()
        )));
    }
    if labels.items() != images.items() || labels.item_len() != 1 {
        return Err(CliError::Data(format!(
            "{}: expected {} scalar labels",
            args.labels.display(),
            images.items()
        )));
    }
    let (height, width) = (images.dims[1], images.dims[2]);
    let mut x = BitMatrix::zeros(images.items(), height * width);
    for r in 0..images.items() {
        let img = GrayImage::new(width, height, images.item(r).to_vec())?;
        x.set_row(r, &binarize_adaptive_gaussian(&img, args.window, args.threshold)?)?;
    }
    let labels: Vec<usize> = (0..labels.items()).map(|r| usize::from(labels.item(r)[0])).collect();
    let classes = match args.classes {
        Some(c) => c,
        None => labels.iter().max().map_or(0, |&l| l + 1),
    };
    let dataset = Dataset::from_labels(x, &labels, classes)?;
    dataset.save(&args.out)?;
    eprintln!(
        "wrote {} examples × {} bits, {} classes",
        dataset.len(),
        dataset.n_inputs(),
        dataset.n_outputs()
    );
    Ok(())
}

pub fn prepare_text(args: &PrepareTextArgs) -> Result<(), CliError> {
    let corpus = std::fs::read_to_string(&args.input).map_err(|e| io_err(&args.input, e))?;
    let mut labels = Vec::new();
    let mut texts = Vec::new();
    for (n, line) in corpus.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let (label, text) = line.split_once('\t').ok_or_else(|| {
            CliError::Data(format!("{}:{}: expected label<TAB>text", args.input.display(), n + 1))
        })?;
        labels.push(label.trim().to_string());
        texts.push(text);
    }
    let classes = match &args.classes {
        Some(c) => c.clone(),
        None => {
            let mut c = labels.clone();
            c.sort();
            c.dedup();
            c
        }
    };
    let ids = labels
        .iter()
        .map(|l| {
            classes
                .iter()
                .position(|c| c == l)
                .ok_or_else(|| CliError::Data(format!("label {l:?} is not among --classes")))
        })
        .collect::<Result<Vec<_>, _>>()?;
    let vocab = match &args.vocab {
        Some(path) => Vocabulary::load(path)?,
        None => build_vocabulary(&texts, args.max_vocab)?,
    };
    if let Some(path) = &args.vocab_out {
        vocab.save(path)?;
    }
    let rows: Vec<_> = texts.iter().map(|t| sow_vectorize(t, &vocab)).collect();
    let x = BitMatrix::from_rows(vocab.len(), &rows)?;
    let mut dataset = Dataset::from_labels(x, &ids, classes.len())?;
    dataset.feature_names = Some(vocab.tokens().to_vec());
    dataset.class_names = Some(classes);
    dataset.save(&args.out)?;
    eprintln!(
        "wrote {} documents × {} words, {} classes",
        dataset.len(),
        dataset.n_inputs(),
        dataset.n_outputs()
    );
    Ok(())
}

pub fn subsample(args: &SubsampleArgs) -> Result<(), CliError> {
    let dataset = load_dataset(&args.input)?;
    let mode = match (&args.remove_fraction, &args.geometric) {
        (Some(spec), _) => {
            let bad = || CliError::Usage(format!("--remove-fraction expects CLASS:FRACTION, got {spec:?}"));
            let (class, fraction) = spec.split_once(':').ok_or_else(bad)?;
            Imbalance::RemoveFraction {
                class: class.trim().parse().map_err(|_| bad())?,
                fraction: fraction.trim().parse().map_err(|_| bad())?,
            }
        }
        (None, Some(ranking)) => Imbalance::Geometric {
            ranking: ranking.clone(),
        },
        (None, None) => return Err(CliError::Usage("give --remove-fraction or --geometric".into())),
    };
    let mut rng = ChaCha8Rng::seed_from_u64(args.seed);
    let out = subsample_imbalance(&dataset, &mode, &mut rng)?;
    out.save(&args.out)?;
    eprintln!("kept {} of {} examples", out.len(), dataset.len());
    Ok(())
}

impl RunArgs {
    fn as_config(&self) -> RunConfig {
        RunConfig {
            n_clauses: self.clauses,
            memory_depth: self.depth,
            voting_margin: self.margin,
            specificity: self.specificity,
            multiclass_scalar: self.multiclass_scalar,
            one_hot: self.one_hot.then_some(true),
            boost_true_positive: self.no_boost.then_some(false),
            seed: self.seed,
            train: self.train.clone(),
            test: self.test.clone(),
            epochs: self.epochs,
            shuffle: self.no_shuffle.then_some(false),
            vanilla: self.vanilla.then_some(true),
            score_mode: self.score.map(|s| match s {
                ScoreArg::Argmax => ScoreMode::Argmax,
                ScoreArg::PerOutput => ScoreMode::PerOutput,
            }),
            csv_out: self.csv_out.clone(),
            ..RunConfig::default()
        }
    }

    /// File, then `COTM_SEED`, then flags.
    fn resolve(&self, extra: RunConfig) -> Result<RunConfig, CliError> {
        let base = match &self.config {
            Some(path) => RunConfig::load(path)?,
            None => RunConfig::default(),
        };
        Ok(base.with_env()?.overlay(self.as_config()).overlay(extra))
    }
}

struct Prepared {
    cfg: RunConfig,
    spec: TrialSpec,
    train: Dataset,
    test: Option<Dataset>,
}

fn prepare_run(run: &RunArgs, extra: RunConfig) -> Result<Prepared, CliError> {
    let cfg = run.resolve(extra)?;
    let train_path = cfg
        .train
        .as_ref()
        .ok_or_else(|| CliError::Usage("no training data: pass --train or set `train` in the config".into()))?;
    let train = load_dataset(train_path)?;
    let test = cfg.test.as_deref().map(load_dataset).transpose()?;
    if let Some(test) = &test {
        if (test.n_outputs(), test.n_inputs()) != (train.n_outputs(), train.n_inputs()) {
            return Err(CliError::Data(format!(
                "test set is {}×{} (outputs × inputs) but the training set is {}×{}",
                test.n_outputs(),
                test.n_inputs(),
                train.n_outputs(),
                train.n_inputs()
            )));
        }
    }
    let config = cfg.model_config(train.n_outputs(), train.n_inputs())?;
    let mut spec = TrialSpec::new(config);
    spec.n_epochs = cfg.epochs.unwrap_or(DEFAULT_EPOCHS);
    spec.n_trials = cfg.trials.unwrap_or(DEFAULT_TRIALS);
    spec.tail = cfg.tail.unwrap_or(DEFAULT_TAIL.min(spec.n_epochs));
    spec.shuffle = cfg.shuffle.unwrap_or(true);
    spec.vanilla = cfg.vanilla.unwrap_or(false);
    spec.mode = cfg.score_mode.unwrap_or_default();
    Ok(Prepared { cfg, spec, train, test })
}

fn with_threads<T>(threads: Option<usize>, f: impl FnOnce() -> T + Send) -> Result<T, CliError>
where
    T: Send,
{
    match threads {
        None => Ok(f()),
        Some(0) => Err(CliError::Usage("--threads must be at least 1".into())),
        Some(n) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build()
                .map_err(|e| CliError::Usage(format!("cannot start {n} threads: {e}")))?;
            Ok(pool.install(f))
        }
    }
}

fn progress(record: &EpochRecord) {
    let cell = |a: Option<f64>| a.map_or("-".to_string(), |a| format!("{:.4}", a));
    eprintln!(
        "trial {} epoch {}: train {} test {} ({:.2}s)",
        record.trial,
        record.epoch + 1,
        cell(record.train_accuracy),
        cell(record.test_accuracy),
        record.train_seconds
    );
}

pub fn train(args: &TrainArgs) -> Result<(), CliError> {
    let extra = RunConfig {
        model_out: args.model_out.clone(),
        ..RunConfig::default()
    };
    let p = prepare_run(&args.run, extra)?;
    let model_out = p
        .cfg
        .model_out
        .clone()
        .ok_or_else(|| CliError::Usage("pass --model-out or set `model_out` in the config".into()))?;
    let (report, model) = with_threads(args.run.threads, || {
        run_trial(&p.spec, 0, &p.train, p.test.as_ref(), &mut progress)
    })??;
    save_model(&model, &model_out)?;
    if let Some(path) = &p.cfg.csv_out {
        let mut out = create(path)?;
        write_csv(&mut out, std::slice::from_ref(&report))
            .and_then(|_| out.flush())
            .map_err(|e| io_err(path, e))?;
    }
    eprintln!("wrote {}", model_out.display());
    Ok(())
}

pub fn trials(args: &TrialsArgs) -> Result<(), CliError> {
    let extra = RunConfig {
        trials: args.trials,
        tail: args.tail,
        json_out: args.json_out.clone(),
        ..RunConfig::default()
    };
    let p = prepare_run(&args.run, extra)?;
    let test = p
        .test
        .as_ref()
        .ok_or_else(|| CliError::Usage("trials need a test set: pass --test".into()))?;
    let report = with_threads(args.run.threads, || run_trials(&p.spec, &p.train, test, &mut progress))??;
    if let Some(path) = &p.cfg.csv_out {
        let mut out = create(path)?;
        write_csv(&mut out, &report.trials)
            .and_then(|_| out.flush())
            .map_err(|e| io_err(path, e))?;
    }
    let json = to_sorted_json(&report)?;
    match &p.cfg.json_out {
        Some(path) => std::fs::write(path, json + "\n").map_err(|e| io_err(path, e))?,
        None => println!("{json}"),
    }
    let s = &report.summary;
    eprintln!(
        "mean {:.4}  p95 {:.4}  peak {:.4}  ({:.2}s train / {:.2}s eval per epoch)",
        s.mean, s.p95, s.peak, s.mean_train_seconds, s.mean_eval_seconds
    );
    Ok(())
}

/// Pretty JSON with object keys in lexicographic order.
fn to_sorted_json<T: serde::Serialize>(value: &T) -> Result<String, CliError> {
    let value = serde_json::to_value(value).map_err(|e| CliError::Data(e.to_string()))?;
    serde_json::to_string_pretty(&value).map_err(|e| CliError::Data(e.to_string()))
}

fn load_for_prediction(model: &Path, data: &Path, empty: EmptyClauseArg) -> Result<(cotm::Model, Dataset), CliError> {
    let mut model = load_model(model)?;
    model.set_empty_clause_output(match empty {
        EmptyClauseArg::Paper => EmptyClauseOutput::Paper,
        EmptyClauseArg::Zero => EmptyClauseOutput::Zero,
    });
    let dataset = load_dataset(data)?;
    let c = model.config();
    if (dataset.n_outputs(), dataset.n_inputs()) != (c.n_outputs, c.n_inputs) {
        return Err(CliError::Data(format!(
            "model is {}×{} (outputs × inputs) but the dataset is {}×{}",
            c.n_outputs,
            c.n_inputs,
            dataset.n_outputs(),
            dataset.n_inputs()
        )));
    }
    Ok((model, dataset))
}

pub fn eval(args: &EvalArgs) -> Result<(), CliError> {
    let (model, dataset) = load_for_prediction(&args.model, &args.data, args.empty_clause)?;
    let evaluation = evaluate(&model, &dataset)?;
    println!("{}", to_sorted_json(&evaluation)?);
    Ok(())
}

pub fn predict(args: &PredictArgs) -> Result<(), CliError> {
    let (model, dataset) = load_for_prediction(&args.model, &args.data, args.empty_clause)?;
    let stdout = std::io::stdout();
    let mut out = BufWriter::new(stdout.lock());
    for r in 0..dataset.len() {
        let y = model.predict(&dataset.input(r))?;
        let line: String = y.iter().map(|b| if b { '1' } else { '0' }).collect();
        writeln!(out, "{line}").map_err(|e| CliError::Data(e.to_string()))?;
    }
    out.flush().map_err(|e| CliError::Data(e.to_string()))
}

pub fn inspect(args: &InspectArgs) -> Result<(), CliError> {
    let model = load_model(&args.model)?;
    let names = match (args.names, &args.vocab) {
        (true, None) => return Err(CliError::Usage("--names needs --vocab".into())),
        (true, Some(path)) => Some(Vocabulary::load(path)?.tokens().to_vec()),
        (false, _) => None,
    };
    let mut clauses = (0..model.config().n_clauses)
        .map(|j| model.render_clause(j, names.as_deref()))
        .collect::<Result<Vec<_>, _>>()?;
    clauses.sort_by_key(|c| (std::cmp::Reverse(c.max_abs_weight()), c.index));
    let top = args.top.unwrap_or(clauses.len());
    for c in clauses.iter().take(top) {
        println!("{c}");
    }
    Ok(())
}

pub fn oracle_check(args: &OracleCheckArgs) -> Result<(), CliError> {
    if args.instances == 0 {
        eprintln!("warning: 0 instances requested; nothing was checked");
        println!("PASS (vacuous)");
        return Ok(());
    }
    let fault = args.inject_fault.map(|f| match f {
        FaultArg::Clip => Fault::ClipCeiling,
    });
    match run_equivalence(args.instances, args.steps, args.seed, args.seeds, fault)? {
        Ok(summary) => {
            println!(
                "PASS: {} instances × {} steps across {} seeds",
                summary.instances,
                summary.steps,
                args.seeds.min(args.instances as u64)
            );
            Ok(())
        }
        Err(d) => {
            let inst = random_instance(d.seed, d.instance, args.steps);
            let c = inst.model.config();
            eprintln!(
                "instance: m={} n={} o={} N={} t={} s={} e={} boost={} seed={}",
                c.n_outputs,
                c.n_clauses,
                c.n_inputs,
                c.memory_depth,
                c.voting_margin,
                c.specificity,
                c.multiclass_scalar,
                c.boost_true_positive,
                c.seed
            );
            eprintln!("initial C: {:?}", inst.model.memory().states());
            eprintln!("initial W: {:?}", inst.model.weights().values());
            eprintln!("frozen:    {:?}", inst.model.weights().frozen());
            for (step, (x, y)) in inst.examples.iter().enumerate().take(d.step + 1) {
                eprintln!("step {step}: x={x:?} y={y:?}");
            }
            Err(CliError::Divergence(d.to_string()))
        }
    }
}
