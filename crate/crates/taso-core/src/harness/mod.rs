//! Experiment orchestration: serializable run descriptions, the epoch
//! training loop, N-seed repetition with mean/std aggregation, grid search
//! over hyperparameter axes, and CSV/JSON persistence.

mod records;

pub use records::{
    aggregate, emit_aggregate, emit_run, mean, rows_from_csv, sample_std, AggregateRecord,
    EpochAggregate, EpochRow, RunRecord, SeedSummary, RUN_CSV_HEADER,
};

use std::fs;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::data::{
    batches, load_mnist, make_synthetic, resolve_mnist_file, BatchPlan, Dataset, Split,
    SyntheticKind,
};
use crate::error::{Error, Result};
use crate::nn::{build_lenet5, build_mlp, evaluate_logits, Network};
use crate::optim::{make_optimizer, OptimizerSpec};
use crate::schedule::{
    self, lr_for_epoch, validate as validate_schedule, ScheduleConfig, ScheduleHealth, ScheduleKind,
};
use crate::tensor::{numel, Tensor};

const EVAL_BATCH: usize = 512;

/// Offset added to the dataset seed when generating a synthetic test split.
const SYNTH_TEST_SEED_OFFSET: u64 = 1_000_003;

fn default_batch_size() -> usize {
    128
}

fn default_synth_seed() -> u64 {
    7
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LeNet5Spec {}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MlpSpec {
    pub widths: Vec<usize>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind")]
pub enum ModelSpec {
    #[serde(rename = "lenet5")]
    LeNet5(LeNet5Spec),
    #[serde(rename = "mlp")]
    Mlp(MlpSpec),
}

impl ModelSpec {
    pub fn lenet5() -> Self {
        ModelSpec::LeNet5(LeNet5Spec {})
    }

    pub fn mlp(widths: Vec<usize>) -> Self {
        ModelSpec::Mlp(MlpSpec { widths })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MnistSpec {
    pub dir: PathBuf,
    /// Optional cap on the number of training samples (a deterministic
    /// prefix), for desk-scale runs.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub limit_train: Option<usize>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SyntheticSpec {
    pub n: usize,
    #[serde(default = "default_synth_seed")]
    pub seed: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind")]
pub enum DatasetSpec {
    #[serde(rename = "mnist")]
    Mnist(MnistSpec),
    #[serde(rename = "blobs")]
    Blobs(SyntheticSpec),
    #[serde(rename = "xor")]
    Xor(SyntheticSpec),
}

impl DatasetSpec {
    pub fn blobs(n: usize) -> Self {
        DatasetSpec::Blobs(SyntheticSpec {
            n,
            seed: default_synth_seed(),
        })
    }

    pub fn xor(n: usize) -> Self {
        DatasetSpec::Xor(SyntheticSpec {
            n,
            seed: default_synth_seed(),
        })
    }

    pub fn mnist(dir: impl Into<PathBuf>) -> Self {
        DatasetSpec::Mnist(MnistSpec {
            dir: dir.into(),
            limit_train: None,
        })
    }

    /// Loads the `(train, test)` pair this spec describes. Synthetic test
    /// splits are generated from the same distribution with a shifted seed.
    pub fn load(&self) -> Result<(Dataset, Dataset)> {
        fn synth(kind: SyntheticKind, spec: &SyntheticSpec) -> Result<(Dataset, Dataset)> {
            let train = make_synthetic(kind, spec.n, spec.seed)?;
            let test = make_synthetic(
                kind,
                (spec.n / 4).max(8),
                spec.seed.wrapping_add(SYNTH_TEST_SEED_OFFSET),
            )?
            .with_split(Split::Test);
            Ok((train, test))
        }
        match self {
            DatasetSpec::Mnist(m) => {
                let ti = resolve_mnist_file(&m.dir, "train-images-idx3-ubyte")?;
                let tl = resolve_mnist_file(&m.dir, "train-labels-idx1-ubyte")?;
                let vi = resolve_mnist_file(&m.dir, "t10k-images-idx3-ubyte")?;
                let vl = resolve_mnist_file(&m.dir, "t10k-labels-idx1-ubyte")?;
                let mut train = load_mnist(&ti, &tl, Split::Train)?;
                if let Some(limit) = m.limit_train {
                    train = train.head(limit)?;
                }
                let test = load_mnist(&vi, &vl, Split::Test)?;
                Ok((train, test))
            }
            DatasetSpec::Blobs(s) => synth(SyntheticKind::Blobs, s),
            DatasetSpec::Xor(s) => synth(SyntheticKind::Xor, s),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TasoSpec {
    pub lr_initial: f64,
    /// Defaults to `lr_initial / 20`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lr_final: Option<f64>,
    /// Defaults to 25.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alpha: Option<f64>,
    /// Defaults to 0.7.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub beta: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConstantSpec {
    pub lr: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind")]
pub enum ScheduleSpec {
    #[serde(rename = "taso")]
    Taso(TasoSpec),
    #[serde(rename = "constant")]
    Constant(ConstantSpec),
}

impl ScheduleSpec {
    pub fn taso(lr_initial: f64) -> Self {
        ScheduleSpec::Taso(TasoSpec {
            lr_initial,
            lr_final: None,
            alpha: None,
            beta: None,
        })
    }

    pub fn constant(lr: f64) -> Self {
        ScheduleSpec::Constant(ConstantSpec { lr })
    }

    /// Resolves this description against a training budget, applying defaults for
    /// omitted sigmoidal fields.
    pub fn build(&self, total_epochs: u32) -> Result<ScheduleKind> {
        match self {
            ScheduleSpec::Taso(t) => {
                let cfg = ScheduleConfig::new(
                    t.lr_initial,
                    t.lr_final
                        .unwrap_or(t.lr_initial / schedule::DEFAULT_FINAL_DIVISOR),
                    t.alpha.unwrap_or(schedule::DEFAULT_ALPHA),
                    t.beta.unwrap_or(schedule::DEFAULT_BETA),
                    total_epochs,
                )?;
                Ok(ScheduleKind::Taso(cfg))
            }
            ScheduleSpec::Constant(c) => ScheduleKind::constant(c.lr),
        }
    }
}

/// A complete, serializable run description. Unknown JSON keys are rejected.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub model: ModelSpec,
    pub dataset: DatasetSpec,
    pub optimizer: OptimizerSpec,
    pub schedule: ScheduleSpec,
    pub epochs: u32,
    #[serde(default = "default_batch_size")]
    pub batch_size: usize,
    pub seeds: Vec<u64>,
    pub out: PathBuf,
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        if self.epochs < 1 {
            return Err(Error::Config("epochs must be at least 1".into()));
        }
        if self.seeds.is_empty() {
            return Err(Error::Config("seed list must be non-empty".into()));
        }
        if self.batch_size == 0 {
            return Err(Error::Config("batch size must be positive".into()));
        }
        if let ModelSpec::Mlp(m) = &self.model {
            if m.widths.len() < 2 {
                return Err(Error::Config(format!(
                    "mlp needs at least two widths, got {:?}",
                    m.widths
                )));
            }
        }
        Ok(())
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: ExperimentConfig = serde_json::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_json(&self) -> Result<String> {
        let mut text = serde_json::to_string_pretty(self)?;
        text.push('\n');
        Ok(text)
    }
}

/// A validated configuration with its datasets loaded, ready to run seeds.
pub struct Prepared {
    cfg: ExperimentConfig,
    schedule: ScheduleKind,
    train: Dataset,
    test: Dataset,
    flatten_inputs: bool,
    batch_size: usize,
}

/// Loads datasets, resolves the schedule (warning on degenerate sigmoid
/// shapes), and checks that model and dataset geometry agree.
pub fn prepare(cfg: &ExperimentConfig) -> Result<Prepared> {
    cfg.validate()?;
    let (train, test) = cfg.dataset.load()?;
    if train.feature_shape() != test.feature_shape() || train.num_classes() != test.num_classes() {
        return Err(Error::Config(
            "train and test splits disagree on feature shape or class count".into(),
        ));
    }
    let schedule = cfg.schedule.build(cfg.epochs)?;
    if let ScheduleKind::Taso(sc) = &schedule {
        if let ScheduleHealth::Degenerate(violations) = validate_schedule(sc) {
            for v in violations {
                eprintln!(
                    "warning: degenerate sigmoidal schedule ({:?} margin {:.3} < {}): endpoint deviates {:.2}%",
                    v.end,
                    v.margin,
                    schedule::ENDPOINT_MARGIN,
                    100.0 * v.relative_deviation
                );
            }
        }
    }
    // probe-build the model to validate geometry before spending any epochs
    let probe = build_model(&cfg.model, &train, 0)?;
    let flatten_inputs = probe.input_shape().len() == 1 && train.feature_shape().len() > 1;
    let expected: usize = numel(train.feature_shape());
    if numel(probe.input_shape()) != expected {
        return Err(Error::Config(format!(
            "model expects {} input values, dataset provides {expected}",
            numel(probe.input_shape())
        )));
    }
    if !flatten_inputs && probe.input_shape() != train.feature_shape() {
        return Err(Error::Config(format!(
            "model input shape {:?} does not match dataset feature shape {:?}",
            probe.input_shape(),
            train.feature_shape()
        )));
    }
    if probe.num_classes() != train.num_classes() {
        return Err(Error::Config(format!(
            "model emits {} classes, dataset has {}",
            probe.num_classes(),
            train.num_classes()
        )));
    }
    Ok(Prepared {
        batch_size: cfg.batch_size.min(train.len()),
        schedule,
        train,
        test,
        flatten_inputs,
        cfg: cfg.clone(),
    })
}

fn build_model(spec: &ModelSpec, train: &Dataset, seed: u64) -> Result<Network> {
    match spec {
        ModelSpec::LeNet5(_) => build_lenet5(train.num_classes(), seed),
        ModelSpec::Mlp(m) => build_mlp(&m.widths, seed),
    }
}

/// Classifies an error as a numeric divergence (`Ok(None)`) or a real error.
fn divergence_or<T>(r: Result<T>) -> Result<Option<T>> {
    match r {
        Ok(v) => Ok(Some(v)),
        Err(Error::Numeric(_)) => Ok(None),
        Err(e) => Err(e),
    }
}

impl Prepared {
    pub fn config(&self) -> &ExperimentConfig {
        &self.cfg
    }

    pub fn schedule(&self) -> &ScheduleKind {
        &self.schedule
    }

    fn adapt(&self, batch: Tensor) -> Result<Tensor> {
        if self.flatten_inputs {
            let n = batch.shape()[0];
            let features = numel(&batch.shape()[1..]);
            batch.reshaped(vec![n, features])
        } else {
            Ok(batch)
        }
    }

    fn evaluate(&self, net: &Network, ds: &Dataset) -> Result<(f64, f64)> {
        let n = ds.len();
        let mut loss_sum = 0.0;
        let mut correct = 0usize;
        let mut at = 0;
        while at < n {
            let take = EVAL_BATCH.min(n - at);
            let idx: Vec<usize> = (at..at + take).collect();
            let (bx, by) = ds.gather(&idx);
            let bx = self.adapt(bx)?;
            let pass = net.forward(&bx)?;
            let (loss, c) = evaluate_logits(pass.logits(), &by)?;
            loss_sum += loss * take as f64;
            correct += c;
            at += take;
        }
        Ok((loss_sum / n as f64, 100.0 * correct as f64 / n as f64))
    }

    /// One full training run: per epoch, the schedule's learning rate, all
    /// minibatches (forward, backward, optimizer step), then train and test
    /// metrics. Fully deterministic in `seed`. A non-finite loss marks the
    /// run diverged and keeps the completed epochs.
    pub fn train_one(&self, seed: u64) -> Result<RunRecord> {
        let started = Instant::now();
        let mut net = build_model(&self.cfg.model, &self.train, seed)?;
        let mut opt = make_optimizer(&self.cfg.optimizer)?;
        let plan = BatchPlan::new(self.batch_size, seed)?;
        let mut rows = Vec::with_capacity(self.cfg.epochs as usize);
        let mut diverged_at = None;

        'epochs: for epoch in 1..=self.cfg.epochs {
            let lr = lr_for_epoch(&self.schedule, epoch)?;
            for (bx, by) in batches(&self.train, &plan, epoch)? {
                let bx = self.adapt(bx)?;
                let backward = net
                    .forward(&bx)
                    .and_then(|mut pass| net.loss_and_backward(&mut pass, &by));
                match divergence_or(backward)? {
                    Some(_loss) => {
                        let mut step_err = None;
                        net.visit_params(|slot, p, g| {
                            if step_err.is_none() {
                                if let Err(e) = opt.step(slot, p.data_mut(), g.data(), lr) {
                                    step_err = Some(e);
                                }
                            }
                        });
                        if let Some(e) = step_err {
                            return Err(e);
                        }
                    }
                    None => {
                        diverged_at = Some(epoch);
                        break 'epochs;
                    }
                }
            }
            let train_metrics = divergence_or(self.evaluate(&net, &self.train))?;
            let test_metrics = divergence_or(self.evaluate(&net, &self.test))?;
            match (train_metrics, test_metrics) {
                (Some((train_loss, train_acc)), Some((test_loss, test_acc))) => {
                    rows.push(EpochRow {
                        epoch,
                        lr,
                        train_loss,
                        train_acc,
                        test_loss,
                        test_acc,
                    })
                }
                _ => {
                    diverged_at = Some(epoch);
                    break 'epochs;
                }
            }
        }
        Ok(RunRecord {
            seed,
            rows,
            diverged_at,
            wall_secs: started.elapsed().as_secs_f64(),
        })
    }
}

/// Whether seed runs execute on a worker pool or one after another. Both
/// produce identical records.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RunMode {
    Sequential,
    Parallel,
}

fn run_seeds(prepared: &Prepared, seeds: &[u64], mode: RunMode) -> Result<Vec<RunRecord>> {
    match mode {
        RunMode::Sequential => seeds.iter().map(|&s| prepared.train_one(s)).collect(),
        RunMode::Parallel => {
            let next = AtomicUsize::new(0);
            let slots: Mutex<Vec<Option<Result<RunRecord>>>> =
                Mutex::new((0..seeds.len()).map(|_| None).collect());
            let workers = std::thread::available_parallelism()
                .map(|n| n.get())
                .unwrap_or(1)
                .min(seeds.len())
                .max(1);
            std::thread::scope(|scope| {
                for _ in 0..workers {
                    scope.spawn(|| loop {
                        let i = next.fetch_add(1, Ordering::Relaxed);
                        if i >= seeds.len() {
                            break;
                        }
                        let record = prepared.train_one(seeds[i]);
                        slots.lock().expect("no poisoned workers")[i] = Some(record);
                    });
                }
            });
            slots
                .into_inner()
                .expect("workers finished")
                .into_iter()
                .map(|slot| slot.expect("every seed ran"))
                .collect()
        }
    }
}

/// Runs and aggregated statistics for one configuration.
pub struct RepeatOutcome {
    pub records: Vec<RunRecord>,
    pub aggregate: AggregateRecord,
}

/// Convenience single-run entry point.
pub fn train(cfg: &ExperimentConfig, seed: u64) -> Result<RunRecord> {
    prepare(cfg)?.train_one(seed)
}

/// Runs every seed in the config and aggregates final metrics and per-epoch
/// curves (mean, sample std). Diverged seeds are kept and flagged.
pub fn repeat(cfg: &ExperimentConfig, mode: RunMode) -> Result<RepeatOutcome> {
    let prepared = prepare(cfg)?;
    let records = run_seeds(&prepared, &cfg.seeds, mode)?;
    let aggregate = aggregate(&records);
    Ok(RepeatOutcome { records, aggregate })
}

/// One grid axis definition.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum GridSpec {
    /// Constant-schedule initial learning rates.
    LrList(Vec<f64>),
    /// Sigmoidal-schedule `(alpha, beta)` product with a fixed initial rate
    /// (final rate = initial / 20).
    AlphaBeta {
        lr_initial: f64,
        alphas: Vec<f64>,
        betas: Vec<f64>,
    },
}

/// One grid cell: a label and the schedule it stands for.
#[derive(Clone, Debug, PartialEq)]
pub struct GridCell {
    pub label: String,
    pub schedule: ScheduleSpec,
}

impl GridSpec {
    pub fn is_empty(&self) -> bool {
        match self {
            GridSpec::LrList(lrs) => lrs.is_empty(),
            GridSpec::AlphaBeta { alphas, betas, .. } => alphas.is_empty() || betas.is_empty(),
        }
    }

    /// Cells in declaration order (alpha-major for the product grid).
    pub fn cells(&self) -> Vec<GridCell> {
        match self {
            GridSpec::LrList(lrs) => lrs
                .iter()
                .map(|&lr| GridCell {
                    label: format!("lr={lr}"),
                    schedule: ScheduleSpec::constant(lr),
                })
                .collect(),
            GridSpec::AlphaBeta {
                lr_initial,
                alphas,
                betas,
            } => {
                let mut cells = Vec::new();
                for &alpha in alphas {
                    for &beta in betas {
                        cells.push(GridCell {
                            label: format!("alpha={alpha} beta={beta}"),
                            schedule: ScheduleSpec::Taso(TasoSpec {
                                lr_initial: *lr_initial,
                                lr_final: None,
                                alpha: Some(alpha),
                                beta: Some(beta),
                            }),
                        });
                    }
                }
                cells
            }
        }
    }
}

/// The built-in search axes, per optimizer.
pub fn default_grid(optimizer: &str) -> Result<GridSpec> {
    match optimizer {
        "sgd" | "momentum" | "nesterov" => Ok(GridSpec::LrList(vec![
            2.0, 1.0, 0.5, 0.25, 0.05, 0.01, 0.001,
        ])),
        "adagrad" => Ok(GridSpec::LrList(vec![0.1, 0.05, 0.01, 0.0075, 0.005])),
        "rmsprop" | "rmsprop-centered" => Ok(GridSpec::LrList(vec![
            0.01, 0.005, 0.001, 0.0005, 0.0003, 0.0001,
        ])),
        "adam" | "amsgrad" => Ok(GridSpec::LrList(vec![
            0.005, 0.001, 0.0005, 0.0003, 0.0001, 0.00005,
        ])),
        "taso" => Ok(GridSpec::AlphaBeta {
            lr_initial: 0.05,
            alphas: vec![10.0, 25.0, 50.0],
            betas: vec![0.3, 0.5, 0.7],
        }),
        other => Err(Error::Config(format!(
            "no built-in grid for optimizer `{other}`"
        ))),
    }
}

/// How grid cells are ranked.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SelectionMetric {
    /// Highest mean final test accuracy wins; ties break on lowest mean
    /// final test loss, then on declaration order.
    AccuracyThenLoss,
    /// Lowest mean final test loss wins; ties break on accuracy, then on
    /// declaration order.
    LossThenAccuracy,
}

pub struct GridCellOutcome {
    pub label: String,
    pub schedule: ScheduleSpec,
    pub config: ExperimentConfig,
    pub records: Vec<RunRecord>,
    pub aggregate: AggregateRecord,
    /// 1 = best under the selection metric.
    pub rank: usize,
}

pub struct GridOutcome {
    /// Cells in declaration order, ranks filled in.
    pub cells: Vec<GridCellOutcome>,
    pub best_index: usize,
}

impl GridOutcome {
    pub fn best(&self) -> &GridCellOutcome {
        &self.cells[self.best_index]
    }
}

fn slug(label: &str) -> String {
    label
        .chars()
        .map(|c| {
            if c.is_ascii_alphanumeric() || c == '.' || c == '=' {
                c
            } else {
                '-'
            }
        })
        .collect()
}

/// Runs `repeat` for every cell of the grid (the cell's schedule replaces the
/// base config's), then ranks cells. A cell whose every seed diverged ranks
/// last.
pub fn grid_search(
    base: &ExperimentConfig,
    grid: &GridSpec,
    metric: SelectionMetric,
) -> Result<GridOutcome> {
    if grid.is_empty() {
        return Err(Error::Config("grid has no cells".into()));
    }
    let mut outcomes = Vec::new();
    for (i, cell) in grid.cells().into_iter().enumerate() {
        let mut cfg = base.clone();
        cfg.schedule = cell.schedule.clone();
        cfg.out = base.out.join(format!("cell-{i:02}-{}", slug(&cell.label)));
        let run = repeat(&cfg, RunMode::Parallel)?;
        outcomes.push(GridCellOutcome {
            label: cell.label,
            schedule: cell.schedule,
            config: cfg,
            records: run.records,
            aggregate: run.aggregate,
            rank: 0,
        });
    }

    let key = |o: &GridCellOutcome| -> (f64, f64) {
        (
            o.aggregate.final_test_acc_mean.unwrap_or(f64::NEG_INFINITY),
            o.aggregate.final_test_loss_mean.unwrap_or(f64::INFINITY),
        )
    };
    let mut order: Vec<usize> = (0..outcomes.len()).collect();
    order.sort_by(|&a, &b| {
        let (acc_a, loss_a) = key(&outcomes[a]);
        let (acc_b, loss_b) = key(&outcomes[b]);
        let primary = match metric {
            SelectionMetric::AccuracyThenLoss => acc_b
                .partial_cmp(&acc_a)
                .expect("finite keys")
                .then(loss_a.partial_cmp(&loss_b).expect("finite keys")),
            SelectionMetric::LossThenAccuracy => loss_a
                .partial_cmp(&loss_b)
                .expect("finite keys")
                .then(acc_b.partial_cmp(&acc_a).expect("finite keys")),
        };
        primary.then(a.cmp(&b))
    });
    for (rank, &idx) in order.iter().enumerate() {
        outcomes[idx].rank = rank + 1;
    }
    Ok(GridOutcome {
        best_index: order[0],
        cells: outcomes,
    })
}

/// The transferable per-optimizer defaults used in the no-validation
/// regime: each optimizer's best-performing hyperparameters, applied
/// unchanged to a new model/dataset pair.
pub fn default_mode(
    model: ModelSpec,
    dataset: DatasetSpec,
    optimizer: &str,
) -> Result<ExperimentConfig> {
    let (opt_spec, schedule) = match optimizer {
        "sgd" => (OptimizerSpec::named("sgd"), ScheduleSpec::constant(0.25)),
        "momentum" => (
            OptimizerSpec::named("momentum").with_mu(0.9),
            ScheduleSpec::constant(0.05),
        ),
        "nesterov" => (
            OptimizerSpec::named("nesterov").with_mu(0.9),
            ScheduleSpec::constant(0.01),
        ),
        "adagrad" => (
            OptimizerSpec::named("adagrad"),
            ScheduleSpec::constant(0.05),
        ),
        "rmsprop" => (
            OptimizerSpec::named("rmsprop"),
            ScheduleSpec::constant(0.0005),
        ),
        "rmsprop-centered" => (
            OptimizerSpec::named("rmsprop-centered"),
            ScheduleSpec::constant(0.0005),
        ),
        "adam" | "amsgrad" => (
            OptimizerSpec::named("amsgrad"),
            ScheduleSpec::constant(0.0005),
        ),
        "taso" => (
            OptimizerSpec::named("momentum").with_mu(0.9),
            ScheduleSpec::taso(0.05),
        ),
        other => {
            return Err(Error::Config(format!(
                "no defaults for unknown optimizer `{other}`"
            )))
        }
    };
    Ok(ExperimentConfig {
        model,
        dataset,
        optimizer: opt_spec,
        schedule,
        epochs: 100,
        batch_size: default_batch_size(),
        seeds: vec![1, 2, 3, 4, 5],
        out: PathBuf::from(format!("runs/default-{optimizer}")),
    })
}

/// Writes `config.json`, one per-run CSV per seed, and `aggregate.json`.
pub fn emit_repeat(
    dir: &Path,
    cfg: &ExperimentConfig,
    outcome: &RepeatOutcome,
) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(dir)?;
    let mut paths = Vec::new();
    let cfg_path = dir.join("config.json");
    fs::write(&cfg_path, cfg.to_json()?)?;
    paths.push(cfg_path);
    for record in &outcome.records {
        paths.push(emit_run(dir, record)?);
    }
    paths.push(emit_aggregate(dir, &outcome.aggregate)?);
    Ok(paths)
}

/// Header of the grid summary CSV.
pub const GRID_CSV_HEADER: &str =
    "hyperparameters,rank,test_acc_mean,test_acc_std,test_loss_mean,test_loss_std,diverged_seeds";

/// Writes `grid.csv` (one row per cell, declaration order) plus each cell's
/// own run files under its directory.
pub fn emit_grid(dir: &Path, outcome: &GridOutcome) -> Result<PathBuf> {
    fs::create_dir_all(dir)?;
    let mut text = String::from(GRID_CSV_HEADER);
    text.push('\n');
    let fmt = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
    for cell in &outcome.cells {
        text.push_str(&format!(
            "{},{},{},{},{},{},{}\n",
            cell.label,
            cell.rank,
            fmt(cell.aggregate.final_test_acc_mean),
            fmt(cell.aggregate.final_test_acc_std),
            fmt(cell.aggregate.final_test_loss_mean),
            fmt(cell.aggregate.final_test_loss_std),
            cell.aggregate.divergence_count,
        ));
    }
    let path = dir.join("grid.csv");
    fs::write(&path, text)?;
    for cell in &outcome.cells {
        let outcome = RepeatOutcome {
            records: cell.records.clone(),
            aggregate: cell.aggregate.clone(),
        };
        emit_repeat(&cell.config.out, &cell.config, &outcome)?;
    }
    Ok(path)
}
