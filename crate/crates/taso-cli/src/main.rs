//! `taso` — train and compare first-order optimizers under the sigmoidal
//! learning-rate schedule, reproducibly, from the command line.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand};

use taso_core::harness::{
    default_grid, default_mode, emit_grid, emit_repeat, grid_search, repeat, DatasetSpec,
    ExperimentConfig, GridOutcome, ModelSpec, RepeatOutcome, RunMode, ScheduleSpec,
    SelectionMetric,
};
use taso_core::optim::OptimizerSpec;
use taso_core::schedule::{validate, ScheduleConfig, ScheduleHealth, ScheduleKind};

#[derive(Parser)]
#[command(
    name = "taso",
    version,
    about = "Sigmoidal learning-rate schedule training harness",
    propagate_version = true
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run every seed of a JSON experiment config and write CSV/JSON outputs.
    Train {
        /// Path to the experiment config (see README for the schema).
        #[arg(long)]
        config: PathBuf,
        /// Override the config's output directory.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Run seeds one after another instead of on a worker pool.
        #[arg(long)]
        sequential: bool,
    },
    /// Sweep an optimizer's built-in hyperparameter axis and rank the cells.
    Grid {
        /// sgd | momentum | nesterov | adagrad | rmsprop | rmsprop-centered |
        /// adam | amsgrad | taso
        #[arg(long)]
        optimizer: String,
        /// lenet5 | mlp (default: lenet5 for mnist, mlp otherwise)
        #[arg(long)]
        model: Option<String>,
        /// mnist | blobs | xor
        #[arg(long, default_value = "blobs")]
        dataset: String,
        #[arg(long)]
        epochs: u32,
        /// Number of repetitions; run seeds are base-seed + 0..K.
        #[arg(long)]
        seeds: u32,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 1)]
        base_seed: u64,
        /// Directory holding the MNIST IDX files (only for --dataset mnist).
        #[arg(long, default_value = "data/mnist")]
        mnist_dir: PathBuf,
        /// Synthetic dataset size (only for blobs/xor).
        #[arg(long, default_value_t = 1000)]
        samples: usize,
        #[arg(long, default_value_t = 128)]
        batch_size: usize,
        /// MLP widths as a comma list, e.g. 2,8,2.
        #[arg(long)]
        widths: Option<String>,
    },
    /// Tabulate a sigmoidal learning-rate curve as CSV (`epoch,lr`).
    ScheduleCurve {
        /// Initial learning rate.
        #[arg(long)]
        lr: f64,
        #[arg(long, default_value_t = 25.0)]
        alpha: f64,
        #[arg(long, default_value_t = 0.7)]
        beta: f64,
        /// Planned epoch budget (the curve is budget-aware).
        #[arg(long)]
        epochs: u32,
        /// Final learning rate; defaults to lr / 20.
        #[arg(long)]
        lr_final: Option<f64>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Print an optimizer's transferable default config as JSON.
    Defaults {
        #[arg(long)]
        optimizer: String,
        /// lenet5 | mlp
        #[arg(long, default_value = "lenet5")]
        model: String,
        /// mnist | blobs | xor
        #[arg(long, default_value = "mnist")]
        dataset: String,
        #[arg(long, default_value = "data/mnist")]
        mnist_dir: PathBuf,
        #[arg(long, default_value_t = 1000)]
        samples: usize,
    },
}

fn parse_widths(widths: &str) -> Result<Vec<usize>> {
    widths
        .split(',')
        .map(|w| {
            w.trim()
                .parse::<usize>()
                .with_context(|| format!("bad width {w:?} in --widths"))
        })
        .collect()
}

fn model_spec(
    model: Option<&str>,
    dataset: &DatasetSpec,
    widths: Option<&str>,
) -> Result<ModelSpec> {
    let is_mnist = matches!(dataset, DatasetSpec::Mnist(_));
    let name = model.unwrap_or(if is_mnist { "lenet5" } else { "mlp" });
    match name {
        "lenet5" => Ok(ModelSpec::lenet5()),
        "mlp" => {
            let widths = match widths {
                Some(w) => parse_widths(w)?,
                None if is_mnist => vec![784, 32, 10],
                None => vec![2, 8, 2],
            };
            Ok(ModelSpec::mlp(widths))
        }
        other => bail!("unknown model {other:?} (expected lenet5 or mlp)"),
    }
}

fn dataset_spec(dataset: &str, mnist_dir: &Path, samples: usize) -> Result<DatasetSpec> {
    match dataset {
        "mnist" => Ok(DatasetSpec::mnist(mnist_dir)),
        "blobs" => Ok(DatasetSpec::blobs(samples)),
        "xor" => Ok(DatasetSpec::xor(samples)),
        other => bail!("unknown dataset {other:?} (expected mnist, blobs, or xor)"),
    }
}

fn print_repeat_summary(outcome: &RepeatOutcome) {
    for record in &outcome.records {
        match record.final_row() {
            Some(last) => println!(
                "  seed {:<4} test acc {:6.2}%  test loss {:.4}  ({:.1}s)",
                record.seed, last.test_acc, last.test_loss, record.wall_secs
            ),
            None => println!(
                "  seed {:<4} DIVERGED at epoch {} ({:.1}s)",
                record.seed,
                record.diverged_at.unwrap_or(0),
                record.wall_secs
            ),
        }
    }
    let agg = &outcome.aggregate;
    match (agg.final_test_acc_mean, agg.final_test_acc_std) {
        (Some(mean), Some(std)) => println!(
            "  mean test acc {mean:.2}% (±{std:.2})  mean test loss {:.4} (±{:.4})  diverged {}/{}",
            agg.final_test_loss_mean.unwrap_or(f64::NAN),
            agg.final_test_loss_std.unwrap_or(f64::NAN),
            agg.divergence_count,
            agg.seeds.len()
        ),
        _ => println!(
            "  every seed diverged ({}/{})",
            agg.divergence_count,
            agg.seeds.len()
        ),
    }
}

fn print_grid_table(outcome: &GridOutcome) {
    println!(
        "  {:<24} {:>4}  {:>18}  {:>18}  {:>8}",
        "hyperparameters", "rank", "test acc", "test loss", "diverged"
    );
    for cell in &outcome.cells {
        let agg = &cell.aggregate;
        let acc = match (agg.final_test_acc_mean, agg.final_test_acc_std) {
            (Some(m), Some(s)) => format!("{m:.2} (±{s:.2})"),
            _ => "-".to_string(),
        };
        let loss = match (agg.final_test_loss_mean, agg.final_test_loss_std) {
            (Some(m), Some(s)) => format!("{m:.4} (±{s:.4})"),
            _ => "-".to_string(),
        };
        println!(
            "  {:<24} {:>4}  {:>18}  {:>18}  {:>5}/{}",
            cell.label,
            cell.rank,
            acc,
            loss,
            agg.divergence_count,
            agg.seeds.len()
        );
    }
    println!("  best: {}", outcome.best().label);
}

fn run() -> Result<()> {
    match Cli::parse().command {
        Command::Train {
            config,
            out,
            sequential,
        } => {
            let text = fs::read_to_string(&config)
                .with_context(|| format!("reading {}", config.display()))?;
            let mut cfg = ExperimentConfig::from_json(&text)
                .with_context(|| format!("parsing {}", config.display()))?;
            if let Some(out) = out {
                cfg.out = out;
            }
            let mode = if sequential {
                RunMode::Sequential
            } else {
                RunMode::Parallel
            };
            println!(
                "training {} seed(s) for {} epochs...",
                cfg.seeds.len(),
                cfg.epochs
            );
            let outcome = repeat(&cfg, mode)?;
            print_repeat_summary(&outcome);
            let paths = emit_repeat(&cfg.out, &cfg, &outcome)?;
            println!("  wrote {} files under {}", paths.len(), cfg.out.display());
            Ok(())
        }
        Command::Grid {
            optimizer,
            model,
            dataset,
            epochs,
            seeds,
            out,
            base_seed,
            mnist_dir,
            samples,
            batch_size,
            widths,
        } => {
            if seeds == 0 {
                bail!("--seeds must be at least 1");
            }
            let dataset = dataset_spec(&dataset, &mnist_dir, samples)?;
            let model = model_spec(model.as_deref(), &dataset, widths.as_deref())?;
            let opt_spec = match optimizer.as_str() {
                // the sigmoidal schedule rides on plain momentum
                "taso" => OptimizerSpec::named("momentum").with_mu(0.9),
                name => OptimizerSpec::named(name),
            };
            let grid = default_grid(&optimizer)?;
            let base = ExperimentConfig {
                model,
                dataset,
                optimizer: opt_spec,
                // placeholder; grid_search swaps in each cell's schedule
                schedule: ScheduleSpec::constant(0.1),
                epochs,
                batch_size,
                seeds: (0..seeds as u64).map(|i| base_seed + i).collect(),
                out: out.clone(),
            };
            println!(
                "grid search: {} over {} cells x {} seed(s), {} epochs",
                optimizer,
                grid.cells().len(),
                seeds,
                epochs
            );
            let outcome = grid_search(&base, &grid, SelectionMetric::AccuracyThenLoss)?;
            print_grid_table(&outcome);
            let csv = emit_grid(&out, &outcome)?;
            println!("  wrote {}", csv.display());
            Ok(())
        }
        Command::ScheduleCurve {
            lr,
            alpha,
            beta,
            epochs,
            lr_final,
            out,
        } => {
            let cfg = ScheduleConfig::new(lr, lr_final.unwrap_or(lr / 20.0), alpha, beta, epochs)?;
            if let ScheduleHealth::Degenerate(violations) = validate(&cfg) {
                for v in violations {
                    eprintln!(
                        "warning: degenerate curve ({:?} margin {:.2} < 6): endpoint deviates {:.2}%",
                        v.end,
                        v.margin,
                        100.0 * v.relative_deviation
                    );
                }
            }
            if let Some(parent) = out.parent() {
                if !parent.as_os_str().is_empty() {
                    fs::create_dir_all(parent)?;
                }
            }
            let mut file =
                fs::File::create(&out).with_context(|| format!("creating {}", out.display()))?;
            taso_core::schedule::write_curve_csv(&ScheduleKind::Taso(cfg), epochs, &mut file)?;
            println!("wrote {} ({} rows)", out.display(), epochs);
            Ok(())
        }
        Command::Defaults {
            optimizer,
            model,
            dataset,
            mnist_dir,
            samples,
        } => {
            let dataset = dataset_spec(&dataset, &mnist_dir, samples)?;
            let model = model_spec(Some(&model), &dataset, None)?;
            let cfg = default_mode(model, dataset, &optimizer)?;
            print!("{}", cfg.to_json()?);
            Ok(())
        }
    }
}

fn main() {
    if let Err(err) = run() {
        eprintln!("error: {err:#}");
        std::process::exit(1);
    }
}
