//! Run records, seed aggregation, and file emission.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Exact header of every per-run CSV.
pub const RUN_CSV_HEADER: &str = "epoch,lr,train_loss,train_acc,test_loss,test_acc";

/// One epoch's metrics. Accuracies are percentages in `[0, 100]`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EpochRow {
    pub epoch: u32,
    pub lr: f64,
    pub train_loss: f64,
    pub train_acc: f64,
    pub test_loss: f64,
    pub test_acc: f64,
}

/// One seed's full training run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub seed: u64,
    pub rows: Vec<EpochRow>,
    /// Epoch at which the loss went non-finite, if the run diverged; the
    /// rows cover the completed epochs before it.
    pub diverged_at: Option<u32>,
    pub wall_secs: f64,
}

impl RunRecord {
    pub fn final_row(&self) -> Option<&EpochRow> {
        if self.diverged_at.is_some() {
            None
        } else {
            self.rows.last()
        }
    }

    /// Per-run CSV: the exact header plus one full-precision row per epoch.
    pub fn to_csv(&self) -> String {
        let mut out = String::from(RUN_CSV_HEADER);
        out.push('\n');
        for r in &self.rows {
            out.push_str(&format!(
                "{},{},{},{},{},{}\n",
                r.epoch, r.lr, r.train_loss, r.train_acc, r.test_loss, r.test_acc
            ));
        }
        out
    }
}

/// Parses the body of a per-run CSV back into epoch rows.
pub fn rows_from_csv(text: &str) -> Result<Vec<EpochRow>> {
    let mut lines = text.lines();
    match lines.next() {
        Some(h) if h == RUN_CSV_HEADER => {}
        other => {
            return Err(Error::Input(format!(
                "bad per-run CSV header: {other:?} (expected {RUN_CSV_HEADER:?})"
            )))
        }
    }
    let mut rows = Vec::new();
    for (i, line) in lines.enumerate() {
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 6 {
            return Err(Error::Input(format!(
                "row {i}: expected 6 fields, got {}",
                fields.len()
            )));
        }
        let parse = |s: &str| -> Result<f64> {
            s.parse()
                .map_err(|e| Error::Input(format!("row {i}: bad float {s:?}: {e}")))
        };
        rows.push(EpochRow {
            epoch: fields[0]
                .parse()
                .map_err(|e| Error::Input(format!("row {i}: bad epoch: {e}")))?,
            lr: parse(fields[1])?,
            train_loss: parse(fields[2])?,
            train_acc: parse(fields[3])?,
            test_loss: parse(fields[4])?,
            test_acc: parse(fields[5])?,
        });
    }
    Ok(rows)
}

/// Mean of a non-empty slice.
pub fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Sample standard deviation (n-1 denominator); a single value has std 0.
pub fn sample_std(xs: &[f64]) -> f64 {
    if xs.len() < 2 {
        return 0.0;
    }
    let m = mean(xs);
    (xs.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (xs.len() - 1) as f64).sqrt()
}

/// One epoch aggregated over surviving seeds.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EpochAggregate {
    pub epoch: u32,
    pub lr: f64,
    pub train_loss_mean: f64,
    pub train_loss_std: f64,
    pub train_acc_mean: f64,
    pub train_acc_std: f64,
    pub test_loss_mean: f64,
    pub test_loss_std: f64,
    pub test_acc_mean: f64,
    pub test_acc_std: f64,
}

/// Final metrics of one seed inside an aggregate.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SeedSummary {
    pub seed: u64,
    pub diverged_at: Option<u32>,
    pub wall_secs: f64,
    pub final_metrics: Option<EpochRow>,
}

/// Mean and sample standard deviation over seeds. Diverged seeds stay listed
/// and counted but are excluded from the statistics; the `Option` means are
/// `None` only when every seed diverged.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AggregateRecord {
    pub seeds: Vec<u64>,
    pub divergence_count: usize,
    pub per_seed: Vec<SeedSummary>,
    pub final_test_acc_mean: Option<f64>,
    pub final_test_acc_std: Option<f64>,
    pub final_test_loss_mean: Option<f64>,
    pub final_test_loss_std: Option<f64>,
    pub per_epoch: Vec<EpochAggregate>,
}

/// Aggregates runs of one configuration over seeds.
pub fn aggregate(records: &[RunRecord]) -> AggregateRecord {
    let survivors: Vec<&RunRecord> = records.iter().filter(|r| r.diverged_at.is_none()).collect();
    let per_seed = records
        .iter()
        .map(|r| SeedSummary {
            seed: r.seed,
            diverged_at: r.diverged_at,
            wall_secs: r.wall_secs,
            final_metrics: r.final_row().copied(),
        })
        .collect();

    let finals_acc: Vec<f64> = survivors
        .iter()
        .filter_map(|r| r.final_row().map(|row| row.test_acc))
        .collect();
    let finals_loss: Vec<f64> = survivors
        .iter()
        .filter_map(|r| r.final_row().map(|row| row.test_loss))
        .collect();

    let per_epoch = if survivors.is_empty() {
        Vec::new()
    } else {
        let epochs = survivors[0].rows.len();
        (0..epochs)
            .map(|e| {
                let col = |f: fn(&EpochRow) -> f64| -> Vec<f64> {
                    survivors.iter().map(|r| f(&r.rows[e])).collect()
                };
                let train_loss = col(|r| r.train_loss);
                let train_acc = col(|r| r.train_acc);
                let test_loss = col(|r| r.test_loss);
                let test_acc = col(|r| r.test_acc);
                EpochAggregate {
                    epoch: survivors[0].rows[e].epoch,
                    lr: survivors[0].rows[e].lr,
                    train_loss_mean: mean(&train_loss),
                    train_loss_std: sample_std(&train_loss),
                    train_acc_mean: mean(&train_acc),
                    train_acc_std: sample_std(&train_acc),
                    test_loss_mean: mean(&test_loss),
                    test_loss_std: sample_std(&test_loss),
                    test_acc_mean: mean(&test_acc),
                    test_acc_std: sample_std(&test_acc),
                }
            })
            .collect()
    };

    AggregateRecord {
        seeds: records.iter().map(|r| r.seed).collect(),
        divergence_count: records.len() - survivors.len(),
        per_seed,
        final_test_acc_mean: (!finals_acc.is_empty()).then(|| mean(&finals_acc)),
        final_test_acc_std: (!finals_acc.is_empty()).then(|| sample_std(&finals_acc)),
        final_test_loss_mean: (!finals_loss.is_empty()).then(|| mean(&finals_loss)),
        final_test_loss_std: (!finals_loss.is_empty()).then(|| sample_std(&finals_loss)),
        per_epoch,
    }
}

fn ensure_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir)?;
    Ok(())
}

/// Writes `run-seed-<seed>.csv` into `dir`.
pub fn emit_run(dir: &Path, record: &RunRecord) -> Result<PathBuf> {
    ensure_dir(dir)?;
    let path = dir.join(format!("run-seed-{}.csv", record.seed));
    fs::write(&path, record.to_csv())?;
    Ok(path)
}

/// Writes `aggregate.json` into `dir`.
pub fn emit_aggregate(dir: &Path, agg: &AggregateRecord) -> Result<PathBuf> {
    ensure_dir(dir)?;
    let path = dir.join("aggregate.json");
    let mut text = serde_json::to_string_pretty(agg)?;
    text.push('\n');
    fs::write(&path, text)?;
    Ok(path)
}
