//! Learning-rate-per-epoch computation.
//!
//! The centerpiece is the training-aware sigmoidal curve
//!
//! ```text
//! lr(k) = lr_initial / (1 + exp(alpha * (k / total_epochs - beta))) + lr_final
//! ```
//!
//! which holds the rate near `lr_initial + lr_final` through the first part of
//! training and drops it toward `lr_final` around epoch `beta * total_epochs`.
//! Because the curve is parameterized by the total planned epoch count, the
//! whole shape compresses or stretches with the training budget.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Default steepness.
pub const DEFAULT_ALPHA: f64 = 25.0;
/// Default transition fraction.
pub const DEFAULT_BETA: f64 = 0.7;
/// Default ratio between the initial and final learning rate.
pub const DEFAULT_FINAL_DIVISOR: f64 = 20.0;
/// Both `alpha * beta` and `alpha * (1 - beta)` should be at least this large,
/// or the curve endpoints visibly miss `lr_initial + lr_final` / `lr_final`.
pub const ENDPOINT_MARGIN: f64 = 6.0;

/// Parameters of the sigmoidal curve. Construction validates field domains;
/// the endpoint-margin heuristic is checked separately by [`validate`].
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScheduleConfig {
    pub lr_initial: f64,
    pub lr_final: f64,
    pub alpha: f64,
    pub beta: f64,
    pub total_epochs: u32,
}

impl ScheduleConfig {
    pub fn new(
        lr_initial: f64,
        lr_final: f64,
        alpha: f64,
        beta: f64,
        total_epochs: u32,
    ) -> Result<Self> {
        if !lr_initial.is_finite() || lr_initial <= 0.0 {
            return Err(Error::Config(format!(
                "initial learning rate must be positive and finite, got {lr_initial}"
            )));
        }
        if !lr_final.is_finite() || lr_final < 0.0 {
            return Err(Error::Config(format!(
                "final learning rate must be non-negative and finite, got {lr_final}"
            )));
        }
        if lr_final >= lr_initial {
            return Err(Error::Config(format!(
                "final learning rate ({lr_final}) must be below the initial one ({lr_initial})"
            )));
        }
        if !alpha.is_finite() || alpha <= 0.0 {
            return Err(Error::Config(format!(
                "alpha must be positive, got {alpha}"
            )));
        }
        if !beta.is_finite() || beta <= 0.0 || beta >= 1.0 {
            return Err(Error::Config(format!(
                "beta must lie strictly between 0 and 1, got {beta}"
            )));
        }
        if total_epochs < 1 {
            return Err(Error::Config("total_epochs must be at least 1".into()));
        }
        Ok(ScheduleConfig {
            lr_initial,
            lr_final,
            alpha,
            beta,
            total_epochs,
        })
    }

    pub fn lr_at(&self, epoch: u32) -> Result<f64> {
        taso_lr(self, epoch)
    }
}

/// Default curve for a given initial rate and budget: `alpha = 25`,
/// `beta = 0.7`, final rate 20 times smaller than the initial one.
pub fn default_config(lr_initial: f64, total_epochs: u32) -> Result<ScheduleConfig> {
    ScheduleConfig::new(
        lr_initial,
        lr_initial / DEFAULT_FINAL_DIVISOR,
        DEFAULT_ALPHA,
        DEFAULT_BETA,
        total_epochs,
    )
}

/// Evaluates the sigmoidal curve at epoch `k` (1-based, `1 <= k <= total_epochs`).
pub fn taso_lr(cfg: &ScheduleConfig, epoch: u32) -> Result<f64> {
    if epoch < 1 || epoch > cfg.total_epochs {
        return Err(Error::Contract(format!(
            "epoch {epoch} outside schedule range 1..={}",
            cfg.total_epochs
        )));
    }
    let progress = epoch as f64 / cfg.total_epochs as f64;
    Ok(cfg.lr_initial / (1.0 + (cfg.alpha * (progress - cfg.beta)).exp()) + cfg.lr_final)
}

/// Which end of the curve misses its nominal value.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CurveEnd {
    Start,
    Finish,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EndpointDeviation {
    pub end: CurveEnd,
    /// The violated product: `alpha * beta` for the start, `alpha * (1 - beta)`
    /// for the finish.
    pub margin: f64,
    /// Actual relative miss: `|lr(1) - (lr_i + lr_f)| / lr_i` at the start,
    /// `|lr(k_t) - lr_f| / lr_i` at the finish.
    pub relative_deviation: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub enum ScheduleHealth {
    Ok,
    /// The curve shape degenerates at the listed ends. A warning, not an
    /// error: such configs still train, they just do not deliver the nominal
    /// initial/final rates.
    Degenerate(Vec<EndpointDeviation>),
}

impl ScheduleHealth {
    pub fn is_ok(&self) -> bool {
        matches!(self, ScheduleHealth::Ok)
    }
}

/// Checks the endpoint-margin heuristic: `alpha * beta >= 6` and
/// `alpha * (1 - beta) >= 6` keep both relative endpoint deviations below 5%.
pub fn validate(cfg: &ScheduleConfig) -> ScheduleHealth {
    let mut violations = Vec::new();
    let start_margin = cfg.alpha * cfg.beta;
    if start_margin < ENDPOINT_MARGIN {
        let lr1 = taso_lr(cfg, 1).expect("epoch 1 always in range");
        violations.push(EndpointDeviation {
            end: CurveEnd::Start,
            margin: start_margin,
            relative_deviation: ((cfg.lr_initial + cfg.lr_final) - lr1).abs() / cfg.lr_initial,
        });
    }
    let finish_margin = cfg.alpha * (1.0 - cfg.beta);
    if finish_margin < ENDPOINT_MARGIN {
        let lr_last = taso_lr(cfg, cfg.total_epochs).expect("last epoch always in range");
        violations.push(EndpointDeviation {
            end: CurveEnd::Finish,
            margin: finish_margin,
            relative_deviation: (lr_last - cfg.lr_final).abs() / cfg.lr_initial,
        });
    }
    if violations.is_empty() {
        ScheduleHealth::Ok
    } else {
        ScheduleHealth::Degenerate(violations)
    }
}

/// A concrete per-epoch learning-rate rule.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum ScheduleKind {
    Taso(ScheduleConfig),
    Constant(f64),
}

impl ScheduleKind {
    pub fn constant(lr: f64) -> Result<Self> {
        if !lr.is_finite() || lr <= 0.0 {
            return Err(Error::Config(format!(
                "constant learning rate must be positive and finite, got {lr}"
            )));
        }
        Ok(ScheduleKind::Constant(lr))
    }

    pub fn total_epochs(&self) -> Option<u32> {
        match self {
            ScheduleKind::Taso(cfg) => Some(cfg.total_epochs),
            ScheduleKind::Constant(_) => None,
        }
    }
}

/// Learning rate for epoch `k`: the sigmoidal curve for [`ScheduleKind::Taso`]
/// (range-checked), the fixed rate for any `k` otherwise.
pub fn lr_for_epoch(kind: &ScheduleKind, epoch: u32) -> Result<f64> {
    match kind {
        ScheduleKind::Taso(cfg) => taso_lr(cfg, epoch),
        ScheduleKind::Constant(lr) => Ok(*lr),
    }
}

/// Tabulates the curve: one `(epoch, lr)` row per epoch in `1..=total_epochs`.
/// For a sigmoidal schedule `total_epochs` must match the config's budget.
pub fn export_curve(kind: &ScheduleKind, total_epochs: u32) -> Result<Vec<(u32, f64)>> {
    if total_epochs < 1 {
        return Err(Error::Contract("curve needs at least one epoch".into()));
    }
    if let ScheduleKind::Taso(cfg) = kind {
        if cfg.total_epochs != total_epochs {
            return Err(Error::Contract(format!(
                "curve length {total_epochs} disagrees with the schedule's budget {}",
                cfg.total_epochs
            )));
        }
    }
    (1..=total_epochs)
        .map(|k| lr_for_epoch(kind, k).map(|lr| (k, lr)))
        .collect()
}

/// Writes the curve as CSV: header `epoch,lr`, full-precision decimal values.
pub fn write_curve_csv<W: Write>(kind: &ScheduleKind, total_epochs: u32, w: &mut W) -> Result<()> {
    writeln!(w, "epoch,lr")?;
    for (k, lr) in export_curve(kind, total_epochs)? {
        writeln!(w, "{k},{lr}")?;
    }
    Ok(())
}
