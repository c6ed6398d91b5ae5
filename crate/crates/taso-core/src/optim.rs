//! First-order parameter update rules behind one interface: plain SGD,
//! classical and Nesterov momentum, Adagrad, RMSProp (plain and centered),
//! and Adam (plain and AmsGrad).
//!
//! Every rule consumes the mean minibatch gradient and a per-step learning
//! rate supplied by the caller (typically from [`crate::schedule`]). State is
//! kept per parameter-tensor *slot*: slot `i` of a network is its `i`-th
//! parameter tensor, and a slot's buffer shapes are fixed by the first update.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::tensor::Tensor;

/// Stability constant for Adagrad and RMSProp denominators.
pub const DELTA_ADAGRAD_RMSPROP: f64 = 1e-6;
/// Stability constant for Adam denominators.
pub const DELTA_ADAM: f64 = 1e-8;
/// RMSProp squared-gradient decay.
pub const DEFAULT_RHO: f64 = 0.99;
/// Adam first-moment decay.
pub const DEFAULT_RHO1: f64 = 0.9;
/// Adam second-moment decay.
pub const DEFAULT_RHO2: f64 = 0.99;
/// Momentum coefficient.
pub const DEFAULT_MU: f64 = 0.9;

fn check_step(slot: usize, theta: &[f64], grad: &[f64], lr: f64) -> Result<()> {
    if theta.len() != grad.len() {
        return Err(Error::Contract(format!(
            "slot {slot}: parameter length {} does not match gradient length {}",
            theta.len(),
            grad.len()
        )));
    }
    if !lr.is_finite() || lr <= 0.0 {
        return Err(Error::Contract(format!(
            "learning rate must be positive and finite, got {lr}"
        )));
    }
    Ok(())
}

/// Fetches slot `slot`'s buffer, creating it zero-filled on first use. A
/// later call with a different length is a contract violation: state shapes
/// never change once established.
fn slot_buffer(
    slots: &mut Vec<Option<Vec<f64>>>,
    slot: usize,
    len: usize,
) -> Result<&mut Vec<f64>> {
    if slots.len() <= slot {
        slots.resize(slot + 1, None);
    }
    let entry = &mut slots[slot];
    if let Some(buf) = entry {
        if buf.len() != len {
            return Err(Error::Contract(format!(
                "slot {slot}: established state length {} does not match parameter length {len}",
                buf.len()
            )));
        }
    } else {
        *entry = Some(vec![0.0; len]);
    }
    Ok(entry.as_mut().expect("just initialized"))
}

fn domain(name: &str, value: f64, lo: f64, lo_open: bool, hi: f64, hi_open: bool) -> Result<f64> {
    let below = if lo_open { value <= lo } else { value < lo };
    let above = if hi_open { value >= hi } else { value > hi };
    if !value.is_finite() || below || above {
        let l = if lo_open { "(" } else { "[" };
        let h = if hi_open { ")" } else { "]" };
        return Err(Error::Config(format!(
            "{name} must lie in {l}{lo}, {hi}{h}, got {value}"
        )));
    }
    Ok(value)
}

/// `theta <- theta - lr * g`. Stateless.
#[derive(Clone, Debug, Default)]
pub struct Sgd;

impl Sgd {
    pub fn step(&mut self, slot: usize, theta: &mut [f64], grad: &[f64], lr: f64) -> Result<()> {
        check_step(slot, theta, grad, lr)?;
        for (t, g) in theta.iter_mut().zip(grad) {
            *t -= lr * g;
        }
        Ok(())
    }
}

/// Classical (Polyak) momentum: `buf <- mu*buf - lr*g; theta <- theta + buf`.
#[derive(Clone, Debug)]
pub struct Momentum {
    mu: f64,
    velocity: Vec<Option<Vec<f64>>>,
}

impl Momentum {
    pub fn new(mu: f64) -> Result<Self> {
        Ok(Momentum {
            mu: domain("momentum mu", mu, 0.0, false, 1.0, true)?,
            velocity: Vec::new(),
        })
    }

    pub fn step(&mut self, slot: usize, theta: &mut [f64], grad: &[f64], lr: f64) -> Result<()> {
        check_step(slot, theta, grad, lr)?;
        let buf = slot_buffer(&mut self.velocity, slot, theta.len())?;
        for ((t, g), b) in theta.iter_mut().zip(grad).zip(buf) {
            *b = self.mu * *b - lr * g;
            *t += *b;
        }
        Ok(())
    }
}

/// Nesterov momentum in the gradient-at-current-point form:
/// `buf <- mu*buf + g; theta <- theta - lr*(g + mu*buf)`.
#[derive(Clone, Debug)]
pub struct Nesterov {
    mu: f64,
    velocity: Vec<Option<Vec<f64>>>,
}

impl Nesterov {
    pub fn new(mu: f64) -> Result<Self> {
        Ok(Nesterov {
            mu: domain("nesterov mu", mu, 0.0, true, 1.0, true)?,
            velocity: Vec::new(),
        })
    }

    pub fn step(&mut self, slot: usize, theta: &mut [f64], grad: &[f64], lr: f64) -> Result<()> {
        check_step(slot, theta, grad, lr)?;
        let buf = slot_buffer(&mut self.velocity, slot, theta.len())?;
        for ((t, g), b) in theta.iter_mut().zip(grad).zip(buf) {
            *b = self.mu * *b + g;
            *t -= lr * (g + self.mu * *b);
        }
        Ok(())
    }
}

/// Adagrad: `r <- r + g.*g; theta <- theta - lr/(delta + sqrt(r)) .* g`.
#[derive(Clone, Debug)]
pub struct Adagrad {
    delta: f64,
    accum: Vec<Option<Vec<f64>>>,
}

impl Adagrad {
    pub fn new(delta: f64) -> Result<Self> {
        Ok(Adagrad {
            delta: domain("adagrad delta", delta, 0.0, true, f64::INFINITY, true)?,
            accum: Vec::new(),
        })
    }

    pub fn step(&mut self, slot: usize, theta: &mut [f64], grad: &[f64], lr: f64) -> Result<()> {
        check_step(slot, theta, grad, lr)?;
        let accum = slot_buffer(&mut self.accum, slot, theta.len())?;
        for ((t, g), r) in theta.iter_mut().zip(grad).zip(accum) {
            *r += g * g;
            *t -= lr * g / (self.delta + r.sqrt());
        }
        Ok(())
    }
}

#[derive(Debug)]
struct RmsSlot {
    accum: Vec<f64>,
    grad_mean: Vec<f64>,
}

/// RMSProp: `r <- rho*r + (1-rho)*g.*g`, update `-lr/(delta + sqrt(r)) .* g`.
/// The centered variant additionally tracks the gradient EMA `s` and divides
/// by `sqrt(max(r - s.*s, 0)) + delta`, a variance estimate.
#[derive(Debug)]
pub struct RmsProp {
    rho: f64,
    delta: f64,
    centered: bool,
    slots: Vec<Option<RmsSlot>>,
}

impl RmsProp {
    pub fn new(rho: f64, delta: f64, centered: bool) -> Result<Self> {
        Ok(RmsProp {
            rho: domain("rmsprop rho", rho, 0.0, true, 1.0, true)?,
            delta: domain("rmsprop delta", delta, 0.0, true, f64::INFINITY, true)?,
            centered,
            slots: Vec::new(),
        })
    }

    pub fn step(&mut self, slot: usize, theta: &mut [f64], grad: &[f64], lr: f64) -> Result<()> {
        check_step(slot, theta, grad, lr)?;
        if self.slots.len() <= slot {
            self.slots.resize_with(slot + 1, || None);
        }
        let entry = &mut self.slots[slot];
        if let Some(s) = entry {
            if s.accum.len() != theta.len() {
                return Err(Error::Contract(format!(
                    "slot {slot}: established state length {} does not match parameter length {}",
                    s.accum.len(),
                    theta.len()
                )));
            }
        } else {
            *entry = Some(RmsSlot {
                accum: vec![0.0; theta.len()],
                grad_mean: if self.centered {
                    vec![0.0; theta.len()]
                } else {
                    Vec::new()
                },
            });
        }
        let state = entry.as_mut().expect("just initialized");
        for (i, (t, g)) in theta.iter_mut().zip(grad).enumerate() {
            let r = &mut state.accum[i];
            *r = self.rho * *r + (1.0 - self.rho) * g * g;
            let denom = if self.centered {
                let s = &mut state.grad_mean[i];
                *s = self.rho * *s + (1.0 - self.rho) * g;
                // EMA round-off can push the variance estimate slightly negative
                (*r - *s * *s).max(0.0).sqrt() + self.delta
            } else {
                r.sqrt() + self.delta
            };
            *t -= lr * g / denom;
        }
        Ok(())
    }
}

#[derive(Debug)]
struct AdamSlot {
    m: Vec<f64>,
    v: Vec<f64>,
    v_max: Vec<f64>,
    t: u64,
}

/// Adam with bias correction; the AmsGrad variant keeps an elementwise running
/// maximum of the bias-corrected second moment in the denominator.
#[derive(Debug)]
pub struct Adam {
    rho1: f64,
    rho2: f64,
    delta: f64,
    amsgrad: bool,
    slots: Vec<Option<AdamSlot>>,
}

impl Adam {
    pub fn new(rho1: f64, rho2: f64, delta: f64, amsgrad: bool) -> Result<Self> {
        Ok(Adam {
            rho1: domain("adam rho1", rho1, 0.0, true, 1.0, true)?,
            rho2: domain("adam rho2", rho2, 0.0, true, 1.0, true)?,
            delta: domain("adam delta", delta, 0.0, true, f64::INFINITY, true)?,
            amsgrad,
            slots: Vec::new(),
        })
    }

    pub fn step(&mut self, slot: usize, theta: &mut [f64], grad: &[f64], lr: f64) -> Result<()> {
        check_step(slot, theta, grad, lr)?;
        if self.slots.len() <= slot {
            self.slots.resize_with(slot + 1, || None);
        }
        let entry = &mut self.slots[slot];
        if let Some(s) = entry {
            if s.m.len() != theta.len() {
                return Err(Error::Contract(format!(
                    "slot {slot}: established state length {} does not match parameter length {}",
                    s.m.len(),
                    theta.len()
                )));
            }
        } else {
            *entry = Some(AdamSlot {
                m: vec![0.0; theta.len()],
                v: vec![0.0; theta.len()],
                v_max: if self.amsgrad {
                    vec![0.0; theta.len()]
                } else {
                    Vec::new()
                },
                t: 0,
            });
        }
        let state = entry.as_mut().expect("just initialized");
        state.t += 1;
        let c1 = 1.0 - self.rho1.powi(state.t.min(i32::MAX as u64) as i32);
        let c2 = 1.0 - self.rho2.powi(state.t.min(i32::MAX as u64) as i32);
        for (i, (t, g)) in theta.iter_mut().zip(grad).enumerate() {
            let m = &mut state.m[i];
            let v = &mut state.v[i];
            *m = self.rho1 * *m + (1.0 - self.rho1) * g;
            *v = self.rho2 * *v + (1.0 - self.rho2) * g * g;
            let m_hat = *m / c1;
            let v_hat = *v / c2;
            let denom = if self.amsgrad {
                let vm = &mut state.v_max[i];
                *vm = vm.max(v_hat);
                vm.sqrt() + self.delta
            } else {
                v_hat.sqrt() + self.delta
            };
            *t -= lr * m_hat / denom;
        }
        Ok(())
    }
}

/// One of the eight update rules, dispatched by value.
#[derive(Debug)]
pub enum Optimizer {
    Sgd(Sgd),
    Momentum(Momentum),
    Nesterov(Nesterov),
    Adagrad(Adagrad),
    RmsProp(RmsProp),
    Adam(Adam),
}

impl Optimizer {
    /// Applies one update to the parameter tensor registered under `slot`.
    pub fn step(&mut self, slot: usize, theta: &mut [f64], grad: &[f64], lr: f64) -> Result<()> {
        match self {
            Optimizer::Sgd(o) => o.step(slot, theta, grad, lr),
            Optimizer::Momentum(o) => o.step(slot, theta, grad, lr),
            Optimizer::Nesterov(o) => o.step(slot, theta, grad, lr),
            Optimizer::Adagrad(o) => o.step(slot, theta, grad, lr),
            Optimizer::RmsProp(o) => o.step(slot, theta, grad, lr),
            Optimizer::Adam(o) => o.step(slot, theta, grad, lr),
        }
    }

    /// State buffers of every slot, in slot order, for checkpointing alongside
    /// network parameters. Adam slots append their step counter as a scalar.
    pub fn export_state(&self) -> Vec<Tensor> {
        fn flat(slots: &[Option<Vec<f64>>]) -> Vec<Tensor> {
            slots
                .iter()
                .map(|s| {
                    let buf = s.clone().unwrap_or_default();
                    Tensor::from_vec(vec![buf.len()], buf).expect("flat buffer")
                })
                .collect()
        }
        match self {
            Optimizer::Sgd(_) => Vec::new(),
            Optimizer::Momentum(o) => flat(&o.velocity),
            Optimizer::Nesterov(o) => flat(&o.velocity),
            Optimizer::Adagrad(o) => flat(&o.accum),
            Optimizer::RmsProp(o) => {
                let mut out = Vec::new();
                for s in &o.slots {
                    let (r, gm) = s
                        .as_ref()
                        .map(|s| (s.accum.clone(), s.grad_mean.clone()))
                        .unwrap_or_default();
                    out.push(Tensor::from_vec(vec![r.len()], r).expect("flat buffer"));
                    out.push(Tensor::from_vec(vec![gm.len()], gm).expect("flat buffer"));
                }
                out
            }
            Optimizer::Adam(o) => {
                let mut out = Vec::new();
                for s in &o.slots {
                    let (m, v, vm, t) = s
                        .as_ref()
                        .map(|s| (s.m.clone(), s.v.clone(), s.v_max.clone(), s.t))
                        .unwrap_or_default();
                    out.push(Tensor::from_vec(vec![m.len()], m).expect("flat buffer"));
                    out.push(Tensor::from_vec(vec![v.len()], v).expect("flat buffer"));
                    out.push(Tensor::from_vec(vec![vm.len()], vm).expect("flat buffer"));
                    out.push(Tensor::from_vec(vec![1], vec![t as f64]).expect("flat buffer"));
                }
                out
            }
        }
    }

    /// Restores state produced by [`Optimizer::export_state`] on a fresh
    /// instance of the same rule.
    pub fn import_state(&mut self, tensors: &[Tensor]) -> Result<()> {
        fn unflat(tensors: &[Tensor]) -> Vec<Option<Vec<f64>>> {
            tensors
                .iter()
                .map(|t| {
                    if t.is_empty() {
                        None
                    } else {
                        Some(t.data().to_vec())
                    }
                })
                .collect()
        }
        match self {
            Optimizer::Sgd(_) => Ok(()),
            Optimizer::Momentum(o) => {
                o.velocity = unflat(tensors);
                Ok(())
            }
            Optimizer::Nesterov(o) => {
                o.velocity = unflat(tensors);
                Ok(())
            }
            Optimizer::Adagrad(o) => {
                o.accum = unflat(tensors);
                Ok(())
            }
            Optimizer::RmsProp(o) => {
                if !tensors.len().is_multiple_of(2) {
                    return Err(Error::Contract(
                        "rmsprop state must come in (accum, grad_mean) pairs".into(),
                    ));
                }
                o.slots = tensors
                    .chunks(2)
                    .map(|pair| {
                        if pair[0].is_empty() {
                            None
                        } else {
                            Some(RmsSlot {
                                accum: pair[0].data().to_vec(),
                                grad_mean: pair[1].data().to_vec(),
                            })
                        }
                    })
                    .collect();
                Ok(())
            }
            Optimizer::Adam(o) => {
                if !tensors.len().is_multiple_of(4) {
                    return Err(Error::Contract(
                        "adam state must come in (m, v, v_max, t) quadruples".into(),
                    ));
                }
                o.slots = tensors
                    .chunks(4)
                    .map(|quad| {
                        if quad[0].is_empty() {
                            None
                        } else {
                            Some(AdamSlot {
                                m: quad[0].data().to_vec(),
                                v: quad[1].data().to_vec(),
                                v_max: quad[2].data().to_vec(),
                                t: quad[3].data()[0] as u64,
                            })
                        }
                    })
                    .collect();
                Ok(())
            }
        }
    }
}

/// Serializable optimizer description: a rule name plus optional
/// hyperparameter overrides. Fields that do not apply to the named rule are
/// rejected by [`make_optimizer`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OptimizerSpec {
    pub name: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mu: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rho: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rho1: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rho2: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub delta: Option<f64>,
}

impl OptimizerSpec {
    pub fn named(name: &str) -> Self {
        OptimizerSpec {
            name: name.to_string(),
            mu: None,
            rho: None,
            rho1: None,
            rho2: None,
            delta: None,
        }
    }

    pub fn with_mu(mut self, mu: f64) -> Self {
        self.mu = Some(mu);
        self
    }
}

/// All accepted rule names.
pub const OPTIMIZER_NAMES: [&str; 8] = [
    "sgd",
    "momentum",
    "nesterov",
    "adagrad",
    "rmsprop",
    "rmsprop-centered",
    "adam",
    "amsgrad",
];

/// Builds an optimizer instance from a spec, filling in defaults:
/// `rho = 0.99`, `rho1 = 0.9`, `rho2 = 0.99`, `mu = 0.9`, `delta = 1e-6` for
/// Adagrad/RMSProp and `1e-8` for Adam/AmsGrad.
pub fn make_optimizer(spec: &OptimizerSpec) -> Result<Optimizer> {
    fn reject_unused(name: &str, unused: &[(&str, Option<f64>)]) -> Result<()> {
        for (field, value) in unused {
            if value.is_some() {
                return Err(Error::Config(format!(
                    "hyperparameter `{field}` does not apply to optimizer `{name}`"
                )));
            }
        }
        Ok(())
    }

    let s = spec;
    match s.name.as_str() {
        "sgd" => {
            reject_unused(
                "sgd",
                &[
                    ("mu", s.mu),
                    ("rho", s.rho),
                    ("rho1", s.rho1),
                    ("rho2", s.rho2),
                    ("delta", s.delta),
                ],
            )?;
            Ok(Optimizer::Sgd(Sgd))
        }
        "momentum" => {
            reject_unused(
                "momentum",
                &[
                    ("rho", s.rho),
                    ("rho1", s.rho1),
                    ("rho2", s.rho2),
                    ("delta", s.delta),
                ],
            )?;
            Ok(Optimizer::Momentum(Momentum::new(
                s.mu.unwrap_or(DEFAULT_MU),
            )?))
        }
        "nesterov" => {
            reject_unused(
                "nesterov",
                &[
                    ("rho", s.rho),
                    ("rho1", s.rho1),
                    ("rho2", s.rho2),
                    ("delta", s.delta),
                ],
            )?;
            Ok(Optimizer::Nesterov(Nesterov::new(
                s.mu.unwrap_or(DEFAULT_MU),
            )?))
        }
        "adagrad" => {
            reject_unused(
                "adagrad",
                &[
                    ("mu", s.mu),
                    ("rho", s.rho),
                    ("rho1", s.rho1),
                    ("rho2", s.rho2),
                ],
            )?;
            Ok(Optimizer::Adagrad(Adagrad::new(
                s.delta.unwrap_or(DELTA_ADAGRAD_RMSPROP),
            )?))
        }
        "rmsprop" | "rmsprop-centered" => {
            reject_unused(&s.name, &[("mu", s.mu), ("rho1", s.rho1), ("rho2", s.rho2)])?;
            Ok(Optimizer::RmsProp(RmsProp::new(
                s.rho.unwrap_or(DEFAULT_RHO),
                s.delta.unwrap_or(DELTA_ADAGRAD_RMSPROP),
                s.name == "rmsprop-centered",
            )?))
        }
        "adam" | "amsgrad" => {
            reject_unused(&s.name, &[("mu", s.mu), ("rho", s.rho)])?;
            Ok(Optimizer::Adam(Adam::new(
                s.rho1.unwrap_or(DEFAULT_RHO1),
                s.rho2.unwrap_or(DEFAULT_RHO2),
                s.delta.unwrap_or(DELTA_ADAM),
                s.name == "amsgrad",
            )?))
        }
        other => Err(Error::Config(format!(
            "unknown optimizer `{other}` (expected one of {OPTIMIZER_NAMES:?})"
        ))),
    }
}
