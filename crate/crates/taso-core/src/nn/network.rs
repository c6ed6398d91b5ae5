//! Feed-forward network: an ordered layer stack with a softmax-cross-entropy
//! head. `forward` returns every intermediate activation; `loss_and_backward`
//! consumes one forward pass, fills every gradient slot with the gradient of
//! the *mean* batch loss, and refuses to run twice on the same pass.

use std::path::Path;

use crate::checkpoint;
use crate::error::{Error, Result};
use crate::nn::layer::{Layer, LayerCache};
use crate::tensor::Tensor;

pub struct Network {
    input_shape: Vec<usize>,
    layers: Vec<Layer>,
    num_classes: usize,
}

/// Activations and per-layer caches of one forward call.
/// `activations[0]` is the input batch; `activations[i + 1]` is layer `i`'s
/// output; the last entry holds the logits.
#[derive(Debug)]
pub struct ForwardPass {
    activations: Vec<Tensor>,
    caches: Vec<LayerCache>,
    consumed: bool,
}

impl ForwardPass {
    pub fn logits(&self) -> &Tensor {
        self.activations.last().expect("non-empty activation list")
    }

    pub fn activations(&self) -> &[Tensor] {
        &self.activations
    }

    pub fn batch_size(&self) -> usize {
        self.activations[0].shape()[0]
    }
}

impl Network {
    /// Validates that consecutive layer shapes compose for the given input
    /// feature shape and that the stack ends in a flat logit vector.
    pub fn new(input_shape: Vec<usize>, layers: Vec<Layer>) -> Result<Self> {
        if layers.is_empty() {
            return Err(Error::Config("network needs at least one layer".into()));
        }
        let mut shape = input_shape.clone();
        for (i, layer) in layers.iter().enumerate() {
            shape = layer
                .output_shape(&shape)
                .map_err(|e| Error::Config(format!("layer {i} ({}): {e}", layer.kind_name())))?;
        }
        if shape.len() != 1 || shape[0] < 2 {
            return Err(Error::Config(format!(
                "network must end in a flat vector of at least two logits, got {shape:?}"
            )));
        }
        Ok(Network {
            input_shape,
            num_classes: shape[0],
            layers,
        })
    }

    pub fn input_shape(&self) -> &[usize] {
        &self.input_shape
    }

    pub fn num_classes(&self) -> usize {
        self.num_classes
    }

    pub fn layers(&self) -> &[Layer] {
        &self.layers
    }

    /// Total number of scalar parameters.
    pub fn parameter_count(&self) -> usize {
        self.layers
            .iter()
            .flat_map(|l| l.parameter_tensors())
            .map(|t| t.len())
            .sum()
    }

    /// Number of parameter tensors (= optimizer slots).
    pub fn parameter_tensor_count(&self) -> usize {
        self.layers
            .iter()
            .map(|l| l.parameter_tensors().len())
            .sum()
    }

    /// Visits `(slot, parameter, gradient)` for every parameter tensor, in a
    /// stable order. This is the optimizer's access path.
    pub fn visit_params<F: FnMut(usize, &mut Tensor, &Tensor)>(&mut self, mut f: F) {
        let mut slot = 0;
        for layer in &mut self.layers {
            for (param, grad) in layer.param_grad_pairs() {
                f(slot, param, grad);
                slot += 1;
            }
        }
    }

    pub fn forward(&self, batch: &Tensor) -> Result<ForwardPass> {
        let shape = batch.shape();
        if shape.is_empty() || shape[0] == 0 || shape[1..] != self.input_shape {
            return Err(Error::Config(format!(
                "batch shape {shape:?} does not match input shape [n, {:?}]",
                self.input_shape
            )));
        }
        let mut activations = Vec::with_capacity(self.layers.len() + 1);
        let mut caches = Vec::with_capacity(self.layers.len());
        activations.push(batch.clone());
        for (i, layer) in self.layers.iter().enumerate() {
            let (out, cache) = layer
                .forward(activations.last().expect("non-empty"))
                .map_err(|e| Error::Config(format!("layer {i} ({}): {e}", layer.kind_name())))?;
            activations.push(out);
            caches.push(cache);
        }
        if !activations.last().expect("non-empty").all_finite() {
            return Err(self.nonfinite_fault(&activations));
        }
        Ok(ForwardPass {
            activations,
            caches,
            consumed: false,
        })
    }

    /// Mean softmax-cross-entropy over the batch plus a full backward pass.
    /// Fills every gradient slot; each forward pass supports exactly one
    /// backward pass.
    pub fn loss_and_backward(&mut self, pass: &mut ForwardPass, labels: &[u32]) -> Result<f64> {
        if pass.consumed {
            return Err(Error::Contract(
                "loss_and_backward called twice on one forward pass; run forward again".into(),
            ));
        }
        let n = pass.batch_size();
        if labels.len() != n {
            return Err(Error::Input(format!(
                "batch has {n} samples but {} labels were supplied",
                labels.len()
            )));
        }
        let (loss, grad_logits) = softmax_cross_entropy(pass.logits(), labels)?;
        if !loss.is_finite() {
            return Err(self.nonfinite_fault(&pass.activations));
        }
        pass.consumed = true;

        let mut grad = grad_logits;
        for (i, layer) in self.layers.iter_mut().enumerate().rev() {
            grad = layer
                .backward(
                    &pass.activations[i],
                    &pass.activations[i + 1],
                    &pass.caches[i],
                    &grad,
                )
                .map_err(|e| Error::Contract(format!("layer {i} ({}): {e}", layer.kind_name())))?;
        }
        Ok(loss)
    }

    fn nonfinite_fault(&self, activations: &[Tensor]) -> Error {
        for (i, act) in activations.iter().enumerate().skip(1) {
            if !act.all_finite() {
                return Error::Numeric(format!(
                    "non-finite activation after layer {} ({})",
                    i - 1,
                    self.layers[i - 1].kind_name()
                ));
            }
        }
        Error::Numeric("non-finite loss on finite activations".into())
    }

    /// Writes all parameter tensors to `path` in the flat checkpoint format.
    pub fn save_params(&self, path: &Path) -> Result<()> {
        let tensors: Vec<&Tensor> = self
            .layers
            .iter()
            .flat_map(|l| l.parameter_tensors())
            .collect();
        checkpoint::save_tensors(path, &tensors)
    }

    /// Restores parameters written by [`Network::save_params`] into a network
    /// of identical architecture.
    pub fn load_params(&mut self, path: &Path) -> Result<()> {
        let tensors = checkpoint::load_tensors(path)?;
        let mut slots: Vec<&mut Tensor> = self
            .layers
            .iter_mut()
            .flat_map(|l| l.param_tensors_mut())
            .collect();
        if tensors.len() != slots.len() {
            return Err(Error::Contract(format!(
                "checkpoint holds {} tensors, network has {} parameter tensors",
                tensors.len(),
                slots.len()
            )));
        }
        for (slot, tensor) in slots.iter_mut().zip(tensors) {
            if slot.shape() != tensor.shape() {
                return Err(Error::Contract(format!(
                    "checkpoint tensor shape {:?} does not match parameter shape {:?}",
                    tensor.shape(),
                    slot.shape()
                )));
            }
            **slot = tensor;
        }
        Ok(())
    }
}

/// Mean softmax-cross-entropy loss and its gradient wrt the logits.
/// Row maxima are subtracted before exponentiation, which is mathematically
/// identical and avoids overflow. The gradient already carries the `1/n`
/// batch-mean scaling: `(softmax - onehot) / n` per row.
pub fn softmax_cross_entropy(logits: &Tensor, labels: &[u32]) -> Result<(f64, Tensor)> {
    let &[n, classes] = logits.shape() else {
        return Err(Error::Contract(format!(
            "logits must be [n, classes], got {:?}",
            logits.shape()
        )));
    };
    if labels.len() != n {
        return Err(Error::Input(format!(
            "{n} logit rows but {} labels",
            labels.len()
        )));
    }
    let mut grad = Tensor::zeros(&[n, classes]);
    let inv_n = 1.0 / n as f64;
    let mut loss_sum = 0.0;
    let data = logits.data();
    let g = grad.data_mut();
    for (r, &label) in labels.iter().enumerate() {
        if label as usize >= classes {
            return Err(Error::Input(format!(
                "label {label} out of range for {classes} classes (sample {r})"
            )));
        }
        let row = &data[r * classes..(r + 1) * classes];
        let max = row.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let mut sum = 0.0;
        for &z in row {
            sum += (z - max).exp();
        }
        loss_sum += sum.ln() - (row[label as usize] - max);
        let g_row = &mut g[r * classes..(r + 1) * classes];
        for (j, &z) in row.iter().enumerate() {
            g_row[j] = ((z - max).exp() / sum) * inv_n;
        }
        g_row[label as usize] -= inv_n;
    }
    Ok((loss_sum * inv_n, grad))
}

/// Mean loss and number of correct argmax predictions for a logits batch.
pub fn evaluate_logits(logits: &Tensor, labels: &[u32]) -> Result<(f64, usize)> {
    let (loss, _) = softmax_cross_entropy(logits, labels)?;
    let &[_, classes] = logits.shape() else {
        unreachable!("checked by softmax_cross_entropy");
    };
    let data = logits.data();
    let mut correct = 0;
    for (r, &label) in labels.iter().enumerate() {
        let row = &data[r * classes..(r + 1) * classes];
        let mut best = 0;
        for (j, &z) in row.iter().enumerate() {
            if z > row[best] {
                best = j;
            }
        }
        if best == label as usize {
            correct += 1;
        }
    }
    Ok((loss, correct))
}
