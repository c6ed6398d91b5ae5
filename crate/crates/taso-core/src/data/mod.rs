//! Dataset ingestion and batching: MNIST IDX files, deterministic synthetic
//! datasets for fast tests, and seeded epoch shuffling.

mod mnist;

pub use mnist::{load_mnist, resolve_mnist_file, IMAGE_MAGIC, LABEL_MAGIC, MNIST_MEAN, MNIST_STD};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::tensor::{numel, Tensor};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Split {
    Train,
    Test,
}

/// An immutable labeled dataset: inputs `[n, feature...]`, one class index
/// per sample.
#[derive(Clone, Debug)]
pub struct Dataset {
    inputs: Tensor,
    labels: Vec<u32>,
    num_classes: usize,
    split: Split,
}

impl Dataset {
    pub fn new(inputs: Tensor, labels: Vec<u32>, num_classes: usize, split: Split) -> Result<Self> {
        let shape = inputs.shape();
        if shape.is_empty() || shape[0] == 0 {
            return Err(Error::Input("dataset needs at least one sample".into()));
        }
        if labels.len() != shape[0] {
            return Err(Error::CountMismatch {
                images: shape[0],
                labels: labels.len(),
            });
        }
        if num_classes < 2 {
            return Err(Error::Input("dataset needs at least two classes".into()));
        }
        if let Some(bad) = labels.iter().find(|&&l| l as usize >= num_classes) {
            return Err(Error::Input(format!(
                "label {bad} out of range for {num_classes} classes"
            )));
        }
        if !inputs.all_finite() {
            return Err(Error::Numeric(
                "dataset inputs contain non-finite values".into(),
            ));
        }
        Ok(Dataset {
            inputs,
            labels,
            num_classes,
            split,
        })
    }

    pub fn len(&self) -> usize {
        self.inputs.shape()[0]
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn feature_shape(&self) -> &[usize] {
        &self.inputs.shape()[1..]
    }

    pub fn inputs(&self) -> &Tensor {
        &self.inputs
    }

    pub fn labels(&self) -> &[u32] {
        &self.labels
    }

    pub fn num_classes(&self) -> usize {
        self.num_classes
    }

    pub fn split(&self) -> Split {
        self.split
    }

    pub fn with_split(mut self, split: Split) -> Self {
        self.split = split;
        self
    }

    /// First `count` samples as a new dataset.
    pub fn head(&self, count: usize) -> Result<Dataset> {
        if count == 0 || count > self.len() {
            return Err(Error::Input(format!(
                "cannot take {count} samples from a dataset of {}",
                self.len()
            )));
        }
        let feat = numel(self.feature_shape());
        let mut shape = self.inputs.shape().to_vec();
        shape[0] = count;
        let inputs = Tensor::from_vec(shape, self.inputs.data()[..count * feat].to_vec())?;
        Dataset::new(
            inputs,
            self.labels[..count].to_vec(),
            self.num_classes,
            self.split,
        )
    }

    /// Copies the given samples into a contiguous batch.
    pub fn gather(&self, indices: &[usize]) -> (Tensor, Vec<u32>) {
        let feat = numel(self.feature_shape());
        let mut data = Vec::with_capacity(indices.len() * feat);
        let mut labels = Vec::with_capacity(indices.len());
        for &i in indices {
            data.extend_from_slice(&self.inputs.data()[i * feat..(i + 1) * feat]);
            labels.push(self.labels[i]);
        }
        let mut shape = vec![indices.len()];
        shape.extend_from_slice(self.feature_shape());
        (
            Tensor::from_vec(shape, data).expect("gathered to shape"),
            labels,
        )
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SyntheticKind {
    /// Two well-separated 2-D Gaussians; linearly separable with a margin of
    /// ten standard deviations between the means.
    Blobs,
    /// Four clusters in XOR layout; not linearly separable.
    Xor,
}

const BLOB_CENTER_X: f64 = 2.5;
const BLOB_SIGMA: f64 = 0.5;
const XOR_SIGMA: f64 = 0.2;

fn box_muller<R: Rng>(rng: &mut R) -> (f64, f64) {
    let u1: f64 = 1.0 - rng.gen::<f64>(); // (0, 1], keeps the log finite
    let u2: f64 = rng.gen();
    let r = (-2.0 * u1.ln()).sqrt();
    let phi = 2.0 * std::f64::consts::PI * u2;
    (r * phi.cos(), r * phi.sin())
}

/// Deterministic 2-D toy dataset; identical `(kind, n, seed)` always produce
/// identical tensors. Tagged as a training split; use
/// [`Dataset::with_split`] for a held-out set.
pub fn make_synthetic(kind: SyntheticKind, n: usize, seed: u64) -> Result<Dataset> {
    if n < 4 {
        return Err(Error::Input(format!(
            "synthetic datasets need n >= 4, got {n}"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut data = Vec::with_capacity(n * 2);
    let mut labels = Vec::with_capacity(n);
    for i in 0..n {
        let (gx, gy) = box_muller(&mut rng);
        match kind {
            SyntheticKind::Blobs => {
                let class = (i % 2) as u32;
                let cx = if class == 0 {
                    -BLOB_CENTER_X
                } else {
                    BLOB_CENTER_X
                };
                data.push(cx + BLOB_SIGMA * gx);
                data.push(BLOB_SIGMA * gy);
                labels.push(class);
            }
            SyntheticKind::Xor => {
                let corner = i % 4;
                let (cx, cy) = match corner {
                    0 => (1.0, 1.0),
                    1 => (-1.0, -1.0),
                    2 => (1.0, -1.0),
                    _ => (-1.0, 1.0),
                };
                data.push(cx + XOR_SIGMA * gx);
                data.push(cy + XOR_SIGMA * gy);
                // same-sign corners are class 0, mixed-sign corners class 1
                labels.push(if corner < 2 { 0 } else { 1 });
            }
        }
    }
    Dataset::new(Tensor::from_vec(vec![n, 2], data)?, labels, 2, Split::Train)
}

/// Seeded minibatch plan: the epoch's visit order is a permutation derived
/// from `(seed, epoch)` alone.
#[derive(Clone, Copy, Debug)]
pub struct BatchPlan {
    pub batch_size: usize,
    pub seed: u64,
    pub drop_last: bool,
}

impl BatchPlan {
    pub fn new(batch_size: usize, seed: u64) -> Result<Self> {
        if batch_size == 0 {
            return Err(Error::Config("batch size must be positive".into()));
        }
        Ok(BatchPlan {
            batch_size,
            seed,
            drop_last: false,
        })
    }

    pub fn with_drop_last(mut self, drop_last: bool) -> Self {
        self.drop_last = drop_last;
        self
    }
}

/// The epoch's sample permutation: a Fisher-Yates shuffle of `0..n` on a
/// ChaCha stream selected by the epoch number.
pub fn permutation(n: usize, seed: u64, epoch: u32) -> Vec<usize> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(epoch as u64);
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut rng);
    order
}

pub struct Batches<'a> {
    dataset: &'a Dataset,
    order: Vec<usize>,
    batch_size: usize,
    drop_last: bool,
    pos: usize,
}

impl Iterator for Batches<'_> {
    type Item = (Tensor, Vec<u32>);

    fn next(&mut self) -> Option<Self::Item> {
        let remaining = self.order.len() - self.pos;
        if remaining == 0 || (self.drop_last && remaining < self.batch_size) {
            return None;
        }
        let take = remaining.min(self.batch_size);
        let slice = &self.order[self.pos..self.pos + take];
        self.pos += take;
        Some(self.dataset.gather(slice))
    }
}

/// Minibatches for one epoch in the plan's deterministic order. The final
/// short batch is kept unless the plan says to drop it.
pub fn batches<'a>(dataset: &'a Dataset, plan: &BatchPlan, epoch: u32) -> Result<Batches<'a>> {
    if plan.batch_size == 0 {
        return Err(Error::Config("batch size must be positive".into()));
    }
    if plan.batch_size > dataset.len() {
        return Err(Error::Config(format!(
            "batch size {} exceeds dataset size {}",
            plan.batch_size,
            dataset.len()
        )));
    }
    Ok(Batches {
        dataset,
        order: permutation(dataset.len(), plan.seed, epoch),
        batch_size: plan.batch_size,
        drop_last: plan.drop_last,
        pos: 0,
    })
}
