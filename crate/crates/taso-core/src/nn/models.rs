//! Reference model builders.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::nn::layer::{Conv2d, Dense, Init, Layer, MaxPool2d};
use crate::nn::network::Network;

// PRNG stream reserved for weight initialization, distinct from the
// per-epoch shuffle streams.
const INIT_STREAM: u64 = 0x696e_6974; // "init"

fn seeded_rng(seed: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(INIT_STREAM);
    rng
}

/// Classic LeNet5 for 1x28x28 inputs:
/// conv(6,5x5) -> tanh -> maxpool(2) -> conv(16,5x5) -> tanh -> maxpool(2)
/// -> flatten -> dense(120) -> tanh -> dense(84) -> tanh -> dense(classes).
///
/// Tanh-adjacent layers use Glorot-uniform initialization, biases are zero.
pub fn build_lenet5(num_classes: usize, seed: u64) -> Result<Network> {
    if num_classes < 2 {
        return Err(Error::Config(format!(
            "lenet5 needs at least 2 classes, got {num_classes}"
        )));
    }
    let mut rng = seeded_rng(seed);
    let layers = vec![
        Layer::Conv2d(Conv2d::new(1, 6, 5, 1, 0, Init::Glorot, &mut rng)?),
        Layer::Tanh,
        Layer::MaxPool2d(MaxPool2d::new(2, 2)?),
        Layer::Conv2d(Conv2d::new(6, 16, 5, 1, 0, Init::Glorot, &mut rng)?),
        Layer::Tanh,
        Layer::MaxPool2d(MaxPool2d::new(2, 2)?),
        Layer::Flatten,
        Layer::Dense(Dense::new(16 * 4 * 4, 120, Init::Glorot, &mut rng)?),
        Layer::Tanh,
        Layer::Dense(Dense::new(120, 84, Init::Glorot, &mut rng)?),
        Layer::Tanh,
        Layer::Dense(Dense::new(84, num_classes, Init::Glorot, &mut rng)?),
    ];
    Network::new(vec![1, 28, 28], layers)
}

/// Dense->relu chain ending in bare logits: `widths[0]` inputs,
/// `widths.last()` classes. Hidden layers use He-uniform initialization, the
/// logit layer Glorot-uniform.
pub fn build_mlp(widths: &[usize], seed: u64) -> Result<Network> {
    if widths.len() < 2 {
        return Err(Error::Config(format!(
            "mlp needs at least two widths, got {widths:?}"
        )));
    }
    if widths.contains(&0) {
        return Err(Error::Config(format!(
            "mlp widths must be positive, got {widths:?}"
        )));
    }
    let mut rng = seeded_rng(seed);
    let mut layers = Vec::new();
    let last = widths.len() - 2;
    for (i, pair) in widths.windows(2).enumerate() {
        let init = if i < last { Init::He } else { Init::Glorot };
        layers.push(Layer::Dense(Dense::new(pair[0], pair[1], init, &mut rng)?));
        if i < last {
            layers.push(Layer::Relu);
        }
    }
    Network::new(vec![widths[0]], layers)
}
