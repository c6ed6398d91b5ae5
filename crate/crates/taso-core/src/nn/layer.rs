//! Layer kinds: dense, 2-D convolution, 2-D max-pooling, relu, tanh, flatten.
//!
//! Parametric layers own their parameter tensors and matching gradient slots;
//! stateless layers own nothing. `forward` never mutates a layer, `backward`
//! overwrites the gradient slots and returns the gradient wrt the input.

use rand::distributions::{Distribution, Uniform};
use rand::Rng;

use crate::error::{Error, Result};
use crate::nn::linalg;
use crate::tensor::{numel, Tensor};

/// Weight initialization family. Biases are always zero.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Init {
    /// He-uniform, `U(+-sqrt(6/fan_in))`: for relu-adjacent layers.
    He,
    /// Glorot-uniform, `U(+-sqrt(6/(fan_in+fan_out)))`: for tanh-adjacent and
    /// logit layers.
    Glorot,
}

fn init_weights<R: Rng>(
    shape: &[usize],
    fan_in: usize,
    fan_out: usize,
    init: Init,
    rng: &mut R,
) -> Tensor {
    let limit = match init {
        Init::He => (6.0 / fan_in as f64).sqrt(),
        Init::Glorot => (6.0 / (fan_in + fan_out) as f64).sqrt(),
    };
    let dist = Uniform::new_inclusive(-limit, limit);
    let data = (0..numel(shape)).map(|_| dist.sample(rng)).collect();
    Tensor::from_vec(shape.to_vec(), data).expect("generated to shape")
}

/// Fully connected layer, `y = x W + b`, weights `[in, out]` row-major.
#[derive(Clone, Debug)]
pub struct Dense {
    in_features: usize,
    out_features: usize,
    weights: Tensor,
    bias: Tensor,
    grad_weights: Tensor,
    grad_bias: Tensor,
}

impl Dense {
    pub fn new<R: Rng>(
        in_features: usize,
        out_features: usize,
        init: Init,
        rng: &mut R,
    ) -> Result<Self> {
        if in_features == 0 || out_features == 0 {
            return Err(Error::Config("dense layer widths must be positive".into()));
        }
        Ok(Dense {
            in_features,
            out_features,
            weights: init_weights(
                &[in_features, out_features],
                in_features,
                out_features,
                init,
                rng,
            ),
            bias: Tensor::zeros(&[out_features]),
            grad_weights: Tensor::zeros(&[in_features, out_features]),
            grad_bias: Tensor::zeros(&[out_features]),
        })
    }

    /// Builds from explicit parameters (tests, checkpoints).
    pub fn with_params(weights: Tensor, bias: Tensor) -> Result<Self> {
        let &[in_features, out_features] = weights.shape() else {
            return Err(Error::Config(format!(
                "dense weights must be rank 2, got shape {:?}",
                weights.shape()
            )));
        };
        if bias.shape() != [out_features] {
            return Err(Error::Config(format!(
                "dense bias shape {:?} does not match {out_features} outputs",
                bias.shape()
            )));
        }
        Ok(Dense {
            in_features,
            out_features,
            grad_weights: Tensor::zeros(&[in_features, out_features]),
            grad_bias: Tensor::zeros(&[out_features]),
            weights,
            bias,
        })
    }

    fn forward(&self, input: &Tensor) -> Result<Tensor> {
        let n = input.shape()[0];
        if input.shape() != [n, self.in_features] {
            return Err(Error::Config(format!(
                "dense expects [n, {}], got {:?}",
                self.in_features,
                input.shape()
            )));
        }
        let mut out = Tensor::zeros(&[n, self.out_features]);
        {
            let o = out.data_mut();
            for r in 0..n {
                o[r * self.out_features..(r + 1) * self.out_features]
                    .copy_from_slice(self.bias.data());
            }
        }
        linalg::matmul_acc(
            input.data(),
            self.weights.data(),
            out.data_mut(),
            n,
            self.in_features,
            self.out_features,
        );
        Ok(out)
    }

    fn backward(&mut self, input: &Tensor, grad_out: &Tensor) -> Result<Tensor> {
        let n = input.shape()[0];
        let (in_f, out_f) = (self.in_features, self.out_features);
        self.grad_weights.data_mut().fill(0.0);
        self.grad_bias.data_mut().fill(0.0);
        let gb = self.grad_bias.data_mut();
        for r in 0..n {
            let row = &grad_out.data()[r * out_f..(r + 1) * out_f];
            for (b, g) in gb.iter_mut().zip(row) {
                *b += g;
            }
        }
        linalg::matmul_at_b_acc(
            input.data(),
            grad_out.data(),
            self.grad_weights.data_mut(),
            n,
            in_f,
            out_f,
        );
        let mut grad_in = Tensor::zeros(&[n, in_f]);
        linalg::matmul_a_bt_acc(
            grad_out.data(),
            self.weights.data(),
            grad_in.data_mut(),
            n,
            out_f,
            in_f,
        );
        Ok(grad_in)
    }
}

/// Square-kernel 2-D convolution over `[n, c, h, w]` input, lowered to
/// matrix products through im2col.
#[derive(Clone, Debug)]
pub struct Conv2d {
    in_channels: usize,
    out_channels: usize,
    kernel: usize,
    stride: usize,
    padding: usize,
    weights: Tensor,
    bias: Tensor,
    grad_weights: Tensor,
    grad_bias: Tensor,
}

impl Conv2d {
    pub fn new<R: Rng>(
        in_channels: usize,
        out_channels: usize,
        kernel: usize,
        stride: usize,
        padding: usize,
        init: Init,
        rng: &mut R,
    ) -> Result<Self> {
        if in_channels == 0 || out_channels == 0 || kernel == 0 || stride == 0 {
            return Err(Error::Config(
                "conv2d channels, kernel, and stride must be positive".into(),
            ));
        }
        let fan_in = in_channels * kernel * kernel;
        let fan_out = out_channels * kernel * kernel;
        Ok(Conv2d {
            in_channels,
            out_channels,
            kernel,
            stride,
            padding,
            weights: init_weights(
                &[out_channels, in_channels, kernel, kernel],
                fan_in,
                fan_out,
                init,
                rng,
            ),
            bias: Tensor::zeros(&[out_channels]),
            grad_weights: Tensor::zeros(&[out_channels, in_channels, kernel, kernel]),
            grad_bias: Tensor::zeros(&[out_channels]),
        })
    }

    pub fn with_params(
        weights: Tensor,
        bias: Tensor,
        stride: usize,
        padding: usize,
    ) -> Result<Self> {
        let &[out_channels, in_channels, kh, kw] = weights.shape() else {
            return Err(Error::Config(format!(
                "conv2d weights must be rank 4, got shape {:?}",
                weights.shape()
            )));
        };
        if kh != kw {
            return Err(Error::Config("conv2d kernels must be square".into()));
        }
        if bias.shape() != [out_channels] {
            return Err(Error::Config(format!(
                "conv2d bias shape {:?} does not match {out_channels} output channels",
                bias.shape()
            )));
        }
        if stride == 0 {
            return Err(Error::Config("conv2d stride must be positive".into()));
        }
        Ok(Conv2d {
            in_channels,
            out_channels,
            kernel: kh,
            stride,
            padding,
            grad_weights: Tensor::zeros(&[out_channels, in_channels, kh, kw]),
            grad_bias: Tensor::zeros(&[out_channels]),
            weights,
            bias,
        })
    }

    fn spatial_out(&self, h: usize, w: usize) -> Result<(usize, usize)> {
        let padded_h = h + 2 * self.padding;
        let padded_w = w + 2 * self.padding;
        if padded_h < self.kernel || padded_w < self.kernel {
            return Err(Error::Config(format!(
                "conv2d kernel {} exceeds padded input {padded_h}x{padded_w}",
                self.kernel
            )));
        }
        Ok((
            (padded_h - self.kernel) / self.stride + 1,
            (padded_w - self.kernel) / self.stride + 1,
        ))
    }

    fn forward(&self, input: &Tensor) -> Result<Tensor> {
        let &[n, c, h, w] = input.shape() else {
            return Err(Error::Config(format!(
                "conv2d expects [n, c, h, w], got {:?}",
                input.shape()
            )));
        };
        if c != self.in_channels {
            return Err(Error::Config(format!(
                "conv2d expects {} input channels, got {c}",
                self.in_channels
            )));
        }
        let (oh, ow) = self.spatial_out(h, w)?;
        let patch = oh * ow;
        let k_rows = self.in_channels * self.kernel * self.kernel;
        let mut cols = vec![0.0; k_rows * patch];
        let mut out = Tensor::zeros(&[n, self.out_channels, oh, ow]);
        let sample_in = c * h * w;
        let sample_out = self.out_channels * patch;
        for s in 0..n {
            linalg::im2col(
                &input.data()[s * sample_in..(s + 1) * sample_in],
                c,
                h,
                w,
                self.kernel,
                self.stride,
                self.padding,
                oh,
                ow,
                &mut cols,
            );
            let out_s = &mut out.data_mut()[s * sample_out..(s + 1) * sample_out];
            for (oc, b) in self.bias.data().iter().enumerate() {
                out_s[oc * patch..(oc + 1) * patch].fill(*b);
            }
            linalg::matmul_acc(
                self.weights.data(),
                &cols,
                out_s,
                self.out_channels,
                k_rows,
                patch,
            );
        }
        Ok(out)
    }

    fn backward(&mut self, input: &Tensor, grad_out: &Tensor) -> Result<Tensor> {
        let &[n, c, h, w] = input.shape() else {
            return Err(Error::Contract("conv2d backward on non-4d input".into()));
        };
        let (oh, ow) = self.spatial_out(h, w)?;
        let patch = oh * ow;
        let k_rows = self.in_channels * self.kernel * self.kernel;
        self.grad_weights.data_mut().fill(0.0);
        self.grad_bias.data_mut().fill(0.0);
        let mut grad_in = Tensor::zeros(&[n, c, h, w]);
        let mut cols = vec![0.0; k_rows * patch];
        let mut grad_cols = vec![0.0; k_rows * patch];
        let sample_in = c * h * w;
        let sample_out = self.out_channels * patch;
        for s in 0..n {
            let in_s = &input.data()[s * sample_in..(s + 1) * sample_in];
            let go_s = &grad_out.data()[s * sample_out..(s + 1) * sample_out];
            linalg::im2col(
                in_s,
                c,
                h,
                w,
                self.kernel,
                self.stride,
                self.padding,
                oh,
                ow,
                &mut cols,
            );
            for (oc, gb) in self.grad_bias.data_mut().iter_mut().enumerate() {
                *gb += go_s[oc * patch..(oc + 1) * patch].iter().sum::<f64>();
            }
            linalg::matmul_a_bt_acc(
                go_s,
                &cols,
                self.grad_weights.data_mut(),
                self.out_channels,
                patch,
                k_rows,
            );
            grad_cols.fill(0.0);
            linalg::matmul_at_b_acc(
                self.weights.data(),
                go_s,
                &mut grad_cols,
                self.out_channels,
                k_rows,
                patch,
            );
            linalg::col2im_acc(
                &grad_cols,
                c,
                h,
                w,
                self.kernel,
                self.stride,
                self.padding,
                oh,
                ow,
                &mut grad_in.data_mut()[s * sample_in..(s + 1) * sample_in],
            );
        }
        Ok(grad_in)
    }
}

/// 2-D max pooling. No padding; trailing rows/columns that do not fill a
/// window are dropped.
#[derive(Clone, Copy, Debug)]
pub struct MaxPool2d {
    pub size: usize,
    pub stride: usize,
}

impl MaxPool2d {
    pub fn new(size: usize, stride: usize) -> Result<Self> {
        if size == 0 || stride == 0 {
            return Err(Error::Config(
                "maxpool size and stride must be positive".into(),
            ));
        }
        Ok(MaxPool2d { size, stride })
    }

    fn spatial_out(&self, h: usize, w: usize) -> Result<(usize, usize)> {
        if h < self.size || w < self.size {
            return Err(Error::Config(format!(
                "maxpool window {} exceeds input {h}x{w}",
                self.size
            )));
        }
        Ok((
            (h - self.size) / self.stride + 1,
            (w - self.size) / self.stride + 1,
        ))
    }

    fn forward(&self, input: &Tensor) -> Result<(Tensor, Vec<usize>)> {
        let &[n, c, h, w] = input.shape() else {
            return Err(Error::Config(format!(
                "maxpool expects [n, c, h, w], got {:?}",
                input.shape()
            )));
        };
        let (oh, ow) = self.spatial_out(h, w)?;
        let mut out = Tensor::zeros(&[n, c, oh, ow]);
        let mut argmax = vec![0usize; n * c * oh * ow];
        let data = input.data();
        let out_data = out.data_mut();
        let mut p = 0;
        for s in 0..n {
            for ch in 0..c {
                let plane = (s * c + ch) * h * w;
                for oy in 0..oh {
                    for ox in 0..ow {
                        let mut best = f64::NEG_INFINITY;
                        let mut best_idx = 0;
                        for ky in 0..self.size {
                            let iy = oy * self.stride + ky;
                            for kx in 0..self.size {
                                let ix = ox * self.stride + kx;
                                let idx = plane + iy * w + ix;
                                if data[idx] > best {
                                    best = data[idx];
                                    best_idx = idx;
                                }
                            }
                        }
                        out_data[p] = best;
                        argmax[p] = best_idx;
                        p += 1;
                    }
                }
            }
        }
        Ok((out, argmax))
    }

    fn backward(&self, input: &Tensor, argmax: &[usize], grad_out: &Tensor) -> Result<Tensor> {
        let mut grad_in = Tensor::zeros(input.shape());
        let gi = grad_in.data_mut();
        for (g, &idx) in grad_out.data().iter().zip(argmax) {
            gi[idx] += g;
        }
        Ok(grad_in)
    }
}

/// Per-layer values forward must retain for backward beyond the activations
/// themselves.
#[derive(Debug)]
pub(crate) enum LayerCache {
    None,
    /// Flat input index of each pooled maximum.
    MaxPool(Vec<usize>),
}

/// One network layer.
pub enum Layer {
    Dense(Dense),
    Conv2d(Conv2d),
    MaxPool2d(MaxPool2d),
    Relu,
    Tanh,
    Flatten,
}

impl Layer {
    pub fn kind_name(&self) -> &'static str {
        match self {
            Layer::Dense(_) => "dense",
            Layer::Conv2d(_) => "conv2d",
            Layer::MaxPool2d(_) => "maxpool2d",
            Layer::Relu => "relu",
            Layer::Tanh => "tanh",
            Layer::Flatten => "flatten",
        }
    }

    /// Parameter tensors, in update order. Stateless layers return none.
    pub fn parameter_tensors(&self) -> Vec<&Tensor> {
        match self {
            Layer::Dense(l) => vec![&l.weights, &l.bias],
            Layer::Conv2d(l) => vec![&l.weights, &l.bias],
            _ => Vec::new(),
        }
    }

    /// Gradient slots; slot `i` always has the shape of parameter `i`.
    pub fn gradient_tensors(&self) -> Vec<&Tensor> {
        match self {
            Layer::Dense(l) => vec![&l.grad_weights, &l.grad_bias],
            Layer::Conv2d(l) => vec![&l.grad_weights, &l.grad_bias],
            _ => Vec::new(),
        }
    }

    pub(crate) fn param_grad_pairs(&mut self) -> Vec<(&mut Tensor, &Tensor)> {
        match self {
            Layer::Dense(l) => vec![
                (&mut l.weights, &l.grad_weights),
                (&mut l.bias, &l.grad_bias),
            ],
            Layer::Conv2d(l) => vec![
                (&mut l.weights, &l.grad_weights),
                (&mut l.bias, &l.grad_bias),
            ],
            _ => Vec::new(),
        }
    }

    pub(crate) fn param_tensors_mut(&mut self) -> Vec<&mut Tensor> {
        match self {
            Layer::Dense(l) => vec![&mut l.weights, &mut l.bias],
            Layer::Conv2d(l) => vec![&mut l.weights, &mut l.bias],
            _ => Vec::new(),
        }
    }

    /// Output feature shape (without the batch extent) for a given input
    /// feature shape; errors if the shapes do not compose.
    pub fn output_shape(&self, input: &[usize]) -> Result<Vec<usize>> {
        match self {
            Layer::Dense(l) => {
                if input != [l.in_features] {
                    return Err(Error::Config(format!(
                        "dense expects flat input [{}], got {input:?}",
                        l.in_features
                    )));
                }
                Ok(vec![l.out_features])
            }
            Layer::Conv2d(l) => {
                let &[c, h, w] = input else {
                    return Err(Error::Config(format!(
                        "conv2d expects input [c, h, w], got {input:?}"
                    )));
                };
                if c != l.in_channels {
                    return Err(Error::Config(format!(
                        "conv2d expects {} input channels, got {c}",
                        l.in_channels
                    )));
                }
                let (oh, ow) = l.spatial_out(h, w)?;
                Ok(vec![l.out_channels, oh, ow])
            }
            Layer::MaxPool2d(l) => {
                let &[c, h, w] = input else {
                    return Err(Error::Config(format!(
                        "maxpool expects input [c, h, w], got {input:?}"
                    )));
                };
                let (oh, ow) = l.spatial_out(h, w)?;
                Ok(vec![c, oh, ow])
            }
            Layer::Relu | Layer::Tanh => Ok(input.to_vec()),
            Layer::Flatten => Ok(vec![numel(input)]),
        }
    }

    pub(crate) fn forward(&self, input: &Tensor) -> Result<(Tensor, LayerCache)> {
        match self {
            Layer::Dense(l) => Ok((l.forward(input)?, LayerCache::None)),
            Layer::Conv2d(l) => Ok((l.forward(input)?, LayerCache::None)),
            Layer::MaxPool2d(l) => {
                let (out, argmax) = l.forward(input)?;
                Ok((out, LayerCache::MaxPool(argmax)))
            }
            Layer::Relu => {
                let mut out = input.clone();
                for v in out.data_mut() {
                    *v = v.max(0.0);
                }
                Ok((out, LayerCache::None))
            }
            Layer::Tanh => {
                let mut out = input.clone();
                for v in out.data_mut() {
                    *v = v.tanh();
                }
                Ok((out, LayerCache::None))
            }
            Layer::Flatten => {
                let n = input.shape()[0];
                let features = numel(&input.shape()[1..]);
                Ok((input.clone().reshaped(vec![n, features])?, LayerCache::None))
            }
        }
    }

    pub(crate) fn backward(
        &mut self,
        input: &Tensor,
        output: &Tensor,
        cache: &LayerCache,
        grad_out: &Tensor,
    ) -> Result<Tensor> {
        if grad_out.shape() != output.shape() {
            return Err(Error::Contract(format!(
                "{}: upstream gradient shape {:?} does not match output {:?}",
                self.kind_name(),
                grad_out.shape(),
                output.shape()
            )));
        }
        match self {
            Layer::Dense(l) => l.backward(input, grad_out),
            Layer::Conv2d(l) => l.backward(input, grad_out),
            Layer::MaxPool2d(l) => match cache {
                LayerCache::MaxPool(argmax) => l.backward(input, argmax, grad_out),
                LayerCache::None => Err(Error::Contract("maxpool backward without cache".into())),
            },
            Layer::Relu => {
                let mut grad_in = grad_out.clone();
                for (g, x) in grad_in.data_mut().iter_mut().zip(input.data()) {
                    if *x <= 0.0 {
                        *g = 0.0;
                    }
                }
                Ok(grad_in)
            }
            Layer::Tanh => {
                let mut grad_in = grad_out.clone();
                for (g, y) in grad_in.data_mut().iter_mut().zip(output.data()) {
                    *g *= 1.0 - y * y;
                }
                Ok(grad_in)
            }
            Layer::Flatten => Ok(grad_out.clone().reshaped(input.shape().to_vec())?),
        }
    }
}
