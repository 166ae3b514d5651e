//! The OilNet40 network.
//!
//! Tensors are NCHW. The flatten step is channel-major (`c, y, x`), which is
//! also the row order of the first dense weight matrix in checkpoints.

use leakspot_dataset::rng::sample_rng;
use leakspot_dataset::ClassLabel;
use leakspot_tensor::{
    batchnorm_backward, batchnorm_forward, conv2d_backward, conv2d_forward, dense_backward, dense_forward, dropout,
    dropout_backward, maxpool2d, maxpool2d_backward, relu, relu_backward, sigmoid_scalar, BatchNormCache, Conv2dCtx, Mode,
    Padding, Parameter, Tensor,
};
use rand::Rng;

use crate::error::{OilnetError, Result};
use crate::spec::Oilnet40Spec;

/// Weights and bias of a convolution or dense layer.
#[derive(Debug, Clone, PartialEq)]
pub struct Affine {
    pub weights: Parameter,
    pub bias: Parameter,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BatchNorm {
    pub gamma: Parameter,
    pub beta: Parameter,
    pub running_mean: Tensor,
    pub running_var: Tensor,
}

impl BatchNorm {
    fn new(channels: usize) -> Self {
        Self {
            gamma: Parameter::new(Tensor::full(&[channels], 1.0)),
            beta: Parameter::new(Tensor::zeros(&[channels])),
            running_mean: Tensor::zeros(&[channels]),
            running_var: Tensor::full(&[channels], 1.0),
        }
    }
}

fn uniform_tensor(shape: &[usize], bound: f32, seed: u64, stream: u64) -> Tensor {
    let mut rng = sample_rng(seed, stream);
    let n: usize = shape.iter().product();
    let data = (0..n).map(|_| rng.gen_range(-bound..=bound)).collect();
    Tensor::new(shape.to_vec(), data).expect("shape and data agree")
}

#[derive(Debug, Clone, PartialEq)]
pub struct Oilnet40 {
    spec: Oilnet40Spec,
    pub convs: [Affine; 3],
    pub conv_norms: [BatchNorm; 3],
    pub hidden: [Affine; 2],
    pub hidden_norms: [BatchNorm; 2],
    pub output: Affine,
}

/// Batch-norm statistics produced by a training-mode forward pass, to be
/// committed once the step succeeds.
#[derive(Debug, Clone)]
pub struct RunningStats(Vec<(Tensor, Tensor)>);

struct BlockCache {
    input: Tensor,
    norm: BatchNormCache,
    activation_in: Tensor,
    pool_in_shape: Vec<usize>,
    argmax: Vec<usize>,
}

/// Intermediate values of one forward pass, consumed by the backward pass.
pub struct ForwardCache {
    blocks: Vec<BlockCache>,
    pooled_shape: Vec<usize>,
    drop_masks: Vec<Vec<f32>>,
    hidden_in: Vec<Tensor>,
    hidden_norm: Vec<BatchNormCache>,
    hidden_activation_in: Vec<Tensor>,
    output_in: Tensor,
}

impl ForwardCache {
    /// Every ReLU input sign and pooling choice: two passes with equal
    /// signatures lie in the same linear region of the network.
    pub fn activation_signature(&self) -> Vec<u64> {
        let mut sig = Vec::new();
        let signs = |t: &Tensor, sig: &mut Vec<u64>| sig.extend(t.data().iter().map(|&v| (v > 0.0) as u64));
        for b in &self.blocks {
            signs(&b.activation_in, &mut sig);
            sig.extend(b.argmax.iter().map(|&a| a as u64));
        }
        for t in &self.hidden_activation_in {
            signs(t, &mut sig);
        }
        sig
    }
}

fn norm_forward(bn: &BatchNorm, x: &Tensor, mode: Mode, spec: &Oilnet40Spec) -> Result<(Tensor, BatchNormCache, (Tensor, Tensor))> {
    let (mut mean, mut var) = (bn.running_mean.clone(), bn.running_var.clone());
    let (y, cache) = batchnorm_forward(x, &bn.gamma.value, &bn.beta.value, &mut mean, &mut var, mode, spec.bn_momentum, spec.bn_epsilon)?;
    Ok((y, cache, (mean, var)))
}

impl Oilnet40 {
    /// Builds the network with weights drawn from `seed`. Convolution and
    /// hidden dense weights are uniform in `±sqrt(6 / fan_in)`; the output
    /// unit uses `±sqrt(1 / fan_in)` so the untrained logit stays near zero.
    /// Biases start at zero, batch norm at the identity.
    pub fn build(spec: &Oilnet40Spec, seed: u64) -> Result<Self> {
        spec.validate()?;
        let mut stream = 0u64;
        let mut next = || {
            stream += 1;
            stream
        };
        let mut cin = spec.input_channels;
        let convs = spec.conv_filters.map(|f| {
            let fan_in = cin * 9;
            let w = uniform_tensor(&[f, cin, 3, 3], (6.0 / fan_in as f32).sqrt(), seed, next());
            cin = f;
            Affine { weights: Parameter::new(w), bias: Parameter::new(Tensor::zeros(&[f])) }
        });
        let mut width = spec.flatten_width();
        let hidden = spec.dense_units.map(|u| {
            let w = uniform_tensor(&[width, u], (6.0 / width as f32).sqrt(), seed, next());
            width = u;
            Affine { weights: Parameter::new(w), bias: Parameter::new(Tensor::zeros(&[u])) }
        });
        let output = Affine {
            weights: Parameter::new(uniform_tensor(&[width, 1], (1.0 / width as f32).sqrt(), seed, next())),
            bias: Parameter::new(Tensor::zeros(&[1])),
        };
        Ok(Self {
            spec: spec.clone(),
            convs,
            conv_norms: spec.conv_filters.map(BatchNorm::new),
            hidden,
            hidden_norms: spec.dense_units.map(BatchNorm::new),
            output,
        })
    }

    pub fn spec(&self) -> &Oilnet40Spec {
        &self.spec
    }

    /// Trainable parameters in canonical order with their names.
    pub fn named_parameters(&self) -> Vec<(String, &Parameter)> {
        let mut out = Vec::new();
        for i in 0..3 {
            out.push((format!("conv{}.weight", i + 1), &self.convs[i].weights));
            out.push((format!("conv{}.bias", i + 1), &self.convs[i].bias));
            out.push((format!("conv{}.bn.gamma", i + 1), &self.conv_norms[i].gamma));
            out.push((format!("conv{}.bn.beta", i + 1), &self.conv_norms[i].beta));
        }
        for i in 0..2 {
            out.push((format!("dense{}.weight", i + 1), &self.hidden[i].weights));
            out.push((format!("dense{}.bias", i + 1), &self.hidden[i].bias));
            out.push((format!("dense{}.bn.gamma", i + 1), &self.hidden_norms[i].gamma));
            out.push((format!("dense{}.bn.beta", i + 1), &self.hidden_norms[i].beta));
        }
        out.push(("output.weight".into(), &self.output.weights));
        out.push(("output.bias".into(), &self.output.bias));
        out
    }

    /// Mutable trainable parameters, same order as [`Self::named_parameters`].
    pub fn parameters_mut(&mut self) -> Vec<&mut Parameter> {
        let mut out = Vec::new();
        for (c, n) in self.convs.iter_mut().zip(self.conv_norms.iter_mut()) {
            out.extend([&mut c.weights, &mut c.bias, &mut n.gamma, &mut n.beta]);
        }
        for (d, n) in self.hidden.iter_mut().zip(self.hidden_norms.iter_mut()) {
            out.extend([&mut d.weights, &mut d.bias, &mut n.gamma, &mut n.beta]);
        }
        out.extend([&mut self.output.weights, &mut self.output.bias]);
        out
    }

    /// Running statistics in canonical order with their names.
    pub fn named_buffers(&self) -> Vec<(String, &Tensor)> {
        let mut out = Vec::new();
        for (i, n) in self.conv_norms.iter().enumerate() {
            out.push((format!("conv{}.bn.running_mean", i + 1), &n.running_mean));
            out.push((format!("conv{}.bn.running_var", i + 1), &n.running_var));
        }
        for (i, n) in self.hidden_norms.iter().enumerate() {
            out.push((format!("dense{}.bn.running_mean", i + 1), &n.running_mean));
            out.push((format!("dense{}.bn.running_var", i + 1), &n.running_var));
        }
        out
    }

    pub fn buffers_mut(&mut self) -> Vec<&mut Tensor> {
        let mut out = Vec::new();
        for n in self.conv_norms.iter_mut().chain(self.hidden_norms.iter_mut()) {
            out.extend([&mut n.running_mean, &mut n.running_var]);
        }
        out
    }

    pub fn trainable_count(&self) -> usize {
        self.named_parameters().iter().map(|(_, p)| p.len()).sum()
    }

    pub fn non_trainable_count(&self) -> usize {
        self.named_buffers().iter().map(|(_, t)| t.len()).sum()
    }

    pub fn zero_grad(&mut self) {
        self.parameters_mut().into_iter().for_each(Parameter::zero_grad);
    }

    fn check_input(&self, x: &Tensor) -> Result<usize> {
        let (n, c, h, w) = x.dims4()?;
        let s = &self.spec;
        if c != s.input_channels || h != s.input_size || w != s.input_size {
            return Err(OilnetError::Config(format!(
                "input {:?} does not match the model input [N, {}, {}, {}]",
                x.shape(),
                s.input_channels,
                s.input_size,
                s.input_size
            )));
        }
        Ok(n)
    }

    /// Output of convolution block `index` (0-based): conv, batch norm, ReLU
    /// and pooling, in inference mode.
    pub fn block_output(&self, x: &Tensor, index: usize) -> Result<Tensor> {
        self.check_input(x)?;
        let mut h = x.clone();
        for i in 0..=index.min(2) {
            let z = conv2d_forward(&h, &self.convs[i].weights.value, &self.convs[i].bias.value, Padding::Same)?;
            let (y, _, _) = norm_forward(&self.conv_norms[i], &z, Mode::Infer, &self.spec)?;
            h = maxpool2d(&relu(&y))?.output;
        }
        Ok(h)
    }

    /// Full forward pass returning logits `[N, 1]`, the cache for
    /// [`Self::backward`] and, in training mode, updated running statistics.
    pub fn forward<R: Rng + ?Sized>(&self, x: &Tensor, mode: Mode, rng: &mut R) -> Result<(Tensor, ForwardCache, RunningStats)> {
        let n = self.check_input(x)?;
        let mut stats = Vec::with_capacity(5);
        let mut blocks = Vec::with_capacity(3);
        let mut h = x.clone();
        for i in 0..3 {
            let z = conv2d_forward(&h, &self.convs[i].weights.value, &self.convs[i].bias.value, Padding::Same)?;
            let (y, norm, st) = norm_forward(&self.conv_norms[i], &z, mode, &self.spec)?;
            stats.push(st);
            let pool = maxpool2d(&relu(&y))?;
            blocks.push(BlockCache { input: h, norm, activation_in: y, pool_in_shape: z.shape().to_vec(), argmax: pool.argmax });
            h = pool.output;
        }
        let pooled_shape = h.shape().to_vec();
        let mut h = h.reshape(&[n, self.spec.flatten_width()])?;

        let mut drop_masks = Vec::with_capacity(2);
        let mut hidden_in = Vec::with_capacity(2);
        let mut hidden_activation_in = Vec::with_capacity(2);
        let mut hidden_norm = Vec::with_capacity(2);
        for i in 0..2 {
            let d = dropout(&h, self.spec.dropout_rate, mode, rng)?;
            drop_masks.push(d.mask);
            let z = dense_forward(&d.output, &self.hidden[i].weights.value, &self.hidden[i].bias.value)?;
            hidden_in.push(d.output);
            let (y, norm, st) = norm_forward(&self.hidden_norms[i], &z, mode, &self.spec)?;
            stats.push(st);
            hidden_norm.push(norm);
            h = relu(&y);
            hidden_activation_in.push(y);
        }
        let logits = dense_forward(&h, &self.output.weights.value, &self.output.bias.value)?;
        let cache = ForwardCache { blocks, pooled_shape, drop_masks, hidden_in, hidden_norm, hidden_activation_in, output_in: h };
        Ok((logits, cache, RunningStats(stats)))
    }

    /// Adds the gradients of `sum(upstream · logits)` to every parameter and
    /// returns the gradient with respect to the input.
    pub fn backward(&mut self, cache: &ForwardCache, upstream: &Tensor) -> Result<Tensor> {
        let g = dense_backward(&cache.output_in, &self.output.weights.value, upstream)?;
        self.output.weights.accumulate(&g.weights)?;
        self.output.bias.accumulate(&g.bias)?;
        let mut d = g.input;
        for i in (0..2).rev() {
            d = relu_backward(&cache.hidden_activation_in[i], &d)?;
            let bn = batchnorm_backward(&cache.hidden_norm[i], &d)?;
            self.hidden_norms[i].gamma.accumulate(&bn.gamma)?;
            self.hidden_norms[i].beta.accumulate(&bn.beta)?;
            let g = dense_backward(&cache.hidden_in[i], &self.hidden[i].weights.value, &bn.input)?;
            self.hidden[i].weights.accumulate(&g.weights)?;
            self.hidden[i].bias.accumulate(&g.bias)?;
            d = dropout_backward(&cache.drop_masks[i], &g.input)?;
        }
        let mut d = d.reshape(&cache.pooled_shape)?;
        for i in (0..3).rev() {
            let b = &cache.blocks[i];
            d = maxpool2d_backward(&b.pool_in_shape, &b.argmax, &d)?;
            d = relu_backward(&b.activation_in, &d)?;
            let bn = batchnorm_backward(&b.norm, &d)?;
            self.conv_norms[i].gamma.accumulate(&bn.gamma)?;
            self.conv_norms[i].beta.accumulate(&bn.beta)?;
            let ctx = Conv2dCtx { input: &b.input, weights: &self.convs[i].weights.value, padding: Padding::Same };
            let g = conv2d_backward(&ctx, &bn.input)?;
            self.convs[i].weights.accumulate(&g.weights)?;
            self.convs[i].bias.accumulate(&g.bias)?;
            d = g.input;
        }
        Ok(d)
    }

    pub fn commit_stats(&mut self, stats: RunningStats) {
        for (n, (mean, var)) in self.conv_norms.iter_mut().chain(self.hidden_norms.iter_mut()).zip(stats.0) {
            n.running_mean = mean;
            n.running_var = var;
        }
    }

    /// Inference-mode logits `[N, 1]`.
    pub fn logits(&self, x: &Tensor) -> Result<Tensor> {
        // Inference draws no random numbers; any generator will do.
        let mut rng = sample_rng(0, 0);
        Ok(self.forward(x, Mode::Infer, &mut rng)?.0)
    }

    /// Probability of Anomaly and the thresholded label for every sample.
    pub fn predict(&self, x: &Tensor) -> Result<Vec<(f32, ClassLabel)>> {
        let logits = self.logits(x)?;
        Ok(logits.data().iter().map(|&z| {
            let p = sigmoid_scalar(z);
            (p, label_for(p))
        }).collect())
    }
}

/// Anomaly only for probabilities strictly above one half.
pub fn label_for(probability: f32) -> ClassLabel {
    if probability > 0.5 {
        ClassLabel::Anomaly
    } else {
        ClassLabel::Normal
    }
}
