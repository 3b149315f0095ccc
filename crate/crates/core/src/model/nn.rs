use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::logreg::softplus;
use super::{
    require_both_classes, sigmoid, Family, HyperParams, ModelArtifact, ModelError, ModelParams, NnParams,
    Standardization, TrainingMeta, FORMAT_VERSION,
};
use crate::dataset::Dataset;
use crate::prelude::*;

/// Fully connected layer; `weights` is row-major `outputs x inputs`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DenseLayer {
    pub inputs: usize,
    pub outputs: usize,
    pub weights: Vec<f64>,
    pub bias: Vec<f64>,
}

impl DenseLayer {
    fn glorot<R: Rng>(inputs: usize, outputs: usize, rng: &mut R) -> DenseLayer {
        let limit = libm::sqrt(6.0 / (inputs + outputs) as f64);
        DenseLayer {
            inputs,
            outputs,
            weights: (0..inputs * outputs).map(|_| rng.random_range(-limit..limit)).collect(),
            bias: vec![0.0; outputs],
        }
    }

    /// `x` is row-major `batch x inputs`; returns `batch x outputs`.
    fn forward(&self, x: &[f64]) -> Vec<f64> {
        let mut out = Vec::with_capacity(x.len() / self.inputs.max(1) * self.outputs);
        for row in x.chunks(self.inputs) {
            for (w, b) in self.weights.chunks(self.inputs).zip(&self.bias) {
                out.push(crate::linalg::dot(w, row) + b);
            }
        }
        out
    }

    fn param_count(&self) -> usize {
        self.weights.len() + self.bias.len()
    }
}

/// Batch normalization: trainable scale/shift plus running statistics used
/// at prediction time.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BatchNorm {
    pub gamma: Vec<f64>,
    pub beta: Vec<f64>,
    pub moving_mean: Vec<f64>,
    pub moving_var: Vec<f64>,
    pub momentum: f64,
    pub epsilon: f64,
}

impl BatchNorm {
    fn new(width: usize) -> BatchNorm {
        BatchNorm {
            gamma: vec![1.0; width],
            beta: vec![0.0; width],
            moving_mean: vec![0.0; width],
            moving_var: vec![1.0; width],
            momentum: 0.99,
            epsilon: 1e-3,
        }
    }

    fn width(&self) -> usize {
        self.gamma.len()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HiddenBlock {
    pub dense: DenseLayer,
    pub norm: BatchNorm,
}

/// `dense -> batch-norm -> ReLU` blocks followed by a single sigmoid unit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DenseNet {
    pub hidden: Vec<HiddenBlock>,
    pub output: DenseLayer,
}

struct BlockCache {
    input: Vec<f64>,
    xhat: Vec<f64>,
    inv_std: Vec<f64>,
    normed: Vec<f64>,
    mean: Vec<f64>,
    var: Vec<f64>,
}

struct ForwardPass {
    blocks: Vec<BlockCache>,
    last: Vec<f64>,
    logits: Vec<f64>,
}

impl DenseNet {
    /// Glorot-uniform weights, zero biases, unit batch-norm scale.
    pub fn new(input_dim: usize, hidden: &[usize], seed: u64) -> DenseNet {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut width = input_dim;
        let mut blocks = Vec::with_capacity(hidden.len());
        for &h in hidden {
            blocks.push(HiddenBlock {
                dense: DenseLayer::glorot(width, h, &mut rng),
                norm: BatchNorm::new(h),
            });
            width = h;
        }
        DenseNet {
            hidden: blocks,
            output: DenseLayer::glorot(width, 1, &mut rng),
        }
    }

    pub fn input_dim(&self) -> usize {
        self.hidden.first().map_or(self.output.inputs, |b| b.dense.inputs)
    }

    pub fn trainable_param_count(&self) -> usize {
        self.hidden
            .iter()
            .map(|b| b.dense.param_count() + 2 * b.norm.width())
            .sum::<usize>()
            + self.output.param_count()
    }

    /// Running means and variances of the batch-norm layers.
    pub fn non_trainable_param_count(&self) -> usize {
        self.hidden.iter().map(|b| 2 * b.norm.width()).sum()
    }

    /// Trainable parameters flattened block by block: weights, bias, gamma,
    /// beta; then output weights and bias.
    pub fn trainable_params(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.trainable_param_count());
        for b in &self.hidden {
            out.extend_from_slice(&b.dense.weights);
            out.extend_from_slice(&b.dense.bias);
            out.extend_from_slice(&b.norm.gamma);
            out.extend_from_slice(&b.norm.beta);
        }
        out.extend_from_slice(&self.output.weights);
        out.extend_from_slice(&self.output.bias);
        out
    }

    /// Inverse of [`DenseNet::trainable_params`].
    pub fn set_trainable_params(&mut self, params: &[f64]) {
        assert_eq!(params.len(), self.trainable_param_count(), "parameter vector length");
        let mut rest = params;
        let mut take = |dst: &mut [f64]| {
            let (head, tail) = rest.split_at(dst.len());
            dst.copy_from_slice(head);
            rest = tail;
        };
        for b in &mut self.hidden {
            take(&mut b.dense.weights);
            take(&mut b.dense.bias);
            take(&mut b.norm.gamma);
            take(&mut b.norm.beta);
        }
        take(&mut self.output.weights);
        take(&mut self.output.bias);
    }

    pub fn zero_output_layer(&mut self) {
        self.output.weights.iter_mut().for_each(|w| *w = 0.0);
        self.output.bias.iter_mut().for_each(|w| *w = 0.0);
    }

    /// Probability of botnet for one standardized row, using running
    /// batch-norm statistics.
    pub fn predict_proba(&self, x: &[f64]) -> f64 {
        let mut a = x.to_vec();
        for b in &self.hidden {
            let h = b.dense.forward(&a);
            let n = &b.norm;
            a = h
                .iter()
                .enumerate()
                .map(|(j, v)| {
                    let y = n.gamma[j] * (v - n.moving_mean[j]) / libm::sqrt(n.moving_var[j] + n.epsilon) + n.beta[j];
                    y.max(0.0)
                })
                .collect();
        }
        sigmoid(self.output.forward(&a)[0])
    }

    fn forward_train(&self, xs: &[f64]) -> ForwardPass {
        let batch = xs.len() / self.input_dim().max(1);
        let bf = batch as f64;
        let mut a = xs.to_vec();
        let mut blocks = Vec::with_capacity(self.hidden.len());
        for b in &self.hidden {
            let w = b.norm.width();
            let h = b.dense.forward(&a);
            let mut mean = vec![0.0; w];
            for row in h.chunks(w) {
                for (m, v) in mean.iter_mut().zip(row) {
                    *m += v;
                }
            }
            mean.iter_mut().for_each(|m| *m /= bf);
            let mut var = vec![0.0; w];
            for row in h.chunks(w) {
                for j in 0..w {
                    let c = row[j] - mean[j];
                    var[j] += c * c;
                }
            }
            var.iter_mut().for_each(|v| *v /= bf);
            let inv_std: Vec<f64> = var.iter().map(|v| 1.0 / libm::sqrt(v + b.norm.epsilon)).collect();
            let mut xhat = Vec::with_capacity(h.len());
            let mut normed = Vec::with_capacity(h.len());
            for row in h.chunks(w) {
                for j in 0..w {
                    let xh = (row[j] - mean[j]) * inv_std[j];
                    xhat.push(xh);
                    normed.push(b.norm.gamma[j] * xh + b.norm.beta[j]);
                }
            }
            let next: Vec<f64> = normed.iter().map(|v| v.max(0.0)).collect();
            blocks.push(BlockCache {
                input: core::mem::replace(&mut a, next),
                xhat,
                inv_std,
                normed,
                mean,
                var,
            });
        }
        let logits = self.output.forward(&a);
        ForwardPass {
            blocks,
            last: a,
            logits,
        }
    }

    /// Batch-norm outputs (pre-ReLU) of every hidden block in training mode.
    pub fn training_activations(&self, xs: &[f64]) -> Vec<Vec<f64>> {
        self.forward_train(xs).blocks.into_iter().map(|b| b.normed).collect()
    }

    /// Mean binary cross-entropy of a batch and its gradient with respect to
    /// [`DenseNet::trainable_params`], with batch statistics in the
    /// normalization layers. The running statistics are not touched.
    pub fn loss_and_gradient(&self, xs: &[f64], ys: &[u8]) -> (f64, Vec<f64>) {
        let (loss, grad, _) = self.backprop(xs, ys);
        (loss, grad)
    }

    fn backprop(&self, xs: &[f64], ys: &[u8]) -> (f64, Vec<f64>, ForwardPass) {
        let pass = self.forward_train(xs);
        let batch = ys.len();
        let bf = batch as f64;
        let loss = pass
            .logits
            .iter()
            .zip(ys)
            .map(|(&z, &y)| softplus(z) - f64::from(y) * z)
            .sum::<f64>()
            / bf;

        // Gradients are collected in reverse and flattened at the end.
        let mut parts: Vec<Vec<f64>> = Vec::new();
        let dz: Vec<f64> = pass
            .logits
            .iter()
            .zip(ys)
            .map(|(&z, &y)| (sigmoid(z) - f64::from(y)) / bf)
            .collect();
        let width = self.output.inputs;
        let mut dw = vec![0.0; width];
        let mut upstream = vec![0.0; batch * width];
        for (i, &g) in dz.iter().enumerate() {
            let a = &pass.last[i * width..(i + 1) * width];
            for j in 0..width {
                dw[j] += g * a[j];
                upstream[i * width + j] = g * self.output.weights[j];
            }
        }
        parts.push(vec![dz.iter().sum()]);
        parts.push(dw);

        for (b, cache) in self.hidden.iter().zip(&pass.blocks).rev() {
            let w = b.norm.width();
            let inputs = b.dense.inputs;
            // ReLU
            let dy: Vec<f64> = upstream
                .iter()
                .zip(&cache.normed)
                .map(|(g, v)| if *v > 0.0 { *g } else { 0.0 })
                .collect();
            let mut dgamma = vec![0.0; w];
            let mut dbeta = vec![0.0; w];
            for i in 0..batch {
                for j in 0..w {
                    dgamma[j] += dy[i * w + j] * cache.xhat[i * w + j];
                    dbeta[j] += dy[i * w + j];
                }
            }
            // dxhat = dy * gamma; dh = inv_std / B * (B dxhat - sum dxhat - xhat sum(dxhat xhat))
            let mut sum_dxhat = vec![0.0; w];
            let mut sum_dxhat_xhat = vec![0.0; w];
            for i in 0..batch {
                for j in 0..w {
                    let dxh = dy[i * w + j] * b.norm.gamma[j];
                    sum_dxhat[j] += dxh;
                    sum_dxhat_xhat[j] += dxh * cache.xhat[i * w + j];
                }
            }
            let mut dh = vec![0.0; batch * w];
            for i in 0..batch {
                for j in 0..w {
                    let dxh = dy[i * w + j] * b.norm.gamma[j];
                    dh[i * w + j] =
                        cache.inv_std[j] / bf * (bf * dxh - sum_dxhat[j] - cache.xhat[i * w + j] * sum_dxhat_xhat[j]);
                }
            }
            let mut dweights = vec![0.0; w * inputs];
            let mut dbias = vec![0.0; w];
            let mut dinput = vec![0.0; batch * inputs];
            for i in 0..batch {
                let a = &cache.input[i * inputs..(i + 1) * inputs];
                let da = &mut dinput[i * inputs..(i + 1) * inputs];
                for o in 0..w {
                    let g = dh[i * w + o];
                    if g == 0.0 {
                        continue;
                    }
                    dbias[o] += g;
                    let wrow = &b.dense.weights[o * inputs..(o + 1) * inputs];
                    let drow = &mut dweights[o * inputs..(o + 1) * inputs];
                    for k in 0..inputs {
                        drow[k] += g * a[k];
                        da[k] += g * wrow[k];
                    }
                }
            }
            parts.push(dbeta);
            parts.push(dgamma);
            parts.push(dbias);
            parts.push(dweights);
            upstream = dinput;
        }
        let grad: Vec<f64> = parts.into_iter().rev().flatten().collect();
        (loss, grad, pass)
    }

    pub fn validate(&self, n_features: usize) -> Result<(), ModelError> {
        let mut width = n_features;
        for b in &self.hidden {
            let dl = &b.dense;
            let n = &b.norm;
            if dl.inputs != width
                || dl.weights.len() != dl.inputs * dl.outputs
                || dl.bias.len() != dl.outputs
                || [&n.gamma, &n.beta, &n.moving_mean, &n.moving_var]
                    .iter()
                    .any(|v| v.len() != dl.outputs)
            {
                return Err(ModelError::Corrupt("dense network layer shapes".into()));
            }
            width = dl.outputs;
        }
        let o = &self.output;
        if o.inputs != width || o.outputs != 1 || o.weights.len() != width || o.bias.len() != 1 {
            return Err(ModelError::Corrupt("dense network output layer".into()));
        }
        Ok(())
    }
}

/// Offset between the initialization seed and the batch-order seed.
const SHUFFLE_STREAM: u64 = 0xA076_1D64_78BD_642F;

/// Mini-batch SGD with momentum (`v = m v - lr g; theta += v`) on the mean
/// binary cross-entropy of standardized inputs. Batch-norm running
/// statistics follow `s = momentum * s + (1 - momentum) * batch_stat`.
pub fn train_dense_nn(ds: &Dataset, p: &NnParams) -> Result<ModelArtifact, ModelError> {
    require_both_classes(ds)?;
    HyperParams::DenseNn(p.clone()).validate()?;
    let d = ds.n_features();
    let n = ds.n_rows();
    let std = Standardization::fit(ds);
    let z = std.transform(ds);
    let mut net = DenseNet::new(d, &p.hidden, p.seed);
    let mut velocity = vec![0.0; net.trainable_param_count()];
    let mut rng = ChaCha8Rng::seed_from_u64(p.seed ^ SHUFFLE_STREAM);
    let mut order: Vec<usize> = (0..n).collect();
    let mut history = Vec::with_capacity(p.epochs);
    let mut xs = Vec::with_capacity(p.batch_size * d);
    let mut ys = Vec::with_capacity(p.batch_size);

    for epoch in 0..p.epochs {
        order.shuffle(&mut rng);
        let mut epoch_loss = 0.0;
        for (batch, idx) in order.chunks(p.batch_size).enumerate() {
            xs.clear();
            ys.clear();
            for &i in idx {
                xs.extend_from_slice(&z[i * d..(i + 1) * d]);
                ys.push(ds.labels()[i]);
            }
            let (loss, grad, pass) = net.backprop(&xs, &ys);
            if !loss.is_finite() || grad.iter().any(|g| !g.is_finite()) {
                let single_class = ys.iter().all(|&y| y == ys[0]);
                return Err(ModelError::NonFinite {
                    epoch,
                    batch,
                    single_class,
                });
            }
            epoch_loss += loss * idx.len() as f64;
            let mut params = net.trainable_params();
            for ((theta, v), g) in params.iter_mut().zip(velocity.iter_mut()).zip(&grad) {
                *v = p.momentum * *v - p.learning_rate * g;
                *theta += *v;
            }
            net.set_trainable_params(&params);
            for (b, cache) in net.hidden.iter_mut().zip(&pass.blocks) {
                let m = b.norm.momentum;
                for j in 0..b.norm.width() {
                    b.norm.moving_mean[j] = m * b.norm.moving_mean[j] + (1.0 - m) * cache.mean[j];
                    b.norm.moving_var[j] = m * b.norm.moving_var[j] + (1.0 - m) * cache.var[j];
                }
            }
        }
        history.push(epoch_loss / n as f64);
    }

    Ok(ModelArtifact {
        format_version: FORMAT_VERSION,
        family: Family::DenseNn,
        hyperparams: HyperParams::DenseNn(p.clone()),
        feature_names: ds.feature_names().to_vec(),
        standardization: Some(std),
        parameters: ModelParams::Dense(net),
        training: TrainingMeta {
            seed: Some(p.seed),
            iterations: p.epochs,
            converged: true,
            loss_history: history,
            train_rows: n,
        },
    })
}
