//! Fully connected network: five ReLU hidden layers tapering from the input
//! width, one sigmoid output unit, trained on binary cross-entropy.

use faer::linalg::matmul::matmul;
use faer::{Accum, Mat, MatMut, MatRef, Par};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{check_training_data, logistic_loss, sigmoid, Fitted, TrainConfig};
use crate::{Error, Result};

pub const HIDDEN_LAYERS: usize = 5;

/// `max(8, round(q / 2^k))` for k = 1..=5.
pub fn hidden_widths(q: usize) -> [usize; HIDDEN_LAYERS] {
    let mut w = [0; HIDDEN_LAYERS];
    for (k, slot) in w.iter_mut().enumerate() {
        *slot = ((q as f64 * 0.5f64.powi(k as i32 + 1)).round() as usize).max(8);
    }
    w
}

/// Affine map `out = W x + b` with `W` stored row-major (`out_dim x in_dim`).
#[derive(Debug, Clone, PartialEq)]
pub struct DenseLayer {
    pub in_dim: usize,
    pub out_dim: usize,
    pub weights: Vec<f64>,
    pub bias: Vec<f64>,
}

impl DenseLayer {
    pub fn zeros(in_dim: usize, out_dim: usize) -> Self {
        DenseLayer {
            in_dim,
            out_dim,
            weights: vec![0.0; in_dim * out_dim],
            bias: vec![0.0; out_dim],
        }
    }

    fn w(&self) -> MatRef<'_, f64> {
        MatRef::from_row_major_slice(&self.weights, self.out_dim, self.in_dim)
    }

    fn apply(&self, x: &[f64]) -> Vec<f64> {
        self.weights
            .chunks_exact(self.in_dim)
            .zip(&self.bias)
            .map(|(row, b)| b + row.iter().zip(x).map(|(w, v)| w * v).sum::<f64>())
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MlpModel {
    pub layers: Vec<DenseLayer>,
}

/// Per-layer gradients, same shapes as the model.
#[derive(Debug, Clone)]
pub struct MlpGradients {
    pub weights: Vec<Vec<f64>>,
    pub biases: Vec<Vec<f64>>,
}

impl MlpModel {
    fn dims(q: usize) -> Vec<usize> {
        let mut d = vec![q];
        d.extend(hidden_widths(q));
        d.push(1);
        d
    }

    pub fn zeros(q: usize) -> Self {
        let d = Self::dims(q);
        MlpModel {
            layers: d.windows(2).map(|p| DenseLayer::zeros(p[0], p[1])).collect(),
        }
    }

    /// He-style uniform initialisation: weights in `±sqrt(6 / fan_in)`, zero biases.
    pub fn init(q: usize, rng: &mut impl Rng) -> Self {
        let mut m = Self::zeros(q);
        for layer in &mut m.layers {
            let limit = (6.0 / layer.in_dim as f64).sqrt();
            layer.weights.iter_mut().for_each(|w| *w = rng.random_range(-limit..limit));
        }
        m
    }

    pub fn input_dim(&self) -> usize {
        self.layers[0].in_dim
    }

    pub fn predict_proba(&self, x: &[f64]) -> f64 {
        let last = self.layers.len() - 1;
        let mut a = x.to_vec();
        for (l, layer) in self.layers.iter().enumerate() {
            a = layer.apply(&a);
            if l < last {
                a.iter_mut().for_each(|v| *v = v.max(0.0));
            }
        }
        sigmoid(a[0])
    }

    /// Layer dimensions chain from the input to a single output.
    pub fn validate(&self) -> Result<()> {
        if self.layers.len() != HIDDEN_LAYERS + 1 {
            return Err(Error::Model(format!("expected {} layers, got {}", HIDDEN_LAYERS + 1, self.layers.len())));
        }
        for (i, l) in self.layers.iter().enumerate() {
            if l.weights.len() != l.in_dim * l.out_dim || l.bias.len() != l.out_dim || l.in_dim == 0 {
                return Err(Error::Model(format!("layer {i} has inconsistent shape")));
            }
            if i > 0 && self.layers[i - 1].out_dim != l.in_dim {
                return Err(Error::Model(format!("layer {i} does not chain with layer {}", i - 1)));
            }
            if l.weights.iter().chain(&l.bias).any(|v| !v.is_finite()) {
                return Err(Error::Model(format!("layer {i} has non-finite parameters")));
            }
        }
        if self.layers[HIDDEN_LAYERS].out_dim != 1 {
            return Err(Error::Model("output layer must have width 1".into()));
        }
        Ok(())
    }

    fn l2_penalty(&self, l2: f64) -> f64 {
        let sq: f64 = self.layers.iter().flat_map(|l| &l.weights).map(|w| w * w).sum();
        0.5 * l2 * sq
    }

    /// Activations for a batch: entry 0 is the input, the hidden entries are
    /// post-ReLU, the last is the output logit column.
    fn forward(&self, input: Mat<f64>) -> Vec<Mat<f64>> {
        let last = self.layers.len() - 1;
        let mut acts = vec![input];
        for (l, layer) in self.layers.iter().enumerate() {
            let prev = acts.last().expect("input present");
            let mut z = Mat::<f64>::zeros(prev.nrows(), layer.out_dim);
            matmul(z.as_mut(), Accum::Replace, prev.as_ref(), layer.w().transpose(), 1.0, Par::Seq);
            for j in 0..layer.out_dim {
                let b = layer.bias[j];
                for v in z.col_mut(j).iter_mut() {
                    *v += b;
                    if l < last && *v < 0.0 {
                        *v = 0.0;
                    }
                }
            }
            acts.push(z);
        }
        acts
    }

    fn gather(x: &[Vec<f64>], idx: &[usize]) -> Mat<f64> {
        Mat::from_fn(idx.len(), x[idx[0]].len(), |i, j| x[idx[i]][j])
    }

    /// Mean cross-entropy on the rows in `idx` plus `l2/2` times the squared weight norm.
    pub fn loss(&self, x: &[Vec<f64>], y: &[bool], idx: &[usize], l2: f64) -> f64 {
        let mut data = 0.0;
        for chunk in idx.chunks(1024) {
            let acts = self.forward(Self::gather(x, chunk));
            let z = acts.last().expect("output present");
            data += chunk.iter().enumerate().map(|(r, &i)| logistic_loss(z[(r, 0)], y[i])).sum::<f64>();
        }
        data / idx.len() as f64 + self.l2_penalty(l2)
    }

    /// Loss and backpropagated gradient on the rows in `idx`.
    pub fn gradient(&self, x: &[Vec<f64>], y: &[bool], idx: &[usize], l2: f64) -> (f64, MlpGradients) {
        let b = idx.len();
        let acts = self.forward(Self::gather(x, idx));
        let out = acts.last().expect("output present");
        let mut loss = 0.0;
        let mut delta = Mat::<f64>::zeros(b, 1);
        for (r, &i) in idx.iter().enumerate() {
            let z = out[(r, 0)];
            loss += logistic_loss(z, y[i]);
            delta[(r, 0)] = (sigmoid(z) - if y[i] { 1.0 } else { 0.0 }) / b as f64;
        }
        loss = loss / b as f64 + self.l2_penalty(l2);

        let n_layers = self.layers.len();
        let mut gw = vec![Vec::new(); n_layers];
        let mut gb = vec![Vec::new(); n_layers];
        for l in (0..n_layers).rev() {
            let layer = &self.layers[l];
            let mut w = layer.weights.iter().map(|v| l2 * v).collect::<Vec<_>>();
            let view = MatMut::from_row_major_slice_mut(&mut w, layer.out_dim, layer.in_dim);
            matmul(view, Accum::Add, delta.transpose(), acts[l].as_ref(), 1.0, Par::Seq);
            gw[l] = w;
            gb[l] = (0..layer.out_dim).map(|j| delta.col(j).iter().sum()).collect();
            if l > 0 {
                let mut next = Mat::<f64>::zeros(b, layer.in_dim);
                matmul(next.as_mut(), Accum::Replace, delta.as_ref(), layer.w(), 1.0, Par::Seq);
                let a = &acts[l];
                for j in 0..layer.in_dim {
                    for r in 0..b {
                        if a[(r, j)] <= 0.0 {
                            next[(r, j)] = 0.0;
                        }
                    }
                }
                delta = next;
            }
        }
        (loss, MlpGradients { weights: gw, biases: gb })
    }
}

pub fn train_mlp(x: &[Vec<f64>], y: &[bool], cfg: &TrainConfig) -> Result<Fitted<MlpModel>> {
    let q = check_training_data(x, y, cfg)?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut model = MlpModel::init(q, &mut rng);
    let all: Vec<usize> = (0..x.len()).collect();
    let mut order = all.clone();
    let mut vel = MlpModel::zeros(q);
    let initial = model.loss(x, y, &all, cfg.l2);
    if !initial.is_finite() {
        return Err(Error::Train("non-finite loss at epoch 0".into()));
    }
    let mut history = vec![initial];

    for epoch in 1..=cfg.epochs {
        order.shuffle(&mut rng);
        for batch in order.chunks(cfg.batch_size) {
            let (_, g) = model.gradient(x, y, batch, cfg.l2);
            for (l, (layer, v)) in model.layers.iter_mut().zip(&mut vel.layers).enumerate() {
                step(&mut layer.weights, &mut v.weights, &g.weights[l], cfg);
                step(&mut layer.bias, &mut v.bias, &g.biases[l], cfg);
            }
        }
        let loss = model.loss(x, y, &all, cfg.l2);
        if !loss.is_finite() {
            return Err(Error::Train(format!("non-finite loss at epoch {epoch}")));
        }
        history.push(loss);
    }
    Ok(Fitted {
        model,
        loss_history: history,
    })
}

fn step(params: &mut [f64], vel: &mut [f64], grad: &[f64], cfg: &TrainConfig) {
    for ((p, v), g) in params.iter_mut().zip(vel).zip(grad) {
        *v = cfg.momentum * *v - cfg.learning_rate * g;
        *p += *v;
    }
}
