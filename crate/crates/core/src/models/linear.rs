//! Logistic regression trained by mini-batch gradient descent on the mean
//! logistic loss plus an L2 penalty `l2/2 * |w|^2`.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{check_training_data, logistic_loss, sigmoid, Fitted, TrainConfig};
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct LrModel {
    pub weights: Vec<f64>,
    pub bias: f64,
}

impl LrModel {
    pub fn zeros(q: usize) -> Self {
        LrModel {
            weights: vec![0.0; q],
            bias: 0.0,
        }
    }

    pub fn input_dim(&self) -> usize {
        self.weights.len()
    }

    fn logit(&self, x: &[f64]) -> f64 {
        self.bias + self.weights.iter().zip(x).map(|(w, v)| w * v).sum::<f64>()
    }

    pub fn predict_proba(&self, x: &[f64]) -> f64 {
        sigmoid(self.logit(x))
    }

    /// Objective on the rows selected by `idx`.
    pub fn loss(&self, x: &[Vec<f64>], y: &[bool], idx: &[usize], l2: f64) -> f64 {
        let data: f64 = idx.iter().map(|&i| logistic_loss(self.logit(&x[i]), y[i])).sum();
        data / idx.len() as f64 + 0.5 * l2 * self.weights.iter().map(|w| w * w).sum::<f64>()
    }

    /// Analytic gradient of [`LrModel::loss`]: `(d/dw, d/db)`.
    pub fn gradient(&self, x: &[Vec<f64>], y: &[bool], idx: &[usize], l2: f64) -> (Vec<f64>, f64) {
        let mut gw = vec![0.0; self.weights.len()];
        let mut gb = 0.0;
        for &i in idx {
            let r = sigmoid(self.logit(&x[i])) - if y[i] { 1.0 } else { 0.0 };
            gb += r;
            gw.iter_mut().zip(&x[i]).for_each(|(g, v)| *g += r * v);
        }
        let n = idx.len() as f64;
        for (g, w) in gw.iter_mut().zip(&self.weights) {
            *g = *g / n + l2 * w;
        }
        (gw, gb / n)
    }
}

pub fn train_lr(x: &[Vec<f64>], y: &[bool], cfg: &TrainConfig) -> Result<Fitted<LrModel>> {
    let q = check_training_data(x, y, cfg)?;
    let mut model = LrModel::zeros(q);
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let all: Vec<usize> = (0..x.len()).collect();
    let mut order = all.clone();
    let mut vel_w = vec![0.0; q];
    let mut vel_b = 0.0;
    let mut history = vec![model.loss(x, y, &all, cfg.l2)];

    for epoch in 1..=cfg.epochs {
        order.shuffle(&mut rng);
        for batch in order.chunks(cfg.batch_size) {
            let (gw, gb) = model.gradient(x, y, batch, cfg.l2);
            for ((w, v), g) in model.weights.iter_mut().zip(&mut vel_w).zip(&gw) {
                *v = cfg.momentum * *v - cfg.learning_rate * g;
                *w += *v;
            }
            vel_b = cfg.momentum * vel_b - cfg.learning_rate * gb;
            model.bias += vel_b;
        }
        let loss = model.loss(x, y, &all, cfg.l2);
        if !loss.is_finite() {
            return Err(Error::Train(format!("logistic regression loss diverged at epoch {epoch}")));
        }
        history.push(loss);
    }
    Ok(Fitted {
        model,
        loss_history: history,
    })
}
