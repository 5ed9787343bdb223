//! Binary classifiers over dense (PCA-projected) feature rows.
//!
//! All three models output the probability of the positive (malicious) class;
//! a sample is labeled positive when that probability is >= 0.5.

mod forest;
mod linear;
mod mlp;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

pub use forest::{train_rf, DecisionTree, RfModel, TreeNode};
pub use linear::{train_lr, LrModel};
pub use mlp::{hidden_widths, train_mlp, DenseLayer, MlpGradients, MlpModel, HIDDEN_LAYERS};

/// Decision threshold on the positive-class probability (inclusive).
pub const DECISION_THRESHOLD: f64 = 0.5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelKind {
    Lr,
    Rf,
    Mlp,
}

impl ModelKind {
    pub const ALL: [ModelKind; 3] = [ModelKind::Lr, ModelKind::Rf, ModelKind::Mlp];

    pub fn as_str(self) -> &'static str {
        match self {
            ModelKind::Lr => "lr",
            ModelKind::Rf => "rf",
            ModelKind::Mlp => "mlp",
        }
    }
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ModelKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "lr" => Ok(ModelKind::Lr),
            "rf" => Ok(ModelKind::Rf),
            "mlp" | "dnn" => Ok(ModelKind::Mlp),
            _ => Err(Error::config("model", format!("expected lr|rf|mlp, got {s:?}"))),
        }
    }
}

/// Optimisation and ensemble hyperparameters shared by the three trainers.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub epochs: usize,
    pub batch_size: usize,
    pub l2: f64,
    /// Classical momentum coefficient; 0 gives plain mini-batch gradient descent.
    pub momentum: f64,
    pub seed: u64,
    pub n_trees: usize,
    pub max_depth: usize,
    /// Fraction of features each tree may use; `None` means sqrt(q)/q.
    pub feature_subsample: Option<f64>,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            learning_rate: 0.05,
            epochs: 50,
            batch_size: 64,
            l2: 1e-4,
            momentum: 0.0,
            seed: 0,
            n_trees: 100,
            max_depth: 12,
            feature_subsample: None,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        let positive = |name: &str, ok: bool| {
            if ok {
                Ok(())
            } else {
                Err(Error::config(name, "must be positive"))
            }
        };
        positive("learning_rate", self.learning_rate > 0.0 && self.learning_rate.is_finite())?;
        positive("epochs", self.epochs > 0)?;
        positive("batch_size", self.batch_size > 0)?;
        positive("n_trees", self.n_trees > 0)?;
        positive("max_depth", self.max_depth > 0)?;
        if !(self.l2 >= 0.0 && self.l2.is_finite()) {
            return Err(Error::config("l2", "must be non-negative"));
        }
        if !(0.0..1.0).contains(&self.momentum) {
            return Err(Error::config("momentum", "must lie in [0, 1)"));
        }
        if let Some(f) = self.feature_subsample {
            if !(f > 0.0 && f <= 1.0) {
                return Err(Error::config("feature_subsample", "must lie in (0, 1]"));
            }
        }
        Ok(())
    }
}

/// A trained model plus the full-data training loss before the first update
/// (index 0) and after every epoch.
#[derive(Debug, Clone)]
pub struct Fitted<M> {
    pub model: M,
    pub loss_history: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum ClassifierModel {
    Lr(LrModel),
    Rf(RfModel),
    Mlp(MlpModel),
}

impl ClassifierModel {
    pub fn kind(&self) -> ModelKind {
        match self {
            ClassifierModel::Lr(_) => ModelKind::Lr,
            ClassifierModel::Rf(_) => ModelKind::Rf,
            ClassifierModel::Mlp(_) => ModelKind::Mlp,
        }
    }

    pub fn input_dim(&self) -> usize {
        match self {
            ClassifierModel::Lr(m) => m.input_dim(),
            ClassifierModel::Rf(m) => m.input_dim(),
            ClassifierModel::Mlp(m) => m.input_dim(),
        }
    }

    pub fn predict_proba(&self, x: &[f64]) -> Result<f64> {
        if x.len() != self.input_dim() {
            return Err(Error::Contract(format!(
                "expected {} features, got {}",
                self.input_dim(),
                x.len()
            )));
        }
        Ok(match self {
            ClassifierModel::Lr(m) => m.predict_proba(x),
            ClassifierModel::Rf(m) => m.predict_proba(x),
            ClassifierModel::Mlp(m) => m.predict_proba(x),
        })
    }

    pub fn predict(&self, x: &[f64]) -> Result<bool> {
        Ok(self.predict_proba(x)? >= DECISION_THRESHOLD)
    }
}

pub fn train(kind: ModelKind, x: &[Vec<f64>], y: &[bool], cfg: &TrainConfig) -> Result<ClassifierModel> {
    Ok(match kind {
        ModelKind::Lr => ClassifierModel::Lr(train_lr(x, y, cfg)?.model),
        ModelKind::Rf => ClassifierModel::Rf(train_rf(x, y, cfg)?),
        ModelKind::Mlp => ClassifierModel::Mlp(train_mlp(x, y, cfg)?.model),
    })
}

/// Shared preconditions: n >= 2, both classes present, rectangular finite input.
/// Returns the feature count.
fn check_training_data(x: &[Vec<f64>], y: &[bool], cfg: &TrainConfig) -> Result<usize> {
    cfg.validate()?;
    if x.len() != y.len() {
        return Err(Error::Contract(format!("{} rows but {} labels", x.len(), y.len())));
    }
    if x.len() < 2 {
        return Err(Error::Train(format!("need at least 2 samples, got {}", x.len())));
    }
    if y.iter().all(|&v| v) || y.iter().all(|&v| !v) {
        return Err(Error::Train("training labels contain a single class".into()));
    }
    let q = x[0].len();
    if q == 0 {
        return Err(Error::Train("zero-dimensional features".into()));
    }
    if let Some(i) = x.iter().position(|r| r.len() != q) {
        return Err(Error::Contract(format!("row {i} has {} features, expected {q}", x[i].len())));
    }
    if x.iter().flatten().any(|v| !v.is_finite()) {
        return Err(Error::Train("non-finite feature value".into()));
    }
    Ok(q)
}

/// Numerically stable `log(1 + e^z)`.
#[inline]
pub(crate) fn softplus(z: f64) -> f64 {
    if z > 0.0 {
        z + (-z).exp().ln_1p()
    } else {
        z.exp().ln_1p()
    }
}

#[inline]
pub(crate) fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// Binary cross-entropy on the logit: `-log sigmoid(z)` for positives, `-log(1 - sigmoid(z))` otherwise.
#[inline]
pub(crate) fn logistic_loss(z: f64, positive: bool) -> f64 {
    if positive {
        softplus(-z)
    } else {
        softplus(z)
    }
}
