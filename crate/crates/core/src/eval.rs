//! Stratified k-fold cross-validation and the four detection metrics, with
//! Malicious as the positive class.

use std::fmt::Write as _;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::corpus::{Command, Label};
use crate::featurize::{CorpusPolicy, Mode};
use crate::models::ModelKind;
use crate::pipeline::{Pipeline, PipelineConfig, Unit};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct Confusion {
    pub tp: u64,
    pub tn: u64,
    pub fp: u64,
    #[serde(rename = "fn")]
    pub fn_: u64,
}

impl Confusion {
    pub fn total(&self) -> u64 {
        self.tp + self.tn + self.fp + self.fn_
    }

    pub fn record(&mut self, actual: bool, predicted: bool) {
        match (actual, predicted) {
            (true, true) => self.tp += 1,
            (false, false) => self.tn += 1,
            (false, true) => self.fp += 1,
            (true, false) => self.fn_ += 1,
        }
    }
}

/// Counts outcomes with `true` meaning malicious.
pub fn confusion(y_true: &[bool], y_pred: &[bool]) -> Result<Confusion> {
    if y_true.len() != y_pred.len() {
        return Err(Error::Contract(format!("{} labels but {} predictions", y_true.len(), y_pred.len())));
    }
    if y_true.is_empty() {
        return Err(Error::Contract("confusion of zero samples".into()));
    }
    let mut c = Confusion::default();
    for (&t, &p) in y_true.iter().zip(y_pred) {
        c.record(t, p);
    }
    Ok(c)
}

/// Metric name as it appears in reports.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MetricName {
    Accuracy,
    F1,
    Fnr,
    Fpr,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct Metrics {
    pub accuracy: f64,
    pub f1: f64,
    pub fnr: f64,
    pub fpr: f64,
    /// Metrics whose denominator was zero and were reported as 0.
    pub degenerate: Vec<MetricName>,
}

pub fn metrics(c: &Confusion) -> Metrics {
    let mut degenerate = Vec::new();
    let mut ratio = |name, num: u64, den: u64| {
        if den == 0 {
            degenerate.push(name);
            0.0
        } else {
            num as f64 / den as f64
        }
    };
    let accuracy = ratio(MetricName::Accuracy, c.tp + c.tn, c.total());
    let f1 = ratio(MetricName::F1, 2 * c.tp, 2 * c.tp + c.fp + c.fn_);
    let fnr = ratio(MetricName::Fnr, c.fn_, c.tp + c.fn_);
    let fpr = ratio(MetricName::Fpr, c.fp, c.fp + c.tn);
    Metrics {
        accuracy,
        f1,
        fnr,
        fpr,
        degenerate,
    }
}

/// Arithmetic mean of each metric; `degenerate` lists metrics flagged in any input.
pub fn mean_metrics(all: &[Metrics]) -> Metrics {
    let n = all.len() as f64;
    let avg = |f: fn(&Metrics) -> f64| all.iter().map(f).sum::<f64>() / n;
    let mut degenerate: Vec<MetricName> = all.iter().flat_map(|m| m.degenerate.iter().copied()).collect();
    degenerate.sort();
    degenerate.dedup();
    Metrics {
        accuracy: avg(|m| m.accuracy),
        f1: avg(|m| m.f1),
        fnr: avg(|m| m.fnr),
        fpr: avg(|m| m.fpr),
        degenerate,
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Fold {
    pub train: Vec<usize>,
    pub test: Vec<usize>,
}

/// Stratified split: each class is shuffled and dealt round-robin into `k`
/// test sets, continuing where the previous class stopped so overall fold
/// sizes stay balanced.
pub fn kfold_split(labels: &[Label], k: usize, seed: u64) -> Result<Vec<Fold>> {
    if k < 2 {
        return Err(Error::Split(format!("k must be >= 2, got {k}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut assignment = vec![0usize; labels.len()];
    let mut next = 0;
    for class in [Label::Malicious, Label::Benign] {
        let mut members: Vec<usize> = (0..labels.len()).filter(|&i| labels[i] == class).collect();
        if members.len() < k {
            return Err(Error::Split(format!(
                "class {class} has {} samples, fewer than k = {k}",
                members.len()
            )));
        }
        members.shuffle(&mut rng);
        for i in members {
            assignment[i] = next;
            next = (next + 1) % k;
        }
    }
    Ok((0..k)
        .map(|f| {
            let (test, train) = (0..labels.len()).partition(|&i| assignment[i] == f);
            Fold { train, test }
        })
        .collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Level {
    Command,
    File,
}

impl Level {
    pub fn as_str(self) -> &'static str {
        match self {
            Level::Command => "command",
            Level::File => "file",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FoldResult {
    pub fold: usize,
    pub n_train: usize,
    pub n_test: usize,
    pub confusion: Confusion,
    pub metrics: Metrics,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FoldReport {
    pub k: usize,
    pub seed: u64,
    pub level: Level,
    pub mode: Mode,
    pub policy: CorpusPolicy,
    pub model: ModelKind,
    pub per_fold: Vec<FoldResult>,
    pub mean: Metrics,
}

impl FoldReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serialises")
    }
}

/// Cross-validates any sample unit. Each fold builds its vocabulary, PCA and
/// model from the training indices only.
pub fn cross_validate_units<U: Unit + Sync>(units: &[U], config: &PipelineConfig, level: Level) -> Result<FoldReport> {
    config.validate()?;
    let labels: Vec<Label> = units.iter().map(Unit::label).collect();
    let folds = kfold_split(&labels, config.k, config.seed)?;
    let per_fold = folds
        .par_iter()
        .enumerate()
        .map(|(f, fold)| run_fold(units, fold, f, config))
        .collect::<Result<Vec<_>>>()?;
    let mean = mean_metrics(&per_fold.iter().map(|r| r.metrics.clone()).collect::<Vec<_>>());
    Ok(FoldReport {
        k: config.k,
        seed: config.seed,
        level,
        mode: config.mode,
        policy: config.policy,
        model: config.model,
        per_fold,
        mean,
    })
}

fn run_fold<U: Unit>(units: &[U], fold: &Fold, f: usize, config: &PipelineConfig) -> Result<FoldResult> {
    let train: Vec<&U> = fold.train.iter().map(|&i| &units[i]).collect();
    let pipeline = Pipeline::fit(&train, config)?;
    let mut c = Confusion::default();
    for &i in &fold.test {
        let p = pipeline.predict_proba(&units[i])?;
        c.record(units[i].label().is_positive(), p >= crate::models::DECISION_THRESHOLD);
    }
    Ok(FoldResult {
        fold: f,
        n_train: fold.train.len(),
        n_test: fold.test.len(),
        confusion: c,
        metrics: metrics(&c),
    })
}

/// Command-level cross-validation.
pub fn cross_validate(commands: &[Command], config: &PipelineConfig) -> Result<FoldReport> {
    cross_validate_units(commands, config, Level::Command)
}

/// Plain-text table: one row per report, metrics as percentages of the fold means.
pub fn render_table(reports: &[FoldReport]) -> String {
    let mut out = String::new();
    let header = ["Level", "Repr.", "Policy", "Model", "AC", "F1", "FNR", "FPR"];
    writeln!(
        out,
        "{:<8} {:<6} {:<13} {:<5} {:>7} {:>7} {:>7} {:>7}",
        header[0], header[1], header[2], header[3], header[4], header[5], header[6], header[7]
    )
    .expect("write to String");
    for r in reports {
        let m = &r.mean;
        writeln!(
            out,
            "{:<8} {:<6} {:<13} {:<5} {:>7.2} {:>7.2} {:>7.2} {:>7.2}",
            r.level.as_str(),
            r.mode.as_str(),
            r.policy.as_str(),
            r.model.as_str().to_uppercase(),
            100.0 * m.accuracy,
            100.0 * m.f1,
            100.0 * m.fnr,
            100.0 * m.fpr
        )
        .expect("write to String");
    }
    out
}
