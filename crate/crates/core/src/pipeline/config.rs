//! Pipeline configuration and its `key = value` text form.

use std::fmt::Write as _;
use std::str::FromStr;

use crate::featurize::{CorpusPolicy, Mode, NgramRange};
use crate::models::{ModelKind, TrainConfig};
use crate::reduce::PcaConfig;
use crate::{Error, Result};

pub const DEFAULT_FOLDS: usize = 10;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PipelineConfig {
    pub mode: Mode,
    pub policy: CorpusPolicy,
    pub ngram_range: NgramRange,
    pub variance_target: f64,
    pub standardize: bool,
    pub max_fit_samples: Option<usize>,
    pub model: ModelKind,
    pub k: usize,
    /// Seeds fold assignment, PCA subsampling and model training.
    pub seed: u64,
    /// Optimiser and ensemble settings; its own `seed` is replaced by `seed` above.
    pub train: TrainConfig,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            mode: Mode::CharLevel,
            policy: CorpusPolicy::Mixed,
            ngram_range: NgramRange::default(),
            variance_target: PcaConfig::default().variance_target,
            standardize: false,
            max_fit_samples: None,
            model: ModelKind::Mlp,
            k: DEFAULT_FOLDS,
            seed: 0,
            train: TrainConfig::default(),
        }
    }
}

/// Every key accepted by [`PipelineConfig::set`], in serialisation order.
pub const KEYS: &[&str] = &[
    "mode",
    "policy",
    "ngram_range",
    "variance_target",
    "standardize",
    "max_fit_samples",
    "model",
    "k",
    "seed",
    "learning_rate",
    "epochs",
    "batch_size",
    "l2",
    "momentum",
    "n_trees",
    "max_depth",
    "feature_subsample",
];

fn parse_num<T: FromStr>(key: &str, value: &str) -> Result<T> {
    value
        .parse()
        .map_err(|_| Error::config(key, format!("cannot parse {value:?}")))
}

fn parse_optional<T: FromStr>(key: &str, value: &str, none: &str) -> Result<Option<T>> {
    if value == none {
        Ok(None)
    } else {
        parse_num(key, value).map(Some)
    }
}

impl PipelineConfig {
    pub fn pca_config(&self) -> PcaConfig {
        PcaConfig {
            variance_target: self.variance_target,
            standardize: self.standardize,
            max_fit_samples: self.max_fit_samples,
            seed: self.seed,
        }
    }

    pub fn train_config(&self) -> TrainConfig {
        TrainConfig {
            seed: self.seed,
            ..self.train
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.k < 2 {
            return Err(Error::config("k", "must be >= 2"));
        }
        self.pca_config().validate()?;
        self.train_config().validate()
    }

    /// Sets one field from its text form. Unknown keys are config errors.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let t = &mut self.train;
        match key {
            "mode" => self.mode = value.parse()?,
            "policy" => self.policy = value.parse()?,
            "ngram_range" => self.ngram_range = value.parse()?,
            "variance_target" => self.variance_target = parse_num(key, value)?,
            "standardize" => self.standardize = parse_num(key, value)?,
            "max_fit_samples" => self.max_fit_samples = parse_optional(key, value, "none")?,
            "model" => self.model = value.parse()?,
            "k" => self.k = parse_num(key, value)?,
            "seed" => self.seed = parse_num(key, value)?,
            "learning_rate" => t.learning_rate = parse_num(key, value)?,
            "epochs" => t.epochs = parse_num(key, value)?,
            "batch_size" => t.batch_size = parse_num(key, value)?,
            "l2" => t.l2 = parse_num(key, value)?,
            "momentum" => t.momentum = parse_num(key, value)?,
            "n_trees" => t.n_trees = parse_num(key, value)?,
            "max_depth" => t.max_depth = parse_num(key, value)?,
            "feature_subsample" => t.feature_subsample = parse_optional(key, value, "auto")?,
            _ => return Err(Error::config(key, "unknown configuration key")),
        }
        Ok(())
    }

    pub fn get(&self, key: &str) -> Option<String> {
        let t = &self.train;
        Some(match key {
            "mode" => self.mode.to_string(),
            "policy" => self.policy.to_string(),
            "ngram_range" => self.ngram_range.to_string(),
            "variance_target" => self.variance_target.to_string(),
            "standardize" => self.standardize.to_string(),
            "max_fit_samples" => self.max_fit_samples.map_or("none".into(), |m| m.to_string()),
            "model" => self.model.to_string(),
            "k" => self.k.to_string(),
            "seed" => self.seed.to_string(),
            "learning_rate" => t.learning_rate.to_string(),
            "epochs" => t.epochs.to_string(),
            "batch_size" => t.batch_size.to_string(),
            "l2" => t.l2.to_string(),
            "momentum" => t.momentum.to_string(),
            "n_trees" => t.n_trees.to_string(),
            "max_depth" => t.max_depth.to_string(),
            "feature_subsample" => t.feature_subsample.map_or("auto".into(), |f| f.to_string()),
            _ => return None,
        })
    }

    /// Applies `key = value` lines on top of `self`. Blank lines and `#`
    /// comments are skipped.
    pub fn apply_text(&mut self, text: &str) -> Result<()> {
        for (n, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| Error::Format(format!("config line {}: expected key = value", n + 1)))?;
            self.set(key.trim(), value.trim().trim_matches('"'))?;
        }
        Ok(())
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut cfg = Self::default();
        cfg.apply_text(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Renders every key; floats use the shortest round-tripping form.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for key in KEYS {
            let value = self.get(key).expect("known key");
            writeln!(out, "{key} = {value}").expect("writing to a String");
        }
        out
    }
}
