//! End-to-end pipeline: vocabulary, count vectors, PCA, classifier.

mod codec;
mod config;

pub use codec::{decode, encode, FORMAT_VERSION, MAGIC};
pub use config::{PipelineConfig, DEFAULT_FOLDS, KEYS};

use crate::corpus::{Command, Label};
use crate::featurize::{command_stats, vectorize, FeatureVector, Mode, Vocabulary, STATS_DIM};
use crate::models::{self, ClassifierModel};
use crate::reduce::{fit_pca, PcaModel, SparseRow};
use crate::{Error, Result};

/// Something classified as a whole: one command, or a file of commands whose
/// vectors are summed.
pub trait Unit {
    fn label(&self) -> Label;
    fn texts(&self) -> impl Iterator<Item = &[u8]>;
}

impl Unit for Command {
    fn label(&self) -> Label {
        self.label
    }

    fn texts(&self) -> impl Iterator<Item = &[u8]> {
        std::iter::once(self.text.as_slice())
    }
}

impl<U: Unit + ?Sized> Unit for &U {
    fn label(&self) -> Label {
        (**self).label()
    }

    fn texts(&self) -> impl Iterator<Item = &[u8]> {
        (**self).texts()
    }
}

/// Sum of the per-text count vectors. Texts are vectorised separately so no
/// n-gram spans two commands.
pub fn aggregate_texts<'a>(texts: impl IntoIterator<Item = &'a [u8]>, vocab: &Vocabulary) -> (FeatureVector, [f64; STATS_DIM]) {
    let mut sum = FeatureVector::zeros(vocab.len());
    let mut stats = [0.0; STATS_DIM];
    for text in texts {
        sum = sum.add(&vectorize(text, vocab));
        for (s, v) in stats.iter_mut().zip(command_stats(text)) {
            *s += v;
        }
    }
    (sum, stats)
}

/// Model input row for a unit. Character-level rows carry the two scaled
/// command statistics after the n-gram counts.
pub fn feature_row<U: Unit + ?Sized>(unit: &U, vocab: &Vocabulary) -> SparseRow {
    texts_row(unit.texts(), vocab)
}

fn texts_row<'a>(texts: impl IntoIterator<Item = &'a [u8]>, vocab: &Vocabulary) -> SparseRow {
    let (counts, stats) = aggregate_texts(texts, vocab);
    match vocab.mode() {
        Mode::CharLevel => SparseRow::from_features(&counts, &stats),
        Mode::TermLevel => SparseRow::from_features(&counts, &[]),
    }
}

/// A fitted pipeline. All three stages are versioned together in one model file.
#[derive(Debug, Clone, PartialEq)]
pub struct Pipeline {
    pub config: PipelineConfig,
    pub vocabulary: Vocabulary,
    pub pca: PcaModel,
    pub model: ClassifierModel,
}

impl Pipeline {
    /// Builds the vocabulary, fits PCA and trains the configured model on `units`.
    pub fn fit<U: Unit>(units: &[U], config: &PipelineConfig) -> Result<Pipeline> {
        config.validate()?;
        if units.is_empty() {
            return Err(Error::Train("no training samples".into()));
        }
        let vocabulary = Vocabulary::build(
            units.iter().flat_map(|u| u.texts().map(move |t| (t, u.label()))),
            config.mode,
            config.ngram_range,
            config.policy,
        )?;
        let rows: Vec<SparseRow> = units.iter().map(|u| feature_row(u, &vocabulary)).collect();
        let pca = fit_pca(&rows, &config.pca_config())?;
        let x = rows.iter().map(|r| pca.transform(r)).collect::<Result<Vec<_>>>()?;
        let y: Vec<bool> = units.iter().map(|u| u.label().is_positive()).collect();
        let model = models::train(config.model, &x, &y, &config.train_config())?;
        Ok(Pipeline {
            config: *config,
            vocabulary,
            pca,
            model,
        })
    }

    pub fn predict_proba<U: Unit + ?Sized>(&self, unit: &U) -> Result<f64> {
        let row = feature_row(unit, &self.vocabulary);
        self.model.predict_proba(&self.pca.transform(&row)?)
    }

    pub fn predict_text(&self, text: &[u8]) -> Result<f64> {
        let row = texts_row([text], &self.vocabulary);
        self.model.predict_proba(&self.pca.transform(&row)?)
    }

    /// Checks that the stages chain: vocabulary width feeds PCA, PCA feeds the model.
    pub fn validate(&self) -> Result<()> {
        let v = &self.vocabulary;
        if (v.mode(), v.policy(), v.ngram_range()) != (self.config.mode, self.config.policy, self.config.ngram_range) {
            return Err(Error::Model("vocabulary settings disagree with the stored configuration".into()));
        }
        if self.model.kind() != self.config.model {
            return Err(Error::Model("classifier kind disagrees with the stored configuration".into()));
        }
        let expected = self.vocabulary.len() + if self.vocabulary.mode() == Mode::CharLevel { STATS_DIM } else { 0 };
        if self.pca.input_dim() != expected {
            return Err(Error::Model(format!(
                "PCA expects {} inputs but vocabulary yields {expected}",
                self.pca.input_dim()
            )));
        }
        if self.model.input_dim() != self.pca.n_components() {
            return Err(Error::Model(format!(
                "model expects {} inputs but PCA yields {}",
                self.model.input_dim(),
                self.pca.n_components()
            )));
        }
        Ok(())
    }
}
