use std::collections::{BTreeSet, HashMap};

use serde::{Deserialize, Serialize};

use super::tokenize::{ngrams, tokenize};
use super::{CorpusPolicy, Mode, NgramRange};
use crate::corpus::{Command, Label};
use crate::{Error, Result};

/// The bag of n-grams that defines feature indices. Immutable once built.
///
/// Tokens are unique and sorted, so index `i` means the same n-gram on every
/// machine that builds from the same corpus.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "VocabularyFile", into = "VocabularyFile")]
pub struct Vocabulary {
    mode: Mode,
    ngram_range: NgramRange,
    policy: CorpusPolicy,
    tokens: Vec<String>,
    index: HashMap<String, u32>,
}

#[derive(Serialize, Deserialize)]
struct VocabularyFile {
    mode: Mode,
    ngram_range: NgramRange,
    policy: CorpusPolicy,
    tokens: Vec<String>,
}

impl TryFrom<VocabularyFile> for Vocabulary {
    type Error = Error;

    fn try_from(f: VocabularyFile) -> Result<Self> {
        if !f.tokens.windows(2).all(|w| w[0] < w[1]) {
            return Err(Error::Format("vocabulary tokens must be sorted and unique".into()));
        }
        Ok(Vocabulary::from_sorted(f.mode, f.ngram_range, f.policy, f.tokens))
    }
}

impl From<Vocabulary> for VocabularyFile {
    fn from(v: Vocabulary) -> Self {
        VocabularyFile {
            mode: v.mode,
            ngram_range: v.ngram_range,
            policy: v.policy,
            tokens: v.tokens,
        }
    }
}

impl Vocabulary {
    fn from_sorted(mode: Mode, ngram_range: NgramRange, policy: CorpusPolicy, tokens: Vec<String>) -> Self {
        let index = tokens
            .iter()
            .enumerate()
            .map(|(i, t)| (t.clone(), i as u32))
            .collect();
        Vocabulary {
            mode,
            ngram_range,
            policy,
            tokens,
            index,
        }
    }

    /// Builds from labeled texts; under [`CorpusPolicy::MalwareOnly`] benign texts are skipped.
    pub fn build<'a, I>(texts: I, mode: Mode, ngram_range: NgramRange, policy: CorpusPolicy) -> Result<Self>
    where
        I: IntoIterator<Item = (&'a [u8], Label)>,
    {
        let mut grams = BTreeSet::new();
        let mut used = 0usize;
        for (text, label) in texts {
            if policy == CorpusPolicy::MalwareOnly && label != Label::Malicious {
                continue;
            }
            used += 1;
            grams.extend(ngrams(&tokenize(text, mode), ngram_range));
        }
        if used == 0 {
            let why = match policy {
                CorpusPolicy::Mixed => "corpus is empty",
                CorpusPolicy::MalwareOnly => "malware-only policy but corpus has no malicious commands",
            };
            return Err(Error::config("corpus", why));
        }
        if grams.is_empty() {
            return Err(Error::config("corpus", format!("no {mode}-level n-grams in {used} commands")));
        }
        Ok(Self::from_sorted(mode, ngram_range, policy, grams.into_iter().collect()))
    }

    pub fn mode(&self) -> Mode {
        self.mode
    }

    pub fn ngram_range(&self) -> NgramRange {
        self.ngram_range
    }

    pub fn policy(&self) -> CorpusPolicy {
        self.policy
    }

    pub fn tokens(&self) -> &[String] {
        &self.tokens
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn index_of(&self, gram: &str) -> Option<usize> {
        self.index.get(gram).map(|&i| i as usize)
    }
}

pub fn build_vocabulary(
    corpus: &[Command],
    mode: Mode,
    ngram_range: NgramRange,
    policy: CorpusPolicy,
) -> Result<Vocabulary> {
    Vocabulary::build(
        corpus.iter().map(|c| (c.text.as_slice(), c.label)),
        mode,
        ngram_range,
        policy,
    )
}
