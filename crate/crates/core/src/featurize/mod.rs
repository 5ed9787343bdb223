//! Bag-of-n-grams featurization at term or character granularity.

mod tokenize;
mod vector;
mod vocab;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

pub use tokenize::{ngram_count, ngrams, tokenize, tokenize_char, tokenize_term, TokenSequence, NGRAM_SEP};
pub use vector::{command_stats, vectorize, FeatureVector, STATS_DIM, STATS_SCALE};
pub use vocab::{build_vocabulary, Vocabulary};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Mode {
    /// Alphanumeric words of length >= 3.
    #[serde(rename = "term")]
    TermLevel,
    /// Every byte is a token.
    #[serde(rename = "char")]
    CharLevel,
}

impl Mode {
    pub fn as_str(self) -> &'static str {
        match self {
            Mode::TermLevel => "term",
            Mode::CharLevel => "char",
        }
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Mode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "term" => Ok(Mode::TermLevel),
            "char" => Ok(Mode::CharLevel),
            _ => Err(Error::config("mode", format!("expected term|char, got {s:?}"))),
        }
    }
}

/// Which commands contribute n-grams to the vocabulary.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum CorpusPolicy {
    #[serde(rename = "mixed")]
    Mixed,
    /// Benign text never defines a feature; benign commands are described only
    /// by the malicious n-grams they happen to contain.
    #[serde(rename = "malware-only")]
    MalwareOnly,
}

impl CorpusPolicy {
    pub fn as_str(self) -> &'static str {
        match self {
            CorpusPolicy::Mixed => "mixed",
            CorpusPolicy::MalwareOnly => "malware-only",
        }
    }
}

impl fmt::Display for CorpusPolicy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for CorpusPolicy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "mixed" => Ok(CorpusPolicy::Mixed),
            "malware-only" => Ok(CorpusPolicy::MalwareOnly),
            _ => Err(Error::config("policy", format!("expected mixed|malware-only, got {s:?}"))),
        }
    }
}

/// Inclusive n-gram order range.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "[usize; 2]", into = "[usize; 2]")]
pub struct NgramRange {
    lo: usize,
    hi: usize,
}

impl NgramRange {
    pub fn new(lo: usize, hi: usize) -> Result<Self> {
        if lo == 0 || lo > hi {
            return Err(Error::config("ngram_range", format!("need 1 <= lo <= hi, got ({lo}, {hi})")));
        }
        Ok(NgramRange { lo, hi })
    }

    pub fn lo(self) -> usize {
        self.lo
    }

    pub fn hi(self) -> usize {
        self.hi
    }
}

impl Default for NgramRange {
    fn default() -> Self {
        NgramRange { lo: 1, hi: 5 }
    }
}

impl TryFrom<[usize; 2]> for NgramRange {
    type Error = Error;

    fn try_from([lo, hi]: [usize; 2]) -> Result<Self> {
        NgramRange::new(lo, hi)
    }
}

impl From<NgramRange> for [usize; 2] {
    fn from(r: NgramRange) -> Self {
        [r.lo, r.hi]
    }
}

impl fmt::Display for NgramRange {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}..{}", self.lo, self.hi)
    }
}

impl FromStr for NgramRange {
    type Err = Error;

    /// Accepts `lo..hi`, `lo-hi` or `lo,hi`.
    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::config("ngram_range", format!("expected lo..hi, got {s:?}"));
        let (lo, hi) = s
            .split_once("..")
            .or_else(|| s.split_once('-'))
            .or_else(|| s.split_once(','))
            .ok_or_else(bad)?;
        let lo = lo.trim().parse().map_err(|_| bad())?;
        let hi = hi.trim().parse().map_err(|_| bad())?;
        NgramRange::new(lo, hi)
    }
}
