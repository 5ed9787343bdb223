use std::collections::HashMap;

use super::tokenize::{ngrams, tokenize};
use super::Vocabulary;

/// Sparse n-gram counts over a [`Vocabulary`].
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct FeatureVector {
    indices: Vec<u32>,
    counts: Vec<u32>,
    dim: usize,
}

impl FeatureVector {
    pub fn zeros(dim: usize) -> Self {
        FeatureVector {
            indices: Vec::new(),
            counts: Vec::new(),
            dim,
        }
    }

    /// Builds from `(index, count)` pairs in any order; zero counts are dropped
    /// and repeated indices are summed.
    pub fn from_pairs(dim: usize, pairs: impl IntoIterator<Item = (usize, u32)>) -> Self {
        let mut pairs: Vec<(usize, u32)> = pairs.into_iter().filter(|p| p.1 > 0).collect();
        pairs.sort_unstable();
        let mut v = FeatureVector::zeros(dim);
        for (i, c) in pairs {
            assert!(i < dim, "feature index {i} out of range for dim {dim}");
            match v.indices.last() {
                Some(&last) if last as usize == i => *v.counts.last_mut().unwrap() += c,
                _ => {
                    v.indices.push(i as u32);
                    v.counts.push(c);
                }
            }
        }
        v
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn nnz(&self) -> usize {
        self.indices.len()
    }

    pub fn indices(&self) -> &[u32] {
        &self.indices
    }

    pub fn counts(&self) -> &[u32] {
        &self.counts
    }

    pub fn iter(&self) -> impl Iterator<Item = (usize, u32)> + '_ {
        self.indices.iter().zip(&self.counts).map(|(&i, &c)| (i as usize, c))
    }

    pub fn get(&self, index: usize) -> u32 {
        self.indices
            .binary_search(&(index as u32))
            .map(|p| self.counts[p])
            .unwrap_or(0)
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().map(|&c| u64::from(c)).sum()
    }

    pub fn to_dense(&self) -> Vec<f64> {
        let mut d = vec![0.0; self.dim];
        for (i, c) in self.iter() {
            d[i] = f64::from(c);
        }
        d
    }

    /// Element-wise sum (merge of two sorted index lists).
    pub fn add(&self, other: &FeatureVector) -> FeatureVector {
        assert_eq!(self.dim, other.dim, "dimension mismatch");
        let mut out = FeatureVector::zeros(self.dim);
        let (mut a, mut b) = (self.iter().peekable(), other.iter().peekable());
        loop {
            let next = match (a.peek(), b.peek()) {
                (None, None) => break,
                (Some(_), None) => a.next().unwrap(),
                (None, Some(_)) => b.next().unwrap(),
                (Some(&(ia, ca)), Some(&(ib, cb))) => {
                    if ia == ib {
                        a.next();
                        b.next();
                        (ia, ca + cb)
                    } else if ia < ib {
                        a.next().unwrap()
                    } else {
                        b.next().unwrap()
                    }
                }
            };
            out.indices.push(next.0 as u32);
            out.counts.push(next.1);
        }
        out
    }
}

/// Counts the in-vocabulary n-grams of `text`; out-of-vocabulary n-grams are dropped.
pub fn vectorize(text: &[u8], vocab: &Vocabulary) -> FeatureVector {
    let mut counts: HashMap<usize, u32> = HashMap::new();
    for g in ngrams(&tokenize(text, vocab.mode()), vocab.ngram_range()) {
        if let Some(i) = vocab.index_of(&g) {
            *counts.entry(i).or_insert(0) += 1;
        }
    }
    FeatureVector::from_pairs(vocab.len(), counts)
}

/// Number of dense statistics appended to character-level feature rows.
pub const STATS_DIM: usize = 2;
pub const STATS_SCALE: f64 = 1.0 / 1000.0;

/// Command statistics: byte length and distinct-byte count, both scaled by 1/1000.
pub fn command_stats(text: &[u8]) -> [f64; STATS_DIM] {
    let mut seen = [false; 256];
    for &b in text {
        seen[b as usize] = true;
    }
    let distinct = seen.iter().filter(|&&s| s).count();
    [text.len() as f64 * STATS_SCALE, distinct as f64 * STATS_SCALE]
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::Label;
    use crate::featurize::{ngram_count, CorpusPolicy, Mode, NgramRange};
    use proptest::prelude::*;

    fn vocab(texts: &[&[u8]], mode: Mode, lo: usize, hi: usize) -> Vocabulary {
        Vocabulary::build(
            texts.iter().map(|t| (*t, Label::Malicious)),
            mode,
            NgramRange::new(lo, hi).unwrap(),
            CorpusPolicy::Mixed,
        )
        .unwrap()
    }

    #[test]
    fn direct_count() {
        let v = vocab(&[b"aa"], Mode::CharLevel, 1, 2);
        assert_eq!(v.tokens(), ["a", "a\u{1f}a"]);
        let f = vectorize(b"aa", &v);
        assert_eq!(f.get(v.index_of("a").unwrap()), 2);
        assert_eq!(f.get(v.index_of("a\u{1f}a").unwrap()), 1);
    }

    #[test]
    fn all_oov_keeps_dim() {
        let v = vocab(&[b"ab"], Mode::CharLevel, 1, 1);
        let f = vectorize(b"zz", &v);
        assert_eq!(f.nnz(), 0);
        assert_eq!(f.dim(), 2);
    }

    #[test]
    fn add_merges() {
        let a = FeatureVector::from_pairs(5, [(0, 1), (3, 2)]);
        let b = FeatureVector::from_pairs(5, [(1, 1), (3, 1), (4, 7)]);
        let s = a.add(&b);
        assert_eq!(s.indices(), [0, 1, 3, 4]);
        assert_eq!(s.counts(), [1, 1, 3, 7]);
    }

    #[test]
    fn stats() {
        assert_eq!(command_stats(b"aab"), [0.003, 0.002]);
        assert_eq!(command_stats(b""), [0.0, 0.0]);
    }

    /// Brute force: count every n-gram of `text` against a plain list scan.
    fn brute_total(text: &[u8], v: &Vocabulary) -> u64 {
        let seq = tokenize(text, v.mode());
        let mut total = 0;
        for n in v.ngram_range().lo()..=v.ngram_range().hi() {
            for w in seq.tokens.windows(n) {
                let g = w.join("\u{1f}");
                if v.tokens().contains(&g) {
                    total += 1;
                }
            }
        }
        total
    }

    proptest! {
        #[test]
        fn self_vocab_counts_everything(text in proptest::collection::vec(any::<u8>(), 1..60), hi in 1usize..5, term in any::<bool>()) {
            let mode = if term { Mode::TermLevel } else { Mode::CharLevel };
            let seq = tokenize(&text, mode);
            let range = NgramRange::new(1, hi).unwrap();
            prop_assume!(!seq.is_empty());
            let v = vocab(&[&text], mode, 1, hi);
            let f = vectorize(&text, &v);
            prop_assert_eq!(f.total() as usize, ngram_count(seq.len(), range));
            prop_assert_eq!(f.total(), brute_total(&text, &v));
            prop_assert!(f.indices().windows(2).all(|w| w[0] < w[1]));
            prop_assert!(f.counts().iter().all(|&c| c >= 1));
        }

        #[test]
        fn char_unigram_mass_is_byte_length(text in proptest::collection::vec(any::<u8>(), 1..80)) {
            let v = vocab(&[&text], Mode::CharLevel, 1, 3);
            let f = vectorize(&text, &v);
            let unigram_mass: u64 = f.iter().filter(|(i, _)| v.tokens()[*i].chars().count() == 1).map(|(_, c)| u64::from(c)).sum();
            prop_assert_eq!(unigram_mass as usize, text.len());
        }

        #[test]
        fn unigram_additivity(a in "[a-z /|;]{1,30}", b in "[a-z /|;]{1,30}") {
            // separator byte 0x00 is not in the vocabulary
            let v = vocab(&[a.as_bytes(), b.as_bytes()], Mode::CharLevel, 1, 1);
            let mut joined = a.as_bytes().to_vec();
            joined.push(0);
            joined.extend_from_slice(b.as_bytes());
            let sum = vectorize(a.as_bytes(), &v).add(&vectorize(b.as_bytes(), &v));
            prop_assert_eq!(vectorize(&joined, &v), sum);
        }
    }
}
