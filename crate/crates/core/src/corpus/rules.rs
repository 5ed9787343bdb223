//! Pattern rules that decide which printable strings are shell commands.

use std::collections::HashSet;
use std::io::BufRead;

use regex::bytes::Regex;
use serde::{Deserialize, Serialize};

use super::{Command, Label, SourceKind, StringRun};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RuleKind {
    /// The string starts with the anchor (leading blanks ignored).
    Prefix,
    /// The string encloses an `anchor ... anchor_close` block.
    Delimited,
    /// The anchor occurs anywhere as a whole word.
    Keyword,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExtractionRule {
    pub rule_id: String,
    pub kind: RuleKind,
    pub anchor: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub anchor_close: Option<String>,
    #[serde(default = "default_min_len")]
    pub min_len: usize,
}

fn default_min_len() -> usize {
    super::DEFAULT_MIN_RUN
}

impl ExtractionRule {
    pub fn prefix(id: &str, anchor: &str) -> Self {
        Self::new(id, RuleKind::Prefix, anchor, None)
    }

    pub fn keyword(id: &str, anchor: &str) -> Self {
        Self::new(id, RuleKind::Keyword, anchor, None)
    }

    pub fn delimited(id: &str, open: &str, close: &str) -> Self {
        Self::new(id, RuleKind::Delimited, open, Some(close))
    }

    fn new(id: &str, kind: RuleKind, anchor: &str, close: Option<&str>) -> Self {
        ExtractionRule {
            rule_id: id.to_string(),
            kind,
            anchor: anchor.to_string(),
            anchor_close: close.map(str::to_string),
            min_len: default_min_len(),
        }
    }

    fn validate(&self) -> Result<()> {
        let field = |f: &str| format!("rule[{}].{f}", self.rule_id);
        if self.rule_id.is_empty() {
            return Err(Error::config("rule_id", "must be non-empty"));
        }
        if self.anchor.is_empty() {
            return Err(Error::config(field("anchor"), "must be non-empty"));
        }
        if self.min_len == 0 {
            return Err(Error::config(field("min_len"), "must be >= 1"));
        }
        match (self.kind, self.anchor_close.as_deref()) {
            (RuleKind::Delimited, None | Some("")) => Err(Error::config(
                field("anchor_close"),
                "delimited rules need a closing anchor",
            )),
            _ => Ok(()),
        }
    }
}

/// A command pulled out of a string run, with the rule that produced it.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RuleMatch {
    pub command: Command,
    pub rule_id: String,
    pub offset: usize,
}

/// Escaped anchor, with `\b` added on each side whose edge byte is a word byte.
fn word_pattern(anchor: &str) -> String {
    let word = |b: u8| b.is_ascii_alphanumeric() || b == b'_';
    let bytes = anchor.as_bytes();
    let mut p = String::new();
    if word(bytes[0]) {
        p.push_str(r"\b");
    }
    p.push_str(&regex::escape(anchor));
    if word(bytes[bytes.len() - 1]) {
        p.push_str(r"\b");
    }
    p
}

struct Compiled {
    rule: ExtractionRule,
    re: Regex,
}

impl Compiled {
    fn new(rule: ExtractionRule) -> Result<Self> {
        let pattern = match rule.kind {
            RuleKind::Prefix => format!(r"(?s-u)\A[ \t]*(?P<cmd>{}.*)", regex::escape(&rule.anchor)),
            RuleKind::Keyword => format!(r"(?-u){}", word_pattern(&rule.anchor)),
            RuleKind::Delimited => format!(
                r"(?s-u)(?P<cmd>{}.*){}",
                word_pattern(&rule.anchor),
                word_pattern(rule.anchor_close.as_deref().unwrap_or_default())
            ),
        };
        let re = Regex::new(&pattern).map_err(|e| Error::config(format!("rule[{}]", rule.rule_id), e.to_string()))?;
        Ok(Compiled { rule, re })
    }

    /// The command text this rule extracts from `run`, if any.
    fn extract<'a>(&self, run: &'a [u8]) -> Option<&'a [u8]> {
        let text = match self.rule.kind {
            RuleKind::Keyword => {
                self.re.find(run)?;
                run
            }
            RuleKind::Prefix | RuleKind::Delimited => self.re.captures(run)?.name("cmd")?.as_bytes(),
        };
        let text = text.trim_ascii();
        (text.len() >= self.rule.min_len).then_some(text)
    }
}

/// A validated, compiled, ordered rule list. Earlier rules win ties.
pub struct RuleSet {
    rules: Vec<Compiled>,
}

impl RuleSet {
    pub fn new(rules: Vec<ExtractionRule>) -> Result<Self> {
        if rules.is_empty() {
            return Err(Error::config("rules", "rule set is empty"));
        }
        let mut seen = HashSet::new();
        let mut compiled = Vec::with_capacity(rules.len());
        for rule in rules {
            rule.validate()?;
            if !seen.insert(rule.rule_id.clone()) {
                return Err(Error::config("rule_id", format!("duplicate id {:?}", rule.rule_id)));
            }
            compiled.push(Compiled::new(rule)?);
        }
        Ok(RuleSet { rules: compiled })
    }

    pub fn len(&self) -> usize {
        self.rules.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rules.is_empty()
    }

    pub fn rules(&self) -> impl Iterator<Item = &ExtractionRule> {
        self.rules.iter().map(|c| &c.rule)
    }
}

/// Emits at most one command per run, produced by the first rule that matches.
pub fn match_commands(runs: &[StringRun], rules: &RuleSet, label: Label, source_id: &str) -> Vec<RuleMatch> {
    runs.iter()
        .filter_map(|run| {
            rules.rules.iter().find_map(|c| {
                c.extract(&run.bytes).map(|text| RuleMatch {
                    command: Command::new(text, label, source_id, SourceKind::BinaryStrings),
                    rule_id: c.rule.rule_id.clone(),
                    offset: run.offset,
                })
            })
        })
        .collect()
}

/// Parses a rules file: one JSON object per line, blank lines and `#` comments skipped.
pub fn parse_rules<R: BufRead>(input: R, source_id: &str) -> Result<Vec<ExtractionRule>> {
    let mut rules = Vec::new();
    for (i, line) in input.lines().enumerate() {
        let line = line.map_err(|e| Error::io(source_id, e))?;
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let rule: ExtractionRule = serde_json::from_str(line)
            .map_err(|e| Error::Format(format!("{source_id}:{}: {e}", i + 1)))?;
        rules.push(rule);
    }
    Ok(rules)
}

pub fn load_rules<R: BufRead>(input: R, source_id: &str) -> Result<RuleSet> {
    RuleSet::new(parse_rules(input, source_id)?)
}

/// Built-in rules covering the command families common in IoT malware:
/// directory changes, `if ... fi` blocks, process control builtins, HTTP request
/// lines and the usual download-and-execute tooling.
pub fn default_rules() -> RuleSet {
    use ExtractionRule as R;
    let mut rules = vec![
        R::prefix("prefix-cd", "cd "),
        R::prefix("prefix-get", "GET "),
        R::prefix("prefix-post", "POST "),
        R::prefix("prefix-head", "HEAD "),
        R::prefix("prefix-tftp", "tftp "),
        R::prefix("prefix-tftp-upper", "TFTP "),
        R::prefix("prefix-wget", "wget "),
        R::prefix("prefix-curl", "curl "),
        R::prefix("prefix-chmod", "chmod "),
        R::prefix("prefix-rm", "rm "),
        R::prefix("prefix-busybox", "busybox "),
        R::prefix("prefix-bin-busybox", "/bin/busybox "),
        R::prefix("prefix-echo", "echo "),
        R::prefix("prefix-cat", "cat "),
        R::prefix("prefix-sh", "sh -c "),
        R::delimited("block-if-fi", "if", "fi"),
    ];
    for kw in [
        "wget", "tftp", "TFTP", "chmod", "busybox", "kill", "killall", "pkill", "wait", "disown", "suspend", "fc",
        "history", "break", "nohup", "iptables", "crontab", "/bin/sh", "/dev/null",
    ] {
        rules.push(R::keyword(&format!("kw-{}", kw.trim_start_matches('/').replace('/', "-")), kw));
    }
    RuleSet::new(rules).expect("built-in rules are valid")
}
