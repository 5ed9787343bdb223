//! Ingestion of raw sources into labeled [`Command`] records.

mod pcap;
mod redact;
mod rules;
mod scan;
mod text;

use std::fmt;
use std::io::{BufRead, Write};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

pub use pcap::{extract_pcap_payloads, is_plaintext, PcapExtraction, PLAINTEXT_MIN_FRACTION};
pub use redact::redact;
pub use rules::{
    default_rules, load_rules, match_commands, parse_rules, ExtractionRule, RuleKind, RuleMatch,
};
pub use scan::{scan_reader, scan_strings, StringRun, DEFAULT_MIN_RUN};
pub use text::{load_text_commands, TextLoad};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Label {
    Malicious,
    Benign,
}

impl Label {
    /// Malicious is the positive class.
    pub fn is_positive(self) -> bool {
        self == Label::Malicious
    }

    pub fn from_positive(positive: bool) -> Self {
        if positive {
            Label::Malicious
        } else {
            Label::Benign
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Label::Malicious => "malicious",
            Label::Benign => "benign",
        }
    }
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Label {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "malicious" => Ok(Label::Malicious),
            "benign" => Ok(Label::Benign),
            other => Err(Error::config("label", format!("expected malicious|benign, got {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SourceKind {
    BinaryStrings,
    PcapPayload,
    TextList,
}

/// One shell command, the unit of classification.
///
/// `text` holds raw bytes: strings pulled from binaries are not guaranteed to be
/// UTF-8.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Command {
    pub text: Vec<u8>,
    pub label: Label,
    pub source_id: String,
    pub source_kind: SourceKind,
}

impl Command {
    pub fn new(
        text: impl Into<Vec<u8>>,
        label: Label,
        source_id: impl Into<String>,
        source_kind: SourceKind,
    ) -> Self {
        Command {
            text: text.into(),
            label,
            source_id: source_id.into(),
            source_kind,
        }
    }

    pub fn text_lossy(&self) -> std::borrow::Cow<'_, str> {
        String::from_utf8_lossy(&self.text)
    }
}

#[derive(Serialize, Deserialize)]
struct CommandRecord {
    text: String,
    label: Label,
    source_id: String,
    source_kind: SourceKind,
}

/// Writes commands as JSONL. Invalid UTF-8 in `text` becomes U+FFFD.
pub fn write_jsonl<W: Write>(mut out: W, commands: &[Command]) -> Result<()> {
    for c in commands {
        let rec = CommandRecord {
            text: c.text_lossy().into_owned(),
            label: c.label,
            source_id: c.source_id.clone(),
            source_kind: c.source_kind,
        };
        serde_json::to_writer(&mut out, &rec).map_err(|e| Error::Format(e.to_string()))?;
        out.write_all(b"\n").map_err(|e| Error::io("<output>", e))?;
    }
    Ok(())
}

/// Reads a command JSONL stream. Blank lines are ignored; empty `text` or
/// `source_id` is rejected.
pub fn read_jsonl<R: BufRead>(input: R, source_id: &str) -> Result<Vec<Command>> {
    let mut commands = Vec::new();
    for (lineno, line) in input.lines().enumerate() {
        let line = line.map_err(|e| Error::io(source_id, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let rec: CommandRecord = serde_json::from_str(&line)
            .map_err(|e| Error::Format(format!("{source_id}:{}: {e}", lineno + 1)))?;
        if rec.text.is_empty() || rec.source_id.is_empty() {
            return Err(Error::Format(format!(
                "{source_id}:{}: text and source_id must be non-empty",
                lineno + 1
            )));
        }
        commands.push(Command {
            text: rec.text.into_bytes(),
            label: rec.label,
            source_id: rec.source_id,
            source_kind: rec.source_kind,
        });
    }
    Ok(commands)
}
