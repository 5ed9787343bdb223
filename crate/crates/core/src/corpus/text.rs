use std::io::BufRead;

use super::{Command, Label, SourceKind};
use crate::{Error, Result};

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct TextLoad {
    pub commands: Vec<Command>,
    /// Lines that were not valid UTF-8 and were decoded lossily.
    pub warnings: usize,
}

/// One command per non-blank line, trimmed.
pub fn load_text_commands<R: BufRead>(mut input: R, label: Label, source_id: &str) -> Result<TextLoad> {
    let mut out = TextLoad::default();
    let mut line = Vec::new();
    loop {
        line.clear();
        let n = input
            .read_until(b'\n', &mut line)
            .map_err(|e| Error::io(source_id, e))?;
        if n == 0 {
            break;
        }
        let text = match std::str::from_utf8(&line) {
            Ok(s) => s.trim().to_string(),
            Err(_) => {
                out.warnings += 1;
                String::from_utf8_lossy(&line).trim().to_string()
            }
        };
        if !text.is_empty() {
            out.commands
                .push(Command::new(text, label, source_id, SourceKind::TextList));
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn blank_lines_skipped() {
        let out = load_text_commands(&b"ls -la\n\ncd /tmp"[..], Label::Benign, "h").unwrap();
        let texts: Vec<_> = out.commands.iter().map(|c| c.text.clone()).collect();
        assert_eq!(texts, vec![b"ls -la".to_vec(), b"cd /tmp".to_vec()]);
    }

    #[test]
    fn whitespace_trimmed() {
        let out = load_text_commands(
            &b" sudo wget https://download.oracle.com \r\n"[..],
            Label::Benign,
            "h",
        )
        .unwrap();
        assert_eq!(out.commands[0].text, b"sudo wget https://download.oracle.com");
        assert_eq!(out.commands[0].source_kind, SourceKind::TextList);
    }

    #[test]
    fn empty_stream() {
        let out = load_text_commands(&b""[..], Label::Benign, "h").unwrap();
        assert!(out.commands.is_empty());
    }

    #[test]
    fn invalid_utf8_is_lossy_with_warning() {
        let out = load_text_commands(&b"echo \xff\nok\n"[..], Label::Malicious, "h").unwrap();
        assert_eq!(out.warnings, 1);
        assert_eq!(out.commands[0].text_lossy(), "echo \u{FFFD}");
        assert_eq!(out.commands[1].label, Label::Malicious);
    }
}
