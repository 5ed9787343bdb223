use std::sync::OnceLock;

use regex::bytes::Regex;

use super::Command;

struct Patterns {
    ipv4: Regex,
    user_flag: Regex,
    home: Regex,
}

fn patterns() -> &'static Patterns {
    static P: OnceLock<Patterns> = OnceLock::new();
    P.get_or_init(|| Patterns {
        ipv4: Regex::new(r"(?-u)\b\d{1,3}\.\d{1,3}\.\d{1,3}\.\d{1,3}\b").unwrap(),
        user_flag: Regex::new(r"(?-u)(?P<flag>(?:^|\s)(?:-u|--user))(?P<sep>\s+|=)\S+").unwrap(),
        home: Regex::new(r"(?-u)/home/[^/\s]+/").unwrap(),
    })
}

/// Mechanical anonymisation of a command: IPv4 literals become `0.0.0.0`, the
/// argument of `-u`/`--user` and the name in `/home/<name>/` become `USER`.
///
/// Idempotent.
pub fn redact(command: &Command) -> Command {
    let p = patterns();
    let text = p.ipv4.replace_all(&command.text, &b"0.0.0.0"[..]);
    let text = p.user_flag.replace_all(&text, &b"${flag}${sep}USER"[..]);
    let text = p.home.replace_all(&text, &b"/home/USER/"[..]);
    Command {
        text: text.into_owned(),
        ..command.clone()
    }
}
