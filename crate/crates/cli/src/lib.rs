//! `shellgate` command-line front end.
//!
//! Subcommands: `extract`, `train`, `evaluate`, `predict`, `synth-benign`.
//! Exit codes: 0 success, 1 usage or configuration error, 2 bad input data,
//! 3 internal error.

mod commands;

use std::ffi::OsString;
use std::io::{BufRead, Write};
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use shellgate_core::corpus::{Label, DEFAULT_MIN_RUN};
use shellgate_core::pipeline::PipelineConfig;
use shellgate_core::Error;

pub const EXIT_OK: u8 = 0;
pub const EXIT_USAGE: u8 = 1;
pub const EXIT_DATA: u8 = 2;
pub const EXIT_INTERNAL: u8 = 3;

/// Environment variable capping the worker thread count.
pub const THREADS_ENV: &str = "SHELLGATE_THREADS";

#[derive(Debug, Parser)]
#[command(name = "shellgate", version, about = "Detect malicious shell commands and the binaries that carry them")]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Debug, Subcommand)]
enum Cmd {
    /// Pull commands out of binaries, pcap captures or text lists into JSONL.
    Extract(ExtractArgs),
    /// Fit vocabulary, PCA and a classifier; write a model file.
    Train(TrainArgs),
    /// Stratified k-fold cross-validation at command or file level.
    Evaluate(EvaluateArgs),
    /// Score newline-delimited commands with a trained model.
    Predict(PredictArgs),
    /// Build benign pseudo-files whose sizes follow the malicious files.
    SynthBenign(SynthArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum InputKind {
    Binary,
    Pcap,
    Text,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum OutputFormat {
    /// One command per line.
    Commands,
    /// One file per line, commands grouped by source.
    Files,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum LevelArg {
    Command,
    File,
}

fn parse_label(s: &str) -> Result<Label, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

#[derive(Debug, Args)]
struct ExtractArgs {
    #[arg(long, value_enum)]
    kind: InputKind,
    #[arg(long, value_parser = parse_label)]
    label: Label,
    /// Extraction rules (JSONL); built-in rules when absent. Binary inputs only.
    #[arg(long)]
    rules: Option<PathBuf>,
    /// Minimum printable run length for binary scans.
    #[arg(long, default_value_t = DEFAULT_MIN_RUN)]
    min_len: usize,
    /// Mask IPv4 addresses, user names and home directories.
    #[arg(long)]
    redact: bool,
    #[arg(long, value_enum, default_value = "commands")]
    format: OutputFormat,
    /// Output path; stdout when absent.
    #[arg(short, long)]
    output: Option<PathBuf>,
    #[arg(required = true)]
    inputs: Vec<PathBuf>,
}

/// Pipeline settings. Precedence: built-in defaults, then `--config`, then the
/// individual flags, then `--set`.
#[derive(Debug, Args)]
struct ConfigArgs {
    /// File of `key = value` lines.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Override any configuration key, e.g. `--set epochs=20`.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
    #[arg(long)]
    mode: Option<String>,
    #[arg(long)]
    policy: Option<String>,
    #[arg(long)]
    ngram_range: Option<String>,
    #[arg(long)]
    variance_target: Option<String>,
    #[arg(long)]
    standardize: Option<String>,
    #[arg(long)]
    max_fit_samples: Option<String>,
    #[arg(long)]
    model: Option<String>,
    #[arg(short, long)]
    k: Option<String>,
    #[arg(long)]
    seed: Option<String>,
    #[arg(long)]
    learning_rate: Option<String>,
    #[arg(long)]
    epochs: Option<String>,
    #[arg(long)]
    batch_size: Option<String>,
    #[arg(long)]
    l2: Option<String>,
    #[arg(long)]
    momentum: Option<String>,
    #[arg(long)]
    n_trees: Option<String>,
    #[arg(long)]
    max_depth: Option<String>,
    #[arg(long)]
    feature_subsample: Option<String>,
}

impl ConfigArgs {
    fn flags(&self) -> [(&'static str, &Option<String>); 17] {
        [
            ("mode", &self.mode),
            ("policy", &self.policy),
            ("ngram_range", &self.ngram_range),
            ("variance_target", &self.variance_target),
            ("standardize", &self.standardize),
            ("max_fit_samples", &self.max_fit_samples),
            ("model", &self.model),
            ("k", &self.k),
            ("seed", &self.seed),
            ("learning_rate", &self.learning_rate),
            ("epochs", &self.epochs),
            ("batch_size", &self.batch_size),
            ("l2", &self.l2),
            ("momentum", &self.momentum),
            ("n_trees", &self.n_trees),
            ("max_depth", &self.max_depth),
            ("feature_subsample", &self.feature_subsample),
        ]
    }

    fn resolve(&self) -> Result<PipelineConfig, CliError> {
        let mut cfg = PipelineConfig::default();
        if let Some(path) = &self.config {
            let text = std::fs::read_to_string(path).map_err(|e| Error::io(path.display().to_string(), e))?;
            cfg.apply_text(&text).map_err(CliError::usage_from)?;
        }
        for (key, value) in self.flags() {
            if let Some(v) = value {
                cfg.set(key, v).map_err(CliError::usage_from)?;
            }
        }
        for kv in &self.set {
            let (key, value) = kv
                .split_once('=')
                .ok_or_else(|| CliError::Usage(format!("--set expects KEY=VALUE, got {kv:?}")))?;
            cfg.set(key.trim(), value.trim()).map_err(CliError::usage_from)?;
        }
        cfg.validate().map_err(CliError::usage_from)?;
        Ok(cfg)
    }
}

#[derive(Debug, Args)]
struct TrainArgs {
    #[command(flatten)]
    config: ConfigArgs,
    /// Model file to write.
    #[arg(short, long)]
    output: PathBuf,
    /// Also write the vocabulary, one n-gram per line.
    #[arg(long)]
    dump_vocab: Option<PathBuf>,
    /// Command JSONL corpora; labels come from the records.
    #[arg(required = true)]
    corpora: Vec<PathBuf>,
}

#[derive(Debug, Args)]
struct EvaluateArgs {
    #[command(flatten)]
    config: ConfigArgs,
    /// `command` reads command JSONL, `file` reads file JSONL.
    #[arg(long, value_enum, default_value = "command")]
    level: LevelArg,
    /// Write the JSON report here and the table to stdout; otherwise the JSON
    /// goes to stdout and the table to stderr.
    #[arg(short, long)]
    output: Option<PathBuf>,
    #[arg(required = true)]
    corpora: Vec<PathBuf>,
}

#[derive(Debug, Args)]
struct PredictArgs {
    #[arg(short, long)]
    model: PathBuf,
    /// Newline-delimited commands; stdin when absent.
    input: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct SynthArgs {
    /// Malicious file JSONL whose command counts set the size distribution.
    #[arg(long, required = true)]
    malware: Vec<PathBuf>,
    /// Command JSONL pool; only benign records are used.
    #[arg(long, required = true)]
    pool: Vec<PathBuf>,
    #[arg(long, default_value_t = 1000)]
    n_files: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(short, long)]
    output: Option<PathBuf>,
}

#[derive(Debug)]
enum CliError {
    Usage(String),
    Core(Error),
}

impl CliError {
    fn usage_from(e: Error) -> CliError {
        match e {
            Error::Config { .. } | Error::Format(_) => CliError::Usage(e.to_string()),
            other => CliError::Core(other),
        }
    }

    fn code(&self) -> u8 {
        match self {
            CliError::Usage(_) => EXIT_USAGE,
            CliError::Core(Error::Config { .. }) => EXIT_USAGE,
            CliError::Core(Error::Contract(_)) => EXIT_INTERNAL,
            CliError::Core(_) => EXIT_DATA,
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        CliError::Core(e)
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Usage(m) => f.write_str(m),
            CliError::Core(e) => write!(f, "{e}"),
        }
    }
}

fn configure_threads() -> Result<(), CliError> {
    let Some(raw) = std::env::var_os(THREADS_ENV) else {
        return Ok(());
    };
    let n: usize = raw
        .to_str()
        .and_then(|s| s.trim().parse().ok())
        .filter(|&n| n >= 1)
        .ok_or_else(|| CliError::Usage(format!("{THREADS_ENV} must be a positive integer")))?;
    // a second call in the same process finds the pool already built; keep it
    let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    Ok(())
}

/// Parses `args` (including the program name) and runs the subcommand.
/// Returns the process exit code.
pub fn run<I, T>(args: I, stdin: &mut dyn BufRead, stdout: &mut dyn Write, stderr: &mut dyn Write) -> u8
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let text = e.render().to_string();
            let _ = if code == EXIT_OK {
                stdout.write_all(text.as_bytes())
            } else {
                stderr.write_all(text.as_bytes())
            };
            return code;
        }
    };
    let result = configure_threads().and_then(|()| match cli.command {
        Cmd::Extract(a) => commands::extract(a, stdout, stderr),
        Cmd::Train(a) => commands::train(a, stderr),
        Cmd::Evaluate(a) => commands::evaluate(a, stdout, stderr),
        Cmd::Predict(a) => commands::predict(a, stdin, stdout),
        Cmd::SynthBenign(a) => commands::synth_benign(a, stdout, stderr),
    });
    match result {
        Ok(()) => EXIT_OK,
        Err(e) => {
            let _ = writeln!(stderr, "error: {e}");
            e.code()
        }
    }
}
