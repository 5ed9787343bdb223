//! File-level detection: a file is the sum of its commands' feature vectors.

use std::io::{BufRead, Write};

use rand::seq::{IndexedRandom, SliceRandom};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::corpus::{Command, Label, SourceKind};
use crate::eval::{cross_validate_units, FoldReport, Level};
use crate::featurize::{FeatureVector, Vocabulary};
use crate::pipeline::{aggregate_texts, PipelineConfig, Unit};
use crate::{Error, Result};

/// The shell commands extracted from one binary, all sharing its label.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FileSample {
    file_id: String,
    label: Label,
    commands: Vec<Command>,
}

impl FileSample {
    pub fn new(file_id: impl Into<String>, label: Label, commands: Vec<Command>) -> Result<Self> {
        let file_id = file_id.into();
        if commands.is_empty() {
            return Err(Error::Contract(format!("file {file_id} has no commands")));
        }
        if let Some(c) = commands.iter().find(|c| c.label != label) {
            return Err(Error::Contract(format!(
                "file {file_id} is {label} but contains a {} command",
                c.label
            )));
        }
        Ok(FileSample {
            file_id,
            label,
            commands,
        })
    }

    /// A file holding exactly one command.
    pub fn single(file_id: impl Into<String>, command: Command) -> Self {
        let label = command.label;
        FileSample {
            file_id: file_id.into(),
            label,
            commands: vec![command],
        }
    }

    pub fn file_id(&self) -> &str {
        &self.file_id
    }

    pub fn label(&self) -> Label {
        self.label
    }

    pub fn commands(&self) -> &[Command] {
        &self.commands
    }
}

impl Unit for FileSample {
    fn label(&self) -> Label {
        self.label
    }

    fn texts(&self) -> impl Iterator<Item = &[u8]> {
        self.commands.iter().map(|c| c.text.as_slice())
    }
}

/// Element-wise sum of the command vectors.
pub fn aggregate(file: &FileSample, vocab: &Vocabulary) -> FeatureVector {
    aggregate_texts(file.texts(), vocab).0
}

/// Observed commands-per-file counts from the malicious files.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CountDistribution {
    counts: Vec<usize>,
}

impl CountDistribution {
    pub fn new(counts: Vec<usize>) -> Result<Self> {
        if counts.is_empty() || counts.contains(&0) {
            return Err(Error::Contract("count distribution needs at least one count, all >= 1".into()));
        }
        Ok(CountDistribution { counts })
    }

    pub fn counts(&self) -> &[usize] {
        &self.counts
    }

    pub fn mean(&self) -> f64 {
        self.counts.iter().sum::<usize>() as f64 / self.counts.len() as f64
    }

    /// One count drawn uniformly from the observed multiset.
    pub fn sample<R: Rng>(&self, rng: &mut R) -> usize {
        *self.counts.choose(rng).expect("non-empty")
    }
}

pub fn fit_count_distribution(malware_files: &[FileSample]) -> Result<CountDistribution> {
    CountDistribution::new(malware_files.iter().map(|f| f.commands.len()).collect())
}

/// Benign pseudo-files whose sizes follow `dist`. Commands come from the benign
/// part of `pool`, without replacement until it runs out and uniformly with
/// replacement after that.
pub fn synthesize_benign_files(
    pool: &[Command],
    dist: &CountDistribution,
    n_files: usize,
    seed: u64,
) -> Result<Vec<FileSample>> {
    let benign: Vec<&Command> = pool.iter().filter(|c| c.label == Label::Benign).collect();
    if benign.is_empty() {
        return Err(Error::Contract("benign command pool is empty".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let sizes: Vec<usize> = (0..n_files).map(|_| dist.sample(&mut rng)).collect();
    let mut order: Vec<usize> = (0..benign.len()).collect();
    order.shuffle(&mut rng);
    let mut fresh = order.into_iter();
    let width = n_files.to_string().len();
    let files = sizes
        .into_iter()
        .enumerate()
        .map(|(i, size)| {
            let commands = (0..size)
                .map(|_| {
                    let k = fresh.next().unwrap_or_else(|| rng.random_range(0..benign.len()));
                    benign[k].clone()
                })
                .collect();
            FileSample {
                file_id: format!("synthetic-benign-{i:0width$}"),
                label: Label::Benign,
                commands,
            }
        })
        .collect();
    Ok(files)
}

/// Two-sample Kolmogorov-Smirnov statistic: the largest gap between the two
/// empirical CDFs.
pub fn ks_statistic(a: &[usize], b: &[usize]) -> f64 {
    let mut a = a.to_vec();
    let mut b = b.to_vec();
    a.sort_unstable();
    b.sort_unstable();
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let (mut i, mut j, mut d) = (0, 0, 0.0f64);
    while i < a.len() && j < b.len() {
        let v = a[i].min(b[j]);
        while i < a.len() && a[i] == v {
            i += 1;
        }
        while j < b.len() && b[j] == v {
            j += 1;
        }
        d = d.max((i as f64 / na - j as f64 / nb).abs());
    }
    d
}

/// Cross-validation with files as the unit; same leakage rules as command level.
pub fn detect_files(files: &[FileSample], config: &PipelineConfig) -> Result<FoldReport> {
    cross_validate_units(files, config, Level::File)
}

#[derive(Serialize, Deserialize)]
struct FileRecord {
    file_id: String,
    label: Label,
    commands: Vec<String>,
}

/// Writes `{file_id, label, commands: [text, ...]}` lines.
pub fn write_files_jsonl<W: Write>(mut out: W, files: &[FileSample]) -> Result<()> {
    for f in files {
        let rec = FileRecord {
            file_id: f.file_id.clone(),
            label: f.label,
            commands: f.commands.iter().map(|c| c.text_lossy().into_owned()).collect(),
        };
        serde_json::to_writer(&mut out, &rec).map_err(|e| Error::Format(e.to_string()))?;
        out.write_all(b"\n").map_err(|e| Error::io("<output>", e))?;
    }
    Ok(())
}

pub fn read_files_jsonl<R: BufRead>(input: R, source_id: &str) -> Result<Vec<FileSample>> {
    let mut files = Vec::new();
    for (lineno, line) in input.lines().enumerate() {
        let line = line.map_err(|e| Error::io(source_id, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let at = |msg: String| Error::Format(format!("{source_id}:{}: {msg}", lineno + 1));
        let rec: FileRecord = serde_json::from_str(&line).map_err(|e| at(e.to_string()))?;
        if rec.commands.iter().any(String::is_empty) {
            return Err(at("empty command text".into()));
        }
        let commands = rec
            .commands
            .into_iter()
            .map(|t| Command::new(t, rec.label, rec.file_id.clone(), SourceKind::BinaryStrings))
            .collect();
        files.push(FileSample::new(rec.file_id, rec.label, commands).map_err(|e| at(e.to_string()))?);
    }
    Ok(files)
}

/// Groups commands into files by `source_id`, keeping first-seen order.
pub fn group_by_source(commands: &[Command]) -> Result<Vec<FileSample>> {
    let mut order: Vec<&str> = Vec::new();
    let mut groups: std::collections::HashMap<&str, Vec<Command>> = std::collections::HashMap::new();
    for c in commands {
        let entry = groups.entry(c.source_id.as_str()).or_insert_with(|| {
            order.push(c.source_id.as_str());
            Vec::new()
        });
        entry.push(c.clone());
    }
    order
        .into_iter()
        .map(|id| {
            let cmds = groups.remove(id).expect("grouped");
            FileSample::new(id, cmds[0].label, cmds)
        })
        .collect()
}
