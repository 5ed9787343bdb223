use std::fs::{self, File};
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use shellgate_core::corpus::{
    default_rules, extract_pcap_payloads, load_rules, load_text_commands, match_commands, read_jsonl, redact,
    scan_strings, write_jsonl, Command, Label,
};
use shellgate_core::eval::{cross_validate, render_table};
use shellgate_core::filelevel::{
    detect_files, fit_count_distribution, group_by_source, ks_statistic, read_files_jsonl, synthesize_benign_files,
    write_files_jsonl, FileSample,
};
use shellgate_core::pipeline::{decode, encode, Pipeline};
use shellgate_core::Error;

use crate::{CliError, EvaluateArgs, ExtractArgs, InputKind, LevelArg, OutputFormat, PredictArgs, SynthArgs, TrainArgs};

fn display(path: &Path) -> String {
    path.display().to_string()
}

fn open(path: &Path) -> Result<BufReader<File>, Error> {
    File::open(path).map(BufReader::new).map_err(|e| Error::io(display(path), e))
}

/// Runs `write` against `path`, or against `stdout` when no path is given.
fn with_output(
    path: Option<&Path>,
    stdout: &mut dyn Write,
    write: impl FnOnce(&mut dyn Write) -> Result<(), Error>,
) -> Result<(), Error> {
    match path {
        Some(p) => {
            let mut w = BufWriter::new(File::create(p).map_err(|e| Error::io(display(p), e))?);
            write(&mut w)?;
            w.flush().map_err(|e| Error::io(display(p), e))
        }
        None => {
            write(stdout)?;
            stdout.flush().map_err(|e| Error::io("<stdout>", e))
        }
    }
}

fn read_commands(paths: &[impl AsRef<Path>]) -> Result<Vec<Command>, Error> {
    let mut all = Vec::new();
    for p in paths {
        let p = p.as_ref();
        all.extend(read_jsonl(open(p)?, &display(p))?);
    }
    Ok(all)
}

fn read_files(paths: &[impl AsRef<Path>]) -> Result<Vec<FileSample>, Error> {
    let mut all = Vec::new();
    for p in paths {
        let p = p.as_ref();
        all.extend(read_files_jsonl(open(p)?, &display(p))?);
    }
    Ok(all)
}

pub(crate) fn extract(args: ExtractArgs, stdout: &mut dyn Write, stderr: &mut dyn Write) -> Result<(), CliError> {
    if args.rules.is_some() && args.kind != InputKind::Binary {
        return Err(CliError::Usage("--rules applies to --kind binary only".into()));
    }
    if args.min_len == 0 {
        return Err(CliError::Usage("--min-len must be >= 1".into()));
    }
    let rules = match &args.rules {
        Some(p) => load_rules(open(p)?, &display(p))?,
        None => default_rules(),
    };
    let mut commands = Vec::new();
    let mut failures = Vec::new();
    for path in &args.inputs {
        let id = display(path);
        let extracted = (|| -> Result<Vec<Command>, Error> {
            match args.kind {
                InputKind::Binary => {
                    let bytes = fs::read(path).map_err(|e| Error::io(&id, e))?;
                    let runs = scan_strings(&bytes, args.min_len);
                    Ok(match_commands(&runs, &rules, args.label, &id).into_iter().map(|m| m.command).collect())
                }
                InputKind::Pcap => {
                    let bytes = fs::read(path).map_err(|e| Error::io(&id, e))?;
                    let out = extract_pcap_payloads(&bytes, &id)?;
                    if out.warnings > 0 {
                        let _ = writeln!(stderr, "warning: {id}: capture truncated, stopped early");
                    }
                    Ok(out.commands)
                }
                InputKind::Text => {
                    let out = load_text_commands(open(path)?, args.label, &id)?;
                    if out.warnings > 0 {
                        let _ = writeln!(stderr, "warning: {id}: {} lines were not valid UTF-8", out.warnings);
                    }
                    Ok(out.commands)
                }
            }
        })();
        match extracted {
            Ok(found) => {
                let _ = writeln!(stderr, "{id}: {} commands", found.len());
                commands.extend(found.into_iter().map(|mut c| {
                    c.label = args.label;
                    if args.redact {
                        redact(&c)
                    } else {
                        c
                    }
                }));
            }
            Err(e) => {
                let _ = writeln!(stderr, "error: {e}");
                failures.push(e);
            }
        }
    }
    if let Some(first) = failures.into_iter().next() {
        return Err(first.into());
    }
    if commands.is_empty() {
        let _ = writeln!(stderr, "warning: no commands extracted");
    }
    with_output(args.output.as_deref(), stdout, |w| match args.format {
        OutputFormat::Commands => write_jsonl(w, &commands),
        OutputFormat::Files => write_files_jsonl(w, &group_by_source(&commands)?),
    })?;
    Ok(())
}

pub(crate) fn train(args: TrainArgs, stderr: &mut dyn Write) -> Result<(), CliError> {
    let cfg = args.config.resolve()?;
    let corpus = read_commands(&args.corpora)?;
    let pipeline = Pipeline::fit(&corpus, &cfg)?;
    fs::write(&args.output, encode(&pipeline)).map_err(|e| Error::io(display(&args.output), e))?;
    if let Some(p) = &args.dump_vocab {
        fs::write(p, vocabulary_listing(&pipeline)).map_err(|e| Error::io(display(p), e))?;
    }
    let _ = writeln!(
        stderr,
        "trained {} on {} commands: {} n-grams, {} components",
        cfg.model,
        corpus.len(),
        pipeline.vocabulary.len(),
        pipeline.pca.n_components()
    );
    Ok(())
}

/// One n-gram per line, control characters (including the n-gram separator) escaped.
fn vocabulary_listing(p: &Pipeline) -> String {
    p.vocabulary
        .tokens()
        .iter()
        .map(|t| format!("{}\n", t.escape_debug()))
        .collect()
}

pub(crate) fn evaluate(args: EvaluateArgs, stdout: &mut dyn Write, stderr: &mut dyn Write) -> Result<(), CliError> {
    let cfg = args.config.resolve()?;
    let report = match args.level {
        LevelArg::Command => cross_validate(&read_commands(&args.corpora)?, &cfg)?,
        LevelArg::File => detect_files(&read_files(&args.corpora)?, &cfg)?,
    };
    let mut json = report.to_json();
    json.push('\n');
    let table = render_table(std::slice::from_ref(&report));
    let io = |e| Error::io("<output>", e);
    match &args.output {
        Some(p) => {
            fs::write(p, &json).map_err(|e| Error::io(display(p), e))?;
            stdout.write_all(table.as_bytes()).map_err(io)?;
        }
        None => {
            stdout.write_all(json.as_bytes()).map_err(io)?;
            stderr.write_all(table.as_bytes()).map_err(io)?;
        }
    }
    Ok(())
}

pub(crate) fn predict(args: PredictArgs, stdin: &mut dyn BufRead, stdout: &mut dyn Write) -> Result<(), CliError> {
    let bytes = fs::read(&args.model).map_err(|e| Error::io(display(&args.model), e))?;
    let pipeline = decode(&bytes)?;
    let mut file_input;
    let input: &mut dyn BufRead = match &args.input {
        Some(p) => {
            file_input = open(p)?;
            &mut file_input
        }
        None => stdin,
    };
    let source = args.input.as_deref().map_or("<stdin>".to_string(), display);
    let mut line = Vec::new();
    loop {
        line.clear();
        let n = input.read_until(b'\n', &mut line).map_err(|e| Error::io(&source, e))?;
        if n == 0 {
            break;
        }
        let text = line.trim_ascii();
        if text.is_empty() {
            continue;
        }
        let p = pipeline.predict_text(text)?;
        let label = Label::from_positive(p >= shellgate_core::models::DECISION_THRESHOLD);
        writeln!(stdout, "{p:.6}\t{label}\t{}", String::from_utf8_lossy(text)).map_err(|e| Error::io("<stdout>", e))?;
    }
    stdout.flush().map_err(|e| Error::io("<stdout>", e))?;
    Ok(())
}

pub(crate) fn synth_benign(args: SynthArgs, stdout: &mut dyn Write, stderr: &mut dyn Write) -> Result<(), CliError> {
    let malware: Vec<FileSample> = read_files(&args.malware)?
        .into_iter()
        .filter(|f| f.label() == Label::Malicious)
        .collect();
    if malware.is_empty() {
        return Err(Error::Contract("no malicious files in --malware inputs".into()).into());
    }
    let dist = fit_count_distribution(&malware)?;
    let pool = read_commands(&args.pool)?;
    let files = synthesize_benign_files(&pool, &dist, args.n_files, args.seed)?;
    let sizes: Vec<usize> = files.iter().map(|f| f.commands().len()).collect();
    let _ = writeln!(
        stderr,
        "synthesized {} benign files; KS statistic vs malware counts: {:.6}",
        files.len(),
        ks_statistic(&sizes, dist.counts())
    );
    with_output(args.output.as_deref(), stdout, |w| write_files_jsonl(w, &files))?;
    Ok(())
}
