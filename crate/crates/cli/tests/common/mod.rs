#![allow(dead_code)]

use std::path::Path;

use shellgate_core::corpus::{write_jsonl, Command};

/// Runs the CLI in-process; returns (exit code, stdout, stderr).
pub fn run_cli(args: &[&str], stdin: &[u8]) -> (u8, Vec<u8>, String) {
    let mut argv = vec!["shellgate"];
    argv.extend_from_slice(args);
    let mut input = stdin;
    let mut out = Vec::new();
    let mut err = Vec::new();
    let code = shellgate_cli::run(argv, &mut input, &mut out, &mut err);
    (code, out, String::from_utf8_lossy(&err).into_owned())
}

pub fn write_commands(path: &Path, commands: &[Command]) {
    let mut buf = Vec::new();
    write_jsonl(&mut buf, commands).unwrap();
    std::fs::write(path, buf).unwrap();
}

pub fn path_str(p: &Path) -> &str {
    p.to_str().expect("utf-8 temp path")
}

/// Ethernet/IPv4/TCP frame carrying `payload` with the given TCP flags.
pub fn tcp_frame(payload: &[u8], flags: u8) -> Vec<u8> {
    let mut f = Vec::new();
    f.extend_from_slice(&[0x00, 0x11, 0x22, 0x33, 0x44, 0x55]);
    f.extend_from_slice(&[0x66, 0x77, 0x88, 0x99, 0xaa, 0xbb]);
    f.extend_from_slice(&[0x08, 0x00]);
    let total = (20 + 20 + payload.len()) as u16;
    f.extend_from_slice(&[0x45, 0x00]);
    f.extend_from_slice(&total.to_be_bytes());
    f.extend_from_slice(&[0x12, 0x34, 0x40, 0x00, 64, 6, 0, 0]);
    f.extend_from_slice(&[192, 168, 0, 2, 93, 184, 216, 34]);
    f.extend_from_slice(&49152u16.to_be_bytes());
    f.extend_from_slice(&80u16.to_be_bytes());
    f.extend_from_slice(&1u32.to_be_bytes());
    f.extend_from_slice(&1u32.to_be_bytes());
    f.extend_from_slice(&[0x50, flags, 0xff, 0xff, 0, 0, 0, 0]);
    f.extend_from_slice(payload);
    f
}

/// Little-endian classic capture with Ethernet link type.
pub fn capture(frames: &[Vec<u8>]) -> Vec<u8> {
    let mut c = Vec::new();
    c.extend_from_slice(&0xa1b2_c3d4u32.to_le_bytes());
    c.extend_from_slice(&2u16.to_le_bytes());
    c.extend_from_slice(&4u16.to_le_bytes());
    c.extend_from_slice(&[0; 8]);
    c.extend_from_slice(&65535u32.to_le_bytes());
    c.extend_from_slice(&1u32.to_le_bytes());
    for (i, frame) in frames.iter().enumerate() {
        c.extend_from_slice(&(1_600_000_000 + i as u32).to_le_bytes());
        c.extend_from_slice(&0u32.to_le_bytes());
        c.extend_from_slice(&(frame.len() as u32).to_le_bytes());
        c.extend_from_slice(&(frame.len() as u32).to_le_bytes());
        c.extend_from_slice(frame);
    }
    c
}

pub const GET_PAYLOAD: &[u8] = b"GET /cdn-cgi/l/chk_captcha?id=7 HTTP/1.1\r\nHost: example.net\r\nUser-Agent: Wget/1.20\r\n\r\n";

/// One HTTP GET, one TLS application-data record, one empty ACK.
pub fn three_packet_capture() -> Vec<u8> {
    let mut tls = vec![0x17, 0x03, 0x03, 0x00, 0x20];
    tls.extend((0u8..32).map(|i| i.wrapping_mul(37).wrapping_add(0x80)));
    capture(&[tcp_frame(GET_PAYLOAD, 0x18), tcp_frame(&tls, 0x18), tcp_frame(&[], 0x10)])
}
