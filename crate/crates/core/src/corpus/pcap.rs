//! Classic pcap reader that keeps plaintext TCP payloads.
//!
//! Only per-packet payloads are produced: no IP fragment or TCP stream
//! reassembly, no pcapng, no IPv6.

use super::{Command, Label, SourceKind};
use crate::{Error, Result};

const GLOBAL_HEADER_LEN: usize = 24;
const RECORD_HEADER_LEN: usize = 16;
const LINKTYPE_ETHERNET: u32 = 1;
const ETHERTYPE_IPV4: u16 = 0x0800;
const ETHERTYPE_VLAN: u16 = 0x8100;
const IPPROTO_TCP: u8 = 6;

/// Minimum fraction of printable bytes for a payload without an HTTP prefix.
pub const PLAINTEXT_MIN_FRACTION: f64 = 0.9;

const HTTP_PREFIXES: [&[u8]; 7] = [b"GET", b"POST", b"HEAD", b"PUT", b"DELETE", b"OPTIONS", b"HTTP/"];

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct PcapExtraction {
    pub commands: Vec<Command>,
    pub records: usize,
    /// Records skipped because the capture's link type is not Ethernet.
    pub skipped_linktype: usize,
    /// Records that were not IPv4/TCP, were non-first fragments, or were malformed.
    pub skipped_packets: usize,
    /// TCP payloads rejected by the plaintext filter.
    pub rejected_payloads: usize,
    /// Truncated trailing data; parsing stops at the first truncated record.
    pub warnings: usize,
}

/// HTTP-looking prefix, or at least 90% printable (tab/CR/LF count as printable).
pub fn is_plaintext(payload: &[u8]) -> bool {
    if payload.is_empty() {
        return false;
    }
    if HTTP_PREFIXES.iter().any(|p| payload.starts_with(p)) {
        return true;
    }
    let printable = payload
        .iter()
        .filter(|&&b| (0x20..=0x7e).contains(&b) || matches!(b, b'\t' | b'\r' | b'\n'))
        .count();
    printable as f64 >= PLAINTEXT_MIN_FRACTION * payload.len() as f64
}

#[derive(Clone, Copy)]
enum Endian {
    Little,
    Big,
}

impl Endian {
    fn u32(self, b: &[u8]) -> u32 {
        let a = [b[0], b[1], b[2], b[3]];
        match self {
            Endian::Little => u32::from_le_bytes(a),
            Endian::Big => u32::from_be_bytes(a),
        }
    }
}

/// Parses a classic pcap capture and emits one benign-labeled command per
/// plaintext TCP payload. Relabel the result if the capture is malicious.
pub fn extract_pcap_payloads(capture: &[u8], source_id: &str) -> Result<PcapExtraction> {
    if capture.len() < GLOBAL_HEADER_LEN {
        return Err(Error::Format(format!("{source_id}: pcap global header truncated")));
    }
    let endian = match capture[..4] {
        [0xd4, 0xc3, 0xb2, 0xa1] => Endian::Little,
        [0xa1, 0xb2, 0xc3, 0xd4] => Endian::Big,
        _ => {
            return Err(Error::Format(format!(
                "{source_id}: bad pcap magic {:02x?}",
                &capture[..4]
            )))
        }
    };
    let linktype = endian.u32(&capture[20..24]);

    let mut out = PcapExtraction::default();
    let mut pos = GLOBAL_HEADER_LEN;
    while pos < capture.len() {
        if capture.len() - pos < RECORD_HEADER_LEN {
            out.warnings += 1;
            break;
        }
        let incl_len = endian.u32(&capture[pos + 8..pos + 12]) as usize;
        let data_start = pos + RECORD_HEADER_LEN;
        if capture.len() - data_start < incl_len {
            out.warnings += 1;
            break;
        }
        let frame = &capture[data_start..data_start + incl_len];
        pos = data_start + incl_len;
        out.records += 1;

        if linktype != LINKTYPE_ETHERNET {
            out.skipped_linktype += 1;
            continue;
        }
        match tcp_payload(frame) {
            None => out.skipped_packets += 1,
            Some([]) => {}
            Some(payload) if is_plaintext(payload) => {
                out.commands
                    .push(Command::new(payload, Label::Benign, source_id, SourceKind::PcapPayload));
            }
            Some(_) => out.rejected_payloads += 1,
        }
    }
    Ok(out)
}

/// Ethernet -> IPv4 -> TCP; `None` for anything else.
fn tcp_payload(frame: &[u8]) -> Option<&[u8]> {
    let mut off = 12;
    let mut ethertype = u16::from_be_bytes([*frame.get(off)?, *frame.get(off + 1)?]);
    off += 2;
    if ethertype == ETHERTYPE_VLAN {
        ethertype = u16::from_be_bytes([*frame.get(off + 2)?, *frame.get(off + 3)?]);
        off += 4;
    }
    if ethertype != ETHERTYPE_IPV4 {
        return None;
    }
    let ip = frame.get(off..)?;
    if ip.len() < 20 || ip[0] >> 4 != 4 {
        return None;
    }
    let ihl = usize::from(ip[0] & 0x0f) * 4;
    let total_len = usize::from(u16::from_be_bytes([ip[2], ip[3]]));
    let frag_offset = u16::from_be_bytes([ip[6], ip[7]]) & 0x1fff;
    if ihl < 20 || total_len < ihl || frag_offset != 0 || ip[9] != IPPROTO_TCP {
        return None;
    }
    // total_len bounds the datagram; anything past it is link-layer padding.
    let ip = ip.get(..total_len.min(ip.len()))?;
    let tcp = ip.get(ihl..)?;
    if tcp.len() < 20 {
        return None;
    }
    let data_off = usize::from(tcp[12] >> 4) * 4;
    if data_off < 20 {
        return None;
    }
    tcp.get(data_off..)
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;

    /// Builds an Ethernet/IPv4/TCP frame around `payload`.
    pub(crate) fn tcp_frame(payload: &[u8]) -> Vec<u8> {
        let mut f = vec![0u8; 12];
        f.extend_from_slice(&ETHERTYPE_IPV4.to_be_bytes());
        let total = 20 + 20 + payload.len();
        let mut ip = vec![0x45, 0, 0, 0, 0, 1, 0x40, 0, 64, IPPROTO_TCP, 0, 0, 10, 0, 0, 1, 10, 0, 0, 2];
        ip[2..4].copy_from_slice(&(total as u16).to_be_bytes());
        f.extend_from_slice(&ip);
        let mut tcp = vec![0u8; 20];
        tcp[0..2].copy_from_slice(&40000u16.to_be_bytes());
        tcp[2..4].copy_from_slice(&80u16.to_be_bytes());
        tcp[12] = 5 << 4;
        tcp[13] = 0x18;
        f.extend_from_slice(&tcp);
        f.extend_from_slice(payload);
        f
    }

    pub(crate) fn capture(little: bool, linktype: u32, frames: &[Vec<u8>]) -> Vec<u8> {
        let w = |v: u32| if little { v.to_le_bytes() } else { v.to_be_bytes() };
        let w16 = |v: u16| if little { v.to_le_bytes() } else { v.to_be_bytes() };
        let mut c = Vec::new();
        c.extend_from_slice(&w(0xa1b2c3d4));
        c.extend_from_slice(&w16(2));
        c.extend_from_slice(&w16(4));
        c.extend_from_slice(&w(0));
        c.extend_from_slice(&w(0));
        c.extend_from_slice(&w(65535));
        c.extend_from_slice(&w(linktype));
        for (i, f) in frames.iter().enumerate() {
            c.extend_from_slice(&w(1_600_000_000 + i as u32));
            c.extend_from_slice(&w(0));
            c.extend_from_slice(&w(f.len() as u32));
            c.extend_from_slice(&w(f.len() as u32));
            c.extend_from_slice(f);
        }
        c
    }

    const GET: &[u8] = b"GET /favicon.ico HTTP/1.1\r\nConnection: close\r\nHost: 192.168.2.1\r\n\r\n";

    #[test]
    fn single_http_get() {
        for little in [true, false] {
            let cap = capture(little, 1, &[tcp_frame(GET)]);
            let out = extract_pcap_payloads(&cap, "cap").unwrap();
            assert_eq!(out.commands.len(), 1);
            assert_eq!(out.commands[0].text, GET);
            assert_eq!(out.commands[0].label, Label::Benign);
            assert_eq!(out.commands[0].source_kind, SourceKind::PcapPayload);
        }
    }

    #[test]
    fn tls_record_rejected() {
        // 0x17 0x03 0x03 header, then 40% printable body
        let mut tls = vec![0x17, 0x03, 0x03, 0x00, 0x2b];
        for i in 0..45u8 {
            tls.push(if i % 5 < 2 { b'a' } else { 0x80 | i });
        }
        assert!(!is_plaintext(&tls));
        let out = extract_pcap_payloads(&capture(true, 1, &[tcp_frame(&tls)]), "cap").unwrap();
        assert!(out.commands.is_empty());
        assert_eq!(out.rejected_payloads, 1);
    }

    #[test]
    fn header_only_capture() {
        let out = extract_pcap_payloads(&capture(true, 1, &[]), "cap").unwrap();
        assert!(out.commands.is_empty());
        assert_eq!(out.records, 0);
    }

    #[test]
    fn bad_magic_is_format_error() {
        let mut cap = capture(true, 1, &[]);
        cap[0] = 0x0a;
        assert!(matches!(extract_pcap_payloads(&cap, "cap"), Err(Error::Format(_))));
        assert!(extract_pcap_payloads(&cap[..10], "cap").is_err());
    }

    #[test]
    fn truncated_record_keeps_partial_results() {
        let mut cap = capture(true, 1, &[tcp_frame(GET), tcp_frame(b"POST /a HTTP/1.1\r\n")]);
        cap.truncate(cap.len() - 5);
        let out = extract_pcap_payloads(&cap, "cap").unwrap();
        assert_eq!(out.commands.len(), 1);
        assert_eq!(out.warnings, 1);
    }

    #[test]
    fn non_ethernet_linktype_skipped() {
        let out = extract_pcap_payloads(&capture(true, 101, &[tcp_frame(GET)]), "cap").unwrap();
        assert!(out.commands.is_empty());
        assert_eq!(out.skipped_linktype, 1);
    }

    #[test]
    fn ethernet_padding_is_not_payload() {
        let mut f = tcp_frame(b"");
        f.extend_from_slice(&[0u8; 6]);
        let out = extract_pcap_payloads(&capture(true, 1, &[f]), "cap").unwrap();
        assert!(out.commands.is_empty());
        assert_eq!(out.rejected_payloads, 0);
    }

    #[test]
    fn plaintext_threshold() {
        let mut p = vec![b'a'; 9];
        p.push(0xff);
        assert!(is_plaintext(&p));
        p.push(0xff);
        assert!(!is_plaintext(&p));
    }
}
