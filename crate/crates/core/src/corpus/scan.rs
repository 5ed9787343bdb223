use std::io::Read;

use crate::{Error, Result};

/// Shortest command length seen in malware samples.
pub const DEFAULT_MIN_RUN: usize = 5;

/// A maximal run of printable bytes inside a larger buffer.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StringRun {
    pub bytes: Vec<u8>,
    /// Byte offset of the first byte in the scanned stream.
    pub offset: usize,
}

#[inline]
fn printable(b: u8) -> bool {
    (0x20..=0x7e).contains(&b) || b == b'\t'
}

/// Returns every maximal printable run of at least `min_len` bytes, in offset order.
///
/// Printable means ASCII 0x20..=0x7E or tab, the same class `strings(1)` uses.
pub fn scan_strings(data: &[u8], min_len: usize) -> Vec<StringRun> {
    let min_len = min_len.max(1);
    let mut runs = Vec::new();
    let mut start = None;
    for (i, &b) in data.iter().enumerate() {
        match (printable(b), start) {
            (true, None) => start = Some(i),
            (false, Some(s)) => {
                if i - s >= min_len {
                    runs.push(StringRun {
                        bytes: data[s..i].to_vec(),
                        offset: s,
                    });
                }
                start = None;
            }
            _ => {}
        }
    }
    if let Some(s) = start {
        if data.len() - s >= min_len {
            runs.push(StringRun {
                bytes: data[s..].to_vec(),
                offset: s,
            });
        }
    }
    runs
}

/// Reads the whole stream and scans it; I/O failures carry `source_id`.
pub fn scan_reader<R: Read>(mut reader: R, source_id: &str, min_len: usize) -> Result<Vec<StringRun>> {
    let mut data = Vec::new();
    reader
        .read_to_end(&mut data)
        .map_err(|e| Error::io(source_id, e))?;
    Ok(scan_strings(&data, min_len))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn single_run_reaches_threshold() {
        let runs = scan_strings(b"A\x00wget http\x00zz", 4);
        assert_eq!(
            runs,
            vec![StringRun {
                bytes: b"wget http".to_vec(),
                offset: 2
            }]
        );
    }

    #[test]
    fn all_zero_yields_nothing() {
        assert!(scan_strings(&[0u8; 64], 1).is_empty());
    }

    #[test]
    fn threshold_boundary() {
        let data = b"\x01GET\x02";
        assert!(scan_strings(data, 4).is_empty());
        assert_eq!(scan_strings(data, 3).len(), 1);
    }

    #[test]
    fn tab_is_printable_and_run_at_end_is_kept() {
        let runs = scan_strings(b"\xffa\tb c", 2);
        assert_eq!(runs[0].bytes, b"a\tb c");
        assert_eq!(runs[0].offset, 1);
    }

    struct Broken;
    impl Read for Broken {
        fn read(&mut self, _: &mut [u8]) -> std::io::Result<usize> {
            Err(std::io::Error::other("boom"))
        }
    }

    #[test]
    fn io_error_names_source() {
        let err = scan_reader(Broken, "sample.bin", 4).unwrap_err();
        assert!(err.to_string().contains("sample.bin"));
    }

    proptest! {
        #[test]
        fn runs_are_sorted_disjoint_and_faithful(
            data in proptest::collection::vec(any::<u8>(), 0..512),
            min_len in 1usize..8,
        ) {
            let runs = scan_strings(&data, min_len);
            let mut prev_end = 0usize;
            for (i, r) in runs.iter().enumerate() {
                prop_assert!(r.bytes.len() >= min_len);
                prop_assert!(i == 0 || r.offset > prev_end);
                prop_assert_eq!(&data[r.offset..r.offset + r.bytes.len()], &r.bytes[..]);
                prop_assert!(r.bytes.iter().all(|&b| printable(b)));
                // maximality
                prop_assert!(r.offset == 0 || !printable(data[r.offset - 1]));
                let end = r.offset + r.bytes.len();
                prop_assert!(end == data.len() || !printable(data[end]));
                prev_end = end;
            }
        }
    }
}
