//! `HOMTAG01` binary tag files.
//!
//! Layout, all integers little-endian:
//!
//! ```text
//! header (64 bytes)
//!   0..8    magic "HOMTAG01"
//!   8..12   format version, u32
//!   12..16  header length, u32 (64)
//!   16..24  tick length in femtoseconds, u64
//!   24..32  record count, u64
//!   32..40  RNG seed, u64
//!   40..48  trigger period in ticks, u64
//!   48..56  run duration in ticks, u64
//!   56..64  zero
//! records (12 bytes each)
//!   0..8    time in ticks, u64
//!   8       channel code, u8
//!   9..12   zero
//! ```

use std::fs::File;
use std::io::{BufReader, BufWriter, ErrorKind, Read, Write};
use std::path::Path;

use crate::tags::{Channel, StreamHeader, TagRecord, TagStream, FORMAT_VERSION};
use crate::{Error, Result};

pub const MAGIC: &[u8; 8] = b"HOMTAG01";
pub const HEADER_LEN: usize = 64;
pub const RECORD_LEN: usize = 12;

pub fn write_tags<W: Write>(stream: &TagStream, mut out: W) -> Result<()> {
    let h = &stream.header;
    let mut header = [0u8; HEADER_LEN];
    header[0..8].copy_from_slice(MAGIC);
    header[8..12].copy_from_slice(&h.version.to_le_bytes());
    header[12..16].copy_from_slice(&(HEADER_LEN as u32).to_le_bytes());
    header[16..24].copy_from_slice(&h.tick_fs.to_le_bytes());
    header[24..32].copy_from_slice(&(stream.records.len() as u64).to_le_bytes());
    header[32..40].copy_from_slice(&h.seed.to_le_bytes());
    header[40..48].copy_from_slice(&h.period_ticks.to_le_bytes());
    header[48..56].copy_from_slice(&h.duration_ticks.to_le_bytes());
    out.write_all(&header)?;

    let mut rec = [0u8; RECORD_LEN];
    for r in &stream.records {
        rec[0..8].copy_from_slice(&r.time.to_le_bytes());
        rec[8] = r.channel.code();
        out.write_all(&rec)?;
    }
    out.flush()?;
    Ok(())
}

/// Reads and validates a whole tag file.
pub fn read_tags<R: Read>(mut input: R) -> Result<TagStream> {
    let mut header = [0u8; HEADER_LEN];
    read_exact_at(&mut input, &mut header, 0, "header")?;
    if &header[0..8] != MAGIC {
        return Err(format_err(0, "bad magic, not a HOMTAG01 file"));
    }
    let version = u32::from_le_bytes(header[8..12].try_into().unwrap());
    if version != FORMAT_VERSION {
        return Err(format_err(8, format!("unsupported format version {version}")));
    }
    let header_len = u32::from_le_bytes(header[12..16].try_into().unwrap());
    if header_len as usize != HEADER_LEN {
        return Err(format_err(12, format!("header length {header_len}, expected 64")));
    }
    let word = |at: usize| u64::from_le_bytes(header[at..at + 8].try_into().unwrap());
    let tick_fs = word(16);
    if tick_fs == 0 {
        return Err(format_err(16, "tick length is zero"));
    }
    let count = word(24);
    if header[56..64].iter().any(|&b| b != 0) {
        return Err(format_err(56, "reserved header bytes are not zero"));
    }
    let head = StreamHeader {
        version,
        tick_fs,
        seed: word(32),
        period_ticks: word(40),
        duration_ticks: word(48),
    };

    let mut records = Vec::with_capacity(count.min(1 << 26) as usize);
    let mut rec = [0u8; RECORD_LEN];
    let mut last = 0u64;
    for i in 0..count {
        let offset = HEADER_LEN as u64 + i * RECORD_LEN as u64;
        read_exact_at(&mut input, &mut rec, offset, "record")?;
        let time = u64::from_le_bytes(rec[0..8].try_into().unwrap());
        let channel = Channel::from_code(rec[8])
            .ok_or_else(|| format_err(offset + 8, format!("unknown channel code {}", rec[8])))?;
        if rec[9..12].iter().any(|&b| b != 0) {
            return Err(format_err(offset + 9, "record padding is not zero"));
        }
        if time < last {
            return Err(format_err(
                offset,
                format!("time {time} precedes previous record at {last}"),
            ));
        }
        last = time;
        records.push(TagRecord { time, channel });
    }
    let end = HEADER_LEN as u64 + count * RECORD_LEN as u64;
    let mut probe = [0u8; 1];
    if input.read(&mut probe)? != 0 {
        return Err(format_err(end, "trailing bytes after the last record"));
    }
    Ok(TagStream::new(head, records))
}

pub fn write_tag_file(stream: &TagStream, path: impl AsRef<Path>) -> Result<()> {
    write_tags(stream, BufWriter::new(File::create(path)?))
}

pub fn read_tag_file(path: impl AsRef<Path>) -> Result<TagStream> {
    read_tags(BufReader::new(File::open(path)?))
}

fn read_exact_at<R: Read>(input: &mut R, buf: &mut [u8], offset: u64, what: &str) -> Result<()> {
    input.read_exact(buf).map_err(|e| match e.kind() {
        ErrorKind::UnexpectedEof => format_err(offset, format!("truncated {what}")),
        _ => Error::Io(e),
    })
}

fn format_err(offset: u64, reason: impl Into<String>) -> Error {
    Error::Format {
        offset,
        reason: reason.into(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> TagStream {
        TagStream::new(
            StreamHeader {
                version: FORMAT_VERSION,
                tick_fs: 78_125,
                seed: 42,
                period_ticks: 36,
                duration_ticks: 100,
            },
            vec![
                TagRecord::new(0, Channel::Trigger),
                TagRecord::new(3, Channel::Det3),
                TagRecord::new(3, Channel::Det4),
                TagRecord::new(u64::MAX - 1, Channel::Det4),
            ],
        )
    }

    fn bytes(s: &TagStream) -> Vec<u8> {
        let mut out = Vec::new();
        write_tags(s, &mut out).unwrap();
        out
    }

    #[test]
    fn layout_is_fixed() {
        let b = bytes(&sample());
        assert_eq!(b.len(), 64 + 4 * 12);
        assert_eq!(&b[0..8], b"HOMTAG01");
        assert_eq!(&b[8..12], &[1, 0, 0, 0]);
        assert_eq!(&b[16..24], &78_125u64.to_le_bytes());
        assert_eq!(&b[24..32], &4u64.to_le_bytes());
        // Second record: tick 3, DET3.
        assert_eq!(&b[76..88], &[3, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0]);
        assert_eq!(b[64 + 8], 2);
    }

    #[test]
    fn roundtrip() {
        let s = sample();
        assert_eq!(read_tags(&bytes(&s)[..]).unwrap(), s);
    }

    #[test]
    fn empty_stream_roundtrip() {
        let mut s = sample();
        s.records.clear();
        assert_eq!(read_tags(&bytes(&s)[..]).unwrap(), s);
    }

    fn offset_of(err: Error) -> u64 {
        match err {
            Error::Format { offset, .. } => offset,
            other => panic!("expected format error, got {other:?}"),
        }
    }

    #[test]
    fn corrupt_inputs_report_offsets() {
        let good = bytes(&sample());

        let mut b = good.clone();
        b[0] = b'X';
        assert_eq!(offset_of(read_tags(&b[..]).unwrap_err()), 0);

        let mut b = good.clone();
        b[64 + 12 + 8] = 7;
        assert_eq!(offset_of(read_tags(&b[..]).unwrap_err()), 84);

        let mut b = good.clone();
        b[64 + 10] = 1;
        assert_eq!(offset_of(read_tags(&b[..]).unwrap_err()), 73);

        let b = &good[..good.len() - 5];
        assert_eq!(offset_of(read_tags(b).unwrap_err()), 64 + 36);

        let b = &good[..30];
        assert_eq!(offset_of(read_tags(b).unwrap_err()), 0);

        let mut b = good.clone();
        b.push(0);
        assert_eq!(offset_of(read_tags(&b[..]).unwrap_err()), 112);

        // Second record earlier than the first.
        let mut b = good.clone();
        b[64..72].copy_from_slice(&10u64.to_le_bytes());
        assert_eq!(offset_of(read_tags(&b[..]).unwrap_err()), 76);
    }

    #[test]
    fn file_roundtrip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("t.homtag");
        write_tag_file(&sample(), &path).unwrap();
        assert_eq!(read_tag_file(&path).unwrap(), sample());
    }
}
