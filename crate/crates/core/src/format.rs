//! The TTG1 binary tag format.
//!
//! ```text
//! header (16 bytes):  "TTG1" | version u16 LE | channel_count u16 LE | 8 zero bytes
//! record (16 bytes):  time_ps i64 LE | channel u16 LE | flags u16 LE | 4 zero bytes
//! ```
//!
//! Records follow the header back to back; there is no trailer. The helpers
//! here operate on byte slices so that both whole-buffer and streaming readers
//! share one decoder.

use alloc::format;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::tag::{check_next, TagStream, TimeTag, FORMAT_VERSION};

pub const MAGIC: [u8; 4] = *b"TTG1";
pub const HEADER_LEN: usize = 16;
pub const RECORD_LEN: usize = 16;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Header {
    pub version: u16,
    pub channel_count: u16,
}

pub fn encode_header(channel_count: u16) -> [u8; HEADER_LEN] {
    let mut out = [0u8; HEADER_LEN];
    out[..4].copy_from_slice(&MAGIC);
    out[4..6].copy_from_slice(&FORMAT_VERSION.to_le_bytes());
    out[6..8].copy_from_slice(&channel_count.to_le_bytes());
    out
}

pub fn decode_header(bytes: &[u8]) -> Result<Header> {
    if bytes.len() < HEADER_LEN {
        return Err(Error::Format(format!("truncated header: {} of {HEADER_LEN} bytes", bytes.len())));
    }
    if bytes[..4] != MAGIC {
        return Err(Error::Format(format!("bad magic {:02x?}", &bytes[..4])));
    }
    let version = u16::from_le_bytes([bytes[4], bytes[5]]);
    if version != FORMAT_VERSION {
        return Err(Error::Format(format!("unsupported version {version}")));
    }
    if bytes[8..HEADER_LEN].iter().any(|&b| b != 0) {
        return Err(Error::Format("reserved header bytes are not zero".into()));
    }
    Ok(Header { version, channel_count: u16::from_le_bytes([bytes[6], bytes[7]]) })
}

pub fn encode_record(tag: &TimeTag) -> [u8; RECORD_LEN] {
    let mut out = [0u8; RECORD_LEN];
    out[..8].copy_from_slice(&tag.time_ps.to_le_bytes());
    out[8..10].copy_from_slice(&tag.channel.to_le_bytes());
    out[10..12].copy_from_slice(&tag.flags.to_le_bytes());
    out
}

/// Decodes one record. `index` is only used for error reporting.
pub fn decode_record(bytes: &[u8; RECORD_LEN], index: usize) -> Result<TimeTag> {
    if bytes[12..].iter().any(|&b| b != 0) {
        return Err(Error::integrity(index, "reserved record bytes are not zero"));
    }
    let mut time = [0u8; 8];
    time.copy_from_slice(&bytes[..8]);
    Ok(TimeTag {
        time_ps: i64::from_le_bytes(time),
        channel: u16::from_le_bytes([bytes[8], bytes[9]]),
        flags: u16::from_le_bytes([bytes[10], bytes[11]]),
    })
}

/// Exact encoded size of a stream with `n` tags.
pub const fn encoded_len(n: usize) -> usize {
    HEADER_LEN + RECORD_LEN * n
}

pub fn encode(stream: &TagStream) -> Vec<u8> {
    let mut out = Vec::with_capacity(encoded_len(stream.len()));
    out.extend_from_slice(&encode_header(stream.channel_count()));
    for tag in stream {
        out.extend_from_slice(&encode_record(tag));
    }
    out
}

pub fn decode(bytes: &[u8]) -> Result<TagStream> {
    let header = decode_header(bytes)?;
    let body = &bytes[HEADER_LEN..];
    if !body.len().is_multiple_of(RECORD_LEN) {
        return Err(Error::Format(format!(
            "record section of {} bytes is not a multiple of {RECORD_LEN}",
            body.len()
        )));
    }
    let mut tags = Vec::with_capacity(body.len() / RECORD_LEN);
    for (i, chunk) in body.chunks_exact(RECORD_LEN).enumerate() {
        let record: &[u8; RECORD_LEN] = chunk.try_into().expect("chunks_exact");
        let tag = decode_record(record, i)?;
        check_next(header.channel_count, tags.last(), &tag, i)?;
        tags.push(tag);
    }
    Ok(TagStream::from_parts_unchecked(header.channel_count, tags))
}
