//! Byte-exact file format for transform part-files.
//!
//! Layout (all integers little-endian):
//!
//! ```text
//! offset  size  field
//! 0       4     magic "AOMP"
//! 4       4     p: u32          prime modulus
//! 8       4     s: u32          message block count (even, >= 2)
//! 12      8     orig_len: u64   payload bytes before padding
//! 20      8     pkt_id: u64     message identifier
//! 28      1     part: u8        1 or 2
//! 29      ...   packed symbols
//! ```
//!
//! Symbols are packed most-significant-bit first at `element_bits` each,
//! with symbol n stored as the bit pattern 0 (the same digit convention the
//! chunker uses). Part 1 carries s/2 blocks, part 2 carries s/2+1. The tail
//! is zero-padded to a byte boundary; files must match the implied length
//! exactly, so truncation or trailing garbage is always detected.

use crate::aont::PacketPayload;
use crate::quasigroup::AontParams;
use thiserror::Error;

/// File magic, "AOMP".
pub const MAGIC: [u8; 4] = *b"AOMP";
const HEADER_LEN: usize = 29;

/// Errors from part-file decoding.
#[derive(Debug, Error, PartialEq, Eq)]
pub enum CodecError {
    /// Not a part file (bad magic) or shorter than the header.
    #[error("not a part file: bad magic or truncated header")]
    BadHeader,
    /// Header names a prime this build does not support.
    #[error("unsupported prime {0} in header")]
    UnsupportedPrime(u32),
    /// Part tag outside {1, 2}.
    #[error("invalid part tag {0}: must be 1 or 2")]
    BadPart(u8),
    /// Block count not even or zero.
    #[error("invalid block count s={0}: must be even and >= 2")]
    BadBlockCount(u32),
    /// Declared payload length cannot fit in s blocks.
    #[error("declared payload length {orig_len} exceeds capacity {cap} of s={s} blocks")]
    BadOrigLen { orig_len: u64, cap: u64, s: u32 },
    /// File length differs from what the header implies.
    #[error("file length {got} does not match expected {want} bytes")]
    LengthMismatch { want: usize, got: usize },
    /// Nonzero bits in the final padding.
    #[error("nonzero padding bits at end of file")]
    DirtyPadding,
}

fn part_block_count(s: u32, part: u8) -> u32 {
    if part == 1 {
        s / 2
    } else {
        s / 2 + 1
    }
}

/// Serializes a packet payload to the documented format.
pub fn encode_part(payload: &PacketPayload) -> Vec<u8> {
    let pr = payload.params;
    let eb = pr.element_bits as usize;
    let n_symbols = payload.blocks.len() * pr.n as usize;
    let body_len = (n_symbols * eb).div_ceil(8);
    let mut out = Vec::with_capacity(HEADER_LEN + body_len);
    out.extend_from_slice(&MAGIC);
    out.extend_from_slice(&pr.p.to_le_bytes());
    out.extend_from_slice(&(payload.s as u32).to_le_bytes());
    out.extend_from_slice(&payload.orig_len_bytes.to_le_bytes());
    out.extend_from_slice(&payload.pkt_id.to_le_bytes());
    out.push(payload.part);
    out.resize(HEADER_LEN + body_len, 0);
    let body = &mut out[HEADER_LEN..];
    let mut bit = 0usize;
    for block in &payload.blocks {
        for &sym in block {
            let chunk = if sym == pr.n { 0 } else { sym };
            for k in 0..eb {
                if (chunk >> (eb - 1 - k)) & 1 != 0 {
                    body[bit / 8] |= 1 << (7 - bit % 8);
                }
                bit += 1;
            }
        }
    }
    out
}

/// Parses and validates a part file, byte-exactly.
pub fn decode_part(data: &[u8]) -> Result<PacketPayload, CodecError> {
    if data.len() < HEADER_LEN || data[..4] != MAGIC {
        return Err(CodecError::BadHeader);
    }
    let le32 = |off: usize| u32::from_le_bytes(data[off..off + 4].try_into().unwrap());
    let le64 = |off: usize| u64::from_le_bytes(data[off..off + 8].try_into().unwrap());
    let p = le32(4);
    let s = le32(8);
    let orig_len = le64(12);
    let pkt_id = le64(20);
    let part = data[28];

    let params = AontParams::new(p).map_err(|_| CodecError::UnsupportedPrime(p))?;
    if part != 1 && part != 2 {
        return Err(CodecError::BadPart(part));
    }
    if s < 2 || s % 2 != 0 {
        return Err(CodecError::BadBlockCount(s));
    }
    let cap = s as u64 * params.n as u64 * params.element_bits as u64 / 8;
    if orig_len > cap {
        return Err(CodecError::BadOrigLen {
            orig_len,
            cap,
            s,
        });
    }

    let eb = params.element_bits as usize;
    let blocks_here = part_block_count(s, part) as usize;
    let n_symbols = blocks_here * params.n as usize;
    let want = HEADER_LEN + (n_symbols * eb).div_ceil(8);
    if data.len() != want {
        return Err(CodecError::LengthMismatch {
            want,
            got: data.len(),
        });
    }

    let body = &data[HEADER_LEN..];
    let mut blocks = Vec::with_capacity(blocks_here);
    let mut bit = 0usize;
    for _ in 0..blocks_here {
        let mut block = Vec::with_capacity(params.n as usize);
        for _ in 0..params.n {
            let mut chunk = 0u32;
            for _ in 0..eb {
                let b = (body[bit / 8] >> (7 - bit % 8)) & 1;
                chunk = (chunk << 1) | b as u32;
                bit += 1;
            }
            block.push(if chunk == 0 { params.n } else { chunk });
        }
        blocks.push(block);
    }
    // Canonical files zero-pad the final byte.
    while bit < body.len() * 8 {
        if (body[bit / 8] >> (7 - bit % 8)) & 1 != 0 {
            return Err(CodecError::DirtyPadding);
        }
        bit += 1;
    }

    Ok(PacketPayload {
        params,
        part,
        pkt_id,
        s: s as usize,
        orig_len_bytes: orig_len,
        blocks,
    })
}
