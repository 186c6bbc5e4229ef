//! `TLAC` activation dump files.
//!
//! ```text
//! "TLAC"  version:u8  dtype:u8 (0 = bf16, 1 = fp32)  token_count:u32  hidden_dim:u32
//! payload: token_count * hidden_dim patterns, row-major by token, little-endian
//! ```

use std::path::Path;

use crate::commitment::Reader;
use crate::error::{Error, Result};
use crate::float_codec::Precision;
use crate::topk::ActivationChunk;

pub const DUMP_MAGIC: &[u8; 4] = b"TLAC";
pub const DUMP_VERSION: u8 = 0x01;
const HEADER_LEN: usize = 14;

fn dtype_byte(precision: Precision) -> u8 {
    match precision {
        Precision::Bf16 => 0x00,
        Precision::Fp32 => 0x01,
    }
}

pub fn encode_dump(activations: &ActivationChunk) -> Result<Vec<u8>> {
    let precision = activations.precision();
    let tokens = u32::try_from(activations.token_count())
        .map_err(|_| Error::format("activation dump", "token_count exceeds u32"))?;
    let dim = u32::try_from(activations.hidden_dim())
        .map_err(|_| Error::format("activation dump", "hidden_dim exceeds u32"))?;
    let width = precision.bytes();
    let mut out = Vec::with_capacity(HEADER_LEN + activations.len() * width);
    out.extend_from_slice(DUMP_MAGIC);
    out.push(DUMP_VERSION);
    out.push(dtype_byte(precision));
    out.extend_from_slice(&tokens.to_le_bytes());
    out.extend_from_slice(&dim.to_le_bytes());
    for &p in activations.values() {
        out.extend_from_slice(&p.to_le_bytes()[..width]);
    }
    Ok(out)
}

pub fn decode_dump(bytes: &[u8]) -> Result<ActivationChunk> {
    let mut r = Reader::new(bytes, "activation dump");
    if r.take(4)? != DUMP_MAGIC {
        return Err(Error::format("activation dump", "bad magic"));
    }
    let version = r.u8()?;
    if version != DUMP_VERSION {
        return Err(Error::format("activation dump", format!("unsupported version {version}")));
    }
    let precision = match r.u8()? {
        0x00 => Precision::Bf16,
        0x01 => Precision::Fp32,
        other => return Err(Error::format("activation dump", format!("unknown dtype {other:#04x}"))),
    };
    let tokens = r.u32()? as usize;
    let dim = r.u32()? as usize;
    let width = precision.bytes();
    let payload = r.rest();
    let expected = tokens
        .checked_mul(dim)
        .and_then(|n| n.checked_mul(width))
        .ok_or_else(|| Error::format("activation dump", "shape overflows"))?;
    if payload.len() != expected {
        return Err(Error::format(
            "activation dump",
            format!("payload is {} bytes, header implies {expected}", payload.len()),
        ));
    }
    let values = payload
        .chunks_exact(width)
        .map(|b| {
            let mut buf = [0u8; 4];
            buf[..width].copy_from_slice(b);
            u32::from_le_bytes(buf)
        })
        .collect();
    ActivationChunk::new(tokens, dim, precision, values)
}

pub fn read_dump(path: impl AsRef<Path>) -> Result<ActivationChunk> {
    decode_dump(&std::fs::read(path)?)
}

pub fn write_dump(path: impl AsRef<Path>, activations: &ActivationChunk) -> Result<()> {
    std::fs::write(path, encode_dump(activations)?)?;
    Ok(())
}
