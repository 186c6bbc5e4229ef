//! Per-generation commitments: one proof for the prefill activations and
//! one per `chunk_tokens` decoded tokens, plus the `TPLC` container file.
//!
//! Container layout (all integers little-endian):
//!
//! ```text
//! "TPLC"  version:u8  profile:u8  k:u16  chunk_tokens:u16  proof_count:u32
//! [final_k:u16]                       -- version 2 only
//! prefill proof, decode proofs...     -- back to back
//! metadata_len:u32  metadata:UTF-8 JSON object of strings
//! ```
//!
//! Every proof holds `k` coefficients except, in version 2, the last decode
//! proof which holds `final_k`. Version 2 is only written when a short final
//! chunk had fewer than `k` elements.

use std::collections::BTreeMap;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::float_codec::Precision;
use crate::proof::{generate_proof, validate_proof, CommitConfig, Profile, Proof, Thresholds, ValidationReport};
use crate::topk::ActivationChunk;

pub const CONTAINER_MAGIC: &[u8; 4] = b"TPLC";
pub const CONTAINER_VERSION: u8 = 0x01;
const CONTAINER_VERSION_SHORT_TAIL: u8 = 0x02;

/// Metadata key holding the number of prefill tokens.
pub const META_PREFILL_TOKENS: &str = "prefill_tokens";
/// Metadata key holding the number of decoded tokens.
pub const META_DECODE_TOKENS: &str = "decode_tokens";

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GenerationCommitment {
    pub config: CommitConfig,
    pub prefill_proof: Proof,
    pub decode_proofs: Vec<Proof>,
    pub metadata: BTreeMap<String, String>,
}

impl GenerationCommitment {
    pub fn proof_count(&self) -> usize {
        1 + self.decode_proofs.len()
    }

    pub fn proofs(&self) -> impl Iterator<Item = &Proof> {
        std::iter::once(&self.prefill_proof).chain(&self.decode_proofs)
    }

    /// Bytes of all proofs, excluding container framing.
    pub fn proof_bytes(&self) -> usize {
        self.proofs().map(Proof::len).sum()
    }

    pub fn decode_proof_bytes(&self) -> usize {
        self.decode_proofs.iter().map(Proof::len).sum()
    }

    pub fn decode_tokens(&self) -> Option<usize> {
        self.metadata.get(META_DECODE_TOKENS)?.parse().ok()
    }

    pub fn prefill_tokens(&self) -> Option<usize> {
        self.metadata.get(META_PREFILL_TOKENS)?.parse().ok()
    }

    /// Decode proof bytes per decoded token.
    pub fn amortized_bytes_per_token(&self) -> Option<f64> {
        let tokens = self.decode_tokens()?;
        (tokens > 0).then(|| self.decode_proof_bytes() as f64 / tokens as f64)
    }

    pub fn to_bytes(&self) -> Result<Vec<u8>> {
        let profile = self.config.profile();
        let k = self.config.k();
        let k16 = u16::try_from(k).map_err(|_| Error::InvalidConfig(format!("k = {k} exceeds u16")))?;
        let chunk_tokens = u16::try_from(self.config.chunk_tokens())
            .map_err(|_| Error::InvalidConfig("chunk_tokens exceeds u16".into()))?;
        let count = u32::try_from(self.proof_count())
            .map_err(|_| Error::InvalidConfig("too many proofs".into()))?;

        let full_len = profile.proof_len(k);
        let proofs: Vec<&Proof> = self.proofs().collect();
        let (last, body) = proofs.split_last().expect("prefill proof always present");
        if body.iter().any(|p| p.len() != full_len) {
            return Err(Error::InvalidConfig(format!(
                "only the final decode proof may differ from {full_len} bytes"
            )));
        }
        let short_tail = last.len() != full_len;
        let final_k = (last.len() / profile.width()).saturating_sub(1);
        if short_tail
            && (self.decode_proofs.is_empty()
                || last.len() % profile.width() != 0
                || final_k == 0
                || final_k > k)
        {
            return Err(Error::InvalidConfig(format!(
                "final proof of {} bytes does not match k = {k}",
                last.len()
            )));
        }

        let meta = serde_json::to_vec(&self.metadata).expect("string map serializes");
        let mut out = Vec::with_capacity(20 + self.proof_bytes() + meta.len());
        out.extend_from_slice(CONTAINER_MAGIC);
        out.push(if short_tail { CONTAINER_VERSION_SHORT_TAIL } else { CONTAINER_VERSION });
        out.push(profile.byte());
        out.extend_from_slice(&k16.to_le_bytes());
        out.extend_from_slice(&chunk_tokens.to_le_bytes());
        out.extend_from_slice(&count.to_le_bytes());
        if short_tail {
            out.extend_from_slice(&(final_k as u16).to_le_bytes());
        }
        for proof in self.proofs() {
            out.extend_from_slice(proof.as_bytes());
        }
        out.extend_from_slice(&(meta.len() as u32).to_le_bytes());
        out.extend_from_slice(&meta);
        Ok(out)
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let mut r = Reader::new(bytes, "commitment");
        if r.take(4)? != CONTAINER_MAGIC {
            return Err(Error::format("commitment", "bad magic"));
        }
        let version = r.u8()?;
        if version != CONTAINER_VERSION && version != CONTAINER_VERSION_SHORT_TAIL {
            return Err(Error::format("commitment", format!("unsupported version {version}")));
        }
        let profile = Profile::from_byte(r.u8()?)
            .ok_or_else(|| Error::format("commitment", "unknown profile"))?;
        let k = r.u16()? as usize;
        let chunk_tokens = r.u16()? as usize;
        let count = r.u32()? as usize;
        if count == 0 {
            return Err(Error::format("commitment", "no prefill proof"));
        }
        let final_k = if version == CONTAINER_VERSION_SHORT_TAIL {
            let fk = r.u16()? as usize;
            if count < 2 || fk == 0 || fk > k {
                return Err(Error::format("commitment", "invalid final k"));
            }
            fk
        } else {
            k
        };
        let config = CommitConfig::new(k, chunk_tokens, profile.precision())
            .map_err(|e| Error::format("commitment", e.to_string()))?;

        let mut proofs = Vec::with_capacity(count);
        for i in 0..count {
            let proof_k = if i + 1 == count { final_k } else { k };
            proofs.push(Proof::from_bytes(r.take(profile.proof_len(proof_k))?.to_vec()));
        }
        let meta_len = r.u32()? as usize;
        let meta = r.take(meta_len)?;
        if !r.is_empty() {
            return Err(Error::format("commitment", "trailing bytes"));
        }
        let meta = std::str::from_utf8(meta).map_err(|_| Error::format("commitment", "metadata is not UTF-8"))?;
        let metadata: BTreeMap<String, String> =
            serde_json::from_str(meta).map_err(|e| Error::format("commitment", format!("metadata: {e}")))?;

        let mut proofs = proofs.into_iter();
        let prefill_proof = proofs.next().expect("count >= 1");
        Ok(GenerationCommitment {
            config,
            prefill_proof,
            decode_proofs: proofs.collect(),
            metadata,
        })
    }
}

/// Bounds-checked little-endian cursor.
pub(crate) struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
    format: &'static str,
}

impl<'a> Reader<'a> {
    pub(crate) fn new(bytes: &'a [u8], format: &'static str) -> Self {
        Reader { bytes, pos: 0, format }
    }

    pub(crate) fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        let end = self.pos.checked_add(n).filter(|&e| e <= self.bytes.len()).ok_or_else(|| {
            Error::format(self.format, format!("truncated at byte {} (wanted {n} more)", self.pos))
        })?;
        let out = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(out)
    }

    pub(crate) fn u8(&mut self) -> Result<u8> {
        Ok(self.take(1)?[0])
    }

    pub(crate) fn u16(&mut self) -> Result<u16> {
        Ok(u16::from_le_bytes(self.take(2)?.try_into().unwrap()))
    }

    pub(crate) fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    pub(crate) fn rest(&mut self) -> &'a [u8] {
        let out = &self.bytes[self.pos..];
        self.pos = self.bytes.len();
        out
    }

    pub(crate) fn is_empty(&self) -> bool {
        self.pos == self.bytes.len()
    }
}

/// Commits to a prefill chunk and a sequence of decode chunks.
///
/// Every decode chunk holds exactly `chunk_tokens` tokens except the last,
/// which may be shorter; if it has fewer than `k` elements its proof uses
/// `k` equal to its element count.
pub fn commit_generation(
    prefill: &ActivationChunk,
    decode_chunks: &[ActivationChunk],
    config: &CommitConfig,
) -> Result<GenerationCommitment> {
    let last = decode_chunks.len().saturating_sub(1);
    for (i, chunk) in decode_chunks.iter().enumerate() {
        let tokens = chunk.token_count();
        if tokens > config.chunk_tokens() || (i < last && tokens != config.chunk_tokens()) {
            return Err(Error::InvalidConfig(format!(
                "decode chunk {i} has {tokens} tokens; expected {}",
                config.chunk_tokens()
            ))
            .in_chunk(i + 1));
        }
    }

    let prefill_proof = generate_proof(prefill, config).map_err(|e| e.in_chunk(0))?;
    let decode_proofs = decode_chunks
        .par_iter()
        .enumerate()
        .map(|(i, chunk)| {
            let cfg = if i == last && chunk.len() < config.k() {
                CommitConfig::new(chunk.len(), config.chunk_tokens(), config.precision())?
            } else {
                *config
            };
            generate_proof(chunk, &cfg).map_err(|e| e.in_chunk(i + 1))
        })
        .collect::<Result<Vec<_>>>()?;

    let mut metadata = BTreeMap::new();
    metadata.insert(META_PREFILL_TOKENS.to_string(), prefill.token_count().to_string());
    let decode_tokens: usize = decode_chunks.iter().map(ActivationChunk::token_count).sum();
    metadata.insert(META_DECODE_TOKENS.to_string(), decode_tokens.to_string());
    Ok(GenerationCommitment {
        config: *config,
        prefill_proof,
        decode_proofs,
        metadata,
    })
}

/// Per-chunk reports and the conjunction of their verdicts.
#[derive(Debug, Clone, PartialEq)]
pub struct GenerationReport {
    pub prefill: ValidationReport,
    pub decode: Vec<ValidationReport>,
    pub accepted: bool,
}

impl GenerationReport {
    pub fn reports(&self) -> impl Iterator<Item = &ValidationReport> {
        std::iter::once(&self.prefill).chain(&self.decode)
    }
}

/// Validates recomputed activations against a commitment. The validator's
/// precision is taken from the supplied chunks.
pub fn validate_generation(
    prefill: &ActivationChunk,
    decode_chunks: &[ActivationChunk],
    commitment: &GenerationCommitment,
    thresholds: &Thresholds,
) -> Result<GenerationReport> {
    if decode_chunks.len() != commitment.decode_proofs.len() {
        return Err(Error::ProofCountMismatch {
            proofs: commitment.decode_proofs.len(),
            chunks: decode_chunks.len(),
        });
    }
    let committed = commitment.config.precision();
    let validator: Precision = prefill.precision();
    let check = |chunk: &ActivationChunk, proof: &Proof| {
        validate_proof(chunk, proof, thresholds, committed, validator)
    };
    let prefill_report = check(prefill, &commitment.prefill_proof).map_err(|e| e.in_chunk(0))?;
    let decode = decode_chunks
        .par_iter()
        .zip(commitment.decode_proofs.par_iter())
        .enumerate()
        .map(|(i, (chunk, proof))| check(chunk, proof).map_err(|e| e.in_chunk(i + 1)))
        .collect::<Result<Vec<_>>>()?;
    let accepted = prefill_report.accepted && decode.iter().all(|r| r.accepted);
    Ok(GenerationReport {
        prefill: prefill_report,
        decode,
        accepted,
    })
}

/// Splits `tokens` rows starting at `start` into consecutive chunks of
/// `chunk_tokens` (the last may be shorter).
pub fn split_decode(
    activations: &ActivationChunk,
    start: usize,
    chunk_tokens: usize,
) -> Result<Vec<ActivationChunk>> {
    if chunk_tokens == 0 {
        return Err(Error::InvalidConfig("chunk_tokens must be at least 1".into()));
    }
    (start..activations.token_count())
        .step_by(chunk_tokens)
        .map(|s| activations.tokens(s, (s + chunk_tokens).min(activations.token_count())))
        .collect()
}
