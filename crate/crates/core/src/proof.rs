//! Proof generation, byte encoding and validation for a single chunk.
//!
//! A proof is the modulus followed by the `k` coefficients of the
//! polynomial passing through `(index mod m, pattern mod m)` for every
//! top-k entry, all little-endian:
//!
//! ```text
//! bf16 profile: [m: u16][c0: u16][c1: u16]...[c(k-1): u16]   (2 + 2k bytes)
//! fp32 profile: [m: u32][c0: u32][c1: u32]...[c(k-1): u32]   (4 + 4k bytes)
//! ```
//!
//! A stored modulus of zero stands for `2^16` (resp. `2^32`), the one
//! in-range value that does not fit the field.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::float_codec::{align, extract_bits, Precision};
use crate::modpoly::{self, ProofPoly, MODULUS_FLOOR};
use crate::topk::{top_k, ActivationChunk};

/// Byte layout family of a proof.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Profile {
    Bf16,
    Fp32,
}

impl Profile {
    pub fn for_precision(precision: Precision) -> Self {
        match precision {
            Precision::Bf16 => Profile::Bf16,
            Precision::Fp32 => Profile::Fp32,
        }
    }

    pub fn precision(self) -> Precision {
        match self {
            Profile::Bf16 => Precision::Bf16,
            Profile::Fp32 => Precision::Fp32,
        }
    }

    /// Bytes per field.
    pub fn width(self) -> usize {
        match self {
            Profile::Bf16 => 2,
            Profile::Fp32 => 4,
        }
    }

    pub fn max_modulus(self) -> u64 {
        1u64 << (8 * self.width())
    }

    /// Largest prime the generator will try.
    pub fn prime_ceiling(self) -> u64 {
        match self {
            Profile::Bf16 => modpoly::PRIME_CEILING_16,
            Profile::Fp32 => modpoly::PRIME_CEILING_32,
        }
    }

    pub fn proof_len(self, k: usize) -> usize {
        self.width() * (k + 1)
    }

    pub fn byte(self) -> u8 {
        match self {
            Profile::Bf16 => 0x00,
            Profile::Fp32 => 0x01,
        }
    }

    pub fn from_byte(byte: u8) -> Option<Self> {
        match byte {
            0x00 => Some(Profile::Bf16),
            0x01 => Some(Profile::Fp32),
            _ => None,
        }
    }
}

/// Proof generation parameters.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct CommitConfig {
    k: usize,
    chunk_tokens: usize,
    precision: Precision,
}

impl CommitConfig {
    pub const DEFAULT_K: usize = 128;
    pub const DEFAULT_CHUNK_TOKENS: usize = 32;

    pub fn new(k: usize, chunk_tokens: usize, precision: Precision) -> Result<Self> {
        if k == 0 {
            return Err(Error::InvalidConfig("k must be at least 1".into()));
        }
        if chunk_tokens == 0 {
            return Err(Error::InvalidConfig("chunk_tokens must be at least 1".into()));
        }
        Ok(CommitConfig {
            k,
            chunk_tokens,
            precision,
        })
    }

    /// Top-128 every 32 tokens at the given precision.
    pub fn with_precision(precision: Precision) -> Self {
        CommitConfig {
            k: Self::DEFAULT_K,
            chunk_tokens: Self::DEFAULT_CHUNK_TOKENS,
            precision,
        }
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn chunk_tokens(&self) -> usize {
        self.chunk_tokens
    }

    pub fn precision(&self) -> Precision {
        self.precision
    }

    pub fn profile(&self) -> Profile {
        Profile::for_precision(self.precision)
    }
}

impl Default for CommitConfig {
    fn default() -> Self {
        Self::with_precision(Precision::Bf16)
    }
}

/// An encoded proof blob.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Proof(Vec<u8>);

impl Proof {
    pub fn from_bytes(bytes: Vec<u8>) -> Self {
        Proof(bytes)
    }

    pub fn as_bytes(&self) -> &[u8] {
        &self.0
    }

    pub fn into_bytes(self) -> Vec<u8> {
        self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

fn put_field(out: &mut Vec<u8>, value: u64, width: usize) {
    out.extend_from_slice(&value.to_le_bytes()[..width]);
}

fn get_field(bytes: &[u8]) -> u64 {
    let mut buf = [0u8; 8];
    buf[..bytes.len()].copy_from_slice(bytes);
    u64::from_le_bytes(buf)
}

pub fn encode(modulus: u64, coefficients: &[u64], profile: Profile) -> Result<Proof> {
    if modulus <= MODULUS_FLOOR || modulus > profile.max_modulus() {
        return Err(Error::InvalidModulus(modulus));
    }
    if let Some((degree, &coefficient)) =
        coefficients.iter().enumerate().find(|(_, &c)| c >= modulus)
    {
        return Err(Error::CoefficientOutOfRange {
            degree,
            coefficient,
            modulus,
        });
    }
    let width = profile.width();
    let mut out = Vec::with_capacity(profile.proof_len(coefficients.len()));
    // The modulus 2^(8*width) itself wraps to zero.
    put_field(&mut out, modulus % profile.max_modulus(), width);
    for &c in coefficients {
        put_field(&mut out, c, width);
    }
    Ok(Proof(out))
}

pub fn encode_poly(poly: &ProofPoly, profile: Profile) -> Result<Proof> {
    encode(poly.modulus(), poly.coefficients(), profile)
}

/// Parses a proof; `k` is the number of coefficients in the result.
pub fn decode(proof: &Proof, profile: Profile) -> Result<ProofPoly> {
    let bytes = proof.as_bytes();
    let width = profile.width();
    if bytes.len() < 2 * width || !bytes.len().is_multiple_of(width) {
        return Err(Error::MalformedProof { len: bytes.len() });
    }
    let mut fields = bytes.chunks_exact(width).map(get_field);
    let modulus = match fields.next() {
        Some(0) => profile.max_modulus(),
        Some(m) => m,
        None => unreachable!(),
    };
    if modulus <= MODULUS_FLOOR {
        return Err(Error::InvalidModulus(modulus));
    }
    ProofPoly::new(modulus, fields.collect())
}

/// Builds the proof for one chunk: top-k, injective prime modulus, Newton
/// interpolation through `(index mod m, pattern mod m)`, encode.
///
/// The modulus is also required to exceed every committed pattern, so each
/// pattern is recovered exactly from its residue.
pub fn generate_proof(chunk: &ActivationChunk, config: &CommitConfig) -> Result<Proof> {
    generate_poly(chunk, config).and_then(|poly| encode_poly(&poly, config.profile()))
}

pub(crate) fn generate_poly(chunk: &ActivationChunk, config: &CommitConfig) -> Result<ProofPoly> {
    if chunk.precision() != config.precision() {
        return Err(Error::WrongPrecision {
            expected: config.precision(),
            actual: chunk.precision(),
        });
    }
    let sketch = top_k(chunk, config.k())?;
    let profile = config.profile();
    let indices: Vec<u64> = sketch.indices.iter().map(|&i| i as u64).collect();
    let max_pattern = sketch.patterns.iter().copied().max().unwrap_or(0) as u64;
    let modulus =
        modpoly::find_injective_prime_in(&indices, MODULUS_FLOOR.max(max_pattern), profile.prime_ceiling())?;
    let xs: Vec<u64> = indices.iter().map(|i| i % modulus).collect();
    let ys: Vec<u64> = sketch.patterns.iter().map(|&p| p as u64 % modulus).collect();
    modpoly::newton_interpolate(&xs, &ys, modulus)
}

/// Acceptance limits on validation statistics.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Thresholds {
    pub t_exp: u32,
    pub t_mean: f64,
    pub t_median: f64,
}

impl Thresholds {
    pub fn new(t_exp: u32, t_mean: f64, t_median: f64) -> Result<Self> {
        if t_mean.is_nan() || t_mean < 0.0 {
            return Err(Error::InvalidThreshold("t_mean must be non-negative"));
        }
        if t_median.is_nan() || t_median < 0.0 {
            return Err(Error::InvalidThreshold("t_median must be non-negative"));
        }
        Ok(Thresholds {
            t_exp,
            t_mean,
            t_median,
        })
    }
}

/// Thresholds calibrated for the validator's compute precision.
pub fn default_thresholds(validator_precision: Precision) -> Thresholds {
    match validator_precision {
        Precision::Bf16 => Thresholds {
            t_exp: 38,
            t_mean: 10.0,
            t_median: 8.0,
        },
        Precision::Fp32 => Thresholds {
            t_exp: 8,
            t_mean: 256.0,
            t_median: 128.0,
        },
    }
}

/// Outcome of checking one chunk against one proof.
#[derive(Debug, Clone, PartialEq)]
pub struct ValidationReport {
    /// Entries whose sign or exponent differ.
    pub exp_mismatch: usize,
    /// `|mantissa_committed - mantissa_recomputed|` for every other entry.
    pub mantissa_diffs: Vec<u32>,
    /// `+inf` when `mantissa_diffs` is empty.
    pub mantissa_mean: f64,
    /// `+inf` when `mantissa_diffs` is empty.
    pub mantissa_median: f64,
    pub accepted: bool,
    pub thresholds: Thresholds,
}

impl ValidationReport {
    pub fn from_errors(exp_mismatch: usize, mantissa_diffs: Vec<u32>, thresholds: Thresholds) -> Self {
        let (mantissa_mean, mantissa_median) = if mantissa_diffs.is_empty() {
            (f64::INFINITY, f64::INFINITY)
        } else {
            (mean(&mantissa_diffs), median(&mantissa_diffs))
        };
        let accepted = exp_mismatch <= thresholds.t_exp as usize
            && mantissa_mean <= thresholds.t_mean
            && mantissa_median <= thresholds.t_median;
        ValidationReport {
            exp_mismatch,
            mantissa_diffs,
            mantissa_mean,
            mantissa_median,
            accepted,
            thresholds,
        }
    }

    /// Number of entries compared.
    pub fn k(&self) -> usize {
        self.exp_mismatch + self.mantissa_diffs.len()
    }

    pub fn summary(&self) -> ReportSummary {
        ReportSummary {
            k: self.k(),
            exp_mismatch: self.exp_mismatch,
            mantissa_mean: finite(self.mantissa_mean),
            mantissa_median: finite(self.mantissa_median),
            accepted: self.accepted,
        }
    }
}

/// Serializable digest of a [`ValidationReport`]; undefined statistics
/// (no exponent matches) are `null`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReportSummary {
    pub k: usize,
    pub exp_mismatch: usize,
    pub mantissa_mean: Option<f64>,
    pub mantissa_median: Option<f64>,
    pub accepted: bool,
}

fn finite(x: f64) -> Option<f64> {
    x.is_finite().then_some(x)
}

pub(crate) fn mean(values: &[u32]) -> f64 {
    values.iter().map(|&v| f64::from(v)).sum::<f64>() / values.len() as f64
}

/// Median; even-length inputs average the two middle values.
pub(crate) fn median(values: &[u32]) -> f64 {
    let mut sorted = values.to_vec();
    sorted.sort_unstable();
    let n = sorted.len();
    if n % 2 == 1 {
        f64::from(sorted[n / 2])
    } else {
        (f64::from(sorted[n / 2 - 1]) + f64::from(sorted[n / 2])) / 2.0
    }
}

/// Recomputes the top-k of `chunk` and compares each entry against the
/// committed polynomial evaluated at the recomputed index.
///
/// `chunk` must be in `validator_precision`; the proof is read with the
/// layout of `committed_precision`, and committed fields are padded or
/// truncated to the validator's mantissa width before comparison.
pub fn validate_proof(
    chunk: &ActivationChunk,
    proof: &Proof,
    thresholds: &Thresholds,
    committed_precision: Precision,
    validator_precision: Precision,
) -> Result<ValidationReport> {
    if chunk.precision() != validator_precision {
        return Err(Error::WrongPrecision {
            expected: validator_precision,
            actual: chunk.precision(),
        });
    }
    let poly = decode(proof, Profile::for_precision(committed_precision))?;
    validate_poly(chunk, &poly, thresholds, committed_precision)
}

pub(crate) fn validate_poly(
    chunk: &ActivationChunk,
    poly: &ProofPoly,
    thresholds: &Thresholds,
    committed_precision: Precision,
) -> Result<ValidationReport> {
    let validator_precision = chunk.precision();
    let sketch = top_k(chunk, poly.len())?;
    let m = poly.modulus();
    let mut exp_mismatch = 0;
    let mut diffs = Vec::with_capacity(sketch.k());
    for (index, pattern) in sketch.iter() {
        let committed = poly.eval(index as u64 % m);
        // A residue wider than the committed format cannot be a real pattern.
        let committed = committed.min(u64::from(committed_precision.max_pattern())) as u32;
        let expected = align(extract_bits(committed, committed_precision), validator_precision);
        let actual = extract_bits(pattern, validator_precision);
        if expected.sign_exponent() == actual.sign_exponent() {
            diffs.push(expected.mantissa.abs_diff(actual.mantissa));
        } else {
            exp_mismatch += 1;
        }
    }
    Ok(ValidationReport::from_errors(exp_mismatch, diffs, *thresholds))
}
