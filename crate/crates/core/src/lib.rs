//! Compact, locality-sensitive commitments to model activations.
//!
//! An inference provider keeps the top-k largest-magnitude entries of its
//! last hidden states and encodes them as a polynomial over the integers
//! modulo a 16-bit prime: `k` coefficients plus the modulus, 258 bytes for
//! `k = 128`. A validator later recomputes the activations, evaluates the
//! polynomial at its own top-k indices and compares exponents and
//! mantissas, tolerating the small deviations that GPU nondeterminism
//! produces while rejecting a different model, prompt or precision.
//!
//! ```
//! use actproof::{default_thresholds, generate_proof, validate_proof, CommitConfig, Precision};
//! use actproof::sim::synth_activations;
//!
//! let chunk = synth_activations(7, 32, 1024, Precision::Bf16).unwrap();
//! let proof = generate_proof(&chunk, &CommitConfig::default()).unwrap();
//! assert_eq!(proof.len(), 258);
//!
//! let thresholds = default_thresholds(Precision::Bf16);
//! let report = validate_proof(&chunk, &proof, &thresholds, Precision::Bf16, Precision::Bf16).unwrap();
//! assert!(report.accepted);
//! ```
//!
//! Modules:
//! - [`float_codec`]: bf16/fp32 bit fields, alignment and rounding.
//! - [`topk`]: activation chunks and magnitude top-k sketches.
//! - [`modpoly`]: injective modulus search, inverses, interpolation.
//! - [`proof`]: single-chunk proofs, thresholds, validation reports.
//! - [`commitment`]: per-generation containers (`TPLC` files).
//! - [`dump`]: activation dumps (`TLAC` files).
//! - [`sim`]: synthetic experiments.
//! - [`cli`]: the `actproof` command-line front end.

pub mod cli;
pub mod commitment;
pub mod dump;
mod error;
pub mod float_codec;
pub mod modpoly;
pub mod proof;
pub mod sim;
pub mod topk;

pub use commitment::{commit_generation, validate_generation, GenerationCommitment, GenerationReport};
pub use error::{Error, Result};
pub use float_codec::{BitFields, Precision};
pub use modpoly::ProofPoly;
pub use proof::{
    decode, default_thresholds, encode, generate_proof, validate_proof, CommitConfig, Profile, Proof,
    ReportSummary, Thresholds, ValidationReport,
};
pub use topk::{top_k, ActivationChunk, TopKSketch};
