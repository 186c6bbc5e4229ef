use std::collections::{BTreeMap, HashMap};
use std::fmt::Write as _;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::synth::{mix_seed, rng};
use crate::error::{Error, Result};
use crate::float_codec::extract_bits;
use crate::modpoly::ModulusSearcher;
use crate::proof::{generate_poly, validate_poly, CommitConfig, Thresholds};
use crate::topk::{ActivationChunk, TopKSketch};

/// Signed exponent difference buckets, `b - a`.
pub const BUCKET_LABELS: [&str; 9] = [
    "0", "-1", "+1", "-2", "+2", "-3..-10", "+3..+10", "±11..±99", "≥±100",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PairingMode {
    /// Pair entries by rank.
    Positional,
    /// Pair only indices present in both sketches.
    Intersection,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExponentHistogram {
    pub counts: [u64; 9],
}

impl ExponentHistogram {
    pub fn bucket(diff: i64) -> usize {
        match diff {
            0 => 0,
            -1 => 1,
            1 => 2,
            -2 => 3,
            2 => 4,
            -10..=-3 => 5,
            3..=10 => 6,
            d if d.abs() < 100 => 7,
            _ => 8,
        }
    }

    pub fn record(&mut self, diff: i64) {
        self.counts[Self::bucket(diff)] += 1;
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }

    pub fn merge(&mut self, other: &ExponentHistogram) {
        for (a, b) in self.counts.iter_mut().zip(other.counts) {
            *a += b;
        }
    }

    /// Header and count rows, columns aligned.
    pub fn to_table(&self) -> String {
        let cells: Vec<String> = self.counts.iter().map(u64::to_string).collect();
        let widths: Vec<usize> = BUCKET_LABELS
            .iter()
            .zip(&cells)
            .map(|(l, c)| l.chars().count().max(c.len()))
            .collect();
        let mut out = String::new();
        for (label, w) in BUCKET_LABELS.iter().zip(&widths) {
            let pad = w - label.chars().count();
            let _ = write!(out, "{}{label}  ", " ".repeat(pad));
        }
        out.truncate(out.trim_end().len());
        out.push('\n');
        for (cell, w) in cells.iter().zip(&widths) {
            let _ = write!(out, "{cell:>w$}  ");
        }
        out.truncate(out.trim_end().len());
        out.push('\n');
        out
    }
}

/// Histogram of signed exponent differences between two sketches.
pub fn exponent_error_histogram(
    a: &TopKSketch,
    b: &TopKSketch,
    mode: PairingMode,
) -> Result<ExponentHistogram> {
    if a.k() != b.k() {
        return Err(Error::KMismatch {
            left: a.k(),
            right: b.k(),
        });
    }
    let exponent = |p: u32, s: &TopKSketch| i64::from(extract_bits(p, s.precision).exponent);
    let mut hist = ExponentHistogram::default();
    match mode {
        PairingMode::Positional => {
            for (&pa, &pb) in a.patterns.iter().zip(&b.patterns) {
                hist.record(exponent(pb, b) - exponent(pa, a));
            }
        }
        PairingMode::Intersection => {
            let theirs: HashMap<usize, u32> = b.iter().collect();
            for (index, pa) in a.iter() {
                if let Some(&pb) = theirs.get(&index) {
                    hist.record(exponent(pb, b) - exponent(pa, a));
                }
            }
        }
    }
    Ok(hist)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChunkErrorStats {
    pub chunk: usize,
    pub exp_mismatch: usize,
    pub mantissa_mean: Option<f64>,
    pub mantissa_median: Option<f64>,
}

/// Mantissa statistics of each recomputed chunk against the proof of the
/// matching committed chunk, in chunk order.
pub fn mantissa_error_by_chunk(
    committed: &[ActivationChunk],
    recomputed: &[ActivationChunk],
    config: &CommitConfig,
    thresholds: &Thresholds,
) -> Result<Vec<ChunkErrorStats>> {
    if committed.len() != recomputed.len() {
        return Err(Error::ProofCountMismatch {
            proofs: committed.len(),
            chunks: recomputed.len(),
        });
    }
    committed
        .par_iter()
        .zip(recomputed.par_iter())
        .enumerate()
        .map(|(chunk, (c, r))| {
            let poly = generate_poly(c, config).map_err(|e| e.in_chunk(chunk))?;
            let report = validate_poly(r, &poly, thresholds, config.precision()).map_err(|e| e.in_chunk(chunk))?;
            let s = report.summary();
            Ok(ChunkErrorStats {
                chunk,
                exp_mismatch: report.exp_mismatch,
                mantissa_mean: s.mantissa_mean,
                mantissa_median: s.mantissa_median,
            })
        })
        .collect()
}

/// Frequencies of the modulus returned by the full 16-bit injective search.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModulusDistribution {
    pub samples: u64,
    pub set_size: usize,
    pub seed: u64,
    /// Search failures are counted under modulus 0.
    pub counts: BTreeMap<u64, u64>,
}

impl ModulusDistribution {
    pub fn ratio(&self, modulus: u64) -> f64 {
        self.counts.get(&modulus).copied().unwrap_or(0) as f64 / self.samples as f64
    }

    /// Rows ordered from the largest modulus down.
    pub fn to_table(&self) -> String {
        let mut out = format!("{:<9}  {:>10}  {:>12}\n", "modulus", "count", "ratio");
        for (&m, &count) in self.counts.iter().rev() {
            let _ = writeln!(out, "{m:<9}  {count:>10}  {:>12.4e}", count as f64 / self.samples as f64);
        }
        out
    }
}

const MC_BLOCK: u64 = 4096;

/// Draws `samples` sets of `set_size` distinct uniform 32-bit integers and
/// tabulates which modulus the injective search returns for each.
///
/// Work is split into fixed blocks with their own derived seeds, so the
/// result is independent of thread count.
pub fn modulus_distribution_mc(samples: u64, set_size: usize, seed: u64) -> Result<ModulusDistribution> {
    if samples == 0 {
        return Err(Error::InvalidConfig("samples must be at least 1".into()));
    }
    let blocks = samples.div_ceil(MC_BLOCK);
    let counts = (0..blocks)
        .into_par_iter()
        .map(|block| {
            let n = MC_BLOCK.min(samples - block * MC_BLOCK);
            let mut rng = rng(mix_seed(seed, 0x4D43, block));
            let mut searcher = ModulusSearcher::new();
            let mut set: Vec<u64> = Vec::with_capacity(set_size);
            let mut counts = BTreeMap::new();
            for _ in 0..n {
                set.clear();
                while set.len() < set_size {
                    let x = u64::from(rng.random::<u32>());
                    if !set.contains(&x) {
                        set.push(x);
                    }
                }
                let m = searcher.find(&set).unwrap_or(0);
                *counts.entry(m).or_insert(0u64) += 1;
            }
            counts
        })
        .reduce(BTreeMap::new, |mut a, b| {
            for (m, c) in b {
                *a.entry(m).or_insert(0) += c;
            }
            a
        });
    Ok(ModulusDistribution {
        samples,
        set_size,
        seed,
        counts,
    })
}
