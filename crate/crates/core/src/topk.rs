//! Magnitude top-k selection over a flattened activation chunk.

use std::cmp::Ordering;
use std::collections::HashSet;

use crate::error::{Error, Result};
use crate::float_codec::Precision;

/// A block of activations for consecutive tokens, flattened row-major by
/// token: `index = token * hidden_dim + feature`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ActivationChunk {
    token_count: usize,
    hidden_dim: usize,
    precision: Precision,
    values: Vec<u32>,
}

impl ActivationChunk {
    /// Validates shape, pattern width and finiteness.
    pub fn new(
        token_count: usize,
        hidden_dim: usize,
        precision: Precision,
        values: Vec<u32>,
    ) -> Result<Self> {
        if token_count == 0
            || hidden_dim == 0
            || token_count.checked_mul(hidden_dim) != Some(values.len())
        {
            return Err(Error::ShapeMismatch {
                token_count,
                hidden_dim,
                len: values.len(),
            });
        }
        for (index, &pattern) in values.iter().enumerate() {
            if !precision.fits(pattern) {
                return Err(Error::PatternTooWide {
                    index,
                    pattern,
                    precision,
                });
            }
            if precision.is_non_finite(pattern) {
                return Err(Error::NonFinite { index });
            }
        }
        Ok(ActivationChunk {
            token_count,
            hidden_dim,
            precision,
            values,
        })
    }

    /// Quantizes real values into a chunk.
    pub fn from_reals(
        token_count: usize,
        hidden_dim: usize,
        precision: Precision,
        reals: &[f64],
    ) -> Result<Self> {
        let values = reals
            .iter()
            .map(|&x| crate::float_codec::quantize_real(x, precision))
            .collect::<Result<Vec<_>>>()?;
        Self::new(token_count, hidden_dim, precision, values)
    }

    pub fn token_count(&self) -> usize {
        self.token_count
    }

    pub fn hidden_dim(&self) -> usize {
        self.hidden_dim
    }

    pub fn precision(&self) -> Precision {
        self.precision
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn values(&self) -> &[u32] {
        &self.values
    }

    pub fn into_values(self) -> Vec<u32> {
        self.values
    }

    pub fn value_f64(&self, index: usize) -> f64 {
        self.precision.to_f64(self.values[index])
    }

    /// Rows `start..end` as a new chunk.
    pub fn tokens(&self, start: usize, end: usize) -> Result<Self> {
        if start >= end || end > self.token_count {
            return Err(Error::InvalidConfig(format!(
                "token range {start}..{end} outside chunk of {} tokens",
                self.token_count
            )));
        }
        Ok(ActivationChunk {
            token_count: end - start,
            hidden_dim: self.hidden_dim,
            precision: self.precision,
            values: self.values[start * self.hidden_dim..end * self.hidden_dim].to_vec(),
        })
    }

    /// Re-encodes every element in another precision (round to nearest even
    /// when narrowing, exact when widening).
    pub fn cast(&self, to: Precision) -> Result<Self> {
        let values = self
            .values
            .iter()
            .map(|&p| crate::float_codec::convert_pattern(p, self.precision, to))
            .collect::<Result<Vec<_>>>()?;
        Self::new(self.token_count, self.hidden_dim, to, values)
    }
}

/// The `k` largest-magnitude entries of a chunk.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TopKSketch {
    pub indices: Vec<usize>,
    pub patterns: Vec<u32>,
    pub precision: Precision,
}

impl TopKSketch {
    pub fn k(&self) -> usize {
        self.indices.len()
    }

    pub fn iter(&self) -> impl Iterator<Item = (usize, u32)> + '_ {
        self.indices.iter().copied().zip(self.patterns.iter().copied())
    }
}

/// Selects the `k` highest-magnitude elements. Entries come back in
/// non-increasing magnitude; equal magnitudes (including `+x`/`-x`) are
/// ordered by ascending flat index.
pub fn top_k(chunk: &ActivationChunk, k: usize) -> Result<TopKSketch> {
    let len = chunk.len();
    if k == 0 || k > len {
        return Err(Error::InvalidK { k, len });
    }
    let precision = chunk.precision;
    if let Some(index) = chunk.values.iter().position(|&p| precision.is_non_finite(p)) {
        return Err(Error::NonFinite { index });
    }

    let mut order: Vec<(u32, usize)> = chunk
        .values
        .iter()
        .enumerate()
        .map(|(i, &p)| (precision.magnitude_key(p), i))
        .collect();
    let rank = |a: &(u32, usize), b: &(u32, usize)| -> Ordering { b.0.cmp(&a.0).then(a.1.cmp(&b.1)) };
    if k < len {
        order.select_nth_unstable_by(k - 1, rank);
        order.truncate(k);
    }
    order.sort_unstable_by(rank);

    let indices: Vec<usize> = order.iter().map(|&(_, i)| i).collect();
    let patterns = indices.iter().map(|&i| chunk.values[i]).collect();
    Ok(TopKSketch {
        indices,
        patterns,
        precision,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IndexMismatch {
    pub count: usize,
    pub ratio: f64,
}

/// Number of indices in `a` that are absent from `b`, compared as sets.
pub fn index_set_mismatch(a: &TopKSketch, b: &TopKSketch) -> Result<IndexMismatch> {
    if a.k() != b.k() {
        return Err(Error::KMismatch {
            left: a.k(),
            right: b.k(),
        });
    }
    let k = a.k();
    let theirs: HashSet<usize> = b.indices.iter().copied().collect();
    let shared = a.indices.iter().filter(|i| theirs.contains(i)).count();
    let count = k - shared;
    Ok(IndexMismatch {
        count,
        ratio: if k == 0 { 0.0 } else { count as f64 / k as f64 },
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn chunk(vals: &[f64]) -> ActivationChunk {
        ActivationChunk::from_reals(1, vals.len(), Precision::Bf16, vals).unwrap()
    }

    #[test]
    fn picks_by_magnitude() {
        let s = top_k(&chunk(&[1.0, -3.0, 2.0, 0.5]), 2).unwrap();
        assert_eq!(s.indices, vec![1, 2]);
        assert_eq!(s.patterns, vec![0xC040, 0x4000]);
    }

    #[test]
    fn full_k_sorts_everything() {
        let s = top_k(&chunk(&[1.0, -3.0, 2.0, 0.5]), 4).unwrap();
        assert_eq!(s.indices, vec![1, 2, 0, 3]);
    }

    #[test]
    fn ties_prefer_lower_index() {
        assert_eq!(top_k(&chunk(&[2.0, -2.0]), 1).unwrap().indices, vec![0]);
        assert_eq!(top_k(&chunk(&[-2.0, 2.0]), 1).unwrap().indices, vec![0]);
        assert_eq!(top_k(&chunk(&[0.0, -0.0, 0.0]), 3).unwrap().indices, vec![0, 1, 2]);
    }

    #[test]
    fn rejects_bad_k() {
        let c = chunk(&[1.0, 2.0]);
        assert_eq!(top_k(&c, 3), Err(Error::InvalidK { k: 3, len: 2 }));
        assert_eq!(top_k(&c, 0), Err(Error::InvalidK { k: 0, len: 2 }));
    }

    #[test]
    fn rejects_non_finite() {
        let err = ActivationChunk::new(1, 3, Precision::Bf16, vec![0x3F80, 0x3F80, 0x7FC0]);
        assert_eq!(err, Err(Error::NonFinite { index: 2 }));
        let err = ActivationChunk::new(1, 2, Precision::Bf16, vec![0x3F80, 0x1_0000]);
        assert!(matches!(err, Err(Error::PatternTooWide { index: 1, .. })));
        assert!(ActivationChunk::new(2, 3, Precision::Bf16, vec![0; 5]).is_err());
    }

    #[test]
    fn mismatch_counts() {
        let a = TopKSketch {
            indices: vec![1, 2, 3],
            patterns: vec![0; 3],
            precision: Precision::Bf16,
        };
        let b = TopKSketch {
            indices: vec![7, 8, 9],
            ..a.clone()
        };
        assert_eq!(index_set_mismatch(&a, &a).unwrap().count, 0);
        let m = index_set_mismatch(&a, &b).unwrap();
        assert_eq!((m.count, m.ratio), (3, 1.0));

        let full = TopKSketch {
            indices: (0..128).collect(),
            patterns: vec![0; 128],
            precision: Precision::Bf16,
        };
        let mut one_off = full.clone();
        one_off.indices[17] = 1000;
        let m = index_set_mismatch(&full, &one_off).unwrap();
        assert_eq!(m.count, 1);
        assert!((m.ratio - 0.0078125).abs() < 1e-12);

        let short = TopKSketch {
            indices: vec![1],
            patterns: vec![0],
            precision: Precision::Bf16,
        };
        assert!(matches!(index_set_mismatch(&a, &short), Err(Error::KMismatch { .. })));
    }

    #[test]
    fn cast_round_trips_through_widening() {
        let c = chunk(&[1.5, -2.25, 1e-3]);
        let wide = c.cast(Precision::Fp32).unwrap();
        assert_eq!(wide.cast(Precision::Bf16).unwrap(), c);
    }
}
