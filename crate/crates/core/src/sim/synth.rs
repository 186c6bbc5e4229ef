use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::float_codec::{assemble_bits, extract_bits, quantize_real, Precision};
use crate::topk::ActivationChunk;

/// Fraction of hidden features that carry large-magnitude outliers.
pub const OUTLIER_FRACTION: f64 = 0.01;
/// Scale of outlier features relative to the unit-variance baseline.
pub const OUTLIER_SCALE: f64 = 50.0;

/// SplitMix64 finalizer; derives independent stream seeds from one base.
pub fn mix_seed(base: u64, stream: u64, index: u64) -> u64 {
    let mut z = base
        ^ stream.wrapping_mul(0xD6E8_FEB8_6659_FD93)
        ^ index.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

pub(crate) fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// A synthetic chunk and the hidden features chosen as outliers.
#[derive(Debug, Clone)]
pub struct SynthChunk {
    pub chunk: ActivationChunk,
    pub outlier_features: Vec<usize>,
}

impl SynthChunk {
    pub fn is_outlier_index(&self, flat_index: usize) -> bool {
        let feature = flat_index % self.chunk.hidden_dim();
        self.outlier_features.binary_search(&feature).is_ok()
    }
}

/// Synthetic last-layer activations: unit Gaussians, with 1% of hidden
/// features scaled by 50 so that the top-k is outlier dominated.
pub fn synth_activations(
    seed: u64,
    token_count: usize,
    hidden_dim: usize,
    precision: Precision,
) -> Result<ActivationChunk> {
    synth_with_outliers(seed, token_count, hidden_dim, precision).map(|s| s.chunk)
}

pub fn synth_with_outliers(
    seed: u64,
    token_count: usize,
    hidden_dim: usize,
    precision: Precision,
) -> Result<SynthChunk> {
    if token_count == 0 || hidden_dim == 0 {
        return Err(Error::InvalidConfig("synthetic chunk needs positive dimensions".into()));
    }
    let mut rng = rng(seed);
    let n_outliers = ((hidden_dim as f64 * OUTLIER_FRACTION).round() as usize).clamp(1, hidden_dim);
    let mut outlier_features = sample(&mut rng, hidden_dim, n_outliers).into_vec();
    outlier_features.sort_unstable();
    let mut scale = vec![1.0; hidden_dim];
    for &f in &outlier_features {
        scale[f] = OUTLIER_SCALE;
    }
    let reals: Vec<f64> = (0..token_count * hidden_dim)
        .map(|i| rng.sample::<f64, _>(StandardNormal) * scale[i % hidden_dim])
        .collect();
    let chunk = ActivationChunk::from_reals(token_count, hidden_dim, precision, &reals)?;
    Ok(SynthChunk {
        chunk,
        outlier_features,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PerturbationKind {
    None,
    BenignJitter,
    ExponentFlip,
    CancellationZeros,
    ModelSwap,
    PromptPrefixSwap,
    PrecisionCast,
}

impl PerturbationKind {
    pub const ALL: [PerturbationKind; 7] = [
        PerturbationKind::None,
        PerturbationKind::BenignJitter,
        PerturbationKind::ExponentFlip,
        PerturbationKind::CancellationZeros,
        PerturbationKind::ModelSwap,
        PerturbationKind::PromptPrefixSwap,
        PerturbationKind::PrecisionCast,
    ];

    pub fn name(self) -> &'static str {
        match self {
            PerturbationKind::None => "none",
            PerturbationKind::BenignJitter => "benign-jitter",
            PerturbationKind::ExponentFlip => "exponent-flip",
            PerturbationKind::CancellationZeros => "cancellation-zeros",
            PerturbationKind::ModelSwap => "model-swap",
            PerturbationKind::PromptPrefixSwap => "prompt-prefix-swap",
            PerturbationKind::PrecisionCast => "precision-cast",
        }
    }

    /// Parameter names and defaults accepted by this kind.
    fn defaults(self) -> &'static [(&'static str, f64)] {
        match self {
            PerturbationKind::BenignJitter => &[("delta", 2.0), ("p", 0.2)],
            PerturbationKind::ExponentFlip => &[("q", 0.02)],
            PerturbationKind::CancellationZeros => &[("z", 0.01), ("cutoff", 8.0)],
            // prefix_tokens defaults to half the chunk (resolved at apply time).
            PerturbationKind::PromptPrefixSwap => &[("prefix_tokens", f64::NAN), ("delta", 2.0), ("p", 0.2)],
            _ => &[],
        }
    }
}

impl fmt::Display for PerturbationKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.pad(self.name())
    }
}

impl FromStr for PerturbationKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let norm = s.to_ascii_lowercase().replace('_', "-");
        PerturbationKind::ALL
            .into_iter()
            .find(|k| k.name() == norm)
            .ok_or_else(|| Error::InvalidParameter(format!("unknown scenario {s:?}")))
    }
}

/// A perturbation kind, its parameters and the seed of its randomness.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PerturbationSpec {
    pub kind: PerturbationKind,
    pub params: BTreeMap<String, f64>,
    pub seed: u64,
}

impl PerturbationSpec {
    pub fn new(kind: PerturbationKind, seed: u64) -> Self {
        PerturbationSpec {
            kind,
            params: BTreeMap::new(),
            seed,
        }
    }

    pub fn with(mut self, name: &str, value: f64) -> Self {
        self.params.insert(name.to_string(), value);
        self
    }

    pub fn param(&self, name: &str) -> f64 {
        self.params.get(name).copied().unwrap_or_else(|| {
            self.kind
                .defaults()
                .iter()
                .find(|(n, _)| *n == name)
                .map_or(f64::NAN, |&(_, v)| v)
        })
    }

    pub fn validate(&self) -> Result<()> {
        let known = self.kind.defaults();
        for (name, &value) in &self.params {
            if !known.iter().any(|(n, _)| n == name) {
                return Err(Error::InvalidParameter(format!("{} takes no parameter {name:?}", self.kind)));
            }
            let ok = match name.as_str() {
                "p" | "q" | "z" => (0.0..=1.0).contains(&value),
                "delta" | "prefix_tokens" => value >= 0.0 && value.fract() == 0.0,
                _ => value >= 0.0,
            };
            if !ok {
                return Err(Error::InvalidParameter(format!("{name} = {value}")));
            }
        }
        Ok(())
    }
}

fn jitter_pattern(pattern: u32, precision: Precision, shift: i64) -> u32 {
    let mut f = extract_bits(pattern, precision);
    let max = i64::from(precision.mantissa_mask());
    f.mantissa = (i64::from(f.mantissa) + shift).clamp(0, max) as u32;
    assemble_bits(f).expect("clamped fields are in range")
}

fn jitter(values: &mut [u32], precision: Precision, delta: i64, p: f64, rng: &mut ChaCha8Rng) {
    for v in values {
        if rng.random_bool(p) {
            let shift = rng.random_range(-delta..=delta);
            *v = jitter_pattern(*v, precision, shift);
        }
    }
}

/// Applies the perturbation to a copy of `chunk`.
pub fn perturb(chunk: &ActivationChunk, spec: &PerturbationSpec) -> Result<ActivationChunk> {
    spec.validate()?;
    let precision = chunk.precision();
    let (tokens, dim) = (chunk.token_count(), chunk.hidden_dim());
    let mut rng = rng(mix_seed(spec.seed, 0x5045_5254, 0));
    match spec.kind {
        PerturbationKind::None => Ok(chunk.clone()),
        PerturbationKind::BenignJitter => {
            let mut values = chunk.values().to_vec();
            jitter(&mut values, precision, spec.param("delta") as i64, spec.param("p"), &mut rng);
            ActivationChunk::new(tokens, dim, precision, values)
        }
        PerturbationKind::ExponentFlip => {
            let q = spec.param("q");
            let mut values = chunk.values().to_vec();
            for v in &mut values {
                if rng.random_bool(q) {
                    let factor = if rng.random_bool(0.5) { 2.0 } else { 0.5 };
                    if let Ok(p) = quantize_real(precision.to_f64(*v) * factor, precision) {
                        *v = p;
                    }
                }
            }
            ActivationChunk::new(tokens, dim, precision, values)
        }
        PerturbationKind::CancellationZeros => {
            let (z, cutoff) = (spec.param("z"), spec.param("cutoff"));
            let mut values = chunk.values().to_vec();
            for v in &mut values {
                if precision.to_f64(*v).abs() < cutoff && rng.random_bool(z) {
                    *v = 0;
                }
            }
            ActivationChunk::new(tokens, dim, precision, values)
        }
        PerturbationKind::ModelSwap => synth_activations(rng.random(), tokens, dim, precision),
        PerturbationKind::PromptPrefixSwap => {
            let prefix = spec.param("prefix_tokens");
            let prefix = if prefix.is_nan() { tokens / 2 } else { prefix as usize };
            if prefix > tokens {
                return Err(Error::InvalidParameter(format!(
                    "prefix_tokens = {prefix} exceeds {tokens} tokens"
                )));
            }
            let fresh = synth_activations(rng.random(), tokens, dim, precision)?;
            let split = prefix * dim;
            let mut values = fresh.values()[..split].to_vec();
            let mut tail = chunk.values()[split..].to_vec();
            jitter(&mut tail, precision, spec.param("delta") as i64, spec.param("p"), &mut rng);
            values.extend(tail);
            ActivationChunk::new(tokens, dim, precision, values)
        }
        PerturbationKind::PrecisionCast => chunk.cast(precision.other()),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn synth_is_deterministic() {
        let a = synth_activations(7, 4, 256, Precision::Bf16).unwrap();
        let b = synth_activations(7, 4, 256, Precision::Bf16).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, synth_activations(8, 4, 256, Precision::Bf16).unwrap());
    }

    #[test]
    fn synth_shape() {
        let c = synth_activations(1, 32, 4096, Precision::Bf16).unwrap();
        assert_eq!(c.len(), 131_072);
        assert!(c.values().iter().all(|&p| !Precision::Bf16.is_non_finite(p)));
    }

    #[test]
    fn none_is_identity() {
        let c = synth_activations(3, 4, 64, Precision::Bf16).unwrap();
        let spec = PerturbationSpec::new(PerturbationKind::None, 99);
        assert_eq!(perturb(&c, &spec).unwrap(), c);
    }

    #[test]
    fn jitter_stays_in_mantissa() {
        assert_eq!(jitter_pattern(0x3F80, Precision::Bf16, -2), 0x3F80);
        assert_eq!(jitter_pattern(0x3FFF, Precision::Bf16, 3), 0x3FFF);
        assert_eq!(jitter_pattern(0x3F81, Precision::Bf16, 1), 0x3F82);
        let c = synth_activations(5, 8, 128, Precision::Bf16).unwrap();
        let spec = PerturbationSpec::new(PerturbationKind::BenignJitter, 1);
        let j = perturb(&c, &spec).unwrap();
        for (&a, &b) in c.values().iter().zip(j.values()) {
            let (fa, fb) = (extract_bits(a, Precision::Bf16), extract_bits(b, Precision::Bf16));
            assert_eq!(fa.sign_exponent(), fb.sign_exponent());
            assert!(fa.mantissa.abs_diff(fb.mantissa) <= 2);
        }
        assert_ne!(j, c);
    }

    #[test]
    fn exponent_flip_doubles_or_halves() {
        let c = synth_activations(5, 8, 128, Precision::Bf16).unwrap();
        let spec = PerturbationSpec::new(PerturbationKind::ExponentFlip, 1).with("q", 1.0);
        let f = perturb(&c, &spec).unwrap();
        for i in 0..c.len() {
            let (a, b) = (c.value_f64(i), f.value_f64(i));
            assert!(b == 2.0 * a || b == 0.5 * a, "{a} -> {b}");
        }
    }

    #[test]
    fn cancellation_spares_outliers() {
        let s = synth_with_outliers(5, 8, 512, Precision::Bf16).unwrap();
        let spec = PerturbationSpec::new(PerturbationKind::CancellationZeros, 1).with("z", 1.0);
        let z = perturb(&s.chunk, &spec).unwrap();
        for i in 0..z.len() {
            if s.chunk.value_f64(i).abs() >= 8.0 {
                assert_eq!(z.values()[i], s.chunk.values()[i]);
            } else {
                assert_eq!(z.value_f64(i), 0.0);
            }
        }
    }

    #[test]
    fn prefix_swap_keeps_suffix_close() {
        let c = synth_activations(5, 8, 64, Precision::Bf16).unwrap();
        let spec = PerturbationSpec::new(PerturbationKind::PromptPrefixSwap, 1).with("p", 0.0);
        let s = perturb(&c, &spec).unwrap();
        assert_eq!(&s.values()[4 * 64..], &c.values()[4 * 64..]);
        assert_ne!(&s.values()[..4 * 64], &c.values()[..4 * 64]);
        let bad = PerturbationSpec::new(PerturbationKind::PromptPrefixSwap, 1).with("prefix_tokens", 9.0);
        assert!(perturb(&c, &bad).is_err());
    }

    #[test]
    fn precision_cast_switches_precision() {
        let c = synth_activations(5, 2, 64, Precision::Fp32).unwrap();
        let spec = PerturbationSpec::new(PerturbationKind::PrecisionCast, 1);
        let b = perturb(&c, &spec).unwrap();
        assert_eq!(b.precision(), Precision::Bf16);
        for i in 0..c.len() {
            assert!((c.value_f64(i) - b.value_f64(i)).abs() <= c.value_f64(i).abs() / 256.0);
        }
    }

    #[test]
    fn invalid_parameters() {
        let c = synth_activations(5, 2, 64, Precision::Bf16).unwrap();
        for spec in [
            PerturbationSpec::new(PerturbationKind::BenignJitter, 0).with("p", 1.5),
            PerturbationSpec::new(PerturbationKind::BenignJitter, 0).with("delta", -1.0),
            PerturbationSpec::new(PerturbationKind::ExponentFlip, 0).with("delta", 1.0),
            PerturbationSpec::new(PerturbationKind::CancellationZeros, 0).with("z", f64::NAN),
        ] {
            assert!(matches!(perturb(&c, &spec), Err(Error::InvalidParameter(_))), "{spec:?}");
        }
    }

    #[test]
    fn kind_names_round_trip() {
        for kind in PerturbationKind::ALL {
            assert_eq!(kind.name().parse::<PerturbationKind>().unwrap(), kind);
        }
        assert!("bogus".parse::<PerturbationKind>().is_err());
    }
}
