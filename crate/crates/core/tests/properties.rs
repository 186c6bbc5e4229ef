use std::collections::HashSet;

use actproof::float_codec::{
    assemble_bits, extract_bits, pad_bf16_to_fp32, quantize_real, truncate_fp32_to_bf16,
};
use actproof::modpoly::{
    find_injective_modulus, find_injective_prime_modulus, horner_eval, is_prime, mod_inverse,
    newton_interpolate, ProofPoly,
};
use actproof::sim::{exponent_error_histogram, synth_activations, PairingMode};
use actproof::topk::index_set_mismatch;
use actproof::{
    decode, default_thresholds, encode, generate_proof, top_k, validate_proof, ActivationChunk,
    CommitConfig, Precision, Profile,
};
use proptest::prelude::*;

fn finite_bf16() -> impl Strategy<Value = u32> {
    (0u32..=0xFFFF).prop_filter("finite", |&p| (p >> 7) & 0xFF != 0xFF)
}

fn small_chunk() -> impl Strategy<Value = ActivationChunk> {
    (1usize..=8, 1usize..=8).prop_flat_map(|(t, h)| {
        prop::collection::vec(finite_bf16(), t * h)
            .prop_map(move |v| ActivationChunk::new(t, h, Precision::Bf16, v).unwrap())
    })
}

fn prime_16() -> impl Strategy<Value = u64> {
    ((1u64 << 15) + 1..=65521).prop_filter("prime", |&p| is_prime(p))
}

fn magnitude(p: u32) -> f64 {
    Precision::Bf16.to_f64(p).abs()
}

#[test]
fn bf16_codec_exhaustive() {
    for pattern in 0..=0xFFFFu32 {
        let f = extract_bits(pattern, Precision::Bf16);
        assert_eq!(assemble_bits(f).unwrap(), pattern);
        assert_eq!(truncate_fp32_to_bf16(pad_bf16_to_fp32(f).unwrap()).unwrap(), f);
    }
}

proptest! {
    #[test]
    fn fp32_codec_roundtrip(pattern in any::<u32>()) {
        let f = extract_bits(pattern, Precision::Fp32);
        prop_assert_eq!(assemble_bits(f).unwrap(), pattern);
        prop_assert_eq!(f.sign_exponent(), pattern >> 23);
    }

    #[test]
    fn quantize_is_monotone(a in -1e30f64..1e30, b in -1e30f64..1e30) {
        let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
        for precision in [Precision::Bf16, Precision::Fp32] {
            let ql = precision.to_f64(quantize_real(lo, precision).unwrap());
            let qh = precision.to_f64(quantize_real(hi, precision).unwrap());
            prop_assert!(ql <= qh);
        }
    }

    #[test]
    fn quantize_fp32_matches_cast(x in -1e30f64..1e30) {
        let p = quantize_real(x, Precision::Fp32).unwrap();
        prop_assert_eq!(p, (x as f32).to_bits());
    }

    #[test]
    fn topk_is_optimal_and_deterministic(chunk in small_chunk(), k_seed in any::<usize>()) {
        let k = 1 + k_seed % chunk.len();
        let s = top_k(&chunk, k).unwrap();
        prop_assert_eq!(&s, &top_k(&chunk, k).unwrap());
        prop_assert_eq!(s.indices.len(), k);
        let key = |i: usize| (std::cmp::Reverse(magnitude(chunk.values()[i]).to_bits()), i);
        prop_assert!(s.indices.windows(2).all(|w| key(w[0]) < key(w[1])));
        // Every unchosen entry ranks after every chosen one, ties broken by index.
        let chosen: HashSet<usize> = s.indices.iter().copied().collect();
        let last = key(*s.indices.last().unwrap());
        for i in (0..chunk.len()).filter(|i| !chosen.contains(i)) {
            prop_assert!(key(i) > last);
        }
        for (i, p) in s.iter() {
            prop_assert_eq!(chunk.values()[i], p);
        }
    }

    #[test]
    fn mismatch_is_symmetric(a in small_chunk(), seed in any::<u64>()) {
        let b = synth_activations(seed, a.token_count(), a.hidden_dim(), Precision::Bf16).unwrap();
        let k = 1 + (seed as usize) % a.len();
        let (sa, sb) = (top_k(&a, k).unwrap(), top_k(&b, k).unwrap());
        let ab = index_set_mismatch(&sa, &sb).unwrap();
        let ba = index_set_mismatch(&sb, &sa).unwrap();
        prop_assert_eq!(ab.count, ba.count);
        prop_assert_eq!(index_set_mismatch(&sa, &sa).unwrap().count, 0);
    }

    #[test]
    fn interpolation_is_exact(p in prime_16(), pts in prop::collection::btree_map(0u64..(1 << 15), any::<u64>(), 1..=64)) {
        let xs: Vec<u64> = pts.keys().copied().collect();
        let ys: Vec<u64> = pts.values().map(|y| y % p).collect();
        let poly = newton_interpolate(&xs, &ys, p).unwrap();
        prop_assert_eq!(poly.len(), xs.len());
        for (&x, &y) in xs.iter().zip(&ys) {
            prop_assert_eq!(horner_eval(&poly, x), y);
        }
    }

    #[test]
    fn inverse_property(m in 2u64..=(1 << 32), a in any::<u64>()) {
        let a = a % m;
        let g = num_gcd(a, m);
        match mod_inverse(a, m) {
            Ok(inv) => {
                prop_assert_eq!(g, 1);
                prop_assert_eq!((a as u128 * inv as u128 % m as u128) as u64, 1 % m);
            }
            Err(_) => prop_assert_ne!(g, 1),
        }
    }

    #[test]
    fn proof_codec_roundtrip(coeffs in prop::collection::vec(any::<u64>(), 1..=128), fp32 in any::<bool>(), m_seed in any::<u64>()) {
        let profile = if fp32 { Profile::Fp32 } else { Profile::Bf16 };
        let max = profile.max_modulus();
        let m = (1 << 15) + 1 + m_seed % (max - (1 << 15));
        let coeffs: Vec<u64> = coeffs.iter().map(|c| c % m).collect();
        let proof = encode(m, &coeffs, profile).unwrap();
        prop_assert_eq!(proof.len(), profile.proof_len(coeffs.len()));
        prop_assert_eq!(decode(&proof, profile).unwrap(), ProofPoly::new(m, coeffs).unwrap());
    }

    #[test]
    fn injective_modulus_separates(xs in prop::collection::hash_set(any::<u32>(), 1..=128)) {
        let xs: Vec<u64> = xs.into_iter().map(u64::from).collect();
        for m in [find_injective_modulus(&xs).unwrap(), find_injective_prime_modulus(&xs).unwrap()] {
            let residues: HashSet<u64> = xs.iter().map(|x| x % m).collect();
            prop_assert_eq!(residues.len(), xs.len());
            prop_assert!(m > 1 << 15 && m <= 1 << 16);
        }
    }

    #[test]
    fn histogram_mass_is_k(seed_a in any::<u64>(), seed_b in any::<u64>(), k in 1usize..=64) {
        let a = top_k(&synth_activations(seed_a, 4, 64, Precision::Bf16).unwrap(), k).unwrap();
        let b = top_k(&synth_activations(seed_b, 4, 64, Precision::Bf16).unwrap(), k).unwrap();
        prop_assert_eq!(exponent_error_histogram(&a, &b, PairingMode::Positional).unwrap().total(), k as u64);
        let shared = k - index_set_mismatch(&a, &b).unwrap().count;
        prop_assert_eq!(exponent_error_histogram(&a, &b, PairingMode::Intersection).unwrap().total(), shared as u64);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn self_validation_accepts(seed in any::<u64>(), tokens in 1usize..=32, fp32 in any::<bool>()) {
        let precision = if fp32 { Precision::Fp32 } else { Precision::Bf16 };
        let chunk = synth_activations(seed, tokens, 512, precision).unwrap();
        let proof = generate_proof(&chunk, &CommitConfig::with_precision(precision)).unwrap();
        let r = validate_proof(&chunk, &proof, &default_thresholds(precision), precision, precision).unwrap();
        prop_assert!(r.accepted);
        prop_assert_eq!(r.exp_mismatch, 0);
        prop_assert!(r.mantissa_diffs.iter().all(|&d| d == 0));
    }

    /// The modulus exceeds every committed pattern, so the committed points
    /// decode exactly; a foreign top-k still validates to a full report.
    #[test]
    fn validation_never_wraps(seed_a in any::<u64>(), seed_b in any::<u64>()) {
        let a = synth_activations(seed_a, 8, 512, Precision::Bf16).unwrap();
        let b = synth_activations(seed_b, 8, 512, Precision::Bf16).unwrap();
        let proof = generate_proof(&a, &CommitConfig::default()).unwrap();
        let poly = decode(&proof, Profile::Bf16).unwrap();
        let sketch = top_k(&a, 128).unwrap();
        prop_assert!(poly.modulus() > *sketch.patterns.iter().max().unwrap() as u64);
        for (i, p) in sketch.iter() {
            prop_assert_eq!(poly.eval(i as u64), p as u64);
        }
        let r = validate_proof(&b, &proof, &default_thresholds(Precision::Bf16), Precision::Bf16, Precision::Bf16).unwrap();
        prop_assert_eq!(r.k(), 128);
    }
}

fn num_gcd(a: u64, b: u64) -> u64 {
    if b == 0 {
        a
    } else {
        num_gcd(b, a % b)
    }
}
