use actproof::commitment::split_decode;
use actproof::dump::{decode_dump, encode_dump};
use actproof::sim::{
    exponent_error_histogram, mantissa_error_by_chunk, modulus_distribution_mc, perturb, synth_activations,
    synth_with_outliers, PairingMode, PerturbationKind, PerturbationSpec,
};
use actproof::{
    commit_generation, default_thresholds, top_k, validate_generation, CommitConfig, GenerationCommitment, Precision,
};

/// P(two distinct uniform 32-bit integers differ mod 2^16) = 1 - 1/(2^16 + 1).
#[test]
fn modulus_pairs_match_closed_form() {
    let samples = 200_000;
    let dist = modulus_distribution_mc(samples, 2, 17).unwrap();
    let expected = 1.0 - 1.0 / 65537.0;
    let sigma = (expected * (1.0 - expected) / samples as f64).sqrt();
    assert!((dist.ratio(65536) - expected).abs() < 5.0 * sigma + 1e-9);
}

/// prod_{i<128} (2^32 - i 2^16) / (2^32 - i): all 128 residues mod 2^16 distinct.
#[test]
fn modulus_128_matches_closed_form() {
    let expected: f64 = (0..128)
        .map(|i| (4294967296.0 - i as f64 * 65536.0) / (4294967296.0 - i as f64))
        .product();
    assert!((expected - 0.88329).abs() < 1e-5);
    let samples = 100_000;
    let dist = modulus_distribution_mc(samples, 128, 23).unwrap();
    let sigma = (expected * (1.0 - expected) / samples as f64).sqrt();
    assert!((dist.ratio(65536) - expected).abs() < 5.0 * sigma);
    assert_eq!(dist.counts.values().sum::<u64>(), samples);
}

#[test]
fn top_k_is_outlier_dominated() {
    for seed in 0..100 {
        let s = synth_with_outliers(seed, 32, 4096, Precision::Bf16).unwrap();
        let sketch = top_k(&s.chunk, 128).unwrap();
        let outliers = sketch.indices.iter().filter(|&&i| s.is_outlier_index(i)).count();
        assert!(outliers * 10 >= 128 * 9, "seed {seed}: {outliers} of 128");
    }
}

#[test]
fn generation_round_trip_through_files() {
    let dir = tempfile::TempDir::new().unwrap();
    let acts = synth_activations(31, 64 + 100, 256, Precision::Bf16).unwrap();
    let path = dir.path().join("acts.tlac");
    std::fs::write(&path, encode_dump(&acts).unwrap()).unwrap();
    let loaded = decode_dump(&std::fs::read(&path).unwrap()).unwrap();
    assert_eq!(loaded, acts);

    let config = CommitConfig::default();
    let prefill = loaded.tokens(0, 64).unwrap();
    // 100 decode tokens: three full chunks and a 4-token tail.
    let decode = split_decode(&loaded, 64, 32).unwrap();
    assert_eq!(decode.iter().map(|c| c.token_count()).collect::<Vec<_>>(), [32, 32, 32, 4]);
    let commitment = commit_generation(&prefill, &decode, &config).unwrap();
    let back = GenerationCommitment::from_bytes(&commitment.to_bytes().unwrap()).unwrap();
    assert_eq!(back, commitment);

    let thresholds = default_thresholds(Precision::Bf16);
    let report = validate_generation(&prefill, &decode, &back, &thresholds).unwrap();
    assert!(report.accepted);
    assert_eq!(report.reports().count(), 5);

    let foreign = synth_activations(32, 64 + 100, 256, Precision::Bf16).unwrap();
    let report = validate_generation(
        &foreign.tokens(0, 64).unwrap(),
        &split_decode(&foreign, 64, 32).unwrap(),
        &back,
        &thresholds,
    )
    .unwrap();
    assert!(!report.accepted);
}

#[test]
fn exponent_flips_land_in_unit_buckets() {
    let chunk = synth_activations(41, 32, 1024, Precision::Bf16).unwrap();
    let flipped = perturb(&chunk, &PerturbationSpec::new(PerturbationKind::ExponentFlip, 3).with("q", 1.0)).unwrap();
    let hist = exponent_error_histogram(
        &top_k(&chunk, 128).unwrap(),
        &top_k(&flipped, 128).unwrap(),
        PairingMode::Intersection,
    )
    .unwrap();
    // Buckets: 0, -1, +1, ...; every shared index moved by exactly one.
    assert_eq!(hist.counts[0], 0);
    assert_eq!(hist.counts[1] + hist.counts[2], hist.total());
    assert!(hist.total() > 0);
}

#[test]
fn mantissa_series_separates_benign_from_swap() {
    let config = CommitConfig::default();
    let thresholds = default_thresholds(Precision::Bf16);
    let committed: Vec<_> = (0..8).map(|i| synth_activations(100 + i, 32, 1024, Precision::Bf16).unwrap()).collect();
    let jittered: Vec<_> = committed
        .iter()
        .enumerate()
        .map(|(i, c)| perturb(c, &PerturbationSpec::new(PerturbationKind::BenignJitter, i as u64)).unwrap())
        .collect();
    let series = mantissa_error_by_chunk(&committed, &jittered, &config, &thresholds).unwrap();
    assert_eq!(series.len(), 8);
    assert!(series.iter().all(|s| s.mantissa_mean.unwrap() <= thresholds.t_mean));
    assert!(series.iter().enumerate().all(|(i, s)| s.chunk == i));

    let swapped: Vec<_> = committed
        .iter()
        .enumerate()
        .map(|(i, c)| perturb(c, &PerturbationSpec::new(PerturbationKind::ModelSwap, i as u64)).unwrap())
        .collect();
    let series = mantissa_error_by_chunk(&committed, &swapped, &config, &thresholds).unwrap();
    assert!(series.iter().all(|s| s.exp_mismatch > thresholds.t_exp as usize));
}
