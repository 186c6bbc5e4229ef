//! Exponent error histogram and per-chunk mantissa error series for a
//! jittered recomputation of a generation.
//!
//! ```bash
//! cargo run --release -p actproof --example error_histogram
//! ```

use actproof::sim::{
    exponent_error_histogram, mantissa_error_by_chunk, perturb, synth_activations, ExponentHistogram, PairingMode,
    PerturbationKind, PerturbationSpec,
};
use actproof::{default_thresholds, top_k, CommitConfig, Precision};

fn main() -> actproof::Result<()> {
    let config = CommitConfig::default();
    let committed: Vec<_> = (0..16)
        .map(|i| synth_activations(500 + i, 32, 4096, Precision::Bf16))
        .collect::<Result<_, _>>()?;
    let spec = |i: usize| PerturbationSpec::new(PerturbationKind::ExponentFlip, i as u64).with("q", 0.05);
    let recomputed: Vec<_> = committed
        .iter()
        .enumerate()
        .map(|(i, c)| perturb(c, &spec(i)))
        .collect::<Result<_, _>>()?;

    let mut hist = ExponentHistogram::default();
    for (c, r) in committed.iter().zip(&recomputed) {
        hist.merge(&exponent_error_histogram(&top_k(c, 128)?, &top_k(r, 128)?, PairingMode::Intersection)?);
    }
    println!("exponent differences over {} shared top-k entries:", hist.total());
    print!("{}", hist.to_table());

    println!("\nchunk  exp  mean  median");
    for s in mantissa_error_by_chunk(&committed, &recomputed, &config, &default_thresholds(Precision::Bf16))? {
        println!(
            "{:>5}  {:>3}  {:>4.2}  {:>6.1}",
            s.chunk,
            s.exp_mismatch,
            s.mantissa_mean.unwrap_or(f64::NAN),
            s.mantissa_median.unwrap_or(f64::NAN)
        );
    }
    Ok(())
}
