//! One chunk: generate a proof, then validate honest and dishonest
//! recomputations against it.
//!
//! ```bash
//! cargo run --release -p actproof --example commit_and_validate
//! ```

use actproof::sim::{perturb, synth_activations, PerturbationKind, PerturbationSpec};
use actproof::{decode, default_thresholds, generate_proof, validate_proof, CommitConfig, Precision, Profile};

fn main() -> actproof::Result<()> {
    let config = CommitConfig::default();
    let chunk = synth_activations(42, 32, 4096, Precision::Bf16)?;
    let proof = generate_proof(&chunk, &config)?;
    let poly = decode(&proof, Profile::Bf16)?;
    println!("proof: {} bytes, modulus {}, {} coefficients", proof.len(), poly.modulus(), poly.len());

    let thresholds = default_thresholds(Precision::Bf16);
    println!(
        "thresholds: exp <= {}, mean <= {}, median <= {}\n",
        thresholds.t_exp, thresholds.t_mean, thresholds.t_median
    );
    for kind in [
        PerturbationKind::None,
        PerturbationKind::BenignJitter,
        PerturbationKind::CancellationZeros,
        PerturbationKind::PromptPrefixSwap,
        PerturbationKind::ModelSwap,
    ] {
        let recomputed = perturb(&chunk, &PerturbationSpec::new(kind, 7))?;
        let report = validate_proof(&recomputed, &proof, &thresholds, Precision::Bf16, Precision::Bf16)?;
        let s = report.summary();
        println!(
            "{kind:<20} exp mismatch {:>3}  mean {:>7}  median {:>7}  {}",
            s.exp_mismatch,
            s.mantissa_mean.map_or("-".into(), |v| format!("{v:.2}")),
            s.mantissa_median.map_or("-".into(), |v| format!("{v:.1}")),
            if s.accepted { "accept" } else { "reject" }
        );
    }
    Ok(())
}
