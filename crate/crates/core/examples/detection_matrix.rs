//! Accept/reject matrix over the simulator's scenarios.
//!
//! Benign scenarios should accept every trial; a swapped model, an altered
//! prompt prefix and a bf16 provider validated at fp32 should reject every
//! trial.
//!
//! ```bash
//! cargo run --release -p actproof --example detection_matrix -- 500
//! ```

use actproof::sim::{run_scenario, ChunkShape, PerturbationKind, PerturbationSpec};
use actproof::{default_thresholds, CommitConfig, Precision};

fn main() -> actproof::Result<()> {
    let trials: usize = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(100);
    let rows = [
        (PerturbationKind::None, Precision::Bf16),
        (PerturbationKind::BenignJitter, Precision::Bf16),
        (PerturbationKind::ExponentFlip, Precision::Bf16),
        (PerturbationKind::CancellationZeros, Precision::Bf16),
        (PerturbationKind::ModelSwap, Precision::Bf16),
        (PerturbationKind::PromptPrefixSwap, Precision::Bf16),
        // Provider computes in bf16, validator recomputes in fp32.
        (PerturbationKind::PrecisionCast, Precision::Bf16),
        // Provider computes in fp32, validator recomputes in bf16.
        (PerturbationKind::PrecisionCast, Precision::Fp32),
    ];

    println!(
        "{:<20} {:>9} {:>9}  {:>8} {:>8} {:>9} {:>9} {:>10}",
        "scenario", "commit", "validate", "accepted", "top-k↑", "exp↑", "exp↓", "mean↑"
    );
    for (kind, precision) in rows {
        let config = CommitConfig::with_precision(precision);
        let validator = if kind == PerturbationKind::PrecisionCast { precision.other() } else { precision };
        let result = run_scenario(
            PerturbationSpec::new(kind, 2024),
            trials,
            config,
            default_thresholds(validator),
            ChunkShape::default(),
        )?;
        let a = result.aggregate;
        println!(
            "{:<20} {:>9} {:>9}  {:>8} {:>8} {:>9} {:>9} {:>10}",
            kind.name(),
            precision.to_string(),
            validator.to_string(),
            format!("{}/{}", result.accept_count, result.trials),
            format!("{:.1}%", 100.0 * a.max_topk_mismatch_ratio),
            a.max_exp_mismatch,
            a.min_exp_mismatch,
            a.max_mantissa_mean.map_or("-".into(), |m| format!("{m:.2}")),
        );
    }
    Ok(())
}
