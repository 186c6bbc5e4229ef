//! Committing in one precision and validating in another.
//!
//! A bf16 commitment checked against fp32 recomputation has its mantissas
//! padded by 16 bits; the truncated tail of every fp32 value then shows up
//! as a large mantissa difference. Going the other way the fp32 mantissas
//! are truncated and the comparison is tight.
//!
//! ```bash
//! cargo run --release -p actproof --example precision_alignment
//! ```

use actproof::float_codec::{align, convert_pattern, extract_bits};
use actproof::sim::synth_activations;
use actproof::float_codec::quantize_real;
use actproof::{default_thresholds, generate_proof, validate_proof, CommitConfig, Precision};

fn main() -> actproof::Result<()> {
    let x = convert_pattern(0x40A1, Precision::Bf16, Precision::Fp32)?;
    let fp32 = quantize_real(5.03, Precision::Fp32)?;
    let padded = align(extract_bits(0x40A1, Precision::Bf16), Precision::Fp32);
    let native = extract_bits(fp32, Precision::Fp32);
    println!("5.03 bf16 widened: {x:#010x}, fp32: {fp32:#010x}");
    println!("mantissa difference after padding: {}\n", native.mantissa.abs_diff(padded.mantissa));

    let truth = synth_activations(8, 32, 4096, Precision::Fp32)?;
    for committed in [Precision::Bf16, Precision::Fp32] {
        let validator = committed.other();
        let proof = generate_proof(&truth.cast(committed)?, &CommitConfig::with_precision(committed))?;
        let thresholds = default_thresholds(validator);
        let report = validate_proof(&truth.cast(validator)?, &proof, &thresholds, committed, validator)?;
        let s = report.summary();
        println!(
            "committed {committed}, validated {validator}: exp mismatch {}, mean {:.1} (<= {}), {}",
            s.exp_mismatch,
            s.mantissa_mean.unwrap_or(f64::INFINITY),
            thresholds.t_mean,
            if s.accepted { "accept" } else { "reject" }
        );
    }
    Ok(())
}
