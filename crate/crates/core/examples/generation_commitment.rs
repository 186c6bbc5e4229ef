//! A whole generation: one prefill proof plus one proof per 32 decode
//! tokens, written to and read back from a `TPLC` file.
//!
//! ```bash
//! cargo run --release -p actproof --example generation_commitment
//! ```

use actproof::commitment::split_decode;
use actproof::dump::{read_dump, write_dump};
use actproof::sim::synth_activations;
use actproof::{commit_generation, default_thresholds, validate_generation, CommitConfig, GenerationCommitment, Precision};

fn main() -> actproof::Result<()> {
    let dir = std::env::temp_dir().join(format!("actproof-example-{}", std::process::id()));
    std::fs::create_dir_all(&dir)?;
    let (prefill_tokens, decode_tokens) = (512, 512);

    let activations = synth_activations(3, prefill_tokens + decode_tokens, 1024, Precision::Bf16)?;
    write_dump(dir.join("run.tlac"), &activations)?;
    let activations = read_dump(dir.join("run.tlac"))?;

    let config = CommitConfig::default();
    let prefill = activations.tokens(0, prefill_tokens)?;
    let decode = split_decode(&activations, prefill_tokens, config.chunk_tokens())?;
    let commitment = commit_generation(&prefill, &decode, &config)?;
    let bytes = commitment.to_bytes()?;
    std::fs::write(dir.join("run.tplc"), &bytes)?;
    println!(
        "{} proofs, {} proof bytes, {} file bytes, {:.2} bytes per decode token",
        commitment.proof_count(),
        commitment.proof_bytes(),
        bytes.len(),
        commitment.amortized_bytes_per_token().unwrap_or(f64::NAN)
    );

    let loaded = GenerationCommitment::from_bytes(&std::fs::read(dir.join("run.tplc"))?)?;
    let report = validate_generation(&prefill, &decode, &loaded, &default_thresholds(Precision::Bf16))?;
    let rejected = report.reports().filter(|r| !r.accepted).count();
    println!("validation: accepted={} ({rejected} chunks rejected)", report.accepted);

    std::fs::remove_dir_all(&dir)?;
    Ok(())
}
