//! Magnitude top-k over an activation chunk, and how much two sketches
//! overlap.
//!
//! ```bash
//! cargo run --release -p actproof --example topk_sketch
//! ```

use actproof::sim::{perturb, synth_with_outliers, PerturbationKind, PerturbationSpec};
use actproof::topk::index_set_mismatch;
use actproof::{top_k, Precision};

fn main() -> actproof::Result<()> {
    let synth = synth_with_outliers(1, 32, 4096, Precision::Bf16)?;
    let chunk = &synth.chunk;
    let sketch = top_k(chunk, 128)?;
    let outliers = sketch.indices.iter().filter(|&&i| synth.is_outlier_index(i)).count();
    println!(
        "chunk {}x{}: {} outlier features, {outliers}/128 of the top-k fall on them",
        chunk.token_count(),
        chunk.hidden_dim(),
        synth.outlier_features.len()
    );
    println!("largest five:");
    for (i, pattern) in sketch.iter().take(5) {
        let (token, feature) = (i / chunk.hidden_dim(), i % chunk.hidden_dim());
        println!("  index {i:>6} (token {token:>2}, feature {feature:>4})  {pattern:#06x}  {:>9.3}", chunk.value_f64(i));
    }

    for kind in [PerturbationKind::BenignJitter, PerturbationKind::PromptPrefixSwap, PerturbationKind::ModelSwap] {
        let other = perturb(chunk, &PerturbationSpec::new(kind, 9))?;
        let m = index_set_mismatch(&sketch, &top_k(&other, 128)?)?;
        println!("{kind:<20} top-k index mismatch {:>3} ({:.1}%)", m.count, 100.0 * m.ratio);
    }
    Ok(())
}
