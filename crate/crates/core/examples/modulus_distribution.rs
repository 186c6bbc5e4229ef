//! How often each modulus is the largest injective one for 128 random
//! 32-bit indices.
//!
//! ```bash
//! cargo run --release -p actproof --example modulus_distribution -- 1000000
//! ```

use actproof::sim::modulus_distribution_mc;

fn main() -> actproof::Result<()> {
    let samples: u64 = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(100_000);
    let dist = modulus_distribution_mc(samples, 128, 0)?;
    print!("{}", dist.to_table());
    let exact: f64 = (0..128)
        .map(|i| (4294967296.0 - i as f64 * 65536.0) / (4294967296.0 - i as f64))
        .product();
    println!("\nclosed form for 65536: {exact:.4}");
    Ok(())
}
