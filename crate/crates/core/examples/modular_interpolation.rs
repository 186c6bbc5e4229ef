//! Injective modulus search, modular inverses and Newton interpolation.
//!
//! ```bash
//! cargo run --release -p actproof --example modular_interpolation
//! ```

use actproof::modpoly::{
    find_injective_modulus, find_injective_prime_modulus, horner_eval_counted, mod_inverse,
    newton_interpolate_with_stats,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn main() -> actproof::Result<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    // 128 distinct flat indices into a 32 x 4096 chunk.
    let mut xs: Vec<u64> = rand::seq::index::sample(&mut rng, 32 * 4096, 128).into_iter().map(|i| i as u64).collect();
    xs.sort_unstable();
    let ys: Vec<u64> = (0..128).map(|_| rng.random_range(0..=0x7F7F)).collect();

    println!("largest injective modulus: {}", find_injective_modulus(&xs)?);
    let p = find_injective_prime_modulus(&xs)?;
    println!("largest injective prime:   {p}");
    println!("inverse of 12345 mod {p}: {}", mod_inverse(12345, p)?);
    println!("inverse of 6 mod 9: {}", mod_inverse(6, 9).map_or_else(|e| e.to_string(), |v| v.to_string()));

    let (poly, stats) = newton_interpolate_with_stats(&xs, &ys, p)?;
    println!(
        "interpolated {} points: {} modular multiplications (2k^2 = {}), {} inversions",
        xs.len(),
        stats.mod_muls,
        2 * 128 * 128,
        stats.inversions
    );
    let mut muls = 0;
    for (&x, &y) in xs.iter().zip(&ys) {
        let (v, m) = horner_eval_counted(&poly, x);
        assert_eq!(v, y);
        muls += m;
    }
    println!("all 128 points reproduced; Horner used {} multiplications each", muls / 128);
    Ok(())
}
