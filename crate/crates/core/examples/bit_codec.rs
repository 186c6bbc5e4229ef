//! Splitting bf16 and fp32 patterns into sign, exponent and mantissa.
//!
//! ```bash
//! cargo run -p actproof --example bit_codec
//! ```

use actproof::float_codec::{assemble_bits, extract_bits, pad_bf16_to_fp32, quantize_real, truncate_fp32_to_bf16};
use actproof::Precision;

fn main() -> actproof::Result<()> {
    println!("{:>8} {:>6} {:>4} {:>4} {:>8} {:>10}", "value", "bf16", "sign", "exp", "mantissa", "as fp32");
    for x in [1.0, -5.0, 5.03, 0.1, 3.0e38, 1.0e-40f64] {
        let pattern = quantize_real(x, Precision::Bf16)?;
        let f = extract_bits(pattern, Precision::Bf16);
        let wide = assemble_bits(pad_bf16_to_fp32(f)?)?;
        println!(
            "{:>8} {pattern:#06x} {:>4} {:>4} {:>8} {wide:#010x}",
            format!("{x:e}"),
            f.sign, f.exponent, f.mantissa
        );
        // Padding and truncation are inverses on bf16 fields.
        assert_eq!(truncate_fp32_to_bf16(pad_bf16_to_fp32(f)?)?, f);
        assert_eq!(assemble_bits(f)?, pattern);
    }

    let fp32 = quantize_real(5.03, Precision::Fp32)?;
    let f = extract_bits(fp32, Precision::Fp32);
    println!("\n5.03 as fp32: {fp32:#010x} exponent {} mantissa {:#08x}", f.exponent, f.mantissa);
    println!("truncated to bf16: {:#06x}", assemble_bits(truncate_fp32_to_bf16(f)?)?);
    Ok(())
}
