//! Bit-level handling of bf16 and fp32 activation patterns.
//!
//! Patterns are carried as `u32` regardless of precision; a bf16 pattern
//! occupies the low 16 bits. Both formats share the same 8-bit exponent, so
//! cross-precision comparison only has to rescale the mantissa field.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Exponent bias shared by bf16 and fp32.
pub const EXPONENT_BIAS: i32 = 127;
const EXPONENT_MAX: u32 = 0xFF;

/// Mantissa width difference between fp32 and bf16.
pub const ALIGN_SHIFT: u32 = 16;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Precision {
    Bf16,
    Fp32,
}

impl Precision {
    pub const fn bits(self) -> u32 {
        match self {
            Precision::Bf16 => 16,
            Precision::Fp32 => 32,
        }
    }

    pub const fn mantissa_bits(self) -> u32 {
        match self {
            Precision::Bf16 => 7,
            Precision::Fp32 => 23,
        }
    }

    pub const fn exponent_bits(self) -> u32 {
        8
    }

    pub const fn bytes(self) -> usize {
        (self.bits() / 8) as usize
    }

    /// Largest pattern value of this width.
    pub const fn max_pattern(self) -> u32 {
        match self {
            Precision::Bf16 => 0xFFFF,
            Precision::Fp32 => u32::MAX,
        }
    }

    pub const fn sign_mask(self) -> u32 {
        1 << (self.bits() - 1)
    }

    pub const fn mantissa_mask(self) -> u32 {
        (1 << self.mantissa_bits()) - 1
    }

    /// The other supported precision.
    pub const fn other(self) -> Precision {
        match self {
            Precision::Bf16 => Precision::Fp32,
            Precision::Fp32 => Precision::Bf16,
        }
    }

    pub fn fits(self, pattern: u32) -> bool {
        pattern <= self.max_pattern()
    }

    /// True when the exponent field is all ones (infinity or NaN).
    pub fn is_non_finite(self, pattern: u32) -> bool {
        (pattern >> self.mantissa_bits()) & EXPONENT_MAX == EXPONENT_MAX
    }

    /// Pattern with the sign bit cleared. For finite values this orders
    /// identically to the absolute value.
    pub fn magnitude_key(self, pattern: u32) -> u32 {
        pattern & !self.sign_mask()
    }

    pub fn to_f64(self, pattern: u32) -> f64 {
        match self {
            Precision::Bf16 => f64::from(f32::from_bits(pattern << ALIGN_SHIFT)),
            Precision::Fp32 => f64::from(f32::from_bits(pattern)),
        }
    }
}

impl fmt::Display for Precision {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.pad(match self {
            Precision::Bf16 => "bf16",
            Precision::Fp32 => "fp32",
        })
    }
}

impl std::str::FromStr for Precision {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "bf16" | "bfloat16" => Ok(Precision::Bf16),
            "fp32" | "f32" | "float32" => Ok(Precision::Fp32),
            _ => Err(Error::InvalidConfig(format!("unknown precision {s:?}"))),
        }
    }
}

/// Sign, biased exponent and mantissa slices of one pattern.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct BitFields {
    pub sign: u32,
    pub exponent: u32,
    pub mantissa: u32,
    pub precision: Precision,
}

impl BitFields {
    /// Sign and exponent as one integer; the unit compared for exponent
    /// mismatches so that a sign flip also counts as a mismatch.
    pub fn sign_exponent(&self) -> u32 {
        (self.sign << 8) | self.exponent
    }
}

/// Splits `pattern` into its fields. The pattern must fit the precision's
/// width; higher bits are ignored.
pub fn extract_bits(pattern: u32, precision: Precision) -> BitFields {
    debug_assert!(precision.fits(pattern), "{pattern:#x} wider than {precision}");
    let mb = precision.mantissa_bits();
    BitFields {
        sign: (pattern >> (precision.bits() - 1)) & 1,
        exponent: (pattern >> mb) & EXPONENT_MAX,
        mantissa: pattern & precision.mantissa_mask(),
        precision,
    }
}

pub fn assemble_bits(fields: BitFields) -> Result<u32> {
    let precision = fields.precision;
    if fields.sign > 1 {
        return Err(Error::FieldOutOfRange {
            field: "sign",
            value: fields.sign,
            precision,
        });
    }
    if fields.exponent > EXPONENT_MAX {
        return Err(Error::FieldOutOfRange {
            field: "exponent",
            value: fields.exponent,
            precision,
        });
    }
    if fields.mantissa > precision.mantissa_mask() {
        return Err(Error::FieldOutOfRange {
            field: "mantissa",
            value: fields.mantissa,
            precision,
        });
    }
    let mb = precision.mantissa_bits();
    Ok((fields.sign << (precision.bits() - 1)) | (fields.exponent << mb) | fields.mantissa)
}

/// Widens bf16 fields to fp32 by appending 16 zero mantissa bits.
pub fn pad_bf16_to_fp32(fields: BitFields) -> Result<BitFields> {
    if fields.precision != Precision::Bf16 {
        return Err(Error::WrongPrecision {
            expected: Precision::Bf16,
            actual: fields.precision,
        });
    }
    Ok(BitFields {
        mantissa: fields.mantissa << ALIGN_SHIFT,
        precision: Precision::Fp32,
        ..fields
    })
}

/// Narrows fp32 fields to bf16 by dropping the low 16 mantissa bits.
pub fn truncate_fp32_to_bf16(fields: BitFields) -> Result<BitFields> {
    if fields.precision != Precision::Fp32 {
        return Err(Error::WrongPrecision {
            expected: Precision::Fp32,
            actual: fields.precision,
        });
    }
    Ok(BitFields {
        mantissa: fields.mantissa >> ALIGN_SHIFT,
        precision: Precision::Bf16,
        ..fields
    })
}

/// Brings `fields` to `target` precision using padding or truncation.
pub fn align(fields: BitFields, target: Precision) -> BitFields {
    match (fields.precision, target) {
        (Precision::Bf16, Precision::Fp32) => BitFields {
            mantissa: fields.mantissa << ALIGN_SHIFT,
            precision: target,
            ..fields
        },
        (Precision::Fp32, Precision::Bf16) => BitFields {
            mantissa: fields.mantissa >> ALIGN_SHIFT,
            precision: target,
            ..fields
        },
        _ => fields,
    }
}

/// Rounds a finite real to the nearest representable pattern, ties to even.
///
/// Rounds directly from `f64` so bf16 results do not suffer the double
/// rounding of an intermediate fp32 step. Subnormals are produced exactly.
pub fn quantize_real(x: f64, precision: Precision) -> Result<u32> {
    if !x.is_finite() {
        return Err(Error::Unrepresentable {
            value: x,
            precision,
            reason: "not finite",
        });
    }
    let mb = precision.mantissa_bits() as i32;
    let sign = if x.is_sign_negative() { precision.sign_mask() } else { 0 };
    let a = x.abs();
    if a == 0.0 {
        return Ok(sign);
    }

    // Unbiased exponent of `a` (exact, from the f64 encoding).
    let e = {
        let bits = a.to_bits();
        let raw = ((bits >> 52) & 0x7FF) as i32;
        if raw == 0 {
            // f64 subnormal: far below any bf16/fp32 subnormal.
            -1075
        } else {
            raw - 1023
        }
    };
    let min_normal_exp = 1 - EXPONENT_BIAS;
    let (biased, quantum_exp) = if e < min_normal_exp {
        (0i64, min_normal_exp - mb)
    } else {
        (i64::from(e + EXPONENT_BIAS), e - mb)
    };
    let steps = (a * 2f64.powi(-quantum_exp)).round_ties_even() as i64;

    // For normals `steps` lies in [2^mb, 2^(mb+1)]; the hidden bit is removed
    // and a carry to 2^(mb+1) bumps the exponent by itself.
    let pattern = if biased == 0 {
        steps
    } else {
        (biased << mb) + steps - (1i64 << mb)
    };
    if pattern >> mb >= i64::from(EXPONENT_MAX) {
        return Err(Error::Unrepresentable {
            value: x,
            precision,
            reason: "overflows to infinity",
        });
    }
    Ok(sign | pattern as u32)
}

/// Rounds an existing pattern into another precision (exact when widening).
pub fn convert_pattern(pattern: u32, from: Precision, to: Precision) -> Result<u32> {
    if from == to {
        return Ok(pattern);
    }
    quantize_real(from.to_f64(pattern), to)
}
