//! Exact arithmetic over the integers modulo `m`: injective modulus search,
//! modular inverses, Newton interpolation and Horner evaluation.
//!
//! All moduli fit in 33 bits (at most `2^32`) and every residue is reduced
//! before multiplication, so products never leave `u64`.

use crate::error::{Error, Result};

/// Exclusive lower bound of every proof modulus.
pub const MODULUS_FLOOR: u64 = 1 << 15;
/// Upper bound of the 16-bit search.
pub const MODULUS_CEILING_16: u64 = 1 << 16;
/// Largest prime below `2^16`.
pub const PRIME_CEILING_16: u64 = 65521;
/// Largest prime below `2^32`.
pub const PRIME_CEILING_32: u64 = 4_294_967_291;

/// A polynomial over `Z_m` in ascending-degree coefficient order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ProofPoly {
    modulus: u64,
    coefficients: Vec<u64>,
}

impl ProofPoly {
    pub fn new(modulus: u64, coefficients: Vec<u64>) -> Result<Self> {
        if modulus <= MODULUS_FLOOR || modulus > 1 << 32 {
            return Err(Error::InvalidModulus(modulus));
        }
        if let Some((degree, &coefficient)) =
            coefficients.iter().enumerate().find(|(_, &c)| c >= modulus)
        {
            return Err(Error::CoefficientOutOfRange {
                degree,
                coefficient,
                modulus,
            });
        }
        Ok(ProofPoly {
            modulus,
            coefficients,
        })
    }

    pub fn modulus(&self) -> u64 {
        self.modulus
    }

    pub fn coefficients(&self) -> &[u64] {
        &self.coefficients
    }

    /// Number of coefficients (`k`).
    pub fn len(&self) -> usize {
        self.coefficients.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coefficients.is_empty()
    }

    pub fn eval(&self, x: u64) -> u64 {
        horner_eval(self, x)
    }
}

/// Reusable membership bitmap for residues below `2^16`.
struct ResidueSet {
    words: Vec<u64>,
    touched: Vec<usize>,
}

impl ResidueSet {
    fn new() -> Self {
        ResidueSet {
            words: vec![0; (MODULUS_CEILING_16 as usize) / 64],
            touched: Vec::new(),
        }
    }

    /// Inserts every residue, stopping at the first collision.
    fn all_distinct(&mut self, xs: &[u64], modulus: u64) -> bool {
        let mut distinct = true;
        for &x in xs {
            let r = (x % modulus) as usize;
            let (w, bit) = (r / 64, 1u64 << (r % 64));
            if self.words[w] & bit != 0 {
                distinct = false;
                break;
            }
            self.words[w] |= bit;
            self.touched.push(w);
        }
        for w in self.touched.drain(..) {
            self.words[w] = 0;
        }
        distinct
    }
}

fn injective_sorted(xs: &[u64], modulus: u64, scratch: &mut Vec<u64>) -> bool {
    scratch.clear();
    scratch.extend(xs.iter().map(|x| x % modulus));
    scratch.sort_unstable();
    scratch.windows(2).all(|w| w[0] != w[1])
}

/// Largest `i` in `(2^15, 2^16]` such that `x mod i` is injective on `xs`,
/// scanning downward from `65536`.
pub fn find_injective_modulus(xs: &[u64]) -> Result<u64> {
    ModulusSearcher::new().find(xs)
}

/// [`find_injective_modulus`] with scratch space kept across calls.
pub struct ModulusSearcher {
    set: ResidueSet,
}

impl ModulusSearcher {
    pub fn new() -> Self {
        ModulusSearcher {
            set: ResidueSet::new(),
        }
    }

    pub fn find(&mut self, xs: &[u64]) -> Result<u64> {
        (MODULUS_FLOOR + 1..=MODULUS_CEILING_16)
            .rev()
            .find(|&m| self.set.all_distinct(xs, m))
            .ok_or(Error::NoInjectiveModulus)
    }
}

impl Default for ModulusSearcher {
    fn default() -> Self {
        Self::new()
    }
}

/// Deterministic trial division; adequate for the 32-bit range used here.
pub fn is_prime(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    if n.is_multiple_of(2) {
        return n == 2;
    }
    let mut d = 3;
    while d * d <= n {
        if n.is_multiple_of(d) {
            return false;
        }
        d += 2;
    }
    true
}

/// Largest prime `p` with `floor < p <= ceiling` such that `x mod p` is
/// injective on `xs`.
pub fn find_injective_prime_in(xs: &[u64], floor: u64, ceiling: u64) -> Result<u64> {
    let mut scratch = Vec::with_capacity(xs.len());
    let mut p = ceiling;
    while p > floor {
        if is_prime(p) && injective_sorted(xs, p, &mut scratch) {
            return Ok(p);
        }
        p -= 1;
    }
    Err(Error::NoInjectiveModulus)
}

/// Largest prime in `(2^15, 65521]` that maps `xs` injectively.
pub fn find_injective_prime_modulus(xs: &[u64]) -> Result<u64> {
    find_injective_prime_in(xs, MODULUS_FLOOR, PRIME_CEILING_16)
}

/// Inverse of `a` modulo `modulus` via the extended Euclidean algorithm.
/// Bezout coefficients are mapped into `[0, modulus)`.
pub fn mod_inverse(a: u64, modulus: u64) -> Result<u64> {
    if modulus <= 1 {
        return Err(Error::InvalidModulus(modulus));
    }
    let m = i128::from(modulus);
    let (mut old_r, mut r) = (i128::from(a) % m, m);
    let (mut old_s, mut s) = (1i128, 0i128);
    while r != 0 {
        let q = old_r / r;
        (old_r, r) = (r, old_r - q * r);
        (old_s, s) = (s, old_s - q * s);
    }
    if old_r != 1 {
        return Err(Error::NotInvertible { a, modulus });
    }
    Ok(old_s.rem_euclid(m) as u64)
}

/// Operation counts recorded during interpolation.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct InterpolationStats {
    /// Modular multiplications in the field (excluding those inside inverses).
    pub mod_muls: u64,
    pub inversions: u64,
}

/// Newton divided-difference interpolation over `Z_m`.
pub fn newton_interpolate(xs: &[u64], ys: &[u64], modulus: u64) -> Result<ProofPoly> {
    newton_interpolate_with_stats(xs, ys, modulus).map(|(poly, _)| poly)
}

/// [`newton_interpolate`] that also reports how many field operations it
/// performed.
pub fn newton_interpolate_with_stats(
    xs: &[u64],
    ys: &[u64],
    modulus: u64,
) -> Result<(ProofPoly, InterpolationStats)> {
    let n = xs.len();
    if n == 0 || n != ys.len() {
        return Err(Error::InterpolationArity {
            xs: n,
            ys: ys.len(),
        });
    }
    if modulus <= MODULUS_FLOOR || modulus > 1 << 32 {
        return Err(Error::InvalidModulus(modulus));
    }
    let m = modulus;
    let x: Vec<u64> = xs.iter().map(|v| v % m).collect();
    {
        let mut seen = x.clone();
        seen.sort_unstable();
        if let Some(w) = seen.windows(2).find(|w| w[0] == w[1]) {
            return Err(Error::DuplicatePoint(w[0]));
        }
    }

    let mut stats = InterpolationStats::default();
    let mut mul = |a: u64, b: u64| {
        stats.mod_muls += 1;
        a * b % m
    };

    // dd[i] becomes the i-th Newton coefficient f[x_0..x_i].
    let mut dd: Vec<u64> = ys.iter().map(|v| v % m).collect();
    let mut inversions = 0u64;
    for level in 1..n {
        for i in (level..n).rev() {
            let numerator = (dd[i] + m - dd[i - 1]) % m;
            let denominator = (x[i] + m - x[i - level]) % m;
            let inv = mod_inverse(denominator, m).map_err(|_| Error::NotInvertible {
                a: denominator,
                modulus: m,
            })?;
            inversions += 1;
            dd[i] = mul(numerator, inv);
        }
    }

    // Expand sum dd[i] * prod_{j<i} (x - x_j) into monomial form.
    let mut coefficients = vec![0u64; n];
    let mut factor = vec![0u64; n];
    factor[0] = 1;
    for i in 0..n {
        for j in 0..=i {
            coefficients[j] = (coefficients[j] + mul(dd[i], factor[j])) % m;
        }
        if i + 1 < n {
            let neg_root = (m - x[i]) % m;
            let mut prev = factor[0];
            factor[0] = mul(prev, neg_root);
            for slot in factor.iter_mut().take(i + 2).skip(1) {
                let temp = *slot;
                *slot = (prev + mul(temp, neg_root)) % m;
                prev = temp;
            }
        }
    }
    stats.inversions = inversions;
    Ok((ProofPoly::new(modulus, coefficients)?, stats))
}

/// Evaluates the polynomial at `x` (reduced mod `m`) with Horner's rule.
pub fn horner_eval(poly: &ProofPoly, x: u64) -> u64 {
    horner_eval_counted(poly, x).0
}

/// Horner evaluation returning the number of modular multiplications.
pub fn horner_eval_counted(poly: &ProofPoly, x: u64) -> (u64, u64) {
    let m = poly.modulus;
    let x = x % m;
    let mut muls = 0;
    let mut coeffs = poly.coefficients.iter().rev();
    let mut acc = coeffs.next().copied().unwrap_or(0);
    for &c in coeffs {
        acc = (acc * x % m + c) % m;
        muls += 1;
    }
    (acc, muls)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn injective_modulus_examples() {
        let small: Vec<u64> = (0..128).collect();
        assert_eq!(find_injective_modulus(&small).unwrap(), 65536);
        assert_eq!(find_injective_modulus(&[0, 65536]).unwrap(), 65535);
    }

    #[test]
    fn injective_modulus_exhausted() {
        // Duplicate inputs collide under every modulus.
        assert_eq!(find_injective_modulus(&[5, 5]), Err(Error::NoInjectiveModulus));
        assert_eq!(
            Error::NoInjectiveModulus.to_string(),
            "No injective modulus found!"
        );
    }

    #[test]
    fn injective_modulus_is_maximal() {
        // Brute force: the result maps injectively and every larger
        // candidate collides.
        let xs = [3u64, 65539, 131075, 70000, 9];
        let m = find_injective_modulus(&xs).unwrap();
        let residues: std::collections::HashSet<u64> = xs.iter().map(|x| x % m).collect();
        assert_eq!(residues.len(), xs.len());
        for bigger in m + 1..=65536 {
            let r: std::collections::HashSet<u64> = xs.iter().map(|x| x % bigger).collect();
            assert!(r.len() < xs.len(), "{bigger} should collide");
        }
    }

    #[test]
    fn prime_modulus_examples() {
        assert!(is_prime(65521) && is_prime(65519) && !is_prime(65535));
        let small: Vec<u64> = (0..128).collect();
        assert_eq!(find_injective_prime_modulus(&small).unwrap(), 65521);
        assert_eq!(find_injective_prime_modulus(&[0, 65521]).unwrap(), 65519);
        assert_eq!(find_injective_prime_modulus(&[0, 1]).unwrap(), 65521);
        assert_eq!(
            find_injective_prime_in(&[0, 1], MODULUS_FLOOR, PRIME_CEILING_32).unwrap(),
            PRIME_CEILING_32
        );
    }

    #[test]
    fn mod_inverse_examples() {
        assert_eq!(mod_inverse(1, 2).unwrap(), 1);
        assert_eq!(mod_inverse(1, 65521).unwrap(), 1);
        assert_eq!(mod_inverse(2, 65521).unwrap(), 32761);
        assert_eq!(mod_inverse(4, 8), Err(Error::NotInvertible { a: 4, modulus: 8 }));
        assert_eq!(mod_inverse(0, 7), Err(Error::NotInvertible { a: 0, modulus: 7 }));
        assert_eq!(mod_inverse(3, 1), Err(Error::InvalidModulus(1)));
        assert_eq!(mod_inverse(3 + 65521, 65521).unwrap(), mod_inverse(3, 65521).unwrap());
    }

    #[test]
    fn interpolation_examples() {
        let m = 65521;
        assert_eq!(newton_interpolate(&[5], &[42], m).unwrap().coefficients(), &[42]);
        assert_eq!(newton_interpolate(&[0, 1], &[1, 3], m).unwrap().coefficients(), &[1, 2]);
        assert_eq!(
            newton_interpolate(&[0, 1, 2], &[0, 1, 4], m).unwrap().coefficients(),
            &[0, 0, 1]
        );
    }

    #[test]
    fn interpolation_errors() {
        assert_eq!(
            newton_interpolate(&[1, 65522], &[0, 0], 65521),
            Err(Error::DuplicatePoint(1))
        );
        assert!(matches!(
            newton_interpolate(&[], &[], 65521),
            Err(Error::InterpolationArity { .. })
        ));
        assert!(matches!(
            newton_interpolate(&[1, 2], &[0], 65521),
            Err(Error::InterpolationArity { .. })
        ));
        // Even differences have no inverse modulo 65536.
        assert!(matches!(
            newton_interpolate(&[0, 2], &[0, 1], 65536),
            Err(Error::NotInvertible { .. })
        ));
    }

    #[test]
    fn horner_examples() {
        let p = ProofPoly::new(65521, vec![7]).unwrap();
        assert_eq!(horner_eval(&p, 123), 7);
        let p = ProofPoly::new(65521, vec![1, 2]).unwrap();
        assert_eq!(horner_eval(&p, 5), 11);
        let p = ProofPoly::new(65521, vec![0, 0, 1]).unwrap();
        assert_eq!(horner_eval(&p, 256), 15);
        assert_eq!(horner_eval_counted(&p, 256).1, 2);
    }

    #[test]
    fn proof_poly_invariants() {
        assert_eq!(ProofPoly::new(32768, vec![1]), Err(Error::InvalidModulus(32768)));
        assert!(ProofPoly::new(32769, vec![1]).is_ok());
        assert!(matches!(
            ProofPoly::new(65521, vec![1, 65521]),
            Err(Error::CoefficientOutOfRange { degree: 1, .. })
        ));
    }
}
