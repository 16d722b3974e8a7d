use std::f64::consts::FRAC_1_SQRT_2;

use num_complex::Complex64;
use rand::Rng;

use crate::{Error, Result};

/// Gray-mapped unit-energy QPSK: the first bit of each pair selects the sign
/// of I, the second the sign of Q (0 → +, 1 → −).
pub fn map_qpsk(bits: &[u8]) -> Result<Vec<Complex64>> {
    if !bits.len().is_multiple_of(2) {
        return Err(Error::invalid(format!(
            "QPSK needs an even bit count, got {}",
            bits.len()
        )));
    }
    Ok(bits
        .chunks_exact(2)
        .map(|p| Complex64::new(level(p[0]), level(p[1])))
        .collect())
}

fn level(bit: u8) -> f64 {
    if bit & 1 == 0 {
        FRAC_1_SQRT_2
    } else {
        -FRAC_1_SQRT_2
    }
}

/// Hard-decision demapper matching [`map_qpsk`].
pub fn demap_qpsk(symbols: &[Complex64]) -> Vec<u8> {
    symbols
        .iter()
        .flat_map(|s| [(s.re < 0.0) as u8, (s.im < 0.0) as u8])
        .collect()
}

pub fn random_bits<R: Rng + ?Sized>(rng: &mut R, n: usize) -> Vec<u8> {
    (0..n).map(|_| rng.gen::<bool>() as u8).collect()
}
