use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;

use crate::ofdm::{OfdmConfig, TimeSignal};
use crate::{Error, Result};

/// Samples quieter than this are left out of the slope estimate.
const MIN_MAGNITUDE: f64 = 1e-12;

/// Phase slope per OFDM symbol in radians per sample.
#[derive(Debug, Clone, PartialEq)]
pub struct SlopeSeries {
    pub slope_rad_per_sample: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SlopeEstimator {
    /// Mean of the per-pair principal angles `angle(r[i+N] / r[i])`, over `N`.
    #[default]
    Literal,
    /// `angle(Σ r[i+N]·conj(r[i])) / N`: weights pairs by power, so weak
    /// samples contribute less at low SNR.
    Robust,
}

impl SlopeEstimator {
    pub fn as_str(self) -> &'static str {
        match self {
            SlopeEstimator::Literal => "literal",
            SlopeEstimator::Robust => "robust",
        }
    }
}

impl fmt::Display for SlopeEstimator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for SlopeEstimator {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "literal" => Ok(SlopeEstimator::Literal),
            "robust" => Ok(SlopeEstimator::Robust),
            other => Err(Error::invalid(format!("unknown slope estimator '{other}'"))),
        }
    }
}

/// Estimates the phase slope of each symbol from its cyclic prefix.
///
/// For CP sample `i` (offset `0..N_cp` in the symbol) the matching tail sample
/// is `i + N`; without noise `angle(r[i+N]/r[i]) = φ[i+N] − φ[i]`. The literal
/// estimator is exact for linear phase as long as `|N·slope| < π`.
pub fn estimate_slope_cp(
    rx: &TimeSignal,
    config: &OfdmConfig,
    estimator: SlopeEstimator,
) -> Result<SlopeSeries> {
    let nt = config.symbol_len();
    let n = config.fft_size;
    let ncp = config.cp_len_samples;
    if ncp == 0 {
        return Err(Error::invalid("slope estimation needs a cyclic prefix"));
    }
    if rx.is_empty() || !rx.len().is_multiple_of(nt) {
        return Err(Error::invalid(format!(
            "signal length {} is not a positive multiple of the symbol length {nt}",
            rx.len()
        )));
    }
    let slope_rad_per_sample = rx
        .samples
        .chunks_exact(nt)
        .enumerate()
        .map(|(m, sym)| {
            let pairs = sym[..ncp].iter().zip(&sym[n..nt]);
            match estimator {
                SlopeEstimator::Literal => literal(pairs, n),
                SlopeEstimator::Robust => robust(pairs, n),
            }
            .ok_or_else(|| {
                Error::DegenerateInput(format!(
                    "symbol {m}: every CP sample is below {MIN_MAGNITUDE:e}"
                ))
            })
        })
        .collect::<Result<_>>()?;
    Ok(SlopeSeries {
        slope_rad_per_sample,
    })
}

fn usable(head: &Complex64, tail: &Complex64) -> bool {
    head.norm() >= MIN_MAGNITUDE && tail.norm() >= MIN_MAGNITUDE
}

fn literal<'a>(
    pairs: impl Iterator<Item = (&'a Complex64, &'a Complex64)>,
    n: usize,
) -> Option<f64> {
    let (sum, count) = pairs
        .filter(|(h, t)| usable(h, t))
        .fold((0.0, 0usize), |(s, c), (h, t)| {
            (s + (t * h.conj()).arg(), c + 1)
        });
    (count > 0).then(|| sum / (count * n) as f64)
}

fn robust<'a>(
    pairs: impl Iterator<Item = (&'a Complex64, &'a Complex64)>,
    n: usize,
) -> Option<f64> {
    let acc: Complex64 = pairs
        .filter(|(h, t)| usable(h, t))
        .map(|(h, t)| t * h.conj())
        .sum();
    (acc.norm() >= MIN_MAGNITUDE).then(|| acc.arg() / n as f64)
}
