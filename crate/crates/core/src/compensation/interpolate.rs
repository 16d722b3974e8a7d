use num_complex::Complex64;

use super::{unwrap_phases, CpeSeries, SlopeSeries};
use crate::channel::PhaseTrace;
use crate::ofdm::{OfdmConfig, TimeSignal};
use crate::{Error, Result};

/// Cross-symbol LI-CPE: straight lines between the CPEs of consecutive symbols,
/// each placed at its symbol's anchor sample.
///
/// Samples before the first anchor and after the last have no second CPE to
/// interpolate with; they hold the nearest CPE and are listed in
/// [`PhaseTrace::edges`].
pub fn interpolate_baseline_licpe(cpes: &CpeSeries, config: &OfdmConfig) -> Result<PhaseTrace> {
    let m = cpes.len();
    if m < 2 {
        return Err(Error::invalid(format!(
            "cross-symbol interpolation needs at least 2 symbols, got {m}"
        )));
    }
    let nt = config.symbol_len();
    if cpes.anchor_sample >= nt {
        return Err(Error::invalid("CPE anchor lies outside the symbol"));
    }
    let cpe = unwrap_phases(&cpes.cpe_rad);
    let first = cpes.anchor_sample;
    let last = (m - 1) * nt + cpes.anchor_sample;
    let total = m * nt;
    let phase = (0..total)
        .map(|t| {
            if t <= first {
                cpe[0]
            } else if t >= last {
                cpe[m - 1]
            } else {
                let seg = (t - first) / nt;
                let frac = (t - first - seg * nt) as f64 / nt as f64;
                cpe[seg] + frac * (cpe[seg + 1] - cpe[seg])
            }
        })
        .collect();
    let mut trace = PhaseTrace::new(phase, config.sample_rate_hz());
    trace.edges = vec![0..first, last + 1..total];
    Ok(trace)
}

/// Single-symbol LI-CPE: `ρ̂[k] = slope·(k − N_T/2) + CPE` for `k` in `0..N_T`.
///
/// Symbol `m` uses only its own CPE and slope (the CPE is unwrapped against
/// earlier symbols, never later ones).
pub fn interpolate_advanced_licpe(
    cpes: &CpeSeries,
    slopes: &SlopeSeries,
    config: &OfdmConfig,
) -> Result<PhaseTrace> {
    if cpes.len() != slopes.slope_rad_per_sample.len() {
        return Err(Error::invalid(format!(
            "{} CPEs but {} slopes",
            cpes.len(),
            slopes.slope_rad_per_sample.len()
        )));
    }
    let nt = config.symbol_len();
    let centre = nt as f64 / 2.0;
    let cpe = unwrap_phases(&cpes.cpe_rad);
    let phase = cpe
        .iter()
        .zip(&slopes.slope_rad_per_sample)
        .flat_map(|(&c, &s)| (0..nt).map(move |k| s * (k as f64 - centre) + c))
        .collect();
    Ok(PhaseTrace::new(phase, config.sample_rate_hz()))
}

/// `out[n] = in[n]·e^{−j·estimate[n]}`.
pub fn compensate(rx: &TimeSignal, estimate: &PhaseTrace) -> Result<TimeSignal> {
    if rx.len() != estimate.len() {
        return Err(Error::invalid(format!(
            "signal has {} samples, estimate {}",
            rx.len(),
            estimate.len()
        )));
    }
    Ok(TimeSignal::new(
        rx.samples
            .iter()
            .zip(&estimate.phase_rad)
            .map(|(s, &p)| s * Complex64::cis(-p))
            .collect(),
        rx.sample_rate_hz,
    ))
}
