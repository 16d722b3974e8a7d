use std::f64::consts::{PI, TAU};

use num_complex::Complex64;

use super::ChannelEstimate;
use crate::ofdm::{OfdmConfig, ResourceGrid};
use crate::{Error, Result};

/// One common phase error per OFDM symbol, in radians.
///
/// `anchor_sample` is the offset within each symbol (CP included) at which the
/// CPE is taken to hold: the symbol midpoint `N_T / 2`.
#[derive(Debug, Clone, PartialEq)]
pub struct CpeSeries {
    pub cpe_rad: Vec<f64>,
    pub anchor_sample: usize,
}

impl CpeSeries {
    pub fn len(&self) -> usize {
        self.cpe_rad.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cpe_rad.is_empty()
    }
}

/// `CPE^m = angle( Σ_{k∈pilots} Y_k^m · conj(H_k · X_k^m) )`.
///
/// `reference` supplies the transmitted pilots; only its pilot cells are read.
/// It may hold more symbols than `rx` (e.g. when `rx` is a truncated frame).
pub fn estimate_cpe(
    rx: &ResourceGrid,
    reference: &ResourceGrid,
    chan: &ChannelEstimate,
    config: &OfdmConfig,
) -> Result<CpeSeries> {
    if !rx.same_layout(reference) {
        return Err(Error::invalid(
            "received and reference grids use different pilot layouts",
        ));
    }
    if reference.n_symbols() < rx.n_symbols() {
        return Err(Error::invalid(format!(
            "reference has {} symbols, received grid {}",
            reference.n_symbols(),
            rx.n_symbols()
        )));
    }
    let pilots = rx.layout().pilot_bins();
    if pilots.is_empty() {
        return Err(Error::invalid("no pilot subcarriers"));
    }
    if chan.len() != rx.fft_size() {
        return Err(Error::invalid(
            "channel estimate does not cover the FFT bins",
        ));
    }
    let h = chan.response();
    let cpe_rad = (0..rx.n_symbols())
        .map(|m| {
            let y = rx.symbol(m);
            let x = reference.symbol(m);
            pilots
                .iter()
                .map(|&k| y[k] * (h[k] * x[k]).conj())
                .sum::<Complex64>()
                .arg()
        })
        .collect();
    Ok(CpeSeries {
        cpe_rad,
        anchor_sample: config.symbol_len() / 2,
    })
}

/// Maps successive differences into `(−π, π]` and re-accumulates.
///
/// Each output depends only on the current and earlier inputs.
pub fn unwrap_phases(phases: &[f64]) -> Vec<f64> {
    let mut out = Vec::with_capacity(phases.len());
    let mut prev_raw = 0.0;
    let mut acc = 0.0;
    for (i, &p) in phases.iter().enumerate() {
        if i == 0 {
            acc = p;
        } else {
            acc += wrap(p - prev_raw);
        }
        prev_raw = p;
        out.push(acc);
    }
    out
}

fn wrap(x: f64) -> f64 {
    let r = x - TAU * (x / TAU).round();
    if r <= -PI {
        r + TAU
    } else if r > PI {
        r - TAU
    } else {
        r
    }
}
