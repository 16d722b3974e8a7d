use num_complex::Complex64;

use crate::ofdm::ResourceGrid;
use crate::{Error, Result};

const SINGULAR: f64 = 1e-12;

/// Frequency response per FFT bin. Only active bins are meaningful.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelEstimate {
    h: Vec<Complex64>,
}

impl ChannelEstimate {
    /// Flat unit response: the channel is known to be ideal.
    pub fn ideal(fft_size: usize) -> Self {
        Self {
            h: vec![Complex64::new(1.0, 0.0); fft_size],
        }
    }

    pub fn from_response(h: Vec<Complex64>) -> Result<Self> {
        if h.iter().any(|v| !v.re.is_finite() || !v.im.is_finite()) {
            return Err(Error::invalid("channel response must be finite"));
        }
        Ok(Self { h })
    }

    /// Least-squares estimate `h = Y / X` from a known, phase-noise-free
    /// preamble symbol. Guard bins are set to 1.
    pub fn from_preamble(rx: &ResourceGrid, tx: &ResourceGrid, symbol: usize) -> Result<Self> {
        if !rx.same_layout(tx) {
            return Err(Error::invalid("preamble grids use different layouts"));
        }
        if symbol >= rx.n_symbols() || symbol >= tx.n_symbols() {
            return Err(Error::invalid(format!(
                "preamble symbol {symbol} out of range"
            )));
        }
        let y = rx.symbol(symbol);
        let x = tx.symbol(symbol);
        let mut h = vec![Complex64::new(1.0, 0.0); rx.fft_size()];
        for &k in rx.layout().active_bins() {
            if x[k].norm() < SINGULAR {
                return Err(Error::invalid(format!("preamble is empty at bin {k}")));
            }
            h[k] = y[k] / x[k];
        }
        Self::from_response(h)
    }

    pub fn response(&self) -> &[Complex64] {
        &self.h
    }

    pub fn len(&self) -> usize {
        self.h.len()
    }

    pub fn is_empty(&self) -> bool {
        self.h.is_empty()
    }
}

/// Divides every active cell by the channel response; guard cells are copied.
pub fn zf_equalize(rx: &ResourceGrid, chan: &ChannelEstimate) -> Result<ResourceGrid> {
    if chan.len() != rx.fft_size() {
        return Err(Error::invalid(format!(
            "channel estimate has {} bins, grid {}",
            chan.len(),
            rx.fft_size()
        )));
    }
    let h = chan.response();
    if let Some(&k) = rx
        .layout()
        .active_bins()
        .iter()
        .find(|&&k| h[k].norm() < SINGULAR)
    {
        return Err(Error::SingularChannel {
            bin: k,
            magnitude: h[k].norm(),
        });
    }
    let mut out = rx.clone();
    for m in 0..out.n_symbols() {
        let sym = out.symbol_mut(m);
        for &k in rx.layout().active_bins() {
            sym[k] /= h[k];
        }
    }
    Ok(out)
}
