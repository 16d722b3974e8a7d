use std::sync::Arc;

use num_complex::Complex64;
use rustfft::FftPlanner;

use super::{OfdmConfig, ResourceGrid, SubcarrierLayout};
use crate::{Error, Result};

/// Complex baseband samples at a fixed rate.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeSignal {
    pub samples: Vec<Complex64>,
    pub sample_rate_hz: f64,
}

impl TimeSignal {
    pub fn new(samples: Vec<Complex64>, sample_rate_hz: f64) -> Self {
        Self {
            samples,
            sample_rate_hz,
        }
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn mean_power(&self) -> f64 {
        if self.samples.is_empty() {
            return 0.0;
        }
        self.total_power() / self.samples.len() as f64
    }

    pub fn total_power(&self) -> f64 {
        self.samples.iter().map(|s| s.norm_sqr()).sum()
    }
}

/// Unitary IDFT per symbol with the last `cp_len_samples` samples prepended.
pub fn modulate(grid: &ResourceGrid, config: &OfdmConfig) -> Result<TimeSignal> {
    config.validate()?;
    let n = config.fft_size;
    if grid.fft_size() != n || grid.n_symbols() != config.n_symbols {
        return Err(Error::invalid(format!(
            "grid is {}x{}, config expects {}x{}",
            grid.n_symbols(),
            grid.fft_size(),
            config.n_symbols,
            n
        )));
    }
    let ncp = config.cp_len_samples;
    let ifft = FftPlanner::<f64>::new().plan_fft_inverse(n);
    let scale = 1.0 / (n as f64).sqrt();
    let mut buf = vec![Complex64::default(); n];
    let mut scratch = vec![Complex64::default(); ifft.get_inplace_scratch_len()];
    let mut out = Vec::with_capacity(config.frame_len());
    for sym in grid.symbols() {
        buf.copy_from_slice(sym);
        ifft.process_with_scratch(&mut buf, &mut scratch);
        buf.iter_mut().for_each(|s| *s *= scale);
        out.extend_from_slice(&buf[n - ncp..]);
        out.extend_from_slice(&buf);
    }
    Ok(TimeSignal::new(out, config.sample_rate_hz()))
}

/// Drops each symbol's CP and applies a unitary DFT.
///
/// The number of symbols is taken from the signal length, so a truncated frame
/// demodulates to a grid with fewer rows.
pub fn demodulate(signal: &TimeSignal, config: &OfdmConfig) -> Result<ResourceGrid> {
    let layout = Arc::new(SubcarrierLayout::new(config)?);
    demodulate_with_layout(signal, config, layout)
}

pub(crate) fn demodulate_with_layout(
    signal: &TimeSignal,
    config: &OfdmConfig,
    layout: Arc<SubcarrierLayout>,
) -> Result<ResourceGrid> {
    let nt = config.symbol_len();
    if signal.is_empty() || !signal.len().is_multiple_of(nt) {
        return Err(Error::invalid(format!(
            "signal length {} is not a positive multiple of the symbol length {nt}",
            signal.len()
        )));
    }
    let n = config.fft_size;
    let ncp = config.cp_len_samples;
    let fft = FftPlanner::<f64>::new().plan_fft_forward(n);
    let scale = 1.0 / (n as f64).sqrt();
    let mut scratch = vec![Complex64::default(); fft.get_inplace_scratch_len()];
    let mut cells = Vec::with_capacity(signal.len() / nt * n);
    for chunk in signal.samples.chunks_exact(nt) {
        let start = cells.len();
        cells.extend_from_slice(&chunk[ncp..]);
        let buf = &mut cells[start..];
        fft.process_with_scratch(buf, &mut scratch);
        buf.iter_mut().for_each(|s| *s *= scale);
    }
    ResourceGrid::from_cells(signal.len() / nt, cells, layout)
}
