use serde::{Deserialize, Serialize};

use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Modulation {
    Qpsk,
}

impl Modulation {
    pub fn bits_per_symbol(self) -> usize {
        match self {
            Modulation::Qpsk => 2,
        }
    }
}

/// OFDM numerology for one frame.
///
/// The sample rate is not stored; it is `fft_size * subcarrier_spacing_hz`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OfdmConfig {
    pub subcarrier_spacing_hz: f64,
    pub fft_size: usize,
    pub cp_len_samples: usize,
    /// Fraction of the FFT bins in the active band (DC slot included, but unused).
    pub active_fraction: f64,
    pub pilot_stride: usize,
    pub modulation: Modulation,
    pub n_symbols: usize,
}

/// (subcarrier spacing [Hz], FFT size, CP duration [s]) for the five numerologies.
pub const TABLE_ROWS: [(f64, usize, f64); 5] = [
    (30e3, 8192, 2.4e-6),
    (60e3, 4096, 1.2e-6),
    (120e3, 2048, 0.6e-6),
    (240e3, 1024, 0.3e-6),
    (480e3, 512, 0.15e-6),
];

pub const DEFAULT_N_SYMBOLS: usize = 20;

/// Builds the numerology for table row `row` (1-based).
///
/// CP durations do not land on whole samples at `N * Δf`, so the CP length is
/// rounded; [`OfdmConfig::cp_duration_s`] reports the realized value.
pub fn make_config(row: usize) -> Result<OfdmConfig> {
    let &(spacing, n, t_cp) = row
        .checked_sub(1)
        .and_then(|i| TABLE_ROWS.get(i))
        .ok_or_else(|| Error::invalid(format!("config row must be in 1..=5, got {row}")))?;
    let cfg = OfdmConfig {
        subcarrier_spacing_hz: spacing,
        fft_size: n,
        cp_len_samples: (t_cp * n as f64 * spacing).round() as usize,
        active_fraction: 0.8,
        pilot_stride: 12,
        modulation: Modulation::Qpsk,
        n_symbols: DEFAULT_N_SYMBOLS,
    };
    cfg.validate()?;
    Ok(cfg)
}

impl OfdmConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.subcarrier_spacing_hz.is_finite() && self.subcarrier_spacing_hz > 0.0) {
            return Err(Error::invalid("subcarrier spacing must be positive"));
        }
        if self.fft_size < 4 || !self.fft_size.is_power_of_two() {
            return Err(Error::invalid(format!(
                "fft size must be a power of two >= 4, got {}",
                self.fft_size
            )));
        }
        if self.cp_len_samples >= self.fft_size {
            return Err(Error::invalid(
                "cp length must be shorter than the fft size",
            ));
        }
        if !(self.active_fraction > 0.0 && self.active_fraction <= 1.0) {
            return Err(Error::invalid("active fraction must be in (0, 1]"));
        }
        if self.pilot_stride == 0 {
            return Err(Error::invalid("pilot stride must be positive"));
        }
        if self.n_symbols == 0 {
            return Err(Error::invalid("n_symbols must be positive"));
        }
        let usable = self.usable_subcarriers();
        if usable < 2 || usable.div_ceil(self.pilot_stride) < 2 {
            return Err(Error::invalid(format!(
                "configuration yields fewer than two pilots ({usable} usable subcarriers, stride {})",
                self.pilot_stride
            )));
        }
        Ok(())
    }

    pub const fn default_n_symbols() -> usize {
        DEFAULT_N_SYMBOLS
    }

    pub fn sample_rate_hz(&self) -> f64 {
        self.fft_size as f64 * self.subcarrier_spacing_hz
    }

    /// N_T: useful part plus cyclic prefix.
    pub fn symbol_len(&self) -> usize {
        self.fft_size + self.cp_len_samples
    }

    pub fn frame_len(&self) -> usize {
        self.n_symbols * self.symbol_len()
    }

    /// Realized CP duration after rounding to whole samples.
    pub fn cp_duration_s(&self) -> f64 {
        self.cp_len_samples as f64 / self.sample_rate_hz()
    }

    pub fn symbol_duration_s(&self) -> f64 {
        self.symbol_len() as f64 / self.sample_rate_hz()
    }

    /// Width of the active band in bins, DC slot included.
    pub fn active_count(&self) -> usize {
        ((self.active_fraction * self.fft_size as f64).round() as usize).clamp(1, self.fft_size)
    }

    /// Active subcarriers that actually carry pilots or data (DC excluded).
    pub fn usable_subcarriers(&self) -> usize {
        self.active_count() - 1
    }

    pub fn pilot_count(&self) -> usize {
        self.usable_subcarriers().div_ceil(self.pilot_stride)
    }

    pub fn data_count(&self) -> usize {
        self.usable_subcarriers() - self.pilot_count()
    }

    pub fn with_full_active(mut self) -> Self {
        self.active_fraction = 1.0;
        self
    }

    pub fn with_n_symbols(mut self, n_symbols: usize) -> Self {
        self.n_symbols = n_symbols;
        self
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn row_two_numerology() {
        let c = make_config(2).unwrap();
        assert_eq!(c.subcarrier_spacing_hz, 60e3);
        assert_eq!(c.fft_size, 4096);
        // 1.2e-6 * 4096 * 60e3 = 294.912
        assert_eq!(c.cp_len_samples, 295);
        assert_eq!(c.symbol_len(), 4391);
        assert_eq!(c.sample_rate_hz(), 245.76e6);
        assert!((c.cp_duration_s() - 1.2e-6).abs() / 1.2e-6 < 3e-4);
    }

    #[test]
    fn row_five_numerology() {
        let c = make_config(5).unwrap();
        assert_eq!(c.subcarrier_spacing_hz, 480e3);
        assert_eq!(c.fft_size, 512);
        assert_eq!(c.cp_len_samples, 37);
    }

    #[test]
    fn all_rows_share_sample_rate() {
        for row in 1..=5 {
            let c = make_config(row).unwrap();
            assert_eq!(c.sample_rate_hz(), 245.76e6);
            assert_eq!(c.modulation, Modulation::Qpsk);
            assert_eq!(c.pilot_stride, 12);
        }
    }

    #[test]
    fn row_out_of_range() {
        assert!(matches!(make_config(0), Err(Error::InvalidArgument(_))));
        assert!(matches!(make_config(6), Err(Error::InvalidArgument(_))));
    }

    #[test]
    fn subcarrier_counts_row_two() {
        let c = make_config(2).unwrap();
        assert_eq!(c.active_count(), 3277);
        assert_eq!(c.usable_subcarriers(), 3276);
        assert_eq!(c.pilot_count(), 273);
        assert_eq!(c.data_count(), 3003);
    }

    #[test]
    fn rejects_bad_geometry() {
        let mut c = make_config(5).unwrap();
        c.cp_len_samples = 512;
        assert!(c.validate().is_err());
        let mut c = make_config(5).unwrap();
        c.fft_size = 500;
        assert!(c.validate().is_err());
        let mut c = make_config(5).unwrap();
        c.active_fraction = 0.001;
        assert!(c.validate().is_err());
    }
}
