//! EVM, phase-estimation MSE, BER and Welch PSD.

use num_complex::Complex64;
use rustfft::FftPlanner;
use serde::Serialize;

use crate::channel::PhaseTrace;
use crate::{Error, Result};

/// Outcome and provenance of one simulated frame.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunMetrics {
    /// Table row (1..=5) the numerology came from.
    pub config_id: usize,
    pub mode: String,
    pub slope_estimator: String,
    pub seed: u64,
    pub delay_s: f64,
    pub beta_hz: f64,
    pub source_linewidth_hz: f64,
    /// `+inf` when no noise is added (serialized as the string `"inf"`).
    #[serde(serialize_with = "serialize_snr")]
    pub snr_db: f64,
    pub n_symbols: usize,
    pub full_active: bool,
    pub subcarrier_spacing_hz: f64,
    pub fft_size: usize,
    pub cp_len_samples: usize,
    pub realized_tcp_s: f64,
    pub sample_rate_hz: f64,
    pub evm_percent: f64,
    /// Against the true phase; the standard receiver counts as estimating zero.
    pub phase_mse_rad2: f64,
    /// Same, leaving out samples the estimator flagged as edge fallbacks.
    pub phase_mse_excl_edges_rad2: f64,
    pub edge_samples: usize,
    pub ber: f64,
    pub per_symbol_cpe_rad: Vec<f64>,
    /// Set on sweep rows whose run failed; the metric fields are then NaN.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

fn serialize_snr<S: serde::Serializer>(v: &f64, s: S) -> std::result::Result<S::Ok, S::Error> {
    if v.is_infinite() {
        s.serialize_str(if *v > 0.0 { "inf" } else { "-inf" })
    } else {
        s.serialize_f64(*v)
    }
}

/// `100·sqrt(mean|rx − ref|² / mean|ref|²)`.
pub fn evm_percent(rx: &[Complex64], reference: &[Complex64]) -> Result<f64> {
    if rx.len() != reference.len() {
        return Err(Error::invalid(format!(
            "EVM inputs differ in length: {} vs {}",
            rx.len(),
            reference.len()
        )));
    }
    if rx.is_empty() {
        return Err(Error::invalid("EVM of an empty symbol set"));
    }
    let err: f64 = rx
        .iter()
        .zip(reference)
        .map(|(r, x)| (r - x).norm_sqr())
        .sum();
    let power: f64 = reference.iter().map(|x| x.norm_sqr()).sum();
    if power == 0.0 {
        return Err(Error::invalid("EVM reference has zero power"));
    }
    Ok(100.0 * (err / power).sqrt())
}

/// Mean squared phase error in rad².
///
/// With `exclude_edges`, samples flagged as edges on either trace are skipped.
pub fn phase_mse(estimate: &PhaseTrace, truth: &PhaseTrace, exclude_edges: bool) -> Result<f64> {
    if estimate.len() != truth.len() {
        return Err(Error::invalid(format!(
            "trace lengths differ: {} vs {}",
            estimate.len(),
            truth.len()
        )));
    }
    let (sum, count) = estimate
        .phase_rad
        .iter()
        .zip(&truth.phase_rad)
        .enumerate()
        .filter(|(i, _)| !exclude_edges || !(estimate.is_edge(*i) || truth.is_edge(*i)))
        .fold((0.0, 0usize), |(s, c), (_, (e, t))| {
            (s + (e - t).powi(2), c + 1)
        });
    if count == 0 {
        return Err(Error::invalid("no samples left to compare"));
    }
    Ok(sum / count as f64)
}

pub fn ber(rx_bits: &[u8], tx_bits: &[u8]) -> Result<f64> {
    if rx_bits.len() != tx_bits.len() {
        return Err(Error::invalid(format!(
            "bit streams differ in length: {} vs {}",
            rx_bits.len(),
            tx_bits.len()
        )));
    }
    if rx_bits.is_empty() {
        return Err(Error::invalid("BER of an empty bit stream"));
    }
    let errors = rx_bits
        .iter()
        .zip(tx_bits)
        .filter(|(a, b)| (*a & 1) != (*b & 1))
        .count();
    Ok(errors as f64 / rx_bits.len() as f64)
}

/// One-sided power spectral density.
#[derive(Debug, Clone, PartialEq)]
pub struct Psd {
    pub freq_hz: Vec<f64>,
    /// rad²/Hz for phase traces.
    pub density: Vec<f64>,
}

impl Psd {
    pub fn bin_width_hz(&self) -> f64 {
        self.freq_hz.get(1).copied().unwrap_or(0.0)
    }

    /// Sum of density × bin width, i.e. the power in the trace.
    pub fn integrated_power(&self) -> f64 {
        self.density.iter().sum::<f64>() * self.bin_width_hz()
    }

    /// Index of the bin closest to `f`.
    pub fn bin_of(&self, f: f64) -> usize {
        let idx = (f / self.bin_width_hz()).round() as usize;
        idx.min(self.freq_hz.len() - 1)
    }
}

/// Averaged modified periodogram with a periodic Hann window.
///
/// Each segment has its mean removed. Density scaling is
/// `|X|² / (Fs·Σw²)`, doubled on every bin except DC and Nyquist, so
/// [`Psd::integrated_power`] matches the variance of the trace.
pub fn welch_psd(trace: &PhaseTrace, segment_len: usize, overlap_fraction: f64) -> Result<Psd> {
    let n = trace.len();
    if segment_len < 2 || segment_len > n {
        return Err(Error::invalid(format!(
            "segment length {segment_len} must be in 2..={n}"
        )));
    }
    if !(0.0..1.0).contains(&overlap_fraction) {
        return Err(Error::invalid(format!(
            "overlap {overlap_fraction} must be in [0, 1)"
        )));
    }
    let fs = trace.sample_rate_hz;
    let overlap = (overlap_fraction * segment_len as f64).floor() as usize;
    let step = segment_len - overlap;
    let n_segments = (n - segment_len) / step + 1;

    let window: Vec<f64> = (0..segment_len)
        .map(|i| {
            let x = std::f64::consts::PI * i as f64 / segment_len as f64;
            x.sin().powi(2)
        })
        .collect();
    let window_power: f64 = window.iter().map(|w| w * w).sum();
    let fft = FftPlanner::<f64>::new().plan_fft_forward(segment_len);
    let mut scratch = vec![Complex64::default(); fft.get_inplace_scratch_len()];
    let mut buf = vec![Complex64::default(); segment_len];
    let n_bins = segment_len / 2 + 1;
    let mut acc = vec![0.0; n_bins];

    for s in 0..n_segments {
        let seg = &trace.phase_rad[s * step..s * step + segment_len];
        let mean = seg.iter().sum::<f64>() / segment_len as f64;
        for ((b, &x), &w) in buf.iter_mut().zip(seg).zip(&window) {
            *b = Complex64::new((x - mean) * w, 0.0);
        }
        fft.process_with_scratch(&mut buf, &mut scratch);
        for (a, b) in acc.iter_mut().zip(&buf) {
            *a += b.norm_sqr();
        }
    }

    let scale = 1.0 / (fs * window_power * n_segments as f64);
    let density = acc
        .iter()
        .enumerate()
        .map(|(k, &p)| {
            let one_sided = if k == 0 || (segment_len.is_multiple_of(2) && k == segment_len / 2) {
                1.0
            } else {
                2.0
            };
            p * scale * one_sided
        })
        .collect();
    let freq_hz = (0..n_bins)
        .map(|k| k as f64 * fs / segment_len as f64)
        .collect();
    Ok(Psd { freq_hz, density })
}
