//! Phase-noise processes and the receive channel.
//!
//! Two processes are modelled. A free-running oscillator with two-sided 3-dB
//! linewidth `β` produces a Wiener phase whose increments have variance
//! `2πβ/Fs`. A source that reaches the receiver over two paths differing by a
//! delay `τ` contributes only the difference `φ(t) − φ(t − τ)`, which is
//! bounded, scales with `τ`, and has a `4 sin²(πfτ)`-shaped spectrum with nulls
//! at multiples of `1/τ`.

use std::f64::consts::PI;
use std::ops::Range;

use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::ofdm::TimeSignal;
use crate::seed::{rng_for, stream_seed, Stream};
use crate::{Error, Result};

/// Per-sample phase in radians.
///
/// Estimates produced by the cross-symbol interpolator mark the samples they
/// could not interpolate (before the first anchor, after the last) in `edges`.
#[derive(Debug, Clone, PartialEq)]
pub struct PhaseTrace {
    pub phase_rad: Vec<f64>,
    pub sample_rate_hz: f64,
    pub edges: Vec<Range<usize>>,
}

impl PhaseTrace {
    pub fn new(phase_rad: Vec<f64>, sample_rate_hz: f64) -> Self {
        Self {
            phase_rad,
            sample_rate_hz,
            edges: Vec::new(),
        }
    }

    pub fn zeros(n: usize, sample_rate_hz: f64) -> Self {
        Self::new(vec![0.0; n], sample_rate_hz)
    }

    pub fn len(&self) -> usize {
        self.phase_rad.len()
    }

    pub fn is_empty(&self) -> bool {
        self.phase_rad.is_empty()
    }

    pub fn is_edge(&self, i: usize) -> bool {
        self.edges.iter().any(|r| r.contains(&i))
    }

    pub fn edge_sample_count(&self) -> usize {
        self.edges.iter().map(|r| r.len()).sum()
    }

    /// Sample-wise sum. Edge flags are not carried over.
    pub fn add(&self, other: &PhaseTrace) -> Result<PhaseTrace> {
        if self.len() != other.len() {
            return Err(Error::invalid(format!(
                "trace lengths differ: {} vs {}",
                self.len(),
                other.len()
            )));
        }
        Ok(PhaseTrace::new(
            self.phase_rad
                .iter()
                .zip(&other.phase_rad)
                .map(|(a, b)| a + b)
                .collect(),
            self.sample_rate_hz,
        ))
    }
}

pub fn wiener_increment_variance(beta_hz: f64, sample_rate_hz: f64) -> f64 {
    2.0 * PI * beta_hz / sample_rate_hz
}

pub fn gen_wiener_phase(
    beta_hz: f64,
    n_samples: usize,
    sample_rate_hz: f64,
    seed: u64,
) -> Result<PhaseTrace> {
    if !(beta_hz >= 0.0 && beta_hz.is_finite()) {
        return Err(Error::invalid(format!(
            "linewidth must be >= 0, got {beta_hz}"
        )));
    }
    if n_samples == 0 {
        return Err(Error::invalid("phase trace needs at least one sample"));
    }
    if !(sample_rate_hz > 0.0 && sample_rate_hz.is_finite()) {
        return Err(Error::invalid("sample rate must be positive"));
    }
    let sigma = wiener_increment_variance(beta_hz, sample_rate_hz).sqrt();
    let mut rng = rng_for(seed);
    let mut phase = Vec::with_capacity(n_samples);
    let mut acc = 0.0;
    phase.push(acc);
    for _ in 1..n_samples {
        let w: f64 = rng.sample(StandardNormal);
        acc += sigma * w;
        phase.push(acc);
    }
    Ok(PhaseTrace::new(phase, sample_rate_hz))
}

pub fn delay_in_samples(delay_s: f64, sample_rate_hz: f64) -> Result<usize> {
    if !(delay_s >= 0.0 && delay_s.is_finite()) {
        return Err(Error::invalid(format!("delay must be >= 0, got {delay_s}")));
    }
    Ok((delay_s * sample_rate_hz).round() as usize)
}

/// `ψ[n] = φ[n] − φ[n − D]`, with `ψ[n] = φ[n] − φ[0]` while `n < D`.
pub fn gen_delayed_branch_phase(base: &PhaseTrace, delay_s: f64) -> Result<PhaseTrace> {
    let d = delay_in_samples(delay_s, base.sample_rate_hz)?;
    if d >= base.len() {
        return Err(Error::invalid(format!(
            "delay of {d} samples does not fit in a trace of {} samples",
            base.len()
        )));
    }
    let phi = &base.phase_rad;
    let out = (0..phi.len())
        .map(|n| phi[n] - phi[n.saturating_sub(d)])
        .collect();
    Ok(PhaseTrace::new(out, base.sample_rate_hz))
}

/// `out[n] = in[n]·e^{jφ[n]} + g[n]`; `snr_db = +∞` disables the noise.
///
/// The noise power is referenced to the mean power of `signal`.
pub fn apply_channel(
    signal: &TimeSignal,
    phase: &PhaseTrace,
    snr_db: f64,
    seed: u64,
) -> Result<TimeSignal> {
    if signal.len() != phase.len() {
        return Err(Error::invalid(format!(
            "signal has {} samples, phase trace {}",
            signal.len(),
            phase.len()
        )));
    }
    if snr_db.is_nan() || snr_db == f64::NEG_INFINITY {
        return Err(Error::invalid(format!("invalid SNR {snr_db} dB")));
    }
    let mut out: Vec<Complex64> = signal
        .samples
        .iter()
        .zip(&phase.phase_rad)
        .map(|(s, &p)| s * Complex64::cis(p))
        .collect();
    if snr_db.is_finite() {
        let noise_power = signal.mean_power() / 10f64.powf(snr_db / 10.0);
        let std = (noise_power / 2.0).sqrt();
        let mut rng = rng_for(seed);
        for s in &mut out {
            let re: f64 = rng.sample(StandardNormal);
            let im: f64 = rng.sample(StandardNormal);
            *s += Complex64::new(std * re, std * im);
        }
    }
    Ok(TimeSignal::new(out, signal.sample_rate_hz))
}

/// Phase-noise and AWGN parameters of one link.
///
/// The received phase is the sum of a residual oscillator Wiener phase
/// (`linewidth_beta_hz`, present at every delay) and the delayed-branch
/// difference of a shared source (`source_linewidth_hz`, delay `delay_s`).
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelSpec {
    pub linewidth_beta_hz: f64,
    pub source_linewidth_hz: f64,
    pub delay_s: f64,
    pub snr_db: f64,
    pub seed: u64,
}

/// Ground-truth phase components of one realization.
#[derive(Debug, Clone)]
pub struct ChannelPhase {
    pub oscillator: PhaseTrace,
    pub delayed: PhaseTrace,
    pub total: PhaseTrace,
}

impl ChannelSpec {
    /// Shared source with the same linewidth as the residual oscillator.
    pub fn new(linewidth_beta_hz: f64, delay_s: f64, snr_db: f64, seed: u64) -> Self {
        Self {
            linewidth_beta_hz,
            source_linewidth_hz: linewidth_beta_hz,
            delay_s,
            snr_db,
            seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.linewidth_beta_hz >= 0.0 && self.linewidth_beta_hz.is_finite()) {
            return Err(Error::invalid("linewidth must be >= 0"));
        }
        if !(self.source_linewidth_hz >= 0.0 && self.source_linewidth_hz.is_finite()) {
            return Err(Error::invalid("source linewidth must be >= 0"));
        }
        if !(self.delay_s >= 0.0 && self.delay_s.is_finite()) {
            return Err(Error::invalid("delay must be >= 0"));
        }
        if self.snr_db.is_nan() || self.snr_db == f64::NEG_INFINITY {
            return Err(Error::invalid("SNR must be a number or +inf"));
        }
        Ok(())
    }

    /// Draws the phase processes for `n_samples` samples.
    ///
    /// The delayed branch is taken in steady state: the source trace is drawn
    /// `D` samples longer and the start-up segment dropped. Window `t` of the
    /// output always sums the same source increments `(t, t + D]`, so runs that
    /// differ only in delay share one source realization.
    pub fn phase(&self, n_samples: usize, sample_rate_hz: f64) -> Result<ChannelPhase> {
        self.validate()?;
        let oscillator = gen_wiener_phase(
            self.linewidth_beta_hz,
            n_samples,
            sample_rate_hz,
            stream_seed(self.seed, Stream::Oscillator),
        )?;
        let d = delay_in_samples(self.delay_s, sample_rate_hz)?;
        let delayed = if d == 0 {
            PhaseTrace::zeros(n_samples, sample_rate_hz)
        } else {
            let source = gen_wiener_phase(
                self.source_linewidth_hz,
                n_samples + d,
                sample_rate_hz,
                stream_seed(self.seed, Stream::DelayedSource),
            )?;
            let full = gen_delayed_branch_phase(&source, self.delay_s)?;
            PhaseTrace::new(full.phase_rad[d..].to_vec(), sample_rate_hz)
        };
        let total = oscillator.add(&delayed)?;
        Ok(ChannelPhase {
            oscillator,
            delayed,
            total,
        })
    }

    pub fn apply(&self, signal: &TimeSignal, phase: &PhaseTrace) -> Result<TimeSignal> {
        apply_channel(
            signal,
            phase,
            self.snr_db,
            stream_seed(self.seed, Stream::Awgn),
        )
    }
}
