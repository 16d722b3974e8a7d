//! OFDM phase-noise simulation.
//!
//! The crate models an OFDM link whose carrier is corrupted by oscillator
//! phase noise, either a plain Wiener process or the difference between a
//! source and its delayed copy (the net effect of a two-branch optical link
//! with a patch-cord delay). On the receive side it implements pilot-based
//! common phase error (CPE) estimation, linear interpolation of the CPEs
//! across symbols (LI-CPE), and a single-symbol variant that takes the phase
//! slope from the cyclic prefix instead of waiting for the next symbol.
//!
//! Modules:
//! - [`ofdm`]: numerology, resource grids, QPSK, modulation and demodulation.
//! - [`channel`]: phase-noise generation and the AWGN/phase channel.
//! - [`compensation`]: CPE, CP slope, interpolation, ZF and the receiver chain.
//! - [`metrics`]: EVM, phase MSE, BER and Welch PSD.
//! - [`waveform_io`]: binary waveform files and metrics CSV.
//! - [`experiments`]: single runs, sweeps, PSD characterization, Fig.-1-style traces.

pub mod channel;
pub mod compensation;
pub mod error;
pub mod experiments;
pub mod metrics;
pub mod ofdm;
pub mod seed;
pub mod waveform_io;

pub use error::{Error, Result};

pub use num_complex::Complex64;
