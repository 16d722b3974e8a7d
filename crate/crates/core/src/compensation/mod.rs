//! Receiver-side phase-noise estimation and correction.
//!
//! Both compensators start from the per-symbol common phase error measured on
//! the pilots. The cross-symbol LI-CPE joins consecutive CPEs with straight
//! lines, which needs the next symbol before the current one can be corrected.
//! The single-symbol variant instead reads the phase slope off the cyclic
//! prefix: the CP and the symbol tail carry the same transmitted samples, so
//! their phase difference is the phase drift over `N` samples.

mod cpe;
mod equalize;
mod interpolate;
mod receiver;
mod slope;

pub use cpe::{estimate_cpe, unwrap_phases, CpeSeries};
pub use equalize::{zf_equalize, ChannelEstimate};
pub use interpolate::{compensate, interpolate_advanced_licpe, interpolate_baseline_licpe};
pub use receiver::{run_receiver, Receiver, ReceiverMode, ReceiverOutput};
pub use slope::{estimate_slope_cp, SlopeEstimator, SlopeSeries};
