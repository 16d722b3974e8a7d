use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use super::{
    compensate, estimate_cpe, estimate_slope_cp, interpolate_advanced_licpe,
    interpolate_baseline_licpe, zf_equalize, ChannelEstimate, CpeSeries, SlopeEstimator,
    SlopeSeries,
};
use crate::channel::PhaseTrace;
use crate::ofdm::transform::demodulate_with_layout;
use crate::ofdm::{OfdmConfig, ResourceGrid, SubcarrierLayout, TimeSignal};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum ReceiverMode {
    /// CP removal, FFT, ZF.
    Standard,
    /// Cross-symbol LI-CPE before ZF.
    BaselineLicpe,
    /// Single-symbol LI-CPE with the CP slope before ZF.
    AdvancedLicpe,
}

impl ReceiverMode {
    pub const ALL: [ReceiverMode; 3] = [
        ReceiverMode::Standard,
        ReceiverMode::BaselineLicpe,
        ReceiverMode::AdvancedLicpe,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            ReceiverMode::Standard => "standard",
            ReceiverMode::BaselineLicpe => "baseline_licpe",
            ReceiverMode::AdvancedLicpe => "advanced_licpe",
        }
    }
}

impl fmt::Display for ReceiverMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ReceiverMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        ReceiverMode::ALL
            .into_iter()
            .find(|m| m.as_str() == s)
            .ok_or_else(|| Error::invalid(format!("unknown receiver mode '{s}'")))
    }
}

#[derive(Debug, Clone)]
pub struct ReceiverOutput {
    /// Equalized grid.
    pub grid: ResourceGrid,
    /// Phase estimate removed before the second FFT pass; `None` for the standard receiver.
    pub phase_estimate: Option<PhaseTrace>,
    /// CPEs measured on the first FFT pass (reported for every mode).
    pub cpe: CpeSeries,
    pub slopes: Option<SlopeSeries>,
}

/// OFDM receiver with a known pilot reference.
///
/// The LI-CPE modes run two FFT passes: the first measures the CPEs, the
/// phase estimate is then removed sample by sample in the time domain, and the
/// corrected signal is demodulated again. A per-sample correction is what lets
/// the linear estimate reduce ICI, which a per-subcarrier rotation cannot.
#[derive(Debug, Clone)]
pub struct Receiver {
    config: OfdmConfig,
    layout: Arc<SubcarrierLayout>,
    chan: ChannelEstimate,
    reference: ResourceGrid,
    slope_estimator: SlopeEstimator,
}

impl Receiver {
    /// `reference` holds the transmitted pilots (data cells are ignored).
    pub fn new(config: OfdmConfig, chan: ChannelEstimate, reference: ResourceGrid) -> Result<Self> {
        let layout = Arc::new(SubcarrierLayout::new(&config)?);
        if reference.layout() != layout.as_ref() {
            return Err(Error::invalid(
                "reference grid does not match the configuration",
            ));
        }
        if chan.len() != config.fft_size {
            return Err(Error::invalid(
                "channel estimate does not match the FFT size",
            ));
        }
        Ok(Self {
            layout: reference.shared_layout(),
            config,
            chan,
            reference,
            slope_estimator: SlopeEstimator::default(),
        })
    }

    pub fn with_slope_estimator(mut self, estimator: SlopeEstimator) -> Self {
        self.slope_estimator = estimator;
        self
    }

    pub fn config(&self) -> &OfdmConfig {
        &self.config
    }

    pub fn demodulate(&self, rx: &TimeSignal) -> Result<ResourceGrid> {
        demodulate_with_layout(rx, &self.config, Arc::clone(&self.layout))
    }

    pub fn run(&self, rx: &TimeSignal, mode: ReceiverMode) -> Result<ReceiverOutput> {
        let first = self.demodulate(rx)?;
        let cpe = estimate_cpe(&first, &self.reference, &self.chan, &self.config)?;
        let (estimate, slopes) = match mode {
            ReceiverMode::Standard => {
                return Ok(ReceiverOutput {
                    grid: zf_equalize(&first, &self.chan)?,
                    phase_estimate: None,
                    cpe,
                    slopes: None,
                })
            }
            ReceiverMode::BaselineLicpe => (interpolate_baseline_licpe(&cpe, &self.config)?, None),
            ReceiverMode::AdvancedLicpe => {
                let slopes = estimate_slope_cp(rx, &self.config, self.slope_estimator)?;
                (
                    interpolate_advanced_licpe(&cpe, &slopes, &self.config)?,
                    Some(slopes),
                )
            }
        };
        let corrected = compensate(rx, &estimate)?;
        let grid = zf_equalize(&self.demodulate(&corrected)?, &self.chan)?;
        Ok(ReceiverOutput {
            grid,
            phase_estimate: Some(estimate),
            cpe,
            slopes,
        })
    }
}

/// One-shot form of [`Receiver::run`].
pub fn run_receiver(
    rx: &TimeSignal,
    config: &OfdmConfig,
    chan: &ChannelEstimate,
    reference: &ResourceGrid,
    mode: ReceiverMode,
    slope_estimator: SlopeEstimator,
) -> Result<ReceiverOutput> {
    Receiver::new(config.clone(), chan.clone(), reference.clone())?
        .with_slope_estimator(slope_estimator)
        .run(rx, mode)
}
