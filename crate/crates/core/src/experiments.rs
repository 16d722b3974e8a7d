//! Simulation runs and sweeps.
//!
//! A run draws one frame (data, pilots, channel) from its seed and passes it
//! through the receiver. The frame depends only on the seed, numerology, delay
//! and linewidths, never on the receiver mode, so all modes of a sweep point
//! see the same received signal. Sweep seeds are derived from the master seed
//! and the seed index alone; the same index therefore reuses its data, pilot
//! and phase streams at every numerology and delay, and the curves differ only
//! by the swept parameter.

use std::fs;
use std::io::Write;
use std::path::Path;

use rayon::prelude::*;

use crate::channel::{ChannelPhase, ChannelSpec, PhaseTrace};
use crate::compensation::{
    ChannelEstimate, Receiver, ReceiverMode, ReceiverOutput, SlopeEstimator,
};
use crate::metrics::{ber, evm_percent, phase_mse, welch_psd, RunMetrics};
use crate::ofdm::{
    build_grid, demap_qpsk, make_config, map_qpsk, modulate, random_bits, OfdmConfig, ResourceGrid,
    TimeSignal, TABLE_ROWS,
};
use crate::seed::{derive_seed, rng_for, stream_seed, Stream};
use crate::waveform_io::fmt_sig9;
use crate::{Error, Result};

/// Delay differences between the two optical branches.
pub const DEFAULT_DELAYS_S: [f64; 6] = [0.0, 96e-9, 240e-9, 480e-9, 672e-9, 912e-9];

/// Fibre delay per metre of patch cord (96 ns ↔ 20 m).
pub const NS_PER_METER: f64 = 4.8;

/// 5G NR EVM requirement for QPSK.
pub const QPSK_EVM_LIMIT_PERCENT: f64 = 17.5;

pub const DEFAULT_BETA_HZ: f64 = 150.0;

/// Environment variable holding the default sweep worker count.
pub const WORKERS_ENV: &str = "OFDM_PN_WORKERS";

/// One fully specified simulation.
#[derive(Debug, Clone, PartialEq)]
pub struct RunPoint {
    pub config_row: usize,
    pub full_active: bool,
    pub n_symbols: usize,
    pub beta_hz: f64,
    pub source_linewidth_hz: f64,
    pub delay_s: f64,
    pub snr_db: f64,
    pub mode: ReceiverMode,
    pub slope_estimator: SlopeEstimator,
    pub seed: u64,
}

impl Default for RunPoint {
    fn default() -> Self {
        Self {
            config_row: 2,
            full_active: false,
            n_symbols: crate::ofdm::OfdmConfig::default_n_symbols(),
            beta_hz: DEFAULT_BETA_HZ,
            source_linewidth_hz: DEFAULT_BETA_HZ,
            delay_s: 0.0,
            snr_db: f64::INFINITY,
            mode: ReceiverMode::AdvancedLicpe,
            slope_estimator: SlopeEstimator::Literal,
            seed: 0,
        }
    }
}

impl RunPoint {
    pub fn config(&self) -> Result<OfdmConfig> {
        let c = make_config(self.config_row)?.with_n_symbols(self.n_symbols);
        let c = if self.full_active {
            c.with_full_active()
        } else {
            c
        };
        c.validate()?;
        Ok(c)
    }

    pub fn channel(&self) -> ChannelSpec {
        ChannelSpec {
            linewidth_beta_hz: self.beta_hz,
            source_linewidth_hz: self.source_linewidth_hz,
            delay_s: self.delay_s,
            snr_db: self.snr_db,
            seed: self.seed,
        }
    }

    fn metrics_template(&self, config: Option<&OfdmConfig>) -> RunMetrics {
        let (spacing, n, ncp, tcp, fs) = match config {
            Some(c) => (
                c.subcarrier_spacing_hz,
                c.fft_size,
                c.cp_len_samples,
                c.cp_duration_s(),
                c.sample_rate_hz(),
            ),
            None => (f64::NAN, 0, 0, f64::NAN, f64::NAN),
        };
        RunMetrics {
            config_id: self.config_row,
            mode: self.mode.to_string(),
            slope_estimator: self.slope_estimator.to_string(),
            seed: self.seed,
            delay_s: self.delay_s,
            beta_hz: self.beta_hz,
            source_linewidth_hz: self.source_linewidth_hz,
            snr_db: self.snr_db,
            n_symbols: self.n_symbols,
            full_active: self.full_active,
            subcarrier_spacing_hz: spacing,
            fft_size: n,
            cp_len_samples: ncp,
            realized_tcp_s: tcp,
            sample_rate_hz: fs,
            evm_percent: f64::NAN,
            phase_mse_rad2: f64::NAN,
            phase_mse_excl_edges_rad2: f64::NAN,
            edge_samples: 0,
            ber: f64::NAN,
            per_symbol_cpe_rad: Vec::new(),
            error: None,
        }
    }

    /// Metrics row for a run that failed.
    pub fn failed(&self, err: &Error) -> RunMetrics {
        self.failed_with(err.to_string())
    }

    fn failed_with(&self, message: String) -> RunMetrics {
        let mut m = self.metrics_template(self.config().ok().as_ref());
        m.error = Some(message);
        m
    }
}

/// Transmitted and received frame of one run, before the receiver.
#[derive(Debug, Clone)]
pub struct Frame {
    pub config: OfdmConfig,
    pub bits: Vec<u8>,
    pub tx_grid: ResourceGrid,
    pub tx: TimeSignal,
    pub phase: ChannelPhase,
    pub rx: TimeSignal,
}

impl Frame {
    pub fn generate(point: &RunPoint) -> Result<Self> {
        let config = point.config()?;
        let bits = random_bits(
            &mut rng_for(stream_seed(point.seed, Stream::Data)),
            2 * config.n_symbols * config.data_count(),
        );
        let tx_grid = build_grid(
            &config,
            &map_qpsk(&bits)?,
            stream_seed(point.seed, Stream::Pilots),
        )?;
        let tx = modulate(&tx_grid, &config)?;
        let chan = point.channel();
        let phase = chan.phase(tx.len(), tx.sample_rate_hz)?;
        let rx = chan.apply(&tx, &phase.total)?;
        Ok(Self {
            config,
            bits,
            tx_grid,
            tx,
            phase,
            rx,
        })
    }

    pub fn receiver(&self, estimator: SlopeEstimator) -> Result<Receiver> {
        Ok(Receiver::new(
            self.config.clone(),
            ChannelEstimate::ideal(self.config.fft_size),
            self.tx_grid.clone(),
        )?
        .with_slope_estimator(estimator))
    }

    pub fn evaluate(&self, point: &RunPoint, out: &ReceiverOutput) -> Result<RunMetrics> {
        let rx_data = out.grid.data_cells();
        let evm = evm_percent(&rx_data, &self.tx_grid.data_cells())?;
        let bit_error_rate = ber(&demap_qpsk(&rx_data), &self.bits)?;
        let truth = &self.phase.total;
        let zero;
        let estimate = match &out.phase_estimate {
            Some(e) => e,
            None => {
                zero = PhaseTrace::zeros(truth.len(), truth.sample_rate_hz);
                &zero
            }
        };
        let mut m = point.metrics_template(Some(&self.config));
        m.evm_percent = evm;
        m.ber = bit_error_rate;
        m.phase_mse_rad2 = phase_mse(estimate, truth, false)?;
        m.phase_mse_excl_edges_rad2 = phase_mse(estimate, truth, true)?;
        m.edge_samples = estimate.edge_sample_count();
        m.per_symbol_cpe_rad = out.cpe.cpe_rad.clone();
        Ok(m)
    }
}

/// Runs a single point and reports its metrics.
pub fn simulate(point: &RunPoint) -> Result<RunMetrics> {
    let frame = Frame::generate(point)?;
    let out = frame
        .receiver(point.slope_estimator)?
        .run(&frame.rx, point.mode)?;
    frame.evaluate(point, &out)
}

/// Axes of a sweep. Every combination is run once per seed.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepPlan {
    pub config_rows: Vec<usize>,
    pub delays_s: Vec<f64>,
    pub beta_hz: f64,
    pub source_linewidth_hz: f64,
    pub snr_db: f64,
    pub modes: Vec<ReceiverMode>,
    /// Run seeds (see [`SweepPlan::seeds_from_master`]).
    pub seeds: Vec<u64>,
    pub n_symbols: usize,
    pub full_active: bool,
    pub slope_estimator: SlopeEstimator,
}

impl SweepPlan {
    /// All five numerologies, the six branch delays, all modes.
    pub fn default_axes(seeds: Vec<u64>) -> Self {
        Self {
            config_rows: (1..=TABLE_ROWS.len()).collect(),
            delays_s: DEFAULT_DELAYS_S.to_vec(),
            beta_hz: DEFAULT_BETA_HZ,
            source_linewidth_hz: DEFAULT_BETA_HZ,
            snr_db: f64::INFINITY,
            modes: ReceiverMode::ALL.to_vec(),
            seeds,
            n_symbols: OfdmConfig::default_n_symbols(),
            full_active: false,
            slope_estimator: SlopeEstimator::Literal,
        }
    }

    /// Run seed `i` is a hash of the master seed and `i`, so any run can be
    /// repeated on its own from the seed printed in its row.
    pub fn seeds_from_master(master: u64, count: usize) -> Vec<u64> {
        (0..count as u64)
            .map(|i| derive_seed(master, &[i]))
            .collect()
    }

    pub fn validate(&self) -> Result<()> {
        if self.config_rows.is_empty()
            || self.delays_s.is_empty()
            || self.modes.is_empty()
            || self.seeds.is_empty()
        {
            return Err(Error::invalid("every sweep axis needs at least one value"));
        }
        for &row in &self.config_rows {
            make_config(row)?;
        }
        Ok(())
    }

    pub fn run_count(&self) -> usize {
        self.config_rows.len() * self.delays_s.len() * self.modes.len() * self.seeds.len()
    }

    fn point(&self, row: usize, delay_s: f64, mode: ReceiverMode, seed: u64) -> RunPoint {
        RunPoint {
            config_row: row,
            full_active: self.full_active,
            n_symbols: self.n_symbols,
            beta_hz: self.beta_hz,
            source_linewidth_hz: self.source_linewidth_hz,
            delay_s,
            snr_db: self.snr_db,
            mode,
            slope_estimator: self.slope_estimator,
            seed,
        }
    }
}

/// Runs every point of `plan`, using `workers` threads (`None`: rayon's default).
///
/// Rows are ordered by config row, delay, mode (in plan order) and then seed,
/// independently of scheduling. Failed runs become rows with `error` set.
pub fn run_sweep(plan: &SweepPlan, workers: Option<usize>) -> Result<Vec<RunMetrics>> {
    plan.validate()?;
    // One task per frame; the modes share it.
    let tasks: Vec<(usize, usize, usize)> = (0..plan.config_rows.len())
        .flat_map(|r| {
            (0..plan.delays_s.len())
                .flat_map(move |d| (0..plan.seeds.len()).map(move |s| (r, d, s)))
        })
        .collect();
    let run_task =
        |&(r, d, s): &(usize, usize, usize)| -> Vec<((usize, usize, usize, usize), RunMetrics)> {
            let row = plan.config_rows[r];
            let delay = plan.delays_s[d];
            let seed = plan.seeds[s];
            let frame = Frame::generate(&plan.point(row, delay, plan.modes[0], seed));
            plan.modes
                .iter()
                .enumerate()
                .map(|(mi, &mode)| {
                    let point = plan.point(row, delay, mode, seed);
                    let metrics = match &frame {
                        Ok(f) => f
                            .receiver(plan.slope_estimator)
                            .and_then(|rx| rx.run(&f.rx, mode))
                            .and_then(|out| f.evaluate(&point, &out))
                            .unwrap_or_else(|e| point.failed(&e)),
                        Err(e) => point.failed_with(e.to_string()),
                    };
                    ((r, d, mi, s), metrics)
                })
                .collect()
        };

    let mut keyed: Vec<_> = match workers {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n.max(1))
            .build()
            .map_err(|e| Error::invalid(format!("cannot start worker pool: {e}")))?
            .install(|| tasks.par_iter().flat_map_iter(run_task).collect()),
        None => tasks.par_iter().flat_map_iter(run_task).collect(),
    };
    keyed.sort_by_key(|(k, _)| *k);
    Ok(keyed.into_iter().map(|(_, m)| m).collect())
}

/// Seed-averaged EVM per (row, delay) for one mode, ignoring failed runs.
pub fn mean_evm(
    rows: &[RunMetrics],
    config_id: usize,
    delay_s: f64,
    mode: ReceiverMode,
) -> Option<f64> {
    let v: Vec<f64> = rows
        .iter()
        .filter(|m| {
            m.error.is_none()
                && m.config_id == config_id
                && m.delay_s == delay_s
                && m.mode == mode.as_str()
        })
        .map(|m| m.evm_percent)
        .collect();
    (!v.is_empty()).then(|| v.iter().sum::<f64>() / v.len() as f64)
}

/// Sample rate shared by every numerology.
pub fn common_sample_rate_hz() -> f64 {
    let (spacing, n, _) = TABLE_ROWS[0];
    spacing * n as f64
}

/// PSD characterization of the phase noise at one branch delay.
#[derive(Debug, Clone, PartialEq)]
pub struct PsdReport {
    pub freq_hz: Vec<f64>,
    /// Oscillator Wiener phase plus delayed-branch difference.
    pub total: Vec<f64>,
    /// Delayed-branch difference alone (zero when the delay is zero).
    pub delayed: Vec<f64>,
    pub segments: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PsdRequest {
    pub beta_hz: f64,
    pub source_linewidth_hz: f64,
    pub delay_s: f64,
    pub duration_s: f64,
    pub seed: u64,
    pub segment_len: usize,
}

impl Default for PsdRequest {
    fn default() -> Self {
        Self {
            beta_hz: DEFAULT_BETA_HZ,
            source_linewidth_hz: DEFAULT_BETA_HZ,
            delay_s: 0.0,
            duration_s: 2e-3,
            seed: 0,
            segment_len: 1 << 14,
        }
    }
}

pub const PSD_OVERLAP: f64 = 0.5;
pub const PSD_MIN_SEGMENTS: usize = 8;

pub fn psd_characterization(req: &PsdRequest) -> Result<PsdReport> {
    let fs = common_sample_rate_hz();
    if !(req.duration_s > 0.0 && req.duration_s.is_finite()) {
        return Err(Error::invalid("duration must be positive"));
    }
    let n = (req.duration_s * fs).round() as usize;
    let step = req.segment_len - (PSD_OVERLAP * req.segment_len as f64).floor() as usize;
    let segments = if n >= req.segment_len && step > 0 {
        (n - req.segment_len) / step + 1
    } else {
        0
    };
    if segments < PSD_MIN_SEGMENTS {
        return Err(Error::invalid(format!(
            "duration {} s gives {segments} Welch segments of {} samples, need {PSD_MIN_SEGMENTS}",
            req.duration_s, req.segment_len
        )));
    }
    let spec = ChannelSpec {
        linewidth_beta_hz: req.beta_hz,
        source_linewidth_hz: req.source_linewidth_hz,
        delay_s: req.delay_s,
        snr_db: f64::INFINITY,
        seed: req.seed,
    };
    let phase = spec.phase(n, fs)?;
    let total = welch_psd(&phase.total, req.segment_len, PSD_OVERLAP)?;
    let delayed = welch_psd(&phase.delayed, req.segment_len, PSD_OVERLAP)?;
    Ok(PsdReport {
        freq_hz: total.freq_hz,
        total: total.density,
        delayed: delayed.density,
        segments,
    })
}

pub fn write_psd_csv(report: &PsdReport, path: impl AsRef<Path>) -> Result<()> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record([
        "freq_hz",
        "psd_total_rad2_per_hz",
        "psd_delayed_rad2_per_hz",
    ])?;
    for ((f, t), d) in report
        .freq_hz
        .iter()
        .zip(&report.total)
        .zip(&report.delayed)
    {
        w.write_record([fmt_sig9(*f), fmt_sig9(*t), fmt_sig9(*d)])?;
    }
    write_csv_file(w, path)
}

fn write_csv_file(w: csv::Writer<Vec<u8>>, path: impl AsRef<Path>) -> Result<()> {
    let bytes = w
        .into_inner()
        .map_err(|e| Error::Io(std::io::Error::other(e.to_string())))?;
    let mut f = fs::File::create(path)?;
    f.write_all(&bytes)?;
    Ok(())
}

/// Phase traces for a single frame under both LI-CPE variants.
#[derive(Debug, Clone)]
pub struct Figure1 {
    pub config: OfdmConfig,
    pub truth: PhaseTrace,
    pub baseline: PhaseTrace,
    pub advanced: PhaseTrace,
    /// Raw per-symbol CPEs and the sample each is anchored to.
    pub cpe_anchors: Vec<(usize, f64)>,
    pub mse_baseline: f64,
    pub mse_baseline_excl_edges: f64,
    pub mse_advanced: f64,
}

/// Row-2 numerology with every subcarrier active, pure Wiener phase noise and
/// no AWGN: the setting in which the two interpolators are compared directly.
pub fn figure1_point(seed: u64, n_symbols: usize, beta_hz: f64) -> RunPoint {
    RunPoint {
        config_row: 2,
        full_active: true,
        n_symbols,
        beta_hz,
        source_linewidth_hz: beta_hz,
        delay_s: 0.0,
        snr_db: f64::INFINITY,
        mode: ReceiverMode::AdvancedLicpe,
        slope_estimator: SlopeEstimator::Literal,
        seed,
    }
}

pub fn figure1(point: &RunPoint) -> Result<Figure1> {
    let frame = Frame::generate(point)?;
    let rx = frame.receiver(point.slope_estimator)?;
    let base = rx.run(&frame.rx, ReceiverMode::BaselineLicpe)?;
    let adv = rx.run(&frame.rx, ReceiverMode::AdvancedLicpe)?;
    let baseline = base.phase_estimate.expect("LI-CPE returns an estimate");
    let advanced = adv.phase_estimate.expect("LI-CPE returns an estimate");
    let truth = frame.phase.total.clone();
    let nt = frame.config.symbol_len();
    let cpe_anchors = base
        .cpe
        .cpe_rad
        .iter()
        .enumerate()
        .map(|(m, &c)| (m * nt + base.cpe.anchor_sample, c))
        .collect();
    Ok(Figure1 {
        mse_baseline: phase_mse(&baseline, &truth, false)?,
        mse_baseline_excl_edges: phase_mse(&baseline, &truth, true)?,
        mse_advanced: phase_mse(&advanced, &truth, false)?,
        config: frame.config,
        truth,
        baseline,
        advanced,
        cpe_anchors,
    })
}

pub fn write_figure1_csv(fig: &Figure1, path: impl AsRef<Path>) -> Result<()> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record([
        "sample_index",
        "true_phase_rad",
        "baseline_estimate_rad",
        "advanced_estimate_rad",
        "cpe_anchor_rad",
        "baseline_edge",
    ])?;
    let mut anchors = fig.cpe_anchors.iter().peekable();
    for i in 0..fig.truth.len() {
        let anchor = match anchors.peek() {
            Some(&&(s, c)) if s == i => {
                anchors.next();
                fmt_sig9(c)
            }
            _ => String::new(),
        };
        w.write_record([
            i.to_string(),
            fmt_sig9(fig.truth.phase_rad[i]),
            fmt_sig9(fig.baseline.phase_rad[i]),
            fmt_sig9(fig.advanced.phase_rad[i]),
            anchor,
            (fig.baseline.is_edge(i) as u8).to_string(),
        ])?;
    }
    write_csv_file(w, path)
}
