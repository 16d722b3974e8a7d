//! `ofdm-pn`: run OFDM phase-noise experiments from the command line.
//!
//! Exit status: 0 on success, 1 on usage errors, 2 when a run fails.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use ofdm_pn::compensation::{ReceiverMode, SlopeEstimator};
use ofdm_pn::experiments::{
    figure1, figure1_point, psd_characterization, run_sweep, write_figure1_csv, write_psd_csv,
    Frame, PsdRequest, RunPoint, SweepPlan, DEFAULT_BETA_HZ, DEFAULT_DELAYS_S, WORKERS_ENV,
};
use ofdm_pn::waveform_io::{save_waveform, write_metrics_csv, Waveform, WaveformMeta};
use ofdm_pn::Error;

#[derive(Debug, Parser)]
#[command(
    name = "ofdm-pn",
    version,
    about = "OFDM phase-noise simulation and LI-CPE compensation experiments"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Simulate one frame and print its metrics as JSON.
    Simulate(SimulateArgs),
    /// Run every combination of numerology, delay, mode and seed; write CSV.
    Sweep(SweepArgs),
    /// Welch PSD of the phase noise at one branch delay; write CSV.
    Psd(PsdArgs),
    /// True phase and both LI-CPE estimates for one frame; write CSV.
    Figure1(Figure1Args),
}

#[derive(Debug, Args)]
struct NoiseArgs {
    /// Two-sided 3-dB linewidth of the oscillator phase noise [Hz].
    #[arg(long, default_value_t = DEFAULT_BETA_HZ)]
    beta_hz: f64,
    /// Linewidth of the source shared by both branches [Hz] (default: --beta-hz).
    #[arg(long)]
    source_linewidth_hz: Option<f64>,
}

impl NoiseArgs {
    fn source_linewidth(&self) -> f64 {
        self.source_linewidth_hz.unwrap_or(self.beta_hz)
    }
}

#[derive(Debug, Args)]
struct SimulateArgs {
    /// Numerology row, 1..=5.
    #[arg(long, default_value_t = 2)]
    config_row: usize,
    #[command(flatten)]
    noise: NoiseArgs,
    /// Branch delay difference [ns].
    #[arg(long, default_value_t = 0.0)]
    delay_ns: f64,
    /// SNR in dB, or `inf` for no AWGN.
    #[arg(long, default_value_t = f64::INFINITY)]
    snr_db: f64,
    #[arg(long, default_value = "advanced_licpe", value_parser = parse_mode)]
    mode: ReceiverMode,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 20)]
    n_symbols: usize,
    /// Use every subcarrier except DC instead of 80 %.
    #[arg(long)]
    full_active: bool,
    #[arg(long, default_value = "literal", value_parser = parse_estimator)]
    slope_estimator: SlopeEstimator,
    /// Also write the metrics as a one-row CSV.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Directory for tx/rx signals and phase traces.
    #[arg(long)]
    save_waveforms: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct SweepArgs {
    /// Numerology rows (repeatable; default all five).
    #[arg(long = "config-row")]
    config_rows: Vec<usize>,
    #[command(flatten)]
    noise: NoiseArgs,
    /// Branch delays [ns] (repeatable; default 0 96 240 480 672 912).
    #[arg(long = "delay-ns")]
    delays_ns: Vec<f64>,
    #[arg(long, default_value_t = f64::INFINITY)]
    snr_db: f64,
    /// Receiver modes (repeatable; default all three).
    #[arg(long = "mode", value_parser = parse_mode)]
    modes: Vec<ReceiverMode>,
    /// Master seed.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Number of seeds per point.
    #[arg(long, default_value_t = 10)]
    seeds: usize,
    #[arg(long, default_value_t = 20)]
    n_symbols: usize,
    #[arg(long)]
    full_active: bool,
    #[arg(long, default_value = "literal", value_parser = parse_estimator)]
    slope_estimator: SlopeEstimator,
    /// Worker threads.
    #[arg(long, env = WORKERS_ENV)]
    workers: Option<usize>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct PsdArgs {
    #[command(flatten)]
    noise: NoiseArgs,
    #[arg(long, default_value_t = 0.0)]
    delay_ns: f64,
    /// Trace duration [s].
    #[arg(long, default_value_t = 2e-3)]
    duration_s: f64,
    /// Welch segment length in samples.
    #[arg(long, default_value_t = 1 << 14)]
    segment_len: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct Figure1Args {
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 20)]
    n_symbols: usize,
    #[arg(long, default_value_t = DEFAULT_BETA_HZ)]
    beta_hz: f64,
    #[arg(long, default_value = "literal", value_parser = parse_estimator)]
    slope_estimator: SlopeEstimator,
    #[arg(long)]
    out: PathBuf,
}

fn parse_mode(s: &str) -> Result<ReceiverMode, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

fn parse_estimator(s: &str) -> Result<SlopeEstimator, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    let result = match cli.command {
        Command::Simulate(a) => simulate(a),
        Command::Sweep(a) => sweep(a),
        Command::Psd(a) => psd(a),
        Command::Figure1(a) => fig1(a),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            match e {
                Error::InvalidArgument(_) => ExitCode::from(1),
                _ => ExitCode::from(2),
            }
        }
    }
}

fn simulate(a: SimulateArgs) -> Result<ExitCode, Error> {
    let point = RunPoint {
        config_row: a.config_row,
        full_active: a.full_active,
        n_symbols: a.n_symbols,
        beta_hz: a.noise.beta_hz,
        source_linewidth_hz: a.noise.source_linewidth(),
        delay_s: a.delay_ns * 1e-9,
        snr_db: a.snr_db,
        mode: a.mode,
        slope_estimator: a.slope_estimator,
        seed: a.seed,
    };
    let frame = Frame::generate(&point)?;
    let out = frame
        .receiver(point.slope_estimator)?
        .run(&frame.rx, point.mode)?;
    let metrics = frame.evaluate(&point, &out)?;
    println!(
        "{}",
        serde_json::to_string_pretty(&metrics).expect("metrics serialize")
    );
    if let Some(path) = &a.out {
        write_metrics_csv(std::slice::from_ref(&metrics), path)?;
    }
    if let Some(dir) = &a.save_waveforms {
        std::fs::create_dir_all(dir)?;
        let meta = |what: &str| WaveformMeta {
            seed: Some(point.seed),
            config: Some(frame.config.clone()),
            description: Some(what.to_string()),
        };
        save(
            dir,
            "tx.ofpn",
            Waveform::Signal(frame.tx.clone()),
            meta("transmitted signal"),
        )?;
        save(
            dir,
            "rx.ofpn",
            Waveform::Signal(frame.rx.clone()),
            meta("received signal"),
        )?;
        save(
            dir,
            "phase_truth.ofpn",
            Waveform::Phase(frame.phase.total.clone()),
            meta("channel phase"),
        )?;
        if let Some(est) = out.phase_estimate {
            save(
                dir,
                "phase_estimate.ofpn",
                Waveform::Phase(est),
                meta(point.mode.as_str()),
            )?;
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn save(dir: &Path, name: &str, w: Waveform, meta: WaveformMeta) -> Result<(), Error> {
    save_waveform(dir.join(name), &w, &meta)
}

fn sweep(a: SweepArgs) -> Result<ExitCode, Error> {
    let mut plan = SweepPlan::default_axes(SweepPlan::seeds_from_master(a.seed, a.seeds));
    if !a.config_rows.is_empty() {
        plan.config_rows = a.config_rows;
    }
    plan.delays_s = if a.delays_ns.is_empty() {
        DEFAULT_DELAYS_S.to_vec()
    } else {
        a.delays_ns.iter().map(|d| d * 1e-9).collect()
    };
    if !a.modes.is_empty() {
        plan.modes = a.modes;
    }
    plan.beta_hz = a.noise.beta_hz;
    plan.source_linewidth_hz = a.noise.source_linewidth();
    plan.snr_db = a.snr_db;
    plan.n_symbols = a.n_symbols;
    plan.full_active = a.full_active;
    plan.slope_estimator = a.slope_estimator;

    let rows = run_sweep(&plan, a.workers)?;
    write_metrics_csv(&rows, &a.out)?;
    let failed = rows.iter().filter(|r| r.error.is_some()).count();
    eprintln!(
        "{} runs written to {} ({failed} failed)",
        rows.len(),
        a.out.display()
    );
    Ok(if failed > 0 {
        ExitCode::from(2)
    } else {
        ExitCode::SUCCESS
    })
}

fn psd(a: PsdArgs) -> Result<ExitCode, Error> {
    let req = PsdRequest {
        beta_hz: a.noise.beta_hz,
        source_linewidth_hz: a.noise.source_linewidth(),
        delay_s: a.delay_ns * 1e-9,
        duration_s: a.duration_s,
        seed: a.seed,
        segment_len: a.segment_len,
    };
    let report = psd_characterization(&req)?;
    write_psd_csv(&report, &a.out)?;
    eprintln!(
        "{} bins from {} segments written to {}",
        report.freq_hz.len(),
        report.segments,
        a.out.display()
    );
    Ok(ExitCode::SUCCESS)
}

fn fig1(a: Figure1Args) -> Result<ExitCode, Error> {
    let mut point = figure1_point(a.seed, a.n_symbols, a.beta_hz);
    point.slope_estimator = a.slope_estimator;
    let fig = figure1(&point)?;
    write_figure1_csv(&fig, &a.out)?;
    println!(
        "{}",
        serde_json::json!({
            "seed": a.seed,
            "mse_baseline_licpe": fig.mse_baseline,
            "mse_baseline_licpe_excl_edges": fig.mse_baseline_excl_edges,
            "mse_advanced_licpe": fig.mse_advanced,
        })
    );
    Ok(ExitCode::SUCCESS)
}
