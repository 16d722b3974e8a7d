//! Acceptance checks. Each criterion prints one PASS/FAIL line; the process
//! exits non-zero if any fails.

#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

use std::path::Path;
use std::process::Command;
use std::time::Instant;

use num_complex::Complex64;
use ofdm_pn::channel::{apply_channel, gen_wiener_phase, wiener_increment_variance, PhaseTrace};
use ofdm_pn::compensation::{estimate_slope_cp, ReceiverMode, SlopeEstimator};
use ofdm_pn::experiments::{
    common_sample_rate_hz, figure1, figure1_point, mean_evm, psd_characterization, run_sweep,
    Frame, PsdReport, PsdRequest, RunPoint, SweepPlan, DEFAULT_DELAYS_S,
};
use ofdm_pn::ofdm::{
    build_grid, demodulate, make_config, map_qpsk, modulate, random_bits, TABLE_ROWS,
};
use ofdm_pn::seed::rng_for;
use rayon::prelude::*;

type Check = Result<String, String>;

fn ensure(ok: bool, msg: String) -> Check {
    if ok {
        Ok(msg)
    } else {
        Err(msg)
    }
}

fn rows() -> std::ops::RangeInclusive<usize> {
    1..=TABLE_ROWS.len()
}

struct Fig1Stats {
    base: f64,
    adv: f64,
    wins: f64,
    secs: f64,
}

fn fig1_stats() -> Result<Fig1Stats, String> {
    let t = Instant::now();
    let runs: Vec<(f64, f64)> = (0..200u64)
        .into_par_iter()
        .map(|seed| {
            let f = figure1(&figure1_point(seed, 20, 150.0)).map_err(|e| e.to_string())?;
            // The baseline has no estimate of its own on the edge half-symbols.
            Ok((f.mse_baseline_excl_edges, f.mse_advanced))
        })
        .collect::<Result<_, String>>()?;
    let n = runs.len() as f64;
    Ok(Fig1Stats {
        base: runs.iter().map(|r| r.0).sum::<f64>() / n,
        adv: runs.iter().map(|r| r.1).sum::<f64>() / n,
        wins: runs.iter().filter(|r| r.1 < r.0).count() as f64 / n,
        secs: t.elapsed().as_secs_f64(),
    })
}

fn criterion_1(s: &Fig1Stats) -> Check {
    let ratio = s.base / s.adv;
    ensure(
        s.adv < s.base && s.wins >= 0.8 && (1.5..=5.0).contains(&ratio) && s.secs < 120.0,
        format!(
            "mean MSE baseline {:.3e}, advanced {:.3e}, ratio {ratio:.2}, advanced wins {:.1}%, {:.1} s",
            s.base,
            s.adv,
            100.0 * s.wins,
            s.secs
        ),
    )
}

fn criterion_2(s: &Fig1Stats) -> Check {
    let band = 1e-4..=1e-1;
    ensure(
        band.contains(&s.base) && band.contains(&s.adv),
        format!("baseline {:.3e}, advanced {:.3e} rad^2", s.base, s.adv),
    )
}

fn criterion_3() -> Check {
    let mut worst = 0.0f64;
    let mut cases = 0;
    for row in rows() {
        let c = make_config(row)
            .map_err(|e| e.to_string())?
            .with_n_symbols(3);
        let bits = random_bits(&mut rng_for(row as u64), 2 * 3 * c.data_count());
        let g = build_grid(&c, &map_qpsk(&bits).unwrap(), 1).unwrap();
        let s = modulate(&g, &c).unwrap();
        let limit = std::f64::consts::PI / c.fft_size as f64;
        for frac in [-0.95, -0.5, -1e-3, 0.0, 1e-3, 0.3, 0.7, 0.95] {
            let a = frac * limit;
            let ramp = PhaseTrace::new(
                (0..s.len()).map(|i| 0.4 + a * i as f64).collect(),
                s.sample_rate_hz,
            );
            let r = apply_channel(&s, &ramp, f64::INFINITY, 0).unwrap();
            let est =
                estimate_slope_cp(&r, &c, SlopeEstimator::Literal).map_err(|e| e.to_string())?;
            for v in est.slope_rad_per_sample {
                worst = worst.max((v - a).abs());
                cases += 1;
            }
        }
    }
    ensure(
        worst < 1e-12,
        format!("max |slope error| {worst:.2e} over {cases} symbol estimates"),
    )
}

fn criterion_4() -> Check {
    let point = RunPoint {
        config_row: 5,
        n_symbols: 8,
        beta_hz: 2e4,
        source_linewidth_hz: 2e4,
        delay_s: 480e-9,
        snr_db: 25.0,
        seed: 4,
        ..RunPoint::default()
    };
    let frame = Frame::generate(&point).map_err(|e| e.to_string())?;
    let rx = frame
        .receiver(SlopeEstimator::Literal)
        .map_err(|e| e.to_string())?;
    let nt = frame.config.symbol_len();
    let n = frame.config.n_symbols;
    let estimate = |sig: &ofdm_pn::ofdm::TimeSignal, mode| {
        rx.run(sig, mode)
            .map(|o| o.phase_estimate.expect("LI-CPE estimate").phase_rad)
            .map_err(|e| e.to_string())
    };
    let full = estimate(&frame.rx, ReceiverMode::AdvancedLicpe)?;
    let mut identical = 0;
    for m in 0..n {
        let mut cut = frame.rx.clone();
        cut.samples.truncate((m + 1) * nt);
        let part = estimate(&cut, ReceiverMode::AdvancedLicpe)?;
        if part[m * nt..] == full[m * nt..(m + 1) * nt] {
            identical += 1;
        }
    }
    let base = estimate(&frame.rx, ReceiverMode::BaselineLicpe)?;
    let mut changed = 0;
    for m in 0..n - 1 {
        let mut pert = frame.rx.clone();
        for x in &mut pert.samples[(m + 1) * nt..(m + 2) * nt] {
            *x *= Complex64::cis(0.3);
        }
        let after = estimate(&pert, ReceiverMode::BaselineLicpe)?;
        if after[m * nt..(m + 1) * nt] != base[m * nt..(m + 1) * nt] {
            changed += 1;
        }
    }
    ensure(
        identical == n && changed == n - 1,
        format!(
            "advanced bit-identical after truncation for {identical}/{n} symbols; \
             baseline changed by the next symbol for {changed}/{} symbols",
            n - 1
        ),
    )
}

struct SweepTable {
    // [row][delay][mode]
    evm: Vec<Vec<[f64; 3]>>,
    secs: f64,
}

fn sweep_table() -> Result<SweepTable, String> {
    let t = Instant::now();
    let plan = SweepPlan::default_axes(SweepPlan::seeds_from_master(2024, 30));
    let out = run_sweep(&plan, None).map_err(|e| e.to_string())?;
    if let Some(bad) = out.iter().find(|r| r.error.is_some()) {
        return Err(format!("sweep run failed: {:?}", bad.error));
    }
    let evm = rows()
        .map(|row| {
            DEFAULT_DELAYS_S
                .iter()
                .map(|&d| ReceiverMode::ALL.map(|m| mean_evm(&out, row, d, m).unwrap_or(f64::NAN)))
                .collect()
        })
        .collect();
    Ok(SweepTable {
        evm,
        secs: t.elapsed().as_secs_f64(),
    })
}

fn mode_index(m: ReceiverMode) -> usize {
    ReceiverMode::ALL.iter().position(|&x| x == m).unwrap()
}

fn criterion_5(t: &SweepTable) -> Check {
    let s = mode_index(ReceiverMode::Standard);
    let mut bad = Vec::new();
    for d in 0..DEFAULT_DELAYS_S.len() {
        for r in 1..t.evm.len() {
            if !(t.evm[r][d][s] < t.evm[r - 1][d][s]) {
                bad.push(format!(
                    "rows {}->{} at {} ns",
                    r,
                    r + 1,
                    DEFAULT_DELAYS_S[d] * 1e9
                ));
            }
        }
    }
    for (r, by_delay) in t.evm.iter().enumerate() {
        for d in 1..by_delay.len() {
            if !(by_delay[d][s] > by_delay[d - 1][s]) {
                bad.push(format!("row {} delays {}->{}", r + 1, d - 1, d));
            }
        }
    }
    let corners = format!(
        "standard EVM {:.1}% (row 1, 0 ns) .. {:.1}% (row 5, 0 ns) .. {:.1}% (row 1, 912 ns); sweep {:.1} s",
        t.evm[0][0][s],
        t.evm[4][0][s],
        t.evm[0][5][s],
        t.secs
    );
    ensure(
        bad.is_empty(),
        if bad.is_empty() {
            corners
        } else {
            format!("{corners}; violations: {}", bad.join(", "))
        },
    )
}

fn criterion_6(t: &SweepTable) -> Check {
    let s = mode_index(ReceiverMode::Standard);
    let b = mode_index(ReceiverMode::BaselineLicpe);
    let a = mode_index(ReceiverMode::AdvancedLicpe);
    let range = |d: usize, m: usize| {
        let v: Vec<f64> = t.evm.iter().map(|r| r[d][m]).collect();
        v.iter().cloned().fold(f64::MIN, f64::max) - v.iter().cloned().fold(f64::MAX, f64::min)
    };
    let mut bad = Vec::new();
    let mut worst_ratio = 0.0f64;
    for d in 0..DEFAULT_DELAYS_S.len() {
        let std_range = range(d, s);
        for m in [b, a] {
            let ratio = range(d, m) / std_range;
            worst_ratio = worst_ratio.max(ratio);
            if !(ratio < 0.5) {
                bad.push(format!(
                    "{} at {} ns: range ratio {ratio:.2}",
                    ReceiverMode::ALL[m],
                    DEFAULT_DELAYS_S[d] * 1e9
                ));
            }
        }
        for row in [4, 5] {
            let e = t.evm[row - 1][d];
            if !(e[a] <= e[b]) {
                bad.push(format!(
                    "row {row} at {} ns: advanced {:.3}% > baseline {:.3}%",
                    DEFAULT_DELAYS_S[d] * 1e9,
                    e[a],
                    e[b]
                ));
            }
        }
    }
    let msg = format!(
        "largest LI-CPE/standard range ratio {worst_ratio:.3}; advanced <= baseline on rows 4-5"
    );
    ensure(
        bad.is_empty(),
        if bad.is_empty() {
            msg
        } else {
            format!("{msg}; violations: {}", bad.join(", "))
        },
    )
}

fn db(x: f64) -> f64 {
    10.0 * x.log10()
}

fn band_extreme(rep: &PsdReport, lo: f64, hi: f64, min: bool) -> (f64, f64) {
    rep.freq_hz
        .iter()
        .zip(&rep.delayed)
        .filter(|(f, _)| **f >= lo && **f <= hi)
        .map(|(f, p)| (*f, *p))
        .fold(
            (f64::NAN, if min { f64::INFINITY } else { 0.0 }),
            |acc, x| {
                if (min && x.1 < acc.1) || (!min && x.1 > acc.1) {
                    x
                } else {
                    acc
                }
            },
        )
}

fn criterion_7() -> Check {
    let t = Instant::now();
    let reports: Vec<PsdReport> = DEFAULT_DELAYS_S
        .iter()
        .map(|&delay_s| {
            psd_characterization(&PsdRequest {
                delay_s,
                seed: 7,
                ..PsdRequest::default()
            })
        })
        .collect::<Result<_, _>>()
        .map_err(|e| e.to_string())?;
    let secs = t.elapsed().as_secs_f64();
    let tau = DEFAULT_DELAYS_S[5];
    let rep = &reports[5];
    let mut notes = Vec::new();
    let mut ok = true;
    for k in [1.0, 2.0] {
        let (f_null, p_null) = band_extreme(rep, 0.9 * k / tau, 1.1 * k / tau, true);
        let (_, p_left) = band_extreme(rep, (k - 0.7) / tau, (k - 0.3) / tau, false);
        let (_, p_right) = band_extreme(rep, (k + 0.3) / tau, (k + 0.7) / tau, false);
        let depth = db(p_left.min(p_right)) - db(p_null);
        // The minimum must be local, not the edge of the search band.
        let interior =
            f_null > 0.9 * k / tau + rep.freq_hz[1] && f_null < 1.1 * k / tau - rep.freq_hz[1];
        ok &= interior && depth >= 10.0;
        notes.push(format!(
            "null {k}/tau at {:.3} MHz, {depth:.1} dB deep",
            f_null / 1e6
        ));
    }
    // Mean density over the lowest non-DC bins.
    let low: Vec<f64> = reports
        .iter()
        .map(|r| r.delayed[1..=8].iter().sum::<f64>() / 8.0)
        .collect();
    let monotone = low.windows(2).all(|w| w[1] >= w[0]);
    ok &= monotone && secs < 60.0;
    notes.push(format!(
        "low-frequency level {} across delays ({})",
        if monotone {
            "nondecreasing"
        } else {
            "NOT monotone"
        },
        low.iter()
            .map(|v| format!("{v:.2e}"))
            .collect::<Vec<_>>()
            .join(", ")
    ));
    notes.push(format!("{secs:.1} s"));
    ensure(ok, notes.join("; "))
}

fn criterion_8() -> Check {
    let mut worst_evm = 0.0f64;
    let mut worst_mse = 0.0f64;
    for row in rows() {
        for delay_s in [0.0, 912e-9] {
            let point = RunPoint {
                config_row: row,
                n_symbols: 4,
                beta_hz: 0.0,
                source_linewidth_hz: 0.0,
                delay_s,
                snr_db: f64::INFINITY,
                seed: 9,
                ..RunPoint::default()
            };
            let frame = Frame::generate(&point).map_err(|e| e.to_string())?;
            let rx = frame
                .receiver(SlopeEstimator::Literal)
                .map_err(|e| e.to_string())?;
            for mode in ReceiverMode::ALL {
                let out = rx.run(&frame.rx, mode).map_err(|e| e.to_string())?;
                let m = frame
                    .evaluate(
                        &RunPoint {
                            mode,
                            ..point.clone()
                        },
                        &out,
                    )
                    .map_err(|e| e.to_string())?;
                worst_evm = worst_evm.max(m.evm_percent);
                worst_mse = worst_mse.max(m.phase_mse_rad2);
            }
        }
    }
    ensure(
        worst_evm < 0.01 && worst_mse < 1e-20,
        format!("max EVM {worst_evm:.2e}%, max phase MSE {worst_mse:.2e} rad^2"),
    )
}

fn criterion_9() -> Check {
    let mut worst_rt = 0.0f64;
    let mut worst_parseval = 0.0f64;
    for row in rows() {
        let c = make_config(row)
            .map_err(|e| e.to_string())?
            .with_n_symbols(3);
        let bits = random_bits(&mut rng_for(50 + row as u64), 2 * 3 * c.data_count());
        let g = build_grid(&c, &map_qpsk(&bits).unwrap(), 3).unwrap();
        let s = modulate(&g, &c).map_err(|e| e.to_string())?;
        let back = demodulate(&s, &c).map_err(|e| e.to_string())?;
        let err: f64 = back
            .cells()
            .iter()
            .zip(g.cells())
            .map(|(a, b)| (a - b).norm_sqr())
            .sum();
        worst_rt = worst_rt.max((err / g.total_power()).sqrt());
        // The useful part of each symbol carries exactly the grid energy.
        let useful: f64 = s
            .samples
            .chunks_exact(c.symbol_len())
            .map(|sym| {
                sym[c.cp_len_samples..]
                    .iter()
                    .map(|x| x.norm_sqr())
                    .sum::<f64>()
            })
            .sum();
        worst_parseval = worst_parseval.max((useful / g.total_power() - 1.0).abs());
    }
    let fs = common_sample_rate_hz();
    let trace = gen_wiener_phase(150.0, 1_000_001, fs, 12345).map_err(|e| e.to_string())?;
    let inc: Vec<f64> = trace.phase_rad.windows(2).map(|w| w[1] - w[0]).collect();
    let mean = inc.iter().sum::<f64>() / inc.len() as f64;
    let var = inc.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (inc.len() - 1) as f64;
    let rel = var / wiener_increment_variance(150.0, fs) - 1.0;
    ensure(
        worst_rt < 1e-10 && worst_parseval < 1e-9 && rel.abs() < 0.02,
        format!(
            "round trip {worst_rt:.2e}, Parseval {worst_parseval:.2e}, Wiener variance {:+.2}%",
            100.0 * rel
        ),
    )
}

fn run_cli(args: &[&str]) -> Result<Vec<u8>, String> {
    let out = Command::new(env!("CARGO_BIN_EXE_ofdm-pn"))
        .args(args)
        .env_remove("OFDM_PN_WORKERS")
        .output()
        .map_err(|e| e.to_string())?;
    if !out.status.success() {
        return Err(format!(
            "{args:?} exited with {}: {}",
            out.status,
            String::from_utf8_lossy(&out.stderr)
        ));
    }
    Ok(out.stdout)
}

fn read_dir_sorted(dir: &Path) -> Result<Vec<(String, Vec<u8>)>, String> {
    let mut files: Vec<_> = std::fs::read_dir(dir)
        .map_err(|e| e.to_string())?
        .filter(|e| e.as_ref().map_or(true, |e| e.path().is_file()))
        .map(|e| {
            let e = e.map_err(|e| e.to_string())?;
            let bytes = std::fs::read(e.path()).map_err(|e| e.to_string())?;
            Ok((e.file_name().to_string_lossy().into_owned(), bytes))
        })
        .collect::<Result<_, String>>()?;
    files.sort();
    Ok(files)
}

fn criterion_10() -> Check {
    let commands: [&[&str]; 5] = [
        &[
            "simulate",
            "--config-row",
            "4",
            "--delay-ns",
            "480",
            "--snr-db",
            "20",
            "--seed",
            "3",
            "--n-symbols",
            "6",
        ],
        &[
            "sweep",
            "--config-row",
            "4",
            "--config-row",
            "5",
            "--delay-ns",
            "0",
            "--delay-ns",
            "912",
            "--seeds",
            "3",
            "--n-symbols",
            "4",
            "--workers",
            "4",
        ],
        &[
            "sweep",
            "--config-row",
            "4",
            "--config-row",
            "5",
            "--delay-ns",
            "0",
            "--delay-ns",
            "912",
            "--seeds",
            "3",
            "--n-symbols",
            "4",
            "--workers",
            "1",
        ],
        &[
            "psd",
            "--delay-ns",
            "912",
            "--duration-s",
            "1e-3",
            "--segment-len",
            "8192",
            "--seed",
            "5",
        ],
        &["figure1", "--seed", "2", "--n-symbols", "6"],
    ];
    let mut outputs = Vec::new();
    for args in commands {
        let mut runs = Vec::new();
        for _ in 0..2 {
            let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
            let out = dir.path().join("out.csv");
            let mut full: Vec<&str> = args.to_vec();
            full.extend(["--out", out.to_str().unwrap()]);
            let wave_dir = dir.path().join("waves");
            if args[0] == "simulate" {
                full.extend(["--save-waveforms", wave_dir.to_str().unwrap()]);
            }
            let stdout = run_cli(&full)?;
            runs.push((
                stdout,
                read_dir_sorted(dir.path())?,
                read_dir_sorted(&wave_dir).unwrap_or_default(),
            ));
        }
        if runs[0] != runs[1] {
            return Err(format!(
                "`ofdm-pn {}` output differs between runs",
                args.join(" ")
            ));
        }
        outputs.push(runs.swap_remove(0));
    }
    // Worker count must not change sweep output either.
    ensure(
        outputs[1] == outputs[2],
        "simulate, sweep, psd and figure1 byte-identical across repeats; sweep identical for 1 and 4 workers".into(),
    )
}

fn main() {
    let t = Instant::now();
    let fig1 = fig1_stats();
    let sweep = sweep_table();
    let results: Vec<(&str, Check)> = vec![
        (
            "interpolator MSE comparison over 200 seeds",
            fig1.as_ref().map_err(Clone::clone).and_then(criterion_1),
        ),
        (
            "interpolator MSE magnitude",
            fig1.as_ref().map_err(Clone::clone).and_then(criterion_2),
        ),
        ("CP slope estimator exact on linear ramps", criterion_3()),
        ("causality of the two interpolators", criterion_4()),
        (
            "uncompensated EVM trends over spacing and delay",
            sweep.as_ref().map_err(Clone::clone).and_then(criterion_5),
        ),
        (
            "LI-CPE EVM flatness and advanced <= baseline",
            sweep.as_ref().map_err(Clone::clone).and_then(criterion_6),
        ),
        (
            "delayed-branch PSD nulls and low-frequency level",
            criterion_7(),
        ),
        ("zero-noise identity", criterion_8()),
        ("numeric hygiene", criterion_9()),
        ("CLI determinism", criterion_10()),
    ];
    let mut failed = 0;
    for (i, (name, r)) in results.iter().enumerate() {
        match r {
            Ok(msg) => println!("PASS  {:>2}  {name}: {msg}", i + 1),
            Err(msg) => {
                failed += 1;
                println!("FAIL  {:>2}  {name}: {msg}", i + 1);
            }
        }
    }
    println!(
        "acceptance: {} passed, {failed} failed ({:.1} s)",
        results.len() - failed,
        t.elapsed().as_secs_f64()
    );
    if failed > 0 {
        std::process::exit(1);
    }
}
