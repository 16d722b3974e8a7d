//! File formats.
//!
//! Waveform files are `OFPNWAV\0`, a little-endian `u32` header length, a JSON
//! header of exactly that many bytes, then the payload: interleaved `f32` I/Q
//! pairs for complex signals or `f64` values for phase traces, little-endian.
//!
//! Metrics are written as CSV with the fixed column order in
//! [`METRICS_COLUMNS`]; floats carry 9 significant digits.

use std::fs;
use std::io::Write;
use std::path::Path;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::channel::PhaseTrace;
use crate::metrics::RunMetrics;
use crate::ofdm::{OfdmConfig, TimeSignal};
use crate::{Error, Result};

pub const MAGIC: &[u8; 8] = b"OFPNWAV\0";
pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq)]
pub enum Waveform {
    Signal(TimeSignal),
    Phase(PhaseTrace),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TraceKind {
    ComplexSignal,
    PhaseTrace,
}

/// Caller-supplied provenance stored alongside the samples.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct WaveformMeta {
    pub seed: Option<u64>,
    pub config: Option<OfdmConfig>,
    pub description: Option<String>,
}

#[derive(Debug, Serialize, Deserialize)]
struct Header {
    format_version: u32,
    kind: TraceKind,
    sample_rate_hz: f64,
    sample_count: usize,
    #[serde(default)]
    edges: Vec<[usize; 2]>,
    meta: WaveformMeta,
}

pub fn encode_waveform(waveform: &Waveform, meta: &WaveformMeta) -> Result<Vec<u8>> {
    let (kind, sample_rate_hz, sample_count, edges) = match waveform {
        Waveform::Signal(s) => (
            TraceKind::ComplexSignal,
            s.sample_rate_hz,
            s.len(),
            Vec::new(),
        ),
        Waveform::Phase(p) => (
            TraceKind::PhaseTrace,
            p.sample_rate_hz,
            p.len(),
            p.edges.iter().map(|r| [r.start, r.end]).collect(),
        ),
    };
    let header = serde_json::to_vec(&Header {
        format_version: FORMAT_VERSION,
        kind,
        sample_rate_hz,
        sample_count,
        edges,
        meta: meta.clone(),
    })
    .map_err(|e| Error::MalformedHeader(e.to_string()))?;
    let header_len =
        u32::try_from(header.len()).map_err(|_| Error::invalid("waveform header too large"))?;

    let mut out = Vec::with_capacity(12 + header.len() + sample_count * 8);
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&header_len.to_le_bytes());
    out.extend_from_slice(&header);
    match waveform {
        Waveform::Signal(s) => {
            for x in &s.samples {
                out.extend_from_slice(&(x.re as f32).to_le_bytes());
                out.extend_from_slice(&(x.im as f32).to_le_bytes());
            }
        }
        Waveform::Phase(p) => {
            for v in &p.phase_rad {
                out.extend_from_slice(&v.to_le_bytes());
            }
        }
    }
    Ok(out)
}

pub fn decode_waveform(bytes: &[u8]) -> Result<(Waveform, WaveformMeta)> {
    if bytes.len() < 12 || &bytes[..8] != MAGIC {
        return Err(Error::MalformedHeader("missing magic".into()));
    }
    let header_len = u32::from_le_bytes(bytes[8..12].try_into().expect("4 bytes")) as usize;
    let header_bytes = bytes
        .get(12..12 + header_len)
        .ok_or_else(|| Error::MalformedHeader("header length exceeds file size".into()))?;
    let raw: serde_json::Value =
        serde_json::from_slice(header_bytes).map_err(|e| Error::MalformedHeader(e.to_string()))?;
    let version = raw
        .get("format_version")
        .and_then(|v| v.as_u64())
        .ok_or_else(|| Error::MalformedHeader("missing format_version".into()))?;
    if version != u64::from(FORMAT_VERSION) {
        return Err(Error::UnsupportedVersion {
            found: u32::try_from(version).unwrap_or(u32::MAX),
            supported: FORMAT_VERSION,
        });
    }
    let header: Header =
        serde_json::from_value(raw).map_err(|e| Error::MalformedHeader(e.to_string()))?;

    let payload = &bytes[12 + header_len..];
    // Both kinds use 8 bytes per sample: two f32 or one f64.
    let expected = header
        .sample_count
        .checked_mul(8)
        .ok_or_else(|| Error::MalformedHeader("sample count overflows".into()))?;
    if payload.len() < expected {
        return Err(Error::TruncatedPayload {
            expected,
            found: payload.len(),
        });
    }
    if payload.len() > expected {
        return Err(Error::MalformedHeader(format!(
            "{} trailing bytes after the declared payload",
            payload.len() - expected
        )));
    }
    let waveform = match header.kind {
        TraceKind::ComplexSignal => Waveform::Signal(TimeSignal::new(
            payload
                .chunks_exact(8)
                .map(|c| {
                    let re = f32::from_le_bytes(c[..4].try_into().expect("4 bytes"));
                    let im = f32::from_le_bytes(c[4..].try_into().expect("4 bytes"));
                    Complex64::new(re as f64, im as f64)
                })
                .collect(),
            header.sample_rate_hz,
        )),
        TraceKind::PhaseTrace => {
            let mut t = PhaseTrace::new(
                payload
                    .chunks_exact(8)
                    .map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes")))
                    .collect(),
                header.sample_rate_hz,
            );
            t.edges = header.edges.iter().map(|&[a, b]| a..b).collect();
            Waveform::Phase(t)
        }
    };
    Ok((waveform, header.meta))
}

pub fn save_waveform(
    path: impl AsRef<Path>,
    waveform: &Waveform,
    meta: &WaveformMeta,
) -> Result<()> {
    fs::write(path, encode_waveform(waveform, meta)?)?;
    Ok(())
}

pub fn load_waveform(path: impl AsRef<Path>) -> Result<(Waveform, WaveformMeta)> {
    decode_waveform(&fs::read(path)?)
}

pub const METRICS_COLUMNS: [&str; 22] = [
    "config_id",
    "subcarrier_spacing_hz",
    "fft_size",
    "cp_len_samples",
    "realized_tcp_s",
    "sample_rate_hz",
    "full_active",
    "n_symbols",
    "delay_s",
    "beta_hz",
    "source_linewidth_hz",
    "snr_db",
    "mode",
    "slope_estimator",
    "seed",
    "evm_percent",
    "phase_mse_rad2",
    "phase_mse_excl_edges_rad2",
    "edge_samples",
    "ber",
    "per_symbol_cpe_rad",
    "error",
];

/// Formats a float with 9 significant digits (`inf`, `-inf`, `nan` for non-finite).
pub fn fmt_sig9(x: f64) -> String {
    if x.is_nan() {
        "nan".into()
    } else if x.is_infinite() {
        if x > 0.0 {
            "inf".into()
        } else {
            "-inf".into()
        }
    } else if x == 0.0 {
        "0".into()
    } else {
        format!("{x:.8e}")
    }
}

fn metrics_record(m: &RunMetrics) -> Vec<String> {
    vec![
        m.config_id.to_string(),
        fmt_sig9(m.subcarrier_spacing_hz),
        m.fft_size.to_string(),
        m.cp_len_samples.to_string(),
        fmt_sig9(m.realized_tcp_s),
        fmt_sig9(m.sample_rate_hz),
        m.full_active.to_string(),
        m.n_symbols.to_string(),
        fmt_sig9(m.delay_s),
        fmt_sig9(m.beta_hz),
        fmt_sig9(m.source_linewidth_hz),
        fmt_sig9(m.snr_db),
        m.mode.clone(),
        m.slope_estimator.clone(),
        m.seed.to_string(),
        fmt_sig9(m.evm_percent),
        fmt_sig9(m.phase_mse_rad2),
        fmt_sig9(m.phase_mse_excl_edges_rad2),
        m.edge_samples.to_string(),
        fmt_sig9(m.ber),
        m.per_symbol_cpe_rad
            .iter()
            .map(|&v| fmt_sig9(v))
            .collect::<Vec<_>>()
            .join(";"),
        m.error.clone().unwrap_or_default(),
    ]
}

pub fn write_metrics_csv_to<W: Write>(rows: &[RunMetrics], writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(METRICS_COLUMNS)?;
    for m in rows {
        w.write_record(metrics_record(m))?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_metrics_csv(rows: &[RunMetrics], path: impl AsRef<Path>) -> Result<()> {
    let mut buf = Vec::new();
    write_metrics_csv_to(rows, &mut buf)?;
    fs::write(path, buf)?;
    Ok(())
}
