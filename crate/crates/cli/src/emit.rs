//! Plot-ready trace files.
//!
//! CSV has one header row and one row per (sweep cell, iteration), cells in
//! sweep order. Numbers are written with six decimals so reruns diff clean.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use irs_assoc::SatisfactionTrace;
use serde::Serialize;

use crate::experiment::{io_err, ExperimentError, OutputFormat};

pub const CSV_HEADER: &str = "iteration,policy,case,omega,phi,mean_satisfaction,ci95_halfwidth,mean_secrecy_rate";

pub fn write_csv<W: Write>(mut w: W, traces: &[SatisfactionTrace]) -> std::io::Result<()> {
    writeln!(w, "{CSV_HEADER}")?;
    for t in traces {
        for i in 0..t.periods() {
            writeln!(
                w,
                "{},{},{},{},{},{:.6},{:.6},{:.6}",
                i + 1,
                t.policy,
                t.case,
                t.omega,
                t.phi,
                t.mean[i],
                t.ci95[i],
                t.mean_secrecy[i]
            )?;
        }
    }
    Ok(())
}

#[derive(Serialize)]
struct JsonRecord {
    iteration: usize,
    mean_satisfaction: f64,
    ci95_halfwidth: f64,
    mean_secrecy_rate: f64,
}

#[derive(Serialize)]
struct JsonCell<'a> {
    policy: &'a str,
    case: &'a str,
    omega: f64,
    phi: u32,
    records: Vec<JsonRecord>,
}

fn six(x: f64) -> f64 {
    (x * 1e6).round() / 1e6
}

pub fn write_json<W: Write>(mut w: W, traces: &[SatisfactionTrace]) -> std::io::Result<()> {
    let cells: Vec<JsonCell> = traces
        .iter()
        .map(|t| JsonCell {
            policy: t.policy.as_str(),
            case: t.case.as_str(),
            omega: t.omega,
            phi: t.phi,
            records: (0..t.periods())
                .map(|i| JsonRecord {
                    iteration: i + 1,
                    mean_satisfaction: six(t.mean[i]),
                    ci95_halfwidth: six(t.ci95[i]),
                    mean_secrecy_rate: six(t.mean_secrecy[i]),
                })
                .collect(),
        })
        .collect();
    serde_json::to_writer_pretty(&mut w, &cells)?;
    writeln!(w)
}

pub fn write_traces<W: Write>(w: W, traces: &[SatisfactionTrace], format: OutputFormat) -> std::io::Result<()> {
    match format {
        OutputFormat::Csv => write_csv(w, traces),
        OutputFormat::Json => write_json(w, traces),
    }
}

/// Writes `traces` to `path`, replacing any existing file.
pub fn emit_traces(path: &Path, traces: &[SatisfactionTrace], format: OutputFormat) -> Result<(), ExperimentError> {
    let file = File::create(path).map_err(io_err(path))?;
    let mut w = BufWriter::new(file);
    write_traces(&mut w, traces, format).map_err(io_err(path))?;
    w.flush().map_err(io_err(path))
}

/// Single-trace convenience wrapper.
pub fn emit_trace(path: &Path, trace: &SatisfactionTrace, format: OutputFormat) -> Result<(), ExperimentError> {
    emit_traces(path, std::slice::from_ref(trace), format)
}
