use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use irs_assoc::engine::{run_monte_carlo, FINAL_WINDOW};
use irs_assoc::{DistributionCase, PolicyConfig, PolicyKind, SatisfactionTrace, SimulationConfig};
use serde::{Deserialize, Serialize};
use thiserror::Error;
use tracing::info;

use crate::config::ConfigError;
use crate::emit::emit_traces;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OutputFormat {
    Csv,
    Json,
}

impl std::fmt::Display for OutputFormat {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            OutputFormat::Csv => "csv",
            OutputFormat::Json => "json",
        })
    }
}

impl std::str::FromStr for OutputFormat {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "csv" => Ok(OutputFormat::Csv),
            "json" => Ok(OutputFormat::Json),
            other => Err(format!("unknown format `{other}` (expected csv|json)")),
        }
    }
}

/// Axes of the Cartesian sweep. Cells are enumerated policy-major, then
/// case, omega and phi.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Sweep {
    pub policies: Vec<PolicyKind>,
    pub cases: Vec<DistributionCase>,
    pub phi: Vec<u32>,
    pub omega: Vec<f64>,
}

impl Sweep {
    pub fn validate(&self) -> Result<(), ConfigError> {
        let empty = |key: &str| ConfigError::Invalid {
            key: key.into(),
            reason: "sweep axis must not be empty".into(),
        };
        if self.policies.is_empty() {
            return Err(empty("sweep.policies"));
        }
        if self.cases.is_empty() {
            return Err(empty("sweep.cases"));
        }
        if self.phi.is_empty() {
            return Err(empty("sweep.phi"));
        }
        if self.omega.is_empty() {
            return Err(empty("sweep.omega"));
        }
        if let Some(o) = self.omega.iter().find(|o| !(0.0..=1.0).contains(*o)) {
            return Err(ConfigError::Invalid {
                key: "sweep.omega".into(),
                reason: format!("{o} is outside [0, 1]"),
            });
        }
        if self.phi.contains(&0) {
            return Err(ConfigError::Invalid {
                key: "sweep.phi".into(),
                reason: "must be at least 1".into(),
            });
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentSpec {
    pub base: SimulationConfig,
    pub sweep: Sweep,
    pub output_path: PathBuf,
    pub format: OutputFormat,
}

impl ExperimentSpec {
    /// One simulation config per sweep cell, in emission order.
    pub fn cells(&self) -> Vec<SimulationConfig> {
        let mut cells = Vec::new();
        for &kind in &self.sweep.policies {
            for &case in &self.sweep.cases {
                for &omega in &self.sweep.omega {
                    for &phi in &self.sweep.phi {
                        let mut cfg = self.base.clone();
                        cfg.policy = PolicyConfig { kind, omega, phi };
                        cfg.topology.distribution_case = case;
                        cells.push(cfg);
                    }
                }
            }
        }
        cells
    }

    /// Where the summary goes: next to the trace, `<stem>.summary.json`.
    pub fn summary_path(&self) -> PathBuf {
        let stem = self
            .output_path
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_else(|| "trace".into());
        self.output_path.with_file_name(format!("{stem}.summary.json"))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellSummary {
    pub policy: PolicyKind,
    pub case: DistributionCase,
    pub omega: f64,
    pub phi: u32,
    /// Mean satisfaction over the last iterations (window of 20).
    pub final_mean: f64,
    /// CB final mean minus the matching greedy cell's, on CB cells only.
    pub gap_vs_greedy: Option<f64>,
    pub mean_secrecy_rate: f64,
    pub wall_clock_s: f64,
    pub first_seed: u64,
    pub last_seed: u64,
    pub blocks_drawn: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub final_window: usize,
    pub cells: Vec<CellSummary>,
}

impl RunSummary {
    pub fn cell(&self, policy: PolicyKind, case: DistributionCase, omega: f64, phi: u32) -> Option<&CellSummary> {
        self.cells
            .iter()
            .find(|c| c.policy == policy && c.case == case && c.omega == omega && c.phi == phi)
    }

    /// Plain-text comparison table.
    pub fn table(&self) -> String {
        let mut out = format!(
            "{:<7} {:<10} {:>6} {:>4} {:>11} {:>9} {:>9} {:>8}\n",
            "policy", "case", "omega", "phi", "final_mean", "gap", "secrecy", "secs"
        );
        for c in &self.cells {
            let gap = c.gap_vs_greedy.map_or_else(|| "-".to_string(), |g| format!("{g:+.4}"));
            out.push_str(&format!(
                "{:<7} {:<10} {:>6} {:>4} {:>11.4} {:>9} {:>9.4} {:>8.2}\n",
                c.policy.as_str(),
                c.case.as_str(),
                c.omega,
                c.phi,
                c.final_mean,
                gap,
                c.mean_secrecy_rate,
                c.wall_clock_s
            ));
        }
        out
    }
}

#[derive(Debug, Error)]
pub enum ExperimentError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("simulation failed: {0}")]
    Engine(#[from] irs_assoc::Error),
    #[error("cannot write {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

pub(crate) fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> ExperimentError + '_ {
    move |source| ExperimentError::Io {
        path: path.to_path_buf(),
        source,
    }
}

/// Runs every sweep cell and returns the traces in emission order with the
/// summary. Nothing is written.
pub fn run_sweep(spec: &ExperimentSpec) -> Result<(Vec<SatisfactionTrace>, RunSummary), ExperimentError> {
    spec.sweep.validate()?;
    let mut traces = Vec::new();
    let mut cells = Vec::new();
    for cfg in spec.cells() {
        cfg.validate().map_err(ConfigError::from)?;
        let started = Instant::now();
        let trace = run_monte_carlo(&cfg)?;
        let secs = started.elapsed().as_secs_f64();
        info!(
            policy = %cfg.policy.kind,
            case = %cfg.topology.distribution_case,
            omega = cfg.policy.omega,
            phi = cfg.policy.phi,
            final_mean = trace.final_mean(FINAL_WINDOW),
            secs,
            "cell done"
        );
        cells.push(CellSummary {
            policy: cfg.policy.kind,
            case: cfg.topology.distribution_case,
            omega: cfg.policy.omega,
            phi: cfg.policy.phi,
            final_mean: trace.final_mean(FINAL_WINDOW),
            gap_vs_greedy: None,
            mean_secrecy_rate: trace.overall_secrecy(),
            wall_clock_s: secs,
            first_seed: trace.seeds.first().copied().unwrap_or(cfg.base_seed),
            last_seed: trace.seeds.last().copied().unwrap_or(cfg.base_seed),
            blocks_drawn: trace.blocks_drawn,
        });
        traces.push(trace);
    }

    let greedy: Vec<CellSummary> = cells
        .iter()
        .filter(|c| c.policy == PolicyKind::Greedy)
        .cloned()
        .collect();
    for cell in cells.iter_mut().filter(|c| c.policy == PolicyKind::ContextualBandit) {
        // greedy ignores omega/phi, so any greedy cell of the same case will do;
        // prefer the one with matching parameters
        let matching = greedy
            .iter()
            .find(|g| g.case == cell.case && g.omega == cell.omega && g.phi == cell.phi)
            .or_else(|| greedy.iter().find(|g| g.case == cell.case));
        cell.gap_vs_greedy = matching.map(|g| cell.final_mean - g.final_mean);
    }

    Ok((
        traces,
        RunSummary {
            final_window: FINAL_WINDOW,
            cells,
        },
    ))
}

/// Runs the sweep, writes the trace file and `<stem>.summary.json`.
pub fn run_experiment(spec: &ExperimentSpec) -> Result<RunSummary, ExperimentError> {
    let (traces, summary) = run_sweep(spec)?;
    if let Some(dir) = spec.output_path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(io_err(dir))?;
    }
    emit_traces(&spec.output_path, &traces, spec.format)?;
    let summary_path = spec.summary_path();
    let json = serde_json::to_string_pretty(&summary).expect("summary serializes");
    fs::write(&summary_path, json + "\n").map_err(io_err(&summary_path))?;
    Ok(summary)
}
