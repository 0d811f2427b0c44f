//! Command-line front end: `run`, `report` and `plot`.
//!
//! Exit codes are stable: 0 success, 1 I/O failure, 2 malformed input,
//! 3 scenario invariant violation, 4 empty trace.

mod plot;
mod scenario_file;
mod trace;

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;
use thiserror::Error;

use crate::analysis::TheoryReport;
use crate::netsim::{run_simulation_with, solve_honest_optimum, Execution, Scenario};
use crate::AgentId;

pub use plot::{render_svg, Series, LOG_FLOOR};
pub use scenario_file::{load_scenario, AgentEntry, FaultyEntry, ScenarioFile};
pub use trace::{parse_error_series, render_trace, trace_header};

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("malformed input: {0}")]
    Malformed(String),
    #[error("invalid scenario: {0}")]
    Invalid(String),
    #[error("trace holds no plottable rounds")]
    EmptyTrace,
}

impl CliError {
    pub(crate) fn io(path: &Path, source: std::io::Error) -> Self {
        Self::Io {
            path: path.to_path_buf(),
            source,
        }
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            Self::Io { .. } => 1,
            Self::Malformed(_) => 2,
            Self::Invalid(_) => 3,
            Self::EmptyTrace => 4,
        }
    }
}

/// Command-line overrides applied on top of a scenario file.
#[derive(Debug, Clone, Default)]
pub struct RunOptions {
    pub seed: Option<u64>,
    pub no_filter: bool,
    pub max_rounds: Option<usize>,
    pub tolerance: Option<f64>,
    pub parallel: bool,
}

impl RunOptions {
    pub fn apply(&self, scenario: &mut Scenario) {
        if let Some(seed) = self.seed {
            scenario.seed = seed;
        }
        if self.no_filter {
            scenario.filter_enabled = false;
        }
        if let Some(rounds) = self.max_rounds {
            scenario.max_rounds = rounds;
        }
        if let Some(tolerance) = self.tolerance {
            scenario.tolerance = tolerance;
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TheorySummary {
    #[serde(flatten)]
    pub report: TheoryReport,
    pub rho_at_eta: f64,
    pub margin_holds: bool,
    pub eta_within_bound: bool,
}

/// Machine-readable outcome of a run, written next to the trace.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Summary {
    pub rounds_executed: usize,
    pub final_v_t: Option<f64>,
    pub x_star: Option<Vec<f64>>,
    pub final_estimates: BTreeMap<AgentId, Vec<f64>>,
    pub seed: u64,
    pub eta: f64,
    pub filter_enabled: bool,
    pub theory: Option<TheorySummary>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub theory_error: Option<String>,
}

fn theory_for(scenario: &Scenario) -> Result<TheorySummary, crate::Error> {
    let report = TheoryReport::for_costs(&scenario.honest_costs(), scenario.n, scenario.f)?;
    Ok(TheorySummary {
        rho_at_eta: report.rho_at(scenario.eta),
        margin_holds: report.margin_holds(),
        eta_within_bound: report.step_within_bound(scenario.eta),
        report,
    })
}

/// Default summary location: `<trace stem>.summary.json` beside the trace.
pub fn summary_path_for(trace_path: &Path) -> PathBuf {
    trace_path.with_extension("summary.json")
}

fn write_file(path: &Path, contents: &str) -> Result<(), CliError> {
    fs::write(path, contents).map_err(|e| CliError::io(path, e))
}

/// Runs a scenario, writing the CSV trace to `out` and the JSON summary to
/// `summary` (or the default location).
pub fn cmd_run(
    scenario_path: &Path,
    out: &Path,
    summary: Option<&Path>,
    options: &RunOptions,
) -> Result<Summary, CliError> {
    let mut scenario = load_scenario(scenario_path)?;
    options.apply(&mut scenario);
    scenario
        .validate()
        .map_err(|e| CliError::Invalid(e.to_string()))?;

    let execution = if options.parallel {
        Execution::Parallel
    } else {
        Execution::Sequential
    };
    let traces =
        run_simulation_with(&scenario, execution).map_err(|e| CliError::Invalid(e.to_string()))?;
    write_file(out, &render_trace(&traces))?;

    let last = traces.last().expect("trace includes round 0");
    let (theory, theory_error) = match theory_for(&scenario) {
        Ok(t) => (Some(t), None),
        Err(e) => (None, Some(e.to_string())),
    };
    let result = Summary {
        rounds_executed: last.round,
        final_v_t: last.v_t,
        x_star: solve_honest_optimum(scenario.costs.values())
            .ok()
            .map(|x| x.iter().copied().collect()),
        final_estimates: last
            .estimates
            .iter()
            .map(|(&id, x)| (id, x.iter().copied().collect()))
            .collect(),
        seed: scenario.seed,
        eta: scenario.eta,
        filter_enabled: scenario.filter_enabled,
        theory,
        theory_error,
    };
    let summary_path = summary.map_or_else(|| summary_path_for(out), Path::to_path_buf);
    let json = serde_json::to_string_pretty(&result).expect("summary serializes");
    write_file(&summary_path, &(json + "\n"))?;
    Ok(result)
}

/// Human-readable theory report for a scenario.
pub fn render_report(scenario: &Scenario) -> String {
    let mut out = String::new();
    let _ = writeln!(
        out,
        "agents n = {}, fault budget f = {}, honest |H| = {}, eta = {}",
        scenario.n,
        scenario.f,
        scenario.costs.len(),
        scenario.eta
    );
    match solve_honest_optimum(scenario.costs.values()) {
        Ok(x) => {
            let _ = writeln!(out, "x_star = {:?}", x.as_slice());
        }
        Err(e) => {
            let _ = writeln!(out, "x_star = none ({e})");
        }
    }
    let theory = match theory_for(scenario) {
        Ok(t) => t,
        Err(e) => {
            let _ = writeln!(out, "theory unavailable: {e}");
            return out;
        }
    };
    let r = &theory.report;
    let _ = writeln!(out, "mu = {}", r.mu);
    let _ = writeln!(out, "lambda = {}", r.lambda);
    let _ = writeln!(out, "alpha = {}", r.alpha);
    let _ = writeln!(out, "beta = {}", r.beta);
    let _ = writeln!(out, "eta_max = {}", r.eta_max);
    let _ = writeln!(out, "eta_opt = {}", r.eta_opt);
    let _ = writeln!(out, "rho(eta) = {}", theory.rho_at_eta);
    let _ = writeln!(out, "redundancy_holds = {}", r.redundancy_holds);
    let _ = writeln!(out, "eta_within_bound = {}", theory.eta_within_bound);
    if !r.redundancy_holds {
        let _ = writeln!(
            out,
            "note: 2f-redundancy fails; it is necessary for exact fault tolerance, so no algorithm can guarantee reaching x_star on this instance"
        );
    }
    if !theory.margin_holds {
        let _ = writeln!(
            out,
            "warning: alpha <= 0, the sufficient condition for guaranteed linear convergence is not met"
        );
    } else if !theory.eta_within_bound {
        let _ = writeln!(
            out,
            "warning: eta is outside (0, eta_max); the contraction guarantee does not apply at this step size"
        );
    }
    out
}

pub fn cmd_report(scenario_path: &Path) -> Result<String, CliError> {
    Ok(render_report(&load_scenario(scenario_path)?))
}

/// Plots one curve per trace file. Labels default to the file stem.
pub fn cmd_plot(traces: &[PathBuf], labels: &[String], svg_path: &Path) -> Result<(), CliError> {
    let mut series = Vec::with_capacity(traces.len());
    for (k, path) in traces.iter().enumerate() {
        let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        let points = parse_error_series(&text)
            .map_err(|e| match e {
                CliError::Malformed(m) => CliError::Malformed(format!("{}: {m}", path.display())),
                other => other,
            })?
            .into_iter()
            .filter_map(|(round, v)| v.map(|v| (round, v)))
            .collect();
        let label = labels.get(k).cloned().unwrap_or_else(|| {
            path.file_stem()
                .map_or_else(|| format!("trace {k}"), |s| s.to_string_lossy().into_owned())
        });
        series.push(Series { label, points });
    }
    write_file(svg_path, &render_svg(&series)?)
}
