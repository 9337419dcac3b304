//! Running a configured experiment and writing its CSV files.
//!
//! | file | columns |
//! |---|---|
//! | `curves.csv` | `policy, trial, round, instant_regret, cum_regret` |
//! | `aggregate.csv` | `policy, round, mean_cum_regret, stderr` |
//! | `bounds.csv` | `policy, theoretical_bound` (empty for UCB baselines) |
//! | `monitor.csv` | `policy, round, max_psi, max_policy_ratio, bound, graph_bound, violations` |
//!
//! Rows are ordered by policy (as configured), then trial, then round.
//! `monitor.csv` reduces over trials: maxima of the ratios and the number
//! of trials with a violation in that round. It is written only when
//! monitoring is on.

use std::fs;
use std::path::{Path, PathBuf};

use crate::config::ExperimentConfig;
use crate::error::{Error, Result};
use crate::sim::{expected_regret_bound, run_experiment, ExperimentResult};

/// Process exit status when the invariant monitor recorded a violation.
pub const EXIT_MONITOR_VIOLATION: i32 = 3;

/// What [`run`] produced.
#[derive(Debug)]
pub struct RunReport {
    pub output: PathBuf,
    pub result: ExperimentResult,
    /// `None` for policies without a bound.
    pub bounds: Vec<Option<f64>>,
}

impl RunReport {
    pub fn exit_code(&self) -> i32 {
        if self.result.total_violations() > 0 {
            EXIT_MONITOR_VIOLATION
        } else {
            0
        }
    }

    /// One line per policy: final mean regret, stderr and bound.
    pub fn summary(&self) -> String {
        let mut out = format!(
            "{:<10} {:>12} {:>10} {:>10} {:>10}\n",
            "policy", "mean_regret", "stderr", "bound", "violations"
        );
        for (r, b) in self.result.results.iter().zip(&self.bounds) {
            let bound = b.map_or_else(|| "-".to_string(), |b| format!("{b:.2}"));
            out.push_str(&format!(
                "{:<10} {:>12.3} {:>10.3} {:>10} {:>10}\n",
                r.policy.as_str(),
                r.final_mean(),
                r.final_stderr(),
                bound,
                r.violations
            ));
        }
        out
    }
}

/// Runs the experiment described by `config` and writes the CSV files into
/// `config.output`.
pub fn run(config: &ExperimentConfig) -> Result<RunReport> {
    let spec = config.experiment_spec()?;
    let result = run_experiment(&spec)?;
    let bounds = result
        .results
        .iter()
        .map(|r| {
            match expected_regret_bound(
                r.policy,
                &spec.model,
                spec.horizon,
                config.arms,
                result.prior_entropy,
            ) {
                Ok(b) => Ok(Some(b)),
                Err(Error::NoBound(_)) => Ok(None),
                Err(e) => Err(e),
            }
        })
        .collect::<Result<Vec<_>>>()?;
    fs::create_dir_all(&config.output)?;
    write_curves(&config.output, &result)?;
    write_aggregate(&config.output, &result)?;
    write_bounds(&config.output, &result, &bounds)?;
    if config.monitor {
        write_monitor(&config.output, &result)?;
    }
    Ok(RunReport {
        output: config.output.clone(),
        result,
        bounds,
    })
}

fn writer(dir: &Path, name: &str) -> Result<csv::Writer<fs::File>> {
    Ok(csv::Writer::from_path(dir.join(name))?)
}

fn write_curves(dir: &Path, result: &ExperimentResult) -> Result<()> {
    let mut w = writer(dir, "curves.csv")?;
    w.write_record(["policy", "trial", "round", "instant_regret", "cum_regret"])?;
    for r in &result.results {
        for (trial, curve) in r.curves.iter().enumerate() {
            let mut cum = 0.0;
            for (i, x) in curve.instant.iter().enumerate() {
                cum += x;
                w.write_record([
                    r.policy.as_str(),
                    &trial.to_string(),
                    &(i + 1).to_string(),
                    &x.to_string(),
                    &cum.to_string(),
                ])?;
            }
        }
    }
    w.flush()?;
    Ok(())
}

fn write_aggregate(dir: &Path, result: &ExperimentResult) -> Result<()> {
    let mut w = writer(dir, "aggregate.csv")?;
    w.write_record(["policy", "round", "mean_cum_regret", "stderr"])?;
    for r in &result.results {
        for (t, (m, s)) in r.mean.iter().zip(&r.stderr).enumerate().skip(1) {
            w.write_record([
                r.policy.as_str(),
                &t.to_string(),
                &m.to_string(),
                &s.to_string(),
            ])?;
        }
    }
    w.flush()?;
    Ok(())
}

fn write_bounds(dir: &Path, result: &ExperimentResult, bounds: &[Option<f64>]) -> Result<()> {
    let mut w = writer(dir, "bounds.csv")?;
    w.write_record(["policy", "theoretical_bound"])?;
    for (r, b) in result.results.iter().zip(bounds) {
        w.write_record([
            r.policy.as_str(),
            &b.map_or_else(String::new, |b| b.to_string()),
        ])?;
    }
    w.flush()?;
    Ok(())
}

fn write_monitor(dir: &Path, result: &ExperimentResult) -> Result<()> {
    let mut w = writer(dir, "monitor.csv")?;
    w.write_record([
        "policy",
        "round",
        "max_psi",
        "max_policy_ratio",
        "bound",
        "graph_bound",
        "violations",
    ])?;
    for r in &result.results {
        for s in &r.monitor {
            w.write_record([
                r.policy.as_str(),
                &s.round.to_string(),
                &s.max_psi.to_string(),
                &s.max_policy_ratio.to_string(),
                &s.bound.map_or_else(String::new, |b| b.to_string()),
                &s.graph_bound.to_string(),
                &s.violations.to_string(),
            ])?;
        }
    }
    w.flush()?;
    Ok(())
}
