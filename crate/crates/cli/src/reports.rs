//! CSV serialization of sweep results, histograms and optimizer traces.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use incoherent_core::coherence::Histogram;
use incoherent_core::dictlearn::CoupledTraceEntry;
use incoherent_core::elad::OptimizerTrace;
use incoherent_core::harness::{Solver, SweepOutput, SweepSummary, TrialRecord, TrialStatus};

use crate::error::{Error, Result};
use crate::matrix_csv::format_value;

pub const TRIALS_HEADER: &str = "sparsity,trial_index,optimizer,solver,relative_error,success,seed,status";
pub const SUMMARY_HEADER: &str = "optimizer,solver,sparsity,mean_relative_error,failure_rate,trials";
pub const HISTOGRAM_HEADER: &str = "bin_lower,count";

fn opt(v: Option<f64>) -> String {
    v.map(format_value).unwrap_or_default()
}

pub fn format_trials(records: &[TrialRecord]) -> String {
    let mut out = String::from(TRIALS_HEADER);
    out.push('\n');
    for r in records {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{}",
            r.sparsity,
            r.trial,
            r.optimizer,
            r.solver.name(),
            format_value(r.relative_error),
            r.success,
            r.seed,
            r.status.name()
        );
    }
    out
}

pub fn parse_trials(text: &str, origin: &str) -> Result<Vec<TrialRecord>> {
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, h)) if h == TRIALS_HEADER => {}
        _ => return Err(Error::parse(origin, 1, "missing trials header")),
    }
    let mut records = Vec::new();
    for (idx, line) in lines {
        if line.is_empty() {
            continue;
        }
        let bad = |msg: &str| Error::parse(origin, idx + 1, msg.to_string());
        let f: Vec<&str> = line.split(',').collect();
        if f.len() != 8 {
            return Err(bad("expected 8 fields"));
        }
        records.push(TrialRecord {
            sparsity: f[0].parse().map_err(|_| bad("bad sparsity"))?,
            trial: f[1].parse().map_err(|_| bad("bad trial index"))?,
            optimizer: f[2].to_string(),
            solver: Solver::from_name(f[3]).ok_or_else(|| bad("bad solver"))?,
            relative_error: f[4].parse().map_err(|_| bad("bad relative error"))?,
            success: f[5].parse().map_err(|_| bad("bad success flag"))?,
            seed: f[6].parse().map_err(|_| bad("bad seed"))?,
            status: TrialStatus::from_name(f[7]).ok_or_else(|| bad("bad status"))?,
        });
    }
    Ok(records)
}

pub fn format_summary(summary: &SweepSummary) -> String {
    let mut out = String::from(SUMMARY_HEADER);
    out.push('\n');
    for c in &summary.cells {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{}",
            c.optimizer,
            c.solver.name(),
            c.sparsity,
            format_value(c.mean_relative_error),
            format_value(c.failure_rate),
            c.trials
        );
    }
    out
}

pub fn format_histogram(h: &Histogram) -> String {
    let mut out = String::from(HISTOGRAM_HEADER);
    out.push('\n');
    for b in &h.bins {
        let _ = writeln!(out, "{},{}", b.lower, b.count);
    }
    out
}

pub fn format_elad_trace(trace: &OptimizerTrace) -> String {
    let mut out = String::from("iter,mu_t,mu,threshold\n");
    for (i, e) in trace.entries.iter().enumerate() {
        let _ = writeln!(out, "{},{},{},{}", i + 1, opt(e.mu_t), format_value(e.mu), format_value(e.threshold));
    }
    out
}

/// For the Gram-space method the trace's `mu` field holds the largest
/// off-diagonal magnitude of the normalized iterate.
pub fn format_altproj_trace(trace: &OptimizerTrace) -> String {
    let mut out = String::from("iter,max_offdiag,mu_t\n");
    for (i, e) in trace.entries.iter().enumerate() {
        let _ = writeln!(out, "{},{},{}", i + 1, format_value(e.mu), opt(e.mu_t));
    }
    out
}

/// Step 0 is the objective before any row update.
pub fn format_sapiro_trace(initial: f64, trace: &[f64]) -> String {
    let mut out = String::from("step,objective\n");
    for (i, v) in std::iter::once(&initial).chain(trace).enumerate() {
        let _ = writeln!(out, "{i},{}", format_value(*v));
    }
    out
}

pub fn format_ksvd_trace(trace: &[f64]) -> String {
    let mut out = String::from("iter,objective\n");
    for (i, v) in trace.iter().enumerate() {
        let _ = writeln!(out, "{},{}", i + 1, format_value(*v));
    }
    out
}

pub fn format_coupled_trace(trace: &[CoupledTraceEntry]) -> String {
    let mut out = String::from("iter,term1,term2\n");
    for (i, e) in trace.iter().enumerate() {
        let _ = writeln!(out, "{},{},{}", i + 1, format_value(e.term1), format_value(e.term2));
    }
    out
}

pub fn write_text(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

pub fn create_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))
}

/// Writes `trials.csv`, `summary.csv`, one `gram_hist_<arm>.csv` per arm and
/// `config.echo`. Returns the paths written.
pub fn emit_reports(output: &SweepOutput, config_echo: &str, out_dir: &Path) -> Result<Vec<PathBuf>> {
    create_dir(out_dir)?;
    let mut files = vec![
        (out_dir.join("trials.csv"), format_trials(&output.records)),
        (out_dir.join("summary.csv"), format_summary(&output.summary)),
    ];
    for arm in &output.arms {
        files.push((out_dir.join(format!("gram_hist_{}.csv", arm.name)), format_histogram(&arm.histogram)));
    }
    files.push((out_dir.join("config.echo"), config_echo.to_string()));
    for (path, text) in &files {
        write_text(path, text)?;
    }
    Ok(files.into_iter().map(|(p, _)| p).collect())
}
