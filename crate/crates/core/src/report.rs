//! Plot-ready CSV tables and the JSON run manifest.
//!
//! Floats are written with 17 significant digits in scientific notation
//! (`{:.16e}`), which round-trips every `f64` exactly and never depends on
//! locale.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::harness::{ccdf, BenchmarkReport, Manifest, Stat, TrialRecord};
use crate::optimizers::OptimizerKind;
use crate::problems::ProblemKind;
use crate::{Error, Result};

pub const SUMMARY_HEADER: [&str; 8] = [
    "optimizer",
    "eta",
    "mean_delta_e",
    "std_delta_e",
    "mean_steps",
    "std_steps",
    "mean_quality",
    "std_quality",
];

pub const TRIALS_HEADER: [&str; 10] = [
    "optimizer",
    "eta",
    "seed",
    "init_digest",
    "steps_taken",
    "converged",
    "diverged",
    "final_energy",
    "delta_e",
    "quality",
];

pub const CCDF_HEADER: [&str; 3] = ["eta", "threshold", "probability"];

pub fn format_float(x: f64) -> String {
    format!("{x:.16e}")
}

fn format_opt(x: Option<f64>) -> String {
    x.map(format_float).unwrap_or_default()
}

/// One row of `summary.csv`, as read back.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub optimizer: OptimizerKind,
    pub eta: f64,
    pub mean_delta_e: f64,
    pub std_delta_e: f64,
    pub mean_steps: f64,
    pub std_steps: f64,
    pub mean_quality: Option<f64>,
    pub std_quality: Option<f64>,
}

/// Per-trial value of a CCDF metric.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Metric {
    DeltaE,
    Steps,
    Quality,
}

impl Metric {
    pub fn name(self) -> &'static str {
        match self {
            Metric::DeltaE => "delta_e",
            Metric::Steps => "steps",
            Metric::Quality => "quality",
        }
    }

    fn value(self, r: &TrialRecord) -> Option<f64> {
        match self {
            Metric::DeltaE => Some(r.delta_e),
            Metric::Steps => Some(r.steps_taken as f64),
            Metric::Quality => r.quality,
        }
    }

    pub fn for_problem(kind: ProblemKind) -> &'static [Metric] {
        match kind {
            ProblemKind::PortfolioVqe => &[Metric::DeltaE, Metric::Steps],
            ProblemKind::MvcQaoa => &[Metric::DeltaE, Metric::Steps, Metric::Quality],
        }
    }
}

/// Writes `summary.csv`, `trials.csv`, one `ccdf_<metric>_<optimizer>.csv`
/// per metric and optimizer, and `manifest.json`. Returns the paths written.
pub fn write_results(report: &BenchmarkReport, out_dir: impl AsRef<Path>) -> Result<Vec<PathBuf>> {
    let out_dir = out_dir.as_ref();
    fs::create_dir_all(out_dir)?;
    let mut written = Vec::new();

    let path = out_dir.join("summary.csv");
    write_summary(report, &path)?;
    written.push(path);

    let path = out_dir.join("trials.csv");
    write_trials(&report.records, &path)?;
    written.push(path);

    let sweep = &report.manifest.sweep;
    for &metric in Metric::for_problem(report.manifest.problem) {
        for &kind in &sweep.optimizers {
            let path = out_dir.join(format!("ccdf_{}_{}.csv", metric.name(), kind.name()));
            let mut w = csv::Writer::from_path(&path)?;
            w.write_record(CCDF_HEADER)?;
            for &eta in &sweep.eta_grid {
                let values: Vec<f64> = report
                    .records_for(kind, eta)
                    .filter_map(|r| metric.value(r))
                    .collect();
                if values.is_empty() {
                    continue;
                }
                for (threshold, p) in ccdf(&values)? {
                    w.write_record([format_float(eta), format_float(threshold), format_float(p)])?;
                }
            }
            w.flush()?;
            written.push(path);
        }
    }

    let path = out_dir.join("manifest.json");
    write_manifest(&report.manifest, &path)?;
    written.push(path);
    Ok(written)
}

fn write_summary(report: &BenchmarkReport, path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(SUMMARY_HEADER)?;
    for a in &report.aggregates {
        w.write_record([
            a.optimizer.name().to_string(),
            format_float(a.eta),
            format_float(a.delta_e.mean),
            format_float(a.delta_e.std),
            format_float(a.steps.mean),
            format_float(a.steps.std),
            format_opt(a.quality.map(|q| q.mean)),
            format_opt(a.quality.map(|q| q.std)),
        ])?;
    }
    w.flush()?;
    Ok(())
}

fn write_trials(records: &[TrialRecord], path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(TRIALS_HEADER)?;
    for r in records {
        w.write_record([
            r.optimizer.name().to_string(),
            format_float(r.eta),
            r.seed.to_string(),
            r.init_digest.clone(),
            r.steps_taken.to_string(),
            r.converged.to_string(),
            r.diverged.to_string(),
            format_float(r.final_energy),
            format_float(r.delta_e),
            format_opt(r.quality),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_manifest(manifest: &Manifest, path: impl AsRef<Path>) -> Result<()> {
    let mut body = serde_json::to_string_pretty(manifest)?;
    body.push('\n');
    fs::write(path, body)?;
    Ok(())
}

pub fn read_manifest(path: impl AsRef<Path>) -> Result<Manifest> {
    Ok(serde_json::from_str(&fs::read_to_string(path)?)?)
}

/// Parses `summary.csv`, checking the header.
pub fn read_summary(path: impl AsRef<Path>) -> Result<Vec<SummaryRow>> {
    let mut r = csv::Reader::from_path(path)?;
    let header: Vec<String> = r.headers()?.iter().map(str::to_owned).collect();
    if header != SUMMARY_HEADER {
        return Err(Error::InvalidArgument(format!(
            "unexpected summary header {header:?}"
        )));
    }
    let parse = |s: &str| -> Result<f64> {
        s.parse()
            .map_err(|_| Error::InvalidArgument(format!("bad number '{s}'")))
    };
    let parse_opt = |s: &str| -> Result<Option<f64>> {
        if s.is_empty() {
            Ok(None)
        } else {
            parse(s).map(Some)
        }
    };
    let mut rows = Vec::new();
    for rec in r.records() {
        let rec = rec?;
        if rec.len() != SUMMARY_HEADER.len() {
            return Err(Error::InvalidArgument(format!(
                "summary row with {} fields",
                rec.len()
            )));
        }
        rows.push(SummaryRow {
            optimizer: rec[0].parse()?,
            eta: parse(&rec[1])?,
            mean_delta_e: parse(&rec[2])?,
            std_delta_e: parse(&rec[3])?,
            mean_steps: parse(&rec[4])?,
            std_steps: parse(&rec[5])?,
            mean_quality: parse_opt(&rec[6])?,
            std_quality: parse_opt(&rec[7])?,
        });
    }
    Ok(rows)
}

impl SummaryRow {
    pub fn matches(&self, a: &crate::harness::Aggregate) -> bool {
        let q = |s: Option<Stat>| (s.map(|s| s.mean), s.map(|s| s.std));
        self.optimizer == a.optimizer
            && self.eta == a.eta
            && self.mean_delta_e == a.delta_e.mean
            && self.std_delta_e == a.delta_e.std
            && self.mean_steps == a.steps.mean
            && self.std_steps == a.steps.std
            && (self.mean_quality, self.std_quality) == q(a.quality)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::{run_sweep, ConvergenceSpec, SweepConfig};
    use crate::problems::{build_mvc, build_portfolio, Graph, DEFAULT_MVC4_EDGES};
    use proptest::prelude::*;

    #[test]
    fn float_format() {
        assert_eq!(format_float(0.1), "1.0000000000000001e-1");
        assert_eq!(format_float(-2.5), "-2.5000000000000000e0");
        assert_eq!(format_float(1234567.0), "1.2345670000000000e6");
        assert!(!format_float(1e6).contains(','));
    }

    proptest! {
        #[test]
        fn float_format_roundtrips(x in proptest::num::f64::NORMAL | proptest::num::f64::SUBNORMAL | proptest::num::f64::ZERO) {
            let s = format_float(x);
            prop_assert_eq!(s.parse::<f64>().unwrap().to_bits(), x.to_bits());
            let digits = s.split('e').next().unwrap().chars().filter(|c| c.is_ascii_digit()).count();
            prop_assert_eq!(digits, 17);
        }
    }

    #[test]
    fn single_trial_summary_has_two_lines() {
        let p = build_portfolio(3, 1, 1).unwrap();
        let mut sweep = SweepConfig::new(5, ConvergenceSpec::PORTFOLIO);
        sweep.n_trials = 1;
        sweep.eta_grid = vec![0.1];
        sweep.optimizers = vec![OptimizerKind::MomentumQng];
        let rep = run_sweep(&p, &sweep).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let files = write_results(&rep, dir.path()).unwrap();
        let summary = fs::read_to_string(dir.path().join("summary.csv")).unwrap();
        assert_eq!(summary.lines().count(), 2);
        assert!(summary.lines().nth(1).unwrap().ends_with(",,"));
        // summary, trials, 2 ccdf metrics × 1 optimizer, manifest
        assert_eq!(files.len(), 5);
        assert!(dir.path().join("ccdf_delta_e_momentum-qng.csv").exists());
        assert!(dir.path().join("ccdf_steps_momentum-qng.csv").exists());
    }

    #[test]
    fn summary_roundtrip_and_quality_ccdf() {
        let g = Graph::from_edges(DEFAULT_MVC4_EDGES.to_vec()).unwrap();
        let p = build_mvc(&g, 2, 2.0).unwrap();
        let mut sweep = SweepConfig::new(10, ConvergenceSpec::new(2, 3).unwrap());
        sweep.n_trials = 3;
        sweep.eta_grid = vec![0.05, 0.1];
        let rep = run_sweep(&p, &sweep).unwrap();
        let dir = tempfile::tempdir().unwrap();
        write_results(&rep, dir.path()).unwrap();
        let rows = read_summary(dir.path().join("summary.csv")).unwrap();
        assert_eq!(rows.len(), rep.aggregates.len());
        for (row, agg) in rows.iter().zip(&rep.aggregates) {
            assert!(row.matches(agg), "{row:?} vs {agg:?}");
        }
        assert!(dir.path().join("ccdf_quality_adam.csv").exists());
        let manifest = read_manifest(dir.path().join("manifest.json")).unwrap();
        assert_eq!(manifest, rep.manifest);
    }

    #[test]
    fn unwritable_directory_is_io_error() {
        let p = build_portfolio(3, 1, 1).unwrap();
        let mut sweep = SweepConfig::new(1, ConvergenceSpec::PORTFOLIO);
        sweep.n_trials = 1;
        sweep.eta_grid = vec![0.1];
        let rep = run_sweep(&p, &sweep).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let blocker = dir.path().join("file");
        fs::write(&blocker, "x").unwrap();
        let err = write_results(&rep, blocker.join("sub")).unwrap_err();
        assert!(matches!(err, Error::Io(_)));
    }
}
