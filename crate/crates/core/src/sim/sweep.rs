//! Batch runs over configuration variants.

use rayon::prelude::*;
use serde::Serialize;

use crate::io::record::{SessionRecord, SessionStatus};
use crate::metrics::{timing_stats, TimingStats, TrajectoryClass};

use super::{derive_seed, run_session, ConfigError, SessionConfig};

/// One swept variant: `runs` sessions seeded from `config.seed`.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepEntry {
    pub label: String,
    pub config: SessionConfig,
    pub runs: usize,
}

impl SweepEntry {
    pub fn new(label: impl Into<String>, config: SessionConfig, runs: usize) -> Self {
        Self { label: label.into(), config, runs }
    }

    /// Configs of every run, seeds derived from the entry's base seed.
    pub fn session_configs(&self) -> Vec<SessionConfig> {
        (0..self.runs as u64).map(|i| self.config.with_seed(derive_seed(self.config.seed, i))).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRow {
    pub label: String,
    pub runs: usize,
    pub completed: usize,
    pub timeouts: usize,
    /// Durations of completed sessions.
    pub timing: Option<TimingStats>,
    pub mean_navigation_time: Option<f64>,
    pub mean_completion: Option<f64>,
    pub mean_overflow: Option<f64>,
    pub mean_r: Option<f64>,
    /// Share of navigation legs classed excellent or good.
    pub good_share: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Comparison {
    pub mean_difference: f64,
    pub mean_ratio: f64,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize)]
pub struct SweepReport {
    pub rows: Vec<SweepRow>,
}

fn mean(values: &[f64]) -> Option<f64> {
    if values.is_empty() {
        None
    } else {
        Some(values.iter().sum::<f64>() / values.len() as f64)
    }
}

impl SweepRow {
    pub fn from_records(label: &str, records: &[SessionRecord]) -> Self {
        let completed: Vec<&SessionRecord> =
            records.iter().filter(|r| r.status == SessionStatus::Completed).collect();
        let durations: Vec<f64> = completed.iter().map(|r| r.duration).collect();
        let fills: Vec<_> = records.iter().flat_map(|r| r.targets.iter().filter_map(|t| t.fill)).collect();
        let legs: Vec<_> = records.iter().flat_map(|r| r.targets.iter().filter_map(|t| t.trajectory)).collect();
        let nav: Vec<f64> = records.iter().filter_map(|r| r.navigation_time()).collect();
        let good = legs.iter().filter(|m| m.class != TrajectoryClass::Bad).count();
        Self {
            label: label.to_string(),
            runs: records.len(),
            completed: completed.len(),
            timeouts: records.iter().filter(|r| r.status == SessionStatus::Timeout).count(),
            timing: timing_stats(&durations).ok(),
            mean_navigation_time: mean(&nav),
            mean_completion: mean(&fills.iter().map(|f| f.completion).collect::<Vec<_>>()),
            mean_overflow: mean(&fills.iter().map(|f| f.overflow).collect::<Vec<_>>()),
            mean_r: mean(&legs.iter().map(|m| m.r).collect::<Vec<_>>()),
            good_share: if legs.is_empty() { None } else { Some(good as f64 / legs.len() as f64) },
        }
    }
}

impl SweepReport {
    pub fn row(&self, label: &str) -> Option<&SweepRow> {
        self.rows.iter().find(|r| r.label == label)
    }

    /// Mean completion time of `b` against `a`.
    pub fn compare(&self, a: &str, b: &str) -> Option<Comparison> {
        let ta = self.row(a)?.timing?;
        let tb = self.row(b)?.timing?;
        Some(Comparison { mean_difference: tb.mean - ta.mean, mean_ratio: tb.mean / ta.mean })
    }

    pub fn to_csv(&self) -> String {
        let opt = |v: Option<f64>| v.map(|x| format!("{x:.4}")).unwrap_or_default();
        let mut out = String::from(
            "label,runs,completed,timeouts,max,min,mean,std,mean_navigation,mean_completion,mean_overflow,mean_r,good_share\n",
        );
        for r in &self.rows {
            out.push_str(&format!(
                "{},{},{},{},{},{},{},{},{},{},{},{},{}\n",
                csv_field(&r.label),
                r.runs,
                r.completed,
                r.timeouts,
                opt(r.timing.map(|t| t.max)),
                opt(r.timing.map(|t| t.min)),
                opt(r.timing.map(|t| t.mean)),
                opt(r.timing.map(|t| t.std)),
                opt(r.mean_navigation_time),
                opt(r.mean_completion),
                opt(r.mean_overflow),
                opt(r.mean_r),
                opt(r.good_share),
            ));
        }
        out
    }
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

/// Runs every session of `configs`; sessions run in parallel and share only
/// their read-only configs.
pub fn run_batch(configs: &[SessionConfig]) -> Result<Vec<SessionRecord>, ConfigError> {
    configs.par_iter().map(run_session).collect()
}

pub fn sweep(entries: &[SweepEntry]) -> Result<SweepReport, ConfigError> {
    let mut rows = Vec::with_capacity(entries.len());
    for entry in entries {
        let records = run_batch(&entry.session_configs())?;
        rows.push(SweepRow::from_records(&entry.label, &records));
    }
    Ok(SweepReport { rows })
}
