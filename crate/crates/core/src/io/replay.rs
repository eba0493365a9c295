//! Recomputes a record's metrics from its raw samples and paint, and reports
//! where they disagree with what was stored.

use crate::grid::{code_to_cell, CellCode};
use crate::metrics::{
    fill_metrics_with, relative_movement_distance, FillMetrics, MetricsError, Sample, TrajectoryMetrics,
};
use crate::sim::run_session;

use super::record::{RecordError, SessionRecord};

const TIME_EPS: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub struct TargetReplay {
    pub index: usize,
    pub code: CellCode,
    /// `None` when the target never got a paint layer.
    pub fill: Option<Result<FillMetrics, MetricsError>>,
    /// From command to arrival, or to the end of the samples if the target
    /// was never reached.
    pub trajectory: Result<TrajectoryMetrics, MetricsError>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReplayReport {
    pub targets: Vec<TargetReplay>,
    /// Over every sample of the session.
    pub session_trajectory: Result<TrajectoryMetrics, MetricsError>,
    pub mismatches: Vec<String>,
}

impl ReplayReport {
    pub fn is_consistent(&self) -> bool {
        self.mismatches.is_empty()
    }

    /// Every degenerate-trajectory error surfaced by the replay.
    pub fn degenerate(&self) -> Vec<&MetricsError> {
        std::iter::once(&self.session_trajectory)
            .chain(self.targets.iter().map(|t| &t.trajectory))
            .filter_map(|r| r.as_ref().err())
            .filter(|e| matches!(e, MetricsError::DegenerateTrajectory(_)))
            .collect()
    }
}

fn corrupt(message: String) -> RecordError {
    RecordError::CorruptRecord { line: 0, message }
}

fn check_structure(record: &SessionRecord) -> Result<(), RecordError> {
    let (w, h) = record.config.board_size();
    if record.paint.len() > record.targets.len() {
        return Err(corrupt(format!("{} paint layers for {} targets", record.paint.len(), record.targets.len())));
    }
    for (i, layer) in record.paint.iter().enumerate() {
        if (layer.width, layer.height) != (w, h) {
            return Err(corrupt(format!("paint layer {i} is {}x{}, board is {w}x{h}", layer.width, layer.height)));
        }
        layer.validate().map_err(|m| corrupt(format!("paint layer {i}: {m}")))?;
    }
    for pair in record.samples.windows(2) {
        if !(pair[1].t > pair[0].t) {
            return Err(corrupt(format!("sample times not increasing at t={}", pair[1].t)));
        }
    }
    for (i, t) in record.targets.iter().enumerate() {
        t.code.check(&record.config.grid).map_err(|e| corrupt(format!("target {i}: {e}")))?;
        if t.arrived_at.is_some_and(|a| a + TIME_EPS < t.started_at) {
            return Err(corrupt(format!("target {i} arrives before it starts")));
        }
    }
    Ok(())
}

fn leg(samples: &[Sample], from: f64, to: Option<f64>) -> Vec<Sample> {
    samples
        .iter()
        .filter(|s| s.t + TIME_EPS >= from && to.is_none_or(|to| s.t <= to + TIME_EPS))
        .copied()
        .collect()
}

/// Recomputes every metric. Structural damage (bad paint runs, unordered
/// samples, codes off the grid) is a [`RecordError::CorruptRecord`]; value
/// disagreements are listed in the report.
pub fn replay(record: &SessionRecord) -> Result<ReplayReport, RecordError> {
    check_structure(record)?;
    let mut targets = Vec::with_capacity(record.targets.len());
    let mut mismatches = Vec::new();
    for (i, t) in record.targets.iter().enumerate() {
        let cell = code_to_cell(t.code, &record.config.grid).map_err(|e| corrupt(e.to_string()))?;
        let fill = record.paint.get(i).map(|layer| fill_metrics_with(&layer.to_mask(), &cell, &record.config.thresholds));
        match (&fill, t.fill) {
            (Some(Ok(got)), Some(stored)) if *got != stored => {
                mismatches.push(format!("target {i} ({}): fill {got:?}, stored {stored:?}", t.code))
            }
            (Some(Err(e)), Some(_)) => mismatches.push(format!("target {i} ({}): fill {e}", t.code)),
            (None, Some(_)) => mismatches.push(format!("target {i} ({}): fill stored without paint", t.code)),
            _ => {}
        }
        let trajectory = relative_movement_distance(&leg(&record.samples, t.started_at, t.arrived_at));
        if t.arrived_at.is_some() {
            match (&trajectory, t.trajectory) {
                (Ok(got), Some(stored)) if *got != stored => {
                    mismatches.push(format!("target {i} ({}): trajectory {got:?}, stored {stored:?}", t.code))
                }
                (Ok(_), None) => {
                    mismatches.push(format!("target {i} ({}): trajectory missing from record", t.code))
                }
                (Err(e), Some(_)) => mismatches.push(format!("target {i} ({}): trajectory {e}", t.code)),
                _ => {}
            }
        }
        targets.push(TargetReplay { index: i, code: t.code, fill, trajectory });
    }
    Ok(ReplayReport {
        targets,
        session_trajectory: relative_movement_distance(&record.samples),
        mismatches,
    })
}

/// Re-runs the session from the stored config and checks the result is the
/// same record.
pub fn reproduces(record: &SessionRecord) -> Result<bool, RecordError> {
    let rerun = run_session(&record.config)
        .map_err(|e| RecordError::SchemaMismatch(format!("stored config: {e}")))?;
    Ok(rerun == *record)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::Point2;
    use crate::sim::SessionConfig;

    fn record() -> SessionRecord {
        run_session(&SessionConfig::default().with_seed(9)).unwrap()
    }

    #[test]
    fn fresh_record_is_consistent() {
        let rec = record();
        let report = replay(&rec).unwrap();
        assert!(report.is_consistent(), "{:?}", report.mismatches);
        assert!(reproduces(&rec).unwrap());
    }

    #[test]
    fn tampered_sample_is_reported() {
        let mut rec = record();
        rec.samples[3].point = Point2::new(rec.samples[3].point.x + 50.0, rec.samples[3].point.y);
        let report = replay(&rec).unwrap();
        assert!(!report.is_consistent());
        assert!(!reproduces(&rec).unwrap());
    }

    #[test]
    fn tampered_paint_is_reported() {
        let mut rec = record();
        rec.paint[0].rows.clear();
        assert!(!replay(&rec).unwrap().is_consistent());
        rec.paint[0].rows.push(crate::io::record::RleRow { y: 0, runs: vec![[0, 100_000]] });
        assert!(matches!(replay(&rec), Err(RecordError::CorruptRecord { .. })));
    }

    #[test]
    fn empty_session_surfaces_degenerate_trajectory() {
        let mut rec = record();
        rec.samples.clear();
        rec.cues.clear();
        rec.paint.clear();
        for t in &mut rec.targets {
            t.arrived_at = None;
            t.filled_at = None;
            t.fill = None;
            t.trajectory = None;
        }
        let report = replay(&rec).unwrap();
        assert!(report.is_consistent());
        assert_eq!(report.degenerate().len(), 1 + rec.targets.len());
    }
}
