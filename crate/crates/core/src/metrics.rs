//! Objective evaluation of a guidance session: relative movement distance,
//! fill completion and overflow degrees, occupancy heatmaps and completion
//! timing statistics.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::Point2;
use crate::grid::Cell;

pub const HEATMAP_COLS: usize = 25;
pub const HEATMAP_ROWS: usize = 15;

pub const EXCELLENT_MAX_R: f64 = 3.5;
pub const GOOD_MAX_R: f64 = 4.5;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MetricsError {
    #[error("trajectory is degenerate: {0}")]
    DegenerateTrajectory(String),
    #[error("target cell covers no pixels")]
    EmptyTarget,
    #[error("no durations given")]
    EmptyInput,
}

/// A recorded tip position.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Sample {
    pub t: f64,
    pub point: Point2,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TrajectoryClass {
    Excellent,
    Good,
    Bad,
}

impl TrajectoryClass {
    /// `R <= 3.5` excellent, `R <= 4.5` good, otherwise bad.
    pub fn classify(r: f64) -> Self {
        if r <= EXCELLENT_MAX_R {
            TrajectoryClass::Excellent
        } else if r <= GOOD_MAX_R {
            TrajectoryClass::Good
        } else {
            TrajectoryClass::Bad
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            TrajectoryClass::Excellent => "excellent",
            TrajectoryClass::Good => "good",
            TrajectoryClass::Bad => "bad",
        }
    }
}

impl fmt::Display for TrajectoryClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for TrajectoryClass {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "excellent" => Ok(Self::Excellent),
            "good" => Ok(Self::Good),
            "bad" => Ok(Self::Bad),
            other => Err(format!("unknown class `{other}`")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryMetrics {
    /// Traveled path length.
    pub path_length: f64,
    /// Straight start → end distance.
    pub straight_length: f64,
    /// `path_length / straight_length`; 1 is a perfectly straight path.
    pub r: f64,
    pub class: TrajectoryClass,
}

/// Path efficiency of a sampled trajectory, `R = L_M / L_I`.
pub fn relative_movement_distance(samples: &[Sample]) -> Result<TrajectoryMetrics, MetricsError> {
    if samples.len() < 2 {
        return Err(MetricsError::DegenerateTrajectory(format!("{} samples", samples.len())));
    }
    let path_length: f64 = samples.windows(2).map(|w| w[0].point.distance(w[1].point)).sum();
    let straight_length = samples[0].point.distance(samples[samples.len() - 1].point);
    if !(straight_length > 0.0) {
        return Err(MetricsError::DegenerateTrajectory("start and end coincide".into()));
    }
    let r = path_length / straight_length;
    Ok(TrajectoryMetrics { path_length, straight_length, r, class: TrajectoryClass::classify(r) })
}

/// Binary paint raster over the canonical board, one cell per pixel.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PaintMask {
    width: usize,
    height: usize,
    bits: Vec<bool>,
    painted: u64,
}

impl PaintMask {
    pub fn new(width: usize, height: usize) -> Self {
        Self { width, height, bits: vec![false; width * height], painted: 0 }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn get(&self, x: usize, y: usize) -> bool {
        self.bits[y * self.width + x]
    }

    /// Paints one pixel; returns whether it was newly set.
    pub fn set(&mut self, x: usize, y: usize) -> bool {
        let idx = y * self.width + x;
        if self.bits[idx] {
            false
        } else {
            self.bits[idx] = true;
            self.painted += 1;
            true
        }
    }

    pub fn painted_count(&self) -> u64 {
        self.painted
    }

    pub fn row(&self, y: usize) -> &[bool] {
        &self.bits[y * self.width..(y + 1) * self.width]
    }

    /// Union with another mask of the same size.
    pub fn merge(&mut self, other: &PaintMask) {
        assert_eq!((self.width, self.height), (other.width, other.height), "mask size mismatch");
        for (i, &b) in other.bits.iter().enumerate() {
            if b && !self.bits[i] {
                self.bits[i] = true;
                self.painted += 1;
            }
        }
    }
}

/// Pixel index span `[lo, hi)` whose centers `k + 0.5` fall in `[a, b)`.
pub fn pixel_span(a: f64, b: f64, limit: usize) -> (usize, usize) {
    let lo = (a - 0.5).ceil().max(0.0) as usize;
    let hi = ((b - 0.5).ceil().max(0.0) as usize).min(limit);
    (lo.min(hi), hi)
}

/// Pixels of `mask` whose centers lie in `cell`.
pub fn cell_pixels(mask: &PaintMask, cell: &Cell) -> ((usize, usize), (usize, usize)) {
    (
        pixel_span(cell.rect.x0, cell.rect.x1, mask.width()),
        pixel_span(cell.rect.y0, cell.rect.y1, mask.height()),
    )
}

/// Completion criterion thresholds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FillThresholds {
    /// Completion degree must exceed this.
    pub completion: f64,
    /// Overflow degree must stay below this.
    pub overflow: f64,
}

impl Default for FillThresholds {
    fn default() -> Self {
        Self { completion: 0.8, overflow: 3.75 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FillMetrics {
    /// `S_T`, pixels in the target cell.
    pub target_area: u64,
    /// `S_C`, all painted pixels.
    pub painted_area: u64,
    /// `S_R`, painted pixels inside the target.
    pub painted_in_target: u64,
    /// `O_C = S_R / S_T`
    pub completion: f64,
    /// `O_D = (S_C - S_T) / S_T`, negative when underpainted.
    pub overflow: f64,
    pub completed: bool,
}

impl FillMetrics {
    pub fn from_counts(
        target_area: u64,
        painted_area: u64,
        painted_in_target: u64,
        thresholds: &FillThresholds,
    ) -> Result<Self, MetricsError> {
        if target_area == 0 {
            return Err(MetricsError::EmptyTarget);
        }
        let st = target_area as f64;
        let completion = painted_in_target as f64 / st;
        let overflow = (painted_area as f64 - st) / st;
        Ok(Self {
            target_area,
            painted_area,
            painted_in_target,
            completion,
            overflow,
            completed: completion > thresholds.completion && overflow < thresholds.overflow,
        })
    }
}

pub fn fill_metrics(mask: &PaintMask, target: &Cell) -> Result<FillMetrics, MetricsError> {
    fill_metrics_with(mask, target, &FillThresholds::default())
}

pub fn fill_metrics_with(
    mask: &PaintMask,
    target: &Cell,
    thresholds: &FillThresholds,
) -> Result<FillMetrics, MetricsError> {
    let ((x0, x1), (y0, y1)) = cell_pixels(mask, target);
    let target_area = ((x1 - x0) * (y1 - y0)) as u64;
    let painted_in_target =
        (y0..y1).map(|y| mask.row(y)[x0..x1].iter().filter(|b| **b).count() as u64).sum();
    FillMetrics::from_counts(target_area, mask.painted_count(), painted_in_target, thresholds)
}

/// 25 × 15 occupancy histogram of tip samples.
#[derive(Debug, Clone, PartialEq)]
pub struct Heatmap {
    pub counts: Vec<u64>,
    pub frequencies: Vec<f64>,
    pub total: u64,
}

impl Heatmap {
    pub const COLS: usize = HEATMAP_COLS;
    pub const ROWS: usize = HEATMAP_ROWS;

    pub fn count(&self, row: usize, col: usize) -> u64 {
        self.counts[row * Self::COLS + col]
    }

    pub fn frequency(&self, row: usize, col: usize) -> f64 {
        self.frequencies[row * Self::COLS + col]
    }

    /// One CSV row per block row, frequencies comma-separated.
    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        for r in 0..Self::ROWS {
            let row: Vec<String> = (0..Self::COLS).map(|c| format!("{}", self.frequency(r, c))).collect();
            out.push_str(&row.join(","));
            out.push('\n');
        }
        out
    }

    /// Plain-text PGM; darker blocks were visited more often.
    pub fn to_pgm(&self) -> String {
        let max = self.frequencies.iter().cloned().fold(0.0f64, f64::max);
        let mut out = format!("P2\n{} {}\n255\n", Self::COLS, Self::ROWS);
        for r in 0..Self::ROWS {
            let row: Vec<String> = (0..Self::COLS)
                .map(|c| {
                    let level = if max > 0.0 { self.frequency(r, c) / max } else { 0.0 };
                    format!("{}", 255 - (255.0 * level).round() as u8)
                })
                .collect();
            out.push_str(&row.join(" "));
            out.push('\n');
        }
        out
    }
}

/// Block index for `v` in `[0, extent]` split into `n` blocks; a value on a
/// block boundary goes to the lower block.
fn heat_bin(v: f64, extent: f64, n: usize) -> usize {
    let scaled = v * n as f64 / extent;
    let idx = scaled.ceil() as i64 - 1;
    idx.clamp(0, n as i64 - 1) as usize
}

pub fn heatmap(samples: &[Sample], board_w: f64, board_h: f64) -> Heatmap {
    let mut counts = vec![0u64; HEATMAP_COLS * HEATMAP_ROWS];
    for s in samples {
        let c = heat_bin(s.point.x, board_w, HEATMAP_COLS);
        let r = heat_bin(s.point.y, board_h, HEATMAP_ROWS);
        counts[r * HEATMAP_COLS + c] += 1;
    }
    let total = samples.len() as u64;
    let frequencies = counts
        .iter()
        .map(|&n| if total > 0 { n as f64 / total as f64 } else { 0.0 })
        .collect();
    Heatmap { counts, frequencies, total }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TimingStats {
    pub max: f64,
    pub min: f64,
    pub mean: f64,
    /// Population standard deviation.
    pub std: f64,
}

pub fn timing_stats(durations: &[f64]) -> Result<TimingStats, MetricsError> {
    if durations.is_empty() {
        return Err(MetricsError::EmptyInput);
    }
    let n = durations.len() as f64;
    let max = durations.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let min = durations.iter().cloned().fold(f64::INFINITY, f64::min);
    let mean = durations.iter().sum::<f64>() / n;
    let var = durations.iter().map(|d| (d - mean).powi(2)).sum::<f64>() / n;
    // Keep min <= mean <= max despite rounding in the sum.
    Ok(TimingStats { max, min, mean: mean.clamp(min, max), std: var.sqrt() })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::GridSpec;

    fn s(t: f64, x: f64, y: f64) -> Sample {
        Sample { t, point: Point2::new(x, y) }
    }

    #[test]
    fn straight_segment_is_one() {
        let m = relative_movement_distance(&[s(0.0, 0.0, 0.0), s(0.3, 3.0, 4.0)]).unwrap();
        assert_eq!(m.r, 1.0);
        assert_eq!(m.class, TrajectoryClass::Excellent);
    }

    #[test]
    fn l_path_three_four_five() {
        let m = relative_movement_distance(&[s(0.0, 0.0, 0.0), s(0.3, 3.0, 0.0), s(0.6, 3.0, 4.0)]).unwrap();
        assert_eq!((m.path_length, m.straight_length, m.r), (7.0, 5.0, 1.4));
    }

    #[test]
    fn reported_r_values_classify() {
        assert_eq!(TrajectoryClass::classify(4.21), TrajectoryClass::Good);
        assert_eq!(TrajectoryClass::classify(6.70), TrajectoryClass::Bad);
        assert_eq!(TrajectoryClass::classify(2.93), TrajectoryClass::Excellent);
        assert_eq!(TrajectoryClass::classify(3.5), TrajectoryClass::Excellent);
        assert_eq!(TrajectoryClass::classify(4.5), TrajectoryClass::Good);
    }

    #[test]
    fn degenerate_trajectories() {
        assert!(matches!(relative_movement_distance(&[]), Err(MetricsError::DegenerateTrajectory(_))));
        assert!(matches!(
            relative_movement_distance(&[s(0.0, 1.0, 1.0), s(1.0, 5.0, 5.0), s(2.0, 1.0, 1.0)]),
            Err(MetricsError::DegenerateTrajectory(_))
        ));
    }

    fn small_grid() -> GridSpec {
        GridSpec { rows: 8, cols: 8, board_w: 80.0, board_h: 80.0 }
    }

    #[test]
    fn unpainted_target() {
        let spec = small_grid();
        let mask = PaintMask::new(80, 80);
        let m = fill_metrics(&mask, &spec.cell(2, 2).unwrap()).unwrap();
        assert_eq!((m.target_area, m.completion, m.overflow, m.completed), (100, 0.0, -1.0, false));
    }

    #[test]
    fn fully_painted_target_only() {
        let spec = small_grid();
        let cell = spec.cell(3, 4).unwrap();
        let mut mask = PaintMask::new(80, 80);
        for y in 30..40 {
            for x in 40..50 {
                mask.set(x, y);
            }
        }
        let m = fill_metrics(&mask, &cell).unwrap();
        assert_eq!((m.completion, m.overflow, m.completed), (1.0, 0.0, true));
    }

    #[test]
    fn reported_fill_means() {
        let m = FillMetrics::from_counts(100, 447, 89, &FillThresholds::default()).unwrap();
        assert_eq!(m.completion, 0.89);
        assert_eq!(m.overflow, 3.47);
        assert!(m.completed);
        assert_eq!(FillMetrics::from_counts(0, 5, 0, &FillThresholds::default()), Err(MetricsError::EmptyTarget));
    }

    #[test]
    fn completion_thresholds_are_strict() {
        let t = FillThresholds::default();
        assert!(!FillMetrics::from_counts(100, 100, 80, &t).unwrap().completed);
        assert!(!FillMetrics::from_counts(100, 475, 100, &t).unwrap().completed);
        assert!(FillMetrics::from_counts(100, 474, 81, &t).unwrap().completed);
    }

    #[test]
    fn heatmap_single_block_and_empty() {
        let samples: Vec<_> = (0..7).map(|i| s(i as f64, 5.0, 5.0)).collect();
        let h = heatmap(&samples, 500.0, 300.0);
        assert_eq!(h.frequency(0, 0), 1.0);
        assert_eq!(h.total, 7);
        let empty = heatmap(&[], 500.0, 300.0);
        assert!(empty.frequencies.iter().all(|f| *f == 0.0));
    }

    #[test]
    fn heatmap_boundary_goes_low() {
        // block width 20 px on a 500 px board
        let h = heatmap(&[s(0.0, 20.0, 20.0), s(0.3, 0.0, 0.0), s(0.6, 500.0, 300.0)], 500.0, 300.0);
        assert_eq!(h.count(0, 0), 2);
        assert_eq!(h.count(14, 24), 1);
    }

    #[test]
    fn heatmap_exports() {
        let h = heatmap(&[s(0.0, 30.0, 30.0)], 500.0, 300.0);
        let csv = h.to_csv();
        assert_eq!(csv.lines().count(), 15);
        assert_eq!(csv.lines().next().unwrap().split(',').count(), 25);
        let pgm = h.to_pgm();
        let mut lines = pgm.lines();
        assert_eq!(lines.next(), Some("P2"));
        assert_eq!(lines.next(), Some("25 15"));
        assert_eq!(lines.next(), Some("255"));
        assert!(pgm.lines().nth(4).unwrap().starts_with("255 0 255"));
    }

    #[test]
    fn timing_examples() {
        let t = timing_stats(&[110.0, 256.0]).unwrap();
        assert_eq!((t.max, t.min, t.mean), (256.0, 110.0, 183.0));
        assert_eq!(t.std, 73.0);
        assert_eq!(timing_stats(&[42.0]).unwrap().std, 0.0);
        assert_eq!(timing_stats(&[]), Err(MetricsError::EmptyInput));
    }
}
