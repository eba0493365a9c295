//! Session records and their line-delimited JSON file form.
//!
//! A record file is a `hello` frame carrying the full config, then one
//! `command` per target, the trajectory samples as `tip` frames, the cues in
//! order (`cue`, with arrivals as `arrived`), each paint layer as a header
//! plus one `paint` frame per non-empty row, one `summary` per target and a
//! final session `summary`.

use std::fs;
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::Point2;
use crate::grid::CellCode;
use crate::guidance::{Cue, CueKind};
use crate::metrics::{
    heatmap, FillMetrics, Heatmap, PaintMask, Sample, TrajectoryClass, TrajectoryMetrics,
};
use crate::sim::SessionConfig;

use super::frame::{
    ArrivedFrame, BoardInfo, CommandFrame, CueFrame, Frame, GridInfo, Hello, PaintFrame, SummaryFrame,
    TipFrame, PROTO,
};

#[derive(Debug, Error)]
pub enum RecordError {
    #[error("i/o failure: {0}")]
    IoFailure(#[from] std::io::Error),
    #[error("schema mismatch: {0}")]
    SchemaMismatch(String),
    #[error("corrupt record at line {line}: {message}")]
    CorruptRecord { line: usize, message: String },
}

fn corrupt(line: usize, message: impl Into<String>) -> RecordError {
    RecordError::CorruptRecord { line, message: message.into() }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SessionStatus {
    Completed,
    Timeout,
    /// Loaded from a file that ended before the final summary.
    Incomplete,
}

impl SessionStatus {
    pub fn as_str(self) -> &'static str {
        match self {
            SessionStatus::Completed => "completed",
            SessionStatus::Timeout => "timeout",
            SessionStatus::Incomplete => "incomplete",
        }
    }
}

/// What happened to one commanded target.
#[derive(Debug, Clone, PartialEq)]
pub struct TargetOutcome {
    pub code: CellCode,
    pub started_at: f64,
    pub arrived_at: Option<f64>,
    pub filled_at: Option<f64>,
    pub fill: Option<FillMetrics>,
    /// Navigation leg from command to arrival.
    pub trajectory: Option<TrajectoryMetrics>,
}

impl TargetOutcome {
    pub fn started(code: CellCode, t: f64) -> Self {
        Self { code, started_at: t, arrived_at: None, filled_at: None, fill: None, trajectory: None }
    }

    pub fn navigation_time(&self) -> Option<f64> {
        self.arrived_at.map(|a| a - self.started_at)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RleRow {
    pub y: usize,
    /// `[start_x, length]`, sorted and non-touching.
    pub runs: Vec<[usize; 2]>,
}

/// Run-length encoded paint layer; only non-empty rows are kept.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RleMask {
    pub width: usize,
    pub height: usize,
    pub rows: Vec<RleRow>,
}

impl RleMask {
    pub fn encode(mask: &PaintMask) -> Self {
        let mut rows = Vec::new();
        for y in 0..mask.height() {
            let row = mask.row(y);
            let mut runs = Vec::new();
            let mut x = 0;
            while x < row.len() {
                if row[x] {
                    let start = x;
                    while x < row.len() && row[x] {
                        x += 1;
                    }
                    runs.push([start, x - start]);
                } else {
                    x += 1;
                }
            }
            if !runs.is_empty() {
                rows.push(RleRow { y, runs });
            }
        }
        Self { width: mask.width(), height: mask.height(), rows }
    }

    /// Checks that every run is in bounds, rows ascend and runs neither
    /// overlap nor touch.
    pub fn validate(&self) -> Result<(), String> {
        let mut prev_y = None;
        for row in &self.rows {
            if row.y >= self.height {
                return Err(format!("row {} outside height {}", row.y, self.height));
            }
            if prev_y.is_some_and(|p| row.y <= p) {
                return Err(format!("row {} out of order", row.y));
            }
            prev_y = Some(row.y);
            let mut end = None;
            for &[x, len] in &row.runs {
                if len == 0 {
                    return Err(format!("empty run in row {}", row.y));
                }
                if x.checked_add(len).is_none_or(|e| e > self.width) {
                    return Err(format!("run {x}+{len} outside width {} in row {}", self.width, row.y));
                }
                if end.is_some_and(|e| x <= e) {
                    return Err(format!("overlapping runs in row {}", row.y));
                }
                end = Some(x + len);
            }
        }
        Ok(())
    }

    pub fn painted_count(&self) -> u64 {
        self.rows.iter().flat_map(|r| r.runs.iter()).map(|r| r[1] as u64).sum()
    }

    /// Decodes; out-of-bounds runs are clipped.
    pub fn to_mask(&self) -> PaintMask {
        let mut mask = PaintMask::new(self.width, self.height);
        for row in self.rows.iter().filter(|r| r.y < self.height) {
            for &[x, len] in &row.runs {
                for xx in x.min(self.width)..x.saturating_add(len).min(self.width) {
                    mask.set(xx, row.y);
                }
            }
        }
        mask
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SessionRecord {
    pub config: SessionConfig,
    pub samples: Vec<Sample>,
    pub cues: Vec<Cue>,
    /// One paint layer per target that reached the painting stage.
    pub paint: Vec<RleMask>,
    pub targets: Vec<TargetOutcome>,
    pub status: SessionStatus,
    pub duration: f64,
}

/// Session-level means over targets.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SessionSummary {
    pub status: SessionStatus,
    pub duration: f64,
    pub completion: Option<f64>,
    pub overflow: Option<f64>,
    pub r: Option<f64>,
    pub class: Option<TrajectoryClass>,
}

fn mean(values: impl Iterator<Item = f64>) -> Option<f64> {
    let (n, sum) = values.fold((0usize, 0.0), |(n, s), v| (n + 1, s + v));
    (n > 0).then(|| sum / n as f64)
}

impl SessionRecord {
    /// Total time spent navigating, or `None` if some target was never reached.
    pub fn navigation_time(&self) -> Option<f64> {
        self.targets.iter().map(TargetOutcome::navigation_time).sum()
    }

    pub fn summary(&self) -> SessionSummary {
        let fills = || self.targets.iter().filter_map(|t| t.fill);
        let r = mean(self.targets.iter().filter_map(|t| t.trajectory).map(|m| m.r));
        SessionSummary {
            status: self.status,
            duration: self.duration,
            completion: mean(fills().map(|f| f.completion)),
            overflow: mean(fills().map(|f| f.overflow)),
            r,
            class: r.map(TrajectoryClass::classify),
        }
    }

    pub fn heatmap(&self) -> Heatmap {
        heatmap(&self.samples, self.config.grid.board_w, self.config.grid.board_h)
    }

    pub fn to_frames(&self) -> Vec<Frame> {
        let mut frames = vec![Frame::Hello(Hello {
            proto: PROTO.to_string(),
            role: Some("record".into()),
            grid: Some(GridInfo { rows: self.config.grid.rows, cols: self.config.grid.cols }),
            board: Some(BoardInfo { w: self.config.grid.board_w, h: self.config.grid.board_h }),
            period: Some(self.config.prompt.period),
            config: Some(self.config.clone()),
        })];
        for t in &self.targets {
            frames.push(Frame::Command(CommandFrame { code: t.code.to_string(), t: Some(t.started_at) }));
        }
        for s in &self.samples {
            frames.push(Frame::Tip(TipFrame { t: s.t, x: s.point.x, y: s.point.y }));
        }
        for c in &self.cues {
            frames.push(match c.kind {
                CueKind::Arrived => Frame::Arrived(ArrivedFrame { t: c.t, code: None }),
                kind => Frame::Cue(CueFrame { kind, t: c.t }),
            });
        }
        for (i, layer) in self.paint.iter().enumerate() {
            frames.push(Frame::Paint(PaintFrame {
                target: Some(i),
                width: Some(layer.width),
                height: Some(layer.height),
                ..PaintFrame::default()
            }));
            for row in &layer.rows {
                frames.push(Frame::Paint(PaintFrame {
                    target: Some(i),
                    y: Some(row.y),
                    runs: Some(row.runs.clone()),
                    ..PaintFrame::default()
                }));
            }
        }
        for (i, t) in self.targets.iter().enumerate() {
            let mut s = SummaryFrame {
                target: Some(i),
                code: Some(t.code.to_string()),
                started_at: Some(t.started_at),
                arrived_at: t.arrived_at,
                filled_at: t.filled_at,
                ..SummaryFrame::default()
            };
            if let Some(f) = t.fill {
                s.s_t = Some(f.target_area);
                s.s_c = Some(f.painted_area);
                s.s_r = Some(f.painted_in_target);
                s.o_c = Some(f.completion);
                s.o_d = Some(f.overflow);
                s.completed = Some(f.completed);
            }
            if let Some(m) = t.trajectory {
                s.l_m = Some(m.path_length);
                s.l_i = Some(m.straight_length);
                s.r = Some(m.r);
                s.class = Some(m.class);
            }
            frames.push(Frame::Summary(s));
        }
        let sum = self.summary();
        frames.push(Frame::Summary(SummaryFrame {
            status: Some(self.status),
            duration: Some(self.duration),
            o_c: sum.completion,
            o_d: sum.overflow,
            r: sum.r,
            class: sum.class,
            ..SummaryFrame::default()
        }));
        frames
    }

    /// The file form; every frame, the last included, ends with a newline.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for f in self.to_frames() {
            out.push_str(&f.to_line());
            out.push('\n');
        }
        out
    }
}

/// A loaded record. `partial` is set when the file stopped before the final
/// summary, e.g. a cut-off last line.
#[derive(Debug, Clone, PartialEq)]
pub struct LoadedRecord {
    pub record: SessionRecord,
    pub partial: bool,
}

fn finite(line: usize, what: &str, v: f64) -> Result<f64, RecordError> {
    if v.is_finite() {
        Ok(v)
    } else {
        Err(corrupt(line, format!("non-finite {what}")))
    }
}

struct Builder {
    config: SessionConfig,
    samples: Vec<Sample>,
    cues: Vec<Cue>,
    paint: Vec<RleMask>,
    targets: Vec<TargetOutcome>,
    end: Option<(SessionStatus, f64)>,
}

impl Builder {
    fn frame(&mut self, line: usize, frame: Frame) -> Result<(), RecordError> {
        if self.end.is_some() {
            return Err(corrupt(line, "frame after the final summary"));
        }
        match frame {
            Frame::Hello(_) => return Err(corrupt(line, "second hello")),
            Frame::Command(c) => {
                let code: CellCode = c.code.parse().map_err(|e| corrupt(line, format!("{e}")))?;
                code.check(&self.config.grid).map_err(|e| corrupt(line, format!("{e}")))?;
                let t = finite(line, "command time", c.t.unwrap_or(0.0))?;
                self.targets.push(TargetOutcome::started(code, t));
            }
            Frame::Tip(tip) => {
                let t = finite(line, "sample time", tip.t)?;
                let p = Point2::new(finite(line, "x", tip.x)?, finite(line, "y", tip.y)?);
                self.samples.push(Sample { t, point: p });
            }
            Frame::Cue(c) => {
                if c.kind == CueKind::Arrived {
                    return Err(corrupt(line, "arrival must be an arrived frame"));
                }
                self.cues.push(Cue { kind: c.kind, t: finite(line, "cue time", c.t)? });
            }
            Frame::Arrived(a) => {
                self.cues.push(Cue { kind: CueKind::Arrived, t: finite(line, "arrival time", a.t)? })
            }
            Frame::Paint(p) => self.paint_frame(line, p)?,
            Frame::Summary(s) => self.summary_frame(line, s)?,
            Frame::Error(e) => return Err(corrupt(line, format!("error frame in record: {}", e.message))),
        }
        Ok(())
    }

    fn paint_frame(&mut self, line: usize, p: PaintFrame) -> Result<(), RecordError> {
        let Some(i) = p.target else {
            return Err(corrupt(line, "paint frame without target index"));
        };
        match (p.width, p.height, p.y, p.runs) {
            (Some(width), Some(height), None, None) => {
                if i != self.paint.len() {
                    return Err(corrupt(line, format!("paint layer {i} out of order")));
                }
                let (w, h) = self.config.board_size();
                if (width, height) != (w, h) {
                    return Err(corrupt(line, format!("paint layer {width}x{height} on a {w}x{h} board")));
                }
                self.paint.push(RleMask { width, height, rows: Vec::new() });
            }
            (None, None, Some(y), Some(runs)) => {
                if i + 1 != self.paint.len() {
                    return Err(corrupt(line, format!("paint row for layer {i} outside its layer")));
                }
                let layer = self.paint.last_mut().expect("checked above");
                layer.rows.push(RleRow { y, runs });
                layer.validate().map_err(|m| corrupt(line, m))?;
            }
            _ => return Err(corrupt(line, "paint frame is neither a layer header nor a row")),
        }
        Ok(())
    }

    fn summary_frame(&mut self, line: usize, s: SummaryFrame) -> Result<(), RecordError> {
        let Some(i) = s.target else {
            let status = s.status.ok_or_else(|| corrupt(line, "session summary without status"))?;
            let duration = finite(line, "duration", s.duration.unwrap_or(0.0))?;
            self.end = Some((status, duration));
            return Ok(());
        };
        let n = self.targets.len();
        let t = self.targets.get_mut(i).ok_or_else(|| corrupt(line, format!("summary for target {i} of {n}")))?;
        t.arrived_at = s.arrived_at;
        t.filled_at = s.filled_at;
        t.fill = match (s.s_t, s.s_c, s.s_r, s.o_c, s.o_d, s.completed) {
            (Some(st), Some(sc), Some(sr), Some(oc), Some(od), Some(done)) => Some(FillMetrics {
                target_area: st,
                painted_area: sc,
                painted_in_target: sr,
                completion: oc,
                overflow: od,
                completed: done,
            }),
            (None, None, None, None, None, None) => None,
            _ => return Err(corrupt(line, "incomplete fill metrics")),
        };
        t.trajectory = match (s.l_m, s.l_i, s.r, s.class) {
            (Some(l_m), Some(l_i), Some(r), Some(class)) => {
                Some(TrajectoryMetrics { path_length: l_m, straight_length: l_i, r, class })
            }
            (None, None, None, None) => None,
            _ => return Err(corrupt(line, "incomplete trajectory metrics")),
        };
        Ok(())
    }
}

fn header(line: &str) -> Result<SessionConfig, RecordError> {
    let value: serde_json::Value =
        serde_json::from_str(line).map_err(|e| corrupt(1, format!("unreadable header: {e}")))?;
    if value.get("type").and_then(|t| t.as_str()) != Some("hello") {
        return Err(RecordError::SchemaMismatch("first frame is not a hello".into()));
    }
    match value.get("proto").and_then(|p| p.as_str()) {
        Some(PROTO) => {}
        Some(other) => return Err(RecordError::SchemaMismatch(format!("protocol {other}, expected {PROTO}"))),
        None => return Err(RecordError::SchemaMismatch("hello without protocol".into())),
    }
    let hello: Hello =
        serde_json::from_value(value).map_err(|e| RecordError::SchemaMismatch(format!("bad header: {e}")))?;
    let config = hello.config.ok_or_else(|| RecordError::SchemaMismatch("header carries no config".into()))?;
    config.validate().map_err(|e| RecordError::SchemaMismatch(format!("header config: {e}")))?;
    Ok(config)
}

/// Parses a record file. A final line without its newline is treated as cut
/// off: it is dropped and the result is flagged partial.
pub fn parse_record(text: &str) -> Result<LoadedRecord, RecordError> {
    let mut lines: Vec<&str> = text.split('\n').collect();
    // After the last newline there is either nothing or a cut-off frame.
    let cut = !lines.pop().unwrap_or_default().is_empty();
    let mut numbered = lines.into_iter().enumerate().map(|(i, l)| (i + 1, l)).filter(|(_, l)| !l.trim().is_empty());
    let Some((_, first)) = numbered.next() else {
        return Err(corrupt(1, if cut { "header line cut off" } else { "empty record" }));
    };
    let mut b = Builder {
        config: header(first)?,
        samples: Vec::new(),
        cues: Vec::new(),
        paint: Vec::new(),
        targets: Vec::new(),
        end: None,
    };
    for (n, line) in numbered {
        let frame = Frame::parse(line).map_err(|e| corrupt(n, format!("{e}")))?;
        b.frame(n, frame)?;
    }
    let partial = cut || b.end.is_none();
    let (status, duration) = b.end.unwrap_or((SessionStatus::Incomplete, b.samples.last().map_or(0.0, |s| s.t)));
    Ok(LoadedRecord {
        record: SessionRecord {
            config: b.config,
            samples: b.samples,
            cues: b.cues,
            paint: b.paint,
            targets: b.targets,
            status,
            duration,
        },
        partial,
    })
}

pub fn write_record<W: Write>(record: &SessionRecord, mut out: W) -> Result<(), RecordError> {
    out.write_all(record.to_text().as_bytes())?;
    out.flush()?;
    Ok(())
}

pub fn save_record(record: &SessionRecord, path: impl AsRef<Path>) -> Result<(), RecordError> {
    fs::write(path, record.to_text())?;
    Ok(())
}

pub fn load_record(path: impl AsRef<Path>) -> Result<LoadedRecord, RecordError> {
    let bytes = fs::read(path)?;
    let text = String::from_utf8_lossy(&bytes);
    parse_record(&text)
}
