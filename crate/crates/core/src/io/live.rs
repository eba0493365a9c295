//! The server side of the live protocol, independent of any transport.
//!
//! A client says `hello`, sends `command` frames naming target blocks, and
//! streams `tip` observations and `paint` pen toggles. The engine answers
//! with `cue` frames (at most one per prompt period), an `arrived` frame when
//! the tip enters the reference area, and a `summary` once the block is
//! filled.

use thiserror::Error;

use crate::geometry::Point2;
use crate::grid::{code_to_cell, CellCode, GridSpec, ReferenceArea};
use crate::guidance::{next_cue, parse_command, CueKind, GuidanceState, PromptPolicy};
use crate::metrics::{
    cell_pixels, relative_movement_distance, FillMetrics, FillThresholds, PaintMask, Sample, TrajectoryMetrics,
};
use crate::sim::{stamp_disk, SessionConfig};

use super::frame::{
    ArrivedFrame, BoardInfo, CommandFrame, CueFrame, Frame, GridInfo, Hello, Pen, PaintFrame, SummaryFrame,
    TipFrame, PROTO,
};

/// Fatal protocol violations; the connection is closed after reporting one.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum ProtocolError {
    #[error("expected hello, got {0}")]
    ExpectedHello(&'static str),
    #[error("incompatible protocol {0:?}, expected {PROTO}")]
    Incompatible(String),
    #[error("unexpected {0} frame from client")]
    Unexpected(&'static str),
    #[error("malformed frame: {0}")]
    Malformed(String),
    #[error("time went backwards: {t} after {last}")]
    TimeReversed { t: f64, last: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LiveConfig {
    pub grid: GridSpec,
    pub reference: ReferenceArea,
    pub prompt: PromptPolicy,
    pub brush_radius: f64,
    pub thresholds: FillThresholds,
}

impl From<&SessionConfig> for LiveConfig {
    fn from(c: &SessionConfig) -> Self {
        Self {
            grid: c.grid,
            reference: c.reference,
            prompt: c.prompt,
            brush_radius: c.brush_radius,
            thresholds: c.thresholds,
        }
    }
}

impl Default for LiveConfig {
    fn default() -> Self {
        Self::from(&SessionConfig::default())
    }
}

#[derive(Debug, Clone)]
struct LiveTarget {
    index: usize,
    code: CellCode,
    span: ((usize, usize), (usize, usize)),
    guidance: GuidanceState,
    started_at: f64,
    samples: Vec<Sample>,
    layer: PaintMask,
    painted_in_target: u64,
    arrived_at: Option<f64>,
    trajectory: Option<TrajectoryMetrics>,
}

#[derive(Debug, Clone)]
pub struct LiveSession {
    config: LiveConfig,
    greeted: bool,
    last_t: Option<f64>,
    pen_down: bool,
    commands: usize,
    target: Option<LiveTarget>,
}

fn finite(what: &str, v: f64) -> Result<f64, ProtocolError> {
    if v.is_finite() {
        Ok(v)
    } else {
        Err(ProtocolError::Malformed(format!("non-finite {what}")))
    }
}

impl LiveSession {
    pub fn new(config: LiveConfig) -> Self {
        Self { config, greeted: false, last_t: None, pen_down: false, commands: 0, target: None }
    }

    pub fn config(&self) -> &LiveConfig {
        &self.config
    }

    /// Code of the block currently being navigated to or filled.
    pub fn current_target(&self) -> Option<CellCode> {
        self.target.as_ref().map(|t| t.code)
    }

    fn server_hello(&self) -> Frame {
        Frame::Hello(Hello {
            proto: PROTO.to_string(),
            role: Some("server".into()),
            grid: Some(GridInfo { rows: self.config.grid.rows, cols: self.config.grid.cols }),
            board: Some(BoardInfo { w: self.config.grid.board_w, h: self.config.grid.board_h }),
            period: Some(self.config.prompt.period),
            config: None,
        })
    }

    fn advance_clock(&mut self, t: f64) -> Result<f64, ProtocolError> {
        let t = finite("time", t)?;
        if let Some(last) = self.last_t {
            if t < last {
                return Err(ProtocolError::TimeReversed { t, last });
            }
        }
        self.last_t = Some(t);
        Ok(t)
    }

    /// Handles one client frame. Recoverable problems (an unknown block
    /// code) come back as `error` frames in the reply.
    pub fn handle(&mut self, frame: Frame) -> Result<Vec<Frame>, ProtocolError> {
        if !self.greeted {
            let Frame::Hello(h) = frame else {
                return Err(ProtocolError::ExpectedHello(frame.kind()));
            };
            if h.proto != PROTO {
                return Err(ProtocolError::Incompatible(h.proto));
            }
            self.greeted = true;
            return Ok(vec![self.server_hello()]);
        }
        match frame {
            Frame::Command(c) => self.command(c),
            Frame::Tip(t) => self.tip(t),
            Frame::Paint(p) => self.paint(p),
            other => Err(ProtocolError::Unexpected(other.kind())),
        }
    }

    fn command(&mut self, c: CommandFrame) -> Result<Vec<Frame>, ProtocolError> {
        let code = match parse_command(&c.code, &self.config.grid) {
            Ok(code) => code,
            Err(e) => return Ok(vec![Frame::error(e.to_string())]),
        };
        let t = match c.t {
            Some(t) => self.advance_clock(t)?,
            None => self.last_t.unwrap_or(0.0),
        };
        let cell = code_to_cell(code, &self.config.grid).expect("parse_command checks the grid");
        let (w, h) = (self.config.grid.board_w.round() as usize, self.config.grid.board_h.round() as usize);
        let layer = PaintMask::new(w, h);
        let span = cell_pixels(&layer, &cell);
        self.target = Some(LiveTarget {
            index: self.commands,
            code,
            span,
            guidance: GuidanceState::new(cell),
            started_at: t,
            samples: Vec::new(),
            layer,
            painted_in_target: 0,
            arrived_at: None,
            trajectory: None,
        });
        self.commands += 1;
        Ok(vec![Frame::Command(CommandFrame { code: code.to_string(), t: Some(t) })])
    }

    fn paint(&mut self, p: PaintFrame) -> Result<Vec<Frame>, ProtocolError> {
        let Some(pen) = p.pen else {
            return Err(ProtocolError::Malformed("paint frame without pen state".into()));
        };
        if let Some(t) = p.t {
            self.advance_clock(t)?;
        }
        self.pen_down = pen == Pen::Down;
        Ok(Vec::new())
    }

    fn tip(&mut self, tip: TipFrame) -> Result<Vec<Frame>, ProtocolError> {
        let now = self.advance_clock(tip.t)?;
        let p = Point2::new(finite("x", tip.x)?, finite("y", tip.y)?);
        let mut out = Vec::new();
        let Some(target) = self.target.as_mut() else {
            return Ok(out);
        };
        if self.pen_down {
            let ((x0, x1), (y0, y1)) = target.span;
            for (x, y) in stamp_disk(&mut target.layer, p, self.config.brush_radius) {
                if x >= x0 && x < x1 && y >= y0 && y < y1 {
                    target.painted_in_target += 1;
                }
            }
        }
        if target.arrived_at.is_none() {
            target.samples.push(Sample { t: now, point: p });
            let (next, cue) = next_cue(&target.guidance, Some(p), now, &self.config.prompt, &self.config.reference);
            target.guidance = next;
            if let Some(cue) = cue {
                out.push(match cue.kind {
                    CueKind::Arrived => Frame::Arrived(ArrivedFrame { t: cue.t, code: Some(target.code.to_string()) }),
                    kind => Frame::Cue(CueFrame { kind, t: cue.t }),
                });
            }
            if target.guidance.is_arrived() {
                target.arrived_at = Some(now);
                target.trajectory = relative_movement_distance(&target.samples).ok();
            }
            return Ok(out);
        }
        let ((x0, x1), (y0, y1)) = target.span;
        let area = ((x1 - x0) * (y1 - y0)) as u64;
        if area > 0 && target.painted_in_target as f64 / area as f64 > self.config.thresholds.completion {
            let fill = FillMetrics::from_counts(area, target.layer.painted_count(), target.painted_in_target, &self.config.thresholds)
                .expect("non-empty target");
            out.push(Frame::Summary(summary(target, &fill, now)));
            self.target = None;
        }
        Ok(out)
    }
}

fn summary(t: &LiveTarget, fill: &FillMetrics, now: f64) -> SummaryFrame {
    SummaryFrame {
        target: Some(t.index),
        code: Some(t.code.to_string()),
        o_c: Some(fill.completion),
        o_d: Some(fill.overflow),
        r: t.trajectory.map(|m| m.r),
        class: t.trajectory.map(|m| m.class),
        duration: Some(now - t.started_at),
        started_at: Some(t.started_at),
        arrived_at: t.arrived_at,
        filled_at: Some(now),
        s_t: Some(fill.target_area),
        s_c: Some(fill.painted_area),
        s_r: Some(fill.painted_in_target),
        completed: Some(fill.completed),
        l_m: t.trajectory.map(|m| m.path_length),
        l_i: t.trajectory.map(|m| m.straight_length),
        status: None,
    }
}
