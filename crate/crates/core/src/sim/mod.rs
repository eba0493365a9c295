//! Deterministic closed-loop simulation of a guided painting session.
//!
//! Each tick the painter moves (or paints), a trajectory sample is taken on
//! every sample-interval boundary, the detector observes the true tip,
//! guidance turns the delivered detection into at most one cue, and the
//! system checks whether the current block is filled.

mod agent;
mod config;
mod sweep;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub use agent::{Agent, AgentFrame};
pub use config::{AgentModel, ConfigError, SessionConfig};
pub use sweep::{run_batch, sweep, Comparison, SweepEntry, SweepReport, SweepRow};

use crate::geometry::Point2;
use crate::grid::{code_to_cell, Cell, CellCode};
use crate::guidance::{next_cue, Cue, GuidanceState};
use crate::io::record::{RleMask, SessionRecord, SessionStatus, TargetOutcome};
pub use crate::metrics::Sample;
use crate::metrics::{cell_pixels, relative_movement_distance, FillMetrics, PaintMask};
use crate::tipdetect::{DetectorChannel, TipDetection};

const TIME_EPS: f64 = 1e-9;
const AGENT_STREAM: u64 = 1;
const DETECTOR_STREAM: u64 = 2;

/// Something observable that happened during one tick.
#[derive(Debug, Clone, PartialEq)]
pub enum SimEvent {
    Command { t: f64, target: usize, code: CellCode },
    Detection(TipDetection),
    Cue(Cue),
    Sample(Sample),
    PenDown { t: f64 },
    PenUp { t: f64 },
    FillComplete { t: f64, target: usize, metrics: FillMetrics },
    Finished { t: f64, status: SessionStatus },
}

#[derive(Debug, Clone, PartialEq)]
enum Stage {
    Navigating(GuidanceState),
    /// Waiting for the painter to fill the block.
    Filling,
    Done(SessionStatus),
}

/// Stamps a filled disk of `radius` at `p`: every pixel whose center lies
/// within `radius` of `p`. Returns the newly painted pixels.
pub fn stamp_disk(mask: &mut PaintMask, p: Point2, radius: f64) -> Vec<(usize, usize)> {
    let mut fresh = Vec::new();
    if mask.width() == 0 || mask.height() == 0 {
        return fresh;
    }
    let lo_x = (p.x - radius - 0.5).floor().max(0.0) as usize;
    let hi_x = ((p.x + radius).ceil().max(0.0) as usize).min(mask.width() - 1);
    let lo_y = (p.y - radius - 0.5).floor().max(0.0) as usize;
    let hi_y = ((p.y + radius).ceil().max(0.0) as usize).min(mask.height() - 1);
    let r2 = radius * radius;
    for y in lo_y..=hi_y {
        let dy = y as f64 + 0.5 - p.y;
        for x in lo_x..=hi_x {
            let dx = x as f64 + 0.5 - p.x;
            if dx * dx + dy * dy <= r2 && mask.set(x, y) {
                fresh.push((x, y));
            }
        }
    }
    fresh
}

/// Seed of the `index`-th session derived from a base seed.
pub fn derive_seed(base: u64, index: u64) -> u64 {
    // splitmix64
    let mut z = base.wrapping_add(index.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// A running session. Drive it with [`Session::step`] or [`run_session`].
#[derive(Debug, Clone)]
pub struct Session {
    config: SessionConfig,
    tick: u64,
    agent: Agent,
    agent_rng: ChaCha8Rng,
    detector: DetectorChannel<ChaCha8Rng>,
    stage: Stage,
    target_idx: usize,
    cell: Cell,
    span: ((usize, usize), (usize, usize)),
    layer: PaintMask,
    painted_in_target: u64,
    layers: Vec<RleMask>,
    outcomes: Vec<TargetOutcome>,
    samples: Vec<Sample>,
    cues: Vec<Cue>,
    next_sample: u64,
    pen_was_down: bool,
}

impl Session {
    pub fn new(config: SessionConfig) -> Result<Self, ConfigError> {
        config.validate()?;
        let (w, h) = config.board_size();
        let frame = AgentFrame {
            board_w: config.grid.board_w,
            board_h: config.grid.board_h,
            cell_w: config.grid.cell_w(),
            cell_h: config.grid.cell_h(),
            brush_radius: config.brush_radius,
        };
        let agent = Agent::new(config.agent, frame, config.start);
        let detector = DetectorChannel::new(config.detector, stream_rng(config.seed, DETECTOR_STREAM));
        let first = config.targets[0];
        let cell = code_to_cell(first, &config.grid).map_err(|e| ConfigError::Invalid(e.to_string()))?;
        let layer = PaintMask::new(w, h);
        let span = cell_pixels(&layer, &cell);
        let mut s = Self {
            agent_rng: stream_rng(config.seed, AGENT_STREAM),
            tick: 0,
            agent,
            detector,
            stage: Stage::Navigating(GuidanceState::new(cell)),
            target_idx: 0,
            cell,
            span,
            layer,
            painted_in_target: 0,
            layers: Vec::new(),
            outcomes: vec![TargetOutcome::started(first, 0.0)],
            samples: vec![Sample { t: 0.0, point: config.start }],
            cues: Vec::new(),
            next_sample: 1,
            pen_was_down: false,
            config,
        };
        s.layers.reserve(s.config.targets.len());
        Ok(s)
    }

    pub fn config(&self) -> &SessionConfig {
        &self.config
    }

    pub fn now(&self) -> f64 {
        self.tick as f64 * self.config.dt
    }

    pub fn is_finished(&self) -> bool {
        matches!(self.stage, Stage::Done(_))
    }

    pub fn agent(&self) -> &Agent {
        &self.agent
    }

    /// Union of all paint deposited so far.
    pub fn paint_mask(&self) -> PaintMask {
        let mut out = self.layer.clone();
        for l in &self.layers {
            out.merge(&l.to_mask());
        }
        out
    }

    /// Advances one tick and returns what happened during it.
    pub fn step(&mut self) -> Vec<SimEvent> {
        let mut events = Vec::new();
        if self.is_finished() {
            return events;
        }
        self.tick += 1;
        let now = self.now();
        let dt = self.config.dt;

        self.agent.advance(now, dt, &mut self.agent_rng);
        let pen = self.agent.pen_down();
        if pen != self.pen_was_down {
            events.push(if pen { SimEvent::PenDown { t: now } } else { SimEvent::PenUp { t: now } });
            self.pen_was_down = pen;
        }
        if pen {
            self.deposit(self.agent.position());
        }

        while (self.next_sample as f64) * self.config.sample_interval <= now + TIME_EPS {
            let sample = Sample {
                t: self.next_sample as f64 * self.config.sample_interval,
                point: self.agent.position(),
            };
            self.samples.push(sample);
            events.push(SimEvent::Sample(sample));
            self.next_sample += 1;
        }

        let detection = self.detector.observe(self.agent.position(), now);
        if let Some(d) = detection {
            events.push(SimEvent::Detection(d));
        }
        if let Stage::Navigating(state) = &self.stage {
            let (next, cue) =
                next_cue(state, detection.map(|d| d.point), now, &self.config.prompt, &self.config.reference);
            if let Some(cue) = cue {
                self.cues.push(cue);
                self.agent.hear(cue);
                events.push(SimEvent::Cue(cue));
            }
            if next.is_arrived() {
                self.on_arrival(now);
                self.stage = Stage::Filling;
            } else {
                self.stage = Stage::Navigating(next);
            }
        }

        if self.stage == Stage::Filling {
            let area = ((self.span.0 .1 - self.span.0 .0) * (self.span.1 .1 - self.span.1 .0)) as u64;
            if area > 0 && self.painted_in_target as f64 / area as f64 > self.config.thresholds.completion {
                let metrics = FillMetrics::from_counts(
                    area,
                    self.layer.painted_count(),
                    self.painted_in_target,
                    &self.config.thresholds,
                )
                .expect("non-empty target");
                events.push(SimEvent::FillComplete { t: now, target: self.target_idx, metrics });
                self.finish_target(now, metrics, &mut events);
            }
        }

        if !self.is_finished() && now + TIME_EPS >= self.config.timeout {
            self.seal_layer();
            self.stage = Stage::Done(SessionStatus::Timeout);
            events.push(SimEvent::Finished { t: now, status: SessionStatus::Timeout });
        }
        events
    }

    fn deposit(&mut self, p: Point2) {
        let ((x0, x1), (y0, y1)) = self.span;
        for (x, y) in stamp_disk(&mut self.layer, p, self.config.brush_radius) {
            if x >= x0 && x < x1 && y >= y0 && y < y1 {
                self.painted_in_target += 1;
            }
        }
    }

    fn on_arrival(&mut self, now: f64) {
        let outcome = self.outcomes.last_mut().expect("current target");
        outcome.arrived_at = Some(now);
        let leg: Vec<Sample> = self
            .samples
            .iter()
            .filter(|s| s.t + TIME_EPS >= outcome.started_at && s.t <= now + TIME_EPS)
            .copied()
            .collect();
        outcome.trajectory = relative_movement_distance(&leg).ok();
    }

    fn seal_layer(&mut self) {
        let (w, h) = self.config.board_size();
        let layer = std::mem::replace(&mut self.layer, PaintMask::new(w, h));
        self.layers.push(RleMask::encode(&layer));
    }

    fn finish_target(&mut self, now: f64, metrics: FillMetrics, events: &mut Vec<SimEvent>) {
        let outcome = self.outcomes.last_mut().expect("current target");
        outcome.filled_at = Some(now);
        outcome.fill = Some(metrics);
        self.seal_layer();
        self.painted_in_target = 0;
        self.target_idx += 1;
        if self.target_idx >= self.config.targets.len() {
            self.stage = Stage::Done(SessionStatus::Completed);
            events.push(SimEvent::Finished { t: now, status: SessionStatus::Completed });
            return;
        }
        let code = self.config.targets[self.target_idx];
        self.cell = code_to_cell(code, &self.config.grid).expect("validated target");
        self.span = cell_pixels(&self.layer, &self.cell);
        self.stage = Stage::Navigating(GuidanceState::new(self.cell));
        self.outcomes.push(TargetOutcome::started(code, now));
        self.agent.begin_target();
        events.push(SimEvent::Command { t: now, target: self.target_idx, code });
    }

    /// Final record; only meaningful once the session has finished.
    pub fn into_record(self) -> SessionRecord {
        let status = match self.stage {
            Stage::Done(s) => s,
            _ => SessionStatus::Timeout,
        };
        SessionRecord {
            duration: self.now(),
            config: self.config,
            samples: self.samples,
            cues: self.cues,
            paint: self.layers,
            targets: self.outcomes,
            status,
        }
    }
}

/// Runs a session to completion or timeout.
pub fn run_session(config: &SessionConfig) -> Result<SessionRecord, ConfigError> {
    let mut session = Session::new(config.clone())?;
    while !session.is_finished() {
        session.step();
    }
    Ok(session.into_record())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tipdetect::DetectorNoiseModel;

    fn ideal(targets: &[&str]) -> SessionConfig {
        SessionConfig {
            targets: targets.iter().map(|t| t.parse().unwrap()).collect(),
            agent: AgentModel::ideal(),
            detector: DetectorNoiseModel::PERFECT,
            ..SessionConfig::default()
        }
    }

    #[test]
    fn disk_stamp_sets_pixels_within_radius() {
        let mut mask = PaintMask::new(20, 20);
        let p = Point2::new(10.0, 10.0);
        let fresh = stamp_disk(&mut mask, p, 3.0);
        for y in 0..20 {
            for x in 0..20 {
                let inside = (x as f64 + 0.5 - 10.0).powi(2) + (y as f64 + 0.5 - 10.0).powi(2) <= 9.0;
                assert_eq!(mask.get(x, y), inside, "({x},{y})");
            }
        }
        assert_eq!(fresh.len() as u64, mask.painted_count());
        assert!(stamp_disk(&mut mask, p, 3.0).is_empty());
        // clipped at the board edge
        let mut edge = PaintMask::new(5, 5);
        stamp_disk(&mut edge, Point2::new(0.0, 0.0), 2.0);
        assert!(edge.get(0, 0) && edge.get(1, 0) && !edge.get(1, 1));
    }

    #[test]
    fn identical_seeds_give_identical_events() {
        let cfg = SessionConfig::default().with_seed(11);
        let mut a = Session::new(cfg.clone()).unwrap();
        let mut b = Session::new(cfg).unwrap();
        for _ in 0..600 {
            assert_eq!(a.step(), b.step());
        }
    }

    #[test]
    fn full_dropout_times_out() {
        let mut cfg = SessionConfig::default();
        cfg.detector.dropout_p = 1.0;
        cfg.timeout = 30.0;
        let rec = run_session(&cfg).unwrap();
        assert_eq!(rec.status, SessionStatus::Timeout);
        assert!(rec.cues.is_empty());
        assert!(rec.targets[0].arrived_at.is_none());
    }

    #[test]
    fn samples_on_interval_grid() {
        let rec = run_session(&SessionConfig::default().with_seed(5)).unwrap();
        for (k, s) in rec.samples.iter().enumerate() {
            assert_eq!(s.t, k as f64 * 0.3);
        }
    }

    #[test]
    fn ideal_agent_completes_two_targets() {
        let rec = run_session(&ideal(&["bc", "eg"])).unwrap();
        assert_eq!(rec.status, SessionStatus::Completed);
        for t in &rec.targets {
            assert!(t.fill.unwrap().completion > 0.8);
            assert!(t.arrived_at.unwrap() < t.filled_at.unwrap());
        }
    }

    #[test]
    fn pen_events_pair_up() {
        let mut s = Session::new(ideal(&["bc", "eg"])).unwrap();
        let mut downs = 0;
        let mut ups = 0;
        while !s.is_finished() {
            for e in s.step() {
                match e {
                    SimEvent::PenDown { .. } => downs += 1,
                    SimEvent::PenUp { .. } => ups += 1,
                    _ => {}
                }
            }
        }
        assert_eq!(downs, 2);
        assert_eq!(ups, 1);
    }

    #[test]
    fn derived_seeds_differ() {
        let seeds: std::collections::HashSet<u64> = (0..1000).map(|i| derive_seed(42, i)).collect();
        assert_eq!(seeds.len(), 1000);
    }
}
