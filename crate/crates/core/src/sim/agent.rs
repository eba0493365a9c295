//! The reactive painter: acts on cues after a fixed reaction latency and
//! fills the target once told it has arrived.

use std::collections::VecDeque;

use rand::Rng;
use rand_distr::StandardNormal;

use crate::geometry::Point2;
use crate::guidance::{Cue, CueKind};

use super::config::AgentModel;

const TIME_EPS: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
enum Mode {
    Idle,
    Moving { vx: f64, vy: f64 },
    Filling(FillPlan),
}

/// Boustrophedon strokes over a rectangle centered where the painter stopped.
#[derive(Debug, Clone, PartialEq)]
struct FillPlan {
    center: Point2,
    pass: u32,
    waypoints: Vec<Point2>,
    /// Segment being traversed: `waypoints[seg] -> waypoints[seg + 1]`.
    seg: usize,
    /// Nominal (jitter-free) pen position.
    nominal: Point2,
}

/// Everything the painter needs to know about the board and the cell size.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AgentFrame {
    pub board_w: f64,
    pub board_h: f64,
    pub cell_w: f64,
    pub cell_h: f64,
    pub brush_radius: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Agent {
    model: AgentModel,
    frame: AgentFrame,
    pos: Point2,
    mode: Mode,
    /// Current speed per axis: `[vertical, horizontal]`.
    speed: [f64; 2],
    last_dir: [Option<CueKind>; 2],
    heard: VecDeque<Cue>,
}

fn axis(kind: CueKind) -> usize {
    if kind.is_vertical() {
        0
    } else {
        1
    }
}

impl Agent {
    pub fn new(model: AgentModel, frame: AgentFrame, start: Point2) -> Self {
        Self {
            model,
            frame,
            pos: start,
            mode: Mode::Idle,
            speed: [model.speed; 2],
            last_dir: [None; 2],
            heard: VecDeque::new(),
        }
    }

    pub fn position(&self) -> Point2 {
        self.pos
    }

    pub fn pen_down(&self) -> bool {
        matches!(self.mode, Mode::Filling(_))
    }

    pub fn is_idle(&self) -> bool {
        self.mode == Mode::Idle
    }

    /// Queues a cue; it takes effect `reaction_latency` after `cue.t`.
    pub fn hear(&mut self, cue: Cue) {
        self.heard.push_back(cue);
    }

    /// Lifts the pen and forgets per-target adaptation before a new target.
    pub fn begin_target(&mut self) {
        self.mode = Mode::Idle;
        self.speed = [self.model.speed; 2];
        self.last_dir = [None; 2];
        self.heard.clear();
    }

    /// Advances the painter to time `now` by one tick of length `dt`.
    pub fn advance<R: Rng + ?Sized>(&mut self, now: f64, dt: f64, rng: &mut R) {
        while let Some(cue) = self.heard.front().copied() {
            if cue.t + self.model.reaction_latency > now + TIME_EPS {
                break;
            }
            self.heard.pop_front();
            self.react(cue.kind, rng);
        }
        match &mut self.mode {
            Mode::Idle => {}
            Mode::Moving { vx, vy } => {
                let (vx, vy) = (*vx, *vy);
                self.pos = self.clamp(Point2::new(self.pos.x + vx * dt, self.pos.y + vy * dt));
            }
            Mode::Filling(_) => self.advance_fill(dt, rng),
        }
    }

    fn react<R: Rng + ?Sized>(&mut self, kind: CueKind, rng: &mut R) {
        let Some((ux, uy)) = kind.unit_vector() else {
            if !self.pen_down() {
                let plan = self.plan_fill(self.pos, 0);
                self.mode = Mode::Filling(plan);
            }
            return;
        };
        if self.pen_down() {
            return;
        }
        let a = axis(kind);
        if matches!(self.last_dir[a], Some(prev) if prev != kind) {
            self.speed[a] = (self.speed[a] * self.model.reversal_damping).max(self.model.min_speed);
        }
        self.last_dir[a] = Some(kind);
        let theta = if self.model.heading_noise_deg > 0.0 {
            let z: f64 = rng.sample(StandardNormal);
            z * self.model.heading_noise_deg.to_radians()
        } else {
            0.0
        };
        let (s, c) = theta.sin_cos();
        let speed = self.speed[a];
        self.mode = Mode::Moving { vx: speed * (ux * c - uy * s), vy: speed * (ux * s + uy * c) };
    }

    fn clamp(&self, p: Point2) -> Point2 {
        Point2::new(p.x.clamp(0.0, self.frame.board_w), p.y.clamp(0.0, self.frame.board_h))
    }

    fn plan_fill(&self, center: Point2, pass: u32) -> FillPlan {
        let grow = self.model.fill_margin * f64::from(pass + 1);
        let hw = self.frame.cell_w / 2.0 + grow;
        let hh = self.frame.cell_h / 2.0 + grow;
        let inset = self.frame.brush_radius;
        let spacing = self.model.fill_spacing;
        let (left, right) = (center.x - hw + inset, center.x + hw - inset);
        let top = center.y - hh + inset + if pass % 2 == 1 { spacing / 2.0 } else { 0.0 };
        let bottom = center.y + hh - inset;
        let mut waypoints = Vec::new();
        let mut y = top;
        let mut row = 0usize;
        while y <= bottom + TIME_EPS {
            let (a, b) = if row % 2 == 0 { (left, right) } else { (right, left) };
            waypoints.push(self.clamp(Point2::new(a, y)));
            waypoints.push(self.clamp(Point2::new(b, y)));
            y += spacing;
            row += 1;
        }
        // Start from where the pen already is.
        waypoints.insert(0, self.pos);
        FillPlan { center, pass, waypoints, seg: 0, nominal: self.pos }
    }

    fn advance_fill<R: Rng + ?Sized>(&mut self, dt: f64, rng: &mut R) {
        let Mode::Filling(plan) = &mut self.mode else {
            return;
        };
        let mut budget = self.model.fill_speed * dt;
        loop {
            if plan.seg + 1 >= plan.waypoints.len() {
                let (center, pass) = (plan.center, plan.pass + 1);
                let nominal = plan.nominal;
                // Start the next, wider pass from the current nominal point.
                let saved = self.pos;
                self.pos = nominal;
                let next = self.plan_fill(center, pass);
                self.pos = saved;
                self.mode = Mode::Filling(next);
                return self.advance_fill(dt, rng);
            }
            let target = plan.waypoints[plan.seg + 1];
            let d = plan.nominal.distance(target);
            if d <= budget {
                budget -= d;
                plan.nominal = target;
                plan.seg += 1;
                if budget <= 0.0 {
                    break;
                }
            } else {
                let f = budget / d;
                plan.nominal = Point2::new(
                    plan.nominal.x + (target.x - plan.nominal.x) * f,
                    plan.nominal.y + (target.y - plan.nominal.y) * f,
                );
                break;
            }
        }
        let nominal = plan.nominal;
        let (jx, jy) = if self.model.fill_jitter > 0.0 {
            let zx: f64 = rng.sample(StandardNormal);
            let zy: f64 = rng.sample(StandardNormal);
            (zx * self.model.fill_jitter, zy * self.model.fill_jitter)
        } else {
            (0.0, 0.0)
        };
        self.pos = self.clamp(Point2::new(nominal.x + jx, nominal.y + jy));
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn frame() -> AgentFrame {
        AgentFrame { board_w: 500.0, board_h: 300.0, cell_w: 62.5, cell_h: 37.5, brush_radius: 4.0 }
    }

    #[test]
    fn ideal_agent_moves_up_one_tick() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let mut a = Agent::new(AgentModel::ideal(), frame(), Point2::new(100.0, 100.0));
        a.hear(Cue { kind: CueKind::Up, t: 0.0 });
        a.advance(0.1, 0.1, &mut rng);
        let p = a.position();
        assert_eq!(p.x, 100.0);
        assert!((p.y - (100.0 - 40.0 * 0.1)).abs() < 1e-12);
    }

    #[test]
    fn latency_delays_reaction() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let model = AgentModel { reaction_latency: 0.3, ..AgentModel::ideal() };
        let mut a = Agent::new(model, frame(), Point2::new(100.0, 100.0));
        a.hear(Cue { kind: CueKind::Right, t: 0.0 });
        a.advance(0.1, 0.1, &mut rng);
        a.advance(0.2, 0.1, &mut rng);
        assert_eq!(a.position(), Point2::new(100.0, 100.0));
        a.advance(0.3, 0.1, &mut rng);
        assert!(a.position().x > 100.0);
    }

    #[test]
    fn reversal_halves_speed() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let mut a = Agent::new(AgentModel::ideal(), frame(), Point2::new(100.0, 100.0));
        a.hear(Cue { kind: CueKind::Down, t: 0.0 });
        a.advance(0.1, 0.1, &mut rng);
        let y1 = a.position().y;
        a.hear(Cue { kind: CueKind::Up, t: 0.1 });
        a.advance(0.2, 0.1, &mut rng);
        assert!((y1 - a.position().y - 2.0).abs() < 1e-12);
    }

    #[test]
    fn arrived_starts_fill_with_pen_down() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let mut a = Agent::new(AgentModel::ideal(), frame(), Point2::new(100.0, 100.0));
        a.hear(Cue { kind: CueKind::Arrived, t: 0.0 });
        a.advance(0.1, 0.1, &mut rng);
        assert!(a.pen_down());
        // directional cues are ignored while filling
        a.hear(Cue { kind: CueKind::Left, t: 0.1 });
        a.advance(0.2, 0.1, &mut rng);
        assert!(a.pen_down());
        a.begin_target();
        assert!(!a.pen_down() && a.is_idle());
    }

    #[test]
    fn fill_keeps_going_past_the_first_pass() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let mut a = Agent::new(AgentModel::ideal(), frame(), Point2::new(200.0, 150.0));
        a.hear(Cue { kind: CueKind::Arrived, t: 0.0 });
        for i in 1..5000 {
            a.advance(i as f64 * 0.1, 0.1, &mut rng);
            let p = a.position();
            assert!(p.x >= 0.0 && p.x <= 500.0 && p.y >= 0.0 && p.y <= 300.0);
        }
        assert!(a.pen_down());
    }
}
