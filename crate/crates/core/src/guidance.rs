//! Cue generation: one direction at a time, vertical first, then
//! horizontal, with `arrived` once the tip enters the reference area.
//!
//! Screen convention throughout: `+y` is down, so `Up` asks for smaller `y`.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::Point2;
use crate::grid::{arrival_check, code_to_cell, Cell, CellCode, GridError, GridSpec, ReferenceArea};

/// Slack when comparing elapsed time against the prompt period, so tick
/// arithmetic like `10 × 0.1` still counts as one full second.
const GATE_EPS: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GuidanceError {
    #[error("cannot parse command `{0}`")]
    UnparseableCommand(String),
    #[error(transparent)]
    Grid(#[from] GridError),
    #[error("prompt period must be positive, got {0}")]
    InvalidPeriod(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CueKind {
    Up,
    Down,
    Left,
    Right,
    Arrived,
}

impl CueKind {
    pub fn as_str(self) -> &'static str {
        match self {
            CueKind::Up => "up",
            CueKind::Down => "down",
            CueKind::Left => "left",
            CueKind::Right => "right",
            CueKind::Arrived => "arrived",
        }
    }

    pub fn is_directional(self) -> bool {
        self != CueKind::Arrived
    }

    pub fn is_vertical(self) -> bool {
        matches!(self, CueKind::Up | CueKind::Down)
    }

    /// Unit step in board coordinates, or `None` for `Arrived`.
    pub fn unit_vector(self) -> Option<(f64, f64)> {
        match self {
            CueKind::Up => Some((0.0, -1.0)),
            CueKind::Down => Some((0.0, 1.0)),
            CueKind::Left => Some((-1.0, 0.0)),
            CueKind::Right => Some((1.0, 0.0)),
            CueKind::Arrived => None,
        }
    }
}

impl fmt::Display for CueKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for CueKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "up" => Ok(CueKind::Up),
            "down" => Ok(CueKind::Down),
            "left" => Ok(CueKind::Left),
            "right" => Ok(CueKind::Right),
            "arrived" => Ok(CueKind::Arrived),
            other => Err(format!("unknown cue `{other}`")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Cue {
    pub kind: CueKind,
    pub t: f64,
}

/// Minimum time between directional cues.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PromptPolicy {
    pub period: f64,
}

impl PromptPolicy {
    pub const HIGH: PromptPolicy = PromptPolicy { period: 1.0 };
    pub const MIDDLE: PromptPolicy = PromptPolicy { period: 2.0 };
    pub const LOW: PromptPolicy = PromptPolicy { period: 3.0 };

    pub fn new(period: f64) -> Result<Self, GuidanceError> {
        if period > 0.0 && period.is_finite() {
            Ok(Self { period })
        } else {
            Err(GuidanceError::InvalidPeriod(period))
        }
    }
}

impl Default for PromptPolicy {
    fn default() -> Self {
        Self::HIGH
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Phase {
    VerticalSeek,
    HorizontalSeek,
    Arrived,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GuidanceState {
    pub target: Cell,
    pub phase: Phase,
    pub last_cue_t: Option<f64>,
}

impl GuidanceState {
    pub fn new(target: Cell) -> Self {
        Self { target, phase: Phase::VerticalSeek, last_cue_t: None }
    }

    pub fn for_code(code: CellCode, spec: &GridSpec) -> Result<Self, GuidanceError> {
        Ok(Self::new(code_to_cell(code, spec)?))
    }

    pub fn is_arrived(&self) -> bool {
        self.phase == Phase::Arrived
    }
}

/// Accepts `go to <code>` or a bare `<code>`, ignoring case and spacing.
pub fn parse_command(text: &str, spec: &GridSpec) -> Result<CellCode, GuidanceError> {
    let lowered = text.to_lowercase();
    let words: Vec<&str> = lowered.split_whitespace().collect();
    let code_word = match words.as_slice() {
        [code] => *code,
        ["go", "to", code] | ["goto", code] => *code,
        _ => return Err(GuidanceError::UnparseableCommand(text.to_string())),
    };
    if code_word.chars().count() != 2 || !code_word.chars().all(|c| c.is_ascii_lowercase()) {
        return Err(GuidanceError::UnparseableCommand(text.to_string()));
    }
    let code: CellCode = code_word.parse()?;
    code.check(spec)?;
    Ok(code)
}

/// One guidance transition.
///
/// Arrival is announced immediately; directional cues wait for the prompt
/// period. While the tip is outside the target's row band the cue is
/// vertical; inside it, horizontal until the tip is within the reference
/// width, after which it is vertical again toward the cell center.
pub fn next_cue(
    state: &GuidanceState,
    tip: Option<Point2>,
    now: f64,
    policy: &PromptPolicy,
    reference: &ReferenceArea,
) -> (GuidanceState, Option<Cue>) {
    let mut next = *state;
    if state.is_arrived() {
        return (next, None);
    }
    let Some(tip) = tip else {
        return (next, None);
    };
    if arrival_check(tip, &state.target, reference) {
        next.phase = Phase::Arrived;
        next.last_cue_t = Some(now);
        return (next, Some(Cue { kind: CueKind::Arrived, t: now }));
    }
    if let Some(last) = state.last_cue_t {
        if now - last + GATE_EPS < policy.period {
            return (next, None);
        }
    }
    let target = &state.target;
    let center = target.center();
    let (a, _) = reference.size_in(target);
    let (phase, kind) = if !target.row_band_contains(tip.y) {
        let kind = if tip.y > target.rect.y1 { CueKind::Up } else { CueKind::Down };
        (Phase::VerticalSeek, kind)
    } else if 2.0 * (tip.x - center.x).abs() > a {
        let kind = if tip.x < center.x { CueKind::Right } else { CueKind::Left };
        (Phase::HorizontalSeek, kind)
    } else {
        let kind = if tip.y > center.y { CueKind::Up } else { CueKind::Down };
        (Phase::VerticalSeek, kind)
    };
    next.phase = phase;
    next.last_cue_t = Some(now);
    (next, Some(Cue { kind, t: now }))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn setup(code: &str) -> (GridSpec, GuidanceState) {
        let spec = GridSpec::default();
        let state = GuidanceState::for_code(code.parse().unwrap(), &spec).unwrap();
        (spec, state)
    }

    #[test]
    fn commands() {
        let spec = GridSpec::default();
        assert_eq!(parse_command("go to de", &spec).unwrap(), "de".parse().unwrap());
        assert_eq!(parse_command("  AA ", &spec).unwrap(), "aa".parse().unwrap());
        assert_eq!(parse_command("Go  To\tBC", &spec).unwrap(), "bc".parse().unwrap());
        assert!(matches!(
            parse_command("go to zz", &spec),
            Err(GuidanceError::Grid(GridError::CodeOutOfRange(_)))
        ));
        assert!(matches!(parse_command("paint the sky", &spec), Err(GuidanceError::UnparseableCommand(_))));
        assert!(matches!(parse_command("go to d", &spec), Err(GuidanceError::UnparseableCommand(_))));
        assert!(matches!(parse_command("", &spec), Err(GuidanceError::UnparseableCommand(_))));
    }

    #[test]
    fn below_target_cues_up() {
        let (_, s) = setup("cc");
        let tip = Point2::new(s.target.center().x, s.target.rect.y1 + 20.0);
        let (next, cue) = next_cue(&s, Some(tip), 5.0, &PromptPolicy::HIGH, &ReferenceArea::default());
        assert_eq!(cue, Some(Cue { kind: CueKind::Up, t: 5.0 }));
        assert_eq!(next.phase, Phase::VerticalSeek);
        let above = Point2::new(tip.x, s.target.rect.y0 - 1.0);
        let (_, cue) = next_cue(&s, Some(above), 5.0, &PromptPolicy::HIGH, &ReferenceArea::default());
        assert_eq!(cue.unwrap().kind, CueKind::Down);
    }

    #[test]
    fn row_aligned_left_of_target_cues_right() {
        let (_, s) = setup("cc");
        let tip = Point2::new(s.target.rect.x0 - 30.0, s.target.center().y);
        let (next, cue) = next_cue(&s, Some(tip), 0.0, &PromptPolicy::HIGH, &ReferenceArea::default());
        assert_eq!(cue.unwrap().kind, CueKind::Right);
        assert_eq!(next.phase, Phase::HorizontalSeek);
    }

    #[test]
    fn period_gates_directional_cues_but_not_arrival() {
        let (_, s) = setup("cc");
        let policy = PromptPolicy::MIDDLE;
        let r = ReferenceArea::default();
        let far = Point2::new(10.0, 290.0);
        let (s1, c1) = next_cue(&s, Some(far), 1.0, &policy, &r);
        assert!(c1.is_some());
        let (s2, c2) = next_cue(&s1, Some(far), 2.5, &policy, &r);
        assert!(c2.is_none());
        assert_eq!(s2, s1);
        let (s3, c3) = next_cue(&s2, Some(s.target.center()), 2.6, &policy, &r);
        assert_eq!(c3, Some(Cue { kind: CueKind::Arrived, t: 2.6 }));
        assert!(s3.is_arrived());
        let (s4, c4) = next_cue(&s3, Some(far), 10.0, &policy, &r);
        assert_eq!((s4, c4), (s3, None));
    }

    #[test]
    fn tick_rounding_does_not_delay_cue() {
        let (_, s) = setup("aa");
        let r = ReferenceArea::default();
        let far = Point2::new(400.0, 250.0);
        let (s1, _) = next_cue(&s, Some(far), 3.0 * 0.1, &PromptPolicy::HIGH, &r);
        let (_, c) = next_cue(&s1, Some(far), 13.0 * 0.1, &PromptPolicy::HIGH, &r);
        assert!(c.is_some());
    }

    #[test]
    fn dropout_freezes_state() {
        let (_, s) = setup("cc");
        let (next, cue) = next_cue(&s, None, 9.0, &PromptPolicy::HIGH, &ReferenceArea::default());
        assert_eq!((next, cue), (s, None));
    }

    #[test]
    fn in_band_and_width_aligned_cues_vertical() {
        let (_, s) = setup("cc");
        let c = s.target.center();
        let tip = Point2::new(c.x + 1.0, s.target.rect.y1 - 1.0);
        let (next, cue) = next_cue(&s, Some(tip), 0.0, &PromptPolicy::HIGH, &ReferenceArea::default());
        assert_eq!(cue.unwrap().kind, CueKind::Up);
        assert_eq!(next.phase, Phase::VerticalSeek);
    }

    #[test]
    fn invalid_period() {
        assert!(PromptPolicy::new(0.0).is_err());
        assert!(PromptPolicy::new(f64::NAN).is_err());
        assert_eq!(PromptPolicy::new(2.0).unwrap(), PromptPolicy::MIDDLE);
    }
}
