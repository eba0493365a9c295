//! Session configuration and its flat `key=value` text form.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::Point2;
use crate::grid::{CellCode, GridSpec, ReferenceArea};
use crate::guidance::PromptPolicy;
use crate::metrics::FillThresholds;
use crate::tipdetect::DetectorNoiseModel;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ConfigError {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("unknown config key `{0}`")]
    UnknownKey(String),
    #[error("invalid config: {0}")]
    Invalid(String),
}

/// Behavior of the simulated blindfolded painter.
///
/// The painter keeps moving in the last heard direction until told
/// otherwise. A cue that reverses the previous cue on the same axis scales
/// that axis' speed by `reversal_damping`, never below `min_speed`. After
/// `arrived` the painter fills a rectangle of roughly one cell centered on
/// where it stopped, in boustrophedon strokes, widening the rectangle by
/// `fill_margin` on every extra pass.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AgentModel {
    /// Navigation speed, px/s.
    pub speed: f64,
    /// Standard deviation of the heading error drawn at each cue, degrees.
    pub heading_noise_deg: f64,
    /// Delay between a cue being issued and the painter acting on it, s.
    pub reaction_latency: f64,
    /// Per-tick positional jitter while filling, px.
    pub fill_jitter: f64,
    /// Stroke speed while filling, px/s.
    pub fill_speed: f64,
    /// Extra border painted around the assumed cell, px.
    pub fill_margin: f64,
    /// Distance between fill strokes, px.
    pub fill_spacing: f64,
    pub reversal_damping: f64,
    pub min_speed: f64,
}

impl Default for AgentModel {
    fn default() -> Self {
        Self {
            speed: 40.0,
            heading_noise_deg: 15.0,
            reaction_latency: 0.3,
            fill_jitter: 3.0,
            fill_speed: 6.5,
            fill_margin: 6.0,
            fill_spacing: 5.0,
            reversal_damping: 0.5,
            min_speed: 5.0,
        }
    }
}

impl AgentModel {
    /// Noise-free painter that reacts instantly.
    pub fn ideal() -> Self {
        Self { heading_noise_deg: 0.0, reaction_latency: 0.0, fill_jitter: 0.0, ..Self::default() }
    }

    fn validate(&self) -> Result<(), ConfigError> {
        let nonneg = [
            ("heading_noise_deg", self.heading_noise_deg),
            ("reaction_latency", self.reaction_latency),
            ("fill_jitter", self.fill_jitter),
            ("fill_margin", self.fill_margin),
        ];
        for (name, v) in nonneg {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(ConfigError::Invalid(format!("{name} must be >= 0, got {v}")));
            }
        }
        let positive = [
            ("speed", self.speed),
            ("fill_speed", self.fill_speed),
            ("fill_spacing", self.fill_spacing),
            ("min_speed", self.min_speed),
        ];
        for (name, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(ConfigError::Invalid(format!("{name} must be > 0, got {v}")));
            }
        }
        if !(self.reversal_damping > 0.0 && self.reversal_damping <= 1.0) {
            return Err(ConfigError::Invalid(format!(
                "reversal_damping must be in (0, 1], got {}",
                self.reversal_damping
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionConfig {
    pub seed: u64,
    pub targets: Vec<CellCode>,
    pub prompt: PromptPolicy,
    pub agent: AgentModel,
    pub detector: DetectorNoiseModel,
    pub grid: GridSpec,
    pub reference: ReferenceArea,
    pub brush_radius: f64,
    pub start: Point2,
    /// Simulator tick, s.
    pub dt: f64,
    /// Trajectory sampling interval, s.
    pub sample_interval: f64,
    pub timeout: f64,
    pub thresholds: FillThresholds,
}

impl Default for SessionConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            targets: vec![code("bc"), code("eg")],
            prompt: PromptPolicy::HIGH,
            agent: AgentModel::default(),
            detector: DetectorNoiseModel::default(),
            grid: GridSpec::default(),
            reference: ReferenceArea::default(),
            brush_radius: 4.0,
            start: Point2::new(250.0, 290.0),
            dt: 0.1,
            sample_interval: 0.3,
            timeout: 600.0,
            thresholds: FillThresholds::default(),
        }
    }
}

fn code(s: &str) -> CellCode {
    s.parse().expect("valid literal code")
}

impl SessionConfig {
    /// The two-target layout used for the calibrated runs.
    pub fn two_targets() -> Self {
        Self::default()
    }

    /// Two-target layout plus a third target.
    pub fn three_targets() -> Self {
        Self { targets: vec![code("bc"), code("eg"), code("gb")], ..Self::default() }
    }

    pub fn with_seed(&self, seed: u64) -> Self {
        Self { seed, ..self.clone() }
    }

    pub fn board_size(&self) -> (usize, usize) {
        (self.grid.board_w as usize, self.grid.board_h as usize)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let invalid = |m: String| Err(ConfigError::Invalid(m));
        self.grid.validate().map_err(|e| ConfigError::Invalid(e.to_string()))?;
        self.reference.validate().map_err(|e| ConfigError::Invalid(e.to_string()))?;
        self.detector.validate().map_err(ConfigError::Invalid)?;
        self.agent.validate()?;
        if self.grid.board_w.fract() != 0.0 || self.grid.board_h.fract() != 0.0 {
            return invalid("board size must be whole pixels".into());
        }
        if self.targets.is_empty() {
            return invalid("at least one target is required".into());
        }
        for t in &self.targets {
            t.check(&self.grid).map_err(|e| ConfigError::Invalid(e.to_string()))?;
        }
        if !(self.prompt.period > 0.0) {
            return invalid(format!("prompt period must be > 0, got {}", self.prompt.period));
        }
        if !(self.dt > 0.0 && self.dt <= self.sample_interval && self.sample_interval <= self.prompt.period) {
            return invalid(format!(
                "need 0 < dt <= sample_interval <= period, got {} / {} / {}",
                self.dt, self.sample_interval, self.prompt.period
            ));
        }
        if !(self.timeout > 0.0) {
            return invalid("timeout must be positive".into());
        }
        if !(self.brush_radius >= 1.0) {
            return invalid(format!("brush radius must be >= 1, got {}", self.brush_radius));
        }
        let s = self.start;
        if !(s.x >= 0.0 && s.y >= 0.0 && s.x <= self.grid.board_w && s.y <= self.grid.board_h) {
            return invalid(format!("start {s} lies outside the board"));
        }
        Ok(())
    }

    /// Applies one `key=value` setting.
    pub fn set(&mut self, key: &str, value: &str) -> Result<(), ConfigError> {
        fn num<T: std::str::FromStr>(key: &str, v: &str) -> Result<T, ConfigError> {
            v.parse().map_err(|_| ConfigError::Invalid(format!("bad value `{v}` for `{key}`")))
        }
        let v = value.trim();
        match key.trim() {
            "seed" => self.seed = num(key, v)?,
            "targets" => {
                self.targets = v
                    .split(',')
                    .filter(|s| !s.trim().is_empty())
                    .map(|s| s.parse().map_err(|e: crate::grid::GridError| ConfigError::Invalid(e.to_string())))
                    .collect::<Result<_, _>>()?
            }
            "period" => self.prompt.period = num(key, v)?,
            "speed" => self.agent.speed = num(key, v)?,
            "heading_noise_deg" => self.agent.heading_noise_deg = num(key, v)?,
            "reaction_latency" => self.agent.reaction_latency = num(key, v)?,
            "fill_jitter" => self.agent.fill_jitter = num(key, v)?,
            "fill_speed" => self.agent.fill_speed = num(key, v)?,
            "fill_margin" => self.agent.fill_margin = num(key, v)?,
            "fill_spacing" => self.agent.fill_spacing = num(key, v)?,
            "reversal_damping" => self.agent.reversal_damping = num(key, v)?,
            "min_speed" => self.agent.min_speed = num(key, v)?,
            "sigma" => self.detector.sigma = num(key, v)?,
            "dropout" => self.detector.dropout_p = num(key, v)?,
            "latency_ticks" => self.detector.latency_ticks = num(key, v)?,
            "rows" => self.grid.rows = num(key, v)?,
            "cols" => self.grid.cols = num(key, v)?,
            "board_w" => self.grid.board_w = num(key, v)?,
            "board_h" => self.grid.board_h = num(key, v)?,
            "ref_a" => self.reference.a_frac = num(key, v)?,
            "ref_b" => self.reference.b_frac = num(key, v)?,
            "brush_radius" => self.brush_radius = num(key, v)?,
            "start_x" => self.start.x = num(key, v)?,
            "start_y" => self.start.y = num(key, v)?,
            "dt" => self.dt = num(key, v)?,
            "sample_interval" => self.sample_interval = num(key, v)?,
            "timeout" => self.timeout = num(key, v)?,
            "completion_threshold" => self.thresholds.completion = num(key, v)?,
            "overflow_threshold" => self.thresholds.overflow = num(key, v)?,
            other => return Err(ConfigError::UnknownKey(other.to_string())),
        }
        Ok(())
    }

    /// Parses a `key=value` file on top of the defaults. `#` starts a
    /// comment.
    pub fn from_kv(text: &str) -> Result<Self, ConfigError> {
        let mut cfg = Self::default();
        for (n, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let Some((k, v)) = line.split_once('=') else {
                return Err(ConfigError::Parse { line: n + 1, message: format!("expected key=value, got `{line}`") });
            };
            cfg.set(k, v).map_err(|e| match e {
                ConfigError::UnknownKey(_) | ConfigError::Invalid(_) => {
                    ConfigError::Parse { line: n + 1, message: e.to_string() }
                }
                other => other,
            })?;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_kv(&self) -> String {
        let targets: Vec<String> = self.targets.iter().map(|c| c.to_string()).collect();
        let pairs: Vec<(&str, String)> = vec![
            ("seed", self.seed.to_string()),
            ("targets", targets.join(",")),
            ("period", self.prompt.period.to_string()),
            ("speed", self.agent.speed.to_string()),
            ("heading_noise_deg", self.agent.heading_noise_deg.to_string()),
            ("reaction_latency", self.agent.reaction_latency.to_string()),
            ("fill_jitter", self.agent.fill_jitter.to_string()),
            ("fill_speed", self.agent.fill_speed.to_string()),
            ("fill_margin", self.agent.fill_margin.to_string()),
            ("fill_spacing", self.agent.fill_spacing.to_string()),
            ("reversal_damping", self.agent.reversal_damping.to_string()),
            ("min_speed", self.agent.min_speed.to_string()),
            ("sigma", self.detector.sigma.to_string()),
            ("dropout", self.detector.dropout_p.to_string()),
            ("latency_ticks", self.detector.latency_ticks.to_string()),
            ("rows", self.grid.rows.to_string()),
            ("cols", self.grid.cols.to_string()),
            ("board_w", self.grid.board_w.to_string()),
            ("board_h", self.grid.board_h.to_string()),
            ("ref_a", self.reference.a_frac.to_string()),
            ("ref_b", self.reference.b_frac.to_string()),
            ("brush_radius", self.brush_radius.to_string()),
            ("start_x", self.start.x.to_string()),
            ("start_y", self.start.y.to_string()),
            ("dt", self.dt.to_string()),
            ("sample_interval", self.sample_interval.to_string()),
            ("timeout", self.timeout.to_string()),
            ("completion_threshold", self.thresholds.completion.to_string()),
            ("overflow_threshold", self.thresholds.overflow.to_string()),
        ];
        pairs.into_iter().map(|(k, v)| format!("{k}={v}\n")).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_are_valid() {
        SessionConfig::default().validate().unwrap();
        SessionConfig::three_targets().validate().unwrap();
    }

    #[test]
    fn kv_roundtrip() {
        let mut cfg = SessionConfig::three_targets();
        cfg.seed = 99;
        cfg.prompt.period = 2.0;
        cfg.detector.dropout_p = 0.2;
        assert_eq!(SessionConfig::from_kv(&cfg.to_kv()).unwrap(), cfg);
    }

    #[test]
    fn kv_errors() {
        assert!(matches!(SessionConfig::from_kv("seed=1\nbogus=3\n"), Err(ConfigError::Parse { line: 2, .. })));
        assert!(matches!(SessionConfig::from_kv("seed\n"), Err(ConfigError::Parse { line: 1, .. })));
        assert!(matches!(SessionConfig::from_kv("targets=zz\n"), Err(ConfigError::Invalid(_))));
        assert!(matches!(SessionConfig::from_kv("sample_interval=2\nperiod=1\n"), Err(ConfigError::Invalid(_))));
    }

    #[test]
    fn comments_and_spacing() {
        let cfg = SessionConfig::from_kv("# header\n seed = 7 # trailing\ntargets = AA, hh\n").unwrap();
        assert_eq!(cfg.seed, 7);
        assert_eq!(cfg.targets, vec![code("aa"), code("hh")]);
    }
}
