//! Brush-tip localization on an edge chain, plus the noisy detector channel
//! that stands in for the camera pipeline in simulation.

use std::collections::VecDeque;

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::Point2;

/// Curvature window used when no other value is configured.
pub const DEFAULT_WINDOW: usize = 5;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum TipError {
    #[error("chain has {len} points, window {window} needs at least {needed}")]
    ChainTooShort { len: usize, window: usize, needed: usize },
    #[error("window must be at least 1")]
    ZeroWindow,
    #[error("invalid chain: {0}")]
    InvalidChain(String),
    #[error("raster is empty")]
    EmptyRaster,
    #[error("no pixel exceeds the gradient threshold")]
    NoEdges,
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
}

/// An ordered run of edge points. Closed chains wrap from last to first.
#[derive(Debug, Clone, PartialEq)]
pub struct EdgeChain {
    points: Vec<Point2>,
    closed: bool,
}

impl EdgeChain {
    pub fn new(points: Vec<Point2>, closed: bool) -> Result<Self, TipError> {
        if let Some(i) = points.windows(2).position(|w| w[0] == w[1]) {
            return Err(TipError::InvalidChain(format!("points {i} and {} coincide", i + 1)));
        }
        if closed && points.len() > 1 && points.first() == points.last() {
            return Err(TipError::InvalidChain("closed chain repeats its first point".into()));
        }
        if let Some(p) = points.iter().find(|p| !p.is_finite()) {
            return Err(TipError::InvalidChain(format!("non-finite point {p}")));
        }
        Ok(Self { points, closed })
    }

    pub fn points(&self) -> &[Point2] {
        &self.points
    }

    pub fn is_closed(&self) -> bool {
        self.closed
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

/// Curvature values keyed by chain index.
#[derive(Debug, Clone, PartialEq)]
pub struct CurvatureProfile {
    pub values: Vec<(usize, f64)>,
}

impl CurvatureProfile {
    /// Index of the largest value; the lowest index wins ties.
    pub fn argmax(&self) -> Option<usize> {
        let mut best: Option<(usize, f64)> = None;
        for &(i, v) in &self.values {
            match best {
                Some((_, bv)) if v <= bv => {}
                _ => best = Some((i, v)),
            }
        }
        best.map(|(i, _)| i)
    }
}

/// Window curvature of every valid index.
///
/// For index `i` the value is the length of `Σ_{k=-j..=j} (p[i+k] - p[i])`.
/// Open chains skip the first and last `j` points; closed chains wrap.
pub fn curvature_profile(chain: &EdgeChain, window: usize) -> Result<CurvatureProfile, TipError> {
    if window == 0 {
        return Err(TipError::ZeroWindow);
    }
    let n = chain.len();
    let needed = 2 * window + 1;
    if n < needed {
        return Err(TipError::ChainTooShort { len: n, window, needed });
    }
    let pts = chain.points();
    let j = window as isize;
    let indices: Box<dyn Iterator<Item = usize>> = if chain.is_closed() {
        Box::new(0..n)
    } else {
        Box::new(window..n - window)
    };
    let values = indices
        .map(|i| {
            let here = pts[i];
            let (mut sx, mut sy) = (0.0, 0.0);
            for k in -j..=j {
                let idx = (i as isize + k).rem_euclid(n as isize) as usize;
                sx += pts[idx].x - here.x;
                sy += pts[idx].y - here.y;
            }
            (i, (sx * sx + sy * sy).sqrt())
        })
        .collect();
    Ok(CurvatureProfile { values })
}

/// Chain index of maximal curvature.
pub fn tip_index(chain: &EdgeChain, window: usize) -> Result<usize, TipError> {
    let profile = curvature_profile(chain, window)?;
    // A valid chain always yields at least one value.
    Ok(profile.argmax().expect("non-empty profile"))
}

/// The brush-tip center: the chain point of maximal curvature.
pub fn tip_center(chain: &EdgeChain, window: usize) -> Result<Point2, TipError> {
    Ok(chain.points()[tip_index(chain, window)?])
}

/// Row-major grayscale raster.
#[derive(Debug, Clone, PartialEq)]
pub struct GrayImage {
    width: usize,
    height: usize,
    data: Vec<f64>,
}

impl GrayImage {
    pub fn new(width: usize, height: usize, data: Vec<f64>) -> Result<Self, TipError> {
        if width == 0 || height == 0 {
            return Err(TipError::EmptyRaster);
        }
        if data.len() != width * height {
            return Err(TipError::InvalidChain(format!(
                "raster data has {} values, expected {}",
                data.len(),
                width * height
            )));
        }
        Ok(Self { width, height, data })
    }

    pub fn from_fn(width: usize, height: usize, f: impl Fn(usize, usize) -> f64) -> Result<Self, TipError> {
        let data = (0..height).flat_map(|y| (0..width).map(move |x| (x, y))).map(|(x, y)| f(x, y)).collect();
        Self::new(width, height, data)
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn get(&self, x: usize, y: usize) -> f64 {
        self.data[y * self.width + x]
    }

    /// Central-difference gradient magnitude, edges clamped.
    pub fn gradient_magnitude(&self) -> Vec<f64> {
        let (w, h) = (self.width, self.height);
        let mut out = Vec::with_capacity(w * h);
        for y in 0..h {
            for x in 0..w {
                let gx = (self.get((x + 1).min(w - 1), y) - self.get(x.saturating_sub(1), y)) / 2.0;
                let gy = (self.get(x, (y + 1).min(h - 1)) - self.get(x, y.saturating_sub(1))) / 2.0;
                out.push(gx.hypot(gy));
            }
        }
        out
    }
}

// Clockwise with +y down, starting east.
const DIRS: [(isize, isize); 8] = [(1, 0), (1, 1), (0, 1), (-1, 1), (-1, 0), (-1, -1), (0, -1), (1, -1)];

struct EdgeMask {
    width: usize,
    height: usize,
    on: Vec<bool>,
}

impl EdgeMask {
    fn at(&self, x: isize, y: isize) -> bool {
        x >= 0
            && y >= 0
            && (x as usize) < self.width
            && (y as usize) < self.height
            && self.on[y as usize * self.width + x as usize]
    }

    fn label_components(&self) -> Vec<Vec<(usize, usize)>> {
        let mut seen = vec![false; self.on.len()];
        let mut comps = Vec::new();
        for start in 0..self.on.len() {
            if !self.on[start] || seen[start] {
                continue;
            }
            let mut comp = Vec::new();
            let mut stack = vec![start];
            seen[start] = true;
            while let Some(idx) = stack.pop() {
                let (x, y) = (idx % self.width, idx / self.width);
                comp.push((x, y));
                for (dx, dy) in DIRS {
                    let (nx, ny) = (x as isize + dx, y as isize + dy);
                    if self.at(nx, ny) {
                        let nidx = ny as usize * self.width + nx as usize;
                        if !seen[nidx] {
                            seen[nidx] = true;
                            stack.push(nidx);
                        }
                    }
                }
            }
            comps.push(comp);
        }
        comps
    }

    /// Moore-neighbor trace of the outer boundary starting at `start`, which
    /// must be the topmost-leftmost pixel of its component.
    fn trace(&self, start: (usize, usize)) -> Vec<(usize, usize)> {
        let s = (start.0 as isize, start.1 as isize);
        let mut out = vec![start];
        // The west neighbor of a topmost-leftmost pixel is background.
        let mut cur = s;
        let mut back = (s.0 - 1, s.1);
        let initial_back = back;
        let limit = 4 * self.width * self.height + 8;
        for _ in 0..limit {
            let from = DIRS
                .iter()
                .position(|&(dx, dy)| (cur.0 + dx, cur.1 + dy) == back)
                .expect("backtrack is a neighbor");
            let mut next = None;
            let mut prev = back;
            for step in 1..=8 {
                let (dx, dy) = DIRS[(from + step) % 8];
                let cand = (cur.0 + dx, cur.1 + dy);
                if self.at(cand.0, cand.1) {
                    next = Some(cand);
                    break;
                }
                prev = cand;
            }
            let Some(n) = next else {
                // isolated pixel
                break;
            };
            back = prev;
            cur = n;
            if cur == s && back == initial_back {
                break;
            }
            if cur == s {
                // Revisiting the start from another side; keep going but do
                // not repeat it as a point.
                continue;
            }
            out.push((cur.0 as usize, cur.1 as usize));
        }
        out
    }
}

/// Traces the longest outer edge boundary in `raster`.
///
/// Pixels whose central-difference gradient magnitude exceeds `threshold`
/// form the edge map; each 8-connected component is traced from its
/// topmost-leftmost pixel. The returned chain is closed and uses pixel
/// coordinates (column, row).
pub fn trace_edge_chain(raster: &GrayImage, threshold: f64) -> Result<EdgeChain, TipError> {
    let mag = raster.gradient_magnitude();
    let mask = EdgeMask {
        width: raster.width(),
        height: raster.height(),
        on: mag.iter().map(|&m| m > threshold).collect(),
    };
    let comps = mask.label_components();
    if comps.is_empty() {
        return Err(TipError::NoEdges);
    }
    let mut best: Option<Vec<(usize, usize)>> = None;
    for comp in comps {
        // scan order puts the topmost-leftmost pixel first
        let start = comp.iter().copied().min_by_key(|&(x, y)| (y, x)).expect("non-empty");
        let traced = mask.trace(start);
        if best.as_ref().is_none_or(|b| traced.len() > b.len()) {
            best = Some(traced);
        }
    }
    let pts = best
        .expect("at least one component")
        .into_iter()
        .map(|(x, y)| Point2::new(x as f64, y as f64))
        .collect::<Vec<_>>();
    let mut dedup: Vec<Point2> = Vec::with_capacity(pts.len());
    for p in pts {
        if dedup.last() != Some(&p) {
            dedup.push(p);
        }
    }
    while dedup.len() > 1 && dedup.first() == dedup.last() {
        dedup.pop();
    }
    EdgeChain::new(dedup, true)
}

/// Parses the chain text format: a `closed:0|1` header then one `x y` pair
/// per line.
pub fn parse_edge_chain(text: &str) -> Result<EdgeChain, TipError> {
    let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
    let (_, header) = lines.next().ok_or(TipError::Parse { line: 1, message: "missing header".into() })?;
    let closed = match header.trim() {
        "closed:0" => false,
        "closed:1" => true,
        other => {
            return Err(TipError::Parse { line: 1, message: format!("bad header `{other}`") });
        }
    };
    let mut points = Vec::new();
    for (n, line) in lines {
        let err = |message: String| TipError::Parse { line: n + 1, message };
        let mut it = line.split_whitespace();
        let (Some(xs), Some(ys), None) = (it.next(), it.next(), it.next()) else {
            return Err(err(format!("expected `x y`, got `{}`", line.trim())));
        };
        let x = xs.parse().map_err(|_| err(format!("bad x `{xs}`")))?;
        let y = ys.parse().map_err(|_| err(format!("bad y `{ys}`")))?;
        points.push(Point2::new(x, y));
    }
    EdgeChain::new(points, closed)
}

pub fn format_edge_chain(chain: &EdgeChain) -> String {
    let mut out = format!("closed:{}\n", u8::from(chain.is_closed()));
    for p in chain.points() {
        out.push_str(&format!("{} {}\n", p.x, p.y));
    }
    out
}

/// A tip position reported by the detector.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TipDetection {
    pub point: Point2,
    /// Capture time.
    pub t: f64,
    pub confidence: f64,
}

/// Parametric detector degradation: isotropic Gaussian position noise,
/// frame dropout and a fixed delivery delay in simulator ticks.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DetectorNoiseModel {
    pub sigma: f64,
    pub dropout_p: f64,
    pub latency_ticks: u32,
}

impl DetectorNoiseModel {
    pub const PERFECT: DetectorNoiseModel = DetectorNoiseModel { sigma: 0.0, dropout_p: 0.0, latency_ticks: 0 };

    pub fn validate(&self) -> Result<(), String> {
        if !(self.sigma >= 0.0 && self.sigma.is_finite()) {
            return Err(format!("detector sigma must be >= 0, got {}", self.sigma));
        }
        if !(0.0..=1.0).contains(&self.dropout_p) {
            return Err(format!("dropout probability must be in [0, 1], got {}", self.dropout_p));
        }
        Ok(())
    }
}

impl Default for DetectorNoiseModel {
    fn default() -> Self {
        Self { sigma: 1.0, dropout_p: 0.05, latency_ticks: 1 }
    }
}

/// One detector draw at capture time `t`, ignoring latency.
///
/// Always consumes one uniform and two normal variates so that streams with
/// different dropout rates stay aligned draw for draw.
pub fn simulate_detection<R: Rng + ?Sized>(
    true_tip: Point2,
    model: &DetectorNoiseModel,
    rng: &mut R,
    t: f64,
) -> Option<TipDetection> {
    let u: f64 = rng.random();
    let zx: f64 = rng.sample(StandardNormal);
    let zy: f64 = rng.sample(StandardNormal);
    if u < model.dropout_p {
        return None;
    }
    let point = if model.sigma == 0.0 {
        true_tip
    } else {
        Point2::new(true_tip.x + model.sigma * zx, true_tip.y + model.sigma * zy)
    };
    Some(TipDetection { point, t, confidence: 1.0 - model.dropout_p })
}

/// Detector with delivery delay: each tick captures one frame and delivers
/// the frame captured `latency_ticks` ticks earlier.
#[derive(Debug, Clone)]
pub struct DetectorChannel<R> {
    model: DetectorNoiseModel,
    rng: R,
    pending: VecDeque<Option<TipDetection>>,
}

impl<R: Rng> DetectorChannel<R> {
    pub fn new(model: DetectorNoiseModel, rng: R) -> Self {
        Self { model, rng, pending: VecDeque::new() }
    }

    pub fn model(&self) -> &DetectorNoiseModel {
        &self.model
    }

    pub fn observe(&mut self, true_tip: Point2, t: f64) -> Option<TipDetection> {
        let d = simulate_detection(true_tip, &self.model, &mut self.rng, t);
        self.pending.push_back(d);
        if self.pending.len() > self.model.latency_ticks as usize {
            self.pending.pop_front().flatten()
        } else {
            None
        }
    }
}
