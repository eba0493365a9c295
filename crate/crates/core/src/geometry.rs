//! Board registration: pick the board corners out of four marker detections
//! and build the perspective transform into the canonical top-down frame.
//!
//! Matrices use the row-vector convention: a point `[u v 1]` is multiplied on
//! the left, `[x' y' w'] = [u v 1] · M`, so `M1.compose(M2)` applies `M1`
//! first. Every stored matrix is scaled so that `m[2][2] == 1`.

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Canonical board frame used when nothing else is configured.
pub const DEFAULT_CANONICAL_SIZE: CanonicalSize = CanonicalSize { width: 500.0, height: 300.0 };

const DET_EPS: f64 = 1e-12;
const AREA_EPS: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GeometryError {
    #[error("marker {0} missing from frame")]
    MissingMarker(u8),
    #[error("marker {0} detected more than once")]
    DuplicateMarker(u8),
    #[error("marker id {0} outside 1..=4")]
    InvalidMarkerId(u8),
    #[error("quad is degenerate (collinear, coincident or non-convex corners)")]
    DegenerateQuad,
    #[error("homography is singular")]
    SingularResult,
    #[error("point maps to infinity")]
    PointAtInfinity,
    #[error("no registration available and frame is incomplete")]
    NoRegistration,
    #[error("canonical size must be positive, got {0}x{1}")]
    InvalidCanonicalSize(f64, f64),
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
}

/// A point in board pixels, `+y` pointing down.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Point2 {
    pub x: f64,
    pub y: f64,
}

impl Point2 {
    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn distance(self, other: Point2) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }

    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }
}

impl fmt::Display for Point2 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {})", self.x, self.y)
    }
}

/// One decoded marker: its id and the four corners in decoder order.
///
/// Corner order is upper-left, upper-right, lower-left, lower-right of the
/// marker square, so corner 4 of the upper-left marker faces the board.
#[derive(Debug, Clone, PartialEq)]
pub struct MarkerDetection {
    pub id: u8,
    pub corners: [Point2; 4],
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CanonicalSize {
    pub width: f64,
    pub height: f64,
}

impl CanonicalSize {
    fn validate(self) -> Result<Self, GeometryError> {
        if self.width > 0.0 && self.height > 0.0 && self.width.is_finite() && self.height.is_finite()
        {
            Ok(self)
        } else {
            Err(GeometryError::InvalidCanonicalSize(self.width, self.height))
        }
    }

    /// The canonical rectangle in cyclic order starting at the origin.
    pub fn quad(self) -> [Point2; 4] {
        [
            Point2::new(0.0, 0.0),
            Point2::new(self.width, 0.0),
            Point2::new(self.width, self.height),
            Point2::new(0.0, self.height),
        ]
    }
}

/// Which way [`homography_unit_square`] maps.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    /// quad → unit square
    Forward,
    /// unit square → quad
    Inverse,
}

/// A 3×3 projective map under the row-vector convention.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Homography {
    m: [[f64; 3]; 3],
}

impl Homography {
    pub const IDENTITY: Homography = Homography {
        m: [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]],
    };

    /// Normalizes `m` so that `m[2][2] == 1` and checks invertibility.
    pub fn from_matrix(m: [[f64; 3]; 3]) -> Result<Self, GeometryError> {
        let scale = m[2][2];
        let max = m.iter().flatten().fold(0.0f64, |acc, v| acc.max(v.abs()));
        if !max.is_finite() || max == 0.0 || scale.abs() <= DET_EPS * max {
            return Err(GeometryError::SingularResult);
        }
        let mut out = m;
        for row in out.iter_mut() {
            for v in row.iter_mut() {
                *v /= scale;
            }
        }
        out[2][2] = 1.0;
        let h = Homography { m: out };
        if h.determinant().abs() <= DET_EPS || !h.determinant().is_finite() {
            return Err(GeometryError::SingularResult);
        }
        Ok(h)
    }

    /// Pure translation by `(dx, dy)`.
    pub fn translation(dx: f64, dy: f64) -> Self {
        Homography { m: [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [dx, dy, 1.0]] }
    }

    pub fn matrix(&self) -> [[f64; 3]; 3] {
        self.m
    }

    pub fn determinant(&self) -> f64 {
        let m = &self.m;
        m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1])
            - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
            + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
    }

    /// `self` followed by `then`: the matrix product `self · then`.
    pub fn compose(&self, then: &Homography) -> Result<Homography, GeometryError> {
        let a = &self.m;
        let b = &then.m;
        let mut out = [[0.0; 3]; 3];
        for (r, row) in out.iter_mut().enumerate() {
            for (c, v) in row.iter_mut().enumerate() {
                *v = a[r][0] * b[0][c] + a[r][1] * b[1][c] + a[r][2] * b[2][c];
            }
        }
        Homography::from_matrix(out)
    }

    pub fn inverse(&self) -> Result<Homography, GeometryError> {
        Homography::from_matrix(adjugate(&self.m))
    }

    /// Maps `p`; fails when the projective denominator vanishes.
    pub fn apply(&self, p: Point2) -> Result<Point2, GeometryError> {
        let m = &self.m;
        let w = m[0][2] * p.x + m[1][2] * p.y + m[2][2];
        if w.abs() <= DET_EPS {
            return Err(GeometryError::PointAtInfinity);
        }
        let x = m[0][0] * p.x + m[1][0] * p.y + m[2][0];
        let y = m[0][1] * p.x + m[1][1] * p.y + m[2][1];
        Ok(Point2::new(x / w, y / w))
    }
}

fn adjugate(m: &[[f64; 3]; 3]) -> [[f64; 3]; 3] {
    [
        [
            m[1][1] * m[2][2] - m[1][2] * m[2][1],
            m[0][2] * m[2][1] - m[0][1] * m[2][2],
            m[0][1] * m[1][2] - m[0][2] * m[1][1],
        ],
        [
            m[1][2] * m[2][0] - m[1][0] * m[2][2],
            m[0][0] * m[2][2] - m[0][2] * m[2][0],
            m[0][2] * m[1][0] - m[0][0] * m[1][2],
        ],
        [
            m[1][0] * m[2][1] - m[1][1] * m[2][0],
            m[0][1] * m[2][0] - m[0][0] * m[2][1],
            m[0][0] * m[1][1] - m[0][1] * m[1][0],
        ],
    ]
}

fn triangle_area(a: Point2, b: Point2, c: Point2) -> f64 {
    0.5 * ((b.x - a.x) * (c.y - a.y) - (c.x - a.x) * (b.y - a.y))
}

/// Rejects quads that are non-convex, self-intersecting or too thin.
///
/// `quad` is in cyclic order. The thinness test compares the smallest
/// corner triangle against the bounding box.
pub fn check_quad(quad: &[Point2; 4]) -> Result<(), GeometryError> {
    if quad.iter().any(|p| !p.is_finite()) {
        return Err(GeometryError::DegenerateQuad);
    }
    let (min_x, max_x) = quad.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), p| {
        (lo.min(p.x), hi.max(p.x))
    });
    let (min_y, max_y) = quad.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), p| {
        (lo.min(p.y), hi.max(p.y))
    });
    let bbox = (max_x - min_x) * (max_y - min_y);
    if bbox <= 0.0 {
        return Err(GeometryError::DegenerateQuad);
    }
    // Signed areas of consecutive-corner triangles; all must share a sign.
    let signed: Vec<f64> = (0..4)
        .map(|i| triangle_area(quad[i], quad[(i + 1) % 4], quad[(i + 2) % 4]))
        .collect();
    let min_abs = signed.iter().fold(f64::INFINITY, |acc, a| acc.min(a.abs()));
    if min_abs < AREA_EPS * bbox {
        return Err(GeometryError::DegenerateQuad);
    }
    let positive = signed.iter().filter(|a| **a > 0.0).count();
    if positive != 0 && positive != 4 {
        return Err(GeometryError::DegenerateQuad);
    }
    Ok(())
}

/// Homography between the unit square and `quad`.
///
/// `quad[0..4]` corresponds to `(0,0)`, `(1,0)`, `(1,1)`, `(0,1)`.
/// `Inverse` builds the square → quad map in closed form; `Forward` is its
/// inverse.
pub fn homography_unit_square(
    quad: &[Point2; 4],
    direction: Direction,
) -> Result<Homography, GeometryError> {
    check_quad(quad)?;
    let [p0, p1, p2, p3] = *quad;
    let sx = p0.x - p1.x + p2.x - p3.x;
    let sy = p0.y - p1.y + p2.y - p3.y;
    let dx1 = p1.x - p2.x;
    let dx2 = p3.x - p2.x;
    let dy1 = p1.y - p2.y;
    let dy2 = p3.y - p2.y;
    let den = dx1 * dy2 - dx2 * dy1;
    if den == 0.0 {
        return Err(GeometryError::DegenerateQuad);
    }
    let g = (sx * dy2 - dx2 * sy) / den;
    let h = (dx1 * sy - sx * dy1) / den;
    let a = p1.x - p0.x + g * p1.x;
    let b = p3.x - p0.x + h * p3.x;
    let d = p1.y - p0.y + g * p1.y;
    let e = p3.y - p0.y + h * p3.y;
    let square_to_quad = Homography::from_matrix([[a, d, g], [b, e, h], [p0.x, p0.y, 1.0]])
        .map_err(|_| GeometryError::DegenerateQuad)?;
    match direction {
        Direction::Inverse => Ok(square_to_quad),
        Direction::Forward => square_to_quad.inverse().map_err(|_| GeometryError::DegenerateQuad),
    }
}

/// Quad → quad map built through the unit square.
pub fn homography_between(
    from: &[Point2; 4],
    to: &[Point2; 4],
) -> Result<Homography, GeometryError> {
    let m1 = homography_unit_square(from, Direction::Forward)?;
    let m2 = homography_unit_square(to, Direction::Inverse)?;
    m1.compose(&m2)
}

/// Board corners `[UL, UR, LL, LR]` taken from the inner corner of each
/// marker: marker 1 gives its corner 4, marker 2 corner 3, marker 3 corner 2
/// and marker 4 corner 1.
pub fn select_board_corners(markers: &[MarkerDetection]) -> Result<[Point2; 4], GeometryError> {
    let mut slots: [Option<Point2>; 4] = [None; 4];
    for marker in markers {
        if !(1..=4).contains(&marker.id) {
            return Err(GeometryError::InvalidMarkerId(marker.id));
        }
        let i = usize::from(marker.id - 1);
        if slots[i].is_some() {
            return Err(GeometryError::DuplicateMarker(marker.id));
        }
        slots[i] = Some(marker.corners[3 - i]);
    }
    let mut out = [Point2::default(); 4];
    for (i, slot) in slots.iter().enumerate() {
        out[i] = slot.ok_or(GeometryError::MissingMarker(i as u8 + 1))?;
    }
    Ok(out)
}

/// A board registration snapshot.
#[derive(Debug, Clone, PartialEq)]
pub struct BoardRegistration {
    /// `[UL, UR, LL, LR]` in camera coordinates.
    pub corners: [Point2; 4],
    pub to_canonical: Homography,
    pub canonical: CanonicalSize,
    pub updated_at: f64,
}

impl BoardRegistration {
    /// Camera quad in cyclic order UL, UR, LR, LL.
    pub fn cyclic_quad(&self) -> [Point2; 4] {
        let [ul, ur, ll, lr] = self.corners;
        [ul, ur, lr, ll]
    }

    pub fn to_board(&self, camera: Point2) -> Result<Point2, GeometryError> {
        self.to_canonical.apply(camera)
    }
}

/// Refreshes the registration when all four markers are in the frame.
///
/// Frames missing a marker (or repeating one) leave `prev` untouched.
pub fn register_board(
    prev: Option<&BoardRegistration>,
    markers: &[MarkerDetection],
    canonical: CanonicalSize,
    now: f64,
) -> Result<BoardRegistration, GeometryError> {
    let canonical = canonical.validate()?;
    let corners = match select_board_corners(markers) {
        Ok(c) => c,
        Err(
            GeometryError::MissingMarker(_)
            | GeometryError::DuplicateMarker(_)
            | GeometryError::InvalidMarkerId(_),
        ) => return prev.cloned().ok_or(GeometryError::NoRegistration),
        Err(e) => return Err(e),
    };
    let [ul, ur, ll, lr] = corners;
    let to_canonical = homography_between(&[ul, ur, lr, ll], &canonical.quad())?;
    Ok(BoardRegistration { corners, to_canonical, canonical, updated_at: now })
}

/// One line of a marker-frame file.
#[derive(Debug, Clone, PartialEq)]
pub struct MarkerFrame {
    pub t: f64,
    pub markers: Vec<MarkerDetection>,
}

/// Parses `t id x1 y1 .. x4 y4 | id x1 y1 .. | ...` lines. Blank lines and
/// lines starting with `#` are skipped.
pub fn parse_marker_frames(text: &str) -> Result<Vec<MarkerFrame>, GeometryError> {
    let mut frames = Vec::new();
    for (n, line) in text.lines().enumerate() {
        let line_no = n + 1;
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let err = |message: String| GeometryError::Parse { line: line_no, message };
        let mut t = None;
        let mut markers = Vec::new();
        for (seg_idx, segment) in trimmed.split('|').enumerate() {
            let mut tokens: Vec<&str> = segment.split_whitespace().collect();
            if seg_idx == 0 {
                if tokens.is_empty() {
                    return Err(err("missing timestamp".into()));
                }
                let ts = tokens.remove(0);
                t = Some(ts.parse::<f64>().map_err(|_| err(format!("bad timestamp `{ts}`")))?);
                if tokens.is_empty() {
                    continue;
                }
            }
            if tokens.len() != 9 {
                return Err(err(format!("marker needs id and 8 coordinates, got {} tokens", tokens.len())));
            }
            let id: u8 = tokens[0].parse().map_err(|_| err(format!("bad marker id `{}`", tokens[0])))?;
            let mut vals = [0.0; 8];
            for (v, tok) in vals.iter_mut().zip(&tokens[1..]) {
                *v = tok.parse().map_err(|_| err(format!("bad coordinate `{tok}`")))?;
            }
            let corners = [
                Point2::new(vals[0], vals[1]),
                Point2::new(vals[2], vals[3]),
                Point2::new(vals[4], vals[5]),
                Point2::new(vals[6], vals[7]),
            ];
            markers.push(MarkerDetection { id, corners });
        }
        frames.push(MarkerFrame { t: t.unwrap_or_default(), markers });
    }
    Ok(frames)
}

pub fn format_marker_frame(frame: &MarkerFrame) -> String {
    let mut out = format!("{}", frame.t);
    for (i, m) in frame.markers.iter().enumerate() {
        if i > 0 {
            out.push_str(" |");
        }
        out.push_str(&format!(" {}", m.id));
        for c in &m.corners {
            out.push_str(&format!(" {} {}", c.x, c.y));
        }
    }
    out
}
