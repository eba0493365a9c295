//! Reference implementations used as oracles. They are written the slow,
//! obvious way and share no code with the crate.
#![allow(dead_code)]

use bnav_core::geometry::Point2;
use nalgebra::{SMatrix, SVector};
use rand::Rng;

/// Direct 8×8 solve for the row-vector homography taking `src[i]` to
/// `dst[i]`, with `m33 = 1`.
pub fn dlt(src: &[Point2; 4], dst: &[Point2; 4]) -> [[f64; 3]; 3] {
    let mut a = SMatrix::<f64, 8, 8>::zeros();
    let mut b = SVector::<f64, 8>::zeros();
    // unknowns: m11 m21 m31 m12 m22 m32 m13 m23
    for i in 0..4 {
        let (u, v) = (src[i].x, src[i].y);
        let (x, y) = (dst[i].x, dst[i].y);
        let r = 2 * i;
        a[(r, 0)] = u;
        a[(r, 1)] = v;
        a[(r, 2)] = 1.0;
        a[(r, 6)] = -x * u;
        a[(r, 7)] = -x * v;
        b[r] = x;
        a[(r + 1, 3)] = u;
        a[(r + 1, 4)] = v;
        a[(r + 1, 5)] = 1.0;
        a[(r + 1, 6)] = -y * u;
        a[(r + 1, 7)] = -y * v;
        b[r + 1] = y;
    }
    let s = a.full_piv_lu().solve(&b).expect("non-singular system");
    [[s[0], s[3], s[6]], [s[1], s[4], s[7]], [s[2], s[5], 1.0]]
}

pub fn apply(m: &[[f64; 3]; 3], p: Point2) -> Point2 {
    let w = m[0][2] * p.x + m[1][2] * p.y + m[2][2];
    Point2::new(
        (m[0][0] * p.x + m[1][0] * p.y + m[2][0]) / w,
        (m[0][1] * p.x + m[1][1] * p.y + m[2][1]) / w,
    )
}

fn cross(o: Point2, a: Point2, b: Point2) -> f64 {
    (a.x - o.x) * (b.y - o.y) - (a.y - o.y) * (b.x - o.x)
}

pub fn is_strictly_convex(q: &[Point2; 4]) -> bool {
    let c: Vec<f64> = (0..4).map(|i| cross(q[i], q[(i + 1) % 4], q[(i + 2) % 4])).collect();
    c.iter().all(|&v| v > 0.0) || c.iter().all(|&v| v < 0.0)
}

/// A random clockwise-on-screen convex quad, roughly the shape a camera sees
/// a board at: one corner per quadrant around a center.
pub fn random_convex_quad<R: Rng>(rng: &mut R) -> [Point2; 4] {
    loop {
        let cx = rng.random_range(250.0..390.0);
        let cy = rng.random_range(180.0..300.0);
        let mut q = [Point2::default(); 4];
        for (k, p) in q.iter_mut().enumerate() {
            let base = -3.0 * std::f64::consts::FRAC_PI_4 + k as f64 * std::f64::consts::FRAC_PI_2;
            let a = base + rng.random_range(-0.5..0.5);
            let r = rng.random_range(80.0..230.0);
            *p = Point2::new(cx + r * a.cos(), cy + r * a.sin());
        }
        let area = (0..4).map(|i| cross(q[0], q[i], q[(i + 1) % 4])).sum::<f64>().abs() / 2.0;
        let min_turn = (0..4).map(|i| cross(q[i], q[(i + 1) % 4], q[(i + 2) % 4]).abs()).fold(f64::INFINITY, f64::min);
        if is_strictly_convex(&q) && area > 5_000.0 && min_turn > 2_000.0 {
            return q;
        }
    }
}

/// Window curvature by two plain nested loops, summing in ascending offset
/// order. Returns `(index, value)` for every valid index.
pub fn curvature_double_loop(points: &[Point2], closed: bool, j: usize) -> Vec<(usize, f64)> {
    let n = points.len();
    let mut out = Vec::new();
    for i in 0..n {
        if !closed && (i < j || i + j >= n) {
            continue;
        }
        let mut sx = 0.0;
        let mut sy = 0.0;
        for step in 0..=2 * j {
            let idx = (i + n * (j + 1) + step - j) % n;
            sx += points[idx].x - points[i].x;
            sy += points[idx].y - points[i].y;
        }
        out.push((i, (sx * sx + sy * sy).sqrt()));
    }
    out
}

/// `|dx| <= a/2 && |dy| <= b/2` relative to the cell center.
pub fn in_reference_rect(tip: Point2, center: Point2, a: f64, b: f64) -> bool {
    (tip.x - center.x).abs() * 2.0 <= a && (tip.y - center.y).abs() * 2.0 <= b
}

/// [`random_convex_quad`] rescaled into the unit box, where homography
/// entries stay moderate and absolute tolerances are meaningful.
pub fn random_unit_quad<R: Rng>(rng: &mut R) -> [Point2; 4] {
    random_convex_quad(rng).map(|p| Point2::new(p.x / 640.0, p.y / 480.0))
}

/// Largest element-wise difference, absolute and relative to the largest
/// entry of `a`.
pub fn matrix_diff(a: &[[f64; 3]; 3], b: &[[f64; 3]; 3]) -> (f64, f64) {
    let scale = a.iter().flatten().fold(0.0f64, |s, v| s.max(v.abs()));
    let abs = a.iter().flatten().zip(b.iter().flatten()).fold(0.0f64, |m, (x, y)| m.max((x - y).abs()));
    (abs, abs / scale)
}

/// A camera view of a board in image-normalized coordinates: a rectangle
/// with each corner displaced by up to 20% of the side along each axis.
pub fn random_board_view<R: Rng>(rng: &mut R) -> [Point2; 4] {
    loop {
        let (x0, y0) = (rng.random_range(0.05..0.3), rng.random_range(0.05..0.3));
        let (w, h) = (rng.random_range(0.4..0.65), rng.random_range(0.4..0.65));
        let base = [(x0, y0), (x0 + w, y0), (x0 + w, y0 + h), (x0, y0 + h)];
        let q = base.map(|(x, y)| Point2::new(x + rng.random_range(-0.2..0.2) * w, y + rng.random_range(-0.2..0.2) * h));
        if is_strictly_convex(&q) {
            return q;
        }
    }
}
