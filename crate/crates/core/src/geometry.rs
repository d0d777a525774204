//! Quads, homographies, bounded corner perturbation, mask warping and
//! polygon tightening.

use std::ops::{Add, Mul, Sub};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::mask::BinaryMask;

/// Fraction of the quad height kept clear on each side of laid-out text.
pub const LAYOUT_PADDING: f64 = 0.05;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GeometryError {
    #[error("degenerate configuration: {0}")]
    DegenerateConfiguration(String),
    #[error("point maps to infinity (w = {0:e})")]
    PointAtInfinity(f64),
    #[error("homography is not invertible")]
    Singular,
    #[error("text extent {text_w:.2}x{text_h:.2} does not fit in the polygon")]
    ExtentTooLarge { text_w: f64, text_h: f64 },
    #[error("quad has zero area")]
    DegenerateQuad,
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub const fn new(x: f64, y: f64) -> Self {
        Point { x, y }
    }

    pub fn dot(self, o: Point) -> f64 {
        self.x * o.x + self.y * o.y
    }

    pub fn cross(self, o: Point) -> f64 {
        self.x * o.y - self.y * o.x
    }

    pub fn length(self) -> f64 {
        self.x.hypot(self.y)
    }

    pub fn distance(self, o: Point) -> f64 {
        (self - o).length()
    }

    pub fn lerp(self, o: Point, t: f64) -> Point {
        self + (o - self) * t
    }
}

impl Add for Point {
    type Output = Point;
    fn add(self, o: Point) -> Point {
        Point::new(self.x + o.x, self.y + o.y)
    }
}

impl Sub for Point {
    type Output = Point;
    fn sub(self, o: Point) -> Point {
        Point::new(self.x - o.x, self.y - o.y)
    }
}

impl Mul<f64> for Point {
    type Output = Point;
    fn mul(self, s: f64) -> Point {
        Point::new(self.x * s, self.y * s)
    }
}

/// Four corners in canvas pixels, ordered TL, TR, BR, BL.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Quad {
    pub corners: [Point; 4],
}

impl Quad {
    pub fn new(corners: [Point; 4]) -> Self {
        Quad { corners }
    }

    pub fn from_rect(x0: f64, y0: f64, x1: f64, y1: f64) -> Self {
        Quad::new([Point::new(x0, y0), Point::new(x1, y0), Point::new(x1, y1), Point::new(x0, y1)])
    }

    /// Parses `x0,y0,x1,y1,x2,y2,x3,y3` (TL, TR, BR, BL).
    pub fn parse(s: &str) -> Result<Self, String> {
        let v: Vec<f64> = s
            .split(',')
            .map(|t| t.trim().parse::<f64>().map_err(|e| format!("bad quad coordinate '{t}': {e}")))
            .collect::<Result<_, _>>()?;
        Self::from_flat(&v)
    }

    pub fn from_flat(v: &[f64]) -> Result<Self, String> {
        if v.len() != 8 {
            return Err(format!("a quad needs 8 numbers, got {}", v.len()));
        }
        if v.iter().any(|c| !c.is_finite()) {
            return Err("quad coordinates must be finite".into());
        }
        Ok(Quad::new([Point::new(v[0], v[1]), Point::new(v[2], v[3]), Point::new(v[4], v[5]), Point::new(v[6], v[7])]))
    }

    pub fn to_flat(&self) -> [f64; 8] {
        let c = &self.corners;
        [c[0].x, c[0].y, c[1].x, c[1].y, c[2].x, c[2].y, c[3].x, c[3].y]
    }

    /// Shoelace area; positive for TL, TR, BR, BL in y-down image coordinates.
    pub fn signed_area(&self) -> f64 {
        polygon_signed_area(&self.corners)
    }

    pub fn is_degenerate(&self) -> bool {
        self.signed_area().abs() < 1e-9
    }

    pub fn centroid(&self) -> Point {
        let c = &self.corners;
        Point::new((c[0].x + c[1].x + c[2].x + c[3].x) / 4.0, (c[0].y + c[1].y + c[2].y + c[3].y) / 4.0)
    }

    pub fn is_convex(&self) -> bool {
        let c = &self.corners;
        let mut sign = 0.0f64;
        for i in 0..4 {
            let z = (c[(i + 1) % 4] - c[i]).cross(c[(i + 2) % 4] - c[(i + 1) % 4]);
            if z.abs() < 1e-12 {
                continue;
            }
            if sign == 0.0 {
                sign = z.signum();
            } else if z.signum() != sign {
                return false;
            }
        }
        sign != 0.0
    }

    pub fn contains(&self, p: Point) -> bool {
        point_in_polygon(&self.corners, p)
    }

    /// `(xmin, ymin, xmax, ymax)`.
    pub fn bounds(&self) -> (f64, f64, f64, f64) {
        polygon_bounds(&self.corners)
    }

    pub fn max_side(&self) -> f64 {
        (0..4).map(|i| self.corners[i].distance(self.corners[(i + 1) % 4])).fold(0.0, f64::max)
    }

    /// Mean length of the top and bottom edges.
    pub fn width(&self) -> f64 {
        let c = &self.corners;
        (c[0].distance(c[1]) + c[3].distance(c[2])) / 2.0
    }

    /// Mean length of the left and right edges.
    pub fn height(&self) -> f64 {
        let c = &self.corners;
        (c[0].distance(c[3]) + c[1].distance(c[2])) / 2.0
    }

    /// Unit vector along the baseline edge BL → BR.
    pub fn baseline_dir(&self) -> Option<Point> {
        let d = self.corners[2] - self.corners[3];
        let len = d.length();
        (len > 1e-12).then(|| d * (1.0 / len))
    }

    pub fn within(&self, width: f64, height: f64) -> bool {
        self.corners.iter().all(|p| p.x >= 0.0 && p.y >= 0.0 && p.x <= width && p.y <= height)
    }

    pub fn map(&self, f: impl FnMut(Point) -> Point) -> Quad {
        Quad::new(self.corners.map(f))
    }
}

pub fn polygon_signed_area(pts: &[Point]) -> f64 {
    let n = pts.len();
    (0..n).map(|i| pts[i].cross(pts[(i + 1) % n])).sum::<f64>() / 2.0
}

pub fn polygon_bounds(pts: &[Point]) -> (f64, f64, f64, f64) {
    pts.iter().fold((f64::INFINITY, f64::INFINITY, f64::NEG_INFINITY, f64::NEG_INFINITY), |b, p| {
        (b.0.min(p.x), b.1.min(p.y), b.2.max(p.x), b.3.max(p.y))
    })
}

/// Nonzero-winding point-in-polygon test; points on an edge count as inside.
pub fn point_in_polygon(pts: &[Point], p: Point) -> bool {
    let n = pts.len();
    let mut winding = 0i32;
    for i in 0..n {
        let a = pts[i];
        let b = pts[(i + 1) % n];
        let cross = (b - a).cross(p - a);
        if cross == 0.0 && p.x >= a.x.min(b.x) && p.x <= a.x.max(b.x) && p.y >= a.y.min(b.y) && p.y <= a.y.max(b.y) {
            return true;
        }
        if a.y <= p.y {
            if b.y > p.y && cross > 0.0 {
                winding += 1;
            }
        } else if b.y <= p.y && cross < 0.0 {
            winding -= 1;
        }
    }
    winding != 0
}

fn segments_intersect(a: Point, b: Point, c: Point, d: Point) -> bool {
    let d1 = (b - a).cross(c - a);
    let d2 = (b - a).cross(d - a);
    let d3 = (d - c).cross(a - c);
    let d4 = (d - c).cross(b - c);
    if ((d1 > 0.0 && d2 < 0.0) || (d1 < 0.0 && d2 > 0.0)) && ((d3 > 0.0 && d4 < 0.0) || (d3 < 0.0 && d4 > 0.0)) {
        return true;
    }
    let on = |p: Point, q: Point, r: Point, z: f64| {
        z == 0.0 && r.x >= p.x.min(q.x) && r.x <= p.x.max(q.x) && r.y >= p.y.min(q.y) && r.y <= p.y.max(q.y)
    };
    on(a, b, c, d1) || on(a, b, d, d2) || on(c, d, a, d3) || on(c, d, b, d4)
}

/// True when no two non-adjacent edges touch.
pub fn polygon_is_simple(pts: &[Point]) -> bool {
    let n = pts.len();
    if n < 3 {
        return false;
    }
    for i in 0..n {
        for j in (i + 1)..n {
            let adjacent = j == i + 1 || (i == 0 && j == n - 1);
            if adjacent {
                continue;
            }
            if segments_intersect(pts[i], pts[(i + 1) % n], pts[j], pts[(j + 1) % n]) {
                return false;
            }
        }
    }
    true
}

/// A 3×3 projective transform, normalized so that `m[2][2] == 1` whenever
/// that entry is nonzero. Serializes as a row-major array of 9 floats.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(into = "[f64; 9]", from = "[f64; 9]")]
pub struct Homography {
    pub m: [[f64; 3]; 3],
}

impl From<Homography> for [f64; 9] {
    fn from(h: Homography) -> Self {
        h.to_row_major()
    }
}

impl From<[f64; 9]> for Homography {
    fn from(v: [f64; 9]) -> Self {
        Homography::from_row_major(v)
    }
}

impl Homography {
    pub const IDENTITY: Homography = Homography { m: [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]] };

    pub fn new(m: [[f64; 3]; 3]) -> Self {
        Homography { m }.normalized()
    }

    pub fn translation(tx: f64, ty: f64) -> Self {
        Homography { m: [[1.0, 0.0, tx], [0.0, 1.0, ty], [0.0, 0.0, 1.0]] }
    }

    pub fn scale(sx: f64, sy: f64) -> Self {
        Homography { m: [[sx, 0.0, 0.0], [0.0, sy, 0.0], [0.0, 0.0, 1.0]] }
    }

    pub fn from_row_major(v: [f64; 9]) -> Self {
        Homography::new([[v[0], v[1], v[2]], [v[3], v[4], v[5]], [v[6], v[7], v[8]]])
    }

    pub fn to_row_major(&self) -> [f64; 9] {
        let m = &self.m;
        [m[0][0], m[0][1], m[0][2], m[1][0], m[1][1], m[1][2], m[2][0], m[2][1], m[2][2]]
    }

    fn normalized(self) -> Self {
        let s = self.m[2][2];
        if s == 0.0 || s == 1.0 {
            return self;
        }
        Homography { m: self.m.map(|row| row.map(|v| v / s)) }
    }

    pub fn determinant(&self) -> f64 {
        let m = &self.m;
        m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1]) - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
            + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
    }

    pub fn inverse(&self) -> Result<Homography, GeometryError> {
        let m = &self.m;
        let det = self.determinant();
        if det.abs() <= 1e-12 || !det.is_finite() {
            return Err(GeometryError::Singular);
        }
        let inv = 1.0 / det;
        Ok(Homography::new([
            [
                (m[1][1] * m[2][2] - m[1][2] * m[2][1]) * inv,
                (m[0][2] * m[2][1] - m[0][1] * m[2][2]) * inv,
                (m[0][1] * m[1][2] - m[0][2] * m[1][1]) * inv,
            ],
            [
                (m[1][2] * m[2][0] - m[1][0] * m[2][2]) * inv,
                (m[0][0] * m[2][2] - m[0][2] * m[2][0]) * inv,
                (m[0][2] * m[1][0] - m[0][0] * m[1][2]) * inv,
            ],
            [
                (m[1][0] * m[2][1] - m[1][1] * m[2][0]) * inv,
                (m[0][1] * m[2][0] - m[0][0] * m[2][1]) * inv,
                (m[0][0] * m[1][1] - m[0][1] * m[1][0]) * inv,
            ],
        ]))
    }

    /// `self · other`: applies `other` first, then `self`.
    pub fn compose(&self, other: &Homography) -> Homography {
        let mut out = [[0.0; 3]; 3];
        for (i, row) in out.iter_mut().enumerate() {
            for (j, v) in row.iter_mut().enumerate() {
                *v = (0..3).map(|k| self.m[i][k] * other.m[k][j]).sum();
            }
        }
        Homography::new(out)
    }

    pub fn apply(&self, p: Point) -> Result<Point, GeometryError> {
        apply_homography(self, p)
    }
}

pub fn apply_homography(h: &Homography, p: Point) -> Result<Point, GeometryError> {
    let m = &h.m;
    let w = m[2][0] * p.x + m[2][1] * p.y + m[2][2];
    if w.abs() < 1e-12 {
        return Err(GeometryError::PointAtInfinity(w));
    }
    Ok(Point::new((m[0][0] * p.x + m[0][1] * p.y + m[0][2]) / w, (m[1][0] * p.x + m[1][1] * p.y + m[1][2]) / w))
}

fn check_corners(q: &Quad, which: &str) -> Result<(), GeometryError> {
    let c = &q.corners;
    for i in 0..4 {
        let a = c[i];
        let b = c[(i + 1) % 4];
        let d = c[(i + 2) % 4];
        let scale = (b - a).length() * (d - a).length();
        if scale == 0.0 || ((b - a).cross(d - a)).abs() <= 1e-12 * scale {
            return Err(GeometryError::DegenerateConfiguration(format!("three {which} corners are collinear")));
        }
    }
    Ok(())
}

// Similarity transform moving the centroid to the origin with mean distance √2.
fn normalizing_transform(q: &Quad) -> Homography {
    let c = q.centroid();
    let mean = q.corners.iter().map(|p| p.distance(c)).sum::<f64>() / 4.0;
    let s = std::f64::consts::SQRT_2 / mean;
    Homography { m: [[s, 0.0, -s * c.x], [0.0, s, -s * c.y], [0.0, 0.0, 1.0]] }
}

/// Direct linear transform with `m[2][2]` fixed to 1: the 8×8 system for the
/// remaining entries is solved by Gaussian elimination with partial pivoting,
/// on Hartley-normalized coordinates.
pub fn solve_homography(src: &Quad, dst: &Quad) -> Result<Homography, GeometryError> {
    check_corners(src, "source")?;
    check_corners(dst, "destination")?;
    let ts = normalizing_transform(src);
    let td = normalizing_transform(dst);
    let s = src.map(|p| apply_homography(&ts, p).expect("affine"));
    let d = dst.map(|p| apply_homography(&td, p).expect("affine"));

    let mut a = [[0.0f64; 9]; 8];
    for i in 0..4 {
        let (x, y) = (s.corners[i].x, s.corners[i].y);
        let (u, v) = (d.corners[i].x, d.corners[i].y);
        a[2 * i] = [x, y, 1.0, 0.0, 0.0, 0.0, -x * u, -y * u, u];
        a[2 * i + 1] = [0.0, 0.0, 0.0, x, y, 1.0, -x * v, -y * v, v];
    }
    let h = solve_augmented(a).ok_or_else(|| GeometryError::DegenerateConfiguration("singular DLT system".into()))?;
    let hn = Homography { m: [[h[0], h[1], h[2]], [h[3], h[4], h[5]], [h[6], h[7], 1.0]] };
    let full = td.inverse()?.compose(&hn).compose(&ts);
    if full.m[2][2] == 0.0 || full.determinant().abs() <= 1e-12 {
        return Err(GeometryError::DegenerateConfiguration("resulting homography is singular".into()));
    }
    Ok(full)
}

fn solve_augmented(mut a: [[f64; 9]; 8]) -> Option<[f64; 8]> {
    for col in 0..8 {
        let pivot = (col..8).max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))?;
        if a[pivot][col].abs() < 1e-14 {
            return None;
        }
        a.swap(col, pivot);
        for row in (col + 1)..8 {
            let f = a[row][col] / a[col][col];
            if f != 0.0 {
                for k in col..9 {
                    a[row][k] -= f * a[col][k];
                }
            }
        }
    }
    let mut x = [0.0; 8];
    for row in (0..8).rev() {
        let sum: f64 = ((row + 1)..8).map(|k| a[row][k] * x[k]).sum();
        x[row] = (a[row][8] - sum) / a[row][row];
    }
    x.iter().all(|v| v.is_finite()).then_some(x)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PerturbationConfig {
    /// Maximum per-coordinate corner displacement in pixels.
    pub epsilon: f64,
    pub seed: u64,
}

impl Default for PerturbationConfig {
    fn default() -> Self {
        PerturbationConfig { epsilon: 5.0, seed: 0 }
    }
}

/// Moves every corner coordinate by an independent uniform offset in
/// `[-epsilon, epsilon]`, then clamps to `[0, width] × [0, height]`.
pub fn perturb_quad(q: &Quad, cfg: &PerturbationConfig, bounds: (f64, f64)) -> Quad {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    perturb_quad_with(q, cfg.epsilon, bounds, &mut rng)
}

pub fn perturb_quad_with(q: &Quad, epsilon: f64, bounds: (f64, f64), rng: &mut impl Rng) -> Quad {
    let eps = epsilon.max(0.0);
    let mut jitter = |v: f64, hi: f64| {
        let d = if eps > 0.0 { rng.random_range(-eps..=eps) } else { 0.0 };
        (v + d).clamp(0.0, hi)
    };
    q.map(|p| {
        let x = jitter(p.x, bounds.0);
        let y = jitter(p.y, bounds.1);
        Point::new(x, y)
    })
}

/// Inverse-maps each destination pixel center through `h⁻¹` and samples the
/// source by nearest neighbour; samples outside the source are background.
pub fn warp_mask(mask: &BinaryMask, h: &Homography) -> Result<BinaryMask, GeometryError> {
    let inv = h.inverse()?;
    let (w, hgt) = mask.dims();
    let mut out = BinaryMask::new(w, hgt);
    for y in 0..hgt {
        for x in 0..w {
            let Ok(src) = inv.apply(Point::new(x as f64 + 0.5, y as f64 + 0.5)) else {
                continue;
            };
            if !src.x.is_finite() || !src.y.is_finite() {
                continue;
            }
            if mask.get_signed(src.x.floor() as i64, src.y.floor() as i64) {
                out.set(x, y, true);
            }
        }
    }
    Ok(out)
}

/// Shrinks `p` along its baseline so its width equals the text width plus
/// the layout padding on both sides. The result keeps the centre and the top
/// and bottom edge lines of `p`, and its corners lie on the edges of `p`.
pub fn tighten_polygon(p: &Quad, text_extent: (f64, f64)) -> Result<Quad, GeometryError> {
    if p.is_degenerate() {
        return Err(GeometryError::DegenerateQuad);
    }
    let (text_w, text_h) = text_extent;
    let width = p.width();
    let height = p.height();
    let pad = LAYOUT_PADDING * height;
    let target = text_w + 2.0 * pad;
    let slack = 1e-9 * width.max(height).max(1.0);
    if target > width + slack || text_h + 2.0 * pad > height + slack {
        return Err(GeometryError::ExtentTooLarge { text_w, text_h });
    }
    let ratio = target / width;
    if ratio >= 1.0 - 1e-12 {
        return Ok(*p);
    }
    let t = (1.0 - ratio) / 2.0;
    let [tl, tr, br, bl] = p.corners;
    Ok(Quad::new([tl.lerp(tr, t), tr.lerp(tl, t), br.lerp(bl, t), bl.lerp(br, t)]))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn quad(v: [f64; 8]) -> Quad {
        Quad::from_flat(&v).unwrap()
    }

    #[test]
    fn identity_when_src_equals_dst() {
        let q = quad([10.0, 12.0, 200.0, 8.0, 210.0, 150.0, 5.0, 160.0]);
        let h = solve_homography(&q, &q).unwrap();
        for (a, b) in h.to_row_major().iter().zip(Homography::IDENTITY.to_row_major()) {
            assert!((a - b).abs() < 1e-12, "{h:?}");
        }
    }

    #[test]
    fn translation_recovered() {
        let q = quad([10.0, 12.0, 200.0, 8.0, 210.0, 150.0, 5.0, 160.0]);
        let t = q.map(|p| Point::new(p.x + 7.0, p.y - 3.0));
        let h = solve_homography(&q, &t).unwrap();
        let want = Homography::translation(7.0, -3.0).to_row_major();
        for (a, b) in h.to_row_major().iter().zip(want) {
            assert!((a - b).abs() < 1e-12, "{h:?}");
        }
    }

    #[test]
    fn collinear_corners_rejected() {
        let bad = quad([0.0, 0.0, 10.0, 0.0, 20.0, 0.0, 0.0, 10.0]);
        let good = Quad::from_rect(0.0, 0.0, 10.0, 10.0);
        assert!(matches!(solve_homography(&bad, &good), Err(GeometryError::DegenerateConfiguration(_))));
        assert!(matches!(solve_homography(&good, &bad), Err(GeometryError::DegenerateConfiguration(_))));
    }

    #[test]
    fn apply_examples() {
        assert_eq!(apply_homography(&Homography::IDENTITY, Point::new(3.5, 2.0)).unwrap(), Point::new(3.5, 2.0));
        assert_eq!(apply_homography(&Homography::scale(2.0, 2.0), Point::new(1.0, 1.0)).unwrap(), Point::new(2.0, 2.0));
        let h = Homography::from_row_major([1.0, 0.0, 0.0, 0.0, 1.0, 0.0, 1.0, 0.0, 1.0]);
        assert!(matches!(apply_homography(&h, Point::new(-1.0, 5.0)), Err(GeometryError::PointAtInfinity(_))));
    }

    #[test]
    fn homography_serializes_row_major() {
        let h = Homography::translation(7.0, -3.0);
        let json = serde_json::to_string(&h).unwrap();
        assert_eq!(json, "[1.0,0.0,7.0,0.0,1.0,-3.0,0.0,0.0,1.0]");
        let back: Homography = serde_json::from_str(&json).unwrap();
        assert_eq!(back, h);
    }

    #[test]
    fn zero_epsilon_is_identity() {
        let q = quad([10.25, 12.5, 200.0, 8.0, 210.0, 150.0, 5.0, 160.0]);
        for seed in 0..50 {
            assert_eq!(perturb_quad(&q, &PerturbationConfig { epsilon: 0.0, seed }, (512.0, 512.0)), q);
        }
    }

    #[test]
    fn perturbation_is_seed_deterministic() {
        let q = Quad::from_rect(100.0, 100.0, 300.0, 200.0);
        let cfg = PerturbationConfig { epsilon: 3.0, seed: 42 };
        let a = perturb_quad(&q, &cfg, (512.0, 512.0));
        let b = perturb_quad(&q, &cfg, (512.0, 512.0));
        assert_eq!(a.to_flat().map(f64::to_bits), b.to_flat().map(f64::to_bits));
        assert_ne!(a, q);
    }

    #[test]
    fn perturbation_clamped_to_canvas() {
        let q = Quad::from_rect(0.0, 0.0, 512.0, 512.0);
        for seed in 0..200 {
            let p = perturb_quad(&q, &PerturbationConfig { epsilon: 5.0, seed }, (512.0, 512.0));
            assert!(p.within(512.0, 512.0));
        }
    }

    #[test]
    fn warp_identity_and_translation() {
        let mut m = BinaryMask::new(40, 30);
        for (x, y) in [(3, 4), (10, 10), (25, 29), (39, 0)] {
            m.set(x, y, true);
        }
        assert_eq!(warp_mask(&m, &Homography::IDENTITY).unwrap(), m);
        let shifted = warp_mask(&m, &Homography::translation(10.0, 0.0)).unwrap();
        let mut want = BinaryMask::new(40, 30);
        for (x, y) in m.ink_pixels() {
            if x + 10 < 40 {
                want.set(x + 10, y, true);
            }
        }
        assert_eq!(shifted, want);
    }

    #[test]
    fn tighten_examples() {
        let p = Quad::from_rect(100.0, 100.0, 300.0, 140.0);
        let pad = LAYOUT_PADDING * 40.0;
        // text filling the padded interior leaves the quad unchanged
        assert_eq!(tighten_polygon(&p, (200.0 - 2.0 * pad, 40.0 - 2.0 * pad)).unwrap(), p);
        // half-width text: concentric rectangle of half width plus padding
        let half = tighten_polygon(&p, (100.0, 20.0)).unwrap();
        let w = 100.0 + 2.0 * pad;
        let want = Quad::from_rect(200.0 - w / 2.0, 100.0, 200.0 + w / 2.0, 140.0);
        for (a, b) in half.to_flat().iter().zip(want.to_flat()) {
            assert!((a - b).abs() < 1e-9);
        }
        assert!(half.corners.iter().all(|&c| p.contains(c)));
        assert!(matches!(tighten_polygon(&p, (250.0, 20.0)), Err(GeometryError::ExtentTooLarge { .. })));
    }

    #[test]
    fn simple_polygon_check() {
        let square = [Point::new(0.0, 0.0), Point::new(10.0, 0.0), Point::new(10.0, 10.0), Point::new(0.0, 10.0)];
        assert!(polygon_is_simple(&square));
        let bowtie = [Point::new(0.0, 0.0), Point::new(10.0, 10.0), Point::new(10.0, 0.0), Point::new(0.0, 10.0)];
        assert!(!polygon_is_simple(&bowtie));
    }

    #[test]
    fn quad_parse() {
        let q = Quad::parse("10,10,90,10,90,90,10,90").unwrap();
        assert_eq!(q, Quad::from_rect(10.0, 10.0, 90.0, 90.0));
        assert!(Quad::parse("1,2,3").is_err());
        assert!(Quad::parse("a,2,3,4,5,6,7,8").is_err());
    }
}
