use crate::fontio::{GlyphOutline, Segment};
use crate::geometry::Point;

/// A closed polyline; the last vertex connects back to the first.
pub type Polyline = Vec<Point>;

/// Replaces every quadratic segment by chords whose distance from the curve
/// is at most `tolerance`. Line segments are kept as they are.
///
/// A quadratic with second difference `d = p0 - 2c + p1` deviates from the
/// chord of a parameter interval of length `h` by at most `|d| h² / 4`, so
/// `n = ceil(sqrt(|d| / (4 tol)))` uniform pieces suffice.
pub fn flatten_outline(outline: &GlyphOutline, tolerance: f64) -> Vec<Polyline> {
    assert!(tolerance > 0.0, "tolerance must be positive");
    outline
        .contours
        .iter()
        .filter(|c| !c.segments.is_empty())
        .map(|contour| {
            let mut poly = Vec::with_capacity(contour.segments.len() * 2);
            for seg in &contour.segments {
                match *seg {
                    Segment::Line { from, .. } => poly.push(from),
                    Segment::Quad { from, ctrl, to } => {
                        let n = quad_pieces(from, ctrl, to, tolerance);
                        for i in 0..n {
                            poly.push(quad_at(from, ctrl, to, i as f64 / n as f64));
                        }
                    }
                }
            }
            poly
        })
        .collect()
}

pub(crate) fn quad_pieces(p0: Point, c: Point, p1: Point, tolerance: f64) -> usize {
    let d = (p0 - c * 2.0 + p1).length();
    let n = (d / (4.0 * tolerance)).sqrt().ceil();
    if n.is_finite() {
        (n as usize).clamp(1, 1 << 16)
    } else {
        1
    }
}

pub(crate) fn quad_at(p0: Point, c: Point, p1: Point, t: f64) -> Point {
    let mt = 1.0 - t;
    p0 * (mt * mt) + c * (2.0 * mt * t) + p1 * (t * t)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fontio::OutlinePoint;

    fn seg_dist(p: Point, a: Point, b: Point) -> f64 {
        let ab = b - a;
        let len2 = ab.dot(ab);
        let t = if len2 == 0.0 { 0.0 } else { ((p - a).dot(ab) / len2).clamp(0.0, 1.0) };
        p.distance(a + ab * t)
    }

    #[test]
    fn lines_pass_through() {
        let sq = GlyphOutline::from_points(&[vec![
            OutlinePoint::on(100.0, 100.0),
            OutlinePoint::on(100.0, 900.0),
            OutlinePoint::on(900.0, 900.0),
            OutlinePoint::on(900.0, 100.0),
        ]]);
        let polys = flatten_outline(&sq, 0.25);
        assert_eq!(
            polys,
            vec![vec![Point::new(100.0, 100.0), Point::new(100.0, 900.0), Point::new(900.0, 900.0), Point::new(900.0, 100.0)]]
        );
    }

    #[test]
    fn quadratic_within_tolerance() {
        let (p0, c, p1) = (Point::new(0.0, 0.0), Point::new(50.0, 100.0), Point::new(100.0, 0.0));
        let outline =
            GlyphOutline::from_points(&[vec![OutlinePoint::on(0.0, 0.0), OutlinePoint::off(50.0, 100.0), OutlinePoint::on(100.0, 0.0)]]);
        let poly = &flatten_outline(&outline, 0.25)[0];
        // the closing chord (100,0)->(0,0) is the contour's line segment, skip it
        let chords: Vec<(Point, Point)> = poly.windows(2).map(|w| (w[0], w[1])).collect();
        for i in 0..=20_000 {
            let t = i as f64 / 20_000.0;
            let q = Point::new(
                (1.0 - t) * (1.0 - t) * p0.x + 2.0 * (1.0 - t) * t * c.x + t * t * p1.x,
                (1.0 - t) * (1.0 - t) * p0.y + 2.0 * (1.0 - t) * t * c.y + t * t * p1.y,
            );
            let best = chords.iter().map(|&(a, b)| seg_dist(q, a, b)).fold(f64::INFINITY, f64::min);
            assert!(best <= 0.25 + 1e-12, "t={t} dist={best}");
        }
    }

    #[test]
    fn huge_tolerance_gives_single_chord() {
        let outline =
            GlyphOutline::from_points(&[vec![OutlinePoint::on(0.0, 0.0), OutlinePoint::off(50.0, 100.0), OutlinePoint::on(100.0, 0.0)]]);
        let polys = flatten_outline(&outline, 1e9);
        assert_eq!(polys, vec![vec![Point::new(0.0, 0.0), Point::new(100.0, 0.0)]]);
    }

    #[test]
    fn empty_outline() {
        assert!(flatten_outline(&GlyphOutline::empty(), 0.25).is_empty());
    }
}
