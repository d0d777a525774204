use serde::{Deserialize, Serialize};

use crate::geometry::Point;

/// One piece of a closed glyph contour, in font units.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Segment {
    Line { from: Point, to: Point },
    Quad { from: Point, ctrl: Point, to: Point },
}

impl Segment {
    pub fn start(&self) -> Point {
        match *self {
            Segment::Line { from, .. } | Segment::Quad { from, .. } => from,
        }
    }

    pub fn end(&self) -> Point {
        match *self {
            Segment::Line { to, .. } | Segment::Quad { to, .. } => to,
        }
    }

    pub fn map(&self, f: impl Fn(Point) -> Point) -> Segment {
        match *self {
            Segment::Line { from, to } => Segment::Line { from: f(from), to: f(to) },
            Segment::Quad { from, ctrl, to } => Segment::Quad { from: f(from), ctrl: f(ctrl), to: f(to) },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Contour {
    pub segments: Vec<Segment>,
}

impl Contour {
    pub fn is_closed(&self) -> bool {
        match (self.segments.first(), self.segments.last()) {
            (Some(first), Some(last)) => first.start() == last.end(),
            _ => false,
        }
    }
}

/// Axis-aligned bounds `(xmin, ymin, xmax, ymax)`.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct BBox {
    pub xmin: f64,
    pub ymin: f64,
    pub xmax: f64,
    pub ymax: f64,
}

impl BBox {
    pub fn width(&self) -> f64 {
        self.xmax - self.xmin
    }

    pub fn height(&self) -> f64 {
        self.ymax - self.ymin
    }

    pub fn is_empty(&self) -> bool {
        self.width() <= 0.0 && self.height() <= 0.0
    }

    pub fn contains(&self, p: Point) -> bool {
        p.x >= self.xmin && p.x <= self.xmax && p.y >= self.ymin && p.y <= self.ymax
    }

    pub fn union(&self, other: &BBox) -> BBox {
        BBox {
            xmin: self.xmin.min(other.xmin),
            ymin: self.ymin.min(other.ymin),
            xmax: self.xmax.max(other.xmax),
            ymax: self.ymax.max(other.ymax),
        }
    }

    fn of_points(mut points: impl Iterator<Item = Point>) -> BBox {
        let Some(first) = points.next() else {
            return BBox::default();
        };
        points.fold(BBox { xmin: first.x, ymin: first.y, xmax: first.x, ymax: first.y }, |b, p| BBox {
            xmin: b.xmin.min(p.x),
            ymin: b.ymin.min(p.y),
            xmax: b.xmax.max(p.x),
            ymax: b.ymax.max(p.y),
        })
    }
}

/// A TrueType point as stored in `glyf`: position plus the on-curve flag.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OutlinePoint {
    pub x: f64,
    pub y: f64,
    pub on_curve: bool,
}

impl OutlinePoint {
    pub fn on(x: f64, y: f64) -> Self {
        OutlinePoint { x, y, on_curve: true }
    }

    pub fn off(x: f64, y: f64) -> Self {
        OutlinePoint { x, y, on_curve: false }
    }

    fn pos(&self) -> Point {
        Point::new(self.x, self.y)
    }
}

/// A glyph as closed contours of line and quadratic Bézier segments.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct GlyphOutline {
    pub contours: Vec<Contour>,
    pub bbox: BBox,
}

impl GlyphOutline {
    pub fn empty() -> Self {
        GlyphOutline::default()
    }

    pub fn is_empty(&self) -> bool {
        self.contours.is_empty()
    }

    /// Builds contours from TrueType point lists, materializing the implied
    /// on-curve midpoint between consecutive off-curve points. Contours with
    /// fewer than two points carry no area and are dropped.
    pub fn from_points(contours: &[Vec<OutlinePoint>]) -> GlyphOutline {
        let contours: Vec<Contour> = contours.iter().filter(|c| c.len() >= 2).map(|c| contour_from_points(c)).collect();
        let bbox = BBox::of_points(contours.iter().flat_map(|c| {
            c.segments.iter().flat_map(|s| match *s {
                Segment::Line { from, to } => vec![from, to],
                Segment::Quad { from, ctrl, to } => vec![from, ctrl, to],
            })
        }));
        GlyphOutline { contours, bbox }
    }

    /// Canonical point list: every segment start is an explicit on-curve
    /// point, followed by its control point for quadratic segments.
    pub fn to_points(&self) -> Vec<Vec<OutlinePoint>> {
        self.contours
            .iter()
            .map(|c| {
                let mut pts = Vec::with_capacity(c.segments.len() * 2);
                for seg in &c.segments {
                    match *seg {
                        Segment::Line { from, .. } => pts.push(OutlinePoint::on(from.x, from.y)),
                        Segment::Quad { from, ctrl, .. } => {
                            pts.push(OutlinePoint::on(from.x, from.y));
                            pts.push(OutlinePoint::off(ctrl.x, ctrl.y));
                        }
                    }
                }
                pts
            })
            .collect()
    }

    /// Applies `f` to every point; `f` must be affine for the result to be
    /// the exact image of the curves.
    pub fn map_points(&self, f: impl Fn(Point) -> Point) -> GlyphOutline {
        let contours: Vec<Contour> =
            self.contours.iter().map(|c| Contour { segments: c.segments.iter().map(|s| s.map(&f)).collect() }).collect();
        let bbox = BBox::of_points(contours.iter().flat_map(|c| {
            c.segments.iter().flat_map(|s| match *s {
                Segment::Line { from, to } => vec![from, to],
                Segment::Quad { from, ctrl, to } => vec![from, ctrl, to],
            })
        }));
        GlyphOutline { contours, bbox }
    }
}

fn midpoint(a: Point, b: Point) -> Point {
    Point::new((a.x + b.x) * 0.5, (a.y + b.y) * 0.5)
}

fn contour_from_points(points: &[OutlinePoint]) -> Contour {
    let n = points.len();
    // start on the first on-curve point; an all-off-curve contour starts at
    // the implied midpoint between the last and first points
    let (start, first_idx) = match points.iter().position(|p| p.on_curve) {
        Some(i) => (points[i].pos(), i + 1),
        None => (midpoint(points[n - 1].pos(), points[0].pos()), 0),
    };
    let all_off = !points.iter().any(|p| p.on_curve);
    let count = if all_off { n } else { n - 1 };

    let mut segments = Vec::new();
    let mut current = start;
    let mut pending: Option<Point> = None;
    for k in 0..count {
        let p = points[(first_idx + k) % n];
        let pos = p.pos();
        if p.on_curve {
            segments.push(match pending.take() {
                Some(ctrl) => Segment::Quad { from: current, ctrl, to: pos },
                None => Segment::Line { from: current, to: pos },
            });
            current = pos;
        } else {
            if let Some(ctrl) = pending {
                let mid = midpoint(ctrl, pos);
                segments.push(Segment::Quad { from: current, ctrl, to: mid });
                current = mid;
            }
            pending = Some(pos);
        }
    }
    segments.push(match pending {
        Some(ctrl) => Segment::Quad { from: current, ctrl, to: start },
        None => Segment::Line { from: current, to: start },
    });
    Contour { segments }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn consecutive_off_curve_points_get_implied_midpoint() {
        let pts =
            vec![OutlinePoint::on(0.0, 200.0), OutlinePoint::off(50.0, 0.0), OutlinePoint::off(150.0, 0.0), OutlinePoint::on(200.0, 200.0)];
        let outline = GlyphOutline::from_points(&[pts]);
        let segs = &outline.contours[0].segments;
        assert_eq!(segs.len(), 3);
        assert_eq!(segs[0], Segment::Quad { from: Point::new(0.0, 200.0), ctrl: Point::new(50.0, 0.0), to: Point::new(100.0, 0.0) });
        assert_eq!(segs[1], Segment::Quad { from: Point::new(100.0, 0.0), ctrl: Point::new(150.0, 0.0), to: Point::new(200.0, 200.0) });
        assert_eq!(segs[2], Segment::Line { from: Point::new(200.0, 200.0), to: Point::new(0.0, 200.0) });
        assert!(outline.contours[0].is_closed());
    }

    #[test]
    fn contour_starting_off_curve() {
        let pts = vec![OutlinePoint::off(0.0, 0.0), OutlinePoint::on(10.0, 0.0), OutlinePoint::on(10.0, 10.0)];
        let outline = GlyphOutline::from_points(&[pts]);
        let c = &outline.contours[0];
        assert!(c.is_closed());
        assert_eq!(c.segments[0].start(), Point::new(10.0, 0.0));
        assert_eq!(c.segments.len(), 2);
        assert!(matches!(c.segments[1], Segment::Quad { ctrl, .. } if ctrl == Point::new(0.0, 0.0)));
    }

    #[test]
    fn all_off_curve_contour() {
        let pts = vec![
            OutlinePoint::off(500.0, 100.0),
            OutlinePoint::off(900.0, 500.0),
            OutlinePoint::off(500.0, 900.0),
            OutlinePoint::off(100.0, 500.0),
        ];
        let outline = GlyphOutline::from_points(&[pts]);
        let c = &outline.contours[0];
        assert_eq!(c.segments.len(), 4);
        assert_eq!(c.segments[0].start(), Point::new(300.0, 300.0));
        assert!(c.is_closed());
        assert_eq!(outline.bbox, BBox { xmin: 100.0, ymin: 100.0, xmax: 900.0, ymax: 900.0 });
    }

    #[test]
    fn empty_outline_has_degenerate_bbox() {
        let outline = GlyphOutline::from_points(&[]);
        assert!(outline.is_empty());
        assert_eq!(outline.bbox, BBox::default());
    }

    #[test]
    fn point_list_roundtrip() {
        let pts = vec![OutlinePoint::off(3.0, 1.0), OutlinePoint::off(5.0, 9.0), OutlinePoint::on(8.0, 2.0), OutlinePoint::on(1.0, 1.0)];
        let outline = GlyphOutline::from_points(&[pts]);
        let again = GlyphOutline::from_points(&outline.to_points());
        assert_eq!(outline, again);
    }
}
