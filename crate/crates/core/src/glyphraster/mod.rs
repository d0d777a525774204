//! Text layout inside quads and binary rasterization of the glyph control
//! and position control masks.

mod flatten;
mod layout;
mod scanline;

use std::ops::Deref;

use rayon::prelude::*;
use thiserror::Error;

pub use flatten::{flatten_outline, Polyline};
pub use layout::{layout_line, Affine, GlyphPlacement, LayoutWarning, LineLayout, LineSpec, Orientation};
pub use scanline::rasterize_polylines;

use crate::fontio::FontError;
use crate::geometry::{polygon_is_simple, Point};
use crate::mask::BinaryMask;

pub const DEFAULT_CANVAS: u32 = 512;
pub const MAX_LINES: usize = 5;
/// Curve flattening tolerance in pixels.
pub const FLATTEN_TOLERANCE: f64 = 0.2;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum RasterError {
    #[error("text is empty")]
    EmptyText,
    #[error("quad has zero area")]
    DegenerateQuad,
    #[error("quad is not convex")]
    NonConvexQuad,
    #[error("quad is too small to hold text with padding")]
    QuadTooSmall,
    #[error("quad lies outside the {width}x{height} canvas")]
    QuadOutOfCanvas { width: u32, height: u32 },
    #[error("{count} lines exceed the limit of {MAX_LINES}")]
    TooManyLines { count: usize },
    #[error("polygon {index} intersects itself")]
    SelfIntersectingPolygon { index: usize },
    #[error("polygon {index} has fewer than 3 points")]
    TooFewPoints { index: usize },
    #[error(transparent)]
    Font(#[from] FontError),
    #[error("line {index}: {source}")]
    Line { index: usize, source: Box<RasterError> },
}

impl RasterError {
    /// The innermost error, without line annotations.
    pub fn root(&self) -> &RasterError {
        match self {
            RasterError::Line { source, .. } => source.root(),
            e => e,
        }
    }
}

/// Binary text-ink mask on the n×n canvas (1 = ink).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GlyphControl(pub BinaryMask);

/// Binary mask of the filled text-region polygons.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PositionControl(pub BinaryMask);

impl Deref for GlyphControl {
    type Target = BinaryMask;
    fn deref(&self) -> &BinaryMask {
        &self.0
    }
}

impl Deref for PositionControl {
    type Target = BinaryMask;
    fn deref(&self) -> &BinaryMask {
        &self.0
    }
}

#[derive(Debug, Clone, Default)]
pub struct TextLayout {
    pub lines: Vec<LineSpec>,
}

/// Lays out and rasterizes a single line.
pub fn render_line(line: &LineSpec, width: u32, height: u32) -> Result<(BinaryMask, LineLayout), RasterError> {
    let layout = layout_line(line)?;
    let polylines: Vec<Polyline> = layout.outlines(&line.font)?.iter().flat_map(|o| flatten_outline(o, FLATTEN_TOLERANCE)).collect();
    Ok((rasterize_polylines(&polylines, width, height), layout))
}

/// Rasterizes all lines and ORs them together. Returns per-line layout
/// warnings alongside the mask.
pub fn compose_glyph_control_with_warnings(
    layout: &TextLayout,
    width: u32,
    height: u32,
) -> Result<(GlyphControl, Vec<(usize, LayoutWarning)>), RasterError> {
    if layout.lines.len() > MAX_LINES {
        return Err(RasterError::TooManyLines { count: layout.lines.len() });
    }
    for (index, line) in layout.lines.iter().enumerate() {
        if !line.quad.within(width as f64, height as f64) {
            return Err(RasterError::Line { index, source: Box::new(RasterError::QuadOutOfCanvas { width, height }) });
        }
    }
    let rendered: Vec<(BinaryMask, LineLayout)> = layout
        .lines
        .par_iter()
        .enumerate()
        .map(|(index, line)| render_line(line, width, height).map_err(|e| RasterError::Line { index, source: Box::new(e) }))
        .collect::<Result<_, _>>()?;
    let mut mask = BinaryMask::new(width, height);
    let mut warnings = Vec::new();
    for (index, (m, l)) in rendered.into_iter().enumerate() {
        mask.union_with(&m);
        warnings.extend(l.warnings.into_iter().map(|w| (index, w)));
    }
    Ok((GlyphControl(mask), warnings))
}

pub fn compose_glyph_control(layout: &TextLayout, width: u32, height: u32) -> Result<GlyphControl, RasterError> {
    compose_glyph_control_with_warnings(layout, width, height).map(|(g, _)| g)
}

/// Fills each polygon (nonzero rule, pixel-center coverage) and ORs them.
pub fn render_position_mask(polygons: &[Vec<Point>], width: u32, height: u32) -> Result<PositionControl, RasterError> {
    let mut mask = BinaryMask::new(width, height);
    for (index, poly) in polygons.iter().enumerate() {
        if poly.len() < 3 {
            return Err(RasterError::TooFewPoints { index });
        }
        if !polygon_is_simple(poly) {
            return Err(RasterError::SelfIntersectingPolygon { index });
        }
        mask.union_with(&rasterize_polylines(std::slice::from_ref(poly), width, height));
    }
    Ok(PositionControl(mask))
}

#[cfg(test)]
mod tests {
    use std::sync::Arc;

    use super::*;
    use crate::fontio::{load_font, Font, GlyphId};
    use crate::geometry::Quad;

    fn testsquare() -> Arc<Font> {
        Arc::new(load_font(include_bytes!("../../fixtures/fonts/testsquare.ttf")).unwrap())
    }

    fn line(text: &str, quad: Quad) -> LineSpec {
        LineSpec { text: text.into(), font: testsquare(), quad, orientation: Orientation::Horizontal }
    }

    #[test]
    fn two_glyphs_offset_by_advance() {
        let l = layout_line(&line("AA", Quad::from_rect(0.0, 0.0, 400.0, 100.0))).unwrap();
        assert_eq!(l.placements.len(), 2);
        let (a, b) = (l.placements[0].transform, l.placements[1].transform);
        assert_eq!(a.scale(), b.scale());
        // advance of 'A' is 1000 units
        assert!((b.tx - a.tx - 1000.0 * l.scale).abs() < 1e-9);
        assert_eq!(a.ty, b.ty);
    }

    #[test]
    fn single_glyph_centered() {
        let q = Quad::from_rect(0.0, 0.0, 100.0, 100.0);
        let l = layout_line(&line("A", q)).unwrap();
        let t = l.placements[0].transform;
        // ink box 100..900 maps to a square centered at (50, 50)
        let lo = t.apply(Point::new(100.0, 900.0));
        let hi = t.apply(Point::new(900.0, 100.0));
        assert!(((lo.x + hi.x) / 2.0 - 50.0).abs() < 1e-9);
        assert!(((lo.y + hi.y) / 2.0 - 50.0).abs() < 1e-9);
        // padding 5 px on each side leaves 90 px
        assert!((hi.x - lo.x - 90.0).abs() < 1e-9);
    }

    #[test]
    fn degenerate_and_empty() {
        let p = Point::new(5.0, 5.0);
        assert_eq!(layout_line(&line("A", Quad::new([p; 4]))).unwrap_err(), RasterError::DegenerateQuad);
        assert_eq!(layout_line(&line("  ", Quad::from_rect(0.0, 0.0, 10.0, 10.0))).unwrap_err(), RasterError::EmptyText);
    }

    #[test]
    fn unmapped_renders_notdef() {
        let l = layout_line(&line("A☃", Quad::from_rect(0.0, 0.0, 200.0, 100.0))).unwrap();
        assert_eq!(l.placements[1].glyph, GlyphId(0));
        assert_eq!(l.warnings, vec![LayoutWarning::NotdefSubstituted { ch: '☃' }]);
    }

    #[test]
    fn vertical_stacks_downward() {
        let mut spec = line("AA", Quad::from_rect(0.0, 0.0, 100.0, 400.0));
        spec.orientation = Orientation::Vertical;
        let l = layout_line(&spec).unwrap();
        let (a, b) = (l.placements[0].transform, l.placements[1].transform);
        assert_eq!(a.tx, b.tx);
        assert!((b.ty - a.ty - 1000.0 * l.scale).abs() < 1e-9);
    }

    #[test]
    fn too_many_lines() {
        let lines = (0..6).map(|i| line("A", Quad::from_rect(0.0, i as f64 * 80.0, 80.0, i as f64 * 80.0 + 80.0))).collect();
        let err = compose_glyph_control(&TextLayout { lines }, 512, 512).unwrap_err();
        assert_eq!(err, RasterError::TooManyLines { count: 6 });
    }

    #[test]
    fn compose_disjoint_and_idempotent() {
        let l1 = line("A", Quad::from_rect(10.0, 10.0, 110.0, 110.0));
        let l2 = line("AB", Quad::from_rect(200.0, 200.0, 400.0, 300.0));
        let c1 = compose_glyph_control(&TextLayout { lines: vec![l1.clone()] }, 512, 512).unwrap();
        let c2 = compose_glyph_control(&TextLayout { lines: vec![l2.clone()] }, 512, 512).unwrap();
        let both = compose_glyph_control(&TextLayout { lines: vec![l1.clone(), l2.clone()] }, 512, 512).unwrap();
        assert_eq!(both.count(), c1.count() + c2.count());
        let swapped = compose_glyph_control(&TextLayout { lines: vec![l2, l1.clone()] }, 512, 512).unwrap();
        assert_eq!(both, swapped);
        let twice = compose_glyph_control(&TextLayout { lines: vec![l1.clone(), l1] }, 512, 512).unwrap();
        assert_eq!(twice, c1);
    }

    #[test]
    fn position_masks() {
        let rect =
            |x0: f64, y0: f64, x1: f64, y1: f64| vec![Point::new(x0, y0), Point::new(x1, y0), Point::new(x1, y1), Point::new(x0, y1)];
        assert_eq!(render_position_mask(&[rect(10.0, 10.0, 90.0, 90.0)], 100, 100).unwrap().count(), 6400);
        assert!(render_position_mask(&[], 100, 100).unwrap().is_empty());
        // union of [10,60)² and [40,90)²: 2500 + 2500 − 400
        let two = render_position_mask(&[rect(10.0, 10.0, 60.0, 60.0), rect(40.0, 40.0, 90.0, 90.0)], 100, 100).unwrap();
        assert_eq!(two.count(), 4600);
        let bowtie = vec![Point::new(0.0, 0.0), Point::new(10.0, 10.0), Point::new(10.0, 0.0), Point::new(0.0, 10.0)];
        assert_eq!(render_position_mask(&[bowtie], 20, 20).unwrap_err(), RasterError::SelfIntersectingPolygon { index: 0 });
    }
}
