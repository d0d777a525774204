use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::RasterError;
use crate::fontio::{BBox, Font, GlyphId, GlyphOutline};
use crate::geometry::{Point, Quad, LAYOUT_PADDING};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Orientation {
    #[default]
    Horizontal,
    Vertical,
}

#[derive(Debug, Clone)]
pub struct LineSpec {
    pub text: String,
    pub font: Arc<Font>,
    pub quad: Quad,
    pub orientation: Orientation,
}

/// A 2×3 affine map: `x' = a·x + b·y + tx`, `y' = c·x + d·y + ty`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Affine {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub d: f64,
    pub tx: f64,
    pub ty: f64,
}

impl Affine {
    pub fn apply(&self, p: Point) -> Point {
        Point::new(self.a * p.x + self.b * p.y + self.tx, self.c * p.x + self.d * p.y + self.ty)
    }

    /// Uniform scale factor of a similarity transform.
    pub fn scale(&self) -> f64 {
        self.a.hypot(self.c)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum LayoutWarning {
    /// The character has no mapping; `.notdef` was drawn instead.
    NotdefSubstituted { ch: char },
    /// The character could not be drawn and was skipped.
    GlyphSkipped { ch: char, reason: String },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GlyphPlacement {
    pub glyph: GlyphId,
    /// Maps the glyph's font-unit outline (y up) to canvas pixels (y down).
    pub transform: Affine,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LineLayout {
    pub placements: Vec<GlyphPlacement>,
    pub warnings: Vec<LayoutWarning>,
    /// Font units to pixels.
    pub scale: f64,
    /// Width and height in pixels of the laid-out ink box.
    pub text_extent: (f64, f64),
}

struct Pen {
    glyph: GlyphId,
    offset: Point,
}

fn resolve_glyph(font: &Font, ch: char, warnings: &mut Vec<LayoutWarning>) -> Option<GlyphId> {
    let notdef = |warnings: &mut Vec<LayoutWarning>, why: String| {
        if font.glyph_outline(GlyphId(0)).is_ok() {
            warnings.push(LayoutWarning::NotdefSubstituted { ch });
            Some(GlyphId(0))
        } else {
            warnings.push(LayoutWarning::GlyphSkipped { ch, reason: why });
            None
        }
    };
    match font.glyph_index(ch) {
        Some(g) => match font.glyph_outline(g) {
            Ok(_) => Some(g),
            Err(e) => notdef(warnings, e.to_string()),
        },
        None => notdef(warnings, "no glyph mapped".into()),
    }
}

/// Places each glyph of `line.text` in font units, then fits the whole line
/// into the quad with one similarity transform: rotation from the baseline
/// edge BL→BR, uniform scale as large as possible with padding of 5% of the
/// quad height on every side, centered on the quad's vertex centroid.
pub fn layout_line(line: &LineSpec) -> Result<LineLayout, RasterError> {
    if line.text.trim().is_empty() {
        return Err(RasterError::EmptyText);
    }
    let quad = &line.quad;
    if quad.is_degenerate() {
        return Err(RasterError::DegenerateQuad);
    }
    if !quad.is_convex() {
        return Err(RasterError::NonConvexQuad);
    }
    let font = &*line.font;
    let upm = font.units_per_em() as f64;

    let mut warnings = Vec::new();
    let mut pens = Vec::new();
    let mut pen = 0.0f64;
    for ch in line.text.chars() {
        let Some(glyph) = resolve_glyph(font, ch, &mut warnings) else {
            continue;
        };
        let offset = match line.orientation {
            Orientation::Horizontal => Point::new(pen, 0.0),
            Orientation::Vertical => Point::new(0.0, -pen),
        };
        pens.push(Pen { glyph, offset });
        pen += match line.orientation {
            Orientation::Horizontal => font.advance_width(glyph)? as f64,
            Orientation::Vertical => upm,
        };
    }

    let mut ink = BBox::default();
    let mut any_ink = false;
    for p in &pens {
        let outline = font.glyph_outline(p.glyph)?;
        if outline.is_empty() {
            continue;
        }
        let b = outline.bbox;
        let shifted = BBox { xmin: b.xmin + p.offset.x, ymin: b.ymin + p.offset.y, xmax: b.xmax + p.offset.x, ymax: b.ymax + p.offset.y };
        ink = if any_ink { ink.union(&shifted) } else { shifted };
        any_ink = true;
    }
    if !any_ink {
        return Ok(LineLayout { placements: Vec::new(), warnings, scale: 0.0, text_extent: (0.0, 0.0) });
    }

    let u = quad.baseline_dir().ok_or(RasterError::DegenerateQuad)?;
    // font "up" expressed in y-down pixel space
    let up = Point::new(u.y, -u.x);
    let center = quad.centroid();
    let pad = LAYOUT_PADDING * quad.height();
    let hw = ink.width() / 2.0;
    let hh = ink.height() / 2.0;
    let scale = max_fit_scale(quad, center, u, up, hw, hh, pad).ok_or(RasterError::QuadTooSmall)?;

    let cx = (ink.xmin + ink.xmax) / 2.0;
    let cy = (ink.ymin + ink.ymax) / 2.0;
    let placements = pens
        .iter()
        .map(|p| {
            // pixel = center + s·((x + ox − cx)·u + (y + oy − cy)·up)
            let dx = p.offset.x - cx;
            let dy = p.offset.y - cy;
            GlyphPlacement {
                glyph: p.glyph,
                transform: Affine {
                    a: scale * u.x,
                    b: scale * up.x,
                    c: scale * u.y,
                    d: scale * up.y,
                    tx: center.x + scale * (dx * u.x + dy * up.x),
                    ty: center.y + scale * (dx * u.y + dy * up.y),
                },
            }
        })
        .collect();
    Ok(LineLayout { placements, warnings, scale, text_extent: (scale * ink.width(), scale * ink.height()) })
}

// Largest s such that the rectangle centered at `center` with axes u/up and
// half-extents (s·hw + pad, s·hh + pad) lies inside the convex quad.
fn max_fit_scale(quad: &Quad, center: Point, u: Point, up: Point, hw: f64, hh: f64, pad: f64) -> Option<f64> {
    let orient = quad.signed_area().signum();
    let mut best = f64::INFINITY;
    for i in 0..4 {
        let a = quad.corners[i];
        let b = quad.corners[(i + 1) % 4];
        let d = b - a;
        let len = d.length();
        if len < 1e-12 {
            continue;
        }
        let n = Point::new(-d.y, d.x) * (orient / len);
        let nu = n.dot(u);
        let nv = n.dot(up);
        let base = n.dot(center - a);
        for (su, sv) in [(1.0, 1.0), (1.0, -1.0), (-1.0, 1.0), (-1.0, -1.0)] {
            let fixed = base + su * pad * nu + sv * pad * nv;
            let slope = su * hw * nu + sv * hh * nv;
            if slope < 0.0 {
                best = best.min(-fixed / slope);
            } else if fixed < 0.0 {
                return None;
            }
        }
    }
    (best.is_finite() && best > 0.0).then_some(best)
}

impl LineLayout {
    /// Every placed glyph outline mapped into canvas pixels.
    pub fn outlines(&self, font: &Font) -> Result<Vec<GlyphOutline>, RasterError> {
        self.placements.iter().map(|p| Ok(font.glyph_outline(p.glyph)?.map_points(|q| p.transform.apply(q)))).collect()
    }
}
