use std::path::Path;
use std::sync::Arc;

use serde::Serialize;

use super::PipelineError;
use crate::backend::{BackendError, GeneratorBackend};
use crate::blend::{
    build_masked_image, seamless_clone, zoom_edit_begin, zoom_edit_finish, CloneOptions, Image, MaskedImage, ZoomRecord, ZOOM_MARGIN,
};
use crate::fontio::Font;
use crate::geometry::{tighten_polygon, Point, Quad};
use crate::glyphraster::{
    compose_glyph_control_with_warnings, layout_line, render_position_mask, GlyphControl, LayoutWarning, LineSpec, Orientation,
    PositionControl, RasterError, TextLayout, DEFAULT_CANVAS,
};
use crate::mask::BinaryMask;

/// One line of text to render, with its quad in original-image pixels.
#[derive(Debug, Clone)]
pub struct BundleLine {
    pub text: String,
    pub font: Arc<Font>,
    pub quad: Quad,
    pub orientation: Orientation,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BundleOptions {
    pub canvas: u32,
    /// Noise seed handed to the generator.
    pub seed: u64,
    pub zoom_margin: f64,
}

impl Default for BundleOptions {
    fn default() -> Self {
        BundleOptions { canvas: DEFAULT_CANVAS, seed: 0, zoom_margin: ZOOM_MARGIN }
    }
}

/// The generator's conditioning inputs on an n×n canvas.
#[derive(Debug, Clone, PartialEq)]
pub struct InferenceBundle {
    pub glyph: GlyphControl,
    pub position: PositionControl,
    pub masked: MaskedImage,
    /// Carried to the generator, never interpreted.
    pub caption: String,
    pub canvas: u32,
    pub seed: u64,
    /// Set when the canvas is a resampled crop of the original.
    pub zoom: Option<ZoomRecord>,
    /// Line quads in canvas pixels.
    pub quads: Vec<Quad>,
    pub warnings: Vec<(usize, LayoutWarning)>,
}

#[derive(Serialize)]
struct BundleMeta<'a> {
    caption: &'a str,
    canvas: u32,
    seed: u64,
    zoom: Option<ZoomRecord>,
    quads: Vec<[f64; 8]>,
    warnings: Vec<(usize, &'a LayoutWarning)>,
}

impl InferenceBundle {
    /// JSON description of everything except the pixel data.
    pub fn metadata(&self) -> serde_json::Value {
        serde_json::to_value(BundleMeta {
            caption: &self.caption,
            canvas: self.canvas,
            seed: self.seed,
            zoom: self.zoom,
            quads: self.quads.iter().map(Quad::to_flat).collect(),
            warnings: self.warnings.iter().map(|(i, w)| (*i, w)).collect(),
        })
        .expect("serializable")
    }

    /// Writes `glyph.png`, `position.png`, `masked.png` and `bundle.json`.
    pub fn write_to(&self, dir: &Path) -> Result<(), PipelineError> {
        std::fs::create_dir_all(dir).map_err(|e| PipelineError::io(dir, e))?;
        self.glyph.save_png(&dir.join("glyph.png"))?;
        self.position.save_png(&dir.join("position.png"))?;
        self.masked.image.save_png(&dir.join("masked.png"))?;
        let meta = serde_json::to_vec_pretty(&self.metadata()).expect("serializable");
        let path = dir.join("bundle.json");
        std::fs::write(&path, meta).map_err(|e| PipelineError::io(&path, e))
    }
}

fn needs_zoom(img: &Image, quads: &[Quad], n: u32) -> bool {
    img.dims() != (n, n) || quads.iter().map(Quad::max_side).fold(0.0, f64::max) < n as f64 / 4.0
}

fn union_quad(quads: &[Quad]) -> Quad {
    let pts: Vec<Point> = quads.iter().flat_map(|q| q.corners).collect();
    let (x0, y0, x1, y1) = crate::geometry::polygon_bounds(&pts);
    Quad::from_rect(x0, y0, x1, y1)
}

struct Canvas {
    image: Image,
    zoom: Option<ZoomRecord>,
    quads: Vec<Quad>,
}

// The n×n working canvas: the image itself when it is n×n and the text is
// not small, otherwise a zoomed crop around all quads.
fn make_canvas(img: &Image, quads: &[Quad], opts: &BundleOptions) -> Result<Canvas, PipelineError> {
    let n = opts.canvas;
    let (w, h) = img.dims();
    for (index, q) in quads.iter().enumerate() {
        if !q.within(w as f64, h as f64) {
            return Err(RasterError::Line { index, source: Box::new(RasterError::QuadOutOfCanvas { width: w, height: h }) }.into());
        }
        if q.is_degenerate() {
            return Err(RasterError::Line { index, source: Box::new(RasterError::DegenerateQuad) }.into());
        }
    }
    if !needs_zoom(img, quads, n) {
        return Ok(Canvas { image: img.clone(), zoom: None, quads: quads.to_vec() });
    }
    let (image, rec) = zoom_edit_begin(img, &union_quad(quads), n, opts.zoom_margin)?;
    let limit = n as f64;
    let quads = quads
        .iter()
        .map(|q| {
            q.map(|p| {
                let c = rec.to_canvas(p);
                Point::new(c.x.clamp(0.0, limit), c.y.clamp(0.0, limit))
            })
        })
        .collect();
    Ok(Canvas { image, zoom: Some(rec), quads })
}

/// Builds c_g, c_p and c_m for the given lines on an n×n canvas, zooming
/// into the image first when it is not n×n or every quad is small.
pub fn build_inference_bundle(
    img: &Image,
    lines: &[BundleLine],
    caption: &str,
    opts: &BundleOptions,
) -> Result<InferenceBundle, PipelineError> {
    if lines.is_empty() || lines.iter().all(|l| l.text.trim().is_empty()) {
        return Err(RasterError::EmptyText.into());
    }
    let n = opts.canvas;
    let quads: Vec<Quad> = lines.iter().map(|l| l.quad).collect();
    let canvas = make_canvas(img, &quads, opts)?;
    let layout = TextLayout {
        lines: lines
            .iter()
            .zip(&canvas.quads)
            .map(|(l, q)| LineSpec { text: l.text.clone(), font: l.font.clone(), quad: *q, orientation: l.orientation })
            .collect(),
    };
    let (glyph, warnings) = compose_glyph_control_with_warnings(&layout, n, n)?;
    let polygons: Vec<Vec<Point>> = canvas.quads.iter().map(|q| q.corners.to_vec()).collect();
    let position = render_position_mask(&polygons, n, n)?;
    if !glyph.is_subset_of(&position) {
        log::warn!("glyph ink extends past the position region");
    }
    let masked = build_masked_image(&canvas.image, &position)?;
    Ok(InferenceBundle {
        glyph,
        position,
        masked,
        caption: caption.to_string(),
        canvas: n,
        seed: opts.seed,
        zoom: canvas.zoom,
        quads: canvas.quads,
        warnings,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EditOptions {
    pub bundle: BundleOptions,
    /// Shrink each horizontal line's quad to fit its new text before rendering.
    pub tighten: bool,
    /// Ask the backend to erase the old text under the original quads first.
    pub inpaint: bool,
    pub clone: CloneOptions,
}

impl Default for EditOptions {
    fn default() -> Self {
        EditOptions { bundle: BundleOptions::default(), tighten: false, inpaint: false, clone: CloneOptions::default() }
    }
}

#[derive(Debug, Clone)]
pub struct EditOutcome {
    pub image: Image,
    pub bundle: InferenceBundle,
    /// Quads actually rendered and blended, in original-image pixels.
    pub effective_quads: Vec<Quad>,
    /// Pixels the generated content was blended into.
    pub blend_region: BinaryMask,
    pub notes: Vec<String>,
}

fn region_mask(quads: &[Quad], w: u32, h: u32) -> Result<BinaryMask, PipelineError> {
    let polygons: Vec<Vec<Point>> = quads.iter().map(|q| q.corners.to_vec()).collect();
    let mut mask = render_position_mask(&polygons, w, h)?.0;
    // the Poisson solve needs a fixed boundary ring inside the image
    for x in 0..w {
        mask.set(x, 0, false);
        mask.set(x, h - 1, false);
    }
    for y in 0..h {
        mask.set(0, y, false);
        mask.set(w - 1, y, false);
    }
    Ok(mask)
}

fn erase_old_text(original: &Image, quads: &[Quad], backend: &dyn GeneratorBackend, opts: &BundleOptions) -> Result<Image, PipelineError> {
    let (w, h) = original.dims();
    let canvas = make_canvas(original, quads, opts)?;
    let polygons: Vec<Vec<Point>> = canvas.quads.iter().map(|q| q.corners.to_vec()).collect();
    let canvas_mask = render_position_mask(&polygons, opts.canvas, opts.canvas)?;
    let erased = backend.inpaint_erase(&canvas.image, &canvas_mask, opts.seed)?;
    if erased.dims() != canvas.image.dims() {
        return Err(BackendError::MalformedReply {
            endpoint: backend.endpoint(),
            reason: format!("inpainted image is {:?}", erased.dims()),
        }
        .into());
    }
    let old = region_mask(quads, w, h)?;
    let mut base = original.clone();
    match canvas.zoom {
        None => {
            for (x, y) in old.ink_pixels() {
                base.set(x, y, erased.get(x, y));
            }
        }
        Some(rec) => {
            let patch = erased.resize_bilinear(rec.size, rec.size);
            for (x, y) in old.ink_pixels() {
                let (px, py) = (x as i64 - rec.x0, y as i64 - rec.y0);
                if px >= 0 && py >= 0 && (px as u32) < rec.size && (py as u32) < rec.size {
                    base.set(x, y, patch.get(px as u32, py as u32));
                }
            }
        }
    }
    Ok(base)
}

/// Shrinks each horizontal line's quad along its baseline to the width its
/// text needs. Vertical lines and lines without ink keep their quads.
pub fn tighten_lines(lines: &[BundleLine]) -> Result<Vec<BundleLine>, PipelineError> {
    lines
        .iter()
        .enumerate()
        .map(|(index, l)| {
            if l.orientation == Orientation::Vertical {
                return Ok(l.clone());
            }
            let spec = LineSpec { text: l.text.clone(), font: l.font.clone(), quad: l.quad, orientation: l.orientation };
            let layout = layout_line(&spec).map_err(|e| RasterError::Line { index, source: Box::new(e) })?;
            let quad = if layout.placements.is_empty() { l.quad } else { tighten_polygon(&l.quad, layout.text_extent)? };
            Ok(BundleLine { quad, ..l.clone() })
        })
        .collect()
}

/// The edit loop: optionally erase the old text and tighten each quad to
/// its new text, build the bundle, call the generator, then Poisson-blend
/// the generated region back into the image. Pixels outside the original
/// and effective quads are never modified.
pub fn run_edit(
    original: &Image,
    lines: &[BundleLine],
    caption: &str,
    backend: &dyn GeneratorBackend,
    opts: &EditOptions,
) -> Result<EditOutcome, PipelineError> {
    let (w, h) = original.dims();
    let mut notes = Vec::new();
    let quads: Vec<Quad> = lines.iter().map(|l| l.quad).collect();

    let base = if opts.inpaint {
        if backend.capabilities().inpaint_erase {
            erase_old_text(original, &quads, backend, &opts.bundle)?
        } else {
            notes.push(format!("backend {} cannot inpaint; old text left in place", backend.endpoint()));
            original.clone()
        }
    } else {
        original.clone()
    };

    let effective = if opts.tighten { tighten_lines(lines)? } else { lines.to_vec() };
    let effective_quads: Vec<Quad> = effective.iter().map(|l| l.quad).collect();

    let bundle = build_inference_bundle(&base, &effective, caption, &opts.bundle)?;
    let generated = backend.generate(&bundle)?;
    if generated.dims() != (bundle.canvas, bundle.canvas) {
        return Err(BackendError::MalformedReply {
            endpoint: backend.endpoint(),
            reason: format!("generated image is {:?}, expected {}x{}", generated.dims(), bundle.canvas, bundle.canvas),
        }
        .into());
    }
    let region = region_mask(&effective_quads, w, h)?;
    let image = match &bundle.zoom {
        Some(rec) => zoom_edit_finish(&generated, rec, &base, &region, &opts.clone)?,
        None => seamless_clone(&generated, &base, &region, &opts.clone)?,
    };
    Ok(EditOutcome { image, bundle, effective_quads, blend_region: region, notes })
}
