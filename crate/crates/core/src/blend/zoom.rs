use serde::{Deserialize, Serialize};

use super::{seamless_clone, BlendError, CloneOptions, Image};
use crate::geometry::{Point, Quad};
use crate::mask::BinaryMask;

/// Fraction of the quad's larger bounding-box side added around it.
pub const ZOOM_MARGIN: f64 = 0.2;

/// Where a zoomed canvas came from: the square crop `(x0, y0, size)` of the
/// original, resampled to `n × n`. The crop stays inside the image whenever
/// the image is large enough; otherwise it overhangs and samples beyond the
/// edge repeat the edge pixels.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ZoomRecord {
    pub x0: i64,
    pub y0: i64,
    pub size: u32,
    pub n: u32,
}

impl ZoomRecord {
    /// Canvas pixels per original pixel.
    pub fn scale(&self) -> f64 {
        self.n as f64 / self.size as f64
    }

    pub fn to_canvas(&self, p: Point) -> Point {
        Point::new((p.x - self.x0 as f64) * self.scale(), (p.y - self.y0 as f64) * self.scale())
    }

    pub fn to_original(&self, p: Point) -> Point {
        Point::new(self.x0 as f64 + p.x / self.scale(), self.y0 as f64 + p.y / self.scale())
    }
}

/// Crops the square around `quad` (bounding box grown by `margin` times its
/// larger side, shifted to stay inside the image) and resamples it
/// bilinearly to `n × n`.
pub fn zoom_edit_begin(img: &Image, quad: &Quad, n: u32, margin: f64) -> Result<(Image, ZoomRecord), BlendError> {
    let (w, h) = img.dims();
    if quad.is_degenerate() || !quad.within(w as f64, h as f64) {
        return Err(BlendError::QuadOutOfBounds);
    }
    let (xmin, ymin, xmax, ymax) = quad.bounds();
    let side = (xmax - xmin).max(ymax - ymin) * (1.0 + margin);
    let size = (side - 1e-9).ceil().max(1.0) as u32;
    let cx = (xmin + xmax) / 2.0;
    let cy = (ymin + ymax) / 2.0;
    let place = |c: f64, limit: u32| {
        let start = (c - size as f64 / 2.0).round();
        if size <= limit {
            start.clamp(0.0, (limit - size) as f64) as i64
        } else {
            start as i64
        }
    };
    let rec = ZoomRecord { x0: place(cx, w), y0: place(cy, h), size, n };
    let scale = rec.scale();
    let canvas = Image::from_fn(n, n, |x, y| {
        img.sample_bilinear(rec.x0 as f64 + (x as f64 + 0.5) / scale - 0.5, rec.y0 as f64 + (y as f64 + 0.5) / scale - 0.5)
    });
    Ok((canvas, rec))
}

/// Resamples `edited` back to the crop size and blends it into `original`
/// over `mask` (given in original-image pixels).
pub fn zoom_edit_finish(
    edited: &Image,
    rec: &ZoomRecord,
    original: &Image,
    mask: &BinaryMask,
    opts: &CloneOptions,
) -> Result<Image, BlendError> {
    if edited.dims() != (rec.n, rec.n) {
        return Err(BlendError::WrongEditSize { got: edited.dims(), expected: (rec.n, rec.n) });
    }
    let patch = edited.resize_bilinear(rec.size, rec.size);
    let mut src = original.clone();
    let (w, h) = original.dims();
    for py in 0..rec.size {
        let y = rec.y0 + py as i64;
        if y < 0 || y >= h as i64 {
            continue;
        }
        for px in 0..rec.size {
            let x = rec.x0 + px as i64;
            if x >= 0 && x < w as i64 {
                src.set(x as u32, y as u32, patch.get(px, py));
            }
        }
    }
    seamless_clone(&src, original, mask, opts)
}
