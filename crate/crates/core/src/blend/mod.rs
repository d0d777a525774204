//! RGB images, masked-image construction, Poisson seamless cloning and
//! small-region zoom editing.

mod poisson;
mod zoom;

use std::fmt;
use std::io::Cursor;
use std::path::Path;

use image::{ImageFormat, Rgb, RgbImage};
use thiserror::Error;

pub use poisson::{seamless_clone, CloneOptions};
pub use zoom::{zoom_edit_begin, zoom_edit_finish, ZoomRecord, ZOOM_MARGIN};

use crate::glyphraster::PositionControl;
use crate::mask::{BinaryMask, CodecError};

/// Internal sample value of a masked pixel; 0 after mapping to `[-1, 1]`.
pub const MASKED_VALUE: f64 = 0.5;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum BlendError {
    #[error("dimension mismatch: {left:?} vs {right:?}")]
    DimensionMismatch { left: (u32, u32), right: (u32, u32) },
    #[error("mask touches the image border")]
    MaskTouchesBorder,
    #[error("Poisson solve did not converge: residual {residual:e} after {iterations} iterations")]
    NonConvergence { best: Box<Image>, residual: f64, iterations: usize },
    #[error("quad lies outside the image or has zero area")]
    QuadOutOfBounds,
    #[error("edited image is {got:?}, expected {expected:?}")]
    WrongEditSize { got: (u32, u32), expected: (u32, u32) },
}

/// RGB image with samples in `[0, 1]`, stored row-major.
#[derive(Clone, PartialEq)]
pub struct Image {
    width: u32,
    height: u32,
    data: Vec<[f64; 3]>,
}

impl fmt::Debug for Image {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Image({}x{})", self.width, self.height)
    }
}

fn check_dims(a: (u32, u32), b: (u32, u32)) -> Result<(), BlendError> {
    if a != b {
        return Err(BlendError::DimensionMismatch { left: a, right: b });
    }
    Ok(())
}

impl Image {
    pub fn filled(width: u32, height: u32, rgb: [f64; 3]) -> Self {
        assert!(width > 0 && height > 0, "image dimensions must be positive");
        Image { width, height, data: vec![rgb.map(|v| v.clamp(0.0, 1.0)); width as usize * height as usize] }
    }

    pub fn from_fn(width: u32, height: u32, f: impl Fn(u32, u32) -> [f64; 3]) -> Self {
        assert!(width > 0 && height > 0, "image dimensions must be positive");
        let data = (0..height).flat_map(|y| (0..width).map(move |x| (x, y))).map(|(x, y)| f(x, y).map(|v| v.clamp(0.0, 1.0))).collect();
        Image { width, height, data }
    }

    /// Black ink on a white background.
    pub fn from_mask(mask: &BinaryMask) -> Self {
        let (w, h) = mask.dims();
        Image::from_fn(w, h, |x, y| if mask.get(x, y) { [0.0; 3] } else { [1.0; 3] })
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    pub fn dims(&self) -> (u32, u32) {
        (self.width, self.height)
    }

    pub fn pixels(&self) -> &[[f64; 3]] {
        &self.data
    }

    #[inline]
    pub fn get(&self, x: u32, y: u32) -> [f64; 3] {
        self.data[y as usize * self.width as usize + x as usize]
    }

    #[inline]
    pub fn set(&mut self, x: u32, y: u32, rgb: [f64; 3]) {
        self.data[y as usize * self.width as usize + x as usize] = rgb.map(|v| v.clamp(0.0, 1.0));
    }

    pub fn luminance(&self, x: u32, y: u32) -> f64 {
        let [r, g, b] = self.get(x, y);
        0.299 * r + 0.587 * g + 0.114 * b
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Image {
        Image { width: self.width, height: self.height, data: self.data.iter().map(|p| p.map(|v| f(v).clamp(0.0, 1.0))).collect() }
    }

    /// Largest per-sample absolute difference.
    pub fn max_abs_diff(&self, other: &Image) -> f64 {
        assert_eq!(self.dims(), other.dims());
        self.data.iter().zip(&other.data).flat_map(|(a, b)| (0..3).map(move |c| (a[c] - b[c]).abs())).fold(0.0, f64::max)
    }

    /// Copy of the rectangle at `(x0, y0)` with size `w × h`.
    pub fn crop(&self, x0: u32, y0: u32, w: u32, h: u32) -> Image {
        assert!(x0 + w <= self.width && y0 + h <= self.height, "crop out of bounds");
        Image::from_fn(w, h, |x, y| self.get(x0 + x, y0 + y))
    }

    /// Copies `patch` into this image with its top-left at `(x0, y0)`.
    pub fn paste(&mut self, patch: &Image, x0: u32, y0: u32) {
        assert!(x0 + patch.width <= self.width && y0 + patch.height <= self.height, "paste out of bounds");
        for y in 0..patch.height {
            for x in 0..patch.width {
                self.set(x0 + x, y0 + y, patch.get(x, y));
            }
        }
    }

    /// Bilinear sample at continuous pixel coordinates (pixel centers at
    /// integer positions), clamped to the image edge.
    pub fn sample_bilinear(&self, x: f64, y: f64) -> [f64; 3] {
        let x = x.clamp(0.0, (self.width - 1) as f64);
        let y = y.clamp(0.0, (self.height - 1) as f64);
        let (xi, yi) = (x.floor() as u32, y.floor() as u32);
        let (fx, fy) = (x - xi as f64, y - yi as f64);
        let x1 = (xi + 1).min(self.width - 1);
        let y1 = (yi + 1).min(self.height - 1);
        let (p00, p10, p01, p11) = (self.get(xi, yi), self.get(x1, yi), self.get(xi, y1), self.get(x1, y1));
        let mut out = [0.0; 3];
        for c in 0..3 {
            let top = p00[c] + (p10[c] - p00[c]) * fx;
            let bottom = p01[c] + (p11[c] - p01[c]) * fx;
            out[c] = top + (bottom - top) * fy;
        }
        out
    }

    /// Bilinear resize with pixel-center alignment.
    pub fn resize_bilinear(&self, width: u32, height: u32) -> Image {
        if (width, height) == self.dims() {
            return self.clone();
        }
        let sx = self.width as f64 / width as f64;
        let sy = self.height as f64 / height as f64;
        Image::from_fn(width, height, |x, y| self.sample_bilinear((x as f64 + 0.5) * sx - 0.5, (y as f64 + 0.5) * sy - 0.5))
    }

    /// Per-channel median of the outermost pixels.
    pub fn border_median(&self) -> [f64; 3] {
        let (w, h) = self.dims();
        let mut border = Vec::new();
        for x in 0..w {
            border.push(self.get(x, 0));
            border.push(self.get(x, h - 1));
        }
        for y in 0..h {
            border.push(self.get(0, y));
            border.push(self.get(w - 1, y));
        }
        [0, 1, 2].map(|c| {
            let mut v: Vec<f64> = border.iter().map(|p| p[c]).collect();
            v.sort_by(f64::total_cmp);
            v[v.len() / 2]
        })
    }

    /// Pixels outside `mask` replaced by the border median.
    pub fn isolate(&self, mask: &BinaryMask) -> Result<Image, BlendError> {
        check_dims(self.dims(), mask.dims())?;
        let bg = self.border_median();
        Ok(Image::from_fn(self.width, self.height, |x, y| if mask.get(x, y) { self.get(x, y) } else { bg }))
    }

    pub fn to_rgb8(&self) -> RgbImage {
        RgbImage::from_fn(self.width, self.height, |x, y| Rgb(self.get(x, y).map(|v| (v * 255.0).round() as u8)))
    }

    pub fn from_rgb8(img: &RgbImage) -> Image {
        Image { width: img.width(), height: img.height(), data: img.pixels().map(|p| p.0.map(|v| v as f64 / 255.0)).collect() }
    }

    pub fn to_png(&self) -> Result<Vec<u8>, CodecError> {
        let mut out = Cursor::new(Vec::new());
        self.to_rgb8().write_to(&mut out, ImageFormat::Png).map_err(|e| CodecError::Encode(e.to_string()))?;
        Ok(out.into_inner())
    }

    /// Decodes any PNG (gray, RGBA, 16-bit) into RGB; alpha is dropped.
    pub fn from_png(bytes: &[u8]) -> Result<Image, CodecError> {
        let img = image::load_from_memory_with_format(bytes, ImageFormat::Png).map_err(|e| CodecError::Decode(e.to_string()))?;
        if img.width() == 0 || img.height() == 0 {
            return Err(CodecError::Decode("image has zero size".into()));
        }
        Ok(Image::from_rgb8(&img.to_rgb8()))
    }

    pub fn save_png(&self, path: &Path) -> Result<(), CodecError> {
        std::fs::write(path, self.to_png()?).map_err(|e| CodecError::io(path, e))
    }

    pub fn load_png(path: &Path) -> Result<Image, CodecError> {
        let bytes = std::fs::read(path).map_err(|e| CodecError::io(path, e))?;
        Image::from_png(&bytes)
    }

    /// Samples mapped to `[-1, 1]`, row-major, channels interleaved.
    pub fn to_signed_f32(&self) -> Vec<f32> {
        self.data.iter().flat_map(|p| p.map(|v| (2.0 * v - 1.0) as f32)).collect()
    }

    pub fn from_signed_f32(width: u32, height: u32, samples: &[f32]) -> Result<Image, CodecError> {
        let expected = width as usize * height as usize * 3;
        if samples.len() != expected || width == 0 || height == 0 {
            return Err(CodecError::Length { expected, actual: samples.len() });
        }
        let data = samples.chunks_exact(3).map(|c| [0, 1, 2].map(|i| ((c[i] as f64 + 1.0) / 2.0).clamp(0.0, 1.0))).collect();
        Ok(Image { width, height, data })
    }
}

/// The target image with the position-control region set to the masked value.
#[derive(Debug, Clone, PartialEq)]
pub struct MaskedImage {
    pub image: Image,
    pub position: PositionControl,
}

impl MaskedImage {
    /// Little-endian f32 samples in `[-1, 1]`; masked pixels are exactly 0.
    pub fn to_backend_bytes(&self) -> Vec<u8> {
        self.image.to_signed_f32().iter().flat_map(|v| v.to_le_bytes()).collect()
    }
}

pub fn build_masked_image(img: &Image, pos: &PositionControl) -> Result<MaskedImage, BlendError> {
    check_dims(img.dims(), pos.dims())?;
    let image = Image::from_fn(img.width, img.height, |x, y| if pos.get(x, y) { [MASKED_VALUE; 3] } else { img.get(x, y) });
    Ok(MaskedImage { image, position: pos.clone() })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn gradient(w: u32, h: u32) -> Image {
        Image::from_fn(w, h, |x, y| [x as f64 / w as f64, y as f64 / h as f64, 0.25])
    }

    #[test]
    fn masked_image_examples() {
        let img = gradient(20, 10);
        let none = PositionControl(BinaryMask::new(20, 10));
        assert_eq!(build_masked_image(&img, &none).unwrap().image, img);
        let all = PositionControl(BinaryMask::filled(20, 10));
        assert!(build_masked_image(&img, &all).unwrap().image.pixels().iter().all(|p| *p == [MASKED_VALUE; 3]));
        let mut rect = BinaryMask::new(20, 10);
        for y in 2..5 {
            for x in 3..9 {
                rect.set(x, y, true);
            }
        }
        let m = build_masked_image(&img, &PositionControl(rect)).unwrap();
        let bytes = m.to_backend_bytes();
        let samples: Vec<f32> = bytes.chunks_exact(4).map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]])).collect();
        let zero_pixels = samples.chunks_exact(3).filter(|p| p.iter().all(|&v| v == 0.0)).count();
        assert_eq!(zero_pixels, 18);
        let wrong = PositionControl(BinaryMask::new(5, 5));
        assert!(matches!(build_masked_image(&img, &wrong), Err(BlendError::DimensionMismatch { .. })));
    }

    #[test]
    fn bilinear_identity_resize() {
        let img = gradient(16, 9);
        assert_eq!(img.resize_bilinear(16, 9), img);
    }

    proptest! {
        #[test]
        fn png_roundtrip_within_one_level(w in 1u32..12, h in 1u32..12, seed in any::<u32>()) {
            let img = Image::from_fn(w, h, |x, y| {
                let v = ((x * 31 + y * 17 + seed) % 1000) as f64 / 999.0;
                [v, 1.0 - v, (v * 7.0).fract()]
            });
            let back = Image::from_png(&img.to_png().unwrap()).unwrap();
            prop_assert!(img.max_abs_diff(&back) <= 0.5 / 255.0 + 1e-12);
        }

        #[test]
        fn signed_roundtrip(w in 1u32..8, h in 1u32..8) {
            let img = Image::from_fn(w, h, |x, y| [x as f64 / 8.0, y as f64 / 8.0, 0.5]);
            let back = Image::from_signed_f32(w, h, &img.to_signed_f32()).unwrap();
            prop_assert!(img.max_abs_diff(&back) < 1.0 / 255.0);
        }
    }
}
