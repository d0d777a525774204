//! Single-channel binary masks and their 8-bit PNG encoding
//! (ink = 255, background = 0).

use std::io::Cursor;
use std::path::Path;

use image::{GrayImage, ImageFormat, Luma};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CodecError {
    #[error("image decode failed: {0}")]
    Decode(String),
    #[error("image encode failed: {0}")]
    Encode(String),
    #[error("{path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("expected {expected} samples, got {actual}")]
    Length { expected: usize, actual: usize },
}

impl CodecError {
    pub(crate) fn io(path: &Path, source: std::io::Error) -> Self {
        CodecError::Io { path: path.display().to_string(), source }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct BinaryMask {
    width: u32,
    height: u32,
    bits: Vec<u8>,
}

impl BinaryMask {
    pub fn new(width: u32, height: u32) -> Self {
        BinaryMask { width, height, bits: vec![0; width as usize * height as usize] }
    }

    /// Builds a mask from row-major samples; any nonzero sample is ink.
    pub fn from_bits(width: u32, height: u32, bits: Vec<u8>) -> Result<Self, CodecError> {
        let expected = width as usize * height as usize;
        if bits.len() != expected {
            return Err(CodecError::Length { expected, actual: bits.len() });
        }
        Ok(BinaryMask { width, height, bits: bits.into_iter().map(|b| (b != 0) as u8).collect() })
    }

    pub fn filled(width: u32, height: u32) -> Self {
        BinaryMask { width, height, bits: vec![1; width as usize * height as usize] }
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

    /// Row-major samples, each 0 or 1.
    pub fn bits(&self) -> &[u8] {
        &self.bits
    }

    #[inline]
    pub fn get(&self, x: u32, y: u32) -> bool {
        self.bits[y as usize * self.width as usize + x as usize] != 0
    }

    /// Like [`get`](Self::get) but out-of-range coordinates read as background.
    pub fn get_signed(&self, x: i64, y: i64) -> bool {
        x >= 0 && y >= 0 && (x as u64) < self.width as u64 && (y as u64) < self.height as u64 && self.get(x as u32, y as u32)
    }

    #[inline]
    pub fn set(&mut self, x: u32, y: u32, on: bool) {
        self.bits[y as usize * self.width as usize + x as usize] = on as u8;
    }

    pub fn count(&self) -> usize {
        self.bits.iter().filter(|&&b| b != 0).count()
    }

    pub fn is_empty(&self) -> bool {
        self.bits.iter().all(|&b| b == 0)
    }

    /// Logical OR in place. Panics if dimensions differ.
    pub fn union_with(&mut self, other: &BinaryMask) {
        assert_eq!(self.dims(), other.dims(), "mask dimensions differ");
        for (a, b) in self.bits.iter_mut().zip(&other.bits) {
            *a |= *b;
        }
    }

    pub fn intersection_count(&self, other: &BinaryMask) -> usize {
        self.bits.iter().zip(&other.bits).filter(|(a, b)| **a != 0 && **b != 0).count()
    }

    pub fn is_subset_of(&self, other: &BinaryMask) -> bool {
        self.dims() == other.dims() && self.bits.iter().zip(&other.bits).all(|(a, b)| *a == 0 || *b != 0)
    }

    /// Set pixels as `(x, y)` pairs in row-major order.
    pub fn ink_pixels(&self) -> impl Iterator<Item = (u32, u32)> + '_ {
        let w = self.width as usize;
        self.bits.iter().enumerate().filter(|(_, &b)| b != 0).map(move |(i, _)| ((i % w) as u32, (i / w) as u32))
    }

    /// Rectangular sub-mask. Panics if the rectangle leaves the mask.
    pub fn crop(&self, x0: u32, y0: u32, w: u32, h: u32) -> BinaryMask {
        assert!(x0 + w <= self.width && y0 + h <= self.height, "crop outside mask");
        let mut out = BinaryMask::new(w, h);
        for y in 0..h {
            for x in 0..w {
                out.set(x, y, self.get(x0 + x, y0 + y));
            }
        }
        out
    }

    /// True if any set pixel lies on the outermost row or column.
    pub fn touches_border(&self) -> bool {
        let (w, h) = self.dims();
        if w == 0 || h == 0 {
            return false;
        }
        (0..w).any(|x| self.get(x, 0) || self.get(x, h - 1)) || (0..h).any(|y| self.get(0, y) || self.get(w - 1, y))
    }

    pub fn to_gray_image(&self) -> GrayImage {
        GrayImage::from_fn(self.width, self.height, |x, y| Luma([if self.get(x, y) { 255 } else { 0 }]))
    }

    /// Samples at or above 128 are ink.
    pub fn from_gray_image(img: &GrayImage) -> Self {
        let bits = img.pixels().map(|p| (p.0[0] >= 128) as u8).collect();
        BinaryMask { width: img.width(), height: img.height(), bits }
    }

    pub fn to_png(&self) -> Result<Vec<u8>, CodecError> {
        let mut out = Cursor::new(Vec::new());
        self.to_gray_image().write_to(&mut out, ImageFormat::Png).map_err(|e| CodecError::Encode(e.to_string()))?;
        Ok(out.into_inner())
    }

    pub fn from_png(bytes: &[u8]) -> Result<Self, CodecError> {
        let img = image::load_from_memory_with_format(bytes, ImageFormat::Png).map_err(|e| CodecError::Decode(e.to_string()))?;
        Ok(Self::from_gray_image(&img.to_luma8()))
    }

    pub fn save_png(&self, path: &Path) -> Result<(), CodecError> {
        std::fs::write(path, self.to_png()?).map_err(|e| CodecError::io(path, e))
    }

    pub fn load_png(path: &Path) -> Result<Self, CodecError> {
        let bytes = std::fs::read(path).map_err(|e| CodecError::io(path, e))?;
        Self::from_png(&bytes)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    proptest! {
        #[test]
        fn png_roundtrip_is_bit_exact(w in 1u32..40, h in 1u32..40, seed in any::<u64>()) {
            let bits: Vec<u8> = (0..(w * h) as u64).map(|i| ((seed.rotate_left((i % 64) as u32) ^ i) & 1) as u8).collect();
            let mask = BinaryMask::from_bits(w, h, bits).unwrap();
            let again = BinaryMask::from_png(&mask.to_png().unwrap()).unwrap();
            prop_assert_eq!(mask, again);
        }
    }

    #[test]
    fn png_samples_are_0_or_255() {
        let mut m = BinaryMask::new(3, 2);
        m.set(1, 1, true);
        let gray = image::load_from_memory(&m.to_png().unwrap()).unwrap().to_luma8();
        assert_eq!(gray.as_raw(), &vec![0, 0, 0, 0, 255, 0]);
    }

    #[test]
    fn border_detection() {
        let mut m = BinaryMask::new(5, 5);
        m.set(2, 2, true);
        assert!(!m.touches_border());
        m.set(4, 3, true);
        assert!(m.touches_border());
    }
}
