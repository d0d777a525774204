//! TrueType (`glyf`) font loading.
//!
//! Only the tables needed to turn text into outlines are read: `head`,
//! `maxp`, `cmap` (formats 4 and 12), `loca`, `glyf`, `hhea` and `hmtx`.
//! Composite glyphs made of translated components are flattened at load
//! time. Table checksums are not verified.

mod cmap;
mod glyf;
mod outline;
mod reader;

use std::collections::BTreeMap;
use std::fmt;

use thiserror::Error;

pub use glyf::GlyphSlot;
pub use outline::{BBox, Contour, GlyphOutline, OutlinePoint, Segment};
use reader::Reader;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum FontError {
    #[error("malformed font{}: {reason}", table.as_deref().map(|t| format!(" ({t} table)")).unwrap_or_default())]
    MalformedFont { table: Option<String>, reason: String },
    #[error("missing required table '{0}'")]
    MissingTable(String),
    #[error("unsupported font feature: {0}")]
    UnsupportedFeature(String),
    #[error("glyph index {index} out of range (font has {count} glyphs)")]
    IndexOutOfRange { index: u32, count: usize },
}

impl FontError {
    pub(crate) fn malformed(table: &str, reason: impl Into<String>) -> Self {
        FontError::MalformedFont { table: Some(table.trim().to_string()), reason: reason.into() }
    }

    fn header(reason: impl Into<String>) -> Self {
        FontError::MalformedFont { table: None, reason: reason.into() }
    }

    /// The table a malformed-font error refers to, if any.
    pub fn table(&self) -> Option<&str> {
        match self {
            FontError::MalformedFont { table, .. } => table.as_deref(),
            FontError::MissingTable(t) => Some(t),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct GlyphId(pub u16);

impl fmt::Display for GlyphId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "gid{}", self.0)
    }
}

/// A loaded font. Immutable after [`load_font`].
#[derive(Debug, Clone, PartialEq)]
pub struct Font {
    units_per_em: u16,
    ascent: i16,
    descent: i16,
    codepoint_map: BTreeMap<char, u16>,
    glyphs: Vec<GlyphSlot>,
    advance_widths: Vec<u16>,
}

const REQUIRED: [&str; 7] = ["head", "maxp", "cmap", "loca", "glyf", "hhea", "hmtx"];

struct TableRecord {
    tag: [u8; 4],
    offset: usize,
    length: usize,
}

impl TableRecord {
    fn name(&self) -> String {
        String::from_utf8_lossy(&self.tag).trim_end().to_string()
    }
}

/// Parses a TrueType font file.
pub fn load_font(bytes: &[u8]) -> Result<Font, FontError> {
    if bytes.len() < 12 {
        return Err(FontError::header(format!("{} bytes is too short for an offset table", bytes.len())));
    }
    let file = Reader::new(bytes, "header");
    match file.u32(0)? {
        0x0001_0000 | 0x7472_7565 => {}
        0x4F54_544F => return Err(FontError::UnsupportedFeature("CFF (PostScript) outlines".into())),
        0x7474_6366 => return Err(FontError::UnsupportedFeature("font collections".into())),
        v => return Err(FontError::header(format!("unknown sfnt version 0x{v:08x}"))),
    }
    let num_tables = file.u16(4)? as usize;
    let mut records = Vec::with_capacity(num_tables);
    for i in 0..num_tables {
        let rec = 12 + i * 16;
        let raw = file.slice(rec, 16).map_err(|_| FontError::header("table directory is truncated"))?;
        let tag = [raw[0], raw[1], raw[2], raw[3]];
        let offset = file.u32(rec + 8)? as usize;
        let length = file.u32(rec + 12)? as usize;
        let record = TableRecord { tag, offset, length };
        if offset.checked_add(length).is_none_or(|end| end > bytes.len()) {
            return Err(FontError::malformed(
                &record.name(),
                format!("table at offset {offset} with length {length} runs past end of file ({} bytes)", bytes.len()),
            ));
        }
        records.push(record);
    }
    check_overlaps(&records)?;

    let find = |name: &str| records.iter().find(|r| r.name() == name);
    if find("fvar").is_some() {
        return Err(FontError::UnsupportedFeature("variable fonts".into()));
    }
    if find("glyf").is_none() && (find("CFF").is_some() || find("CFF2").is_some()) {
        return Err(FontError::UnsupportedFeature("CFF (PostScript) outlines".into()));
    }
    for name in REQUIRED {
        if find(name).is_none() {
            return Err(FontError::MissingTable(name.to_string()));
        }
    }
    let table = |name: &'static str| {
        let r = find(name).expect("presence checked above");
        Reader::new(&bytes[r.offset..r.offset + r.length], name)
    };

    let head = table("head");
    let units_per_em = head.u16(18)?;
    if units_per_em == 0 {
        return Err(FontError::malformed("head", "unitsPerEm is zero"));
    }
    let long_offsets = match head.i16(50)? {
        0 => false,
        1 => true,
        v => return Err(FontError::malformed("head", format!("indexToLocFormat {v}"))),
    };

    let num_glyphs = table("maxp").u16(4)?;

    let hhea = table("hhea");
    let ascent = hhea.i16(4)?;
    let descent = hhea.i16(6)?;
    let num_hmetrics = (hhea.u16(34)? as usize).min(num_glyphs as usize);
    if num_hmetrics == 0 && num_glyphs > 0 {
        return Err(FontError::malformed("hhea", "numberOfHMetrics is zero"));
    }

    let hmtx = table("hmtx");
    let mut advance_widths = Vec::with_capacity(num_glyphs as usize);
    for i in 0..num_hmetrics {
        advance_widths.push(hmtx.u16(i * 4)?);
    }
    let last = advance_widths.last().copied().unwrap_or(0);
    advance_widths.resize(num_glyphs as usize, last);

    let glyf = glyf::GlyfTable::new(table("glyf"), table("loca"), num_glyphs, long_offsets)?;
    let glyphs = glyf.parse_all()?;

    let codepoint_map = cmap::parse_cmap(table("cmap"), num_glyphs)?;

    Ok(Font { units_per_em, ascent, descent, codepoint_map, glyphs, advance_widths })
}

fn check_overlaps(records: &[TableRecord]) -> Result<(), FontError> {
    let mut spans: Vec<&TableRecord> = records.iter().filter(|r| r.length > 0).collect();
    spans.sort_by_key(|r| r.offset);
    for pair in spans.windows(2) {
        if pair[0].offset + pair[0].length > pair[1].offset {
            return Err(FontError::malformed(&pair[1].name(), format!("overlaps table '{}'", pair[0].name())));
        }
    }
    Ok(())
}

impl Font {
    pub fn units_per_em(&self) -> u16 {
        self.units_per_em
    }

    pub fn ascent(&self) -> i16 {
        self.ascent
    }

    pub fn descent(&self) -> i16 {
        self.descent
    }

    pub fn glyph_count(&self) -> usize {
        self.glyphs.len()
    }

    pub fn codepoint_map(&self) -> &BTreeMap<char, u16> {
        &self.codepoint_map
    }

    pub fn advance_widths(&self) -> &[u16] {
        &self.advance_widths
    }

    /// The glyph mapped to `c`, if any. Unmapped codepoints are not an error.
    pub fn glyph_index(&self, c: char) -> Option<GlyphId> {
        self.codepoint_map.get(&c).map(|&g| GlyphId(g))
    }

    pub fn glyph_slot(&self, id: GlyphId) -> Result<&GlyphSlot, FontError> {
        self.glyphs.get(id.0 as usize).ok_or(FontError::IndexOutOfRange { index: id.0 as u32, count: self.glyphs.len() })
    }

    pub fn glyph_outline(&self, id: GlyphId) -> Result<&GlyphOutline, FontError> {
        match self.glyph_slot(id)? {
            GlyphSlot::Outline(o) => Ok(o),
            GlyphSlot::Unsupported(why) => Err(FontError::UnsupportedFeature(format!("glyph {}: {why}", id.0))),
        }
    }

    pub fn advance_width(&self, id: GlyphId) -> Result<u16, FontError> {
        self.advance_widths.get(id.0 as usize).copied().ok_or(FontError::IndexOutOfRange { index: id.0 as u32, count: self.glyphs.len() })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::Point;

    const TESTSQUARE: &[u8] = include_bytes!("../../fixtures/fonts/testsquare.ttf");
    const TESTCMAP12: &[u8] = include_bytes!("../../fixtures/fonts/testcmap12.ttf");
    const TESTCFF: &[u8] = include_bytes!("../../fixtures/fonts/testcff.otf");

    #[test]
    fn testsquare_basics() {
        let font = load_font(TESTSQUARE).unwrap();
        assert_eq!(font.units_per_em(), 1000);
        assert_eq!(font.glyph_index('A'), Some(GlyphId(1)));
        assert_eq!(font.glyph_index('☃'), None);
        assert_eq!(font.glyph_index('\0'), None);
        assert_eq!(font.advance_widths().len(), font.glyph_count());
        assert_eq!(font.advance_width(GlyphId(1)).unwrap(), 1000);
    }

    #[test]
    fn square_glyph_outline() {
        let font = load_font(TESTSQUARE).unwrap();
        let a = font.glyph_outline(GlyphId(1)).unwrap();
        assert_eq!(a.contours.len(), 1);
        assert_eq!(a.contours[0].segments.len(), 4);
        assert!(a.contours[0].segments.iter().all(|s| matches!(s, Segment::Line { .. })));
        assert_eq!(a.bbox, BBox { xmin: 100.0, ymin: 100.0, xmax: 900.0, ymax: 900.0 });
    }

    #[test]
    fn space_is_empty() {
        let font = load_font(TESTSQUARE).unwrap();
        let space = font.glyph_outline(font.glyph_index(' ').unwrap()).unwrap();
        assert!(space.contours.is_empty());
    }

    #[test]
    fn implied_midpoint_materialized() {
        let font = load_font(TESTSQUARE).unwrap();
        let b = font.glyph_outline(font.glyph_index('B').unwrap()).unwrap();
        let ends: Vec<Point> = b.contours[0].segments.iter().map(|s| s.end()).collect();
        assert!(ends.contains(&Point::new(100.0, 0.0)));
    }

    #[test]
    fn translated_composite_is_flattened() {
        let font = load_font(TESTSQUARE).unwrap();
        let c = font.glyph_outline(font.glyph_index('C').unwrap()).unwrap();
        assert_eq!(c.bbox, BBox { xmin: 150.0, ymin: 100.0, xmax: 950.0, ymax: 900.0 });
    }

    #[test]
    fn scaled_composite_is_unsupported() {
        let font = load_font(TESTSQUARE).unwrap();
        let d = font.glyph_index('D').unwrap();
        assert!(matches!(font.glyph_outline(d), Err(FontError::UnsupportedFeature(_))));
    }

    #[test]
    fn index_out_of_range() {
        let font = load_font(TESTSQUARE).unwrap();
        assert_eq!(font.glyph_outline(GlyphId(500)), Err(FontError::IndexOutOfRange { index: 500, count: font.glyph_count() }));
    }

    #[test]
    fn format12_preferred() {
        let font = load_font(TESTCMAP12).unwrap();
        assert_eq!(font.glyph_index('\u{1F600}'), Some(GlyphId(3)));
        assert_eq!(font.glyph_index('A'), Some(GlyphId(1)));
    }

    #[test]
    fn cff_rejected() {
        assert!(matches!(load_font(TESTCFF), Err(FontError::UnsupportedFeature(_))));
    }

    #[test]
    fn short_input_is_malformed() {
        for len in 0..12 {
            assert!(matches!(load_font(&TESTSQUARE[..len]), Err(FontError::MalformedFont { .. })));
        }
    }
}
