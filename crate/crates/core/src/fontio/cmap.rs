use std::collections::BTreeMap;

use super::reader::Reader;
use super::FontError;

// Upper bound on the number of codepoints a subtable may expand to.
// Overlapping segments in a hostile file could otherwise make expansion
// arbitrarily slow.
const MAX_EXPANDED: u64 = 0x11_0000 * 2;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
enum Format {
    Segmented4,
    Segmented12,
}

/// Parses the best supported `cmap` subtable. Format 12 wins over format 4.
pub(crate) fn parse_cmap(cmap: Reader<'_>, num_glyphs: u16) -> Result<BTreeMap<char, u16>, FontError> {
    let num_tables = cmap.u16(2)? as usize;
    let mut best: Option<(Format, usize)> = None;
    for i in 0..num_tables {
        let rec = 4 + i * 8;
        let platform = cmap.u16(rec)?;
        let encoding = cmap.u16(rec + 2)?;
        let offset = cmap.u32(rec + 4)? as usize;
        let unicode = matches!((platform, encoding), (0, _) | (3, 1) | (3, 10));
        if !unicode {
            continue;
        }
        let format = match cmap.u16(offset)? {
            4 => Format::Segmented4,
            12 => Format::Segmented12,
            _ => continue,
        };
        if best.is_none_or(|(f, _)| format > f) {
            best = Some((format, offset));
        }
    }
    let (format, offset) = best.ok_or_else(|| FontError::UnsupportedFeature("no format 4 or 12 Unicode cmap subtable".into()))?;
    let sub = cmap.sub(offset)?;
    let mut map = match format {
        Format::Segmented4 => parse_format4(sub)?,
        Format::Segmented12 => parse_format12(sub)?,
    };
    map.retain(|&c, &mut g| g < num_glyphs && (g != 0 || c == '\0'));
    Ok(map)
}

fn parse_format4(sub: Reader<'_>) -> Result<BTreeMap<char, u16>, FontError> {
    let seg_count = (sub.u16(6)? / 2) as usize;
    let ends = 14;
    let starts = ends + seg_count * 2 + 2;
    let deltas = starts + seg_count * 2;
    let range_offsets = deltas + seg_count * 2;
    let mut map = BTreeMap::new();
    let mut expanded: u64 = 0;
    for i in 0..seg_count {
        let end = sub.u16(ends + i * 2)? as u32;
        let start = sub.u16(starts + i * 2)? as u32;
        let delta = sub.u16(deltas + i * 2)?;
        let range_pos = range_offsets + i * 2;
        let range_offset = sub.u16(range_pos)? as usize;
        if start > end {
            continue;
        }
        expanded += (end - start + 1) as u64;
        if expanded > MAX_EXPANDED {
            return Err(FontError::malformed("cmap", "format 4 segments overlap excessively"));
        }
        for c in start..=end {
            if c == 0xFFFF {
                continue;
            }
            let glyph = if range_offset == 0 {
                (c as u16).wrapping_add(delta)
            } else {
                let addr = range_pos + range_offset + 2 * (c - start) as usize;
                match sub.u16(addr)? {
                    0 => 0,
                    g => g.wrapping_add(delta),
                }
            };
            if let Some(ch) = char::from_u32(c) {
                map.insert(ch, glyph);
            }
        }
    }
    Ok(map)
}

fn parse_format12(sub: Reader<'_>) -> Result<BTreeMap<char, u16>, FontError> {
    let groups = sub.u32(12)? as usize;
    // each group is 12 bytes; check the whole array fits before iterating
    sub.slice(16, groups.checked_mul(12).ok_or_else(|| FontError::malformed("cmap", "group count overflow"))?)?;
    let mut map = BTreeMap::new();
    let mut expanded: u64 = 0;
    for i in 0..groups {
        let rec = 16 + i * 12;
        let start = sub.u32(rec)?;
        let end = sub.u32(rec + 4)?.min(0x10FFFF);
        let start_glyph = sub.u32(rec + 8)?;
        if start > end {
            continue;
        }
        expanded += (end - start + 1) as u64;
        if expanded > MAX_EXPANDED {
            return Err(FontError::malformed("cmap", "format 12 groups expand past the Unicode range"));
        }
        for c in start..=end {
            let glyph = start_glyph as u64 + (c - start) as u64;
            if glyph > u16::MAX as u64 {
                break;
            }
            if let Some(ch) = char::from_u32(c) {
                map.insert(ch, glyph as u16);
            }
        }
    }
    Ok(map)
}
