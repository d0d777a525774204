use super::outline::{GlyphOutline, OutlinePoint};
use super::reader::{Cursor, Reader};
use super::FontError;

const ON_CURVE: u8 = 0x01;
const X_SHORT: u8 = 0x02;
const Y_SHORT: u8 = 0x04;
const REPEAT: u8 = 0x08;
const X_SAME_OR_POSITIVE: u8 = 0x10;
const Y_SAME_OR_POSITIVE: u8 = 0x20;

const ARG_1_AND_2_ARE_WORDS: u16 = 0x0001;
const ARGS_ARE_XY_VALUES: u16 = 0x0002;
const WE_HAVE_A_SCALE: u16 = 0x0008;
const MORE_COMPONENTS: u16 = 0x0020;
const WE_HAVE_AN_X_AND_Y_SCALE: u16 = 0x0040;
const WE_HAVE_A_TWO_BY_TWO: u16 = 0x0080;

const MAX_COMPONENT_DEPTH: usize = 8;
// glyph visits allowed while resolving one composite
const COMPONENT_BUDGET: usize = 1 << 14;
const MAX_COMPOSITE_POINTS: usize = 1 << 20;
const F2DOT14_ONE: i16 = 0x4000;

/// A parsed glyph, or the reason it cannot be represented.
#[derive(Debug, Clone, PartialEq)]
pub enum GlyphSlot {
    Outline(GlyphOutline),
    Unsupported(String),
}

type PointContours = Vec<Vec<OutlinePoint>>;

enum Resolved {
    Points(PointContours),
    Unsupported(String),
}

pub(crate) struct GlyfTable<'a> {
    glyf: Reader<'a>,
    offsets: Vec<u32>,
}

impl<'a> GlyfTable<'a> {
    pub fn new(glyf: Reader<'a>, loca: Reader<'a>, num_glyphs: u16, long_offsets: bool) -> Result<Self, FontError> {
        let count = num_glyphs as usize + 1;
        let mut offsets = Vec::with_capacity(count);
        for i in 0..count {
            let off = if long_offsets { loca.u32(i * 4)? } else { loca.u16(i * 2)? as u32 * 2 };
            offsets.push(off);
        }
        for (i, pair) in offsets.windows(2).enumerate() {
            if pair[1] < pair[0] {
                return Err(FontError::malformed("loca", format!("offsets decrease at glyph {i}")));
            }
        }
        if let Some(&last) = offsets.last() {
            if last as usize > glyf.len() {
                return Err(FontError::malformed(
                    "glyf",
                    format!("loca offset {last} points past the end of glyf (length {})", glyf.len()),
                ));
            }
        }
        Ok(GlyfTable { glyf, offsets })
    }

    pub fn glyph_count(&self) -> usize {
        self.offsets.len() - 1
    }

    pub fn parse_all(&self) -> Result<Vec<GlyphSlot>, FontError> {
        (0..self.glyph_count())
            .map(|i| {
                let mut budget = COMPONENT_BUDGET;
                Ok(match self.resolve(i, 0, &mut budget)? {
                    Resolved::Points(contours) => GlyphSlot::Outline(GlyphOutline::from_points(&contours)),
                    Resolved::Unsupported(why) => GlyphSlot::Unsupported(why),
                })
            })
            .collect()
    }

    fn resolve(&self, index: usize, depth: usize, budget: &mut usize) -> Result<Resolved, FontError> {
        if *budget == 0 {
            return Err(FontError::malformed("glyf", format!("composite glyph {index} expands to too many components")));
        }
        *budget -= 1;
        if depth > MAX_COMPONENT_DEPTH {
            return Err(FontError::malformed("glyf", format!("composite nesting deeper than {MAX_COMPONENT_DEPTH} at glyph {index}")));
        }
        let start = self.offsets[index] as usize;
        let end = self.offsets[index + 1] as usize;
        if start == end {
            return Ok(Resolved::Points(Vec::new()));
        }
        let data = Reader::new(self.glyf.slice(start, end - start)?, "glyf");
        let num_contours = data.i16(0)?;
        if num_contours >= 0 {
            simple_glyph(data, num_contours as usize).map(Resolved::Points)
        } else {
            self.composite_glyph(data, depth, budget)
        }
    }

    fn composite_glyph(&self, data: Reader<'_>, depth: usize, budget: &mut usize) -> Result<Resolved, FontError> {
        let mut cur = Cursor::new(data, 10);
        let mut out: PointContours = Vec::new();
        loop {
            let flags = cur.u16()?;
            let component = cur.u16()? as usize;
            let (dx, dy) = if flags & ARG_1_AND_2_ARE_WORDS != 0 {
                (cur.i16()? as f64, cur.i16()? as f64)
            } else {
                (cur.u8()? as i8 as f64, cur.u8()? as i8 as f64)
            };
            let mut scale = [F2DOT14_ONE, 0, 0, F2DOT14_ONE];
            if flags & WE_HAVE_A_SCALE != 0 {
                let s = cur.i16()?;
                scale = [s, 0, 0, s];
            } else if flags & WE_HAVE_AN_X_AND_Y_SCALE != 0 {
                scale = [cur.i16()?, 0, 0, cur.i16()?];
            } else if flags & WE_HAVE_A_TWO_BY_TWO != 0 {
                scale = [cur.i16()?, cur.i16()?, cur.i16()?, cur.i16()?];
            }
            if component >= self.glyph_count() {
                return Err(FontError::malformed("glyf", format!("component references glyph {component} past glyph count")));
            }
            if flags & ARGS_ARE_XY_VALUES == 0 {
                return Ok(Resolved::Unsupported("composite component positioned by point matching".into()));
            }
            if scale != [F2DOT14_ONE, 0, 0, F2DOT14_ONE] {
                return Ok(Resolved::Unsupported("composite component with scale or rotation".into()));
            }
            match self.resolve(component, depth + 1, budget)? {
                Resolved::Points(contours) => {
                    out.extend(
                        contours
                            .into_iter()
                            .map(|c| c.into_iter().map(|p| OutlinePoint { x: p.x + dx, y: p.y + dy, on_curve: p.on_curve }).collect()),
                    );
                    if out.iter().map(Vec::len).sum::<usize>() > MAX_COMPOSITE_POINTS {
                        return Err(FontError::malformed("glyf", "composite glyph expands past the point limit"));
                    }
                }
                unsupported => return Ok(unsupported),
            }
            if flags & MORE_COMPONENTS == 0 {
                break;
            }
        }
        Ok(Resolved::Points(out))
    }
}

fn simple_glyph(data: Reader<'_>, num_contours: usize) -> Result<PointContours, FontError> {
    let mut cur = Cursor::new(data, 10);
    let mut end_points = Vec::with_capacity(num_contours);
    for _ in 0..num_contours {
        end_points.push(cur.u16()? as usize);
    }
    if end_points.windows(2).any(|w| w[1] < w[0]) {
        return Err(FontError::malformed("glyf", "contour end points are not increasing"));
    }
    let num_points = end_points.last().map_or(0, |&e| e + 1);
    let instruction_len = cur.u16()? as usize;
    cur.skip(instruction_len)?;

    let mut flags = Vec::with_capacity(num_points);
    while flags.len() < num_points {
        let flag = cur.u8()?;
        flags.push(flag);
        if flag & REPEAT != 0 {
            let repeat = cur.u8()? as usize;
            if flags.len() + repeat > num_points {
                return Err(FontError::malformed("glyf", "flag repeat count runs past point count"));
            }
            flags.extend(std::iter::repeat_n(flag, repeat));
        }
    }

    let xs = read_coords(&mut cur, &flags, X_SHORT, X_SAME_OR_POSITIVE)?;
    let ys = read_coords(&mut cur, &flags, Y_SHORT, Y_SAME_OR_POSITIVE)?;

    let mut contours = Vec::with_capacity(num_contours);
    let mut first = 0;
    for &end in &end_points {
        contours
            .push((first..=end).map(|i| OutlinePoint { x: xs[i] as f64, y: ys[i] as f64, on_curve: flags[i] & ON_CURVE != 0 }).collect());
        first = end + 1;
    }
    Ok(contours)
}

fn read_coords(cur: &mut Cursor<'_>, flags: &[u8], short: u8, same_or_positive: u8) -> Result<Vec<i32>, FontError> {
    let mut value = 0i32;
    let mut out = Vec::with_capacity(flags.len());
    for &flag in flags {
        if flag & short != 0 {
            let d = cur.u8()? as i32;
            value += if flag & same_or_positive != 0 { d } else { -d };
        } else if flag & same_or_positive == 0 {
            value += cur.i16()? as i32;
        }
        out.push(value);
    }
    Ok(out)
}
