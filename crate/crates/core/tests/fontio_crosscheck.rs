//! Compares the font reader against ttf-parser on every fixture font.

mod common;

use glyphctl::fontio::{load_font, GlyphId, GlyphSlot, Segment};
use glyphctl::geometry::Point;

#[derive(Debug, Clone, Copy, PartialEq)]
enum Seg {
    Line(Point, Point),
    Quad(Point, Point, Point),
}

#[derive(Default)]
struct Collect {
    contours: Vec<Vec<Seg>>,
    start: Point,
    cur: Point,
}

impl ttf_parser::OutlineBuilder for Collect {
    fn move_to(&mut self, x: f32, y: f32) {
        self.contours.push(Vec::new());
        self.start = Point::new(x as f64, y as f64);
        self.cur = self.start;
    }
    fn line_to(&mut self, x: f32, y: f32) {
        let p = Point::new(x as f64, y as f64);
        self.contours.last_mut().unwrap().push(Seg::Line(self.cur, p));
        self.cur = p;
    }
    fn quad_to(&mut self, x1: f32, y1: f32, x: f32, y: f32) {
        let p = Point::new(x as f64, y as f64);
        self.contours.last_mut().unwrap().push(Seg::Quad(self.cur, Point::new(x1 as f64, y1 as f64), p));
        self.cur = p;
    }
    fn curve_to(&mut self, _: f32, _: f32, _: f32, _: f32, _: f32, _: f32) {
        panic!("cubic in a TrueType font");
    }
    fn close(&mut self) {
        if self.cur != self.start {
            let (cur, start) = (self.cur, self.start);
            self.contours.last_mut().unwrap().push(Seg::Line(cur, start));
        }
    }
}

fn normalize(c: &[Seg]) -> Vec<Seg> {
    let mut v: Vec<Seg> = c.iter().copied().filter(|s| !matches!(s, Seg::Line(a, b) if a == b)).collect();
    // rotate so the lexicographically smallest start comes first
    let key = |s: &Seg| match s {
        Seg::Line(a, _) | Seg::Quad(a, _, _) => (a.x, a.y),
    };
    if let Some(i) = (0..v.len()).min_by(|&i, &j| key(&v[i]).partial_cmp(&key(&v[j])).unwrap().then(i.cmp(&j))) {
        v.rotate_left(i);
    }
    v
}

fn ours(segs: &[Segment]) -> Vec<Seg> {
    segs.iter()
        .map(|s| match *s {
            Segment::Line { from, to } => Seg::Line(from, to),
            Segment::Quad { from, ctrl, to } => Seg::Quad(from, ctrl, to),
        })
        .collect()
}

fn fonts() -> Vec<String> {
    let mut v: Vec<String> = ["testsquare.ttf", "testcmap12.ttf", "DejaVuSans.ttf"].iter().map(|s| s.to_string()).collect();
    v.extend(common::STROKE_FONTS.iter().map(|s| s.to_string()));
    v
}

#[test]
fn outlines_cmap_and_metrics_agree() {
    for name in fonts() {
        let bytes = std::fs::read(common::fixtures().join("fonts").join(&name)).unwrap();
        let font = load_font(&bytes).unwrap();
        let face = ttf_parser::Face::parse(&bytes, 0).unwrap();
        assert_eq!(font.glyph_count(), face.number_of_glyphs() as usize, "{name}");
        assert_eq!(font.units_per_em(), face.units_per_em(), "{name}");

        let mut mapped = 0;
        for (&c, &g) in font.codepoint_map() {
            assert_eq!(face.glyph_index(c).map(|g| g.0), Some(g), "{name} U+{:04X}", c as u32);
            mapped += 1;
        }
        assert!(mapped > 0);

        let (mut compared, mut unsupported) = (0, 0);
        for gid in 0..font.glyph_count() as u16 {
            assert_eq!(
                Some(font.advance_width(GlyphId(gid)).unwrap()),
                face.glyph_hor_advance(ttf_parser::GlyphId(gid)),
                "{name} glyph {gid}"
            );
            let mut collect = Collect::default();
            let theirs = face.outline_glyph(ttf_parser::GlyphId(gid), &mut collect);
            match font.glyph_slot(GlyphId(gid)).unwrap() {
                GlyphSlot::Unsupported(_) => unsupported += 1,
                GlyphSlot::Outline(o) => {
                    compared += 1;
                    if o.is_empty() {
                        assert!(theirs.is_none() || collect.contours.iter().all(|c| c.is_empty()), "{name} glyph {gid}");
                        continue;
                    }
                    let mut a: Vec<Vec<Seg>> = o.contours.iter().map(|c| normalize(&ours(&c.segments))).collect();
                    let b: Vec<Vec<Seg>> = collect.contours.iter().map(|c| normalize(c)).filter(|c| !c.is_empty()).collect();
                    a.retain(|c| !c.is_empty());
                    assert_eq!(a, b, "{name} glyph {gid}");
                }
            }
        }
        assert!(compared > 0, "{name}");
        if name == "DejaVuSans.ttf" {
            // composites with scaled or rotated components are refused per glyph
            assert!(unsupported < compared / 10, "{unsupported} unsupported of {compared}");
        }
    }
}

#[test]
fn truncated_and_corrupted_fonts_never_panic() {
    let bytes = std::fs::read(common::fixtures().join("fonts").join("strokes-round.ttf")).unwrap();
    for len in (0..bytes.len()).step_by(7) {
        let _ = load_font(&bytes[..len]);
    }
    let mut state = 0x9E37_79B9_7F4A_7C15u64;
    for _ in 0..2000 {
        let mut b = bytes.clone();
        for _ in 0..8 {
            state ^= state << 13;
            state ^= state >> 7;
            state ^= state << 17;
            let i = (state % b.len() as u64) as usize;
            b[i] = (state >> 32) as u8;
        }
        if let Ok(f) = load_font(&b) {
            for g in 0..f.glyph_count() as u16 {
                let _ = f.glyph_outline(GlyphId(g));
            }
        }
    }
}
