#![allow(dead_code)]

use std::path::{Path, PathBuf};
use std::sync::Arc;

use glyphctl::blend::Image;
use glyphctl::fontio::{load_font, Font};
use glyphctl::fontmetric::{build_reference_classifier, ReferenceClassifier};
use glyphctl::geometry::Quad;
use glyphctl::glyphraster::{compose_glyph_control, LineSpec, Orientation, TextLayout};

pub fn fixtures() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures")
}

pub fn font(name: &str) -> Arc<Font> {
    let bytes = std::fs::read(fixtures().join("fonts").join(name)).expect("fixture font");
    Arc::new(load_font(&bytes).expect("fixture font parses"))
}

pub const STROKE_FONTS: [&str; 4] = ["strokes-thin.ttf", "strokes-bold.ttf", "strokes-slant.ttf", "strokes-round.ttf"];

/// The 64 generated stroke fonts under `fonts/family`, sorted by name.
pub fn family() -> Vec<(String, Arc<Font>)> {
    let dir = fixtures().join("fonts").join("family");
    let mut names: Vec<String> = std::fs::read_dir(&dir).unwrap().map(|e| e.unwrap().file_name().to_string_lossy().into_owned()).collect();
    names.sort();
    names.into_iter().map(|n| (n.clone(), font(&format!("family/{n}")))).collect()
}

pub fn reference_classifier() -> ReferenceClassifier {
    build_reference_classifier(&family(), "HELLO", (160, 48), 0.1).expect("reference classifier")
}

pub struct EvalEntry {
    pub id: &'static str,
    pub language: &'static str,
    pub text: &'static str,
    pub font: &'static str,
}

pub const EVAL_ENTRIES: [EvalEntry; 4] = [
    EvalEntry { id: "e0", language: "en", text: "HELLO", font: "family/strokes-w030-s0-sq.ttf" },
    EvalEntry { id: "e1", language: "en", text: "WORLD", font: "family/strokes-w080-s1-rd.ttf" },
    EvalEntry { id: "e2", language: "num", text: "2024", font: "family/strokes-w050-s3-sq.ttf" },
    EvalEntry { id: "e3", language: "num", text: "731", font: "family/strokes-w100-s2-rd.ttf" },
];

/// Writes a benchmark whose outputs are the ground-truth renderings of their
/// own glyph controls, with OCR sidecars reading the target text exactly.
/// Returns `(manifest, outputs_dir)`.
pub fn write_self_eval_fixture(dir: &Path) -> (PathBuf, PathBuf) {
    let outputs = dir.join("outputs");
    std::fs::create_dir_all(&outputs).unwrap();
    let (w, h) = (200u32, 80u32);
    let polygon = [[20.0, 16.0], [180.0, 16.0], [180.0, 64.0], [20.0, 64.0]];
    let mut manifest = String::new();
    for e in &EVAL_ENTRIES {
        let layout = TextLayout {
            lines: vec![LineSpec {
                text: e.text.into(),
                font: font(e.font),
                quad: Quad::from_rect(20.0, 16.0, 180.0, 64.0),
                orientation: Orientation::Horizontal,
            }],
        };
        let glyph = compose_glyph_control(&layout, w, h).unwrap();
        let glyph_path = format!("{}_glyph.png", e.id);
        glyph.save_png(&dir.join(&glyph_path)).unwrap();
        Image::from_mask(&glyph).save_png(&outputs.join(format!("{}.png", e.id))).unwrap();
        let ocr = serde_json::json!([{ "text": e.text, "confidence": 1.0 }]);
        std::fs::write(outputs.join(format!("{}.ocr.json", e.id)), ocr.to_string()).unwrap();
        let rec = serde_json::json!({
            "id": e.id, "language": e.language, "text": e.text, "glyph_path": glyph_path, "polygon": polygon,
        });
        manifest.push_str(&rec.to_string());
        manifest.push('\n');
    }
    let path = dir.join("eval.jsonl");
    std::fs::write(&path, manifest).unwrap();
    (path, outputs)
}

/// A smooth background with a darker band standing in for old text.
pub fn scene(w: u32, h: u32) -> Image {
    Image::from_fn(w, h, |x, y| {
        let fx = x as f64 / w as f64;
        let fy = y as f64 / h as f64;
        [0.55 + 0.3 * fx, 0.6 + 0.2 * fy, 0.7 - 0.2 * fx * fy]
    })
}
