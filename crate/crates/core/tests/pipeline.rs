mod common;

use std::collections::BTreeMap;
use std::path::Path;

use glyphctl::backend::{BackendError, Capabilities, GeneratorBackend, StubGenerator};
use glyphctl::blend::Image;
use glyphctl::fontmetric::TopK;
use glyphctl::geometry::{Point, Quad, LAYOUT_PADDING};
use glyphctl::glyphraster::{layout_line, render_position_mask, LineSpec, Orientation, RasterError};
use glyphctl::mask::BinaryMask;
use glyphctl::pipeline::*;

fn manifest() -> std::path::PathBuf {
    common::fixtures().join("minicorpus").join("manifest.jsonl")
}

fn opts(seed: u64) -> PrepareOptions {
    PrepareOptions { seed, ..PrepareOptions::default() }
}

fn tree(dir: &Path) -> BTreeMap<String, Vec<u8>> {
    let mut out = BTreeMap::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        for e in std::fs::read_dir(&d).unwrap() {
            let p = e.unwrap().path();
            if p.is_dir() {
                stack.push(p);
            } else {
                out.insert(p.strip_prefix(dir).unwrap().display().to_string(), std::fs::read(&p).unwrap());
            }
        }
    }
    out
}

#[test]
fn minicorpus_counts_and_reasons() {
    let out = tempfile::tempdir().unwrap();
    let s = prepare_dataset(&manifest(), out.path(), &opts(7), Some(&glyphctl::backend::SidecarOcr)).unwrap();
    assert_eq!(s, DatasetSummary { records: 10, examples: 7, rejections: 3, accepted_lines: 7, rejected_lines: 5 });
    let text = std::fs::read_to_string(out.path().join("rejections.jsonl")).unwrap();
    let ids: Vec<String> = text.lines().map(|l| serde_json::from_str::<Rejection>(l).unwrap().id).collect();
    assert_eq!(ids, ["000001", "000004", "000007"]);
    for l in text.lines() {
        let v: serde_json::Value = serde_json::from_str(l).unwrap();
        for r in v["reasons"].as_array().unwrap() {
            assert!(["confidence", "edit_distance"].contains(&r["reason"].as_str().unwrap()));
        }
    }
}

#[test]
fn minicorpus_is_deterministic_and_seed_sensitive() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let c = tempfile::tempdir().unwrap();
    let ocr = glyphctl::backend::SidecarOcr;
    prepare_dataset(&manifest(), a.path(), &opts(7), Some(&ocr)).unwrap();
    prepare_dataset(&manifest(), b.path(), &PrepareOptions { jobs: Some(1), ..opts(7) }, Some(&ocr)).unwrap();
    prepare_dataset(&manifest(), c.path(), &opts(8), Some(&ocr)).unwrap();
    let (ta, tb, tc) = (tree(a.path()), tree(b.path()), tree(c.path()));
    assert_eq!(ta, tb);
    assert_eq!(ta.keys().collect::<Vec<_>>(), tc.keys().collect::<Vec<_>>());
    assert_ne!(ta["examples.jsonl"], tc["examples.jsonl"]);
}

#[test]
fn example_artifacts_have_image_size_and_glyph_inside_perturbed_quads() {
    let out = tempfile::tempdir().unwrap();
    prepare_dataset(&manifest(), out.path(), &opts(7), Some(&glyphctl::backend::SidecarOcr)).unwrap();
    let text = std::fs::read_to_string(out.path().join("examples.jsonl")).unwrap();
    for l in text.lines() {
        let ex: TrainingExample = serde_json::from_str(l).unwrap();
        let img = Image::load_png(&common::fixtures().join("minicorpus").join(&ex.image_path)).unwrap();
        let glyph = BinaryMask::load_png(&out.path().join(&ex.glyph_path)).unwrap();
        let pos = BinaryMask::load_png(&out.path().join(&ex.position_path)).unwrap();
        assert_eq!(glyph.dims(), img.dims());
        assert_eq!(pos.dims(), img.dims());
        assert!(!glyph.is_empty());
        for line in &ex.lines {
            for (a, b) in line.quad.iter().zip(&line.perturbed_quad) {
                assert!((a - b).abs() <= 5.0);
            }
        }
    }
}

#[test]
fn malformed_manifest_line_is_reported_with_line_number() {
    let dir = tempfile::tempdir().unwrap();
    let m = dir.path().join("m.jsonl");
    std::fs::write(&m, "{\"image_path\":\"a.png\",\"lines\":[]}\nnot json\n").unwrap();
    let err = prepare_dataset(&m, &dir.path().join("out"), &opts(0), None).unwrap_err();
    assert!(matches!(err, PipelineError::Manifest { line: 2, .. }), "{err}");
    assert_eq!(err.code(), "invalid_manifest");
}

#[test]
fn missing_sidecar_is_named() {
    let dir = tempfile::tempdir().unwrap();
    let src = common::fixtures().join("minicorpus");
    for f in ["rec00.png", "rec00_line0_mask.png"] {
        std::fs::copy(src.join(f), dir.path().join(f)).unwrap();
    }
    let m = dir.path().join("m.jsonl");
    let first = std::fs::read_to_string(manifest()).unwrap().lines().next().unwrap().to_string();
    std::fs::write(&m, first).unwrap();
    let err = prepare_dataset(&m, &dir.path().join("out"), &opts(0), Some(&glyphctl::backend::SidecarOcr)).unwrap_err();
    match err {
        PipelineError::MissingSidecar { path } => assert!(path.ends_with("rec00.ocr.json"), "{path}"),
        e => panic!("unexpected {e}"),
    }
}

fn hello_line(quad: Quad) -> BundleLine {
    BundleLine { text: "HELLO".into(), font: common::font("strokes-bold.ttf"), quad, orientation: Orientation::Horizontal }
}

#[test]
fn bundle_glyph_inside_position_and_deterministic() {
    let img = common::scene(512, 512);
    let lines = [hello_line(Quad::from_rect(100.0, 200.0, 420.0, 300.0))];
    let o = BundleOptions { seed: 3, ..BundleOptions::default() };
    let a = build_inference_bundle(&img, &lines, "cap", &o).unwrap();
    assert!(a.zoom.is_none());
    assert!(!a.glyph.is_empty());
    assert!(a.glyph.is_subset_of(&a.position));
    let b = build_inference_bundle(&img, &lines, "cap", &o).unwrap();
    assert_eq!(a.glyph.to_png().unwrap(), b.glyph.to_png().unwrap());
    assert_eq!(a.masked.image.to_png().unwrap(), b.masked.image.to_png().unwrap());
    let (da, db) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    a.write_to(da.path()).unwrap();
    b.write_to(db.path()).unwrap();
    assert_eq!(tree(da.path()), tree(db.path()));
}

#[test]
fn bundle_zooms_small_or_non_square_inputs() {
    let img = common::scene(300, 200);
    let lines = [hello_line(Quad::from_rect(100.0, 80.0, 180.0, 110.0))];
    let b = build_inference_bundle(&img, &lines, "", &BundleOptions::default()).unwrap();
    let rec = b.zoom.expect("zoomed");
    assert_eq!(rec.n, 512);
    assert_eq!(b.glyph.dims(), (512, 512));
    assert!(b.glyph.is_subset_of(&b.position));
    // the quad fills most of the canvas after zooming
    assert!(b.quads[0].width() > 400.0);
}

#[test]
fn bundle_errors() {
    let img = common::scene(512, 512);
    let mut line = hello_line(Quad::from_rect(10.0, 10.0, 300.0, 100.0));
    line.text = String::new();
    let err = build_inference_bundle(&img, &[line.clone()], "", &BundleOptions::default()).unwrap_err();
    assert!(matches!(err, PipelineError::Raster(RasterError::EmptyText)), "{err}");
    line.text = "HI".into();
    line.quad = Quad::from_rect(400.0, 10.0, 600.0, 100.0);
    let err = build_inference_bundle(&img, &[line], "", &BundleOptions::default()).unwrap_err();
    assert!(err.is_validation());
}

fn ink_contrast(out: &Image, bundle: &InferenceBundle, quad: &Quad) -> (f64, f64) {
    let (mut ink, mut ni, mut bg, mut nb) = (0.0, 0, 0.0, 0);
    let (w, h) = out.dims();
    for y in 0..h {
        for x in 0..w {
            let c = Point::new(x as f64 + 0.5, y as f64 + 0.5);
            if !quad.contains(c) {
                continue;
            }
            let cc = bundle.zoom.map_or(c, |r| r.to_canvas(c));
            let (cx, cy) = (cc.x.floor() as u32, cc.y.floor() as u32);
            if cx >= bundle.canvas || cy >= bundle.canvas {
                continue;
            }
            if bundle.glyph.get(cx, cy) {
                ink += out.luminance(x, y);
                ni += 1;
            } else {
                bg += out.luminance(x, y);
                nb += 1;
            }
        }
    }
    (ink / ni as f64, bg / nb as f64)
}

fn assert_unchanged_outside(a: &Image, b: &Image, region: &BinaryMask) {
    let (w, h) = a.dims();
    for y in 0..h {
        for x in 0..w {
            if !region.get(x, y) {
                assert_eq!(a.get(x, y), b.get(x, y), "pixel ({x}, {y}) changed");
            }
        }
    }
}

#[test]
fn stub_edit_touches_only_the_polygon() {
    for (size, quad) in [(512u32, Quad::from_rect(96.0, 180.0, 416.0, 300.0)), (200, Quad::from_rect(40.0, 70.0, 160.0, 120.0))] {
        let img = common::scene(size, size);
        let lines = [hello_line(quad)];
        let out = run_edit(&img, &lines, "", &StubGenerator, &EditOptions::default()).unwrap();
        assert_eq!(out.bundle.zoom.is_some(), size != 512);
        let cp = render_position_mask(&[quad.corners.to_vec()], size, size).unwrap();
        assert_unchanged_outside(&img, &out.image, &cp);
        assert_ne!(out.image, img);
        let (ink, bg) = ink_contrast(&out.image, &out.bundle, &quad);
        assert!(ink + 0.3 < bg, "ink {ink} vs background {bg}");
    }
}

#[test]
fn tightened_edit_blends_only_the_tightened_quad() {
    let img = common::scene(512, 512);
    let quad = Quad::new([Point::new(60.0, 200.0), Point::new(460.0, 190.0), Point::new(462.0, 290.0), Point::new(58.0, 300.0)]);
    let mut line = hello_line(quad);
    line.text = "HI".into();
    let opts = EditOptions { tighten: true, ..EditOptions::default() };
    let out = run_edit(&img, &[line.clone()], "", &StubGenerator, &opts).unwrap();

    // closed form: keep the centre, scale the baseline by (text_w + 2 pad) / width
    let spec = LineSpec { text: line.text.clone(), font: line.font.clone(), quad, orientation: line.orientation };
    let text_w = layout_line(&spec).unwrap().text_extent.0;
    let [tl, tr, br, bl] = quad.corners;
    let width = (tr.distance(tl) + br.distance(bl)) / 2.0;
    let height = (bl.distance(tl) + br.distance(tr)) / 2.0;
    let t = (1.0 - (text_w + 2.0 * LAYOUT_PADDING * height) / width) / 2.0;
    assert!(t > 0.2, "replacement text should be much narrower (t = {t})");
    let lerp = |a: Point, b: Point| Point::new(a.x + (b.x - a.x) * t, a.y + (b.y - a.y) * t);
    let expected = [lerp(tl, tr), lerp(tr, tl), lerp(br, bl), lerp(bl, br)];
    for (got, want) in out.effective_quads[0].corners.iter().zip(expected) {
        assert!(got.distance(want) < 1e-9);
    }
    let region = render_position_mask(&[expected.to_vec()], 512, 512).unwrap();
    assert_eq!(out.blend_region, region.0);
    assert_unchanged_outside(&img, &out.image, &region);
}

#[test]
fn inpaint_then_edit_changes_only_old_and_new_regions() {
    let mut img = common::scene(512, 512);
    let quad = Quad::from_rect(100.0, 200.0, 400.0, 280.0);
    for y in 220..260 {
        for x in 120..380 {
            img.set(x, y, [0.1, 0.1, 0.1]);
        }
    }
    let opts = EditOptions { tighten: true, inpaint: true, ..EditOptions::default() };
    let mut line = hello_line(quad);
    line.text = "A".into();
    let out = run_edit(&img, &[line], "", &StubGenerator, &opts).unwrap();
    let cp = render_position_mask(&[quad.corners.to_vec()], 512, 512).unwrap();
    assert_unchanged_outside(&img, &out.image, &cp);
    // the old dark band outside the tightened region was erased
    assert!(out.image.luminance(125, 240) > 0.4);
}

struct Failing;

impl GeneratorBackend for Failing {
    fn endpoint(&self) -> String {
        "http://unreachable".into()
    }
    fn capabilities(&self) -> Capabilities {
        Capabilities { generate: true, inpaint_erase: false, deterministic: true }
    }
    fn generate(&self, _: &InferenceBundle) -> Result<Image, BackendError> {
        Err(BackendError::Unavailable { endpoint: self.endpoint(), attempts: 3, reason: "timed out".into() })
    }
    fn inpaint_erase(&self, _: &Image, _: &BinaryMask, _: u64) -> Result<Image, BackendError> {
        unreachable!()
    }
}

#[test]
fn backend_failures_surface_with_metadata() {
    let img = common::scene(512, 512);
    let opts = EditOptions { inpaint: true, ..EditOptions::default() };
    let err = run_edit(&img, &[hello_line(Quad::from_rect(100.0, 200.0, 400.0, 280.0))], "", &Failing, &opts).unwrap_err();
    assert!(err.is_backend());
    assert_eq!(err.code(), "backend_unavailable");
    assert!(matches!(err, PipelineError::Backend(BackendError::Unavailable { attempts: 3, .. })));
}

#[test]
fn self_evaluation_is_perfect() {
    let dir = tempfile::tempdir().unwrap();
    let (m, outputs) = common::write_self_eval_fixture(dir.path());
    let classifier = common::reference_classifier();
    let report = evaluate_benchmark(&m, &outputs, &classifier, None, None, &EvalOptions::default()).unwrap();
    assert_eq!(report.rows.len(), 2);
    for r in &report.rows {
        assert_eq!((r.senacc, r.ned), (1.0, 1.0));
        assert!(r.distances.iter().all(|d| d.l2 == 0.0 && d.cos == 0.0));
    }
    let header = report.to_csv().lines().next().unwrap().to_string();
    assert_eq!(header, "method,language,SenACC,NED,l2@5,l2@20,l2@50,l2@full,cos@5,cos@20,cos@50,cos@full");
    assert!(report.summary().contains("not isolated"));
    assert_eq!(report.to_long_csv().lines().count(), 1 + 2 * 4);
}

#[test]
fn isolation_mode_is_labelled() {
    let dir = tempfile::tempdir().unwrap();
    let (m, outputs) = common::write_self_eval_fixture(dir.path());
    let classifier = common::reference_classifier();
    let seg = glyphctl::backend::ThresholdSegmenter::default();
    let opts = EvalOptions { ks: vec![TopK::K(1), TopK::Full], ..EvalOptions::default() };
    let report = evaluate_benchmark(&m, &outputs, &classifier, None, Some(&seg), &opts).unwrap();
    assert!(report.isolated);
    assert_eq!(report.metric_columns().len(), 6);
}

#[test]
fn missing_output_is_misaligned() {
    let dir = tempfile::tempdir().unwrap();
    let (m, outputs) = common::write_self_eval_fixture(dir.path());
    std::fs::remove_file(outputs.join("e2.png")).unwrap();
    let err = evaluate_benchmark(&m, &outputs, &common::reference_classifier(), None, None, &EvalOptions::default()).unwrap_err();
    match err {
        PipelineError::MisalignedOutputs { id, .. } => assert_eq!(id, "e2"),
        e => panic!("unexpected {e}"),
    }
}
