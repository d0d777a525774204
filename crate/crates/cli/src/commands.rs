use std::collections::HashMap;
use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::Duration;

use serde_json::json;

use glyphctl::backend::{BackendSettings, GeneratorBackend, StubGenerator};
use glyphctl::blend::{seamless_clone, CloneOptions, Image, ZOOM_MARGIN};
use glyphctl::fontio::{load_font, Font};
use glyphctl::fontmetric::FontClassifier;
use glyphctl::geometry::{perturb_quad, solve_homography, PerturbationConfig, Quad};
use glyphctl::glyphraster::{compose_glyph_control_with_warnings, LineSpec, Orientation, TextLayout};
use glyphctl::mask::BinaryMask;
use glyphctl::pipeline::{
    build_inference_bundle, evaluate_benchmark, prepare_dataset, run_edit, BundleLine, BundleOptions, EditOptions, EvalOptions,
    PipelineError, PrepareOptions,
};
use glyphctl::quality::{edit_distance, gate, ned, OcrResult, QualityCriteria};
use glyphctl_service::{probe_classifier, AppState, FontRegistry, ServiceConfig};

use crate::args::*;
use crate::{CliError, Output};

pub fn run(cmd: Command) -> Result<Output, CliError> {
    match cmd {
        Command::RenderGlyph(a) => render_glyph(a),
        Command::Perturb(a) => perturb(a),
        Command::Gate(a) => gate_cmd(a),
        Command::PrepareDataset(a) => prepare(a),
        Command::Bundle(a) => bundle(a),
        Command::Edit(a) => edit(a),
        Command::Blend(a) => blend(a),
        Command::Eval(a) => eval(a),
        Command::Serve(a) => serve(a),
    }
}

fn invalid(message: impl Into<String>) -> CliError {
    CliError::validation("invalid_argument", message)
}

fn io_error(path: &Path, source: std::io::Error) -> CliError {
    PipelineError::Io { path: path.display().to_string(), source }.into()
}

fn orientation(vertical: bool) -> Orientation {
    if vertical {
        Orientation::Vertical
    } else {
        Orientation::Horizontal
    }
}

fn check_lines(a: &LineArgs) -> Result<(), CliError> {
    if a.texts.len() != a.quads.len() {
        return Err(invalid(format!("{} --text values but {} --quad values", a.texts.len(), a.quads.len())));
    }
    if a.fonts.len() != 1 && a.fonts.len() != a.texts.len() {
        return Err(invalid(format!("give one --font, or one per line ({}), not {}", a.texts.len(), a.fonts.len())));
    }
    Ok(())
}

/// One font per line, each file read once.
fn line_fonts(a: &LineArgs) -> Result<Vec<Arc<Font>>, CliError> {
    let mut cache: HashMap<&PathBuf, Arc<Font>> = HashMap::new();
    (0..a.texts.len())
        .map(|i| {
            let path = if a.fonts.len() == 1 { &a.fonts[0] } else { &a.fonts[i] };
            if let Some(f) = cache.get(path) {
                return Ok(f.clone());
            }
            let bytes = std::fs::read(path).map_err(|e| io_error(path, e))?;
            let font = Arc::new(load_font(&bytes)?);
            cache.insert(path, font.clone());
            Ok(font)
        })
        .collect()
}

fn check_size(w: u32, h: u32) -> Result<(), CliError> {
    if w == 0 || h == 0 || w > 16384 || h > 16384 {
        return Err(invalid(format!("canvas {w}x{h} must be between 1 and 16384 pixels per side")));
    }
    Ok(())
}

fn check_criteria(c: &CriteriaArgs) -> Result<QualityCriteria, CliError> {
    let criteria = QualityCriteria { min_confidence: c.min_conf, max_edit_ratio: c.max_edit_ratio };
    criteria.validate()?;
    Ok(criteria)
}

fn check_jobs(jobs: Option<usize>) -> Result<(), CliError> {
    if jobs == Some(0) {
        return Err(invalid("--jobs must be at least 1"));
    }
    Ok(())
}

fn backend_settings(a: &BackendArgs) -> Result<BackendSettings, CliError> {
    let mut s = BackendSettings::from_env().map_err(|e| CliError::validation("invalid_environment", e))?;
    let or = |flag: &Option<String>, env: &mut Option<String>| {
        if flag.is_some() {
            *env = flag.clone();
        }
    };
    or(&a.generator_url, &mut s.generator_url);
    or(&a.ocr_url, &mut s.ocr_url);
    or(&a.classifier_url, &mut s.classifier_url);
    or(&a.segmenter_url, &mut s.segmenter_url);
    if a.classifier_labels.is_some() {
        s.classifier_labels = a.classifier_labels;
    }
    if let Some(ms) = a.timeout_ms {
        s.timeout = Some(Duration::from_millis(ms));
    }
    if a.retries.is_some() {
        s.retries = a.retries;
    }
    Ok(s)
}

fn solver_options(a: &SolverArgs) -> Result<CloneOptions, CliError> {
    let mut opts = CloneOptions::default();
    if let Some(tol) = a.tol {
        if !(tol.is_finite() && tol > 0.0) {
            return Err(invalid("--tol must be positive"));
        }
        opts.tol = tol;
    }
    if a.max_iter == Some(0) {
        return Err(invalid("--max-iter must be at least 1"));
    }
    opts.max_iter = a.max_iter;
    Ok(opts)
}

fn flat(q: &Quad) -> String {
    q.to_flat().iter().map(|v| v.to_string()).collect::<Vec<_>>().join(",")
}

fn render_glyph(a: RenderGlyphArgs) -> Result<Output, CliError> {
    check_lines(&a.lines)?;
    let (w, h) = (a.width.unwrap_or(a.canvas), a.height.unwrap_or(a.canvas));
    check_size(w, h)?;
    let fonts = line_fonts(&a.lines)?;
    let lines = a
        .lines
        .texts
        .iter()
        .zip(&a.lines.quads)
        .zip(fonts)
        .map(|((text, quad), font)| LineSpec { text: text.clone(), font, quad: *quad, orientation: orientation(a.lines.vertical) })
        .collect();
    let (glyph, warnings) = compose_glyph_control_with_warnings(&TextLayout { lines }, w, h)?;
    glyph.save_png(&a.out)?;
    let mut text = format!("wrote {} ({w}x{h}, {} ink pixels)", a.out.display(), glyph.count());
    for (line, warning) in &warnings {
        text.push_str(&format!("\nwarning: line {line}: {warning:?}"));
    }
    let warnings: Vec<_> = warnings.iter().map(|(line, w)| json!({ "line": line, "warning": w })).collect();
    Ok(Output { text, json: json!({ "out": a.out, "width": w, "height": h, "ink_pixels": glyph.count(), "warnings": warnings }) })
}

fn perturb(a: PerturbArgs) -> Result<Output, CliError> {
    if !(a.epsilon.is_finite() && a.epsilon >= 0.0) {
        return Err(invalid("--epsilon must be a non-negative number"));
    }
    if !(a.width > 0.0 && a.height > 0.0 && a.width.is_finite() && a.height.is_finite()) {
        return Err(invalid("--width and --height must be positive"));
    }
    let moved = perturb_quad(&a.quad, &PerturbationConfig { epsilon: a.epsilon, seed: a.seed }, (a.width, a.height));
    let h = solve_homography(&a.quad, &moved)?;
    Ok(Output { text: flat(&moved), json: json!({ "quad": moved.to_flat(), "homography": h.to_row_major() }) })
}

fn gate_cmd(a: GateArgs) -> Result<Output, CliError> {
    let criteria = check_criteria(&a.criteria)?;
    if !a.conf.is_finite() {
        return Err(invalid("--conf must be a number"));
    }
    let verdict = gate(&OcrResult { text: a.pred.clone(), confidence: a.conf }, &a.target, &criteria)?;
    let json = json!({
        "verdict": verdict.to_string(),
        "edit_distance": edit_distance(&a.pred, &a.target),
        "ned": ned(&a.pred, &a.target)?,
    });
    Ok(Output { text: verdict.to_string(), json })
}

fn prepare(a: PrepareArgs) -> Result<Output, CliError> {
    let criteria = check_criteria(&a.criteria)?;
    if !(a.epsilon.is_finite() && a.epsilon >= 0.0) {
        return Err(invalid("--epsilon must be a non-negative number"));
    }
    check_jobs(a.jobs)?;
    let settings = backend_settings(&a.backends)?;
    let ocr = settings.ocr();
    let opts = PrepareOptions { criteria, epsilon: a.epsilon, seed: a.seed, jobs: a.jobs };
    let summary = prepare_dataset(&a.manifest, &a.out, &opts, Some(ocr.as_ref()))?;
    let text = format!(
        "{} records: {} examples, {} rejections ({} lines accepted, {} rejected)",
        summary.records, summary.examples, summary.rejections, summary.accepted_lines, summary.rejected_lines
    );
    Ok(Output { text, json: serde_json::to_value(&summary).map_err(|e| CliError::internal(e.to_string()))? })
}

fn bundle_options(a: &BundleInput, seed: u64) -> Result<BundleOptions, CliError> {
    check_lines(&a.lines)?;
    if !(8..=4096).contains(&a.canvas) {
        return Err(invalid(format!("--canvas {} outside 8..=4096", a.canvas)));
    }
    let zoom_margin = a.zoom_margin.unwrap_or(ZOOM_MARGIN);
    if !(zoom_margin.is_finite() && zoom_margin >= 0.0) {
        return Err(invalid("--zoom-margin must be a non-negative number"));
    }
    match (&a.image, a.width, a.height) {
        (Some(_), _, _) => {}
        (None, Some(w), Some(h)) => check_size(w, h)?,
        _ => return Err(invalid("give --image, or --width and --height for a blank canvas")),
    }
    Ok(BundleOptions { canvas: a.canvas, seed, zoom_margin })
}

fn bundle_inputs(a: &BundleInput) -> Result<(Image, Vec<BundleLine>), CliError> {
    let img = match (&a.image, a.width, a.height) {
        (Some(p), _, _) => Image::load_png(p)?,
        (None, Some(w), Some(h)) => Image::filled(w, h, [1.0; 3]),
        _ => unreachable!("checked by bundle_options"),
    };
    let fonts = line_fonts(&a.lines)?;
    let lines = a
        .lines
        .texts
        .iter()
        .zip(&a.lines.quads)
        .zip(fonts)
        .map(|((text, quad), font)| BundleLine { text: text.clone(), font, quad: *quad, orientation: orientation(a.lines.vertical) })
        .collect();
    Ok((img, lines))
}

fn bundle(a: BundleArgs) -> Result<Output, CliError> {
    let opts = bundle_options(&a.input, a.seed)?;
    let (img, lines) = bundle_inputs(&a.input)?;
    let b = build_inference_bundle(&img, &lines, &a.input.caption, &opts)?;
    b.write_to(&a.out)?;
    let mut text = format!("wrote bundle to {}", a.out.display());
    if let Some(z) = &b.zoom {
        text.push_str(&format!(" (zoomed from {}px square at {},{})", z.size, z.x0, z.y0));
    }
    let mut meta = b.metadata();
    meta["out"] = json!(a.out);
    Ok(Output { text, json: meta })
}

fn edit(a: EditArgs) -> Result<Output, CliError> {
    let bundle = bundle_options(&a.input, a.seed)?;
    let clone = solver_options(&a.solver)?;
    let settings = backend_settings(&a.backends)?;
    let backend: Box<dyn GeneratorBackend> = if a.stub { Box::new(StubGenerator) } else { settings.generator() };
    let (img, lines) = bundle_inputs(&a.input)?;
    let opts = EditOptions { bundle, tighten: a.tighten, inpaint: a.inpaint, clone };
    let outcome = run_edit(&img, &lines, &a.input.caption, backend.as_ref(), &opts)?;
    outcome.image.save_png(&a.out)?;
    if let Some(dir) = &a.bundle_out {
        outcome.bundle.write_to(dir)?;
    }
    if let Some(p) = &a.region_out {
        outcome.blend_region.save_png(p)?;
    }
    let mut text = format!("wrote {} using {}", a.out.display(), backend.endpoint());
    for n in &outcome.notes {
        text.push_str(&format!("\nnote: {n}"));
    }
    let json = json!({
        "out": a.out,
        "generator": backend.endpoint(),
        "effective_quads": outcome.effective_quads.iter().map(Quad::to_flat).collect::<Vec<_>>(),
        "zoom": outcome.bundle.zoom,
        "notes": outcome.notes,
    });
    Ok(Output { text, json })
}

fn blend(a: BlendArgs) -> Result<Output, CliError> {
    let opts = solver_options(&a.solver)?;
    let src = Image::load_png(&a.src)?;
    let dst = Image::load_png(&a.dst)?;
    let mask = BinaryMask::load_png(&a.mask)?;
    let out = seamless_clone(&src, &dst, &mask, &opts)?;
    out.save_png(&a.out)?;
    Ok(Output {
        text: format!("wrote {} ({} pixels blended)", a.out.display(), mask.count()),
        json: json!({ "out": a.out, "blended_pixels": mask.count() }),
    })
}

fn eval(a: EvalArgs) -> Result<Output, CliError> {
    if a.ks.is_empty() {
        return Err(invalid("--k needs at least one value"));
    }
    check_jobs(a.jobs)?;
    let settings = backend_settings(&a.backends)?;
    let remote = settings.classifier().map_err(|e| CliError::validation("invalid_environment", e))?;
    let classifier: Box<dyn FontClassifier> = match (remote, &a.reference_fonts) {
        (Some(c), _) => Box::new(c),
        (None, Some(dir)) => {
            let registry = FontRegistry::default();
            registry.load_dir(dir).map_err(|e| io_error(dir, e))?;
            let fonts = registry.named(None).expect("all fonts");
            Box::new(probe_classifier(&fonts, a.probe.as_deref())?)
        }
        (None, None) => {
            return Err(invalid("give --reference-fonts, or a classifier endpoint with --classifier-url and --classifier-labels"))
        }
    };
    let ocr = settings.ocr();
    let segmenter = a.isolate.then(|| settings.segmenter());
    let opts = EvalOptions { ks: a.ks, method: a.method, jobs: a.jobs };
    let report = evaluate_benchmark(&a.manifest, &a.outputs, classifier.as_ref(), Some(ocr.as_ref()), segmenter.as_deref(), &opts)?;
    let csv = report.to_csv();
    if let Some(p) = &a.out {
        std::fs::write(p, &csv).map_err(|e| io_error(p, e))?;
    }
    if let Some(p) = &a.long_out {
        std::fs::write(p, report.to_long_csv()).map_err(|e| io_error(p, e))?;
    }
    let summary = report.summary();
    let text = match &a.out {
        Some(_) => summary.clone(),
        None => {
            eprintln!("{summary}");
            csv.trim_end().to_string()
        }
    };
    Ok(Output { text, json: json!({ "report": report, "summary": summary }) })
}

fn serve(a: ServeArgs) -> Result<Output, CliError> {
    let settings = backend_settings(&a.backends)?;
    if a.workers == Some(0) {
        return Err(invalid("--workers must be at least 1"));
    }
    let registry = FontRegistry::default();
    for dir in &a.font_dirs {
        let n = registry.load_dir(dir).map_err(|e| io_error(dir, e))?;
        log::info!("loaded {n} fonts from {}", dir.display());
    }
    let mut config =
        ServiceConfig { backends: settings, queue_depth: a.queue_depth, max_body_bytes: a.max_body_mb << 20, ..ServiceConfig::default() };
    if let Some(w) = a.workers {
        config.workers = w;
    }
    let state = AppState::new(config, registry);
    let runtime = tokio::runtime::Builder::new_multi_thread().enable_all().build().map_err(|e| CliError::internal(e.to_string()))?;
    runtime.block_on(glyphctl_service::serve(a.addr, state)).map_err(|e| CliError::internal(format!("server on {}: {e}", a.addr)))?;
    Ok(Output { text: String::new(), json: json!({ "stopped": true }) })
}
