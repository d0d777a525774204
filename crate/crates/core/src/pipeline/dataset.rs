use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::PipelineError;
use crate::backend::{OcrBackend, OcrRequest};
use crate::blend::{build_masked_image, Image};
use crate::geometry::{perturb_quad_with, polygon_bounds, solve_homography, warp_mask, Homography, Point, Quad};
use crate::glyphraster::{render_position_mask, GlyphControl};
use crate::mask::BinaryMask;
use crate::quality::{gate, GateVerdict, OcrResult, QualityCriteria, RejectReason};

/// One line of a dataset manifest (JSON Lines). Paths are relative to the
/// manifest's directory.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetRecord {
    pub image_path: String,
    #[serde(default)]
    pub caption: String,
    pub lines: Vec<DatasetLine>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetLine {
    pub text: String,
    /// At least 4 points; a 4-point polygon is read as TL, TR, BR, BL.
    pub polygon: Vec<[f64; 2]>,
    pub mask_path: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ocr: Option<OcrResult>,
}

impl DatasetLine {
    fn points(&self) -> Vec<Point> {
        self.polygon.iter().map(|p| Point::new(p[0], p[1])).collect()
    }

    /// The polygon as a quad: itself when it has 4 points, else its
    /// axis-aligned bounding box.
    pub fn quad(&self) -> Quad {
        let pts = self.points();
        if pts.len() == 4 {
            Quad::new([pts[0], pts[1], pts[2], pts[3]])
        } else {
            let (x0, y0, x1, y1) = polygon_bounds(&pts);
            Quad::from_rect(x0, y0, x1, y1)
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PrepareOptions {
    pub criteria: QualityCriteria,
    pub epsilon: f64,
    pub seed: u64,
    /// Worker threads; `None` uses the global pool.
    pub jobs: Option<usize>,
}

impl Default for PrepareOptions {
    fn default() -> Self {
        PrepareOptions { criteria: QualityCriteria::default(), epsilon: 5.0, seed: 0, jobs: None }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExampleLine {
    pub line_index: usize,
    pub text: String,
    pub quad: [f64; 8],
    pub perturbed_quad: [f64; 8],
    pub homography: Homography,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LineRejection {
    pub line_index: usize,
    pub reason: RejectReason,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainingExample {
    pub id: String,
    pub image_path: String,
    pub caption: String,
    pub glyph_path: String,
    pub position_path: String,
    pub masked_path: String,
    pub lines: Vec<ExampleLine>,
    pub rejected_lines: Vec<LineRejection>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Rejection {
    pub id: String,
    pub image_path: String,
    pub reasons: Vec<LineRejection>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum PrepareOutcome {
    Example(TrainingExample),
    Rejection(Rejection),
}

pub fn record_seed(global: u64, record_index: usize) -> u64 {
    global ^ record_index as u64
}

pub fn line_seed(record_seed: u64, line_index: usize) -> u64 {
    record_seed ^ ((line_index as u64) << 32)
}

pub fn read_manifest(path: &Path) -> Result<Vec<DatasetRecord>, PipelineError> {
    read_jsonl(path)
}

pub(crate) fn read_jsonl<T: serde::de::DeserializeOwned>(path: &Path) -> Result<Vec<T>, PipelineError> {
    let file = std::fs::File::open(path).map_err(|e| PipelineError::io(path, e))?;
    let mut out = Vec::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| PipelineError::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let rec = serde_json::from_str(&line).map_err(|e| PipelineError::Manifest {
            path: path.display().to_string(),
            line: i + 1,
            reason: e.to_string(),
        })?;
        out.push(rec);
    }
    Ok(out)
}

pub(crate) fn write_jsonl<T: Serialize>(path: &Path, items: &[T]) -> Result<(), PipelineError> {
    let mut buf = Vec::new();
    for item in items {
        serde_json::to_writer(&mut buf, item).expect("serializable");
        buf.push(b'\n');
    }
    let mut f = std::fs::File::create(path).map_err(|e| PipelineError::io(path, e))?;
    f.write_all(&buf).map_err(|e| PipelineError::io(path, e))
}

fn record_id(index: usize) -> String {
    format!("{index:06}")
}

/// Gates each line, perturbs and warps the surviving lines' masks into the
/// glyph control, and writes `glyph.png`, `position.png` and `masked.png`
/// under `out_dir/<id>/`. All artifacts have the record image's size.
pub fn prepare_training_example(
    rec: &DatasetRecord,
    record_index: usize,
    base_dir: &Path,
    out_dir: &Path,
    opts: &PrepareOptions,
    ocr: Option<&dyn OcrBackend>,
) -> Result<PrepareOutcome, PipelineError> {
    let id = record_id(record_index);
    let invalid = |reason: String| PipelineError::InvalidRecord { record: id.clone(), reason };
    if rec.lines.is_empty() {
        return Err(invalid("record has no lines".into()));
    }
    let image_path = base_dir.join(&rec.image_path);
    let image = Image::load_png(&image_path)?;
    let (w, h) = image.dims();

    let mut passing = Vec::new();
    let mut rejected = Vec::new();
    for (li, line) in rec.lines.iter().enumerate() {
        if line.polygon.len() < 4 {
            return Err(invalid(format!("line {li}: polygon has {} points, need at least 4", line.polygon.len())));
        }
        let quad = line.quad();
        if !line.points().iter().all(|p| p.x >= 0.0 && p.y >= 0.0 && p.x <= w as f64 && p.y <= h as f64) {
            return Err(invalid(format!("line {li}: polygon leaves the {w}x{h} image")));
        }
        let result = match &line.ocr {
            Some(r) => r.clone(),
            None => {
                let backend = ocr.ok_or_else(|| PipelineError::MissingSidecar {
                    path: format!("OCR for {} line {li} (no inline result and no OCR backend)", rec.image_path),
                })?;
                let (x0, y0, x1, y1) = quad.bounds();
                let cx0 = (x0.floor().max(0.0) as u32).min(w - 1);
                let cy0 = (y0.floor().max(0.0) as u32).min(h - 1);
                let cx1 = (x1.ceil() as u32).clamp(cx0 + 1, w);
                let cy1 = (y1.ceil() as u32).clamp(cy0 + 1, h);
                let region = image.crop(cx0, cy0, cx1 - cx0, cy1 - cy0);
                backend.recognize(&OcrRequest { image_path: &image_path, line_index: li, region: &region })?
            }
        };
        match gate(&result, &line.text, &opts.criteria)? {
            GateVerdict::Pass => passing.push((li, line, quad)),
            GateVerdict::Reject(reason) => rejected.push(LineRejection { line_index: li, reason }),
        }
    }

    if passing.is_empty() {
        return Ok(PrepareOutcome::Rejection(Rejection { id, image_path: rec.image_path.clone(), reasons: rejected }));
    }

    let rseed = record_seed(opts.seed, record_index);
    let mut glyph = BinaryMask::new(w, h);
    let mut polygons = Vec::new();
    let mut lines = Vec::new();
    for (li, line, quad) in passing {
        let mask_path = base_dir.join(&line.mask_path);
        if !mask_path.exists() {
            return Err(PipelineError::MissingSidecar { path: mask_path.display().to_string() });
        }
        let mask = BinaryMask::load_png(&mask_path)?;
        if mask.dims() != (w, h) {
            return Err(invalid(format!("line {li}: mask is {:?}, image is {:?}", mask.dims(), (w, h))));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(line_seed(rseed, li));
        let perturbed = perturb_quad_with(&quad, opts.epsilon, (w as f64, h as f64), &mut rng);
        let hom = solve_homography(&quad, &perturbed).map_err(|e| invalid(format!("line {li}: {e}")))?;
        glyph.union_with(&warp_mask(&mask, &hom)?);
        polygons.push(quad.corners.to_vec());
        lines.push(ExampleLine {
            line_index: li,
            text: line.text.clone(),
            quad: quad.to_flat(),
            perturbed_quad: perturbed.to_flat(),
            homography: hom,
        });
    }
    let position = render_position_mask(&polygons, w, h)?;
    let masked = build_masked_image(&image, &position)?;
    let glyph = GlyphControl(glyph);

    let dir = out_dir.join(&id);
    std::fs::create_dir_all(&dir).map_err(|e| PipelineError::io(&dir, e))?;
    glyph.save_png(&dir.join("glyph.png"))?;
    position.save_png(&dir.join("position.png"))?;
    masked.image.save_png(&dir.join("masked.png"))?;
    let rel = |name: &str| format!("{id}/{name}");
    Ok(PrepareOutcome::Example(TrainingExample {
        id: id.clone(),
        image_path: rec.image_path.clone(),
        caption: rec.caption.clone(),
        glyph_path: rel("glyph.png"),
        position_path: rel("position.png"),
        masked_path: rel("masked.png"),
        lines,
        rejected_lines: rejected,
    }))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetSummary {
    pub records: usize,
    pub examples: usize,
    pub rejections: usize,
    pub accepted_lines: usize,
    pub rejected_lines: usize,
}

/// Runs [`prepare_training_example`] over every manifest record in
/// parallel and writes `examples.jsonl` and `rejections.jsonl` (in manifest
/// order) to `out_dir`.
pub fn prepare_dataset(
    manifest: &Path,
    out_dir: &Path,
    opts: &PrepareOptions,
    ocr: Option<&dyn OcrBackend>,
) -> Result<DatasetSummary, PipelineError> {
    let records = read_manifest(manifest)?;
    let base: PathBuf = manifest.parent().map(Path::to_path_buf).unwrap_or_default();
    std::fs::create_dir_all(out_dir).map_err(|e| PipelineError::io(out_dir, e))?;
    let run = || -> Result<Vec<PrepareOutcome>, PipelineError> {
        records.par_iter().enumerate().map(|(i, rec)| prepare_training_example(rec, i, &base, out_dir, opts, ocr)).collect()
    };
    let outcomes = match opts.jobs {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n.max(1))
            .build()
            .map_err(|e| PipelineError::io(manifest, std::io::Error::other(e)))?
            .install(run)?,
        None => run()?,
    };
    let mut examples = Vec::new();
    let mut rejections = Vec::new();
    for o in outcomes {
        match o {
            PrepareOutcome::Example(e) => examples.push(e),
            PrepareOutcome::Rejection(r) => rejections.push(r),
        }
    }
    write_jsonl(&out_dir.join("examples.jsonl"), &examples)?;
    write_jsonl(&out_dir.join("rejections.jsonl"), &rejections)?;
    Ok(DatasetSummary {
        records: records.len(),
        examples: examples.len(),
        rejections: rejections.len(),
        accepted_lines: examples.iter().map(|e| e.lines.len()).sum(),
        rejected_lines: examples.iter().map(|e| e.rejected_lines.len()).sum::<usize>()
            + rejections.iter().map(|r| r.reasons.len()).sum::<usize>(),
    })
}
