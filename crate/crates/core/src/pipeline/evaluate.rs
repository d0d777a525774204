use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::dataset::read_jsonl;
use super::PipelineError;
use crate::backend::{OcrBackend, OcrRequest, SegmentationBackend, SidecarOcr};
use crate::blend::Image;
use crate::fontmetric::{font_fidelity_report, FontClassifier, KDistances, TopK};
use crate::geometry::{polygon_bounds, Point};
use crate::mask::BinaryMask;
use crate::quality::{ned, sentence_accuracy};

/// One benchmark entry. The generated output for it is `<outputs>/<id>.png`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalRecord {
    pub id: String,
    pub language: String,
    pub text: String,
    /// Glyph control the output was generated from, same size as the output.
    pub glyph_path: String,
    pub polygon: Vec<[f64; 2]>,
}

pub fn read_eval_manifest(path: &Path) -> Result<Vec<EvalRecord>, PipelineError> {
    read_jsonl(path)
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvalOptions {
    pub ks: Vec<TopK>,
    /// Label written into the report's method column.
    pub method: String,
    pub jobs: Option<usize>,
}

impl Default for EvalOptions {
    fn default() -> Self {
        EvalOptions { ks: TopK::STANDARD.to_vec(), method: "glyphctl".into(), jobs: None }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportRow {
    pub language: String,
    pub count: usize,
    pub senacc: f64,
    pub ned: f64,
    /// Means over the language's records, one entry per requested k.
    pub distances: Vec<KDistances>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub method: String,
    /// Whether text regions were segmented before classification.
    pub isolated: bool,
    pub ks: Vec<TopK>,
    pub rows: Vec<ReportRow>,
}

impl Report {
    /// Column names after `method,language`.
    pub fn metric_columns(&self) -> Vec<String> {
        let mut cols = vec!["SenACC".to_string(), "NED".to_string()];
        cols.extend(self.ks.iter().map(|k| format!("l2@{k}")));
        cols.extend(self.ks.iter().map(|k| format!("cos@{k}")));
        cols
    }

    /// One row per language.
    pub fn to_csv(&self) -> String {
        let mut out = format!("method,language,{}\n", self.metric_columns().join(","));
        for r in &self.rows {
            let mut cells = vec![csv_field(&self.method), csv_field(&r.language), fmt(r.senacc), fmt(r.ned)];
            cells.extend(r.distances.iter().map(|d| fmt(d.l2)));
            cells.extend(r.distances.iter().map(|d| fmt(d.cos)));
            out.push_str(&cells.join(","));
            out.push('\n');
        }
        out
    }

    /// One row per (language, k).
    pub fn to_long_csv(&self) -> String {
        let mut out = String::from("method,language,k,l2,cos\n");
        for r in &self.rows {
            for d in &r.distances {
                let _ = writeln!(out, "{},{},{},{},{}", csv_field(&self.method), csv_field(&r.language), d.k, fmt(d.l2), fmt(d.cos));
            }
        }
        out
    }

    pub fn summary(&self) -> String {
        let mut out = format!(
            "method: {}  (text regions {})\n",
            self.method,
            if self.isolated { "isolated by segmentation" } else { "not isolated" }
        );
        let cols = self.metric_columns();
        let _ = writeln!(out, "{:<10} {:>6} {}", "language", "n", cols.iter().map(|c| format!("{c:>9}")).collect::<String>());
        for r in &self.rows {
            let mut vals = vec![r.senacc, r.ned];
            vals.extend(r.distances.iter().map(|d| d.l2));
            vals.extend(r.distances.iter().map(|d| d.cos));
            let _ = writeln!(out, "{:<10} {:>6} {}", r.language, r.count, vals.iter().map(|v| format!("{v:>9.4}")).collect::<String>());
        }
        out
    }
}

fn fmt(v: f64) -> String {
    format!("{v:.6}")
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

struct Scored {
    language: String,
    predicted: String,
    target: String,
    ned: f64,
    distances: Vec<KDistances>,
}

fn crop_box(polygon: &[[f64; 2]], w: u32, h: u32) -> Option<(u32, u32, u32, u32)> {
    let pts: Vec<Point> = polygon.iter().map(|p| Point::new(p[0], p[1])).collect();
    let (x0, y0, x1, y1) = polygon_bounds(&pts);
    let cx0 = x0.floor().max(0.0) as u32;
    let cy0 = y0.floor().max(0.0) as u32;
    let cx1 = (x1.ceil().max(0.0) as u32).min(w);
    let cy1 = (y1.ceil().max(0.0) as u32).min(h);
    (cx1 > cx0 && cy1 > cy0).then(|| (cx0, cy0, cx1 - cx0, cy1 - cy0))
}

#[allow(clippy::too_many_arguments)]
fn score_record(
    rec: &EvalRecord,
    base: &Path,
    outputs: &Path,
    classifier: &dyn FontClassifier,
    ocr: &dyn OcrBackend,
    isolate: Option<&dyn SegmentationBackend>,
    ks: &[TopK],
) -> Result<Scored, PipelineError> {
    let out_path = outputs.join(format!("{}.png", rec.id));
    if !out_path.is_file() {
        return Err(PipelineError::MisalignedOutputs { id: rec.id.clone(), path: out_path.display().to_string() });
    }
    let invalid = |reason: String| PipelineError::InvalidRecord { record: rec.id.clone(), reason };
    if rec.polygon.len() < 4 {
        return Err(invalid(format!("polygon has {} points, need at least 4", rec.polygon.len())));
    }
    let output = Image::load_png(&out_path)?;
    let glyph = BinaryMask::load_png(&base.join(&rec.glyph_path))?;
    if glyph.dims() != output.dims() {
        return Err(invalid(format!("glyph is {:?}, output is {:?}", glyph.dims(), output.dims())));
    }
    let (x, y, w, h) =
        crop_box(&rec.polygon, output.width(), output.height()).ok_or_else(|| invalid("polygon does not overlap the output".into()))?;
    let region = output.crop(x, y, w, h);
    let glyph = glyph.crop(x, y, w, h);
    let read = ocr.recognize(&OcrRequest { image_path: &out_path, line_index: 0, region: &region })?;
    let report = font_fidelity_report(&glyph, &region, classifier, ks, isolate)?;
    Ok(Scored {
        language: rec.language.clone(),
        ned: ned(&read.text, &rec.text)?,
        predicted: read.text,
        target: rec.text.clone(),
        distances: report.distances,
    })
}

/// Scores every manifest record against `<outputs>/<id>.png` and aggregates
/// SenACC, NED and the l2@k / cos@k distances per language. OCR defaults to
/// `<outputs>/<id>.ocr.json` sidecars.
pub fn evaluate_benchmark(
    manifest: &Path,
    outputs: &Path,
    classifier: &dyn FontClassifier,
    ocr: Option<&dyn OcrBackend>,
    isolate: Option<&dyn SegmentationBackend>,
    opts: &EvalOptions,
) -> Result<Report, PipelineError> {
    let records = read_eval_manifest(manifest)?;
    let base: PathBuf = manifest.parent().map(Path::to_path_buf).unwrap_or_default();
    let sidecar = SidecarOcr;
    let ocr = ocr.unwrap_or(&sidecar);
    let run = || -> Result<Vec<Scored>, PipelineError> {
        records.par_iter().map(|r| score_record(r, &base, outputs, classifier, ocr, isolate, &opts.ks)).collect()
    };
    let scored = match opts.jobs {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n.max(1))
            .build()
            .map_err(|e| PipelineError::io(manifest, std::io::Error::other(e)))?
            .install(run)?,
        None => run()?,
    };

    let mut groups: BTreeMap<&str, Vec<&Scored>> = BTreeMap::new();
    for s in &scored {
        groups.entry(&s.language).or_default().push(s);
    }
    let mut rows = Vec::new();
    for (language, items) in groups {
        let n = items.len() as f64;
        let pairs: Vec<(&str, &str)> = items.iter().map(|s| (s.predicted.as_str(), s.target.as_str())).collect();
        let distances = opts
            .ks
            .iter()
            .enumerate()
            .map(|(i, &k)| KDistances {
                k,
                l2: items.iter().map(|s| s.distances[i].l2).sum::<f64>() / n,
                cos: items.iter().map(|s| s.distances[i].cos).sum::<f64>() / n,
            })
            .collect();
        rows.push(ReportRow {
            language: language.to_string(),
            count: items.len(),
            senacc: sentence_accuracy(&pairs)?,
            ned: items.iter().map(|s| s.ned).sum::<f64>() / n,
            distances,
        });
    }
    Ok(Report { method: opts.method.clone(), isolated: isolate.is_some(), ks: opts.ks.clone(), rows })
}
