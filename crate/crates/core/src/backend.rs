//! External model backends: OCR, font classification, text segmentation,
//! generation and inpainting. Each has an HTTP client, most have a
//! subprocess client, and there are in-process implementations for tests
//! and offline use.
//!
//! HTTP bodies are JSON; images travel as base64 PNG. The generator's
//! masked image travels as base64 little-endian `f32` samples in `[-1, 1]`
//! (row-major, RGB interleaved) because 8-bit PNG cannot hold the masked
//! value exactly.

use std::io::{Read, Write};
use std::path::{Path, PathBuf};
use std::process::{Command, Stdio};
use std::time::{Duration, Instant};

use base64::engine::general_purpose::STANDARD as B64;
use base64::Engine;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use thiserror::Error;

use crate::blend::Image;
use crate::fontmetric::{FontClassifier, MetricError, ProbabilityVector};
use crate::mask::BinaryMask;
use crate::pipeline::InferenceBundle;
use crate::quality::OcrResult;

pub const DEFAULT_TIMEOUT: Duration = Duration::from_secs(60);
pub const DEFAULT_RETRIES: u32 = 2;
const MAX_REPLY_BYTES: u64 = 256 << 20;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum BackendError {
    #[error("backend {endpoint} unavailable after {attempts} attempt(s): {reason}")]
    Unavailable { endpoint: String, attempts: u32, reason: String },
    #[error("backend {endpoint} sent a malformed reply: {reason}")]
    MalformedReply { endpoint: String, reason: String },
    #[error("backend {endpoint} does not support {capability}")]
    Unsupported { endpoint: String, capability: String },
    #[error("missing sidecar file {path}")]
    MissingSidecar { path: String },
}

#[derive(Debug, Clone, PartialEq)]
pub struct HttpConfig {
    pub url: String,
    pub timeout: Duration,
    /// Extra attempts after the first failure.
    pub retries: u32,
}

impl HttpConfig {
    pub fn new(url: impl Into<String>) -> Self {
        HttpConfig { url: url.into(), timeout: DEFAULT_TIMEOUT, retries: DEFAULT_RETRIES }
    }

    pub fn with_timeout(mut self, timeout: Duration) -> Self {
        self.timeout = timeout;
        self
    }

    pub fn with_retries(mut self, retries: u32) -> Self {
        self.retries = retries;
        self
    }

    fn malformed(&self, reason: impl Into<String>) -> BackendError {
        BackendError::MalformedReply { endpoint: self.url.clone(), reason: reason.into() }
    }

    /// POSTs `body` and decodes the JSON reply. Transport errors and 5xx
    /// replies are retried; 4xx replies and undecodable bodies are not.
    pub fn post_json<T: DeserializeOwned>(&self, body: &Value) -> Result<T, BackendError> {
        let agent: ureq::Agent =
            ureq::Agent::config_builder().timeout_global(Some(self.timeout)).http_status_as_error(false).build().into();
        let attempts = self.retries + 1;
        let mut last = String::new();
        for attempt in 1..=attempts {
            match agent.post(&self.url).send_json(body) {
                Ok(mut resp) => {
                    let status = resp.status().as_u16();
                    if (200..300).contains(&status) {
                        return resp
                            .body_mut()
                            .with_config()
                            .limit(MAX_REPLY_BYTES)
                            .read_json::<T>()
                            .map_err(|e| self.malformed(e.to_string()));
                    }
                    let text = resp.body_mut().with_config().limit(4096).read_to_string().unwrap_or_default();
                    last = format!("HTTP {status}: {}", text.trim());
                    if status < 500 {
                        return Err(BackendError::Unavailable { endpoint: self.url.clone(), attempts: attempt, reason: last });
                    }
                }
                Err(e) => last = e.to_string(),
            }
            log::warn!("backend {} attempt {attempt}/{attempts} failed: {last}", self.url);
            if attempt < attempts {
                std::thread::sleep(Duration::from_millis(100 * attempt as u64));
            }
        }
        Err(BackendError::Unavailable { endpoint: self.url.clone(), attempts, reason: last })
    }
}

/// Runs `argv`, writes `input` to its stdin and returns its stdout.
fn run_subprocess(argv: &[String], input: &[u8], timeout: Duration) -> Result<Vec<u8>, BackendError> {
    let endpoint = argv.join(" ");
    let fail = |reason: String| BackendError::Unavailable { endpoint: endpoint.clone(), attempts: 1, reason };
    let (prog, args) = argv.split_first().ok_or_else(|| fail("empty command".into()))?;
    let mut child = Command::new(prog)
        .args(args)
        .stdin(Stdio::piped())
        .stdout(Stdio::piped())
        .stderr(Stdio::piped())
        .spawn()
        .map_err(|e| fail(e.to_string()))?;
    let mut stdin = child.stdin.take().expect("piped");
    let input = input.to_vec();
    let writer = std::thread::spawn(move || stdin.write_all(&input));
    let mut stdout = child.stdout.take().expect("piped");
    let reader = std::thread::spawn(move || {
        let mut buf = Vec::new();
        stdout.read_to_end(&mut buf).map(|_| buf)
    });
    let mut stderr = child.stderr.take().expect("piped");
    let err_reader = std::thread::spawn(move || {
        let mut buf = String::new();
        let _ = stderr.read_to_string(&mut buf);
        buf
    });
    let start = Instant::now();
    let status = loop {
        match child.try_wait().map_err(|e| fail(e.to_string()))? {
            Some(status) => break status,
            None if start.elapsed() > timeout => {
                let _ = child.kill();
                let _ = child.wait();
                return Err(fail(format!("timed out after {timeout:?}")));
            }
            None => std::thread::sleep(Duration::from_millis(5)),
        }
    };
    let _ = writer.join();
    let out = reader.join().expect("reader thread").map_err(|e| fail(e.to_string()))?;
    let err = err_reader.join().unwrap_or_default();
    if !status.success() {
        return Err(fail(format!("exited with {status}: {}", err.trim())));
    }
    Ok(out)
}

fn parse_reply<T: DeserializeOwned>(endpoint: &str, bytes: &[u8]) -> Result<T, BackendError> {
    serde_json::from_slice(bytes).map_err(|e| BackendError::MalformedReply { endpoint: endpoint.into(), reason: e.to_string() })
}

pub fn encode_png_b64(png: &[u8]) -> String {
    B64.encode(png)
}

fn decode_image_b64(endpoint: &str, data: &str) -> Result<Image, BackendError> {
    let malformed = |reason: String| BackendError::MalformedReply { endpoint: endpoint.into(), reason };
    let bytes = B64.decode(data.trim()).map_err(|e| malformed(e.to_string()))?;
    Image::from_png(&bytes).map_err(|e| malformed(e.to_string()))
}

fn image_b64(img: &Image) -> String {
    B64.encode(img.to_png().expect("in-memory PNG encoding"))
}

fn mask_b64(mask: &BinaryMask) -> String {
    B64.encode(mask.to_png().expect("in-memory PNG encoding"))
}

// ---------------------------------------------------------------- OCR

pub struct OcrRequest<'a> {
    /// Source image file, used by sidecar lookups.
    pub image_path: &'a Path,
    pub line_index: usize,
    /// The text region to read.
    pub region: &'a Image,
}

pub trait OcrBackend: Send + Sync {
    fn recognize(&self, req: &OcrRequest<'_>) -> Result<OcrResult, BackendError>;
}

/// Reads `<stem>.ocr.json` next to the image: a JSON array of
/// `{"text", "confidence"}` objects ordered by line index.
#[derive(Debug, Clone, Default)]
pub struct SidecarOcr;

impl SidecarOcr {
    pub fn sidecar_path(image_path: &Path) -> PathBuf {
        let stem = image_path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
        image_path.with_file_name(format!("{stem}.ocr.json"))
    }
}

impl OcrBackend for SidecarOcr {
    fn recognize(&self, req: &OcrRequest<'_>) -> Result<OcrResult, BackendError> {
        let path = Self::sidecar_path(req.image_path);
        let shown = path.display().to_string();
        let bytes = std::fs::read(&path).map_err(|_| BackendError::MissingSidecar { path: shown.clone() })?;
        let results: Vec<OcrResult> = parse_reply(&shown, &bytes)?;
        results
            .into_iter()
            .nth(req.line_index)
            .ok_or_else(|| BackendError::MalformedReply { endpoint: shown, reason: format!("no entry for line {}", req.line_index) })
    }
}

fn check_ocr(endpoint: &str, r: OcrResult) -> Result<OcrResult, BackendError> {
    if !(0.0..=1.0).contains(&r.confidence) {
        return Err(BackendError::MalformedReply {
            endpoint: endpoint.into(),
            reason: format!("confidence {} outside [0, 1]", r.confidence),
        });
    }
    Ok(r)
}

/// POSTs `{"image": <base64 PNG>}`, expects `{"text", "confidence"}`.
#[derive(Debug, Clone)]
pub struct HttpOcr(pub HttpConfig);

impl OcrBackend for HttpOcr {
    fn recognize(&self, req: &OcrRequest<'_>) -> Result<OcrResult, BackendError> {
        let r = self.0.post_json(&json!({ "image": image_b64(req.region) }))?;
        check_ocr(&self.0.url, r)
    }
}

/// Writes the region PNG to the command's stdin, reads `{"text", "confidence"}` from stdout.
#[derive(Debug, Clone)]
pub struct SubprocessOcr {
    pub argv: Vec<String>,
    pub timeout: Duration,
}

impl OcrBackend for SubprocessOcr {
    fn recognize(&self, req: &OcrRequest<'_>) -> Result<OcrResult, BackendError> {
        let png = req.region.to_png().expect("in-memory PNG encoding");
        let out = run_subprocess(&self.argv, &png, self.timeout)?;
        let endpoint = self.argv.join(" ");
        check_ocr(&endpoint, parse_reply(&endpoint, &out)?)
    }
}

// ---------------------------------------------------------- classifier

#[derive(Deserialize)]
struct ProbsReply {
    probs: Vec<f64>,
}

fn check_probs(endpoint: &str, expected: usize, probs: Vec<f64>) -> Result<ProbabilityVector, MetricError> {
    if probs.len() != expected {
        return Err(BackendError::MalformedReply {
            endpoint: endpoint.into(),
            reason: format!("{} probabilities, expected {expected}", probs.len()),
        }
        .into());
    }
    ProbabilityVector::new(probs).map_err(|e| BackendError::MalformedReply { endpoint: endpoint.into(), reason: e.to_string() }.into())
}

/// POSTs `{"image": <base64 PNG>}`, expects `{"probs": [f64; c]}`.
#[derive(Debug, Clone)]
pub struct HttpClassifier {
    pub config: HttpConfig,
    pub labels: usize,
}

impl FontClassifier for HttpClassifier {
    fn label_count(&self) -> usize {
        self.labels
    }

    fn classify(&self, region: &Image) -> Result<ProbabilityVector, MetricError> {
        let reply: ProbsReply = self.config.post_json(&json!({ "image": image_b64(region) }))?;
        check_probs(&self.config.url, self.labels, reply.probs)
    }
}

#[derive(Debug, Clone)]
pub struct SubprocessClassifier {
    pub argv: Vec<String>,
    pub timeout: Duration,
    pub labels: usize,
}

impl FontClassifier for SubprocessClassifier {
    fn label_count(&self) -> usize {
        self.labels
    }

    fn classify(&self, region: &Image) -> Result<ProbabilityVector, MetricError> {
        let out = run_subprocess(&self.argv, &region.to_png().expect("in-memory PNG encoding"), self.timeout)?;
        let endpoint = self.argv.join(" ");
        let reply: ProbsReply = parse_reply(&endpoint, &out)?;
        check_probs(&endpoint, self.labels, reply.probs)
    }
}

// -------------------------------------------------------- segmentation

pub trait SegmentationBackend: Send + Sync {
    /// Text pixels of `region` (same dimensions).
    fn segment(&self, region: &Image) -> Result<BinaryMask, BackendError>;
}

/// Marks pixels whose luminance differs from the border median by more
/// than `threshold`.
#[derive(Debug, Clone)]
pub struct ThresholdSegmenter {
    pub threshold: f64,
}

impl Default for ThresholdSegmenter {
    fn default() -> Self {
        ThresholdSegmenter { threshold: 0.25 }
    }
}

impl SegmentationBackend for ThresholdSegmenter {
    fn segment(&self, region: &Image) -> Result<BinaryMask, BackendError> {
        let [r, g, b] = region.border_median();
        let bg = 0.299 * r + 0.587 * g + 0.114 * b;
        let (w, h) = region.dims();
        let mut m = BinaryMask::new(w, h);
        for y in 0..h {
            for x in 0..w {
                m.set(x, y, (region.luminance(x, y) - bg).abs() > self.threshold);
            }
        }
        Ok(m)
    }
}

/// POSTs `{"image": <base64 PNG>}`, expects `{"mask": <base64 PNG>}`.
#[derive(Debug, Clone)]
pub struct HttpSegmenter(pub HttpConfig);

#[derive(Deserialize)]
struct MaskReply {
    mask: String,
}

impl SegmentationBackend for HttpSegmenter {
    fn segment(&self, region: &Image) -> Result<BinaryMask, BackendError> {
        let reply: MaskReply = self.0.post_json(&json!({ "image": image_b64(region) }))?;
        let bytes = B64.decode(reply.mask.trim()).map_err(|e| self.0.malformed(e.to_string()))?;
        let mask = BinaryMask::from_png(&bytes).map_err(|e| self.0.malformed(e.to_string()))?;
        if mask.dims() != region.dims() {
            return Err(self.0.malformed(format!("mask is {:?}, region is {:?}", mask.dims(), region.dims())));
        }
        Ok(mask)
    }
}

// ----------------------------------------------------------- generator

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Capabilities {
    pub generate: bool,
    pub inpaint_erase: bool,
    /// Same request and seed always give the same image.
    pub deterministic: bool,
}

pub trait GeneratorBackend: Send + Sync {
    fn endpoint(&self) -> String;
    fn capabilities(&self) -> Capabilities;
    /// Produces an image of the bundle's canvas size.
    fn generate(&self, bundle: &InferenceBundle) -> Result<Image, BackendError>;
    /// Removes the text under `mask`, returning an image of the same size.
    fn inpaint_erase(&self, image: &Image, mask: &BinaryMask, seed: u64) -> Result<Image, BackendError>;
}

/// In-process generator: the masked image with glyph ink painted black.
/// Erasing fills the mask with the mean color of the pixels bordering it.
#[derive(Debug, Clone, Default)]
pub struct StubGenerator;

pub const STUB_INK: [f64; 3] = [0.0, 0.0, 0.0];

impl GeneratorBackend for StubGenerator {
    fn endpoint(&self) -> String {
        "stub".into()
    }

    fn capabilities(&self) -> Capabilities {
        Capabilities { generate: true, inpaint_erase: true, deterministic: true }
    }

    fn generate(&self, bundle: &InferenceBundle) -> Result<Image, BackendError> {
        let base = &bundle.masked.image;
        Ok(Image::from_fn(base.width(), base.height(), |x, y| if bundle.glyph.get(x, y) { STUB_INK } else { base.get(x, y) }))
    }

    fn inpaint_erase(&self, image: &Image, mask: &BinaryMask, _seed: u64) -> Result<Image, BackendError> {
        let (w, h) = image.dims();
        let mut sum = [0.0; 3];
        let mut count = 0usize;
        for y in 0..h {
            for x in 0..w {
                if mask.get(x, y) {
                    continue;
                }
                let near = [(-1i64, 0i64), (1, 0), (0, -1), (0, 1)].iter().any(|(dx, dy)| mask.get_signed(x as i64 + dx, y as i64 + dy));
                if near {
                    let p = image.get(x, y);
                    (0..3).for_each(|c| sum[c] += p[c]);
                    count += 1;
                }
            }
        }
        let fill = if count == 0 { image.border_median() } else { sum.map(|s| s / count as f64) };
        Ok(Image::from_fn(w, h, |x, y| if mask.get(x, y) { fill } else { image.get(x, y) }))
    }
}

#[derive(Deserialize)]
struct ImageReply {
    image: String,
}

/// Generator behind `POST <url>/generate`. Requests carry a `"task"` of
/// `"generate"` or `"inpaint_erase"`; replies are `{"image": <base64 PNG>}`.
#[derive(Debug, Clone)]
pub struct HttpGenerator {
    pub config: HttpConfig,
    pub capabilities: Capabilities,
}

impl HttpGenerator {
    pub fn new(mut config: HttpConfig) -> Self {
        let trimmed = config.url.trim_end_matches('/');
        config.url = if trimmed.ends_with("/generate") { trimmed.to_string() } else { format!("{trimmed}/generate") };
        HttpGenerator { config, capabilities: Capabilities { generate: true, inpaint_erase: true, deterministic: false } }
    }

    fn image_reply(&self, body: Value, dims: (u32, u32)) -> Result<Image, BackendError> {
        let reply: ImageReply = self.config.post_json(&body)?;
        let img = decode_image_b64(&self.config.url, &reply.image)?;
        if img.dims() != dims {
            return Err(self.config.malformed(format!("image is {:?}, expected {dims:?}", img.dims())));
        }
        Ok(img)
    }
}

/// JSON body sent for a generation request.
pub fn generate_request_body(bundle: &InferenceBundle) -> Value {
    json!({
        "task": "generate",
        "width": bundle.canvas,
        "height": bundle.canvas,
        "seed": bundle.seed,
        "caption": bundle.caption,
        "glyph": mask_b64(&bundle.glyph),
        "position": mask_b64(&bundle.position),
        "masked": B64.encode(bundle.masked.to_backend_bytes()),
    })
}

impl GeneratorBackend for HttpGenerator {
    fn endpoint(&self) -> String {
        self.config.url.clone()
    }

    fn capabilities(&self) -> Capabilities {
        self.capabilities
    }

    fn generate(&self, bundle: &InferenceBundle) -> Result<Image, BackendError> {
        self.image_reply(generate_request_body(bundle), (bundle.canvas, bundle.canvas))
    }

    fn inpaint_erase(&self, image: &Image, mask: &BinaryMask, seed: u64) -> Result<Image, BackendError> {
        if !self.capabilities.inpaint_erase {
            return Err(BackendError::Unsupported { endpoint: self.endpoint(), capability: "inpaint_erase".into() });
        }
        let body = json!({
            "task": "inpaint_erase",
            "width": image.width(),
            "height": image.height(),
            "seed": seed,
            "image": image_b64(image),
            "mask": mask_b64(mask),
        });
        self.image_reply(body, image.dims())
    }
}

// ------------------------------------------------------------ settings

/// Backend endpoints as configured through `GLYPHCTL_*` environment
/// variables. Unset endpoints fall back to the in-process implementations.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct BackendSettings {
    pub generator_url: Option<String>,
    pub ocr_url: Option<String>,
    pub classifier_url: Option<String>,
    /// Label count the remote classifier answers with.
    pub classifier_labels: Option<usize>,
    pub segmenter_url: Option<String>,
    pub timeout: Option<Duration>,
    pub retries: Option<u32>,
}

impl BackendSettings {
    pub const VARS: [&'static str; 7] = [
        "GLYPHCTL_GENERATOR_URL",
        "GLYPHCTL_OCR_URL",
        "GLYPHCTL_CLASSIFIER_URL",
        "GLYPHCTL_CLASSIFIER_LABELS",
        "GLYPHCTL_SEGMENTER_URL",
        "GLYPHCTL_BACKEND_TIMEOUT_MS",
        "GLYPHCTL_BACKEND_RETRIES",
    ];

    pub fn from_env() -> Result<Self, String> {
        Self::from_lookup(|k| std::env::var(k).ok())
    }

    pub fn from_lookup(get: impl Fn(&str) -> Option<String>) -> Result<Self, String> {
        let text = |k: &str| get(k).map(|v| v.trim().to_string()).filter(|v| !v.is_empty());
        let number = |k: &str| -> Result<Option<u64>, String> {
            text(k).map(|v| v.parse::<u64>().map_err(|_| format!("{k}: '{v}' is not a non-negative integer"))).transpose()
        };
        Ok(BackendSettings {
            generator_url: text("GLYPHCTL_GENERATOR_URL"),
            ocr_url: text("GLYPHCTL_OCR_URL"),
            classifier_url: text("GLYPHCTL_CLASSIFIER_URL"),
            classifier_labels: number("GLYPHCTL_CLASSIFIER_LABELS")?.map(|n| n as usize),
            segmenter_url: text("GLYPHCTL_SEGMENTER_URL"),
            timeout: number("GLYPHCTL_BACKEND_TIMEOUT_MS")?.map(Duration::from_millis),
            retries: number("GLYPHCTL_BACKEND_RETRIES")?.map(|n| n as u32),
        })
    }

    pub fn http(&self, url: &str) -> HttpConfig {
        HttpConfig::new(url).with_timeout(self.timeout.unwrap_or(DEFAULT_TIMEOUT)).with_retries(self.retries.unwrap_or(DEFAULT_RETRIES))
    }

    /// The configured HTTP generator, or the stub.
    pub fn generator(&self) -> Box<dyn GeneratorBackend> {
        match &self.generator_url {
            Some(url) => Box::new(HttpGenerator::new(self.http(url))),
            None => Box::new(StubGenerator),
        }
    }

    /// The configured HTTP OCR engine, or sidecar files.
    pub fn ocr(&self) -> Box<dyn OcrBackend> {
        match &self.ocr_url {
            Some(url) => Box::new(HttpOcr(self.http(url))),
            None => Box::new(SidecarOcr),
        }
    }

    /// The configured HTTP classifier, if any.
    pub fn classifier(&self) -> Result<Option<HttpClassifier>, String> {
        match (&self.classifier_url, self.classifier_labels) {
            (None, _) => Ok(None),
            (Some(_), None) => Err("GLYPHCTL_CLASSIFIER_URL needs GLYPHCTL_CLASSIFIER_LABELS".into()),
            (Some(url), Some(labels)) => Ok(Some(HttpClassifier { config: self.http(url), labels })),
        }
    }

    /// The configured HTTP segmenter, or luminance thresholding.
    pub fn segmenter(&self) -> Box<dyn SegmentationBackend> {
        match &self.segmenter_url {
            Some(url) => Box::new(HttpSegmenter(self.http(url))),
            None => Box::new(ThresholdSegmenter::default()),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sidecar_lookup() {
        let dir = tempfile::tempdir().unwrap();
        let img = dir.path().join("shot.png");
        std::fs::write(dir.path().join("shot.ocr.json"), r#"[{"text":"HI","confidence":0.9},{"text":"YO","confidence":0.5}]"#).unwrap();
        let region = Image::filled(2, 2, [1.0; 3]);
        let r = SidecarOcr.recognize(&OcrRequest { image_path: &img, line_index: 1, region: &region }).unwrap();
        assert_eq!(r, OcrResult { text: "YO".into(), confidence: 0.5 });
        assert!(matches!(
            SidecarOcr.recognize(&OcrRequest { image_path: &img, line_index: 2, region: &region }),
            Err(BackendError::MalformedReply { .. })
        ));
        let other = dir.path().join("none.png");
        assert!(matches!(
            SidecarOcr.recognize(&OcrRequest { image_path: &other, line_index: 0, region: &region }),
            Err(BackendError::MissingSidecar { .. })
        ));
    }

    #[test]
    fn unreachable_http_reports_attempts() {
        let cfg = HttpConfig::new("http://127.0.0.1:9/generate").with_timeout(Duration::from_millis(200)).with_retries(1);
        let err =
            HttpOcr(cfg).recognize(&OcrRequest { image_path: Path::new("x.png"), line_index: 0, region: &Image::filled(2, 2, [1.0; 3]) });
        match err {
            Err(BackendError::Unavailable { attempts, .. }) => assert_eq!(attempts, 2),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn generator_url_normalized() {
        assert_eq!(HttpGenerator::new(HttpConfig::new("http://h:1/")).endpoint(), "http://h:1/generate");
        assert_eq!(HttpGenerator::new(HttpConfig::new("http://h:1/generate")).endpoint(), "http://h:1/generate");
    }

    #[cfg(unix)]
    #[test]
    fn subprocess_roundtrip_and_failure() {
        let ok = SubprocessOcr {
            argv: vec!["sh".into(), "-c".into(), r#"cat >/dev/null; echo '{"text":"A","confidence":1.0}'"#.into()],
            timeout: Duration::from_secs(10),
        };
        let region = Image::filled(3, 3, [1.0; 3]);
        let req = OcrRequest { image_path: Path::new("x.png"), line_index: 0, region: &region };
        assert_eq!(ok.recognize(&req).unwrap().text, "A");
        let bad = SubprocessOcr { argv: vec!["sh".into(), "-c".into(), "exit 3".into()], timeout: Duration::from_secs(10) };
        assert!(matches!(bad.recognize(&req), Err(BackendError::Unavailable { .. })));
        let slow = SubprocessOcr { argv: vec!["sleep".into(), "5".into()], timeout: Duration::from_millis(100) };
        assert!(matches!(slow.recognize(&req), Err(BackendError::Unavailable { .. })));
    }

    #[test]
    fn threshold_segmenter_finds_ink() {
        let mut m = BinaryMask::new(10, 10);
        m.set(4, 4, true);
        m.set(5, 4, true);
        let seg = ThresholdSegmenter::default().segment(&Image::from_mask(&m)).unwrap();
        assert_eq!(seg, m);
    }

    #[test]
    fn settings_from_lookup() {
        let vars = [("GLYPHCTL_GENERATOR_URL", "http://gen:9000"), ("GLYPHCTL_BACKEND_TIMEOUT_MS", "1500"), ("GLYPHCTL_OCR_URL", " ")];
        let s = BackendSettings::from_lookup(|k| vars.iter().find(|(n, _)| *n == k).map(|(_, v)| v.to_string())).unwrap();
        assert_eq!(s.generator_url.as_deref(), Some("http://gen:9000"));
        assert_eq!(s.ocr_url, None);
        assert_eq!(s.timeout, Some(Duration::from_millis(1500)));
        assert_eq!(s.generator().endpoint(), "http://gen:9000/generate");
        assert_eq!(BackendSettings::default().generator().endpoint(), "stub");
        let bad = BackendSettings::from_lookup(|k| (k == "GLYPHCTL_BACKEND_TIMEOUT_MS").then(|| "soon".to_string()));
        assert!(bad.unwrap_err().contains("GLYPHCTL_BACKEND_TIMEOUT_MS"));
        let half = BackendSettings { classifier_url: Some("http://c".into()), ..Default::default() };
        assert!(half.classifier().is_err());
    }
}
