use std::path::PathBuf;
use std::sync::Arc;

use axum::extract::{FromRequest, Multipart, Request, State};
use axum::http::{header, StatusCode};
use axum::Json;
use base64::engine::general_purpose::STANDARD as B64;
use base64::Engine;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use glyphctl::backend::{GeneratorBackend, StubGenerator};
use glyphctl::blend::{CloneOptions, Image, ZoomRecord, ZOOM_MARGIN};
use glyphctl::fontmetric::{FontClassifier, TopK};
use glyphctl::geometry::Quad;
use glyphctl::glyphraster::{LayoutWarning, Orientation};
use glyphctl::mask::BinaryMask;
use glyphctl::pipeline::{
    build_inference_bundle, evaluate_benchmark, run_edit, BundleLine, BundleOptions, EditOptions, EvalOptions, InferenceBundle, Report,
};

use crate::error::ApiError;
use crate::fonts::FontInfo;
use crate::{probe_classifier, AppState};

/// A quad as 8 numbers or as the string `"x0,y0,...,x3,y3"`.
#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
pub enum QuadInput {
    Flat(Vec<f64>),
    Text(String),
}

impl QuadInput {
    fn to_quad(&self) -> Result<Quad, String> {
        match self {
            QuadInput::Flat(v) => Quad::from_flat(v),
            QuadInput::Text(s) => Quad::parse(s),
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
pub struct LineRequest {
    pub text: String,
    pub quad: QuadInput,
    pub font_id: String,
    #[serde(default)]
    pub orientation: Orientation,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(default)]
pub struct BundleRequest {
    /// Base64 PNG. Multipart requests send it as the `image` part instead.
    pub image: Option<String>,
    /// Blank canvas size when no image is given.
    pub width: Option<u32>,
    pub height: Option<u32>,
    pub lines: Vec<LineRequest>,
    /// Single-line shorthand for `lines`.
    pub text: Option<String>,
    pub quad: Option<QuadInput>,
    pub font_id: Option<String>,
    pub orientation: Orientation,
    pub caption: String,
    pub canvas: Option<u32>,
    pub seed: u64,
    pub zoom_margin: Option<f64>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(default)]
pub struct EditRequest {
    #[serde(flatten)]
    pub bundle: BundleRequest,
    pub tighten: bool,
    pub inpaint: bool,
    /// `"stub"` forces the in-process generator.
    pub backend: Option<String>,
    pub tol: Option<f64>,
    pub max_iter: Option<usize>,
}

#[derive(Debug, Clone, Serialize)]
pub struct WarningOut {
    pub line: usize,
    #[serde(flatten)]
    pub warning: LayoutWarning,
}

#[derive(Debug, Clone, Serialize)]
pub struct BundleResponse {
    pub canvas: u32,
    pub seed: u64,
    pub caption: String,
    /// Base64 PNGs.
    pub glyph: String,
    pub position: String,
    pub masked: String,
    pub zoom: Option<ZoomRecord>,
    /// Line quads in canvas pixels, 8 numbers each.
    pub quads: Vec<[f64; 8]>,
    pub warnings: Vec<WarningOut>,
}

#[derive(Debug, Clone, Serialize)]
pub struct EditResponse {
    /// Base64 PNG of the edited image.
    pub image: String,
    pub blend_region: String,
    pub effective_quads: Vec<[f64; 8]>,
    pub notes: Vec<String>,
    pub bundle: BundleResponse,
}

#[derive(Debug, Clone, Deserialize)]
pub struct EvaluateRequest {
    pub manifest: PathBuf,
    pub outputs: PathBuf,
    #[serde(default)]
    pub ks: Option<Vec<TopK>>,
    #[serde(default)]
    pub method: Option<String>,
    #[serde(default)]
    pub isolate: bool,
    /// Registry ids for the reference classifier; all fonts when absent.
    #[serde(default)]
    pub reference_fonts: Option<Vec<String>>,
    #[serde(default)]
    pub probe: Option<String>,
    #[serde(default)]
    pub jobs: Option<usize>,
}

#[derive(Debug, Clone, Serialize)]
pub struct EvaluateResponse {
    pub report: Report,
    pub csv: String,
    pub long_csv: String,
    pub summary: String,
}

/// A JSON body, or a multipart body with a JSON `request` part and an
/// optional binary `image` part.
pub(crate) struct Payload<T> {
    body: T,
    image: Option<Vec<u8>>,
}

impl<T: DeserializeOwned + Send, S: Send + Sync> FromRequest<S> for Payload<T> {
    type Rejection = ApiError;

    async fn from_request(req: Request, state: &S) -> Result<Self, ApiError> {
        let multipart =
            req.headers().get(header::CONTENT_TYPE).and_then(|v| v.to_str().ok()).is_some_and(|v| v.starts_with("multipart/form-data"));
        if !multipart {
            let Json(body) = Json::<T>::from_request(req, state).await.map_err(|e| ApiError::invalid(e.body_text()))?;
            return Ok(Payload { body, image: None });
        }
        let mut form = Multipart::from_request(req, state).await.map_err(|e| ApiError::invalid(e.body_text()))?;
        let (mut body, mut image) = (None, None);
        while let Some(field) = form.next_field().await.map_err(|e| ApiError::invalid(e.body_text()))? {
            match field.name() {
                Some("request") => {
                    let text = field.text().await.map_err(|e| ApiError::invalid(e.body_text()))?;
                    body = Some(serde_json::from_str(&text).map_err(|e| ApiError::invalid(format!("request part: {e}")))?);
                }
                Some("image") => image = Some(field.bytes().await.map_err(|e| ApiError::invalid(e.body_text()))?.to_vec()),
                _ => {}
            }
        }
        let body = body.ok_or_else(|| ApiError::invalid("multipart body has no 'request' part"))?;
        Ok(Payload { body, image })
    }
}

fn png_b64(png: Result<Vec<u8>, glyphctl::mask::CodecError>) -> Result<String, ApiError> {
    png.map(|b| B64.encode(b)).map_err(|e| ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, "image_error", e.to_string()))
}

fn bad_image(msg: impl Into<String>) -> ApiError {
    ApiError::new(StatusCode::BAD_REQUEST, "invalid_image", msg)
}

fn load_image(req: &BundleRequest, upload: Option<Vec<u8>>) -> Result<Image, ApiError> {
    let bytes = match (upload, &req.image) {
        (Some(b), _) => Some(b),
        (None, Some(s)) => Some(B64.decode(s.trim()).map_err(|e| bad_image(format!("image is not base64: {e}")))?),
        (None, None) => None,
    };
    match (bytes, req.width, req.height) {
        (Some(b), _, _) => Image::from_png(&b).map_err(|e| bad_image(e.to_string())),
        (None, Some(w), Some(h)) if w > 0 && h > 0 => Ok(Image::filled(w, h, [1.0; 3])),
        _ => Err(bad_image("give an image, or width and height for a blank canvas")),
    }
}

impl AppState {
    fn lines(&self, req: &BundleRequest) -> Result<Vec<BundleLine>, ApiError> {
        let mut specs: Vec<LineRequest> = req.lines.clone();
        if let Some(text) = &req.text {
            let (Some(quad), Some(font_id)) = (&req.quad, &req.font_id) else {
                return Err(ApiError::invalid("'text' needs 'quad' and 'font_id'"));
            };
            specs.push(LineRequest { text: text.clone(), quad: quad.clone(), font_id: font_id.clone(), orientation: req.orientation });
        }
        if specs.is_empty() {
            return Err(ApiError::invalid("no lines given"));
        }
        specs
            .iter()
            .enumerate()
            .map(|(i, l)| {
                let quad = l.quad.to_quad().map_err(|e| ApiError::invalid(format!("line {i}: {e}")).with_detail(json!({ "line": i })))?;
                let font = self.fonts.get(&l.font_id).ok_or_else(|| unknown_font(&l.font_id))?;
                Ok(BundleLine { text: l.text.clone(), font, quad, orientation: l.orientation })
            })
            .collect()
    }

    fn bundle_options(&self, req: &BundleRequest) -> Result<BundleOptions, ApiError> {
        let mut opts = BundleOptions { seed: req.seed, zoom_margin: req.zoom_margin.unwrap_or(ZOOM_MARGIN), ..BundleOptions::default() };
        if let Some(n) = req.canvas {
            if !(8..=4096).contains(&n) {
                return Err(ApiError::invalid(format!("canvas {n} outside 8..=4096")));
            }
            opts.canvas = n;
        }
        if !(opts.zoom_margin.is_finite() && opts.zoom_margin >= 0.0) {
            return Err(ApiError::invalid("zoom_margin must be a non-negative number"));
        }
        Ok(opts)
    }
}

fn unknown_font(id: &str) -> ApiError {
    ApiError::new(StatusCode::NOT_FOUND, "unknown_font", format!("no font with id '{id}'")).with_detail(json!({ "font_id": id }))
}

fn mask_b64(m: &BinaryMask) -> Result<String, ApiError> {
    png_b64(m.to_png())
}

fn bundle_response(b: &InferenceBundle) -> Result<BundleResponse, ApiError> {
    Ok(BundleResponse {
        canvas: b.canvas,
        seed: b.seed,
        caption: b.caption.clone(),
        glyph: mask_b64(&b.glyph)?,
        position: mask_b64(&b.position)?,
        masked: png_b64(b.masked.image.to_png())?,
        zoom: b.zoom,
        quads: b.quads.iter().map(Quad::to_flat).collect(),
        warnings: b.warnings.iter().map(|(line, w)| WarningOut { line: *line, warning: w.clone() }).collect(),
    })
}

pub(crate) async fn healthz(State(state): State<AppState>) -> Json<Value> {
    Json(json!({
        "status": "ok",
        "version": env!("CARGO_PKG_VERSION"),
        "generator": state.generator.endpoint(),
        "capabilities": state.generator.capabilities(),
        "fonts": state.fonts.list().len(),
    }))
}

pub(crate) async fn list_fonts(State(state): State<AppState>) -> Json<Vec<FontInfo>> {
    Json(state.fonts.list())
}

pub(crate) async fn upload_font(State(state): State<AppState>, mut form: Multipart) -> Result<(StatusCode, Json<FontInfo>), ApiError> {
    let (mut bytes, mut name) = (None, None);
    while let Some(field) = form.next_field().await.map_err(|e| ApiError::invalid(e.body_text()))? {
        match field.name() {
            Some("font") => {
                if name.is_none() {
                    name = field.file_name().map(|f| f.trim_end_matches(".ttf").to_string());
                }
                bytes = Some(field.bytes().await.map_err(|e| ApiError::invalid(e.body_text()))?);
            }
            Some("name") => name = Some(field.text().await.map_err(|e| ApiError::invalid(e.body_text()))?),
            _ => {}
        }
    }
    let bytes = bytes.ok_or_else(|| ApiError::invalid("multipart body has no 'font' part"))?;
    let name = name.filter(|n| !n.is_empty()).unwrap_or_else(|| "uploaded".into());
    let fonts = state.fonts.clone();
    let info = state.gate.run(move || fonts.add(&bytes, &name, false)).await??;
    Ok((StatusCode::CREATED, Json(info)))
}

pub(crate) async fn bundle(State(state): State<AppState>, payload: Payload<BundleRequest>) -> Result<Json<BundleResponse>, ApiError> {
    let req = payload.body;
    let img = load_image(&req, payload.image)?;
    let lines = state.lines(&req)?;
    let opts = state.bundle_options(&req)?;
    let out = state
        .gate
        .run(move || -> Result<BundleResponse, ApiError> {
            let b = build_inference_bundle(&img, &lines, &req.caption, &opts)?;
            bundle_response(&b)
        })
        .await??;
    Ok(Json(out))
}

pub(crate) async fn edit(State(state): State<AppState>, payload: Payload<EditRequest>) -> Result<Json<EditResponse>, ApiError> {
    let req = payload.body;
    let img = load_image(&req.bundle, payload.image)?;
    let lines = state.lines(&req.bundle)?;
    let mut clone = CloneOptions::default();
    if let Some(tol) = req.tol {
        if !(tol.is_finite() && tol > 0.0) {
            return Err(ApiError::invalid("tol must be positive"));
        }
        clone.tol = tol;
    }
    clone.max_iter = req.max_iter;
    let opts = EditOptions { bundle: state.bundle_options(&req.bundle)?, tighten: req.tighten, inpaint: req.inpaint, clone };
    let backend: Arc<dyn GeneratorBackend> = match req.backend.as_deref() {
        None | Some("default") => state.generator.clone(),
        Some("stub") => Arc::new(StubGenerator),
        Some(other) => return Err(ApiError::invalid(format!("unknown backend '{other}' (use 'stub' or 'default')"))),
    };
    let caption = req.bundle.caption;
    let out = state
        .gate
        .run(move || -> Result<EditResponse, ApiError> {
            let o = run_edit(&img, &lines, &caption, backend.as_ref(), &opts)?;
            Ok(EditResponse {
                image: png_b64(o.image.to_png())?,
                blend_region: mask_b64(&o.blend_region)?,
                effective_quads: o.effective_quads.iter().map(Quad::to_flat).collect(),
                notes: o.notes,
                bundle: bundle_response(&o.bundle)?,
            })
        })
        .await??;
    Ok(Json(out))
}

pub(crate) async fn evaluate(State(state): State<AppState>, Json(req): Json<EvaluateRequest>) -> Result<Json<EvaluateResponse>, ApiError> {
    let settings = state.config.backends.clone();
    let http_classifier = settings.classifier().map_err(ApiError::invalid)?;
    let reference = match &http_classifier {
        Some(_) => None,
        None => {
            let fonts = state.fonts.named(req.reference_fonts.as_deref()).map_err(|id| unknown_font(&id))?;
            Some(fonts)
        }
    };
    let opts = EvalOptions {
        ks: req.ks.clone().unwrap_or_else(|| TopK::STANDARD.to_vec()),
        method: req.method.clone().unwrap_or_else(|| EvalOptions::default().method),
        jobs: req.jobs,
    };
    let out = state
        .gate
        .run(move || -> Result<EvaluateResponse, ApiError> {
            let classifier: Box<dyn FontClassifier> = match (http_classifier, reference) {
                (Some(c), _) => Box::new(c),
                (None, Some(fonts)) => {
                    let c = probe_classifier(&fonts, req.probe.as_deref())
                        .map_err(|e| ApiError::new(StatusCode::UNPROCESSABLE_ENTITY, "metric_error", e.to_string()))?;
                    Box::new(c)
                }
                (None, None) => unreachable!("reference fonts are resolved when no classifier is configured"),
            };
            let ocr = settings.ocr();
            let segmenter = req.isolate.then(|| settings.segmenter());
            let report =
                evaluate_benchmark(&req.manifest, &req.outputs, classifier.as_ref(), Some(ocr.as_ref()), segmenter.as_deref(), &opts)?;
            Ok(EvaluateResponse { csv: report.to_csv(), long_csv: report.to_long_csv(), summary: report.summary(), report })
        })
        .await??;
    Ok(Json(out))
}
