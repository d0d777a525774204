//! Fuzzy font accuracy: top-k truncated classifier probabilities compared
//! by l2 and cosine distance, plus a deterministic reference classifier.

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

use crate::backend::{BackendError, SegmentationBackend};
use crate::blend::Image;
use crate::fontio::Font;
use crate::geometry::Quad;
use crate::glyphraster::{render_line, LineSpec, Orientation};
use crate::mask::BinaryMask;

pub const FEATURE_GRID: usize = 16;
const SUPERSAMPLE: usize = 4;
// weight above which a pixel counts as ink when cropping
const INK_THRESHOLD: f64 = 0.25;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MetricError {
    #[error("k = {k} is outside 1..={len}")]
    KOutOfRange { k: usize, len: usize },
    #[error("vector lengths differ ({left} vs {right})")]
    LengthMismatch { left: usize, right: usize },
    #[error("truncated vector is all zeros")]
    ZeroVector,
    #[error("invalid probability vector: {0}")]
    InvalidProbabilities(String),
    #[error("reference classifier needs at least 2 fonts, got {count}")]
    InsufficientFonts { count: usize },
    #[error("probe text cannot be rendered in font {font}: {reason}")]
    UnrenderableProbe { font: usize, reason: String },
    #[error("region contains no ink")]
    EmptyRegion,
    #[error(transparent)]
    Backend(#[from] BackendError),
}

/// Classifier output: non-negative entries summing to 1.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct ProbabilityVector {
    values: Vec<f64>,
}

impl ProbabilityVector {
    pub const SUM_TOLERANCE: f64 = 1e-6;

    pub fn new(values: Vec<f64>) -> Result<Self, MetricError> {
        if values.is_empty() {
            return Err(MetricError::InvalidProbabilities("empty".into()));
        }
        if let Some((i, v)) = values.iter().enumerate().find(|(_, v)| !(v.is_finite() && **v >= 0.0)) {
            return Err(MetricError::InvalidProbabilities(format!("entry {i} is {v}")));
        }
        let sum: f64 = values.iter().sum();
        if (sum - 1.0).abs() > Self::SUM_TOLERANCE {
            return Err(MetricError::InvalidProbabilities(format!("sum is {sum}")));
        }
        Ok(ProbabilityVector { values })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn argmax(&self) -> usize {
        let mut best = 0;
        for (i, v) in self.values.iter().enumerate() {
            if *v > self.values[best] {
                best = i;
            }
        }
        best
    }
}

impl TryFrom<Vec<f64>> for ProbabilityVector {
    type Error = MetricError;
    fn try_from(v: Vec<f64>) -> Result<Self, MetricError> {
        ProbabilityVector::new(v)
    }
}

impl From<ProbabilityVector> for Vec<f64> {
    fn from(p: ProbabilityVector) -> Self {
        p.values
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum TopK {
    K(usize),
    Full,
}

impl TopK {
    /// The k values reported by default: 5, 20, 50 and full.
    pub const STANDARD: [TopK; 4] = [TopK::K(5), TopK::K(20), TopK::K(50), TopK::Full];
}

impl fmt::Display for TopK {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TopK::K(k) => write!(f, "{k}"),
            TopK::Full => f.write_str("full"),
        }
    }
}

impl FromStr for TopK {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        let s = s.trim();
        if s.eq_ignore_ascii_case("full") {
            return Ok(TopK::Full);
        }
        match s.parse::<usize>() {
            Ok(0) | Err(_) => Err(format!("invalid k '{s}': expected a positive integer or 'full'")),
            Ok(k) => Ok(TopK::K(k)),
        }
    }
}

impl Serialize for TopK {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        match self {
            TopK::K(k) => s.serialize_u64(*k as u64),
            TopK::Full => s.serialize_str("full"),
        }
    }
}

impl<'de> Deserialize<'de> for TopK {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            N(u64),
            S(String),
        }
        match Raw::deserialize(d)? {
            Raw::N(0) => Err(serde::de::Error::custom("k must be positive")),
            Raw::N(n) => Ok(TopK::K(n as usize)),
            Raw::S(s) => s.parse().map_err(serde::de::Error::custom),
        }
    }
}

/// Keeps the k largest entries at their original values and zeroes the
/// rest. Among equal values at the cut, lower indices are kept.
pub fn topk_truncate(p: &ProbabilityVector, k: TopK) -> Result<Vec<f64>, MetricError> {
    truncate_values(p.values(), k)
}

/// [`topk_truncate`] over any non-negative vector, e.g. an already
/// truncated one.
pub fn truncate_values(values: &[f64], k: TopK) -> Result<Vec<f64>, MetricError> {
    let k = match k {
        TopK::Full => return Ok(values.to_vec()),
        TopK::K(k) if k == 0 || k > values.len() => return Err(MetricError::KOutOfRange { k, len: values.len() }),
        TopK::K(k) => k,
    };
    let mut sorted = values.to_vec();
    sorted.sort_by(|a, b| b.total_cmp(a));
    let cut = sorted[k - 1];
    let mut at_cut = k - values.iter().filter(|&&v| v > cut).count();
    Ok(values
        .iter()
        .map(|&v| {
            if v > cut {
                v
            } else if v == cut && at_cut > 0 {
                at_cut -= 1;
                v
            } else {
                0.0
            }
        })
        .collect())
}

fn truncated_pair(p: &ProbabilityVector, q: &ProbabilityVector, k: TopK) -> Result<(Vec<f64>, Vec<f64>), MetricError> {
    if p.len() != q.len() {
        return Err(MetricError::LengthMismatch { left: p.len(), right: q.len() });
    }
    Ok((topk_truncate(p, k)?, topk_truncate(q, k)?))
}

pub fn l2_at_k(p: &ProbabilityVector, q: &ProbabilityVector, k: TopK) -> Result<f64, MetricError> {
    let (a, b) = truncated_pair(p, q, k)?;
    Ok(a.iter().zip(&b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt())
}

/// `1 − cos(p̃, q̃)`, clamped to `[0, 1]`.
pub fn cos_at_k(p: &ProbabilityVector, q: &ProbabilityVector, k: TopK) -> Result<f64, MetricError> {
    let (a, b) = truncated_pair(p, q, k)?;
    let na: f64 = a.iter().map(|x| x * x).sum();
    let nb: f64 = b.iter().map(|x| x * x).sum();
    if na == 0.0 || nb == 0.0 {
        return Err(MetricError::ZeroVector);
    }
    if a == b {
        return Ok(0.0);
    }
    let dot: f64 = a.iter().zip(&b).map(|(x, y)| x * y).sum();
    Ok((1.0 - dot / (na * nb).sqrt()).clamp(0.0, 1.0))
}

pub trait FontClassifier: Send + Sync {
    fn label_count(&self) -> usize;
    fn classify(&self, region: &Image) -> Result<ProbabilityVector, MetricError>;
}

/// Ink-density feature: crop to the ink bounding box, average ink weight on
/// a 16×16 grid (4×4 samples per cell), flatten and L2-normalize.
///
/// Ink weight is `|luminance − background|`, where the background is the
/// median luminance of the border pixels, so dark-on-light and
/// light-on-dark renderings give the same feature.
pub fn ink_feature(img: &Image) -> Result<Vec<f64>, MetricError> {
    let (w, h) = (img.width() as usize, img.height() as usize);
    let lum: Vec<f64> = (0..h).flat_map(|y| (0..w).map(move |x| (x, y))).map(|(x, y)| img.luminance(x as u32, y as u32)).collect();
    let mut border: Vec<f64> = Vec::with_capacity(2 * (w + h));
    for x in 0..w {
        border.push(lum[x]);
        border.push(lum[(h - 1) * w + x]);
    }
    for y in 0..h {
        border.push(lum[y * w]);
        border.push(lum[y * w + w - 1]);
    }
    border.sort_by(f64::total_cmp);
    let bg = border[border.len() / 2];
    let weight: Vec<f64> = lum.iter().map(|l| (l - bg).abs()).collect();

    let (mut x0, mut y0, mut x1, mut y1) = (usize::MAX, usize::MAX, 0, 0);
    for y in 0..h {
        for x in 0..w {
            if weight[y * w + x] > INK_THRESHOLD {
                x0 = x0.min(x);
                y0 = y0.min(y);
                x1 = x1.max(x + 1);
                y1 = y1.max(y + 1);
            }
        }
    }
    if x0 == usize::MAX {
        return Err(MetricError::EmptyRegion);
    }
    let (cw, ch) = ((x1 - x0) as f64, (y1 - y0) as f64);
    let n = (FEATURE_GRID * SUPERSAMPLE) as f64;
    let mut feature = vec![0.0; FEATURE_GRID * FEATURE_GRID];
    for sy in 0..FEATURE_GRID * SUPERSAMPLE {
        let py = y0 + (((sy as f64 + 0.5) / n * ch) as usize).min(y1 - y0 - 1);
        for sx in 0..FEATURE_GRID * SUPERSAMPLE {
            let px = x0 + (((sx as f64 + 0.5) / n * cw) as usize).min(x1 - x0 - 1);
            feature[(sy / SUPERSAMPLE) * FEATURE_GRID + sx / SUPERSAMPLE] += weight[py * w + px];
        }
    }
    let norm = feature.iter().map(|v| v * v).sum::<f64>().sqrt();
    if norm == 0.0 {
        return Err(MetricError::EmptyRegion);
    }
    Ok(feature.into_iter().map(|v| v / norm).collect())
}

/// Nearest-reference classifier over fonts rendered with a fixed probe text.
#[derive(Debug, Clone)]
pub struct ReferenceClassifier {
    names: Vec<String>,
    features: Vec<Vec<f64>>,
    temperature: f64,
}

pub fn build_reference_classifier(
    fonts: &[(String, Arc<Font>)],
    probe_text: &str,
    canvas: (u32, u32),
    temperature: f64,
) -> Result<ReferenceClassifier, MetricError> {
    if fonts.len() < 2 {
        return Err(MetricError::InsufficientFonts { count: fonts.len() });
    }
    assert!(temperature > 0.0, "temperature must be positive");
    let (w, h) = canvas;
    let quad = Quad::from_rect(0.0, 0.0, w as f64, h as f64);
    let features = fonts
        .iter()
        .enumerate()
        .map(|(i, (_, font))| {
            let unrenderable = |reason: String| MetricError::UnrenderableProbe { font: i, reason };
            let spec = LineSpec { text: probe_text.to_string(), font: font.clone(), quad, orientation: Orientation::Horizontal };
            let (mask, layout) = render_line(&spec, w, h).map_err(|e| unrenderable(e.to_string()))?;
            if !layout.warnings.is_empty() {
                return Err(unrenderable(format!("{:?}", layout.warnings)));
            }
            ink_feature(&Image::from_mask(&mask)).map_err(|e| unrenderable(e.to_string()))
        })
        .collect::<Result<_, _>>()?;
    Ok(ReferenceClassifier { names: fonts.iter().map(|(n, _)| n.clone()).collect(), features, temperature })
}

impl ReferenceClassifier {
    pub fn labels(&self) -> &[String] {
        &self.names
    }

    /// Softmax of negative feature distances over the reference fonts.
    pub fn classify_feature(&self, feature: &[f64]) -> ProbabilityVector {
        let logits: Vec<f64> = self
            .features
            .iter()
            .map(|f| -f.iter().zip(feature).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt() / self.temperature)
            .collect();
        let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let exps: Vec<f64> = logits.iter().map(|l| (l - max).exp()).collect();
        let total: f64 = exps.iter().sum();
        ProbabilityVector { values: exps.into_iter().map(|e| e / total).collect() }
    }
}

impl FontClassifier for ReferenceClassifier {
    fn label_count(&self) -> usize {
        self.features.len()
    }

    fn classify(&self, region: &Image) -> Result<ProbabilityVector, MetricError> {
        Ok(self.classify_feature(&ink_feature(region)?))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KDistances {
    pub k: TopK,
    pub l2: f64,
    pub cos: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FidelityReport {
    pub isolated: bool,
    pub distances: Vec<KDistances>,
}

/// Compares the classifier's view of the glyph control with that of the
/// generated region. With `isolate`, region pixels outside the segmented
/// text are replaced by the region's background before classification.
pub fn font_fidelity_report(
    glyph: &BinaryMask,
    region: &Image,
    classifier: &dyn FontClassifier,
    ks: &[TopK],
    isolate: Option<&dyn SegmentationBackend>,
) -> Result<FidelityReport, MetricError> {
    let pg = classifier.classify(&Image::from_mask(glyph))?;
    let region = match isolate {
        Some(seg) => {
            let mask = seg.segment(region)?;
            region.isolate(&mask).map_err(|e| MetricError::InvalidProbabilities(e.to_string()))?
        }
        None => region.clone(),
    };
    let px = classifier.classify(&region)?;
    let distances = ks
        .iter()
        .map(|&k| Ok(KDistances { k, l2: l2_at_k(&pg, &px, k)?, cos: cos_at_k(&pg, &px, k)? }))
        .collect::<Result<_, MetricError>>()?;
    Ok(FidelityReport { isolated: isolate.is_some(), distances })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pv(v: &[f64]) -> ProbabilityVector {
        ProbabilityVector::new(v.to_vec()).unwrap()
    }

    #[test]
    fn truncate_examples() {
        let p = pv(&[0.5, 0.3, 0.2]);
        assert_eq!(topk_truncate(&p, TopK::Full).unwrap(), p.values());
        assert_eq!(topk_truncate(&p, TopK::K(1)).unwrap(), vec![0.5, 0.0, 0.0]);
        let flat = pv(&[0.25; 4]);
        assert_eq!(topk_truncate(&flat, TopK::K(2)).unwrap(), vec![0.25, 0.25, 0.0, 0.0]);
        assert_eq!(topk_truncate(&p, TopK::K(4)), Err(MetricError::KOutOfRange { k: 4, len: 3 }));
        assert_eq!(topk_truncate(&p, TopK::K(0)), Err(MetricError::KOutOfRange { k: 0, len: 3 }));
    }

    #[test]
    fn distance_examples() {
        let p = pv(&[0.6, 0.4, 0.0]);
        let q = pv(&[0.5, 0.25, 0.25]);
        // q keeps indices 0 and 1: (0.5, 0.25, 0)
        assert!((l2_at_k(&p, &q, TopK::K(2)).unwrap() - (0.01f64 + 0.0225).sqrt()).abs() < 1e-15);
        let e0 = pv(&[1.0, 0.0, 0.0]);
        let e2 = pv(&[0.0, 0.0, 1.0]);
        assert!((l2_at_k(&e0, &e2, TopK::K(1)).unwrap() - 2f64.sqrt()).abs() < 1e-15);
        assert_eq!(cos_at_k(&e0, &e2, TopK::Full).unwrap(), 1.0);
        assert_eq!(cos_at_k(&p, &p, TopK::K(2)).unwrap(), 0.0);
        assert_eq!(l2_at_k(&p, &pv(&[0.5, 0.5]), TopK::Full), Err(MetricError::LengthMismatch { left: 3, right: 2 }));
    }

    #[test]
    fn probability_validation() {
        assert!(ProbabilityVector::new(vec![0.5, 0.6]).is_err());
        assert!(ProbabilityVector::new(vec![1.5, -0.5]).is_err());
        assert!(ProbabilityVector::new(vec![]).is_err());
        let p: ProbabilityVector = serde_json::from_str("[0.25, 0.75]").unwrap();
        assert_eq!(p.argmax(), 1);
        assert!(serde_json::from_str::<ProbabilityVector>("[0.25, 0.25]").is_err());
    }

    #[test]
    fn topk_serde() {
        assert_eq!(serde_json::to_string(&TopK::STANDARD).unwrap(), r#"[5,20,50,"full"]"#);
        assert_eq!(serde_json::from_str::<Vec<TopK>>(r#"[1,"full"]"#).unwrap(), vec![TopK::K(1), TopK::Full]);
        assert_eq!("FULL".parse::<TopK>().unwrap(), TopK::Full);
        assert!("0".parse::<TopK>().is_err());
    }

    #[test]
    fn feature_is_polarity_invariant() {
        let mut m = BinaryMask::new(32, 32);
        for y in 8..20 {
            for x in 6..12 {
                m.set(x, y, true);
            }
        }
        let dark = Image::from_mask(&m);
        let light = dark.map(|v| 1.0 - v);
        assert_eq!(ink_feature(&dark).unwrap(), ink_feature(&light).unwrap());
        assert_eq!(ink_feature(&Image::filled(8, 8, [0.3; 3])), Err(MetricError::EmptyRegion));
    }
}
