//! OCR quality gate and text accuracy metrics.

use serde::{Deserialize, Serialize};
use thiserror::Error;
use unicode_normalization::UnicodeNormalization;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum QualityError {
    #[error("both strings are empty")]
    BothEmpty,
    #[error("target text is empty")]
    EmptyTarget,
    #[error("no pairs to score")]
    EmptyInput,
    #[error("invalid criteria: {0}")]
    InvalidCriteria(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OcrResult {
    pub text: String,
    pub confidence: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QualityCriteria {
    pub min_confidence: f64,
    pub max_edit_ratio: f64,
}

impl Default for QualityCriteria {
    fn default() -> Self {
        QualityCriteria { min_confidence: 0.8, max_edit_ratio: 0.2 }
    }
}

impl QualityCriteria {
    pub fn validate(&self) -> Result<(), QualityError> {
        if !(0.0..=1.0).contains(&self.min_confidence) {
            return Err(QualityError::InvalidCriteria(format!("min_confidence {} not in [0, 1]", self.min_confidence)));
        }
        if !(self.max_edit_ratio >= 0.0 && self.max_edit_ratio.is_finite()) {
            return Err(QualityError::InvalidCriteria(format!("max_edit_ratio {} must be >= 0", self.max_edit_ratio)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RejectReason {
    Confidence,
    EditDistance,
}

impl RejectReason {
    pub fn as_str(&self) -> &'static str {
        match self {
            RejectReason::Confidence => "confidence",
            RejectReason::EditDistance => "edit_distance",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "verdict", content = "reason", rename_all = "snake_case")]
pub enum GateVerdict {
    Pass,
    Reject(RejectReason),
}

impl std::fmt::Display for GateVerdict {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            GateVerdict::Pass => f.write_str("pass"),
            GateVerdict::Reject(r) => write!(f, "reject:{}", r.as_str()),
        }
    }
}

/// Levenshtein distance over Unicode scalar values.
pub fn edit_distance(a: &str, b: &str) -> usize {
    let a: Vec<char> = a.chars().collect();
    let b: Vec<char> = b.chars().collect();
    let mut prev: Vec<usize> = (0..=b.len()).collect();
    let mut cur = vec![0; b.len() + 1];
    for (i, ca) in a.iter().enumerate() {
        cur[0] = i + 1;
        for (j, cb) in b.iter().enumerate() {
            let sub = prev[j] + usize::from(ca != cb);
            cur[j + 1] = sub.min(prev[j + 1] + 1).min(cur[j] + 1);
        }
        std::mem::swap(&mut prev, &mut cur);
    }
    prev[b.len()]
}

/// `1 − ed / max(len)`, lengths in Unicode scalars.
pub fn ned(predicted: &str, target: &str) -> Result<f64, QualityError> {
    let longest = predicted.chars().count().max(target.chars().count());
    if longest == 0 {
        return Err(QualityError::BothEmpty);
    }
    Ok(1.0 - edit_distance(predicted, target) as f64 / longest as f64)
}

/// Both bounds are inclusive. Confidence is checked first.
pub fn gate(ocr: &OcrResult, target: &str, criteria: &QualityCriteria) -> Result<GateVerdict, QualityError> {
    let len = target.chars().count();
    if len == 0 {
        return Err(QualityError::EmptyTarget);
    }
    if !(ocr.confidence >= criteria.min_confidence) {
        return Ok(GateVerdict::Reject(RejectReason::Confidence));
    }
    if edit_distance(&ocr.text, target) as f64 > criteria.max_edit_ratio * len as f64 {
        return Ok(GateVerdict::Reject(RejectReason::EditDistance));
    }
    Ok(GateVerdict::Pass)
}

fn normalize(s: &str) -> String {
    s.trim().nfc().collect()
}

/// Fraction of pairs equal after trimming and NFC normalization.
pub fn sentence_accuracy<P: AsRef<str>, T: AsRef<str>>(pairs: &[(P, T)]) -> Result<f64, QualityError> {
    if pairs.is_empty() {
        return Err(QualityError::EmptyInput);
    }
    let hits = pairs.iter().filter(|(p, t)| normalize(p.as_ref()) == normalize(t.as_ref())).count();
    Ok(hits as f64 / pairs.len() as f64)
}
