//! Dataset preparation, inference bundles and the edit loop, and benchmark
//! evaluation.

mod bundle;
mod dataset;
mod evaluate;

use std::path::Path;

use thiserror::Error;

pub use bundle::{build_inference_bundle, run_edit, tighten_lines, BundleLine, BundleOptions, EditOptions, EditOutcome, InferenceBundle};
pub use dataset::{
    line_seed, prepare_dataset, prepare_training_example, read_manifest, record_seed, DatasetLine, DatasetRecord, DatasetSummary,
    ExampleLine, LineRejection, PrepareOptions, PrepareOutcome, Rejection, TrainingExample,
};
pub use evaluate::{evaluate_benchmark, read_eval_manifest, EvalOptions, EvalRecord, Report, ReportRow};

use crate::backend::BackendError;
use crate::blend::BlendError;
use crate::fontio::FontError;
use crate::fontmetric::MetricError;
use crate::geometry::GeometryError;
use crate::glyphraster::RasterError;
use crate::mask::CodecError;
use crate::quality::QualityError;

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("{path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("{path}:{line}: {reason}")]
    Manifest { path: String, line: usize, reason: String },
    #[error("record {record}: {reason}")]
    InvalidRecord { record: String, reason: String },
    #[error("missing sidecar {path}")]
    MissingSidecar { path: String },
    #[error("no output for record '{id}' (expected {path})")]
    MisalignedOutputs { id: String, path: String },
    #[error(transparent)]
    Backend(BackendError),
    #[error(transparent)]
    Raster(#[from] RasterError),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error(transparent)]
    Blend(#[from] BlendError),
    #[error(transparent)]
    Codec(#[from] CodecError),
    #[error(transparent)]
    Quality(#[from] QualityError),
    #[error(transparent)]
    Metric(MetricError),
    #[error(transparent)]
    Font(#[from] FontError),
}

impl From<BackendError> for PipelineError {
    fn from(e: BackendError) -> Self {
        match e {
            BackendError::MissingSidecar { path } => PipelineError::MissingSidecar { path },
            e => PipelineError::Backend(e),
        }
    }
}

impl From<MetricError> for PipelineError {
    fn from(e: MetricError) -> Self {
        match e {
            MetricError::Backend(b) => b.into(),
            e => PipelineError::Metric(e),
        }
    }
}

impl PipelineError {
    pub(crate) fn io(path: &Path, source: std::io::Error) -> Self {
        PipelineError::Io { path: path.display().to_string(), source }
    }

    /// True for failures of an external backend, as opposed to bad input.
    pub fn is_backend(&self) -> bool {
        matches!(self, PipelineError::Backend(_))
    }

    /// True for failures caused by the caller's inputs.
    pub fn is_validation(&self) -> bool {
        !self.is_backend() && !matches!(self, PipelineError::Io { .. })
    }

    /// Stable machine-readable code.
    pub fn code(&self) -> &'static str {
        match self {
            PipelineError::Io { .. } => "io_error",
            PipelineError::Manifest { .. } => "invalid_manifest",
            PipelineError::InvalidRecord { .. } => "invalid_record",
            PipelineError::MissingSidecar { .. } => "missing_sidecar",
            PipelineError::MisalignedOutputs { .. } => "misaligned_outputs",
            PipelineError::Backend(BackendError::MalformedReply { .. }) => "backend_malformed_reply",
            PipelineError::Backend(_) => "backend_unavailable",
            PipelineError::Raster(_) => "layout_error",
            PipelineError::Geometry(_) => "geometry_error",
            PipelineError::Blend(_) => "blend_error",
            PipelineError::Codec(_) => "image_error",
            PipelineError::Quality(_) => "quality_error",
            PipelineError::Metric(_) => "metric_error",
            PipelineError::Font(_) => "font_error",
        }
    }
}
