//! Font-aware glyph controls for text-rendering diffusion pipelines: font
//! loading, glyph rasterization, quad geometry, OCR quality gating, font
//! fidelity metrics, Poisson blending and the dataset, edit and evaluation
//! pipelines built on them.

pub mod backend;
pub mod blend;
pub mod fontio;
pub mod fontmetric;
pub mod geometry;
pub mod glyphraster;
pub mod mask;
pub mod pipeline;
pub mod quality;
