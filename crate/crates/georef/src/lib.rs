//! Batch georeferencing of natural-history locality descriptions.
//!
//! The pipeline parses a free-text locality description into place names
//! and spatial relations, resolves the names against gazetteers, renders
//! a labeled gridded map excerpt around them, asks a vision-capable
//! model which grid cell the description refers to, and evaluates the
//! predictions with grid-aware distance metrics.
//!
//! The geometry and metric layers are generic over the scalar type via
//! `num-traits` (see [`scalar::GeoScalar`]); the domain and pipeline
//! layers work in `f64`, and the crate root exposes concrete aliases.

pub mod eval;
pub mod gazetteer;
pub mod geo;
pub mod georeferencer;
pub mod mapgen;
pub mod parser;
pub mod pipeline;
pub mod records;
pub mod scalar;

/// Concrete `f64` point used throughout the pipeline.
pub type GeoPoint = geo::GeoPoint<f64>;
/// Single-precision point for memory-bound bulk geometry.
pub type GeoPoint32 = geo::GeoPoint<f32>;
pub type BBox = geo::BBox<f64>;
pub type BBox32 = geo::BBox<f32>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("extent: {0}")]
    Extent(String),
    #[error("grid: {0}")]
    Grid(String),
    #[error("gazetteer: {0}")]
    Gazetteer(String),
    #[error("parse: {0}")]
    Parse(String),
    #[error("render: {0}")]
    Render(String),
    #[error("eval: {0}")]
    Eval(String),
    #[error("record: {0}")]
    Record(String),
    #[error("provider: {0}")]
    Provider(String),
    #[error("prompt: {0}")]
    Prompt(String),
    #[error("config: {0}")]
    Config(String),
    #[error("pipeline: {0}")]
    Pipeline(String),
}

pub type Result<T> = std::result::Result<T, Error>;
