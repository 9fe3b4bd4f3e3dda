//! Batch curation of 3D assets into orbital multi-view image sequences.
//!
//! The stages are: mesh ingestion ([`mesh`]), geometric normalization
//! ([`geometry`]), orbital camera rigs ([`camera`]), software rendering
//! ([`raster`]), view scoring and threshold filtering ([`assess`]), caption
//! rewards ([`caption`]) and the manifest-driven orchestrator ([`pipeline`]).

pub mod assess;
pub mod camera;
pub mod caption;
pub mod geometry;
pub mod math;
pub mod mesh;
pub mod pipeline;
pub mod process;
pub mod raster;
