//! Crate-wide error type.

use std::path::PathBuf;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("grid too small: {width}x{height} (minimum 2x2)")]
    GridTooSmall { width: usize, height: usize },

    #[error("data length {got} does not match {width}x{height} = {}", width * height)]
    DataLength {
        width: usize,
        height: usize,
        got: usize,
    },

    #[error("non-finite value at index {index}")]
    NonFinite { index: usize },

    #[error("dimension mismatch: expected {expected_width}x{expected_height}, got {got_width}x{got_height}")]
    DimensionMismatch {
        expected_width: usize,
        expected_height: usize,
        got_width: usize,
        got_height: usize,
    },

    #[error("alpha must be positive, got {0}")]
    NonPositiveAlpha(f64),

    #[error("band edges must satisfy 0 < alpha1 < alpha2, got alpha1 = {alpha1}, alpha2 = {alpha2}")]
    BandOrder { alpha1: f64, alpha2: f64 },

    #[error("eta must be positive, got {0}")]
    NonPositiveEta(f64),

    #[error("mask has no foreground pixels")]
    EmptyMask,

    #[error("iterative solver did not converge after {iterations} iterations (relative residual {residual:.3e})")]
    NonConvergence { iterations: usize, residual: f64 },

    #[error("optimizer diverged at iteration {iteration}: loss increases at every backtracked step")]
    Diverged { iteration: usize },

    #[error("init = source requires an initial height field")]
    MissingInitField,

    #[error("invalid optimizer config: {0}")]
    InvalidConfig(&'static str),

    #[error("depth range invalid: z_near = {z_near} must be less than z_far = {z_far}")]
    BadDepthRange { z_near: f64, z_far: f64 },

    #[error("light direction must be nonzero")]
    ZeroLightDirection,

    #[error("mesh physical dimensions must be positive")]
    BadMeshDimensions,

    #[error("malformed {format} data: {reason}")]
    Malformed {
        format: &'static str,
        reason: String,
    },

    #[error("missing range sidecar for 16-bit png: {0}")]
    MissingSidecar(PathBuf),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Image(#[from] image::ImageError),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
