//! Differentiable room impulse response rendering and inverse fitting.
//!
//! Given a handful of measured room impulse responses and a planar room
//! model, `rirfit` traces specular reflection paths, renders impulse
//! responses from a small set of interpretable acoustic models (source
//! directivity, source impulse response, per-surface reflection responses,
//! a late residual) and fits those models by gradient descent on a
//! multi-resolution spectral loss.
//!
//! The crate is organised bottom-up:
//!
//! - [`geometry`]: convex planar surfaces, rooms and intersection primitives.
//! - [`tracer`]: image-source path enumeration plus axial boosting.
//! - [`models`]: the learnable parameter set and its evaluation.
//! - [`dsp`]: FFT helpers, minimum-phase synthesis, STFT, filters, audio I/O.
//! - [`render`]: impulse response, music, binaural and grid rendering.
//! - [`fit`]: source localization, spectral loss, gradients and training.
//! - [`data`]: dataset ingestion, sweep deconvolution, metrics and baselines.

pub mod data;
pub mod dsp;
pub mod error;
pub mod fit;
pub mod fixture;
pub mod geometry;
pub mod models;
pub mod render;
pub mod tracer;

pub use error::{Error, Result};
pub use geometry::{Point, Room, Surface, SurfaceId};

/// Default sampling rate of every signal in the toolkit.
pub const SAMPLE_RATE: u32 = 48_000;
