//! Binaural signal matching for arbitrary microphone arrays.
//!
//! Computes per-frequency filters that map array recordings to the two ear
//! signals of a listener, using least squares below a cutoff frequency and
//! a magnitude-only fit above it. Also provides the array and head models,
//! a scene simulator, the renderer and the perceptual error metrics used to
//! evaluate the result.

pub mod array;
pub mod design;
pub mod dsp;
pub mod error;
pub mod hrtf;
pub mod io;
pub mod linalg;
pub mod metrics;
pub mod render;
pub mod reproduce;
pub mod scene;
pub mod sh;
pub mod signal;
pub mod special;

pub use error::{Error, Result};
