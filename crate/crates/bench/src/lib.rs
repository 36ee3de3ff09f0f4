//! File formats, benchmark generation and evaluation around
//! `softaffect-core`.
//!
//! - [`gmmfile`]: fitted mixtures on disk
//! - [`generate`]: corrupted variants, visibility and the manifest
//! - [`evaluate`]: prediction files joined to a manifest and scored
//! - [`noise`]: label-noise injection with an audit sidecar
//! - [`losseval`]: batch loss values and gradients

pub mod annotations;
pub mod config;
pub mod digest;
mod error;
pub mod evaluate;
pub mod generate;
pub mod gmmfile;
pub mod imageio;
pub mod losseval;
pub mod manifest;
pub mod noise;

pub use error::{BenchError, Result};
