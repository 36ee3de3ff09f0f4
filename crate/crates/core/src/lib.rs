//! Building blocks for out-of-distribution facial-expression benchmarks.
//!
//! The crate is `no_std` (it needs `alloc`) and does all floating-point work
//! through [`libm`], so every corruption, label and metric is bit-identical on
//! every platform that runs it.
//!
//! - [`corrupt`]: the 17 corruption kinds at 5 severities (85 variants per image).
//! - [`quality`]: visibility of a corrupted image relative to its source.
//! - [`softlabel`]: valence-arousal mixture posteriors, label fusion and
//!   visibility-weighted smoothing, plus synthetic label noise.
//! - [`calmetrics`]: accuracy, macro-F1, NLL, ECE, AdaECE, CECE and KSE.
//! - [`callosses`]: focal, MaxEnt, margin-based and combined calibration losses
//!   with analytic gradients.
#![no_std]
#![forbid(unsafe_code)]
// `!(x >= 0.0)` is used on purpose so NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod calmetrics;
pub mod callosses;
pub mod corrupt;
mod error;
mod image;
pub mod quality;
pub mod rng;
pub mod softlabel;
pub mod synth;

pub use error::{Error, Result};
pub use image::ImageTensor;
