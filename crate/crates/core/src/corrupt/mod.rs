//! The 17 corruption kinds, applied at 5 severities each.
//!
//! [`apply_corruption`] is a pure function of the image and the
//! [`CorruptionSpec`]; stochastic kinds draw from a ChaCha stream keyed by the
//! spec's seed. [`corruption_suite`] produces all 85 variants in canonical
//! order: kinds in [`CorruptionKind::ALL`] order, severities ascending.

mod filter;
mod jpeg;
mod kinds;
pub mod schedule;

use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

#[cfg(feature = "serde")]
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::{derive_seed, SeededStream};
use crate::ImageTensor;
pub use schedule::{severity_params, Schedule, SeverityParams, SEVERITY_LEVELS};

/// Number of variants generated per source image.
pub const VARIANTS_PER_IMAGE: usize = CorruptionKind::COUNT * SEVERITY_LEVELS;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize), serde(rename_all = "snake_case"))]
pub enum Category {
    Noise,
    Blur,
    Weather,
    Digital,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize), serde(rename_all = "snake_case"))]
pub enum CorruptionKind {
    GaussianNoise,
    ShotNoise,
    ImpulseNoise,
    SpeckleNoise,
    MotionBlur,
    DefocusBlur,
    GlassBlur,
    ZoomBlur,
    GaussianBlur,
    Snow,
    Brightness,
    Contrast,
    ElasticTransform,
    Pixelate,
    JpegCompression,
    Spatter,
    Saturate,
}

impl CorruptionKind {
    pub const COUNT: usize = 17;

    pub const ALL: [CorruptionKind; Self::COUNT] = [
        Self::GaussianNoise,
        Self::ShotNoise,
        Self::ImpulseNoise,
        Self::SpeckleNoise,
        Self::MotionBlur,
        Self::DefocusBlur,
        Self::GlassBlur,
        Self::ZoomBlur,
        Self::GaussianBlur,
        Self::Snow,
        Self::Brightness,
        Self::Contrast,
        Self::ElasticTransform,
        Self::Pixelate,
        Self::JpegCompression,
        Self::Spatter,
        Self::Saturate,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn name(self) -> &'static str {
        match self {
            Self::GaussianNoise => "gaussian_noise",
            Self::ShotNoise => "shot_noise",
            Self::ImpulseNoise => "impulse_noise",
            Self::SpeckleNoise => "speckle_noise",
            Self::MotionBlur => "motion_blur",
            Self::DefocusBlur => "defocus_blur",
            Self::GlassBlur => "glass_blur",
            Self::ZoomBlur => "zoom_blur",
            Self::GaussianBlur => "gaussian_blur",
            Self::Snow => "snow",
            Self::Brightness => "brightness",
            Self::Contrast => "contrast",
            Self::ElasticTransform => "elastic_transform",
            Self::Pixelate => "pixelate",
            Self::JpegCompression => "jpeg_compression",
            Self::Spatter => "spatter",
            Self::Saturate => "saturate",
        }
    }

    pub fn category(self) -> Category {
        match self {
            Self::GaussianNoise | Self::ShotNoise | Self::ImpulseNoise | Self::SpeckleNoise => {
                Category::Noise
            }
            Self::MotionBlur
            | Self::DefocusBlur
            | Self::GlassBlur
            | Self::ZoomBlur
            | Self::GaussianBlur => Category::Blur,
            Self::Snow => Category::Weather,
            _ => Category::Digital,
        }
    }

    /// Whether the output depends on the spec's seed.
    pub fn is_stochastic(self) -> bool {
        matches!(
            self,
            Self::GaussianNoise
                | Self::ShotNoise
                | Self::ImpulseNoise
                | Self::SpeckleNoise
                | Self::GlassBlur
                | Self::Snow
                | Self::Spatter
                | Self::ElasticTransform
        )
    }
}

impl fmt::Display for CorruptionKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for CorruptionKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| Error::invalid(alloc::format!("unknown corruption kind `{s}`")))
    }
}

/// Identifies one of the 85 variants of an image.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub struct CorruptionSpec {
    pub kind: CorruptionKind,
    pub severity: u8,
    pub seed: u64,
}

impl CorruptionSpec {
    pub fn new(kind: CorruptionKind, severity: u8, seed: u64) -> Result<Self> {
        schedule::severity_index(severity)?;
        Ok(Self {
            kind,
            severity,
            seed,
        })
    }

    /// The spec [`corruption_suite`] uses for this (kind, severity) under
    /// `base_seed`, so a single variant can be regenerated on its own.
    pub fn for_suite(base_seed: u64, kind: CorruptionKind, severity: u8) -> Result<Self> {
        let seed = derive_seed(base_seed, &[kind.index() as u64, u64::from(severity)]);
        Self::new(kind, severity, seed)
    }
}

/// Applies `spec` using the built-in schedule.
pub fn apply_corruption(img: &ImageTensor, spec: &CorruptionSpec) -> Result<ImageTensor> {
    apply_corruption_with(Schedule::builtin(), img, spec)
}

pub fn apply_corruption_with(
    schedule: &Schedule,
    img: &ImageTensor,
    spec: &CorruptionSpec,
) -> Result<ImageTensor> {
    if img.height() == 0 || img.width() == 0 {
        return Err(Error::invalid("cannot corrupt a zero-area image"));
    }
    let params = schedule.params(spec.kind, spec.severity)?;
    let mut rng = SeededStream::new(spec.seed);
    let data = match &params {
        SeverityParams::GaussianNoise(p) => kinds::gaussian_noise(img, p, &mut rng),
        SeverityParams::ShotNoise(p) => kinds::shot_noise(img, p, &mut rng),
        SeverityParams::ImpulseNoise(p) => kinds::impulse_noise(img, p, &mut rng),
        SeverityParams::SpeckleNoise(p) => kinds::speckle_noise(img, p, &mut rng),
        SeverityParams::MotionBlur(p) => kinds::motion(img, p),
        SeverityParams::DefocusBlur(p) => kinds::defocus(img, p),
        SeverityParams::GlassBlur(p) => kinds::glass(img, p, &mut rng),
        SeverityParams::ZoomBlur(p) => kinds::zoom(img, p),
        SeverityParams::GaussianBlur(p) => kinds::gaussian(img, p),
        SeverityParams::Snow(p) => kinds::snow(img, p, &mut rng),
        SeverityParams::Brightness(p) => kinds::brightness(img, p),
        SeverityParams::Contrast(p) => kinds::contrast(img, p),
        SeverityParams::ElasticTransform(p) => kinds::elastic(img, p, &mut rng),
        SeverityParams::Pixelate(p) => kinds::pixelate(img, p),
        SeverityParams::JpegCompression(p) => kinds::jpeg(img, p)?,
        SeverityParams::Spatter(p) => kinds::spatter(img, p, &mut rng),
        SeverityParams::Saturate(p) => kinds::saturate(img, p),
    };
    Ok(ImageTensor::from_unclipped(img.height(), img.width(), data))
}

/// Every (kind, severity) spec of a suite, in canonical order.
pub fn suite_specs(base_seed: u64) -> Vec<CorruptionSpec> {
    let mut specs = Vec::with_capacity(VARIANTS_PER_IMAGE);
    for kind in CorruptionKind::ALL {
        for severity in 1..=SEVERITY_LEVELS as u8 {
            specs.push(CorruptionSpec::for_suite(base_seed, kind, severity).expect("severity in range"));
        }
    }
    specs
}

/// All 85 variants of `img`, in canonical order.
pub fn corruption_suite(img: &ImageTensor, base_seed: u64) -> Result<Vec<(CorruptionSpec, ImageTensor)>> {
    corruption_suite_with(Schedule::builtin(), img, base_seed)
}

pub fn corruption_suite_with(
    schedule: &Schedule,
    img: &ImageTensor,
    base_seed: u64,
) -> Result<Vec<(CorruptionSpec, ImageTensor)>> {
    suite_specs(base_seed)
        .into_iter()
        .map(|spec| Ok((spec, apply_corruption_with(schedule, img, &spec)?)))
        .collect()
}
