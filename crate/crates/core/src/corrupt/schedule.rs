//! Severity parameter schedules.
//!
//! The built-in table follows the ImageNet-C conventions for the kinds both
//! share, with speckle noise and saturation extended so that the parameter
//! driving degradation is monotone in severity. The companion crate ships the
//! same table as a TOML file and hashes it into every manifest.

use alloc::format;

#[cfg(feature = "serde")]
use serde::{Deserialize, Serialize};

use super::CorruptionKind;
use crate::error::{Error, Result};

pub const SEVERITY_LEVELS: usize = 5;
pub const SCHEDULE_VERSION: u32 = 1;

macro_rules! params {
    ($(#[$meta:meta])* $name:ident { $($field:ident : $ty:ty),+ $(,)? }) => {
        $(#[$meta])*
        #[derive(Debug, Clone, Copy, PartialEq)]
        #[cfg_attr(feature = "serde", derive(Serialize, Deserialize), serde(deny_unknown_fields))]
        pub struct $name { $(pub $field: $ty),+ }
    };
}

params!(
    /// Additive Gaussian noise with standard deviation `sigma`.
    GaussianNoise { sigma: f64 }
);
params!(
    /// Poisson photon noise; fewer photons means more noise.
    ShotNoise { photons: f64 }
);
params!(
    /// Salt-and-pepper noise on a fraction `amount` of channel values.
    ImpulseNoise { amount: f64 }
);
params!(
    /// Multiplicative Gaussian noise, `x + x * N(0, sigma)`.
    SpeckleNoise { sigma: f64 }
);
params!(MotionBlur {
    radius: f64,
    sigma: f64,
    angle_deg: f64,
});
params!(
    /// Disk kernel of `radius` pixels, softened by a Gaussian.
    DefocusBlur { radius: f64, alias_sigma: f64 }
);
params!(
    /// Blur, shuffle pixels locally `iterations` times, blur again.
    GlassBlur {
        sigma: f64,
        max_delta: u32,
        iterations: u32,
    }
);
params!(
    /// Average of centre zooms `1, 1 + step, ...` up to `max_zoom`.
    ZoomBlur { max_zoom: f64, step: f64 }
);
params!(GaussianBlur { sigma: f64 });
params!(
    /// Snow layer drawn from `N(mean, std)`, zoomed, thresholded and streaked.
    /// `blend` is the weight kept by the original image under the haze.
    Snow {
        mean: f64,
        std: f64,
        zoom: f64,
        threshold: f64,
        motion_radius: f64,
        motion_sigma: f64,
        blend: f64,
    }
);
params!(
    /// Shift of the HSV value channel.
    Brightness { shift: f64 }
);
params!(
    /// Per-channel contrast scale around the channel mean.
    Contrast { factor: f64 }
);
params!(
    /// Smoothed random displacement field. Both values are fractions of the
    /// shorter image side.
    ElasticTransform { alpha: f64, sigma: f64 }
);
params!(
    /// Downscale factor before nearest-neighbour upscaling.
    Pixelate { factor: f64 }
);
params!(JpegCompression { quality: u8 });
params!(
    /// Liquid blobs: `N(mean, std)` noise blurred by `sigma` and thresholded,
    /// with edges softened by `mask_sigma`. `mud` selects opaque brown mud
    /// over translucent water.
    Spatter {
        mean: f64,
        std: f64,
        sigma: f64,
        threshold: f64,
        mask_sigma: f64,
        mud: bool,
    }
);
params!(
    /// HSV saturation mapped to `s * scale + offset`.
    Saturate { scale: f64, offset: f64 }
);

/// The parameter tuple for one (kind, severity) pair.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SeverityParams {
    GaussianNoise(GaussianNoise),
    ShotNoise(ShotNoise),
    ImpulseNoise(ImpulseNoise),
    SpeckleNoise(SpeckleNoise),
    MotionBlur(MotionBlur),
    DefocusBlur(DefocusBlur),
    GlassBlur(GlassBlur),
    ZoomBlur(ZoomBlur),
    GaussianBlur(GaussianBlur),
    Snow(Snow),
    Brightness(Brightness),
    Contrast(Contrast),
    ElasticTransform(ElasticTransform),
    Pixelate(Pixelate),
    JpegCompression(JpegCompression),
    Spatter(Spatter),
    Saturate(Saturate),
}

impl SeverityParams {
    pub fn kind(&self) -> CorruptionKind {
        use CorruptionKind as K;
        match self {
            Self::GaussianNoise(_) => K::GaussianNoise,
            Self::ShotNoise(_) => K::ShotNoise,
            Self::ImpulseNoise(_) => K::ImpulseNoise,
            Self::SpeckleNoise(_) => K::SpeckleNoise,
            Self::MotionBlur(_) => K::MotionBlur,
            Self::DefocusBlur(_) => K::DefocusBlur,
            Self::GlassBlur(_) => K::GlassBlur,
            Self::ZoomBlur(_) => K::ZoomBlur,
            Self::GaussianBlur(_) => K::GaussianBlur,
            Self::Snow(_) => K::Snow,
            Self::Brightness(_) => K::Brightness,
            Self::Contrast(_) => K::Contrast,
            Self::ElasticTransform(_) => K::ElasticTransform,
            Self::Pixelate(_) => K::Pixelate,
            Self::JpegCompression(_) => K::JpegCompression,
            Self::Spatter(_) => K::Spatter,
            Self::Saturate(_) => K::Saturate,
        }
    }

    /// The parameter that drives degradation, oriented so that larger means
    /// more degraded.
    pub fn degradation_driver(&self) -> f64 {
        match self {
            Self::GaussianNoise(p) => p.sigma,
            Self::ShotNoise(p) => -p.photons,
            Self::ImpulseNoise(p) => p.amount,
            Self::SpeckleNoise(p) => p.sigma,
            Self::MotionBlur(p) => p.radius + p.sigma,
            Self::DefocusBlur(p) => p.radius,
            Self::GlassBlur(p) => p.sigma,
            Self::ZoomBlur(p) => p.max_zoom,
            Self::GaussianBlur(p) => p.sigma,
            Self::Snow(p) => -p.blend,
            Self::Brightness(p) => p.shift,
            Self::Contrast(p) => -p.factor,
            Self::ElasticTransform(p) => p.alpha,
            Self::Pixelate(p) => -p.factor,
            Self::JpegCompression(p) => -f64::from(p.quality),
            Self::Spatter(p) => -p.sigma,
            Self::Saturate(p) => p.scale,
        }
    }

    fn check_ranges(&self) -> core::result::Result<(), &'static str> {
        let ok = match self {
            Self::GaussianNoise(p) => p.sigma >= 0.0,
            Self::ShotNoise(p) => p.photons > 0.0,
            Self::ImpulseNoise(p) => (0.0..=1.0).contains(&p.amount),
            Self::SpeckleNoise(p) => p.sigma >= 0.0,
            Self::MotionBlur(p) => p.radius >= 0.0 && p.sigma > 0.0 && p.angle_deg.is_finite(),
            Self::DefocusBlur(p) => p.radius >= 0.0 && p.alias_sigma >= 0.0,
            Self::GlassBlur(p) => p.sigma >= 0.0 && p.max_delta >= 1,
            Self::ZoomBlur(p) => p.max_zoom >= 1.0 && p.step > 0.0,
            Self::GaussianBlur(p) => p.sigma >= 0.0,
            Self::Snow(p) => {
                p.std >= 0.0
                    && p.zoom >= 1.0
                    && p.motion_radius >= 0.0
                    && p.motion_sigma > 0.0
                    && (0.0..=1.0).contains(&p.blend)
            }
            Self::Brightness(p) => p.shift.is_finite(),
            Self::Contrast(p) => p.factor >= 0.0,
            Self::ElasticTransform(p) => p.alpha >= 0.0 && p.sigma > 0.0,
            Self::Pixelate(p) => p.factor > 0.0 && p.factor <= 1.0,
            Self::JpegCompression(p) => (1..=100).contains(&p.quality),
            Self::Spatter(p) => p.std >= 0.0 && p.sigma >= 0.0 && p.mask_sigma >= 0.0,
            Self::Saturate(p) => p.scale >= 0.0 && p.offset.is_finite(),
        };
        if ok {
            Ok(())
        } else {
            Err("parameter out of range")
        }
    }
}

/// The full 17 x 5 parameter table, one row of five entries per kind.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize), serde(deny_unknown_fields))]
pub struct Schedule {
    pub version: u32,
    pub gaussian_noise: [GaussianNoise; 5],
    pub shot_noise: [ShotNoise; 5],
    pub impulse_noise: [ImpulseNoise; 5],
    pub speckle_noise: [SpeckleNoise; 5],
    pub motion_blur: [MotionBlur; 5],
    pub defocus_blur: [DefocusBlur; 5],
    pub glass_blur: [GlassBlur; 5],
    pub zoom_blur: [ZoomBlur; 5],
    pub gaussian_blur: [GaussianBlur; 5],
    pub snow: [Snow; 5],
    pub brightness: [Brightness; 5],
    pub contrast: [Contrast; 5],
    pub elastic_transform: [ElasticTransform; 5],
    pub pixelate: [Pixelate; 5],
    pub jpeg_compression: [JpegCompression; 5],
    pub spatter: [Spatter; 5],
    pub saturate: [Saturate; 5],
}

const fn snow(
    mean: f64,
    std: f64,
    zoom: f64,
    threshold: f64,
    motion_radius: f64,
    motion_sigma: f64,
    blend: f64,
) -> Snow {
    Snow {
        mean,
        std,
        zoom,
        threshold,
        motion_radius,
        motion_sigma,
        blend,
    }
}

const fn spatter(mean: f64, std: f64, sigma: f64, threshold: f64, mask_sigma: f64, mud: bool) -> Spatter {
    Spatter {
        mean,
        std,
        sigma,
        threshold,
        mask_sigma,
        mud,
    }
}

const BUILTIN: Schedule = Schedule {
    version: SCHEDULE_VERSION,
    gaussian_noise: [
        GaussianNoise { sigma: 0.08 },
        GaussianNoise { sigma: 0.12 },
        GaussianNoise { sigma: 0.18 },
        GaussianNoise { sigma: 0.26 },
        GaussianNoise { sigma: 0.38 },
    ],
    shot_noise: [
        ShotNoise { photons: 60.0 },
        ShotNoise { photons: 25.0 },
        ShotNoise { photons: 12.0 },
        ShotNoise { photons: 5.0 },
        ShotNoise { photons: 3.0 },
    ],
    impulse_noise: [
        ImpulseNoise { amount: 0.03 },
        ImpulseNoise { amount: 0.06 },
        ImpulseNoise { amount: 0.09 },
        ImpulseNoise { amount: 0.17 },
        ImpulseNoise { amount: 0.27 },
    ],
    speckle_noise: [
        SpeckleNoise { sigma: 0.15 },
        SpeckleNoise { sigma: 0.20 },
        SpeckleNoise { sigma: 0.35 },
        SpeckleNoise { sigma: 0.45 },
        SpeckleNoise { sigma: 0.60 },
    ],
    motion_blur: [
        MotionBlur { radius: 10.0, sigma: 3.0, angle_deg: 0.0 },
        MotionBlur { radius: 15.0, sigma: 5.0, angle_deg: 0.0 },
        MotionBlur { radius: 15.0, sigma: 8.0, angle_deg: 0.0 },
        MotionBlur { radius: 15.0, sigma: 12.0, angle_deg: 0.0 },
        MotionBlur { radius: 20.0, sigma: 15.0, angle_deg: 0.0 },
    ],
    defocus_blur: [
        DefocusBlur { radius: 3.0, alias_sigma: 0.1 },
        DefocusBlur { radius: 4.0, alias_sigma: 0.5 },
        DefocusBlur { radius: 6.0, alias_sigma: 0.5 },
        DefocusBlur { radius: 8.0, alias_sigma: 0.5 },
        DefocusBlur { radius: 10.0, alias_sigma: 0.5 },
    ],
    glass_blur: [
        GlassBlur { sigma: 0.7, max_delta: 1, iterations: 1 },
        GlassBlur { sigma: 0.9, max_delta: 2, iterations: 1 },
        GlassBlur { sigma: 1.0, max_delta: 2, iterations: 2 },
        GlassBlur { sigma: 1.1, max_delta: 3, iterations: 2 },
        GlassBlur { sigma: 1.5, max_delta: 4, iterations: 2 },
    ],
    zoom_blur: [
        ZoomBlur { max_zoom: 1.10, step: 0.01 },
        ZoomBlur { max_zoom: 1.15, step: 0.01 },
        ZoomBlur { max_zoom: 1.20, step: 0.02 },
        ZoomBlur { max_zoom: 1.24, step: 0.02 },
        ZoomBlur { max_zoom: 1.30, step: 0.03 },
    ],
    gaussian_blur: [
        GaussianBlur { sigma: 1.0 },
        GaussianBlur { sigma: 2.0 },
        GaussianBlur { sigma: 3.0 },
        GaussianBlur { sigma: 4.0 },
        GaussianBlur { sigma: 6.0 },
    ],
    snow: [
        snow(0.10, 0.3, 3.0, 0.50, 10.0, 4.0, 0.80),
        snow(0.20, 0.3, 2.0, 0.50, 12.0, 4.0, 0.70),
        snow(0.55, 0.3, 4.0, 0.90, 12.0, 8.0, 0.70),
        snow(0.55, 0.3, 4.5, 0.85, 12.0, 8.0, 0.65),
        snow(0.55, 0.3, 2.5, 0.85, 12.0, 12.0, 0.55),
    ],
    brightness: [
        Brightness { shift: 0.1 },
        Brightness { shift: 0.2 },
        Brightness { shift: 0.3 },
        Brightness { shift: 0.4 },
        Brightness { shift: 0.5 },
    ],
    contrast: [
        Contrast { factor: 0.40 },
        Contrast { factor: 0.30 },
        Contrast { factor: 0.20 },
        Contrast { factor: 0.10 },
        Contrast { factor: 0.05 },
    ],
    elastic_transform: [
        ElasticTransform { alpha: 0.15, sigma: 0.04 },
        ElasticTransform { alpha: 0.25, sigma: 0.04 },
        ElasticTransform { alpha: 0.40, sigma: 0.04 },
        ElasticTransform { alpha: 0.55, sigma: 0.04 },
        ElasticTransform { alpha: 0.75, sigma: 0.04 },
    ],
    pixelate: [
        Pixelate { factor: 0.60 },
        Pixelate { factor: 0.50 },
        Pixelate { factor: 0.40 },
        Pixelate { factor: 0.30 },
        Pixelate { factor: 0.25 },
    ],
    jpeg_compression: [
        JpegCompression { quality: 25 },
        JpegCompression { quality: 18 },
        JpegCompression { quality: 15 },
        JpegCompression { quality: 10 },
        JpegCompression { quality: 7 },
    ],
    spatter: [
        spatter(0.65, 0.3, 4.0, 0.69, 0.6, false),
        spatter(0.65, 0.3, 3.0, 0.68, 0.6, false),
        spatter(0.65, 0.3, 2.0, 0.68, 0.5, false),
        spatter(0.65, 0.3, 1.0, 0.65, 1.5, true),
        spatter(0.67, 0.4, 1.0, 0.65, 1.5, true),
    ],
    saturate: [
        Saturate { scale: 2.0, offset: 0.0 },
        Saturate { scale: 3.0, offset: 0.0 },
        Saturate { scale: 5.0, offset: 0.0 },
        Saturate { scale: 10.0, offset: 0.1 },
        Saturate { scale: 20.0, offset: 0.2 },
    ],
};

impl Default for Schedule {
    fn default() -> Self {
        BUILTIN
    }
}

impl Schedule {
    pub const fn builtin() -> &'static Schedule {
        &BUILTIN
    }

    /// Parameters for `kind` at `severity` (1-based).
    pub fn params(&self, kind: CorruptionKind, severity: u8) -> Result<SeverityParams> {
        let i = severity_index(severity)?;
        use CorruptionKind as K;
        Ok(match kind {
            K::GaussianNoise => SeverityParams::GaussianNoise(self.gaussian_noise[i]),
            K::ShotNoise => SeverityParams::ShotNoise(self.shot_noise[i]),
            K::ImpulseNoise => SeverityParams::ImpulseNoise(self.impulse_noise[i]),
            K::SpeckleNoise => SeverityParams::SpeckleNoise(self.speckle_noise[i]),
            K::MotionBlur => SeverityParams::MotionBlur(self.motion_blur[i]),
            K::DefocusBlur => SeverityParams::DefocusBlur(self.defocus_blur[i]),
            K::GlassBlur => SeverityParams::GlassBlur(self.glass_blur[i]),
            K::ZoomBlur => SeverityParams::ZoomBlur(self.zoom_blur[i]),
            K::GaussianBlur => SeverityParams::GaussianBlur(self.gaussian_blur[i]),
            K::Snow => SeverityParams::Snow(self.snow[i]),
            K::Brightness => SeverityParams::Brightness(self.brightness[i]),
            K::Contrast => SeverityParams::Contrast(self.contrast[i]),
            K::ElasticTransform => SeverityParams::ElasticTransform(self.elastic_transform[i]),
            K::Pixelate => SeverityParams::Pixelate(self.pixelate[i]),
            K::JpegCompression => SeverityParams::JpegCompression(self.jpeg_compression[i]),
            K::Spatter => SeverityParams::Spatter(self.spatter[i]),
            K::Saturate => SeverityParams::Saturate(self.saturate[i]),
        })
    }

    /// Checks value ranges and that each kind's degradation driver is
    /// non-decreasing over severities and strictly larger at 5 than at 1.
    /// JPEG quality must strictly decrease.
    pub fn validate(&self) -> Result<()> {
        if self.version != SCHEDULE_VERSION {
            return Err(Error::invalid(format!(
                "schedule version {} is not supported (expected {SCHEDULE_VERSION})",
                self.version
            )));
        }
        for kind in CorruptionKind::ALL {
            let mut prev: Option<f64> = None;
            let mut first = 0.0;
            for sev in 1..=SEVERITY_LEVELS as u8 {
                let p = self.params(kind, sev)?;
                p.check_ranges().map_err(|e| {
                    Error::invalid(format!("{} severity {sev}: {e}", kind.name()))
                })?;
                let d = p.degradation_driver();
                if let Some(prev) = prev {
                    let strict = kind == CorruptionKind::JpegCompression;
                    if d < prev || (strict && d == prev) {
                        return Err(Error::invalid(format!(
                            "{} schedule is not monotone at severity {sev}",
                            kind.name()
                        )));
                    }
                } else {
                    first = d;
                }
                prev = Some(d);
            }
            if prev.unwrap_or(first) <= first {
                return Err(Error::invalid(format!(
                    "{} schedule does not degrade from severity 1 to 5",
                    kind.name()
                )));
            }
        }
        Ok(())
    }
}

pub(crate) fn severity_index(severity: u8) -> Result<usize> {
    if (1..=SEVERITY_LEVELS as u8).contains(&severity) {
        Ok(usize::from(severity) - 1)
    } else {
        Err(Error::invalid(format!("severity {severity} is outside 1..=5")))
    }
}

/// Parameters from the built-in schedule.
pub fn severity_params(kind: CorruptionKind, severity: u8) -> Result<SeverityParams> {
    BUILTIN.params(kind, severity)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn builtin_schedule_is_valid() {
        Schedule::builtin().validate().unwrap();
    }

    #[test]
    fn every_combination_has_parameters_of_its_kind() {
        for kind in CorruptionKind::ALL {
            for sev in 1..=5 {
                assert_eq!(severity_params(kind, sev).unwrap().kind(), kind);
            }
        }
    }

    #[test]
    fn out_of_range_severity_is_rejected() {
        for bad in [0u8, 6, 255] {
            let err = severity_params(CorruptionKind::Pixelate, bad).unwrap_err();
            assert!(matches!(err, Error::InvalidArgument(_)));
        }
    }

    #[test]
    fn gaussian_sigma_grows_and_jpeg_quality_falls() {
        let sigma = |s| match severity_params(CorruptionKind::GaussianNoise, s).unwrap() {
            SeverityParams::GaussianNoise(p) => p.sigma,
            _ => unreachable!(),
        };
        assert!(sigma(5) > sigma(1));
        let q: alloc::vec::Vec<u8> = (1..=5)
            .map(|s| match severity_params(CorruptionKind::JpegCompression, s).unwrap() {
                SeverityParams::JpegCompression(p) => p.quality,
                _ => unreachable!(),
            })
            .collect();
        assert!(q.windows(2).all(|w| w[0] > w[1]), "{q:?}");
    }

    #[test]
    fn lookups_are_stable() {
        let a = severity_params(CorruptionKind::Pixelate, 3).unwrap();
        let b = severity_params(CorruptionKind::Pixelate, 3).unwrap();
        assert_eq!(a, b);
        assert_eq!(a, SeverityParams::Pixelate(Pixelate { factor: 0.4 }));
    }

    #[test]
    fn non_monotone_schedule_fails_validation() {
        let mut s = Schedule::default();
        s.contrast[2].factor = 0.5;
        assert!(s.validate().is_err());
        let mut s = Schedule::default();
        s.jpeg_compression[1].quality = 25;
        assert!(s.validate().is_err());
    }
}
