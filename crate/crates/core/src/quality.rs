//! Visibility of a corrupted image relative to its source.
//!
//! The default measure is the root-mean-square pixel difference, normalized
//! per source image by its worst corruption: `v = 1 - d / max(d)`. SSIM is
//! available as an alternative distance (`1 - ssim`).

use alloc::format;
use alloc::vec::Vec;

#[cfg(feature = "serde")]
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ImageTensor;

/// Root-mean-square difference between two images; non-negative.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize), serde(transparent))]
pub struct RawDistance(f64);

impl RawDistance {
    pub fn new(value: f64) -> Result<Self> {
        if value >= 0.0 && value.is_finite() {
            Ok(Self(value))
        } else {
            Err(Error::invalid(format!("distance {value} must be finite and >= 0")))
        }
    }

    pub fn value(self) -> f64 {
        self.0
    }
}

/// Normalized visibility in `[0, 1]`; 1 is pristine, 0 the image's worst variant.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize), serde(transparent))]
pub struct Visibility(f64);

impl Visibility {
    pub const PRISTINE: Visibility = Visibility(1.0);

    pub fn new(value: f64) -> Result<Self> {
        if (0.0..=1.0).contains(&value) {
            Ok(Self(value))
        } else {
            Err(Error::invalid(format!("visibility {value} is outside [0, 1]")))
        }
    }

    pub fn value(self) -> f64 {
        self.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize), serde(rename_all = "snake_case"))]
pub enum VisibilityMeasure {
    #[default]
    L2,
    Ssim,
}

impl VisibilityMeasure {
    pub fn name(self) -> &'static str {
        match self {
            Self::L2 => "l2",
            Self::Ssim => "ssim",
        }
    }

    /// Distance between source and variant under this measure.
    pub fn distance(self, source: &ImageTensor, variant: &ImageTensor) -> Result<RawDistance> {
        match self {
            Self::L2 => raw_l2(source, variant),
            Self::Ssim => {
                let s = ssim(source, variant, &SsimConfig::default())?;
                RawDistance::new((1.0 - s).max(0.0))
            }
        }
    }
}

fn check_same_shape(x: &ImageTensor, cx: &ImageTensor) -> Result<()> {
    if x.same_shape(cx) {
        Ok(())
    } else {
        Err(Error::invalid(format!(
            "image sizes differ: {}x{} vs {}x{}",
            x.height(),
            x.width(),
            cx.height(),
            cx.width()
        )))
    }
}

/// Root of the mean squared difference over all pixel-channel values.
pub fn raw_l2(x: &ImageTensor, cx: &ImageTensor) -> Result<RawDistance> {
    check_same_shape(x, cx)?;
    let sum: f64 = x
        .data()
        .iter()
        .zip(cx.data())
        .map(|(a, b)| (a - b) * (a - b))
        .sum();
    Ok(RawDistance(libm::sqrt(sum / x.data().len() as f64)))
}

/// Divides each distance by the largest one. Exactly the worst entries get 0.
pub fn normalize_visibility(raw: &[RawDistance]) -> Result<Vec<Visibility>> {
    let max = raw.iter().map(|d| d.0).fold(0.0, f64::max);
    if raw.is_empty() || max <= 0.0 {
        return Err(Error::Degenerate(
            "every corruption left the source unchanged; visibility is undefined".into(),
        ));
    }
    Ok(raw
        .iter()
        .map(|d| {
            if d.0 == max {
                Visibility(0.0)
            } else {
                Visibility((1.0 - d.0 / max).clamp(0.0, 1.0))
            }
        })
        .collect())
}

/// Sliding-window SSIM parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub struct SsimConfig {
    /// Odd window side in pixels.
    pub window: usize,
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
    pub c1: f64,
    pub c2: f64,
    pub c3: f64,
}

impl Default for SsimConfig {
    fn default() -> Self {
        let c1 = (0.01f64 * 1.0) * (0.01 * 1.0);
        let c2 = (0.03f64 * 1.0) * (0.03 * 1.0);
        Self {
            window: 7,
            alpha: 1.0,
            beta: 1.0,
            gamma: 1.0,
            c1,
            c2,
            c3: c2 / 2.0,
        }
    }
}

impl SsimConfig {
    pub fn validate(&self) -> Result<()> {
        if self.window < 3 || self.window.is_multiple_of(2) {
            return Err(Error::invalid(format!(
                "ssim window must be odd and >= 3, got {}",
                self.window
            )));
        }
        if !(self.alpha > 0.0 && self.beta > 0.0 && self.gamma > 0.0) {
            return Err(Error::invalid("ssim exponents must be positive"));
        }
        if !(self.c1 > 0.0 && self.c2 > 0.0 && self.c3 > 0.0) {
            return Err(Error::invalid("ssim stabilizers must be positive"));
        }
        Ok(())
    }
}

/// Summed-area table with a zero guard row and column.
struct Integral {
    w: usize,
    sums: Vec<f64>,
}

impl Integral {
    fn new(h: usize, w: usize, value: impl Fn(usize, usize) -> f64) -> Self {
        let stride = w + 1;
        let mut sums = alloc::vec![0.0; (h + 1) * stride];
        for y in 0..h {
            let mut row = 0.0;
            for x in 0..w {
                row += value(y, x);
                sums[(y + 1) * stride + x + 1] = sums[y * stride + x + 1] + row;
            }
        }
        Self { w, sums }
    }

    fn window(&self, y: usize, x: usize, side: usize) -> f64 {
        let s = self.w + 1;
        let (y1, x1) = (y + side, x + side);
        self.sums[y1 * s + x1] - self.sums[y * s + x1] - self.sums[y1 * s + x] + self.sums[y * s + x]
    }
}

/// Mean SSIM over every full window and every channel, in `[-1, 1]`.
///
/// The structure term can be negative; it is raised to `gamma` by magnitude
/// with its sign kept, so non-integer exponents stay real.
pub fn ssim(x: &ImageTensor, cx: &ImageTensor, cfg: &SsimConfig) -> Result<f64> {
    check_same_shape(x, cx)?;
    cfg.validate()?;
    let (h, w) = (x.height(), x.width());
    let side = cfg.window;
    if h < side || w < side {
        return Err(Error::invalid(format!(
            "{h}x{w} image is smaller than the {side}x{side} ssim window"
        )));
    }
    let n = (side * side) as f64;
    let (a, b) = (x.data(), cx.data());
    let mut total = 0.0;
    let mut windows = 0usize;
    for c in 0..ImageTensor::CHANNELS {
        let at = |d: &[f64], y: usize, xx: usize| d[(y * w + xx) * ImageTensor::CHANNELS + c];
        let sa = Integral::new(h, w, |y, xx| at(a, y, xx));
        let sb = Integral::new(h, w, |y, xx| at(b, y, xx));
        let saa = Integral::new(h, w, |y, xx| at(a, y, xx) * at(a, y, xx));
        let sbb = Integral::new(h, w, |y, xx| at(b, y, xx) * at(b, y, xx));
        let sab = Integral::new(h, w, |y, xx| at(a, y, xx) * at(b, y, xx));
        for y in 0..=h - side {
            for xx in 0..=w - side {
                let mu_a = sa.window(y, xx, side) / n;
                let mu_b = sb.window(y, xx, side) / n;
                let var_a = (saa.window(y, xx, side) / n - mu_a * mu_a).max(0.0);
                let var_b = (sbb.window(y, xx, side) / n - mu_b * mu_b).max(0.0);
                let cov = sab.window(y, xx, side) / n - mu_a * mu_b;
                let (sd_a, sd_b) = (libm::sqrt(var_a), libm::sqrt(var_b));
                let lum = (2.0 * mu_a * mu_b + cfg.c1) / (mu_a * mu_a + mu_b * mu_b + cfg.c1);
                let con = (2.0 * sd_a * sd_b + cfg.c2) / (var_a + var_b + cfg.c2);
                let st = ((cov + cfg.c3) / (sd_a * sd_b + cfg.c3)).clamp(-1.0, 1.0);
                let st_pow = libm::copysign(libm::pow(st.abs(), cfg.gamma), st);
                total += libm::pow(lum, cfg.alpha) * libm::pow(con, cfg.beta) * st_pow;
                windows += 1;
            }
        }
    }
    Ok((total / windows as f64).clamp(-1.0, 1.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corrupt::{corruption_suite, CorruptionKind, CorruptionSpec};
    use crate::synth::synthetic_face;
    use alloc::vec;
    use proptest::prelude::*;

    fn d(v: f64) -> RawDistance {
        RawDistance::new(v).unwrap()
    }

    #[test]
    fn l2_identity_and_extremes() {
        let zeros = ImageTensor::filled(4, 6, 0.0).unwrap();
        let ones = ImageTensor::filled(4, 6, 1.0).unwrap();
        assert_eq!(raw_l2(&zeros, &zeros).unwrap().value(), 0.0);
        assert_eq!(raw_l2(&zeros, &ones).unwrap().value(), 1.0);
    }

    #[test]
    fn l2_half_covered() {
        let zeros = ImageTensor::filled(4, 6, 0.0).unwrap();
        let mut data = vec![0.0; 4 * 6 * 3];
        data.iter_mut().step_by(2).for_each(|v| *v = 0.5);
        let half = ImageTensor::new(4, 6, data).unwrap();
        let got = raw_l2(&zeros, &half).unwrap().value();
        assert!((got - libm::sqrt(0.25 / 2.0)).abs() < 1e-15, "{got}");
        assert!((got - 0.35355).abs() < 1e-5);
    }

    #[test]
    fn l2_rejects_mismatched_sizes() {
        let a = ImageTensor::filled(4, 6, 0.0).unwrap();
        let b = ImageTensor::filled(6, 4, 0.0).unwrap();
        assert!(matches!(raw_l2(&a, &b), Err(Error::InvalidArgument(_))));
    }

    #[test]
    fn normalization_examples() {
        let v = normalize_visibility(&[d(0.0), d(0.2), d(0.4)]).unwrap();
        let v: Vec<f64> = v.iter().map(|v| v.value()).collect();
        assert_eq!(v, [1.0, 0.5, 0.0]);
        let v = normalize_visibility(&[d(0.3); 85]).unwrap();
        assert!(v.iter().all(|v| v.value() == 0.0));
        assert!(matches!(
            normalize_visibility(&[d(0.0); 85]),
            Err(Error::Degenerate(_))
        ));
    }

    #[test]
    fn ssim_identity_and_small_shift() {
        let img = synthetic_face(1, 24, 24);
        let s = ssim(&img, &img, &SsimConfig::default()).unwrap();
        assert!((s - 1.0).abs() < 1e-12, "{s}");
        let base = ImageTensor::filled(16, 16, 0.4).unwrap();
        let mut prev = f64::NEG_INFINITY;
        for delta in [0.2, 0.1, 0.05, 0.01, 0.001] {
            let shifted = ImageTensor::filled(16, 16, 0.4 + delta).unwrap();
            let s = ssim(&base, &shifted, &SsimConfig::default()).unwrap();
            assert!(s < 1.0 && s > prev, "delta {delta}: {s}");
            prev = s;
        }
        assert!(prev > 0.999);
    }

    #[test]
    fn ssim_rejects_small_images_and_bad_windows() {
        let img = ImageTensor::filled(5, 9, 0.4).unwrap();
        assert!(ssim(&img, &img, &SsimConfig::default()).is_err());
        let cfg = SsimConfig {
            window: 4,
            ..SsimConfig::default()
        };
        let big = ImageTensor::filled(9, 9, 0.4).unwrap();
        assert!(ssim(&big, &big, &cfg).is_err());
    }

    #[test]
    fn ssim_and_l2_disagree_on_some_ranking() {
        let img = synthetic_face(21, 48, 48);
        let suite = corruption_suite(&img, 3).unwrap();
        let scores: Vec<(f64, f64)> = suite
            .iter()
            .map(|(_, v)| {
                let l2 = raw_l2(&img, v).unwrap().value();
                let s = ssim(&img, v, &SsimConfig::default()).unwrap();
                (l2, 1.0 - s)
            })
            .collect();
        let mut discordant = 0;
        for i in 0..scores.len() {
            for j in i + 1..scores.len() {
                let (a, b) = (scores[i], scores[j]);
                if (a.0 - b.0) * (a.1 - b.1) < 0.0 {
                    discordant += 1;
                }
            }
        }
        assert!(discordant > 0);
        let contrast5 = CorruptionSpec::for_suite(3, CorruptionKind::Contrast, 5).unwrap();
        assert!(suite.iter().any(|(s, _)| *s == contrast5));
    }

    proptest! {
        #[test]
        fn l2_is_symmetric(seed in 0u64..1000) {
            let a = synthetic_face(seed, 9, 7);
            let b = synthetic_face(seed + 1, 9, 7);
            prop_assert_eq!(raw_l2(&a, &b).unwrap(), raw_l2(&b, &a).unwrap());
        }

        #[test]
        fn normalization_is_scale_free_and_bounded(
            raw in proptest::collection::vec(0.0f64..5.0, 85),
            scale in 0.01f64..100.0,
        ) {
            prop_assume!(raw.iter().any(|&v| v > 0.0));
            let a: Vec<RawDistance> = raw.iter().map(|&v| d(v)).collect();
            let b: Vec<RawDistance> = raw.iter().map(|&v| d(v * scale)).collect();
            let va = normalize_visibility(&a).unwrap();
            let vb = normalize_visibility(&b).unwrap();
            let min = va.iter().map(|v| v.value()).fold(1.0, f64::min);
            prop_assert_eq!(min, 0.0);
            for ((x, y), r) in va.iter().zip(&vb).zip(&raw) {
                prop_assert!((0.0..=1.0).contains(&x.value()));
                prop_assert!((x.value() - y.value()).abs() < 1e-12);
                if x.value() == 1.0 {
                    prop_assert_eq!(*r, 0.0);
                }
            }
        }
    }
}
