//! Soft ground-truth labels for corrupted images.
//!
//! A per-class Gaussian over valence-arousal gives a Bayes posterior for each
//! annotated image. That posterior is fused with the one-hot label, then each
//! corrupted variant is smoothed toward uniform by an amount that grows as the
//! variant's visibility falls.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

#[cfg(feature = "serde")]
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quality::Visibility;
use crate::rng::SeededStream;

const SIMPLEX_TOLERANCE: f64 = 1e-9;
/// Determinant below which a fitted covariance counts as singular.
pub const SINGULAR_DETERMINANT: f64 = 1e-12;
/// Added to the covariance diagonal of singular clusters.
pub const COVARIANCE_FLOOR: f64 = 1e-6;
pub const MIN_POINTS_PER_CLASS: usize = 3;

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub struct VaPoint {
    pub valence: f64,
    pub arousal: f64,
}

impl VaPoint {
    pub fn new(valence: f64, arousal: f64) -> Result<Self> {
        let p = Self { valence, arousal };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        let ok = |v: f64| (-1.0..=1.0).contains(&v);
        if ok(self.valence) && ok(self.arousal) {
            Ok(())
        } else {
            Err(Error::invalid(format!(
                "valence/arousal ({}, {}) outside [-1, 1]",
                self.valence, self.arousal
            )))
        }
    }

    fn as_array(&self) -> [f64; 2] {
        [self.valence, self.arousal]
    }
}

/// A probability vector over `K` classes.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize), serde(transparent))]
pub struct SoftLabel(Vec<f64>);

impl SoftLabel {
    pub fn new(probs: Vec<f64>) -> Result<Self> {
        if probs.is_empty() {
            return Err(Error::invalid("a soft label needs at least one class"));
        }
        if let Some(v) = probs.iter().find(|v| !(**v >= 0.0) || !v.is_finite()) {
            return Err(Error::invalid(format!("soft label entry {v} is negative or not finite")));
        }
        let sum: f64 = probs.iter().sum();
        if (sum - 1.0).abs() > SIMPLEX_TOLERANCE {
            return Err(Error::invalid(format!("soft label sums to {sum}, not 1")));
        }
        Ok(Self(probs))
    }

    pub fn one_hot(class: usize, classes: usize) -> Result<Self> {
        if class >= classes {
            return Err(Error::invalid(format!("class {class} out of range for K = {classes}")));
        }
        let mut v = vec![0.0; classes];
        v[class] = 1.0;
        Ok(Self(v))
    }

    /// Wraps a vector the caller has already normalized.
    pub(crate) fn from_normalized(probs: Vec<f64>) -> Self {
        debug_assert!((probs.iter().sum::<f64>() - 1.0).abs() <= SIMPLEX_TOLERANCE);
        Self(probs)
    }

    pub fn uniform(classes: usize) -> Result<Self> {
        if classes == 0 {
            return Err(Error::invalid("K must be positive"));
        }
        Ok(Self(vec![1.0 / classes as f64; classes]))
    }

    pub fn probs(&self) -> &[f64] {
        &self.0
    }

    pub fn into_probs(self) -> Vec<f64> {
        self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Index of the largest entry; ties go to the lowest index.
    pub fn argmax(&self) -> usize {
        argmax(&self.0)
    }
}

pub(crate) fn argmax(v: &[f64]) -> usize {
    let mut best = 0;
    for (i, &x) in v.iter().enumerate().skip(1) {
        if x > v[best] {
            best = i;
        }
    }
    best
}

/// One Gaussian component of the valence-arousal mixture.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub struct GmmComponent {
    pub prior: f64,
    pub mean: [f64; 2],
    pub cov: [[f64; 2]; 2],
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize), serde(transparent))]
pub struct GmmParams {
    components: Vec<GmmComponent>,
}

fn det2(c: &[[f64; 2]; 2]) -> f64 {
    c[0][0] * c[1][1] - c[0][1] * c[1][0]
}

impl GmmParams {
    pub fn new(components: Vec<GmmComponent>) -> Result<Self> {
        let params = Self { components };
        params.validate()?;
        Ok(params)
    }

    pub fn validate(&self) -> Result<()> {
        if self.components.is_empty() {
            return Err(Error::invalid("mixture needs at least one component"));
        }
        let total: f64 = self.components.iter().map(|c| c.prior).sum();
        if (total - 1.0).abs() > SIMPLEX_TOLERANCE {
            return Err(Error::invalid(format!("priors sum to {total}, not 1")));
        }
        for (k, c) in self.components.iter().enumerate() {
            if !(c.prior > 0.0) {
                return Err(Error::invalid(format!("prior of class {k} is not positive")));
            }
            let cov = &c.cov;
            let symmetric = (cov[0][1] - cov[1][0]).abs() <= 1e-12 * (1.0 + cov[0][1].abs());
            if !symmetric || !(cov[0][0] > 0.0) || !(cov[1][1] > 0.0) || !(det2(cov) > 0.0) {
                return Err(Error::invalid(format!(
                    "covariance of class {k} is not symmetric positive definite"
                )));
            }
            if !c.mean.iter().all(|m| m.is_finite()) {
                return Err(Error::invalid(format!("mean of class {k} is not finite")));
            }
        }
        Ok(())
    }

    pub fn class_count(&self) -> usize {
        self.components.len()
    }

    pub fn components(&self) -> &[GmmComponent] {
        &self.components
    }
}

/// Result of [`fit_gmm`]: the parameters plus the classes whose trimmed
/// covariance was singular and had the diagonal floor added.
#[derive(Debug, Clone, PartialEq)]
pub struct GmmFit {
    pub params: GmmParams,
    pub regularized: Vec<usize>,
    /// Points kept per class after the one-standard-deviation trim.
    pub kept: Vec<usize>,
}

/// Moment-fits one Gaussian per labeled class.
///
/// Priors are class frequencies. Each class is trimmed to the points within
/// one (population) standard deviation of its mean in both valence and
/// arousal, and the mean and covariance are recomputed on the survivors.
pub fn fit_gmm(points: &[(VaPoint, usize)], classes: usize) -> Result<GmmFit> {
    if classes == 0 {
        return Err(Error::invalid("K must be positive"));
    }
    let mut by_class: Vec<Vec<[f64; 2]>> = vec![Vec::new(); classes];
    for (p, class) in points {
        p.validate()?;
        if *class >= classes {
            return Err(Error::invalid(format!("class {class} out of range for K = {classes}")));
        }
        by_class[*class].push(p.as_array());
    }
    for (k, pts) in by_class.iter().enumerate() {
        if pts.len() < MIN_POINTS_PER_CLASS {
            return Err(Error::InsufficientData {
                class: k,
                count: pts.len(),
                needed: MIN_POINTS_PER_CLASS,
            });
        }
    }

    let total = points.len() as f64;
    let mut components = Vec::with_capacity(classes);
    let mut regularized = Vec::new();
    let mut kept = Vec::with_capacity(classes);
    for (k, pts) in by_class.iter().enumerate() {
        let (mean, _) = moments(pts);
        let sd = [
            libm::sqrt(variance(pts, mean, 0)),
            libm::sqrt(variance(pts, mean, 1)),
        ];
        let slack = 1e-12;
        let mut survivors: Vec<[f64; 2]> = pts
            .iter()
            .copied()
            .filter(|p| (0..2).all(|d| (p[d] - mean[d]).abs() <= sd[d] + slack))
            .collect();
        if survivors.is_empty() {
            survivors = pts.clone();
        }
        kept.push(survivors.len());
        let (mean, mut cov) = moments(&survivors);
        if det2(&cov) < SINGULAR_DETERMINANT {
            regularized.push(k);
            let mut floor = COVARIANCE_FLOOR;
            loop {
                let mut c = cov;
                c[0][0] += floor;
                c[1][1] += floor;
                if det2(&c) >= SINGULAR_DETERMINANT {
                    cov = c;
                    break;
                }
                floor *= 10.0;
            }
        }
        components.push(GmmComponent {
            prior: pts.len() as f64 / total,
            mean,
            cov,
        });
    }
    Ok(GmmFit {
        params: GmmParams::new(components)?,
        regularized,
        kept,
    })
}

fn moments(pts: &[[f64; 2]]) -> ([f64; 2], [[f64; 2]; 2]) {
    let n = pts.len() as f64;
    let mut mean = [0.0; 2];
    for p in pts {
        mean[0] += p[0];
        mean[1] += p[1];
    }
    mean[0] /= n;
    mean[1] /= n;
    let mut cov = [[0.0; 2]; 2];
    for p in pts {
        let d = [p[0] - mean[0], p[1] - mean[1]];
        cov[0][0] += d[0] * d[0];
        cov[0][1] += d[0] * d[1];
        cov[1][1] += d[1] * d[1];
    }
    cov[0][0] /= n;
    cov[0][1] /= n;
    cov[1][1] /= n;
    cov[1][0] = cov[0][1];
    (mean, cov)
}

fn variance(pts: &[[f64; 2]], mean: [f64; 2], dim: usize) -> f64 {
    pts.iter().map(|p| (p[dim] - mean[dim]) * (p[dim] - mean[dim])).sum::<f64>() / pts.len() as f64
}

fn log_density(c: &GmmComponent, x: [f64; 2]) -> f64 {
    let det = det2(&c.cov);
    let d = [x[0] - c.mean[0], x[1] - c.mean[1]];
    // inverse of [[a, b], [b, d]] is [[d, -b], [-b, a]] / det
    let mahal = (c.cov[1][1] * d[0] * d[0] - 2.0 * c.cov[0][1] * d[0] * d[1]
        + c.cov[0][0] * d[1] * d[1])
        / det;
    -libm::log(2.0 * core::f64::consts::PI) - 0.5 * libm::log(det) - 0.5 * mahal
}

/// Bayes posterior over classes for one valence-arousal point, evaluated in
/// log space.
pub fn gmm_posterior(params: &GmmParams, p: VaPoint) -> SoftLabel {
    let x = p.as_array();
    let logs: Vec<f64> = params
        .components
        .iter()
        .map(|c| libm::log(c.prior) + log_density(c, x))
        .collect();
    let max = logs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut probs: Vec<f64> = logs.iter().map(|l| libm::exp(l - max)).collect();
    let sum: f64 = probs.iter().sum();
    probs.iter_mut().for_each(|v| *v /= sum);
    SoftLabel(probs)
}

/// `beta * onehot + (1 - beta) * posterior`.
pub fn fuse_labels(onehot: &SoftLabel, gmm_post: &SoftLabel, beta: f64) -> Result<SoftLabel> {
    if onehot.len() != gmm_post.len() {
        return Err(Error::invalid(format!(
            "label lengths differ: {} vs {}",
            onehot.len(),
            gmm_post.len()
        )));
    }
    check_beta(beta)?;
    if beta == 1.0 {
        return Ok(onehot.clone());
    }
    if beta == 0.0 {
        return Ok(gmm_post.clone());
    }
    let probs = onehot
        .0
        .iter()
        .zip(&gmm_post.0)
        .map(|(o, g)| beta * o + (1.0 - beta) * g)
        .collect();
    Ok(SoftLabel(probs))
}

fn check_beta(beta: f64) -> Result<()> {
    if (0.0..=1.0).contains(&beta) {
        Ok(())
    } else {
        Err(Error::invalid(format!("beta {beta} is outside [0, 1]")))
    }
}

/// Hyperparameters of fusion and visibility-weighted smoothing.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub struct SmoothingConfig {
    pub classes: usize,
    pub kappa: f64,
    pub beta: f64,
}

impl SmoothingConfig {
    pub const DEFAULT_KAPPA: f64 = 2.0;
    pub const SUGGESTED_BETA: f64 = 0.5;

    pub fn new(classes: usize, kappa: f64, beta: f64) -> Result<Self> {
        let cfg = Self {
            classes,
            kappa,
            beta,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.classes == 0 {
            return Err(Error::invalid("K must be positive"));
        }
        if !(self.kappa > 0.0) || !self.kappa.is_finite() {
            return Err(Error::invalid(format!("kappa {} must be positive", self.kappa)));
        }
        check_beta(self.beta)
    }

    /// The uniform prior `1 / K`.
    pub fn p_min(&self) -> f64 {
        1.0 / self.classes as f64
    }
}

/// `(1 - p_min) * (1 - v)^kappa`.
pub fn smoothing_alpha(v: Visibility, cfg: &SmoothingConfig) -> f64 {
    (1.0 - cfg.p_min()) * libm::pow(1.0 - v.value(), cfg.kappa)
}

/// `(1 - alpha) * fused + alpha / K`.
pub fn soften(fused: &SoftLabel, alpha: f64, classes: usize) -> Result<SoftLabel> {
    if fused.len() != classes {
        return Err(Error::invalid(format!(
            "label has {} entries, K = {classes}",
            fused.len()
        )));
    }
    let max_alpha = 1.0 - 1.0 / classes as f64;
    if !(alpha >= 0.0 && alpha <= max_alpha + 1e-12) {
        return Err(Error::invalid(format!(
            "alpha {alpha} is outside [0, {max_alpha}]"
        )));
    }
    if alpha == 0.0 {
        return Ok(fused.clone());
    }
    let share = alpha / classes as f64;
    Ok(SoftLabel(
        fused.0.iter().map(|p| (1.0 - alpha) * p + share).collect(),
    ))
}

/// The final label of a variant: `soften(fused, alpha(v), K)`.
pub fn visibility_label(fused: &SoftLabel, v: Visibility, cfg: &SmoothingConfig) -> Result<SoftLabel> {
    soften(fused, smoothing_alpha(v, cfg), cfg.classes)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NoisyLabels {
    pub labels: Vec<usize>,
    /// Positions whose label changed, ascending.
    pub flipped: Vec<usize>,
}

/// Flips exactly `round(ratio * N)` labels, chosen uniformly without
/// replacement, each to a uniformly chosen different class.
pub fn inject_label_noise(labels: &[usize], ratio: f64, classes: usize, seed: u64) -> Result<NoisyLabels> {
    if !(0.0..=1.0).contains(&ratio) {
        return Err(Error::invalid(format!("noise ratio {ratio} is outside [0, 1]")));
    }
    if let Some(&bad) = labels.iter().find(|&&l| l >= classes) {
        return Err(Error::invalid(format!("label {bad} out of range for K = {classes}")));
    }
    let count = libm::round(ratio * labels.len() as f64) as usize;
    if count > 0 && classes < 2 {
        return Err(Error::invalid("label noise needs at least two classes"));
    }
    let mut rng = SeededStream::new(seed);
    let mut order: Vec<usize> = (0..labels.len()).collect();
    for i in 0..count {
        let j = i + rng.below((order.len() - i) as u64) as usize;
        order.swap(i, j);
    }
    let mut flipped = order[..count].to_vec();
    flipped.sort_unstable();
    let mut out = labels.to_vec();
    for &i in &flipped {
        let r = rng.below(classes as u64 - 1) as usize;
        out[i] = if r >= labels[i] { r + 1 } else { r };
    }
    Ok(NoisyLabels {
        labels: out,
        flipped,
    })
}
