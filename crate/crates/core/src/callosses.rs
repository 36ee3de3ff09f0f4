//! Calibration losses as value-and-gradient functions of a logit vector.
//!
//! Every gradient is with respect to the logits. Batches reduce by the mean.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

#[cfg(feature = "serde")]
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::softlabel::{argmax, SoftLabel};

pub const DEFAULT_MARGIN: f64 = 10.0;

/// The commonly quoted global mean for eight uniform classes. Class values
/// 1..8 actually average 4.5, so this is only used as an explicit override.
pub const QUOTED_MU_G: f64 = 3.6;

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize), serde(transparent))]
pub struct LogitVector(Vec<f64>);

impl LogitVector {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::invalid("a logit vector needs at least one entry"));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid("logits must be finite"));
        }
        Ok(Self(values))
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub struct LossOutput {
    pub value: f64,
    pub grad: Vec<f64>,
}

impl LossOutput {
    fn add(mut self, other: &LossOutput) -> Self {
        self.value += other.value;
        for (g, o) in self.grad.iter_mut().zip(&other.grad) {
            *g += o;
        }
        self
    }
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub struct MaxEntConfig {
    pub gamma: f64,
    pub lambda_mu: f64,
    pub class_values: Vec<f64>,
    pub mu_g: f64,
    /// Penalize `|E[Y] - mu_G|` instead of the signed difference.
    #[cfg_attr(feature = "serde", serde(default))]
    pub absolute: bool,
}

impl MaxEntConfig {
    /// `mu_g` defaults to the mean of `class_values`, the expectation under a
    /// uniform prior.
    pub fn new(gamma: f64, lambda_mu: f64, class_values: Vec<f64>) -> Result<Self> {
        let mu_g = if class_values.is_empty() {
            0.0
        } else {
            class_values.iter().sum::<f64>() / class_values.len() as f64
        };
        let cfg = Self {
            gamma,
            lambda_mu,
            class_values,
            mu_g,
            absolute: false,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    /// Class values `1..=K`.
    pub fn ordinal(classes: usize, gamma: f64, lambda_mu: f64) -> Result<Self> {
        Self::new(gamma, lambda_mu, (1..=classes).map(|k| k as f64).collect())
    }

    pub fn with_mu_g(mut self, mu_g: f64) -> Result<Self> {
        self.mu_g = mu_g;
        self.validate()?;
        Ok(self)
    }

    pub fn with_absolute(mut self, absolute: bool) -> Self {
        self.absolute = absolute;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.gamma >= 0.0) || !self.gamma.is_finite() {
            return Err(Error::invalid(format!("gamma {} must be finite and >= 0", self.gamma)));
        }
        if !(self.lambda_mu >= 0.0) || !self.lambda_mu.is_finite() {
            return Err(Error::invalid(format!(
                "lambda_mu {} must be finite and >= 0",
                self.lambda_mu
            )));
        }
        if self.class_values.is_empty() || self.class_values.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid("class values must be finite and non-empty"));
        }
        if self.class_values.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::invalid("class values must be strictly increasing"));
        }
        if !self.mu_g.is_finite() {
            return Err(Error::invalid("mu_G must be finite"));
        }
        Ok(())
    }
}

/// Returns `(p, log p)` from max-subtracted exponents.
fn log_softmax(z: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let max = z.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let e: Vec<f64> = z.iter().map(|v| libm::exp(v - max)).collect();
    let sum: f64 = e.iter().sum();
    let log_sum = libm::log(sum);
    let p = e.iter().map(|v| v / sum).collect();
    let logp = z.iter().map(|v| v - max - log_sum).collect();
    (p, logp)
}

/// `1 - p_k` summed from the other classes, which keeps precision when
/// `p_k` is close to 1.
fn complements(p: &[f64]) -> Vec<f64> {
    let mut suffix = vec![0.0; p.len() + 1];
    for k in (0..p.len()).rev() {
        suffix[k] = suffix[k + 1] + p[k];
    }
    let mut prefix = 0.0;
    p.iter()
        .enumerate()
        .map(|(k, &pk)| {
            let q = prefix + suffix[k + 1];
            prefix += pk;
            q
        })
        .collect()
}

pub fn softmax(z: &LogitVector) -> SoftLabel {
    let (p, _) = log_softmax(&z.0);
    SoftLabel::from_normalized(p)
}

fn check_target(z: &LogitVector, target: &SoftLabel) -> Result<()> {
    if z.len() != target.len() {
        return Err(Error::invalid(format!(
            "{} logits for a {}-class target",
            z.len(),
            target.len()
        )));
    }
    Ok(())
}

/// Pushes `dL/dp_k * p_k` through the softmax Jacobian.
fn through_softmax(p: &[f64], scaled: &[f64]) -> Vec<f64> {
    let total: f64 = scaled.iter().sum();
    scaled.iter().zip(p).map(|(g, pj)| g - pj * total).collect()
}

fn focal_parts(z: &LogitVector, target: &SoftLabel, gamma: f64) -> (Vec<f64>, LossOutput) {
    let (p, logp) = log_softmax(&z.0);
    let q = complements(&p);
    let mut value = 0.0;
    let mut scaled = vec![0.0; p.len()];
    for k in 0..p.len() {
        let y = target.probs()[k];
        if y == 0.0 {
            continue;
        }
        let weight = libm::pow(q[k], gamma);
        value -= y * weight * logp[k];
        // d/dp of (1-p)^gamma, scaled by p; vanishes at p = 1 where log p = 0
        let decay = if gamma == 0.0 || q[k] <= 0.0 {
            0.0
        } else {
            gamma * libm::pow(q[k], gamma - 1.0) * p[k] * logp[k]
        };
        scaled[k] = -y * (weight - decay);
    }
    let grad = through_softmax(&p, &scaled);
    (p, LossOutput { value, grad })
}

/// `-sum_k y_k (1 - p_k)^gamma log p_k` with `p = softmax(z)`.
pub fn focal_loss(z: &LogitVector, target: &SoftLabel, gamma: f64) -> Result<LossOutput> {
    check_target(z, target)?;
    if !(gamma >= 0.0) || !gamma.is_finite() {
        return Err(Error::invalid(format!("gamma {gamma} must be finite and >= 0")));
    }
    Ok(focal_parts(z, target, gamma).1)
}

/// Focal loss plus `lambda_mu * (sum_k Y_k p_k - mu_G)`.
pub fn maxent_loss(z: &LogitVector, target: &SoftLabel, cfg: &MaxEntConfig) -> Result<LossOutput> {
    check_target(z, target)?;
    cfg.validate()?;
    if cfg.class_values.len() != z.len() {
        return Err(Error::invalid(format!(
            "{} class values for {} logits",
            cfg.class_values.len(),
            z.len()
        )));
    }
    let (p, mut out) = focal_parts(z, target, cfg.gamma);
    let mean: f64 = p.iter().zip(&cfg.class_values).map(|(a, b)| a * b).sum();
    let diff = mean - cfg.mu_g;
    let (term, scale) = if cfg.absolute {
        (diff.abs(), cfg.lambda_mu * sign(diff))
    } else {
        (diff, cfg.lambda_mu)
    };
    out.value += cfg.lambda_mu * term;
    for (j, g) in out.grad.iter_mut().enumerate() {
        *g += scale * p[j] * (cfg.class_values[j] - mean);
    }
    Ok(out)
}

fn sign(v: f64) -> f64 {
    if v > 0.0 {
        1.0
    } else if v < 0.0 {
        -1.0
    } else {
        0.0
    }
}

/// `sum_k max(0, max_j z_j - z_k - m)`. Hinges exactly at zero count as
/// inactive, and the max is attributed to its lowest index.
pub fn mbls_loss(z: &LogitVector, m: f64) -> Result<LossOutput> {
    if !(m >= 0.0) || !m.is_finite() {
        return Err(Error::invalid(format!("margin {m} must be finite and >= 0")));
    }
    let top = argmax(&z.0);
    let zmax = z.0[top];
    let mut value = 0.0;
    let mut grad = vec![0.0; z.len()];
    for (k, &zk) in z.0.iter().enumerate() {
        let gap = zmax - zk - m;
        if gap > 0.0 {
            value += gap;
            grad[top] += 1.0;
            grad[k] -= 1.0;
        }
    }
    Ok(LossOutput { value, grad })
}

/// MaxEnt plus MBLS.
pub fn combined_loss(
    z: &LogitVector,
    target: &SoftLabel,
    cfg: &MaxEntConfig,
    m: f64,
) -> Result<LossOutput> {
    Ok(maxent_loss(z, target, cfg)?.add(&mbls_loss(z, m)?))
}

/// Mean value and mean gradient over per-sample outputs of equal length.
pub fn batch_mean(outputs: &[LossOutput]) -> Result<LossOutput> {
    let first = outputs
        .first()
        .ok_or_else(|| Error::invalid("cannot average an empty batch"))?;
    if outputs.iter().any(|o| o.grad.len() != first.grad.len()) {
        return Err(Error::invalid("gradients in a batch must share a length"));
    }
    let n = outputs.len() as f64;
    let mut acc = LossOutput {
        value: 0.0,
        grad: vec![0.0; first.grad.len()],
    };
    for o in outputs {
        acc = acc.add(o);
    }
    acc.value /= n;
    acc.grad.iter_mut().for_each(|g| *g /= n);
    Ok(acc)
}
