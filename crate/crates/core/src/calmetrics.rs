//! Accuracy and calibration metrics over a set of predicted distributions.
//!
//! Binned metrics and KSE need a binary "correct" signal. With soft targets,
//! correctness compares the predicted argmax with the target's argmax; NLL
//! alone uses the full soft target.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use core::cmp::Ordering;

#[cfg(feature = "serde")]
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::softlabel::argmax;

pub const DEFAULT_BINS: usize = 15;
pub const ROW_SUM_TOLERANCE: f64 = 1e-6;
pub const LOG_FLOOR: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub enum Targets {
    Hard(Vec<usize>),
    /// Row-major `N x K` probability rows.
    Soft(Vec<f64>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct PredictionSet {
    classes: usize,
    probs: Vec<f64>,
    targets: Targets,
    ids: Vec<String>,
}

impl PredictionSet {
    /// `probs` is row-major `N x K`. `ids` may be empty, in which case rows
    /// are named by their index.
    pub fn new(classes: usize, probs: Vec<f64>, targets: Targets, ids: Vec<String>) -> Result<Self> {
        if classes == 0 {
            return Err(Error::invalid("K must be positive"));
        }
        if probs.is_empty() || !probs.len().is_multiple_of(classes) {
            return Err(Error::invalid(format!(
                "{} probabilities do not form a non-empty N x {classes} matrix",
                probs.len()
            )));
        }
        let n = probs.len() / classes;
        for (i, row) in probs.chunks_exact(classes).enumerate() {
            check_row(row, i, "prediction")?;
        }
        match &targets {
            Targets::Hard(t) => {
                if t.len() != n {
                    return Err(Error::invalid(format!("{} targets for {n} rows", t.len())));
                }
                if let Some(bad) = t.iter().find(|&&c| c >= classes) {
                    return Err(Error::invalid(format!("target class {bad} out of range")));
                }
            }
            Targets::Soft(t) => {
                if t.len() != n * classes {
                    return Err(Error::invalid(format!(
                        "{} soft target values for {n} rows of {classes}",
                        t.len()
                    )));
                }
                for (i, row) in t.chunks_exact(classes).enumerate() {
                    check_row(row, i, "target")?;
                }
            }
        }
        let ids = if ids.is_empty() {
            (0..n).map(|i| format!("{i}")).collect()
        } else if ids.len() == n {
            ids
        } else {
            return Err(Error::invalid(format!("{} ids for {n} rows", ids.len())));
        };
        Ok(Self {
            classes,
            probs,
            targets,
            ids,
        })
    }

    pub fn len(&self) -> usize {
        self.probs.len() / self.classes
    }

    pub fn is_empty(&self) -> bool {
        self.probs.is_empty()
    }

    pub fn classes(&self) -> usize {
        self.classes
    }

    pub fn ids(&self) -> &[String] {
        &self.ids
    }

    pub fn targets(&self) -> &Targets {
        &self.targets
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.probs[i * self.classes..(i + 1) * self.classes]
    }

    /// Hard class per row; soft targets reduce to their argmax.
    pub fn hard_targets(&self) -> Vec<usize> {
        match &self.targets {
            Targets::Hard(t) => t.clone(),
            Targets::Soft(t) => t.chunks_exact(self.classes).map(argmax).collect(),
        }
    }

    fn summary(&self) -> Summary {
        let targets = self.hard_targets();
        let mut confidence = Vec::with_capacity(self.len());
        let mut predicted = Vec::with_capacity(self.len());
        for row in self.probs.chunks_exact(self.classes) {
            let p = argmax(row);
            predicted.push(p);
            confidence.push(row[p]);
        }
        let correct = predicted.iter().zip(&targets).map(|(p, t)| p == t).collect();
        Summary {
            confidence,
            correct,
            predicted,
            targets,
        }
    }
}

fn check_row(row: &[f64], i: usize, what: &str) -> Result<()> {
    if row.iter().any(|v| !(*v >= 0.0) || !v.is_finite()) {
        return Err(Error::invalid(format!("{what} row {i} has a negative or non-finite entry")));
    }
    let sum: f64 = row.iter().sum();
    if (sum - 1.0).abs() > ROW_SUM_TOLERANCE {
        return Err(Error::invalid(format!("{what} row {i} sums to {sum}")));
    }
    Ok(())
}

/// Per-row quantities shared by every metric.
struct Summary {
    confidence: Vec<f64>,
    correct: Vec<bool>,
    predicted: Vec<usize>,
    targets: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub struct ReliabilityBin {
    pub lower: f64,
    pub upper: f64,
    pub count: usize,
    pub confidence: f64,
    pub accuracy: f64,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize), serde(transparent))]
pub struct ReliabilityBins {
    pub bins: Vec<ReliabilityBin>,
}

impl ReliabilityBins {
    pub fn total(&self) -> usize {
        self.bins.iter().map(|b| b.count).sum()
    }

    /// `sum_b (n_b / N) |acc(b) - conf(b)|`.
    pub fn weighted_gap(&self) -> f64 {
        let n = self.total() as f64;
        if n == 0.0 {
            return 0.0;
        }
        self.bins
            .iter()
            .map(|b| b.count as f64 / n * (b.accuracy - b.confidence).abs())
            .sum()
    }
}

fn check_bins(bins: usize) -> Result<()> {
    if bins == 0 {
        Err(Error::invalid("bin count must be at least 1"))
    } else {
        Ok(())
    }
}

/// Equal-width bin of `v` over `[0, 1]`: bin `b` covers `(b/B, (b+1)/B]`, with
/// 0 falling in the first bin.
fn equal_width_bin(v: f64, bins: usize) -> usize {
    let b = bins as f64;
    let mut idx = (libm::ceil(v * b) as isize - 1).clamp(0, bins as isize - 1) as usize;
    while idx > 0 && v <= idx as f64 / b {
        idx -= 1;
    }
    while idx + 1 < bins && v > (idx + 1) as f64 / b {
        idx += 1;
    }
    idx
}

fn bin_stats(lower: f64, upper: f64, members: impl Iterator<Item = (f64, f64)>) -> ReliabilityBin {
    let (mut count, mut conf, mut acc) = (0usize, 0.0, 0.0);
    for (c, a) in members {
        count += 1;
        conf += c;
        acc += a;
    }
    let (confidence, accuracy) = if count == 0 {
        (0.0, 0.0)
    } else {
        (conf / count as f64, acc / count as f64)
    };
    ReliabilityBin {
        lower,
        upper,
        count,
        confidence,
        accuracy,
    }
}

fn ece_from(s: &Summary, bins: usize) -> ReliabilityBins {
    let mut members: Vec<Vec<usize>> = vec![Vec::new(); bins];
    for (i, &c) in s.confidence.iter().enumerate() {
        members[equal_width_bin(c, bins)].push(i);
    }
    let b = bins as f64;
    ReliabilityBins {
        bins: members
            .iter()
            .enumerate()
            .map(|(k, idx)| {
                bin_stats(
                    k as f64 / b,
                    (k + 1) as f64 / b,
                    idx.iter().map(|&i| (s.confidence[i], f64::from(u8::from(s.correct[i])))),
                )
            })
            .collect(),
    }
}

/// Rows ordered by (confidence, correctness), which makes tie order
/// independent of input order.
fn sorted_order(s: &Summary) -> Vec<usize> {
    let mut order: Vec<usize> = (0..s.confidence.len()).collect();
    order.sort_by(|&a, &b| {
        s.confidence[a]
            .partial_cmp(&s.confidence[b])
            .unwrap_or(Ordering::Equal)
            .then(s.correct[a].cmp(&s.correct[b]))
    });
    order
}

fn ada_bins_from(s: &Summary, bins: usize) -> ReliabilityBins {
    let n = s.confidence.len();
    let order = sorted_order(s);
    let (q, r) = (n / bins, n % bins);
    let mut out = Vec::with_capacity(bins);
    let mut start = 0;
    for b in 0..bins {
        let size = q + usize::from(b < r);
        let slice = &order[start..start + size];
        let lower = slice.first().map_or(0.0, |&i| s.confidence[i]);
        let upper = slice.last().map_or(0.0, |&i| s.confidence[i]);
        out.push(bin_stats(
            lower,
            upper,
            slice.iter().map(|&i| (s.confidence[i], f64::from(u8::from(s.correct[i])))),
        ));
        start += size;
    }
    ReliabilityBins { bins: out }
}

fn kse_curve(s: &Summary) -> Vec<f64> {
    // cumulative (correct - confidence) / N, read at the end of each group of
    // tied confidences
    let n = s.confidence.len() as f64;
    let order = sorted_order(s);
    let mut gaps = Vec::new();
    let mut acc = 0.0;
    for (pos, &i) in order.iter().enumerate() {
        acc += (f64::from(u8::from(s.correct[i])) - s.confidence[i]) / n;
        let last_of_group = order
            .get(pos + 1)
            .is_none_or(|&j| s.confidence[j] != s.confidence[i]);
        if last_of_group {
            gaps.push(acc.abs());
        }
    }
    gaps
}

fn cece_from(p: &PredictionSet, targets: &[usize], bins: usize) -> f64 {
    let n = p.len() as f64;
    let k = p.classes;
    let mut total = 0.0;
    for class in 0..k {
        let mut count = vec![0usize; bins];
        let mut conf = vec![0.0; bins];
        let mut hits = vec![0.0; bins];
        for (i, row) in p.probs.chunks_exact(k).enumerate() {
            let b = equal_width_bin(row[class], bins);
            count[b] += 1;
            conf[b] += row[class];
            if targets[i] == class {
                hits[b] += 1.0;
            }
        }
        for b in 0..bins {
            if count[b] > 0 {
                let c = count[b] as f64;
                total += c / n * (hits[b] / c - conf[b] / c).abs();
            }
        }
    }
    total / k as f64
}

fn nll_from(p: &PredictionSet) -> f64 {
    let k = p.classes;
    let mut total = 0.0;
    for (i, row) in p.probs.chunks_exact(k).enumerate() {
        total -= match &p.targets {
            Targets::Hard(t) => libm::log(row[t[i]].max(LOG_FLOOR)),
            Targets::Soft(t) => t[i * k..(i + 1) * k]
                .iter()
                .zip(row)
                .filter(|(y, _)| **y > 0.0)
                .map(|(y, q)| y * libm::log(q.max(LOG_FLOOR)))
                .sum::<f64>(),
        };
    }
    total / p.len() as f64
}

/// Row-major `K x K` confusion matrix, rows indexed by the true class.
pub fn confusion_matrix(p: &PredictionSet) -> Vec<usize> {
    let s = p.summary();
    confusion_from(&s, p.classes)
}

fn confusion_from(s: &Summary, k: usize) -> Vec<usize> {
    let mut m = vec![0; k * k];
    for (&t, &pr) in s.targets.iter().zip(&s.predicted) {
        m[t * k + pr] += 1;
    }
    m
}

fn macro_f1_from(s: &Summary, k: usize) -> f64 {
    let m = confusion_from(s, k);
    let mut sum = 0.0;
    for c in 0..k {
        let tp = m[c * k + c] as f64;
        let actual: f64 = (0..k).map(|j| m[c * k + j] as f64).sum();
        let predicted: f64 = (0..k).map(|j| m[j * k + c] as f64).sum();
        let precision = if predicted > 0.0 { tp / predicted } else { 0.0 };
        let recall = if actual > 0.0 { tp / actual } else { 0.0 };
        if precision + recall > 0.0 {
            sum += 2.0 * precision * recall / (precision + recall);
        }
    }
    sum / k as f64
}

fn accuracy_from(s: &Summary) -> f64 {
    s.correct.iter().filter(|&&c| c).count() as f64 / s.correct.len() as f64
}

pub fn accuracy(p: &PredictionSet) -> f64 {
    accuracy_from(&p.summary())
}

/// Unweighted mean of per-class F1. Classes never predicted and never
/// present contribute 0.
pub fn macro_f1(p: &PredictionSet) -> f64 {
    macro_f1_from(&p.summary(), p.classes)
}

/// Mean cross-entropy against the targets, with probabilities floored at
/// [`LOG_FLOOR`].
pub fn nll(p: &PredictionSet) -> f64 {
    nll_from(p)
}

/// Expected calibration error over `bins` equal-width confidence bins.
pub fn ece(p: &PredictionSet, bins: usize) -> Result<(f64, ReliabilityBins)> {
    check_bins(bins)?;
    let rb = ece_from(&p.summary(), bins);
    Ok((rb.weighted_gap(), rb))
}

/// Equal-mass bins over sorted confidence; the first `N mod B` bins hold one
/// extra sample.
pub fn ada_ece_bins(p: &PredictionSet, bins: usize) -> Result<ReliabilityBins> {
    check_bins(bins)?;
    if p.len() < bins {
        return Err(Error::invalid(format!(
            "{} samples cannot fill {bins} equal-mass bins",
            p.len()
        )));
    }
    Ok(ada_bins_from(&p.summary(), bins))
}

pub fn ada_ece(p: &PredictionSet, bins: usize) -> Result<f64> {
    Ok(ada_ece_bins(p, bins)?.weighted_gap())
}

/// Classwise ECE: every class's probability column is binned on its own and
/// compared with that class's empirical frequency.
pub fn cece(p: &PredictionSet, bins: usize) -> Result<f64> {
    check_bins(bins)?;
    Ok(cece_from(p, &p.hard_targets(), bins))
}

/// Kolmogorov-Smirnov calibration error: the largest gap between cumulative
/// correctness and cumulative confidence, both divided by `N`, over samples
/// sorted by confidence.
pub fn kse(p: &PredictionSet) -> f64 {
    kse_curve(&p.summary()).into_iter().fold(0.0, f64::max)
}

/// Mean of the same cumulative gaps that [`kse`] maximizes, taken over the
/// distinct confidence levels. This is the expected-deviation reading of the
/// binning-free error.
pub fn kse_mean(p: &PredictionSet) -> f64 {
    let gaps = kse_curve(&p.summary());
    gaps.iter().sum::<f64>() / gaps.len() as f64
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub struct EvalConfig {
    pub bins: usize,
}

impl Default for EvalConfig {
    fn default() -> Self {
        Self { bins: DEFAULT_BINS }
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub struct EvalMetadata {
    pub dataset_id: String,
    pub corruption_filter: String,
    pub manifest_hash: String,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub struct EvalReport {
    pub samples: usize,
    pub classes: usize,
    pub bins: usize,
    pub accuracy: f64,
    pub macro_f1: f64,
    pub nll: f64,
    pub ece: f64,
    pub ada_ece: f64,
    pub cece: f64,
    pub kse: f64,
    pub kse_mean: f64,
    pub reliability: ReliabilityBins,
    pub metadata: EvalMetadata,
}

/// Every metric from one shared pass over the predictions. AdaECE uses
/// `min(bins, N)` bins so that small subsets still evaluate.
pub fn evaluate(p: &PredictionSet, cfg: &EvalConfig, metadata: EvalMetadata) -> Result<EvalReport> {
    check_bins(cfg.bins)?;
    let s = p.summary();
    let reliability = ece_from(&s, cfg.bins);
    let gaps = kse_curve(&s);
    Ok(EvalReport {
        samples: p.len(),
        classes: p.classes,
        bins: cfg.bins,
        accuracy: accuracy_from(&s),
        macro_f1: macro_f1_from(&s, p.classes),
        nll: nll_from(p),
        ece: reliability.weighted_gap(),
        ada_ece: ada_bins_from(&s, cfg.bins.min(p.len())).weighted_gap(),
        cece: cece_from(p, &s.targets, cfg.bins),
        kse: gaps.iter().copied().fold(0.0, f64::max),
        kse_mean: gaps.iter().sum::<f64>() / gaps.len() as f64,
        reliability,
        metadata,
    })
}

#[cfg(test)]
mod tests;
