//! Joins a prediction file to a manifest and scores it.

use std::collections::HashMap;
use std::fmt;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use softaffect_core::callosses::{softmax, LogitVector};
use softaffect_core::calmetrics::{
    evaluate as evaluate_set, EvalConfig, EvalMetadata, EvalReport, PredictionSet, ReliabilityBins, Targets,
};
use softaffect_core::corrupt::{CorruptionKind, SEVERITY_LEVELS};

use crate::annotations::{csv_error, parse_floats, parse_probability_row};
use crate::digest::sha256_hex;
use crate::error::{BenchError, Result};
use crate::manifest::DatasetManifest;

pub const REPORT_FORMAT: &str = "softaffect-report";
pub const REPORT_VERSION: u32 = 1;

/// Which manifest rows to score. `clean` scores the source images against
/// their original one-hot classes and excludes the other two filters.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct RecordFilter {
    pub kind: Option<CorruptionKind>,
    pub severity: Option<u8>,
    pub clean: bool,
}

impl RecordFilter {
    pub fn validate(&self) -> Result<()> {
        if self.clean && (self.kind.is_some() || self.severity.is_some()) {
            return Err(BenchError::Invalid("the clean filter excludes kind and severity filters".into()));
        }
        if let Some(s) = self.severity {
            if s == 0 || usize::from(s) > SEVERITY_LEVELS {
                return Err(BenchError::Invalid(format!("severity {s} is outside 1..={SEVERITY_LEVELS}")));
            }
        }
        Ok(())
    }
}

impl fmt::Display for RecordFilter {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.clean {
            return f.write_str("clean");
        }
        match (self.kind, self.severity) {
            (None, None) => f.write_str("all"),
            (Some(k), None) => write!(f, "kind={k}"),
            (None, Some(s)) => write!(f, "severity={s}"),
            (Some(k), Some(s)) => write!(f, "kind={k},severity={s}"),
        }
    }
}

/// Rows of `(record id, probabilities)`. Logit rows are passed through a
/// softmax on load.
#[derive(Debug, Clone, PartialEq)]
pub struct PredictionFile {
    pub classes: usize,
    pub dataset_id: Option<String>,
    pub logits: bool,
    pub rows: Vec<(String, Vec<f64>)>,
    pub hash: String,
}

impl PredictionFile {
    /// Header `record_id,p_0..p_{K-1}` for probabilities or `record_id,z_0..z_{K-1}`
    /// for logits. Leading `# key=value` lines may carry `dataset_id`.
    pub fn read(path: &Path) -> Result<Self> {
        let bytes = fs::read(path).map_err(BenchError::io(path))?;
        let text = std::str::from_utf8(&bytes).map_err(|e| BenchError::format(path, e))?;
        let mut dataset_id = None;
        let mut skipped_lines = 0u64;
        let mut body = text;
        while let Some(rest) = body.strip_prefix('#') {
            let (line, tail) = rest.split_once('\n').unwrap_or((rest, ""));
            for pair in line.split_whitespace() {
                if let Some(v) = pair.strip_prefix("dataset_id=") {
                    dataset_id = Some(v.to_string());
                }
            }
            body = tail;
            skipped_lines += 1;
        }
        let mut rdr = csv::ReaderBuilder::new()
            .trim(csv::Trim::All)
            .from_reader(body.as_bytes());
        let headers = rdr.headers().map_err(|e| csv_error(path, e))?.clone();
        let header_line = skipped_lines + 1;
        let classes = headers.len().saturating_sub(1);
        if classes == 0 || &headers[0] != "record_id" {
            return Err(BenchError::parse(path, header_line, "header must be record_id followed by K columns"));
        }
        let logits = headers.iter().skip(1).all(|h| h.starts_with("z_"));
        if !logits && !headers.iter().skip(1).all(|h| h.starts_with("p_")) {
            return Err(BenchError::parse(path, header_line, "columns must be all p_k or all z_k"));
        }
        let mut rows = Vec::new();
        for rec in rdr.records() {
            let rec = rec.map_err(|e| csv_error(path, e))?;
            let line = rec.position().map_or(0, |p| p.line()) + skipped_lines;
            let values = parse_floats(path, line, rec.iter().skip(1))?;
            let probs = if logits {
                let z = LogitVector::new(values).map_err(|e| BenchError::parse(path, line, e.to_string()))?;
                softmax(&z).into_probs()
            } else {
                parse_probability_row(&values).map_err(|m| BenchError::parse(path, line, m))?
            };
            rows.push((rec[0].to_string(), probs));
        }
        Ok(Self {
            classes,
            dataset_id,
            logits,
            rows,
            hash: sha256_hex(&bytes),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricMeans {
    pub accuracy: f64,
    pub macro_f1: f64,
    pub nll: f64,
    pub ece: f64,
    pub ada_ece: f64,
    pub cece: f64,
    pub kse: f64,
    pub kse_mean: f64,
}

impl MetricMeans {
    fn of(reports: &[EvalReport]) -> Self {
        let n = reports.len() as f64;
        let mean = |f: fn(&EvalReport) -> f64| reports.iter().map(f).sum::<f64>() / n;
        Self {
            accuracy: mean(|r| r.accuracy),
            macro_f1: mean(|r| r.macro_f1),
            nll: mean(|r| r.nll),
            ece: mean(|r| r.ece),
            ada_ece: mean(|r| r.ada_ece),
            cece: mean(|r| r.cece),
            kse: mean(|r| r.kse),
            kse_mean: mean(|r| r.kse_mean),
        }
    }
}

/// One report per severity and the unweighted mean of their metrics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeverityAverage {
    pub per_severity: Vec<EvalReport>,
    pub mean: MetricMeans,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvaluationOutput {
    pub format: String,
    pub version: u32,
    pub predictions_hash: String,
    pub report: EvalReport,
    pub severity_average: Option<SeverityAverage>,
}

impl EvaluationOutput {
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("reports serialize");
        s.push('\n');
        s
    }
}

/// Reliability bins as delimited text for plotting.
pub fn bins_csv(bins: &ReliabilityBins) -> String {
    let mut out = String::from("bin,lower,upper,count,confidence,accuracy\n");
    for (i, b) in bins.bins.iter().enumerate() {
        out.push_str(&format!(
            "{i},{},{},{},{},{}\n",
            b.lower, b.upper, b.count, b.confidence, b.accuracy
        ));
    }
    out
}

/// Builds the prediction set for `filter` in manifest order. Every row must
/// name a manifest entry and every selected entry must have a row.
pub fn assemble(
    manifest: &DatasetManifest,
    predictions: &PredictionFile,
    filter: &RecordFilter,
) -> Result<PredictionSet> {
    filter.validate()?;
    let k = manifest.header.classes;
    if predictions.classes != k {
        return Err(BenchError::Invalid(format!(
            "predictions have {} classes, the manifest {k}",
            predictions.classes
        )));
    }
    if let Some(id) = &predictions.dataset_id {
        if *id != manifest.header.dataset_id {
            return Err(BenchError::Invalid(format!(
                "predictions are for dataset {id:?}, the manifest is {:?}",
                manifest.header.dataset_id
            )));
        }
    }

    let mut by_id: HashMap<&str, &[f64]> = HashMap::with_capacity(predictions.rows.len());
    for (id, probs) in &predictions.rows {
        if by_id.insert(id.as_str(), probs).is_some() {
            return Err(BenchError::Invalid(format!("record {id:?} is predicted twice")));
        }
    }
    let known: std::collections::HashSet<&str> = manifest
        .sources
        .iter()
        .map(|s| s.image_id.as_str())
        .chain(manifest.records.iter().map(|r| r.record_id.as_str()))
        .collect();
    let mut unknown: Vec<String> = by_id
        .keys()
        .filter(|id| !known.contains(*id))
        .map(|id| id.to_string())
        .collect();
    if !unknown.is_empty() {
        unknown.sort();
        return Err(BenchError::Reference { unknown });
    }

    let selected: Vec<(&str, Vec<f64>)> = if filter.clean {
        manifest
            .sources
            .iter()
            .map(|s| {
                let mut t = vec![0.0; k];
                t[s.class] = 1.0;
                (s.image_id.as_str(), t)
            })
            .collect()
    } else {
        manifest
            .records
            .iter()
            .filter(|r| filter.kind.is_none_or(|kind| kind == r.kind))
            .filter(|r| filter.severity.is_none_or(|s| s == r.severity))
            .map(|r| (r.record_id.as_str(), r.label.clone()))
            .collect()
    };
    if selected.is_empty() {
        return Err(BenchError::Invalid(format!("filter {filter} selects no records")));
    }

    let missing: Vec<String> = selected
        .iter()
        .filter(|(id, _)| !by_id.contains_key(id))
        .map(|(id, _)| id.to_string())
        .collect();
    if !missing.is_empty() {
        return Err(BenchError::Coverage { missing });
    }

    let mut probs = Vec::with_capacity(selected.len() * k);
    let mut targets = Vec::with_capacity(selected.len() * k);
    let mut ids = Vec::with_capacity(selected.len());
    for (id, target) in selected {
        probs.extend_from_slice(by_id[id]);
        targets.extend(target);
        ids.push(id.to_string());
    }
    let targets = if filter.clean {
        Targets::Hard(manifest.sources.iter().map(|s| s.class).collect())
    } else {
        Targets::Soft(targets)
    };
    Ok(PredictionSet::new(k, probs, targets, ids)?)
}

/// Scores `filter`; with `average_severities` it also scores each severity
/// under the same kind filter and averages the five reports.
pub fn evaluate(
    manifest: &DatasetManifest,
    manifest_hash: &str,
    predictions: &PredictionFile,
    filter: &RecordFilter,
    bins: usize,
    average_severities: bool,
) -> Result<EvaluationOutput> {
    let cfg = EvalConfig { bins };
    let run = |f: &RecordFilter| -> Result<EvalReport> {
        let set = assemble(manifest, predictions, f)?;
        let meta = EvalMetadata {
            dataset_id: manifest.header.dataset_id.clone(),
            corruption_filter: f.to_string(),
            manifest_hash: manifest_hash.to_string(),
        };
        Ok(evaluate_set(&set, &cfg, meta)?)
    };
    let report = run(filter)?;
    let severity_average = if average_severities {
        if filter.clean || filter.severity.is_some() {
            return Err(BenchError::Invalid(
                "severity averaging needs a filter without clean or severity".into(),
            ));
        }
        let per_severity = (1..=SEVERITY_LEVELS as u8)
            .map(|s| {
                run(&RecordFilter {
                    severity: Some(s),
                    ..*filter
                })
            })
            .collect::<Result<Vec<_>>>()?;
        let mean = MetricMeans::of(&per_severity);
        Some(SeverityAverage { per_severity, mean })
    } else {
        None
    };
    Ok(EvaluationOutput {
        format: REPORT_FORMAT.into(),
        version: REPORT_VERSION,
        predictions_hash: predictions.hash.clone(),
        report,
        severity_average,
    })
}
