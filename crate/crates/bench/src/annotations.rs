//! Delimited-text inputs: VA annotations, direct soft labels and plain
//! class-label files.

use std::collections::HashSet;
use std::path::Path;

use serde::Deserialize;
use softaffect_core::softlabel::{SoftLabel, VaPoint};

use crate::error::{BenchError, Result};

/// Rows whose probabilities miss 1 by more than this are rejected; closer
/// rows are renormalized.
pub const ROW_SUM_TOLERANCE: f64 = 1e-4;

#[derive(Debug, Clone, PartialEq)]
pub struct Annotation {
    pub image_id: String,
    pub class: usize,
    pub va: VaPoint,
}

#[derive(Deserialize)]
struct AnnotationRow {
    image_id: String,
    class: usize,
    valence: f64,
    arousal: f64,
}

pub(crate) fn reader(path: &Path) -> Result<csv::Reader<std::fs::File>> {
    csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .comment(Some(b'#'))
        .from_path(path)
        .map_err(|e| csv_error(path, e))
}

pub(crate) fn csv_error(path: &Path, e: csv::Error) -> BenchError {
    let line = e.position().map_or(0, |p| p.line());
    match e.into_kind() {
        csv::ErrorKind::Io(source) => BenchError::Io {
            path: path.to_path_buf(),
            source,
        },
        kind => BenchError::parse(path, line, format!("{kind:?}")),
    }
}

fn check_unique(path: &Path, seen: &mut HashSet<String>, id: &str, line: u64) -> Result<()> {
    if seen.insert(id.to_string()) {
        Ok(())
    } else {
        Err(BenchError::parse(path, line, format!("duplicate image id {id:?}")))
    }
}

/// Columns `image_id,class,valence,arousal`; classes are 0-based.
pub fn read_annotations(path: &Path, classes: usize) -> Result<Vec<Annotation>> {
    let mut rdr = reader(path)?;
    let headers = rdr.headers().map_err(|e| csv_error(path, e))?.clone();
    let mut out = Vec::new();
    let mut seen = HashSet::new();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| csv_error(path, e))?;
        let line = rec.position().map_or(0, |p| p.line());
        let row: AnnotationRow = rec
            .deserialize(Some(&headers))
            .map_err(|e| BenchError::parse(path, line, format!("{:?}", e.kind())))?;
        let bad = |m: String| BenchError::parse(path, line, m);
        if row.class >= classes {
            return Err(bad(format!("class {} out of range for K = {classes}", row.class)));
        }
        let va = VaPoint::new(row.valence, row.arousal).map_err(|e| bad(e.to_string()))?;
        check_unique(path, &mut seen, &row.image_id, line)?;
        out.push(Annotation {
            image_id: row.image_id,
            class: row.class,
            va,
        });
    }
    if out.is_empty() {
        return Err(BenchError::format(path, "no annotation rows"));
    }
    Ok(out)
}

/// Parses `K` probabilities, renormalizing rows within [`ROW_SUM_TOLERANCE`].
pub(crate) fn parse_probability_row(values: &[f64]) -> std::result::Result<Vec<f64>, String> {
    if values.iter().any(|v| !v.is_finite() || *v < 0.0) {
        return Err("probabilities must be finite and non-negative".into());
    }
    let sum: f64 = values.iter().sum();
    if (sum - 1.0).abs() > ROW_SUM_TOLERANCE {
        return Err(format!("probabilities sum to {sum}"));
    }
    Ok(values.iter().map(|v| v / sum).collect())
}

pub(crate) fn parse_floats<'a>(path: &Path, line: u64, fields: impl Iterator<Item = &'a str>) -> Result<Vec<f64>> {
    fields
        .map(|f| {
            f.parse::<f64>()
                .map_err(|e| BenchError::parse(path, line, format!("{f:?}: {e}")))
        })
        .collect()
}

/// Columns `image_id,p_0..p_{K-1}`, the per-image soft labels supplied by a
/// dataset that already ships label distributions.
pub fn read_direct_labels(path: &Path, classes: usize) -> Result<Vec<(String, SoftLabel)>> {
    let mut rdr = reader(path)?;
    let width = rdr.headers().map_err(|e| csv_error(path, e))?.len();
    if width != classes + 1 {
        return Err(BenchError::parse(
            path,
            1,
            format!("expected image_id plus {classes} probability columns, found {width} columns"),
        ));
    }
    let mut out = Vec::new();
    let mut seen = HashSet::new();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| csv_error(path, e))?;
        let line = rec.position().map_or(0, |p| p.line());
        let id = rec[0].to_string();
        let values = parse_floats(path, line, rec.iter().skip(1))?;
        let probs = parse_probability_row(&values).map_err(|m| BenchError::parse(path, line, m))?;
        check_unique(path, &mut seen, &id, line)?;
        out.push((id, SoftLabel::new(probs)?));
    }
    if out.is_empty() {
        return Err(BenchError::format(path, "no label rows"));
    }
    Ok(out)
}

/// A delimited file with a `class` column, kept whole so that noisy copies
/// preserve every other column.
#[derive(Debug, Clone, PartialEq)]
pub struct LabelTable {
    pub headers: csv::StringRecord,
    pub rows: Vec<csv::StringRecord>,
    pub class_column: usize,
    pub labels: Vec<usize>,
}

pub fn read_label_table(path: &Path) -> Result<LabelTable> {
    let mut rdr = reader(path)?;
    let headers = rdr.headers().map_err(|e| csv_error(path, e))?.clone();
    let class_column = headers
        .iter()
        .position(|h| h == "class")
        .ok_or_else(|| BenchError::parse(path, 1, "no \"class\" column"))?;
    let mut rows = Vec::new();
    let mut labels = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| csv_error(path, e))?;
        let line = rec.position().map_or(0, |p| p.line());
        let class = rec[class_column]
            .parse::<usize>()
            .map_err(|e| BenchError::parse(path, line, format!("class {:?}: {e}", &rec[class_column])))?;
        labels.push(class);
        rows.push(rec);
    }
    Ok(LabelTable {
        headers,
        rows,
        class_column,
        labels,
    })
}
