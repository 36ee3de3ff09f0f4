//! The benchmark manifest: one JSON object per line. A header line comes
//! first, then each source image followed by its variants in canonical
//! order.

use std::collections::HashSet;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use softaffect_core::corrupt::{CorruptionKind, VARIANTS_PER_IMAGE};
use softaffect_core::quality::VisibilityMeasure;
use softaffect_core::softlabel::SoftLabel;

use crate::digest::sha256_hex;
use crate::error::{BenchError, Result};

pub const MANIFEST_FORMAT: &str = "softaffect-manifest";
pub const MANIFEST_VERSION: u32 = 1;
/// Stands in for the mixture hash when labels come straight from a file.
pub const DIRECT_LABELS: &str = "direct-soft-labels";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SkippedImage {
    pub image_id: String,
    pub error: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifestHeader {
    pub format: String,
    pub version: u32,
    pub dataset_id: String,
    pub seed: u64,
    pub schedule_hash: String,
    /// Hash of the mixture file, or [`DIRECT_LABELS`].
    pub gmm_hash: String,
    pub labels_hash: String,
    pub annotations_hash: Option<String>,
    pub config_hash: String,
    pub beta: f64,
    pub kappa: f64,
    pub classes: usize,
    pub visibility_measure: VisibilityMeasure,
    pub resize: Option<u32>,
    pub sources: usize,
    pub records: usize,
    pub skipped: Vec<SkippedImage>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SourceEntry {
    pub image_id: String,
    pub file: String,
    /// Original hard label, the target in clean evaluation.
    pub class: usize,
    pub height: usize,
    pub width: usize,
    pub fused: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VariantRecord {
    pub record_id: String,
    pub image_id: String,
    pub kind: CorruptionKind,
    pub severity: u8,
    pub seed: u64,
    pub path: String,
    pub raw_distance: f64,
    pub visibility: f64,
    pub alpha: f64,
    pub label: Vec<f64>,
}

pub fn record_id(image_id: &str, kind: CorruptionKind, severity: u8) -> String {
    format!("{image_id}/{}/{severity}", kind.name())
}

pub fn variant_path(image_id: &str, kind: CorruptionKind, severity: u8) -> String {
    format!("variants/{}/{severity}/{image_id}.png", kind.name())
}

#[derive(Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
enum Line {
    Header(ManifestHeader),
    Source(SourceEntry),
    Variant(VariantRecord),
}

#[derive(Debug, Clone, PartialEq)]
pub struct DatasetManifest {
    pub header: ManifestHeader,
    pub sources: Vec<SourceEntry>,
    /// `VARIANTS_PER_IMAGE` records per source, grouped by source.
    pub records: Vec<VariantRecord>,
}

impl DatasetManifest {
    pub fn to_jsonl(&self) -> String {
        fn line<T: Serialize>(out: &mut String, v: &T) {
            out.push_str(&serde_json::to_string(v).expect("manifest lines serialize"));
            out.push('\n');
        }
        let mut out = String::new();
        line(&mut out, &Line::Header(self.header.clone()));
        for (i, s) in self.sources.iter().enumerate() {
            line(&mut out, &Line::Source(s.clone()));
            for r in &self.records[i * VARIANTS_PER_IMAGE..(i + 1) * VARIANTS_PER_IMAGE] {
                line(&mut out, &Line::Variant(r.clone()));
            }
        }
        out
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        fs::write(path, self.to_jsonl()).map_err(BenchError::io(path))
    }

    /// Reads and validates a manifest; returns it with the hash of its bytes.
    pub fn read(path: &Path) -> Result<(Self, String)> {
        let bytes = fs::read(path).map_err(BenchError::io(path))?;
        let text = std::str::from_utf8(&bytes).map_err(|e| BenchError::format(path, e))?;
        let mut header = None;
        let mut sources = Vec::new();
        let mut records = Vec::new();
        for (i, raw) in text.lines().enumerate() {
            let n = i as u64 + 1;
            if raw.trim().is_empty() {
                continue;
            }
            let parsed: Line =
                serde_json::from_str(raw).map_err(|e| BenchError::parse(path, n, e.to_string()))?;
            match (parsed, header.is_some()) {
                (Line::Header(h), false) if n == 1 => header = Some(h),
                (Line::Header(_), _) => return Err(BenchError::parse(path, n, "header must be the first line only")),
                (_, false) => return Err(BenchError::parse(path, n, "missing header line")),
                (Line::Source(s), true) => sources.push(s),
                (Line::Variant(r), true) => records.push(r),
            }
        }
        let header = header.ok_or_else(|| BenchError::format(path, "empty manifest"))?;
        let manifest = Self {
            header,
            sources,
            records,
        };
        manifest.validate().map_err(|m| BenchError::format(path, m))?;
        Ok((manifest, sha256_hex(&bytes)))
    }

    /// Checks the structural invariants: format, counts, grouping, label
    /// simplexes and visibility range.
    pub fn validate(&self) -> std::result::Result<(), String> {
        let h = &self.header;
        if h.format != MANIFEST_FORMAT || h.version != MANIFEST_VERSION {
            return Err(format!("unsupported format {} v{}", h.format, h.version));
        }
        if self.records.len() != VARIANTS_PER_IMAGE * self.sources.len() {
            return Err(format!(
                "{} records for {} sources; expected {} each",
                self.records.len(),
                self.sources.len(),
                VARIANTS_PER_IMAGE
            ));
        }
        if h.sources != self.sources.len() || h.records != self.records.len() {
            return Err("header counts disagree with the body".into());
        }
        let mut ids = HashSet::new();
        for (i, s) in self.sources.iter().enumerate() {
            if !ids.insert(s.image_id.as_str()) {
                return Err(format!("duplicate source {}", s.image_id));
            }
            if s.class >= h.classes || s.fused.len() != h.classes {
                return Err(format!("source {} does not match K = {}", s.image_id, h.classes));
            }
            SoftLabel::new(s.fused.clone()).map_err(|e| format!("source {}: {e}", s.image_id))?;
            let group = &self.records[i * VARIANTS_PER_IMAGE..(i + 1) * VARIANTS_PER_IMAGE];
            let mut seen = HashSet::new();
            for r in group {
                if r.image_id != s.image_id || r.record_id != record_id(&r.image_id, r.kind, r.severity) {
                    return Err(format!("record {} is misplaced or misnamed", r.record_id));
                }
                if !seen.insert((r.kind, r.severity)) || !(1..=5).contains(&r.severity) {
                    return Err(format!("record {} repeats or has a bad severity", r.record_id));
                }
                if !(0.0..=1.0).contains(&r.visibility) {
                    return Err(format!("record {} has visibility {}", r.record_id, r.visibility));
                }
                if r.label.len() != h.classes {
                    return Err(format!("record {} label length", r.record_id));
                }
                SoftLabel::new(r.label.clone()).map_err(|e| format!("record {}: {e}", r.record_id))?;
            }
        }
        Ok(())
    }

    pub fn source(&self, image_id: &str) -> Option<&SourceEntry> {
        self.sources.iter().find(|s| s.image_id == image_id)
    }
}
