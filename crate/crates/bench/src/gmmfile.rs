//! Fitted mixture parameters on disk.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use softaffect_core::softlabel::{
    fit_gmm, GmmParams, COVARIANCE_FLOOR, MIN_POINTS_PER_CLASS, SINGULAR_DETERMINANT,
};

use crate::annotations::read_annotations;
use crate::digest::sha256_hex;
use crate::error::{BenchError, Result};

pub const GMM_FORMAT: &str = "softaffect-gmm";
pub const GMM_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GmmFile {
    pub format: String,
    pub version: u32,
    pub classes: usize,
    /// Digest of the annotation bytes together with every fitting constant.
    pub fit_digest: String,
    pub annotations_hash: String,
    pub points: usize,
    pub kept: Vec<usize>,
    pub regularized: Vec<usize>,
    pub components: GmmParams,
}

impl GmmFile {
    pub fn fit(annotations: &Path, classes: usize) -> Result<Self> {
        let bytes = fs::read(annotations).map_err(BenchError::io(annotations))?;
        let annotations_hash = sha256_hex(&bytes);
        let rows = read_annotations(annotations, classes)?;
        let points: Vec<_> = rows.iter().map(|a| (a.va, a.class)).collect();
        let fit = fit_gmm(&points, classes)?;
        let recipe = format!(
            "trim=one-std-two-pass;min_points={MIN_POINTS_PER_CLASS};floor={COVARIANCE_FLOOR:e};\
             singular={SINGULAR_DETERMINANT:e};classes={classes};annotations={annotations_hash}"
        );
        Ok(Self {
            format: GMM_FORMAT.into(),
            version: GMM_VERSION,
            classes,
            fit_digest: sha256_hex(recipe.as_bytes()),
            annotations_hash,
            points: points.len(),
            kept: fit.kept,
            regularized: fit.regularized,
            components: fit.params,
        })
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("gmm file serializes");
        s.push('\n');
        s
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        fs::write(path, self.to_json()).map_err(BenchError::io(path))
    }

    /// Reads and validates a parameter file; returns it with the hash of its
    /// bytes.
    pub fn read(path: &Path) -> Result<(Self, String)> {
        let bytes = fs::read(path).map_err(BenchError::io(path))?;
        let file: GmmFile = serde_json::from_slice(&bytes).map_err(|e| BenchError::format(path, e))?;
        if file.format != GMM_FORMAT || file.version != GMM_VERSION {
            return Err(BenchError::format(
                path,
                format!("unsupported format {} v{}", file.format, file.version),
            ));
        }
        file.components.validate()?;
        if file.components.class_count() != file.classes {
            return Err(BenchError::format(path, "class count disagrees with the component list"));
        }
        Ok((file, sha256_hex(&bytes)))
    }
}
