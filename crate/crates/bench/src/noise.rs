//! Label-noise injection over a delimited label file.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use softaffect_core::softlabel::inject_label_noise;

use crate::annotations::read_label_table;
use crate::digest::sha256_hex;
use crate::error::{BenchError, Result};

pub const SIDECAR_FORMAT: &str = "softaffect-noise";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Flip {
    pub row: usize,
    pub image_id: Option<String>,
    pub from: usize,
    pub to: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NoiseSidecar {
    pub format: String,
    pub input_hash: String,
    pub output_hash: String,
    pub ratio: f64,
    pub seed: u64,
    pub classes: usize,
    pub total: usize,
    pub flips: Vec<Flip>,
}

/// `<out>.flips.json` next to the noisy file.
pub fn sidecar_path(out: &Path) -> PathBuf {
    let mut name = out.file_name().unwrap_or_default().to_os_string();
    name.push(".flips.json");
    out.with_file_name(name)
}

/// Rewrites the `class` column with `round(ratio * N)` labels flipped and
/// writes the audit sidecar; every other column is copied unchanged.
pub fn inject_noise(labels: &Path, ratio: f64, classes: usize, seed: u64, out: &Path) -> Result<NoiseSidecar> {
    let input = fs::read(labels).map_err(BenchError::io(labels))?;
    let table = read_label_table(labels)?;
    let noisy = inject_label_noise(&table.labels, ratio, classes, seed)?;
    let id_column = table.headers.iter().position(|h| h == "image_id");

    let mut w = csv::Writer::from_writer(Vec::new());
    let to_err = |e: csv::Error| BenchError::Invalid(format!("writing {}: {e}", out.display()));
    w.write_record(&table.headers).map_err(to_err)?;
    for (row, &label) in table.rows.iter().zip(&noisy.labels) {
        let fields: Vec<String> = row
            .iter()
            .enumerate()
            .map(|(i, f)| if i == table.class_column { label.to_string() } else { f.to_string() })
            .collect();
        w.write_record(&fields).map_err(to_err)?;
    }
    let bytes = w
        .into_inner()
        .map_err(|e| BenchError::Invalid(format!("writing {}: {e}", out.display())))?;
    fs::write(out, &bytes).map_err(BenchError::io(out))?;

    let flips = noisy
        .flipped
        .iter()
        .map(|&i| Flip {
            row: i,
            image_id: id_column.map(|c| table.rows[i][c].to_string()),
            from: table.labels[i],
            to: noisy.labels[i],
        })
        .collect();
    let sidecar = NoiseSidecar {
        format: SIDECAR_FORMAT.into(),
        input_hash: sha256_hex(&input),
        output_hash: sha256_hex(&bytes),
        ratio,
        seed,
        classes,
        total: table.labels.len(),
        flips,
    };
    let side = sidecar_path(out);
    let mut json = serde_json::to_string_pretty(&sidecar).expect("sidecar serializes");
    json.push('\n');
    fs::write(&side, json).map_err(BenchError::io(&side))?;
    Ok(sidecar)
}
