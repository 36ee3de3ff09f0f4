//! Batch evaluation of the calibration losses from a delimited file.

use std::fmt::Write as _;
use std::path::Path;

use softaffect_core::callosses::{
    batch_mean, combined_loss, focal_loss, maxent_loss, mbls_loss, LogitVector, LossOutput, MaxEntConfig,
};
use softaffect_core::softlabel::SoftLabel;

use crate::annotations::{csv_error, parse_floats, parse_probability_row, reader};
use crate::config::{LossConfig, LossKind};
use crate::error::{BenchError, Result};

fn maxent_config(cfg: &LossConfig, classes: usize) -> Result<MaxEntConfig> {
    let mut me = match &cfg.class_values {
        Some(v) => {
            if v.len() != classes {
                return Err(BenchError::Invalid(format!(
                    "{} class values for {classes} classes",
                    v.len()
                )));
            }
            MaxEntConfig::new(cfg.gamma, cfg.lambda_mu, v.clone())?
        }
        None => MaxEntConfig::ordinal(classes, cfg.gamma, cfg.lambda_mu)?,
    };
    if let Some(mu) = cfg.mu_g {
        me = me.with_mu_g(mu)?;
    }
    Ok(me.with_absolute(cfg.absolute))
}

pub fn eval_row(cfg: &LossConfig, z: &LogitVector, y: &SoftLabel) -> Result<LossOutput> {
    Ok(match cfg.loss {
        LossKind::Focal => focal_loss(z, y, cfg.gamma)?,
        LossKind::Maxent => maxent_loss(z, y, &maxent_config(cfg, z.len())?)?,
        LossKind::Mbls => mbls_loss(z, cfg.margin)?,
        LossKind::Combined => combined_loss(z, y, &maxent_config(cfg, z.len())?, cfg.margin)?,
    })
}

/// Input header `id,z_0..z_{K-1},y_0..y_{K-1}`. Output is `id,value,g_0..g_{K-1}` per row
/// followed by a `mean` row holding the batch mean.
pub fn loss_eval(path: &Path, cfg: &LossConfig) -> Result<String> {
    let mut rdr = reader(path)?;
    let width = rdr.headers().map_err(|e| csv_error(path, e))?.len();
    if width < 3 || !(width - 1).is_multiple_of(2) {
        return Err(BenchError::parse(path, 1, "header must be id, K logit columns, K target columns"));
    }
    let k = (width - 1) / 2;
    let mut ids = Vec::new();
    let mut outputs = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| csv_error(path, e))?;
        let line = rec.position().map_or(0, |p| p.line());
        let values = parse_floats(path, line, rec.iter().skip(1))?;
        let at = |e: softaffect_core::Error| BenchError::parse(path, line, e.to_string());
        let z = LogitVector::new(values[..k].to_vec()).map_err(at)?;
        let y = parse_probability_row(&values[k..]).map_err(|m| BenchError::parse(path, line, m))?;
        let y = SoftLabel::new(y).map_err(at)?;
        outputs.push(eval_row(cfg, &z, &y).map_err(|e| BenchError::parse(path, line, e.to_string()))?);
        ids.push(rec[0].to_string());
    }
    let mean = batch_mean(&outputs).map_err(|_| BenchError::format(path, "no loss rows"))?;

    let mut out = String::from("id,value");
    for j in 0..k {
        let _ = write!(out, ",g_{j}");
    }
    out.push('\n');
    for (id, o) in ids.iter().map(String::as_str).zip(&outputs).chain([("mean", &mean)]) {
        let _ = write!(out, "{id},{}", o.value);
        for g in &o.grad {
            let _ = write!(out, ",{g}");
        }
        out.push('\n');
    }
    Ok(out)
}
