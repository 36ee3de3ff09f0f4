//! Benchmark generation: corrupt every source image, score visibility and
//! write variants plus the manifest.

use std::collections::HashMap;
use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use softaffect_core::corrupt::corruption_suite_with;
use softaffect_core::quality::{normalize_visibility, RawDistance};
use softaffect_core::rng::derive_seed;
use softaffect_core::softlabel::{
    fuse_labels, gmm_posterior, smoothing_alpha, visibility_label, GmmParams, SoftLabel, VaPoint,
};

use crate::annotations::{read_annotations, read_direct_labels};
use crate::config::{config_hash, GenerateConfig, LoadedSchedule};
use crate::digest::{id_key, sha256_hex};
use crate::error::{BenchError, Result};
use crate::gmmfile::GmmFile;
use crate::imageio::{load_source, write_png, SOURCE_EXTENSIONS};
use crate::manifest::{
    record_id, variant_path, DatasetManifest, ManifestHeader, SkippedImage, SourceEntry, VariantRecord,
    DIRECT_LABELS, MANIFEST_FORMAT, MANIFEST_VERSION,
};

pub const MANIFEST_FILE: &str = "manifest.jsonl";

/// Where the pre-smoothing label of each source comes from.
#[derive(Debug, Clone, PartialEq)]
pub enum LabelSource {
    /// Fuse the one-hot class with the mixture posterior of the VA point.
    Gmm(PathBuf),
    /// Use per-image label distributions as given.
    Direct(PathBuf),
}

#[derive(Debug, Clone, PartialEq)]
pub struct GenerateRequest {
    pub images_dir: PathBuf,
    /// Required with [`LabelSource::Gmm`]; with direct labels it only
    /// supplies the hard classes, which otherwise default to the argmax.
    pub annotations: Option<PathBuf>,
    pub labels: LabelSource,
    pub config: GenerateConfig,
    pub out_dir: PathBuf,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GenerateSummary {
    pub manifest_path: PathBuf,
    pub sources: usize,
    pub records: usize,
    pub skipped: Vec<SkippedImage>,
}

impl GenerateSummary {
    pub fn is_complete(&self) -> bool {
        self.skipped.is_empty()
    }
}

struct SourcePlan {
    image_id: String,
    path: PathBuf,
    class: usize,
    fused: SoftLabel,
}

fn list_images(dir: &Path) -> Result<Vec<(String, PathBuf)>> {
    let mut out = Vec::new();
    for entry in fs::read_dir(dir).map_err(BenchError::io(dir))? {
        let path = entry.map_err(BenchError::io(dir))?.path();
        let ext = path.extension().and_then(|e| e.to_str()).map(str::to_ascii_lowercase);
        if !path.is_file() || !ext.is_some_and(|e| SOURCE_EXTENSIONS.contains(&e.as_str())) {
            continue;
        }
        let stem = path.file_stem().and_then(|s| s.to_str()).ok_or_else(|| {
            BenchError::format(&path, "file name is not valid UTF-8")
        })?;
        out.push((stem.to_string(), path));
    }
    out.sort();
    if let Some(w) = out.windows(2).find(|w| w[0].0 == w[1].0) {
        return Err(BenchError::Invalid(format!("two source files share the id {:?}", w[0].0)));
    }
    if out.is_empty() {
        return Err(BenchError::format(dir, "no source images"));
    }
    Ok(out)
}

/// Looks an id up by bare stem or by file name.
fn lookup<'a, T>(map: &'a HashMap<String, T>, id: &str, path: &Path) -> Option<&'a T> {
    map.get(id).or_else(|| {
        path.file_name()
            .and_then(|n| n.to_str())
            .and_then(|n| map.get(n))
    })
}

fn file_hash(path: &Path) -> Result<String> {
    Ok(sha256_hex(&fs::read(path).map_err(BenchError::io(path))?))
}

pub fn generate(req: &GenerateRequest) -> Result<GenerateSummary> {
    let cfg = &req.config;
    let smoothing = cfg.smoothing()?;
    let schedule = LoadedSchedule::load(cfg.schedule.as_deref())?;
    let images = list_images(&req.images_dir)?;

    let annotations = match &req.annotations {
        Some(p) => Some((
            read_annotations(p, cfg.classes)?
                .into_iter()
                .map(|a| (a.image_id.clone(), (a.class, a.va)))
                .collect::<HashMap<String, (usize, VaPoint)>>(),
            file_hash(p)?,
        )),
        None => None,
    };

    let (plans, gmm_hash, labels_hash) = match &req.labels {
        LabelSource::Gmm(path) => {
            let (file, hash) = GmmFile::read(path)?;
            if file.classes != cfg.classes {
                return Err(BenchError::Invalid(format!(
                    "mixture has {} classes, config has {}",
                    file.classes, cfg.classes
                )));
            }
            let (ann, _) = annotations.as_ref().ok_or_else(|| {
                BenchError::Invalid("mixture labels need an annotation file".into())
            })?;
            let plans = plan_gmm(&images, ann, &file.components, cfg.beta, cfg.classes)?;
            (plans, hash.clone(), hash)
        }
        LabelSource::Direct(path) => {
            let direct: HashMap<String, SoftLabel> =
                read_direct_labels(path, cfg.classes)?.into_iter().collect();
            let plans = plan_direct(&images, &direct, annotations.as_ref().map(|a| &a.0))?;
            (plans, DIRECT_LABELS.to_string(), file_hash(path)?)
        }
    };

    fs::create_dir_all(&req.out_dir).map_err(BenchError::io(&req.out_dir))?;
    let results: Vec<Result<(SourceEntry, Vec<VariantRecord>)>> = plans
        .par_iter()
        .map(|plan| process_source(plan, req, &schedule, &smoothing))
        .collect();

    let mut sources = Vec::new();
    let mut records = Vec::new();
    let mut skipped = Vec::new();
    for (plan, result) in plans.iter().zip(results) {
        match result {
            Ok((s, r)) => {
                sources.push(s);
                records.extend(r);
            }
            Err(e) => {
                tracing::error!(image = %plan.image_id, error = %e, "skipping source image");
                skipped.push(SkippedImage {
                    image_id: plan.image_id.clone(),
                    error: e.to_string(),
                });
            }
        }
    }

    // the schedule's location is machine-specific; its content is hashed
    // separately
    let mut hashed = cfg.clone();
    hashed.schedule = None;
    let manifest = DatasetManifest {
        header: ManifestHeader {
            format: MANIFEST_FORMAT.into(),
            version: MANIFEST_VERSION,
            dataset_id: cfg.dataset_id.clone(),
            seed: cfg.seed,
            schedule_hash: schedule.hash.clone(),
            gmm_hash,
            labels_hash,
            annotations_hash: annotations.map(|a| a.1),
            config_hash: config_hash(&hashed),
            beta: cfg.beta,
            kappa: cfg.kappa,
            classes: cfg.classes,
            visibility_measure: cfg.visibility,
            resize: cfg.resize,
            sources: sources.len(),
            records: records.len(),
            skipped: skipped.clone(),
        },
        sources,
        records,
    };
    let manifest_path = req.out_dir.join(MANIFEST_FILE);
    manifest.write(&manifest_path)?;
    Ok(GenerateSummary {
        manifest_path,
        sources: manifest.sources.len(),
        records: manifest.records.len(),
        skipped,
    })
}

fn missing(id: &str, what: &str) -> BenchError {
    BenchError::Invalid(format!("source image {id:?} has no {what}"))
}

fn plan_gmm(
    images: &[(String, PathBuf)],
    ann: &HashMap<String, (usize, VaPoint)>,
    params: &GmmParams,
    beta: f64,
    classes: usize,
) -> Result<Vec<SourcePlan>> {
    images
        .iter()
        .map(|(id, path)| {
            let &(class, va) = lookup(ann, id, path).ok_or_else(|| missing(id, "annotation"))?;
            let onehot = SoftLabel::one_hot(class, classes)?;
            let fused = fuse_labels(&onehot, &gmm_posterior(params, va), beta)?;
            Ok(SourcePlan {
                image_id: id.clone(),
                path: path.clone(),
                class,
                fused,
            })
        })
        .collect()
}

fn plan_direct(
    images: &[(String, PathBuf)],
    direct: &HashMap<String, SoftLabel>,
    ann: Option<&HashMap<String, (usize, VaPoint)>>,
) -> Result<Vec<SourcePlan>> {
    images
        .iter()
        .map(|(id, path)| {
            let fused = lookup(direct, id, path).ok_or_else(|| missing(id, "direct soft label"))?;
            let class = match ann {
                Some(a) => lookup(a, id, path).ok_or_else(|| missing(id, "annotation"))?.0,
                None => fused.argmax(),
            };
            Ok(SourcePlan {
                image_id: id.clone(),
                path: path.clone(),
                class,
                fused: fused.clone(),
            })
        })
        .collect()
}

/// The 85-variant pipeline for one source. Visibility is measured on the
/// 8-bit pixels that are written to disk.
fn process_source(
    plan: &SourcePlan,
    req: &GenerateRequest,
    schedule: &LoadedSchedule,
    smoothing: &softaffect_core::softlabel::SmoothingConfig,
) -> Result<(SourceEntry, Vec<VariantRecord>)> {
    let cfg = &req.config;
    let source = load_source(&plan.path, cfg.resize)?;
    let seed = derive_seed(cfg.seed, &[id_key(&plan.image_id)]);
    let suite = corruption_suite_with(&schedule.schedule, &source, seed)?;
    let saved: Vec<_> = suite.into_iter().map(|(spec, img)| (spec, img.quantized())).collect();
    let distances = saved
        .iter()
        .map(|(_, img)| cfg.visibility.distance(&source, img))
        .collect::<softaffect_core::Result<Vec<RawDistance>>>()?;
    let visibility = normalize_visibility(&distances)?;

    let mut records = Vec::with_capacity(saved.len());
    for (((spec, img), d), v) in saved.iter().zip(&distances).zip(&visibility) {
        let rel = variant_path(&plan.image_id, spec.kind, spec.severity);
        write_png(&req.out_dir.join(&rel), img)?;
        records.push(VariantRecord {
            record_id: record_id(&plan.image_id, spec.kind, spec.severity),
            image_id: plan.image_id.clone(),
            kind: spec.kind,
            severity: spec.severity,
            seed: spec.seed,
            path: rel,
            raw_distance: d.value(),
            visibility: v.value(),
            alpha: smoothing_alpha(*v, smoothing),
            label: visibility_label(&plan.fused, *v, smoothing)?.into_probs(),
        });
    }
    let entry = SourceEntry {
        image_id: plan.image_id.clone(),
        file: plan
            .path
            .file_name()
            .map(|n| n.to_string_lossy().into_owned())
            .unwrap_or_default(),
        class: plan.class,
        height: source.height(),
        width: source.width(),
        fused: plan.fused.probs().to_vec(),
    };
    Ok((entry, records))
}
