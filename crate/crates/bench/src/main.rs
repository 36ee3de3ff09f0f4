use std::io::IsTerminal;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use softaffect_bench::config::{BenchConfig, LossKind};
use softaffect_bench::evaluate::{bins_csv, evaluate, PredictionFile, RecordFilter};
use softaffect_bench::generate::{generate, GenerateRequest, LabelSource};
use softaffect_bench::gmmfile::GmmFile;
use softaffect_bench::losseval::loss_eval;
use softaffect_bench::manifest::DatasetManifest;
use softaffect_bench::noise::{inject_noise, sidecar_path};
use softaffect_core::corrupt::CorruptionKind;
use softaffect_core::quality::VisibilityMeasure;
use tracing_subscriber::EnvFilter;

#[derive(Parser)]
#[command(name = "softaffect", version, about = "Corrupted soft-label benchmarks and calibration scoring")]
struct Cli {
    /// TOML config with [generate], [evaluate] and [loss] sections.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Fit per-class VA Gaussians from an annotation file.
    FitGmm(FitGmm),
    /// Write corrupted variants and the manifest.
    Generate(Generate),
    /// Score a prediction file against a manifest.
    Evaluate(Evaluate),
    /// Flip a fixed fraction of class labels.
    InjectNoise(InjectNoise),
    /// Compute loss values and gradients for rows of logits and targets.
    LossEval(LossEval),
}

#[derive(Args)]
struct FitGmm {
    #[arg(long)]
    annotations: PathBuf,
    #[arg(long)]
    classes: Option<usize>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct Generate {
    #[arg(long)]
    images: PathBuf,
    #[arg(long)]
    annotations: Option<PathBuf>,
    /// Mixture file from `fit-gmm`.
    #[arg(long, conflicts_with = "direct_labels", required_unless_present = "direct_labels")]
    gmm: Option<PathBuf>,
    /// Per-image soft labels `image_id,p_0..p_{K-1}`, used as-is.
    #[arg(long)]
    direct_labels: Option<PathBuf>,
    #[arg(long)]
    out: PathBuf,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    dataset_id: Option<String>,
    #[arg(long)]
    classes: Option<usize>,
    #[arg(long)]
    beta: Option<f64>,
    #[arg(long)]
    kappa: Option<f64>,
    #[arg(long, value_parser = parse_measure)]
    visibility: Option<VisibilityMeasure>,
    /// Resize sources to this square side before corrupting.
    #[arg(long)]
    resize: Option<u32>,
    #[arg(long)]
    schedule: Option<PathBuf>,
}

#[derive(Args)]
struct Evaluate {
    #[arg(long)]
    manifest: PathBuf,
    #[arg(long)]
    predictions: PathBuf,
    #[arg(long)]
    kind: Option<CorruptionKind>,
    #[arg(long)]
    severity: Option<u8>,
    /// Score source images against their original classes.
    #[arg(long)]
    clean: bool,
    /// Also score each severity separately and average the five reports.
    #[arg(long)]
    average_severities: bool,
    #[arg(long)]
    bins: Option<usize>,
    /// Report path; stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Reliability bins as CSV.
    #[arg(long)]
    bins_out: Option<PathBuf>,
}

#[derive(Args)]
struct InjectNoise {
    #[arg(long)]
    labels: PathBuf,
    #[arg(long)]
    ratio: f64,
    #[arg(long)]
    classes: Option<usize>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct LossEval {
    #[arg(long)]
    input: PathBuf,
    #[arg(long, value_enum)]
    loss: Option<LossKind>,
    #[arg(long)]
    gamma: Option<f64>,
    #[arg(long)]
    lambda_mu: Option<f64>,
    #[arg(long)]
    mu_g: Option<f64>,
    #[arg(long, value_delimiter = ',')]
    class_values: Option<Vec<f64>>,
    #[arg(long)]
    absolute: bool,
    #[arg(long)]
    margin: Option<f64>,
    /// Output path; stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
}

fn parse_measure(s: &str) -> Result<VisibilityMeasure, String> {
    match s {
        "l2" => Ok(VisibilityMeasure::L2),
        "ssim" => Ok(VisibilityMeasure::Ssim),
        _ => Err(format!("unknown visibility measure {s:?}; expected l2 or ssim")),
    }
}

fn write_or_print(out: Option<&Path>, text: &str) -> Result<()> {
    match out {
        Some(p) => std::fs::write(p, text).with_context(|| format!("writing {}", p.display())),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn run(cli: Cli) -> Result<ExitCode> {
    let mut cfg = BenchConfig::load_or_default(cli.config.as_deref())?;
    match cli.command {
        Command::FitGmm(a) => {
            let file = GmmFile::fit(&a.annotations, a.classes.unwrap_or(cfg.generate.classes))?;
            file.write(&a.out)?;
            tracing::info!(classes = file.classes, points = file.points, out = %a.out.display(), "wrote mixture");
        }
        Command::Generate(a) => {
            let g = &mut cfg.generate;
            macro_rules! set {
                ($($field:ident),*) => { $(if let Some(v) = a.$field { g.$field = v; })* };
            }
            set!(seed, dataset_id, classes, beta, kappa, visibility);
            if a.resize.is_some() {
                g.resize = a.resize;
            }
            if a.schedule.is_some() {
                g.schedule = a.schedule;
            }
            let labels = match (a.gmm, a.direct_labels) {
                (Some(p), None) => LabelSource::Gmm(p),
                (None, Some(p)) => LabelSource::Direct(p),
                _ => bail!("exactly one of --gmm and --direct-labels is required"),
            };
            let summary = generate(&GenerateRequest {
                images_dir: a.images,
                annotations: a.annotations,
                labels,
                config: cfg.generate,
                out_dir: a.out,
            })?;
            tracing::info!(
                sources = summary.sources,
                records = summary.records,
                manifest = %summary.manifest_path.display(),
                "generation finished"
            );
            if !summary.is_complete() {
                eprintln!("{} source image(s) skipped:", summary.skipped.len());
                for s in &summary.skipped {
                    eprintln!("  {}: {}", s.image_id, s.error);
                }
                return Ok(ExitCode::from(2));
            }
        }
        Command::Evaluate(a) => {
            let (manifest, hash) = DatasetManifest::read(&a.manifest)?;
            let predictions = PredictionFile::read(&a.predictions)?;
            let filter = RecordFilter {
                kind: a.kind,
                severity: a.severity,
                clean: a.clean,
            };
            let bins = a.bins.unwrap_or(cfg.evaluate.bins);
            let out = evaluate(&manifest, &hash, &predictions, &filter, bins, a.average_severities)?;
            write_or_print(a.out.as_deref(), &out.to_json())?;
            if let Some(p) = &a.bins_out {
                write_or_print(Some(p), &bins_csv(&out.report.reliability))?;
            }
        }
        Command::InjectNoise(a) => {
            let classes = a.classes.unwrap_or(cfg.generate.classes);
            let side = inject_noise(&a.labels, a.ratio, classes, a.seed, &a.out)?;
            tracing::info!(
                flipped = side.flips.len(),
                total = side.total,
                sidecar = %sidecar_path(&a.out).display(),
                "wrote noisy labels"
            );
        }
        Command::LossEval(a) => {
            let l = &mut cfg.loss;
            if let Some(v) = a.loss {
                l.loss = v;
            }
            if let Some(v) = a.gamma {
                l.gamma = v;
            }
            if let Some(v) = a.lambda_mu {
                l.lambda_mu = v;
            }
            if let Some(v) = a.margin {
                l.margin = v;
            }
            if a.mu_g.is_some() {
                l.mu_g = a.mu_g;
            }
            if a.class_values.is_some() {
                l.class_values = a.class_values;
            }
            l.absolute |= a.absolute;
            write_or_print(a.out.as_deref(), &loss_eval(&a.input, &cfg.loss)?)?;
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    tracing_subscriber::fmt()
        .with_env_filter(EnvFilter::try_from_default_env().unwrap_or_else(|_| EnvFilter::new("info")))
        .with_writer(std::io::stderr)
        .with_ansi(std::io::stderr().is_terminal())
        .init();
    match run(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
