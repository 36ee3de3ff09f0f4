//! Fixtures shared by the integration and acceptance tests.
#![allow(dead_code)]

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use rand_chacha::ChaCha8Rng;
use rand_core::{Rng, SeedableRng};
use softaffect_bench::config::GenerateConfig;
use softaffect_bench::generate::{GenerateRequest, LabelSource};
use softaffect_bench::gmmfile::GmmFile;
use softaffect_bench::imageio::write_png;
use softaffect_core::synth::synthetic_face;
use softaffect_core::ImageTensor;

pub const CLASSES: usize = 8;
pub const SIDE: usize = 64;

/// Rough VA centres of the eight expression classes.
pub const CENTRES: [[f64; 2]; CLASSES] = [
    [0.0, 0.0],
    [0.7, 0.3],
    [-0.6, -0.3],
    [0.2, 0.8],
    [-0.3, 0.7],
    [-0.6, 0.3],
    [-0.5, 0.6],
    [-0.4, 0.1],
];

pub fn uniform(rng: &mut ChaCha8Rng) -> f64 {
    (rng.next_u64() >> 11) as f64 / (1u64 << 53) as f64
}

pub fn image_id(i: usize) -> String {
    format!("face_{i:03}")
}

/// `per_class` annotated points per class; the first `CLASSES * per_class`
/// ids cycle through the classes.
pub fn annotation_csv(per_class: usize, seed: u64) -> String {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut s = String::from("image_id,class,valence,arousal\n");
    for i in 0..per_class * CLASSES {
        let c = i % CLASSES;
        let v = (CENTRES[c][0] + 0.3 * (uniform(&mut rng) - 0.5)).clamp(-1.0, 1.0);
        let a = (CENTRES[c][1] + 0.3 * (uniform(&mut rng) - 0.5)).clamp(-1.0, 1.0);
        writeln!(s, "{},{c},{v},{a}", image_id(i)).unwrap();
    }
    s
}

pub struct Fixture {
    pub root: tempfile::TempDir,
    pub images: PathBuf,
    pub annotations: PathBuf,
    pub gmm: PathBuf,
}

impl Fixture {
    /// `count` synthetic faces plus annotations and a fitted mixture.
    pub fn new(count: usize) -> Self {
        let root = tempfile::tempdir().unwrap();
        let images = root.path().join("images");
        fs::create_dir_all(&images).unwrap();
        for i in 0..count {
            let face = synthetic_face(1000 + i as u64, SIDE, SIDE);
            write_png(&images.join(format!("{}.png", image_id(i))), &face).unwrap();
        }
        let annotations = root.path().join("annotations.csv");
        fs::write(&annotations, annotation_csv(count.div_ceil(CLASSES).max(10), 5)).unwrap();
        let gmm = root.path().join("gmm.json");
        GmmFile::fit(&annotations, CLASSES).unwrap().write(&gmm).unwrap();
        Self {
            root,
            images,
            annotations,
            gmm,
        }
    }

    pub fn path(&self, name: &str) -> PathBuf {
        self.root.path().join(name)
    }

    pub fn request(&self, out: &str, seed: u64) -> GenerateRequest {
        GenerateRequest {
            images_dir: self.images.clone(),
            annotations: Some(self.annotations.clone()),
            labels: LabelSource::Gmm(self.gmm.clone()),
            config: GenerateConfig {
                seed,
                ..GenerateConfig::default()
            },
            out_dir: self.path(out),
        }
    }

    pub fn add_image(&self, name: &str, img: &ImageTensor) {
        write_png(&self.images.join(name), img).unwrap();
    }
}

/// Every file under `dir` with its bytes, sorted by relative path.
pub fn tree(dir: &Path) -> Vec<(PathBuf, Vec<u8>)> {
    let mut out = Vec::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        for e in fs::read_dir(&d).unwrap() {
            let p = e.unwrap().path();
            if p.is_dir() {
                stack.push(p);
            } else {
                out.push((p.strip_prefix(dir).unwrap().to_path_buf(), fs::read(&p).unwrap()));
            }
        }
    }
    out.sort();
    out
}

/// Shannon entropy in nats.
pub fn entropy(p: &[f64]) -> f64 {
    -p.iter().filter(|&&x| x > 0.0).map(|x| x * x.ln()).sum::<f64>()
}
