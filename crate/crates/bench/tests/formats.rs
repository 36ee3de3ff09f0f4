mod common;

use std::fs;
use std::path::Path;

use common::{annotation_csv, CLASSES};
use softaffect_bench::config::{schedule_to_toml, BenchConfig, LoadedSchedule};
use softaffect_bench::gmmfile::GmmFile;
use softaffect_bench::BenchError;
use softaffect_core::corrupt::Schedule;

fn shipped(name: &str) -> std::path::PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("config").join(name)
}

#[test]
fn shipped_schedule_equals_the_builtin_table() {
    let loaded = LoadedSchedule::load(Some(&shipped("schedule.toml"))).unwrap();
    assert_eq!(&loaded.schedule, Schedule::builtin());
    assert_eq!(loaded.hash, LoadedSchedule::load(None).unwrap().hash);
}

#[test]
fn schedule_hash_tracks_content_not_layout() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("s.toml");
    fs::write(&p, schedule_to_toml(Schedule::builtin())).unwrap();
    let a = LoadedSchedule::load(Some(&p)).unwrap();
    assert_eq!(a.hash, LoadedSchedule::load(None).unwrap().hash);

    let text = fs::read_to_string(shipped("schedule.toml")).unwrap();
    fs::write(&p, text.replacen("sigma = 0.38", "sigma = 0.39", 1)).unwrap();
    assert_ne!(LoadedSchedule::load(Some(&p)).unwrap().hash, a.hash);
}

#[test]
fn non_monotone_schedule_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("s.toml");
    let text = fs::read_to_string(shipped("schedule.toml")).unwrap();
    fs::write(&p, text.replacen("sigma = 0.38", "sigma = 0.01", 1)).unwrap();
    assert!(LoadedSchedule::load(Some(&p)).is_err());
}

#[test]
fn example_config_matches_defaults() {
    let cfg = BenchConfig::load(&shipped("default.toml")).unwrap();
    let mut expected = BenchConfig::default();
    expected.generate.schedule = Some(shipped("schedule.toml"));
    assert_eq!(cfg, expected);
}

#[test]
fn unknown_config_keys_are_errors() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("c.toml");
    fs::write(&p, "[generate]\nbetta = 0.3\n").unwrap();
    assert!(BenchConfig::load(&p).is_err());
}

#[test]
fn gmm_file_round_trips() {
    let dir = tempfile::tempdir().unwrap();
    let ann = dir.path().join("a.csv");
    fs::write(&ann, annotation_csv(40, 9)).unwrap();
    let fit = GmmFile::fit(&ann, CLASSES).unwrap();
    let out = dir.path().join("g.json");
    fit.write(&out).unwrap();
    let (back, hash) = GmmFile::read(&out).unwrap();
    assert_eq!(back, fit);
    assert_eq!(hash.len(), 64);
    let priors: f64 = back.components.components().iter().map(|c| c.prior).sum();
    assert!((priors - 1.0).abs() < 1e-9);
    // same inputs, same bytes
    let again = dir.path().join("g2.json");
    GmmFile::fit(&ann, CLASSES).unwrap().write(&again).unwrap();
    assert_eq!(fs::read(&out).unwrap(), fs::read(&again).unwrap());
}

#[test]
fn three_class_fit_round_trips() {
    let dir = tempfile::tempdir().unwrap();
    let ann = dir.path().join("a.csv");
    let mut s = String::from("image_id,class,valence,arousal\n");
    for i in 0..30 {
        let c = i % 3;
        s += &format!("x{i},{c},{},{}\n", c as f64 * 0.4 - 0.4 + (i as f64) * 0.003, 0.1 * c as f64 - (i % 5) as f64 * 0.01);
    }
    fs::write(&ann, s).unwrap();
    let fit = GmmFile::fit(&ann, 3).unwrap();
    let out = dir.path().join("g.json");
    fit.write(&out).unwrap();
    assert_eq!(GmmFile::read(&out).unwrap().0.components, fit.components);
}

#[test]
fn malformed_annotation_reports_its_line() {
    let dir = tempfile::tempdir().unwrap();
    let ann = dir.path().join("a.csv");
    fs::write(&ann, "image_id,class,valence,arousal\na,0,0.1,0.2\nb,1,oops,0.2\n").unwrap();
    match GmmFile::fit(&ann, 2) {
        Err(BenchError::Parse { line, .. }) => assert_eq!(line, 3),
        other => panic!("expected a parse error, got {other:?}"),
    }
    fs::write(&ann, "image_id,class,valence,arousal\na,0,1.5,0.2\n").unwrap();
    assert!(matches!(GmmFile::fit(&ann, 2), Err(BenchError::Parse { line: 2, .. })));
}

#[test]
fn class_without_points_is_insufficient_data() {
    let dir = tempfile::tempdir().unwrap();
    let ann = dir.path().join("a.csv");
    let mut s = String::from("image_id,class,valence,arousal\n");
    for i in 0..9 {
        s += &format!("x{i},{},{},0.0\n", i % 2, i as f64 * 0.05);
    }
    fs::write(&ann, s).unwrap();
    let err = GmmFile::fit(&ann, 3).unwrap_err();
    assert!(matches!(err, BenchError::Core(softaffect_core::Error::InsufficientData { .. })), "{err}");
}

#[test]
fn tampered_gmm_file_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let ann = dir.path().join("a.csv");
    fs::write(&ann, annotation_csv(10, 1)).unwrap();
    let out = dir.path().join("g.json");
    GmmFile::fit(&ann, CLASSES).unwrap().write(&out).unwrap();
    let text = fs::read_to_string(&out).unwrap().replacen("\"classes\": 8", "\"classes\": 7", 1);
    fs::write(&out, text).unwrap();
    assert!(GmmFile::read(&out).is_err());
}
