use std::fs;

use softaffect_bench::config::{LossConfig, LossKind};
use softaffect_bench::losseval::loss_eval;
use softaffect_bench::noise::{inject_noise, sidecar_path, NoiseSidecar};

fn label_file(dir: &std::path::Path, n: usize) -> std::path::PathBuf {
    let mut s = String::from("image_id,class,extra\n");
    for i in 0..n {
        s += &format!("img{i},{},keep{i}\n", i % 8);
    }
    let p = dir.join("labels.csv");
    fs::write(&p, s).unwrap();
    p
}

#[test]
fn ten_percent_of_54000_flips_5400() {
    let dir = tempfile::tempdir().unwrap();
    let labels = label_file(dir.path(), 54_000);
    let out = dir.path().join("noisy.csv");
    let side = inject_noise(&labels, 0.1, 8, 11, &out).unwrap();
    assert_eq!(side.flips.len(), 5_400);
    assert_eq!(side.total, 54_000);

    let noisy = fs::read_to_string(&out).unwrap();
    let rows: Vec<Vec<&str>> = noisy.lines().skip(1).map(|l| l.split(',').collect()).collect();
    let changed = rows.iter().enumerate().filter(|(i, r)| r[1] != (i % 8).to_string()).count();
    assert_eq!(changed, 5_400);
    for f in &side.flips {
        assert_ne!(f.from, f.to);
        assert_eq!(rows[f.row][1], f.to.to_string());
        assert_eq!(rows[f.row][2], format!("keep{}", f.row));
        assert_eq!(f.image_id.as_deref(), Some(format!("img{}", f.row).as_str()));
    }
    let on_disk: NoiseSidecar = serde_json::from_str(&fs::read_to_string(sidecar_path(&out)).unwrap()).unwrap();
    assert_eq!(on_disk, side);
}

#[test]
fn noise_is_deterministic_under_seed() {
    let dir = tempfile::tempdir().unwrap();
    let labels = label_file(dir.path(), 500);
    let (a, b, c) = (dir.path().join("a.csv"), dir.path().join("b.csv"), dir.path().join("c.csv"));
    inject_noise(&labels, 0.3, 8, 5, &a).unwrap();
    inject_noise(&labels, 0.3, 8, 5, &b).unwrap();
    inject_noise(&labels, 0.3, 8, 6, &c).unwrap();
    assert_eq!(fs::read(&a).unwrap(), fs::read(&b).unwrap());
    assert_eq!(fs::read(sidecar_path(&a)).unwrap(), fs::read(sidecar_path(&b)).unwrap().as_slice());
    assert_ne!(fs::read(&a).unwrap(), fs::read(&c).unwrap());
    assert!(inject_noise(&labels, 1.5, 8, 5, &a).is_err());
}

#[test]
fn loss_eval_rows_and_mean() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("rows.csv");
    fs::write(&p, "id,z_0,z_1,z_2,y_0,y_1,y_2\na,12,0,5,1,0,0\nb,0,0,0,0,1,0\n").unwrap();
    let cfg = LossConfig {
        loss: LossKind::Mbls,
        ..LossConfig::default()
    };
    let out = loss_eval(&p, &cfg).unwrap();
    let lines: Vec<&str> = out.lines().collect();
    assert_eq!(lines[0], "id,value,g_0,g_1,g_2");
    assert_eq!(lines[1], "a,2,1,-1,0");
    assert_eq!(lines[2], "b,0,0,0,0");
    assert_eq!(lines[3], "mean,1,0.5,-0.5,0");

    let focal = LossConfig {
        loss: LossKind::Focal,
        gamma: 0.0,
        ..LossConfig::default()
    };
    let out = loss_eval(&p, &focal).unwrap();
    let b: f64 = out.lines().nth(2).unwrap().split(',').nth(1).unwrap().parse().unwrap();
    assert!((b - 3f64.ln()).abs() < 1e-12);
}

#[test]
fn loss_eval_rejects_bad_rows() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("rows.csv");
    fs::write(&p, "id,z_0,z_1,y_0,y_1\na,0,0,0.7,0.7\n").unwrap();
    assert!(loss_eval(&p, &LossConfig::default()).is_err());
    fs::write(&p, "id,z_0,z_1,y_0\n").unwrap();
    assert!(loss_eval(&p, &LossConfig::default()).is_err());
}
