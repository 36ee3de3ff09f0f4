use super::*;
use alloc::vec;
use proptest::prelude::*;
use rand_chacha::ChaCha8Rng;
use rand_core::{Rng, SeedableRng};

fn close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol
}

/// Two-class rows whose top-1 confidence is `c` on class 0; correct iff the
/// target is 0.
fn binary_set(conf: &[f64], correct: &[bool]) -> PredictionSet {
    let probs = conf.iter().flat_map(|&c| [c, 1.0 - c]).collect();
    let targets = correct.iter().map(|&ok| usize::from(!ok)).collect();
    PredictionSet::new(2, probs, Targets::Hard(targets), vec![]).unwrap()
}

fn four_sample() -> PredictionSet {
    binary_set(&[0.9, 0.8, 0.6, 0.55], &[true, false, true, false])
}

#[test]
fn ece_worked_example() {
    let (e, bins) = ece(&four_sample(), 2).unwrap();
    assert!(close(e, 0.2125, 1e-12), "{e}");
    assert_eq!(bins.bins[0].count, 0);
    assert_eq!(bins.bins[1].count, 4);
    assert!(close(bins.bins[1].confidence, 0.7125, 1e-12));
    assert!(close(bins.bins[1].accuracy, 0.5, 1e-12));
}

#[test]
fn ada_ece_worked_example() {
    let p = four_sample();
    let bins = ada_ece_bins(&p, 2).unwrap();
    assert!(close(bins.bins[0].confidence, 0.575, 1e-12));
    assert!(close(bins.bins[1].confidence, 0.85, 1e-12));
    assert!(close(ada_ece(&p, 2).unwrap(), 0.2125, 1e-12));
}

#[test]
fn ada_ece_needs_enough_samples() {
    assert!(ada_ece(&four_sample(), 5).is_err());
    assert!(ece(&four_sample(), 0).is_err());
    assert!(cece(&four_sample(), 0).is_err());
}

#[test]
fn kse_worked_example_matches_direct_cumulatives() {
    // sorted ascending: 0.55(0) 0.6(1) 0.8(0) 0.9(1)
    let conf = [0.55, 0.6, 0.8, 0.9];
    let hit = [0.0, 1.0, 0.0, 1.0];
    let (mut a, mut b, mut best) = (0.0f64, 0.0f64, 0.0f64);
    for i in 0..4 {
        a += conf[i] / 4.0;
        b += hit[i] / 4.0;
        best = best.max((a - b).abs());
    }
    assert!(close(kse(&four_sample()), best, 1e-15));
}

#[test]
fn kse_extremes() {
    let right = binary_set(&[1.0; 6], &[true; 6]);
    let wrong = binary_set(&[1.0; 6], &[false; 6]);
    assert_eq!(kse(&right), 0.0);
    assert!(close(kse(&wrong), 1.0, 1e-12));
}

#[test]
fn macro_f1_worked_example() {
    // truth 0,0,1,1 ; predicted 0,0,0,1
    let probs = vec![0.9, 0.1, 0.8, 0.2, 0.6, 0.4, 0.3, 0.7];
    let p = PredictionSet::new(2, probs, Targets::Hard(vec![0, 0, 1, 1]), vec![]).unwrap();
    assert_eq!(confusion_matrix(&p), vec![2, 0, 1, 1]);
    assert!(close(macro_f1(&p), (0.8 + 2.0 / 3.0) / 2.0, 1e-12));
    assert!(close(accuracy(&p), 0.75, 1e-12));
}

#[test]
fn absent_class_lowers_macro_f1() {
    let probs = vec![1.0, 0.0, 0.0, 0.0, 1.0, 0.0];
    let p = PredictionSet::new(3, probs, Targets::Hard(vec![0, 1]), vec![]).unwrap();
    assert!(close(macro_f1(&p), 2.0 / 3.0, 1e-12));
    assert_eq!(accuracy(&p), 1.0);
}

#[test]
fn accuracy_ties_go_to_the_lowest_index() {
    let p = PredictionSet::new(2, vec![0.5, 0.5], Targets::Hard(vec![0]), vec![]).unwrap();
    assert_eq!(accuracy(&p), 1.0);
    let q = PredictionSet::new(2, vec![0.5, 0.5], Targets::Hard(vec![1]), vec![]).unwrap();
    assert_eq!(accuracy(&q), 0.0);
}

#[test]
fn nll_examples() {
    let uniform = PredictionSet::new(8, vec![0.125; 16], Targets::Hard(vec![3, 7]), vec![]).unwrap();
    assert!(close(nll(&uniform), libm::log(8.0), 1e-12));

    let soft = PredictionSet::new(2, vec![0.8, 0.2], Targets::Soft(vec![0.5, 0.5]), vec![]).unwrap();
    let want = -(0.5 * libm::log(0.8) + 0.5 * libm::log(0.2));
    assert!(close(nll(&soft), want, 1e-12));
    assert!(close(nll(&soft), 0.9163, 1e-4));

    let zero = PredictionSet::new(2, vec![1.0, 0.0], Targets::Hard(vec![1]), vec![]).unwrap();
    assert!(close(nll(&zero), -libm::log(LOG_FLOOR), 1e-9));
}

#[test]
fn soft_targets_use_argmax_for_correctness() {
    let p = PredictionSet::new(3, vec![0.2, 0.7, 0.1], Targets::Soft(vec![0.3, 0.4, 0.3]), vec![])
        .unwrap();
    assert_eq!(accuracy(&p), 1.0);
    assert_eq!(p.hard_targets(), vec![1]);
}

#[test]
fn cece_examples() {
    let onehot = PredictionSet::new(
        3,
        vec![1.0, 0.0, 0.0, 0.0, 0.0, 1.0],
        Targets::Hard(vec![0, 2]),
        vec![],
    )
    .unwrap();
    assert_eq!(cece(&onehot, 10).unwrap(), 0.0);

    let probs = [0.7, 0.3].repeat(10);
    let targets = (0..10).map(|i| usize::from(i >= 7)).collect();
    let p = PredictionSet::new(2, probs, Targets::Hard(targets), vec![]).unwrap();
    assert!(close(cece(&p, 1).unwrap(), 0.0, 1e-12));
}

#[test]
fn perfect_predictions_report_zero_error() {
    let probs = vec![1.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 1.0];
    let p = PredictionSet::new(3, probs, Targets::Hard(vec![0, 1, 2]), vec![]).unwrap();
    let r = evaluate(&p, &EvalConfig::default(), EvalMetadata::default()).unwrap();
    assert_eq!((r.accuracy, r.macro_f1), (1.0, 1.0));
    assert!(r.nll.abs() < 1e-15);
    assert_eq!((r.ece, r.ada_ece, r.cece, r.kse), (0.0, 0.0, 0.0, 0.0));
    assert_eq!(r.reliability.total(), 3);
}

#[test]
fn rejects_malformed_sets() {
    assert!(PredictionSet::new(2, vec![0.5, 0.6], Targets::Hard(vec![0]), vec![]).is_err());
    assert!(PredictionSet::new(2, vec![-0.1, 1.1], Targets::Hard(vec![0]), vec![]).is_err());
    assert!(PredictionSet::new(2, vec![0.5, 0.5], Targets::Hard(vec![2]), vec![]).is_err());
    assert!(PredictionSet::new(2, vec![], Targets::Hard(vec![]), vec![]).is_err());
    assert!(PredictionSet::new(2, vec![0.5, 0.5], Targets::Hard(vec![0]), vec!["a".into(), "b".into()])
        .is_err());
}

#[test]
fn calibrated_bernoulli_data_has_small_ece() {
    let mut rng = ChaCha8Rng::seed_from_u64(100_000);
    let unit = |r: &mut ChaCha8Rng| (r.next_u64() >> 11) as f64 / (1u64 << 53) as f64;
    let n = 100_000;
    let mut conf = Vec::with_capacity(n);
    let mut correct = Vec::with_capacity(n);
    for _ in 0..n {
        let c = 0.5 + 0.5 * unit(&mut rng);
        conf.push(c);
        correct.push(unit(&mut rng) < c);
    }
    let p = binary_set(&conf, &correct);
    let (e, _) = ece(&p, 15).unwrap();
    assert!(e < 0.02, "{e}");
    assert!(kse(&p) < 0.02);
}

// Brute-force oracles: every bin is scanned against every sample using
// interval membership rather than an index computation.

fn top1(row: &[f64]) -> (usize, f64) {
    let mut best = 0;
    for k in 1..row.len() {
        if row[k] > row[best] {
            best = k;
        }
    }
    (best, row[best])
}

fn in_width_bin(v: f64, b: usize, bins: usize) -> bool {
    let lo = b as f64 / bins as f64;
    let hi = (b + 1) as f64 / bins as f64;
    if b == 0 {
        v <= hi
    } else {
        v > lo && v <= hi
    }
}

fn oracle_ece(p: &PredictionSet, bins: usize) -> f64 {
    let t = p.hard_targets();
    let n = p.len() as f64;
    (0..bins)
        .map(|b| {
            let members: Vec<usize> =
                (0..p.len()).filter(|&i| in_width_bin(top1(p.row(i)).1, b, bins)).collect();
            if members.is_empty() {
                return 0.0;
            }
            let m = members.len() as f64;
            let conf: f64 = members.iter().map(|&i| top1(p.row(i)).1).sum::<f64>() / m;
            let acc = members.iter().filter(|&&i| top1(p.row(i)).0 == t[i]).count() as f64 / m;
            m / n * (acc - conf).abs()
        })
        .sum()
}

fn oracle_ada(p: &PredictionSet, bins: usize) -> f64 {
    let t = p.hard_targets();
    let mut rows: Vec<(f64, f64)> = (0..p.len())
        .map(|i| {
            let (k, c) = top1(p.row(i));
            (c, if k == t[i] { 1.0 } else { 0.0 })
        })
        .collect();
    rows.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let n = rows.len();
    let mut total = 0.0;
    let mut start = 0;
    for b in 0..bins {
        let size = n / bins + if b < n % bins { 1 } else { 0 };
        let chunk = &rows[start..start + size];
        let conf = chunk.iter().map(|r| r.0).sum::<f64>() / size as f64;
        let acc = chunk.iter().map(|r| r.1).sum::<f64>() / size as f64;
        total += size as f64 / n as f64 * (acc - conf).abs();
        start += size;
    }
    total
}

fn oracle_cece(p: &PredictionSet, bins: usize) -> f64 {
    let t = p.hard_targets();
    let n = p.len() as f64;
    let k = p.classes();
    let mut total = 0.0;
    for class in 0..k {
        for b in 0..bins {
            let members: Vec<usize> =
                (0..p.len()).filter(|&i| in_width_bin(p.row(i)[class], b, bins)).collect();
            if members.is_empty() {
                continue;
            }
            let m = members.len() as f64;
            let freq = members.iter().filter(|&&i| t[i] == class).count() as f64 / m;
            let conf = members.iter().map(|&i| p.row(i)[class]).sum::<f64>() / m;
            total += m / n * (freq - conf).abs();
        }
    }
    total / k as f64
}

fn oracle_kse(p: &PredictionSet) -> f64 {
    // compare the two empirical cumulatives at every distinct confidence
    let t = p.hard_targets();
    let n = p.len() as f64;
    let rows: Vec<(f64, f64)> = (0..p.len())
        .map(|i| {
            let (k, c) = top1(p.row(i));
            (c, if k == t[i] { 1.0 } else { 0.0 })
        })
        .collect();
    rows.iter()
        .map(|&(level, _)| {
            let below = rows.iter().filter(|r| r.0 <= level);
            let (c, a) = below.fold((0.0, 0.0), |s, r| (s.0 + r.0, s.1 + r.1));
            ((c - a) / n).abs()
        })
        .fold(0.0, f64::max)
}

/// Rows are drawn from a coarse grid so that ties and bin-edge values occur.
fn arb_set() -> impl Strategy<Value = PredictionSet> {
    (1usize..=5, 1usize..=50).prop_flat_map(|(k, n)| {
        (
            proptest::collection::vec(proptest::collection::vec(0u32..=4, k), n),
            proptest::collection::vec(0usize..k, n),
        )
            .prop_map(move |(weights, targets)| {
                let mut probs = Vec::with_capacity(n * k);
                for w in &weights {
                    let total: u32 = w.iter().sum();
                    if total == 0 {
                        probs.extend(core::iter::repeat_n(1.0 / k as f64, k));
                    } else {
                        probs.extend(w.iter().map(|&x| f64::from(x) / f64::from(total)));
                    }
                }
                PredictionSet::new(k, probs, Targets::Hard(targets), vec![]).unwrap()
            })
    })
}

fn reversed(p: &PredictionSet) -> PredictionSet {
    let k = p.classes();
    let probs = (0..p.len()).rev().flat_map(|i| p.row(i).to_vec()).collect();
    let mut t = p.hard_targets();
    t.reverse();
    PredictionSet::new(k, probs, Targets::Hard(t), vec![]).unwrap()
}

proptest! {
    #[test]
    fn binned_metrics_match_oracles(p in arb_set(), bins in 1usize..=5) {
        let (e, rb) = ece(&p, bins).unwrap();
        prop_assert!(close(e, oracle_ece(&p, bins), 1e-12));
        prop_assert_eq!(rb.total(), p.len());
        prop_assert!(close(cece(&p, bins).unwrap(), oracle_cece(&p, bins), 1e-12));
        prop_assert!(close(kse(&p), oracle_kse(&p), 1e-12));
        if p.len() >= bins {
            let ab = ada_ece_bins(&p, bins).unwrap();
            prop_assert!(close(ab.weighted_gap(), oracle_ada(&p, bins), 1e-12));
            prop_assert_eq!(ab.total(), p.len());
            let sizes: Vec<usize> = ab.bins.iter().map(|b| b.count).collect();
            prop_assert!(sizes.iter().max().unwrap() - sizes.iter().min().unwrap() <= 1);
        }
    }

    #[test]
    fn metrics_stay_in_range(p in arb_set()) {
        let r = evaluate(&p, &EvalConfig::default(), EvalMetadata::default()).unwrap();
        for v in [r.ece, r.ada_ece, r.cece, r.kse, r.kse_mean, r.accuracy, r.macro_f1] {
            prop_assert!((0.0..=1.0).contains(&v), "{v}");
        }
        prop_assert!(r.nll >= 0.0 && r.nll.is_finite());
        prop_assert!(r.kse_mean <= r.kse + 1e-15);
        for b in &r.reliability.bins {
            prop_assert!((0.0..=1.0).contains(&b.confidence));
            prop_assert!((0.0..=1.0).contains(&b.accuracy));
        }
    }

    #[test]
    fn metrics_ignore_sample_order(p in arb_set()) {
        let cfg = EvalConfig { bins: 4 };
        let a = evaluate(&p, &cfg, EvalMetadata::default()).unwrap();
        let b = evaluate(&reversed(&p), &cfg, EvalMetadata::default()).unwrap();
        for (x, y) in [
            (a.accuracy, b.accuracy), (a.macro_f1, b.macro_f1), (a.nll, b.nll),
            (a.ece, b.ece), (a.ada_ece, b.ada_ece), (a.cece, b.cece),
            (a.kse, b.kse), (a.kse_mean, b.kse_mean),
        ] {
            prop_assert!(close(x, y, 1e-12), "{x} vs {y}");
        }
    }

    #[test]
    fn single_bin_identities(p in arb_set()) {
        let (e1, _) = ece(&p, 1).unwrap();
        let s = p.summary();
        let mean_conf = s.confidence.iter().sum::<f64>() / p.len() as f64;
        prop_assert!(close(e1, (mean_conf - accuracy(&p)).abs(), 1e-12));
        prop_assert!(close(ada_ece(&p, 1).unwrap(), e1, 1e-12));
    }
}
