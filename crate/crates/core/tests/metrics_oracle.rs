mod common;

use common::{oracle_auc, oracle_confusion};
use rads_core::harness::{bootstrap_ci, metrics};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[test]
fn metrics_match_confusion_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    for _ in 0..2000 {
        let n = rng.random_range(1..60);
        let labels: Vec<usize> = (0..n).map(|_| rng.random_range(0..2)).collect();
        let preds: Vec<usize> = (0..n).map(|_| rng.random_range(0..2)).collect();
        // coarse scores create ties
        let scores: Vec<f64> = (0..n).map(|_| rng.random_range(0..8) as f64 / 7.0).collect();
        let m = metrics(&preds, &scores, &labels).unwrap();
        let (p, r, f1, acc) = oracle_confusion(&preds, &labels);
        assert!((m.precision - p).abs() < 1e-12);
        assert!((m.recall - r).abs() < 1e-12);
        assert!((m.f1 - f1).abs() < 1e-12);
        assert!((m.accuracy - acc).abs() < 1e-12);
        let both = labels.contains(&0) && labels.contains(&1);
        match m.roc_auc {
            Some(auc) => assert!(both && (auc - oracle_auc(&scores, &labels)).abs() < 1e-12),
            None => assert!(!both),
        }
    }
}

#[test]
fn bootstrap_interval_brackets_resamples() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let sy: Vec<usize> = (0..50).map(|_| rng.random_range(0..2)).collect();
    let sp: Vec<usize> = sy
        .iter()
        .map(|&y| if rng.random_bool(0.85) { y } else { 1 - y })
        .collect();
    let ty: Vec<usize> = (0..40).map(|_| rng.random_range(0..2)).collect();
    let tp: Vec<usize> = ty
        .iter()
        .map(|&y| if rng.random_bool(0.6) { y } else { 1 - y })
        .collect();
    let a = bootstrap_ci((&sp, &sy), (&tp, &ty), 1000, 11).unwrap();
    assert_eq!(a, bootstrap_ci((&sp, &sy), (&tp, &ty), 1000, 11).unwrap());
    assert!(a.ci_low <= a.ci_high);
    assert!(a.ci_low >= -1.0 && a.ci_high <= 1.0);
    assert!(a.ci_low <= a.delta_f1 + 0.3 && a.delta_f1 - 0.3 <= a.ci_high);
}
