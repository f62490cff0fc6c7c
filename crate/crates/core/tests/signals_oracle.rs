mod common;

use common::{oracle_signals, random_pool, to_score_pool};
use proptest::prelude::*;
use rads_core::signals::{build_signals, entropies, estimate_priors};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[test]
fn signals_match_oracle_on_random_pools() {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    for _ in 0..200 {
        let n = rng.random_range(1..=50);
        let k = rng.random_range(1..=10);
        let classes = if rng.random_bool(0.8) {
            2
        } else {
            rng.random_range(3..=4)
        };
        let raw = random_pool(&mut rng, n, k, classes);
        let records = build_signals(&to_score_pool(&raw)).unwrap();
        let (oracle, pi_plus) = oracle_signals(&raw);
        for (r, o) in records.iter().zip(&oracle) {
            for (a, b) in r.p_bar.iter().zip(&o.p_bar) {
                assert!((a - b).abs() < 1e-9);
            }
            assert!((r.pe - o.pe).abs() < 1e-9, "pe {} vs {}", r.pe, o.pe);
            assert!((r.ee - o.ee).abs() < 1e-9);
            assert!((r.mi - o.mi).abs() < 1e-9);
            assert!((r.mi_norm - o.mi_norm).abs() < 1e-9);
            assert_eq!(r.pseudo_label, o.pseudo_label);
        }
        let prior = estimate_priors(&records).unwrap();
        assert!((prior.pi_plus - pi_plus).abs() < 1e-9);
    }
}

#[test]
fn identical_rows_have_zero_mi() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for _ in 0..1000 {
        let p = rng.random::<f64>();
        let k = rng.random_range(1..=10);
        let e = entropies(&vec![vec![p, 1.0 - p]; k]).unwrap();
        assert_eq!(e.mi, 0.0);
    }
}

#[test]
fn reordering_pool_permutes_records() {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let raw = random_pool(&mut rng, 30, 6, 2);
    let mut rev = raw.clone();
    rev.reverse();
    let a = build_signals(&to_score_pool(&raw)).unwrap();
    let mut b = build_signals(&to_score_pool(&rev)).unwrap();
    b.reverse();
    assert_eq!(a, b);
}

proptest! {
    #[test]
    fn mi_bounded_by_pe_and_ln2(seed in any::<u64>(), k in 1usize..=10) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let raw = random_pool(&mut rng, 1, k, 2);
        let e = entropies(&raw[0].1).unwrap();
        prop_assert!(e.mi >= 0.0);
        prop_assert!(e.mi <= e.pe + 1e-15);
        prop_assert!(e.pe <= std::f64::consts::LN_2 + 1e-15);
    }
}
