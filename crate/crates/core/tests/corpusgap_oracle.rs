mod common;

use std::collections::BTreeMap;

use common::{oracle_counts, oracle_coverage, oracle_jaccard, oracle_kl, random_docs};
use rads_core::corpusgap::{compare, coverage, extract_vocab, jaccard, kl_divergence, KlConfig, NgramVocab};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const WORDS: [&str; 12] = [
    "pain", "chest", "Fever", "xxxx", "ct", "scan", "no", "acute", "fracture", "12", "mg", "LEFT",
];

#[test]
fn corpus_gap_matches_formula_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let cfg = KlConfig::default();
    for _ in 0..200 {
        let (na, nb) = (rng.random_range(1..6), rng.random_range(1..6));
        let (hi, lo) = (rng.random_range(3..12), rng.random_range(0..6));
        let a = random_docs(&mut rng, na, &WORDS[..hi]);
        let b = random_docs(&mut rng, nb, &WORDS[lo..]);
        let (oa, ob) = (oracle_counts(&a), oracle_counts(&b));
        let (va, vb) = (extract_vocab(&a, 2).unwrap(), extract_vocab(&b, 2).unwrap());
        assert_eq!(va.counts, oa);
        assert!((coverage(&vb, &va).unwrap() - oracle_coverage(&ob, &oa)).abs() < 1e-12);
        assert!((jaccard(&va, &vb).unwrap() - oracle_jaccard(&oa, &ob)).abs() < 1e-12);
        assert!((kl_divergence(&va, &vb, &cfg).unwrap() - oracle_kl(&oa, &ob, 1e-9)).abs() < 1e-12);
        let report = compare(&a, &b, 2, &cfg, 5).unwrap();
        assert!((report.coverage_ab - oracle_coverage(&ob, &oa)).abs() < 1e-12);
        assert!((report.kl_ba - oracle_kl(&ob, &oa, 1e-9)).abs() < 1e-12);
    }
}

#[test]
fn kl_is_non_negative_on_random_tables() {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let cfg = KlConfig::default();
    for _ in 0..1000 {
        let table = |rng: &mut ChaCha8Rng| NgramVocab {
            corpus_id: String::new(),
            counts: (0..rng.random_range(1..15))
                .map(|i| (format!("t{}", i * rng.random_range(1..3)), rng.random_range(1..50)))
                .collect::<BTreeMap<_, _>>(),
        };
        let (p, q) = (table(&mut rng), table(&mut rng));
        assert!(kl_divergence(&p, &q, &cfg).unwrap() >= 0.0);
    }
}

#[test]
fn jaccard_is_symmetric_and_order_free() {
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    for _ in 0..100 {
        let mut a = random_docs(&mut rng, 4, &WORDS);
        let b = random_docs(&mut rng, 4, &WORDS);
        let j = compare(&a, &b, 2, &KlConfig::default(), 3).unwrap().jaccard;
        a.reverse();
        let swapped = compare(&b, &a, 2, &KlConfig::default(), 3).unwrap();
        assert!((j - swapped.jaccard).abs() < 1e-15);
    }
}
