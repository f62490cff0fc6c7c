//! Independent reference implementations written from the textbook
//! definitions, plus random input generators. Nothing here calls the code
//! under test.
#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet};

use rads_core::signals::{ScoreEntry, ScorePool};
use rand::Rng;

pub const CLAMP: f64 = 1e-12;

fn h(p: &[f64]) -> f64 {
    let mut s = 0.0;
    for &x in p {
        if x > 0.0 {
            s -= x * x.max(CLAMP).ln();
        }
    }
    s
}

#[derive(Debug, Clone)]
pub struct OracleSignals {
    pub p_bar: Vec<f64>,
    pub pe: f64,
    pub ee: f64,
    pub mi: f64,
    pub mi_norm: f64,
    pub pseudo_label: usize,
}

pub fn oracle_signals(pool: &[(String, Vec<Vec<f64>>)]) -> (Vec<OracleSignals>, f64) {
    let mut out = Vec::new();
    for (_, rows) in pool {
        let k = rows.len();
        let c = rows[0].len();
        let mut p_bar = vec![0.0; c];
        for r in rows {
            for j in 0..c {
                p_bar[j] += r[j] / k as f64;
            }
        }
        let pe = h(&p_bar);
        let ee = rows.iter().map(|r| h(r)).sum::<f64>() / k as f64;
        let mut label = 0;
        for j in 1..c {
            if p_bar[j] > p_bar[label] {
                label = j;
            }
        }
        out.push(OracleSignals {
            p_bar,
            pe,
            ee,
            mi: (pe - ee).max(0.0),
            mi_norm: 0.0,
            pseudo_label: label,
        });
    }
    let lo = out.iter().map(|s| s.mi).fold(f64::INFINITY, f64::min);
    let hi = out.iter().map(|s| s.mi).fold(f64::NEG_INFINITY, f64::max);
    for s in &mut out {
        s.mi_norm = if hi - lo > 1e-12 { (s.mi - lo) / (hi - lo) } else { 0.0 };
    }
    let pi_plus = out.iter().filter(|s| s.pseudo_label == 1).count() as f64 / out.len() as f64;
    (out, pi_plus)
}

/// Random binary-or-wider pool. Some entries repeat one row K times, some
/// carry near-degenerate probabilities.
pub fn random_pool<R: Rng>(rng: &mut R, n: usize, k: usize, classes: usize) -> Vec<(String, Vec<Vec<f64>>)> {
    (0..n)
        .map(|i| {
            let kind = rng.random_range(0..4);
            let row = |rng: &mut R| {
                let mut r: Vec<f64> = (0..classes)
                    .map(|_| {
                        if kind == 3 {
                            rng.random::<f64>().powi(12)
                        } else {
                            rng.random::<f64>()
                        }
                    })
                    .collect();
                let s: f64 = r.iter().sum();
                if s == 0.0 {
                    r[0] = 1.0;
                } else {
                    r.iter_mut().for_each(|x| *x /= s);
                }
                r
            };
            let rows = if kind == 0 {
                let r = row(rng);
                vec![r; k]
            } else {
                (0..k).map(|_| row(rng)).collect()
            };
            (format!("s{i:03}"), rows)
        })
        .collect()
}

pub fn to_score_pool(pool: &[(String, Vec<Vec<f64>>)]) -> ScorePool {
    ScorePool::new(
        pool.iter()
            .map(|(id, probs)| ScoreEntry {
                id: id.clone(),
                probs: probs.clone(),
            })
            .collect(),
    )
    .expect("generated pool is valid")
}

pub fn oracle_weights(pi_plus: f64, rho: f64, clip_lo: f64) -> (f64, f64) {
    let c = pi_plus.max(clip_lo).min(1.0 - clip_lo);
    (rho / c, (1.0 - rho) / (1.0 - c))
}

pub fn oracle_red(l: &[f64], chosen: &[Vec<f64>]) -> f64 {
    if chosen.is_empty() {
        return 0.0;
    }
    let mut best = f64::MAX;
    for s in chosen {
        let d = l.iter().zip(s).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt();
        best = best.min(d);
    }
    1.0 / (1.0 + best)
}

/// Precision, recall, F1, accuracy from explicit confusion counts.
pub fn oracle_confusion(preds: &[usize], labels: &[usize]) -> (f64, f64, f64, f64) {
    let mut m = [[0usize; 2]; 2];
    for (&p, &y) in preds.iter().zip(labels) {
        m[y][p] += 1;
    }
    let (tn, fp, fn_, tp) = (m[0][0] as f64, m[0][1] as f64, m[1][0] as f64, m[1][1] as f64);
    let precision = if tp + fp > 0.0 { tp / (tp + fp) } else { 0.0 };
    let recall = if tp + fn_ > 0.0 { tp / (tp + fn_) } else { 0.0 };
    let f1 = if tp > 0.0 {
        2.0 * tp / (2.0 * tp + fp + fn_)
    } else {
        0.0
    };
    (precision, recall, f1, (tp + tn) / preds.len() as f64)
}

pub fn oracle_auc(scores: &[f64], labels: &[usize]) -> f64 {
    let (mut num, mut den) = (0.0, 0.0);
    for i in 0..scores.len() {
        for j in 0..scores.len() {
            if labels[i] == 1 && labels[j] == 0 {
                den += 1.0;
                if scores[i] > scores[j] {
                    num += 1.0;
                } else if scores[i] == scores[j] {
                    num += 0.5;
                }
            }
        }
    }
    num / den
}

pub fn oracle_counts(docs: &[String]) -> BTreeMap<String, u64> {
    let mut counts = BTreeMap::new();
    for d in docs {
        let lower = d.to_lowercase();
        let toks: Vec<&str> = lower
            .split(|c: char| !c.is_alphanumeric())
            .filter(|t| !t.is_empty())
            .collect();
        for t in &toks {
            *counts.entry(t.to_string()).or_insert(0) += 1;
        }
        for w in toks.windows(2) {
            *counts.entry(format!("{} {}", w[0], w[1])).or_insert(0) += 1;
        }
    }
    counts
}

pub fn oracle_coverage(target: &BTreeMap<String, u64>, source: &BTreeMap<String, u64>) -> f64 {
    target.keys().filter(|k| source.contains_key(*k)).count() as f64 / target.len() as f64
}

pub fn oracle_jaccard(a: &BTreeMap<String, u64>, b: &BTreeMap<String, u64>) -> f64 {
    let ka: BTreeSet<_> = a.keys().collect();
    let kb: BTreeSet<_> = b.keys().collect();
    ka.intersection(&kb).count() as f64 / ka.union(&kb).count() as f64
}

pub fn oracle_kl(p: &BTreeMap<String, u64>, q: &BTreeMap<String, u64>, eps: f64) -> f64 {
    let vocab: BTreeSet<_> = p.keys().chain(q.keys()).collect();
    let v = vocab.len() as f64;
    let zp = p.values().sum::<u64>() as f64 + eps * v;
    let zq = q.values().sum::<u64>() as f64 + eps * v;
    let mut kl = 0.0;
    for k in vocab {
        let pk = (*p.get(k).unwrap_or(&0) as f64 + eps) / zp;
        let qk = (*q.get(k).unwrap_or(&0) as f64 + eps) / zq;
        kl += pk * (pk.ln() - qk.ln());
    }
    kl
}

pub fn random_docs<R: Rng>(rng: &mut R, n_docs: usize, vocab: &[&str]) -> Vec<String> {
    (0..n_docs)
        .map(|_| {
            let len = rng.random_range(1..12);
            (0..len)
                .map(|_| vocab[rng.random_range(0..vocab.len())])
                .collect::<Vec<_>>()
                .join(if rng.random::<bool>() { " " } else { ", " })
        })
        .collect()
}

/// Relative difference with an absolute floor on the denominator.
pub fn rel_err(a: f64, b: f64, floor: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(floor)
}
