use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{RadsError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct BinaryMetrics {
    pub accuracy: f64,
    pub f1: f64,
    pub precision: f64,
    pub recall: f64,
    /// `None` when the labels hold a single class.
    pub roc_auc: Option<f64>,
}

fn f1_of(predictions: &[usize], labels: &[usize]) -> (f64, f64, f64, f64) {
    let (mut tp, mut fp, mut fn_, mut tn) = (0usize, 0usize, 0usize, 0usize);
    for (&p, &y) in predictions.iter().zip(labels) {
        match (p, y) {
            (1, 1) => tp += 1,
            (1, _) => fp += 1,
            (_, 1) => fn_ += 1,
            _ => tn += 1,
        }
    }
    let ratio = |a: usize, b: usize| if b == 0 { 0.0 } else { a as f64 / b as f64 };
    let precision = ratio(tp, tp + fp);
    let recall = ratio(tp, tp + fn_);
    let f1 = if precision + recall == 0.0 {
        0.0
    } else {
        2.0 * precision * recall / (precision + recall)
    };
    (ratio(tp + tn, labels.len()), f1, precision, recall)
}

/// ROC-AUC as the Mann-Whitney statistic; tied scores count one half.
pub fn roc_auc(scores: &[f64], labels: &[usize]) -> Result<f64> {
    if scores.len() != labels.len() {
        return Err(RadsError::param("scores and labels differ in length"));
    }
    let n_pos = labels.iter().filter(|&&y| y == 1).count();
    let n_neg = labels.len() - n_pos;
    if n_pos == 0 || n_neg == 0 {
        return Err(RadsError::UndefinedAuc);
    }
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[a].total_cmp(&scores[b]));
    // average ranks (1-based) over tie groups
    let mut rank_sum_pos = 0.0;
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && scores[order[j + 1]] == scores[order[i]] {
            j += 1;
        }
        let avg_rank = (i + j) as f64 / 2.0 + 1.0;
        rank_sum_pos += order[i..=j].iter().filter(|&&k| labels[k] == 1).count() as f64 * avg_rank;
        i = j + 1;
    }
    let u = rank_sum_pos - (n_pos * (n_pos + 1)) as f64 / 2.0;
    Ok(u / (n_pos * n_neg) as f64)
}

/// Accuracy, precision, recall, F1 (0 when precision + recall = 0) and
/// ROC-AUC of binary predictions.
pub fn metrics(predictions: &[usize], scores: &[f64], labels: &[usize]) -> Result<BinaryMetrics> {
    if predictions.len() != labels.len() || scores.len() != labels.len() {
        return Err(RadsError::param("predictions, scores and labels differ in length"));
    }
    if labels.is_empty() {
        return Err(RadsError::param("metrics need at least one sample"));
    }
    if let Some(&y) = labels.iter().chain(predictions).find(|&&y| y > 1) {
        return Err(RadsError::Label { label: y, classes: 2 });
    }
    let (accuracy, f1, precision, recall) = f1_of(predictions, labels);
    let roc_auc = match roc_auc(scores, labels) {
        Ok(a) => Some(a),
        Err(RadsError::UndefinedAuc) => None,
        Err(e) => return Err(e),
    };
    Ok(BinaryMetrics {
        accuracy,
        f1,
        precision,
        recall,
        roc_auc,
    })
}

/// Linear-interpolated percentile of an already sorted slice; `q` in [0, 1].
pub fn percentile(sorted: &[f64], q: f64) -> f64 {
    let pos = q * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    sorted[lo] + (sorted[hi] - sorted[lo]) * (pos - lo as f64)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DeltaF1Ci {
    /// `F1(source) - F1(target)` on the full test sets.
    pub delta_f1: f64,
    pub ci_low: f64,
    pub ci_high: f64,
}

/// Percentile bootstrap (2.5 / 97.5) of the source-minus-target F1 gap.
/// Each test set is resampled with replacement independently.
pub fn bootstrap_ci(
    source: (&[usize], &[usize]),
    target: (&[usize], &[usize]),
    n_resamples: usize,
    seed: u64,
) -> Result<DeltaF1Ci> {
    if n_resamples == 0 {
        return Err(RadsError::param("bootstrap needs at least one resample"));
    }
    let (sp, sy) = source;
    let (tp, ty) = target;
    if sp.len() != sy.len() || tp.len() != ty.len() || sy.is_empty() || ty.is_empty() {
        return Err(RadsError::param("bootstrap needs non-empty, aligned test sets"));
    }
    let point = f1_of(sp, sy).1 - f1_of(tp, ty).1;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let resample_f1 = |preds: &[usize], labels: &[usize], rng: &mut ChaCha8Rng| {
        let n = labels.len();
        let (mut p, mut y) = (Vec::with_capacity(n), Vec::with_capacity(n));
        for _ in 0..n {
            let i = rng.random_range(0..n);
            p.push(preds[i]);
            y.push(labels[i]);
        }
        f1_of(&p, &y).1
    };
    let mut deltas: Vec<f64> = (0..n_resamples)
        .map(|_| {
            let s = resample_f1(sp, sy, &mut rng);
            s - resample_f1(tp, ty, &mut rng)
        })
        .collect();
    deltas.sort_by(f64::total_cmp);
    Ok(DeltaF1Ci {
        delta_f1: point,
        ci_low: percentile(&deltas, 0.025),
        ci_high: percentile(&deltas, 0.975),
    })
}
