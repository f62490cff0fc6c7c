//! Informativeness signals from MC-dropout probability matrices.
//!
//! A [`ScorePool`] holds, per unlabeled sample, `K` softmax rows over `C`
//! classes. From it [`build_signals`] derives the MC predictive mean, its
//! log, predictive/expected entropy, the BALD mutual information, the
//! pool-normalized MI and a pseudo label. All entropies are in nats.
//!
//! Score files are JSON Lines with one `{"id": ..., "probs": [[...], ...]}`
//! object per sample.

use std::collections::HashSet;
use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};

use crate::error::{RadsError, Result};

/// Floor applied to probabilities before any logarithm.
pub const PROB_CLAMP: f64 = 1e-12;
/// Row-sum tolerance enforced when a pool is validated.
pub const ROW_SUM_TOL: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreEntry {
    pub id: String,
    pub probs: Vec<Vec<f64>>,
}

/// Validated MC-dropout scores for an unlabeled pool.
#[derive(Debug, Clone, PartialEq)]
pub struct ScorePool {
    entries: Vec<ScoreEntry>,
    passes: usize,
    classes: usize,
}

fn check_matrix(probs: &[Vec<f64>]) -> std::result::Result<(usize, usize), String> {
    let k = probs.len();
    if k == 0 {
        return Err("probs must contain at least one row".into());
    }
    let c = probs[0].len();
    if c < 2 {
        return Err("probs rows must have at least two classes".into());
    }
    for (r, row) in probs.iter().enumerate() {
        if row.len() != c {
            return Err(format!("row {r} has {} classes, expected {c}", row.len()));
        }
        if let Some(p) = row.iter().find(|p| !p.is_finite() || **p < 0.0 || **p > 1.0) {
            return Err(format!("row {r} has probability {p} outside [0, 1]"));
        }
        let sum: f64 = row.iter().sum();
        if (sum - 1.0).abs() > ROW_SUM_TOL {
            return Err(format!("row {r} sums to {sum}, expected 1 within {ROW_SUM_TOL}"));
        }
    }
    Ok((k, c))
}

impl ScorePool {
    pub fn new(entries: Vec<ScoreEntry>) -> Result<Self> {
        let mut builder = PoolBuilder::default();
        for (i, entry) in entries.into_iter().enumerate() {
            builder
                .push(entry)
                .map_err(|message| RadsError::Validation { line: i + 1, message })?;
        }
        builder.finish()
    }

    pub fn entries(&self) -> &[ScoreEntry] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn passes(&self) -> usize {
        self.passes
    }

    pub fn classes(&self) -> usize {
        self.classes
    }

    pub fn ids(&self) -> impl Iterator<Item = &str> {
        self.entries.iter().map(|e| e.id.as_str())
    }

    /// Reads and validates a JSON-lines score file. Blank lines are skipped;
    /// errors carry the 1-based line number.
    pub fn read_jsonl<R: BufRead>(reader: R) -> Result<Self> {
        let mut builder = PoolBuilder::default();
        for (i, line) in reader.lines().enumerate() {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let invalid = |message: String| RadsError::Validation { line: i + 1, message };
            let entry: ScoreEntry = serde_json::from_str(&line).map_err(|e| invalid(e.to_string()))?;
            builder.push(entry).map_err(invalid)?;
        }
        builder.finish()
    }

    pub fn write_jsonl<W: Write>(&self, mut writer: W) -> Result<()> {
        for entry in &self.entries {
            serde_json::to_writer(&mut writer, entry)?;
            writer.write_all(b"\n")?;
        }
        Ok(())
    }
}

#[derive(Default)]
struct PoolBuilder {
    entries: Vec<ScoreEntry>,
    seen: HashSet<String>,
    shape: Option<(usize, usize)>,
}

impl PoolBuilder {
    fn push(&mut self, entry: ScoreEntry) -> std::result::Result<(), String> {
        if entry.id.is_empty() {
            return Err("id must be a non-empty string".into());
        }
        let (k, c) = check_matrix(&entry.probs)?;
        match self.shape {
            None => self.shape = Some((k, c)),
            Some((k0, c0)) if (k0, c0) != (k, c) => {
                return Err(format!("entry {:?} has shape {k}x{c}, expected {k0}x{c0}", entry.id));
            }
            Some(_) => {}
        }
        if !self.seen.insert(entry.id.clone()) {
            return Err(format!("duplicate id {:?}", entry.id));
        }
        self.entries.push(entry);
        Ok(())
    }

    fn finish(self) -> Result<ScorePool> {
        let (passes, classes) = self.shape.ok_or_else(|| RadsError::Validation {
            line: 0,
            message: "score pool contains no entries".into(),
        })?;
        Ok(ScorePool {
            entries: self.entries,
            passes,
            classes,
        })
    }
}

/// Derived signals for one sample.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SignalRecord {
    pub id: String,
    /// MC predictive mean.
    pub p_bar: Vec<f64>,
    /// Natural log of `p_bar`, clamped below at `ln(1e-12)`.
    pub l_bar: Vec<f64>,
    pub pe: f64,
    pub ee: f64,
    pub mi: f64,
    pub mi_norm: f64,
    pub pseudo_label: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PriorEstimate {
    pub pi_plus: f64,
    pub pi_minus: f64,
    pub n_pool: usize,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Entropies {
    pub pe: f64,
    pub ee: f64,
    pub mi: f64,
}

fn check_finite(probs: &[Vec<f64>]) -> Result<()> {
    if probs.is_empty() {
        return Err(RadsError::param("probability matrix has no rows"));
    }
    if probs.iter().flatten().any(|p| !p.is_finite()) {
        return Err(RadsError::Numeric("non-finite probability".into()));
    }
    Ok(())
}

/// Shannon entropy in nats with `0 ln 0 = 0`.
pub fn entropy(p: &[f64]) -> f64 {
    -p.iter()
        .filter(|&&x| x > 0.0)
        .map(|&x| x * x.max(PROB_CLAMP).ln())
        .sum::<f64>()
}

fn all_rows_equal(probs: &[Vec<f64>]) -> bool {
    probs.iter().all(|r| r == &probs[0])
}

/// Column mean of the pass matrix and its (clamped) natural log.
pub fn aggregate(probs: &[Vec<f64>]) -> Result<(Vec<f64>, Vec<f64>)> {
    check_finite(probs)?;
    let k = probs.len() as f64;
    let c = probs[0].len();
    let p_bar: Vec<f64> = if all_rows_equal(probs) {
        probs[0].clone()
    } else {
        (0..c).map(|j| probs.iter().map(|r| r[j]).sum::<f64>() / k).collect()
    };
    let l_bar = p_bar.iter().map(|&p| p.max(PROB_CLAMP).ln()).collect();
    Ok((p_bar, l_bar))
}

/// Predictive entropy, expected entropy and their difference (BALD MI,
/// clamped at 0).
pub fn entropies(probs: &[Vec<f64>]) -> Result<Entropies> {
    let (p_bar, _) = aggregate(probs)?;
    if all_rows_equal(probs) {
        // Jensen equality; avoids rounding noise from averaging identical rows.
        let h = entropy(&probs[0]);
        return Ok(Entropies { pe: h, ee: h, mi: 0.0 });
    }
    let pe = entropy(&p_bar);
    let ee = probs.iter().map(|r| entropy(r)).sum::<f64>() / probs.len() as f64;
    Ok(Entropies {
        pe,
        ee,
        mi: (pe - ee).max(0.0),
    })
}

/// Min-max normalization to `[0, 1]`; a degenerate range maps to zeros.
pub fn normalize_mi(mis: &[f64]) -> Result<Vec<f64>> {
    if mis.is_empty() {
        return Err(RadsError::param("cannot normalize an empty MI vector"));
    }
    if mis.iter().any(|m| !m.is_finite()) {
        return Err(RadsError::Numeric("non-finite MI value".into()));
    }
    let lo = mis.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = mis.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let range = hi - lo;
    if range <= 1e-12 {
        return Ok(vec![0.0; mis.len()]);
    }
    Ok(mis.iter().map(|&m| ((m - lo) / range).clamp(0.0, 1.0)).collect())
}

/// Index of the largest entry; ties resolve to the lowest index.
pub fn argmax(p: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in p.iter().enumerate().skip(1) {
        if v > p[best] {
            best = i;
        }
    }
    best
}

pub fn estimate_priors(records: &[SignalRecord]) -> Result<PriorEstimate> {
    if records.is_empty() {
        return Err(RadsError::param("cannot estimate priors of an empty pool"));
    }
    let positives = records.iter().filter(|r| r.pseudo_label == 1).count();
    let pi_plus = positives as f64 / records.len() as f64;
    Ok(PriorEstimate {
        pi_plus,
        pi_minus: 1.0 - pi_plus,
        n_pool: records.len(),
    })
}

/// One record per pool entry, in pool order.
pub fn build_signals(pool: &ScorePool) -> Result<Vec<SignalRecord>> {
    let mut records = pool
        .entries()
        .iter()
        .map(|e| {
            let (p_bar, l_bar) = aggregate(&e.probs)?;
            let Entropies { pe, ee, mi } = entropies(&e.probs)?;
            Ok(SignalRecord {
                id: e.id.clone(),
                pseudo_label: argmax(&p_bar),
                p_bar,
                l_bar,
                pe,
                ee,
                mi,
                mi_norm: 0.0,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let mis: Vec<f64> = records.iter().map(|r| r.mi).collect();
    for (r, m) in records.iter_mut().zip(normalize_mi(&mis)?) {
        r.mi_norm = m;
    }
    Ok(records)
}
