use std::collections::HashSet;
use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::derive_seed;
use super::domain::{DomainPair, LabeledSet};
use super::learner::{evaluate, predict_set, score_pool, train_learner, LearnerConfig};
use super::metrics::{bootstrap_ci, BinaryMetrics};
use crate::error::{RadsError, Result};
use crate::nn::Mlp;
use crate::rlsampler::SamplerConfig;
use crate::selection::{select_with_policy, Policy};
use crate::signals::{build_signals, ScorePool, SignalRecord};

const LEARNER_STREAM: u64 = 1;
const SCORE_STREAM: u64 = 2;
const SELECT_STREAM: u64 = 3;
const BOOTSTRAP_STREAM: u64 = 4;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct HarnessConfig {
    pub learner: LearnerConfig,
    /// MC-dropout passes used to score the target pool.
    pub passes: usize,
    pub sampler: SamplerConfig,
    pub bootstrap_resamples: usize,
    /// Copies of each annotated target sample in the joint training set.
    pub annotated_repeat: usize,
}

impl Default for HarnessConfig {
    fn default() -> Self {
        HarnessConfig {
            learner: LearnerConfig::default(),
            passes: 10,
            sampler: SamplerConfig::default(),
            bootstrap_resamples: 1000,
            annotated_repeat: 1,
        }
    }
}

impl HarnessConfig {
    pub fn validate(&self, path: &str) -> Result<()> {
        self.learner.validate(&format!("{path}.learner"))?;
        self.sampler.validate(&format!("{path}.sampler"))?;
        if self.passes == 0 {
            return Err(RadsError::config(format!("{path}.passes"), "must be at least 1"));
        }
        if self.bootstrap_resamples == 0 {
            return Err(RadsError::config(
                format!("{path}.bootstrap_resamples"),
                "must be at least 1",
            ));
        }
        if self.annotated_repeat == 0 {
            return Err(RadsError::config(
                format!("{path}.annotated_repeat"),
                "must be at least 1",
            ));
        }
        Ok(())
    }
}

/// Sole holder of target pool labels. Labels leave only through
/// [`Annotator::reveal`], which records every id it was asked for.
#[derive(Debug, Clone)]
pub struct Annotator {
    pool: LabeledSet,
    revealed: Vec<String>,
}

impl Annotator {
    pub fn new(pool: LabeledSet) -> Self {
        Annotator {
            pool,
            revealed: Vec::new(),
        }
    }

    pub fn reveal(&mut self, ids: &[String]) -> Result<LabeledSet> {
        let mut out = LabeledSet::default();
        for id in ids {
            let i = self
                .pool
                .ids
                .iter()
                .position(|p| p == id)
                .ok_or_else(|| RadsError::param(format!("id {id:?} is not in the annotation pool")))?;
            out.features.push(self.pool.features[i].clone());
            out.labels.push(self.pool.labels[i]);
            out.ids.push(id.clone());
            self.revealed.push(id.clone());
        }
        Ok(out)
    }

    pub fn revealed(&self) -> &[String] {
        &self.revealed
    }
}

/// Per-seed state shared by every policy and budget: the source-trained
/// learner and its scores on the target pool.
#[derive(Debug, Clone)]
pub struct TransferContext {
    pub seed: u64,
    pub source_model: Mlp,
    pub pool: ScorePool,
    pub records: Vec<SignalRecord>,
}

impl TransferContext {
    pub fn prepare(domains: &DomainPair, cfg: &HarnessConfig, seed: u64) -> Result<Self> {
        let target = &domains.target.train;
        Self::prepare_on(domains, &target.features, &target.ids, cfg, seed)
    }

    /// Like [`TransferContext::prepare`] but scores an arbitrary unlabeled
    /// pool instead of the target training split.
    pub fn prepare_on(
        domains: &DomainPair,
        features: &[Vec<f64>],
        ids: &[String],
        cfg: &HarnessConfig,
        seed: u64,
    ) -> Result<Self> {
        cfg.validate("harness")?;
        let source_model = train_learner(
            &domains.source.train,
            &domains.source.dev,
            &cfg.learner,
            derive_seed(seed, LEARNER_STREAM),
        )?;
        let pool = score_pool(
            &source_model,
            features,
            ids,
            cfg.passes,
            derive_seed(seed, SCORE_STREAM),
        )?;
        let records = build_signals(&pool)?;
        Ok(TransferContext {
            seed,
            source_model,
            pool,
            records,
        })
    }

    /// Selects, annotates, retrains and evaluates. Budget 0 evaluates the
    /// source model as-is (zero-shot).
    pub fn run(
        &self,
        domains: &DomainPair,
        policy: Policy,
        budget: usize,
        cfg: &HarnessConfig,
        annotator: &mut Annotator,
    ) -> Result<TransferReport> {
        cfg.validate("harness")?;
        let pool_size = domains.target.train.len();
        if budget > pool_size {
            return Err(RadsError::param(format!(
                "budget {budget} exceeds target pool size {pool_size}"
            )));
        }
        let selected = if budget == 0 {
            Vec::new()
        } else {
            select_with_policy(
                policy,
                &self.records,
                &cfg.sampler,
                budget,
                derive_seed(self.seed, SELECT_STREAM),
            )?
            .selected
        };
        let model = if selected.is_empty() {
            self.source_model.clone()
        } else {
            let annotated = annotator.reveal(&selected)?;
            let mut joint = domains.source.train.clone();
            for copy in 0..cfg.annotated_repeat {
                let mut batch = annotated.clone();
                if copy > 0 {
                    batch.ids.iter_mut().for_each(|id| *id = format!("{id}#{copy}"));
                }
                joint = joint.union(&batch)?;
            }
            train_learner(
                &joint,
                &domains.source.dev,
                &cfg.learner,
                derive_seed(self.seed, LEARNER_STREAM),
            )?
        };
        let source = evaluate(&model, &domains.source.test)?;
        let target = evaluate(&model, &domains.target.test)?;
        let (sp, _) = predict_set(&model, &domains.source.test.features)?;
        let (tp, _) = predict_set(&model, &domains.target.test.features)?;
        let ci = bootstrap_ci(
            (&sp, &domains.source.test.labels),
            (&tp, &domains.target.test.labels),
            cfg.bootstrap_resamples,
            derive_seed(self.seed, BOOTSTRAP_STREAM),
        )?;
        Ok(TransferReport {
            policy,
            budget,
            budget_used: selected.len(),
            seed: self.seed,
            source,
            target,
            delta_f1: ci.delta_f1,
            ci_low: ci.ci_low,
            ci_high: ci.ci_high,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransferReport {
    pub policy: Policy,
    pub budget: usize,
    pub budget_used: usize,
    pub seed: u64,
    pub source: BinaryMetrics,
    pub target: BinaryMetrics,
    /// `F1(source) - F1(target)`.
    pub delta_f1: f64,
    pub ci_low: f64,
    pub ci_high: f64,
}

/// One transfer run: train on source, score and select from the target
/// pool, annotate, retrain jointly and evaluate on both test sets.
pub fn run_transfer(
    domains: &DomainPair,
    policy: Policy,
    budget: usize,
    cfg: &HarnessConfig,
    seed: u64,
) -> Result<TransferReport> {
    let ctx = TransferContext::prepare(domains, cfg, seed)?;
    let mut annotator = Annotator::new(domains.target.train.clone());
    ctx.run(domains, policy, budget, cfg, &mut annotator)
}

/// One report per (budget, seed), ordered by budget then seed. Seeds run in
/// parallel; each reuses one source model and score pool for all budgets.
pub fn sweep(
    domains: &DomainPair,
    policy: Policy,
    budgets: &[usize],
    seeds: &[u64],
    cfg: &HarnessConfig,
) -> Result<Vec<TransferReport>> {
    if budgets.is_empty() {
        return Err(RadsError::param("budget list must be non-empty"));
    }
    if budgets.windows(2).any(|w| w[0] > w[1]) {
        return Err(RadsError::param("budgets must be sorted ascending"));
    }
    if seeds.is_empty() {
        return Err(RadsError::param("seed list must be non-empty"));
    }
    let distinct: HashSet<_> = seeds.iter().collect();
    if distinct.len() != seeds.len() {
        return Err(RadsError::param("seeds must be distinct"));
    }
    cfg.validate("harness")?;
    let per_seed: Vec<Vec<TransferReport>> = seeds
        .par_iter()
        .map(|&seed| {
            let ctx = TransferContext::prepare(domains, cfg, seed)?;
            budgets
                .iter()
                .map(|&b| {
                    let mut annotator = Annotator::new(domains.target.train.clone());
                    ctx.run(domains, policy, b, cfg, &mut annotator)
                })
                .collect()
        })
        .collect::<Result<_>>()?;
    let mut out = Vec::with_capacity(budgets.len() * seeds.len());
    for b in 0..budgets.len() {
        for runs in &per_seed {
            out.push(runs[b].clone());
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportSummary {
    pub policy: Policy,
    pub budget: usize,
    pub runs: usize,
    pub mean_budget_used: f64,
    pub source: BinaryMetrics,
    pub target: BinaryMetrics,
    pub delta_f1: f64,
}

fn mean_metrics<'a>(ms: impl Iterator<Item = &'a BinaryMetrics>) -> BinaryMetrics {
    let ms: Vec<_> = ms.collect();
    let n = ms.len() as f64;
    let avg = |f: fn(&BinaryMetrics) -> f64| ms.iter().map(|m| f(m)).sum::<f64>() / n;
    let aucs: Vec<f64> = ms.iter().filter_map(|m| m.roc_auc).collect();
    BinaryMetrics {
        accuracy: avg(|m| m.accuracy),
        f1: avg(|m| m.f1),
        precision: avg(|m| m.precision),
        recall: avg(|m| m.recall),
        roc_auc: (!aucs.is_empty()).then(|| aucs.iter().sum::<f64>() / aucs.len() as f64),
    }
}

/// Mean metrics per (policy, budget), in order of first appearance. AUC is
/// averaged over the runs where it is defined.
pub fn summarize(reports: &[TransferReport]) -> Vec<ReportSummary> {
    let mut keys: Vec<(Policy, usize)> = Vec::new();
    for r in reports {
        if !keys.contains(&(r.policy, r.budget)) {
            keys.push((r.policy, r.budget));
        }
    }
    keys.into_iter()
        .map(|(policy, budget)| {
            let group: Vec<&TransferReport> = reports
                .iter()
                .filter(|r| r.policy == policy && r.budget == budget)
                .collect();
            let n = group.len() as f64;
            ReportSummary {
                policy,
                budget,
                runs: group.len(),
                mean_budget_used: group.iter().map(|r| r.budget_used as f64).sum::<f64>() / n,
                source: mean_metrics(group.iter().map(|r| &r.source)),
                target: mean_metrics(group.iter().map(|r| &r.target)),
                delta_f1: group.iter().map(|r| r.delta_f1).sum::<f64>() / n,
            }
        })
        .collect()
}

pub const CSV_HEADER: [&str; 17] = [
    "policy",
    "budget",
    "budget_used",
    "seed",
    "src_acc",
    "src_f1",
    "src_precision",
    "src_recall",
    "src_auc",
    "tgt_acc",
    "tgt_f1",
    "tgt_precision",
    "tgt_recall",
    "tgt_auc",
    "delta_f1",
    "ci_low",
    "ci_high",
];

/// Writes one CSV row per report; an undefined AUC is an empty field.
pub fn write_reports_csv<W: Write>(reports: &[TransferReport], writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    let csv_err = |e: csv::Error| RadsError::Io(std::io::Error::other(e));
    w.write_record(CSV_HEADER).map_err(csv_err)?;
    let metric_fields = |m: &BinaryMetrics| {
        vec![
            m.accuracy.to_string(),
            m.f1.to_string(),
            m.precision.to_string(),
            m.recall.to_string(),
            m.roc_auc.map(|a| a.to_string()).unwrap_or_default(),
        ]
    };
    for r in reports {
        let mut row = vec![
            r.policy.to_string(),
            r.budget.to_string(),
            r.budget_used.to_string(),
            r.seed.to_string(),
        ];
        row.extend(metric_fields(&r.source));
        row.extend(metric_fields(&r.target));
        row.extend([r.delta_f1.to_string(), r.ci_low.to_string(), r.ci_high.to_string()]);
        w.write_record(&row).map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}
