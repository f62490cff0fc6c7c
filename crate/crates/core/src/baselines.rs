//! Reference selectors: random, lowest-confidence, MI top-k and a greedy
//! utility-minus-redundancy selector (the sampler's objective without RL).
//!
//! Deterministic rankings break ties by ascending id.

use std::cmp::Ordering;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::acquisition::{redundancy, utility, ClassWeights};
use crate::error::Result;
use crate::selection::{check_budget, Policy, SelectionResult};
use crate::signals::SignalRecord;

fn result(policy: Policy, budget: usize, selected: Vec<String>, rewards: Vec<f64>) -> SelectionResult {
    SelectionResult {
        policy,
        budget,
        selected,
        rewards,
        episodes_return: None,
    }
}

/// Top `budget` records under `cmp` (best first), ties by id.
fn top_k(
    records: &[SignalRecord],
    budget: usize,
    cmp: impl Fn(&SignalRecord, &SignalRecord) -> Ordering,
) -> Vec<String> {
    let mut idx: Vec<&SignalRecord> = records.iter().collect();
    idx.sort_by(|a, b| cmp(a, b).then_with(|| a.id.cmp(&b.id)));
    idx.into_iter().take(budget).map(|r| r.id.clone()).collect()
}

/// Uniform sample without replacement.
pub fn select_random(records: &[SignalRecord], budget: usize, seed: u64) -> Result<SelectionResult> {
    check_budget(budget, records.len())?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let selected = rand::seq::index::sample(&mut rng, records.len(), budget)
        .into_iter()
        .map(|i| records[i].id.clone())
        .collect();
    Ok(result(Policy::Random, budget, selected, Vec::new()))
}

/// Lowest maximum predictive probability first.
pub fn select_uncertainty(records: &[SignalRecord], budget: usize) -> Result<SelectionResult> {
    check_budget(budget, records.len())?;
    let confidence = |r: &SignalRecord| r.p_bar.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let selected = top_k(records, budget, |a, b| confidence(a).total_cmp(&confidence(b)));
    Ok(result(Policy::Uncertainty, budget, selected, Vec::new()))
}

/// Highest raw BALD MI first.
pub fn select_mi(records: &[SignalRecord], budget: usize) -> Result<SelectionResult> {
    check_budget(budget, records.len())?;
    let selected = top_k(records, budget, |a, b| b.mi.total_cmp(&a.mi));
    Ok(result(Policy::MiOnly, budget, selected, Vec::new()))
}

/// Repeatedly takes the candidate maximizing `u(x) - lambda * Red(x, S)`
/// against the current selection. `rewards` holds the gain of each pick.
pub fn select_greedy_utility(
    records: &[SignalRecord],
    weights: &ClassWeights,
    budget: usize,
    lambda: f64,
) -> Result<SelectionResult> {
    check_budget(budget, records.len())?;
    let utilities: Vec<f64> = records.iter().map(|r| utility(r, weights)).collect();
    let mut taken = vec![false; records.len()];
    let mut chosen: Vec<&[f64]> = Vec::with_capacity(budget);
    let mut selected = Vec::with_capacity(budget);
    let mut rewards = Vec::with_capacity(budget);
    for _ in 0..budget {
        let mut best: Option<(usize, f64)> = None;
        for (i, r) in records.iter().enumerate() {
            if taken[i] {
                continue;
            }
            let gain = utilities[i] - lambda * redundancy(&r.l_bar, &chosen)?;
            let better = match best {
                None => true,
                Some((j, g)) => gain > g || (gain == g && r.id < records[j].id),
            };
            if better {
                best = Some((i, gain));
            }
        }
        let (i, gain) = best.expect("budget never exceeds pool size");
        taken[i] = true;
        chosen.push(&records[i].l_bar);
        selected.push(records[i].id.clone());
        rewards.push(gain);
    }
    Ok(result(Policy::GreedyUtility, budget, selected, rewards))
}
