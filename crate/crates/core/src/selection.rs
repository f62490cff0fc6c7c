//! Selection output shared by the RL sampler and the baselines.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::baselines;
use crate::error::{RadsError, Result};
use crate::rlsampler::{self, SamplerConfig};
use crate::signals::SignalRecord;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Policy {
    Rads,
    Random,
    Uncertainty,
    MiOnly,
    GreedyUtility,
}

impl Policy {
    pub const ALL: [Policy; 5] = [
        Policy::Rads,
        Policy::Random,
        Policy::Uncertainty,
        Policy::MiOnly,
        Policy::GreedyUtility,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Policy::Rads => "rads",
            Policy::Random => "random",
            Policy::Uncertainty => "uncertainty",
            Policy::MiOnly => "mi_only",
            Policy::GreedyUtility => "greedy_utility",
        }
    }
}

impl fmt::Display for Policy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Policy {
    type Err = RadsError;

    fn from_str(s: &str) -> Result<Self> {
        Policy::ALL
            .into_iter()
            .find(|p| p.as_str() == s)
            .ok_or_else(|| RadsError::param(format!("unknown policy {s:?}")))
    }
}

/// Ordered selection with per-step rewards for accepted samples.
///
/// `rewards` is empty for baselines that do not optimize the reward.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelectionResult {
    pub policy: Policy,
    pub budget: usize,
    pub selected: Vec<String>,
    pub rewards: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub episodes_return: Option<Vec<f64>>,
}

impl SelectionResult {
    pub fn budget_used(&self) -> usize {
        self.selected.len()
    }

    pub fn to_json_pretty(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

/// Runs `policy` over a scored pool. Only signals are visible here; labels
/// never reach a selector.
pub fn select_with_policy(
    policy: Policy,
    records: &[SignalRecord],
    sampler: &SamplerConfig,
    budget: usize,
    seed: u64,
) -> Result<SelectionResult> {
    match policy {
        Policy::Rads => rlsampler::run(records, sampler, budget, seed),
        Policy::Random => baselines::select_random(records, budget, seed),
        Policy::Uncertainty => baselines::select_uncertainty(records, budget),
        Policy::MiOnly => baselines::select_mi(records, budget),
        Policy::GreedyUtility => {
            sampler.validate("sampler")?;
            let weights = rlsampler::class_weights_for(records, &sampler.utility)?;
            baselines::select_greedy_utility(records, &weights, budget, sampler.lambda)
        }
    }
}

pub(crate) fn check_budget(budget: usize, pool_len: usize) -> Result<()> {
    if budget == 0 {
        return Err(RadsError::param("budget must be at least 1"));
    }
    if budget > pool_len {
        return Err(RadsError::param(format!(
            "budget {budget} exceeds pool size {pool_len}"
        )));
    }
    Ok(())
}
