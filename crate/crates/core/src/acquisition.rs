//! Prior-aware utility and nearest-neighbor redundancy.

use serde::{Deserialize, Serialize};

use crate::error::{RadsError, Result};
use crate::signals::{PriorEstimate, SignalRecord};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct UtilityParams {
    /// Desired positive share of the selected mixture.
    pub rho: f64,
    /// Lower clip bound for the estimated positive prior; the upper bound is
    /// `1 - clip_lo`.
    pub clip_lo: f64,
}

impl Default for UtilityParams {
    fn default() -> Self {
        UtilityParams {
            rho: 0.9,
            clip_lo: 0.01,
        }
    }
}

impl UtilityParams {
    pub fn new(rho: f64, clip_lo: f64) -> Result<Self> {
        let p = UtilityParams { rho, clip_lo };
        p.validate("utility")?;
        Ok(p)
    }

    pub fn clip_hi(&self) -> f64 {
        1.0 - self.clip_lo
    }

    pub fn validate(&self, path: &str) -> Result<()> {
        if !(self.rho > 0.0 && self.rho < 1.0) {
            return Err(RadsError::config(
                format!("{path}.rho"),
                format!("must lie in (0, 1), got {}", self.rho),
            ));
        }
        if !(self.clip_lo > 0.0 && self.clip_lo < 0.5) {
            return Err(RadsError::config(
                format!("{path}.clip_lo"),
                format!("must lie in (0, 0.5), got {}", self.clip_lo),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClassWeights {
    pub w_plus: f64,
    pub w_minus: f64,
}

impl ClassWeights {
    pub fn for_label(&self, label: usize) -> f64 {
        if label == 1 {
            self.w_plus
        } else {
            self.w_minus
        }
    }
}

/// `w+ = rho / c`, `w- = (1 - rho) / (1 - c)` with `c` the clipped prior.
pub fn class_weights(prior: &PriorEstimate, params: &UtilityParams) -> ClassWeights {
    let c = prior.pi_plus.clamp(params.clip_lo, params.clip_hi());
    ClassWeights {
        w_plus: params.rho / c,
        w_minus: (1.0 - params.rho) / (1.0 - c),
    }
}

/// Normalized MI scaled by the weight of the record's pseudo label.
pub fn utility(record: &SignalRecord, weights: &ClassWeights) -> f64 {
    record.mi_norm * weights.for_label(record.pseudo_label)
}

/// Distance to the nearest selected neighbor. An empty selection has no
/// neighbor and is represented explicitly rather than as a float infinity.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "value", rename_all = "snake_case")]
pub enum NnDistance {
    Infinite,
    Finite(f64),
}

impl NnDistance {
    pub fn as_f64(self) -> f64 {
        match self {
            NnDistance::Infinite => f64::INFINITY,
            NnDistance::Finite(d) => d,
        }
    }
}

pub fn nn_distance<V: AsRef<[f64]>>(l_bar: &[f64], selected: &[V]) -> Result<NnDistance> {
    let mut best: Option<f64> = None;
    for s in selected {
        let s = s.as_ref();
        if s.len() != l_bar.len() {
            return Err(RadsError::param(format!(
                "vector dimension {} does not match {}",
                s.len(),
                l_bar.len()
            )));
        }
        let d = l_bar.iter().zip(s).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt();
        best = Some(best.map_or(d, |b: f64| b.min(d)));
    }
    Ok(best.map_or(NnDistance::Infinite, NnDistance::Finite))
}

/// `1 / (1 + delta)` against the selected set, or 0 when nothing is selected.
pub fn redundancy<V: AsRef<[f64]>>(l_bar: &[f64], selected: &[V]) -> Result<f64> {
    Ok(match nn_distance(l_bar, selected)? {
        NnDistance::Infinite => 0.0,
        NnDistance::Finite(d) => 1.0 / (1.0 + d),
    })
}
