//! Budgeted active sampling for transfer learning under class imbalance.
//!
//! The pipeline: a small dropout classifier trained on the labeled source
//! domain scores the unlabeled target pool with Monte-Carlo dropout
//! ([`nn`], [`signals`]); the scores are turned into a prior-aware utility
//! with a redundancy penalty ([`acquisition`]); a dueling DQN learns a
//! sequential accept/reject policy over the pool under an annotation budget
//! ([`rlsampler`]). [`baselines`] holds reference selectors, [`harness`] runs
//! synthetic domain-shift experiments end to end and [`corpusgap`] measures
//! lexical divergence between two text corpora.

pub mod acquisition;
pub mod baselines;
pub mod corpusgap;
pub mod error;
pub mod harness;
pub mod nn;
pub mod rlsampler;
pub mod selection;
pub mod signals;

pub use error::{RadsError, Result};
