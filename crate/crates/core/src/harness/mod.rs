//! Synthetic transfer-learning experiments.
//!
//! Two labeled 2-D Gaussian domains stand in for a source and a shifted,
//! differently-balanced target. A dropout classifier is trained on the
//! source, scores the target training pool with MC dropout, a policy picks
//! samples from the scores alone, their labels are revealed, and a fresh
//! classifier is trained on source plus annotated target. Both test sets are
//! evaluated and the F1 transfer gap gets a bootstrap interval.

mod domain;
mod learner;
mod metrics;
mod transfer;

pub use domain::{generate_domains, DomainPair, DomainSplits, LabeledSet, Scenario, SyntheticDomainSpec};
pub use learner::{evaluate, predict_set, score_pool, train_learner, LearnerConfig};
pub use metrics::{bootstrap_ci, metrics, percentile, roc_auc, BinaryMetrics, DeltaF1Ci};
pub use transfer::{
    run_transfer, summarize, sweep, write_reports_csv, Annotator, HarnessConfig, ReportSummary, TransferContext,
    TransferReport, CSV_HEADER,
};

/// Derives an independent stream seed (splitmix64 finalizer).
pub fn derive_seed(seed: u64, stream: u64) -> u64 {
    let mut z = seed ^ stream.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}
