use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::domain::LabeledSet;
use super::metrics::{metrics, BinaryMetrics};
use crate::error::{RadsError, Result};
use crate::nn::{loss_and_gradients, mc_passes, softmax, train_step, Activation, Mlp, Mode, OptimizerState};
use crate::signals::{ScoreEntry, ScorePool};

/// Dropout classifier trained with mini-batch Adam and early stopping on
/// dev loss.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LearnerConfig {
    pub hidden: Vec<usize>,
    pub dropout: f64,
    pub learning_rate: f64,
    pub max_epochs: usize,
    pub batch_size: usize,
    pub patience: usize,
    /// Weight each class by the inverse of its training frequency.
    pub class_balanced: bool,
}

impl Default for LearnerConfig {
    fn default() -> Self {
        LearnerConfig {
            hidden: vec![16],
            dropout: 0.3,
            learning_rate: 0.01,
            max_epochs: 100,
            batch_size: 16,
            patience: 3,
            class_balanced: false,
        }
    }
}

impl LearnerConfig {
    pub fn validate(&self, path: &str) -> Result<()> {
        if self.hidden.is_empty() || self.hidden.contains(&0) {
            return Err(RadsError::config(
                format!("{path}.hidden"),
                "needs at least one positive width",
            ));
        }
        if !(0.0..1.0).contains(&self.dropout) {
            return Err(RadsError::config(format!("{path}.dropout"), "must lie in [0, 1)"));
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(RadsError::config(format!("{path}.learning_rate"), "must be positive"));
        }
        if self.batch_size == 0 {
            return Err(RadsError::config(format!("{path}.batch_size"), "must be at least 1"));
        }
        Ok(())
    }

    fn layer_dims(&self, input: usize) -> Vec<usize> {
        let mut dims = vec![input];
        dims.extend(&self.hidden);
        dims.push(2);
        dims
    }
}

fn class_weights(train: &LabeledSet, balanced: bool) -> Option<Vec<f64>> {
    if !balanced {
        return None;
    }
    let n = train.len() as f64;
    let pos = train.positives() as f64;
    let neg = n - pos;
    let w = |count: f64| if count == 0.0 { 0.0 } else { n / (2.0 * count) };
    Some(vec![w(neg), w(pos)])
}

fn input_dim(set: &LabeledSet) -> Result<usize> {
    let dim = set.features.first().map(Vec::len).unwrap_or(0);
    if dim == 0 || set.features.iter().any(|x| x.len() != dim) {
        return Err(RadsError::param("features must be non-empty vectors of equal length"));
    }
    Ok(dim)
}

/// Trains a fresh classifier on `train` and returns the parameters with the
/// lowest dev loss. Training stops after `patience` epochs without
/// improvement. With `max_epochs = 0` the initialized network is returned.
pub fn train_learner(train: &LabeledSet, dev: &LabeledSet, cfg: &LearnerConfig, seed: u64) -> Result<Mlp> {
    cfg.validate("learner")?;
    if train.is_empty() || dev.is_empty() {
        return Err(RadsError::param("training and dev sets must be non-empty"));
    }
    train.validate()?;
    dev.validate()?;
    let dim = input_dim(train)?;
    if input_dim(dev)? != dim {
        return Err(RadsError::InputShape {
            expected: dim,
            got: input_dim(dev)?,
        });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut net = Mlp::new(&cfg.layer_dims(dim), cfg.dropout, Activation::Identity, &mut rng)?;
    let mut opt = OptimizerState::for_mlp(&net, cfg.learning_rate)?;
    let weights = class_weights(train, cfg.class_balanced);
    let weights = weights.as_deref();
    let dev_loss = |net: &Mlp, rng: &mut ChaCha8Rng| {
        loss_and_gradients(net, &dev.features, &dev.labels, weights, Mode::Deterministic, rng).map(|(l, _)| l)
    };

    let mut best = net.clone();
    let mut best_loss = dev_loss(&net, &mut rng)?;
    let mut stale = 0;
    let mut order: Vec<usize> = (0..train.len()).collect();
    for _ in 0..cfg.max_epochs {
        order.shuffle(&mut rng);
        for chunk in order.chunks(cfg.batch_size) {
            let xs: Vec<Vec<f64>> = chunk.iter().map(|&i| train.features[i].clone()).collect();
            let ys: Vec<usize> = chunk.iter().map(|&i| train.labels[i]).collect();
            train_step(&mut net, &mut opt, &xs, &ys, weights, &mut rng)?;
        }
        let loss = dev_loss(&net, &mut rng)?;
        if loss < best_loss {
            best_loss = loss;
            best = net.clone();
            stale = 0;
        } else {
            stale += 1;
            if stale >= cfg.patience {
                break;
            }
        }
    }
    Ok(best)
}

/// Scores an unlabeled pool with `passes` MC-dropout forward passes.
pub fn score_pool(net: &Mlp, features: &[Vec<f64>], ids: &[String], passes: usize, seed: u64) -> Result<ScorePool> {
    if features.len() != ids.len() {
        return Err(RadsError::param("features and ids differ in length"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let entries = features
        .iter()
        .zip(ids)
        .map(|(x, id)| {
            Ok(ScoreEntry {
                id: id.clone(),
                probs: mc_passes(net, x, passes, &mut rng)?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    ScorePool::new(entries)
}

/// Deterministic predictions (argmax, ties to class 0) and positive-class
/// probabilities.
pub fn predict_set(net: &Mlp, features: &[Vec<f64>]) -> Result<(Vec<usize>, Vec<f64>)> {
    let mut preds = Vec::with_capacity(features.len());
    let mut scores = Vec::with_capacity(features.len());
    for x in features {
        let p = softmax(&net.predict(x)?);
        preds.push(usize::from(p[1] > p[0]));
        scores.push(p[1]);
    }
    Ok((preds, scores))
}

pub fn evaluate(net: &Mlp, set: &LabeledSet) -> Result<BinaryMetrics> {
    let (preds, scores) = predict_set(net, &set.features)?;
    metrics(&preds, &scores, &set.labels)
}
