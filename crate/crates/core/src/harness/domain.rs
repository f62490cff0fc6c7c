use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{RadsError, Result};

/// Class-conditional Gaussian blobs in the plane. Class 1 is centered at
/// `(+s/2, 0) + shift` and class 0 at `(-s/2, 0) + shift`, where `s` is the
/// class separation; both get isotropic noise of scale `noise_scale`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SyntheticDomainSpec {
    pub n_train: usize,
    pub n_dev: usize,
    pub n_test: usize,
    pub positive_rate: f64,
    pub mean_shift: [f64; 2],
    pub class_separation: f64,
    pub noise_scale: f64,
    pub seed: u64,
}

impl SyntheticDomainSpec {
    /// Source side of the default hard scenario: 14% positives.
    pub fn default_source() -> Self {
        SyntheticDomainSpec {
            n_train: 196,
            n_dev: 35,
            n_test: 52,
            positive_rate: 0.14,
            mean_shift: [0.0, 0.0],
            class_separation: 2.5,
            noise_scale: 1.0,
            seed: 11,
        }
    }

    /// Target side of the default hard scenario: 69% positives, means moved
    /// by a shift of magnitude 2 whose direction puts zero-shot target F1
    /// near the middle of its range.
    pub fn default_target() -> Self {
        SyntheticDomainSpec {
            n_train: 135,
            n_dev: 24,
            n_test: 42,
            positive_rate: 0.69,
            mean_shift: [-0.4, 1.96],
            class_separation: 2.5,
            noise_scale: 1.0,
            seed: 23,
        }
    }

    pub fn validate(&self, path: &str) -> Result<()> {
        for (name, n) in [
            ("n_train", self.n_train),
            ("n_dev", self.n_dev),
            ("n_test", self.n_test),
        ] {
            if n == 0 {
                return Err(RadsError::config(format!("{path}.{name}"), "must be at least 1"));
            }
        }
        if !(self.positive_rate > 0.0 && self.positive_rate < 1.0) {
            return Err(RadsError::config(format!("{path}.positive_rate"), "must lie in (0, 1)"));
        }
        if !(self.class_separation > 0.0 && self.class_separation.is_finite()) {
            return Err(RadsError::config(
                format!("{path}.class_separation"),
                "must be positive",
            ));
        }
        if !(self.noise_scale > 0.0 && self.noise_scale.is_finite()) {
            return Err(RadsError::config(format!("{path}.noise_scale"), "must be positive"));
        }
        if self.mean_shift.iter().any(|x| !x.is_finite()) {
            return Err(RadsError::config(format!("{path}.mean_shift"), "must be finite"));
        }
        Ok(())
    }

    /// Positives in a stratified split of `n`: `floor(rate * n)`, the rest negative.
    pub fn positives_in(&self, n: usize) -> usize {
        ((self.positive_rate * n as f64) + 1e-9).floor() as usize
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    pub source: SyntheticDomainSpec,
    pub target: SyntheticDomainSpec,
}

impl Default for Scenario {
    fn default() -> Self {
        Scenario {
            source: SyntheticDomainSpec::default_source(),
            target: SyntheticDomainSpec::default_target(),
        }
    }
}

impl Scenario {
    pub fn validate(&self, path: &str) -> Result<()> {
        self.source.validate(&format!("{path}.source"))?;
        self.target.validate(&format!("{path}.target"))
    }

    pub fn generate(&self) -> Result<DomainPair> {
        generate_domains(&self.source, &self.target)
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct LabeledSet {
    pub features: Vec<Vec<f64>>,
    pub labels: Vec<usize>,
    pub ids: Vec<String>,
}

impl LabeledSet {
    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn positives(&self) -> usize {
        self.labels.iter().filter(|&&y| y == 1).count()
    }

    pub fn validate(&self) -> Result<()> {
        if self.features.len() != self.labels.len() || self.ids.len() != self.labels.len() {
            return Err(RadsError::param("labeled set columns differ in length"));
        }
        let mut seen = std::collections::HashSet::new();
        if let Some(dup) = self.ids.iter().find(|id| !seen.insert(id.as_str())) {
            return Err(RadsError::param(format!("duplicate id {dup:?} in labeled set")));
        }
        if let Some(&y) = self.labels.iter().find(|&&y| y > 1) {
            return Err(RadsError::Label { label: y, classes: 2 });
        }
        Ok(())
    }

    /// Concatenation; ids must stay unique.
    pub fn union(&self, other: &LabeledSet) -> Result<LabeledSet> {
        let mut out = self.clone();
        out.features.extend(other.features.iter().cloned());
        out.labels.extend(&other.labels);
        out.ids.extend(other.ids.iter().cloned());
        out.validate()?;
        Ok(out)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DomainSplits {
    pub train: LabeledSet,
    pub dev: LabeledSet,
    pub test: LabeledSet,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DomainPair {
    pub source: DomainSplits,
    pub target: DomainSplits,
}

fn generate_split(spec: &SyntheticDomainSpec, prefix: &str, split: &str, n: usize, rng: &mut ChaCha8Rng) -> LabeledSet {
    let noise = Normal::new(0.0, spec.noise_scale).expect("validated noise scale");
    let n_pos = spec.positives_in(n);
    let half = spec.class_separation / 2.0;
    let mut rows: Vec<(Vec<f64>, usize)> = (0..n)
        .map(|i| {
            let y = usize::from(i < n_pos);
            let cx = if y == 1 { half } else { -half };
            let x = vec![
                cx + spec.mean_shift[0] + noise.sample(rng),
                spec.mean_shift[1] + noise.sample(rng),
            ];
            (x, y)
        })
        .collect();
    rows.shuffle(rng);
    let mut set = LabeledSet::default();
    for (i, (x, y)) in rows.into_iter().enumerate() {
        set.features.push(x);
        set.labels.push(y);
        set.ids.push(format!("{prefix}-{split}-{i:04}"));
    }
    set
}

fn generate_domain(spec: &SyntheticDomainSpec, prefix: &str) -> DomainSplits {
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    DomainSplits {
        train: generate_split(spec, prefix, "train", spec.n_train, &mut rng),
        dev: generate_split(spec, prefix, "dev", spec.n_dev, &mut rng),
        test: generate_split(spec, prefix, "test", spec.n_test, &mut rng),
    }
}

/// Generates stratified train/dev/test splits for both domains. Ids are
/// prefixed `src-` and `tgt-`.
pub fn generate_domains(src: &SyntheticDomainSpec, tgt: &SyntheticDomainSpec) -> Result<DomainPair> {
    src.validate("source")?;
    tgt.validate("target")?;
    Ok(DomainPair {
        source: generate_domain(src, "src"),
        target: generate_domain(tgt, "tgt"),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn stratified_counts() {
        let mut spec = SyntheticDomainSpec::default_source();
        spec.positive_rate = 0.5;
        spec.n_train = 100;
        let d = generate_domains(&spec, &SyntheticDomainSpec::default_target()).unwrap();
        assert_eq!(d.source.train.positives(), 50);
        assert_eq!(d.target.train.len(), 135);
        assert_eq!(d.target.train.positives(), 93);
    }

    #[test]
    fn default_split_counts() {
        let d = Scenario::default().generate().unwrap();
        assert_eq!((d.source.train.positives(), d.source.train.len()), (27, 196));
        assert_eq!((d.target.dev.positives(), d.target.dev.len()), (16, 24));
        assert_eq!((d.target.test.positives(), d.target.test.len()), (28, 42));
    }

    #[test]
    fn deterministic_and_unique_ids() {
        let s = Scenario::default();
        let a = s.generate().unwrap();
        assert_eq!(a, s.generate().unwrap());
        a.target.train.validate().unwrap();
        a.source.train.union(&a.target.train).unwrap();
    }

    #[test]
    fn invalid_specs_rejected() {
        let mut spec = SyntheticDomainSpec::default_source();
        spec.positive_rate = 1.0;
        assert!(generate_domains(&spec, &spec).is_err());
        let mut spec = SyntheticDomainSpec::default_source();
        spec.n_dev = 0;
        assert!(matches!(
            generate_domains(&SyntheticDomainSpec::default_source(), &spec),
            Err(RadsError::Config { field, .. }) if field == "target.n_dev"
        ));
    }

    #[test]
    fn union_rejects_duplicate_ids() {
        let d = Scenario::default().generate().unwrap();
        assert!(d.source.train.union(&d.source.train).is_err());
    }
}
