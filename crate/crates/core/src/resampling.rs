//! Perturbations that diversify ensemble members: bagging, boosting,
//! stacking, random feature subsets and in-learner randomisation.

use std::fmt;
use std::str::FromStr;

use rand::seq::index;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::classifiers::tree::RandomSplit;
use crate::classifiers::{
    logistic::Subsample, train_classifier, Classifier, ClassifierConfig, ClassifierKind,
};
use crate::data::{Dataset, FeatureSpec, FoldAssignment, Instance, Schema, N_CLASSES};
use crate::error::{Error, Result};
use crate::seed;

/// Stage-weight cap uses this error floor when a stage makes no mistakes.
pub const BOOST_EPSILON: f64 = 1e-6;
pub const DEFAULT_SUBSET_FRACTION: f64 = 0.5;
pub const DEFAULT_RANDOMISATION_STRENGTH: f64 = 0.25;
const MAX_RESAMPLE_ATTEMPTS: usize = 10;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "procedure", rename_all = "snake_case")]
pub enum ResamplingKind {
    Bagging,
    Boosting,
    Stacking,
    FeatureSubset { fraction: f64 },
    Randomisation { strength: f64 },
}

impl ResamplingKind {
    pub const NAMES: [&'static str; 5] = ["bagging", "boosting", "stacking", "feature_subset", "randomisation"];

    /// The five procedures with default parameters, in catalogue order.
    pub fn all() -> Vec<ResamplingKind> {
        Self::NAMES.iter().map(|n| n.parse().expect("known name")).collect()
    }

    pub fn name(&self) -> &'static str {
        match self {
            ResamplingKind::Bagging => "bagging",
            ResamplingKind::Boosting => "boosting",
            ResamplingKind::Stacking => "stacking",
            ResamplingKind::FeatureSubset { .. } => "feature_subset",
            ResamplingKind::Randomisation { .. } => "randomisation",
        }
    }

    pub fn order(&self) -> usize {
        Self::NAMES.iter().position(|n| *n == self.name()).expect("known name")
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            ResamplingKind::FeatureSubset { fraction } if !(fraction > 0.0 && fraction <= 1.0) => {
                Err(Error::param("fraction", "subset fraction must lie in (0, 1]"))
            }
            ResamplingKind::Randomisation { strength } if !(strength > 0.0 && strength <= 1.0) => {
                Err(Error::param("strength", "randomisation strength must lie in (0, 1]"))
            }
            _ => Ok(()),
        }
    }
}

impl fmt::Display for ResamplingKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Accepts `name` or `name:parameter`, e.g. `feature_subset:0.3`.
impl FromStr for ResamplingKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let (name, param) = match s.split_once(':') {
            Some((n, p)) => (n.trim(), Some(p.trim())),
            None => (s.trim(), None),
        };
        let number = |default: f64| -> Result<f64> {
            param.map_or(Ok(default), |p| {
                p.parse().map_err(|_| Error::param("resampling", format!("bad parameter `{p}`")))
            })
        };
        let kind = match name.to_ascii_lowercase().as_str() {
            "bagging" => ResamplingKind::Bagging,
            "boosting" => ResamplingKind::Boosting,
            "stacking" => ResamplingKind::Stacking,
            "feature_subset" | "feature_selection" => ResamplingKind::FeatureSubset {
                fraction: number(DEFAULT_SUBSET_FRACTION)?,
            },
            "randomisation" | "randomization" => ResamplingKind::Randomisation {
                strength: number(DEFAULT_RANDOMISATION_STRENGTH)?,
            },
            other => return Err(Error::param("resampling", format!("unknown procedure `{other}`"))),
        };
        kind.validate()?;
        Ok(kind)
    }
}

/// `ceil(fraction * n)` clamped to `1..=n`, tolerant of representation error
/// (0.3 * 10 must give 3, not 4).
pub(crate) fn ceil_count(fraction: f64, n: usize) -> usize {
    ((fraction * n as f64 - 1e-9).ceil() as usize).clamp(1, n)
}

fn class_set(labels: &[u8], idx: &[usize]) -> [bool; N_CLASSES] {
    let mut present = [false; N_CLASSES];
    for &i in idx {
        present[labels[i] as usize] = true;
    }
    present
}

/// Draws `n` indices uniformly with replacement. When `labels` holds both
/// classes the draw is repeated until the replicate does too.
pub fn bootstrap_indices(labels: &[u8], seed: u64) -> Result<Vec<usize>> {
    let n = labels.len();
    if n == 0 {
        return Err(Error::EmptyDataset);
    }
    let all: Vec<usize> = (0..n).collect();
    let wanted = class_set(labels, &all);
    let mut rng = seed::rng(seed);
    let mut got = wanted;
    for _ in 0..MAX_RESAMPLE_ATTEMPTS {
        let idx: Vec<usize> = (0..n).map(|_| rng.random_range(0..n)).collect();
        got = class_set(labels, &idx);
        if got == wanted {
            return Ok(idx);
        }
    }
    let missing = (0..N_CLASSES).find(|&c| wanted[c] && !got[c]).unwrap_or(0) as u8;
    Err(Error::MissingClass(missing))
}

pub fn bootstrap_sample(ds: &Dataset, seed: u64) -> Result<Dataset> {
    Ok(ds.subset(&bootstrap_indices(&ds.labels(), seed)?))
}

/// Draws `n` indices with probability proportional to instance weight.
pub fn weighted_resample_indices(ds: &Dataset, seed: u64) -> Result<Vec<usize>> {
    let n = ds.len();
    if n == 0 {
        return Err(Error::EmptyDataset);
    }
    let mut cumulative = Vec::with_capacity(n);
    let mut acc = 0.0;
    for inst in &ds.instances {
        acc += inst.weight;
        cumulative.push(acc);
    }
    if !(acc > 0.0) {
        return Err(Error::param("weights", "instance weights sum to zero"));
    }
    let labels = ds.labels();
    let wanted = class_set(&labels, &(0..n).collect::<Vec<_>>());
    let mut rng = seed::rng(seed);
    let mut idx = Vec::new();
    for _ in 0..MAX_RESAMPLE_ATTEMPTS {
        idx = (0..n)
            .map(|_| {
                let u = rng.random::<f64>() * acc;
                cumulative.partition_point(|&c| c <= u).min(n - 1)
            })
            .collect();
        if class_set(&labels, &idx) == wanted {
            return Ok(idx);
        }
    }
    // heavily skewed weights can make one class vanish; the learner still gets a usable sample
    log::debug!("weighted resample lost a class after {MAX_RESAMPLE_ATTEMPTS} attempts");
    Ok(idx)
}

/// `ceil(fraction * n)` row indices drawn without replacement, sorted, retried
/// until both classes are present when the source has both.
pub fn subsample_indices(ds: &Dataset, fraction: f64, seed: u64) -> Result<Vec<usize>> {
    if !(fraction > 0.0 && fraction <= 1.0) {
        return Err(Error::param("fraction", "subsample fraction must lie in (0, 1]"));
    }
    let n = ds.len();
    if n == 0 {
        return Err(Error::EmptyDataset);
    }
    let m = ceil_count(fraction, n);
    let labels = ds.labels();
    let wanted = class_set(&labels, &(0..n).collect::<Vec<_>>());
    let mut rng = seed::rng(seed);
    let mut idx = Vec::new();
    for _ in 0..MAX_RESAMPLE_ATTEMPTS {
        idx = index::sample(&mut rng, n, m).into_vec();
        idx.sort_unstable();
        if class_set(&labels, &idx) == wanted {
            break;
        }
    }
    Ok(idx)
}

/// Distinct feature indices, `ceil(fraction * n)` of them (at least one), sorted ascending.
pub fn feature_subset(features: &[FeatureSpec], fraction: f64, seed: u64) -> Result<Vec<usize>> {
    let n = features.len();
    if n == 0 {
        return Err(Error::param("features", "empty feature list"));
    }
    if !(fraction > 0.0 && fraction <= 1.0) {
        return Err(Error::param("fraction", "subset fraction must lie in (0, 1]"));
    }
    let m = ceil_count(fraction, n);
    let mut idx = index::sample(&mut seed::rng(seed), n, m).into_vec();
    idx.sort_unstable();
    Ok(idx)
}

/// AdaBoost.M1 bookkeeping: instance weights plus per-round stage weights and errors.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoostState {
    pub weights: Vec<f64>,
    pub alphas: Vec<f64>,
    pub errors: Vec<f64>,
}

impl BoostState {
    pub fn uniform(n: usize) -> Self {
        Self {
            weights: vec![1.0 / n as f64; n],
            alphas: Vec::new(),
            errors: Vec::new(),
        }
    }
}

/// Stage weight `0.5 * ln((1 - e) / e)`; zero once `e >= 0.5`, capped at `e = BOOST_EPSILON`.
pub fn stage_weight(error: f64) -> f64 {
    if error >= 0.5 {
        return 0.0;
    }
    let e = error.max(BOOST_EPSILON);
    0.5 * ((1.0 - e) / e).ln()
}

pub fn boost_round(state: &BoostState, predictions: &[u8], truth: &[u8]) -> Result<BoostState> {
    let n = state.weights.len();
    for len in [predictions.len(), truth.len()] {
        if len != n {
            return Err(Error::LengthMismatch { expected: n, actual: len });
        }
    }
    let wrong: Vec<bool> = predictions.iter().zip(truth).map(|(p, t)| p != t).collect();
    let error: f64 = state
        .weights
        .iter()
        .zip(&wrong)
        .filter(|(_, &w)| w)
        .map(|(x, _)| x)
        .sum();
    let alpha = stage_weight(error);

    let weights = if error >= 0.5 {
        vec![1.0 / n as f64; n]
    } else {
        let (up, down) = (alpha.exp(), (-alpha).exp());
        let raw: Vec<f64> = state
            .weights
            .iter()
            .zip(&wrong)
            .map(|(&w, &bad)| w * if bad { up } else { down })
            .collect();
        let total: f64 = raw.iter().sum();
        raw.into_iter().map(|w| w / total).collect()
    };

    let mut next = state.clone();
    next.weights = weights;
    next.alphas.push(alpha);
    next.errors.push(error);
    Ok(next)
}

/// Where one out-of-fold meta-feature block came from.
#[derive(Clone, Debug, PartialEq)]
pub struct StackFoldProvenance {
    pub fold: usize,
    /// Instance ids the fold's member models were trained on.
    pub trained_on: Vec<usize>,
    /// Instance ids whose meta-features those models produced.
    pub scored: Vec<usize>,
}

pub struct StackingMeta {
    pub dataset: Dataset,
    pub provenance: Vec<StackFoldProvenance>,
}

pub fn meta_feature_names(members: &[ClassifierKind]) -> Vec<String> {
    members.iter().map(|k| format!("p1_{k}")).collect()
}

/// Out-of-fold class-1 posteriors of each member, one meta-feature per member.
pub fn stack_meta_dataset(
    members: &[ClassifierKind],
    train: &Dataset,
    validation: &Dataset,
    folds: &FoldAssignment,
    cfg: &ClassifierConfig,
    seed: u64,
) -> Result<StackingMeta> {
    if members.len() < 2 {
        return Err(Error::param("members", "stacking needs at least two members"));
    }
    if folds.fold_of.len() != train.len() {
        return Err(Error::LengthMismatch {
            expected: train.len(),
            actual: folds.fold_of.len(),
        });
    }
    let mut meta_values = vec![vec![0.0; members.len()]; train.len()];
    let mut provenance = Vec::with_capacity(folds.k);
    for fold in 0..folds.k {
        let fit_idx = folds.train_indices(fold);
        let score_idx = folds.test_indices(fold);
        let fit = train.subset(&fit_idx);
        for (m, &kind) in members.iter().enumerate() {
            let model = train_classifier(
                kind,
                &fit,
                validation,
                cfg,
                seed::derive(seed, &["stack", &fold.to_string(), kind.name()]),
            )
            .map_err(|e| Error::Member {
                index: m,
                kind: kind.to_string(),
                source: Box::new(e),
            })?;
            for &i in &score_idx {
                meta_values[i][m] = model.predict_proba(&train.instances[i].values)?.p(1);
            }
        }
        provenance.push(StackFoldProvenance {
            fold,
            trained_on: fit.ids(),
            scored: score_idx.iter().map(|&i| train.instances[i].id).collect(),
        });
    }
    let schema = Schema::new(
        train.label_name.clone(),
        meta_feature_names(members).into_iter().map(FeatureSpec::numeric).collect(),
    )?;
    let instances = train
        .instances
        .iter()
        .zip(meta_values)
        .map(|(inst, values)| Instance {
            id: inst.id,
            values,
            label: inst.label,
            weight: inst.weight,
        })
        .collect();
    Ok(StackingMeta {
        dataset: Dataset::new(schema, instances)?,
        provenance,
    })
}

/// A member configuration perturbed for randomisation, plus the training seed to use.
#[derive(Clone, Debug, PartialEq)]
pub struct RandomisedConfig {
    pub config: ClassifierConfig,
    pub seed: u64,
}

pub fn randomise_config(
    kind: ClassifierKind,
    base: &ClassifierConfig,
    strength: f64,
    seed: u64,
) -> Result<RandomisedConfig> {
    if !(strength > 0.0 && strength <= 1.0) {
        return Err(Error::param("strength", "randomisation strength must lie in (0, 1]"));
    }
    let mut rng = seed::rng(seed);
    let mut config = base.clone();
    match kind {
        ClassifierKind::Dt => {
            config.tree.random_split = Some(RandomSplit {
                top: ((strength * 20.0).ceil() as usize).max(1),
                seed: rng.random(),
            });
        }
        // the fresh training seed below re-draws the initial weights
        ClassifierKind::Ann => {}
        ClassifierKind::Knn => {
            config.knn.k_jitter = [-2, 0, 2][rng.random_range(0..3)];
        }
        ClassifierKind::Lgd => {
            config.logistic.subsample = Some(Subsample {
                fraction: 0.8,
                seed: rng.random(),
            });
        }
        ClassifierKind::Nbc => {
            config.nbc.alpha = rng.random_range(0.5..=2.0);
        }
    }
    Ok(RandomisedConfig {
        config,
        seed: rng.random(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn stage_weight_closed_form() {
        assert_eq!(stage_weight(0.5), 0.0);
        assert_eq!(stage_weight(0.7), 0.0);
        assert!((stage_weight(0.1) - 0.5 * 9f64.ln()).abs() < 1e-12);
        let cap = 0.5 * ((1.0 - BOOST_EPSILON) / BOOST_EPSILON).ln();
        assert_eq!(stage_weight(0.0), cap);
    }

    #[test]
    fn boost_round_edge_cases() {
        let s = BoostState::uniform(4);
        let half = boost_round(&s, &[0, 0, 1, 1], &[0, 1, 0, 1]).unwrap();
        assert_eq!(half.alphas, vec![0.0]);
        assert_eq!(half.weights, vec![0.25; 4]);

        let perfect = boost_round(&s, &[0, 1, 0, 1], &[0, 1, 0, 1]).unwrap();
        assert_eq!(perfect.alphas[0], stage_weight(0.0));
        for w in &perfect.weights {
            assert!((w - 0.25).abs() < 1e-15);
        }

        let one_wrong = boost_round(&s, &[1, 1, 0, 1], &[0, 1, 0, 1]).unwrap();
        assert!((one_wrong.weights[0] - 0.5).abs() < 1e-12, "{:?}", one_wrong.weights);
        assert!(boost_round(&s, &[0], &[0, 1, 0, 1]).is_err());
    }

    #[test]
    fn parses_procedures() {
        assert_eq!("bagging".parse::<ResamplingKind>().unwrap(), ResamplingKind::Bagging);
        assert_eq!(
            "feature_subset:0.3".parse::<ResamplingKind>().unwrap(),
            ResamplingKind::FeatureSubset { fraction: 0.3 }
        );
        assert!("feature_subset:1.5".parse::<ResamplingKind>().is_err());
        assert!("jackknife".parse::<ResamplingKind>().is_err());
        assert_eq!(ResamplingKind::all().len(), 5);
    }

    #[test]
    fn feature_subset_sizes() {
        let feats: Vec<FeatureSpec> = (0..6).map(|i| FeatureSpec::numeric(format!("f{i}"))).collect();
        assert_eq!(feature_subset(&feats, 1.0, 3).unwrap(), (0..6).collect::<Vec<_>>());
        let half = feature_subset(&feats, 0.5, 3).unwrap();
        assert_eq!(half.len(), 3);
        assert_eq!(feature_subset(&feats, 0.01, 3).unwrap().len(), 1);
        assert!(feature_subset(&[], 0.5, 3).is_err());
        assert_eq!(half, feature_subset(&feats, 0.5, 3).unwrap());
    }

    #[test]
    fn bootstrap_of_one() {
        assert_eq!(bootstrap_indices(&[1], 9).unwrap(), vec![0]);
        assert!(bootstrap_indices(&[], 9).is_err());
    }

    #[test]
    fn randomised_tree_limits_to_top_one_at_small_strength() {
        let r = randomise_config(ClassifierKind::Dt, &ClassifierConfig::default(), 1e-9, 1).unwrap();
        assert_eq!(r.config.tree.random_split.unwrap().top, 1);
        let again = randomise_config(ClassifierKind::Dt, &ClassifierConfig::default(), 1e-9, 1).unwrap();
        assert_eq!(r, again);
        let nb = randomise_config(ClassifierKind::Nbc, &ClassifierConfig::default(), 0.5, 4).unwrap();
        assert!((0.5..=2.0).contains(&nb.config.nbc.alpha));
        assert!(randomise_config(ClassifierKind::Nbc, &ClassifierConfig::default(), 0.0, 4).is_err());
    }
}
