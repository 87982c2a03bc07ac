//! The five single classifier learning systems and their shared prediction contract.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::data::{Dataset, FeatureKind, FeatureSpec};
use crate::error::{Error, Result};
use crate::resampling;

pub mod ann;
pub mod encoding;
pub mod knn;
pub mod logistic;
pub mod nbc;
pub mod tree;

pub use ann::{train_ann, AnnConfig, AnnModel};
pub use encoding::Encoder;
pub use knn::{train_knn, KnnConfig, KnnModel};
pub use logistic::{train_logistic, LogisticConfig, LogisticModel};
pub use nbc::{train_nbc, NbcConfig, NbcModel};
pub use tree::{train_tree, TreeConfig, TreeModel};

/// Posterior probability of each class. Components lie in [0, 1] and sum to 1.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClassDistribution(pub [f64; 2]);

impl ClassDistribution {
    pub fn uniform() -> Self {
        Self([0.5, 0.5])
    }

    pub fn from_p1(p1: f64) -> Self {
        let p1 = p1.clamp(0.0, 1.0);
        Self([1.0 - p1, p1])
    }

    /// Normalizes two non-negative scores. Returns `None` when both are zero.
    pub fn normalized(a: f64, b: f64) -> Option<Self> {
        let s = a + b;
        if !(s > 0.0) || !s.is_finite() {
            return None;
        }
        Some(Self([a / s, b / s]))
    }

    pub fn one_hot(class: u8) -> Self {
        if class == 0 {
            Self([1.0, 0.0])
        } else {
            Self([0.0, 1.0])
        }
    }

    pub fn p(&self, class: u8) -> f64 {
        self.0[class as usize]
    }

    /// Most probable class; ties go to class 0.
    pub fn argmax(&self) -> u8 {
        u8::from(self.0[1] > self.0[0])
    }

    pub fn is_valid(&self) -> bool {
        self.0.iter().all(|p| (0.0..=1.0).contains(p)) && (self.0[0] + self.0[1] - 1.0).abs() <= 1e-9
    }
}

/// Anything that maps an in-schema value vector to a class posterior.
pub trait Classifier {
    fn predict_proba(&self, x: &[f64]) -> Result<ClassDistribution>;

    fn predict_class(&self, x: &[f64]) -> Result<u8> {
        Ok(self.predict_proba(x)?.argmax())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum ClassifierKind {
    #[serde(rename = "ANN")]
    Ann,
    #[serde(rename = "DT")]
    Dt,
    #[serde(rename = "kNN")]
    Knn,
    #[serde(rename = "LgD")]
    Lgd,
    #[serde(rename = "NBC")]
    Nbc,
}

impl ClassifierKind {
    /// All five kinds in catalogue order.
    pub const ALL: [ClassifierKind; 5] = [
        ClassifierKind::Ann,
        ClassifierKind::Dt,
        ClassifierKind::Knn,
        ClassifierKind::Lgd,
        ClassifierKind::Nbc,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ClassifierKind::Ann => "ANN",
            ClassifierKind::Dt => "DT",
            ClassifierKind::Knn => "kNN",
            ClassifierKind::Lgd => "LgD",
            ClassifierKind::Nbc => "NBC",
        }
    }
}

impl fmt::Display for ClassifierKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ClassifierKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "ann" => Ok(ClassifierKind::Ann),
            "dt" | "tree" => Ok(ClassifierKind::Dt),
            "knn" => Ok(ClassifierKind::Knn),
            "lgd" | "logistic" => Ok(ClassifierKind::Lgd),
            "nbc" | "nb" => Ok(ClassifierKind::Nbc),
            _ => Err(Error::param("classifier", format!("unknown classifier kind `{s}`"))),
        }
    }
}

/// Hyperparameters for every kind; a member only reads its own section.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ClassifierConfig {
    pub logistic: LogisticConfig,
    pub knn: KnnConfig,
    pub ann: AnnConfig,
    pub tree: TreeConfig,
    pub nbc: NbcConfig,
}

/// Per-feature shape used to validate prediction inputs: `None` for numeric,
/// `Some(cardinality)` for categorical.
pub type Layout = Vec<Option<usize>>;

pub fn layout_of(features: &[FeatureSpec]) -> Layout {
    features
        .iter()
        .map(|f| match &f.kind {
            FeatureKind::Numeric => None,
            FeatureKind::Categorical(c) => Some(c.len()),
        })
        .collect()
}

pub(crate) fn check_layout(layout: &[Option<usize>], x: &[f64]) -> Result<()> {
    if x.len() != layout.len() {
        return Err(Error::LengthMismatch {
            expected: layout.len(),
            actual: x.len(),
        });
    }
    for (j, (card, &v)) in layout.iter().zip(x).enumerate() {
        let ok = match card {
            None => v.is_finite(),
            Some(k) => v >= 0.0 && v.fract() == 0.0 && (v as usize) < *k,
        };
        if !ok {
            return Err(Error::SchemaMismatch {
                feature: format!("#{j}"),
                message: format!("value {v} is not valid for this feature"),
            });
        }
    }
    Ok(())
}

/// A member that only sees a subset of the source features.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProjectedModel {
    pub features: Vec<usize>,
    pub n_source: usize,
    pub inner: Box<TrainedModel>,
}

impl ProjectedModel {
    fn project(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.n_source {
            return Err(Error::LengthMismatch {
                expected: self.n_source,
                actual: x.len(),
            });
        }
        Ok(self.features.iter().map(|&j| x[j]).collect())
    }
}

/// Any fitted single classifier.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "model")]
pub enum TrainedModel {
    Logistic(LogisticModel),
    Knn(KnnModel),
    Ann(AnnModel),
    Tree(TreeModel),
    Nbc(NbcModel),
    Projected(ProjectedModel),
}

impl TrainedModel {
    pub fn kind(&self) -> ClassifierKind {
        match self {
            TrainedModel::Logistic(_) => ClassifierKind::Lgd,
            TrainedModel::Knn(_) => ClassifierKind::Knn,
            TrainedModel::Ann(_) => ClassifierKind::Ann,
            TrainedModel::Tree(_) => ClassifierKind::Dt,
            TrainedModel::Nbc(_) => ClassifierKind::Nbc,
            TrainedModel::Projected(p) => p.inner.kind(),
        }
    }

    /// Source feature indices this model reads, or `None` when it reads all of them.
    pub fn feature_subset(&self) -> Option<&[usize]> {
        match self {
            TrainedModel::Projected(p) => Some(&p.features),
            _ => None,
        }
    }
}

impl Classifier for TrainedModel {
    fn predict_proba(&self, x: &[f64]) -> Result<ClassDistribution> {
        match self {
            TrainedModel::Logistic(m) => m.predict_proba(x),
            TrainedModel::Knn(m) => m.predict_proba(x),
            TrainedModel::Ann(m) => m.predict_proba(x),
            TrainedModel::Tree(m) => m.predict_proba(x),
            TrainedModel::Nbc(m) => m.predict_proba(x),
            TrainedModel::Projected(p) => p.inner.predict_proba(&p.project(x)?),
        }
    }

    fn predict_class(&self, x: &[f64]) -> Result<u8> {
        match self {
            TrainedModel::Logistic(m) => m.predict_class(x),
            TrainedModel::Projected(p) => p.inner.predict_class(&p.project(x)?),
            other => Ok(other.predict_proba(x)?.argmax()),
        }
    }
}

fn has_uniform_weights(ds: &Dataset) -> bool {
    match ds.instances.first() {
        None => true,
        Some(first) => ds.instances.iter().all(|i| i.weight == first.weight),
    }
}

/// Trains one base classifier of `kind`.
///
/// Instance weights are honoured directly by the tree, naive Bayes and logistic
/// learners. k-NN and the neural network instead see a weighted bootstrap
/// replicate drawn with `seed` whenever the weights are not uniform.
pub fn train_classifier(
    kind: ClassifierKind,
    train: &Dataset,
    validation: &Dataset,
    cfg: &ClassifierConfig,
    seed: u64,
) -> Result<TrainedModel> {
    if train.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let resampled;
    let train = match kind {
        ClassifierKind::Knn | ClassifierKind::Ann if !has_uniform_weights(train) => {
            let idx = resampling::weighted_resample_indices(train, crate::seed::derive(seed, &["weighted-resample"]))?;
            resampled = train.subset(&idx).with_weights(&vec![1.0; idx.len()]);
            &resampled
        }
        _ => train,
    };
    Ok(match kind {
        ClassifierKind::Lgd => TrainedModel::Logistic(train_logistic(train, &cfg.logistic)?),
        ClassifierKind::Knn => TrainedModel::Knn(train_knn(train, validation, &cfg.knn)?),
        ClassifierKind::Ann => TrainedModel::Ann(train_ann(train, validation, &cfg.ann, seed)?),
        ClassifierKind::Dt => TrainedModel::Tree(train_tree(train, &cfg.tree)?),
        ClassifierKind::Nbc => TrainedModel::Nbc(train_nbc(train, &cfg.nbc)?),
    })
}

/// Trains `kind` on the columns `features` of `train`/`validation`, wrapping
/// the result so it accepts full-width inputs.
pub fn train_projected(
    kind: ClassifierKind,
    features: &[usize],
    train: &Dataset,
    validation: &Dataset,
    cfg: &ClassifierConfig,
    seed: u64,
) -> Result<TrainedModel> {
    let inner = train_classifier(kind, &train.project(features), &validation.project(features), cfg, seed)?;
    Ok(TrainedModel::Projected(ProjectedModel {
        features: features.to_vec(),
        n_source: train.n_features(),
        inner: Box::new(inner),
    }))
}
