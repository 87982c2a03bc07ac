//! Naive Bayes with Dirichlet-smoothed frequency tables for categorical
//! features and per-class Gaussians for numeric ones.

use serde::{Deserialize, Serialize};

use super::{check_layout, ClassDistribution, Classifier, Layout};
use crate::data::{Dataset, FeatureKind};
use crate::error::{Error, Result};

pub const VARIANCE_FLOOR: f64 = 1e-9;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NbcConfig {
    pub alpha: f64,
}

impl Default for NbcConfig {
    fn default() -> Self {
        Self { alpha: 1.0 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "conditional", rename_all = "snake_case")]
pub enum Conditional {
    /// `table[class][category]`, each row summing to 1.
    Categorical { table: [Vec<f64>; 2] },
    Gaussian { mean: [f64; 2], variance: [f64; 2] },
}

impl Conditional {
    fn log_likelihood(&self, class: usize, v: f64) -> f64 {
        match self {
            Conditional::Categorical { table } => table[class][v as usize].ln(),
            Conditional::Gaussian { mean, variance } => {
                let var = variance[class];
                -0.5 * (2.0 * std::f64::consts::PI * var).ln() - (v - mean[class]).powi(2) / (2.0 * var)
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NbcModel {
    pub layout: Layout,
    pub priors: [f64; 2],
    pub conditionals: Vec<Conditional>,
    pub alpha: f64,
}

pub fn train_nbc(train: &Dataset, cfg: &NbcConfig) -> Result<NbcModel> {
    if !(cfg.alpha > 0.0) {
        return Err(Error::param("alpha", "Dirichlet alpha must be positive"));
    }
    train.require_both_classes()?;
    let total = train.total_weight();
    if !(total > 0.0) {
        return Err(Error::param("weights", "instance weights sum to zero"));
    }
    let scale = train.len() as f64 / total;
    let w: Vec<f64> = train.instances.iter().map(|i| i.weight * scale).collect();

    let mut class_weight = [0.0; 2];
    for (inst, &wi) in train.instances.iter().zip(&w) {
        class_weight[inst.label as usize] += wi;
    }
    let n: f64 = class_weight.iter().sum();
    let priors = [(class_weight[0] + 1.0) / (n + 2.0), (class_weight[1] + 1.0) / (n + 2.0)];

    let conditionals = train
        .features
        .iter()
        .enumerate()
        .map(|(j, f)| match &f.kind {
            FeatureKind::Categorical(cats) => {
                let k = cats.len();
                let mut counts = [vec![0.0; k], vec![0.0; k]];
                for (inst, &wi) in train.instances.iter().zip(&w) {
                    counts[inst.label as usize][inst.values[j] as usize] += wi;
                }
                let table = [0, 1].map(|c| {
                    let denom = class_weight[c] + cfg.alpha * k as f64;
                    counts[c].iter().map(|&x| (x + cfg.alpha) / denom).collect()
                });
                Conditional::Categorical { table }
            }
            FeatureKind::Numeric => {
                let mut mean = [0.0; 2];
                for (inst, &wi) in train.instances.iter().zip(&w) {
                    mean[inst.label as usize] += wi * inst.values[j];
                }
                for c in 0..2 {
                    mean[c] /= class_weight[c];
                }
                let mut variance = [0.0; 2];
                for (inst, &wi) in train.instances.iter().zip(&w) {
                    let c = inst.label as usize;
                    variance[c] += wi * (inst.values[j] - mean[c]).powi(2);
                }
                for c in 0..2 {
                    variance[c] = (variance[c] / class_weight[c]).max(VARIANCE_FLOOR);
                }
                Conditional::Gaussian { mean, variance }
            }
        })
        .collect();

    Ok(NbcModel {
        layout: super::layout_of(&train.features),
        priors,
        conditionals,
        alpha: cfg.alpha,
    })
}

impl Classifier for NbcModel {
    fn predict_proba(&self, x: &[f64]) -> Result<ClassDistribution> {
        check_layout(&self.layout, x)?;
        let mut log_post = [self.priors[0].ln(), self.priors[1].ln()];
        for (cond, &v) in self.conditionals.iter().zip(x) {
            for (c, lp) in log_post.iter_mut().enumerate() {
                *lp += cond.log_likelihood(c, v);
            }
        }
        let m = log_post[0].max(log_post[1]);
        let a = (log_post[0] - m).exp();
        let b = (log_post[1] - m).exp();
        Ok(ClassDistribution::normalized(a, b).unwrap_or_else(ClassDistribution::uniform))
    }
}
