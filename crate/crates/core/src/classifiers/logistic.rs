//! Logistic discrimination fitted by gradient descent on the weighted
//! negative log-likelihood with backtracking step halving.

use serde::{Deserialize, Serialize};

use super::{ClassDistribution, Classifier, Encoder};
use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::resampling;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LogisticConfig {
    pub max_iters: usize,
    pub tolerance: f64,
    pub cutoff: f64,
    /// Weight-vector norm at which training stops and flags separation.
    pub max_weight_norm: f64,
    /// Train on a seed-chosen fraction of the rows (randomisation).
    pub subsample: Option<Subsample>,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Subsample {
    pub fraction: f64,
    pub seed: u64,
}

impl Default for LogisticConfig {
    fn default() -> Self {
        Self {
            max_iters: 300,
            tolerance: 1e-6,
            cutoff: 0.5,
            max_weight_norm: 1e3,
            subsample: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LogisticModel {
    pub encoder: Encoder,
    pub weights: Vec<f64>,
    pub bias: f64,
    pub cutoff: f64,
    /// Set when the training classes are perfectly separated, so the
    /// likelihood has no finite maximizer; weights stay within the norm cap.
    pub separated: bool,
    pub iterations: usize,
    pub converged: bool,
}

pub fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// ln(1 + e^z) without overflow.
fn softplus(z: f64) -> f64 {
    z.max(0.0) + (-z.abs()).exp().ln_1p()
}

/// Weighted mean negative log-likelihood and its gradient.
///
/// `params[0]` is the bias, `params[1..]` the weights over the columns of `x`.
/// Weights `w` need not be normalized.
pub fn negative_log_likelihood(params: &[f64], x: &[Vec<f64>], y: &[f64], w: &[f64]) -> (f64, Vec<f64>) {
    let total: f64 = w.iter().sum();
    let mut loss = 0.0;
    let mut grad = vec![0.0; params.len()];
    for ((row, &yi), &wi) in x.iter().zip(y).zip(w) {
        if wi == 0.0 {
            continue;
        }
        let z = params[0] + row.iter().zip(&params[1..]).map(|(a, b)| a * b).sum::<f64>();
        loss += wi * (softplus(z) - yi * z);
        let r = wi * (sigmoid(z) - yi);
        grad[0] += r;
        for (g, a) in grad[1..].iter_mut().zip(row) {
            *g += r * a;
        }
    }
    for g in &mut grad {
        *g /= total;
    }
    (loss / total, grad)
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|a| a * a).sum::<f64>().sqrt()
}

pub fn train_logistic(train: &Dataset, cfg: &LogisticConfig) -> Result<LogisticModel> {
    if !(cfg.cutoff > 0.0 && cfg.cutoff < 1.0) {
        return Err(Error::param("cutoff", "must lie in (0, 1)"));
    }
    let sub;
    let train = match cfg.subsample {
        Some(s) => {
            let idx = resampling::subsample_indices(train, s.fraction, s.seed)?;
            sub = train.subset(&idx);
            &sub
        }
        None => train,
    };
    train.require_both_classes()?;
    if !(train.total_weight() > 0.0) {
        return Err(Error::param("weights", "instance weights sum to zero"));
    }
    let encoder = Encoder::fit(train);
    let x = encoder.encode_dataset(train);
    let y: Vec<f64> = train.instances.iter().map(|i| f64::from(i.label)).collect();
    let w: Vec<f64> = train.instances.iter().map(|i| i.weight).collect();

    let mut params = vec![0.0; encoder.width() + 1];
    let (mut loss, mut grad) = negative_log_likelihood(&params, &x, &y, &w);
    let mut step = 1.0;
    let mut iterations = 0;
    let mut converged = false;
    let mut separated = false;
    while iterations < cfg.max_iters {
        let gnorm2: f64 = grad.iter().map(|g| g * g).sum();
        if gnorm2.sqrt() <= cfg.tolerance {
            converged = true;
            break;
        }
        iterations += 1;
        let mut accepted = None;
        for _ in 0..60 {
            let candidate: Vec<f64> = params.iter().zip(&grad).map(|(p, g)| p - step * g).collect();
            let (l, g) = negative_log_likelihood(&candidate, &x, &y, &w);
            if l.is_finite() && l <= loss - 1e-4 * step * gnorm2 {
                accepted = Some((candidate, l, g));
                break;
            }
            step *= 0.5;
        }
        let Some((candidate, l, g)) = accepted else {
            // no descent step found: at numerical optimum
            converged = true;
            break;
        };
        params = candidate;
        loss = l;
        grad = g;
        step = (step * 2.0).min(1e6);

        let wn = norm(&params[1..]);
        if wn > cfg.max_weight_norm {
            let scale = cfg.max_weight_norm / wn;
            for p in &mut params {
                *p *= scale;
            }
            separated = true;
            log::debug!("logistic: weight norm capped at {}, data separable", cfg.max_weight_norm);
            break;
        }
    }
    // A hyperplane that strictly separates the classes means the likelihood
    // has no finite maximizer; the tolerance stop merely halted the divergence.
    if !separated {
        separated = x.iter().zip(&y).zip(&w).all(|((xi, &yi), &wi)| {
            let z = params[0] + params[1..].iter().zip(xi).map(|(a, b)| a * b).sum::<f64>();
            wi == 0.0 || (z > 0.0) == (yi > 0.5) && z != 0.0
        });
    }
    Ok(LogisticModel {
        encoder,
        bias: params[0],
        weights: params[1..].to_vec(),
        cutoff: cfg.cutoff,
        separated,
        iterations,
        converged,
    })
}

impl LogisticModel {
    pub fn linear_score(&self, x: &[f64]) -> Result<f64> {
        let e = self.encoder.encode(x)?;
        Ok(self.bias + e.iter().zip(&self.weights).map(|(a, b)| a * b).sum::<f64>())
    }
}

impl Classifier for LogisticModel {
    fn predict_proba(&self, x: &[f64]) -> Result<ClassDistribution> {
        Ok(ClassDistribution::from_p1(sigmoid(self.linear_score(x)?)))
    }

    /// Class 1 when the fitted probability reaches the cutoff.
    fn predict_class(&self, x: &[f64]) -> Result<u8> {
        Ok(u8::from(sigmoid(self.linear_score(x)?) >= self.cutoff))
    }
}
