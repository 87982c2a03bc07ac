//! One-hidden-layer feed-forward network with logistic units, trained by
//! full-batch gradient descent on the sum of squared errors. The hidden layer
//! size is chosen by validation SSE.

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::logistic::sigmoid;
use super::{ClassDistribution, Classifier, Encoder};
use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::seed;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AnnConfig {
    pub hidden_candidates: Vec<usize>,
    pub epochs: usize,
    pub learning_rate: f64,
}

impl Default for AnnConfig {
    fn default() -> Self {
        Self {
            hidden_candidates: vec![1, 2, 4, 8],
            epochs: 400,
            learning_rate: 2.0,
        }
    }
}

/// Flat parameter vector: hidden weights (row-major, hidden x inputs),
/// hidden biases, output weights, output bias.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Network {
    pub inputs: usize,
    pub hidden: usize,
    pub params: Vec<f64>,
}

impl Network {
    pub fn param_count(inputs: usize, hidden: usize) -> usize {
        hidden * inputs + 2 * hidden + 1
    }

    pub fn random(inputs: usize, hidden: usize, seed: u64) -> Self {
        let mut rng = seed::rng(seed);
        let params = (0..Self::param_count(inputs, hidden))
            .map(|_| rng.random_range(-0.5..0.5))
            .collect();
        Self { inputs, hidden, params }
    }

    fn split(&self) -> (&[f64], &[f64], &[f64], f64) {
        let (d, h) = (self.inputs, self.hidden);
        let p = &self.params;
        (&p[..h * d], &p[h * d..h * d + h], &p[h * d + h..h * d + 2 * h], p[h * d + 2 * h])
    }

    fn forward_into(&self, x: &[f64], hidden: &mut [f64]) -> f64 {
        let (w1, b1, w2, b2) = self.split();
        let d = self.inputs;
        let mut z = b2;
        for j in 0..self.hidden {
            let row = &w1[j * d..(j + 1) * d];
            let a = b1[j] + row.iter().zip(x).map(|(w, v)| w * v).sum::<f64>();
            hidden[j] = sigmoid(a);
            z += w2[j] * hidden[j];
        }
        sigmoid(z)
    }

    /// Output unit activation in (0, 1).
    pub fn output(&self, x: &[f64]) -> f64 {
        let mut hidden = vec![0.0; self.hidden];
        self.forward_into(x, &mut hidden)
    }

    /// Sum of squared errors over `xs` with targets `ts`.
    pub fn sse(&self, xs: &[Vec<f64>], ts: &[f64]) -> f64 {
        let mut hidden = vec![0.0; self.hidden];
        xs.iter()
            .zip(ts)
            .map(|(x, t)| (self.forward_into(x, &mut hidden) - t).powi(2))
            .sum()
    }

    /// SSE and its gradient with respect to `params`, by backpropagation.
    pub fn sse_and_gradient(&self, xs: &[Vec<f64>], ts: &[f64]) -> (f64, Vec<f64>) {
        let (d, h) = (self.inputs, self.hidden);
        let (_, _, w2, _) = self.split();
        let mut grad = vec![0.0; self.params.len()];
        let mut hidden = vec![0.0; h];
        let mut sse = 0.0;
        for (x, &t) in xs.iter().zip(ts) {
            let o = self.forward_into(x, &mut hidden);
            let err = o - t;
            sse += err * err;
            let delta_out = 2.0 * err * o * (1.0 - o);
            let (gw1, rest) = grad.split_at_mut(h * d);
            let (gb1, rest) = rest.split_at_mut(h);
            let (gw2, gb2) = rest.split_at_mut(h);
            gb2[0] += delta_out;
            for j in 0..h {
                gw2[j] += delta_out * hidden[j];
                let delta_h = delta_out * w2[j] * hidden[j] * (1.0 - hidden[j]);
                gb1[j] += delta_h;
                for (g, v) in gw1[j * d..(j + 1) * d].iter_mut().zip(x) {
                    *g += delta_h * v;
                }
            }
        }
        (sse, grad)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AnnModel {
    pub encoder: Encoder,
    pub network: Network,
    /// Validation SSE per candidate hidden size; `None` when training diverged.
    pub validation_sse: Vec<(usize, Option<f64>)>,
}

impl AnnModel {
    pub fn hidden_count(&self) -> usize {
        self.network.hidden
    }
}

fn fit_network(xs: &[Vec<f64>], ts: &[f64], hidden: usize, cfg: &AnnConfig, seed: u64) -> Option<Network> {
    let inputs = xs.first().map_or(0, Vec::len);
    let mut net = Network::random(inputs, hidden, seed);
    let scale = cfg.learning_rate / xs.len().max(1) as f64;
    for _ in 0..cfg.epochs {
        let (sse, grad) = net.sse_and_gradient(xs, ts);
        if !sse.is_finite() {
            return None;
        }
        for (p, g) in net.params.iter_mut().zip(&grad) {
            *p -= scale * g;
        }
    }
    net.params.iter().all(|p| p.is_finite()).then_some(net)
}

pub fn train_ann(train: &Dataset, validation: &Dataset, cfg: &AnnConfig, seed: u64) -> Result<AnnModel> {
    if cfg.hidden_candidates.is_empty() || cfg.hidden_candidates.contains(&0) {
        return Err(Error::param("hidden_candidates", "need at least one positive hidden size"));
    }
    if train.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let encoder = Encoder::fit(train);
    let xs = encoder.encode_dataset(train);
    let ts: Vec<f64> = train.instances.iter().map(|i| f64::from(i.label)).collect();
    let (vx, vt) = if validation.is_empty() {
        (xs.clone(), ts.clone())
    } else {
        (
            encoder.encode_dataset(validation),
            validation.instances.iter().map(|i| f64::from(i.label)).collect(),
        )
    };

    let mut candidates = cfg.hidden_candidates.clone();
    candidates.sort_unstable();
    candidates.dedup();
    let mut best: Option<(f64, Network)> = None;
    let mut report = Vec::with_capacity(candidates.len());
    for &h in &candidates {
        let net = fit_network(&xs, &ts, h, cfg, seed::derive_index(seed, "ann-init", h));
        let sse = net.as_ref().map(|n| n.sse(&vx, &vt)).filter(|s| s.is_finite());
        report.push((h, sse));
        match (net, sse) {
            (Some(net), Some(s)) if best.as_ref().is_none_or(|(b, _)| s < *b) => best = Some((s, net)),
            (None, _) | (_, None) => log::warn!("ann: hidden={h} diverged, skipping"),
            _ => {}
        }
    }
    let (_, network) = best.ok_or_else(|| Error::Diverged("every hidden-layer candidate diverged".into()))?;
    Ok(AnnModel {
        encoder,
        network,
        validation_sse: report,
    })
}

impl Classifier for AnnModel {
    fn predict_proba(&self, x: &[f64]) -> Result<ClassDistribution> {
        let e = self.encoder.encode(x)?;
        Ok(ClassDistribution::from_p1(self.network.output(&e)))
    }
}
