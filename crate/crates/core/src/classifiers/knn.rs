//! k-nearest neighbours under cosine similarity, with k chosen on validation data.

use serde::{Deserialize, Serialize};

use super::{ClassDistribution, Classifier, Encoder};
use crate::data::Dataset;
use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct KnnConfig {
    pub k_candidates: Vec<usize>,
    /// Offset applied to the selected k, clamped to the candidate range (randomisation).
    pub k_jitter: i64,
}

impl Default for KnnConfig {
    fn default() -> Self {
        Self {
            k_candidates: vec![1, 3, 5, 7, 9],
            k_jitter: 0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct KnnModel {
    pub encoder: Encoder,
    /// Encoded training rows scaled to unit length (zero rows stay zero).
    pub points: Vec<Vec<f64>>,
    pub labels: Vec<u8>,
    pub k: usize,
    /// Validation 0/1 error per evaluated candidate.
    pub validation_errors: Vec<(usize, f64)>,
}

fn unit(mut v: Vec<f64>) -> (Vec<f64>, f64) {
    let n = v.iter().map(|a| a * a).sum::<f64>().sqrt();
    if n > 0.0 {
        for a in &mut v {
            *a /= n;
        }
    }
    (v, n)
}

/// Cosine similarity; `None` when either vector has zero norm.
pub fn cosine_similarity(a: &[f64], b: &[f64]) -> Option<f64> {
    let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
    let na = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    let nb = b.iter().map(|x| x * x).sum::<f64>().sqrt();
    if na == 0.0 || nb == 0.0 {
        None
    } else {
        Some(dot / (na * nb))
    }
}

/// Indices of `points` ordered by decreasing similarity to the unit vector
/// `query`; equal similarities keep the stored order. Zero rows score 0.
pub fn rank_by_similarity(points: &[Vec<f64>], query: &[f64]) -> Vec<usize> {
    let sims: Vec<f64> = points
        .iter()
        .map(|p| p.iter().zip(query).map(|(a, b)| a * b).sum())
        .collect();
    let mut order: Vec<usize> = (0..points.len()).collect();
    order.sort_by(|&a, &b| sims[b].total_cmp(&sims[a]).then(a.cmp(&b)));
    order
}

/// Encodes and normalizes a query, rejecting zero-norm vectors.
pub fn unit_query(encoder: &Encoder, x: &[f64]) -> Result<Vec<f64>> {
    let (q, n) = unit(encoder.encode(x)?);
    if n == 0.0 {
        return Err(Error::UndefinedCosine);
    }
    Ok(q)
}

fn vote(labels: &[u8], neighbours: &[usize]) -> ClassDistribution {
    let ones = neighbours.iter().filter(|&&i| labels[i] == 1).count() as f64;
    let k = neighbours.len() as f64;
    ClassDistribution([(k - ones) / k, ones / k])
}

pub fn train_knn(train: &Dataset, validation: &Dataset, cfg: &KnnConfig) -> Result<KnnModel> {
    if cfg.k_candidates.is_empty() {
        return Err(Error::param("k_candidates", "empty candidate list"));
    }
    if validation.is_empty() {
        return Err(Error::param("validation", "k-NN needs a non-empty validation set"));
    }
    let mut candidates: Vec<usize> = cfg
        .k_candidates
        .iter()
        .copied()
        .filter(|&k| k >= 1 && k <= train.len())
        .collect();
    candidates.sort_unstable();
    candidates.dedup();
    if candidates.is_empty() {
        return Err(Error::param(
            "k_candidates",
            format!("no candidate fits {} training instances", train.len()),
        ));
    }

    let encoder = Encoder::fit(train);
    let points: Vec<Vec<f64>> = encoder.encode_dataset(train).into_iter().map(|v| unit(v).0).collect();
    let labels = train.labels();

    let mut mistakes = vec![0usize; candidates.len()];
    let mut scored = 0usize;
    for inst in &validation.instances {
        let Ok(q) = unit_query(&encoder, &inst.values) else {
            // cosine undefined for this row; it cannot inform the choice of k
            continue;
        };
        scored += 1;
        let order = rank_by_similarity(&points, &q);
        for (c, &k) in candidates.iter().enumerate() {
            if vote(&labels, &order[..k]).argmax() != inst.label {
                mistakes[c] += 1;
            }
        }
    }
    let denom = scored.max(1) as f64;
    let validation_errors: Vec<(usize, f64)> = candidates
        .iter()
        .zip(&mistakes)
        .map(|(&k, &m)| (k, m as f64 / denom))
        .collect();
    // first minimum wins, i.e. the smallest k among ties
    let mut best = validation_errors[0];
    for &(k, e) in &validation_errors[1..] {
        if e < best.1 {
            best = (k, e);
        }
    }
    let (lo, hi) = (candidates[0] as i64, *candidates.last().unwrap() as i64);
    let k = (best.0 as i64 + cfg.k_jitter).clamp(lo, hi) as usize;

    Ok(KnnModel {
        encoder,
        points,
        labels,
        k,
        validation_errors,
    })
}

impl KnnModel {
    /// Training-set indices of the k nearest neighbours of `x`.
    pub fn neighbours(&self, x: &[f64]) -> Result<Vec<usize>> {
        let q = unit_query(&self.encoder, x)?;
        let mut order = rank_by_similarity(&self.points, &q);
        order.truncate(self.k);
        Ok(order)
    }
}

impl Classifier for KnnModel {
    fn predict_proba(&self, x: &[f64]) -> Result<ClassDistribution> {
        Ok(vote(&self.labels, &self.neighbours(x)?))
    }
}
