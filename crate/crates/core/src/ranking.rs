//! Feature relevance: per-feature cross-validation error of single-feature
//! trees, reported alongside mutual information with the label.

use serde::{Deserialize, Serialize};

use crate::classifiers::tree::entropy;
use crate::classifiers::{train_tree, TreeConfig};
use crate::data::{Dataset, FeatureKind, FoldAssignment};
use crate::error::{Error, Result};
use crate::evaluation::smoothed_error;

pub const RANKING_TREE_DEPTH: usize = 3;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FeatureScore {
    pub feature: String,
    pub index: usize,
    pub cv_error_mean: f64,
    pub cv_error_std: f64,
    /// Bits.
    pub mutual_information: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FeatureRanking {
    pub scores: Vec<FeatureScore>,
}

/// Type-7 sample quantile of sorted values.
fn quantile(sorted: &[f64], q: f64) -> f64 {
    let h = (sorted.len() - 1) as f64 * q;
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

/// Discrete codes for feature `j`: category indices, or quartile bins for
/// numeric features.
pub fn discretize(ds: &Dataset, j: usize) -> Vec<usize> {
    match &ds.features[j].kind {
        FeatureKind::Categorical(_) => ds.instances.iter().map(|i| i.values[j] as usize).collect(),
        FeatureKind::Numeric => {
            let mut sorted: Vec<f64> = ds.instances.iter().map(|i| i.values[j]).collect();
            if sorted.is_empty() {
                return Vec::new();
            }
            sorted.sort_by(f64::total_cmp);
            let mut cuts: Vec<f64> = [0.25, 0.5, 0.75].iter().map(|&q| quantile(&sorted, q)).collect();
            cuts.dedup();
            ds.instances
                .iter()
                .map(|i| cuts.iter().filter(|&&c| i.values[j] > c).count())
                .collect()
        }
    }
}

/// Plug-in `I(X;Y) = H(Y) - H(Y|X)` in bits from paired codes.
pub fn mutual_information_codes(x: &[usize], y: &[u8]) -> f64 {
    let n = x.len();
    if n == 0 {
        return 0.0;
    }
    let levels = x.iter().max().map_or(0, |m| m + 1);
    let mut joint = vec![[0.0f64; 2]; levels];
    let mut marginal = [0.0f64; 2];
    for (&xi, &yi) in x.iter().zip(y) {
        joint[xi][yi as usize] += 1.0;
        marginal[yi as usize] += 1.0;
    }
    let conditional: f64 = joint
        .iter()
        .map(|c| (c[0] + c[1]) / n as f64 * entropy(c))
        .sum();
    (entropy(&marginal) - conditional).max(0.0)
}

pub fn mutual_information(ds: &Dataset, feature: usize) -> Result<f64> {
    if feature >= ds.n_features() {
        return Err(Error::param("feature", format!("index {feature} out of range")));
    }
    Ok(mutual_information_codes(&discretize(ds, feature), &ds.labels()))
}

fn mean_std(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var = if xs.len() > 1 {
        xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0)
    } else {
        0.0
    };
    (mean, var.sqrt())
}

/// Mean and sample standard deviation of the smoothed error of a depth-limited
/// tree that sees only `feature`, across `folds`.
pub fn per_feature_cv_error(ds: &Dataset, feature: usize, folds: &FoldAssignment) -> Result<(f64, f64)> {
    if folds.k < 2 {
        return Err(Error::param("folds", "need at least 2 folds"));
    }
    if folds.fold_of.len() != ds.len() {
        return Err(Error::LengthMismatch {
            expected: ds.len(),
            actual: folds.fold_of.len(),
        });
    }
    if feature >= ds.n_features() {
        return Err(Error::param("feature", format!("index {feature} out of range")));
    }
    let single = ds.project(&[feature]);
    let cfg = TreeConfig {
        max_depth: RANKING_TREE_DEPTH,
        ..TreeConfig::default()
    };
    let mut errors = Vec::with_capacity(folds.k);
    for f in 0..folds.k {
        let train = single.subset(&folds.train_indices(f));
        let test = single.subset(&folds.test_indices(f));
        train.require_both_classes()?;
        if !test.has_both_classes() {
            return Err(Error::param("folds", format!("fold {f} lacks a class")));
        }
        let tree = train_tree(&train, &cfg)?;
        errors.push(smoothed_error(&tree, &test)?);
    }
    Ok(mean_std(&errors))
}

/// Scores every feature and sorts by ascending mean error, then name.
pub fn rank_features(ds: &Dataset, folds: &FoldAssignment) -> Result<FeatureRanking> {
    if ds.n_features() == 0 {
        return Err(Error::param("features", "dataset has no features"));
    }
    let score = |j: usize| -> Result<FeatureScore> {
        let (cv_error_mean, cv_error_std) = per_feature_cv_error(ds, j, folds)?;
        Ok(FeatureScore {
            feature: ds.features[j].name.clone(),
            index: j,
            cv_error_mean,
            cv_error_std,
            mutual_information: mutual_information(ds, j)?,
        })
    };
    #[cfg(feature = "parallel")]
    let scores: Result<Vec<FeatureScore>> = {
        use rayon::prelude::*;
        (0..ds.n_features()).into_par_iter().map(score).collect()
    };
    #[cfg(not(feature = "parallel"))]
    let scores: Result<Vec<FeatureScore>> = (0..ds.n_features()).map(score).collect();
    let mut scores = scores?;
    scores.sort_by(|a, b| {
        a.cv_error_mean
            .total_cmp(&b.cv_error_mean)
            .then_with(|| a.feature.cmp(&b.feature))
    });
    Ok(FeatureRanking { scores })
}

/// Percent with two decimals, e.g. `19.43 ± 0.12` for 0.194312 / 0.001234.
pub fn format_cv_error(mean: f64, std: f64) -> String {
    format_percent(mean * 100.0, std * 100.0)
}

/// Values already in percent, e.g. `19.43 ± 0.12` for 19.4312 / 0.1234.
pub fn format_percent(mean_pct: f64, std_pct: f64) -> String {
    format!("{mean_pct:.2} ± {std_pct:.2}")
}
