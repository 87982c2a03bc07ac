//! Browser demo: evaluate a classifier system on generated data, combine
//! member outputs under a rule, and rank features. Every entry point returns
//! a JSON string.

use mcls_core::architectures::{combine_sp, parse_members, Architecture, CombinationRule, EnsembleSpec};
use mcls_core::data::SplitSpec;
use mcls_core::evaluation::{run_experiment, System};
use mcls_core::ranking::format_cv_error;
use mcls_core::{make_folds, rank_features, synthetic, ClassDistribution, EnsembleConfig, ResamplingKind};
use serde::Serialize;
use wasm_bindgen::prelude::*;

const FOLDS: usize = 5;

#[derive(Serialize)]
struct SystemScore {
    system: String,
    fold_errors: Vec<Option<f64>>,
    mean_smoothed_error: Option<f64>,
    mean_zero_one_error: Option<f64>,
}

#[derive(Serialize)]
struct Evaluation {
    rows: usize,
    ensemble: SystemScore,
    members: Vec<SystemScore>,
}

fn mean(v: &[Option<f64>]) -> Option<f64> {
    let ok: Vec<f64> = v.iter().flatten().copied().collect();
    (!ok.is_empty()).then(|| ok.iter().sum::<f64>() / ok.len() as f64)
}

fn score(system: &System, ds: &mcls_core::Dataset, seed: u64) -> Result<SystemScore, String> {
    let folds = make_folds(ds, FOLDS, seed, true).map_err(|e| e.to_string())?;
    let split = SplitSpec { seed, ..Default::default() };
    let cells = run_experiment(system, ds, &folds, &split, &EnsembleConfig::default(), seed).map_err(|e| e.to_string())?;
    let fold_errors: Vec<Option<f64>> = cells.iter().map(|c| c.smoothed_error).collect();
    let zero_one: Vec<Option<f64>> = cells.iter().map(|c| c.zero_one_error).collect();
    Ok(SystemScore {
        system: system.label(),
        mean_smoothed_error: mean(&fold_errors),
        mean_zero_one_error: mean(&zero_one),
        fold_errors,
    })
}

/// Cross-validates an ensemble and each of its members on a generated benchmark.
pub fn evaluate_json(rows: usize, seed: u32, members: &str, architecture: &str, resampling: &str) -> Result<String, String> {
    let ds = synthetic::benchmark(rows, u64::from(seed)).map_err(|e| e.to_string())?;
    let kinds = parse_members(members).map_err(|e| e.to_string())?;
    let arch: Architecture = architecture.parse().map_err(|e: mcls_core::Error| e.to_string())?;
    let res: ResamplingKind = resampling.parse().map_err(|e: mcls_core::Error| e.to_string())?;
    let spec = EnsembleSpec::new(kinds.clone(), arch, res, CombinationRule::MajorityVote).map_err(|e| e.to_string())?;
    let ensemble = score(&System::Ensemble(spec), &ds, u64::from(seed))?;
    let members = kinds
        .iter()
        .map(|&kind| score(&System::Single { kind }, &ds, u64::from(seed)))
        .collect::<Result<Vec<_>, _>>()?;
    serde_json::to_string(&Evaluation { rows, ensemble, members }).map_err(|e| e.to_string())
}

#[derive(Serialize)]
struct Combined {
    class: u8,
    p0: f64,
    p1: f64,
}

/// Combines member posteriors P(class 1) under a static-parallel rule.
/// `weights` is only read by `weighted_majority`.
pub fn combine_json(p1: &[f64], weights: &[f64], rule: &str) -> Result<String, String> {
    let rule: CombinationRule = rule.parse().map_err(|e: mcls_core::Error| e.to_string())?;
    if p1.iter().any(|p| !(0.0..=1.0).contains(p)) {
        return Err("probabilities must lie in [0, 1]".into());
    }
    let dists: Vec<ClassDistribution> = p1.iter().map(|&p| ClassDistribution::from_p1(p)).collect();
    let w = (rule == CombinationRule::WeightedMajority).then_some(weights);
    let c = combine_sp(&dists, rule, w).map_err(|e| e.to_string())?;
    serde_json::to_string(&Combined {
        class: c.class,
        p0: c.distribution.0[0],
        p1: c.distribution.0[1],
    })
    .map_err(|e| e.to_string())
}

#[derive(Serialize)]
struct RankRow {
    feature: String,
    cv_error: String,
    mutual_information: f64,
}

/// Ranks the features of a generated dataset; `keyed` selects the dataset
/// whose label is a function of one categorical feature.
pub fn rank_json(rows: usize, seed: u32, keyed: bool) -> Result<String, String> {
    let seed = u64::from(seed);
    let ds = if keyed {
        synthetic::label_determined(rows, seed)
    } else {
        synthetic::benchmark(rows, seed)
    }
    .map_err(|e| e.to_string())?;
    let folds = make_folds(&ds, FOLDS, seed, true).map_err(|e| e.to_string())?;
    let ranking = rank_features(&ds, &folds).map_err(|e| e.to_string())?;
    let rows: Vec<RankRow> = ranking
        .scores
        .iter()
        .map(|s| RankRow {
            feature: s.feature.clone(),
            cv_error: format_cv_error(s.cv_error_mean, s.cv_error_std),
            mutual_information: s.mutual_information,
        })
        .collect();
    serde_json::to_string(&rows).map_err(|e| e.to_string())
}

#[wasm_bindgen]
pub fn evaluate(rows: usize, seed: u32, members: &str, architecture: &str, resampling: &str) -> Result<String, JsValue> {
    evaluate_json(rows, seed, members, architecture, resampling).map_err(|e| JsValue::from_str(&e))
}

#[wasm_bindgen]
pub fn combine(p1: &[f64], weights: &[f64], rule: &str) -> Result<String, JsValue> {
    combine_json(p1, weights, rule).map_err(|e| JsValue::from_str(&e))
}

#[wasm_bindgen]
pub fn rank(rows: usize, seed: u32, keyed: bool) -> Result<String, JsValue> {
    rank_json(rows, seed, keyed).map_err(|e| JsValue::from_str(&e))
}
