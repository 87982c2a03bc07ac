//! Multiple classifier learning systems: static parallel combination,
//! multi-stage (boosting-style) construction, dynamic classifier selection,
//! and exhaustive enumeration of member sets.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::classifiers::knn::{rank_by_similarity, unit_query};
use crate::classifiers::{
    train_classifier, train_logistic, train_projected, ClassDistribution, Classifier, ClassifierConfig,
    ClassifierKind, Encoder, LogisticModel, TrainedModel,
};
use crate::data::{make_folds, Dataset};
use crate::error::{Error, Result};
use crate::resampling::{
    boost_round, bootstrap_indices, feature_subset, randomise_config, stack_meta_dataset, BoostState,
    ResamplingKind, StackFoldProvenance,
};
use crate::seed;

pub const MIN_MEMBERS: usize = 2;
pub const MAX_MEMBERS: usize = 5;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Architecture {
    StaticParallel,
    MultiStage,
    DynamicSelection,
}

impl Architecture {
    pub const ALL: [Architecture; 3] = [
        Architecture::StaticParallel,
        Architecture::MultiStage,
        Architecture::DynamicSelection,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Architecture::StaticParallel => "static_parallel",
            Architecture::MultiStage => "multi_stage",
            Architecture::DynamicSelection => "dynamic_selection",
        }
    }
}

impl fmt::Display for Architecture {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Architecture {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "static_parallel" | "sp" => Ok(Architecture::StaticParallel),
            "multi_stage" | "ms" => Ok(Architecture::MultiStage),
            "dynamic_selection" | "dcs" => Ok(Architecture::DynamicSelection),
            other => Err(Error::param("architecture", format!("unknown architecture `{other}`"))),
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CombinationRule {
    #[default]
    MajorityVote,
    WeightedMajority,
    Sum,
    Product,
    Min,
    Max,
}

impl CombinationRule {
    pub fn name(self) -> &'static str {
        match self {
            CombinationRule::MajorityVote => "majority_vote",
            CombinationRule::WeightedMajority => "weighted_majority",
            CombinationRule::Sum => "sum",
            CombinationRule::Product => "product",
            CombinationRule::Min => "min",
            CombinationRule::Max => "max",
        }
    }
}

impl FromStr for CombinationRule {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s.trim().to_ascii_lowercase().as_str() {
            "majority_vote" | "majority" => CombinationRule::MajorityVote,
            "weighted_majority" => CombinationRule::WeightedMajority,
            "sum" => CombinationRule::Sum,
            "product" => CombinationRule::Product,
            "min" => CombinationRule::Min,
            "max" => CombinationRule::Max,
            other => return Err(Error::param("combination_rule", format!("unknown rule `{other}`"))),
        })
    }
}

/// One experimental ensemble: member kinds, architecture, resampling and (for SP) combiner.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EnsembleSpec {
    pub members: Vec<ClassifierKind>,
    pub architecture: Architecture,
    pub resampling: ResamplingKind,
    #[serde(default)]
    pub combination: CombinationRule,
}

impl EnsembleSpec {
    pub fn new(
        members: Vec<ClassifierKind>,
        architecture: Architecture,
        resampling: ResamplingKind,
        combination: CombinationRule,
    ) -> Result<Self> {
        let spec = Self {
            members,
            architecture,
            resampling,
            combination,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        let m = self.members.len();
        if !(MIN_MEMBERS..=MAX_MEMBERS).contains(&m) {
            return Err(Error::param("members", format!("need 2 to 5 members, got {m}")));
        }
        for (i, a) in self.members.iter().enumerate() {
            if self.members[i + 1..].contains(a) {
                return Err(Error::param("members", format!("member {a} listed twice")));
            }
        }
        self.resampling.validate()
    }

    /// Member kinds joined with `+`, e.g. `ANN+DT+kNN`.
    pub fn members_label(&self) -> String {
        members_label(&self.members)
    }
}

pub fn members_label(members: &[ClassifierKind]) -> String {
    members.iter().map(|k| k.name()).collect::<Vec<_>>().join("+")
}

pub fn parse_members(label: &str) -> Result<Vec<ClassifierKind>> {
    label.split('+').map(str::parse).collect()
}

/// Every member set of size 2 to 5 drawn from the five kinds.
#[derive(Clone, Debug, PartialEq)]
pub struct EnsembleCatalog {
    pub member_sets: Vec<Vec<ClassifierKind>>,
}

impl EnsembleCatalog {
    pub fn of_size(&self, size: usize) -> impl Iterator<Item = &Vec<ClassifierKind>> {
        self.member_sets.iter().filter(move |s| s.len() == size)
    }
}

/// Ordered by size, then lexicographically by catalogue position.
pub fn enumerate_member_sets() -> EnsembleCatalog {
    let kinds = ClassifierKind::ALL;
    let mut member_sets = Vec::new();
    for size in MIN_MEMBERS..=MAX_MEMBERS {
        let mut by_size: Vec<Vec<ClassifierKind>> = (0u32..1 << kinds.len())
            .filter(|mask| mask.count_ones() as usize == size)
            .map(|mask| (0..kinds.len()).filter(|b| mask & (1 << b) != 0).map(|b| kinds[b]).collect())
            .collect();
        by_size.sort();
        member_sets.extend(by_size);
    }
    EnsembleCatalog { member_sets }
}

/// Combined posterior plus the winning class (which can differ from the
/// posterior's argmax only when vote shares tie).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Combined {
    pub distribution: ClassDistribution,
    pub class: u8,
}

pub fn combine_sp(
    distributions: &[ClassDistribution],
    rule: CombinationRule,
    weights: Option<&[f64]>,
) -> Result<Combined> {
    if distributions.is_empty() {
        return Err(Error::param("distributions", "nothing to combine"));
    }
    match (rule, weights) {
        (CombinationRule::WeightedMajority, None) => {
            return Err(Error::param("weights", "weighted majority needs member weights"))
        }
        (CombinationRule::WeightedMajority, Some(w)) if w.len() != distributions.len() => {
            return Err(Error::LengthMismatch {
                expected: distributions.len(),
                actual: w.len(),
            })
        }
        (r, Some(_)) if r != CombinationRule::WeightedMajority => {
            return Err(Error::param("weights", "weights only apply to weighted majority"))
        }
        _ => {}
    }
    let summed = distributions
        .iter()
        .fold([0.0; 2], |acc, d| [acc[0] + d.0[0], acc[1] + d.0[1]]);
    let aggregate = match rule {
        CombinationRule::MajorityVote | CombinationRule::WeightedMajority => {
            let mut votes = [0.0; 2];
            for (i, d) in distributions.iter().enumerate() {
                votes[d.argmax() as usize] += weights.map_or(1.0, |w| w[i]);
            }
            votes
        }
        CombinationRule::Sum => summed,
        CombinationRule::Product => distributions
            .iter()
            .fold([1.0; 2], |acc, d| [acc[0] * d.0[0], acc[1] * d.0[1]]),
        CombinationRule::Min => distributions
            .iter()
            .fold([f64::INFINITY; 2], |acc, d| [acc[0].min(d.0[0]), acc[1].min(d.0[1])]),
        CombinationRule::Max => distributions
            .iter()
            .fold([f64::NEG_INFINITY; 2], |acc, d| [acc[0].max(d.0[0]), acc[1].max(d.0[1])]),
    };
    let distribution = ClassDistribution::normalized(aggregate[0], aggregate[1])
        .ok_or(Error::ZeroSumAggregate(rule.name()))?;
    let class = if aggregate[0] != aggregate[1] {
        u8::from(aggregate[1] > aggregate[0])
    } else {
        u8::from(summed[1] > summed[0])
    };
    Ok(Combined { distribution, class })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EnsembleConfig {
    pub classifiers: ClassifierConfig,
    /// Neighbourhood size for dynamic selection.
    pub locality_k: usize,
    /// Internal folds used to build out-of-fold stacking features.
    pub stacking_folds: usize,
}

impl Default for EnsembleConfig {
    fn default() -> Self {
        Self {
            classifiers: ClassifierConfig::default(),
            locality_k: 5,
            stacking_folds: 5,
        }
    }
}

/// Validation material retained for dynamic selection.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DcsReferee {
    pub encoder: Encoder,
    /// Unit-length encoded validation rows.
    pub points: Vec<Vec<f64>>,
    /// `correct[member][row]`.
    pub correct: Vec<Vec<bool>>,
    pub global_accuracy: Vec<f64>,
    pub locality_k: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EnsembleModel {
    pub spec: EnsembleSpec,
    pub n_features: usize,
    pub members: Vec<TrainedModel>,
    /// Member validation accuracies (weighted-majority weights).
    pub member_weights: Vec<f64>,
    /// Per-stage weights when members were fitted sequentially.
    pub stage_alphas: Vec<f64>,
    pub stage_errors: Vec<f64>,
    pub referee: Option<DcsReferee>,
    /// Stacking meta-learner over member class-1 posteriors.
    pub meta: Option<LogisticModel>,
    /// Multi-stage model whose every stage weight is zero; votes unweighted.
    pub degenerate: bool,
}

/// Which instances each part of an ensemble was fitted on.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct TrainingLog {
    pub member_train_ids: Vec<Vec<usize>>,
    pub validation_ids: Vec<usize>,
    pub stacking: Vec<StackFoldProvenance>,
}

fn member_error(index: usize, kind: ClassifierKind) -> impl FnOnce(Error) -> Error {
    move |e| Error::Member {
        index,
        kind: kind.to_string(),
        source: Box::new(e),
    }
}

fn accuracy(model: &impl Classifier, ds: &Dataset) -> Result<f64> {
    if ds.is_empty() {
        return Ok(0.0);
    }
    let mut hits = 0usize;
    for inst in &ds.instances {
        if model.predict_class(&inst.values)? == inst.label {
            hits += 1;
        }
    }
    Ok(hits as f64 / ds.len() as f64)
}

/// Fits an ensemble of any architecture.
///
/// Each member is trained on its resampled view of `train`: its own bootstrap
/// replicate (bagging), its own feature subset, or its own perturbed
/// configuration (randomisation). Members are fitted sequentially on boosting
/// weights when the architecture is multi-stage or the procedure is boosting.
/// Stacking replaces the combiner with a logistic meta-learner under every
/// architecture.
pub fn train_ensemble(
    spec: &EnsembleSpec,
    train: &Dataset,
    validation: &Dataset,
    cfg: &EnsembleConfig,
    seed: u64,
) -> Result<(EnsembleModel, TrainingLog)> {
    spec.validate()?;
    train.require_both_classes()?;
    let n = train.len();
    let labels = train.labels();
    let sequential = spec.architecture == Architecture::MultiStage || spec.resampling == ResamplingKind::Boosting;
    let mut boost = BoostState::uniform(n);
    let mut members = Vec::with_capacity(spec.members.len());
    let mut log = TrainingLog {
        validation_ids: validation.ids(),
        ..Default::default()
    };

    for (i, &kind) in spec.members.iter().enumerate() {
        let member_seed = seed::derive_index(seed, "member", i);
        let mut config = cfg.classifiers.clone();
        let mut train_seed = member_seed;
        let mut rows: Vec<usize> = (0..n).collect();
        let mut features = None;
        match spec.resampling {
            ResamplingKind::Bagging => {
                rows = bootstrap_indices(&labels, seed::derive(member_seed, &["bootstrap"])).map_err(member_error(i, kind))?
            }
            ResamplingKind::FeatureSubset { fraction } => {
                features = Some(feature_subset(&train.features, fraction, seed::derive(member_seed, &["features"]))?)
            }
            ResamplingKind::Randomisation { strength } => {
                let r = randomise_config(kind, &config, strength, seed::derive(member_seed, &["randomise"]))?;
                config = r.config;
                train_seed = r.seed;
            }
            ResamplingKind::Boosting | ResamplingKind::Stacking => {}
        }
        let mut view = train.subset(&rows);
        if sequential {
            let w: Vec<f64> = rows.iter().map(|&r| boost.weights[r]).collect();
            view = view.with_weights(&w);
        }
        let model = match &features {
            Some(f) => train_projected(kind, f, &view, validation, &config, train_seed),
            None => train_classifier(kind, &view, validation, &config, train_seed),
        }
        .map_err(member_error(i, kind))?;
        log.member_train_ids.push(view.ids());

        if sequential {
            let preds = train
                .instances
                .iter()
                .map(|inst| model.predict_class(&inst.values))
                .collect::<Result<Vec<u8>>>()
                .map_err(member_error(i, kind))?;
            boost = boost_round(&boost, &preds, &labels)?;
        }
        members.push(model);
    }

    let member_weights = members
        .iter()
        .map(|m| accuracy(m, validation))
        .collect::<Result<Vec<f64>>>()?;

    let referee = if spec.architecture == Architecture::DynamicSelection {
        if validation.is_empty() {
            return Err(Error::param("validation", "dynamic selection needs a validation set"));
        }
        let encoder = Encoder::fit(train);
        let points = validation
            .instances
            .iter()
            .map(|inst| unit_query(&encoder, &inst.values).unwrap_or_else(|_| vec![0.0; encoder.width()]))
            .collect();
        let correct = members
            .iter()
            .map(|m| {
                validation
                    .instances
                    .iter()
                    .map(|inst| Ok(m.predict_class(&inst.values)? == inst.label))
                    .collect::<Result<Vec<bool>>>()
            })
            .collect::<Result<Vec<_>>>()?;
        Some(DcsReferee {
            encoder,
            points,
            correct,
            global_accuracy: member_weights.clone(),
            locality_k: cfg.locality_k.max(1),
        })
    } else {
        None
    };

    let meta = if spec.resampling == ResamplingKind::Stacking {
        let k = cfg.stacking_folds.clamp(2, n);
        let folds = make_folds(train, k, seed::derive(seed, &["stacking-folds"]), true)?;
        let stacked = stack_meta_dataset(
            &spec.members,
            train,
            validation,
            &folds,
            &cfg.classifiers,
            seed::derive(seed, &["stacking"]),
        )?;
        log.stacking = stacked.provenance;
        Some(train_logistic(&stacked.dataset, &cfg.classifiers.logistic)?)
    } else {
        None
    };

    let degenerate = spec.architecture == Architecture::MultiStage && boost.alphas.iter().all(|&a| a == 0.0);
    if degenerate {
        log::warn!("multi-stage ensemble {}: every stage weight is zero, voting unweighted", spec.members_label());
    }

    Ok((
        EnsembleModel {
            spec: spec.clone(),
            n_features: train.n_features(),
            members,
            member_weights,
            stage_alphas: if sequential { boost.alphas } else { Vec::new() },
            stage_errors: if sequential { boost.errors } else { Vec::new() },
            referee,
            meta,
            degenerate,
        },
        log,
    ))
}

fn require_architecture(spec: &EnsembleSpec, expected: Architecture) -> Result<()> {
    if spec.architecture != expected {
        return Err(Error::param(
            "architecture",
            format!("expected {expected}, spec says {}", spec.architecture),
        ));
    }
    Ok(())
}

pub fn train_static_parallel(
    spec: &EnsembleSpec,
    train: &Dataset,
    validation: &Dataset,
    cfg: &EnsembleConfig,
    seed: u64,
) -> Result<(EnsembleModel, TrainingLog)> {
    require_architecture(spec, Architecture::StaticParallel)?;
    train_ensemble(spec, train, validation, cfg, seed)
}

pub fn train_multi_stage(
    spec: &EnsembleSpec,
    train: &Dataset,
    validation: &Dataset,
    cfg: &EnsembleConfig,
    seed: u64,
) -> Result<(EnsembleModel, TrainingLog)> {
    require_architecture(spec, Architecture::MultiStage)?;
    train_ensemble(spec, train, validation, cfg, seed)
}

pub fn train_dynamic_selection(
    spec: &EnsembleSpec,
    train: &Dataset,
    validation: &Dataset,
    cfg: &EnsembleConfig,
    seed: u64,
) -> Result<(EnsembleModel, TrainingLog)> {
    require_architecture(spec, Architecture::DynamicSelection)?;
    train_ensemble(spec, train, validation, cfg, seed)
}

/// Member with the best accuracy over the `locality_k` validation rows most
/// cosine-similar to `x`; ties go to global accuracy, then the lower index.
pub fn dcs_select(model: &EnsembleModel, x: &[f64], locality_k: usize) -> Result<usize> {
    let referee = model
        .referee
        .as_ref()
        .ok_or_else(|| Error::param("architecture", "model has no dynamic-selection referee"))?;
    if referee.points.is_empty() {
        return Err(Error::param("validation", "referee validation set is empty"));
    }
    let q = unit_query(&referee.encoder, x)?;
    let k = locality_k.clamp(1, referee.points.len());
    let order = rank_by_similarity(&referee.points, &q);
    let neighbourhood = &order[..k];
    let mut best = 0;
    let mut best_key = (0usize, f64::NEG_INFINITY);
    for (m, correct) in referee.correct.iter().enumerate() {
        let local = neighbourhood.iter().filter(|&&v| correct[v]).count();
        let key = (local, referee.global_accuracy[m]);
        if key.0 > best_key.0 || (key.0 == best_key.0 && key.1 > best_key.1) {
            best = m;
            best_key = key;
        }
    }
    Ok(best)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EnsemblePrediction {
    pub distribution: ClassDistribution,
    pub class: u8,
    /// Member chosen by dynamic selection.
    pub selected: Option<usize>,
}

pub fn predict_ensemble(model: &EnsembleModel, x: &[f64]) -> Result<EnsemblePrediction> {
    if x.len() != model.n_features {
        return Err(Error::LengthMismatch {
            expected: model.n_features,
            actual: x.len(),
        });
    }
    let dists = model
        .members
        .iter()
        .map(|m| m.predict_proba(x))
        .collect::<Result<Vec<_>>>()?;

    if let Some(meta) = &model.meta {
        let features: Vec<f64> = dists.iter().map(|d| d.p(1)).collect();
        let distribution = meta.predict_proba(&features)?;
        return Ok(EnsemblePrediction {
            distribution,
            class: distribution.argmax(),
            selected: None,
        });
    }

    let combined = match model.spec.architecture {
        Architecture::StaticParallel => {
            let rule = model.spec.combination;
            let weights = (rule == CombinationRule::WeightedMajority).then_some(model.member_weights.as_slice());
            combine_sp(&dists, rule, weights)?
        }
        Architecture::MultiStage if model.degenerate => combine_sp(&dists, CombinationRule::MajorityVote, None)?,
        Architecture::MultiStage => combine_sp(&dists, CombinationRule::WeightedMajority, Some(&model.stage_alphas))?,
        Architecture::DynamicSelection => {
            let selected = dcs_select(model, x, model.referee.as_ref().map_or(1, |r| r.locality_k))?;
            return Ok(EnsemblePrediction {
                distribution: dists[selected],
                class: model.members[selected].predict_class(x)?,
                selected: Some(selected),
            });
        }
    };
    Ok(EnsemblePrediction {
        distribution: combined.distribution,
        class: combined.class,
        selected: None,
    })
}

impl Classifier for EnsembleModel {
    fn predict_proba(&self, x: &[f64]) -> Result<ClassDistribution> {
        Ok(predict_ensemble(self, x)?.distribution)
    }

    fn predict_class(&self, x: &[f64]) -> Result<u8> {
        Ok(predict_ensemble(self, x)?.class)
    }
}
