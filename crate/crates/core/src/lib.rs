//! Single and multiple classifier learning systems for binary tabular data.
//!
//! Five base learners (logistic discrimination, k-nearest neighbours with
//! cosine similarity, a one-hidden-layer network, an information-gain tree
//! and naive Bayes) can be combined into ensembles under three
//! architectures: static parallel combination, multi-stage boosting and
//! dynamic classifier selection. Members are diversified by bagging,
//! boosting, stacking, random feature subsets or in-learner randomisation.
//! The [`evaluation`] module runs seeded cross-validated factorial grids and
//! fixed-effects ANOVA over the results; [`ranking`] scores individual
//! features.

pub mod architectures;
pub mod classifiers;
pub mod data;
pub mod error;
pub mod evaluation;
pub mod model_io;
pub mod ranking;
pub mod resampling;
pub mod seed;
pub mod synthetic;

pub use architectures::{
    combine_sp, dcs_select, enumerate_member_sets, predict_ensemble, train_ensemble, Architecture, CombinationRule,
    EnsembleCatalog, EnsembleConfig, EnsembleModel, EnsembleSpec,
};
pub use classifiers::{ClassDistribution, Classifier, ClassifierConfig, ClassifierKind, TrainedModel};
pub use data::{load_dataset, make_folds, split_train_val_test, Dataset, FeatureKind, FeatureSpec, FoldAssignment, Instance, Schema, SplitSpec};
pub use error::{Error, Result};
pub use evaluation::{run_grid, smoothed_error, zero_one_error, ExperimentCell, GridConfig, System};
pub use model_io::ModelBundle;
pub use ranking::{rank_features, FeatureRanking, FeatureScore};
pub use resampling::ResamplingKind;
