//! Cross-validated experiment cells and the full factorial grid.

use std::cmp::Ordering;
use std::io::{Read, Write};
use std::time::Instant;

use serde::{Deserialize, Serialize};

use super::anova::{anova, AnovaTable, Observation};
use super::metrics::error_pair;
use crate::architectures::{
    members_label, parse_members, train_ensemble, Architecture, CombinationRule, EnsembleConfig, EnsembleModel,
    EnsembleSpec,
};
use crate::classifiers::{train_classifier, ClassDistribution, Classifier, ClassifierKind, TrainedModel};
use crate::data::{make_folds, partition_indices, Dataset, FoldAssignment, SplitSpec};
use crate::error::{Error, Result};
use crate::resampling::{ResamplingKind, StackFoldProvenance};
use crate::seed;

/// What one cell evaluates: a lone base classifier or an ensemble.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "system", rename_all = "snake_case")]
pub enum System {
    Single { kind: ClassifierKind },
    Ensemble(EnsembleSpec),
}

impl System {
    pub fn members(&self) -> Vec<ClassifierKind> {
        match self {
            System::Single { kind } => vec![*kind],
            System::Ensemble(s) => s.members.clone(),
        }
    }

    pub fn architecture(&self) -> Option<Architecture> {
        match self {
            System::Single { .. } => None,
            System::Ensemble(s) => Some(s.architecture),
        }
    }

    pub fn resampling(&self) -> Option<ResamplingKind> {
        match self {
            System::Single { .. } => None,
            System::Ensemble(s) => Some(s.resampling),
        }
    }

    /// Stable text identity used for seed derivation.
    pub fn label(&self) -> String {
        format!(
            "{}|{}|{}",
            members_label(&self.members()),
            self.architecture().map_or(NONE.to_string(), |a| a.to_string()),
            self.resampling().map_or(NONE.to_string(), |r| resampling_label(&r)),
        )
    }
}

const NONE: &str = "none";

/// Procedure name, with its parameter appended when it is not the default.
pub fn resampling_label(r: &ResamplingKind) -> String {
    let default: ResamplingKind = r.name().parse().expect("known name");
    if *r == default {
        r.name().to_string()
    } else {
        match r {
            ResamplingKind::FeatureSubset { fraction } => format!("feature_subset:{fraction}"),
            ResamplingKind::Randomisation { strength } => format!("randomisation:{strength}"),
            other => other.name().to_string(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FittedSystem {
    Single(TrainedModel),
    Ensemble(EnsembleModel),
}

impl Classifier for FittedSystem {
    fn predict_proba(&self, x: &[f64]) -> Result<ClassDistribution> {
        match self {
            FittedSystem::Single(m) => m.predict_proba(x),
            FittedSystem::Ensemble(m) => m.predict_proba(x),
        }
    }

    fn predict_class(&self, x: &[f64]) -> Result<u8> {
        match self {
            FittedSystem::Single(m) => m.predict_class(x),
            FittedSystem::Ensemble(m) => m.predict_class(x),
        }
    }
}

/// Instance ids that fed each stage of one fold, for leakage audits.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct FoldProvenance {
    pub test_ids: Vec<usize>,
    pub train_ids: Vec<usize>,
    pub validation_ids: Vec<usize>,
    pub member_train_ids: Vec<Vec<usize>>,
    pub stacking: Vec<StackFoldProvenance>,
}

impl FoldProvenance {
    /// Every id any fitted component saw, including validation material.
    pub fn fitting_ids(&self) -> Vec<usize> {
        let mut ids: Vec<usize> = self
            .train_ids
            .iter()
            .chain(&self.validation_ids)
            .chain(self.member_train_ids.iter().flatten())
            .chain(self.stacking.iter().flat_map(|s| s.trained_on.iter().chain(&s.scored)))
            .copied()
            .collect();
        ids.sort_unstable();
        ids.dedup();
        ids
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum CellStatus {
    Ok,
    Failed(String),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentCell {
    pub members: Vec<ClassifierKind>,
    pub architecture: Option<Architecture>,
    pub resampling: Option<ResamplingKind>,
    pub replication: usize,
    pub fold: usize,
    pub smoothed_error: Option<f64>,
    pub zero_one_error: Option<f64>,
    pub wall_time_s: f64,
    pub status: CellStatus,
}

impl ExperimentCell {
    pub fn size(&self) -> usize {
        self.members.len()
    }

    pub fn is_ok(&self) -> bool {
        self.status == CellStatus::Ok
    }

    pub fn members_label(&self) -> String {
        members_label(&self.members)
    }

    fn sort_key(&self) -> (usize, Vec<usize>, usize, usize, String, usize, usize) {
        let kinds = self
            .members
            .iter()
            .map(|k| ClassifierKind::ALL.iter().position(|a| a == k).unwrap_or(usize::MAX))
            .collect();
        (
            self.size(),
            kinds,
            self.architecture.map_or(0, |a| 1 + a as usize),
            self.resampling.map_or(0, |r| 1 + r.order()),
            self.resampling.map_or(String::new(), |r| resampling_label(&r)),
            self.replication,
            self.fold,
        )
    }
}

/// Cell order used for every persisted table.
pub fn compare_cells(a: &ExperimentCell, b: &ExperimentCell) -> Ordering {
    a.sort_key().cmp(&b.sort_key())
}

/// Output of one fold: metrics, the fitted system and its provenance.
pub struct FoldOutcome {
    pub smoothed_error: f64,
    pub zero_one_error: f64,
    pub model: FittedSystem,
    pub provenance: FoldProvenance,
}

pub fn fit_system(
    system: &System,
    train: &Dataset,
    validation: &Dataset,
    cfg: &EnsembleConfig,
    seed: u64,
) -> Result<(FittedSystem, Vec<Vec<usize>>, Vec<StackFoldProvenance>)> {
    match system {
        System::Single { kind } => {
            let m = train_classifier(*kind, train, validation, &cfg.classifiers, seed)?;
            Ok((FittedSystem::Single(m), vec![train.ids()], Vec::new()))
        }
        System::Ensemble(spec) => {
            let (m, log) = train_ensemble(spec, train, validation, cfg, seed)?;
            Ok((FittedSystem::Ensemble(m), log.member_train_ids, log.stacking))
        }
    }
}

/// Fraction pair used to re-split the non-test remainder of a fold.
fn inner_fractions(split: &SplitSpec) -> [f64; 2] {
    let s = split.train_fraction + split.validation_fraction;
    [split.train_fraction / s, split.validation_fraction / s]
}

/// Evaluates `system` on fold `fold`: the fold is held out, the rest is
/// split into training and validation parts in the configured ratio.
pub fn run_fold(
    system: &System,
    ds: &Dataset,
    folds: &FoldAssignment,
    fold: usize,
    split: &SplitSpec,
    cfg: &EnsembleConfig,
    seed: u64,
) -> Result<FoldOutcome> {
    split.validate()?;
    if folds.fold_of.len() != ds.len() {
        return Err(Error::LengthMismatch {
            expected: ds.len(),
            actual: folds.fold_of.len(),
        });
    }
    if fold >= folds.k {
        return Err(Error::param("fold", format!("fold {fold} out of range for k={}", folds.k)));
    }
    let test = ds.subset(&folds.test_indices(fold));
    if !test.has_both_classes() {
        return Err(Error::param("folds", format!("fold {fold} lacks a class")));
    }
    let rest_idx = folds.train_indices(fold);
    let rest = ds.subset(&rest_idx);
    let parts = partition_indices(
        &rest.labels(),
        &inner_fractions(split),
        seed::derive_index(split.seed, "inner-split", fold),
        split.stratified,
    );
    let train = rest.subset(&parts[0]);
    let validation = rest.subset(&parts[1]);
    if validation.is_empty() {
        return Err(Error::param("split", "validation part is empty"));
    }
    train.require_both_classes()?;

    let (model, member_train_ids, stacking) = fit_system(system, &train, &validation, cfg, seed)?;
    let (smoothed_error, zero_one_error) = error_pair(&model, &test)?;
    Ok(FoldOutcome {
        smoothed_error,
        zero_one_error,
        model,
        provenance: FoldProvenance {
            test_ids: test.ids(),
            train_ids: train.ids(),
            validation_ids: validation.ids(),
            member_train_ids,
            stacking,
        },
    })
}

fn cell_from(system: &System, replication: usize, fold: usize, outcome: Result<(f64, f64)>, start: Instant) -> ExperimentCell {
    let (smoothed_error, zero_one_error, status) = match outcome {
        Ok((s, z)) => (Some(s), Some(z), CellStatus::Ok),
        Err(e) => (None, None, CellStatus::Failed(e.to_string())),
    };
    ExperimentCell {
        members: system.members(),
        architecture: system.architecture(),
        resampling: system.resampling(),
        replication,
        fold,
        smoothed_error,
        zero_one_error,
        wall_time_s: start.elapsed().as_secs_f64(),
        status,
    }
}

/// One cell per fold, each fitted with a seed derived from `seed` and the fold.
pub fn run_experiment(
    system: &System,
    ds: &Dataset,
    folds: &FoldAssignment,
    split: &SplitSpec,
    cfg: &EnsembleConfig,
    seed: u64,
) -> Result<Vec<ExperimentCell>> {
    if let System::Ensemble(spec) = system {
        spec.validate()?;
    }
    (0..folds.k)
        .map(|f| {
            let start = Instant::now();
            let out = run_fold(system, ds, folds, f, split, cfg, seed::derive_index(seed, "fold", f))?;
            Ok(cell_from(system, 0, f, Ok((out.smoothed_error, out.zero_one_error)), start))
        })
        .collect()
}

#[derive(Clone, Debug, PartialEq)]
pub struct GridConfig {
    pub member_sets: Vec<Vec<ClassifierKind>>,
    pub architectures: Vec<Architecture>,
    pub resamplings: Vec<ResamplingKind>,
    pub combination: CombinationRule,
    /// Single-classifier baseline kinds.
    pub baselines: Vec<ClassifierKind>,
    pub folds: usize,
    pub replications: usize,
    pub base_seed: u64,
    pub split: SplitSpec,
    pub workers: usize,
    pub ensemble: EnsembleConfig,
}

impl Default for GridConfig {
    fn default() -> Self {
        Self {
            member_sets: crate::architectures::enumerate_member_sets().member_sets,
            architectures: Architecture::ALL.to_vec(),
            resamplings: ResamplingKind::all(),
            combination: CombinationRule::MajorityVote,
            baselines: ClassifierKind::ALL.to_vec(),
            folds: 5,
            replications: 1,
            base_seed: 0,
            split: SplitSpec::default(),
            workers: 1,
            ensemble: EnsembleConfig::default(),
        }
    }
}

/// Coordinates of one grid cell.
#[derive(Clone, Debug, PartialEq)]
pub struct CellJob {
    pub system: System,
    pub replication: usize,
    pub fold: usize,
}

impl GridConfig {
    pub fn validate(&self) -> Result<()> {
        if self.member_sets.is_empty() && self.baselines.is_empty() {
            return Err(Error::param("members", "no systems to evaluate"));
        }
        if !self.member_sets.is_empty() && (self.architectures.is_empty() || self.resamplings.is_empty()) {
            return Err(Error::param("architectures", "factor lists must be non-empty"));
        }
        if self.replications == 0 {
            return Err(Error::param("replications", "need at least one replication"));
        }
        if self.workers == 0 {
            return Err(Error::param("workers", "need at least one worker"));
        }
        if self.folds < 2 {
            return Err(Error::param("folds", "need at least 2 folds"));
        }
        self.split.validate()
    }

    pub fn systems(&self) -> Result<Vec<System>> {
        let mut systems: Vec<System> = self.baselines.iter().map(|&kind| System::Single { kind }).collect();
        for members in &self.member_sets {
            for &arch in &self.architectures {
                for &res in &self.resamplings {
                    systems.push(System::Ensemble(EnsembleSpec::new(members.clone(), arch, res, self.combination)?));
                }
            }
        }
        Ok(systems)
    }

    pub fn jobs(&self) -> Result<Vec<CellJob>> {
        let systems = self.systems()?;
        let mut jobs = Vec::with_capacity(systems.len() * self.replications * self.folds);
        for system in systems {
            for replication in 0..self.replications {
                for fold in 0..self.folds {
                    jobs.push(CellJob {
                        system: system.clone(),
                        replication,
                        fold,
                    });
                }
            }
        }
        Ok(jobs)
    }

    /// Fold assignment for a replication.
    pub fn folds_for(&self, ds: &Dataset, replication: usize) -> Result<FoldAssignment> {
        make_folds(
            ds,
            self.folds,
            seed::derive(self.base_seed, &["folds", &replication.to_string()]),
            self.split.stratified,
        )
    }

    /// Inner split spec for a replication, shared by every system so that
    /// systems are compared on identical partitions.
    pub fn split_for(&self, replication: usize) -> SplitSpec {
        SplitSpec {
            seed: seed::derive(self.base_seed, &["split", &replication.to_string()]),
            ..self.split
        }
    }

    /// Training seed of one cell: a hash of the base seed and the cell coordinates.
    pub fn cell_seed(&self, job: &CellJob) -> u64 {
        seed::derive(
            self.base_seed,
            &["cell", &job.system.label(), &job.replication.to_string(), &job.fold.to_string()],
        )
    }
}

/// Runs one grid cell in isolation.
pub fn run_cell(ds: &Dataset, grid: &GridConfig, folds: &FoldAssignment, job: &CellJob) -> (ExperimentCell, Option<FoldOutcome>) {
    let start = Instant::now();
    let outcome = run_fold(
        &job.system,
        ds,
        folds,
        job.fold,
        &grid.split_for(job.replication),
        &grid.ensemble,
        grid.cell_seed(job),
    );
    match outcome {
        Ok(o) => {
            let cell = cell_from(&job.system, job.replication, job.fold, Ok((o.smoothed_error, o.zero_one_error)), start);
            (cell, Some(o))
        }
        Err(e) => {
            log::warn!("cell {} rep {} fold {} failed: {e}", job.system.label(), job.replication, job.fold);
            (cell_from(&job.system, job.replication, job.fold, Err(e), start), None)
        }
    }
}

/// Every cell of the grid, sorted by coordinates. Failed cells are kept with
/// their error text.
pub fn run_grid(ds: &Dataset, grid: &GridConfig) -> Result<Vec<ExperimentCell>> {
    grid.validate()?;
    let folds = (0..grid.replications)
        .map(|r| grid.folds_for(ds, r))
        .collect::<Result<Vec<_>>>()?;
    let jobs = grid.jobs()?;
    let run = |job: &CellJob| run_cell(ds, grid, &folds[job.replication], job).0;
    let mut cells = execute(&jobs, grid.workers, run)?;
    cells.sort_by(compare_cells);
    Ok(cells)
}

#[cfg(feature = "parallel")]
fn execute<F>(jobs: &[CellJob], workers: usize, run: F) -> Result<Vec<ExperimentCell>>
where
    F: Fn(&CellJob) -> ExperimentCell + Sync + Send,
{
    use rayon::prelude::*;
    if workers <= 1 {
        return Ok(jobs.iter().map(run).collect());
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| Error::param("workers", e.to_string()))?;
    Ok(pool.install(|| jobs.par_iter().map(&run).collect()))
}

#[cfg(not(feature = "parallel"))]
fn execute<F>(jobs: &[CellJob], _workers: usize, run: F) -> Result<Vec<ExperimentCell>>
where
    F: Fn(&CellJob) -> ExperimentCell,
{
    Ok(jobs.iter().map(run).collect())
}

/// Factors available to [`anova_main_effects`].
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Factor {
    System,
    Size,
    Architecture,
    Resampling,
}

impl Factor {
    pub fn name(self) -> &'static str {
        match self {
            Factor::System => "system",
            Factor::Size => "size",
            Factor::Architecture => "architecture",
            Factor::Resampling => "resampling",
        }
    }

    fn level(self, c: &ExperimentCell) -> String {
        match self {
            Factor::System => c.members_label(),
            Factor::Size => c.size().to_string(),
            Factor::Architecture => c.architecture.map_or(NONE.into(), |a| a.to_string()),
            Factor::Resampling => c.resampling.map_or(NONE.into(), |r| resampling_label(&r)),
        }
    }
}

/// Fixed-effects ANOVA of smoothed error over successful ensemble cells.
/// Baseline (single-classifier) cells are left out because they have no
/// architecture or resampling level.
pub fn anova_main_effects(
    cells: &[ExperimentCell],
    factors: &[Factor],
    interactions: &[(usize, usize)],
) -> Result<AnovaTable> {
    let failed = cells.iter().filter(|c| !c.is_ok()).count();
    if failed > 0 {
        log::info!("anova: excluding {failed} failed cells");
    }
    let obs: Vec<Observation> = cells
        .iter()
        .filter(|c| c.is_ok() && c.architecture.is_some())
        .map(|c| Observation {
            levels: factors.iter().map(|f| f.level(c)).collect(),
            response: c.smoothed_error.expect("ok cells carry an error"),
        })
        .collect();
    let names: Vec<&str> = factors.iter().map(|f| f.name()).collect();
    anova(&names, &obs, interactions)
}

pub const RESULT_COLUMNS: [&str; 10] = [
    "members",
    "size",
    "architecture",
    "resampling",
    "replication",
    "fold",
    "smoothed_error",
    "zero_one_error",
    "wall_time_s",
    "status",
];

#[derive(Debug, Serialize, Deserialize)]
struct ResultRow {
    members: String,
    size: usize,
    architecture: String,
    resampling: String,
    replication: usize,
    fold: usize,
    smoothed_error: String,
    zero_one_error: String,
    wall_time_s: f64,
    status: String,
}

fn opt_f64(v: Option<f64>) -> String {
    v.map_or(String::new(), |x| x.to_string())
}

/// Writes the result table. With `include_wall_time` false the timing column
/// is zeroed so identical runs produce identical bytes.
pub fn write_results_csv<W: Write>(cells: &[ExperimentCell], writer: W, include_wall_time: bool) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    for c in cells {
        w.serialize(ResultRow {
            members: c.members_label(),
            size: c.size(),
            architecture: c.architecture.map_or(NONE.into(), |a| a.to_string()),
            resampling: c.resampling.map_or(NONE.into(), |r| resampling_label(&r)),
            replication: c.replication,
            fold: c.fold,
            smoothed_error: opt_f64(c.smoothed_error),
            zero_one_error: opt_f64(c.zero_one_error),
            wall_time_s: if include_wall_time { c.wall_time_s } else { 0.0 },
            status: match &c.status {
                CellStatus::Ok => "ok".into(),
                CellStatus::Failed(msg) => format!("failed: {msg}"),
            },
        })?;
    }
    w.flush().map_err(|e| Error::io("results", e))?;
    Ok(())
}

pub fn read_results_csv<R: Read>(reader: R) -> Result<Vec<ExperimentCell>> {
    let mut r = csv::Reader::from_reader(reader);
    let headers = r.headers()?.clone();
    if headers.iter().collect::<Vec<_>>() != RESULT_COLUMNS {
        return Err(Error::Schema(format!(
            "result table header must be {}",
            RESULT_COLUMNS.join(",")
        )));
    }
    let mut cells = Vec::new();
    for (i, row) in r.deserialize::<ResultRow>().enumerate() {
        let row = row?;
        let bad = |column: &str, message: String| Error::Cell {
            row: i + 1,
            column: column.to_string(),
            message,
        };
        let members = parse_members(&row.members).map_err(|e| bad("members", e.to_string()))?;
        if members.len() != row.size {
            return Err(bad("size", format!("{} members listed", members.len())));
        }
        let architecture = match row.architecture.as_str() {
            NONE => None,
            a => Some(a.parse().map_err(|e: Error| bad("architecture", e.to_string()))?),
        };
        let resampling = match row.resampling.as_str() {
            NONE => None,
            r => Some(r.parse().map_err(|e: Error| bad("resampling", e.to_string()))?),
        };
        let num = |column: &str, s: &str| -> Result<Option<f64>> {
            if s.is_empty() {
                Ok(None)
            } else {
                s.parse().map(Some).map_err(|_| bad(column, format!("`{s}` is not a number")))
            }
        };
        let status = if row.status == "ok" {
            CellStatus::Ok
        } else if let Some(msg) = row.status.strip_prefix("failed: ") {
            CellStatus::Failed(msg.to_string())
        } else {
            return Err(bad("status", format!("unknown status `{}`", row.status)));
        };
        let smoothed_error = num("smoothed_error", &row.smoothed_error)?;
        if status == CellStatus::Ok && smoothed_error.is_none() {
            return Err(bad("smoothed_error", "missing for a successful cell".into()));
        }
        cells.push(ExperimentCell {
            members,
            architecture,
            resampling,
            replication: row.replication,
            fold: row.fold,
            smoothed_error,
            zero_one_error: num("zero_one_error", &row.zero_one_error)?,
            wall_time_s: row.wall_time_s,
            status,
        });
    }
    Ok(cells)
}
