//! Experiment configuration read from TOML.
//!
//! Parsing happens in two steps. [`RawConfig`] mirrors the file, then
//! [`RawConfig::resolve`] checks every field and collects all violations
//! instead of stopping at the first one.

use std::fs;
use std::path::{Path, PathBuf};

use mcls_core::architectures::{enumerate_member_sets, parse_members, EnsembleConfig};
use mcls_core::data::{parse_rows, Schema, SplitSpec};
use mcls_core::{Architecture, ClassifierConfig, ClassifierKind, CombinationRule, GridConfig, ResamplingKind};
use serde::{Deserialize, Serialize};

/// `"all"` or an explicit list.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Selection {
    Keyword(String),
    List(Vec<String>),
}

impl Default for Selection {
    fn default() -> Self {
        Selection::Keyword("all".into())
    }
}

impl Selection {
    fn items(&self) -> Option<&[String]> {
        match self {
            Selection::List(v) => Some(v),
            Selection::Keyword(_) => None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RawSplit {
    pub train: f64,
    pub validation: f64,
    pub test: f64,
    pub stratified: bool,
}

impl Default for RawSplit {
    fn default() -> Self {
        let s = SplitSpec::default();
        Self {
            train: s.train_fraction,
            validation: s.validation_fraction,
            test: s.test_fraction,
            stratified: s.stratified,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RawConfig {
    pub dataset: PathBuf,
    pub schema: PathBuf,
    pub output: PathBuf,
    pub members: Selection,
    pub architectures: Selection,
    pub resamplings: Selection,
    pub baselines: Selection,
    pub combination: String,
    pub folds: usize,
    pub replications: usize,
    pub seed: u64,
    pub workers: usize,
    pub save_models: bool,
    pub split: RawSplit,
    pub locality_k: usize,
    pub stacking_folds: usize,
    pub classifiers: ClassifierConfig,
}

impl Default for RawConfig {
    fn default() -> Self {
        let e = EnsembleConfig::default();
        Self {
            dataset: PathBuf::new(),
            schema: PathBuf::new(),
            output: PathBuf::from("out"),
            members: Selection::default(),
            architectures: Selection::default(),
            resamplings: Selection::default(),
            baselines: Selection::default(),
            combination: CombinationRule::MajorityVote.name().into(),
            folds: 5,
            replications: 1,
            seed: 0,
            workers: 1,
            save_models: false,
            split: RawSplit::default(),
            locality_k: e.locality_k,
            stacking_folds: e.stacking_folds,
            classifiers: ClassifierConfig::default(),
        }
    }
}

/// Command-line values that replace config fields.
#[derive(Clone, Debug, Default)]
pub struct Overrides {
    pub output: Option<PathBuf>,
    pub workers: Option<usize>,
    pub seed: Option<u64>,
    pub members: Option<Vec<String>>,
    pub architectures: Option<Vec<String>>,
    pub resamplings: Option<Vec<String>>,
    pub folds: Option<usize>,
    pub replications: Option<usize>,
}

fn list_override(values: Vec<String>) -> Selection {
    if values.len() == 1 && values[0].eq_ignore_ascii_case("all") {
        Selection::Keyword("all".into())
    } else {
        Selection::List(values)
    }
}

impl RawConfig {
    pub fn parse(text: &str) -> Result<Self, String> {
        toml::from_str(text).map_err(|e| format!("config: {}", e.message()))
    }

    pub fn apply(&mut self, o: Overrides) {
        if let Some(v) = o.output {
            self.output = v;
        }
        if let Some(v) = o.workers {
            self.workers = v;
        }
        if let Some(v) = o.seed {
            self.seed = v;
        }
        if let Some(v) = o.members {
            self.members = list_override(v);
        }
        if let Some(v) = o.architectures {
            self.architectures = list_override(v);
        }
        if let Some(v) = o.resamplings {
            self.resamplings = list_override(v);
        }
        if let Some(v) = o.folds {
            self.folds = v;
        }
        if let Some(v) = o.replications {
            self.replications = v;
        }
    }

    /// Checks the whole configuration. Relative paths are taken relative to
    /// `base_dir` (the directory holding the config file).
    pub fn resolve(&self, base_dir: &Path) -> Result<Resolved, Vec<String>> {
        let mut errs = Vec::new();
        let at = |p: &Path| if p.is_absolute() { p.to_path_buf() } else { base_dir.join(p) };

        let dataset = at(&self.dataset);
        let schema_path = at(&self.schema);
        let mut schema = None;
        if self.schema.as_os_str().is_empty() {
            errs.push("schema: no schema path given".into());
        } else if !schema_path.is_file() {
            errs.push(format!("schema: file not found: {}", schema_path.display()));
        } else {
            match Schema::load(&schema_path) {
                Ok(s) => schema = Some(s),
                Err(e) => errs.push(format!("schema: {e}")),
            }
        }
        if self.dataset.as_os_str().is_empty() {
            errs.push("dataset: no dataset path given".into());
        } else if !dataset.is_file() {
            errs.push(format!("dataset: file not found: {}", dataset.display()));
        } else if let Some(s) = &schema {
            if let Err(e) = check_header(&dataset, s) {
                errs.push(format!("dataset: {}: {e}", dataset.display()));
            }
        }

        let member_sets = match self.members.items() {
            None => enumerate_member_sets().member_sets,
            Some(items) => items
                .iter()
                .filter_map(|m| match parse_members(m) {
                    Ok(mut set) => {
                        set.sort();
                        set.dedup();
                        if (2..=5).contains(&set.len()) {
                            Some(set)
                        } else {
                            errs.push(format!("members: `{m}` must name 2 to 5 distinct classifiers"));
                            None
                        }
                    }
                    Err(e) => {
                        errs.push(format!("members: {e}"));
                        None
                    }
                })
                .collect(),
        };
        let architectures = parse_list(&self.architectures, "architectures", Architecture::ALL.to_vec(), &mut errs);
        let resamplings = parse_list(&self.resamplings, "resamplings", ResamplingKind::all(), &mut errs);
        let baselines = match &self.baselines {
            Selection::Keyword(k) if k.eq_ignore_ascii_case("none") => Vec::new(),
            other => parse_list(other, "baselines", ClassifierKind::ALL.to_vec(), &mut errs),
        };
        if let Selection::Keyword(k) = &self.members {
            if !k.eq_ignore_ascii_case("all") {
                errs.push(format!("members: expected \"all\" or a list, got `{k}`"));
            }
        }
        for (field, sel) in [("architectures", &self.architectures), ("resamplings", &self.resamplings)] {
            if let Selection::Keyword(k) = sel {
                if !k.eq_ignore_ascii_case("all") {
                    errs.push(format!("{field}: expected \"all\" or a list, got `{k}`"));
                }
            }
        }
        let combination = self.combination.parse::<CombinationRule>().unwrap_or_else(|e| {
            errs.push(format!("combination: {e}"));
            CombinationRule::MajorityVote
        });

        if self.folds < 2 {
            errs.push(format!("folds: must be at least 2, got {}", self.folds));
        }
        if self.replications < 1 {
            errs.push("replications: must be at least 1".into());
        }
        if self.workers < 1 {
            errs.push("workers: must be at least 1".into());
        }
        if self.locality_k < 1 {
            errs.push("locality_k: must be at least 1".into());
        }
        if self.stacking_folds < 2 {
            errs.push("stacking_folds: must be at least 2".into());
        }
        let split = SplitSpec {
            train_fraction: self.split.train,
            validation_fraction: self.split.validation,
            test_fraction: self.split.test,
            seed: 0,
            stratified: self.split.stratified,
        };
        let sum = self.split.train + self.split.validation + self.split.test;
        if (sum - 1.0).abs() > 1e-9 {
            errs.push(format!("split: fractions train + validation + test sum to {sum}, expected 1"));
        } else if let Err(e) = split.validate() {
            errs.push(format!("split: {e}"));
        }

        if !errs.is_empty() {
            return Err(errs);
        }
        let grid = GridConfig {
            member_sets,
            architectures,
            resamplings,
            combination,
            baselines,
            folds: self.folds,
            replications: self.replications,
            base_seed: self.seed,
            split,
            workers: self.workers,
            ensemble: EnsembleConfig {
                classifiers: self.classifiers.clone(),
                locality_k: self.locality_k,
                stacking_folds: self.stacking_folds,
            },
        };
        if let Err(e) = grid.validate() {
            return Err(vec![format!("grid: {e}")]);
        }
        Ok(Resolved {
            dataset,
            schema: schema_path,
            output: at(&self.output),
            save_models: self.save_models,
            grid,
        })
    }
}

fn parse_list<T: std::str::FromStr<Err = mcls_core::Error>>(
    sel: &Selection,
    field: &str,
    all: Vec<T>,
    errs: &mut Vec<String>,
) -> Vec<T> {
    match sel.items() {
        None => all,
        Some(items) => {
            if items.is_empty() {
                errs.push(format!("{field}: list is empty"));
            }
            items
                .iter()
                .filter_map(|s| s.parse().map_err(|e| errs.push(format!("{field}: {e}"))).ok())
                .collect()
        }
    }
}

/// Parses only the header row against the schema.
fn check_header(path: &Path, schema: &Schema) -> Result<(), mcls_core::Error> {
    let text = fs::read_to_string(path).map_err(|e| mcls_core::Error::io(path, e))?;
    let header = text.lines().next().unwrap_or("");
    parse_rows(header.as_bytes(), schema, true).map(|_| ())
}

/// A validated configuration with absolute paths.
#[derive(Clone, Debug)]
pub struct Resolved {
    pub dataset: PathBuf,
    pub schema: PathBuf,
    pub output: PathBuf,
    pub save_models: bool,
    pub grid: GridConfig,
}

/// Reads, overrides and validates a config file.
pub fn load(path: &Path, overrides: Overrides) -> Result<(RawConfig, Resolved), Vec<String>> {
    let text = fs::read_to_string(path).map_err(|e| vec![format!("config: {}: {e}", path.display())])?;
    let mut raw = RawConfig::parse(&text).map_err(|e| vec![e])?;
    raw.apply(overrides);
    let base = path.parent().unwrap_or(Path::new("."));
    let resolved = raw.resolve(base)?;
    Ok((raw, resolved))
}
