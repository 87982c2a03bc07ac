use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use mcls_core::data::{parse_rows, save_dataset, Schema};
use mcls_core::evaluation::{read_results_csv, run_cell, write_results_csv, CellJob, ExperimentCell, FittedSystem};
use mcls_core::ranking::format_cv_error;
use mcls_core::{load_dataset, rank_features, run_grid, synthetic, Dataset, ModelBundle};
use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::config::{self, Overrides, RawConfig, Resolved};
use crate::report::{build_report, ranking_table, RankingRow};

pub const EXIT_OK: i32 = 0;
pub const EXIT_CELL_FAILURES: i32 = 1;
pub const EXIT_INPUT: i32 = 2;

#[derive(Debug)]
pub enum CliError {
    /// Configuration or input problems; every message is reported.
    Input(Vec<String>),
    /// The grid ran but some cells failed.
    CellFailures { failed: usize, total: usize },
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Input(_) => EXIT_INPUT,
            CliError::CellFailures { .. } => EXIT_CELL_FAILURES,
        }
    }

    pub fn messages(&self) -> Vec<String> {
        match self {
            CliError::Input(m) => m.clone(),
            CliError::CellFailures { failed, total } => vec![format!("{failed} of {total} cells failed")],
        }
    }
}

impl From<mcls_core::Error> for CliError {
    fn from(e: mcls_core::Error) -> Self {
        CliError::Input(vec![e.to_string()])
    }
}

type CliResult<T> = Result<T, CliError>;

fn io_err(path: &Path, e: std::io::Error) -> CliError {
    CliError::Input(vec![format!("{}: {e}", path.display())])
}

fn load_config(path: &Path, overrides: Overrides) -> CliResult<(RawConfig, Resolved)> {
    config::load(path, overrides).map_err(CliError::Input)
}

fn load_data(r: &Resolved) -> CliResult<Dataset> {
    load_dataset(&r.dataset, &r.schema).map_err(|e| CliError::Input(vec![format!("{}: {e}", r.dataset.display())]))
}

/// Checks a config file and the headers of the files it names.
pub fn cmd_validate(path: &Path, overrides: Overrides) -> CliResult<String> {
    let (_, r) = load_config(path, overrides)?;
    Ok(format!(
        "OK ({} jobs)",
        r.grid.jobs().map(|j| j.len()).unwrap_or_default()
    ))
}

#[derive(Debug, Serialize)]
pub struct Manifest {
    pub artifact_version: String,
    pub config_sha256: String,
    pub dataset_sha256: String,
    pub base_seed: u64,
    pub seed_rule: Vec<String>,
    pub folds: usize,
    pub replications: usize,
    pub systems: usize,
    pub cells: usize,
    pub failed_cells: usize,
    pub config: RawConfig,
}

pub const SEED_RULE: [&str; 5] = [
    "folds(rep) = derive(base_seed, [\"folds\", rep])",
    "split(rep) = derive(base_seed, [\"split\", rep]); fold f uses derive_index(split(rep), \"inner-split\", f)",
    "cell = derive(base_seed, [\"cell\", members|architecture|resampling, rep, fold])",
    "member i = derive_index(cell, \"member\", i)",
    "derive = splitmix64(FNV-1a over the parts, each followed by 0xff, starting from FNV offset ^ splitmix64(base))",
];

fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

fn model_file_name(label: &str) -> String {
    label.replace('|', "__").replace('+', "-").replace(':', "_") + ".json"
}

pub struct GridOutput {
    pub results: PathBuf,
    pub manifest: PathBuf,
    pub cells: Vec<ExperimentCell>,
}

/// Runs the configured grid and writes `results.csv` and `manifest.json`
/// (plus `models/` when requested) into the output directory.
pub fn cmd_grid(path: &Path, overrides: Overrides, save_models: bool) -> CliResult<GridOutput> {
    let (raw, r) = load_config(path, overrides)?;
    let ds = load_data(&r)?;
    let jobs = r.grid.jobs()?;
    log::info!("grid: {} cells on {} worker(s)", jobs.len(), r.grid.workers);
    let cells = run_grid(&ds, &r.grid)?;
    fs::create_dir_all(&r.output).map_err(|e| io_err(&r.output, e))?;

    let results = r.output.join("results.csv");
    let file = fs::File::create(&results).map_err(|e| io_err(&results, e))?;
    write_results_csv(&cells, std::io::BufWriter::new(file), true)?;

    let failed = cells.iter().filter(|c| !c.is_ok()).count();
    let dataset_bytes = fs::read(&r.dataset).map_err(|e| io_err(&r.dataset, e))?;
    let config_json = serde_json::to_vec(&raw).expect("config serializes");
    let manifest = Manifest {
        artifact_version: env!("CARGO_PKG_VERSION").into(),
        config_sha256: sha256_hex(&config_json),
        dataset_sha256: sha256_hex(&dataset_bytes),
        base_seed: r.grid.base_seed,
        seed_rule: SEED_RULE.iter().map(|s| s.to_string()).collect(),
        folds: r.grid.folds,
        replications: r.grid.replications,
        systems: r.grid.systems()?.len(),
        cells: cells.len(),
        failed_cells: failed,
        config: raw,
    };
    let manifest_path = r.output.join("manifest.json");
    fs::write(&manifest_path, serde_json::to_string_pretty(&manifest).expect("manifest serializes"))
        .map_err(|e| io_err(&manifest_path, e))?;

    if save_models || r.save_models {
        save_best_models(&ds, &r, &jobs, &cells)?;
    }
    if failed > 0 {
        for c in cells.iter().filter(|c| !c.is_ok()) {
            log::warn!("cell {} rep {} fold {}: {:?}", c.members_label(), c.replication, c.fold, c.status);
        }
        return Err(CliError::CellFailures {
            failed,
            total: cells.len(),
        });
    }
    Ok(GridOutput {
        results,
        manifest: manifest_path,
        cells,
    })
}

/// Refits the lowest-error cell of each system and saves its model.
fn save_best_models(ds: &Dataset, r: &Resolved, jobs: &[CellJob], cells: &[ExperimentCell]) -> CliResult<()> {
    let dir = r.output.join("models");
    fs::create_dir_all(&dir).map_err(|e| io_err(&dir, e))?;
    let schema = ds.schema();
    for system in r.grid.systems()? {
        let best = jobs
            .iter()
            .filter(|j| j.system == system)
            .filter_map(|j| {
                let c = cells.iter().find(|c| {
                    c.members == j.system.members()
                        && c.architecture == j.system.architecture()
                        && c.resampling == j.system.resampling()
                        && c.replication == j.replication
                        && c.fold == j.fold
                })?;
                Some((c.smoothed_error?, j))
            })
            .min_by(|a, b| a.0.total_cmp(&b.0));
        let Some((_, job)) = best else { continue };
        let folds = r.grid.folds_for(ds, job.replication)?;
        let (_, outcome) = run_cell(ds, &r.grid, &folds, job);
        if let Some(o) = outcome {
            let path = dir.join(model_file_name(&system.label()));
            ModelBundle::new(schema.clone(), o.model).save(&path)?;
        }
    }
    Ok(())
}

/// Ranks features and writes `ranking.csv`; returns the text table.
pub fn cmd_rank(path: &Path, overrides: Overrides) -> CliResult<(PathBuf, String)> {
    let (_, r) = load_config(path, overrides)?;
    let ds = load_data(&r)?;
    let folds = r.grid.folds_for(&ds, 0)?;
    let ranking = rank_features(&ds, &folds)?;
    let rows: Vec<RankingRow> = ranking
        .scores
        .iter()
        .enumerate()
        .map(|(i, s)| RankingRow {
            rank: i + 1,
            feature: s.feature.clone(),
            cv_error_mean: s.cv_error_mean,
            cv_error_std: s.cv_error_std,
            cv_error: format_cv_error(s.cv_error_mean, s.cv_error_std),
            mutual_information: s.mutual_information,
        })
        .collect();
    fs::create_dir_all(&r.output).map_err(|e| io_err(&r.output, e))?;
    let out = r.output.join("ranking.csv");
    let mut w = csv::Writer::from_path(&out).map_err(|e| CliError::Input(vec![e.to_string()]))?;
    for row in &rows {
        w.serialize(row).map_err(|e| CliError::Input(vec![e.to_string()]))?;
    }
    w.flush().map_err(|e| io_err(&out, e))?;
    Ok((out, ranking_table(&rows)))
}

fn read_ranking(path: &Path) -> CliResult<Vec<RankingRow>> {
    let mut r = csv::Reader::from_path(path).map_err(|e| CliError::Input(vec![format!("{}: {e}", path.display())]))?;
    r.deserialize()
        .collect::<Result<Vec<RankingRow>, _>>()
        .map_err(|e| CliError::Input(vec![format!("{}: {e}", path.display())]))
}

/// Builds the report from a result table; nothing is written on error.
pub fn cmd_report(results: &Path, ranking: Option<&Path>, out: &Path) -> CliResult<Vec<PathBuf>> {
    let file = fs::File::open(results).map_err(|e| io_err(results, e))?;
    let cells = read_results_csv(file).map_err(|e| CliError::Input(vec![format!("{}: {e}", results.display())]))?;
    if cells.is_empty() {
        return Err(CliError::Input(vec![format!("{}: result table has no rows", results.display())]));
    }
    let ranking = ranking.map(read_ranking).transpose()?;
    let bundle = build_report(&cells, ranking.as_deref())?;
    bundle.write(out)?;
    Ok(bundle.files.iter().map(|f| out.join(&f.name)).collect())
}

/// Scores a CSV with a saved model. `schema`, when given, must match the
/// model's schema feature by feature.
pub fn cmd_predict(model: &Path, data: &Path, schema: Option<&Path>, out: &mut dyn Write) -> CliResult<usize> {
    let bundle = ModelBundle::load(model)?;
    if let Some(p) = schema {
        bundle.check_schema(&Schema::load(p)?)?;
    }
    let file = fs::File::open(data).map_err(|e| io_err(data, e))?;
    let rows = parse_rows(file, &bundle.schema, false).map_err(|e| CliError::Input(vec![format!("{}: {e}", data.display())]))?;
    let members = match &bundle.model {
        FittedSystem::Ensemble(m) => m.spec.members.clone(),
        FittedSystem::Single(_) => Vec::new(),
    };
    let mut w = csv::Writer::from_writer(out);
    let csv_err = |e: csv::Error| CliError::Input(vec![e.to_string()]);
    w.write_record(["row", "predicted_class", "p0", "p1", "selected"]).map_err(csv_err)?;
    for (i, x) in rows.values.iter().enumerate() {
        let p = bundle.predict(x).map_err(|e| CliError::Input(vec![format!("row {}: {e}", i + 1)]))?;
        let selected = p.selected.map_or(String::new(), |s| members[s].to_string());
        w.write_record([
            (i + 1).to_string(),
            p.class.to_string(),
            p.distribution.0[0].to_string(),
            p.distribution.0[1].to_string(),
            selected,
        ])
        .map_err(csv_err)?;
    }
    w.flush().map_err(|e| CliError::Input(vec![e.to_string()]))?;
    Ok(rows.values.len())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SynthKind {
    Benchmark,
    LabelDetermined,
}

/// Writes a generated dataset and its schema as `<stem>.csv` and `<stem>.schema.json`.
pub fn cmd_synth(dir: &Path, stem: &str, kind: SynthKind, rows: usize, seed: u64) -> CliResult<(PathBuf, PathBuf)> {
    let ds = match kind {
        SynthKind::Benchmark => synthetic::benchmark(rows, seed)?,
        SynthKind::LabelDetermined => synthetic::label_determined(rows, seed)?,
    };
    fs::create_dir_all(dir).map_err(|e| io_err(dir, e))?;
    let csv = dir.join(format!("{stem}.csv"));
    let schema = dir.join(format!("{stem}.schema.json"));
    save_dataset(&ds, &csv, &schema)?;
    Ok((csv, schema))
}
