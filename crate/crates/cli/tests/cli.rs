use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use mcls_core::architectures::{Architecture, CombinationRule, EnsembleConfig, EnsembleSpec};
use mcls_core::data::{split_train_val_test, SplitSpec};
use mcls_core::evaluation::{fit_system, System};
use mcls_core::{load_dataset, ClassifierKind, ModelBundle, ResamplingKind};

fn data_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../data")
}

fn mcls(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_mcls")).args(args).output().expect("binary runs")
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn write_config(dir: &Path, body: &str) -> PathBuf {
    let data = data_dir().canonicalize().unwrap();
    let text = format!(
        "dataset = \"{}\"\nschema = \"{}\"\noutput = \"{}\"\n{body}",
        data.join("synthetic.csv").display(),
        data.join("synthetic.schema.json").display(),
        dir.join("out").display()
    );
    let p = dir.join("config.toml");
    fs::write(&p, text).unwrap();
    p
}

const TOY: &str = "members = [\"DT+kNN\", \"ANN+LgD+NBC\"]\narchitectures = [\"static_parallel\"]\n\
                   resamplings = [\"bagging\"]\nfolds = 2\nseed = 7\n";

#[test]
fn validate_reports_ok_and_every_violation() {
    let out = mcls(&["validate", "--config", s(&data_dir().join("toy.toml"))]);
    assert_eq!(out.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&out.stdout).starts_with("OK"));

    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("bad.toml");
    fs::write(
        &p,
        "dataset = \"absent.csv\"\nschema = \"absent.json\"\nworkers = 0\n[split]\ntrain = 0.65\nvalidation = 0.3\ntest = 0.1\n",
    )
    .unwrap();
    let out = mcls(&["validate", "--config", s(&p)]);
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("absent.csv"), "{err}");
    assert!(err.contains("absent.json"));
    assert!(err.contains("workers"));
    assert!(err.contains("split"));
    assert!(err.contains("1.05"));
}

#[test]
fn toy_grid_counts_and_determinism() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), TOY);
    let run = |out: &str, workers: &str| {
        let o = mcls(&["grid", "--config", s(&cfg), "--out", out, "--workers", workers]);
        assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
        fs::read_to_string(Path::new(out).join("results.csv")).unwrap()
    };
    let a_dir = dir.path().join("a");
    let b_dir = dir.path().join("b");
    let a = run(s(&a_dir), "1");
    let b = run(s(&b_dir), "4");
    let strip = |t: &str| -> Vec<String> {
        t.lines()
            .map(|l| {
                let mut f: Vec<&str> = l.split(',').collect();
                f.remove(8);
                f.join(",")
            })
            .collect()
    };
    assert_eq!(strip(&a), strip(&b));
    let rows: Vec<&str> = a.lines().skip(1).collect();
    assert_eq!(rows.len(), 4 + 5 * 2);
    assert_eq!(rows.iter().filter(|r| r.contains("static_parallel")).count(), 4);

    let manifest: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(a_dir.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["base_seed"], 7);
    assert_eq!(manifest["cells"], 14);
    assert_eq!(manifest["config_sha256"].as_str().unwrap().len(), 64);
}

#[test]
fn failing_cells_set_exit_status_one() {
    let dir = tempfile::tempdir().unwrap();
    // ten rows with two positives: unstratified folds of two leave some
    // test folds with a single class
    let mut csv = String::from("x,y\n");
    for i in 0..10 {
        csv.push_str(&format!("{i},{}\n", u8::from(i < 2)));
    }
    fs::write(dir.path().join("d.csv"), csv).unwrap();
    fs::write(
        dir.path().join("d.json"),
        r#"{"label": "y", "features": [{"name": "x", "kind": "numeric"}]}"#,
    )
    .unwrap();
    let cfg = dir.path().join("c.toml");
    fs::write(
        &cfg,
        "dataset = \"d.csv\"\nschema = \"d.json\"\noutput = \"out\"\nmembers = [\"DT+NBC\"]\n\
         architectures = [\"static_parallel\"]\nresamplings = [\"bagging\"]\n[split]\nstratified = false\n",
    )
    .unwrap();
    let out = mcls(&["grid", "--config", s(&cfg)]);
    assert_eq!(out.status.code(), Some(1), "{}", String::from_utf8_lossy(&out.stderr));
    let results = fs::read_to_string(dir.path().join("out/results.csv")).unwrap();
    assert!(results.contains("failed:"));
}

#[test]
fn rank_lists_every_feature_and_finds_the_key() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "");
    let out = mcls(&["rank", "--config", s(&cfg)]);
    assert_eq!(out.status.code(), Some(0));
    let ranking = fs::read_to_string(dir.path().join("out/ranking.csv")).unwrap();
    assert_eq!(ranking.lines().count(), 1 + 6);
    assert!(String::from_utf8_lossy(&out.stdout).contains(" ± "));

    let synth = mcls(&["synth", "--out", s(dir.path()), "--kind", "label-determined", "--rows", "200", "--name", "keyed"]);
    assert_eq!(synth.status.code(), Some(0));
    let cfg = dir.path().join("keyed.toml");
    fs::write(&cfg, "dataset = \"keyed.csv\"\nschema = \"keyed.schema.json\"\noutput = \"k\"\n").unwrap();
    let out = mcls(&["rank", "--config", s(&cfg)]);
    assert_eq!(out.status.code(), Some(0));
    let ranking = fs::read_to_string(dir.path().join("k/ranking.csv")).unwrap();
    assert!(ranking.lines().nth(1).unwrap().starts_with("1,key,"), "{ranking}");
}

#[test]
fn report_from_grid_results_and_empty_input() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), TOY);
    assert_eq!(mcls(&["grid", "--config", s(&cfg)]).status.code(), Some(0));
    let rep = dir.path().join("report");
    let out = mcls(&["report", "--results", s(&dir.path().join("out/results.csv")), "--out", s(&rep)]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    for f in ["fig1_single_classifiers.csv", "fig2_ensemble_size.csv", "fig9_mcls5.csv", "anova.csv", "summary.txt"] {
        assert!(rep.join(f).is_file(), "{f}");
    }
    let fig1 = fs::read_to_string(rep.join("fig1_single_classifiers.csv")).unwrap();
    assert_eq!(fig1.lines().count(), 6);

    let empty = dir.path().join("empty.csv");
    fs::write(&empty, "").unwrap();
    let rep2 = dir.path().join("report2");
    let out = mcls(&["report", "--results", s(&empty), "--out", s(&rep2)]);
    assert_eq!(out.status.code(), Some(2));
    assert!(!rep2.exists());
    let header_only = dir.path().join("header.csv");
    fs::write(&header_only, mcls_core::evaluation::RESULT_COLUMNS.join(",") + "\n").unwrap();
    let out = mcls(&["report", "--results", s(&header_only), "--out", s(&rep2)]);
    assert_eq!(out.status.code(), Some(2));
    assert!(!rep2.exists());
}

fn parse_predictions(text: &str) -> Vec<(u8, f64, f64, String)> {
    text.lines()
        .skip(1)
        .map(|l| {
            let f: Vec<&str> = l.split(',').collect();
            (f[1].parse().unwrap(), f[2].parse().unwrap(), f[3].parse().unwrap(), f[4].to_string())
        })
        .collect()
}

#[test]
fn predict_matches_in_process_model_bitwise() {
    let dir = tempfile::tempdir().unwrap();
    let data = data_dir();
    let ds = load_dataset(data.join("synthetic.csv"), data.join("synthetic.schema.json")).unwrap();
    let (train, val, _) = split_train_val_test(&ds, &SplitSpec::default()).unwrap();
    let system = System::Ensemble(
        EnsembleSpec::new(
            vec![ClassifierKind::Dt, ClassifierKind::Knn, ClassifierKind::Lgd],
            Architecture::DynamicSelection,
            ResamplingKind::Bagging,
            CombinationRule::MajorityVote,
        )
        .unwrap(),
    );
    let (model, _, _) = fit_system(&system, &train, &val, &EnsembleConfig::default(), 4).unwrap();
    let bundle = ModelBundle::new(ds.schema(), model);
    let model_path = dir.path().join("model.json");
    bundle.save(&model_path).unwrap();

    let out = mcls(&["predict", "--model", s(&model_path), "--data", s(&data.join("synthetic.csv"))]);
    assert_eq!(out.status.code(), Some(0));
    let rows = parse_predictions(&String::from_utf8(out.stdout).unwrap());
    assert_eq!(rows.len(), ds.len());
    for (inst, (class, p0, p1, selected)) in ds.instances.iter().zip(&rows) {
        let p = bundle.predict(&inst.values).unwrap();
        assert_eq!(p.class, *class);
        assert_eq!(p.distribution.0[0].to_bits(), p0.to_bits());
        assert_eq!(p.distribution.0[1].to_bits(), p1.to_bits());
        assert!(["DT", "kNN", "LgD"].contains(&selected.as_str()));
    }

    // zero rows: header only
    let empty = dir.path().join("empty.csv");
    fs::write(&empty, fs::read_to_string(data.join("synthetic.csv")).unwrap().lines().next().unwrap().to_string() + "\n").unwrap();
    let out = mcls(&["predict", "--model", s(&model_path), "--data", s(&empty)]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(String::from_utf8(out.stdout).unwrap(), "row,predicted_class,p0,p1,selected\n");

    // a schema that renames a feature is rejected by name
    let schema = fs::read_to_string(data.join("synthetic.schema.json")).unwrap().replace("\"play\"", "\"playtime\"");
    let renamed = dir.path().join("renamed.schema.json");
    fs::write(&renamed, schema).unwrap();
    let out = mcls(&[
        "predict",
        "--model",
        s(&model_path),
        "--data",
        s(&data.join("synthetic.csv")),
        "--schema",
        s(&renamed),
    ]);
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("play"), "{err}");
}

#[test]
fn saved_models_reload_and_score() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), TOY);
    let out = mcls(&["grid", "--config", s(&cfg), "--save-models"]);
    assert_eq!(out.status.code(), Some(0));
    let models: Vec<_> = fs::read_dir(dir.path().join("out/models")).unwrap().collect();
    assert_eq!(models.len(), 7);
    let bundle = ModelBundle::load(dir.path().join("out/models/DT-kNN__static_parallel__bagging.json")).unwrap();
    assert_eq!(bundle.schema.features.len(), 6);
}
