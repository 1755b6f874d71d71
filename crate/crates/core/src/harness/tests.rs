use std::collections::BTreeSet;
use std::path::Path;

use super::*;
use crate::datasplit::TaskKind;
use crate::featurize::Featurizer;
use crate::metrics::MetricName;
use crate::report::Format;
use crate::sar::{Comparator, Flavor, Mode};
use crate::synth::{classification_labels, clustered_series, regression_values, SynthConfig};

fn task(name: &str, file: &Path, kind: TaskKind) -> TaskSpec {
    TaskSpec {
        name: name.into(),
        file: file.to_path_buf(),
        kind,
        group: None,
        smiles_column: "smiles".into(),
        target_column: None,
        binarize: None,
        sar_packs: Vec::new(),
    }
}

fn write_csv(path: &Path, header: &str, rows: &[String]) {
    let mut s = format!("{header}\n");
    for r in rows {
        s.push_str(r);
        s.push('\n');
    }
    std::fs::write(path, s).unwrap();
}

fn synth_classification(dir: &Path, series: usize, per_series: usize, seed: u64) -> std::path::PathBuf {
    let mols = clustered_series(&SynthConfig {
        series,
        per_series,
        seed,
    });
    let y = classification_labels(&mols, seed);
    let rows: Vec<String> = mols.iter().zip(&y).map(|(m, l)| format!("{},{}", m.smiles, l)).collect();
    let path = dir.join("cls.csv");
    write_csv(&path, "smiles,label", &rows);
    path
}

fn small_rf() -> ModelSpec {
    ModelSpec {
        n_trees: Some(15),
        ..ModelSpec::learner("rf", &[Featurizer::Ecfp4])
    }
}

fn small_config(dir: &Path, models: Vec<ModelSpec>) -> RunConfig {
    let file = synth_classification(dir, 5, 30, 11);
    let mut cfg = RunConfig::new(vec![task("cls", &file, TaskKind::Classification)], models);
    cfg.out = dir.join("run");
    cfg.nbits = 512;
    cfg.max_components = 16;
    cfg.seed = 5;
    cfg
}

#[test]
fn seeds_are_stable_and_distinct() {
    assert_eq!(derive_seed(1, "AMES", "rf_ecfp4", 0), derive_seed(1, "AMES", "rf_ecfp4", 0));
    assert_ne!(derive_seed(1, "AMES", "rf_ecfp4", 0), derive_seed(1, "AMES", "rf_ecfp4", 1));
    assert_ne!(derive_seed(1, "AMES", "rf_ecfp4", 0), derive_seed(2, "AMES", "rf_ecfp4", 0));
    // no concatenation ambiguity between task and model
    assert_ne!(derive_seed(1, "ab", "c", 0), derive_seed(1, "a", "bc", 0));
    assert_ne!(split_seed(1, "AMES"), derive_seed(1, "AMES", "", 0));
}

#[test]
fn full_grid_has_no_seed_collisions() {
    let tasks: Vec<String> = (0..40).map(|i| format!("task{i}")).collect();
    let models: Vec<String> = ["rf", "extratrees", "gbdt", "linear"]
        .iter()
        .flat_map(|f| Featurizer::ALL.iter().map(move |z| format!("{f}_{z}")))
        .chain(["sar_smarts", "sar_smarts_knowledge", "sar_text", "sar_text_knowledge"].map(String::from))
        .collect();
    assert!(seed_collisions(7, &tasks, &models, 5).is_empty());
    let dup = vec!["t".to_string(), "t".to_string()];
    assert_eq!(seed_collisions(7, &dup, &models[..1], 1).len(), 1);
}

#[test]
fn potency_binarization_and_units() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("p.csv");
    write_csv(
        &path,
        "smiles,potency,unit",
        &[
            "CCO,0.5,uM".into(),
            "CCN,2,uM".into(),
            "CCC,100,nM".into(),
            "CCCl,0.1,uM".into(),
            "CCBr,101,nM".into(),
            "CCF,,uM".into(),
        ],
    );
    let mut spec = task("pot", &path, TaskKind::Classification);
    spec.binarize = Some(Binarization {
        column: "potency".into(),
        comparator: Comparator::Le,
        threshold: 1.0,
        units: Some(Unit::Micro),
        unit_column: Some("unit".into()),
    });
    let got = ingest_dataset(&path, &spec, true).unwrap();
    let label = |s: &str| got.dataset.records.iter().find(|r| r.smiles == s).unwrap().label;
    assert_eq!(label("CCO"), 1.0);
    assert_eq!(label("CCN"), 0.0);
    assert_eq!(got.summary.missing_target, 1);
    assert_eq!(got.summary.n, 5);

    // 100 nM is 0.1 uM: both sit on a 0.1 uM threshold, 101 nM does not
    spec.binarize.as_mut().unwrap().threshold = 0.1;
    let got = ingest_dataset(&path, &spec, true).unwrap();
    let label = |s: &str| got.dataset.records.iter().find(|r| r.smiles == s).unwrap().label;
    assert_eq!(label("CCC"), 1.0);
    assert_eq!(label("CCCl"), 1.0);
    assert_eq!(label("CCBr"), 0.0);
    assert_eq!(Unit::Nano.convert(100.0, Unit::Micro), 0.1);
}

#[test]
fn ingest_echoes_count_and_rate() {
    let dir = tempfile::tempdir().unwrap();
    let mols = clustered_series(&SynthConfig {
        series: 8,
        per_series: 320,
        seed: 2,
    });
    let mut seen = BTreeSet::new();
    let mut rows = Vec::new();
    for m in &mols {
        let c = crate::chem::canonical_smiles(&crate::chem::parse_smiles(&m.smiles).unwrap());
        if seen.insert(c) {
            rows.push(m.smiles.clone());
        }
        if rows.len() == 2088 {
            break;
        }
    }
    assert_eq!(rows.len(), 2088);
    let lines: Vec<String> = rows
        .iter()
        .enumerate()
        .map(|(i, s)| format!("{s},{}", if i < 643 { 1 } else { 0 }))
        .collect();
    let path = dir.path().join("am.csv");
    write_csv(&path, "smiles,label", &lines);
    let got = ingest_dataset(&path, &task("am", &path, TaskKind::Classification), true).unwrap();
    assert_eq!(got.summary.n, 2088);
    assert_eq!(format!("{:.3}", got.summary.positive_rate.unwrap()), "0.308");
}

#[test]
fn ingest_errors() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("a.csv");
    write_csv(&path, "smiles,activity", &["CCO,1".into()]);
    let e = ingest_dataset(&path, &task("a", &path, TaskKind::Classification), true).unwrap_err();
    assert!(matches!(e, HarnessError::Schema(_)), "{e}");
    assert_eq!(e.exit_code(), 3);

    write_csv(&path, "smiles,label", &["not_a_smiles((,1".into(), "C1CC,0".into()]);
    let e = ingest_dataset(&path, &task("a", &path, TaskKind::Classification), true).unwrap_err();
    assert!(matches!(e, HarnessError::EmptyDataset(_)), "{e}");

    write_csv(&path, "smiles,label", &["CCO,2".into()]);
    let e = ingest_dataset(&path, &task("a", &path, TaskKind::Classification), true).unwrap_err();
    assert!(matches!(e, HarnessError::Data(_)), "{e}");
}

#[test]
fn write_once_semantics() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("x/y.csv");
    assert_eq!(write_once(&p, b"a").unwrap(), WriteOutcome::Written);
    assert_eq!(write_once(&p, b"a").unwrap(), WriteOutcome::Unchanged);
    let e = write_once(&p, b"b").unwrap_err();
    assert!(matches!(e, HarnessError::Conflict(_)));
    assert_eq!(e.exit_code(), 2);
}

#[test]
fn config_checks() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small_config(dir.path(), vec![ModelSpec::learner("ridge", &[Featurizer::Descriptors])]);
    let e = Harness::new(cfg).err().unwrap();
    assert!(matches!(e, HarnessError::Config(_)), "{e}");

    let cfg = small_config(dir.path(), vec![ModelSpec::learner("linear", &[Featurizer::Descriptors])]);
    let h = Harness::new(cfg).unwrap();
    let m = h.models("cls");
    assert_eq!(m[0].id, "linear_descriptors");
    assert!(matches!(
        m[0].kind,
        ModelKind::Learner {
            config: crate::learners::LearnerConfig {
                family: crate::learners::LearnerFamily::Logistic,
                ..
            },
            ..
        }
    ));

    let cfg = small_config(dir.path(), vec![ModelSpec::sar(Flavor::Smarts, Mode::PriorsOnly)]);
    assert!(matches!(Harness::new(cfg).err().unwrap(), HarnessError::Config(_)));

    let e = RunConfig::from_json(r#"{"tasks": [], "models": [], "colour": 1}"#, Path::new(".")).unwrap_err();
    assert!(e.to_string().contains("colour"), "{e}");

    let mut cfg = small_config(dir.path(), vec![small_rf()]);
    cfg.tasks[0].name = "../escape".into();
    assert!(matches!(Harness::new(cfg).err().unwrap(), HarnessError::Config(_)));
}

#[test]
fn grid_arithmetic_and_rerun() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small_config(dir.path(), vec![small_rf(), ModelSpec::learner("linear", &[Featurizer::Descriptors])]);
    let mut h = Harness::new(cfg.clone()).unwrap();
    h.run_all(Format::Csv).unwrap();
    let out = cfg.out_dir();
    let m = Manifest::read(&out.join("manifest.json")).unwrap();
    assert_eq!(m.summary.total, 10);
    assert_eq!(m.summary.done + m.summary.failed + m.summary.skipped_degenerate, 10);
    let preds = walk(&out.join("predictions"));
    assert_eq!(preds.len(), m.summary.done);
    let metrics = std::fs::read_to_string(out.join("metrics.csv")).unwrap();
    assert_eq!(metrics.lines().count() - 1, m.summary.done * 6);
    assert!(out.join("report/fold_means.csv").exists());
    assert!(out.join("report/enrichment.csv").exists());
    let stages: Vec<&str> = m.stages.iter().map(String::as_str).collect();
    assert_eq!(stages, ["split", "featurize", "train", "evaluate", "sar-induce", "report"]);

    // same inputs, same directory: every write is a no-op
    Harness::new(cfg.clone()).unwrap().run_all(Format::Csv).unwrap();
    assert_eq!(std::fs::read_to_string(out.join("metrics.csv")).unwrap(), metrics);

    // a different seed would change the folds: refused rather than overwritten
    let mut other = cfg.clone();
    other.seed = 6;
    let e = Harness::new(other).unwrap().split().unwrap_err();
    assert!(matches!(e, HarnessError::Conflict(_)), "{e}");

    // a fresh directory with one worker reproduces the digest
    let mut single = cfg.clone();
    single.out = dir.path().join("run1");
    single.jobs = 1;
    Harness::new(single.clone()).unwrap().run_all(Format::Csv).unwrap();
    let again = std::fs::read_to_string(single.out_dir().join("metrics.csv")).unwrap();
    assert_eq!(sha256_hex(again.as_bytes()), sha256_hex(metrics.as_bytes()));
}

fn walk(dir: &Path) -> Vec<std::path::PathBuf> {
    let mut out = Vec::new();
    for e in std::fs::read_dir(dir).unwrap() {
        let p = e.unwrap().path();
        if p.is_dir() {
            out.extend(walk(&p));
        } else {
            out.push(p);
        }
    }
    out
}

#[test]
fn failing_model_is_isolated() {
    let dir = tempfile::tempdir().unwrap();
    let mut bad = small_rf();
    bad.id = Some("broken".into());
    let cfg = small_config(dir.path(), vec![small_rf(), bad]);
    let hook: FaultHook = Box::new(|_, model, _| (model == "broken_ecfp4").then(|| "always fails".to_string()));
    let mut h = Harness::new(cfg.clone()).unwrap().with_fault(hook);
    h.split().unwrap();
    let cells = h.train().unwrap();
    let failed: Vec<_> = cells.iter().filter(|c| c.status == CellStatus::Failed).collect();
    assert_eq!(failed.len(), 5);
    assert!(failed.iter().all(|c| c.model == "broken_ecfp4"));
    assert!(cells
        .iter()
        .filter(|c| c.model == "rf_ecfp4")
        .all(|c| c.status == CellStatus::Done));
    let m = Manifest::read(&cfg.out_dir().join("manifest.json")).unwrap();
    assert_eq!(m.summary.failed, 5);
    assert_eq!(m.summary.total, 10);
    let records = h.evaluate().unwrap();
    assert!(records.iter().all(|r| r.model == "rf_ecfp4"));
}

#[test]
fn stages_need_their_inputs() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small_config(dir.path(), vec![small_rf()]);
    let mut h = Harness::new(cfg).unwrap();
    let e = h.train().unwrap_err();
    assert!(matches!(e, HarnessError::Missing(_)), "{e}");
    h.split().unwrap();
    let e = h.evaluate().unwrap_err();
    assert!(matches!(e, HarnessError::Missing(_)), "{e}");
}

#[test]
fn sar_cells_and_regression() {
    let dir = tempfile::tempdir().unwrap();
    let mols = clustered_series(&SynthConfig {
        series: 5,
        per_series: 30,
        seed: 4,
    });
    let y = regression_values(&mols, 4, 0.3);
    let rows: Vec<String> = mols.iter().zip(&y).map(|(m, v)| format!("{},{v}", m.smiles)).collect();
    let path = dir.path().join("reg.csv");
    write_csv(&path, "smiles,value", &rows);
    let packs = Path::new(env!("CARGO_MANIFEST_DIR")).join("packs");
    let mut t = task("logd", &path, TaskKind::Regression);
    t.sar_packs = vec![packs.join("lipophilicity.smarts.pack")];
    let mut cfg = RunConfig::new(
        vec![t],
        vec![
            ModelSpec::sar(Flavor::Smarts, Mode::PriorsOnly),
            ModelSpec::sar(Flavor::Smarts, Mode::WithKnowledge),
        ],
    );
    cfg.out = dir.path().join("run");
    cfg.nbits = 512;
    let mut h = Harness::new(cfg.clone()).unwrap();
    let report = h.run_all(Format::Markdown).unwrap();
    let m = Manifest::read(&cfg.out_dir().join("manifest.json")).unwrap();
    assert_eq!(m.summary.done, 10);
    let records = crate::metrics::read_metrics_csv(std::fs::File::open(cfg.out_dir().join("metrics.csv")).unwrap()).unwrap();
    assert_eq!(records.len(), 20);
    assert!(records.iter().all(|r| matches!(r.metric, MetricName::Mae | MetricName::Pearson)));
    assert!(cfg.out_dir().join("sar/logd.smarts.rules.csv").exists());
    assert!(cfg.out_dir().join("report/report.md").exists());
    assert!(report.tables.iter().any(|t| t.name == "regression_mae_pearson"));
}
