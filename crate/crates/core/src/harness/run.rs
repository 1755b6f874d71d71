use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::fs;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::{Path, PathBuf};
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{
    derive_seed, ingest_dataset, seed_collisions, sha256_hex, split_seed, write_once, DatasetSummary, HarnessError,
    IngestedTask, RunConfig, TaskSpec, WriteOutcome,
};
use crate::chem::{parse_smiles, PreparedMolecule};
use crate::datasplit::{assign_folds, join_flags, FoldAssignment, KMeansConfig, SplitConfig, TaskDataset, TaskKind};
use crate::featurize::{featurize_all, FeatureMatrix, Featurizer};
use crate::learners::{fit, sample_weights, LearnerConfig, LearnerFamily};
use crate::metrics::{
    class_precision_recall, metrics_csv_string, pr_auc, read_metrics_csv, regression_metrics, roc_auc, Family,
    MetricName, MetricRecord,
};
use crate::report::{build_report, emit_tables, fmt3, Format, Report, TaskGroups, Table};
use crate::sar::{
    candidate_library, export_rule_table, induce_from_hits, hit_matrix, load_rule_pack, rule_table_csv, Candidate,
    Flavor, Mode, RulePack, SarMolecule,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stage {
    Split,
    Featurize,
    Train,
    Evaluate,
    SarInduce,
    Report,
}

impl Stage {
    pub const ALL: [Stage; 6] = [
        Stage::Split,
        Stage::Featurize,
        Stage::Train,
        Stage::Evaluate,
        Stage::SarInduce,
        Stage::Report,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Stage::Split => "split",
            Stage::Featurize => "featurize",
            Stage::Train => "train",
            Stage::Evaluate => "evaluate",
            Stage::SarInduce => "sar-induce",
            Stage::Report => "report",
        }
    }
}

#[derive(Debug, Clone)]
pub enum ModelKind {
    Learner { config: LearnerConfig, featurizer: Featurizer },
    Sar { flavor: Flavor, mode: Mode },
}

/// A model of the grid, resolved for one task.
#[derive(Debug, Clone)]
pub struct ModelPlan {
    pub id: String,
    pub family: Family,
    pub kind: ModelKind,
}

#[derive(Debug, Clone)]
struct TaskPlan {
    spec: TaskSpec,
    models: Vec<ModelPlan>,
    packs: Vec<RulePack>,
}

impl TaskPlan {
    fn pack(&self, flavor: Flavor) -> &RulePack {
        self.packs.iter().find(|p| p.flavor == flavor).expect("pack checked at plan time")
    }

    fn featurizers(&self) -> BTreeSet<Featurizer> {
        self.models
            .iter()
            .filter_map(|m| match &m.kind {
                ModelKind::Learner { featurizer, .. } => Some(*featurizer),
                ModelKind::Sar { .. } => None,
            })
            .collect()
    }

    fn sar_flavors(&self, knowledge_only: bool) -> Vec<Flavor> {
        let mut out = Vec::new();
        for m in &self.models {
            if let ModelKind::Sar { flavor, mode } = &m.kind {
                if (!knowledge_only || *mode == Mode::WithKnowledge) && !out.contains(flavor) {
                    out.push(*flavor);
                }
            }
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CellStatus {
    Done,
    Failed,
    SkippedDegenerate,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellRecord {
    pub task: String,
    pub model: String,
    pub family: Family,
    pub fold: usize,
    pub seed: u64,
    pub status: CellStatus,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reason: Option<String>,
    pub n_train: usize,
    pub n_test: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub predictions_sha256: Option<String>,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CellSummary {
    pub total: usize,
    pub done: usize,
    pub failed: usize,
    pub skipped_degenerate: usize,
}

impl CellSummary {
    fn of(cells: &[CellRecord]) -> Self {
        let count = |s: CellStatus| cells.iter().filter(|c| c.status == s).count();
        CellSummary {
            total: cells.len(),
            done: count(CellStatus::Done),
            failed: count(CellStatus::Failed),
            skipped_degenerate: count(CellStatus::SkippedDegenerate),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub tool: String,
    pub version: String,
    pub config_hash: String,
    pub config: RunConfig,
    pub stages: Vec<String>,
    pub datasets: BTreeMap<String, DatasetSummary>,
    pub fold_files: BTreeMap<String, String>,
    pub cells: Vec<CellRecord>,
    pub summary: CellSummary,
    pub seed_collisions: Vec<(String, String)>,
    pub metrics_sha256: Option<String>,
    pub outputs: BTreeMap<String, String>,
}

impl Manifest {
    fn new(cfg: &RunConfig) -> Self {
        Manifest {
            tool: "qsarbench".into(),
            version: env!("CARGO_PKG_VERSION").into(),
            config_hash: cfg.hash(),
            config: cfg.clone(),
            stages: Vec::new(),
            datasets: BTreeMap::new(),
            fold_files: BTreeMap::new(),
            cells: Vec::new(),
            summary: CellSummary::default(),
            seed_collisions: Vec::new(),
            metrics_sha256: None,
            outputs: BTreeMap::new(),
        }
    }

    fn mark(&mut self, stage: Stage) {
        if !self.stages.iter().any(|s| s == stage.as_str()) {
            self.stages.push(stage.as_str().into());
        }
    }

    pub fn read(path: &Path) -> Result<Manifest, HarnessError> {
        let text = fs::read_to_string(path).map_err(|e| HarnessError::io(path, e))?;
        serde_json::from_str(&text).map_err(|e| HarnessError::Data(format!("{}: {e}", path.display())))
    }
}

/// Held-out predictions of one cell.
#[derive(Debug, Clone, PartialEq)]
pub struct PredictionSet {
    pub task: String,
    pub model: String,
    pub fold: usize,
    pub smiles: Vec<String>,
    pub labels: Vec<f64>,
    pub predictions: Vec<f64>,
}

impl PredictionSet {
    pub fn to_csv(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(["canonical_smiles", "label", "prediction"]).expect("in-memory write");
        for i in 0..self.smiles.len() {
            w.write_record([
                self.smiles[i].as_str(),
                &format!("{:?}", self.labels[i]),
                &format!("{:?}", self.predictions[i]),
            ])
            .expect("in-memory write");
        }
        String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8")
    }

    pub fn read(path: &Path, task: &str, model: &str, fold: usize) -> Result<Self, HarnessError> {
        let bad = |m: String| HarnessError::Data(format!("{}: {m}", path.display()));
        let mut rdr = csv::Reader::from_path(path).map_err(|e| bad(e.to_string()))?;
        let mut ps = PredictionSet {
            task: task.into(),
            model: model.into(),
            fold,
            smiles: Vec::new(),
            labels: Vec::new(),
            predictions: Vec::new(),
        };
        for rec in rdr.records() {
            let rec = rec.map_err(|e| bad(e.to_string()))?;
            let num = |i: usize| {
                rec.get(i)
                    .and_then(|v| v.parse::<f64>().ok())
                    .ok_or_else(|| bad(format!("bad number in column {}", i + 1)))
            };
            ps.smiles.push(rec.get(0).unwrap_or("").to_string());
            ps.labels.push(num(1)?);
            ps.predictions.push(num(2)?);
        }
        Ok(ps)
    }
}

/// Test hook: returning `Some(message)` fails the (task, model, fold) cell.
pub type FaultHook = Box<dyn Fn(&str, &str, usize) -> Option<String> + Send + Sync>;

/// Everything one task's cells share.
struct TaskContext<'a> {
    plan: &'a TaskPlan,
    data: &'a TaskDataset,
    folds: &'a FoldAssignment,
    matrices: BTreeMap<Featurizer, FeatureMatrix>,
    sar_mols: Vec<SarMolecule>,
    libraries: Vec<(Flavor, Vec<Candidate>, Vec<Vec<bool>>)>,
}

pub struct Harness {
    cfg: RunConfig,
    out: PathBuf,
    plans: Vec<TaskPlan>,
    pool: rayon::ThreadPool,
    fault: Option<FaultHook>,
    data: Option<Vec<IngestedTask>>,
}

fn resolve_family(name: &str, kind: TaskKind) -> Result<LearnerFamily, String> {
    let family = if name.eq_ignore_ascii_case("linear") {
        match kind {
            TaskKind::Classification => LearnerFamily::Logistic,
            TaskKind::Regression => LearnerFamily::Ridge,
        }
    } else {
        LearnerFamily::from_str(name).map_err(|e| e.to_string())?
    };
    Ok(family)
}

fn plan_task(cfg: &RunConfig, spec: &TaskSpec) -> Result<TaskPlan, HarnessError> {
    let bad = |m: String| HarnessError::Config(format!("task '{}': {m}", spec.name));
    let mut packs: Vec<RulePack> = Vec::new();
    for p in &spec.sar_packs {
        let pack = load_rule_pack(&cfg.resolve(p)).map_err(|e| HarnessError::Config(e.to_string()))?;
        if pack.rules.kind != spec.kind {
            return Err(bad(format!(
                "pack {} is for {} tasks, the task is {}",
                p.display(),
                pack.rules.kind,
                spec.kind
            )));
        }
        if packs.iter().any(|q| q.flavor == pack.flavor) {
            return Err(bad(format!("two {} packs configured", pack.flavor)));
        }
        packs.push(pack);
    }
    let mut models = Vec::new();
    for m in &cfg.models {
        if m.is_sar() {
            let learner_opts = m.featurizers.is_some()
                || m.n_trees.is_some()
                || m.max_depth.is_some()
                || m.min_samples_leaf.is_some()
                || m.learning_rate.is_some()
                || m.lambda.is_some()
                || m.max_iter.is_some()
                || m.bootstrap.is_some()
                || m.weighting.is_some();
            if learner_opts {
                return Err(bad("sar models take no featurizers or learner options".into()));
            }
            let flavor = m.flavor.unwrap_or(Flavor::Smarts);
            let mode = m.mode.unwrap_or(Mode::PriorsOnly);
            if !packs.iter().any(|p| p.flavor == flavor) {
                return Err(bad(format!("a {flavor} sar model needs a {flavor} pack in 'sar_packs'")));
            }
            let id = m.id.clone().unwrap_or_else(|| match mode {
                Mode::PriorsOnly => format!("sar_{flavor}"),
                Mode::WithKnowledge => format!("sar_{flavor}_knowledge"),
            });
            models.push(ModelPlan {
                id,
                family: Family::LlmSar,
                kind: ModelKind::Sar { flavor, mode },
            });
            continue;
        }
        if m.mode.is_some() || m.flavor.is_some() {
            return Err(bad(format!("'mode' and 'flavor' apply to sar models, not '{}'", m.family)));
        }
        let family = resolve_family(&m.family, spec.kind).map_err(&bad)?;
        if !family.supports(spec.kind) {
            return Err(bad(format!(
                "{family} cannot fit a {} task; use 'linear' to pick logistic or ridge by task kind",
                spec.kind
            )));
        }
        let mut lc = LearnerConfig::new(family, 0);
        if let Some(v) = m.n_trees {
            lc.n_trees = v;
        }
        if let Some(v) = m.max_depth {
            lc.max_depth = Some(v);
        }
        if let Some(v) = m.min_samples_leaf {
            lc.min_samples_leaf = v;
        }
        if let Some(v) = m.learning_rate {
            lc.learning_rate = v;
        }
        if let Some(v) = m.lambda {
            lc.lambda = v;
        }
        if let Some(v) = m.max_iter {
            lc.max_iter = v;
        }
        if let Some(v) = m.bootstrap {
            lc.bootstrap = v;
        }
        if let Some(v) = m.weighting {
            lc.weighting = v;
        }
        lc.validate(spec.kind).map_err(|e| bad(e.to_string()))?;
        let prefix = m.id.clone().unwrap_or_else(|| m.family.to_ascii_lowercase());
        for &f in m.featurizers.as_deref().unwrap_or(&cfg.featurizers) {
            models.push(ModelPlan {
                id: format!("{prefix}_{}", f.tag()),
                family: Family::Ml,
                kind: ModelKind::Learner {
                    config: lc.clone(),
                    featurizer: f,
                },
            });
        }
    }
    let mut ids = BTreeSet::new();
    for m in &models {
        super::check_name("model id", &m.id)?;
        if !ids.insert(m.id.as_str()) {
            return Err(bad(format!("model id '{}' appears twice in the grid", m.id)));
        }
    }
    Ok(TaskPlan {
        spec: spec.clone(),
        models,
        packs,
    })
}

fn flags_string(parts: &[&str]) -> String {
    parts.iter().filter(|p| !p.is_empty()).copied().collect::<Vec<_>>().join("|")
}

/// Metric records of one finished cell.
pub(crate) fn cell_metrics(
    ps: &PredictionSet,
    family: Family,
    kind: TaskKind,
    threshold: f64,
    fold_flags: &str,
) -> Vec<MetricRecord> {
    let rec = |metric: MetricName, value: Option<f64>, extra: &str| MetricRecord {
        task: ps.task.clone(),
        model: ps.model.clone(),
        family,
        fold: ps.fold,
        metric,
        value,
        flags: flags_string(&[fold_flags, extra]),
    };
    let undefined = |v: &Option<f64>| if v.is_none() { "undefined" } else { "" };
    match kind {
        TaskKind::Classification => {
            let pr = pr_auc(&ps.predictions, &ps.labels).ok();
            let roc = roc_auc(&ps.predictions, &ps.labels).ok();
            let cr = class_precision_recall(&ps.predictions, &ps.labels, threshold);
            let mut out = vec![
                rec(MetricName::PrAuc, pr, undefined(&pr)),
                rec(MetricName::RocAuc, roc, undefined(&roc)),
            ];
            for (m, v) in [
                (MetricName::P0, cr.p0),
                (MetricName::R0, cr.r0),
                (MetricName::P1, cr.p1),
                (MetricName::R1, cr.r1),
            ] {
                out.push(rec(m, Some(v), if cr.flag_for(m) { "zero_division" } else { "" }));
            }
            out
        }
        TaskKind::Regression => {
            let rr = regression_metrics(&ps.predictions, &ps.labels);
            let p = rr.pearson.ok();
            vec![
                rec(MetricName::Mae, Some(rr.mae), ""),
                rec(MetricName::Pearson, p, undefined(&p)),
            ]
        }
    }
}

fn sar_molecules(data: &TaskDataset) -> Vec<SarMolecule> {
    data.records
        .par_iter()
        .map(|r| SarMolecule::new(PreparedMolecule::new(parse_smiles(&r.smiles).expect("canonical SMILES reparses"))))
        .collect()
}

fn panic_message(p: Box<dyn std::any::Any + Send>) -> String {
    if let Some(s) = p.downcast_ref::<&str>() {
        s.to_string()
    } else if let Some(s) = p.downcast_ref::<String>() {
        s.clone()
    } else {
        "panic".into()
    }
}

impl Harness {
    pub fn new(cfg: RunConfig) -> Result<Self, HarnessError> {
        cfg.validate()?;
        let plans = cfg.tasks.iter().map(|t| plan_task(&cfg, t)).collect::<Result<Vec<_>, _>>()?;
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(cfg.jobs)
            .build()
            .map_err(|e| HarnessError::Internal(format!("worker pool: {e}")))?;
        Ok(Harness {
            out: cfg.out_dir(),
            cfg,
            plans,
            pool,
            fault: None,
            data: None,
        })
    }

    pub fn with_fault(mut self, hook: FaultHook) -> Self {
        self.fault = Some(hook);
        self
    }

    pub fn config(&self) -> &RunConfig {
        &self.cfg
    }

    pub fn out_dir(&self) -> &Path {
        &self.out
    }

    /// Model ids per task, in grid order.
    pub fn models(&self, task: &str) -> Vec<ModelPlan> {
        self.plans
            .iter()
            .find(|p| p.spec.name == task)
            .map(|p| p.models.clone())
            .unwrap_or_default()
    }

    pub fn datasets(&mut self) -> Result<&[IngestedTask], HarnessError> {
        if self.data.is_none() {
            let cfg = &self.cfg;
            let loaded = self.pool.install(|| {
                cfg.tasks
                    .iter()
                    .map(|t| ingest_dataset(&cfg.resolve(&t.file), t, cfg.largest_fragment))
                    .collect::<Result<Vec<_>, _>>()
            })?;
            self.data = Some(loaded);
        }
        Ok(self.data.as_deref().unwrap())
    }

    fn manifest_path(&self) -> PathBuf {
        self.out.join("manifest.json")
    }

    fn load_manifest(&self) -> Manifest {
        let fresh = Manifest::new(&self.cfg);
        match Manifest::read(&self.manifest_path()) {
            Ok(m) if m.config_hash == fresh.config_hash => Manifest {
                config: self.cfg.clone(),
                ..m
            },
            _ => fresh,
        }
    }

    fn save_manifest(&self, m: &Manifest) -> Result<(), HarnessError> {
        let path = self.manifest_path();
        fs::create_dir_all(&self.out).map_err(|e| HarnessError::io(&self.out, e))?;
        let tmp = path.with_extension("json.tmp");
        let text = serde_json::to_string_pretty(m).expect("manifest serializes") + "\n";
        fs::write(&tmp, text).map_err(|e| HarnessError::io(&tmp, e))?;
        fs::rename(&tmp, &path).map_err(|e| HarnessError::io(&path, e))
    }

    fn record_output(&self, m: &mut Manifest, path: &Path, bytes: &[u8], outcome: WriteOutcome) {
        let rel = path.strip_prefix(&self.out).unwrap_or(path).display().to_string();
        if outcome == WriteOutcome::Unchanged {
            log::info!("{rel} unchanged");
        }
        m.outputs.insert(rel, sha256_hex(bytes));
    }

    fn fold_path(&self, task: &str) -> PathBuf {
        self.out.join("folds").join(format!("{task}.csv"))
    }

    fn load_folds(&mut self) -> Result<Vec<FoldAssignment>, HarnessError> {
        let k = self.cfg.folds;
        let paths: Vec<PathBuf> = self.plans.iter().map(|p| self.fold_path(&p.spec.name)).collect();
        let data = self.datasets()?;
        data.iter()
            .zip(&paths)
            .map(|(d, path)| {
                if !path.exists() {
                    return Err(HarnessError::Missing(format!(
                        "{} not found; run the split stage first",
                        path.display()
                    )));
                }
                FoldAssignment::read_csv(path, &d.dataset, k)
                    .map_err(|e| HarnessError::Data(format!("{}: {e}", path.display())))
            })
            .collect()
    }

    pub fn split(&mut self) -> Result<Vec<FoldAssignment>, HarnessError> {
        let mut manifest = self.load_manifest();
        let cfg = self.cfg.clone();
        self.datasets()?;
        let data = self.data.as_ref().unwrap();
        let mut out = Vec::new();
        for (plan, task) in self.plans.iter().zip(data) {
            let name = &plan.spec.name;
            let scfg = SplitConfig {
                nbits: cfg.nbits,
                max_components: cfg.max_components,
                kmeans: KMeansConfig {
                    k: cfg.folds,
                    ..KMeansConfig::default()
                },
                seed: split_seed(cfg.seed, name),
            };
            let fa = self
                .pool
                .install(|| assign_folds(&task.dataset, &scfg))
                .map_err(|e| HarnessError::Data(format!("task '{name}': {e}")))?;
            let csv = fa.to_csv_string().map_err(|e| HarnessError::Internal(e.to_string()))?;
            let side = fa
                .sidecar_json(Some(&task.dataset.provenance))
                .map_err(|e| HarnessError::Internal(e.to_string()))?;
            let csv_path = self.fold_path(name);
            let o = write_once(&csv_path, csv.as_bytes())?;
            self.record_output(&mut manifest, &csv_path, csv.as_bytes(), o);
            let side_path = self.out.join("folds").join(format!("{name}.json"));
            let o = write_once(&side_path, side.as_bytes())?;
            self.record_output(&mut manifest, &side_path, side.as_bytes(), o);
            manifest.fold_files.insert(name.clone(), sha256_hex(csv.as_bytes()));
            manifest.datasets.insert(name.clone(), task.summary.clone());
            for (f, flags) in fa.flags.iter().enumerate() {
                if !flags.is_empty() {
                    log::warn!("task {name} fold {f}: {}", join_flags(flags));
                }
            }
            out.push(fa);
        }
        manifest.mark(Stage::Split);
        self.save_manifest(&manifest)?;
        Ok(out)
    }

    fn feature_path(&self, task: &str, f: Featurizer) -> PathBuf {
        self.out.join("features").join(format!("{task}.{}.bin", f.tag()))
    }

    /// Cached feature matrix, computed and stored on a miss.
    fn features(&self, ti: usize, f: Featurizer) -> Result<FeatureMatrix, HarnessError> {
        let task = &self.data.as_ref().expect("datasets loaded")[ti];
        let path = self.feature_path(&task.dataset.name, f);
        let key = FeatureMatrix::cache_key(&task.summary.sha256, f.tag(), self.cfg.nbits);
        if let Some(m) = FeatureMatrix::read_cache(&path, &key).map_err(|e| HarnessError::Data(e.to_string()))? {
            return Ok(m);
        }
        let mols = task.dataset.molecules();
        let m = self.pool.install(|| featurize_all(&mols, f, self.cfg.nbits));
        fs::create_dir_all(path.parent().unwrap()).map_err(|e| HarnessError::io(&path, e))?;
        m.write_cache(&path, &key).map_err(|e| HarnessError::Internal(e.to_string()))?;
        Ok(m)
    }

    pub fn featurize(&mut self) -> Result<(), HarnessError> {
        self.datasets()?;
        let mut manifest = self.load_manifest();
        for (ti, plan) in self.plans.iter().enumerate() {
            for f in plan.featurizers() {
                let m = self.features(ti, f)?;
                log::info!("task {}: {} features {}x{}", plan.spec.name, f, m.rows(), m.cols());
            }
        }
        manifest.mark(Stage::Featurize);
        self.save_manifest(&manifest)
    }

    fn prediction_path(&self, task: &str, model: &str, fold: usize) -> PathBuf {
        self.out.join("predictions").join(task).join(model).join(format!("fold{fold}.csv"))
    }

    pub fn train(&mut self) -> Result<Vec<CellRecord>, HarnessError> {
        let folds = self.load_folds()?;
        let mut manifest = self.load_manifest();
        let data = self.data.as_ref().unwrap();
        let mut cells = Vec::new();
        for (ti, plan) in self.plans.iter().enumerate() {
            let mut matrices = BTreeMap::new();
            for f in plan.featurizers() {
                matrices.insert(f, self.features(ti, f)?);
            }
            let has_sar = !plan.sar_flavors(false).is_empty();
            let sar_mols = if has_sar {
                self.pool.install(|| sar_molecules(&data[ti].dataset))
            } else {
                Vec::new()
            };
            let libraries = plan
                .sar_flavors(true)
                .into_iter()
                .map(|fl| {
                    let lib = candidate_library(fl);
                    let hits = self.pool.install(|| hit_matrix(&lib, &sar_mols));
                    (fl, lib, hits)
                })
                .collect();
            let ctx = TaskContext {
                plan,
                data: &data[ti].dataset,
                folds: &folds[ti],
                matrices,
                sar_mols,
                libraries,
            };
            let jobs: Vec<(usize, usize)> = (0..plan.models.len())
                .flat_map(|m| (0..self.cfg.folds).map(move |f| (m, f)))
                .collect();
            let results: Vec<Result<CellRecord, HarnessError>> =
                self.pool.install(|| jobs.par_iter().map(|&(m, f)| self.run_cell(&ctx, m, f)).collect());
            for r in results {
                cells.push(r?);
            }
        }
        cells.sort_by(|a, b| (&a.task, &a.model, a.fold).cmp(&(&b.task, &b.model, b.fold)));
        let summary = CellSummary::of(&cells);
        log::info!(
            "cells: {} total, {} done, {} failed, {} skipped",
            summary.total,
            summary.done,
            summary.failed,
            summary.skipped_degenerate
        );
        for c in cells.iter().filter(|c| c.status != CellStatus::Done) {
            log::warn!(
                "{}/{}/fold{}: {:?}: {}",
                c.task,
                c.model,
                c.fold,
                c.status,
                c.reason.as_deref().unwrap_or("")
            );
        }
        let tasks: Vec<String> = self.plans.iter().map(|p| p.spec.name.clone()).collect();
        let models: BTreeSet<String> = self.plans.iter().flat_map(|p| p.models.iter().map(|m| m.id.clone())).collect();
        let models: Vec<String> = models.into_iter().collect();
        manifest.seed_collisions = seed_collisions(self.cfg.seed, &tasks, &models, self.cfg.folds);
        for (a, b) in &manifest.seed_collisions {
            log::warn!("seed collision between {a} and {b}");
        }
        manifest.summary = summary;
        manifest.cells = cells.clone();
        manifest.mark(Stage::Train);
        self.save_manifest(&manifest)?;
        Ok(cells)
    }

    fn run_cell(&self, ctx: &TaskContext, mi: usize, fold: usize) -> Result<CellRecord, HarnessError> {
        let model = &ctx.plan.models[mi];
        let task = &ctx.plan.spec.name;
        let kind = ctx.plan.spec.kind;
        let (train, test) = ctx.folds.train_test(fold);
        let mut rec = CellRecord {
            task: task.clone(),
            model: model.id.clone(),
            family: model.family,
            fold,
            seed: derive_seed(self.cfg.seed, task, &model.id, fold),
            status: CellStatus::Done,
            reason: None,
            n_train: train.len(),
            n_test: test.len(),
            predictions_sha256: None,
        };
        let labels: Vec<f64> = ctx.data.records.iter().map(|r| r.label).collect();
        let ytr: Vec<f64> = train.iter().map(|&i| labels[i]).collect();
        if let Some(reason) = self.fault.as_ref().and_then(|f| f(task, &model.id, fold)) {
            rec.status = CellStatus::Failed;
            rec.reason = Some(reason);
            return Ok(rec);
        }
        if test.is_empty() || train.len() < 2 {
            rec.status = CellStatus::SkippedDegenerate;
            rec.reason = Some(format!("{} train / {} test molecules", train.len(), test.len()));
            return Ok(rec);
        }
        if kind == TaskKind::Classification && ytr.iter().all(|&v| v == ytr[0]) {
            rec.status = CellStatus::SkippedDegenerate;
            rec.reason = Some(format!("train fold holds only class {}", ytr[0]));
            return Ok(rec);
        }

        let predicted = catch_unwind(AssertUnwindSafe(|| self.predict_cell(ctx, model, fold, &train, &test, &ytr, rec.seed)));
        let preds = match predicted {
            Ok(Ok(p)) => p,
            Ok(Err(msg)) => {
                rec.status = CellStatus::Failed;
                rec.reason = Some(msg);
                return Ok(rec);
            }
            Err(p) => {
                rec.status = CellStatus::Failed;
                rec.reason = Some(format!("panicked: {}", panic_message(p)));
                return Ok(rec);
            }
        };
        if let Some(i) = preds.iter().position(|v| !v.is_finite()) {
            rec.status = CellStatus::Failed;
            rec.reason = Some(format!("non-finite prediction for {}", ctx.data.records[test[i]].smiles));
            return Ok(rec);
        }

        let train_smiles: HashSet<&str> = train.iter().map(|&i| ctx.data.records[i].smiles.as_str()).collect();
        if let Some(&i) = test.iter().find(|&&i| train_smiles.contains(ctx.data.records[i].smiles.as_str())) {
            return Err(HarnessError::Internal(format!(
                "leakage guard: {} is in both train and test of {task}/{}/fold{fold}",
                ctx.data.records[i].smiles, model.id
            )));
        }
        let ps = PredictionSet {
            task: task.clone(),
            model: model.id.clone(),
            fold,
            smiles: test.iter().map(|&i| ctx.data.records[i].smiles.clone()).collect(),
            labels: test.iter().map(|&i| labels[i]).collect(),
            predictions: preds,
        };
        let csv = ps.to_csv();
        write_once(&self.prediction_path(task, &model.id, fold), csv.as_bytes())?;
        rec.predictions_sha256 = Some(sha256_hex(csv.as_bytes()));
        Ok(rec)
    }

    fn predict_cell(
        &self,
        ctx: &TaskContext,
        model: &ModelPlan,
        fold: usize,
        train: &[usize],
        test: &[usize],
        ytr: &[f64],
        seed: u64,
    ) -> Result<Vec<f64>, String> {
        let kind = ctx.plan.spec.kind;
        match &model.kind {
            ModelKind::Learner { config, featurizer } => {
                let mut lc = config.clone();
                lc.seed = seed;
                let x = &ctx.matrices[featurizer];
                let xtr = x.select_rows(train);
                let w = sample_weights(&lc, kind, ytr);
                let trained = fit(&lc, kind, &xtr, ytr, &w).map_err(|e| e.to_string())?;
                if self.cfg.save_models {
                    let path = self
                        .out
                        .join("models")
                        .join(&ctx.plan.spec.name)
                        .join(&model.id)
                        .join(format!("fold{fold}.json"));
                    write_once(&path, trained.to_json().as_bytes()).map_err(|e| e.to_string())?;
                }
                trained.predict(&x.select_rows(test)).map_err(|e| e.to_string())
            }
            ModelKind::Sar { flavor, mode } => {
                let pack = ctx.plan.pack(*flavor);
                let mut rules = pack.rules.with_train_intercept(ytr);
                if *mode == Mode::WithKnowledge {
                    let (_, lib, hits) = ctx
                        .libraries
                        .iter()
                        .find(|(f, _, _)| f == flavor)
                        .expect("library built for knowledge models");
                    let ind = induce_from_hits(hits, train, ytr, kind, lib, &self.cfg.induce);
                    rules = rules.with_knowledge(&ind.rules);
                }
                Ok(test.iter().map(|&i| rules.score(&ctx.sar_mols[i])).collect())
            }
        }
    }

    pub fn evaluate(&mut self) -> Result<Vec<MetricRecord>, HarnessError> {
        let folds = self.load_folds()?;
        let mut manifest = self.load_manifest();
        if !manifest.stages.iter().any(|s| s == Stage::Train.as_str()) {
            return Err(HarnessError::Missing(format!(
                "{} records no trained cells; run the train stage first",
                self.manifest_path().display()
            )));
        }
        let mut records = Vec::new();
        for cell in manifest.cells.iter().filter(|c| c.status == CellStatus::Done) {
            let ti = self
                .plans
                .iter()
                .position(|p| p.spec.name == cell.task)
                .ok_or_else(|| HarnessError::Data(format!("manifest cell for unknown task '{}'", cell.task)))?;
            let path = self.prediction_path(&cell.task, &cell.model, cell.fold);
            let ps = PredictionSet::read(&path, &cell.task, &cell.model, cell.fold)?;
            let fa = &folds[ti];
            if ps.smiles.len() != fa.sizes[cell.fold] {
                return Err(HarnessError::Data(format!(
                    "{} holds {} rows, fold {} has {}",
                    path.display(),
                    ps.smiles.len(),
                    cell.fold,
                    fa.sizes[cell.fold]
                )));
            }
            records.extend(cell_metrics(
                &ps,
                cell.family,
                self.plans[ti].spec.kind,
                self.cfg.threshold,
                &join_flags(&fa.flags[cell.fold]),
            ));
        }
        let csv = metrics_csv_string(&records);
        let path = self.out.join("metrics.csv");
        let o = write_once(&path, csv.as_bytes())?;
        self.record_output(&mut manifest, &path, csv.as_bytes(), o);
        manifest.metrics_sha256 = Some(sha256_hex(csv.as_bytes()));

        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(["task", "fold", "n_test", "positives", "positive_rate"]).expect("in-memory write");
        for fa in folds.iter().filter(|fa| fa.kind == TaskKind::Classification) {
            for f in 0..fa.k() {
                let rate = if fa.sizes[f] > 0 {
                    format!("{:?}", fa.positives[f] as f64 / fa.sizes[f] as f64)
                } else {
                    String::new()
                };
                w.write_record([
                    fa.task.as_str(),
                    &f.to_string(),
                    &fa.sizes[f].to_string(),
                    &fa.positives[f].to_string(),
                    &rate,
                ])
                .expect("in-memory write");
            }
        }
        let prev = w.into_inner().expect("in-memory flush");
        let path = self.out.join("prevalence.csv");
        let o = write_once(&path, &prev)?;
        self.record_output(&mut manifest, &path, &prev, o);
        manifest.mark(Stage::Evaluate);
        self.save_manifest(&manifest)?;
        Ok(records)
    }

    /// Induces rules on every train fold and writes the fold-averaged rule
    /// table for each task and SAR flavor in the grid.
    pub fn sar_induce(&mut self) -> Result<Vec<PathBuf>, HarnessError> {
        let folds = self.load_folds()?;
        let mut manifest = self.load_manifest();
        let data = self.data.as_ref().unwrap();
        let mut written = Vec::new();
        for (ti, plan) in self.plans.iter().enumerate() {
            let flavors = plan.sar_flavors(false);
            if flavors.is_empty() {
                continue;
            }
            let ds = &data[ti].dataset;
            let mols = self.pool.install(|| sar_molecules(ds));
            let labels = ds.labels();
            for flavor in flavors {
                let lib = candidate_library(flavor);
                let hits = self.pool.install(|| hit_matrix(&lib, &mols));
                let fa = &folds[ti];
                let per_fold: Vec<_> = (0..fa.k())
                    .map(|f| {
                        let (train, _) = fa.train_test(f);
                        let y: Vec<f64> = train.iter().map(|&i| labels[i]).collect();
                        let ind = induce_from_hits(&hits, &train, &y, ds.kind, &lib, &self.cfg.induce);
                        if ind.degenerate {
                            log::warn!("task {} fold {f}: single-class train fold, no rules induced", ds.name);
                        }
                        ind.rules
                    })
                    .collect();
                let rows = export_rule_table(&ds.name, &per_fold);
                let csv = rule_table_csv(&rows, fa.k());
                let path = self.out.join("sar").join(format!("{}.{flavor}.rules.csv", ds.name));
                let o = write_once(&path, csv.as_bytes())?;
                self.record_output(&mut manifest, &path, csv.as_bytes(), o);
                written.push(path);
            }
        }
        manifest.mark(Stage::SarInduce);
        self.save_manifest(&manifest)?;
        Ok(written)
    }

    pub fn task_groups(&self) -> TaskGroups {
        let mut g = TaskGroups::new();
        for p in &self.plans {
            g.insert(&p.spec.name, &p.spec.group_name());
        }
        g
    }

    /// Report over this run's metrics, plus optional extra records (e.g.
    /// published values for models not run here) and their task groups.
    pub fn report(
        &mut self,
        format: Format,
        extra: Option<(Vec<MetricRecord>, TaskGroups)>,
    ) -> Result<Report, HarnessError> {
        let path = self.out.join("metrics.csv");
        let file = fs::File::open(&path)
            .map_err(|_| HarnessError::Missing(format!("{} not found; run the evaluate stage first", path.display())))?;
        let mut records = read_metrics_csv(file).map_err(|e| HarnessError::Data(format!("{}: {e}", path.display())))?;
        let mut groups = self.task_groups();
        if let Some((more, more_groups)) = extra {
            records.extend(more);
            for (g, tasks) in more_groups.groups() {
                for t in tasks {
                    if groups.group_of(t).is_none() {
                        groups.insert(t, g);
                    }
                }
            }
        }
        let enrichment = self.enrichment_table(&records)?;
        let report_dir = self.out.join("report");
        let report = write_report(&report_dir, &records, &groups, format, enrichment.into_iter().collect())?;
        let sar_dir = self.out.join("sar");
        if let Ok(entries) = fs::read_dir(&sar_dir) {
            let mut files: Vec<PathBuf> = entries.filter_map(|e| e.ok().map(|e| e.path())).collect();
            files.sort();
            for f in files {
                let bytes = fs::read(&f).map_err(|e| HarnessError::io(&f, e))?;
                let dest = report_dir.join(f.file_name().unwrap());
                fs::write(&dest, bytes).map_err(|e| HarnessError::io(&dest, e))?;
            }
        }
        let mut manifest = self.load_manifest();
        manifest.mark(Stage::Report);
        self.save_manifest(&manifest)?;
        Ok(report)
    }

    /// Fold-mean PR-AUC over the mean held-out positive rate, per
    /// classification task and model.
    fn enrichment_table(&self, records: &[MetricRecord]) -> Result<Option<Table>, HarnessError> {
        let path = self.out.join("prevalence.csv");
        let Ok(mut rdr) = csv::Reader::from_path(&path) else {
            return Ok(None);
        };
        let mut rates: BTreeMap<String, Vec<f64>> = BTreeMap::new();
        for rec in rdr.records() {
            let rec = rec.map_err(|e| HarnessError::Data(format!("{}: {e}", path.display())))?;
            if let Some(r) = rec.get(4).and_then(|v| v.parse::<f64>().ok()) {
                rates.entry(rec[0].to_string()).or_default().push(r);
            }
        }
        let mut pr: BTreeMap<(String, String), Vec<f64>> = BTreeMap::new();
        for r in records.iter().filter(|r| r.metric == MetricName::PrAuc) {
            if let (Some(v), true) = (r.value, rates.contains_key(&r.task)) {
                pr.entry((r.task.clone(), r.model.clone())).or_default().push(v);
            }
        }
        if pr.is_empty() {
            return Ok(None);
        }
        let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
        let mut rows = Vec::new();
        for ((task, model), vals) in &pr {
            let base = mean(&rates[task]);
            let m = mean(vals);
            rows.push(vec![
                task.clone(),
                model.clone(),
                fmt3(Some(m)),
                fmt3(Some(base)),
                fmt3((base > 0.0).then(|| m / base)),
            ]);
        }
        let n = rows.len();
        Ok(Some(Table {
            name: "enrichment".into(),
            title: "PR-AUC over the held-out positive rate".into(),
            header: ["Task", "Model", "PR-AUC", "Positive rate", "Enrichment"]
                .iter()
                .map(|s| s.to_string())
                .collect(),
            rows,
            ranks: vec![vec![vec![None]; 5]; n],
        }))
    }

    /// split → featurize → train → evaluate → sar-induce → report.
    pub fn run_all(&mut self, format: Format) -> Result<Report, HarnessError> {
        self.split()?;
        self.featurize()?;
        self.train()?;
        self.evaluate()?;
        self.sar_induce()?;
        self.report(format, None)
    }
}

/// Builds and writes the report tables for a set of metric records.
pub fn write_report(
    dir: &Path,
    records: &[MetricRecord],
    groups: &TaskGroups,
    format: Format,
    extra_tables: Vec<Table>,
) -> Result<Report, HarnessError> {
    let mut report = build_report(records, groups).map_err(|e| HarnessError::Data(e.to_string()))?;
    report.tables.extend(extra_tables);
    emit_tables(&report, dir, format).map_err(|e| HarnessError::Internal(format!("{}: {e}", dir.display())))?;
    Ok(report)
}
