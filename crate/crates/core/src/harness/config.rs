use std::fmt;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::{check_name, HarnessError};
use crate::datasplit::TaskKind;
use crate::featurize::Featurizer;
use crate::learners::Weighting;
use crate::sar::{Comparator, Flavor, InduceConfig, Mode};

/// Concentration units accepted for potency values.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Unit {
    #[serde(rename = "M")]
    Molar,
    #[serde(rename = "mM")]
    Milli,
    #[serde(rename = "uM", alias = "µM", alias = "μM", alias = "um")]
    Micro,
    #[serde(rename = "nM", alias = "nm")]
    Nano,
    #[serde(rename = "pM")]
    Pico,
}

impl Unit {
    /// Size of one unit in molar.
    pub fn molar(self) -> f64 {
        match self {
            Unit::Molar => 1.0,
            Unit::Milli => 1e-3,
            Unit::Micro => 1e-6,
            Unit::Nano => 1e-9,
            Unit::Pico => 1e-12,
        }
    }

    pub fn parse(s: &str) -> Option<Unit> {
        match s.trim() {
            "M" => Some(Unit::Molar),
            "mM" => Some(Unit::Milli),
            "uM" | "µM" | "μM" | "um" => Some(Unit::Micro),
            "nM" | "nm" => Some(Unit::Nano),
            "pM" => Some(Unit::Pico),
            _ => None,
        }
    }

    /// `value` expressed in `self` converted to `to`.
    pub fn convert(self, value: f64, to: Unit) -> f64 {
        value * (self.molar() / to.molar())
    }
}

impl fmt::Display for Unit {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Unit::Molar => "M",
            Unit::Milli => "mM",
            Unit::Micro => "uM",
            Unit::Nano => "nM",
            Unit::Pico => "pM",
        })
    }
}

/// `label = 1` when `value comparator threshold` holds. Potency endpoints use
/// `<=` so lower concentrations are active.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Binarization {
    pub column: String,
    pub comparator: Comparator,
    pub threshold: f64,
    /// Units of the threshold, and of values without a unit column.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub units: Option<Unit>,
    /// Column holding a per-row unit.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub unit_column: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TaskSpec {
    pub name: String,
    pub file: PathBuf,
    pub kind: TaskKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub group: Option<String>,
    #[serde(default = "default_smiles_column")]
    pub smiles_column: String,
    /// Target column when no binarization rule applies. Defaults to `label`
    /// for classification and `value` for regression.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub target_column: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub binarize: Option<Binarization>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub sar_packs: Vec<PathBuf>,
}

fn default_smiles_column() -> String {
    "smiles".into()
}

impl TaskSpec {
    pub fn target_column(&self) -> &str {
        if let Some(b) = &self.binarize {
            return &b.column;
        }
        match (&self.target_column, self.kind) {
            (Some(c), _) => c,
            (None, TaskKind::Classification) => "label",
            (None, TaskKind::Regression) => "value",
        }
    }

    pub fn group_name(&self) -> String {
        self.group.clone().unwrap_or_else(|| match self.kind {
            TaskKind::Classification => "Classification".into(),
            TaskKind::Regression => "Regression".into(),
        })
    }
}

/// One entry of the model grid. Learner entries expand over their
/// featurizers into ids `{id}_{featurizer}`; `sar` entries use the task's
/// pack of the chosen flavor.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelSpec {
    /// rf, extratrees, gbdt, logistic, ridge, linear (logistic or ridge by
    /// task kind) or sar.
    pub family: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub id: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub featurizers: Option<Vec<Featurizer>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mode: Option<Mode>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub flavor: Option<Flavor>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_trees: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_depth: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub min_samples_leaf: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub learning_rate: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lambda: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_iter: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bootstrap: Option<bool>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub weighting: Option<Weighting>,
}

impl ModelSpec {
    pub fn learner(family: &str, featurizers: &[Featurizer]) -> Self {
        ModelSpec {
            family: family.into(),
            featurizers: Some(featurizers.to_vec()),
            ..Default::default()
        }
    }

    pub fn sar(flavor: Flavor, mode: Mode) -> Self {
        ModelSpec {
            family: "sar".into(),
            mode: Some(mode),
            flavor: Some(flavor),
            ..Default::default()
        }
    }

    pub fn is_sar(&self) -> bool {
        self.family.eq_ignore_ascii_case("sar")
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default = "default_name")]
    pub name: String,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_out")]
    pub out: PathBuf,
    /// Worker cap; 0 uses every core.
    #[serde(default)]
    pub jobs: usize,
    #[serde(default = "default_folds")]
    pub folds: usize,
    #[serde(default = "default_nbits")]
    pub nbits: usize,
    #[serde(default = "default_components")]
    pub max_components: usize,
    /// Keep only the largest fragment of multi-component SMILES.
    #[serde(default = "default_true")]
    pub largest_fragment: bool,
    /// Operating point for per-class precision and recall.
    #[serde(default = "default_threshold")]
    pub threshold: f64,
    #[serde(default)]
    pub save_models: bool,
    pub tasks: Vec<TaskSpec>,
    #[serde(default = "default_featurizers")]
    pub featurizers: Vec<Featurizer>,
    pub models: Vec<ModelSpec>,
    #[serde(default)]
    pub induce: InduceConfig,
    /// Directory that relative paths resolve against; the config file's
    /// directory when loaded from disk.
    #[serde(skip)]
    pub base_dir: PathBuf,
}

fn default_name() -> String {
    "run".into()
}
fn default_out() -> PathBuf {
    PathBuf::from("run")
}
fn default_folds() -> usize {
    5
}
fn default_nbits() -> usize {
    crate::featurize::DEFAULT_NBITS
}
fn default_components() -> usize {
    64
}
fn default_true() -> bool {
    true
}
fn default_threshold() -> f64 {
    0.5
}
fn default_featurizers() -> Vec<Featurizer> {
    Featurizer::ALL.to_vec()
}

impl RunConfig {
    pub fn new(tasks: Vec<TaskSpec>, models: Vec<ModelSpec>) -> Self {
        RunConfig {
            name: default_name(),
            seed: 0,
            out: default_out(),
            jobs: 0,
            folds: default_folds(),
            nbits: default_nbits(),
            max_components: default_components(),
            largest_fragment: true,
            threshold: default_threshold(),
            save_models: false,
            tasks,
            featurizers: default_featurizers(),
            models,
            induce: InduceConfig::default(),
            base_dir: PathBuf::from("."),
        }
    }

    pub fn from_json(text: &str, base_dir: &Path) -> Result<Self, HarnessError> {
        let mut cfg: RunConfig = serde_json::from_str(text).map_err(|e| HarnessError::Config(e.to_string()))?;
        cfg.base_dir = base_dir.to_path_buf();
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, HarnessError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| HarnessError::Config(format!("cannot read {}: {e}", path.display())))?;
        let base = path.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
        RunConfig::from_json(&text, base).map_err(|e| match e {
            HarnessError::Config(m) => HarnessError::Config(format!("{}: {m}", path.display())),
            other => other,
        })
    }

    pub fn resolve(&self, p: &Path) -> PathBuf {
        if p.is_absolute() {
            p.to_path_buf()
        } else {
            self.base_dir.join(p)
        }
    }

    pub fn out_dir(&self) -> PathBuf {
        self.resolve(&self.out)
    }

    /// Hash of everything that can change results; output location and
    /// worker count are excluded.
    pub fn hash(&self) -> String {
        let mut c = self.clone();
        c.out = PathBuf::new();
        c.jobs = 0;
        super::sha256_hex(&serde_json::to_vec(&c).expect("config serializes"))
    }

    /// Checks that do not touch the file system.
    pub fn validate(&self) -> Result<(), HarnessError> {
        let bad = |m: String| Err(HarnessError::Config(m));
        if self.tasks.is_empty() {
            return bad("no tasks configured".into());
        }
        if self.models.is_empty() {
            return bad("no models configured".into());
        }
        if self.folds < 2 {
            return bad(format!("folds must be at least 2, got {}", self.folds));
        }
        if self.nbits == 0 {
            return bad("nbits must be positive".into());
        }
        if !(self.threshold > 0.0 && self.threshold < 1.0) {
            return bad(format!("threshold must lie in (0, 1), got {}", self.threshold));
        }
        let mut names = std::collections::BTreeSet::new();
        for t in &self.tasks {
            check_name("task name", &t.name)?;
            if !names.insert(t.name.as_str()) {
                return bad(format!("task '{}' listed twice", t.name));
            }
            if let Some(b) = &t.binarize {
                if t.kind != TaskKind::Classification {
                    return bad(format!("task '{}': binarization needs a classification task", t.name));
                }
                if !b.threshold.is_finite() {
                    return bad(format!("task '{}': binarization threshold must be finite", t.name));
                }
                if b.unit_column.is_some() && b.units.is_none() {
                    return bad(format!(
                        "task '{}': a unit column needs 'units' for the threshold",
                        t.name
                    ));
                }
                if t.target_column.is_some() {
                    return bad(format!(
                        "task '{}': set the value column in 'binarize.column', not 'target_column'",
                        t.name
                    ));
                }
            }
        }
        Ok(())
    }
}
