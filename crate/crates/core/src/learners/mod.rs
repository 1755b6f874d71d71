//! Classical learners: random forest, extra trees, gradient boosting,
//! logistic and ridge regression.
//!
//! Models serialize to JSON (`serde_json` with exact float round-trip). A
//! model is a tagged record: family, task kind, feature tag and width, the
//! seed, a sha256 of the config, warnings raised during fitting and the body
//! (tree node arrays, or coefficients plus an optional scaler).

mod ensemble;
pub mod linear;
mod tree;

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::datasplit::TaskKind;
use crate::featurize::{FeatureMatrix, Featurizer};

pub use linear::{fit_logistic, fit_ridge, logistic_gradient, logistic_objective, LogisticFit, Scaler};
pub use tree::{Node, Tree};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LearnerFamily {
    Rf,
    ExtraTrees,
    Gbdt,
    Logistic,
    Ridge,
}

impl LearnerFamily {
    pub const ALL: [LearnerFamily; 5] = [
        LearnerFamily::Rf,
        LearnerFamily::ExtraTrees,
        LearnerFamily::Gbdt,
        LearnerFamily::Logistic,
        LearnerFamily::Ridge,
    ];

    pub fn name(self) -> &'static str {
        match self {
            LearnerFamily::Rf => "rf",
            LearnerFamily::ExtraTrees => "extratrees",
            LearnerFamily::Gbdt => "gbdt",
            LearnerFamily::Logistic => "logistic",
            LearnerFamily::Ridge => "ridge",
        }
    }

    pub fn supports(self, kind: TaskKind) -> bool {
        match self {
            LearnerFamily::Logistic => kind == TaskKind::Classification,
            LearnerFamily::Ridge => kind == TaskKind::Regression,
            _ => true,
        }
    }
}

impl fmt::Display for LearnerFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for LearnerFamily {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "rf" | "randomforest" => Ok(LearnerFamily::Rf),
            "extratrees" | "et" => Ok(LearnerFamily::ExtraTrees),
            "gbdt" | "gb" => Ok(LearnerFamily::Gbdt),
            "logistic" | "lr" => Ok(LearnerFamily::Logistic),
            "ridge" => Ok(LearnerFamily::Ridge),
            other => Err(format!("unknown learner family '{other}'")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Weighting {
    Balanced,
    None,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LearnerConfig {
    pub family: LearnerFamily,
    pub n_trees: usize,
    /// `None` grows forests to purity; gradient boosting falls back to 3.
    pub max_depth: Option<usize>,
    pub min_samples_leaf: usize,
    pub learning_rate: f64,
    pub lambda: f64,
    pub tolerance: f64,
    pub max_iter: usize,
    /// Random forests only; extra trees never bootstrap.
    pub bootstrap: bool,
    pub weighting: Weighting,
    pub seed: u64,
}

impl Default for LearnerConfig {
    fn default() -> Self {
        LearnerConfig::new(LearnerFamily::Rf, 0)
    }
}

impl LearnerConfig {
    pub fn new(family: LearnerFamily, seed: u64) -> Self {
        LearnerConfig {
            family,
            n_trees: 300,
            max_depth: if family == LearnerFamily::Gbdt { Some(3) } else { None },
            min_samples_leaf: 1,
            learning_rate: 0.1,
            lambda: 1.0,
            tolerance: 1e-6,
            max_iter: 1000,
            bootstrap: true,
            weighting: Weighting::Balanced,
            seed,
        }
    }

    pub fn validate(&self, kind: TaskKind) -> Result<(), LearnerError> {
        let bad = |m: String| Err(LearnerError::Config(m));
        if !self.family.supports(kind) {
            return bad(format!("{} cannot fit a {kind} task", self.family));
        }
        if self.n_trees == 0 {
            return bad("n_trees must be at least 1".into());
        }
        if !(self.learning_rate >= 0.0 && self.learning_rate.is_finite()) {
            return bad(format!("learning_rate must be finite and non-negative, got {}", self.learning_rate));
        }
        if !(self.lambda >= 0.0 && self.lambda.is_finite()) {
            return bad(format!("lambda must be finite and non-negative, got {}", self.lambda));
        }
        if self.min_samples_leaf == 0 {
            return bad("min_samples_leaf must be at least 1".into());
        }
        Ok(())
    }

    pub fn hash(&self) -> String {
        let json = serde_json::to_vec(self).expect("config serializes");
        hex::encode(Sha256::digest(&json))
    }
}

#[derive(Debug, thiserror::Error)]
pub enum LearnerError {
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error("invalid learner config: {0}")]
    Config(String),
    #[error("feature mismatch: model expects {expected_tag} x {expected_cols}, got {found_tag} x {found_cols}")]
    FeatureMismatch {
        expected_tag: String,
        expected_cols: usize,
        found_tag: String,
        found_cols: usize,
    },
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("model serialization: {0}")]
    Json(#[from] serde_json::Error),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum LearnerWarning {
    SingleClass { class: f64 },
    Convergence { iterations: usize, gradient_norm: f64 },
}

impl fmt::Display for LearnerWarning {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            LearnerWarning::SingleClass { class } => write!(f, "single-class training labels ({class}); constant scores"),
            LearnerWarning::Convergence {
                iterations,
                gradient_norm,
            } => write!(f, "no convergence after {iterations} iterations (gradient norm {gradient_norm:.3e})"),
        }
    }
}

/// Per-sample weights `n / (2 count(c))`. With one class present the weights
/// are uniform and the flag is set.
pub fn balanced_weights(y: &[f64]) -> (Vec<f64>, bool) {
    let n = y.len() as f64;
    let pos = y.iter().filter(|&&v| v > 0.5).count() as f64;
    let neg = n - pos;
    if pos == 0.0 || neg == 0.0 {
        return (vec![1.0; y.len()], true);
    }
    let (wp, wn) = (n / (2.0 * pos), n / (2.0 * neg));
    (y.iter().map(|&v| if v > 0.5 { wp } else { wn }).collect(), false)
}

/// Fitting weights for a config: balanced for classification when asked,
/// uniform otherwise.
pub fn sample_weights(cfg: &LearnerConfig, kind: TaskKind, y: &[f64]) -> Vec<f64> {
    match (cfg.weighting, kind) {
        (Weighting::Balanced, TaskKind::Classification) => balanced_weights(y).0,
        _ => vec![1.0; y.len()],
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum ModelBody {
    Constant { value: f64 },
    Forest { trees: Vec<Tree> },
    Boosted { init: f64, learning_rate: f64, trees: Vec<Tree> },
    Linear {
        coef: Vec<f64>,
        intercept: f64,
        scaler: Option<Scaler>,
        logistic: bool,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainedModel {
    pub family: LearnerFamily,
    pub kind: TaskKind,
    pub feature_tag: String,
    pub n_features: usize,
    pub seed: u64,
    pub config_hash: String,
    pub lambda: f64,
    pub warnings: Vec<LearnerWarning>,
    pub body: ModelBody,
}

/// Fits any family. Labels for classification are 0/1.
pub fn fit(cfg: &LearnerConfig, kind: TaskKind, x: &FeatureMatrix, y: &[f64], w: &[f64]) -> Result<TrainedModel, LearnerError> {
    cfg.validate(kind)?;
    if x.rows() != y.len() || y.len() != w.len() {
        return Err(LearnerError::Shape(format!(
            "{} rows, {} labels, {} weights",
            x.rows(),
            y.len(),
            w.len()
        )));
    }
    if y.len() < 2 {
        return Err(LearnerError::Shape(format!("need at least 2 rows, got {}", y.len())));
    }
    if w.iter().any(|v| !(v.is_finite() && *v >= 0.0)) || w.iter().all(|&v| v == 0.0) {
        return Err(LearnerError::Shape("weights must be finite, non-negative and not all zero".into()));
    }
    let mut warnings = Vec::new();
    let body = if kind == TaskKind::Classification && single_class(y).is_some() {
        let class = single_class(y).unwrap();
        log::warn!("{}: single-class labels, fitting a constant model", cfg.family);
        warnings.push(LearnerWarning::SingleClass { class });
        ModelBody::Constant { value: class }
    } else {
        match cfg.family {
            LearnerFamily::Rf | LearnerFamily::ExtraTrees => {
                ModelBody::Forest {
                    trees: ensemble::fit_forest(cfg, kind, x, y, w),
                }
            }
            LearnerFamily::Gbdt => {
                let b = ensemble::fit_gbdt(cfg, kind, x, y, w);
                ModelBody::Boosted {
                    init: b.init,
                    learning_rate: cfg.learning_rate,
                    trees: b.trees,
                }
            }
            LearnerFamily::Logistic | LearnerFamily::Ridge => {
                let scaler = (x.tag == Featurizer::Descriptors.tag()).then(|| Scaler::fit(x));
                let scaled;
                let xs = match &scaler {
                    Some(s) => {
                        scaled = s.apply(x);
                        &scaled
                    }
                    None => x,
                };
                if cfg.family == LearnerFamily::Logistic {
                    let f = fit_logistic(xs, y, w, cfg.lambda, cfg.tolerance, cfg.max_iter);
                    if !f.converged {
                        let g = logistic_gradient(xs, y, w, cfg.lambda, &f.coef, f.intercept);
                        let gradient_norm = g.iter().map(|v| v * v).sum::<f64>().sqrt();
                        log::warn!("logistic: iteration cap {} reached (gradient norm {gradient_norm:.3e})", cfg.max_iter);
                        warnings.push(LearnerWarning::Convergence {
                            iterations: f.iterations,
                            gradient_norm,
                        });
                    }
                    ModelBody::Linear {
                        coef: f.coef,
                        intercept: f.intercept,
                        scaler,
                        logistic: true,
                    }
                } else {
                    let (coef, intercept) = fit_ridge(xs, y, w, cfg.lambda, true);
                    ModelBody::Linear {
                        coef,
                        intercept,
                        scaler,
                        logistic: false,
                    }
                }
            }
        }
    };
    Ok(TrainedModel {
        family: cfg.family,
        kind,
        feature_tag: x.tag.clone(),
        n_features: x.cols(),
        seed: cfg.seed,
        config_hash: cfg.hash(),
        lambda: cfg.lambda,
        warnings,
        body,
    })
}

fn single_class(y: &[f64]) -> Option<f64> {
    let first = y[0];
    y.iter().all(|&v| v == first).then_some(first)
}

impl TrainedModel {
    /// Scores in [0, 1] for classification, real values for regression.
    pub fn predict(&self, x: &FeatureMatrix) -> Result<Vec<f64>, LearnerError> {
        if x.tag != self.feature_tag || x.cols() != self.n_features {
            return Err(LearnerError::FeatureMismatch {
                expected_tag: self.feature_tag.clone(),
                expected_cols: self.n_features,
                found_tag: x.tag.clone(),
                found_cols: x.cols(),
            });
        }
        Ok((0..x.rows()).map(|i| self.predict_row(x.row(i))).collect())
    }

    fn predict_row(&self, row: &[f64]) -> f64 {
        match &self.body {
            ModelBody::Constant { value } => *value,
            ModelBody::Forest { trees } => ensemble::forest_predict(trees, row),
            ModelBody::Boosted {
                init,
                learning_rate,
                trees,
            } => {
                let raw = ensemble::boosted_raw(*init, *learning_rate, trees, row);
                match self.kind {
                    TaskKind::Classification => ensemble::sigmoid(raw),
                    TaskKind::Regression => raw,
                }
            }
            ModelBody::Linear {
                coef,
                intercept,
                scaler,
                logistic,
            } => {
                let scaled;
                let r = match scaler {
                    Some(s) => {
                        scaled = s.apply_row(row);
                        &scaled[..]
                    }
                    None => row,
                };
                if *logistic {
                    linear::predict_logistic(coef, *intercept, r)
                } else {
                    linear::predict_linear(coef, *intercept, r)
                }
            }
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("model serializes")
    }

    pub fn from_json(s: &str) -> Result<Self, LearnerError> {
        Ok(serde_json::from_str(s)?)
    }

    pub fn save(&self, path: &Path) -> Result<(), LearnerError> {
        std::fs::write(path, self.to_json())?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self, LearnerError> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }
}
