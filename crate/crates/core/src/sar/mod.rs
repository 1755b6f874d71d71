//! Rule-based SAR baselines.
//!
//! A rule fires on a molecule when its predicate holds: a SMARTS or regex
//! pattern matches, or a descriptor passes a threshold. Classification scores
//! are `logistic(intercept + Σ fired weights)`; regression scores are the
//! same sum without the link.
//!
//! Induced rules are weighted by the Laplace-smoothed (α = 1) log odds ratio
//! of the feature × label table. Regression induction uses the difference in
//! mean target value and takes it directly as the additive weight.

mod export;
mod library;
mod pack;

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::chem::{Pattern, PreparedMolecule};
use crate::datasplit::TaskKind;
use crate::featurize::{descriptor_panel, DescriptorVector, DESCRIPTOR_NAMES};

pub use export::{export_rule_table, rule_table_csv, RuleTableRow};
pub use library::{candidate_library, Candidate, Flavor, DESCRIPTOR_CANDIDATES, MOTIFS};
pub use pack::{load_rule_pack, parse_rule_pack, PackError, PackProblem, RulePack};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Comparator {
    #[serde(rename = ">")]
    Gt,
    #[serde(rename = ">=")]
    Ge,
    #[serde(rename = "<")]
    Lt,
    #[serde(rename = "<=")]
    Le,
}

impl Comparator {
    pub fn symbol(self) -> &'static str {
        match self {
            Comparator::Gt => ">",
            Comparator::Ge => ">=",
            Comparator::Lt => "<",
            Comparator::Le => "<=",
        }
    }

    pub fn holds(self, value: f64, threshold: f64) -> bool {
        match self {
            Comparator::Gt => value > threshold,
            Comparator::Ge => value >= threshold,
            Comparator::Lt => value < threshold,
            Comparator::Le => value <= threshold,
        }
    }
}

impl FromStr for Comparator {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            ">" => Ok(Comparator::Gt),
            ">=" => Ok(Comparator::Ge),
            "<" => Ok(Comparator::Lt),
            "<=" => Ok(Comparator::Le),
            other => Err(format!("unknown comparator '{other}'")),
        }
    }
}

/// `slot comparator threshold` over the descriptor panel.
#[derive(Debug, Clone, PartialEq)]
pub struct Condition {
    pub slot: usize,
    pub cmp: Comparator,
    pub threshold: f64,
}

impl Condition {
    pub fn new(slot: &str, cmp: Comparator, threshold: f64) -> Result<Self, String> {
        let slot = DESCRIPTOR_NAMES
            .iter()
            .position(|n| *n == slot)
            .ok_or_else(|| format!("unknown descriptor '{slot}'"))?;
        Ok(Condition { slot, cmp, threshold })
    }

    /// Parses `logp > 3`, `tpsa<=75` and similar.
    pub fn parse(text: &str) -> Result<Self, String> {
        let t = text.trim();
        let at = t
            .find(['<', '>'])
            .ok_or_else(|| format!("condition '{t}' has no comparator"))?;
        let (slot, rest) = t.split_at(at);
        let op_len = if rest[1..].starts_with('=') { 2 } else { 1 };
        let cmp: Comparator = rest[..op_len].parse()?;
        let value = rest[op_len..].trim();
        let threshold: f64 = value
            .parse()
            .map_err(|_| format!("condition '{t}': threshold '{value}' is not a number"))?;
        Condition::new(slot.trim(), cmp, threshold)
    }

    pub fn holds(&self, desc: &DescriptorVector) -> bool {
        self.cmp.holds(desc.values[self.slot], self.threshold)
    }
}

impl fmt::Display for Condition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} {} {}", DESCRIPTOR_NAMES[self.slot], self.cmp.symbol(), self.threshold)
    }
}

#[derive(Debug, Clone)]
pub enum Predicate {
    Pattern(Pattern),
    Descriptor(Condition),
}

impl Predicate {
    pub fn source(&self) -> String {
        match self {
            Predicate::Pattern(p) => p.source().to_string(),
            Predicate::Descriptor(c) => c.to_string(),
        }
    }

    pub fn kind_name(&self) -> &'static str {
        match self {
            Predicate::Pattern(p) => match p.kind() {
                crate::chem::PatternKind::Substructure => "smarts",
                crate::chem::PatternKind::Text => "text",
            },
            Predicate::Descriptor(_) => "descriptor",
        }
    }

    pub fn fires(&self, m: &SarMolecule) -> bool {
        match self {
            Predicate::Pattern(p) => p.matches(&m.prepared),
            Predicate::Descriptor(c) => c.holds(&m.descriptors),
        }
    }
}

impl PartialEq for Predicate {
    fn eq(&self, other: &Self) -> bool {
        self.kind_name() == other.kind_name() && self.source() == other.source()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    Activating,
    Deactivating,
}

impl Direction {
    pub fn as_str(self) -> &'static str {
        match self {
            Direction::Activating => "activating",
            Direction::Deactivating => "deactivating",
        }
    }

    pub fn of(value: f64) -> Direction {
        if value >= 0.0 {
            Direction::Activating
        } else {
            Direction::Deactivating
        }
    }

    fn agrees(self, weight: f64) -> bool {
        match self {
            Direction::Activating => weight > 0.0,
            Direction::Deactivating => weight < 0.0,
        }
    }
}

impl FromStr for Direction {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "activating" | "+" | "up" => Ok(Direction::Activating),
            "deactivating" | "-" | "down" => Ok(Direction::Deactivating),
            other => Err(format!("unknown direction '{other}'")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Origin {
    Prior,
    Induced,
}

/// Train-fold statistics of an induced rule.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RuleStats {
    /// Active-rate difference (classification) or mean difference (regression)
    /// between matching and non-matching molecules.
    pub delta: f64,
    pub support: f64,
    pub matched: usize,
    pub total: usize,
}

#[derive(Debug, Clone)]
pub struct SarRule {
    pub id: String,
    pub predicate: Predicate,
    pub direction: Direction,
    pub weight: f64,
    pub origin: Origin,
    pub category: String,
    pub stats: Option<RuleStats>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    PriorsOnly,
    WithKnowledge,
}

impl Mode {
    pub fn as_str(self) -> &'static str {
        match self {
            Mode::PriorsOnly => "priors_only",
            Mode::WithKnowledge => "with_knowledge",
        }
    }
}

#[derive(Debug, Clone)]
pub struct RuleSet {
    pub endpoint: String,
    pub kind: TaskKind,
    pub mode: Mode,
    pub rules: Vec<SarRule>,
    pub intercept: f64,
}

/// A molecule with everything a predicate may look at.
#[derive(Debug, Clone)]
pub struct SarMolecule {
    pub prepared: PreparedMolecule,
    pub descriptors: DescriptorVector,
}

impl SarMolecule {
    pub fn new(prepared: PreparedMolecule) -> Self {
        let descriptors = descriptor_panel(&prepared.molecule);
        SarMolecule { prepared, descriptors }
    }
}

fn logistic(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// log(p / (1 - p)) with p clamped away from 0 and 1.
pub fn logit(p: f64) -> f64 {
    let p = p.clamp(1e-6, 1.0 - 1e-6);
    (p / (1.0 - p)).ln()
}

impl RuleSet {
    pub fn raw_score(&self, m: &SarMolecule) -> f64 {
        self.intercept
            + self
                .rules
                .iter()
                .filter(|r| r.predicate.fires(m))
                .map(|r| r.weight)
                .sum::<f64>()
    }

    pub fn score(&self, m: &SarMolecule) -> f64 {
        let z = self.raw_score(m);
        match self.kind {
            TaskKind::Classification => logistic(z),
            TaskKind::Regression => z,
        }
    }

    pub fn score_all(&self, mols: &[SarMolecule]) -> Vec<f64> {
        mols.par_iter().map(|m| self.score(m)).collect()
    }

    /// Same rules with an intercept fitted to a train fold: the logit of the
    /// active rate, or the mean target for regression.
    pub fn with_train_intercept(&self, train_labels: &[f64]) -> RuleSet {
        let mut rs = self.clone();
        rs.intercept = train_intercept(self.kind, train_labels);
        rs
    }

    /// The priors plus induced rules. Induced rules whose predicate duplicates
    /// a prior, or whose id collides with one, are left out so every prior
    /// keeps its id and weight.
    pub fn with_knowledge(&self, induced: &[SarRule]) -> RuleSet {
        let mut rs = self.clone();
        rs.mode = Mode::WithKnowledge;
        for r in induced {
            let dup = self.rules.iter().any(|p| p.id == r.id || p.predicate == r.predicate);
            if !dup {
                rs.rules.push(r.clone());
            }
        }
        rs
    }
}

pub fn train_intercept(kind: TaskKind, labels: &[f64]) -> f64 {
    let n = labels.len().max(1) as f64;
    match kind {
        TaskKind::Classification => logit(labels.iter().filter(|&&v| v > 0.5).count() as f64 / n),
        TaskKind::Regression => labels.iter().sum::<f64>() / n,
    }
}

pub fn score_molecule(rs: &RuleSet, m: &SarMolecule) -> f64 {
    rs.score(m)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct InduceConfig {
    pub min_support: f64,
    pub max_support: f64,
    /// Classification: minimum |Δ active rate|. Regression: minimum |Δ mean|
    /// in units of the train-fold target standard deviation.
    pub min_abs_delta: f64,
    /// Keep at most this many rules after ordering.
    pub max_rules: Option<usize>,
}

impl Default for InduceConfig {
    fn default() -> Self {
        InduceConfig {
            min_support: 0.02,
            max_support: 0.95,
            min_abs_delta: 0.1,
            max_rules: Some(25),
        }
    }
}

#[derive(Debug, Clone)]
pub struct Induction {
    pub rules: Vec<SarRule>,
    /// Set when the classification fold holds a single class.
    pub degenerate: bool,
    /// Candidates that passed the bounds but whose smoothed weight disagreed
    /// in sign with Δ.
    pub sign_conflicts: usize,
}

/// Per-candidate firing vectors over a molecule list.
pub fn hit_matrix(library: &[Candidate], mols: &[SarMolecule]) -> Vec<Vec<bool>> {
    library
        .par_iter()
        .map(|c| mols.iter().map(|m| c.predicate.fires(m)).collect())
        .collect()
}

/// Induces rules from a train fold.
pub fn induce_rules(
    train: &[SarMolecule],
    labels: &[f64],
    kind: TaskKind,
    library: &[Candidate],
    cfg: &InduceConfig,
) -> Induction {
    let hits = hit_matrix(library, train);
    let rows: Vec<usize> = (0..train.len()).collect();
    induce_from_hits(&hits, &rows, labels, kind, library, cfg)
}

/// Induction over precomputed hits. `rows` selects the train fold from the
/// columns of `hits`; `labels` is aligned with `rows`.
pub fn induce_from_hits(
    hits: &[Vec<bool>],
    rows: &[usize],
    labels: &[f64],
    kind: TaskKind,
    library: &[Candidate],
    cfg: &InduceConfig,
) -> Induction {
    assert_eq!(rows.len(), labels.len());
    assert_eq!(hits.len(), library.len());
    let n = rows.len();
    let positives = labels.iter().filter(|&&v| v > 0.5).count();
    if n == 0 || (kind == TaskKind::Classification && (positives == 0 || positives == n)) {
        return Induction {
            rules: Vec::new(),
            degenerate: true,
            sign_conflicts: 0,
        };
    }
    let spread = match kind {
        TaskKind::Classification => 1.0,
        TaskKind::Regression => {
            let mean = labels.iter().sum::<f64>() / n as f64;
            (labels.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n as f64).sqrt()
        }
    };
    let found: Vec<(Option<SarRule>, bool)> = library
        .par_iter()
        .zip(hits.par_iter())
        .map(|(cand, col)| {
            // two counters per side
            let (mut n1, mut s1, mut s0) = (0usize, 0.0, 0.0);
            let (mut a1, mut a0) = (0usize, 0usize);
            for (k, &r) in rows.iter().enumerate() {
                let y = labels[k];
                if col[r] {
                    n1 += 1;
                    s1 += y;
                    a1 += (y > 0.5) as usize;
                } else {
                    s0 += y;
                    a0 += (y > 0.5) as usize;
                }
            }
            let n0 = n - n1;
            let support = n1 as f64 / n as f64;
            if n1 == 0 || n0 == 0 || support < cfg.min_support || support > cfg.max_support {
                return (None, false);
            }
            let (delta, weight) = match kind {
                TaskKind::Classification => {
                    let delta = a1 as f64 / n1 as f64 - a0 as f64 / n0 as f64;
                    let p1 = (a1 as f64 + 1.0) / (n1 as f64 + 2.0);
                    let p0 = (a0 as f64 + 1.0) / (n0 as f64 + 2.0);
                    (delta, ((p1 * (1.0 - p0)) / (p0 * (1.0 - p1))).ln())
                }
                TaskKind::Regression => {
                    let delta = s1 / n1 as f64 - s0 / n0 as f64;
                    (delta, delta)
                }
            };
            if delta.abs() < cfg.min_abs_delta * spread || delta == 0.0 {
                return (None, false);
            }
            let direction = Direction::of(delta);
            if !direction.agrees(weight) {
                return (None, true);
            }
            let rule = SarRule {
                id: cand.id.clone(),
                predicate: cand.predicate.clone(),
                direction,
                weight,
                origin: Origin::Induced,
                category: cand.category.clone(),
                stats: Some(RuleStats {
                    delta,
                    support,
                    matched: n1,
                    total: n,
                }),
            };
            (Some(rule), false)
        })
        .collect();
    let sign_conflicts = found.iter().filter(|(_, c)| *c).count();
    let mut rules: Vec<SarRule> = found.into_iter().filter_map(|(r, _)| r).collect();
    rules.sort_by(|a, b| {
        let (da, db) = (a.stats.unwrap().delta.abs(), b.stats.unwrap().delta.abs());
        db.total_cmp(&da).then_with(|| a.id.cmp(&b.id))
    });
    if let Some(cap) = cfg.max_rules {
        rules.truncate(cap);
    }
    Induction {
        rules,
        degenerate: false,
        sign_conflicts,
    }
}
