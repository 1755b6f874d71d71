//! Rule pack files.
//!
//! ```text
//! pack      := line*
//! line      := comment | directive | rule | blank
//! comment   := '#' any*
//! directive := '@endpoint' name | '@task' ('classification' | 'regression')
//!            | '@flavor' ('smarts' | 'text')
//! rule      := id '|' kind '|' predicate '|' direction '|' weight '|' category
//! kind      := 'smarts' | 'text' | 'descriptor'
//! direction := 'activating' | 'deactivating'
//! ```
//!
//! A descriptor predicate is `slot comparator number`, for example
//! `logp > 3`. The predicate field may itself contain `|` (regex
//! alternation): the first two and the last three separators delimit the
//! other fields. The weight sign must agree with the direction. Loading is
//! all-or-nothing: every bad line is reported at once.

use std::collections::{BTreeMap, HashSet};
use std::fmt;
use std::path::Path;

use super::{Condition, Direction, Flavor, Mode, Origin, Predicate, RuleSet, SarRule};
use crate::chem::{Pattern, PatternKind};
use crate::datasplit::TaskKind;

#[derive(Debug, Clone, PartialEq)]
pub struct PackProblem {
    pub line: usize,
    pub rule_id: Option<String>,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PackError {
    pub source: String,
    pub problems: Vec<PackProblem>,
}

impl fmt::Display for PackError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "rule pack {}: {} problem(s)", self.source, self.problems.len())?;
        for p in &self.problems {
            match &p.rule_id {
                Some(id) => write!(f, "\n  line {} (rule {id}): {}", p.line, p.message)?,
                None => write!(f, "\n  line {}: {}", p.line, p.message)?,
            }
        }
        Ok(())
    }
}

impl std::error::Error for PackError {}

/// A loaded prior pack.
#[derive(Debug, Clone)]
pub struct RulePack {
    pub rules: RuleSet,
    pub flavor: Flavor,
    /// Rule count per category.
    pub categories: BTreeMap<String, usize>,
}

pub fn load_rule_pack(path: &Path) -> Result<RulePack, PackError> {
    let text = std::fs::read_to_string(path).map_err(|e| PackError {
        source: path.display().to_string(),
        problems: vec![PackProblem {
            line: 0,
            rule_id: None,
            message: format!("cannot read: {e}"),
        }],
    })?;
    parse_rule_pack(&text, &path.display().to_string())
}

/// Splits a rule line into its six fields. The predicate is everything
/// between the second separator and the third from the end, so regex
/// alternation survives.
fn split_rule(line: &str) -> Option<[&str; 6]> {
    let seps: Vec<usize> = line.match_indices('|').map(|(i, _)| i).collect();
    if seps.len() < 5 {
        return None;
    }
    let k = seps.len();
    let cut = [0, seps[0], seps[1], seps[k - 3], seps[k - 2], seps[k - 1]];
    let mut out = [""; 6];
    for f in 0..6 {
        let start = if f == 0 { 0 } else { cut[f] + 1 };
        let end = if f == 5 { line.len() } else { cut[f + 1] };
        out[f] = line[start..end].trim();
    }
    Some(out)
}

pub fn parse_rule_pack(text: &str, source: &str) -> Result<RulePack, PackError> {
    let mut problems = Vec::new();
    let mut endpoint = None;
    let mut kind = TaskKind::Classification;
    let mut flavor = Flavor::Smarts;
    let mut rules = Vec::new();
    let mut seen = HashSet::new();
    for (k, raw) in text.lines().enumerate() {
        let line = k + 1;
        let t = raw.trim();
        if t.is_empty() || t.starts_with('#') {
            continue;
        }
        let mut problem = |rule_id: Option<&str>, message: String| {
            problems.push(PackProblem {
                line,
                rule_id: rule_id.map(str::to_string),
                message,
            })
        };
        if let Some(d) = t.strip_prefix('@') {
            let (key, value) = d.split_once(char::is_whitespace).unwrap_or((d, ""));
            let value = value.trim();
            match key {
                "endpoint" if !value.is_empty() => endpoint = Some(value.to_string()),
                "task" => match value {
                    "classification" => kind = TaskKind::Classification,
                    "regression" => kind = TaskKind::Regression,
                    _ => problem(None, format!("unknown task kind '{value}'")),
                },
                "flavor" => match value {
                    "smarts" => flavor = Flavor::Smarts,
                    "text" => flavor = Flavor::Text,
                    _ => problem(None, format!("unknown flavor '{value}'")),
                },
                _ => problem(None, format!("bad directive '@{d}'")),
            }
            continue;
        }
        let Some(fields) = split_rule(t) else {
            problem(None, format!("expected 6 '|'-separated fields, found {}", t.split('|').count()));
            continue;
        };
        let id = fields[0];
        if id.is_empty() {
            problem(None, "empty rule id".into());
            continue;
        }
        if !seen.insert(id.to_string()) {
            problem(Some(id), "duplicate rule id".into());
        }
        let predicate = match fields[1] {
            "smarts" => Pattern::compile(PatternKind::Substructure, fields[2])
                .map(Predicate::Pattern)
                .map_err(|e| e.to_string()),
            "text" => Pattern::compile(PatternKind::Text, fields[2])
                .map(Predicate::Pattern)
                .map_err(|e| e.to_string()),
            "descriptor" => Condition::parse(fields[2]).map(Predicate::Descriptor),
            other => Err(format!("unknown rule kind '{other}'")),
        };
        let direction = fields[3].parse::<Direction>();
        let weight = fields[4]
            .parse::<f64>()
            .map_err(|_| format!("weight '{}' is not a number", fields[4]))
            .and_then(|w| if w.is_finite() { Ok(w) } else { Err("weight must be finite".into()) });
        let category = fields[5];
        match (predicate, direction, weight) {
            (Ok(predicate), Ok(direction), Ok(weight)) => {
                if !direction.agrees(weight) {
                    problem(Some(id), format!("weight {weight} disagrees with direction {}", direction.as_str()));
                } else if category.is_empty() {
                    problem(Some(id), "empty category".into());
                } else {
                    rules.push(SarRule {
                        id: id.to_string(),
                        predicate,
                        direction,
                        weight,
                        origin: Origin::Prior,
                        category: category.to_string(),
                        stats: None,
                    });
                }
            }
            (p, d, w) => {
                for e in [p.err(), d.err(), w.err()].into_iter().flatten() {
                    problem(Some(id), e);
                }
            }
        }
    }
    if !problems.is_empty() {
        return Err(PackError {
            source: source.to_string(),
            problems,
        });
    }
    let mut categories = BTreeMap::new();
    for r in &rules {
        *categories.entry(r.category.clone()).or_insert(0) += 1;
    }
    Ok(RulePack {
        rules: RuleSet {
            endpoint: endpoint.unwrap_or_default(),
            kind,
            mode: Mode::PriorsOnly,
            rules,
            intercept: 0.0,
        },
        flavor,
        categories,
    })
}
