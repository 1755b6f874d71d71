use regex::Regex;

use super::canon::canonical_smiles;
use super::molecule::Molecule;
use super::smarts::{SmartsError, SmartsQuery};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PatternKind {
    /// SMARTS subset.
    Substructure,
    /// Regular expression over canonical SMILES.
    Text,
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum PatternError {
    #[error(transparent)]
    Smarts(#[from] SmartsError),
    #[error("invalid regular expression: {0}")]
    Regex(String),
}

#[derive(Debug, Clone)]
enum Compiled {
    Smarts(SmartsQuery),
    Text(Regex),
}

/// A compiled rule pattern. Compilation errors surface here, never at match time.
#[derive(Debug, Clone)]
pub struct Pattern {
    source: String,
    kind: PatternKind,
    compiled: Compiled,
}

impl Pattern {
    pub fn compile(kind: PatternKind, source: &str) -> Result<Pattern, PatternError> {
        let compiled = match kind {
            PatternKind::Substructure => Compiled::Smarts(SmartsQuery::compile(source)?),
            PatternKind::Text => Compiled::Text(Regex::new(source).map_err(|e| PatternError::Regex(e.to_string()))?),
        };
        Ok(Pattern {
            source: source.to_string(),
            kind,
            compiled,
        })
    }

    pub fn smarts(source: &str) -> Result<Pattern, PatternError> {
        Pattern::compile(PatternKind::Substructure, source)
    }

    pub fn text(source: &str) -> Result<Pattern, PatternError> {
        Pattern::compile(PatternKind::Text, source)
    }

    pub fn source(&self) -> &str {
        &self.source
    }

    pub fn kind(&self) -> PatternKind {
        self.kind
    }

    /// Match count against a molecule whose canonical SMILES is already known.
    pub fn count(&self, prepared: &PreparedMolecule) -> usize {
        match &self.compiled {
            Compiled::Smarts(q) => q.count_matches(&prepared.molecule),
            Compiled::Text(re) => re.find_iter(&prepared.canonical).count(),
        }
    }

    pub fn matches(&self, prepared: &PreparedMolecule) -> bool {
        match &self.compiled {
            Compiled::Smarts(q) => q.has_match(&prepared.molecule),
            Compiled::Text(re) => re.is_match(&prepared.canonical),
        }
    }
}

/// A molecule paired with its canonical SMILES, so text patterns need not
/// recompute it per rule.
#[derive(Debug, Clone)]
pub struct PreparedMolecule {
    pub molecule: Molecule,
    pub canonical: String,
}

impl PreparedMolecule {
    pub fn new(molecule: Molecule) -> Self {
        let canonical = canonical_smiles(&molecule);
        PreparedMolecule { molecule, canonical }
    }
}

/// Substructure: distinct matched atom sets. Text: non-overlapping regex
/// matches in the canonical SMILES.
pub fn match_pattern(m: &Molecule, p: &Pattern) -> usize {
    match &p.compiled {
        Compiled::Smarts(q) => q.count_matches(m),
        Compiled::Text(re) => re.find_iter(&canonical_smiles(m)).count(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chem::parse_smiles;

    #[test]
    fn text_patterns_see_canonical_form() {
        let p = Pattern::text(r"\[N\+\]\(=O\)\[O-\]").unwrap();
        // written in a non-canonical order on input
        let m = parse_smiles("[O-][N+](=O)c1ccccc1").unwrap();
        let canon = canonical_smiles(&m);
        assert_eq!(match_pattern(&m, &p), usize::from(canon.contains("[N+](=O)[O-]")));
        let cl = Pattern::text("Cl").unwrap();
        assert_eq!(match_pattern(&parse_smiles("ClCC(Cl)Cl").unwrap(), &cl), 3);
    }

    #[test]
    fn prepared_and_direct_agree() {
        let p = Pattern::smarts("c1ccccc1").unwrap();
        let m = parse_smiles("c1ccccc1Cc1ccccc1").unwrap();
        let prep = PreparedMolecule::new(m.clone());
        assert_eq!(p.count(&prep), match_pattern(&m, &p));
        assert!(p.matches(&prep));
    }

    #[test]
    fn bad_patterns_fail_at_compile() {
        assert!(Pattern::smarts("[N+](=O").is_err());
        assert!(Pattern::text("(unclosed").is_err());
    }
}
