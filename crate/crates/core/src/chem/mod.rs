//! Molecular graphs: SMILES parsing, canonical SMILES, ring perception and
//! substructure / text pattern matching.

mod canon;
pub mod element;
mod molecule;
mod pattern;
mod rings;
mod smarts;
mod smiles;

pub use canon::{canonical_ranks, canonical_smiles, write_smiles};
pub use molecule::{Atom, Bond, BondKind, Molecule};
pub use pattern::{match_pattern, Pattern, PatternError, PatternKind, PreparedMolecule};
pub use smarts::{SmartsError, SmartsQuery};
pub use smiles::{parse_smiles, ParseError, ParseErrorKind};

/// Parses and optionally keeps only the largest fragment.
pub fn parse_standardized(text: &str, largest_fragment: bool) -> Result<Molecule, ParseError> {
    let m = parse_smiles(text)?;
    Ok(if largest_fragment { m.largest_fragment() } else { m })
}
