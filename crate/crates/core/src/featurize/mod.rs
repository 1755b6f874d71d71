//! Molecular representations: ECFP4/ECFP6, 166 structural keys, a 16-slot
//! descriptor panel, and Tanimoto similarity.

mod descriptors;
mod ecfp;
mod keys;
mod matrix;

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::chem::Molecule;

pub use descriptors::{descriptor_panel, crippen_contributions, tpsa, DescriptorVector, DESCRIPTOR_NAMES};
pub use ecfp::{ecfp, ecfp_identifiers};
pub use keys::{structural_keys, UNSUPPORTED_KEYS};
pub use matrix::{FeatureMatrix, MatrixError};

pub const DEFAULT_NBITS: usize = 2048;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum FingerprintTag {
    #[serde(rename = "ecfp-r2")]
    EcfpR2,
    #[serde(rename = "ecfp-r3")]
    EcfpR3,
    #[serde(rename = "keys-166")]
    Keys166,
}

impl FingerprintTag {
    pub fn as_str(self) -> &'static str {
        match self {
            FingerprintTag::EcfpR2 => "ecfp-r2",
            FingerprintTag::EcfpR3 => "ecfp-r3",
            FingerprintTag::Keys166 => "keys-166",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct BitFingerprint {
    len: usize,
    blocks: Vec<u64>,
    tag: FingerprintTag,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("fingerprint mismatch: {left} ({left_len} bits) vs {right} ({right_len} bits)")]
pub struct MismatchError {
    pub left: &'static str,
    pub left_len: usize,
    pub right: &'static str,
    pub right_len: usize,
}

impl BitFingerprint {
    pub fn new(len: usize, tag: FingerprintTag) -> Self {
        BitFingerprint {
            len,
            blocks: vec![0; len.div_ceil(64)],
            tag,
        }
    }

    pub fn from_indices(len: usize, tag: FingerprintTag, indices: impl IntoIterator<Item = usize>) -> Self {
        let mut fp = BitFingerprint::new(len, tag);
        for i in indices {
            fp.set(i);
        }
        fp
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn tag(&self) -> FingerprintTag {
        self.tag
    }

    pub fn set(&mut self, i: usize) {
        assert!(i < self.len, "bit {i} out of range for {} bits", self.len);
        self.blocks[i / 64] |= 1 << (i % 64);
    }

    pub fn get(&self, i: usize) -> bool {
        i < self.len && self.blocks[i / 64] >> (i % 64) & 1 == 1
    }

    pub fn count_ones(&self) -> usize {
        self.blocks.iter().map(|b| b.count_ones() as usize).sum()
    }

    pub fn ones(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.len).filter(move |&i| self.get(i))
    }

    pub fn blocks(&self) -> &[u64] {
        &self.blocks
    }

    pub fn to_dense(&self) -> Vec<f64> {
        (0..self.len).map(|i| if self.get(i) { 1.0 } else { 0.0 }).collect()
    }
}

/// |a ∧ b| / |a ∨ b|, with two empty fingerprints defined as identical.
pub fn tanimoto(a: &BitFingerprint, b: &BitFingerprint) -> Result<f64, MismatchError> {
    if a.len != b.len || a.tag != b.tag {
        return Err(MismatchError {
            left: a.tag.as_str(),
            left_len: a.len,
            right: b.tag.as_str(),
            right_len: b.len,
        });
    }
    Ok(tanimoto_blocks(&a.blocks, &b.blocks))
}

/// Tanimoto on raw bit blocks of equal length.
pub fn tanimoto_blocks(a: &[u64], b: &[u64]) -> f64 {
    let mut inter = 0u32;
    let mut union = 0u32;
    for (x, y) in a.iter().zip(b) {
        inter += (x & y).count_ones();
        union += (x | y).count_ones();
    }
    if union == 0 {
        1.0
    } else {
        inter as f64 / union as f64
    }
}

/// The four model inputs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Featurizer {
    Ecfp4,
    Ecfp6,
    Maccs,
    Descriptors,
}

impl Featurizer {
    pub const ALL: [Featurizer; 4] = [Featurizer::Ecfp4, Featurizer::Ecfp6, Featurizer::Maccs, Featurizer::Descriptors];

    pub fn tag(self) -> &'static str {
        match self {
            Featurizer::Ecfp4 => "ecfp4",
            Featurizer::Ecfp6 => "ecfp6",
            Featurizer::Maccs => "maccs",
            Featurizer::Descriptors => "descriptors",
        }
    }

    pub fn width(self, nbits: usize) -> usize {
        match self {
            Featurizer::Ecfp4 | Featurizer::Ecfp6 => nbits,
            Featurizer::Maccs => 166,
            Featurizer::Descriptors => DESCRIPTOR_NAMES.len(),
        }
    }

    pub fn is_binary(self) -> bool {
        !matches!(self, Featurizer::Descriptors)
    }

    pub fn column_names(self, nbits: usize) -> Vec<String> {
        match self {
            Featurizer::Ecfp4 | Featurizer::Ecfp6 => (0..nbits).map(|i| format!("bit{i}")).collect(),
            Featurizer::Maccs => (1..=166).map(|i| format!("key{i}")).collect(),
            Featurizer::Descriptors => DESCRIPTOR_NAMES.iter().map(|s| s.to_string()).collect(),
        }
    }

    pub fn row(self, mol: &Molecule, nbits: usize) -> Vec<f64> {
        match self {
            Featurizer::Ecfp4 => ecfp(mol, 2, nbits).to_dense(),
            Featurizer::Ecfp6 => ecfp(mol, 3, nbits).to_dense(),
            Featurizer::Maccs => structural_keys(mol).to_dense(),
            Featurizer::Descriptors => descriptor_panel(mol).values.to_vec(),
        }
    }
}

impl fmt::Display for Featurizer {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.tag())
    }
}

impl FromStr for Featurizer {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "ecfp4" => Ok(Featurizer::Ecfp4),
            "ecfp6" => Ok(Featurizer::Ecfp6),
            "maccs" | "keys" => Ok(Featurizer::Maccs),
            "descriptors" | "desc" => Ok(Featurizer::Descriptors),
            other => Err(format!("unknown featurizer '{other}'")),
        }
    }
}

/// Featurizes molecules in parallel; rows keep input order.
pub fn featurize_all(mols: &[Molecule], featurizer: Featurizer, nbits: usize) -> FeatureMatrix {
    let rows: Vec<Vec<f64>> = mols.par_iter().map(|m| featurizer.row(m, nbits)).collect();
    FeatureMatrix::from_rows(featurizer.tag(), featurizer.column_names(nbits), rows)
}
