//! Seeded generator for clustered molecule series: a handful of scaffolds,
//! each decorated at two positions from a shared substituent list. Used for
//! the bundled toy benchmark and for split and learner property tests.

use std::collections::BTreeSet;

use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rand_distr::{Distribution, Normal};

/// Scaffold templates. `{A}` and `{B}` become a branch `(R)` or nothing.
pub const SCAFFOLDS: &[&str] = &[
    "c1cc{A}c2nc{B}ccc2c1",
    "c1cc{A}ccc1S(=O)(=O)NC{B}",
    "O=C(N1CCN(CC1)C{A})c1ccc{B}cc1",
    "c1cc{A}c2[nH]c(C{B})nc2c1",
    "O=C(NC{A})c1ccc(o1)C{B}",
    "c1cc{A}ccc1-c1ccc{B}cc1",
    "O=C(NC1CCC{A}CC1)Nc1cc{B}ccc1",
    "Cc1sc(NC(=O)C{B})nc1C{A}",
];

/// Substituents with a rough hydrophobic contribution and an activity effect.
pub const SUBSTITUENTS: &[(&str, f64, f64)] = &[
    ("", 0.0, 0.0),
    ("C", 0.5, 0.0),
    ("CC", 1.0, 0.0),
    ("C(C)C", 1.3, 0.2),
    ("F", 0.1, 0.0),
    ("Cl", 0.7, 0.3),
    ("Br", 0.9, 0.3),
    ("I", 1.1, 0.3),
    ("C(F)(F)F", 0.9, 0.5),
    ("OC(F)(F)F", 1.0, 0.4),
    ("[N+](=O)[O-]", -0.3, 2.5),
    ("N", -1.0, 1.0),
    ("O", -0.7, -0.3),
    ("OC", -0.1, 0.0),
    ("OCC", 0.4, 0.0),
    ("C#N", -0.6, 0.0),
    ("C(=O)O", -0.3, -1.5),
    ("C(N)=O", -1.5, -0.5),
    ("N(C)C", 0.2, 0.2),
    ("CCN(C)C", 0.1, 0.4),
    ("S(C)(=O)=O", -1.2, -0.8),
    ("C1CC1", 1.1, 0.0),
    ("CO", -1.0, -0.2),
    ("c1ccccc1", 1.9, 0.6),
    ("N1CCOCC1", -0.4, -0.2),
];

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SynthConfig {
    pub series: usize,
    pub per_series: usize,
    pub seed: u64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        SynthConfig {
            series: 8,
            per_series: 130,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SynthMolecule {
    pub smiles: String,
    pub series: usize,
    pub substituents: [usize; 2],
}

fn slot(i: usize) -> String {
    let s = SUBSTITUENTS[i].0;
    if s.is_empty() {
        String::new()
    } else {
        format!("({s})")
    }
}

pub fn render(series: usize, a: usize, b: usize) -> String {
    SCAFFOLDS[series].replace("{A}", &slot(a)).replace("{B}", &slot(b))
}

/// Distinct decorated scaffolds, grouped by series in generation order.
pub fn clustered_series(cfg: &SynthConfig) -> Vec<SynthMolecule> {
    assert!(cfg.series >= 1 && cfg.series <= SCAFFOLDS.len(), "1..={} series available", SCAFFOLDS.len());
    let combos = SUBSTITUENTS.len() * SUBSTITUENTS.len();
    assert!(cfg.per_series <= combos, "at most {combos} molecules per series");
    let mut rng = ChaCha20Rng::seed_from_u64(cfg.seed);
    let mut out = Vec::with_capacity(cfg.series * cfg.per_series);
    for s in 0..cfg.series {
        let picked: BTreeSet<usize> = sample(&mut rng, combos, cfg.per_series).into_iter().collect();
        for c in picked {
            let (a, b) = (c / SUBSTITUENTS.len(), c % SUBSTITUENTS.len());
            out.push(SynthMolecule {
                smiles: render(s, a, b),
                series: s,
                substituents: [a, b],
            });
        }
    }
    out
}

fn series_offset(series: usize) -> f64 {
    [-1.5, 0.5, -0.5, 1.0, -1.0, 0.0, -2.0, 0.8][series % 8]
}

/// Bernoulli labels from a series-level base rate plus substituent effects.
pub fn classification_labels(mols: &[SynthMolecule], seed: u64) -> Vec<f64> {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    mols.iter()
        .map(|m| {
            let z = series_offset(m.series) - 0.5
                + m.substituents.iter().map(|&i| SUBSTITUENTS[i].2).sum::<f64>();
            let p = 1.0 / (1.0 + (-z).exp());
            if rng.random::<f64>() < p {
                1.0
            } else {
                0.0
            }
        })
        .collect()
}

/// Additive hydrophobicity-like values with Gaussian noise.
pub fn regression_values(mols: &[SynthMolecule], seed: u64, noise: f64) -> Vec<f64> {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let normal = Normal::new(0.0, noise.max(0.0)).expect("finite noise");
    mols.iter()
        .map(|m| {
            let v = 2.0 + series_offset(m.series) + m.substituents.iter().map(|&i| SUBSTITUENTS[i].1).sum::<f64>();
            v + if noise > 0.0 { normal.sample(&mut rng) } else { 0.0 }
        })
        .collect()
}
