//! Structure-separated five-fold splitting: dedup by canonical SMILES,
//! ECFP4 bits, truncated SVD, mini-batch k-means, fold-quality flags.

mod kmeans;
mod svd;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::chem::{canonical_smiles, parse_standardized, Molecule};
use crate::featurize::ecfp;

pub use kmeans::{minibatch_kmeans, KMeansConfig, KMeansResult};
pub use svd::{project_svd, SparseMatrix, SvdProjection};

#[derive(Debug, thiserror::Error)]
pub enum SplitError {
    #[error("no records survived parsing and deduplication for task '{0}'")]
    EmptyDataset(String),
    #[error("degenerate input: {0}")]
    Degenerate(String),
    #[error("classification label {label} for '{smiles}' is not 0 or 1")]
    InvalidLabel { smiles: String, label: f64 },
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TaskKind {
    Classification,
    Regression,
}

impl fmt::Display for TaskKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            TaskKind::Classification => "classification",
            TaskKind::Regression => "regression",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Record {
    pub smiles: String,
    pub label: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Provenance {
    pub raw_rows: usize,
    pub parse_dropped: usize,
    pub dedup_removed: usize,
    pub conflict_removed: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TaskDataset {
    pub name: String,
    pub kind: TaskKind,
    /// Sorted by canonical SMILES, unique.
    pub records: Vec<Record>,
    pub provenance: Provenance,
    /// Input strings that failed to parse, with the parser message.
    pub dropped: Vec<(String, String)>,
}

impl TaskDataset {
    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn labels(&self) -> Vec<f64> {
        self.records.iter().map(|r| r.label).collect()
    }

    pub fn positive_rate(&self) -> Option<f64> {
        (self.kind == TaskKind::Classification && !self.records.is_empty())
            .then(|| self.records.iter().filter(|r| r.label == 1.0).count() as f64 / self.records.len() as f64)
    }

    /// Reparses the stored canonical SMILES.
    pub fn molecules(&self) -> Vec<Molecule> {
        self.records
            .iter()
            .map(|r| crate::chem::parse_smiles(&r.smiles).expect("canonical SMILES reparses"))
            .collect()
    }
}

/// Canonicalizes, drops unparsable rows and collapses duplicates. Conflicting
/// classification duplicates are removed entirely; regression duplicates are
/// averaged.
pub fn deduplicate(
    name: &str,
    rows: &[(String, f64)],
    kind: TaskKind,
    largest_fragment: bool,
) -> Result<TaskDataset, SplitError> {
    let mut prov = Provenance {
        raw_rows: rows.len(),
        ..Default::default()
    };
    let mut dropped = Vec::new();
    let mut groups: BTreeMap<String, Vec<f64>> = BTreeMap::new();
    for (smiles, label) in rows {
        if kind == TaskKind::Classification && *label != 0.0 && *label != 1.0 {
            return Err(SplitError::InvalidLabel {
                smiles: smiles.clone(),
                label: *label,
            });
        }
        match parse_standardized(smiles, largest_fragment) {
            Ok(m) => groups.entry(canonical_smiles(&m)).or_default().push(*label),
            Err(e) => {
                log::warn!("task {name}: dropping unparsable SMILES '{smiles}': {e}");
                prov.parse_dropped += 1;
                dropped.push((smiles.clone(), e.to_string()));
            }
        }
    }
    let mut records = Vec::with_capacity(groups.len());
    for (smiles, labels) in groups {
        let label = match kind {
            TaskKind::Classification => {
                if labels.iter().any(|&l| l != labels[0]) {
                    prov.conflict_removed += labels.len();
                    continue;
                }
                labels[0]
            }
            TaskKind::Regression => labels.iter().sum::<f64>() / labels.len() as f64,
        };
        prov.dedup_removed += labels.len() - 1;
        records.push(Record { smiles, label });
    }
    if records.is_empty() {
        return Err(SplitError::EmptyDataset(name.to_string()));
    }
    Ok(TaskDataset {
        name: name.to_string(),
        kind,
        records,
        provenance: prov,
        dropped,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FoldFlag {
    SmallTest,
    ZeroPositives,
    DegenerateCluster,
}

impl FoldFlag {
    pub fn as_str(self) -> &'static str {
        match self {
            FoldFlag::SmallTest => "small_test",
            FoldFlag::ZeroPositives => "zero_positives",
            FoldFlag::DegenerateCluster => "degenerate_cluster",
        }
    }
}

pub fn join_flags(flags: &[FoldFlag]) -> String {
    flags.iter().map(|f| f.as_str()).collect::<Vec<_>>().join("|")
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SplitConfig {
    pub nbits: usize,
    pub max_components: usize,
    pub kmeans: KMeansConfig,
    pub seed: u64,
}

impl Default for SplitConfig {
    fn default() -> Self {
        SplitConfig {
            nbits: crate::featurize::DEFAULT_NBITS,
            max_components: 64,
            kmeans: KMeansConfig::default(),
            seed: 0,
        }
    }
}

pub const SMALL_TEST_MIN: usize = 30;
pub const SMALL_TEST_FRACTION: f64 = 0.01;
pub const MIN_FOLD_POSITIVES: usize = 5;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FoldAssignment {
    pub task: String,
    pub kind: TaskKind,
    pub smiles: Vec<String>,
    pub folds: Vec<usize>,
    pub sizes: Vec<usize>,
    /// Per-fold positive counts; empty for regression.
    pub positives: Vec<usize>,
    pub flags: Vec<Vec<FoldFlag>>,
    pub components: usize,
    pub singular_values: Vec<f64>,
    pub config: SplitConfig,
}

/// Flags for one fold of size `size` out of `n` records.
pub fn fold_flags(size: usize, n: usize, positives: Option<usize>) -> Vec<FoldFlag> {
    let mut flags = BTreeSet::new();
    let small = (SMALL_TEST_MIN as f64).max(SMALL_TEST_FRACTION * n as f64);
    if (size as f64) < small {
        flags.insert(FoldFlag::SmallTest);
    }
    if let Some(p) = positives {
        if p < MIN_FOLD_POSITIVES {
            flags.insert(FoldFlag::SmallTest);
        }
        if p == 0 {
            flags.insert(FoldFlag::ZeroPositives);
        }
    }
    if size == 0 || size == n {
        flags.insert(FoldFlag::DegenerateCluster);
    }
    flags.into_iter().collect()
}

/// ECFP4 bit sets and the matching compressed sparse matrix (only columns
/// that occur at least once).
pub fn ecfp_bit_matrix(mols: &[Molecule], nbits: usize) -> (Vec<Vec<usize>>, SparseMatrix) {
    use rayon::prelude::*;
    let bits: Vec<Vec<usize>> = mols.par_iter().map(|m| ecfp(m, 2, nbits).ones().collect()).collect();
    let used: BTreeSet<usize> = bits.iter().flatten().copied().collect();
    let index: BTreeMap<usize, usize> = used.iter().enumerate().map(|(i, &b)| (b, i)).collect();
    let compressed: Vec<Vec<usize>> = bits.iter().map(|r| r.iter().map(|b| index[b]).collect()).collect();
    let x = SparseMatrix::from_binary_rows(used.len(), &compressed);
    (bits, x)
}

pub fn assign_folds(dataset: &TaskDataset, cfg: &SplitConfig) -> Result<FoldAssignment, SplitError> {
    let n = dataset.len();
    let k = cfg.kmeans.k;
    if n < k.max(2) {
        return Err(SplitError::Degenerate(format!(
            "task '{}' has {n} records, fewer than {k} folds",
            dataset.name
        )));
    }
    let mols = dataset.molecules();
    let (_, x) = ecfp_bit_matrix(&mols, cfg.nbits);
    let d = cfg.max_components.min(n - 1).min(x.ncols());
    let proj = project_svd(&x, d, cfg.seed)?;
    let points: Vec<Vec<f64>> = (0..n)
        .map(|i| proj.scores.row(i).iter().copied().collect())
        .collect();
    let km = minibatch_kmeans(&points, &cfg.kmeans, cfg.seed)?;

    let mut sizes = vec![0usize; k];
    let mut positives = vec![0usize; k];
    for (r, &f) in dataset.records.iter().zip(&km.labels) {
        sizes[f] += 1;
        if r.label == 1.0 {
            positives[f] += 1;
        }
    }
    let classification = dataset.kind == TaskKind::Classification;
    let flags = (0..k)
        .map(|f| fold_flags(sizes[f], n, classification.then_some(positives[f])))
        .collect();
    Ok(FoldAssignment {
        task: dataset.name.clone(),
        kind: dataset.kind,
        smiles: dataset.records.iter().map(|r| r.smiles.clone()).collect(),
        folds: km.labels,
        sizes,
        positives: if classification { positives } else { Vec::new() },
        flags,
        components: d,
        singular_values: proj.singular_values,
        config: *cfg,
    })
}

#[derive(Serialize)]
struct Sidecar<'a> {
    task: &'a str,
    kind: TaskKind,
    n: usize,
    config: &'a SplitConfig,
    svd_components: usize,
    svd_centering: &'static str,
    singular_values: &'a [f64],
    fold_sizes: &'a [usize],
    fold_positives: &'a [usize],
    fold_flags: Vec<Vec<&'static str>>,
    small_test_rule: String,
    provenance: Option<&'a Provenance>,
}

impl FoldAssignment {
    pub fn k(&self) -> usize {
        self.sizes.len()
    }

    pub fn train_test(&self, fold: usize) -> (Vec<usize>, Vec<usize>) {
        (0..self.folds.len()).partition(|&i| self.folds[i] != fold)
    }

    pub fn to_csv_string(&self) -> Result<String, SplitError> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(["canonical_smiles", "fold", "flags"])?;
        for (s, &f) in self.smiles.iter().zip(&self.folds) {
            w.write_record([s.as_str(), &f.to_string(), &join_flags(&self.flags[f])])?;
        }
        Ok(String::from_utf8(w.into_inner().map_err(|e| e.into_error())?).expect("utf8"))
    }

    pub fn sidecar_json(&self, provenance: Option<&Provenance>) -> Result<String, SplitError> {
        let side = Sidecar {
            task: &self.task,
            kind: self.kind,
            n: self.folds.len(),
            config: &self.config,
            svd_components: self.components,
            svd_centering: "none",
            singular_values: &self.singular_values,
            fold_sizes: &self.sizes,
            fold_positives: &self.positives,
            fold_flags: self.flags.iter().map(|fs| fs.iter().map(|f| f.as_str()).collect()).collect(),
            small_test_rule: format!(
                "size < max({SMALL_TEST_MIN}, {SMALL_TEST_FRACTION} * n) or positives < {MIN_FOLD_POSITIVES}"
            ),
            provenance,
        };
        Ok(serde_json::to_string_pretty(&side)? + "\n")
    }

    /// Reads a fold CSV back, checking it against the dataset it came from.
    pub fn read_csv(path: &Path, dataset: &TaskDataset, k: usize) -> Result<FoldAssignment, SplitError> {
        let text = fs::read_to_string(path)?;
        let mut rdr = csv::Reader::from_reader(text.as_bytes());
        let mut smiles = Vec::new();
        let mut folds = Vec::new();
        for rec in rdr.records() {
            let rec = rec?;
            smiles.push(rec[0].to_string());
            let f: usize = rec[1]
                .parse()
                .map_err(|_| SplitError::Degenerate(format!("bad fold index '{}'", &rec[1])))?;
            if f >= k {
                return Err(SplitError::Degenerate(format!("fold index {f} out of range")));
            }
            folds.push(f);
        }
        let expected: Vec<&str> = dataset.records.iter().map(|r| r.smiles.as_str()).collect();
        if smiles.iter().map(String::as_str).ne(expected.iter().copied()) {
            return Err(SplitError::Degenerate(format!(
                "fold file {} does not match dataset '{}'",
                path.display(),
                dataset.name
            )));
        }
        let n = folds.len();
        let classification = dataset.kind == TaskKind::Classification;
        let mut sizes = vec![0; k];
        let mut positives = vec![0; k];
        for (r, &f) in dataset.records.iter().zip(&folds) {
            sizes[f] += 1;
            if r.label == 1.0 {
                positives[f] += 1;
            }
        }
        let flags = (0..k)
            .map(|f| fold_flags(sizes[f], n, classification.then_some(positives[f])))
            .collect();
        Ok(FoldAssignment {
            task: dataset.name.clone(),
            kind: dataset.kind,
            smiles,
            folds,
            sizes,
            positives: if classification { positives } else { Vec::new() },
            flags,
            components: 0,
            singular_values: Vec::new(),
            config: SplitConfig::default(),
        })
    }
}

/// Uniform random fold labels, used as the leakage comparator.
pub fn random_folds(n: usize, k: usize, seed: u64) -> Vec<usize> {
    use rand::seq::SliceRandom;
    use rand::SeedableRng;
    let mut rng = rand_chacha::ChaCha20Rng::seed_from_u64(seed);
    let mut folds: Vec<usize> = (0..n).map(|i| i % k).collect();
    folds.shuffle(&mut rng);
    folds
}

/// Per molecule, the highest Tanimoto similarity to any molecule in a
/// different fold.
pub fn cross_fold_nn_similarities(bits: &[Vec<u64>], folds: &[usize]) -> Vec<f64> {
    use rayon::prelude::*;
    let n = bits.len();
    (0..n)
        .into_par_iter()
        .map(|i| {
            (0..n)
                .filter(|&j| folds[j] != folds[i])
                .map(|j| crate::featurize::tanimoto_blocks(&bits[i], &bits[j]))
                .fold(0.0, f64::max)
        })
        .collect()
}

/// Mean of [`cross_fold_nn_similarities`].
pub fn cross_fold_nn_similarity(bits: &[Vec<u64>], folds: &[usize]) -> f64 {
    let sims = cross_fold_nn_similarities(bits, folds);
    sims.iter().sum::<f64>() / sims.len() as f64
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rows(items: &[(&str, f64)]) -> Vec<(String, f64)> {
        items.iter().map(|(s, l)| (s.to_string(), *l)).collect()
    }

    #[test]
    fn consistent_duplicates_collapse() {
        let d = deduplicate("t", &rows(&[("CCO", 1.0), ("OCC", 1.0)]), TaskKind::Classification, false).unwrap();
        assert_eq!(d.len(), 1);
        assert_eq!(d.records[0].label, 1.0);
        assert_eq!(d.provenance.dedup_removed, 1);
    }

    #[test]
    fn conflicting_duplicates_are_removed() {
        let r = deduplicate("t", &rows(&[("CCO", 1.0), ("OCC", 0.0)]), TaskKind::Classification, false);
        assert!(matches!(r, Err(SplitError::EmptyDataset(_))));
        let d = deduplicate(
            "t",
            &rows(&[("CCO", 1.0), ("OCC", 0.0), ("CCC", 0.0)]),
            TaskKind::Classification,
            false,
        )
        .unwrap();
        assert_eq!(d.len(), 1);
        assert_eq!(d.provenance.conflict_removed, 2);
    }

    #[test]
    fn distinct_rows_kept_and_counts_reconcile() {
        let d = deduplicate(
            "t",
            &rows(&[("CCO", 1.0), ("CCC", 0.0), ("C1CC", 0.0), ("OCC", 1.0)]),
            TaskKind::Classification,
            false,
        )
        .unwrap();
        assert_eq!(d.len(), 2);
        let p = &d.provenance;
        assert_eq!(p.raw_rows, d.len() + p.parse_dropped + p.dedup_removed + p.conflict_removed);
        assert_eq!(p.parse_dropped, 1);
    }

    #[test]
    fn regression_duplicates_average() {
        let d = deduplicate("t", &rows(&[("CCO", 1.0), ("OCC", 2.0)]), TaskKind::Regression, false).unwrap();
        assert_eq!(d.records[0].label, 1.5);
    }

    #[test]
    fn non_binary_class_label_rejected() {
        assert!(deduplicate("t", &rows(&[("CCO", 2.0)]), TaskKind::Classification, false).is_err());
    }

    #[test]
    fn flag_rules() {
        assert_eq!(fold_flags(10, 100, None), vec![FoldFlag::SmallTest]);
        assert!(fold_flags(40, 100, Some(10)).is_empty());
        assert_eq!(fold_flags(40, 100, Some(3)), vec![FoldFlag::SmallTest]);
        assert_eq!(
            fold_flags(40, 100, Some(0)),
            vec![FoldFlag::SmallTest, FoldFlag::ZeroPositives]
        );
        assert_eq!(
            fold_flags(0, 100, None),
            vec![FoldFlag::SmallTest, FoldFlag::DegenerateCluster]
        );
        assert_eq!(fold_flags(49, 5000, None), vec![FoldFlag::SmallTest]);
        assert!(fold_flags(50, 5000, None).is_empty());
    }

    #[test]
    fn identical_molecules_collapse_before_splitting() {
        let d = deduplicate("t", &rows(&[("CCO", 1.0); 5]), TaskKind::Classification, false).unwrap();
        assert!(matches!(assign_folds(&d, &SplitConfig::default()), Err(SplitError::Degenerate(_))));
    }
}
