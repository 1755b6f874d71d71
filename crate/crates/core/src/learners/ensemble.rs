use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rayon::prelude::*;

use super::tree::{build_tree, column_profile, mix, Tree, TreeData, TreeParams};
use super::{LearnerConfig, LearnerFamily};
use crate::datasplit::TaskKind;
use crate::featurize::FeatureMatrix;

pub(crate) fn max_features(kind: TaskKind, p: usize) -> usize {
    match kind {
        TaskKind::Classification => ((p as f64).sqrt() as usize).max(1),
        TaskKind::Regression => (p / 3).max(1),
    }
}

/// Random forest (bootstrap, exhaustive cut points) or extra trees (no
/// bootstrap, one random cut per feature). Trees are fitted in parallel with
/// position-derived seeds, so the result does not depend on thread count.
pub(crate) fn fit_forest(cfg: &LearnerConfig, kind: TaskKind, x: &FeatureMatrix, y: &[f64], w: &[f64]) -> Vec<Tree> {
    let (candidates, binary) = column_profile(x, w);
    let data = TreeData {
        x,
        y,
        candidates: &candidates,
        binary: &binary,
    };
    let extra = cfg.family == LearnerFamily::ExtraTrees;
    let params = TreeParams {
        max_depth: cfg.max_depth,
        min_samples_leaf: cfg.min_samples_leaf,
        max_features: max_features(kind, x.cols()),
        random_thresholds: extra,
    };
    let n = x.rows();
    (0..cfg.n_trees)
        .into_par_iter()
        .map(|t| {
            let tree_seed = mix(cfg.seed, t as u64);
            let weights: Vec<f64> = if extra || !cfg.bootstrap {
                w.to_vec()
            } else {
                let mut rng = ChaCha20Rng::seed_from_u64(tree_seed);
                let mut counts = vec![0u32; n];
                for _ in 0..n {
                    counts[rng.random_range(0..n)] += 1;
                }
                w.iter().zip(&counts).map(|(wi, &c)| wi * c as f64).collect()
            };
            build_tree(&data, &weights, &params, mix(tree_seed, 0x5eed))
        })
        .collect()
}

pub(crate) fn forest_predict(trees: &[Tree], row: &[f64]) -> f64 {
    trees.iter().map(|t| t.predict_row(row)).sum::<f64>() / trees.len() as f64
}

pub(crate) fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

pub(crate) struct Boosted {
    pub init: f64,
    pub trees: Vec<Tree>,
}

/// Stagewise boosting of depth-limited regression trees on negative
/// gradients. Log-loss leaves take one Newton step.
pub(crate) fn fit_gbdt(cfg: &LearnerConfig, kind: TaskKind, x: &FeatureMatrix, y: &[f64], w: &[f64]) -> Boosted {
    let n = x.rows();
    let wsum: f64 = w.iter().sum();
    let wy: f64 = w.iter().zip(y).map(|(a, b)| a * b).sum();
    let logistic = kind == TaskKind::Classification;
    let init = if logistic {
        let p = (wy / wsum).clamp(1e-12, 1.0 - 1e-12);
        (p / (1.0 - p)).ln()
    } else {
        wy / wsum
    };
    let mut raw = vec![init; n];
    let mut trees = Vec::with_capacity(cfg.n_trees);
    if cfg.learning_rate == 0.0 {
        return Boosted { init, trees };
    }
    let (candidates, binary) = column_profile(x, w);
    let params = TreeParams {
        max_depth: cfg.max_depth.or(Some(3)),
        min_samples_leaf: cfg.min_samples_leaf,
        max_features: usize::MAX,
        random_thresholds: false,
    };
    let mut residual = vec![0.0; n];
    for stage in 0..cfg.n_trees {
        for i in 0..n {
            let pred = if logistic { sigmoid(raw[i]) } else { raw[i] };
            residual[i] = y[i] - pred;
        }
        let data = TreeData {
            x,
            y: &residual,
            candidates: &candidates,
            binary: &binary,
        };
        let mut tree = build_tree(&data, w, &params, mix(cfg.seed, stage as u64));
        if logistic {
            let leaves = tree.nodes.len();
            let mut num = vec![0.0; leaves];
            let mut den = vec![0.0; leaves];
            let mut hit = vec![false; leaves];
            for i in 0..n {
                if w[i] <= 0.0 {
                    continue;
                }
                let leaf = tree.apply(x.row(i));
                let p = sigmoid(raw[i]);
                num[leaf] += w[i] * residual[i];
                den[leaf] += w[i] * p * (1.0 - p);
                hit[leaf] = true;
            }
            for leaf in 0..leaves {
                if hit[leaf] {
                    let v = if den[leaf].abs() < 1e-150 { 0.0 } else { num[leaf] / den[leaf] };
                    tree.set_leaf(leaf, v);
                }
            }
        }
        for i in 0..n {
            raw[i] += cfg.learning_rate * tree.predict_row(x.row(i));
        }
        trees.push(tree);
    }
    Boosted { init, trees }
}

pub(crate) fn boosted_raw(init: f64, learning_rate: f64, trees: &[Tree], row: &[f64]) -> f64 {
    init + trees.iter().map(|t| learning_rate * t.predict_row(row)).sum::<f64>()
}
