//! Weighted CART trees shared by the forests and gradient boosting.
//!
//! Impurity is weighted squared error around the node mean; for 0/1 labels
//! this is half the weighted Gini impurity, so one criterion serves both
//! task kinds.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use serde::{Deserialize, Serialize};

use crate::featurize::FeatureMatrix;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Node {
    Split {
        feature: usize,
        threshold: f64,
        left: usize,
        right: usize,
    },
    Leaf {
        value: f64,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Tree {
    pub nodes: Vec<Node>,
}

impl Tree {
    /// Index of the leaf a row falls into.
    pub fn apply(&self, x: &[f64]) -> usize {
        let mut i = 0;
        loop {
            match self.nodes[i] {
                Node::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => i = if x[feature] <= threshold { left } else { right },
                Node::Leaf { .. } => return i,
            }
        }
    }

    pub fn predict_row(&self, x: &[f64]) -> f64 {
        match self.nodes[self.apply(x)] {
            Node::Leaf { value } => value,
            Node::Split { .. } => unreachable!(),
        }
    }

    pub fn set_leaf(&mut self, i: usize, value: f64) {
        self.nodes[i] = Node::Leaf { value };
    }

    pub fn depth(&self) -> usize {
        fn walk(t: &Tree, i: usize) -> usize {
            match t.nodes[i] {
                Node::Split { left, right, .. } => 1 + walk(t, left).max(walk(t, right)),
                Node::Leaf { .. } => 0,
            }
        }
        walk(self, 0)
    }
}

#[derive(Debug, Clone, Copy)]
pub(crate) struct TreeParams {
    pub max_depth: Option<usize>,
    pub min_samples_leaf: usize,
    /// Non-constant features to evaluate per node.
    pub max_features: usize,
    /// Draw one uniform threshold per feature instead of scanning all cut points.
    pub random_thresholds: bool,
}

pub(crate) struct TreeData<'a> {
    pub x: &'a FeatureMatrix,
    pub y: &'a [f64],
    pub candidates: &'a [usize],
    pub binary: &'a [bool],
}

pub(crate) fn mix(a: u64, b: u64) -> u64 {
    let mut z = a ^ b.wrapping_mul(0x9e37_79b9_7f4a_7c15).rotate_left(17);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Columns that vary among the rows with positive weight, and which of all
/// columns are 0/1-valued.
pub(crate) fn column_profile(x: &FeatureMatrix, w: &[f64]) -> (Vec<usize>, Vec<bool>) {
    let cols = x.cols();
    let mut lo = vec![f64::INFINITY; cols];
    let mut hi = vec![f64::NEG_INFINITY; cols];
    let mut binary = vec![true; cols];
    for i in 0..x.rows() {
        let row = x.row(i);
        for j in 0..cols {
            let v = row[j];
            if v != 0.0 && v != 1.0 {
                binary[j] = false;
            }
            if w[i] > 0.0 {
                lo[j] = lo[j].min(v);
                hi[j] = hi[j].max(v);
            }
        }
    }
    let candidates = (0..cols).filter(|&j| lo[j] < hi[j]).collect();
    (candidates, binary)
}

#[derive(Clone, Copy, Default)]
struct Stats {
    w: f64,
    s: f64,
    n: usize,
}

impl Stats {
    fn add(&mut self, w: f64, y: f64) {
        self.w += w;
        self.s += w * y;
        self.n += 1;
    }

    /// S²/W; larger is purer for a fixed parent.
    fn proxy(&self) -> f64 {
        if self.w > 0.0 {
            self.s * self.s / self.w
        } else {
            0.0
        }
    }
}

struct Candidate {
    feature: usize,
    threshold: f64,
    gain: f64,
}

pub(crate) fn build_tree(data: &TreeData<'_>, w: &[f64], params: &TreeParams, seed: u64) -> Tree {
    let samples: Vec<usize> = (0..data.x.rows()).filter(|&i| w[i] > 0.0).collect();
    let mut nodes: Vec<Node> = vec![Node::Leaf { value: 0.0 }];
    // (node id, samples, depth)
    let mut stack = vec![(0usize, samples, 0usize)];
    while let Some((id, idx, depth)) = stack.pop() {
        let mut total = Stats::default();
        let mut sq = 0.0;
        for &i in &idx {
            total.add(w[i], data.y[i]);
            sq += w[i] * data.y[i] * data.y[i];
        }
        let value = if total.w > 0.0 { total.s / total.w } else { 0.0 };
        let sse = sq - total.proxy();
        let can_split = idx.len() >= 2 * params.min_samples_leaf.max(1)
            && params.max_depth.is_none_or(|d| depth < d)
            && sse > 1e-12 * sq.abs().max(1e-300);
        let split = if can_split {
            let mut rng = ChaCha20Rng::seed_from_u64(mix(seed, id as u64));
            best_split(data, w, &idx, &total, params, &mut rng)
        } else {
            None
        };
        match split {
            None => nodes[id] = Node::Leaf { value },
            Some(c) => {
                let (left, right): (Vec<usize>, Vec<usize>) =
                    idx.iter().partition(|&&i| data.x.get(i, c.feature) <= c.threshold);
                let l = nodes.len();
                nodes.push(Node::Leaf { value: 0.0 });
                nodes.push(Node::Leaf { value: 0.0 });
                nodes[id] = Node::Split {
                    feature: c.feature,
                    threshold: c.threshold,
                    left: l,
                    right: l + 1,
                };
                // right pushed first so the left subtree is built first
                stack.push((l + 1, right, depth + 1));
                stack.push((l, left, depth + 1));
            }
        }
    }
    Tree { nodes }
}

fn best_split(
    data: &TreeData<'_>,
    w: &[f64],
    idx: &[usize],
    total: &Stats,
    params: &TreeParams,
    rng: &mut ChaCha20Rng,
) -> Option<Candidate> {
    let parent = total.proxy();
    let min_leaf = params.min_samples_leaf.max(1);
    let mut order: Vec<usize> = data.candidates.to_vec();
    let mut best: Option<Candidate> = None;
    let mut visited = 0;
    let mut pos = 0;
    let mut values: Vec<(f64, usize)> = Vec::with_capacity(idx.len());
    while pos < order.len() && visited < params.max_features {
        // lazy Fisher–Yates: draw the next feature uniformly from the rest
        let pick = if params.max_features < order.len() {
            rng.random_range(pos..order.len())
        } else {
            pos
        };
        order.swap(pos, pick);
        let f = order[pos];
        pos += 1;

        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for &i in idx {
            let v = data.x.get(i, f);
            lo = lo.min(v);
            hi = hi.max(v);
        }
        if lo >= hi {
            continue;
        }
        visited += 1;

        let mut consider = |threshold: f64, left: Stats| {
            let right = Stats {
                w: total.w - left.w,
                s: total.s - left.s,
                n: total.n - left.n,
            };
            if left.n < min_leaf || right.n < min_leaf {
                return;
            }
            let gain = left.proxy() + right.proxy() - parent;
            if best.as_ref().is_none_or(|b| gain > b.gain) {
                best = Some(Candidate {
                    feature: f,
                    threshold,
                    gain,
                });
            }
        };

        if params.random_thresholds {
            let t = lo + rng.random::<f64>() * (hi - lo);
            let t = if t >= hi { lo } else { t };
            let mut left = Stats::default();
            for &i in idx {
                if data.x.get(i, f) <= t {
                    left.add(w[i], data.y[i]);
                }
            }
            consider(t, left);
        } else if data.binary[f] {
            let mut left = Stats::default();
            for &i in idx {
                if data.x.get(i, f) == 0.0 {
                    left.add(w[i], data.y[i]);
                }
            }
            consider(0.5, left);
        } else {
            values.clear();
            values.extend(idx.iter().map(|&i| (data.x.get(i, f), i)));
            values.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
            let mut left = Stats::default();
            for k in 0..values.len() - 1 {
                let (v, i) = values[k];
                left.add(w[i], data.y[i]);
                let next = values[k + 1].0;
                if v < next {
                    let mid = v + (next - v) / 2.0;
                    let t = if mid >= next { v } else { mid };
                    consider(t, left);
                }
            }
        }
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fit(x: Vec<Vec<f64>>, y: Vec<f64>, params: TreeParams) -> (Tree, FeatureMatrix) {
        let cols = x[0].len();
        let m = FeatureMatrix::from_rows("t", (0..cols).map(|j| j.to_string()).collect(), x);
        let w = vec![1.0; y.len()];
        let (candidates, binary) = column_profile(&m, &w);
        let data = TreeData {
            x: &m,
            y: &y,
            candidates: &candidates,
            binary: &binary,
        };
        (build_tree(&data, &w, &params, 1), m)
    }

    const FULL: TreeParams = TreeParams {
        max_depth: None,
        min_samples_leaf: 1,
        max_features: usize::MAX,
        random_thresholds: false,
    };

    #[test]
    fn pure_leaves_reproduce_training_targets() {
        let x: Vec<Vec<f64>> = (0..20).map(|i| vec![(i * 7 % 20) as f64, (i % 3) as f64]).collect();
        let y: Vec<f64> = (0..20).map(|i| ((i * 13) % 5) as f64).collect();
        let (t, m) = fit(x, y.clone(), FULL);
        for i in 0..20 {
            assert_eq!(t.predict_row(m.row(i)), y[i]);
        }
    }

    #[test]
    fn depth_limit_is_respected() {
        let x: Vec<Vec<f64>> = (0..64).map(|i| vec![i as f64]).collect();
        let y: Vec<f64> = (0..64).map(|i| (i % 2) as f64).collect();
        let (t, _) = fit(x, y, TreeParams { max_depth: Some(3), ..FULL });
        assert!(t.depth() <= 3);
    }

    #[test]
    fn binary_and_generic_paths_agree() {
        let x: Vec<Vec<f64>> = (0..40).map(|i| vec![(i % 2) as f64, ((i / 2) % 2) as f64, ((i / 4) % 2) as f64]).collect();
        let y: Vec<f64> = x.iter().map(|r| if r[1] == 1.0 && r[2] == 0.0 { 1.0 } else { 0.0 }).collect();
        let (t, m) = fit(x.clone(), y.clone(), FULL);
        let shifted: Vec<Vec<f64>> = x.iter().map(|r| r.iter().map(|v| v * 2.0 + 0.5).collect()).collect();
        let (t2, m2) = fit(shifted, y.clone(), FULL);
        for i in 0..40 {
            assert_eq!(t.predict_row(m.row(i)), y[i]);
            assert_eq!(t2.predict_row(m2.row(i)), y[i]);
        }
    }
}
