//! Mini-batch k-means with greedy k-means++ seeding.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;

use super::SplitError;

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct KMeansConfig {
    pub k: usize,
    pub batch_size: usize,
    pub iterations: usize,
    pub restarts: usize,
}

impl Default for KMeansConfig {
    fn default() -> Self {
        KMeansConfig {
            k: 5,
            batch_size: 256,
            iterations: 100,
            restarts: 3,
        }
    }
}

#[derive(Debug, Clone)]
pub struct KMeansResult {
    pub labels: Vec<usize>,
    pub centers: Vec<Vec<f64>>,
    pub inertia: f64,
}

fn dist2(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Index of the nearest center; ties go to the lower index.
fn nearest(x: &[f64], centers: &[Vec<f64>]) -> (usize, f64) {
    let mut best = (0, f64::INFINITY);
    for (c, center) in centers.iter().enumerate() {
        let d = dist2(x, center);
        if d < best.1 {
            best = (c, d);
        }
    }
    best
}

fn kmeans_pp(points: &[Vec<f64>], k: usize, rng: &mut ChaCha20Rng) -> Vec<Vec<f64>> {
    let n = points.len();
    let trials = 2 + (k as f64).ln().floor() as usize;
    let mut centers = vec![points[rng.random_range(0..n)].clone()];
    let mut closest: Vec<f64> = points.iter().map(|p| dist2(p, &centers[0])).collect();
    while centers.len() < k {
        let total: f64 = closest.iter().sum();
        let mut best: Option<(f64, usize, Vec<f64>)> = None;
        for _ in 0..trials {
            let pick = if total > 0.0 {
                let mut r = rng.random::<f64>() * total;
                let mut idx = n - 1;
                for (i, &d) in closest.iter().enumerate() {
                    if r < d {
                        idx = i;
                        break;
                    }
                    r -= d;
                }
                idx
            } else {
                rng.random_range(0..n)
            };
            let updated: Vec<f64> = points
                .iter()
                .zip(&closest)
                .map(|(p, &c)| c.min(dist2(p, &points[pick])))
                .collect();
            let potential: f64 = updated.iter().sum();
            if best.as_ref().is_none_or(|b| potential < b.0) {
                best = Some((potential, pick, updated));
            }
        }
        let (_, pick, updated) = best.unwrap();
        centers.push(points[pick].clone());
        closest = updated;
    }
    centers
}

fn finalize(points: &[Vec<f64>], mut centers: Vec<Vec<f64>>) -> KMeansResult {
    let k = centers.len();
    let dim = points[0].len();
    let mut labels: Vec<usize> = points.iter().map(|p| nearest(p, &centers).0).collect();
    // reseed empty clusters from the points farthest from their centers
    for _ in 0..k {
        let mut sizes = vec![0usize; k];
        for &l in &labels {
            sizes[l] += 1;
        }
        let empty: Vec<usize> = (0..k).filter(|&c| sizes[c] == 0).collect();
        if empty.is_empty() {
            break;
        }
        let mut far: Vec<(f64, usize)> = points
            .iter()
            .enumerate()
            .filter(|&(i, _)| sizes[labels[i]] > 1)
            .map(|(i, p)| (dist2(p, &centers[labels[i]]), i))
            .collect();
        far.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)));
        for (&c, &(_, i)) in empty.iter().zip(&far) {
            centers[c] = points[i].clone();
            labels[i] = c;
        }
        let moved: Vec<usize> = points.iter().map(|p| nearest(p, &centers).0).collect();
        labels = moved;
    }
    let mut sums = vec![vec![0.0; dim]; k];
    let mut sizes = vec![0usize; k];
    for (p, &l) in points.iter().zip(&labels) {
        sizes[l] += 1;
        for (s, v) in sums[l].iter_mut().zip(p) {
            *s += v;
        }
    }
    for c in 0..k {
        if sizes[c] > 0 {
            centers[c] = sums[c].iter().map(|s| s / sizes[c] as f64).collect();
        }
    }
    let inertia = points.iter().zip(&labels).map(|(p, &l)| dist2(p, &centers[l])).sum();
    KMeansResult {
        labels,
        centers,
        inertia,
    }
}

fn single_run(points: &[Vec<f64>], cfg: &KMeansConfig, rng: &mut ChaCha20Rng) -> KMeansResult {
    let n = points.len();
    let mut centers = kmeans_pp(points, cfg.k, rng);
    let mut counts = vec![0usize; cfg.k];
    for _ in 0..cfg.iterations {
        for _ in 0..cfg.batch_size.min(n) {
            let x = &points[rng.random_range(0..n)];
            let (c, _) = nearest(x, &centers);
            counts[c] += 1;
            let eta = 1.0 / counts[c] as f64;
            for (ci, xi) in centers[c].iter_mut().zip(x) {
                *ci += eta * (xi - *ci);
            }
        }
    }
    finalize(points, centers)
}

/// Clusters rows of `points` into `cfg.k` groups, keeping the restart with
/// the lowest inertia.
pub fn minibatch_kmeans(points: &[Vec<f64>], cfg: &KMeansConfig, seed: u64) -> Result<KMeansResult, SplitError> {
    if cfg.k == 0 || points.len() < cfg.k {
        return Err(SplitError::Degenerate(format!(
            "{} points cannot form {} clusters",
            points.len(),
            cfg.k
        )));
    }
    let mut best: Option<KMeansResult> = None;
    for restart in 0..cfg.restarts.max(1) {
        let mut rng = ChaCha20Rng::seed_from_u64(seed);
        rng.set_stream(restart as u64);
        let r = single_run(points, cfg, &mut rng);
        if best.as_ref().is_none_or(|b| r.inertia < b.inertia) {
            best = Some(r);
        }
    }
    Ok(best.unwrap())
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand_distr::{Distribution, Normal};

    #[test]
    fn n_equals_k_gives_singletons() {
        let pts: Vec<Vec<f64>> = (0..5).map(|i| vec![i as f64 * 3.0, (i * i) as f64]).collect();
        let cfg = KMeansConfig::default();
        let r = minibatch_kmeans(&pts, &cfg, 4).unwrap();
        let mut labels = r.labels.clone();
        labels.sort();
        assert_eq!(labels, vec![0, 1, 2, 3, 4]);
        assert!(r.inertia.abs() < 1e-12);
    }

    #[test]
    fn too_few_points() {
        let pts = vec![vec![0.0], vec![1.0]];
        assert!(minibatch_kmeans(&pts, &KMeansConfig::default(), 0).is_err());
    }

    #[test]
    fn duplicate_rows_share_a_cluster() {
        let mut rng = ChaCha20Rng::seed_from_u64(1);
        let noise = Normal::new(0.0, 1.0).unwrap();
        let mut pts: Vec<Vec<f64>> = (0..60).map(|_| vec![noise.sample(&mut rng), noise.sample(&mut rng)]).collect();
        pts.push(pts[3].clone());
        pts.push(pts[17].clone());
        let r = minibatch_kmeans(&pts, &KMeansConfig::default(), 2).unwrap();
        assert_eq!(r.labels[3], r.labels[60]);
        assert_eq!(r.labels[17], r.labels[61]);
    }

    #[test]
    fn deterministic_for_seed() {
        let pts: Vec<Vec<f64>> = (0..100).map(|i| vec![(i % 13) as f64, (i % 7) as f64]).collect();
        let cfg = KMeansConfig::default();
        assert_eq!(
            minibatch_kmeans(&pts, &cfg, 5).unwrap().labels,
            minibatch_kmeans(&pts, &cfg, 5).unwrap().labels
        );
    }
}
