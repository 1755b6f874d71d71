//! Randomized truncated SVD (subspace iteration) over a sparse matrix.

use nalgebra::DMatrix;
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use rand_distr::{Distribution, StandardNormal};

use super::SplitError;

const OVERSAMPLE: usize = 10;
const MIN_POWER_ITERS: usize = 4;
const MAX_POWER_ITERS: usize = 10;
const TOLERANCE: f64 = 1e-6;

/// Compressed sparse rows.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseMatrix {
    rows: Vec<Vec<(usize, f64)>>,
    cols: usize,
}

impl SparseMatrix {
    pub fn new(cols: usize, rows: Vec<Vec<(usize, f64)>>) -> Self {
        assert!(rows.iter().flatten().all(|&(j, _)| j < cols), "column index out of range");
        SparseMatrix { rows, cols }
    }

    /// Binary matrix from per-row sets of column indices.
    pub fn from_binary_rows(cols: usize, rows: &[Vec<usize>]) -> Self {
        SparseMatrix::new(cols, rows.iter().map(|r| r.iter().map(|&j| (j, 1.0)).collect()).collect())
    }

    pub fn from_dense(m: &DMatrix<f64>) -> Self {
        let rows = (0..m.nrows())
            .map(|i| (0..m.ncols()).filter(|&j| m[(i, j)] != 0.0).map(|j| (j, m[(i, j)])).collect())
            .collect();
        SparseMatrix { rows, cols: m.ncols() }
    }

    pub fn nrows(&self) -> usize {
        self.rows.len()
    }

    pub fn ncols(&self) -> usize {
        self.cols
    }

    pub fn nnz(&self) -> usize {
        self.rows.iter().map(Vec::len).sum()
    }

    /// X · B for dense B (cols × k).
    fn mul(&self, b: &DMatrix<f64>) -> DMatrix<f64> {
        let k = b.ncols();
        let mut out = DMatrix::zeros(self.rows.len(), k);
        for (i, row) in self.rows.iter().enumerate() {
            for &(j, v) in row {
                for c in 0..k {
                    out[(i, c)] += v * b[(j, c)];
                }
            }
        }
        out
    }

    /// Xᵀ · B for dense B (rows × k).
    fn tmul(&self, b: &DMatrix<f64>) -> DMatrix<f64> {
        let k = b.ncols();
        let mut out = DMatrix::zeros(self.cols, k);
        for (i, row) in self.rows.iter().enumerate() {
            for &(j, v) in row {
                for c in 0..k {
                    out[(j, c)] += v * b[(i, c)];
                }
            }
        }
        out
    }
}

#[derive(Debug, Clone)]
pub struct SvdProjection {
    /// n × d scores, U·Σ.
    pub scores: DMatrix<f64>,
    pub singular_values: Vec<f64>,
    /// d × m right singular vectors.
    pub components: DMatrix<f64>,
    pub power_iterations: usize,
}

fn orthonormal(m: DMatrix<f64>) -> DMatrix<f64> {
    m.qr().q()
}

/// Rank-`d` truncated SVD of `x` (no centering).
pub fn project_svd(x: &SparseMatrix, d: usize, seed: u64) -> Result<SvdProjection, SplitError> {
    let (n, m) = (x.nrows(), x.ncols());
    if d == 0 || d > n.min(m) {
        return Err(SplitError::Degenerate(format!(
            "cannot take {d} components of a {n}x{m} matrix"
        )));
    }
    if x.rows.iter().flatten().all(|&(_, v)| v == 0.0) {
        return Err(SplitError::Degenerate("feature matrix is all zero".into()));
    }
    let l = (d + OVERSAMPLE).min(n).min(m);
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let omega = DMatrix::from_fn(m, l, |_, _| StandardNormal.sample(&mut rng));
    let mut q = orthonormal(x.mul(&omega));

    let mut prev: Option<Vec<f64>> = None;
    let mut iterations = 0;
    // convergence is tracked on the eigenvalues of the small l x l Gram
    // matrix; the full SVD of B runs once at the end
    let mut b = x.tmul(&q).transpose();
    loop {
        let gram = &b * b.transpose();
        let mut eig: Vec<f64> = gram.symmetric_eigenvalues().iter().map(|v| v.max(0.0).sqrt()).collect();
        eig.sort_by(|a, c| c.total_cmp(a));
        eig.truncate(d);
        let converged = prev.as_ref().is_some_and(|p: &Vec<f64>| {
            p.iter()
                .zip(&eig)
                .all(|(a, b)| (a - b).abs() <= TOLERANCE * b.abs().max(f64::MIN_POSITIVE))
        });
        if (converged && iterations >= MIN_POWER_ITERS) || iterations >= MAX_POWER_ITERS {
            break;
        }
        prev = Some(eig);
        let z = orthonormal(x.tmul(&q));
        q = orthonormal(x.mul(&z));
        b = x.tmul(&q).transpose();
        iterations += 1;
    }
    let (u_b, sigma, v_t) = {
        let svd = b.svd(true, true);
        let mut order: Vec<usize> = (0..svd.singular_values.len()).collect();
        order.sort_by(|&a, &c| svd.singular_values[c].total_cmp(&svd.singular_values[a]));
        let top: Vec<f64> = order[..d].iter().map(|&i| svd.singular_values[i]).collect();
        let u = svd.u.unwrap();
        let vt = svd.v_t.unwrap();
        let u_sel = DMatrix::from_fn(u.nrows(), d, |r, c| u[(r, order[c])]);
        let vt_sel = DMatrix::from_fn(d, vt.ncols(), |r, c| vt[(order[r], c)]);
        (u_sel, top, vt_sel)
    };

    let mut u = &q * u_b;
    let mut v_t = v_t;
    // sign convention: the largest-magnitude loading of each component is positive
    for c in 0..d {
        let row = v_t.row(c);
        let (mut best, mut best_abs) = (0.0, -1.0);
        for &v in row.iter() {
            if v.abs() > best_abs {
                best_abs = v.abs();
                best = v;
            }
        }
        if best < 0.0 {
            v_t.row_mut(c).neg_mut();
            u.column_mut(c).neg_mut();
        }
    }
    let scores = DMatrix::from_fn(n, d, |r, c| u[(r, c)] * sigma[c]);
    Ok(SvdProjection {
        scores,
        singular_values: sigma,
        components: v_t,
        power_iterations: iterations,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_rank_two_is_recovered() {
        let a = DMatrix::from_fn(20, 2, |i, j| ((i * 7 + j * 3) % 5) as f64 - 1.5);
        let b = DMatrix::from_fn(2, 12, |i, j| ((i * 5 + j * 11) % 7) as f64 - 2.0);
        let x = &a * &b;
        let p = project_svd(&SparseMatrix::from_dense(&x), 2, 1).unwrap();
        let recon = &p.scores * &p.components;
        assert!((recon - x).norm() <= 1e-6);
    }

    #[test]
    fn rank_one_rows_project_collinear() {
        let v = [1.0, 0.0, 2.0, 1.0, 0.0, 3.0];
        let x = DMatrix::from_fn(8, 6, |i, j| (i as f64 + 1.0) * v[j]);
        let p = project_svd(&SparseMatrix::from_dense(&x), 1, 3).unwrap();
        let s: Vec<f64> = (0..8).map(|i| p.scores[(i, 0)]).collect();
        for i in 0..8 {
            assert!((s[i] / s[0] - (i as f64 + 1.0)).abs() < 1e-9);
        }
    }

    /// Eigenvalues of a symmetric matrix by cyclic Jacobi rotations.
    fn jacobi_eigenvalues(mut a: Vec<Vec<f64>>) -> Vec<f64> {
        let n = a.len();
        for _ in 0..100 {
            let mut off = 0.0;
            for i in 0..n {
                for j in 0..n {
                    if i != j {
                        off += a[i][j] * a[i][j];
                    }
                }
            }
            if off < 1e-22 {
                break;
            }
            for p in 0..n {
                for q in p + 1..n {
                    if a[p][q].abs() < 1e-300 {
                        continue;
                    }
                    let theta = (a[q][q] - a[p][p]) / (2.0 * a[p][q]);
                    let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                    let t = if theta == 0.0 { 1.0 } else { t };
                    let c = 1.0 / (t * t + 1.0).sqrt();
                    let s = t * c;
                    for k in 0..n {
                        let (akp, akq) = (a[k][p], a[k][q]);
                        a[k][p] = c * akp - s * akq;
                        a[k][q] = s * akp + c * akq;
                    }
                    for k in 0..n {
                        let (apk, aqk) = (a[p][k], a[q][k]);
                        a[p][k] = c * apk - s * aqk;
                        a[q][k] = s * apk + c * aqk;
                    }
                }
            }
        }
        let mut ev: Vec<f64> = (0..n).map(|i| a[i][i]).collect();
        ev.sort_by(|x, y| y.total_cmp(x));
        ev
    }

    #[test]
    fn top_singular_values_match_dense_oracle() {
        use rand::Rng;
        let mut rng = ChaCha20Rng::seed_from_u64(17);
        let rows: Vec<Vec<usize>> = (0..50).map(|_| (0..30).filter(|_| rng.random::<f64>() < 0.3).collect()).collect();
        let x = SparseMatrix::from_binary_rows(30, &rows);
        let mut gram = vec![vec![0.0; 30]; 30];
        for r in &rows {
            for &i in r {
                for &j in r {
                    gram[i][j] += 1.0;
                }
            }
        }
        let want: Vec<f64> = jacobi_eigenvalues(gram).iter().take(2).map(|v| v.sqrt()).collect();
        let got = project_svd(&x, 2, 4).unwrap().singular_values;
        for (g, w) in got.iter().zip(&want) {
            assert!((g - w).abs() <= 1e-6 * w, "{g} vs {w}");
        }
    }

    #[test]
    fn zero_matrix_is_degenerate() {
        let x = SparseMatrix::from_binary_rows(4, &[vec![], vec![], vec![]]);
        assert!(matches!(project_svd(&x, 1, 0), Err(SplitError::Degenerate(_))));
    }

    #[test]
    fn same_seed_same_scores() {
        let rows: Vec<Vec<usize>> = (0..30).map(|i| (0..10).filter(|j| (i * j + i) % 3 == 0).collect()).collect();
        let x = SparseMatrix::from_binary_rows(10, &rows);
        let a = project_svd(&x, 3, 9).unwrap();
        let b = project_svd(&x, 3, 9).unwrap();
        assert_eq!(a.scores, b.scores);
    }
}
