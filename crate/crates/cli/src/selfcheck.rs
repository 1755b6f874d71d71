//! Quick oracle suite: each check compares a library routine against a
//! brute-force reimplementation on seeded random inputs.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;

use qsarbench::chem::{canonical_smiles, parse_smiles, write_smiles};
use qsarbench::featurize::FeatureMatrix;
use qsarbench::learners::fit_ridge;
use qsarbench::metrics::{pr_auc, regression_metrics, roc_auc};

type Check = (&'static str, bool, String);

fn pair_count_auc(s: &[f64], y: &[f64]) -> f64 {
    let (mut num, mut den) = (0.0, 0.0);
    for i in 0..s.len() {
        for j in 0..s.len() {
            if y[i] > 0.5 && y[j] < 0.5 {
                den += 1.0;
                num += if s[i] > s[j] {
                    1.0
                } else if s[i] == s[j] {
                    0.5
                } else {
                    0.0
                };
            }
        }
    }
    num / den
}

fn staircase_ap(s: &[f64], y: &[f64]) -> f64 {
    let mut idx: Vec<usize> = (0..s.len()).collect();
    idx.sort_by(|&a, &b| s[b].total_cmp(&s[a]));
    let p = y.iter().filter(|&&v| v > 0.5).count() as f64;
    let mut tp = 0.0;
    let mut ap = 0.0;
    for (k, &i) in idx.iter().enumerate() {
        if y[i] > 0.5 {
            tp += 1.0;
            ap += tp / (k + 1) as f64;
        }
    }
    ap / p
}

fn labels(rng: &mut ChaCha20Rng, n: usize) -> Vec<f64> {
    let mut y: Vec<f64> = (0..n).map(|_| if rng.random::<f64>() < 0.3 { 1.0 } else { 0.0 }).collect();
    y[0] = 1.0;
    y[n - 1] = 0.0;
    y
}

fn roc_check() -> Check {
    let mut rng = ChaCha20Rng::seed_from_u64(1);
    let mut worst: f64 = 0.0;
    for _ in 0..200 {
        let n = rng.random_range(2..120);
        let y = labels(&mut rng, n);
        let s: Vec<f64> = (0..n).map(|_| rng.random_range(0..10) as f64).collect();
        worst = worst.max((roc_auc(&s, &y).unwrap() - pair_count_auc(&s, &y)).abs());
    }
    ("roc_auc vs pair counting", worst < 1e-12, format!("max diff {worst:.2e}"))
}

fn pr_check() -> Check {
    let mut rng = ChaCha20Rng::seed_from_u64(2);
    let mut worst: f64 = 0.0;
    for _ in 0..100 {
        let n = rng.random_range(2..80);
        let y = labels(&mut rng, n);
        let s: Vec<f64> = (0..n).map(|_| rng.random::<f64>()).collect();
        worst = worst.max((pr_auc(&s, &y).unwrap() - staircase_ap(&s, &y)).abs());
    }
    ("pr_auc vs staircase", worst < 1e-12, format!("max diff {worst:.2e}"))
}

fn regression_check() -> Check {
    let mut rng = ChaCha20Rng::seed_from_u64(3);
    let mut worst: f64 = 0.0;
    for _ in 0..100 {
        let n = rng.random_range(3..60);
        let a: Vec<f64> = (0..n).map(|_| rng.random_range(-5.0..5.0)).collect();
        let b: Vec<f64> = a.iter().map(|v| v + rng.random_range(-1.0..1.0)).collect();
        let r = regression_metrics(&a, &b);
        let mae: f64 = a.iter().zip(&b).map(|(x, y)| (x - y).abs()).sum::<f64>() / n as f64;
        let (ma, mb) = (a.iter().sum::<f64>() / n as f64, b.iter().sum::<f64>() / n as f64);
        let cov: f64 = a.iter().zip(&b).map(|(x, y)| (x - ma) * (y - mb)).sum();
        let va: f64 = a.iter().map(|x| (x - ma).powi(2)).sum();
        let vb: f64 = b.iter().map(|y| (y - mb).powi(2)).sum();
        let pearson = cov / (va * vb).sqrt();
        worst = worst.max((r.mae - mae).abs()).max((r.pearson.unwrap() - pearson).abs());
    }
    ("regression metrics vs naive", worst < 1e-12, format!("max diff {worst:.2e}"))
}

fn canonical_check() -> Check {
    let smiles = [
        "CC(=O)Oc1ccccc1C(=O)O",
        "CN1C=NC2=C1C(=O)N(C(=O)N2C)C",
        "O=[N+]([O-])c1ccc2ccccc2c1",
        "CCN(CC)CCCC(C)Nc1ccnc2cc(Cl)ccc12",
        "C[N+](C)(C)CC(=O)[O-]",
    ];
    let mut rng = ChaCha20Rng::seed_from_u64(4);
    let mut bad = Vec::new();
    for s in smiles {
        let m = parse_smiles(s).unwrap();
        let want = canonical_smiles(&m);
        for _ in 0..20 {
            let mut perm: Vec<usize> = (0..m.atom_count()).collect();
            perm.shuffle(&mut rng);
            let p = m.permuted(&perm);
            let ident: Vec<usize> = (0..p.atom_count()).collect();
            let text = write_smiles(&p, &ident);
            if canonical_smiles(&parse_smiles(&text).unwrap()) != want {
                bad.push(text);
            }
        }
    }
    ("canonical SMILES under atom permutation", bad.is_empty(), format!("{} mismatches", bad.len()))
}

fn solve(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Vec<f64> {
    let n = b.len();
    for c in 0..n {
        let p = (c..n).max_by(|&i, &j| a[i][c].abs().total_cmp(&a[j][c].abs())).unwrap();
        a.swap(c, p);
        b.swap(c, p);
        for r in 0..n {
            if r != c {
                let f = a[r][c] / a[c][c];
                for k in c..n {
                    a[r][k] -= f * a[c][k];
                }
                b[r] -= f * b[c];
            }
        }
    }
    (0..n).map(|i| b[i] / a[i][i]).collect()
}

fn ridge_check() -> Check {
    let mut rng = ChaCha20Rng::seed_from_u64(5);
    let (n, p, lambda) = (40, 6, 0.7);
    let rows: Vec<Vec<f64>> = (0..n).map(|_| (0..p).map(|_| rng.random_range(-1.0..1.0)).collect()).collect();
    let y: Vec<f64> = rows.iter().map(|r| r[0] - 2.0 * r[3] + rng.random_range(-0.1..0.1)).collect();
    let x = FeatureMatrix::from_rows("check", (0..p).map(|j| format!("x{j}")).collect(), rows.clone());
    let (coef, _) = fit_ridge(&x, &y, &vec![1.0; n], lambda, false);
    let mut a = vec![vec![0.0; p]; p];
    let mut b = vec![0.0; p];
    for (r, &t) in rows.iter().zip(&y) {
        for i in 0..p {
            b[i] += r[i] * t;
            for j in 0..p {
                a[i][j] += r[i] * r[j];
            }
        }
    }
    for (i, row) in a.iter_mut().enumerate() {
        row[i] += lambda;
    }
    let want = solve(a, b);
    let worst = coef.iter().zip(&want).map(|(u, v)| (u - v).abs()).fold(0.0, f64::max);
    ("ridge vs normal equations", worst < 1e-8, format!("max diff {worst:.2e}"))
}

fn prevalence_check() -> Check {
    let mut rng = ChaCha20Rng::seed_from_u64(6);
    let pi = 0.1;
    let mut total = 0.0;
    for _ in 0..10 {
        let y: Vec<f64> = (0..10_000).map(|_| if rng.random::<f64>() < pi { 1.0 } else { 0.0 }).collect();
        let s: Vec<f64> = (0..10_000).map(|_| rng.random::<f64>()).collect();
        total += pr_auc(&s, &y).unwrap();
    }
    let mean = total / 10.0;
    ("random-score PR-AUC near prevalence", (mean - pi).abs() < 0.02, format!("mean {mean:.4} at prevalence {pi}"))
}

pub fn run_all() -> Vec<Check> {
    vec![
        roc_check(),
        pr_check(),
        regression_check(),
        canonical_check(),
        ridge_check(),
        prevalence_check(),
    ]
}
