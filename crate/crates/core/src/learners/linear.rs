//! L2-regularized logistic regression (Newton-CG) and ridge regression.
//! Intercepts are never penalized.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::ensemble::sigmoid;
use crate::featurize::FeatureMatrix;

/// Per-column affine map applied before a linear model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scaler {
    pub mean: Vec<f64>,
    pub scale: Vec<f64>,
}

impl Scaler {
    /// Weighted-free column mean and population standard deviation; constant
    /// columns keep scale 1.
    pub fn fit(x: &FeatureMatrix) -> Scaler {
        let (n, p) = (x.rows(), x.cols());
        let mut mean = vec![0.0; p];
        for i in 0..n {
            for (m, v) in mean.iter_mut().zip(x.row(i)) {
                *m += v;
            }
        }
        mean.iter_mut().for_each(|m| *m /= n as f64);
        let mut var = vec![0.0; p];
        for i in 0..n {
            for ((s, v), m) in var.iter_mut().zip(x.row(i)).zip(&mean) {
                *s += (v - m) * (v - m);
            }
        }
        let scale = var
            .into_iter()
            .map(|s| {
                let sd = (s / n as f64).sqrt();
                if sd > 1e-12 {
                    sd
                } else {
                    1.0
                }
            })
            .collect();
        Scaler { mean, scale }
    }

    pub fn apply_row(&self, row: &[f64]) -> Vec<f64> {
        row.iter()
            .zip(&self.mean)
            .zip(&self.scale)
            .map(|((v, m), s)| (v - m) / s)
            .collect()
    }

    pub fn apply(&self, x: &FeatureMatrix) -> FeatureMatrix {
        let rows = (0..x.rows()).map(|i| self.apply_row(x.row(i))).collect();
        FeatureMatrix::from_rows(&x.tag, x.columns.clone(), rows)
    }
}

fn log1pexp(z: f64) -> f64 {
    if z > 0.0 {
        z + (-z).exp().ln_1p()
    } else {
        z.exp().ln_1p()
    }
}

/// Penalized weighted log-loss at `(coef, intercept)`.
pub fn logistic_objective(x: &FeatureMatrix, y: &[f64], w: &[f64], lambda: f64, coef: &[f64], intercept: f64) -> f64 {
    let mut f = 0.0;
    for i in 0..x.rows() {
        let z = dot(x.row(i), coef) + intercept;
        // -[y log σ(z) + (1-y) log(1-σ(z))] = log(1+e^z) - y z
        f += w[i] * (log1pexp(z) - y[i] * z);
    }
    f + 0.5 * lambda * coef.iter().map(|b| b * b).sum::<f64>()
}

/// Gradient of [`logistic_objective`]; the last entry is the intercept.
pub fn logistic_gradient(x: &FeatureMatrix, y: &[f64], w: &[f64], lambda: f64, coef: &[f64], intercept: f64) -> Vec<f64> {
    let p = x.cols();
    let mut g = vec![0.0; p + 1];
    for i in 0..x.rows() {
        let r = w[i] * (sigmoid(dot(x.row(i), coef) + intercept) - y[i]);
        for (gj, v) in g.iter_mut().zip(x.row(i)) {
            *gj += r * v;
        }
        g[p] += r;
    }
    for j in 0..p {
        g[j] += lambda * coef[j];
    }
    g
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

pub struct LogisticFit {
    pub coef: Vec<f64>,
    pub intercept: f64,
    pub iterations: usize,
    pub converged: bool,
}

/// Newton-CG with Hessian-vector products and Armijo backtracking.
pub fn fit_logistic(x: &FeatureMatrix, y: &[f64], w: &[f64], lambda: f64, tol: f64, max_iter: usize) -> LogisticFit {
    let (n, p) = (x.rows(), x.cols());
    let mut coef = vec![0.0; p];
    let mut intercept = 0.0;
    let mut iterations = 0;
    let mut converged = false;
    while iterations < max_iter {
        let g = logistic_gradient(x, y, w, lambda, &coef, intercept);
        let gnorm = norm(&g);
        if gnorm <= tol {
            converged = true;
            break;
        }
        iterations += 1;
        let h: Vec<f64> = (0..n)
            .map(|i| {
                let s = sigmoid(dot(x.row(i), &coef) + intercept);
                w[i] * s * (1.0 - s)
            })
            .collect();
        let hess_vec = |v: &[f64]| -> Vec<f64> {
            let mut out = vec![0.0; p + 1];
            for i in 0..n {
                let row = x.row(i);
                let t = h[i] * (dot(row, &v[..p]) + v[p]);
                for (o, xv) in out.iter_mut().zip(row) {
                    *o += t * xv;
                }
                out[p] += t;
            }
            for j in 0..p {
                out[j] += lambda * v[j];
            }
            out
        };
        // conjugate gradient on H d = -g
        let cg_tol = (0.5f64).min(gnorm.sqrt()) * gnorm;
        let mut d = vec![0.0; p + 1];
        let mut r: Vec<f64> = g.iter().map(|v| -v).collect();
        let mut q = r.clone();
        let mut rr = dot(&r, &r);
        for _ in 0..(2 * (p + 1)).max(20) {
            if rr.sqrt() <= cg_tol {
                break;
            }
            let hq = hess_vec(&q);
            let curv = dot(&q, &hq);
            if curv <= 0.0 {
                break;
            }
            let alpha = rr / curv;
            for j in 0..=p {
                d[j] += alpha * q[j];
                r[j] -= alpha * hq[j];
            }
            let rr_new = dot(&r, &r);
            let beta = rr_new / rr;
            for j in 0..=p {
                q[j] = r[j] + beta * q[j];
            }
            rr = rr_new;
        }
        if d.iter().all(|v| *v == 0.0) {
            d = g.iter().map(|v| -v).collect();
        }
        let f0 = logistic_objective(x, y, w, lambda, &coef, intercept);
        let slope = dot(&g, &d);
        let mut step = 1.0;
        loop {
            let c: Vec<f64> = coef.iter().zip(&d).map(|(b, s)| b + step * s).collect();
            let b0 = intercept + step * d[p];
            let f = logistic_objective(x, y, w, lambda, &c, b0);
            if f <= f0 + 1e-4 * step * slope || step < 1e-12 {
                coef = c;
                intercept = b0;
                break;
            }
            step *= 0.5;
        }
    }
    if !converged {
        converged = norm(&logistic_gradient(x, y, w, lambda, &coef, intercept)) <= tol;
    }
    LogisticFit {
        coef,
        intercept,
        iterations,
        converged,
    }
}

pub fn predict_logistic(coef: &[f64], intercept: f64, row: &[f64]) -> f64 {
    sigmoid(dot(row, coef) + intercept)
}

/// Weighted ridge: minimizes Σ w (y - xβ - b)² + λ‖β‖². Uses the primal
/// normal equations when p ≤ n and the dual form otherwise.
pub fn fit_ridge(x: &FeatureMatrix, y: &[f64], w: &[f64], lambda: f64, fit_intercept: bool) -> (Vec<f64>, f64) {
    let (n, p) = (x.rows(), x.cols());
    let wsum: f64 = w.iter().sum();
    let (xbar, ybar) = if fit_intercept && wsum > 0.0 {
        let mut xb = vec![0.0; p];
        for i in 0..n {
            for (m, v) in xb.iter_mut().zip(x.row(i)) {
                *m += w[i] * v;
            }
        }
        xb.iter_mut().for_each(|m| *m /= wsum);
        (xb, w.iter().zip(y).map(|(a, b)| a * b).sum::<f64>() / wsum)
    } else {
        (vec![0.0; p], 0.0)
    };
    // rows scaled by sqrt(w) after centering
    let xs = DMatrix::from_fn(n, p, |i, j| w[i].sqrt() * (x.get(i, j) - xbar[j]));
    let ys = DVector::from_fn(n, |i, _| w[i].sqrt() * (y[i] - ybar));
    let beta = if p <= n {
        let a = xs.transpose() * &xs + DMatrix::identity(p, p) * lambda;
        let b = xs.transpose() * &ys;
        solve_spd(a, b)
    } else {
        let k = &xs * xs.transpose() + DMatrix::identity(n, n) * lambda;
        let alpha = solve_spd(k, ys);
        xs.transpose() * alpha
    };
    let coef: Vec<f64> = beta.iter().copied().collect();
    let intercept = ybar - dot(&xbar, &coef);
    (coef, intercept)
}

fn solve_spd(a: DMatrix<f64>, b: DVector<f64>) -> DVector<f64> {
    match a.clone().cholesky() {
        Some(c) => c.solve(&b),
        None => a
            .lu()
            .solve(&b)
            .unwrap_or_else(|| DVector::zeros(b.len())),
    }
}

pub fn predict_linear(coef: &[f64], intercept: f64, row: &[f64]) -> f64 {
    dot(row, coef) + intercept
}
