//! Cross-validated LASSO by coordinate descent, used to start the EM loop.
//!
//! The objective is `(1/2n)‖y − Xβ‖² + α‖β‖₁` on a 20-point logarithmic grid
//! from `α_max = ‖Xᵀy‖_∞ / n` down to `0.01·α_max`, with 5-fold CV.

use crate::rng::StreamRng;
use nalgebra::{DMatrix, DVector};
use rand::seq::SliceRandom;

const GRID: usize = 20;
const FOLDS: usize = 5;

/// Scaled Gram system `(XᵀX/n, Xᵀy/n)` of a set of rows.
struct Gram {
    g: DMatrix<f64>,
    c: DVector<f64>,
}

impl Gram {
    fn new(x: &DMatrix<f64>, y: &DVector<f64>) -> Self {
        let n = x.nrows().max(1) as f64;
        Self { g: x.tr_mul(x) / n, c: x.tr_mul(y) / n }
    }
}

fn soft(z: f64, t: f64) -> f64 {
    if z > t {
        z - t
    } else if z < -t {
        z + t
    } else {
        0.0
    }
}

/// Coordinate descent from `beta` (warm start), in place.
fn descend(gram: &Gram, alpha: f64, beta: &mut DVector<f64>) {
    let p = beta.len();
    // grad[j] = (Gβ)_j
    let mut gb = &gram.g * &*beta;
    for _ in 0..1000 {
        let mut max_step: f64 = 0.0;
        for j in 0..p {
            let gjj = gram.g[(j, j)];
            if gjj <= 0.0 {
                continue;
            }
            let old = beta[j];
            let z = gram.c[j] - gb[j] + gjj * old;
            let new = soft(z, alpha) / gjj;
            let delta = new - old;
            if delta != 0.0 {
                beta[j] = new;
                gb.axpy(delta, &gram.g.column(j), 1.0);
                max_step = max_step.max(delta.abs());
            }
        }
        if max_step < 1e-9 {
            break;
        }
    }
}

fn grid(x: &DMatrix<f64>, y: &DVector<f64>) -> Vec<f64> {
    let alpha_max = x.tr_mul(y).amax() / x.nrows() as f64;
    (0..GRID)
        .map(|k| alpha_max * 0.01_f64.powf(k as f64 / (GRID - 1) as f64))
        .collect()
}

fn select_rows(m: &DMatrix<f64>, rows: &[usize]) -> DMatrix<f64> {
    DMatrix::from_fn(rows.len(), m.ncols(), |i, j| m[(rows[i], j)])
}

/// LASSO coefficients at the CV-selected penalty. Fold assignment is drawn
/// from `rng`.
pub fn lasso_cv(x: &DMatrix<f64>, y: &DVector<f64>, rng: &mut StreamRng) -> DVector<f64> {
    let (n, p) = x.shape();
    let alphas = grid(x, y);
    if alphas[0] <= 0.0 {
        return DVector::zeros(p);
    }
    let folds = FOLDS.min(n);
    let mut best = 0;
    if folds >= 2 {
        let mut perm: Vec<usize> = (0..n).collect();
        perm.shuffle(rng);
        let mut fold_of = vec![0; n];
        for (k, &i) in perm.iter().enumerate() {
            fold_of[i] = k % folds;
        }
        let mut cv_err = vec![0.0; GRID];
        for f in 0..folds {
            let train: Vec<usize> = (0..n).filter(|&i| fold_of[i] != f).collect();
            let test: Vec<usize> = (0..n).filter(|&i| fold_of[i] == f).collect();
            let xt = select_rows(x, &train);
            let yt = DVector::from_iterator(train.len(), train.iter().map(|&i| y[i]));
            let gram = Gram::new(&xt, &yt);
            let xv = select_rows(x, &test);
            let yv = DVector::from_iterator(test.len(), test.iter().map(|&i| y[i]));
            let mut beta = DVector::zeros(p);
            for (k, &alpha) in alphas.iter().enumerate() {
                descend(&gram, alpha, &mut beta);
                cv_err[k] += (&yv - &xv * &beta).norm_squared();
            }
        }
        best = (0..GRID).min_by(|&a, &b| cv_err[a].total_cmp(&cv_err[b])).unwrap_or(0);
    }
    let gram = Gram::new(x, y);
    let mut beta = DVector::zeros(p);
    for &alpha in &alphas[..=best] {
        descend(&gram, alpha, &mut beta);
    }
    beta
}
