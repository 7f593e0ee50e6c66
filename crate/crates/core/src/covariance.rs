//! Mean and covariance updates for the Gaussian covariate model.

use crate::error::{Error, Result};
use nalgebra::{DMatrix, DVector};

fn centered(x: &DMatrix<f64>) -> (DVector<f64>, DMatrix<f64>) {
    let n = x.nrows() as f64;
    let mu = DVector::from_iterator(x.ncols(), x.column_iter().map(|c| c.sum() / n));
    let mut xc = x.clone();
    for (j, mut col) in xc.column_iter_mut().enumerate() {
        col.add_scalar_mut(-mu[j]);
    }
    (mu, xc)
}

/// Column means and the maximum-likelihood covariance (divisor `n`).
pub fn empirical_moments(x: &DMatrix<f64>) -> Result<(DVector<f64>, DMatrix<f64>)> {
    if x.nrows() < 2 {
        return Err(Error::InvalidInput("covariance needs at least two rows".into()));
    }
    let (mu, xc) = centered(x);
    let s = xc.tr_mul(&xc) / x.nrows() as f64;
    Ok((mu, s))
}

/// Ledoit–Wolf estimator `ρ₁ I + ρ₂ S` shrinking the empirical covariance
/// towards a scaled identity. When every row is identical the target scale
/// `tr(S)/p` is zero and the identity is returned.
pub fn ledoit_wolf(x: &DMatrix<f64>) -> Result<(DVector<f64>, DMatrix<f64>)> {
    if x.nrows() < 2 {
        return Err(Error::InvalidInput("covariance needs at least two rows".into()));
    }
    let (n, p) = x.shape();
    let (mu, xc) = centered(x);
    let s = xc.tr_mul(&xc) / n as f64;
    let m = s.trace() / p as f64;
    if m <= 0.0 {
        return Ok((mu, DMatrix::identity(p, p)));
    }
    let mut target_gap = s.clone();
    for i in 0..p {
        target_gap[(i, i)] -= m;
    }
    let d2 = target_gap.norm_squared() / p as f64;
    if d2 <= 0.0 {
        return Ok((mu, DMatrix::identity(p, p) * m));
    }
    // (1/n²) Σ_i ‖x_i x_iᵀ − S‖²_F, expanded to avoid forming outer products.
    let s_fro = s.norm_squared();
    let xs = &xc * &s;
    let mut acc = 0.0;
    for i in 0..n {
        let row = xc.row(i);
        let sq = row.norm_squared();
        acc += sq * sq - 2.0 * row.dot(&xs.row(i)) + s_fro;
    }
    let b2 = (acc / (n * n) as f64 / p as f64).min(d2);
    let shrink = b2 / d2;
    let mut sigma = s * (1.0 - shrink);
    for i in 0..p {
        sigma[(i, i)] += shrink * m;
    }
    Ok((mu, sigma))
}

/// Maximum-likelihood (or shrunk) estimates of the covariate mean and
/// covariance on the imputed design.
pub fn update_mu_sigma(x: &DMatrix<f64>, shrink: bool) -> Result<(DVector<f64>, DMatrix<f64>)> {
    if shrink {
        ledoit_wolf(x)
    } else {
        empirical_moments(x)
    }
}
