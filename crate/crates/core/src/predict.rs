//! Prediction for rows with missing covariates by averaging the linear
//! predictor over draws of the missing entries from the fitted covariate
//! model.

use crate::error::{Error, Result};
use crate::linalg::cholesky_jittered;
use crate::model::FitResult;
use crate::rng::{self, StreamRng};
use nalgebra::{Cholesky, DMatrix, DVector, Dyn};
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;

pub const DEFAULT_DRAWS: usize = 200;

/// Gaussian conditional of the missing coordinates given the observed ones,
/// on the standardized scale.
pub struct CovariateConditional {
    pub missing: Vec<usize>,
    pub mean: DVector<f64>,
    pub chol: Option<Cholesky<f64, Dyn>>,
}

impl CovariateConditional {
    pub fn new(z: &[Option<f64>], mu: &DVector<f64>, cov: &DMatrix<f64>) -> Result<Self> {
        let missing: Vec<usize> = (0..z.len()).filter(|&j| z[j].is_none()).collect();
        let observed: Vec<usize> = (0..z.len()).filter(|&j| z[j].is_some()).collect();
        if missing.is_empty() {
            return Ok(Self { missing, mean: DVector::zeros(0), chol: None });
        }
        let sub = |rows: &[usize], cols: &[usize]| DMatrix::from_fn(rows.len(), cols.len(), |a, b| cov[(rows[a], cols[b])]);
        let s_mm = sub(&missing, &missing);
        let mut mean = DVector::from_iterator(missing.len(), missing.iter().map(|&j| mu[j]));
        let mut schur = s_mm;
        if !observed.is_empty() {
            let s_oo = sub(&observed, &observed);
            let s_mo = sub(&missing, &observed);
            let chol_oo = cholesky_jittered(&s_oo, &[1e-10, 1e-8], "observed covariance block")?;
            let dev = DVector::from_iterator(observed.len(), observed.iter().map(|&j| z[j].unwrap_or(0.0) - mu[j]));
            mean += &s_mo * chol_oo.solve(&dev);
            schur -= &s_mo * chol_oo.solve(&s_mo.transpose());
        }
        let schur = (&schur + schur.transpose()) * 0.5;
        let chol = cholesky_jittered(&schur, &[1e-10, 1e-8], "conditional covariance")?;
        Ok(Self { missing, mean, chol: Some(chol) })
    }

    pub fn covariance(&self) -> DMatrix<f64> {
        self.chol.as_ref().map(|c| c.l() * c.l().transpose()).unwrap_or_else(|| DMatrix::zeros(0, 0))
    }

    pub fn sample(&self, rng: &mut StreamRng) -> DVector<f64> {
        let k = self.missing.len();
        let e = DVector::from_fn(k, |_, _| Distribution::<f64>::sample(&StandardNormal, rng));
        match &self.chol {
            Some(c) => &self.mean + c.l() * e,
            None => self.mean.clone(),
        }
    }
}

fn check_row(row: &[Option<f64>], fit: &FitResult) -> Result<()> {
    if row.len() != fit.beta.len() {
        return Err(Error::Dimension(format!("row has {} entries, fit has {} covariates", row.len(), fit.beta.len())));
    }
    if let Some(j) = row.iter().position(|v| v.is_some_and(|v| !v.is_finite())) {
        return Err(Error::InvalidInput(format!("non-finite value in column {}", j + 1)));
    }
    Ok(())
}

/// Prediction for one raw-scale row (`None` marks a missing entry) from the
/// average of `S = draws` imputations. Complete rows are exact.
pub fn predict_row(row: &[Option<f64>], fit: &FitResult, draws: usize, rng: &mut StreamRng) -> Result<f64> {
    check_row(row, fit)?;
    if draws == 0 {
        return Err(Error::Domain("the number of draws must be at least 1".into()));
    }
    let scaling = &fit.scaling;
    let z: Vec<Option<f64>> = row.iter().enumerate().map(|(j, v)| v.map(|v| scaling.to_standardized(j, v))).collect();
    let beta = &fit.beta;
    let known: f64 = z.iter().zip(beta).map(|(v, b)| v.map_or(0.0, |v| v * b)).sum();
    let missing: Vec<usize> = (0..z.len()).filter(|&j| z[j].is_none()).collect();
    if missing.iter().all(|&j| beta[j] == 0.0) {
        return Ok(known + scaling.y_mean);
    }
    let cond = CovariateConditional::new(&z, &fit.mu_vector(), &fit.cov_matrix()?)?;
    let total: f64 = (0..draws)
        .map(|_| {
            let draw = cond.sample(rng);
            cond.missing.iter().zip(draw.iter()).map(|(&j, v)| v * beta[j]).sum::<f64>()
        })
        .sum();
    Ok(known + total / draws as f64 + scaling.y_mean)
}

/// Predicts every row in parallel; row `i` uses its own stream derived from
/// `seed` and `i`.
pub fn predict_batch(rows: &[Vec<Option<f64>>], fit: &FitResult, draws: usize, seed: u64) -> Result<Vec<f64>> {
    rows.par_iter()
        .enumerate()
        .map(|(i, row)| predict_row(row, fit, draws, &mut rng::stream(seed, &[rng::tag::PREDICT, i as u64])))
        .collect()
}

/// Relative squared error `‖ŷ − y‖² / ‖y‖²`.
pub fn relative_error(pred: &[f64], truth: &[f64]) -> Result<f64> {
    if pred.len() != truth.len() {
        return Err(Error::Dimension(format!("{} predictions for {} responses", pred.len(), truth.len())));
    }
    let num: f64 = pred.iter().zip(truth).map(|(a, b)| (a - b).powi(2)).sum();
    let den: f64 = truth.iter().map(|b| b * b).sum();
    if den == 0.0 {
        return Err(Error::Degenerate("response has zero norm".into()));
    }
    Ok(num / den)
}
