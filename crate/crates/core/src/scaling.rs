//! Column standardization that stays consistent while imputations change.
//!
//! Covariates are centred and divided by `√n · s` (population standard
//! deviation `s`), so every column ends with mean 0 and unit ℓ2 norm. After
//! each imputation round the matrix is mapped back to raw units with the
//! previous statistics, the statistics are recomputed on the freshly
//! imputed values, and the matrix is standardized again.

use crate::data::Dataset;
use crate::error::{Error, Result};
use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalingInfo {
    /// Column means in raw units.
    pub m: Vec<f64>,
    /// Column (population) standard deviations in raw units.
    pub s: Vec<f64>,
    /// Mean of the raw response.
    pub y_mean: f64,
    /// Number of rows the statistics were computed on.
    pub n: usize,
}

impl ScalingInfo {
    fn denom(&self, j: usize) -> f64 {
        (self.n as f64).sqrt() * self.s[j]
    }

    pub fn to_standardized(&self, j: usize, raw: f64) -> f64 {
        (raw - self.m[j]) / self.denom(j)
    }

    pub fn to_raw(&self, j: usize, standardized: f64) -> f64 {
        standardized * self.denom(j) + self.m[j]
    }
}

fn column_label(names: Option<&[String]>, j: usize) -> String {
    names.and_then(|n| n.get(j).cloned()).unwrap_or_else(|| format!("column {}", j + 1))
}

/// Means and population standard deviations of each column.
fn column_moments(x: &DMatrix<f64>) -> (Vec<f64>, Vec<f64>) {
    let n = x.nrows() as f64;
    x.column_iter()
        .map(|col| {
            let mean = col.sum() / n;
            let var = col.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
            (mean, var.sqrt())
        })
        .unzip()
}

fn apply_standardization(x: &mut DMatrix<f64>, scaling: &ScalingInfo) {
    for j in 0..x.ncols() {
        let (m, d) = (scaling.m[j], scaling.denom(j));
        x.column_mut(j).apply(|v| *v = (*v - m) / d);
    }
}

fn check_sds(s: &[f64], names: Option<&[String]>) -> Result<()> {
    if let Some(j) = s.iter().position(|&sd| !(sd > 0.0 && sd.is_finite())) {
        return Err(Error::UnusableColumn {
            column: column_label(names, j),
            reason: "standard deviation is zero".into(),
        });
    }
    Ok(())
}

/// Centres and scales a complete matrix to mean 0 and unit ℓ2 column norm.
/// Returns the matrix together with the raw-unit means and standard deviations.
pub fn standardize_complete(x: &DMatrix<f64>) -> Result<(DMatrix<f64>, Vec<f64>, Vec<f64>)> {
    let (m, s) = column_moments(x);
    check_sds(&s, None)?;
    let scaling = ScalingInfo { m, s, y_mean: 0.0, n: x.nrows() };
    let mut out = x.clone();
    apply_standardization(&mut out, &scaling);
    Ok((out, scaling.m, scaling.s))
}

/// Mean-imputes missing covariates, standardizes every column and centres
/// the response.
pub fn initial_standardize(data: &Dataset) -> Result<(Dataset, ScalingInfo)> {
    let (n, p) = (data.n(), data.p());
    let mask = data.mask();
    let mut x = data.x().clone();
    for j in 0..p {
        let observed: Vec<f64> = (0..n).filter_map(|i| data.observed(i, j)).collect();
        let unusable = |reason: &str| Error::UnusableColumn {
            column: column_label(Some(data.names()), j),
            reason: reason.into(),
        };
        if observed.len() < 2 {
            return Err(unusable("fewer than two observed values"));
        }
        let mean = observed.iter().sum::<f64>() / observed.len() as f64;
        if observed.iter().all(|&v| v == observed[0]) {
            return Err(unusable("observed values are constant"));
        }
        for i in 0..n {
            if mask.is_missing(i, j) {
                x[(i, j)] = mean;
            }
        }
    }
    let (m, s) = column_moments(&x);
    check_sds(&s, Some(data.names()))?;
    let y_mean = data.y().mean();
    let scaling = ScalingInfo { m, s, y_mean, n };
    apply_standardization(&mut x, &scaling);
    let y: DVector<f64> = data.y().add_scalar(-y_mean);
    let out = Dataset::from_imputed(y, x, mask.clone(), data.names().to_vec(), true);
    Ok((out, scaling))
}

/// Maps a standardized, re-imputed matrix back to raw units using the
/// previous statistics, recomputes the statistics and standardizes again.
pub fn rescale_iteration(x_imputed: &DMatrix<f64>, scaling: &ScalingInfo) -> Result<(DMatrix<f64>, ScalingInfo)> {
    if x_imputed.ncols() != scaling.m.len() || x_imputed.nrows() != scaling.n {
        return Err(Error::Dimension(format!(
            "matrix is {}x{} but scaling describes {} rows and {} columns",
            x_imputed.nrows(),
            x_imputed.ncols(),
            scaling.n,
            scaling.m.len()
        )));
    }
    let mut raw = x_imputed.clone();
    for j in 0..raw.ncols() {
        let (m, d) = (scaling.m[j], scaling.denom(j));
        raw.column_mut(j).apply(|v| *v = *v * d + m);
    }
    let (m, s) = column_moments(&raw);
    check_sds(&s, None)?;
    let next = ScalingInfo { m, s, y_mean: scaling.y_mean, n: scaling.n };
    apply_standardization(&mut raw, &next);
    Ok((raw, next))
}
