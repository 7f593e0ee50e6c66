//! ADMM for `min_β ½‖y − Xβ‖² + σ Σ_j λ_j |β|_(j)`.
//!
//! Splitting `β = u` gives a ridge-type linear system in the first block
//! (factorized once per penalty parameter ρ) and a sorted-ℓ1 prox in the
//! second. ρ is doubled or halved when the primal and dual residuals drift
//! more than a factor 10 apart.

use super::{check_len, prox_sorted_l1_into, sorted_l1_unchecked};
use crate::error::{Error, Result};
use crate::lambda::LambdaSequence;
use nalgebra::{DMatrix, DVector};

#[derive(Debug, Clone)]
pub struct SlopeOptions {
    /// Residual tolerance per coordinate; both residuals must fall below `tol·√p`.
    pub tol: f64,
    pub max_iter: usize,
    /// Initial ADMM penalty parameter.
    pub rho: f64,
    /// Keep the objective of every iterate in [`SlopeSolution::history`].
    pub record_history: bool,
}

impl Default for SlopeOptions {
    fn default() -> Self {
        Self { tol: 1e-6, max_iter: 5000, rho: 1.0, record_history: false }
    }
}

#[derive(Debug, Clone)]
pub struct SlopeSolution {
    pub beta: DVector<f64>,
    /// `½‖y − Xβ‖² + σ Σ λ_j |β|_(j)` at `beta`; in the weighted problem the
    /// penalty is taken on `Wβ`.
    pub objective: f64,
    pub iterations: usize,
    pub converged: bool,
    pub history: Vec<f64>,
}

fn validate(x: &DMatrix<f64>, y: &DVector<f64>, lambda: &LambdaSequence, sigma: f64) -> Result<()> {
    check_len("y", y.len(), x.nrows())?;
    check_len("lambda", lambda.len(), x.ncols())?;
    if !(sigma > 0.0 && sigma.is_finite()) {
        return Err(Error::Domain(format!("sigma must be positive and finite, got {sigma}")));
    }
    if x.iter().chain(y.iter()).any(|v| !v.is_finite()) {
        return Err(Error::InvalidInput("design or response contains non-finite values".into()));
    }
    Ok(())
}

fn objective(x: &DMatrix<f64>, y: &DVector<f64>, beta: &DVector<f64>, lambda: &[f64], sigma: f64) -> f64 {
    let r = y - x * beta;
    0.5 * r.norm_squared() + sigma * sorted_l1_unchecked(beta.as_slice(), lambda)
}

pub fn solve_slope(x: &DMatrix<f64>, y: &DVector<f64>, lambda: &LambdaSequence, sigma: f64) -> Result<SlopeSolution> {
    solve_slope_with(x, y, lambda, sigma, None, &SlopeOptions::default())
}

pub fn solve_slope_with(
    x: &DMatrix<f64>,
    y: &DVector<f64>,
    lambda: &LambdaSequence,
    sigma: f64,
    warm: Option<&DVector<f64>>,
    opts: &SlopeOptions,
) -> Result<SlopeSolution> {
    validate(x, y, lambda, sigma)?;
    let p = x.ncols();
    if let Some(w) = warm {
        check_len("warm start", w.len(), p)?;
    }
    let lam = lambda.as_slice();
    let gram = x.tr_mul(x);
    let xty = x.tr_mul(y);
    let eps = opts.tol * (p as f64).sqrt();

    let factor = |rho: f64| -> Result<nalgebra::Cholesky<f64, nalgebra::Dyn>> {
        let mut a = gram.clone();
        for i in 0..p {
            a[(i, i)] += rho;
        }
        a.cholesky()
            .ok_or_else(|| Error::Degenerate("ADMM system matrix is not positive definite".into()))
    };

    let mut rho = opts.rho;
    let mut chol = factor(rho)?;
    let mut u = warm.cloned().unwrap_or_else(|| DVector::zeros(p));
    let mut v = DVector::<f64>::zeros(p);
    let mut best = u.clone();
    let mut best_obj = objective(x, y, &u, lam, sigma);
    let mut history = Vec::new();
    let mut z_plus = vec![0.0; p];
    let mut converged = false;
    let mut iterations = 0;

    for it in 1..=opts.max_iter {
        iterations = it;
        let z = chol.solve(&(&xty + (&u - &v) * rho));
        for i in 0..p {
            z_plus[i] = z[i] + v[i];
        }
        let u_old = std::mem::replace(&mut u, DVector::zeros(p));
        prox_sorted_l1_into(&z_plus, lam, sigma / rho, u.as_mut_slice());
        let primal = &z - &u;
        v += &primal;
        let r_norm = primal.norm();
        let s_norm = rho * (&u - &u_old).norm();

        let obj = objective(x, y, &u, lam, sigma);
        if opts.record_history {
            history.push(obj);
        }
        if obj < best_obj {
            best_obj = obj;
            best.copy_from(&u);
        }
        if r_norm < eps && s_norm < eps {
            converged = true;
            break;
        }
        if r_norm > 10.0 * s_norm {
            rho *= 2.0;
            v /= 2.0;
            chol = factor(rho)?;
        } else if s_norm > 10.0 * r_norm {
            rho /= 2.0;
            v *= 2.0;
            chol = factor(rho)?;
        }
    }
    Ok(SlopeSolution { beta: best, objective: best_obj, iterations, converged, history })
}

/// Minimizes `½‖y − Xβ‖² + σ Σ_j w_j |β_j| λ_{r(Wβ, j)}` by solving plain
/// SLOPE on `X W⁻¹` and mapping the solution back with `β = W⁻¹ z`.
pub fn solve_weighted_slope(
    x: &DMatrix<f64>,
    y: &DVector<f64>,
    lambda: &LambdaSequence,
    w: &DVector<f64>,
    sigma: f64,
) -> Result<SlopeSolution> {
    solve_weighted_slope_with(x, y, lambda, w, sigma, None, &SlopeOptions::default())
}

pub fn solve_weighted_slope_with(
    x: &DMatrix<f64>,
    y: &DVector<f64>,
    lambda: &LambdaSequence,
    w: &DVector<f64>,
    sigma: f64,
    warm: Option<&DVector<f64>>,
    opts: &SlopeOptions,
) -> Result<SlopeSolution> {
    check_len("w", w.len(), x.ncols())?;
    if let Some(bad) = w.iter().find(|&&wj| !(wj > 0.0 && wj <= 1.0)) {
        return Err(Error::Domain(format!("weights must lie in (0, 1], got {bad}")));
    }
    let mut xw = x.clone();
    for (j, mut col) in xw.column_iter_mut().enumerate() {
        col /= w[j];
    }
    let warm_z = warm.map(|b| b.component_mul(w));
    let mut sol = solve_slope_with(&xw, y, lambda, sigma, warm_z.as_ref(), opts)?;
    sol.beta.component_div_assign(w);
    Ok(sol)
}
