//! Deterministic variant of the EM loop: every latent draw is replaced by
//! its conditional expectation given the previous iterate.

use crate::data::{Dataset, MissingMask};
use crate::error::Result;
use crate::lambda::LambdaSequence;
use crate::model::{FitResult, Hyperparams, ModelState};
use crate::rng::StreamRng;
use crate::saem::{run_em, Latent, LatentStep};
use crate::sampler::{c_conditional, impute_rows, inclusion_probs, missing_conditional, open_unit, CovariateModel};
use crate::special::UnitTruncatedGamma;
use nalgebra::{DMatrix, DVector};

/// Inclusion probabilities `π_j`, ranks from the state's `Wβ`.
pub fn expected_gamma(state: &ModelState, lambda: &LambdaSequence) -> Vec<f64> {
    inclusion_probs(state, lambda)
}

/// `(a + Σ_j π_j) / (a + b + p)`.
pub fn expected_theta(gamma: &[f64], a: f64, b: f64, p: usize) -> f64 {
    (a + gamma.iter().sum::<f64>()) / (a + b + p as f64)
}

/// Mean of Gamma(shape, rate) truncated to `[0, 1]`.
pub fn truncated_gamma_mean(shape: f64, rate: f64) -> Result<f64> {
    Ok(UnitTruncatedGamma::new(shape, rate)?.mean())
}

/// Conditional mean of `c` with shape `1 + Σπ_j` and rate
/// `σ⁻¹ Σ_j |β_j| λ_{r(Wβ, j)} π_j`.
pub fn expected_c(
    gamma: &[f64],
    beta: &DVector<f64>,
    sigma: f64,
    lambda: &LambdaSequence,
    w: &DVector<f64>,
) -> Result<f64> {
    let (shape, rate) = c_conditional(gamma, beta, sigma, lambda, w);
    truncated_gamma_mean(shape, rate)
}

/// Conditional mean of a row's missing covariates.
pub fn expected_missing(
    row: &[f64],
    missing: &[usize],
    y_i: f64,
    beta: &DVector<f64>,
    sigma: f64,
    model: &CovariateModel,
) -> Result<DVector<f64>> {
    Ok(missing_conditional(row, missing, y_i, beta, sigma, model)?.mean())
}

/// Expectation step. Every quantity is computed from the previous state
/// (Jacobi order), with `θ` and `c` plugging in the fresh `π`.
pub struct ExpectationStep;

impl LatentStep for ExpectationStep {
    fn latent(
        &mut self,
        state: &ModelState,
        x: &DMatrix<f64>,
        y: &DVector<f64>,
        mask: &MissingMask,
        lambda: &LambdaSequence,
        hyper: &Hyperparams,
    ) -> Result<Latent> {
        let p = state.p();
        let gamma = expected_gamma(state, lambda);
        let theta = open_unit(expected_theta(&gamma, hyper.a, hyper.b, p));
        let c = expected_c(&gamma, &state.beta, state.sigma, lambda, &state.weights())?.clamp(f64::MIN_POSITIVE, 1.0);
        let mut x = x.clone();
        if !mask.is_empty() {
            let model = CovariateModel::new(state.mu.clone(), state.cov.clone())?;
            impute_rows(&mut x, y, mask, &state.beta, state.sigma, &model, None)?;
        }
        Ok(Latent { gamma, theta, c, x })
    }

    fn eta(&self, _hyper: &Hyperparams, _t: usize) -> f64 {
        1.0
    }

    fn may_stop(&self, _hyper: &Hyperparams, t: usize) -> bool {
        t > 1
    }

    fn selection(&self, state: &ModelState) -> (Vec<u8>, Vec<f64>) {
        let gamma = state.gamma.iter().map(|&g| u8::from(g > 0.5)).collect();
        (gamma, state.gamma.clone())
    }
}

/// Fits the model with conditional expectations in place of draws. The
/// seed only affects the cross-validation folds of the initial fit.
pub fn fit_slobe(data: &Dataset, hyper: &Hyperparams, seed: u64) -> Result<FitResult> {
    run_em(data, hyper, seed, "slobe", |_rng: StreamRng, _p| Box::new(ExpectationStep))
}
