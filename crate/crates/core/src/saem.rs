//! Stochastic approximation EM for the adaptive Bayesian SLOPE model.
//!
//! Each iteration draws (or, for the expectation variant, averages) the
//! latent variables, re-standardizes the imputed design, maximizes the
//! complete-data objective block by block and moves the parameters a step
//! `η_t` towards that maximizer.

use crate::covariance::update_mu_sigma;
use crate::data::{Dataset, MissingMask};
use crate::error::{Error, Result};
use crate::lambda::LambdaSequence;
use crate::lasso::lasso_cv;
use crate::linalg::cholesky_jittered;
use crate::model::{matrix_rows, FitResult, Hyperparams, InitialC, ModelState, TraceRecord};
use crate::rng::{self, StreamRng};
use crate::sampler::{c_conditional, gibbs_sweep, open_unit};
use crate::scaling::{initial_standardize, rescale_iteration, ScalingInfo};
use crate::slope::{solve_weighted_slope_with, SlopeOptions};
use crate::special::UnitTruncatedGamma;
use nalgebra::{DMatrix, DVector};
use std::f64::consts::PI;

/// `1` during burn-in (`t ≤ t0`), `1/(t − t0)` afterwards.
pub fn step_size(t: usize, t0: usize) -> f64 {
    if t <= t0 {
        1.0
    } else {
        1.0 / (t - t0) as f64
    }
}

/// `P = Σ_j λ_{r(Wβ, j)} w_j |β_j|`
pub fn weighted_penalty(beta: &DVector<f64>, w: &DVector<f64>, lambda: &LambdaSequence) -> f64 {
    let wb = beta.component_mul(w);
    crate::slope::sorted_l1_unchecked(wb.as_slice(), lambda.as_slice())
}

/// Positive root of `nσ² − Pσ − RSS = 0`.
pub fn update_sigma(beta: &DVector<f64>, w: &DVector<f64>, lambda: &LambdaSequence, rss: f64, n: usize) -> f64 {
    sigma_root(weighted_penalty(beta, w, lambda), rss, n)
}

pub(crate) fn sigma_root(pen: f64, rss: f64, n: usize) -> f64 {
    let n = n as f64;
    (pen + (pen * pen + 4.0 * n * rss).sqrt()) / (2.0 * n)
}

/// Penalized complete-data log-likelihood of the state on an imputed
/// design: Gaussian covariate term summed over rows, regression term,
/// Bernoulli terms for γ and the weighted sorted-ℓ1 penalty.
pub fn complete_log_likelihood(
    state: &ModelState,
    x: &DMatrix<f64>,
    y: &DVector<f64>,
    lambda: &LambdaSequence,
) -> Result<f64> {
    let (n, p) = x.shape();
    if p != state.p() || y.len() != n || lambda.len() != p {
        return Err(Error::Dimension("state, design and response disagree".into()));
    }
    let chol = cholesky_jittered(&state.cov, &[], "covariate covariance")?;
    let log_det: f64 = 2.0 * chol.l().diagonal().iter().map(|d| d.ln()).sum::<f64>();
    let mut centred = x.clone();
    for (j, mut col) in centred.column_iter_mut().enumerate() {
        col.add_scalar_mut(-state.mu[j]);
    }
    // rows of L⁻¹ (x_i − μ)
    let solved = chol.l().solve_lower_triangular(&centred.transpose()).unwrap_or_else(|| DMatrix::zeros(p, n));
    let quad = solved.norm_squared();
    let covariate = -0.5 * n as f64 * ((2.0 * PI).ln() + log_det) - 0.5 * quad;

    let rss = (y - x * &state.beta).norm_squared();
    let regression = -(n as f64) * state.sigma.ln() - rss / (2.0 * state.sigma * state.sigma);
    let bernoulli: f64 = state
        .gamma
        .iter()
        .map(|g| g * state.theta.ln() + (1.0 - g) * (1.0 - state.theta).ln())
        .sum();
    let penalty = weighted_penalty(&state.beta, &state.weights(), lambda) / state.sigma;
    Ok(covariate + regression + bernoulli - penalty)
}

/// Parameters that receive the stochastic-approximation update.
#[derive(Debug, Clone, PartialEq)]
pub struct ParamBundle {
    pub beta: DVector<f64>,
    pub sigma: f64,
    pub mu: DVector<f64>,
    pub cov: DMatrix<f64>,
}

/// `ψ ← ψ_prev + η (ψ_mle − ψ_prev)` on every parameter.
pub fn sa_update(prev: &ParamBundle, mle: &ParamBundle, eta: f64) -> ParamBundle {
    if eta == 1.0 {
        return mle.clone();
    }
    if eta == 0.0 {
        return prev.clone();
    }
    ParamBundle {
        beta: &prev.beta + (&mle.beta - &prev.beta) * eta,
        sigma: prev.sigma + eta * (mle.sigma - prev.sigma),
        mu: &prev.mu + (&mle.mu - &prev.mu) * eta,
        cov: &prev.cov + (&mle.cov - &prev.cov) * eta,
    }
}

/// Starting state on standardized, mean-imputed data: cross-validated
/// LASSO coefficients, residual-based σ, and c, θ, γ derived from the
/// LASSO support.
pub fn initialize(
    data: &Dataset,
    hyper: &Hyperparams,
    lambda: &LambdaSequence,
    rng: &mut StreamRng,
) -> Result<ModelState> {
    let (n, p) = (data.n(), data.p());
    if n < 2 {
        return Err(Error::InvalidInput("at least two rows are required".into()));
    }
    let x = data.x();
    let y = data.y();
    let beta = lasso_cv(x, y, rng);
    let support = beta.iter().filter(|b| **b != 0.0).count();
    let sigma = (y - x * &beta).norm() / ((n - 1) as f64).sqrt();
    if !(sigma > 0.0) {
        return Err(Error::Degenerate("initial residual standard deviation is zero".into()));
    }
    let gamma: Vec<f64> = beta.iter().map(|b| if *b != 0.0 { 1.0 } else { 0.0 }).collect();
    let c = if support == 0 {
        1.0
    } else {
        let c = match hyper.initial_c {
            InitialC::Conditional => {
                let (shape, rate) = c_conditional(&gamma, &beta, sigma, lambda, &DVector::from_element(p, 1.0));
                UnitTruncatedGamma::new(shape, rate)?.mean()
            }
            InitialC::Ratio => {
                let mean_abs = beta.iter().map(|b| b.abs()).sum::<f64>() / (support + 1) as f64;
                sigma * lambda[0] / mean_abs
            }
        };
        if c > 0.0 && c.is_finite() {
            c.min(1.0)
        } else {
            1.0
        }
    };
    let theta = open_unit((support as f64 + hyper.a) / (p as f64 + hyper.b));
    let (mu, cov) = update_mu_sigma(x, hyper.shrinkage.applies(n, p))?;
    Ok(ModelState { beta, sigma, gamma, c, theta, mu, cov })
}

/// Latent-variable values produced by one simulation/expectation step.
#[derive(Debug, Clone)]
pub struct Latent {
    pub gamma: Vec<f64>,
    pub theta: f64,
    pub c: f64,
    pub x: DMatrix<f64>,
}

/// Strategy for the first half of an iteration: how the latent variables
/// are refreshed and which step sizes follow.
pub trait LatentStep {
    fn latent(
        &mut self,
        state: &ModelState,
        x: &DMatrix<f64>,
        y: &DVector<f64>,
        mask: &MissingMask,
        lambda: &LambdaSequence,
        hyper: &Hyperparams,
    ) -> Result<Latent>;

    fn eta(&self, hyper: &Hyperparams, t: usize) -> f64;

    /// Whether the stopping rule may fire at iteration `t`.
    fn may_stop(&self, hyper: &Hyperparams, t: usize) -> bool;

    /// Selected support and per-coordinate inclusion summary at the end.
    fn selection(&self, state: &ModelState) -> (Vec<u8>, Vec<f64>);

    fn record(&mut self, _hyper: &Hyperparams, _t: usize, _latent: &Latent) {}
}

/// Gibbs sampler step of the stochastic algorithm.
pub struct GibbsStep {
    rng: StreamRng,
    inclusion_sum: Vec<f64>,
    inclusion_count: usize,
}

impl GibbsStep {
    pub fn new(rng: StreamRng, p: usize) -> Self {
        Self { rng, inclusion_sum: vec![0.0; p], inclusion_count: 0 }
    }
}

impl LatentStep for GibbsStep {
    fn latent(
        &mut self,
        state: &ModelState,
        x: &DMatrix<f64>,
        y: &DVector<f64>,
        mask: &MissingMask,
        lambda: &LambdaSequence,
        hyper: &Hyperparams,
    ) -> Result<Latent> {
        let s = gibbs_sweep(state, x, y, mask, lambda, hyper, &mut self.rng)?;
        Ok(Latent { gamma: s.gamma, theta: s.theta, c: s.c, x: s.x })
    }

    fn eta(&self, hyper: &Hyperparams, t: usize) -> f64 {
        hyper.eta(t)
    }

    fn may_stop(&self, hyper: &Hyperparams, t: usize) -> bool {
        t > hyper.t0
    }

    fn record(&mut self, hyper: &Hyperparams, t: usize, latent: &Latent) {
        // Average over post-burn-in draws; restart once burn-in ends.
        if t == hyper.t0 + 1 {
            self.inclusion_sum.iter_mut().for_each(|v| *v = 0.0);
            self.inclusion_count = 0;
        }
        for (acc, g) in self.inclusion_sum.iter_mut().zip(&latent.gamma) {
            *acc += g;
        }
        self.inclusion_count += 1;
    }

    fn selection(&self, state: &ModelState) -> (Vec<u8>, Vec<f64>) {
        let gamma = state.gamma.iter().map(|&g| u8::from(g >= 0.5)).collect();
        let k = self.inclusion_count.max(1) as f64;
        (gamma, self.inclusion_sum.iter().map(|s| s / k).collect())
    }
}

/// Runs the EM loop with the given latent step. The returned fit carries
/// the final state, scaling and trace.
pub fn run_em(
    data: &Dataset,
    hyper: &Hyperparams,
    seed: u64,
    method: &str,
    make_step: impl FnOnce(StreamRng, usize) -> Box<dyn LatentStep>,
) -> Result<FitResult> {
    let p = data.p();
    hyper.validate(p)?;
    let lambda = hyper.lambda_for(p)?;
    let (std, mut scaling) = initial_standardize(data)?;
    let n = std.n();
    let shrink = hyper.shrinkage.applies(n, p);
    let mut state = initialize(&std, hyper, &lambda, &mut rng::stream(seed, &[rng::tag::FOLDS]))?;
    let mut step = make_step(rng::stream(seed, &[rng::tag::SWEEP]), p);
    let y = std.y().clone();
    let mask = std.mask().clone();
    let mut x = std.x().clone();
    let opts = SlopeOptions::default();
    let mut trace = Vec::new();
    let mut converged = false;
    let mut iterations = 0;

    for t in 1..=hyper.max_iter {
        iterations = t;
        let latent = step.latent(&state, &x, &y, &mask, &lambda, hyper)?;
        step.record(hyper, t, &latent);
        x = latent.x.clone();
        if !mask.is_empty() {
            let (rescaled, next) = rescale_iteration(&x, &scaling)?;
            x = rescaled;
            scaling = next;
        }

        let w = DVector::from_iterator(p, latent.gamma.iter().map(|g| 1.0 - (1.0 - latent.c) * g));
        let sol = solve_weighted_slope_with(&x, &y, &lambda, &w, state.sigma, Some(&state.beta), &opts)?;
        let rss = (&y - &x * &sol.beta).norm_squared();
        let sigma = update_sigma(&sol.beta, &w, &lambda, rss, n);
        let (mu, cov) = update_mu_sigma(&x, shrink)?;
        let mle = ParamBundle { beta: sol.beta, sigma, mu, cov };
        let prev = ParamBundle {
            beta: state.beta.clone(),
            sigma: state.sigma,
            mu: state.mu.clone(),
            cov: state.cov.clone(),
        };
        let eta = step.eta(hyper, t);
        let next = sa_update(&prev, &mle, eta);
        let change = (&next.beta - &prev.beta).norm_squared();
        state = ModelState {
            beta: next.beta,
            sigma: next.sigma,
            gamma: latent.gamma,
            c: latent.c,
            theta: latent.theta,
            mu: next.mu,
            cov: next.cov,
        };
        let objective = complete_log_likelihood(&state, &x, &y, &lambda).unwrap_or(f64::NAN);
        trace.push(TraceRecord {
            iteration: t,
            eta,
            beta: state.beta.iter().copied().collect(),
            sigma: state.sigma,
            theta: state.theta,
            c: state.c,
            support: state.beta.iter().filter(|b| **b != 0.0).count(),
            objective,
        });
        if step.may_stop(hyper, t) && change < hyper.tol {
            converged = true;
            break;
        }
    }

    let (gamma, inclusion) = step.selection(&state);
    let rss = (&y - &x * &state.beta).norm_squared();
    Ok(finish(method, data, state, gamma, inclusion, scaling, rss, converged, iterations, trace))
}

#[allow(clippy::too_many_arguments)]
fn finish(
    method: &str,
    data: &Dataset,
    state: ModelState,
    gamma: Vec<u8>,
    inclusion: Vec<f64>,
    scaling: ScalingInfo,
    rss: f64,
    converged: bool,
    iterations: usize,
    trace: Vec<TraceRecord>,
) -> FitResult {
    FitResult {
        method: method.to_string(),
        response: "y".to_string(),
        names: data.names().to_vec(),
        beta: state.beta.iter().copied().collect(),
        gamma,
        inclusion,
        sigma: state.sigma,
        theta: state.theta,
        c: state.c,
        mu: state.mu.iter().copied().collect(),
        cov: matrix_rows(&state.cov),
        scaling,
        rss,
        converged,
        iterations,
        trace,
    }
}

/// Fits the model with the Gibbs-sampling simulation step.
pub fn fit_abslope(data: &Dataset, hyper: &Hyperparams, seed: u64) -> Result<FitResult> {
    run_em(data, hyper, seed, "abslope", |rng, p| Box::new(GibbsStep::new(rng, p)))
}
