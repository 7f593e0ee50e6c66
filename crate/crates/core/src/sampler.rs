//! Gibbs simulation step: conditional draws of the inclusion indicators,
//! the prior inclusion weight θ, the slab ratio c and the missing covariates.

use crate::data::MissingMask;
use crate::error::{Error, Result};
use crate::lambda::LambdaSequence;
use crate::linalg::{cholesky_jittered, spd_inverse};
use crate::model::{Hyperparams, ModelState};
use crate::rng::{self, StreamRng};
use crate::special::UnitTruncatedGamma;
use nalgebra::{Cholesky, DMatrix, DVector, Dyn};
use rand::{Rng, RngCore};
use rand_distr::{Beta, Distribution, Gamma, StandardNormal};
use rayon::prelude::*;

/// Posterior probability that coordinate `j` comes from the slab:
/// `θc e^{−cL} / ((1−θ) e^{−L} + θc e^{−cL})` with `L = λ_r |β_j| / σ`.
pub fn gamma_inclusion_prob(beta_j: f64, rank_penalty: f64, sigma: f64, c: f64, theta: f64) -> f64 {
    let l = rank_penalty * beta_j.abs() / sigma;
    // log of the slab/spike odds ratio excluding θ/(1−θ)
    let e = c.ln() + (1.0 - c) * l;
    let lt = theta.ln();
    let lf = (1.0 - theta).ln();
    // logistic(lt + e − lf), written to avoid overflow on either side
    let z = lt + e - lf;
    let p = if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let ez = z.exp();
        ez / (1.0 + ez)
    };
    // keep the result strictly inside (0, 1) when the logistic saturates
    p.clamp(f64::MIN_POSITIVE, 1.0 - f64::EPSILON / 2.0)
}

/// Inclusion probabilities of every coordinate, ranks taken from the
/// state's current `Wβ`.
pub fn inclusion_probs(state: &ModelState, lambda: &LambdaSequence) -> Vec<f64> {
    let pen = state.rank_penalties(lambda);
    (0..state.p())
        .map(|j| gamma_inclusion_prob(state.beta[j], pen[j], state.sigma, state.c, state.theta))
        .collect()
}

pub fn sample_gamma(state: &ModelState, lambda: &LambdaSequence, rng: &mut StreamRng) -> Vec<f64> {
    inclusion_probs(state, lambda)
        .into_iter()
        .map(|pr| if rng.random::<f64>() < pr { 1.0 } else { 0.0 })
        .collect()
}

/// Keeps a probability strictly inside (0, 1).
pub(crate) fn open_unit(x: f64) -> f64 {
    x.clamp(f64::EPSILON, 1.0 - f64::EPSILON)
}

/// Draw from `Beta(a + #γ, b + p − #γ)`.
pub fn sample_theta(gamma: &[f64], a: f64, b: f64, rng: &mut StreamRng) -> Result<f64> {
    let k: f64 = gamma.iter().sum();
    let p = gamma.len() as f64;
    let beta = Beta::new(a + k, b + p - k).map_err(|e| Error::Domain(format!("beta distribution: {e}")))?;
    Ok(open_unit(beta.sample(rng)))
}

/// Draw from Gamma(shape, rate) truncated to `[0, 1]`.
///
/// Inverse cdf on the regularized incomplete gamma, except when the
/// untruncated law already puts more than 99% of its mass on `[0, 1]`; then
/// plain rejection is cheaper.
pub fn sample_truncated_gamma(shape: f64, rate: f64, rng: &mut StreamRng) -> Result<f64> {
    if rate == 0.0 && shape == 1.0 {
        return Ok(rng.random::<f64>());
    }
    let law = UnitTruncatedGamma::new(shape, rate)?;
    if law.untruncated_mass() > 0.99 {
        let gamma = Gamma::new(shape, 1.0 / rate).map_err(|e| Error::Domain(format!("gamma distribution: {e}")))?;
        for _ in 0..1000 {
            let x: f64 = gamma.sample(rng);
            if x <= 1.0 {
                return Ok(x);
            }
        }
    }
    Ok(law.quantile(rng.random::<f64>()))
}

/// Shape and rate of the conditional of `c`; ranks use `w_prev ∘ β`.
pub(crate) fn c_conditional(
    gamma: &[f64],
    beta: &DVector<f64>,
    sigma: f64,
    lambda: &LambdaSequence,
    w_prev: &DVector<f64>,
) -> (f64, f64) {
    let wb = beta.component_mul(w_prev);
    let pen = crate::slope::rank_penalties(wb.as_slice(), lambda.as_slice());
    let shape = 1.0 + gamma.iter().sum::<f64>();
    let rate = (0..beta.len()).map(|j| beta[j].abs() * pen[j] * gamma[j]).sum::<f64>() / sigma;
    (shape, rate)
}

/// Draw of `c`, clamped to `(0, 1]`.
pub fn sample_c(
    gamma: &[f64],
    beta: &DVector<f64>,
    sigma: f64,
    lambda: &LambdaSequence,
    w_prev: &DVector<f64>,
    rng: &mut StreamRng,
) -> Result<f64> {
    let (shape, rate) = c_conditional(gamma, beta, sigma, lambda, w_prev);
    let c = sample_truncated_gamma(shape, rate, rng)?;
    Ok(c.clamp(f64::MIN_POSITIVE, 1.0))
}

/// Gaussian covariate model with its precision matrix, computed once per
/// iteration and shared by every row.
#[derive(Debug, Clone)]
pub struct CovariateModel {
    pub mu: DVector<f64>,
    pub cov: DMatrix<f64>,
    pub precision: DMatrix<f64>,
    /// `Σ⁻¹ μ`
    precision_mu: DVector<f64>,
}

impl CovariateModel {
    pub fn new(mu: DVector<f64>, cov: DMatrix<f64>) -> Result<Self> {
        if cov.nrows() != mu.len() || cov.ncols() != mu.len() {
            return Err(Error::Dimension(format!(
                "covariance is {}x{} for mean of length {}",
                cov.nrows(),
                cov.ncols(),
                mu.len()
            )));
        }
        let mut precision = spd_inverse(&cov, "covariate covariance")?;
        crate::linalg::symmetrize(&mut precision);
        let precision_mu = &precision * &mu;
        Ok(Self { mu, cov, precision, precision_mu })
    }
}

/// Conditional law of a row's missing covariates given its observed
/// covariates and response. With `z = τ ⊙ x_mis`, `z ~ N(μ̃, B⁻¹)`.
#[derive(Debug, Clone)]
pub struct MissingConditional {
    pub missing: Vec<usize>,
    pub mu_tilde: DVector<f64>,
    pub b: DMatrix<f64>,
    pub tau: DVector<f64>,
    chol: Cholesky<f64, Dyn>,
}

impl MissingConditional {
    /// `μ̃ ⊘ τ`
    pub fn mean(&self) -> DVector<f64> {
        self.mu_tilde.component_div(&self.tau)
    }

    /// `B⁻¹ ⊘ ττᵀ`
    pub fn covariance(&self) -> DMatrix<f64> {
        let inv = self.chol.inverse();
        let k = self.tau.len();
        DMatrix::from_fn(k, k, |i, j| inv[(i, j)] / (self.tau[i] * self.tau[j]))
    }
}

/// Builds the conditional of the cells `missing` of `row` (values at
/// those positions are ignored).
pub fn missing_conditional(
    row: &[f64],
    missing: &[usize],
    y_i: f64,
    beta: &DVector<f64>,
    sigma: f64,
    model: &CovariateModel,
) -> Result<MissingConditional> {
    let p = beta.len();
    if row.len() != p || model.mu.len() != p {
        return Err(Error::Dimension(format!("row of length {} for {p} coefficients", row.len())));
    }
    if missing.is_empty() {
        return Err(Error::InvalidInput("row has no missing covariates".into()));
    }
    let s = &model.precision;
    let mut is_missing = vec![false; p];
    for &j in missing {
        is_missing[j] = true;
    }
    let observed: Vec<usize> = (0..p).filter(|&k| !is_missing[k]).collect();
    let r = y_i - observed.iter().map(|&k| row[k] * beta[k]).sum::<f64>();
    let s2 = sigma * sigma;
    let k = missing.len();
    let tau = DVector::from_iterator(k, missing.iter().map(|&i| (s[(i, i)] + beta[i] * beta[i] / s2).sqrt()));
    let mut b = DMatrix::from_element(k, k, 1.0);
    for (a, &i) in missing.iter().enumerate() {
        for (c, &j) in missing.iter().enumerate().take(a) {
            let v = (beta[i] * beta[j] / s2 + s[(i, j)]) / (tau[a] * tau[c]);
            b[(a, c)] = v;
            b[(c, a)] = v;
        }
    }
    let rhs = DVector::from_iterator(
        k,
        missing.iter().enumerate().map(|(a, &i)| {
            let m_i = model.precision_mu[i];
            let u_i: f64 = observed.iter().map(|&q| row[q] * s[(i, q)]).sum();
            (r * beta[i] / s2 + m_i - u_i) / tau[a]
        }),
    );
    let chol = cholesky_jittered(&b, &[1e-10, 1e-8], "missing-covariate precision")?;
    let mu_tilde = chol.solve(&rhs);
    Ok(MissingConditional { missing: missing.to_vec(), mu_tilde, b, tau, chol })
}

/// Draws `x_mis = z ⊘ τ` with `z ~ N(μ̃, B⁻¹)`.
pub fn sample_missing(cond: &MissingConditional, rng: &mut StreamRng) -> DVector<f64> {
    let k = cond.tau.len();
    let eps = DVector::from_fn(k, |_, _| StandardNormal.sample(rng));
    // B = L Lᵀ, so L⁻ᵀ ε has covariance B⁻¹.
    let l = cond.chol.l();
    let dev = l.tr_solve_lower_triangular(&eps).unwrap_or_else(|| DVector::zeros(k));
    (&cond.mu_tilde + dev).component_div(&cond.tau)
}

/// Imputes every incomplete row of `x` in place, one independent stream per
/// row derived from `seed`. `draw = false` writes conditional means instead.
pub(crate) fn impute_rows(
    x: &mut DMatrix<f64>,
    y: &DVector<f64>,
    mask: &MissingMask,
    beta: &DVector<f64>,
    sigma: f64,
    model: &CovariateModel,
    seed: Option<u64>,
) -> Result<()> {
    let rows: Vec<usize> = (0..x.nrows()).filter(|&i| mask.row(i).iter().any(|&m| m)).collect();
    let draws: Vec<(usize, Vec<usize>, DVector<f64>)> = rows
        .par_iter()
        .map(|&i| {
            let missing = mask.missing_in_row(i);
            let row: Vec<f64> = x.row(i).iter().copied().collect();
            let cond = missing_conditional(&row, &missing, y[i], beta, sigma, model)?;
            let values = match seed {
                Some(s) => sample_missing(&cond, &mut rng::stream(s, &[rng::tag::ROW, i as u64])),
                None => cond.mean(),
            };
            Ok((i, missing, values))
        })
        .collect::<Result<_>>()?;
    for (i, missing, values) in draws {
        for (a, &j) in missing.iter().enumerate() {
            x[(i, j)] = values[a];
        }
    }
    Ok(())
}

#[derive(Debug, Clone)]
pub struct Sweep {
    pub gamma: Vec<f64>,
    pub theta: f64,
    pub c: f64,
    pub x: DMatrix<f64>,
}

/// One Gibbs sweep in the order γ, θ, c, x_mis. `x` is the current imputed
/// (standardized) design; rows without missing cells are copied unchanged.
pub fn gibbs_sweep(
    state: &ModelState,
    x: &DMatrix<f64>,
    y: &DVector<f64>,
    mask: &MissingMask,
    lambda: &LambdaSequence,
    hyper: &Hyperparams,
    rng: &mut StreamRng,
) -> Result<Sweep> {
    let gamma = sample_gamma(state, lambda, rng);
    let theta = sample_theta(&gamma, hyper.a, hyper.b, rng)?;
    let c = sample_c(&gamma, &state.beta, state.sigma, lambda, &state.weights(), rng)?;
    let mut x = x.clone();
    if !mask.is_empty() {
        let model = CovariateModel::new(state.mu.clone(), state.cov.clone())?;
        let seed = rng.next_u64();
        impute_rows(&mut x, y, mask, &state.beta, state.sigma, &model, Some(seed))?;
    }
    Ok(Sweep { gamma, theta, c, x })
}
