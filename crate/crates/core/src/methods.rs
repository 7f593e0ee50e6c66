//! Fitting procedures behind a common interface, looked up by name.

use crate::covariance::update_mu_sigma;
use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::model::{matrix_rows, FitResult, Hyperparams};
use crate::rng;
use crate::saem::{fit_abslope, initialize};
use crate::scaling::initial_standardize;
use crate::slobe::fit_slobe;
use crate::slope::solve_slope;

pub trait Method: Send + Sync {
    fn name(&self) -> &'static str;
    fn description(&self) -> &'static str;
    fn fit(&self, data: &Dataset, hyper: &Hyperparams, seed: u64) -> Result<FitResult>;
}

pub struct Abslope;

impl Method for Abslope {
    fn name(&self) -> &'static str {
        "abslope"
    }

    fn description(&self) -> &'static str {
        "adaptive Bayesian SLOPE fitted by stochastic approximation EM with Gibbs sampling"
    }

    fn fit(&self, data: &Dataset, hyper: &Hyperparams, seed: u64) -> Result<FitResult> {
        fit_abslope(data, hyper, seed)
    }
}

pub struct Slobe;

impl Method for Slobe {
    fn name(&self) -> &'static str {
        "slobe"
    }

    fn description(&self) -> &'static str {
        "deterministic variant using conditional expectations instead of draws"
    }

    fn fit(&self, data: &Dataset, hyper: &Hyperparams, seed: u64) -> Result<FitResult> {
        fit_slobe(data, hyper, seed)
    }
}

/// Plain SLOPE on the mean-imputed design. The noise level is `sigma` when
/// given, otherwise the residual standard deviation of the cross-validated
/// LASSO used to start the EM methods.
pub struct SlopeBaseline {
    pub sigma: Option<f64>,
}

impl Method for SlopeBaseline {
    fn name(&self) -> &'static str {
        "slope"
    }

    fn description(&self) -> &'static str {
        "plain SLOPE with the BH sequence on mean-imputed data"
    }

    fn fit(&self, data: &Dataset, hyper: &Hyperparams, seed: u64) -> Result<FitResult> {
        let p = data.p();
        hyper.validate(p)?;
        let lambda = hyper.lambda_for(p)?;
        let (std, scaling) = initial_standardize(data)?;
        let sigma = match self.sigma {
            Some(s) => s,
            None => initialize(&std, hyper, &lambda, &mut rng::stream(seed, &[rng::tag::FOLDS]))?.sigma,
        };
        let sol = solve_slope(std.x(), std.y(), &lambda, sigma)?;
        let (mu, cov) = update_mu_sigma(std.x(), hyper.shrinkage.applies(std.n(), p))?;
        let gamma: Vec<u8> = sol.beta.iter().map(|b| u8::from(*b != 0.0)).collect();
        let support = gamma.iter().filter(|g| **g == 1).count();
        let rss = (std.y() - std.x() * &sol.beta).norm_squared();
        Ok(FitResult {
            method: self.name().to_string(),
            response: "y".to_string(),
            names: data.names().to_vec(),
            beta: sol.beta.iter().copied().collect(),
            inclusion: gamma.iter().map(|&g| f64::from(g)).collect(),
            gamma,
            sigma,
            theta: support as f64 / p as f64,
            c: 1.0,
            mu: mu.iter().copied().collect(),
            cov: matrix_rows(&cov),
            scaling,
            rss,
            converged: sol.converged,
            iterations: sol.iterations,
            trace: Vec::new(),
        })
    }
}

pub struct MethodRegistry {
    methods: Vec<Box<dyn Method>>,
}

impl MethodRegistry {
    pub fn empty() -> Self {
        Self { methods: Vec::new() }
    }

    /// Registers `method`, replacing any method with the same name.
    pub fn register(&mut self, method: Box<dyn Method>) {
        self.methods.retain(|m| m.name() != method.name());
        self.methods.push(method);
    }

    pub fn get(&self, name: &str) -> Result<&dyn Method> {
        self.methods
            .iter()
            .find(|m| m.name().eq_ignore_ascii_case(name))
            .map(|m| m.as_ref())
            .ok_or_else(|| Error::UnknownMethod(name.to_string()))
    }

    pub fn names(&self) -> Vec<&'static str> {
        self.methods.iter().map(|m| m.name()).collect()
    }
}

impl Default for MethodRegistry {
    fn default() -> Self {
        let mut r = Self::empty();
        r.register(Box::new(Abslope));
        r.register(Box::new(Slobe));
        r.register(Box::new(SlopeBaseline { sigma: None }));
        r
    }
}
