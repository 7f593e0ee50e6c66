//! Hyperparameters, the latent/parameter state and fit results.

use crate::error::{Error, Result};
use crate::lambda::LambdaSequence;
use crate::scaling::ScalingInfo;
use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

/// Step sizes of the stochastic-approximation update.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum StepSchedule {
    /// `η_t = 1` for `t ≤ t0`, then `1 / (t − t0)`.
    UnitThenHarmonic,
    /// `η_t = 1` throughout.
    Unit,
}

/// When the covariance update uses Ledoit–Wolf shrinkage.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Shrinkage {
    /// Shrink whenever `p > n / 2`.
    Auto,
    Always,
    Never,
}

/// Starting value of `c`, given the LASSO start `β⁰`, `σ⁰` and support `S`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum InitialC {
    /// Mean of the truncated-Gamma conditional of `c` with `γ = 1(β⁰ ≠ 0)`
    /// and unit weights.
    Conditional,
    /// `min{σ⁰ λ₁ (|S| + 1) / Σ|β⁰|, 1}`.
    Ratio,
}

impl Shrinkage {
    pub fn applies(self, n: usize, p: usize) -> bool {
        match self {
            Shrinkage::Auto => 2 * p > n,
            Shrinkage::Always => true,
            Shrinkage::Never => false,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Hyperparams {
    /// Target FDR level of the BH penalty sequence.
    pub q: f64,
    /// Beta(a, b) prior on θ.
    pub a: f64,
    pub b: f64,
    pub t0: usize,
    pub max_iter: usize,
    pub tol: f64,
    pub step_schedule: StepSchedule,
    pub shrinkage: Shrinkage,
    pub initial_c: InitialC,
    /// Replaces the BH sequence when set.
    pub lambda: Option<LambdaSequence>,
}

impl Hyperparams {
    /// Defaults for `p` covariates: `q = 0.1`, `a = 2/p`, `b = 1 − 2/p`,
    /// `t0 = 20`, 500 iterations, tolerance `1e-6`. For `p ≤ 2` the formula
    /// for `b` is not positive and `a = 1, b = p` is used instead.
    pub fn defaults_for(p: usize) -> Self {
        let (a, b) = if p > 2 { (2.0 / p as f64, 1.0 - 2.0 / p as f64) } else { (1.0, p.max(1) as f64) };
        Self {
            q: 0.1,
            a,
            b,
            t0: 20,
            max_iter: 500,
            tol: 1e-6,
            step_schedule: StepSchedule::UnitThenHarmonic,
            shrinkage: Shrinkage::Auto,
            initial_c: InitialC::Conditional,
            lambda: None,
        }
    }

    pub fn validate(&self, p: usize) -> Result<()> {
        let bad = |msg: String| Err(Error::Domain(msg));
        if !(self.q > 0.0 && self.q < 1.0) {
            return bad(format!("q must lie in (0, 1), got {}", self.q));
        }
        if !(self.a > 0.0 && self.a.is_finite() && self.b > 0.0 && self.b.is_finite()) {
            return bad(format!("a and b must be positive, got a={}, b={}", self.a, self.b));
        }
        if self.t0 < 1 {
            return bad("t0 must be at least 1".into());
        }
        if !(self.tol > 0.0) {
            return bad(format!("tol must be positive, got {}", self.tol));
        }
        if self.max_iter < 1 {
            return bad("max_iter must be at least 1".into());
        }
        if let Some(l) = &self.lambda {
            if l.len() != p {
                return Err(Error::Dimension(format!("lambda has length {} for {p} covariates", l.len())));
            }
        }
        Ok(())
    }

    pub fn lambda_for(&self, p: usize) -> Result<LambdaSequence> {
        match &self.lambda {
            Some(l) => Ok(l.clone()),
            None => LambdaSequence::benjamini_hochberg(p, self.q),
        }
    }

    pub fn eta(&self, t: usize) -> f64 {
        match self.step_schedule {
            StepSchedule::UnitThenHarmonic => crate::saem::step_size(t, self.t0),
            StepSchedule::Unit => 1.0,
        }
    }
}

/// Parameters and latent variables carried between iterations.
///
/// `gamma` holds 0/1 indicators for the sampler and inclusion probabilities
/// for the expectation variant; the weights are `w_j = 1 − (1 − c) γ_j`
/// in both cases.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelState {
    pub beta: DVector<f64>,
    pub sigma: f64,
    pub gamma: Vec<f64>,
    pub c: f64,
    pub theta: f64,
    pub mu: DVector<f64>,
    pub cov: DMatrix<f64>,
}

impl ModelState {
    pub fn p(&self) -> usize {
        self.beta.len()
    }

    pub fn weights(&self) -> DVector<f64> {
        DVector::from_iterator(self.p(), self.gamma.iter().map(|g| 1.0 - (1.0 - self.c) * g))
    }

    /// `λ_{r(Wβ, j)}` for each coordinate.
    pub fn rank_penalties(&self, lambda: &LambdaSequence) -> Vec<f64> {
        let wb = self.beta.component_mul(&self.weights());
        crate::slope::rank_penalties(wb.as_slice(), lambda.as_slice())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceRecord {
    pub iteration: usize,
    pub eta: f64,
    pub beta: Vec<f64>,
    pub sigma: f64,
    pub theta: f64,
    pub c: f64,
    pub support: usize,
    /// Penalized complete-data log-likelihood after the update.
    pub objective: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitResult {
    pub method: String,
    pub response: String,
    pub names: Vec<String>,
    /// Coefficients on the standardized covariate scale.
    pub beta: Vec<f64>,
    /// Selected support.
    pub gamma: Vec<u8>,
    /// Inclusion frequency (sampler) or probability (expectation variant).
    pub inclusion: Vec<f64>,
    pub sigma: f64,
    pub theta: f64,
    pub c: f64,
    /// Mean and covariance of the standardized covariates.
    pub mu: Vec<f64>,
    pub cov: Vec<Vec<f64>>,
    pub scaling: ScalingInfo,
    /// Residual sum of squares on the final imputed design.
    pub rss: f64,
    pub converged: bool,
    pub iterations: usize,
    #[serde(skip)]
    pub trace: Vec<TraceRecord>,
}

impl FitResult {
    pub fn beta_vector(&self) -> DVector<f64> {
        DVector::from_column_slice(&self.beta)
    }

    pub fn mu_vector(&self) -> DVector<f64> {
        DVector::from_column_slice(&self.mu)
    }

    pub fn cov_matrix(&self) -> Result<DMatrix<f64>> {
        let p = self.mu.len();
        if self.cov.len() != p || self.cov.iter().any(|r| r.len() != p) {
            return Err(Error::Schema(format!("covariance is not {p}x{p}")));
        }
        Ok(DMatrix::from_fn(p, p, |i, j| self.cov[i][j]))
    }

    pub fn selected(&self) -> Vec<bool> {
        self.gamma.iter().map(|&g| g == 1).collect()
    }
}

pub fn matrix_rows(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    m.row_iter().map(|r| r.iter().copied().collect()).collect()
}
