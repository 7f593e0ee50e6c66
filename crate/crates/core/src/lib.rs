//! Sparse linear regression with missing covariates using an adaptive
//! Bayesian sorted-ℓ1 (SLOPE) model fitted by stochastic approximation EM
//! (`abslope`) or by its deterministic expectation variant (`slobe`).

pub mod cli;
pub mod data;
pub mod error;
pub mod lambda;
pub mod covariance;
pub mod lasso;
pub mod linalg;
pub mod methods;
pub mod model;
pub mod predict;
pub mod sampler;
pub mod saem;
pub mod rng;
pub mod scaling;
pub mod simulate;
pub mod slobe;
pub mod slope;
pub mod special;

pub use data::{Dataset, MissingMask, Table};
pub use error::{Error, Result};
pub use lambda::{bh_lambda, LambdaSequence};
pub use scaling::ScalingInfo;
