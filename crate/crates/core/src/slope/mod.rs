//! Sorted-ℓ1 penalty, its proximal operator and the SLOPE solver.

mod prox;
mod solver;

pub use prox::{prox_sorted_l1, prox_sorted_l1_into};
pub use solver::{
    solve_slope, solve_slope_with, solve_weighted_slope, solve_weighted_slope_with, SlopeOptions,
    SlopeSolution,
};

use crate::error::{Error, Result};
use crate::lambda::LambdaSequence;

pub(crate) fn check_len(what: &str, got: usize, want: usize) -> Result<()> {
    if got != want {
        return Err(Error::Dimension(format!("{what} has length {got}, expected {want}")));
    }
    Ok(())
}

/// Indices ordered by decreasing magnitude; ties keep index order.
pub fn rank_order(v: &[f64]) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..v.len()).collect();
    idx.sort_by(|&a, &b| v[b].abs().total_cmp(&v[a].abs()));
    idx
}

/// `out[j] = λ_{r(v, j)}`: the penalty weight that coordinate `j` receives
/// given its magnitude rank in `v`.
pub fn rank_penalties(v: &[f64], lambda: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; v.len()];
    for (rank, j) in rank_order(v).into_iter().enumerate() {
        out[j] = lambda[rank];
    }
    out
}

/// `Σ_j λ_j |β|_(j)` with `|β|` sorted decreasingly (no σ factor).
pub fn sorted_l1_norm(beta: &[f64], lambda: &LambdaSequence) -> Result<f64> {
    check_len("beta", beta.len(), lambda.len())?;
    Ok(sorted_l1_unchecked(beta, lambda.as_slice()))
}

pub(crate) fn sorted_l1_unchecked(beta: &[f64], lambda: &[f64]) -> f64 {
    let mut mags: Vec<f64> = beta.iter().map(|b| b.abs()).collect();
    mags.sort_by(|a, b| b.total_cmp(a));
    mags.iter().zip(lambda).map(|(m, l)| m * l).sum()
}
