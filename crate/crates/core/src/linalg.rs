//! Small dense linear-algebra helpers.

use crate::error::{Error, Result};
use nalgebra::{Cholesky, DMatrix, Dyn};

/// Cholesky factorization retrying with the given diagonal jitters, in
/// order, when the plain factorization fails.
pub fn cholesky_jittered(a: &DMatrix<f64>, jitters: &[f64], what: &str) -> Result<Cholesky<f64, Dyn>> {
    if let Some(c) = a.clone().cholesky() {
        return Ok(c);
    }
    for &eps in jitters {
        let mut b = a.clone();
        for i in 0..b.nrows() {
            b[(i, i)] += eps;
        }
        if let Some(c) = b.cholesky() {
            return Ok(c);
        }
    }
    Err(Error::Degenerate(format!("{what} is not positive definite")))
}

/// Inverse of a symmetric positive-definite matrix.
pub fn spd_inverse(a: &DMatrix<f64>, what: &str) -> Result<DMatrix<f64>> {
    Ok(cholesky_jittered(a, &[1e-10, 1e-8], what)?.inverse())
}

/// Symmetrizes in place, averaging `a` with its transpose.
pub fn symmetrize(a: &mut DMatrix<f64>) {
    let n = a.nrows();
    for i in 0..n {
        for j in 0..i {
            let v = 0.5 * (a[(i, j)] + a[(j, i)]);
            a[(i, j)] = v;
            a[(j, i)] = v;
        }
    }
}
