use crate::error::{Error, Result};
use crate::special::normal_quantile;
use serde::{Deserialize, Serialize};

/// Penalty weights `λ_1 ≥ λ_2 ≥ … ≥ λ_p ≥ 0` of the sorted-ℓ1 norm.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct LambdaSequence(Vec<f64>);

impl LambdaSequence {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if let Some(bad) = values.iter().find(|v| !v.is_finite()) {
            return Err(Error::InvalidInput(format!("lambda value {bad} is not finite")));
        }
        if let Some(w) = values.windows(2).position(|w| w[0] < w[1]) {
            return Err(Error::InvalidInput(format!(
                "lambda must be non-increasing: λ[{w}]={} < λ[{}]={}",
                values[w],
                w + 1,
                values[w + 1]
            )));
        }
        if values.last().is_some_and(|&v| v < 0.0) {
            return Err(Error::InvalidInput("lambda must be nonnegative".into()));
        }
        Ok(Self(values))
    }

    pub fn zeros(p: usize) -> Self {
        Self(vec![0.0; p])
    }

    /// Constant sequence, i.e. the plain LASSO penalty.
    pub fn constant(p: usize, value: f64) -> Result<Self> {
        Self::new(vec![value; p])
    }

    /// Benjamini–Hochberg style sequence `λ_j = Φ⁻¹(1 − j q / (2p))`.
    pub fn benjamini_hochberg(p: usize, q: f64) -> Result<Self> {
        bh_lambda(p, q)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn scaled(&self, factor: f64) -> Self {
        debug_assert!(factor >= 0.0);
        Self(self.0.iter().map(|v| v * factor).collect())
    }
}

impl std::ops::Index<usize> for LambdaSequence {
    type Output = f64;
    fn index(&self, i: usize) -> &f64 {
        &self.0[i]
    }
}

impl TryFrom<Vec<f64>> for LambdaSequence {
    type Error = Error;
    fn try_from(v: Vec<f64>) -> Result<Self> {
        Self::new(v)
    }
}

impl From<LambdaSequence> for Vec<f64> {
    fn from(l: LambdaSequence) -> Vec<f64> {
        l.0
    }
}

pub fn bh_lambda(p: usize, q: f64) -> Result<LambdaSequence> {
    if p == 0 {
        return Err(Error::Domain("lambda sequence needs p >= 1".into()));
    }
    if !(q > 0.0 && q < 1.0) {
        return Err(Error::Domain(format!("target FDR q must lie in (0, 1), got {q}")));
    }
    // Φ⁻¹(1 − t) = −Φ⁻¹(t) keeps full precision for small t.
    let values = (1..=p)
        .map(|j| normal_quantile(j as f64 * q / (2.0 * p as f64)).map(|z| -z))
        .collect::<Result<Vec<_>>>()?;
    LambdaSequence::new(values)
}
