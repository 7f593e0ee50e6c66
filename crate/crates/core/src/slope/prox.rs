use super::check_len;
use crate::error::Result;
use crate::lambda::LambdaSequence;
use nalgebra::DVector;

/// Proximal operator of `b ↦ Σ λ_j |b|_(j)`.
pub fn prox_sorted_l1(v: &DVector<f64>, lambda: &LambdaSequence) -> Result<DVector<f64>> {
    check_len("v", v.len(), lambda.len())?;
    let mut out = DVector::zeros(v.len());
    prox_sorted_l1_into(v.as_slice(), lambda.as_slice(), 1.0, out.as_mut_slice());
    Ok(out)
}

/// Prox of `scale · Σ λ_j |b|_(j)` written into `out`. Lengths must agree.
///
/// Sorting `|v|` decreasingly reduces the problem to a non-increasing
/// isotonic fit of `|v|_(i) - λ_i`, solved with a stack of merged blocks,
/// followed by truncation at zero.
pub fn prox_sorted_l1_into(v: &[f64], lambda: &[f64], scale: f64, out: &mut [f64]) {
    let p = v.len();
    debug_assert!(lambda.len() == p && out.len() == p);
    let order = super::rank_order(v);
    // (first index, last index, sum, value)
    let mut blocks: Vec<(usize, usize, f64, f64)> = Vec::with_capacity(p);
    for (i, &j) in order.iter().enumerate() {
        let d = v[j].abs() - scale * lambda[i];
        blocks.push((i, i, d, d));
        while blocks.len() > 1 {
            let top = blocks[blocks.len() - 1];
            let prev = blocks[blocks.len() - 2];
            if prev.3 > top.3 {
                break;
            }
            blocks.pop();
            let sum = prev.2 + top.2;
            let len = (top.1 - prev.0 + 1) as f64;
            *blocks.last_mut().unwrap() = (prev.0, top.1, sum, sum / len);
        }
    }
    for &(start, end, _, value) in &blocks {
        let value = value.max(0.0);
        for &j in &order[start..=end] {
            out[j] = value.copysign(v[j]);
            if value == 0.0 {
                out[j] = 0.0;
            }
        }
    }
}
