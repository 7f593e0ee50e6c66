//! Reference implementations used as oracles. They share no code with the
//! library and favour clarity over speed.

#![allow(dead_code)]

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    use rand::SeedableRng;
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn normal(rng: &mut ChaCha8Rng) -> f64 {
    // Box–Muller
    let u1: f64 = 1.0 - rng.random::<f64>();
    let u2: f64 = rng.random::<f64>();
    (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
}

/// Non-increasing nonnegative sequence with random gaps.
pub fn random_lambda(p: usize, rng: &mut ChaCha8Rng) -> Vec<f64> {
    let mut v: Vec<f64> = (0..p).map(|_| 2.0 * rng.random::<f64>()).collect();
    v.sort_by(|a, b| b.total_cmp(a));
    v
}

pub fn random_spd(p: usize, rng: &mut ChaCha8Rng) -> DMatrix<f64> {
    let a = DMatrix::from_fn(p, p, |_, _| normal(rng));
    &a * a.transpose() / p as f64 + DMatrix::identity(p, p) * 0.3
}

/// `Σ_j λ_j |x|_(j)` by sorting a copy.
pub fn sorted_l1(x: &[f64], lambda: &[f64]) -> f64 {
    let mut a: Vec<f64> = x.iter().map(|v| v.abs()).collect();
    a.sort_by(|p, q| q.total_cmp(p));
    a.iter().zip(lambda).map(|(v, l)| v * l).sum()
}

pub fn prox_objective(x: &[f64], v: &[f64], lambda: &[f64]) -> f64 {
    0.5 * x.iter().zip(v).map(|(a, b)| (a - b).powi(2)).sum::<f64>() + sorted_l1(x, lambda)
}

/// Exhaustive prox: every split of the |v|-ordering into consecutive
/// blocks, each block sharing the magnitude that is optimal for it, is
/// scored on the true objective; the best candidate wins.
pub fn brute_prox(v: &[f64], lambda: &[f64]) -> Vec<f64> {
    let p = v.len();
    let mut order: Vec<usize> = (0..p).collect();
    order.sort_by(|&a, &b| v[b].abs().total_cmp(&v[a].abs()));
    let mut best = vec![0.0; p];
    let mut best_obj = prox_objective(&best, v, lambda);
    for cuts in 0..(1u32 << (p.saturating_sub(1))) {
        let mut x = vec![0.0; p];
        let mut start = 0;
        for end in 1..=p {
            if end == p || cuts & (1 << (end - 1)) != 0 {
                let len = (end - start) as f64;
                let mv: f64 = order[start..end].iter().map(|&i| v[i].abs()).sum::<f64>() / len;
                let ml: f64 = lambda[start..end].iter().sum::<f64>() / len;
                let t = (mv - ml).max(0.0);
                for &i in &order[start..end] {
                    x[i] = t * v[i].signum();
                }
                start = end;
            }
        }
        let obj = prox_objective(&x, v, lambda);
        if obj < best_obj {
            best_obj = obj;
            best = x;
        }
    }
    best
}

/// Prox by sorting, subtracting λ, and repeatedly averaging adjacent
/// violating pairs of blocks until the sequence is non-increasing.
pub fn naive_prox(v: &[f64], lambda: &[f64]) -> Vec<f64> {
    let p = v.len();
    let mut order: Vec<usize> = (0..p).collect();
    order.sort_by(|&a, &b| v[b].abs().total_cmp(&v[a].abs()));
    // blocks of (sum, count)
    let mut blocks: Vec<(f64, f64)> = order.iter().enumerate().map(|(k, &i)| (v[i].abs() - lambda[k], 1.0)).collect();
    loop {
        let mut merged = false;
        let mut k = 0;
        while k + 1 < blocks.len() {
            if blocks[k].0 / blocks[k].1 <= blocks[k + 1].0 / blocks[k + 1].1 {
                blocks[k] = (blocks[k].0 + blocks[k + 1].0, blocks[k].1 + blocks[k + 1].1);
                blocks.remove(k + 1);
                merged = true;
            } else {
                k += 1;
            }
        }
        if !merged {
            break;
        }
    }
    let mut x = vec![0.0; p];
    let mut k = 0;
    for (sum, count) in blocks {
        let t = (sum / count).max(0.0);
        for _ in 0..count as usize {
            x[order[k]] = t * v[order[k]].signum();
            k += 1;
        }
    }
    x
}

pub fn slope_objective(x: &DMatrix<f64>, y: &DVector<f64>, beta: &DVector<f64>, lambda: &[f64], sigma: f64) -> f64 {
    0.5 * (y - x * beta).norm_squared() + sigma * sorted_l1(beta.as_slice(), lambda)
}

pub fn weighted_objective(
    x: &DMatrix<f64>,
    y: &DVector<f64>,
    beta: &DVector<f64>,
    lambda: &[f64],
    w: &DVector<f64>,
    sigma: f64,
) -> f64 {
    let wb = beta.component_mul(w);
    0.5 * (y - x * beta).norm_squared() + sigma * sorted_l1(wb.as_slice(), lambda)
}

/// Accelerated proximal gradient with a fixed step `1/L`, `L = ‖X‖₂²`.
/// Returns the best iterate seen.
pub fn fista_slope(x: &DMatrix<f64>, y: &DVector<f64>, lambda: &[f64], sigma: f64, iters: usize) -> DVector<f64> {
    let p = x.ncols();
    let l = x.clone().singular_values().max().powi(2).max(1e-12);
    let step = 1.0 / l;
    let scaled: Vec<f64> = lambda.iter().map(|v| v * sigma * step).collect();
    let mut beta = DVector::zeros(p);
    let mut z = beta.clone();
    let mut t = 1.0_f64;
    let mut best = beta.clone();
    let mut best_obj = slope_objective(x, y, &beta, lambda, sigma);
    for _ in 0..iters {
        let grad = x.transpose() * (x * &z - y);
        let v = &z - grad * step;
        let next = DVector::from_vec(naive_prox(v.as_slice(), &scaled));
        let t_next = (1.0 + (1.0 + 4.0 * t * t).sqrt()) / 2.0;
        z = &next + (&next - &beta) * ((t - 1.0) / t_next);
        beta = next;
        t = t_next;
        let obj = slope_objective(x, y, &beta, lambda, sigma);
        if obj < best_obj {
            best_obj = obj;
            best = beta.clone();
        }
    }
    best
}

/// Conditional law of `x[missing]` given `x[observed]` and `y` when
/// `x ~ N(μ, Σ)` and `y | x ~ N(xβ, σ²)`, by Schur complement of the joint
/// covariance of `(x, y)`.
pub fn joint_conditioning(
    mu: &DVector<f64>,
    cov: &DMatrix<f64>,
    beta: &DVector<f64>,
    sigma: f64,
    row: &[f64],
    missing: &[usize],
    y: f64,
) -> (DVector<f64>, DMatrix<f64>) {
    let p = mu.len();
    let cb = cov * beta;
    let mut jmu = DVector::zeros(p + 1);
    jmu.rows_mut(0, p).copy_from(mu);
    jmu[p] = mu.dot(beta);
    let mut jcov = DMatrix::zeros(p + 1, p + 1);
    jcov.view_mut((0, 0), (p, p)).copy_from(cov);
    for i in 0..p {
        jcov[(i, p)] = cb[i];
        jcov[(p, i)] = cb[i];
    }
    jcov[(p, p)] = beta.dot(&cb) + sigma * sigma;
    let given: Vec<usize> = (0..p).filter(|j| !missing.contains(j)).chain(std::iter::once(p)).collect();
    let values: Vec<f64> = given.iter().map(|&j| if j == p { y } else { row[j] }).collect();
    gaussian_condition(&jmu, &jcov, missing, &given, &values)
}

/// Mean and covariance of `z[a] | z[b] = values` for `z ~ N(mu, cov)`.
pub fn gaussian_condition(
    mu: &DVector<f64>,
    cov: &DMatrix<f64>,
    a: &[usize],
    b: &[usize],
    values: &[f64],
) -> (DVector<f64>, DMatrix<f64>) {
    let sub = |r: &[usize], c: &[usize]| DMatrix::from_fn(r.len(), c.len(), |i, j| cov[(r[i], c[j])]);
    let s_aa = sub(a, a);
    let s_ab = sub(a, b);
    let s_bb = sub(b, b);
    let inv = s_bb.try_inverse().expect("conditioning block is invertible");
    let dev = DVector::from_iterator(b.len(), b.iter().zip(values).map(|(&j, v)| v - mu[j]));
    let mean = DVector::from_iterator(a.len(), a.iter().map(|&j| mu[j])) + &s_ab * &inv * dev;
    let covar = s_aa - &s_ab * inv * s_ab.transpose();
    (mean, covar)
}

/// Adaptive Simpson quadrature to absolute tolerance `tol`.
pub fn simpson(f: &dyn Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
    fn rec(f: &dyn Fn(f64) -> f64, a: f64, b: f64, fa: f64, fm: f64, fb: f64, whole: f64, tol: f64, depth: u32) -> f64 {
        let m = 0.5 * (a + b);
        let (lm, rm) = (0.5 * (a + m), 0.5 * (m + b));
        let (flm, frm) = (f(lm), f(rm));
        let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
        let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
        let delta = left + right - whole;
        if depth == 0 || delta.abs() <= 15.0 * tol {
            return left + right + delta / 15.0;
        }
        rec(f, a, m, fa, flm, fm, left, tol / 2.0, depth - 1) + rec(f, m, b, fm, frm, fb, right, tol / 2.0, depth - 1)
    }
    let (fa, fb, fm) = (f(a), f(b), f(0.5 * (a + b)));
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    rec(f, a, b, fa, fm, fb, whole, tol, 50)
}

/// `E[c]` for `c ~ Gamma(shape, rate)` truncated to `[0, 1]`, as a ratio of
/// two quadratures. The integrands are rescaled by their value at the mode
/// on `[0, 1]` to keep magnitudes near one.
pub fn truncated_gamma_mean_quad(shape: f64, rate: f64) -> f64 {
    let mode = if rate > 0.0 { ((shape - 1.0) / rate).clamp(0.0, 1.0) } else { 1.0 };
    let log_ref = if mode > 0.0 { (shape - 1.0) * mode.ln() - rate * mode } else { 0.0 };
    let dens = |x: f64| {
        if x <= 0.0 {
            if shape == 1.0 { 1.0 } else { 0.0 }
        } else {
            ((shape - 1.0) * x.ln() - rate * x - log_ref).exp()
        }
    };
    let num = simpson(&|x| x * dens(x), 0.0, 1.0, 1e-15);
    let den = simpson(&dens, 0.0, 1.0, 1e-15);
    num / den
}
