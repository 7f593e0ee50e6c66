//! Synthetic data, amputation, selection metrics and the replication runner.

use crate::data::{Dataset, MissingMask};
use crate::error::{Error, Result};
use crate::methods::Method;
use crate::model::{FitResult, Hyperparams};
use crate::rng::{self, StreamRng};
use crate::scaling::standardize_complete;
use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use std::fmt;
use std::io::Write;
use std::str::FromStr;
use std::time::Instant;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mechanism {
    Mcar,
    Mar,
}

impl FromStr for Mechanism {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "mcar" => Ok(Mechanism::Mcar),
            "mar" => Ok(Mechanism::Mar),
            other => Err(Error::Scenario(format!("unknown missingness mechanism `{other}`"))),
        }
    }
}

impl fmt::Display for Mechanism {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Mechanism::Mcar => "mcar",
            Mechanism::Mar => "mar",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimScenario {
    pub n: usize,
    pub p: usize,
    pub k: usize,
    /// Nonzero coefficients equal `c0 √(2 log p)`.
    pub c0: f64,
    /// Correlation `ρ^{|i−j|}` between covariates `i` and `j`.
    pub rho: f64,
    pub miss_frac: f64,
    pub mechanism: Mechanism,
    pub sigma_true: f64,
    pub q: f64,
    pub reps: usize,
    pub seed: u64,
}

impl Default for SimScenario {
    fn default() -> Self {
        Self {
            n: 100,
            p: 100,
            k: 10,
            c0: 3.0,
            rho: 0.0,
            miss_frac: 0.1,
            mechanism: Mechanism::Mcar,
            sigma_true: 1.0,
            q: 0.1,
            reps: 100,
            seed: 1,
        }
    }
}

impl SimScenario {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Scenario(m));
        if self.n < 2 || self.p < 1 {
            return bad(format!("need n >= 2 and p >= 1, got n={}, p={}", self.n, self.p));
        }
        if self.k > self.p {
            return bad(format!("k={} exceeds p={}", self.k, self.p));
        }
        if !(0.0..1.0).contains(&self.rho) {
            return bad(format!("rho must lie in [0, 1), got {}", self.rho));
        }
        if !(0.0..1.0).contains(&self.miss_frac) {
            return bad(format!("miss must lie in [0, 1), got {}", self.miss_frac));
        }
        if !(self.q > 0.0 && self.q < 1.0) {
            return bad(format!("q must lie in (0, 1), got {}", self.q));
        }
        if !(self.sigma_true > 0.0 && self.sigma_true.is_finite()) || !self.c0.is_finite() {
            return bad("sigma must be positive and c0 finite".into());
        }
        Ok(())
    }

    /// Parses `key=value` lines (`#` starts a comment). Unlisted keys keep
    /// their defaults.
    pub fn parse(text: &str) -> Result<Self> {
        let mut sc = Self::default();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| Error::Scenario(format!("line {}: expected key=value", lineno + 1)))?;
            let (key, value) = (key.trim(), value.trim());
            let err = |e: &dyn fmt::Display| Error::Scenario(format!("line {}: {key}: {e}", lineno + 1));
            macro_rules! num {
                ($t:ty) => {
                    value.parse::<$t>().map_err(|e| err(&e))?
                };
            }
            match key {
                "n" => sc.n = num!(usize),
                "p" => sc.p = num!(usize),
                "k" => sc.k = num!(usize),
                "c0" => sc.c0 = num!(f64),
                "rho" => sc.rho = num!(f64),
                "miss" => sc.miss_frac = num!(f64),
                "mech" => sc.mechanism = value.parse().map_err(|e: Error| err(&e))?,
                "sigma" => sc.sigma_true = num!(f64),
                "q" => sc.q = num!(f64),
                "reps" => sc.reps = num!(usize),
                "seed" => sc.seed = num!(u64),
                _ => return Err(err(&"unknown key")),
            }
        }
        sc.validate()?;
        Ok(sc)
    }

    pub fn to_text(&self) -> String {
        format!(
            "n={}\np={}\nk={}\nc0={}\nrho={}\nmiss={}\nmech={}\nsigma={}\nq={}\nreps={}\nseed={}\n",
            self.n,
            self.p,
            self.k,
            self.c0,
            self.rho,
            self.miss_frac,
            self.mechanism,
            self.sigma_true,
            self.q,
            self.reps,
            self.seed
        )
    }

    pub fn hyperparams(&self) -> Hyperparams {
        Hyperparams { q: self.q, ..Hyperparams::defaults_for(self.p) }
    }

    pub fn signal(&self) -> f64 {
        self.c0 * (2.0 * (self.p as f64).ln()).sqrt()
    }
}

/// Rows i.i.d. `N(0, Σ)` with `Σ_ij = ρ^{|i−j|}` (generated as an AR(1)
/// recursion along the columns), then centred and scaled to unit norm.
pub fn generate_design(n: usize, p: usize, rho: f64, rng: &mut StreamRng) -> Result<DMatrix<f64>> {
    if !(0.0..1.0).contains(&rho) {
        return Err(Error::Domain(format!("rho must lie in [0, 1), got {rho}")));
    }
    let innov = (1.0 - rho * rho).sqrt();
    let mut x = DMatrix::zeros(n, p);
    for i in 0..n {
        let mut prev = 0.0;
        for j in 0..p {
            let z: f64 = StandardNormal.sample(rng);
            prev = if j == 0 { z } else { rho * prev + innov * z };
            x[(i, j)] = prev;
        }
    }
    Ok(standardize_complete(&x)?.0)
}

/// `β` with its first `k` entries equal to `c0 √(2 log p)`, and
/// `y = Xβ + ε` with `ε ~ N(0, σ² I)`.
pub fn generate_response(
    x: &DMatrix<f64>,
    k: usize,
    c0: f64,
    sigma: f64,
    rng: &mut StreamRng,
) -> Result<(DVector<f64>, DVector<f64>)> {
    let (n, p) = x.shape();
    if k > p {
        return Err(Error::Domain(format!("k={k} exceeds p={p}")));
    }
    let magnitude = c0 * (2.0 * (p as f64).ln()).sqrt();
    let beta = DVector::from_fn(p, |j, _| if j < k { magnitude } else { 0.0 });
    let noise = DVector::from_fn(n, |_, _| sigma * Distribution::<f64>::sample(&StandardNormal, rng));
    Ok((x * &beta + noise, beta))
}

fn logistic(z: f64) -> f64 {
    1.0 / (1.0 + (-z).exp())
}

/// Masks cells of `x`. MCAR masks each cell independently with probability
/// `frac`, redrawing rows that lose every entry. MAR keeps column 0 fully
/// observed and masks cell `(i, j)`, `j ≥ 1`, with probability
/// `logistic(α + 2 z_i)`, where `z_i` is the standardized value of column 0
/// and `α` is calibrated so the expected overall fraction is `frac`.
pub fn ampute(x: &DMatrix<f64>, frac: f64, mechanism: Mechanism, rng: &mut StreamRng) -> Result<MissingMask> {
    let (n, p) = x.shape();
    if !(0.0..1.0).contains(&frac) {
        return Err(Error::Domain(format!("missing fraction must lie in [0, 1), got {frac}")));
    }
    let mut mask = MissingMask::none(n, p);
    if frac == 0.0 {
        return Ok(mask);
    }
    match mechanism {
        Mechanism::Mcar => {
            for i in 0..n {
                let mut attempts = 0;
                loop {
                    for j in 0..p {
                        mask.set(i, j, rng.random::<f64>() < frac);
                    }
                    if mask.row(i).iter().any(|m| !m) {
                        break;
                    }
                    attempts += 1;
                    if attempts >= 100 {
                        return Err(Error::Amputation(format!("row {i} stayed fully missing after 100 redraws")));
                    }
                }
            }
        }
        Mechanism::Mar => {
            if p < 2 {
                return Err(Error::Amputation("MAR needs a driver column and at least one other column".into()));
            }
            let target = frac * p as f64 / (p - 1) as f64;
            if target >= 1.0 {
                return Err(Error::Amputation(format!(
                    "fraction {frac} is unattainable with column 0 always observed"
                )));
            }
            let driver = x.column(0);
            let mean = driver.mean();
            let sd = (driver.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n as f64).sqrt();
            let z: Vec<f64> = driver.iter().map(|v| if sd > 0.0 { (v - mean) / sd } else { 0.0 }).collect();
            let rate = |alpha: f64| z.iter().map(|zi| logistic(alpha + 2.0 * zi)).sum::<f64>() / n as f64;
            let (mut lo, mut hi) = (-60.0, 60.0);
            for _ in 0..200 {
                let mid = 0.5 * (lo + hi);
                if rate(mid) < target {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            let alpha = 0.5 * (lo + hi);
            for i in 0..n {
                let pr = logistic(alpha + 2.0 * z[i]);
                for j in 1..p {
                    mask.set(i, j, rng.random::<f64>() < pr);
                }
            }
        }
    }
    Ok(mask)
}

#[derive(Debug, Clone, PartialEq)]
pub struct Metrics {
    pub power: f64,
    pub fdr: f64,
    /// `‖β̂ − β‖² / ‖β‖²`, absent when `β = 0`.
    pub mse_beta: Option<f64>,
    /// `‖X(β̂ − β)‖² / ‖Xβ‖²`, absent when `Xβ = 0`.
    pub pred_err: Option<f64>,
    pub tp: usize,
    pub fp: usize,
    pub fn_: usize,
}

pub fn evaluate(
    beta_hat: &DVector<f64>,
    gamma_hat: &[bool],
    beta_true: &DVector<f64>,
    x_true: &DMatrix<f64>,
) -> Result<Metrics> {
    let p = beta_true.len();
    if beta_hat.len() != p || gamma_hat.len() != p || x_true.ncols() != p {
        return Err(Error::Dimension("estimate, support, truth and design disagree".into()));
    }
    let (mut tp, mut fp, mut fn_) = (0, 0, 0);
    for j in 0..p {
        match (gamma_hat[j], beta_true[j] != 0.0) {
            (true, true) => tp += 1,
            (true, false) => fp += 1,
            (false, true) => fn_ += 1,
            (false, false) => {}
        }
    }
    let diff = beta_hat - beta_true;
    let norm_true = beta_true.norm_squared();
    let mse_beta = (norm_true > 0.0).then(|| diff.norm_squared() / norm_true);
    let signal = (x_true * beta_true).norm_squared();
    let pred_err = (signal > 0.0).then(|| (x_true * &diff).norm_squared() / signal);
    Ok(Metrics {
        power: tp as f64 / (tp + fn_).max(1) as f64,
        fdr: fp as f64 / (fp + tp).max(1) as f64,
        mse_beta,
        pred_err,
        tp,
        fp,
        fn_,
    })
}

/// One simulated data set: the incomplete data handed to a method plus the
/// complete design and true coefficients used for evaluation.
#[derive(Debug, Clone)]
pub struct SimulatedData {
    pub data: Dataset,
    pub x_true: DMatrix<f64>,
    pub beta_true: DVector<f64>,
}

pub fn simulate_data(sc: &SimScenario, rep: usize) -> Result<SimulatedData> {
    let mut data_rng = rng::stream(sc.seed, &[rng::tag::DATA, rep as u64]);
    let x_true = generate_design(sc.n, sc.p, sc.rho, &mut data_rng)?;
    let (y, beta_true) = generate_response(&x_true, sc.k, sc.c0, sc.sigma_true, &mut data_rng)?;
    let mask = ampute(&x_true, sc.miss_frac, sc.mechanism, &mut rng::stream(sc.seed, &[rng::tag::AMPUTE, rep as u64]))?;
    let data = Dataset::new(y, x_true.clone(), mask)?;
    Ok(SimulatedData { data, x_true, beta_true })
}

pub fn fit_seed(sc: &SimScenario, rep: usize) -> u64 {
    rng::derive_seed(sc.seed, &[rng::tag::FIT, rep as u64])
}

#[derive(Debug, Clone)]
pub struct Replication {
    pub rep: usize,
    pub outcome: std::result::Result<RepOutcome, String>,
}

#[derive(Debug, Clone)]
pub struct RepOutcome {
    pub metrics: Metrics,
    pub sigma_hat: f64,
    /// `√(RSS / n)` on the final imputed design.
    pub sigma_rss: f64,
    pub runtime_ms: f64,
    pub fit: FitResult,
}

pub fn run_replication(sc: &SimScenario, method: &dyn Method, rep: usize) -> Replication {
    let outcome = (|| {
        let sim = simulate_data(sc, rep)?;
        let start = Instant::now();
        let fit = method.fit(&sim.data, &sc.hyperparams(), fit_seed(sc, rep))?;
        let runtime_ms = start.elapsed().as_secs_f64() * 1e3;
        let metrics = evaluate(&fit.beta_vector(), &fit.selected(), &sim.beta_true, &sim.x_true)?;
        let sigma_rss = (fit.rss / sc.n as f64).sqrt();
        Ok::<_, Error>(RepOutcome { metrics, sigma_hat: fit.sigma, sigma_rss, runtime_ms, fit })
    })()
    .map_err(|e| e.to_string());
    Replication { rep, outcome }
}

#[derive(Debug, Clone)]
pub struct ScenarioReport {
    pub rows: Vec<Replication>,
}

/// Mean and standard error of the present values.
fn mean_se(values: impl Iterator<Item = Option<f64>>) -> (Option<f64>, Option<f64>) {
    let v: Vec<f64> = values.flatten().collect();
    if v.is_empty() {
        return (None, None);
    }
    let m = v.iter().sum::<f64>() / v.len() as f64;
    if v.len() < 2 {
        return (Some(m), None);
    }
    let var = v.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (v.len() - 1) as f64;
    (Some(m), Some((var / v.len() as f64).sqrt()))
}

impl ScenarioReport {
    pub fn successes(&self) -> impl Iterator<Item = &RepOutcome> {
        self.rows.iter().filter_map(|r| r.outcome.as_ref().ok())
    }

    pub fn failures(&self) -> usize {
        self.rows.iter().filter(|r| r.outcome.is_err()).count()
    }

    fn column(&self, f: impl Fn(&RepOutcome) -> Option<f64> + Copy) -> (Option<f64>, Option<f64>) {
        mean_se(self.rows.iter().map(|r| r.outcome.as_ref().ok().and_then(f)))
    }

    pub fn mean_power(&self) -> Option<f64> {
        self.column(|o| Some(o.metrics.power)).0
    }

    pub fn mean_fdr(&self) -> Option<f64> {
        self.column(|o| Some(o.metrics.fdr)).0
    }

    /// Writes one row per replication followed by `mean` and `se` rows.
    /// Wall-clock runtimes are only written when `timing` is set, so the
    /// default output is reproducible byte for byte.
    pub fn write_csv(&self, out: impl Write, timing: bool) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["rep", "power", "fdr", "mse", "pred", "sigma_hat", "runtime_ms"])?;
        let fmt = |v: Option<f64>| v.map_or_else(|| "NA".to_string(), |x| format!("{x}"));
        type Getter = fn(&RepOutcome) -> Option<f64>;
        let getters: [Getter; 6] = [
            |o| Some(o.metrics.power),
            |o| Some(o.metrics.fdr),
            |o| o.metrics.mse_beta,
            |o| o.metrics.pred_err,
            |o| Some(o.sigma_hat),
            |o| Some(o.runtime_ms),
        ];
        for r in &self.rows {
            let mut rec = vec![r.rep.to_string()];
            for (k, g) in getters.iter().enumerate() {
                let v = r.outcome.as_ref().ok().and_then(g);
                rec.push(if k == 5 && !timing { "NA".into() } else { fmt(v) });
            }
            w.write_record(&rec)?;
        }
        let stats: Vec<(Option<f64>, Option<f64>)> = getters.iter().map(|g| self.column(*g)).collect();
        for (label, pick) in [("mean", 0), ("se", 1)] {
            let mut rec = vec![label.to_string()];
            for (k, s) in stats.iter().enumerate() {
                let v = if pick == 0 { s.0 } else { s.1 };
                rec.push(if k == 5 && !timing { "NA".into() } else { fmt(v) });
            }
            w.write_record(&rec)?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Runs every replication of the scenario, in parallel on `threads` workers
/// (all available cores when `None`). Rows come back in replication order.
pub fn run_scenario(sc: &SimScenario, method: &dyn Method, threads: Option<usize>) -> Result<ScenarioReport> {
    sc.validate()?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads.unwrap_or(0))
        .build()
        .map_err(|e| Error::InvalidInput(format!("thread pool: {e}")))?;
    let rows = pool.install(|| (0..sc.reps).into_par_iter().map(|rep| run_replication(sc, method, rep)).collect());
    Ok(ScenarioReport { rows })
}
