//! Family-wise error rate of Bonferroni's procedure: Monte Carlo
//! estimation under a correlation model, the closed-form independence
//! baseline, the mean-correlation correction to it, and the
//! block-equicorrelated asymptotic bound.

use crate::corr_model::CorrelationModel;
use crate::error::{Error, Result};
use crate::gaussian::{TestConfig, MAX_K};
use crate::sampler::{sample_mvn_into, SeededStream};
use rayon::prelude::*;
use serde::Serialize;

/// Monte Carlo estimate with its binomial standard error.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct EstimateWithCI {
    pub estimate: f64,
    pub std_error: f64,
    pub replications: usize,
    pub seed: u64,
}

/// Decomposition of the corrected FWER approximation: the truncated
/// independence series plus the mean-correlation correction term.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct CorrectedFwer {
    pub independence_series: f64,
    pub correction_term: f64,
    pub total: f64,
    #[serde(rename = "K")]
    pub k: usize,
    pub rho_bar: f64,
    pub c: f64,
}

impl CorrectedFwer {
    /// The derivation assumes `c^2 rho_bar = o(1)`; flag configurations
    /// far outside that regime.
    pub fn outside_regime(&self) -> bool {
        0.5 * self.c * self.c * self.rho_bar.abs() > 0.5
    }
}

/// Proportion of replications with `max_i X_i > c` under the global null.
///
/// Replications are keyed by `stream_id`, so the count (and hence the
/// estimate) is identical for any partitioning across workers.
pub fn estimate_fwer_mc(
    model: &CorrelationModel,
    config: &TestConfig,
    replications: usize,
    seed: u64,
) -> Result<EstimateWithCI> {
    if model.dim() != config.n {
        return Err(Error::Shape(format!(
            "model dimension {} vs config n = {}",
            model.dim(),
            config.n
        )));
    }
    if replications == 0 {
        return Err(Error::Domain("replications must be positive".into()));
    }
    let n = model.dim();
    let c = config.c;
    let hits: u64 = (0..replications as u64)
        .into_par_iter()
        .map_init(
            || vec![0.0f64; n],
            |buf, rep| {
                let mut stream = SeededStream::new(seed, rep);
                sample_mvn_into(model, &mut stream, buf).expect("validated dimensions");
                u64::from(buf.iter().any(|&x| x > c))
            },
        )
        .sum();
    let estimate = hits as f64 / replications as f64;
    Ok(EstimateWithCI {
        estimate,
        std_error: (estimate * (1.0 - estimate) / replications as f64).sqrt(),
        replications,
        seed,
    })
}

/// `1 - (1 - alpha_n)^n`, evaluated stably for tiny `alpha_n`.
pub fn fwer_independence(n: usize, alpha_n: f64) -> f64 {
    if alpha_n <= 0.0 {
        return 0.0;
    }
    if alpha_n >= 1.0 {
        return 1.0;
    }
    -(n as f64 * (-alpha_n).ln_1p()).exp_m1()
}

fn factorial(k: usize) -> f64 {
    (1..=k).map(|i| i as f64).product()
}

/// Truncated independence series `sum_{i=1}^{K} (-1)^{i-1} alpha^i / i!`.
pub fn independence_series(alpha: f64, k: usize) -> Result<f64> {
    if !(2..=MAX_K).contains(&k) {
        return Err(Error::Domain(format!("K must be in [2, {MAX_K}], got {k}")));
    }
    let mut sum = 0.0;
    let mut sign = 1.0;
    for i in 1..=k {
        sum += sign * alpha.powi(i as i32) / factorial(i);
        sign = -sign;
    }
    Ok(sum)
}

/// The correction summand
/// `(c^2 rho_bar / 2) sum_{i=2}^{K} (-1)^{i-1} alpha^i / (i-2)!`.
pub fn correction_term(config: &TestConfig, rho_bar: f64) -> Result<f64> {
    if !(2..=MAX_K).contains(&config.k) {
        return Err(Error::Domain(format!(
            "K must be in [2, {MAX_K}], got {}",
            config.k
        )));
    }
    let alpha = config.alpha;
    let mut sum = 0.0;
    let mut sign = -1.0; // (-1)^{i-1} at i = 2
    for i in 2..=config.k {
        sum += sign * alpha.powi(i as i32) / factorial(i - 2);
        sign = -sign;
    }
    Ok(0.5 * config.c * config.c * rho_bar * sum)
}

/// Corrected FWER approximation: independence series plus correction.
pub fn fwer_corrected(config: &TestConfig, rho_bar: f64) -> Result<CorrectedFwer> {
    let series = independence_series(config.alpha, config.k)?;
    let correction = correction_term(config, rho_bar)?;
    Ok(CorrectedFwer {
        independence_series: series,
        correction_term: correction,
        total: series + correction,
        k: config.k,
        rho_bar,
        c: config.c,
    })
}

/// FWER upper bound for the block-equicorrelated construction:
/// dimension `n^2`, `n` blocks of size `n`, per-test level `alpha/n^2`,
/// within-block correlation `rho`. Returns
/// `1 - (1 - alpha/n^2)^n [1 - (1-rho)(1 - (1 - alpha/n^2)^(n-1))]^n`.
pub fn block_lower_bound(n_block: usize, alpha: f64, rho: f64) -> Result<f64> {
    if n_block == 0 {
        return Err(Error::InvalidDimension { min: 1, got: 0 });
    }
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::Domain(format!("alpha must be in (0,1), got {alpha}")));
    }
    if !(0.0..=1.0).contains(&rho) {
        return Err(Error::Domain(format!("rho must be in [0,1], got {rho}")));
    }
    let n = n_block as f64;
    let alpha_n = alpha / (n * n);
    let log_q = (-alpha_n).ln_1p(); // ln(1 - alpha/n^2)
    let survive_one = (n * log_q).exp(); // (1 - alpha/n^2)^n
    let inner = 1.0 - (1.0 - rho) * (-((n - 1.0) * log_q).exp_m1());
    Ok(1.0 - survive_one * inner.powf(n))
}

/// Magnitude of the first independence-series term dropped at order `K`:
/// `alpha^(K+1) / (K+1)!`. Indicative truncation diagnostic only.
pub fn tail_remainder_estimate(config: &TestConfig) -> f64 {
    config.alpha.powi(config.k as i32 + 1) / factorial(config.k + 1)
}
