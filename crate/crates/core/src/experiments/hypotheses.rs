//! Empirical constants for the two low-bias properties used in the
//! symmetry-breaking argument: the bias rarely collapses below `h sqrt(n)`,
//! and a positive bias grows by a `(1 + epsilon)` factor.

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::par_trials;
use crate::config::Configuration;
use crate::dynamics::step;
use crate::error::{Error, Result};
use crate::phase::PhaseParameters;
use crate::rng::RandomSource;

const TAG_HYPOTHESES: u64 = 0x4800;

/// `c2` in the growth-failure bound `exp(-c2 s^2 / n)`.
pub const GROWTH_C2: f64 = 2.0 / (72.0 * 72.0);

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct HypothesisSample {
    pub start: Configuration,
    /// Empirical `P(|S| < h sqrt(n))`.
    pub p_small: f64,
    /// Empirical `P(|S| < (1 + epsilon) s)`.
    pub growth_fail: f64,
    /// `exp(-c2 s^2 / n)`.
    pub growth_bound: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HypothesisEstimate {
    pub h: f64,
    pub epsilon: f64,
    /// Target bias `c3 sqrt(n) ln n` the argument drives towards.
    pub m: f64,
    pub c1_hat: f64,
    pub prop2_fail_rate: f64,
    pub samples: Vec<HypothesisSample>,
}

fn in_domain(cfg: &Configuration, params: &PhaseParameters) -> bool {
    let (n, q) = (cfg.n(), cfg.q());
    18 * q >= n && 2 * q <= n && (cfg.s().unsigned_abs() as f64) < params.bias_threshold(n)
}

pub fn hypothesis_sample(cfg: &Configuration, h: f64, epsilon: f64, trials: u64, seed: u64) -> HypothesisSample {
    let n = cfg.n();
    let nf = n as f64;
    let s = cfg.s().unsigned_abs() as f64;
    let small = h * nf.sqrt();
    let grown = (1.0 + epsilon) * s;
    let coords = [TAG_HYPOTHESES, n, cfg.a(), cfg.b()];
    let hits = par_trials(seed, &coords, trials, |_, rng| {
        let ns = step(cfg, rng).s().unsigned_abs() as f64;
        ((ns < small) as u64, (ns < grown) as u64)
    });
    let (small_count, fail_count) = hits.iter().fold((0, 0), |(x, y), &(a, b)| (x + a, y + b));
    HypothesisSample {
        start: *cfg,
        p_small: small_count as f64 / trials as f64,
        growth_fail: fail_count as f64 / trials as f64,
        growth_bound: (-GROWTH_C2 * s * s / nf).exp(),
    }
}

/// Low-bias configurations with `n/18 <= q <= n/2`: the worst case `s = 0`,
/// `q = n/2` first, then `count - 1` uniform draws.
pub fn sample_configurations(n: u64, count: usize, seed: u64, params: &PhaseParameters) -> Result<Vec<Configuration>> {
    let first = Configuration::from_bias_at_least(n, 0, n / 2)?;
    if !in_domain(&first, params) {
        return Err(Error::InvalidParameter(format!("n = {n} too small for the low-bias domain")));
    }
    let mut out = vec![first];
    let mut rng = RandomSource::derived(seed, &[TAG_HYPOTHESES, n, u64::MAX]);
    let theta = params.bias_threshold(n);
    while out.len() < count {
        let q = rng.random_range(n.div_ceil(18)..=n / 2);
        let s = rng.random_range(0..theta.ceil() as i64);
        if let Ok(c) = Configuration::from_bias(n, s, q) {
            if in_domain(&c, params) {
                out.push(c);
            }
        }
    }
    Ok(out)
}

pub fn estimate_h2_hypotheses(
    n: u64,
    h: f64,
    epsilon: f64,
    sample_configs: usize,
    trials_each: u64,
    seed: u64,
    params: &PhaseParameters,
) -> Result<HypothesisEstimate> {
    let configs = sample_configurations(n, sample_configs.max(1), seed, params)?;
    let samples: Vec<HypothesisSample> =
        configs.iter().map(|c| hypothesis_sample(c, h, epsilon, trials_each, seed)).collect();
    let c1_hat = samples.iter().map(|x| x.p_small).fold(0.0, f64::max);
    let prop2_fail_rate = samples.iter().map(|x| x.growth_fail).fold(0.0, f64::max);
    let nf = n as f64;
    Ok(HypothesisEstimate { h, epsilon, m: nf.sqrt() * nf.ln(), c1_hat, prop2_fail_rate, samples })
}
