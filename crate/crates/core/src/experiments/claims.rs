//! One-step and bounded-horizon claims about the complete-graph process.
//!
//! A configuration with `s < 0` is mirrored before checking, so every claim
//! is evaluated with Alpha as the (weak) majority.

use serde::{Deserialize, Serialize};
use std::fmt;
use std::str::FromStr;
use std::time::Instant;

use super::{par_trials, ExperimentReport};
use crate::config::Configuration;
use crate::dynamics::{default_max_rounds, rounds_to_absorption, simulate, step, Outcome};
use crate::error::{Error, Result};
use crate::phase::{classify, sqrt_n_ln_n, PhaseParameters, RegionLabel};
use crate::rng::RandomSource;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ClaimId {
    QLowerBound,
    AIncrease,
    InformationSpreading,
    SIncrease,
    BDecrease,
    SPreserved,
    QPreserved,
    QDecrease,
    AWins,
    SDoesNotDecrease,
    QBounded,
    #[serde(rename = "apxminbias")]
    ApxMinBias,
}

impl ClaimId {
    pub const ALL: [ClaimId; 12] = [
        ClaimId::QLowerBound,
        ClaimId::AIncrease,
        ClaimId::InformationSpreading,
        ClaimId::SIncrease,
        ClaimId::BDecrease,
        ClaimId::SPreserved,
        ClaimId::QPreserved,
        ClaimId::QDecrease,
        ClaimId::AWins,
        ClaimId::SDoesNotDecrease,
        ClaimId::QBounded,
        ClaimId::ApxMinBias,
    ];

    /// Claims that hold with high probability. The minority-win claim only
    /// asserts a constant probability and is judged separately.
    pub fn high_probability() -> impl Iterator<Item = ClaimId> {
        Self::ALL.into_iter().filter(|&c| c != ClaimId::ApxMinBias)
    }

    pub fn as_str(self) -> &'static str {
        match self {
            ClaimId::QLowerBound => "q_lower_bound",
            ClaimId::AIncrease => "a_increase",
            ClaimId::InformationSpreading => "information_spreading",
            ClaimId::SIncrease => "s_increase",
            ClaimId::BDecrease => "b_decrease",
            ClaimId::SPreserved => "s_preserved",
            ClaimId::QPreserved => "q_preserved",
            ClaimId::QDecrease => "q_decrease",
            ClaimId::AWins => "a_wins",
            ClaimId::SDoesNotDecrease => "s_does_not_decrease",
            ClaimId::QBounded => "q_bounded",
            ClaimId::ApxMinBias => "apxminbias",
        }
    }

    /// Claims checked over many rounds rather than a single step.
    pub fn is_multi_round(self) -> bool {
        matches!(self, ClaimId::InformationSpreading | ClaimId::AWins | ClaimId::ApxMinBias)
    }

    /// Claims whose failure probability is exponentially small in `n`.
    pub fn has_exponential_tail(self) -> bool {
        matches!(self, ClaimId::QLowerBound | ClaimId::QBounded)
    }
}

impl fmt::Display for ClaimId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ClaimId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|c| c.as_str() == s)
            .ok_or_else(|| Error::InvalidParameter(format!("unknown claim `{s}`")))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClaimParams {
    pub gamma: f64,
    pub epsilon: f64,
    /// Multi-round claims get `ceil(horizon_factor * ln n)` rounds.
    pub horizon_factor: f64,
}

impl Default for ClaimParams {
    fn default() -> Self {
        Self { gamma: 1.0, epsilon: 0.5, horizon_factor: 20.0 }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClaimSpec {
    pub id: ClaimId,
    pub params: ClaimParams,
}

fn oriented(cfg: &Configuration) -> Configuration {
    if cfg.s() < 0 {
        cfg.mirrored()
    } else {
        *cfg
    }
}

impl ClaimSpec {
    pub fn new(id: ClaimId) -> Self {
        Self { id, params: ClaimParams::default() }
    }

    pub fn with_params(id: ClaimId, params: ClaimParams) -> Self {
        Self { id, params }
    }

    pub fn horizon(&self, n: u64) -> u64 {
        match self.id {
            ClaimId::ApxMinBias => default_max_rounds(n),
            _ => ((self.params.horizon_factor * (n as f64).ln()).ceil() as u64).max(1),
        }
    }

    /// `Err(reason)` names the first violated condition.
    pub fn precondition(&self, cfg: &Configuration) -> std::result::Result<(), String> {
        let x = oriented(cfg);
        let (n, a, b, q, s) = (x.n(), x.a() as f64, x.b() as f64, x.q() as f64, x.s() as f64);
        let nf = n as f64;
        let ln = nf.ln();
        let w = sqrt_n_ln_n(n);
        let gw = self.params.gamma * w;
        let require = |ok: bool, what: &str| if ok { Ok(()) } else { Err(what.to_string()) };
        match self.id {
            ClaimId::QLowerBound => require(3.0 * s <= 2.0 * nf, "|s| <= 2n/3"),
            ClaimId::AIncrease => {
                require(2.0 * q >= nf, "q >= n/2")?;
                require(a >= ln, "a >= ln n")
            }
            ClaimId::InformationSpreading => require(a + b >= 1.0 && a + b < 2.0 * ln, "1 <= a + b < 2 ln n"),
            ClaimId::SIncrease => {
                require(s >= gw, "s >= gamma sqrt(n ln n)")?;
                require(18.0 * q >= nf, "q >= n/18")
            }
            ClaimId::BDecrease => {
                require(3.0 * s >= 2.0 * nf, "|s| >= 2n/3")?;
                require(b >= ln, "b >= ln n")
            }
            ClaimId::SPreserved => {
                require(3.0 * s >= 2.0 * nf, "|s| >= 2n/3")?;
                require(q >= w, "q >= sqrt(n ln n)")
            }
            ClaimId::QPreserved => {
                require(3.0 * s >= 2.0 * nf, "|s| >= 2n/3")?;
                require(b >= 2.0 * w, "b >= 2 sqrt(n ln n)")
            }
            ClaimId::QDecrease => {
                require(q >= 12.0 * w && 3.0 * q <= nf, "12 sqrt(n ln n) <= q <= n/3")?;
                require(b <= 2.0 * w, "b <= 2 sqrt(n ln n)")
            }
            ClaimId::AWins => {
                require(q <= gw, "q <= gamma sqrt(n ln n)")?;
                require(b <= 2.0 * w, "b <= 2 sqrt(n ln n)")
            }
            ClaimId::SDoesNotDecrease => require(s >= gw, "s >= gamma sqrt(n ln n)"),
            ClaimId::QBounded => {
                let params = PhaseParameters::new(self.params.gamma).map_err(|e| e.to_string())?;
                require(classify(&x, &params).label == RegionLabel::H2, "configuration in H2")
            }
            ClaimId::ApxMinBias => require(s > 0.0, "a strict majority"),
        }
    }

    /// One independent evaluation of the claim's conclusion from `cfg`.
    pub fn trial(&self, cfg: &Configuration, rng: &mut RandomSource) -> bool {
        let x = oriented(cfg);
        let n = x.n();
        let nf = n as f64;
        let w = sqrt_n_ln_n(n);
        if self.id.is_multi_round() {
            let horizon = self.horizon(n);
            return match self.id {
                ClaimId::InformationSpreading => {
                    let target = 2.0 * nf.ln();
                    let mut reached = false;
                    // Stop early once the target is seen.
                    let mut cur = x;
                    for _ in 0..=horizon {
                        if (cur.a() + cur.b()) as f64 >= target {
                            reached = true;
                            break;
                        }
                        if cur.is_absorbing() {
                            break;
                        }
                        cur = step(&cur, rng);
                    }
                    reached
                }
                ClaimId::AWins => {
                    let mut won = false;
                    simulate(x, rng, horizon, |_, c| won |= c.a() == n);
                    won
                }
                _ => rounds_to_absorption(x, rng, horizon).0 == Outcome::AbsorbedBeta,
            };
        }
        let y = step(&x, rng);
        let (a, b, q, s) = (x.a() as f64, x.b() as f64, x.q() as f64, x.s() as f64);
        let (na, nb, nq, ns) = (y.a() as f64, y.b() as f64, y.q() as f64, y.s() as f64);
        match self.id {
            ClaimId::QLowerBound => 18.0 * nq >= nf,
            ClaimId::AIncrease => 8.0 * na >= 9.0 * a,
            ClaimId::SIncrease => 37.0 * s < 36.0 * ns && ns < 2.0 * s,
            ClaimId::BDecrease => 9.0 * nb <= 8.0 * b,
            ClaimId::SPreserved => 3.0 * ns >= 2.0 * nf,
            ClaimId::QPreserved => nq > w,
            ClaimId::QDecrease => 9.0 * nq <= 8.0 * q,
            ClaimId::SDoesNotDecrease => ns >= (self.params.gamma - self.params.epsilon) * w,
            ClaimId::QBounded => 18.0 * nq >= nf && 2.0 * nq <= nf,
            ClaimId::InformationSpreading | ClaimId::AWins | ClaimId::ApxMinBias => unreachable!(),
        }
    }
}

/// A start satisfying the claim's precondition at population `n`.
pub fn default_configuration(id: ClaimId, n: u64, params: &ClaimParams) -> Result<Configuration> {
    let nf = n as f64;
    let w = sqrt_n_ln_n(n);
    let cfg = match id {
        ClaimId::QLowerBound => Configuration::from_bias_at_least(n, 0, n % 2)?,
        ClaimId::AIncrease => {
            let q = n.div_ceil(2);
            let a = (n - q).div_ceil(2);
            Configuration::new(n, a, n - q - a)?
        }
        ClaimId::InformationSpreading => Configuration::new(n, 1, 0)?,
        ClaimId::SIncrease => Configuration::from_bias_at_least(n, (2.0 * params.gamma * w).ceil() as i64, n.div_ceil(3))?,
        ClaimId::BDecrease => {
            let (b, q) = ((nf * 0.1).round() as u64, (nf * 0.1).round() as u64);
            Configuration::new(n, n.saturating_sub(b + q), b)?
        }
        ClaimId::SPreserved => {
            let q = (2.0 * w).ceil() as u64;
            Configuration::from_bias_at_least(n, (2.0 * nf / 3.0).ceil() as i64, q)?
        }
        ClaimId::QPreserved => {
            let b = (2.0 * w).ceil() as u64;
            Configuration::new(n, n.saturating_sub(b), b)?
        }
        ClaimId::QDecrease => {
            let q = (12.0 * w).ceil() as u64;
            let b = (2.0 * w).floor() as u64;
            Configuration::new(n, n.saturating_sub(q + b), b)?
        }
        ClaimId::AWins => {
            let q = (params.gamma * w).floor() as u64;
            let b = (2.0 * w).floor() as u64;
            Configuration::new(n, n.saturating_sub(q + b), b)?
        }
        ClaimId::SDoesNotDecrease => Configuration::from_bias_at_least(n, (params.gamma * w).ceil() as i64, 0)?,
        ClaimId::QBounded => {
            let q = n.div_ceil(18);
            Configuration::from_bias_at_least(n, 0, q)?
        }
        ClaimId::ApxMinBias => super::minority_start(n)?,
    };
    let spec = ClaimSpec::with_params(id, *params);
    spec.precondition(&cfg)
        .map_err(|reason| Error::Precondition { claim: id.to_string(), reason: format!("{reason} fails at n = {n}") })?;
    Ok(cfg)
}

/// Run `trials` evaluations of the claim from `cfg`.
pub fn validate_claim(spec: &ClaimSpec, cfg: &Configuration, trials: u64, seed: u64) -> Result<ExperimentReport> {
    spec.precondition(cfg)
        .map_err(|reason| Error::Precondition { claim: spec.id.to_string(), reason: format!("{reason} fails at {cfg}") })?;
    let started = Instant::now();
    let tag = 0xc1a1_0000 + spec.id as u64;
    let passes = par_trials(seed, &[tag, cfg.n()], trials, |_, rng| spec.trial(cfg, rng));
    let pass_count = passes.iter().filter(|&&p| p).count() as u64;
    Ok(ExperimentReport::from_counts(spec.id.as_str(), cfg.n(), trials, pass_count, seed, started.elapsed()))
}
