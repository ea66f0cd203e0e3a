//! Whole-trajectory experiments: convergence time, symmetry breaking, the
//! minority-win construction and time spent in H4.

use serde::{Deserialize, Serialize};
use std::time::Instant;

use super::{par_trials, ExperimentReport};
use crate::config::Configuration;
use crate::dynamics::{default_max_rounds, rounds_to_absorption, simulate, step, Outcome};
use crate::error::{Error, Result};
use crate::phase::{classify, sqrt_n_ln_n, PhaseParameters, RegionLabel};
use crate::stats::{linear_fit, quantile, LinearFit};

const TAG_SYMMETRY: u64 = 0x5b00;
const TAG_SCALING: u64 = 0x5c00;
const TAG_MINORITY: u64 = 0x5d00;
const TAG_LOWER: u64 = 0x5e00;

fn sorted(xs: impl IntoIterator<Item = f64>) -> Vec<f64> {
    let mut v: Vec<f64> = xs.into_iter().collect();
    v.sort_by(f64::total_cmp);
    v
}

/// First rounds at which `|s|` reached `sqrt(n ln n)`; `None` if it never
/// did within the budget.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HittingTimes {
    pub start: Configuration,
    pub threshold: f64,
    pub max_rounds: u64,
    pub times: Vec<Option<u64>>,
}

impl HittingTimes {
    pub fn misses(&self) -> usize {
        self.times.iter().filter(|t| t.is_none()).count()
    }

    /// Empirical quantile with misses ranked last (as infinity).
    pub fn quantile(&self, p: f64) -> f64 {
        let v = sorted(self.times.iter().map(|t| t.map_or(f64::INFINITY, |x| x as f64)));
        if v.is_empty() {
            return f64::NAN;
        }
        // Interpolation against infinity is meaningless; use order statistics.
        v[((p.clamp(0.0, 1.0) * (v.len() - 1) as f64).round()) as usize]
    }

    pub fn median(&self) -> f64 {
        self.quantile(0.5)
    }
}

pub fn symmetry_breaking_time(start: &Configuration, trials: u64, seed: u64, max_rounds: u64) -> HittingTimes {
    let n = start.n();
    let threshold = sqrt_n_ln_n(n);
    let times = par_trials(seed, &[TAG_SYMMETRY, n], trials, |_, rng| {
        let mut hit = None;
        let mut cur = *start;
        for round in 0..=max_rounds {
            if cur.s().unsigned_abs() as f64 >= threshold {
                hit = Some(round);
                break;
            }
            if cur.is_absorbing() {
                break;
            }
            cur = step(&cur, rng);
        }
        hit
    });
    HittingTimes { start: *start, threshold, max_rounds, times }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum StartKind {
    /// `a = b = floor(n/2)`.
    Balanced,
    /// `q = 0`, `s = ceil(gamma sqrt(n ln n))` (rounded up to parity).
    Biased { gamma: f64 },
    /// `q = 0`, `s = ceil(fraction * n)` (rounded up to parity).
    BiasFraction { fraction: f64 },
}

impl StartKind {
    pub fn start(&self, n: u64) -> Result<Configuration> {
        let s = match *self {
            StartKind::Balanced => return Configuration::new(n, n / 2, n / 2),
            StartKind::Biased { gamma } => (gamma * sqrt_n_ln_n(n)).ceil(),
            StartKind::BiasFraction { fraction } => (fraction * n as f64).ceil(),
        };
        let s = (s as i64).min(n as i64);
        Configuration::from_bias_at_least(n, s, 0)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScalingRow {
    pub n: u64,
    pub trials: u64,
    pub max_rounds: u64,
    /// Timed-out runs enter the quantiles at `max_rounds`.
    pub median_rounds: f64,
    pub q90_rounds: f64,
    pub monochromatic: u64,
    pub alpha_wins: u64,
    pub undecided: u64,
    pub timeouts: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScalingTable {
    pub kind: StartKind,
    pub rows: Vec<ScalingRow>,
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
}

/// Absorption rounds for each `n`, plus the least-squares line of the median
/// against `ln n`. Each run gets `ceil(budget_factor * ln n)` rounds.
pub fn convergence_scaling(
    n_list: &[u64],
    kind: StartKind,
    trials: u64,
    seed: u64,
    budget_factor: f64,
) -> Result<ScalingTable> {
    if n_list.is_empty() {
        return Err(Error::InvalidParameter("empty list of population sizes".into()));
    }
    let mut rows = Vec::with_capacity(n_list.len());
    for &n in n_list {
        let start = kind.start(n)?;
        let max_rounds = ((budget_factor * (n as f64).ln()).ceil() as u64).max(1);
        let outcomes = par_trials(seed, &[TAG_SCALING, n], trials, |_, rng| rounds_to_absorption(start, rng, max_rounds));
        let count = |o: Outcome| outcomes.iter().filter(|(x, _)| *x == o).count() as u64;
        let rounds = sorted(outcomes.iter().map(|&(_, r)| r as f64));
        rows.push(ScalingRow {
            n,
            trials,
            max_rounds,
            median_rounds: quantile(&rounds, 0.5),
            q90_rounds: quantile(&rounds, 0.9),
            monochromatic: count(Outcome::AbsorbedAlpha) + count(Outcome::AbsorbedBeta),
            alpha_wins: count(Outcome::AbsorbedAlpha),
            undecided: count(Outcome::AbsorbedUndecided),
            timeouts: count(Outcome::Timeout),
        });
    }
    let xs: Vec<f64> = rows.iter().map(|r| (r.n as f64).ln()).collect();
    let ys: Vec<f64> = rows.iter().map(|r| r.median_rounds).collect();
    let LinearFit { slope, intercept, r_squared } = linear_fit(&xs, &ys);
    Ok(ScalingTable { kind, rows, slope, intercept, r_squared })
}

/// `q = n/3`, `a = n/3 + floor(sqrt n)`, `b = n/3 - floor(sqrt n)`.
pub fn minority_start(n: u64) -> Result<Configuration> {
    if !n.is_multiple_of(3) {
        return Err(Error::InvalidParameter(format!("n = {n} is not divisible by 3")));
    }
    let r = n.isqrt();
    let third = n / 3;
    let b = third
        .checked_sub(r)
        .ok_or_else(|| Error::InvalidParameter(format!("n = {n} too small for a sqrt(n) bias")))?;
    Configuration::new(n, third + r, b)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MinorityReport {
    /// `pass_count` counts runs absorbed at the initial minority color.
    pub report: ExperimentReport,
    pub start: Configuration,
    pub majority_wins: u64,
    pub undecided: u64,
    pub timeouts: u64,
}

/// Fraction of runs from [`minority_start`] (colors swapped if `mirrored`)
/// that end monochromatic in the initial minority color.
pub fn minority_win_probability(n: u64, trials: u64, seed: u64, mirrored: bool) -> Result<MinorityReport> {
    let base = minority_start(n)?;
    let start = if mirrored { base.mirrored() } else { base };
    let (minority, majority) = if start.s() > 0 {
        (Outcome::AbsorbedBeta, Outcome::AbsorbedAlpha)
    } else {
        (Outcome::AbsorbedAlpha, Outcome::AbsorbedBeta)
    };
    let started = Instant::now();
    let max_rounds = default_max_rounds(n);
    let outcomes = par_trials(seed, &[TAG_MINORITY, n, mirrored as u64], trials, |_, rng| {
        rounds_to_absorption(start, rng, max_rounds).0
    });
    let count = |o: Outcome| outcomes.iter().filter(|&&x| x == o).count() as u64;
    Ok(MinorityReport {
        report: ExperimentReport::from_counts("minority_win", n, trials, count(minority), seed, started.elapsed()),
        start,
        majority_wins: count(majority),
        undecided: count(Outcome::AbsorbedUndecided),
        timeouts: count(Outcome::Timeout),
    })
}

/// `s = round(n^(2/3))` (parity-adjusted), `q = round(n/3)`.
pub fn lower_bound_start(n: u64, params: &PhaseParameters) -> Result<Configuration> {
    let nf = n as f64;
    let s = nf.powf(2.0 / 3.0).round();
    if s < params.bias_threshold(n) {
        return Err(Error::Precondition {
            claim: "lower_bound".into(),
            reason: format!("n^(2/3) = {s} below the bias threshold at n = {n}"),
        });
    }
    Configuration::from_bias_at_least(n, s as i64, (nf / 3.0).round() as u64)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LowerBoundReport {
    pub start: Configuration,
    /// Consecutive rounds from round 0 whose configuration is in H4.
    pub rounds_in_h4: Vec<u64>,
    /// `log2(n) / 8`.
    pub threshold: f64,
    pub at_least_threshold: u64,
}

impl LowerBoundReport {
    pub fn median(&self) -> f64 {
        quantile(&sorted(self.rounds_in_h4.iter().map(|&r| r as f64)), 0.5)
    }

    pub fn fraction_at_least_threshold(&self) -> f64 {
        self.at_least_threshold as f64 / self.rounds_in_h4.len() as f64
    }
}

pub fn lower_bound_experiment(
    start: &Configuration,
    trials: u64,
    seed: u64,
    params: &PhaseParameters,
) -> LowerBoundReport {
    let n = start.n();
    let max_rounds = default_max_rounds(n);
    let rounds_in_h4 = par_trials(seed, &[TAG_LOWER, n], trials, |_, rng| {
        let mut streak = 0u64;
        let mut inside = true;
        simulate(*start, rng, max_rounds, |_, c| {
            inside &= classify(c, params).label == RegionLabel::H4;
            streak += inside as u64;
        });
        streak
    });
    let threshold = (n as f64).log2() / 8.0;
    let at_least_threshold = rounds_in_h4.iter().filter(|&&r| r as f64 >= threshold).count() as u64;
    LowerBoundReport { start: *start, rounds_in_h4, threshold, at_least_threshold }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stats::two_proportion_p_value;

    #[test]
    fn already_broken_symmetry_hits_at_zero() {
        let n = 10_000;
        let s = sqrt_n_ln_n(n).ceil() as i64 + 1;
        let start = Configuration::from_bias_at_least(n, s, 0).unwrap();
        let h = symmetry_breaking_time(&start, 20, 0, 100);
        assert!(h.times.iter().all(|&t| t == Some(0)));
    }

    #[test]
    fn tiny_population_always_absorbs() {
        let t = convergence_scaling(&[4], StartKind::Balanced, 1000, 3, 100.0).unwrap();
        assert_eq!(t.rows[0].timeouts, 0);
        assert!(convergence_scaling(&[], StartKind::Balanced, 10, 0, 100.0).is_err());
    }

    #[test]
    fn overwhelming_bias_wins() {
        let t = convergence_scaling(&[4096], StartKind::BiasFraction { fraction: 0.5 }, 200, 1, 100.0).unwrap();
        assert_eq!(t.rows[0].alpha_wins, 200);
    }

    #[test]
    fn start_shapes() {
        let s = minority_start(36).unwrap();
        assert_eq!((s.a(), s.b(), s.q()), (18, 6, 12));
        let s = minority_start(90_000).unwrap();
        assert_eq!((s.a(), s.b()), (30_300, 29_700));
        assert!(minority_start(35).is_err());
        let lb = lower_bound_start(1 << 20, &PhaseParameters::default()).unwrap();
        assert_eq!(classify(&lb, &PhaseParameters::default()).label, RegionLabel::H4);
        assert!(lower_bound_start(1000, &PhaseParameters::new(3.0).unwrap()).is_err());
    }

    #[test]
    fn start_outside_h4_spends_no_rounds_there() {
        let n = 1 << 14;
        let start = Configuration::from_bias_at_least(n, (0.7 * n as f64) as i64, (0.1 * n as f64) as u64).unwrap();
        let p = PhaseParameters::default();
        assert_eq!(classify(&start, &p).label, RegionLabel::H6);
        let r = lower_bound_experiment(&start, 20, 0, &p);
        assert!(r.rounds_in_h4.iter().all(|&x| x == 0));
    }

    #[test]
    fn minority_win_is_color_symmetric() {
        let x = minority_win_probability(36, 20_000, 4, false).unwrap();
        let y = minority_win_probability(36, 20_000, 4, true).unwrap();
        let p = two_proportion_p_value(x.report.pass_count, 20_000, y.report.pass_count, 20_000);
        assert!(p > 0.01, "{x:?} {y:?}");
    }
}
