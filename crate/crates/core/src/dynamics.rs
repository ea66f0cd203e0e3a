//! One synchronous round of the undecided-state dynamics on the complete
//! graph, sampled exactly at the level of class counts.
//!
//! Every node pulls one of the `n` nodes uniformly at random, itself included.
//! Per class this gives:
//!
//! * Alpha nodes stay Alpha unless they pull Beta: `a_keep ~ Bin(a, (a+q)/n)`.
//! * Beta nodes likewise: `b_keep ~ Bin(b, (b+q)/n)`.
//! * Undecided nodes adopt what they pull:
//!   `(q_to_a, q_to_b, q_stay) ~ Multinomial(q; a/n, b/n, q/n)`.
//!
//! The three draws are independent, so the round costs O(1) regardless of `n`.

use rand::Rng;
use rand_distr::{Binomial, Distribution};
use serde::{Deserialize, Serialize};

use crate::config::{Configuration, StepDecomposition};

/// Conditional expectation of the next configuration's counts.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Expectation {
    pub a: f64,
    pub b: f64,
    pub q: f64,
    pub s: f64,
}

pub fn expected_next(cfg: &Configuration) -> Expectation {
    let n = cfg.n() as f64;
    let (a, b, q) = (cfg.a() as f64, cfg.b() as f64, cfg.q() as f64);
    Expectation {
        a: a * (a + 2.0 * q) / n,
        b: b * (b + 2.0 * q) / n,
        q: (q * q + 2.0 * a * b) / n,
        s: (a - b) * (1.0 + q / n),
    }
}

#[inline]
fn binomial<R: Rng + ?Sized>(trials: u64, p: f64, rng: &mut R) -> u64 {
    if trials == 0 || p <= 0.0 {
        return 0;
    }
    if p >= 1.0 {
        return trials;
    }
    Binomial::new(trials, p)
        .expect("probability in (0, 1)")
        .sample(rng)
}

pub fn step_decomposed<R: Rng + ?Sized>(cfg: &Configuration, rng: &mut R) -> StepDecomposition {
    let n = cfg.n() as f64;
    let (a, b, q) = (cfg.a(), cfg.b(), cfg.q());

    let a_keep = binomial(a, (a + q) as f64 / n, rng);
    let b_keep = binomial(b, (b + q) as f64 / n, rng);

    // Trinomial as a chain of conditional binomials.
    let q_to_a = binomial(q, a as f64 / n, rng);
    let rest = q - q_to_a;
    let q_to_b = if b + q == 0 {
        0
    } else {
        binomial(rest, b as f64 / (b + q) as f64, rng)
    };

    StepDecomposition {
        a_keep,
        b_keep,
        q_to_a,
        q_to_b,
        q_stay: rest - q_to_b,
    }
}

pub fn step<R: Rng + ?Sized>(cfg: &Configuration, rng: &mut R) -> Configuration {
    step_decomposed(cfg, rng).next(cfg.n())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Outcome {
    AbsorbedAlpha,
    AbsorbedBeta,
    AbsorbedUndecided,
    Timeout,
}

impl Outcome {
    pub fn of(cfg: &Configuration) -> Option<Self> {
        if cfg.a() == cfg.n() {
            Some(Outcome::AbsorbedAlpha)
        } else if cfg.b() == cfg.n() {
            Some(Outcome::AbsorbedBeta)
        } else if cfg.q() == cfg.n() {
            Some(Outcome::AbsorbedUndecided)
        } else {
            None
        }
    }

    pub fn is_monochromatic(self) -> bool {
        matches!(self, Outcome::AbsorbedAlpha | Outcome::AbsorbedBeta)
    }

    pub fn label(self) -> &'static str {
        match self {
            Outcome::AbsorbedAlpha => "absorbed-alpha",
            Outcome::AbsorbedBeta => "absorbed-beta",
            Outcome::AbsorbedUndecided => "absorbed-undecided",
            Outcome::Timeout => "timeout",
        }
    }
}

/// `ceil(100 ln n)`, at least one round.
pub fn default_max_rounds(n: u64) -> u64 {
    ((100.0 * (n as f64).ln()).ceil() as u64).max(1)
}

#[derive(Clone, Debug, PartialEq)]
pub struct Run {
    /// Starts at the initial configuration; one entry per round after that.
    pub trajectory: Vec<Configuration>,
    pub outcome: Outcome,
}

impl Run {
    /// Rounds actually simulated.
    pub fn rounds(&self) -> u64 {
        self.trajectory.len() as u64 - 1
    }
}

/// Step until absorption or `max_rounds` rounds, visiting every configuration
/// (including the start). Returns the outcome and the number of rounds taken.
pub fn simulate<R, F>(start: Configuration, rng: &mut R, max_rounds: u64, mut visit: F) -> (Outcome, u64)
where
    R: Rng + ?Sized,
    F: FnMut(u64, &Configuration),
{
    let mut cur = start;
    visit(0, &cur);
    for round in 1..=max_rounds {
        if let Some(outcome) = Outcome::of(&cur) {
            return (outcome, round - 1);
        }
        cur = step(&cur, rng);
        visit(round, &cur);
    }
    match Outcome::of(&cur) {
        Some(outcome) => (outcome, max_rounds),
        None => (Outcome::Timeout, max_rounds),
    }
}

pub fn run_until_absorbed<R: Rng + ?Sized>(cfg: Configuration, rng: &mut R, max_rounds: u64) -> Run {
    let mut trajectory = Vec::new();
    let (outcome, _) = simulate(cfg, rng, max_rounds, |_, c| trajectory.push(*c));
    Run { trajectory, outcome }
}

/// Outcome and absorption round without keeping the trajectory.
pub fn rounds_to_absorption<R: Rng + ?Sized>(cfg: Configuration, rng: &mut R, max_rounds: u64) -> (Outcome, u64) {
    simulate(cfg, rng, max_rounds, |_, _| {})
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::RandomSource;
    use crate::stats::mean_and_se;
    use proptest::prelude::*;

    fn cfg(n: u64, a: u64, b: u64) -> Configuration {
        Configuration::new(n, a, b).unwrap()
    }

    #[test]
    fn expectation_examples() {
        let e = expected_next(&cfg(100, 40, 20));
        assert_eq!((e.a, e.b, e.q, e.s), (48.0, 20.0, 32.0, 28.0));
        let e = expected_next(&cfg(50, 50, 0));
        assert_eq!((e.a, e.b, e.q, e.s), (50.0, 0.0, 0.0, 50.0));
        let e = expected_next(&cfg(30, 0, 0));
        assert_eq!((e.a, e.b, e.q, e.s), (0.0, 0.0, 30.0, 0.0));
    }

    #[test]
    fn absorbing_rounds_are_fixed() {
        for seed in 0..50 {
            let mut rng = RandomSource::new(seed, 0);
            let d = step_decomposed(&cfg(10, 10, 0), &mut rng);
            assert_eq!(d, StepDecomposition { a_keep: 10, ..Default::default() });
            let d = step_decomposed(&cfg(10, 0, 0), &mut rng);
            assert_eq!(d, StepDecomposition { q_stay: 10, ..Default::default() });
            assert_eq!(step(&cfg(5, 5, 0), &mut rng), cfg(5, 5, 0));
        }
    }

    #[test]
    fn no_recoloring_from_full_colored() {
        for seed in 0..500 {
            let mut rng = RandomSource::new(seed, 1);
            let next = step(&cfg(5, 2, 3), &mut rng);
            assert!(next.a() <= 2 && next.b() <= 3);
        }
    }

    #[test]
    fn two_node_outcomes_are_uniform() {
        // Each of the two nodes pulls itself or the other with probability 1/2:
        // keeps its color or turns undecided. Four equally likely outcomes.
        let trials = 40_000u64;
        let mut counts = std::collections::HashMap::new();
        let mut rng = RandomSource::new(11, 0);
        for _ in 0..trials {
            let next = step(&cfg(2, 1, 1), &mut rng);
            *counts.entry((next.a(), next.b())).or_insert(0u64) += 1;
        }
        assert_eq!(counts.len(), 4);
        for key in [(1, 1), (1, 0), (0, 1), (0, 0)] {
            let p = counts[&key] as f64 / trials as f64;
            let se = (0.25f64 * 0.75 / trials as f64).sqrt();
            assert!((p - 0.25).abs() < 4.0 * se, "{key:?}: {p}");
        }
    }

    #[test]
    fn monte_carlo_mean_matches_expectation() {
        let c = cfg(100, 40, 20);
        let samples: Vec<f64> = (0..100_000)
            .map(|seed| {
                let mut rng = RandomSource::new(seed, 0);
                let d = step_decomposed(&c, &mut rng);
                (d.a_keep + d.q_to_a) as f64
            })
            .collect();
        let (mean, se) = mean_and_se(&samples);
        assert!((mean - 48.0).abs() < 3.0 * se, "mean {mean} se {se}");
    }

    #[test]
    fn run_examples() {
        let mut rng = RandomSource::new(0, 0);
        let r = run_until_absorbed(cfg(4, 4, 0), &mut rng, 10);
        assert_eq!(r.trajectory.len(), 1);
        assert_eq!(r.outcome, Outcome::AbsorbedAlpha);
        let r = run_until_absorbed(cfg(4, 0, 0), &mut rng, 10);
        assert_eq!(r.outcome, Outcome::AbsorbedUndecided);
    }

    #[test]
    fn timeout_is_an_outcome() {
        let mut rng = RandomSource::new(3, 0);
        let r = run_until_absorbed(cfg(1 << 20, 1 << 18, 1 << 18), &mut rng, 1);
        assert_eq!(r.outcome, Outcome::Timeout);
        assert_eq!(r.trajectory.len(), 2);
    }

    #[test]
    fn max_rounds_default() {
        assert_eq!(default_max_rounds(1), 1);
        assert_eq!(default_max_rounds(4), 139);
    }

    proptest! {
        #[test]
        fn round_invariants(n in 1u64..5000, fa in 0.0f64..1.0, fb in 0.0f64..1.0, seed: u64) {
            let a = (fa * n as f64) as u64;
            let b = ((n - a) as f64 * fb) as u64;
            let c = cfg(n, a, b);
            let mut rng = RandomSource::new(seed, 0);
            let d = step_decomposed(&c, &mut rng);
            prop_assert!(d.a_keep <= a && d.b_keep <= b);
            prop_assert_eq!(d.q_to_a + d.q_to_b + d.q_stay, c.q());
            let next = d.next(n);
            prop_assert_eq!(next.a() + next.b() + next.q(), n);
            prop_assert!(next.s().unsigned_abs() <= a.max(b) + c.q());
            let e = expected_next(&c);
            prop_assert!((e.a + e.b + e.q - n as f64).abs() <= 1e-9 * n as f64);
            prop_assert!((e.a - e.b - e.s).abs() <= 1e-9 * n as f64);
        }

        #[test]
        fn replay_is_deterministic(seed: u64, stream: u64) {
            let c = cfg(1000, 300, 200);
            let r1 = run_until_absorbed(c, &mut RandomSource::new(seed, stream), 50);
            let r2 = run_until_absorbed(c, &mut RandomSource::new(seed, stream), 50);
            prop_assert_eq!(r1, r2);
        }
    }
}
