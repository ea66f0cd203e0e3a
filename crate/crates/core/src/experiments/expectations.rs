//! Monte Carlo means of one step against the closed-form expectations.

use serde::{Deserialize, Serialize};

use super::par_trials;
use crate::config::Configuration;
use crate::dynamics::{expected_next, step, Expectation};
use crate::stats::mean_and_se;

const TAG_EXPECT: u64 = 0xe700;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Moment {
    pub mean: f64,
    pub se: f64,
}

impl Moment {
    fn of(xs: &[f64]) -> Self {
        let (mean, se) = mean_and_se(xs);
        Self { mean, se }
    }

    /// `|mean - target| <= k se`, with a floor for degenerate samples.
    pub fn agrees(&self, target: f64, k: f64) -> bool {
        (self.mean - target).abs() <= k * self.se + 1e-9 * target.abs().max(1.0)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExpectationCheck {
    pub start: Configuration,
    pub trials: u64,
    pub formula: Expectation,
    pub a: Moment,
    pub b: Moment,
    pub q: Moment,
    pub s: Moment,
}

impl ExpectationCheck {
    pub fn agrees(&self, k: f64) -> bool {
        self.a.agrees(self.formula.a, k)
            && self.b.agrees(self.formula.b, k)
            && self.q.agrees(self.formula.q, k)
            && self.s.agrees(self.formula.s, k)
    }
}

pub fn expectation_check(start: &Configuration, trials: u64, seed: u64) -> ExpectationCheck {
    let samples = par_trials(seed, &[TAG_EXPECT, start.n()], trials, |_, rng| step(start, rng));
    let col = |f: fn(&Configuration) -> f64| samples.iter().map(f).collect::<Vec<f64>>();
    ExpectationCheck {
        start: *start,
        trials,
        formula: expected_next(start),
        a: Moment::of(&col(|c| c.a() as f64)),
        b: Moment::of(&col(|c| c.b() as f64)),
        q: Moment::of(&col(|c| c.q() as f64)),
        s: Moment::of(&col(|c| c.s() as f64)),
    }
}
