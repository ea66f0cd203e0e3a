//! Seeded Monte Carlo experiments with pass-rate reporting.
//!
//! Trial `i` of an experiment always draws from the stream derived from
//! `(seed, experiment tag, n, i)`, and results are aggregated by counting, so
//! reports do not depend on how many worker threads run the trials.

mod audit;
mod claims;
mod expectations;
mod hypotheses;
mod trajectories;

pub use audit::{phase_audit, region_starts, ArrowCount, AuditSummary};
pub use claims::{default_configuration, validate_claim, ClaimId, ClaimParams, ClaimSpec};
pub use expectations::{expectation_check, ExpectationCheck, Moment};
pub use hypotheses::{
    estimate_h2_hypotheses, hypothesis_sample, sample_configurations, HypothesisEstimate, HypothesisSample, GROWTH_C2,
};
pub use trajectories::{
    convergence_scaling, lower_bound_experiment, lower_bound_start, minority_start, minority_win_probability,
    symmetry_breaking_time, HittingTimes, LowerBoundReport, MinorityReport, ScalingRow, ScalingTable, StartKind,
};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::time::Duration;

use crate::report::{Cell, Table};
use crate::rng::RandomSource;
use crate::stats::{wilson_interval, Z_99};

/// Run `trials` independent trials in parallel, results in trial order.
pub(crate) fn par_trials<T, F>(seed: u64, coords: &[u64], trials: u64, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(u64, &mut RandomSource) -> T + Sync,
{
    (0..trials)
        .into_par_iter()
        .map(|i| {
            let mut parts = coords.to_vec();
            parts.push(i);
            let mut rng = RandomSource::derived(seed, &parts);
            f(i, &mut rng)
        })
        .collect()
}

/// Pass count of a batch of trials with a 99% Wilson interval.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub id: String,
    pub n: u64,
    pub trials: u64,
    pub pass_count: u64,
    pub pass_rate: f64,
    pub ci_lo: f64,
    pub ci_hi: f64,
    pub seed: u64,
    /// Elapsed wall-clock time; the only field that varies between reruns.
    pub wall_ms: u64,
}

impl ExperimentReport {
    pub const COLUMNS: [&'static str; 9] =
        ["id", "n", "trials", "pass_count", "pass_rate", "ci_lo", "ci_hi", "seed", "wall_ms"];

    pub fn from_counts(id: impl Into<String>, n: u64, trials: u64, pass_count: u64, seed: u64, wall: Duration) -> Self {
        assert!(pass_count <= trials);
        let (ci_lo, ci_hi) = wilson_interval(pass_count, trials, Z_99);
        Self {
            id: id.into(),
            n,
            trials,
            pass_count,
            pass_rate: if trials == 0 { 0.0 } else { pass_count as f64 / trials as f64 },
            ci_lo,
            ci_hi,
            seed,
            wall_ms: wall.as_millis() as u64,
        }
    }

    pub fn failures(&self) -> u64 {
        self.trials - self.pass_count
    }

    pub fn row(&self) -> Vec<Cell> {
        vec![
            self.id.clone().into(),
            self.n.into(),
            self.trials.into(),
            self.pass_count.into(),
            self.pass_rate.into(),
            self.ci_lo.into(),
            self.ci_hi.into(),
            self.seed.into(),
            self.wall_ms.into(),
        ]
    }

    pub fn table<'a>(reports: impl IntoIterator<Item = &'a ExperimentReport>) -> Table {
        let mut t = Table::new(Self::COLUMNS);
        for r in reports {
            t.push(r.row());
        }
        t
    }
}
