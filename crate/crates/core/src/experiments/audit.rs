//! Region-transition audit over many simulated trajectories.

use serde::{Deserialize, Serialize};

use super::par_trials;
use crate::config::Configuration;
use crate::dynamics::simulate;
use crate::error::{Error, Result};
use crate::phase::{allowed_digraph, classify, sqrt_n_ln_n, PhaseParameters, RegionLabel};

const TAG_AUDIT: u64 = 0xa0d1;
const LABELS: usize = 10;

fn ordinal(r: RegionLabel) -> usize {
    r as usize
}

const ALL_LABELS: [RegionLabel; LABELS] = [
    RegionLabel::H1,
    RegionLabel::H2,
    RegionLabel::H3,
    RegionLabel::H4,
    RegionLabel::H5,
    RegionLabel::H6,
    RegionLabel::H7,
    RegionLabel::AbsorbedAlpha,
    RegionLabel::AbsorbedBeta,
    RegionLabel::AbsorbedUndecided,
];

/// One interior starting configuration for each of H1..H7.
pub fn region_starts(n: u64, params: &PhaseParameters) -> Result<Vec<(RegionLabel, Configuration)>> {
    let nf = n as f64;
    let w = sqrt_n_ln_n(n);
    let at = |sigma: f64, q: f64| Configuration::from_bias_at_least(n, sigma.round() as i64, q.round() as u64);
    let h7_sigma = (2.0 * nf / 3.0 + nf - 5.0 * w) / 2.0;
    let starts = [
        (RegionLabel::H1, at(0.0, 0.6 * nf)?),
        (RegionLabel::H2, at(0.0, 0.25 * nf)?),
        (RegionLabel::H3, at(0.0, 0.02 * nf)?),
        (RegionLabel::H4, at(0.3 * nf, 0.3 * nf)?),
        (RegionLabel::H5, at(0.5 * nf, 0.02 * nf)?),
        (RegionLabel::H6, at(0.8 * nf, 0.1 * nf)?),
        (RegionLabel::H7, at(h7_sigma, (w / 2.0).floor())?),
    ];
    for (label, cfg) in &starts {
        let got = classify(cfg, params).label;
        if got != *label {
            return Err(Error::InvalidParameter(format!(
                "n = {n} too small for an interior {label} start ({cfg} is {got})"
            )));
        }
    }
    Ok(starts.to_vec())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ArrowCount {
    pub from: RegionLabel,
    pub to: RegionLabel,
    pub count: u64,
    pub allowed: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AuditSummary {
    pub n: u64,
    pub trajectories: u64,
    pub transitions: u64,
    pub disallowed: u64,
    pub timeouts: u64,
    /// Every observed `(from, to)` pair, self-loops included.
    pub arrows: Vec<ArrowCount>,
}

impl AuditSummary {
    pub fn disallowed_fraction(&self) -> f64 {
        if self.transitions == 0 {
            0.0
        } else {
            self.disallowed as f64 / self.transitions as f64
        }
    }
}

/// Simulate `trajectories` runs, cycling through `starts`, and tally every
/// consecutive region pair against the allowed digraph.
pub fn phase_audit(
    starts: &[Configuration],
    trajectories: u64,
    seed: u64,
    params: &PhaseParameters,
    max_rounds: u64,
) -> Result<AuditSummary> {
    let n = starts.first().ok_or_else(|| Error::InvalidParameter("no start configurations".into()))?.n();
    if starts.iter().any(|c| c.n() != n) {
        return Err(Error::InvalidParameter("start configurations differ in n".into()));
    }
    let per_run = par_trials(seed, &[TAG_AUDIT, n], trajectories, |i, rng| {
        let start = starts[(i % starts.len() as u64) as usize];
        let mut counts = [[0u64; LABELS]; LABELS];
        let mut prev: Option<RegionLabel> = None;
        let (outcome, _) = simulate(start, rng, max_rounds, |_, c| {
            let label = classify(c, params).label;
            if let Some(p) = prev {
                counts[ordinal(p)][ordinal(label)] += 1;
            }
            prev = Some(label);
        });
        (counts, outcome == crate::dynamics::Outcome::Timeout)
    });

    let mut total = [[0u64; LABELS]; LABELS];
    let mut timeouts = 0;
    for (counts, timed_out) in &per_run {
        timeouts += *timed_out as u64;
        for (row, add) in total.iter_mut().zip(counts) {
            for (x, y) in row.iter_mut().zip(add) {
                *x += y;
            }
        }
    }
    let digraph = allowed_digraph();
    let mut arrows = Vec::new();
    let (mut transitions, mut disallowed) = (0, 0);
    for from in ALL_LABELS {
        for to in ALL_LABELS {
            let count = total[ordinal(from)][ordinal(to)];
            if count == 0 {
                continue;
            }
            let allowed = digraph.contains(from, to);
            transitions += count;
            if !allowed {
                disallowed += count;
            }
            arrows.push(ArrowCount { from, to, count, allowed });
        }
    }
    Ok(AuditSummary { n, trajectories, transitions, disallowed, timeouts, arrows })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ordinals_match_label_table() {
        for (i, l) in ALL_LABELS.iter().enumerate() {
            assert_eq!(ordinal(*l), i);
        }
    }

    #[test]
    fn starts_land_in_their_regions() {
        let p = PhaseParameters::default();
        for n in [20_000u64, 100_000, 1_000_000] {
            assert_eq!(region_starts(n, &p).unwrap().len(), 7);
        }
        assert!(region_starts(500, &p).is_err());
    }

    #[test]
    fn small_audit_is_mostly_allowed() {
        let p = PhaseParameters::default();
        let starts: Vec<Configuration> = region_starts(20_000, &p).unwrap().into_iter().map(|x| x.1).collect();
        let s = phase_audit(&starts, 140, 3, &p, 2000).unwrap();
        assert_eq!(s.trajectories, 140);
        assert!(s.transitions > 140);
        assert!(s.disallowed_fraction() < 0.01, "{s:?}");
        assert_eq!(s.arrows.iter().map(|a| a.count).sum::<u64>(), s.transitions);
    }
}
