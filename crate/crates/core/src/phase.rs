//! Partition of the configuration space into the regions H1..H7 and the
//! region-transition digraph a trajectory is expected to follow.
//!
//! With `sigma = |s|`, `theta = gamma * sqrt(n ln n)` and `w = sqrt(n ln n)`:
//!
//! | region | bias                      | undecided                |
//! |--------|---------------------------|--------------------------|
//! | H1     | sigma < theta             | q >= n/2                 |
//! | H2     | sigma < theta             | n/18 <= q < n/2          |
//! | H3     | sigma < theta             | q < n/18                 |
//! | H4     | theta <= sigma < 2n/3     | q >= n/18                |
//! | H5     | theta <= sigma < 2n/3     | q < n/18                 |
//! | H7     | 2n/3 <= sigma <= n - 5w   | q <= w                   |
//! | H6     | sigma >= 2n/3             | everything not in H7     |
//!
//! Boundary values go to the high-bias group, to the larger-q region, and
//! H7 is checked before H6. Absorbing states get their own labels.

use serde::{Deserialize, Serialize};
use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use crate::config::Configuration;
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PhaseParameters {
    gamma: f64,
}

impl PhaseParameters {
    pub const DEFAULT_GAMMA: f64 = 1.0;

    pub fn new(gamma: f64) -> Result<Self> {
        if gamma.is_finite() && gamma > 0.0 {
            Ok(Self { gamma })
        } else {
            Err(Error::InvalidParameter(format!("gamma must be positive, got {gamma}")))
        }
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    /// Bias threshold `gamma * sqrt(n ln n)` separating the low-bias regions.
    pub fn bias_threshold(&self, n: u64) -> f64 {
        self.gamma * sqrt_n_ln_n(n)
    }
}

impl Default for PhaseParameters {
    fn default() -> Self {
        Self { gamma: Self::DEFAULT_GAMMA }
    }
}

/// `sqrt(n ln n)` with the natural logarithm.
pub fn sqrt_n_ln_n(n: u64) -> f64 {
    let n = n as f64;
    (n * n.ln()).sqrt()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum RegionLabel {
    H1,
    H2,
    H3,
    H4,
    H5,
    H6,
    H7,
    #[serde(rename = "ABS_A")]
    AbsorbedAlpha,
    #[serde(rename = "ABS_B")]
    AbsorbedBeta,
    #[serde(rename = "ABS_Q")]
    AbsorbedUndecided,
}

impl RegionLabel {
    pub const TRANSIENT: [RegionLabel; 7] = [
        RegionLabel::H1,
        RegionLabel::H2,
        RegionLabel::H3,
        RegionLabel::H4,
        RegionLabel::H5,
        RegionLabel::H6,
        RegionLabel::H7,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            RegionLabel::H1 => "H1",
            RegionLabel::H2 => "H2",
            RegionLabel::H3 => "H3",
            RegionLabel::H4 => "H4",
            RegionLabel::H5 => "H5",
            RegionLabel::H6 => "H6",
            RegionLabel::H7 => "H7",
            RegionLabel::AbsorbedAlpha => "ABS_A",
            RegionLabel::AbsorbedBeta => "ABS_B",
            RegionLabel::AbsorbedUndecided => "ABS_Q",
        }
    }

    pub fn is_low_bias(self) -> bool {
        matches!(self, RegionLabel::H1 | RegionLabel::H2 | RegionLabel::H3)
    }

    pub fn is_absorbed(self) -> bool {
        matches!(
            self,
            RegionLabel::AbsorbedAlpha | RegionLabel::AbsorbedBeta | RegionLabel::AbsorbedUndecided
        )
    }
}

impl fmt::Display for RegionLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for RegionLabel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "H1" => RegionLabel::H1,
            "H2" => RegionLabel::H2,
            "H3" => RegionLabel::H3,
            "H4" => RegionLabel::H4,
            "H5" => RegionLabel::H5,
            "H6" => RegionLabel::H6,
            "H7" => RegionLabel::H7,
            "ABS_A" => RegionLabel::AbsorbedAlpha,
            "ABS_B" => RegionLabel::AbsorbedBeta,
            "ABS_Q" => RegionLabel::AbsorbedUndecided,
            other => return Err(Error::InvalidParameter(format!("unknown region label {other:?}"))),
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MajoritySign {
    AlphaLeading,
    BetaLeading,
    Tied,
}

impl MajoritySign {
    pub fn of(s: i64) -> Self {
        match s.signum() {
            1 => MajoritySign::AlphaLeading,
            -1 => MajoritySign::BetaLeading,
            _ => MajoritySign::Tied,
        }
    }

    pub fn flipped(self) -> Self {
        match self {
            MajoritySign::AlphaLeading => MajoritySign::BetaLeading,
            MajoritySign::BetaLeading => MajoritySign::AlphaLeading,
            MajoritySign::Tied => MajoritySign::Tied,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Region {
    pub label: RegionLabel,
    pub majority_sign: MajoritySign,
}

pub fn classify(cfg: &Configuration, params: &PhaseParameters) -> Region {
    let majority_sign = MajoritySign::of(cfg.s());
    let label = classify_label(cfg, params);
    Region { label, majority_sign }
}

fn classify_label(cfg: &Configuration, params: &PhaseParameters) -> RegionLabel {
    let (n, q) = (cfg.n(), cfg.q());
    if cfg.a() == n {
        return RegionLabel::AbsorbedAlpha;
    }
    if cfg.b() == n {
        return RegionLabel::AbsorbedBeta;
    }
    if q == n {
        return RegionLabel::AbsorbedUndecided;
    }

    let sigma = cfg.s().unsigned_abs();
    // Rational comparisons in integers, sqrt thresholds in floats.
    let q_large = 18 * q >= n;
    if (sigma as f64) < params.bias_threshold(n) {
        if 2 * q >= n {
            RegionLabel::H1
        } else if q_large {
            RegionLabel::H2
        } else {
            RegionLabel::H3
        }
    } else if 3 * sigma < 2 * n {
        if q_large {
            RegionLabel::H4
        } else {
            RegionLabel::H5
        }
    } else {
        let w = sqrt_n_ln_n(n);
        if (q as f64) <= w && (sigma as f64) <= n as f64 - 5.0 * w {
            RegionLabel::H7
        } else {
            RegionLabel::H6
        }
    }
}

/// Region transitions that occur with non-negligible probability.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PhaseDigraph {
    arrows: BTreeSet<(RegionLabel, RegionLabel)>,
}

impl PhaseDigraph {
    pub fn contains(&self, from: RegionLabel, to: RegionLabel) -> bool {
        self.arrows.contains(&(from, to))
    }

    pub fn arrows(&self) -> impl Iterator<Item = (RegionLabel, RegionLabel)> + '_ {
        self.arrows.iter().copied()
    }

    pub fn len(&self) -> usize {
        self.arrows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.arrows.is_empty()
    }
}

pub fn allowed_digraph() -> PhaseDigraph {
    use RegionLabel::*;
    let mut arrows: BTreeSet<_> = [
        (H3, H1),
        (H3, H2),
        (H3, H4),
        (H1, H2),
        (H1, H4),
        (H2, H4),
        (H4, H6),
        (H5, H4),
        (H5, H6),
        (H7, H4),
        (H7, H5),
        (H7, H6),
        (H6, AbsorbedAlpha),
        (H6, AbsorbedBeta),
    ]
    .into_iter()
    .collect();
    for r in RegionLabel::TRANSIENT {
        arrows.insert((r, r));
    }
    // Absorbing states never move.
    for r in [AbsorbedAlpha, AbsorbedBeta, AbsorbedUndecided] {
        arrows.insert((r, r));
    }
    PhaseDigraph { arrows }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct AuditEntry {
    /// Round of the destination configuration.
    pub round: u64,
    pub from: RegionLabel,
    pub to: RegionLabel,
    pub allowed: bool,
}

pub fn audit_trajectory(traj: &[Configuration], params: &PhaseParameters) -> Vec<AuditEntry> {
    let digraph = allowed_digraph();
    let labels: Vec<RegionLabel> = traj.iter().map(|c| classify(c, params).label).collect();
    labels
        .windows(2)
        .enumerate()
        .map(|(i, w)| AuditEntry {
            round: i as u64 + 1,
            from: w[0],
            to: w[1],
            allowed: digraph.contains(w[0], w[1]),
        })
        .collect()
}
