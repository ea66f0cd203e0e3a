//! Complete-graph macrostate and the per-round class transfer counts.

use serde::{Deserialize, Serialize};
use std::fmt;

use crate::error::{Error, Result};

/// Largest population for which class probabilities stay exact in `f64`.
pub const MAX_POPULATION: u64 = 1 << 40;

/// Counts of Alpha-colored, Beta-colored and (implicitly) undecided nodes.
///
/// On the complete graph this is a sufficient statistic for the process.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Configuration {
    n: u64,
    a: u64,
    b: u64,
}

impl Configuration {
    pub fn new(n: u64, a: u64, b: u64) -> Result<Self> {
        if n == 0 || a.checked_add(b).is_none_or(|c| c > n) {
            return Err(Error::InvalidConfiguration { n, a, b });
        }
        if n > MAX_POPULATION {
            return Err(Error::PopulationTooLarge { n, max: MAX_POPULATION });
        }
        Ok(Self { n, a, b })
    }

    /// Configuration with `q` undecided nodes and bias `s = a - b`.
    ///
    /// Fails unless `n - q` and `s` have the same parity and `|s| <= n - q`.
    pub fn from_bias(n: u64, s: i64, q: u64) -> Result<Self> {
        let colored = n.checked_sub(q).ok_or(Error::InvalidConfiguration { n, a: 0, b: 0 })? as i64;
        if s.abs() > colored || (colored - s).rem_euclid(2) != 0 {
            return Err(Error::InvalidParameter(format!(
                "bias {s} not attainable with n = {n}, q = {q}"
            )));
        }
        let a = ((colored + s) / 2) as u64;
        Self::new(n, a, colored as u64 - a)
    }

    /// Like [`Configuration::from_bias`] but rounds the bias up by one when
    /// parity demands it.
    pub fn from_bias_at_least(n: u64, s: i64, q: u64) -> Result<Self> {
        let colored = n.saturating_sub(q) as i64;
        let s = if (colored - s).rem_euclid(2) != 0 { s + 1 } else { s };
        Self::from_bias(n, s, q)
    }

    #[inline]
    pub fn n(&self) -> u64 {
        self.n
    }

    #[inline]
    pub fn a(&self) -> u64 {
        self.a
    }

    #[inline]
    pub fn b(&self) -> u64 {
        self.b
    }

    /// Undecided count.
    #[inline]
    pub fn q(&self) -> u64 {
        self.n - self.a - self.b
    }

    /// Bias `a - b`.
    #[inline]
    pub fn s(&self) -> i64 {
        self.a as i64 - self.b as i64
    }

    /// Colors swapped.
    pub fn mirrored(&self) -> Self {
        Self { n: self.n, a: self.b, b: self.a }
    }

    pub fn is_absorbing(&self) -> bool {
        self.a == self.n || self.b == self.n || self.q() == self.n
    }
}

impl fmt::Display for Configuration {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(n={}, a={}, b={}, q={})", self.n, self.a, self.b, self.q())
    }
}

/// What happened to each class in one round.
///
/// Colored nodes can only keep their color or turn undecided, so the next
/// configuration is `a' = a_keep + q_to_a`, `b' = b_keep + q_to_b`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct StepDecomposition {
    pub a_keep: u64,
    pub b_keep: u64,
    pub q_to_a: u64,
    pub q_to_b: u64,
    pub q_stay: u64,
}

impl StepDecomposition {
    /// The configuration this decomposition leads to from a population of `n`.
    pub fn next(&self, n: u64) -> Configuration {
        Configuration {
            n,
            a: self.a_keep + self.q_to_a,
            b: self.b_keep + self.q_to_b,
        }
    }
}
