//! Chernoff-type tail bounds for sums of independent 0-1 variables and a
//! Monte Carlo check of each against sampled binomials.
//!
//! Every bound is computed as a natural log first; the `ln_*` forms stay
//! meaningful where the plain value underflows.

use rand::Rng;
use rand_distr::{Binomial, Distribution};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::stats::proportion_se;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    Upper,
    Lower,
}

fn check_delta_open(delta: f64) -> Result<()> {
    if delta > 0.0 && delta < 1.0 {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!("delta = {delta} outside (0, 1)")))
    }
}

/// `ln` of the multiplicative bound: `-mu delta^2 / 3` above, `-mu delta^2 / 2` below.
pub fn ln_chernoff_mult(mu: f64, delta: f64, direction: Direction) -> Result<f64> {
    check_delta_open(delta)?;
    if mu.is_nan() || mu <= 0.0 {
        return Err(Error::InvalidParameter(format!("mu = {mu} must be positive")));
    }
    Ok(match direction {
        Direction::Upper => -mu * delta * delta / 3.0,
        Direction::Lower => -mu * delta * delta / 2.0,
    })
}

/// `P(X >= (1 + delta) mu)` or `P(X <= (1 - delta) mu)` is at most this.
pub fn chernoff_mult(mu: f64, delta: f64, direction: Direction) -> Result<f64> {
    ln_chernoff_mult(mu, delta, direction).map(f64::exp)
}

pub fn ln_chernoff_add(n: u64, lambda: f64) -> Result<f64> {
    if lambda.is_nan() || lambda <= 0.0 || n == 0 {
        return Err(Error::InvalidParameter(format!("need lambda > 0 and n >= 1, got lambda = {lambda}, n = {n}")));
    }
    Ok(-2.0 * lambda * lambda / n as f64)
}

/// `P(X >= mu + lambda)` and `P(X <= mu - lambda)` are each at most this.
pub fn chernoff_add(n: u64, lambda: f64) -> Result<f64> {
    ln_chernoff_add(n, lambda).map(f64::exp)
}

pub fn ln_reverse_chernoff(mu: f64, delta: f64, n: u64) -> Result<f64> {
    if !(delta > 0.0 && delta <= 0.5) {
        return Err(Error::ReverseChernoffDomain(format!("delta = {delta} outside (0, 1/2]")));
    }
    if mu > n as f64 / 2.0 {
        return Err(Error::ReverseChernoffDomain(format!("mu = {mu} exceeds n/2 = {}", n as f64 / 2.0)));
    }
    let d2mu = delta * delta * mu;
    if d2mu < 3.0 {
        return Err(Error::ReverseChernoffDomain(format!("delta^2 mu = {d2mu} < 3")));
    }
    Ok(-9.0 * d2mu)
}

/// Lower bound on both `P(X >= (1 + delta) mu)` and `P(X <= (1 - delta) mu)`.
pub fn reverse_chernoff(mu: f64, delta: f64, n: u64) -> Result<f64> {
    ln_reverse_chernoff(mu, delta, n).map(f64::exp)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "form", rename_all = "lowercase")]
pub enum BoundKind {
    Multiplicative { delta: f64 },
    Additive { lambda: f64 },
    Reverse { delta: f64 },
}

/// A tail event of `Binomial(n, p)` paired with the bound that applies to it.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TailQuery {
    pub n: u64,
    pub p: f64,
    pub direction: Direction,
    pub kind: BoundKind,
}

impl TailQuery {
    pub fn new(n: u64, p: f64, direction: Direction, kind: BoundKind) -> Result<Self> {
        if n == 0 || !(0.0..=1.0).contains(&p) {
            return Err(Error::InvalidParameter(format!("binomial parameters n = {n}, p = {p}")));
        }
        Ok(Self { n, p, direction, kind })
    }

    pub fn mu(&self) -> f64 {
        self.n as f64 * self.p
    }

    /// Tail event is `X >= threshold` (upper) or `X <= threshold` (lower).
    pub fn threshold(&self) -> f64 {
        let mu = self.mu();
        let sign = match self.direction {
            Direction::Upper => 1.0,
            Direction::Lower => -1.0,
        };
        match self.kind {
            BoundKind::Multiplicative { delta } | BoundKind::Reverse { delta } => mu * (1.0 + sign * delta),
            BoundKind::Additive { lambda } => mu + sign * lambda,
        }
    }

    pub fn is_reverse(&self) -> bool {
        matches!(self.kind, BoundKind::Reverse { .. })
    }

    pub fn ln_bound(&self) -> Result<f64> {
        match self.kind {
            BoundKind::Multiplicative { delta } => ln_chernoff_mult(self.mu(), delta, self.direction),
            BoundKind::Additive { lambda } => ln_chernoff_add(self.n, lambda),
            BoundKind::Reverse { delta } => ln_reverse_chernoff(self.mu(), delta, self.n),
        }
    }

    fn in_tail(&self, x: u64, slack: f64) -> bool {
        let t = self.threshold();
        match self.direction {
            Direction::Upper => x as f64 >= t - slack,
            Direction::Lower => x as f64 <= t + slack,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TailCheck {
    pub empirical: f64,
    pub se: f64,
    pub bound: f64,
    pub ln_bound: f64,
    pub consistent: bool,
}

/// Sample `Binomial(n, p)` `trials` times and compare the tail frequency
/// with the bound, allowing three standard errors of slack.
pub fn empirical_tail_check<R: Rng + ?Sized>(q: &TailQuery, trials: u64, rng: &mut R) -> Result<TailCheck> {
    let ln_bound = q.ln_bound()?;
    if trials == 0 {
        return Err(Error::InvalidParameter("trials must be positive".into()));
    }
    let dist = Binomial::new(q.n, q.p).map_err(|e| Error::InvalidParameter(e.to_string()))?;
    // Absorbs rounding in thresholds such as 1.3 * 60.
    let slack = 1e-9 * q.threshold().abs().max(1.0);
    let hits = (0..trials).filter(|_| q.in_tail(dist.sample(rng), slack)).count() as u64;
    let empirical = hits as f64 / trials as f64;
    let se = proportion_se(empirical, trials);
    let bound = ln_bound.exp();
    let consistent = if q.is_reverse() {
        empirical >= bound - 3.0 * se
    } else {
        empirical <= bound + 3.0 * se
    };
    Ok(TailCheck { empirical, se, bound, ln_bound, consistent })
}

/// Twenty queries spanning all three forms and both directions. The reverse
/// cases sit near `delta^2 mu = 3` so their tails are visible in `10^6` draws.
pub fn standard_grid() -> Vec<TailQuery> {
    use BoundKind::*;
    use Direction::*;
    let raw: [(u64, f64, Direction, BoundKind); 20] = [
        (100, 0.3, Upper, Multiplicative { delta: 0.5 }),
        (100, 0.3, Lower, Multiplicative { delta: 0.5 }),
        (1000, 0.5, Upper, Multiplicative { delta: 0.1 }),
        (1000, 0.5, Lower, Multiplicative { delta: 0.1 }),
        (500, 0.05, Upper, Multiplicative { delta: 0.8 }),
        (500, 0.05, Lower, Multiplicative { delta: 0.6 }),
        (60, 0.5, Upper, Multiplicative { delta: 0.2 }),
        (1000, 0.5, Upper, Additive { lambda: 50.0 }),
        (1000, 0.5, Lower, Additive { lambda: 30.0 }),
        (100, 0.2, Upper, Additive { lambda: 8.0 }),
        (100, 0.2, Lower, Additive { lambda: 8.0 }),
        (10_000, 0.7, Upper, Additive { lambda: 100.0 }),
        (50, 1.0, Upper, Additive { lambda: 1.0 }),
        (30, 0.9, Lower, Additive { lambda: 5.0 }),
        (200, 0.3, Upper, Reverse { delta: 0.3 }),
        (200, 0.3, Lower, Reverse { delta: 0.3 }),
        (24, 0.5, Upper, Reverse { delta: 0.5 }),
        (24, 0.5, Lower, Reverse { delta: 0.5 }),
        (1000, 0.1, Upper, Reverse { delta: 0.2 }),
        (400, 0.2, Lower, Reverse { delta: 0.25 }),
    ];
    raw.into_iter()
        .map(|(n, p, d, k)| TailQuery::new(n, p, d, k).expect("grid parameters are valid"))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::RandomSource;
    use proptest::prelude::*;

    fn close(x: f64, y: f64, rel: f64) -> bool {
        (x - y).abs() <= rel * y.abs()
    }

    #[test]
    fn multiplicative_values() {
        assert!(close(chernoff_mult(30.0, 0.5, Direction::Upper).unwrap(), 0.082_085, 1e-4));
        assert!(close(chernoff_mult(30.0, 0.5, Direction::Lower).unwrap(), 0.023_518, 1e-4));
        assert!(chernoff_mult(30.0, 1e-9, Direction::Upper).unwrap() > 1.0 - 1e-12);
        assert!(chernoff_mult(30.0, 1.0, Direction::Upper).is_err());
        assert!(chernoff_mult(30.0, 0.0, Direction::Lower).is_err());
        assert!(chernoff_mult(0.0, 0.5, Direction::Lower).is_err());
    }

    #[test]
    fn additive_values() {
        assert!(close(chernoff_add(100, 10.0).unwrap(), (-2.0f64).exp(), 1e-14));
        assert!(chernoff_add(100, 1e-9).unwrap() > 1.0 - 1e-12);
        let lambda = (50.0 * 10f64.ln()).sqrt();
        assert!(close(chernoff_add(100, lambda).unwrap(), 0.1, 1e-12));
        assert!(chernoff_add(100, 0.0).is_err());
    }

    #[test]
    fn reverse_values_and_guards() {
        assert!(close(reverse_chernoff(48.0, 0.25, 100).unwrap(), (-27.0f64).exp(), 1e-12));
        let e = reverse_chernoff(48.0, 0.2, 100).unwrap_err().to_string();
        assert!(e.contains("delta^2 mu"), "{e}");
        let e = reverse_chernoff(60.0, 0.25, 100).unwrap_err().to_string();
        assert!(e.contains("n/2"), "{e}");
        assert!(reverse_chernoff(48.0, 0.6, 100).is_err());
    }

    #[test]
    fn tiny_bounds_survive_in_log_space() {
        let ln = ln_chernoff_add(1000, 1000.0).unwrap();
        assert_eq!(ln, -2000.0);
        assert_eq!(ln.exp(), 0.0);
    }

    #[test]
    fn in_claim_parameterisation_the_additive_bound_is_polynomial() {
        // lambda = sqrt(n ln n) / 72 gives exactly n^(-2/72^2).
        for n in [10_000u64, 100_000, 1_000_000] {
            let nf = n as f64;
            let lambda = (nf * nf.ln()).sqrt() / 72.0;
            let ln = ln_chernoff_add(n, lambda).unwrap();
            let exponent = -ln / nf.ln();
            assert!((exponent - 2.0 / 5184.0).abs() < 1e-12);
            assert!(ln <= -0.000_38 * nf.ln());
        }
    }

    #[test]
    fn queries() {
        let q = TailQuery::new(1000, 0.5, Direction::Upper, BoundKind::Additive { lambda: 50.0 }).unwrap();
        assert_eq!(q.threshold(), 550.0);
        let q = TailQuery::new(200, 0.3, Direction::Lower, BoundKind::Reverse { delta: 0.3 }).unwrap();
        assert!((q.threshold() - 42.0).abs() < 1e-9);
        assert!(TailQuery::new(0, 0.5, Direction::Upper, BoundKind::Additive { lambda: 1.0 }).is_err());
        assert!(TailQuery::new(10, 1.5, Direction::Upper, BoundKind::Additive { lambda: 1.0 }).is_err());
    }

    #[test]
    fn degenerate_p_one() {
        let mut rng = RandomSource::new(3, 0);
        let q = TailQuery::new(50, 1.0, Direction::Upper, BoundKind::Additive { lambda: 1.0 }).unwrap();
        let c = empirical_tail_check(&q, 1000, &mut rng).unwrap();
        assert_eq!(c.empirical, 0.0);
        assert!(c.consistent);
    }

    #[test]
    fn grid_is_valid_and_consistent_at_low_trial_count() {
        let grid = standard_grid();
        assert_eq!(grid.len(), 20);
        let mut rng = RandomSource::new(11, 0);
        for q in &grid {
            assert!(q.ln_bound().is_ok(), "{q:?}");
            let c = empirical_tail_check(q, 20_000, &mut rng).unwrap();
            assert!(c.consistent, "{q:?} {c:?}");
        }
    }

    proptest! {
        #[test]
        fn forward_bounds_in_unit_interval_and_monotone(mu in 0.1f64..1e4, d1 in 0.001f64..0.998, step in 0.0001f64..0.001) {
            for dir in [Direction::Upper, Direction::Lower] {
                let lo = chernoff_mult(mu, d1, dir).unwrap();
                let hi = chernoff_mult(mu, d1 + step, dir).unwrap();
                prop_assert!(lo > 0.0 || mu * d1 * d1 > 600.0);
                prop_assert!(lo <= 1.0);
                prop_assert!(hi <= lo);
            }
        }

        #[test]
        fn additive_monotone(n in 1u64..100_000, l1 in 0.01f64..100.0, step in 0.0f64..10.0) {
            let a = chernoff_add(n, l1).unwrap();
            let b = chernoff_add(n, l1 + step).unwrap();
            prop_assert!(a <= 1.0 && b <= a);
        }

        #[test]
        fn reverse_at_most_one(delta in 0.01f64..=0.5, mu in 1.0f64..1e4) {
            let n = (2.0 * mu).ceil() as u64;
            if let Ok(b) = reverse_chernoff(mu, delta, n) {
                prop_assert!(b <= 1.0);
                prop_assert!(delta * delta * mu >= 3.0);
            }
        }
    }
}
