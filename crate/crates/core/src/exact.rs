//! Exact one-step transition kernel of the complete-graph process for small
//! `n`, the pruned variant used around H2, and absorbing-chain solves.
//!
//! Row probabilities are convolutions of the three independent class draws
//! (two binomials and one trinomial), with every pmf term evaluated in log
//! space and exponentiated individually.

use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::io::Write;

use crate::config::Configuration;
use crate::error::{Error, Result};
use crate::phase::{classify, PhaseParameters, RegionLabel};
use crate::report::fmt_real;

/// Largest population the exact routines accept unless told otherwise.
pub const DEFAULT_CAP: u64 = 60;

/// Probability of each successor `(a', b')`, zero entries omitted.
pub type StepDistribution = BTreeMap<(u64, u64), f64>;

fn check_cap(n: u64, cap: u64) -> Result<()> {
    if n > cap {
        Err(Error::ExactCapExceeded { n, cap })
    } else {
        Ok(())
    }
}

struct LogFactorials(Vec<f64>);

impl LogFactorials {
    fn new(n: u64) -> Self {
        let mut v = Vec::with_capacity(n as usize + 1);
        let mut acc = 0.0f64;
        v.push(0.0);
        for k in 1..=n {
            acc += (k as f64).ln();
            v.push(acc);
        }
        LogFactorials(v)
    }

    #[inline]
    fn get(&self, k: u64) -> f64 {
        self.0[k as usize]
    }
}

/// `k * ln(p)` with the convention `0 * ln(0) = 0`.
#[inline]
fn xlogp(k: u64, p: f64) -> f64 {
    if k == 0 {
        0.0
    } else {
        k as f64 * p.ln()
    }
}

fn binomial_pmf(m: u64, p: f64, lf: &LogFactorials) -> Vec<f64> {
    (0..=m)
        .map(|k| {
            let log = lf.get(m) - lf.get(k) - lf.get(m - k) + xlogp(k, p) + xlogp(m - k, 1.0 - p);
            log.exp()
        })
        .collect()
}

/// `t[i][j]` = P(i undecided adopt Alpha, j adopt Beta).
fn trinomial_pmf(q: u64, pa: f64, pb: f64, pq: f64, lf: &LogFactorials) -> Vec<Vec<f64>> {
    (0..=q)
        .map(|i| {
            (0..=q - i)
                .map(|j| {
                    let k = q - i - j;
                    let log = lf.get(q) - lf.get(i) - lf.get(j) - lf.get(k)
                        + xlogp(i, pa)
                        + xlogp(j, pb)
                        + xlogp(k, pq);
                    log.exp()
                })
                .collect()
        })
        .collect()
}

fn one_step_unchecked(cfg: &Configuration, lf: &LogFactorials) -> StepDistribution {
    let nf = cfg.n() as f64;
    let (a, b, q) = (cfg.a(), cfg.b(), cfg.q());
    let pa_keep = binomial_pmf(a, (a + q) as f64 / nf, lf);
    let pb_keep = binomial_pmf(b, (b + q) as f64 / nf, lf);
    let tri = trinomial_pmf(q, a as f64 / nf, b as f64 / nf, q as f64 / nf, lf);

    let (wa, wb) = ((a + q + 1) as usize, (b + q + 1) as usize);
    // Alpha side first: u[a'][j] = sum_k P(a_keep = k) T[a' - k][j].
    let mut u = vec![0.0f64; wa * (q as usize + 1)];
    for (k, &pk) in pa_keep.iter().enumerate() {
        if pk == 0.0 {
            continue;
        }
        for (i, row) in tri.iter().enumerate() {
            let base = (k + i) * (q as usize + 1);
            for (j, &t) in row.iter().enumerate() {
                u[base + j] += pk * t;
            }
        }
    }
    let mut joint = vec![0.0f64; wa * wb];
    for an in 0..wa {
        for j in 0..=q as usize {
            let uj = u[an * (q as usize + 1) + j];
            if uj == 0.0 {
                continue;
            }
            for (k, &pk) in pb_keep.iter().enumerate() {
                joint[an * wb + k + j] += uj * pk;
            }
        }
    }

    let mut out = StepDistribution::new();
    for an in 0..wa {
        for bn in 0..wb {
            let p = joint[an * wb + bn];
            if p > 0.0 {
                out.insert((an as u64, bn as u64), p);
            }
        }
    }
    out
}

/// Exact distribution of the next `(a', b')`.
pub fn one_step_distribution(cfg: &Configuration) -> Result<StepDistribution> {
    one_step_distribution_with_cap(cfg, DEFAULT_CAP)
}

pub fn one_step_distribution_with_cap(cfg: &Configuration, cap: u64) -> Result<StepDistribution> {
    check_cap(cfg.n(), cap)?;
    Ok(one_step_unchecked(cfg, &LogFactorials::new(cfg.n())))
}

/// Undecided count of the canonical configuration with bias `s` that pruned
/// mass is sent to: `n/2`, or the closest attainable value below it.
pub fn redirect_undecided(n: u64, s: i64) -> u64 {
    let mut q = (n / 2).min(n - s.unsigned_abs());
    if (n - q) as i64 % 2 != s.rem_euclid(2) {
        q -= 1;
    }
    q
}

fn prune(cfg: &Configuration, params: &PhaseParameters, plain: StepDistribution) -> StepDistribution {
    let n = cfg.n();
    if classify(cfg, params).label != RegionLabel::H2 {
        return plain;
    }
    let mut out = StepDistribution::new();
    for ((an, bn), p) in plain {
        let q = n - an - bn;
        if 18 * q < n || 2 * q > n {
            let s = an as i64 - bn as i64;
            let z = Configuration::from_bias(n, s, redirect_undecided(n, s))
                .expect("redirect target is attainable by construction");
            *out.entry((z.a(), z.b())).or_insert(0.0) += p;
        } else {
            *out.entry((an, bn)).or_insert(0.0) += p;
        }
    }
    out
}

/// One-step distribution of the pruned process.
///
/// From H2, successors with `q' < n/18` or `q' > n/2` are cut and their mass
/// moves to the configuration with the same bias and `q = n/2` (or the
/// nearest attainable `q` below it), so the bias marginal is unchanged.
/// Elsewhere identical to [`one_step_distribution`].
pub fn pruned_one_step_distribution(cfg: &Configuration, params: &PhaseParameters) -> Result<StepDistribution> {
    pruned_one_step_distribution_with_cap(cfg, params, DEFAULT_CAP)
}

pub fn pruned_one_step_distribution_with_cap(
    cfg: &Configuration,
    params: &PhaseParameters,
    cap: u64,
) -> Result<StepDistribution> {
    if cfg.n() % 2 == 1 {
        return Err(Error::OddPopulation(cfg.n()));
    }
    let plain = one_step_distribution_with_cap(cfg, cap)?;
    Ok(prune(cfg, params, plain))
}

/// Marginal distribution of the next bias `s' = a' - b'`.
pub fn bias_marginal(dist: &StepDistribution) -> BTreeMap<i64, f64> {
    let mut m = BTreeMap::new();
    for (&(a, b), &p) in dist {
        *m.entry(a as i64 - b as i64).or_insert(0.0) += p;
    }
    m
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum KernelKind {
    Plain,
    Pruned { gamma: f64 },
}

/// Enumeration of all configurations with a fixed `n`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct StateSpace {
    n: u64,
}

impl StateSpace {
    pub fn new(n: u64) -> Self {
        Self { n }
    }

    pub fn len(&self) -> usize {
        ((self.n + 1) * (self.n + 2) / 2) as usize
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    fn offset(&self, a: u64) -> u64 {
        a * (self.n + 1) - a * a.saturating_sub(1) / 2
    }

    pub fn index(&self, a: u64, b: u64) -> usize {
        debug_assert!(a + b <= self.n);
        (self.offset(a) + b) as usize
    }

    pub fn configurations(&self) -> impl Iterator<Item = Configuration> + '_ {
        (0..=self.n).flat_map(move |a| (0..=self.n - a).map(move |b| Configuration::new(self.n, a, b).unwrap()))
    }
}

/// Immutable row-sparse transition matrix over a [`StateSpace`].
#[derive(Clone, Debug)]
pub struct TransitionKernel {
    n: u64,
    kind: KernelKind,
    states: Vec<Configuration>,
    rows: Vec<Vec<(usize, f64)>>,
}

impl TransitionKernel {
    pub fn n(&self) -> u64 {
        self.n
    }

    pub fn kind(&self) -> KernelKind {
        self.kind
    }

    pub fn space(&self) -> StateSpace {
        StateSpace::new(self.n)
    }

    pub fn states(&self) -> &[Configuration] {
        &self.states
    }

    pub fn row(&self, cfg: &Configuration) -> &[(usize, f64)] {
        &self.rows[self.space().index(cfg.a(), cfg.b())]
    }

    pub fn rows(&self) -> impl Iterator<Item = (&Configuration, &[(usize, f64)])> {
        self.states.iter().zip(self.rows.iter().map(Vec::as_slice))
    }

    pub fn prob(&self, from: &Configuration, to: &Configuration) -> f64 {
        let target = self.space().index(to.a(), to.b());
        self.row(from)
            .iter()
            .find(|(j, _)| *j == target)
            .map_or(0.0, |&(_, p)| p)
    }

    /// Rows as `(a, b, a_next, b_next, prob)` CSV with 17 significant digits.
    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "a,b,a_next,b_next,prob")?;
        for (from, row) in self.rows() {
            for &(j, p) in row {
                let to = self.states[j];
                writeln!(w, "{},{},{},{},{}", from.a(), from.b(), to.a(), to.b(), fmt_real(p))?;
            }
        }
        Ok(())
    }
}

pub fn build_kernel(n: u64, kind: KernelKind) -> Result<TransitionKernel> {
    build_kernel_with_cap(n, kind, DEFAULT_CAP)
}

pub fn build_kernel_with_cap(n: u64, kind: KernelKind, cap: u64) -> Result<TransitionKernel> {
    check_cap(n, cap)?;
    Configuration::new(n, 0, 0)?;
    let params = match kind {
        KernelKind::Plain => None,
        KernelKind::Pruned { gamma } => {
            if n % 2 == 1 {
                return Err(Error::OddPopulation(n));
            }
            Some(PhaseParameters::new(gamma)?)
        }
    };
    let space = StateSpace::new(n);
    let lf = LogFactorials::new(n);
    let states: Vec<Configuration> = space.configurations().collect();
    let rows = states
        .par_iter()
        .map(|cfg| {
            let mut dist = one_step_unchecked(cfg, &lf);
            if let Some(p) = &params {
                dist = prune(cfg, p, dist);
            }
            dist.into_iter().map(|((a, b), p)| (space.index(a, b), p)).collect()
        })
        .collect();
    Ok(TransitionKernel { n, kind, states, rows })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AbsorptionReport {
    pub p_alpha: f64,
    pub p_beta: f64,
    pub p_undecided: f64,
    pub expected_rounds: f64,
}

/// Absorption probabilities and expected absorption time from every state.
#[derive(Clone, Debug)]
pub struct AbsorptionTable {
    space: StateSpace,
    reports: Vec<AbsorptionReport>,
}

impl AbsorptionTable {
    pub fn get(&self, start: &Configuration) -> Result<AbsorptionReport> {
        if start.n() != self.space.n {
            return Err(Error::PopulationMismatch { expected: self.space.n, got: start.n() });
        }
        Ok(self.reports[self.space.index(start.a(), start.b())])
    }
}

/// Solve `(I - Q) X = [R | 1]` over the transient states by LU with partial
/// pivoting.
pub fn absorption_table(kernel: &TransitionKernel) -> Result<AbsorptionTable> {
    let space = kernel.space();
    let n = kernel.n;
    let mut transient_idx = vec![usize::MAX; space.len()];
    let transient: Vec<usize> = (0..space.len()).filter(|&i| !kernel.states[i].is_absorbing()).collect();
    for (t, &i) in transient.iter().enumerate() {
        transient_idx[i] = t;
    }
    let alpha = space.index(n, 0);
    let beta = space.index(0, n);
    let undecided = space.index(0, 0);

    let m = transient.len();
    let mut reports: Vec<AbsorptionReport> = kernel
        .states
        .iter()
        .map(|c| AbsorptionReport {
            p_alpha: (c.a() == n) as u8 as f64,
            p_beta: (c.b() == n) as u8 as f64,
            p_undecided: (c.q() == n) as u8 as f64,
            expected_rounds: 0.0,
        })
        .collect();
    if m == 0 {
        return Ok(AbsorptionTable { space, reports });
    }

    let mut lhs = DMatrix::<f64>::identity(m, m);
    let mut rhs = DMatrix::<f64>::zeros(m, 4);
    for (t, &i) in transient.iter().enumerate() {
        rhs[(t, 3)] = 1.0;
        for &(j, p) in &kernel.rows[i] {
            match transient_idx[j] {
                usize::MAX if j == alpha => rhs[(t, 0)] += p,
                usize::MAX if j == beta => rhs[(t, 1)] += p,
                usize::MAX if j == undecided => rhs[(t, 2)] += p,
                usize::MAX => unreachable!("only three absorbing states"),
                k => lhs[(t, k)] -= p,
            }
        }
    }
    let sol = lhs.lu().solve(&rhs).ok_or(Error::SingularSystem)?;
    if sol.iter().any(|x| !x.is_finite()) {
        return Err(Error::SingularSystem);
    }
    for (t, &i) in transient.iter().enumerate() {
        reports[i] = AbsorptionReport {
            p_alpha: sol[(t, 0)],
            p_beta: sol[(t, 1)],
            p_undecided: sol[(t, 2)],
            expected_rounds: sol[(t, 3)],
        };
    }
    Ok(AbsorptionTable { space, reports })
}

pub fn absorption(kernel: &TransitionKernel, start: &Configuration) -> Result<AbsorptionReport> {
    if start.n() != kernel.n {
        return Err(Error::PopulationMismatch { expected: kernel.n, got: start.n() });
    }
    absorption_table(kernel)?.get(start)
}
