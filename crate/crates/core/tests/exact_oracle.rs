//! The exact kernel against brute-force enumeration of every pull vector,
//! and frozen absorption values.

use std::collections::BTreeMap;

use udyn_core::exact::{absorption, absorption_table, build_kernel, one_step_distribution, KernelKind};
use udyn_core::experiments::{minority_start, minority_win_probability};
use udyn_core::stats::{wilson_interval, Z_99};
use udyn_core::Configuration;

/// Node `i` holds 1 (Alpha) for `i < a`, 2 (Beta) for `a <= i < a + b`,
/// else 0. Every one of the `n^n` pull vectors is equally likely.
fn enumerate(n: usize, a: usize, b: usize) -> BTreeMap<(u64, u64), f64> {
    let state: Vec<u8> = (0..n).map(|i| if i < a { 1 } else if i < a + b { 2 } else { 0 }).collect();
    let total = n.pow(n as u32);
    let mut out = BTreeMap::new();
    let mut pulls = vec![0usize; n];
    for _ in 0..total {
        let (mut na, mut nb) = (0, 0);
        for u in 0..n {
            let seen = state[pulls[u]];
            let next = match (state[u], seen) {
                (0, x) => x,
                (x, 0) => x,
                (x, y) if x == y => x,
                _ => 0,
            };
            na += (next == 1) as u64;
            nb += (next == 2) as u64;
        }
        *out.entry((na, nb)).or_insert(0.0) += 1.0 / total as f64;
        for p in pulls.iter_mut() {
            *p += 1;
            if *p < n {
                break;
            }
            *p = 0;
        }
    }
    out
}

#[test]
fn kernel_rows_match_brute_force() {
    for n in 1..=6usize {
        for a in 0..=n {
            for b in 0..=n - a {
                let brute = enumerate(n, a, b);
                let exact = one_step_distribution(&Configuration::new(n as u64, a as u64, b as u64).unwrap()).unwrap();
                for key in brute.keys().chain(exact.keys()) {
                    let (x, y) = (brute.get(key).copied().unwrap_or(0.0), exact.get(key).copied().unwrap_or(0.0));
                    assert!((x - y).abs() < 1e-12, "n={n} a={a} b={b} {key:?}: {x} vs {y}");
                }
            }
        }
    }
}

#[test]
fn two_node_chain_by_hand() {
    // (1,1) moves to each of (1,1), (1,0), (0,1), (0,0) with mass 1/4, and
    // (1,0) finishes Alpha with probability 1/2 per round. So
    // p = 1/4 p + 1/4 gives 1/3 for each absorbing state, and
    // t = 1 + 1/4 t + 2 * 1/4 * 2 gives 8/3 rounds.
    let k = build_kernel(2, KernelKind::Plain).unwrap();
    let r = absorption(&k, &Configuration::new(2, 1, 1).unwrap()).unwrap();
    assert!((r.p_alpha - 1.0 / 3.0).abs() < 1e-12);
    assert!((r.p_beta - 1.0 / 3.0).abs() < 1e-12);
    assert!((r.p_undecided - 1.0 / 3.0).abs() < 1e-12);
    assert!((r.expected_rounds - 8.0 / 3.0).abs() < 1e-12);
    let r = absorption(&k, &Configuration::new(2, 1, 0).unwrap()).unwrap();
    assert!((r.p_alpha - 1.0).abs() < 1e-12);
    assert!((r.expected_rounds - 2.0).abs() < 1e-12);
}

// Exact absorption probability at the initial minority color, n = 36.
const MINORITY_WIN_36: f64 = 1.300_207_197_343_981e-3;

#[test]
fn minority_win_at_36_is_frozen_and_matches_simulation() {
    let start = minority_start(36).unwrap();
    let k = build_kernel(36, KernelKind::Plain).unwrap();
    let table = absorption_table(&k).unwrap();
    let r = table.get(&start).unwrap();
    assert!((r.p_beta - MINORITY_WIN_36).abs() < 1e-12, "p_beta = {:.17e}", r.p_beta);
    assert!((r.p_alpha + r.p_beta + r.p_undecided - 1.0).abs() < 1e-8);
    let mirrored = table.get(&start.mirrored()).unwrap();
    assert!((mirrored.p_alpha - r.p_beta).abs() < 1e-10);

    let trials = 400_000;
    let mc = minority_win_probability(36, trials, 77, false).unwrap();
    let (lo, hi) = wilson_interval(mc.report.pass_count, trials, Z_99);
    assert!(lo <= r.p_beta && r.p_beta <= hi, "exact {} outside [{lo}, {hi}]", r.p_beta);
}

#[test]
fn simulated_absorption_matches_exact_at_n_12() {
    let k = build_kernel(12, KernelKind::Plain).unwrap();
    let start = Configuration::new(12, 5, 3).unwrap();
    let r = absorption(&k, &start).unwrap();
    let trials = 200_000u64;
    let mut rng = udyn_core::RandomSource::new(8, 0);
    let (mut alpha, mut rounds) = (0u64, 0u64);
    for _ in 0..trials {
        let (o, t) = udyn_core::dynamics::rounds_to_absorption(start, &mut rng, 10_000);
        alpha += (o == udyn_core::Outcome::AbsorbedAlpha) as u64;
        rounds += t;
    }
    let (lo, hi) = wilson_interval(alpha, trials, Z_99);
    assert!(lo <= r.p_alpha && r.p_alpha <= hi);
    let mean = rounds as f64 / trials as f64;
    assert!((mean - r.expected_rounds).abs() < 0.05 * r.expected_rounds, "{mean} vs {}", r.expected_rounds);
}
