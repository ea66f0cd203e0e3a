use clap::{Args, ValueEnum};
use std::error::Error;
use std::fs::File;
use std::io::BufReader;
use std::path::PathBuf;

use rand::Rng;
use udyn_core::bounds::{empirical_tail_check, standard_grid, BoundKind, Direction};
use udyn_core::dynamics::{default_max_rounds, run_until_absorbed};
use udyn_core::exact::{absorption_table, build_kernel_with_cap, KernelKind, DEFAULT_CAP};
use udyn_core::experiments::{
    convergence_scaling, default_configuration, expectation_check, lower_bound_experiment, lower_bound_start,
    minority_start, minority_win_probability, phase_audit, region_starts, symmetry_breaking_time, validate_claim,
    ClaimId, ClaimParams, ClaimSpec, ExperimentReport, StartKind,
};
use udyn_core::graph::{
    discrepancy_with_lambda, random_regular_graph, read_edge_list, run_graph, spectral_lambda, write_edge_list,
    GraphState,
};
use udyn_core::phase::sqrt_n_ln_n;
use udyn_core::report::{fmt_real, Cell, Table};
use udyn_core::rng::stream_id;
use udyn_core::{classify, Configuration, Outcome, PhaseParameters, RandomSource};

use crate::output::{emit, write_file_atomic};
use crate::{Cli, Command, Global};

type Status = Result<bool, Box<dyn Error>>;

fn table(g: &Global, command: &str, columns: &[&str]) -> Table {
    let mut t = Table::new(columns.iter().copied());
    t.meta("tool", "udyn")
        .meta("version", env!("CARGO_PKG_VERSION"))
        .meta("command", command)
        .meta("seed", g.seed)
        .meta("gamma", fmt_real(g.gamma));
    t
}

fn finish(g: &Global, mut t: Table, ok: bool) -> Status {
    t.meta("assertions", if ok { "pass" } else { "fail" });
    emit(&t, g.format.into(), g.out.as_deref())?;
    Ok(ok)
}

/// Start from `--a/--b` if given, otherwise from `default`. A lone `--a`
/// leaves no undecided nodes.
fn start_or(n: u64, a: Option<u64>, b: Option<u64>, default: impl FnOnce() -> udyn_core::Result<Configuration>) -> udyn_core::Result<Configuration> {
    match (a, b) {
        (None, None) => default(),
        (Some(a), None) => Configuration::new(n, a, n.saturating_sub(a)),
        (None, Some(b)) => Configuration::new(n, n.saturating_sub(b), b),
        (Some(a), Some(b)) => Configuration::new(n, a, b),
    }
}

fn balanced(n: u64) -> udyn_core::Result<Configuration> {
    Configuration::new(n, n / 2, n / 2)
}

fn params(g: &Global) -> udyn_core::Result<PhaseParameters> {
    PhaseParameters::new(g.gamma)
}

fn describe(t: &mut Table, cfg: &Configuration) {
    t.meta("n", cfg.n()).meta("a", cfg.a()).meta("b", cfg.b());
}

pub fn dispatch(cli: &Cli) -> Status {
    let g = &cli.global;
    match &cli.command {
        Command::Simulate(a) => simulate(g, a),
        Command::Expectations(a) => expectations(g, a),
        Command::Phases(a) => phases(g, a),
        Command::Scaling(a) => scaling(g, a),
        Command::Claims(a) => claims(g, a),
        Command::Minority(a) => minority(g, a),
        Command::Lowerbound(a) => lowerbound(g, a),
        Command::Symbreak(a) => symbreak(g, a),
        Command::Exact(a) => exact(g, a),
        Command::Graph(a) => graph(g, a),
        Command::Bounds(a) => bounds(g, a),
    }
}

#[derive(Args, Debug)]
pub struct SimulateArgs {
    #[arg(long, default_value_t = 1000)]
    n: u64,
    /// Alpha count (default n/2).
    #[arg(long)]
    a: Option<u64>,
    /// Beta count (default n/2).
    #[arg(long)]
    b: Option<u64>,
    /// Round budget (default ceil(100 ln n)).
    #[arg(long)]
    max_rounds: Option<u64>,
}

fn simulate(g: &Global, args: &SimulateArgs) -> Status {
    let start = start_or(args.n, args.a, args.b, || balanced(args.n))?;
    let p = params(g)?;
    let max_rounds = args.max_rounds.unwrap_or_else(|| default_max_rounds(args.n));
    let mut rng = RandomSource::derived(g.seed, &[stream_id(&[0x51]), args.n]);
    let run = run_until_absorbed(start, &mut rng, max_rounds);
    let mut t = table(g, "simulate", &["round", "a", "b", "q", "s", "region", "majority"]);
    describe(&mut t, &start);
    t.meta("max_rounds", max_rounds).meta("outcome", run.outcome.label()).meta("rounds", run.rounds());
    for (round, c) in run.trajectory.iter().enumerate() {
        let r = classify(c, &p);
        let sign = match r.majority_sign {
            udyn_core::phase::MajoritySign::AlphaLeading => "alpha",
            udyn_core::phase::MajoritySign::BetaLeading => "beta",
            udyn_core::phase::MajoritySign::Tied => "tied",
        };
        t.push(vec![round.into(), c.a().into(), c.b().into(), c.q().into(), c.s().into(), r.label.as_str().into(), sign.into()]);
    }
    finish(g, t, true)
}

#[derive(Args, Debug)]
pub struct ExpectationsArgs {
    #[arg(long, default_value_t = 1000)]
    n: u64,
    #[arg(long)]
    a: Option<u64>,
    #[arg(long)]
    b: Option<u64>,
    #[arg(long, default_value_t = 100_000)]
    trials: u64,
    /// Fail if any sample mean is more than this many standard errors off.
    #[arg(long, default_value_t = 4.0)]
    max_z: f64,
}

fn expectations(g: &Global, args: &ExpectationsArgs) -> Status {
    let start = start_or(args.n, args.a, args.b, || Configuration::new(args.n, args.n * 2 / 5, args.n * 3 / 10))?;
    let chk = expectation_check(&start, args.trials, g.seed);
    let mut t = table(g, "expectations", &["quantity", "formula", "mean", "se", "z"]);
    describe(&mut t, &start);
    t.meta("trials", args.trials).meta("max_z", fmt_real(args.max_z));
    let f = chk.formula;
    let mut ok = true;
    for (name, target, m) in [("a", f.a, chk.a), ("b", f.b, chk.b), ("q", f.q, chk.q), ("s", f.s, chk.s)] {
        let z = if m.se > 0.0 { (m.mean - target) / m.se } else { 0.0 };
        ok &= m.agrees(target, args.max_z);
        t.push(vec![name.into(), target.into(), m.mean.into(), m.se.into(), z.into()]);
    }
    finish(g, t, ok)
}

#[derive(Args, Debug)]
pub struct PhasesArgs {
    #[arg(long, default_value_t = 100_000)]
    n: u64,
    /// Trajectories, cycled over one interior start per region unless --a/--b is given.
    #[arg(long, default_value_t = 10_000)]
    trials: u64,
    #[arg(long)]
    a: Option<u64>,
    #[arg(long)]
    b: Option<u64>,
    #[arg(long)]
    max_rounds: Option<u64>,
    /// Fail if the disallowed fraction reaches this value.
    #[arg(long, default_value_t = 1e-3)]
    max_disallowed: f64,
}

fn phases(g: &Global, args: &PhasesArgs) -> Status {
    let p = params(g)?;
    let starts: Vec<Configuration> = if args.a.is_some() || args.b.is_some() {
        vec![start_or(args.n, args.a, args.b, || balanced(args.n))?]
    } else {
        region_starts(args.n, &p)?.into_iter().map(|(_, c)| c).collect()
    };
    let max_rounds = args.max_rounds.unwrap_or_else(|| default_max_rounds(args.n));
    let s = phase_audit(&starts, args.trials, g.seed, &p, max_rounds)?;
    let mut t = table(g, "phases", &["from", "to", "count", "allowed"]);
    t.meta("n", args.n)
        .meta("trials", args.trials)
        .meta("max_rounds", max_rounds)
        .meta("starts", starts.iter().map(|c| format!("{}:{}", c.a(), c.b())).collect::<Vec<_>>().join(" "))
        .meta("transitions", s.transitions)
        .meta("disallowed", s.disallowed)
        .meta("disallowed_fraction", fmt_real(s.disallowed_fraction()))
        .meta("timeouts", s.timeouts);
    for a in &s.arrows {
        t.push(vec![a.from.as_str().into(), a.to.as_str().into(), a.count.into(), a.allowed.into()]);
    }
    let ok = s.disallowed_fraction() < args.max_disallowed;
    finish(g, t, ok)
}

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum StartChoice {
    Balanced,
    /// s = ceil(bias * sqrt(n ln n)), q = 0.
    Biased,
    /// s = ceil(bias * n), q = 0.
    Fraction,
}

#[derive(Args, Debug)]
pub struct ScalingArgs {
    #[arg(long, value_delimiter = ',', default_value = "1024,4096,16384,65536")]
    ns: Vec<u64>,
    #[arg(long, value_enum, default_value_t = StartChoice::Balanced)]
    start: StartChoice,
    #[arg(long, default_value_t = 2.0)]
    bias: f64,
    #[arg(long, default_value_t = 200)]
    trials: u64,
    /// Round budget per run in units of ln n.
    #[arg(long, default_value_t = 100.0)]
    budget: f64,
    /// Fail if R^2 of median rounds against ln n is below this.
    #[arg(long)]
    min_r2: Option<f64>,
}

fn scaling(g: &Global, args: &ScalingArgs) -> Status {
    let kind = match args.start {
        StartChoice::Balanced => StartKind::Balanced,
        StartChoice::Biased => StartKind::Biased { gamma: args.bias },
        StartChoice::Fraction => StartKind::BiasFraction { fraction: args.bias },
    };
    let st = convergence_scaling(&args.ns, kind, args.trials, g.seed, args.budget)?;
    let mut t = table(
        g,
        "scaling",
        &["n", "trials", "max_rounds", "median_rounds", "q90_rounds", "monochromatic", "alpha_wins", "undecided", "timeouts"],
    );
    t.meta("start", format!("{:?}", args.start).to_lowercase())
        .meta("bias", fmt_real(args.bias))
        .meta("budget", fmt_real(args.budget))
        .meta("slope", fmt_real(st.slope))
        .meta("intercept", fmt_real(st.intercept))
        .meta("r_squared", fmt_real(st.r_squared));
    for r in &st.rows {
        t.push(vec![
            r.n.into(),
            r.trials.into(),
            r.max_rounds.into(),
            r.median_rounds.into(),
            r.q90_rounds.into(),
            r.monochromatic.into(),
            r.alpha_wins.into(),
            r.undecided.into(),
            r.timeouts.into(),
        ]);
    }
    let ok = args.min_r2.is_none_or(|m| st.r_squared >= m);
    finish(g, t, ok)
}

#[derive(Args, Debug)]
pub struct ClaimsArgs {
    /// Claim name, or `all` for every high-probability claim.
    #[arg(long, default_value = "all")]
    id: String,
    /// Population (default 10^6 for one-step claims, 10^5 for multi-round ones).
    #[arg(long)]
    n: Option<u64>,
    #[arg(long)]
    a: Option<u64>,
    #[arg(long)]
    b: Option<u64>,
    #[arg(long, default_value_t = 10_000)]
    trials: u64,
    #[arg(long, default_value_t = 0.5)]
    epsilon: f64,
    /// Multi-round claims run ceil(horizon_factor * ln n) rounds.
    #[arg(long, default_value_t = 20.0)]
    horizon_factor: f64,
    /// Required pass rate for high-probability claims.
    #[arg(long, default_value_t = 0.99)]
    min_pass: f64,
    /// Required minority-win rate for apxminbias.
    #[arg(long, default_value_t = 0.02)]
    minority_threshold: f64,
}

fn claims(g: &Global, args: &ClaimsArgs) -> Status {
    let ids: Vec<ClaimId> = if args.id == "all" {
        ClaimId::high_probability().collect()
    } else {
        vec![args.id.parse()?]
    };
    let cp = ClaimParams { gamma: g.gamma, epsilon: args.epsilon, horizon_factor: args.horizon_factor };
    let mut t = table(g, "claims", &ExperimentReport::COLUMNS);
    t.meta("trials", args.trials)
        .meta("epsilon", fmt_real(args.epsilon))
        .meta("horizon_factor", fmt_real(args.horizon_factor))
        .meta("min_pass", fmt_real(args.min_pass));
    let mut failed = Vec::new();
    for id in ids {
        let n = args.n.unwrap_or(match id {
            ClaimId::ApxMinBias => 90_000,
            _ if id.is_multi_round() => 100_000,
            _ => 1_000_000,
        });
        let start = start_or(n, args.a, args.b, || default_configuration(id, n, &cp))?;
        let r = validate_claim(&ClaimSpec::with_params(id, cp), &start, args.trials, g.seed)?;
        let ok = match id {
            ClaimId::ApxMinBias => r.pass_rate > args.minority_threshold,
            _ if id.has_exponential_tail() => r.failures() == 0,
            _ => r.pass_rate >= args.min_pass,
        };
        if !ok {
            failed.push(id.as_str());
        }
        t.meta(format!("start.{id}"), format!("{}:{}:{}", start.n(), start.a(), start.b()));
        t.push(r.row());
    }
    t.meta("failed", if failed.is_empty() { "none".to_string() } else { failed.join(" ") });
    let ok = failed.is_empty();
    finish(g, t, ok)
}

#[derive(Args, Debug)]
pub struct MinorityArgs {
    /// Population; must be divisible by 3.
    #[arg(long, default_value_t = 90_000)]
    n: u64,
    #[arg(long, default_value_t = 2000)]
    trials: u64,
    /// Swap colors so Alpha is the initial minority.
    #[arg(long)]
    mirrored: bool,
    /// Fail unless the minority-win rate exceeds this.
    #[arg(long, default_value_t = 0.02)]
    threshold: f64,
}

fn minority(g: &Global, args: &MinorityArgs) -> Status {
    let m = minority_win_probability(args.n, args.trials, g.seed, args.mirrored)?;
    let mut t = table(g, "minority", &ExperimentReport::COLUMNS);
    describe(&mut t, &m.start);
    t.meta("mirrored", args.mirrored)
        .meta("threshold", fmt_real(args.threshold))
        .meta("majority_wins", m.majority_wins)
        .meta("undecided", m.undecided)
        .meta("timeouts", m.timeouts);
    if args.n <= DEFAULT_CAP {
        let k = build_kernel_with_cap(args.n, KernelKind::Plain, DEFAULT_CAP)?;
        let r = absorption_table(&k)?.get(&minority_start(args.n)?)?;
        t.meta("exact_p_minority", fmt_real(r.p_beta));
    }
    t.push(m.report.row());
    let ok = m.report.pass_rate > args.threshold;
    finish(g, t, ok)
}

#[derive(Args, Debug)]
pub struct LowerboundArgs {
    #[arg(long, default_value_t = 1 << 20)]
    n: u64,
    #[arg(long, default_value_t = 200)]
    trials: u64,
    /// Custom start (default s = n^(2/3), q = n/3).
    #[arg(long)]
    a: Option<u64>,
    #[arg(long)]
    b: Option<u64>,
    /// Fail unless this fraction of runs reaches log2(n)/8 rounds in H4.
    #[arg(long, default_value_t = 0.99)]
    min_fraction: f64,
}

fn lowerbound(g: &Global, args: &LowerboundArgs) -> Status {
    let p = params(g)?;
    let start = start_or(args.n, args.a, args.b, || lower_bound_start(args.n, &p))?;
    let r = lower_bound_experiment(&start, args.trials, g.seed, &p);
    let mut t = table(g, "lowerbound", &["trial", "rounds_in_h4"]);
    describe(&mut t, &start);
    t.meta("trials", args.trials)
        .meta("threshold", fmt_real(r.threshold))
        .meta("median", fmt_real(r.median()))
        .meta("fraction_at_least_threshold", fmt_real(r.fraction_at_least_threshold()));
    for (i, &x) in r.rounds_in_h4.iter().enumerate() {
        t.push(vec![i.into(), x.into()]);
    }
    let ok = r.fraction_at_least_threshold() >= args.min_fraction;
    finish(g, t, ok)
}

#[derive(Args, Debug)]
pub struct SymbreakArgs {
    #[arg(long, default_value_t = 1 << 16)]
    n: u64,
    #[arg(long)]
    a: Option<u64>,
    #[arg(long)]
    b: Option<u64>,
    #[arg(long, default_value_t = 500)]
    trials: u64,
    #[arg(long)]
    max_rounds: Option<u64>,
}

fn symbreak(g: &Global, args: &SymbreakArgs) -> Status {
    let start = start_or(args.n, args.a, args.b, || balanced(args.n))?;
    let max_rounds = args.max_rounds.unwrap_or_else(|| default_max_rounds(args.n));
    let h = symmetry_breaking_time(&start, args.trials, g.seed, max_rounds);
    let mut t = table(g, "symbreak", &["trial", "hitting_round"]);
    describe(&mut t, &start);
    t.meta("trials", args.trials)
        .meta("max_rounds", max_rounds)
        .meta("threshold", fmt_real(h.threshold))
        .meta("median", fmt_real(h.median()))
        .meta("q90", fmt_real(h.quantile(0.9)))
        .meta("misses", h.misses());
    for (i, x) in h.times.iter().enumerate() {
        let cell = x.map_or(Cell::Text(String::new()), Cell::from);
        t.push(vec![i.into(), cell]);
    }
    finish(g, t, true)
}

fn parse_pair(s: &str) -> Result<(u64, u64), String> {
    let (a, b) = s.split_once(',').ok_or("expected `a,b`")?;
    Ok((a.trim().parse().map_err(|e| format!("{e}"))?, b.trim().parse().map_err(|e| format!("{e}"))?))
}

#[derive(Args, Debug)]
pub struct ExactArgs {
    #[arg(long)]
    n: u64,
    /// Start as `a,b`; every configuration if omitted.
    #[arg(long, value_parser = parse_pair)]
    start: Option<(u64, u64)>,
    /// Use the pruned kernel (even n only).
    #[arg(long)]
    pruned: bool,
    /// Also write the kernel as CSV (a,b,a_next,b_next,prob) to this path.
    #[arg(long)]
    kernel_out: Option<PathBuf>,
    /// Largest n accepted.
    #[arg(long, default_value_t = DEFAULT_CAP)]
    cap: u64,
}

fn exact(g: &Global, args: &ExactArgs) -> Status {
    let kind = if args.pruned { KernelKind::Pruned { gamma: g.gamma } } else { KernelKind::Plain };
    let k = build_kernel_with_cap(args.n, kind, args.cap)?;
    if let Some(path) = &args.kernel_out {
        write_file_atomic(path, |w| k.write_csv(w))?;
    }
    let table_ = absorption_table(&k)?;
    let starts: Vec<Configuration> = match args.start {
        Some((a, b)) => vec![Configuration::new(args.n, a, b)?],
        None => k.states().to_vec(),
    };
    let mut t = table(g, "exact", &["a", "b", "p_alpha", "p_beta", "p_undecided", "expected_rounds"]);
    t.meta("n", args.n).meta("kernel", if args.pruned { "pruned" } else { "plain" }).meta("cap", args.cap);
    let mut ok = true;
    for c in starts {
        let r = table_.get(&c)?;
        ok &= (r.p_alpha + r.p_beta + r.p_undecided - 1.0).abs() <= 1e-8 && r.expected_rounds >= 0.0;
        t.push(vec![
            c.a().into(),
            c.b().into(),
            r.p_alpha.into(),
            r.p_beta.into(),
            r.p_undecided.into(),
            r.expected_rounds.into(),
        ]);
    }
    finish(g, t, ok)
}

#[derive(Args, Debug)]
pub struct GraphArgs {
    #[arg(long, default_value_t = 2000)]
    n: usize,
    #[arg(long, default_value_t = 32)]
    d: usize,
    /// Load the graph from an edge list instead of generating one.
    #[arg(long)]
    graph_in: Option<PathBuf>,
    /// Save the graph as an edge list.
    #[arg(long)]
    graph_out: Option<PathBuf>,
    /// Random set pairs checked against the mixing lemma.
    #[arg(long, default_value_t = 200)]
    pairs: u64,
    /// Node-level runs from a random placement of --a Alpha and --b Beta nodes.
    #[arg(long, default_value_t = 0)]
    trials: u64,
    #[arg(long)]
    a: Option<usize>,
    #[arg(long)]
    b: Option<usize>,
    #[arg(long)]
    max_rounds: Option<u64>,
}

fn graph(g: &Global, args: &GraphArgs) -> Status {
    let mut rng = RandomSource::derived(g.seed, &[stream_id(&[0x67]), args.n as u64]);
    let gr = match &args.graph_in {
        Some(path) => read_edge_list(BufReader::new(File::open(path)?))?,
        None => random_regular_graph(args.n, args.d, &mut rng)?,
    };
    if let Some(path) = &args.graph_out {
        write_file_atomic(path, |w| write_edge_list(&gr, w))?;
    }
    let n = gr.n();
    let lambda = spectral_lambda(&gr)?;
    let mut t = table(g, "graph", &["pair", "size_s", "size_t", "delta", "bound", "within"]);
    t.meta("n", n)
        .meta("d", gr.d())
        .meta("lambda", fmt_real(lambda))
        .meta("lambda_over_d", fmt_real(lambda / gr.d().max(1) as f64));
    let mut ok = true;
    for i in 0..args.pairs {
        let (ps, pt) = (rng.random_range(0.01..0.6), rng.random_range(0.01..0.6));
        let s: Vec<usize> = (0..n).filter(|_| rng.random_bool(ps)).collect();
        let tt: Vec<usize> = (0..n).filter(|_| rng.random_bool(pt)).collect();
        let d = discrepancy_with_lambda(&gr, &s, &tt, lambda)?;
        ok &= d.within_bound();
        t.push(vec![i.into(), s.len().into(), tt.len().into(), d.value.into(), d.bound.into(), d.within_bound().into()]);
    }
    if args.trials > 0 {
        let a = args.a.unwrap_or(n * 5 / 8);
        let b = args.b.unwrap_or(n.saturating_sub(a));
        let max_rounds = args.max_rounds.unwrap_or_else(|| default_max_rounds(n as u64));
        let mut counts = [0u64; 4];
        for trial in 0..args.trials {
            let mut r = RandomSource::derived(g.seed, &[stream_id(&[0x68]), n as u64, trial]);
            let st = GraphState::random(n, a, b, &mut r)?;
            let (o, _) = run_graph(&gr, st, &mut r, max_rounds)?;
            counts[o as usize] += 1;
        }
        t.meta("run.a", a).meta("run.b", b).meta("run.trials", args.trials).meta("run.max_rounds", max_rounds);
        for (o, c) in [Outcome::AbsorbedAlpha, Outcome::AbsorbedBeta, Outcome::AbsorbedUndecided, Outcome::Timeout]
            .iter()
            .zip(counts)
        {
            t.meta(format!("run.{}", o.label()), c);
        }
    }
    finish(g, t, ok)
}

#[derive(Args, Debug)]
pub struct BoundsArgs {
    /// Binomial draws per grid case.
    #[arg(long, default_value_t = 1_000_000)]
    trials: u64,
}

fn bounds(g: &Global, args: &BoundsArgs) -> Status {
    use rayon::prelude::*;
    let grid = standard_grid();
    let checks = grid
        .par_iter()
        .enumerate()
        .map(|(i, q)| empirical_tail_check(q, args.trials, &mut RandomSource::derived(g.seed, &[stream_id(&[0xb0]), i as u64])))
        .collect::<Result<Vec<_>, _>>()?;
    let mut t = table(
        g,
        "bounds",
        &["case", "form", "direction", "n", "p", "parameter", "threshold", "bound", "ln_bound", "empirical", "se", "consistent"],
    );
    t.meta("trials", args.trials).meta("sqrt_n_ln_n_at_1e6", fmt_real(sqrt_n_ln_n(1_000_000)));
    let mut ok = true;
    for (i, (q, c)) in grid.iter().zip(&checks).enumerate() {
        let (form, param) = match q.kind {
            BoundKind::Multiplicative { delta } => ("multiplicative", delta),
            BoundKind::Additive { lambda } => ("additive", lambda),
            BoundKind::Reverse { delta } => ("reverse", delta),
        };
        let dir = match q.direction {
            Direction::Upper => "upper",
            Direction::Lower => "lower",
        };
        ok &= c.consistent;
        t.push(vec![
            i.into(),
            form.into(),
            dir.into(),
            q.n.into(),
            q.p.into(),
            param.into(),
            q.threshold().into(),
            c.bound.into(),
            c.ln_bound.into(),
            c.empirical.into(),
            c.se.into(),
            c.consistent.into(),
        ]);
    }
    finish(g, t, ok)
}
