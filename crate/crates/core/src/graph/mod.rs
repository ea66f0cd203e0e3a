//! Node-level dynamics on explicit d-regular graphs.
//!
//! Edge counts between node sets use the ordered-pair convention
//! `E(S, T) = sum over u in S of |N(u) ∩ T|`, so an edge with both ends in
//! `S ∩ T` counts twice. For disjoint sets this is the plain edge count, and
//! with it the identities `δ(A,B) + δ(A,Q) + δ(A,A) = 0` (and the two
//! analogues) hold exactly on a regular graph.

mod io;
mod spectral;

pub use io::{read_edge_list, write_edge_list};
pub use spectral::{is_connected, spectral_lambda};

use rand::seq::{IndexedRandom, SliceRandom};
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::Configuration;
use crate::dynamics::{Expectation, Outcome};
use crate::error::{Error, Result};
use crate::rng::RandomSource;

/// Simple undirected d-regular graph with flat neighbor storage.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Graph {
    n: usize,
    d: usize,
    adj: Vec<u32>,
}

impl Graph {
    /// Build from neighbor lists, checking regularity, simplicity and symmetry.
    pub fn from_adjacency(lists: Vec<Vec<u32>>) -> Result<Self> {
        let n = lists.len();
        let d = lists.first().map_or(0, Vec::len);
        let infeasible = |reason: String| Error::InfeasibleGraph { n, d, reason };
        if n == 0 {
            return Err(infeasible("empty vertex set".into()));
        }
        let mut adj = Vec::with_capacity(n * d);
        for (u, list) in lists.iter().enumerate() {
            if list.len() != d {
                return Err(infeasible(format!("node {u} has degree {}", list.len())));
            }
            let mut sorted = list.clone();
            sorted.sort_unstable();
            if sorted.windows(2).any(|w| w[0] == w[1]) {
                return Err(infeasible(format!("node {u} has a repeated neighbor")));
            }
            for &v in &sorted {
                if v as usize >= n || v as usize == u {
                    return Err(infeasible(format!("bad neighbor {v} of node {u}")));
                }
                if !lists[v as usize].contains(&(u as u32)) {
                    return Err(infeasible(format!("edge {u}-{v} is not symmetric")));
                }
            }
            adj.extend_from_slice(&sorted);
        }
        Ok(Self { n, d, adj })
    }

    pub fn complete(n: usize) -> Self {
        let lists = (0..n as u32).map(|u| (0..n as u32).filter(|&v| v != u).collect()).collect();
        Self::from_adjacency(lists).expect("complete graph is regular")
    }

    pub fn cycle(n: usize) -> Result<Self> {
        if n < 3 {
            return Err(Error::InfeasibleGraph { n, d: 2, reason: "cycle needs at least 3 nodes".into() });
        }
        let n32 = n as u32;
        Self::from_adjacency((0..n32).map(|u| vec![(u + n32 - 1) % n32, (u + 1) % n32]).collect())
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn d(&self) -> usize {
        self.d
    }

    #[inline]
    pub fn neighbors(&self, u: usize) -> &[u32] {
        &self.adj[u * self.d..(u + 1) * self.d]
    }

    /// Each undirected edge once, as `(u, v)` with `u < v`.
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        (0..self.n).flat_map(move |u| {
            self.neighbors(u).iter().map(|&v| v as usize).filter(move |&v| u < v).map(move |v| (u, v))
        })
    }

    /// Ordered-pair edge count between node sets given as membership masks.
    pub fn edge_count(&self, s: &[bool], t: &[bool]) -> u64 {
        (0..self.n)
            .filter(|&u| s[u])
            .map(|u| self.neighbors(u).iter().filter(|&&v| t[v as usize]).count() as u64)
            .sum()
    }
}

fn feasibility(n: usize, d: usize) -> Result<()> {
    let reason = if n == 0 {
        "empty vertex set"
    } else if d >= n {
        "degree must be below n"
    } else if (n * d) % 2 == 1 {
        "n * d is odd"
    } else if n > u32::MAX as usize {
        "too many nodes"
    } else {
        return Ok(());
    };
    Err(Error::InfeasibleGraph { n, d, reason: reason.into() })
}

/// Attempts at the pairing before giving up. Far more than any feasible
/// `(n, d)` with `d` up to a few dozen ever needs.
const MAX_RESTARTS: usize = 10_000;

/// Random d-regular simple graph from the pairing model.
///
/// Points are matched one pair at a time, refusing pairs that would create a
/// loop or a repeated edge; if no admissible pair is left the attempt starts
/// over. The output is close to uniform for fixed `d`.
pub fn random_regular_graph<R: Rng + ?Sized>(n: usize, d: usize, rng: &mut R) -> Result<Graph> {
    feasibility(n, d)?;
    for _ in 0..MAX_RESTARTS {
        if let Some(lists) = try_pairing(n, d, rng) {
            return Graph::from_adjacency(lists);
        }
    }
    Err(Error::InfeasibleGraph { n, d, reason: format!("pairing failed {MAX_RESTARTS} times") })
}

fn try_pairing<R: Rng + ?Sized>(n: usize, d: usize, rng: &mut R) -> Option<Vec<Vec<u32>>> {
    let mut lists: Vec<Vec<u32>> = vec![Vec::with_capacity(d); n];
    let mut points: Vec<u32> = (0..n as u32).flat_map(|u| std::iter::repeat_n(u, d)).collect();
    let admissible = |lists: &[Vec<u32>], u: u32, v: u32| u != v && !lists[u as usize].contains(&v);
    let mut misses = 0;
    while !points.is_empty() {
        let (i, j) = if misses < 64 {
            let i = rng.random_range(0..points.len());
            let j = rng.random_range(0..points.len());
            if i == j || !admissible(&lists, points[i], points[j]) {
                misses += 1;
                continue;
            }
            (i, j)
        } else {
            // Few admissible pairs remain: enumerate them.
            let mut ok = Vec::new();
            for i in 0..points.len() {
                for j in i + 1..points.len() {
                    if admissible(&lists, points[i], points[j]) {
                        ok.push((i, j));
                    }
                }
            }
            *ok.choose(rng)?
        };
        misses = 0;
        let (u, v) = (points[i], points[j]);
        lists[u as usize].push(v);
        lists[v as usize].push(u);
        let (hi, lo) = (i.max(j), i.min(j));
        points.swap_remove(hi);
        points.swap_remove(lo);
    }
    Some(lists)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
#[repr(u8)]
pub enum NodeState {
    Alpha,
    Beta,
    Undecided,
}

impl NodeState {
    /// Table 1: adopt when undecided, drop out on seeing the other color.
    #[inline]
    pub fn update(self, pulled: NodeState) -> NodeState {
        match (self, pulled) {
            (NodeState::Undecided, x) => x,
            (x, NodeState::Undecided) => x,
            (x, y) if x == y => x,
            _ => NodeState::Undecided,
        }
    }
}

/// Per-node color assignment.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GraphState {
    nodes: Vec<NodeState>,
}

impl GraphState {
    pub fn new(nodes: Vec<NodeState>) -> Self {
        Self { nodes }
    }

    /// `a` Alpha and `b` Beta nodes placed uniformly at random.
    pub fn random<R: Rng + ?Sized>(n: usize, a: usize, b: usize, rng: &mut R) -> Result<Self> {
        Configuration::new(n as u64, a as u64, b as u64)?;
        let mut nodes = vec![NodeState::Undecided; n];
        nodes[..a].fill(NodeState::Alpha);
        nodes[a..a + b].fill(NodeState::Beta);
        nodes.shuffle(rng);
        Ok(Self { nodes })
    }

    pub fn nodes(&self) -> &[NodeState] {
        &self.nodes
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn count(&self, state: NodeState) -> usize {
        self.nodes.iter().filter(|&&x| x == state).count()
    }

    pub fn mask(&self, state: NodeState) -> Vec<bool> {
        self.nodes.iter().map(|&x| x == state).collect()
    }

    /// Aggregate counts as a complete-graph configuration.
    pub fn configuration(&self) -> Configuration {
        let a = self.count(NodeState::Alpha) as u64;
        let b = self.count(NodeState::Beta) as u64;
        Configuration::new(self.nodes.len() as u64, a, b).expect("counts partition the node set")
    }

    fn check(&self, g: &Graph) -> Result<()> {
        if self.nodes.len() != g.n() {
            return Err(Error::PopulationMismatch { expected: g.n() as u64, got: self.nodes.len() as u64 });
        }
        Ok(())
    }
}

/// Nodes per independently seeded block in [`graph_step`].
const BLOCK: usize = 4096;

/// One synchronous round: every node pulls a uniform neighbor of the
/// pre-round state. Blocks of nodes draw from streams derived from a single
/// value taken from `rng`, so the result does not depend on thread count.
pub fn graph_step<R: Rng + ?Sized>(g: &Graph, st: &GraphState, rng: &mut R) -> Result<GraphState> {
    st.check(g)?;
    if g.d() == 0 {
        return Ok(st.clone());
    }
    let round_seed = rng.next_u64();
    let mut next = vec![NodeState::Undecided; g.n()];
    next.par_chunks_mut(BLOCK).enumerate().for_each(|(block, out)| {
        let mut r = RandomSource::derived(round_seed, &[block as u64]);
        let base = block * BLOCK;
        for (k, slot) in out.iter_mut().enumerate() {
            let u = base + k;
            let nb = g.neighbors(u);
            let v = nb[r.random_range(0..nb.len())] as usize;
            *slot = st.nodes[u].update(st.nodes[v]);
        }
    });
    Ok(GraphState { nodes: next })
}

/// Run [`graph_step`] until a monochromatic or all-undecided state or until
/// `max_rounds`; returns the outcome and rounds used.
pub fn run_graph<R: Rng + ?Sized>(g: &Graph, st: GraphState, rng: &mut R, max_rounds: u64) -> Result<(Outcome, u64)> {
    let mut cur = st;
    for round in 0..=max_rounds {
        if let Some(o) = Outcome::of(&cur.configuration()) {
            return Ok((o, round));
        }
        if round == max_rounds {
            break;
        }
        cur = graph_step(g, &cur, rng)?;
    }
    Ok((Outcome::Timeout, max_rounds))
}

/// `δ(S,T) = E(S,T) - d|S||T|/n` next to its mixing-lemma bound `λ √(|S||T|)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Discrepancy {
    pub value: f64,
    pub bound: f64,
}

impl Discrepancy {
    pub fn within_bound(&self) -> bool {
        // Relative slack for rounding in the eigenvalue.
        self.value.abs() <= self.bound * (1.0 + 1e-9) + 1e-9
    }
}

fn mask_of(n: usize, set: &[usize]) -> Result<Vec<bool>> {
    let mut m = vec![false; n];
    for &u in set {
        if u >= n {
            return Err(Error::InvalidParameter(format!("node {u} outside 0..{n}")));
        }
        m[u] = true;
    }
    Ok(m)
}

fn delta(g: &Graph, s: &[bool], t: &[bool]) -> f64 {
    let (ss, ts) = (s.iter().filter(|&&x| x).count(), t.iter().filter(|&&x| x).count());
    g.edge_count(s, t) as f64 - g.d() as f64 * ss as f64 * ts as f64 / g.n() as f64
}

/// Discrepancy with a caller-supplied spectral value (sets may overlap;
/// duplicate entries are ignored).
pub fn discrepancy_with_lambda(g: &Graph, s: &[usize], t: &[usize], lambda: f64) -> Result<Discrepancy> {
    let (sm, tm) = (mask_of(g.n(), s)?, mask_of(g.n(), t)?);
    let (ss, ts) = (sm.iter().filter(|&&x| x).count(), tm.iter().filter(|&&x| x).count());
    Ok(Discrepancy { value: delta(g, &sm, &tm), bound: lambda * ((ss * ts) as f64).sqrt() })
}

pub fn discrepancy(g: &Graph, s: &[usize], t: &[usize]) -> Result<Discrepancy> {
    discrepancy_with_lambda(g, s, t, spectral_lambda(g)?)
}

/// Expected next class sizes written as complete-graph terms plus
/// discrepancy corrections.
pub fn expected_next_graph(g: &Graph, st: &GraphState) -> Result<Expectation> {
    st.check(g)?;
    let n = g.n() as f64;
    let d = g.d() as f64;
    let (am, bm, qm) = (st.mask(NodeState::Alpha), st.mask(NodeState::Beta), st.mask(NodeState::Undecided));
    let c = st.configuration();
    let (a, b, q, s) = (c.a() as f64, c.b() as f64, c.q() as f64, c.s() as f64);
    if g.d() == 0 {
        return Ok(Expectation { a, b, q, s });
    }
    let (d_ab, d_aq, d_bq, d_qq) = (delta(g, &am, &bm), delta(g, &am, &qm), delta(g, &bm, &qm), delta(g, &qm, &qm));
    Ok(Expectation {
        a: a * (a + 2.0 * q) / n + (d_aq - d_ab) / d,
        b: b * (b + 2.0 * q) / n + (d_bq - d_ab) / d,
        q: (q * q + 2.0 * a * b) / n + (d_qq + 2.0 * d_ab) / d,
        s: s * (1.0 + q / n) + (d_aq - d_bq) / d,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::Rng;

    /// Independent route: sum each node's exact transition probabilities.
    fn per_node_expectation(g: &Graph, st: &GraphState) -> [f64; 3] {
        let mut e = [0.0; 3];
        for u in 0..g.n() {
            for &v in g.neighbors(u) {
                let next = st.nodes()[u].update(st.nodes()[v as usize]);
                e[next as usize] += 1.0 / g.d() as f64;
            }
        }
        e
    }

    #[test]
    fn k4_is_the_only_cubic_graph_on_four_nodes() {
        let mut rng = RandomSource::new(1, 0);
        for _ in 0..20 {
            assert_eq!(random_regular_graph(4, 3, &mut rng).unwrap(), Graph::complete(4));
        }
    }

    #[test]
    fn generated_graphs_are_regular_and_simple() {
        let mut rng = RandomSource::new(2, 0);
        for (n, d) in [(10, 3), (11, 4), (50, 14), (200, 10)] {
            let g = random_regular_graph(n, d, &mut rng).unwrap();
            assert_eq!(g.edges().count(), n * d / 2);
            for u in 0..n {
                assert_eq!(g.neighbors(u).len(), d);
                assert!(!g.neighbors(u).contains(&(u as u32)));
            }
        }
    }

    #[test]
    fn infeasible_requests() {
        let mut rng = RandomSource::new(2, 0);
        assert!(matches!(random_regular_graph(5, 3, &mut rng), Err(Error::InfeasibleGraph { .. })));
        assert!(random_regular_graph(4, 4, &mut rng).is_err());
        assert!(Graph::from_adjacency(vec![vec![1], vec![2], vec![0]]).is_err());
    }

    #[test]
    fn k10_discrepancy() {
        let g = Graph::complete(10);
        let d = discrepancy(&g, &[0, 1], &[2, 3, 4]).unwrap();
        assert!((d.value - 0.6).abs() < 1e-12);
        assert!((d.bound - 6f64.sqrt()).abs() < 1e-6);
        let e = discrepancy(&g, &[], &[2, 3]).unwrap();
        assert_eq!((e.value, e.bound), (0.0, 0.0));
    }

    #[test]
    fn k4_expectation_matches_hand_value() {
        use NodeState::*;
        let g = Graph::complete(4);
        let st = GraphState::new(vec![Alpha, Alpha, Beta, Beta]);
        let e = expected_next_graph(&g, &st).unwrap();
        // Each Alpha keeps its color only by pulling the other Alpha: 1/3.
        assert!((e.a - 2.0 / 3.0).abs() < 1e-12);
        assert!((e.q - 8.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn absorbing_states_do_not_move() {
        use NodeState::*;
        let mut rng = RandomSource::new(5, 0);
        let g = random_regular_graph(30, 4, &mut rng).unwrap();
        for s in [Alpha, Undecided] {
            let st = GraphState::new(vec![s; 30]);
            assert_eq!(graph_step(&g, &st, &mut rng).unwrap(), st);
        }
        let all_alpha = GraphState::new(vec![Alpha; 30]);
        let e = expected_next_graph(&g, &all_alpha).unwrap();
        assert!((e.a - 30.0).abs() < 1e-12 && e.q.abs() < 1e-12);
    }

    #[test]
    fn step_is_reproducible() {
        let mut rng = RandomSource::new(9, 0);
        let g = random_regular_graph(10_000, 6, &mut rng).unwrap();
        let st = GraphState::random(10_000, 4000, 3000, &mut rng).unwrap();
        let x = graph_step(&g, &st, &mut RandomSource::new(4, 4)).unwrap();
        let y = graph_step(&g, &st, &mut RandomSource::new(4, 4)).unwrap();
        assert_eq!(x, y);
    }

    #[test]
    fn edge_count_is_ordered_pair() {
        let g = Graph::cycle(4).unwrap();
        let all = vec![true; 4];
        assert_eq!(g.edge_count(&all, &all), 8);
        let s = [true, true, false, false];
        assert_eq!(g.edge_count(&s, &s), 2);
    }

    proptest! {
        #[test]
        fn formula_matches_per_node_sum(seed in 0u64..10_000, n in 6usize..40, d_half in 1usize..3) {
            let d = (2 * d_half).min(n - 1);
            let mut rng = RandomSource::new(seed, 0);
            let g = random_regular_graph(n, d, &mut rng).unwrap();
            let a = rng.random_range(0..=n);
            let b = rng.random_range(0..=n - a);
            let st = GraphState::random(n, a, b, &mut rng).unwrap();
            let e = expected_next_graph(&g, &st).unwrap();
            let exact = per_node_expectation(&g, &st);
            prop_assert!((e.a - exact[0]).abs() < 1e-9);
            prop_assert!((e.b - exact[1]).abs() < 1e-9);
            prop_assert!((e.q - exact[2]).abs() < 1e-9);
            prop_assert!((e.s - (exact[0] - exact[1])).abs() < 1e-9);
            prop_assert!((e.a + e.b + e.q - n as f64).abs() < 1e-9 * n as f64);
        }

        #[test]
        fn step_preserves_partition_and_never_recolors(seed in 0u64..10_000) {
            let mut rng = RandomSource::new(seed, 1);
            let g = random_regular_graph(60, 4, &mut rng).unwrap();
            let st = GraphState::random(60, 20, 20, &mut rng).unwrap();
            let next = graph_step(&g, &st, &mut rng).unwrap();
            prop_assert_eq!(next.len(), 60);
            for (x, y) in st.nodes().iter().zip(next.nodes()) {
                let flipped = matches!((x, y), (NodeState::Alpha, NodeState::Beta) | (NodeState::Beta, NodeState::Alpha));
                prop_assert!(!flipped);
            }
        }
    }
}
