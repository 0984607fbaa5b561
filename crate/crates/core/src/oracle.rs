//! Exact small-graph oracle.
//!
//! On a graph small enough, the expected spread can be computed exactly:
//! the outcome of a spread depends on each node's threshold only through its
//! integer requirement, so summing `Pr[assignment] × |spread|` over all
//! joint requirement assignments gives `σ` up to floating-point summation.
//! On top of that sit a brute-force optimum and machine checks of the
//! monotone/submodular characterization, which double as regression oracles
//! for the estimators and for greedy selection.

use std::fmt;

use itertools::Itertools;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::graph::{Graph, NodeId};
use crate::rng::StreamKey;
use crate::thresholds::{min_activation_count, ThresholdModel};

/// Feasibility guard on `Π_v (in_degree(v) + 1)`.
pub const MAX_ASSIGNMENTS: u64 = 10_000_000;
/// Feasibility guard on `C(node_count, k)` for the brute-force optimum.
pub const MAX_SUBSETS: u64 = 100_000;
/// Power-set checks enumerate all subset pairs; eight nodes is the ceiling.
pub const MAX_CHECK_NODES: usize = 8;

const TOL: f64 = 1e-9;
const ENUMERATION_CHUNK: u64 = 4096;

fn assignment_guard(graph: &Graph) -> Result<()> {
    let mut product: u64 = 1;
    for v in 0..graph.node_count() as NodeId {
        product = product.saturating_mul(graph.in_degree(v) as u64 + 1);
        if product > MAX_ASSIGNMENTS {
            return Err(Error::GuardExceeded {
                what: "requirement assignment count",
                limit: MAX_ASSIGNMENTS,
                actual: product,
            });
        }
    }
    Ok(())
}

fn binomial_capped(n: u64, k: u64, cap: u64) -> u64 {
    let k = k.min(n - k.min(n));
    let mut c: u128 = 1;
    for i in 0..k {
        c = c * (n - i) as u128 / (i + 1) as u128;
        if c > cap as u128 {
            return cap + 1;
        }
    }
    c as u64
}

/// Per-node requirement support `(m, Pr[m])`, zero-probability values
/// dropped. Seeds activate unconditionally, so their dimension is skipped.
struct Supports {
    /// Fixed requirements: singleton supports, seeds (value unused), and
    /// unreachable degree-0 nodes.
    base: Vec<u32>,
    nodes: Vec<NodeId>,
    values: Vec<Vec<(u32, f64)>>,
}

fn build_supports(graph: &Graph, model: &ThresholdModel, seed_mask: &[bool]) -> Result<Supports> {
    let n = graph.node_count();
    let mut base = vec![0u32; n];
    let mut nodes = Vec::new();
    let mut values = Vec::new();
    for v in 0..n as NodeId {
        if seed_mask[v as usize] {
            continue;
        }
        let d = graph.in_degree(v);
        if d == 0 {
            // unreachable without being seeded
            base[v as usize] = 1;
            continue;
        }
        match model {
            ThresholdModel::Constant(d0) => {
                base[v as usize] = min_activation_count(*d0, d);
            }
            _ => {
                let dist = model.requirement_distribution(d)?;
                let support: Vec<(u32, f64)> = dist
                    .iter()
                    .enumerate()
                    .filter(|(_, &p)| p > 0.0)
                    .map(|(m, &p)| (m as u32, p))
                    .collect();
                if support.len() == 1 {
                    base[v as usize] = support[0].0;
                } else {
                    nodes.push(v);
                    values.push(support);
                }
            }
        }
    }
    Ok(Supports { base, nodes, values })
}

/// Minimal reusable spread engine for the enumeration inner loop.
struct SimBuffers {
    active: Vec<bool>,
    counts: Vec<u32>,
    queue: Vec<NodeId>,
}

impl SimBuffers {
    fn new(n: usize) -> Self {
        SimBuffers {
            active: vec![false; n],
            counts: vec![0; n],
            queue: Vec::with_capacity(n),
        }
    }

    fn spread(&mut self, graph: &Graph, reqs: &[u32], seeds: &[NodeId]) -> usize {
        self.active.fill(false);
        self.counts.fill(0);
        self.queue.clear();
        for &s in seeds {
            if !self.active[s as usize] {
                self.active[s as usize] = true;
                self.queue.push(s);
            }
        }
        let mut qi = 0;
        while qi < self.queue.len() {
            let v = self.queue[qi];
            qi += 1;
            for &w in graph.out_neighbors(v) {
                let wi = w as usize;
                if !self.active[wi] {
                    self.counts[wi] += 1;
                    if self.counts[wi] >= reqs[wi] {
                        self.active[wi] = true;
                        self.queue.push(w);
                    }
                }
            }
        }
        self.queue.len()
    }
}

/// Exact expected spread `σ(seeds)` by enumerating all joint requirement
/// assignments. Requires `Π_v (in_degree(v) + 1) ≤ 10^7`.
///
/// Partial sums are accumulated per fixed-size chunk of the assignment space
/// and merged in chunk order, so serial and parallel runs produce
/// bit-identical values.
pub fn exact_sigma(graph: &Graph, model: &ThresholdModel, seeds: &[NodeId]) -> Result<f64> {
    assignment_guard(graph)?;
    let n = graph.node_count();
    let mut seed_mask = vec![false; n];
    for &s in seeds {
        if s as usize >= n {
            return Err(Error::NodeOutOfRange {
                node: s as u64,
                node_count: n,
            });
        }
        seed_mask[s as usize] = true;
    }
    let seeds: Vec<NodeId> = (0..n as NodeId).filter(|&v| seed_mask[v as usize]).collect();

    let supports = build_supports(graph, model, &seed_mask)?;
    let dims: Vec<u64> = supports.values.iter().map(|s| s.len() as u64).collect();
    let total: u64 = dims.iter().product();

    if total == 0 {
        unreachable!("supports are never empty");
    }

    let chunks = total.div_ceil(ENUMERATION_CHUNK);
    let partials: Vec<f64> = (0..chunks)
        .into_par_iter()
        .map(|chunk| {
            let start = chunk * ENUMERATION_CHUNK;
            let end = (start + ENUMERATION_CHUNK).min(total);
            let mut reqs = supports.base.clone();
            let mut sim = SimBuffers::new(n);

            // decode the odometer at the chunk start
            let mut digits: Vec<usize> = vec![0; dims.len()];
            let mut rem = start;
            for i in (0..dims.len()).rev() {
                digits[i] = (rem % dims[i]) as usize;
                rem /= dims[i];
            }

            let mut acc = 0.0f64;
            for flat in start..end {
                let mut prob = 1.0f64;
                for (i, &digit) in digits.iter().enumerate() {
                    let (m, p) = supports.values[i][digit];
                    reqs[supports.nodes[i] as usize] = m;
                    prob *= p;
                }
                let size = sim.spread(graph, &reqs, &seeds);
                acc += prob * size as f64;

                if flat + 1 < end {
                    for i in (0..dims.len()).rev() {
                        digits[i] += 1;
                        if digits[i] < dims[i] as usize {
                            break;
                        }
                        digits[i] = 0;
                    }
                }
            }
            acc
        })
        .collect();

    Ok(partials.iter().sum())
}

/// Exact `σ` for every subset of nodes, indexed by bitmask. Only for graphs
/// within the power-set guard.
pub fn sigma_table(graph: &Graph, model: &ThresholdModel) -> Result<Vec<f64>> {
    let n = graph.node_count();
    if n > MAX_CHECK_NODES {
        return Err(Error::GuardExceeded {
            what: "node count for power-set enumeration",
            limit: MAX_CHECK_NODES as u64,
            actual: n as u64,
        });
    }
    assignment_guard(graph)?;
    (0u32..1 << n)
        .into_par_iter()
        .map(|mask| {
            let seeds: Vec<NodeId> = (0..n as NodeId).filter(|v| mask >> v & 1 == 1).collect();
            exact_sigma(graph, model, &seeds)
        })
        .collect()
}

/// Exhaustive maximization of [`exact_sigma`] over all `k`-subsets; ties go
/// to the lexicographically smallest set.
pub fn brute_force_opt(
    graph: &Graph,
    model: &ThresholdModel,
    k: usize,
) -> Result<(Vec<NodeId>, f64)> {
    let n = graph.node_count();
    if k < 1 || k > n {
        return Err(Error::InvalidArgument(format!(
            "k = {k} out of range for a graph of {n} nodes"
        )));
    }
    let count = binomial_capped(n as u64, k as u64, MAX_SUBSETS);
    if count > MAX_SUBSETS {
        return Err(Error::GuardExceeded {
            what: "subset count",
            limit: MAX_SUBSETS,
            actual: count,
        });
    }
    assignment_guard(graph)?;

    let mut best: Option<(Vec<NodeId>, f64)> = None;
    for subset in (0..n as NodeId).combinations(k) {
        let value = exact_sigma(graph, model, &subset)?;
        match &best {
            Some((_, v)) if value <= *v => {}
            _ => best = Some((subset, value)),
        }
    }
    Ok(best.expect("at least one subset"))
}

/// Outcome of the exhaustive monotonicity/submodularity check.
#[derive(Debug, Clone, PartialEq)]
pub enum SubmodularityReport {
    Holds,
    NotMonotone {
        s: Vec<NodeId>,
        t: Vec<NodeId>,
        sigma_s: f64,
        sigma_t: f64,
    },
    NotSubmodular {
        s: Vec<NodeId>,
        t: Vec<NodeId>,
        v: NodeId,
        margin_s: f64,
        margin_t: f64,
    },
}

impl SubmodularityReport {
    pub fn holds(&self) -> bool {
        matches!(self, SubmodularityReport::Holds)
    }
}

fn mask_nodes(mask: u32, n: usize) -> Vec<NodeId> {
    (0..n as NodeId).filter(|v| mask >> v & 1 == 1).collect()
}

/// Check `σ(S) ≤ σ(T)` and `σ(S∪{v}) − σ(S) ≥ σ(T∪{v}) − σ(T)` for all
/// `S ⊆ T ⊆ V`, `v ∉ T`, at tolerance `1e-9`, returning the first violation.
pub fn check_monotone_submodular(
    graph: &Graph,
    model: &ThresholdModel,
) -> Result<SubmodularityReport> {
    let n = graph.node_count();
    let table = sigma_table(graph, model)?;
    let full: u32 = (1u32 << n) - 1;

    for t in 0..=full {
        // descending proper-submask walk, then the empty set
        let mut s = t;
        loop {
            s = s.wrapping_sub(1) & t;
            if table[s as usize] > table[t as usize] + TOL {
                return Ok(SubmodularityReport::NotMonotone {
                    s: mask_nodes(s, n),
                    t: mask_nodes(t, n),
                    sigma_s: table[s as usize],
                    sigma_t: table[t as usize],
                });
            }
            for v in 0..n as u32 {
                let bit = 1u32 << v;
                if t & bit != 0 {
                    continue;
                }
                let margin_s = table[(s | bit) as usize] - table[s as usize];
                let margin_t = table[(t | bit) as usize] - table[t as usize];
                if margin_s < margin_t - TOL {
                    return Ok(SubmodularityReport::NotSubmodular {
                        s: mask_nodes(s, n),
                        t: mask_nodes(t, n),
                        v: v as NodeId,
                        margin_s,
                        margin_t,
                    });
                }
            }
            if s == 0 {
                break;
            }
        }
    }
    Ok(SubmodularityReport::Holds)
}

/// A concrete graph on which a model's expected spread violates
/// monotonicity or submodularity. Serializes to a line-oriented text format
/// suitable for committing as a regression fixture.
#[derive(Debug, Clone, PartialEq)]
pub struct ViolationWitness {
    pub edges: Vec<(u64, u64)>,
    pub report: SubmodularityReport,
}

impl fmt::Display for ViolationWitness {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let fmt_set = |nodes: &[NodeId]| nodes.iter().map(|v| v.to_string()).join(" ");
        writeln!(
            f,
            "edges: {}",
            self.edges.iter().map(|(a, b)| format!("{a}-{b}")).join(" ")
        )?;
        match &self.report {
            SubmodularityReport::Holds => writeln!(f, "holds")?,
            SubmodularityReport::NotMonotone {
                s,
                t,
                sigma_s,
                sigma_t,
            } => {
                writeln!(f, "kind: monotonicity")?;
                writeln!(f, "S: {}", fmt_set(s))?;
                writeln!(f, "T: {}", fmt_set(t))?;
                writeln!(f, "sigma_S: {sigma_s}")?;
                writeln!(f, "sigma_T: {sigma_t}")?;
            }
            SubmodularityReport::NotSubmodular {
                s,
                t,
                v,
                margin_s,
                margin_t,
            } => {
                writeln!(f, "kind: submodularity")?;
                writeln!(f, "S: {}", fmt_set(s))?;
                writeln!(f, "T: {}", fmt_set(t))?;
                writeln!(f, "v: {v}")?;
                writeln!(f, "margin_S: {margin_s}")?;
                writeln!(f, "margin_T: {margin_t}")?;
            }
        }
        Ok(())
    }
}

/// All connected graphs on `n ≥ 2` labeled nodes up to isomorphism, each as
/// an edge list, in a deterministic order (canonical representatives by
/// ascending edge mask). Practical for `n ≤ 6`.
pub fn connected_graph_classes(n: usize) -> Vec<Vec<(u64, u64)>> {
    assert!((2..=6).contains(&n), "class enumeration supports n in 2..=6");
    let pairs: Vec<(usize, usize)> = (0..n)
        .flat_map(|i| ((i + 1)..n).map(move |j| (i, j)))
        .collect();
    let mut bit_index = vec![vec![0usize; n]; n];
    for (idx, &(a, b)) in pairs.iter().enumerate() {
        bit_index[a][b] = idx;
        bit_index[b][a] = idx;
    }

    let is_connected = |mask: u32| -> bool {
        let mut adj = vec![0u32; n];
        for (idx, &(a, b)) in pairs.iter().enumerate() {
            if mask >> idx & 1 == 1 {
                adj[a] |= 1 << b;
                adj[b] |= 1 << a;
            }
        }
        let mut seen: u32 = 1;
        let mut frontier: u32 = 1;
        while frontier != 0 {
            let mut next = 0;
            let mut f = frontier;
            while f != 0 {
                let v = f.trailing_zeros() as usize;
                f &= f - 1;
                next |= adj[v] & !seen;
            }
            seen |= next;
            frontier = next;
        }
        seen == (1 << n) - 1
    };

    let perms: Vec<Vec<usize>> = (0..n).permutations(n).collect();
    let mut classes = Vec::new();
    for mask in 1u32..1 << pairs.len() {
        if !is_connected(mask) {
            continue;
        }
        // keep only the minimal mask of the isomorphism class
        let mut canonical = true;
        'perm: for perm in &perms {
            let mut mapped: u32 = 0;
            for (idx, &(a, b)) in pairs.iter().enumerate() {
                if mask >> idx & 1 == 1 {
                    mapped |= 1 << bit_index[perm[a]][perm[b]];
                }
            }
            if mapped < mask {
                canonical = false;
                break 'perm;
            }
        }
        if canonical {
            classes.push(
                pairs
                    .iter()
                    .enumerate()
                    .filter(|(idx, _)| mask >> idx & 1 == 1)
                    .map(|(_, &(a, b))| (a as u64, b as u64))
                    .collect(),
            );
        }
    }
    classes
}

/// Search for a monotonicity/submodularity violation of the model: first
/// exhaustively over non-isomorphic connected graphs with 3..=6 nodes
/// (smallest witnesses make the best regression fixtures), then over random
/// sparse connected graphs with up to 7 nodes. `budget` bounds the number of
/// graphs examined; the search is fully deterministic.
pub fn find_submodularity_violation(
    model: &ThresholdModel,
    budget: usize,
) -> Option<ViolationWitness> {
    let mut examined = 0;
    let mut consider = |edges: Vec<(u64, u64)>| -> Option<Option<ViolationWitness>> {
        if examined >= budget {
            return Some(None);
        }
        examined += 1;
        let (graph, _) = Graph::from_edges(edges.iter().copied(), false).ok()?;
        match check_monotone_submodular(&graph, model) {
            Ok(report) if !report.holds() => Some(Some(ViolationWitness { edges, report })),
            _ => None,
        }
    };

    for n in 3..=6 {
        for edges in connected_graph_classes(n) {
            if let Some(outcome) = consider(edges) {
                return outcome;
            }
        }
    }

    let key = StreamKey::new(0x6f72_6163_6c65);
    for i in 0..budget as u64 {
        let n = 3 + (i % 5) as usize; // 3..=7
        let extra = (i / 5 % 3) as usize;
        let graph = match crate::synthetic::random_connected(n, extra, key.child(i)) {
            Ok(g) => g,
            Err(_) => continue,
        };
        let mut edges: Vec<(u64, u64)> = Vec::new();
        for u in 0..graph.node_count() as NodeId {
            for &v in graph.out_neighbors(u) {
                if u < v {
                    edges.push((graph.label(u), graph.label(v)));
                }
            }
        }
        if let Some(outcome) = consider(edges) {
            return outcome;
        }
    }
    None
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn star(leaves: u64) -> Graph {
        Graph::from_edges((1..=leaves).map(|l| (0u64, l)), false)
            .unwrap()
            .0
    }

    #[test]
    fn exact_sigma_single_edge() {
        let (g, _) = Graph::from_edges([(0u64, 1)], false).unwrap();
        assert_eq!(exact_sigma(&g, &ThresholdModel::Linear, &[0]).unwrap(), 2.0);
    }

    #[test]
    fn exact_sigma_star_leaf_seed() {
        // 1 + Pr[m_center = 1] * 3: if the center tips, every leaf follows.
        let g = star(3);
        let sigma = exact_sigma(&g, &ThresholdModel::Linear, &[1]).unwrap();
        assert_relative_eq!(sigma, 2.0, epsilon = 1e-12);
    }

    #[test]
    fn exact_sigma_empty_and_full() {
        let g = star(4);
        assert_eq!(exact_sigma(&g, &ThresholdModel::ConvexSqrt, &[]).unwrap(), 0.0);
        let all: Vec<NodeId> = (0..5).collect();
        assert_eq!(exact_sigma(&g, &ThresholdModel::ConvexSqrt, &all).unwrap(), 5.0);
    }

    #[test]
    fn exact_sigma_constant_model_is_deterministic_spread() {
        let g = star(4);
        let mv = ThresholdModel::constant(0.5).unwrap();
        // center needs 2 of 4; a single leaf seed stops at itself
        assert_eq!(exact_sigma(&g, &mv, &[1]).unwrap(), 1.0);
        assert_eq!(exact_sigma(&g, &mv, &[1, 2]).unwrap(), 5.0);
    }

    #[test]
    fn exact_sigma_guard() {
        let g = star(30);
        assert!(matches!(
            exact_sigma(&g, &ThresholdModel::Linear, &[0]),
            Err(Error::GuardExceeded { .. })
        ));
    }

    #[test]
    fn brute_force_star() {
        let g = star(3);
        let (set, value) = brute_force_opt(&g, &ThresholdModel::Linear, 1).unwrap();
        assert_eq!(set, vec![0]);
        assert_eq!(value, 4.0);
    }

    #[test]
    fn brute_force_two_disjoint_edges() {
        let (g, _) = Graph::from_edges([(0u64, 1), (2, 3)], false).unwrap();
        let (set, value) = brute_force_opt(&g, &ThresholdModel::Linear, 2).unwrap();
        assert_eq!(set, vec![0, 2]);
        assert_eq!(value, 4.0);
    }

    #[test]
    fn brute_force_full_set() {
        let g = star(3);
        let (set, value) = brute_force_opt(&g, &ThresholdModel::ConcaveSquare, 4).unwrap();
        assert_eq!(set, vec![0, 1, 2, 3]);
        assert_eq!(value, 4.0);
    }

    #[test]
    fn brute_force_subset_guard() {
        // a directed chain keeps the assignment guard low while C(20,10)
        // overflows the subset guard
        let (g, _) = Graph::from_edges((0..19u64).map(|i| (i, i + 1)), true).unwrap();
        assert!(matches!(
            brute_force_opt(&g, &ThresholdModel::Linear, 10),
            Err(Error::GuardExceeded { what: "subset count", .. })
        ));
    }

    #[test]
    fn check_concave_models_hold_on_small_graphs() {
        let graphs = [
            star(3),
            Graph::from_edges([(0u64, 1), (1, 2), (2, 3), (3, 0)], false).unwrap().0,
            Graph::from_edges([(0u64, 1), (1, 2), (0, 2), (2, 3), (3, 4)], false).unwrap().0,
        ];
        for g in &graphs {
            for model in [ThresholdModel::Linear, ThresholdModel::ConcaveSquare] {
                assert!(check_monotone_submodular(g, &model).unwrap().holds());
            }
        }
    }

    #[test]
    fn majority_vote_violates_on_small_star() {
        // K1,3 with δ = 0.5: the center needs two leaves, so the second
        // leaf's marginal gain grows with context.
        let g = star(3);
        let mv = ThresholdModel::constant(0.5).unwrap();
        let report = check_monotone_submodular(&g, &mv).unwrap();
        match report {
            SubmodularityReport::NotSubmodular { margin_s, margin_t, .. } => {
                assert!(margin_s < margin_t);
            }
            other => panic!("expected a submodularity violation, got {other:?}"),
        }
    }

    #[test]
    fn class_enumeration_counts() {
        // connected graphs up to isomorphism (OEIS A001349)
        assert_eq!(connected_graph_classes(2).len(), 1);
        assert_eq!(connected_graph_classes(3).len(), 2);
        assert_eq!(connected_graph_classes(4).len(), 6);
        assert_eq!(connected_graph_classes(5).len(), 21);
    }

    #[test]
    fn violation_search_smoke() {
        let mv = ThresholdModel::constant(0.5).unwrap();
        let witness = find_submodularity_violation(&mv, 50).expect("witness expected");
        assert!(matches!(
            witness.report,
            SubmodularityReport::NotSubmodular { .. }
        ));
        // rendering of the fixture format
        let text = witness.to_string();
        assert!(text.starts_with("edges: "));
        assert!(text.contains("kind: submodularity"));

        assert!(find_submodularity_violation(&ThresholdModel::Linear, 9).is_none());
    }
}
