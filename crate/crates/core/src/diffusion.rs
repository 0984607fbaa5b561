//! Spread simulation and estimators of the expected spread `σ(S)`.
//!
//! Dynamics are progressive: seeds adopt B and never revert, and in each
//! synchronous round every inactive node whose count of active influence
//! neighbors reaches its requirement switches. A [`Snapshot`] fixes one
//! realization of all node thresholds, which makes the spread deterministic;
//! the objective is estimated either from fresh Monte Carlo replicates
//! ([`estimate_sigma_mc`]) or by averaging over a fixed snapshot pool
//! ([`estimate_sigma_snapshots`], the static-greedy evaluation unit).
//!
//! All estimator reductions sum exact integer spread counts before the final
//! division, so results are bit-identical at any worker count.

use std::io::{BufRead, Write};

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::graph::{Graph, NodeId};
use crate::rng::StreamKey;
use crate::thresholds::{min_activation_count, ThresholdModel};

/// One joint realization of all node thresholds.
///
/// The integer requirement `m_v` (least count of active in-neighbors that
/// activates `v`, ties activating) is the lossless discretization of the
/// threshold: the spread outcome depends on `δ_v` only through `m_v`.
#[derive(Debug, Clone, PartialEq)]
pub struct Snapshot {
    thresholds: Vec<f64>,
    requirements: Vec<u32>,
    origin: u64,
    zero_requirements: bool,
}

impl Snapshot {
    /// Build a snapshot from explicit thresholds (one per node, each in
    /// `[0,1]`).
    pub fn from_thresholds(graph: &Graph, thresholds: Vec<f64>, origin: u64) -> Result<Self> {
        if thresholds.len() != graph.node_count() {
            return Err(Error::InvalidArgument(format!(
                "threshold vector has {} entries for a graph of {} nodes",
                thresholds.len(),
                graph.node_count()
            )));
        }
        if let Some(bad) = thresholds.iter().find(|t| !(0.0..=1.0).contains(*t)) {
            return Err(Error::InvalidArgument(format!(
                "threshold {bad} outside [0,1]"
            )));
        }
        let requirements: Vec<u32> = thresholds
            .iter()
            .enumerate()
            .map(|(v, &t)| min_activation_count(t, graph.in_degree(v as NodeId)))
            .collect();
        let zero_requirements = requirements.contains(&0);
        Ok(Snapshot {
            thresholds,
            requirements,
            origin,
            zero_requirements,
        })
    }

    pub fn thresholds(&self) -> &[f64] {
        &self.thresholds
    }

    pub fn requirements(&self) -> &[u32] {
        &self.requirements
    }

    /// Substream identifier this snapshot was generated from.
    pub fn origin(&self) -> u64 {
        self.origin
    }

    /// Debug dump: one threshold per line, line index = dense node id.
    pub fn dump_thresholds<W: Write>(&self, mut w: W) -> Result<()> {
        for t in &self.thresholds {
            writeln!(w, "{t}")?;
        }
        Ok(())
    }

    /// Read a threshold dump produced by [`Snapshot::dump_thresholds`].
    pub fn parse_thresholds<R: BufRead>(graph: &Graph, reader: R) -> Result<Self> {
        let mut thresholds = Vec::with_capacity(graph.node_count());
        for (idx, line) in reader.lines().enumerate() {
            let line = line?;
            let t: f64 = line.trim().parse().map_err(|_| Error::Parse {
                line: idx + 1,
                reason: format!("invalid threshold `{}`", line.trim()),
            })?;
            thresholds.push(t);
        }
        Snapshot::from_thresholds(graph, thresholds, 0)
    }
}

/// Threshold of node `v` under the given replicate key. Snapshot generation
/// and the lazy Monte Carlo path share this derivation, so a lazily sampled
/// replicate is the same realization as the eagerly generated snapshot.
#[inline]
fn node_threshold(model: &ThresholdModel, replicate: StreamKey, v: NodeId) -> f64 {
    model.sample_threshold(&mut replicate.child(v as u64).rng())
}

/// Draw one threshold per node and derive the integer requirements.
/// Deterministic given the key; regenerating with the same key reproduces
/// identical thresholds.
pub fn generate_snapshot(graph: &Graph, model: &ThresholdModel, key: StreamKey) -> Snapshot {
    let thresholds: Vec<f64> = (0..graph.node_count() as NodeId)
        .map(|v| node_threshold(model, key, v))
        .collect();
    let requirements: Vec<u32> = thresholds
        .iter()
        .enumerate()
        .map(|(v, &t)| min_activation_count(t, graph.in_degree(v as NodeId)))
        .collect();
    let zero_requirements = requirements.contains(&0);
    Snapshot {
        thresholds,
        requirements,
        origin: key.raw(),
        zero_requirements,
    }
}

/// Outcome of one deterministic spread.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SpreadResult {
    /// Final activity flags, indexed by dense node id.
    pub active: Vec<bool>,
    /// `|S_n|`.
    pub active_count: usize,
    /// Cumulative sizes `|S_0|, |S_1|, ...` up to the fixpoint.
    pub step_counts: Vec<usize>,
}

impl SpreadResult {
    /// Number of rounds until no further node switched.
    pub fn steps(&self) -> usize {
        self.step_counts.len() - 1
    }

    pub fn active_nodes(&self) -> Vec<NodeId> {
        self.active
            .iter()
            .enumerate()
            .filter(|(_, &a)| a)
            .map(|(v, _)| v as NodeId)
            .collect()
    }
}

/// Run the progressive dynamics on one snapshot with synchronous rounds.
/// Each edge is examined at most once from its activated source, so a full
/// simulation is `O(|V| + |E|)`.
pub fn simulate(graph: &Graph, snapshot: &Snapshot, seeds: &[NodeId]) -> Result<SpreadResult> {
    let n = graph.node_count();
    check_seeds(seeds, n)?;
    let reqs = &snapshot.requirements;

    let mut active = vec![false; n];
    let mut counts = vec![0u32; n];
    let mut frontier: Vec<NodeId> = Vec::new();
    for &s in seeds {
        if !active[s as usize] {
            active[s as usize] = true;
            frontier.push(s);
        }
    }
    let mut active_count = frontier.len();
    let mut step_counts = vec![active_count];

    // A zero requirement (threshold 0 on a hand-built snapshot) fires in the
    // first round regardless of neighbors.
    let mut next: Vec<NodeId> = Vec::new();
    if snapshot.zero_requirements {
        for v in 0..n {
            if reqs[v] == 0 && !active[v] {
                active[v] = true;
                next.push(v as NodeId);
            }
        }
    }

    loop {
        for &v in &frontier {
            for &w in graph.out_neighbors(v) {
                let wi = w as usize;
                if !active[wi] {
                    counts[wi] += 1;
                    if counts[wi] >= reqs[wi] {
                        active[wi] = true;
                        next.push(w);
                    }
                }
            }
        }
        if next.is_empty() {
            break;
        }
        active_count += next.len();
        step_counts.push(active_count);
        std::mem::swap(&mut frontier, &mut next);
        next.clear();
    }

    Ok(SpreadResult {
        active,
        active_count,
        step_counts,
    })
}

fn check_seeds(seeds: &[NodeId], node_count: usize) -> Result<()> {
    for &s in seeds {
        if s as usize >= node_count {
            return Err(Error::NodeOutOfRange {
                node: s as u64,
                node_count,
            });
        }
    }
    Ok(())
}

/// Monte Carlo estimate of the expected spread.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SigmaEstimate {
    pub mean: f64,
    /// Sample standard deviation divided by `sqrt(replications)`; zero for a
    /// single replicate.
    pub stderr: f64,
}

enum ReqSource<'a> {
    Fixed(&'a [u32]),
    Lazy {
        model: &'a ThresholdModel,
        replicate: StreamKey,
    },
}

/// Reusable per-thread simulation buffers. Epoch marking avoids re-zeroing
/// whole arrays, so one spread costs work proportional to the nodes it
/// actually touches; thresholds are resolved lazily and memoized per
/// replicate, which keeps single-candidate evaluations on large graphs cheap.
struct Scratch {
    epoch: u32,
    active_ep: Vec<u32>,
    counts: Vec<u32>,
    counts_ep: Vec<u32>,
    req: Vec<u32>,
    req_ep: Vec<u32>,
    queue: Vec<NodeId>,
}

impl Scratch {
    fn new(n: usize) -> Self {
        Scratch {
            epoch: 0,
            active_ep: vec![0; n],
            counts: vec![0; n],
            counts_ep: vec![0; n],
            req: vec![0; n],
            req_ep: vec![0; n],
            queue: Vec::new(),
        }
    }

    fn begin(&mut self) -> u32 {
        if self.epoch == u32::MAX {
            self.active_ep.fill(0);
            self.counts_ep.fill(0);
            self.req_ep.fill(0);
            self.epoch = 0;
        }
        self.epoch += 1;
        self.queue.clear();
        self.epoch
    }

    fn spread_size(&mut self, graph: &Graph, source: &ReqSource<'_>, seeds: &[NodeId]) -> usize {
        let ep = self.begin();
        for &s in seeds {
            if self.active_ep[s as usize] != ep {
                self.active_ep[s as usize] = ep;
                self.queue.push(s);
            }
        }
        // Requirements are at least 1 for every model-generated realization,
        // so only neighbor counts can trigger activations; fixed snapshots
        // with zero requirements take the plain `simulate` path instead.
        let mut qi = 0;
        while qi < self.queue.len() {
            let v = self.queue[qi];
            qi += 1;
            for &w in graph.out_neighbors(v) {
                let wi = w as usize;
                if self.active_ep[wi] == ep {
                    continue;
                }
                let c = if self.counts_ep[wi] == ep {
                    self.counts[wi] + 1
                } else {
                    self.counts_ep[wi] = ep;
                    1
                };
                self.counts[wi] = c;
                let m = if self.req_ep[wi] == ep {
                    self.req[wi]
                } else {
                    let m = match source {
                        ReqSource::Fixed(reqs) => reqs[wi],
                        ReqSource::Lazy { model, replicate } => min_activation_count(
                            node_threshold(model, *replicate, w),
                            graph.in_degree(w),
                        ),
                    };
                    self.req_ep[wi] = ep;
                    self.req[wi] = m;
                    m
                };
                if c >= m {
                    self.active_ep[wi] = ep;
                    self.queue.push(w);
                }
            }
        }
        self.queue.len()
    }
}

/// Estimate `σ(seeds)` as the mean final spread over `replications` fresh
/// threshold realizations, replicate `i` drawn from `key.child(i)`.
pub fn estimate_sigma_mc(
    graph: &Graph,
    model: &ThresholdModel,
    seeds: &[NodeId],
    replications: usize,
    key: StreamKey,
) -> Result<SigmaEstimate> {
    if replications < 1 {
        return Err(Error::InvalidArgument("replications must be >= 1".into()));
    }
    check_seeds(seeds, graph.node_count())?;

    let (sum, sum_sq) = (0..replications)
        .into_par_iter()
        .map_init(
            || Scratch::new(graph.node_count()),
            |scratch, rep| {
                let source = ReqSource::Lazy {
                    model,
                    replicate: key.child(rep as u64),
                };
                let size = scratch.spread_size(graph, &source, seeds) as u64;
                (size, (size as u128) * (size as u128))
            },
        )
        .reduce(|| (0u64, 0u128), |a, b| (a.0 + b.0, a.1 + b.1));

    Ok(summarize(sum, sum_sq, replications))
}

fn summarize(sum: u64, sum_sq: u128, r: usize) -> SigmaEstimate {
    let rf = r as f64;
    let mean = sum as f64 / rf;
    let stderr = if r > 1 {
        let var = (sum_sq as f64 - (sum as f64) * (sum as f64) / rf) / (rf - 1.0);
        (var.max(0.0) / rf).sqrt()
    } else {
        0.0
    };
    SigmaEstimate { mean, stderr }
}

/// Mean final spread of `seeds` over a fixed snapshot pool. Fully
/// deterministic given the snapshots.
pub fn estimate_sigma_snapshots(
    graph: &Graph,
    snapshots: &[Snapshot],
    seeds: &[NodeId],
) -> Result<f64> {
    Ok(estimate_sigma_snapshots_detail(graph, snapshots, seeds)?.mean)
}

/// As [`estimate_sigma_snapshots`] but also reporting the spread of the
/// per-snapshot sizes as a standard error.
pub fn estimate_sigma_snapshots_detail(
    graph: &Graph,
    snapshots: &[Snapshot],
    seeds: &[NodeId],
) -> Result<SigmaEstimate> {
    if snapshots.is_empty() {
        return Err(Error::InvalidArgument(
            "snapshot pool must not be empty".into(),
        ));
    }
    check_seeds(seeds, graph.node_count())?;

    let (sum, sum_sq) = snapshots
        .par_iter()
        .map_init(
            || Scratch::new(graph.node_count()),
            |scratch, snapshot| {
                let size = if snapshot.zero_requirements {
                    simulate(graph, snapshot, seeds)
                        .expect("seeds already validated")
                        .active_count as u64
                } else {
                    scratch.spread_size(graph, &ReqSource::Fixed(&snapshot.requirements), seeds)
                        as u64
                };
                (size, (size as u128) * (size as u128))
            },
        )
        .reduce(|| (0u64, 0u128), |a, b| (a.0 + b.0, a.1 + b.1));

    Ok(summarize(sum, sum_sq, snapshots.len()))
}

/// Per-snapshot incremental diffusion state for a committed seed set.
///
/// `marginal_gain` answers "how much would adding `u` spread" against the
/// cached fixpoints without disturbing them; `commit_seed` advances the
/// fixpoints. Both are exactly consistent with from-scratch simulation of
/// the committed set (checked by [`EvalCache::audit`]).
pub struct EvalCache<'g> {
    graph: &'g Graph,
    snapshots: Vec<Snapshot>,
    states: Vec<SnapState>,
    committed: Vec<NodeId>,
    committed_mask: Vec<bool>,
}

struct SnapState {
    active: Vec<bool>,
    /// Number of active in-neighbors, exact for inactive nodes (stale values
    /// for active nodes are never consulted again).
    counts: Vec<u32>,
    active_count: usize,
    newly: Vec<NodeId>,
    increments: Vec<NodeId>,
}

impl SnapState {
    /// Cascade activations from `init` to the fixpoint, appending activated
    /// nodes to `self.newly` and logging every count increment so a probe
    /// can be reverted exactly.
    fn cascade(&mut self, graph: &Graph, reqs: &[u32], init: NodeId) {
        self.newly.clear();
        self.increments.clear();
        if self.active[init as usize] {
            return;
        }
        self.active[init as usize] = true;
        self.newly.push(init);
        let mut qi = 0;
        while qi < self.newly.len() {
            let v = self.newly[qi];
            qi += 1;
            for &w in graph.out_neighbors(v) {
                let wi = w as usize;
                if self.active[wi] {
                    continue;
                }
                self.counts[wi] += 1;
                self.increments.push(w);
                if self.counts[wi] >= reqs[wi] {
                    self.active[wi] = true;
                    self.newly.push(w);
                }
            }
        }
    }

    fn revert(&mut self) {
        for i in 0..self.newly.len() {
            self.active[self.newly[i] as usize] = false;
        }
        for i in 0..self.increments.len() {
            self.counts[self.increments[i] as usize] -= 1;
        }
    }
}

impl<'g> EvalCache<'g> {
    /// Initialize the cache for an empty committed set.
    pub fn new(graph: &'g Graph, snapshots: Vec<Snapshot>) -> Result<Self> {
        if snapshots.is_empty() {
            return Err(Error::InvalidArgument(
                "snapshot pool must not be empty".into(),
            ));
        }
        let n = graph.node_count();
        let states = snapshots
            .par_iter()
            .map(|snapshot| {
                // A from-scratch simulation of the empty set settles any
                // zero-requirement nodes and yields exact neighbor counts
                // for everything still inactive.
                let sim = simulate(graph, snapshot, &[]).expect("empty seed set is valid");
                let mut counts = vec![0u32; n];
                for v in 0..n {
                    if sim.active[v] {
                        for &w in graph.out_neighbors(v as NodeId) {
                            if !sim.active[w as usize] {
                                counts[w as usize] += 1;
                            }
                        }
                    }
                }
                SnapState {
                    active_count: sim.active_count,
                    active: sim.active,
                    counts,
                    newly: Vec::new(),
                    increments: Vec::new(),
                }
            })
            .collect();
        Ok(EvalCache {
            graph,
            snapshots,
            states,
            committed: Vec::new(),
            committed_mask: vec![false; n],
        })
    }

    pub fn graph(&self) -> &Graph {
        self.graph
    }

    pub fn snapshots(&self) -> &[Snapshot] {
        &self.snapshots
    }

    pub fn committed(&self) -> &[NodeId] {
        &self.committed
    }

    /// Estimated `σ` of the committed set on this pool.
    pub fn committed_sigma(&self) -> f64 {
        let sum: u64 = self.states.iter().map(|s| s.active_count as u64).sum();
        sum as f64 / self.states.len() as f64
    }

    fn check_node(&self, u: NodeId) -> Result<()> {
        if (u as usize) >= self.graph.node_count() {
            return Err(Error::NodeOutOfRange {
                node: u as u64,
                node_count: self.graph.node_count(),
            });
        }
        if self.committed_mask[u as usize] {
            return Err(Error::AlreadyCommitted(u));
        }
        Ok(())
    }

    /// Mean number of nodes that adding `u` to the committed set would newly
    /// activate (including `u` itself where it is not already reached).
    /// Leaves the cached state untouched.
    pub fn marginal_gain(&mut self, u: NodeId) -> Result<f64> {
        self.check_node(u)?;
        let graph = self.graph;
        let snapshots = &self.snapshots;
        let gain: u64 = self
            .states
            .par_iter_mut()
            .zip(snapshots.par_iter())
            .map(|(state, snapshot)| {
                state.cascade(graph, &snapshot.requirements, u);
                let gained = state.newly.len() as u64;
                state.revert();
                gained
            })
            .sum();
        Ok(gain as f64 / self.states.len() as f64)
    }

    /// Add `u` to the committed set, advancing every snapshot fixpoint.
    pub fn commit_seed(&mut self, u: NodeId) -> Result<()> {
        self.check_node(u)?;
        let graph = self.graph;
        let snapshots = &self.snapshots;
        self.states
            .par_iter_mut()
            .zip(snapshots.par_iter())
            .for_each(|(state, snapshot)| {
                state.cascade(graph, &snapshot.requirements, u);
                state.active_count += state.newly.len();
            });
        self.committed.push(u);
        self.committed_mask[u as usize] = true;
        Ok(())
    }

    /// Recompute every snapshot fixpoint from scratch and compare with the
    /// cached state. Returns a description of the first mismatch.
    pub fn audit(&self) -> std::result::Result<(), String> {
        for (idx, (snapshot, state)) in self.snapshots.iter().zip(&self.states).enumerate() {
            let sim = simulate(self.graph, snapshot, &self.committed)
                .map_err(|e| format!("snapshot {idx}: {e}"))?;
            if sim.active != state.active {
                return Err(format!("snapshot {idx}: cached active set diverges"));
            }
            if sim.active_count != state.active_count {
                return Err(format!(
                    "snapshot {idx}: cached size {} vs {}",
                    state.active_count, sim.active_count
                ));
            }
            for v in 0..self.graph.node_count() {
                if !state.active[v] {
                    let truth = self
                        .graph
                        .in_neighbors(v as NodeId)
                        .iter()
                        .filter(|&&w| state.active[w as usize])
                        .count() as u32;
                    if truth != state.counts[v] {
                        return Err(format!(
                            "snapshot {idx}: node {v} cached count {} vs {}",
                            state.counts[v], truth
                        ));
                    }
                }
            }
        }
        Ok(())
    }
}
