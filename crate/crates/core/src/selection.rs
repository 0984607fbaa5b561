//! Top-k seed selection.
//!
//! `greedy` is the reference algorithm: every pick re-estimates
//! `σ(S ∪ {v})` for every candidate with fresh Monte Carlo replicates. It is
//! deliberately naive so it can serve as the baseline the accelerated
//! variant is measured against. `greedy_pp` combines lazy marginal-gain
//! re-evaluation (a max-priority queue of possibly stale gains) with a fixed
//! snapshot pool shared across all picks. `degree`, `pagerank`, and `random`
//! are the usual comparison heuristics.
//!
//! All argmax ties break toward the lowest node id, so every selection is
//! reproducible bit-for-bit from its inputs.

use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::fmt;
use std::str::FromStr;
use std::time::{Duration, Instant};

use rayon::prelude::*;

use crate::diffusion::{estimate_sigma_mc, generate_snapshot, EvalCache, Snapshot};
use crate::error::{Error, Result};
use crate::graph::{Graph, NodeId};
use crate::rng::StreamKey;
use crate::thresholds::ThresholdModel;

pub const DEFAULT_PAGERANK_ALPHA: f64 = 0.9;
pub const DEFAULT_PAGERANK_TOL: f64 = 1e-8;
pub const DEFAULT_PAGERANK_MAX_ITER: usize = 100;

/// Selection algorithm tag.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Algorithm {
    Greedy,
    GreedyPP,
    Degree,
    PageRank,
    Random,
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = match self {
            Algorithm::Greedy => "greedy",
            Algorithm::GreedyPP => "greedypp",
            Algorithm::Degree => "degree",
            Algorithm::PageRank => "pagerank",
            Algorithm::Random => "random",
        };
        write!(f, "{name}")
    }
}

impl FromStr for Algorithm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "greedy" => Ok(Algorithm::Greedy),
            "greedypp" => Ok(Algorithm::GreedyPP),
            "degree" => Ok(Algorithm::Degree),
            "pagerank" => Ok(Algorithm::PageRank),
            "random" => Ok(Algorithm::Random),
            other => Err(Error::InvalidArgument(format!("unknown algorithm `{other}`"))),
        }
    }
}

/// An ordered seed set with its per-pick spread estimates and timings.
#[derive(Debug, Clone)]
pub struct SeedSelection {
    pub algorithm: Algorithm,
    /// Chosen nodes in selection order.
    pub seeds: Vec<NodeId>,
    /// Estimated `σ` after each pick. Heuristics leave this empty; fill it
    /// with [`evaluate_gain_curve`] so all algorithms share one evaluation
    /// budget.
    pub gain_curve: Vec<f64>,
    pub pick_durations: Vec<Duration>,
    pub warnings: Vec<String>,
}

fn check_k(k: usize, node_count: usize) -> Result<()> {
    if k < 1 || k > node_count {
        return Err(Error::InvalidArgument(format!(
            "k = {k} out of range for a graph of {node_count} nodes"
        )));
    }
    Ok(())
}

/// Pick the larger gain, ties toward the lower node id.
#[inline]
fn better(a: (f64, NodeId), b: (f64, NodeId)) -> (f64, NodeId) {
    if a.0 > b.0 || (a.0 == b.0 && a.1 < b.1) {
        a
    } else {
        b
    }
}

/// Monte Carlo greedy: each round evaluates `σ(S ∪ {v})` for every remaining
/// candidate with `replications` fresh simulations and commits the argmax.
pub fn greedy(
    graph: &Graph,
    model: &ThresholdModel,
    k: usize,
    replications: usize,
    key: StreamKey,
) -> Result<SeedSelection> {
    let n = graph.node_count();
    check_k(k, n)?;
    if replications < 1 {
        return Err(Error::InvalidArgument("replications must be >= 1".into()));
    }

    let mut chosen = vec![false; n];
    let mut seeds: Vec<NodeId> = Vec::with_capacity(k);
    let mut gain_curve = Vec::with_capacity(k);
    let mut pick_durations = Vec::with_capacity(k);

    for round in 0..k {
        let start = Instant::now();
        let round_key = key.child(round as u64);
        let (best_sigma, best_node) = (0..n as NodeId)
            .into_par_iter()
            .filter(|&v| !chosen[v as usize])
            .map(|v| {
                let mut candidate_seeds = seeds.clone();
                candidate_seeds.push(v);
                let est = estimate_sigma_mc(
                    graph,
                    model,
                    &candidate_seeds,
                    replications,
                    round_key.child(v as u64),
                )
                .expect("arguments validated");
                (est.mean, v)
            })
            .reduce(|| (f64::NEG_INFINITY, NodeId::MAX), better);

        chosen[best_node as usize] = true;
        seeds.push(best_node);
        gain_curve.push(best_sigma);
        pick_durations.push(start.elapsed());
    }

    Ok(SeedSelection {
        algorithm: Algorithm::Greedy,
        seeds,
        gain_curve,
        pick_durations,
        warnings: Vec::new(),
    })
}

/// Priority-queue entry for the lazy greedy; ordered by gain, ties toward
/// the lower node id. Gains are finite or `+∞`, never NaN.
struct CelfEntry {
    gain: f64,
    node: NodeId,
    /// Pick index at which the gain was last recomputed; an entry is fresh
    /// only within the pick that refreshed it.
    refreshed_at: usize,
}

impl PartialEq for CelfEntry {
    fn eq(&self, other: &Self) -> bool {
        self.gain == other.gain && self.node == other.node
    }
}

impl Eq for CelfEntry {}

impl PartialOrd for CelfEntry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for CelfEntry {
    fn cmp(&self, other: &Self) -> Ordering {
        self.gain
            .partial_cmp(&other.gain)
            .expect("gains are never NaN")
            .then_with(|| other.node.cmp(&self.node))
    }
}

/// Lazy snapshot greedy: generate `pool_size` snapshots once, then run CELF
/// against an incremental [`EvalCache`]. Marginal gains start at `+∞`; a
/// popped entry is recomputed and reinserted unless it was already refreshed
/// during the current pick, in which case it is committed.
pub fn greedy_pp(
    graph: &Graph,
    model: &ThresholdModel,
    k: usize,
    pool_size: usize,
    key: StreamKey,
) -> Result<SeedSelection> {
    let n = graph.node_count();
    check_k(k, n)?;
    if pool_size < 1 {
        return Err(Error::InvalidArgument("snapshot pool must be >= 1".into()));
    }

    let snapshots: Vec<Snapshot> = (0..pool_size as u64)
        .into_par_iter()
        .map(|i| generate_snapshot(graph, model, key.child(i)))
        .collect();
    let mut cache = EvalCache::new(graph, snapshots)?;

    let mut heap: BinaryHeap<CelfEntry> = (0..n as NodeId)
        .map(|node| CelfEntry {
            gain: f64::INFINITY,
            node,
            refreshed_at: usize::MAX,
        })
        .collect();

    let mut seeds = Vec::with_capacity(k);
    let mut gain_curve = Vec::with_capacity(k);
    let mut pick_durations = Vec::with_capacity(k);

    for pick in 0..k {
        let start = Instant::now();
        loop {
            let top = heap.pop().expect("k <= n leaves candidates in the queue");
            if top.refreshed_at == pick {
                cache.commit_seed(top.node)?;
                seeds.push(top.node);
                gain_curve.push(cache.committed_sigma());
                break;
            }
            let gain = cache.marginal_gain(top.node)?;
            heap.push(CelfEntry {
                gain,
                node: top.node,
                refreshed_at: pick,
            });
        }
        pick_durations.push(start.elapsed());
    }

    Ok(SeedSelection {
        algorithm: Algorithm::GreedyPP,
        seeds,
        gain_curve,
        pick_durations,
        warnings: Vec::new(),
    })
}

/// Top-k nodes by out-degree, ties toward the lower node id. The gain curve
/// is left empty; evaluate it separately.
pub fn degree_heuristic(graph: &Graph, k: usize) -> Result<SeedSelection> {
    let n = graph.node_count();
    check_k(k, n)?;
    let start = Instant::now();
    let mut order: Vec<NodeId> = (0..n as NodeId).collect();
    order.sort_unstable_by_key(|&v| (std::cmp::Reverse(graph.out_degree(v)), v));
    order.truncate(k);
    let elapsed = start.elapsed();
    Ok(SeedSelection {
        algorithm: Algorithm::Degree,
        seeds: order,
        gain_curve: Vec::new(),
        pick_durations: vec![elapsed],
        warnings: Vec::new(),
    })
}

/// PageRank scores of the edge-reversed graph (identity reversal for
/// undirected graphs), by power iteration with uniform redistribution of
/// dangling mass. `alpha` is the follow-link (damping) probability.
/// Returns the scores and whether the iteration converged within
/// `max_iter`.
pub fn pagerank_scores(
    graph: &Graph,
    alpha: f64,
    tol: f64,
    max_iter: usize,
) -> Result<(Vec<f64>, bool)> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::InvalidArgument(format!(
            "pagerank alpha must be in (0,1), got {alpha}"
        )));
    }
    let n = graph.node_count();
    if n == 0 {
        return Ok((Vec::new(), true));
    }
    // On the reversed graph, node v's out-neighbors are its in-neighbors
    // here, and its out-degree is its in-degree here.
    let nf = n as f64;
    let mut rank = vec![1.0 / nf; n];
    let mut converged = false;
    for _ in 0..max_iter {
        let mut next = vec![(1.0 - alpha) / nf; n];
        let mut dangling = 0.0;
        for v in 0..n {
            let out = graph.in_neighbors(v as NodeId);
            if out.is_empty() {
                dangling += rank[v];
            } else {
                let share = alpha * rank[v] / out.len() as f64;
                for &w in out {
                    next[w as usize] += share;
                }
            }
        }
        let spread = alpha * dangling / nf;
        for x in next.iter_mut() {
            *x += spread;
        }
        let diff: f64 = rank
            .iter()
            .zip(next.iter())
            .map(|(a, b)| (a - b).abs())
            .sum();
        rank = next;
        if diff < tol {
            converged = true;
            break;
        }
    }
    Ok((rank, converged))
}

/// Top-k nodes by reversed-graph PageRank score, ties toward the lower node
/// id. Non-convergence is recorded as a warning and the current iterate
/// used.
pub fn pagerank_heuristic(
    graph: &Graph,
    k: usize,
    alpha: f64,
    tol: f64,
    max_iter: usize,
) -> Result<SeedSelection> {
    let n = graph.node_count();
    check_k(k, n)?;
    let start = Instant::now();
    let (scores, converged) = pagerank_scores(graph, alpha, tol, max_iter)?;
    let mut order: Vec<NodeId> = (0..n as NodeId).collect();
    order.sort_unstable_by(|&a, &b| {
        scores[b as usize]
            .partial_cmp(&scores[a as usize])
            .expect("pagerank scores are finite")
            .then_with(|| a.cmp(&b))
    });
    order.truncate(k);
    let elapsed = start.elapsed();
    let mut warnings = Vec::new();
    if !converged {
        warnings.push(format!(
            "pagerank did not reach tolerance {tol} within {max_iter} iterations"
        ));
    }
    Ok(SeedSelection {
        algorithm: Algorithm::PageRank,
        seeds: order,
        gain_curve: Vec::new(),
        pick_durations: vec![elapsed],
        warnings,
    })
}

/// Uniform sample of `k` distinct nodes, deterministic given the key.
pub fn random_heuristic(graph: &Graph, k: usize, key: StreamKey) -> Result<SeedSelection> {
    let n = graph.node_count();
    check_k(k, n)?;
    let start = Instant::now();
    let mut rng = key.rng();
    let seeds: Vec<NodeId> = rand::seq::index::sample(&mut rng, n, k)
        .into_iter()
        .map(|i| i as NodeId)
        .collect();
    let elapsed = start.elapsed();
    Ok(SeedSelection {
        algorithm: Algorithm::Random,
        seeds,
        gain_curve: Vec::new(),
        pick_durations: vec![elapsed],
        warnings: Vec::new(),
    })
}

/// Spread estimator used for evaluation passes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Estimator {
    /// Fresh Monte Carlo replicates per evaluated set.
    MonteCarlo { replications: usize },
    /// One shared snapshot pool for all evaluated sets.
    Snapshots { pool_size: usize },
}

/// Estimate `σ` of every prefix of `seeds` under one shared evaluation
/// budget. This is how heuristic gain curves are filled so that comparisons
/// across algorithms evaluate with the same estimator.
pub fn evaluate_gain_curve(
    graph: &Graph,
    model: &ThresholdModel,
    seeds: &[NodeId],
    estimator: Estimator,
    key: StreamKey,
) -> Result<Vec<f64>> {
    match estimator {
        Estimator::Snapshots { pool_size } => {
            if pool_size < 1 {
                return Err(Error::InvalidArgument("snapshot pool must be >= 1".into()));
            }
            let snapshots: Vec<Snapshot> = (0..pool_size as u64)
                .into_par_iter()
                .map(|i| generate_snapshot(graph, model, key.child(i)))
                .collect();
            let mut cache = EvalCache::new(graph, snapshots)?;
            let mut curve = Vec::with_capacity(seeds.len());
            for &s in seeds {
                cache.commit_seed(s)?;
                curve.push(cache.committed_sigma());
            }
            Ok(curve)
        }
        Estimator::MonteCarlo { replications } => (1..=seeds.len())
            .map(|len| {
                estimate_sigma_mc(graph, model, &seeds[..len], replications, key.child(len as u64))
                    .map(|est| est.mean)
            })
            .collect(),
    }
}
