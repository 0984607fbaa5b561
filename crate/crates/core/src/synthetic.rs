//! Synthetic graph generators for experiments, benchmarks, and tests.

use rand::Rng;

use crate::error::{Error, Result};
use crate::graph::{Graph, NodeId};
use crate::rng::StreamKey;

/// Preferential-attachment (Barabási–Albert style) undirected graph: an
/// initial clique on `m + 1` nodes, then each new node attaches to `m`
/// distinct existing nodes chosen proportionally to degree. Deterministic
/// given the key.
pub fn preferential_attachment(n: usize, m: usize, key: StreamKey) -> Result<Graph> {
    if m < 1 || n < m + 2 {
        return Err(Error::InvalidArgument(format!(
            "preferential attachment needs m >= 1 and n >= m + 2, got n = {n}, m = {m}"
        )));
    }
    let mut rng = key.rng();
    let mut edges: Vec<(u64, u64)> = Vec::with_capacity(m * (m + 1) / 2 + (n - m - 1) * m);
    // Sampling an endpoint uniformly from this pool is degree-proportional.
    let mut pool: Vec<NodeId> = Vec::with_capacity(2 * m * n);
    for a in 0..=m {
        for b in (a + 1)..=m {
            edges.push((a as u64, b as u64));
            pool.push(a as NodeId);
            pool.push(b as NodeId);
        }
    }
    let mut picked: Vec<NodeId> = Vec::with_capacity(m);
    for v in (m + 1)..n {
        picked.clear();
        while picked.len() < m {
            let t = pool[rng.random_range(0..pool.len())];
            if !picked.contains(&t) {
                picked.push(t);
            }
        }
        for &t in &picked {
            edges.push((v as u64, t as u64));
            pool.push(v as NodeId);
            pool.push(t);
        }
    }
    Ok(Graph::from_edges(edges, false)?.0)
}

/// Random connected undirected graph: a random recursive tree on `n` nodes
/// plus up to `extra_edges` additional distinct edges. Deterministic given
/// the key.
pub fn random_connected(n: usize, extra_edges: usize, key: StreamKey) -> Result<Graph> {
    if n < 2 {
        return Err(Error::InvalidArgument(
            "random_connected needs at least 2 nodes".into(),
        ));
    }
    let mut rng = key.rng();
    let mut present = std::collections::HashSet::new();
    let mut edges: Vec<(u64, u64)> = Vec::with_capacity(n - 1 + extra_edges);
    for v in 1..n as u64 {
        let parent = rng.random_range(0..v);
        edges.push((parent, v));
        present.insert((parent, v));
    }
    let mut attempts = 0;
    let mut added = 0;
    while added < extra_edges && attempts < extra_edges * 20 {
        attempts += 1;
        let a = rng.random_range(0..n as u64);
        let b = rng.random_range(0..n as u64);
        let (a, b) = (a.min(b), a.max(b));
        if a != b && present.insert((a, b)) {
            edges.push((a, b));
            added += 1;
        }
    }
    Ok(Graph::from_edges(edges, false)?.0)
}
