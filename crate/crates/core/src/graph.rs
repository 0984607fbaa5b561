//! Graph loading and adjacency queries.
//!
//! Graphs are immutable once built: original node ids (arbitrary
//! non-negative integers, as in the SNAP edge-list files) are remapped to
//! dense ids in first-appearance order and adjacency is stored in CSR form.
//! Self-loops and duplicate edges are dropped at load time and the drop
//! counts reported, since the activation rule counts distinct neighbors.

use std::collections::HashMap;
use std::io::{BufRead, Write};

use crate::error::{Error, Result};

/// Dense internal node id, `0..node_count`.
pub type NodeId = u32;

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct LoadReport {
    pub self_loops_dropped: usize,
    pub duplicate_edges_dropped: usize,
}

#[derive(Debug, Clone, PartialEq, Eq)]
struct Csr {
    offsets: Vec<usize>,
    targets: Vec<NodeId>,
}

impl Csr {
    fn build(n: usize, edges: impl Iterator<Item = (NodeId, NodeId)> + Clone) -> Csr {
        let mut degree = vec![0usize; n];
        for (u, _) in edges.clone() {
            degree[u as usize] += 1;
        }
        let mut offsets = Vec::with_capacity(n + 1);
        let mut acc = 0usize;
        offsets.push(0);
        for d in &degree {
            acc += d;
            offsets.push(acc);
        }
        let mut cursor = offsets[..n].to_vec();
        let mut targets = vec![0 as NodeId; acc];
        for (u, v) in edges {
            targets[cursor[u as usize]] = v;
            cursor[u as usize] += 1;
        }
        // Sorted rows give deterministic traversal order everywhere else.
        for u in 0..n {
            targets[offsets[u]..offsets[u + 1]].sort_unstable();
        }
        Csr { offsets, targets }
    }

    #[inline]
    fn row(&self, u: NodeId) -> &[NodeId] {
        &self.targets[self.offsets[u as usize]..self.offsets[u as usize + 1]]
    }
}

/// Immutable social-network graph.
///
/// For undirected graphs the incoming and outgoing adjacency coincide. For
/// directed graphs a node's activation condition reads its *in*-neighbors
/// while its influence propagates along *out*-edges.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Graph {
    directed: bool,
    edge_count: usize,
    outgoing: Csr,
    incoming: Csr,
    labels: Vec<u64>,
    label_index: HashMap<u64, NodeId>,
}

impl Graph {
    /// Build a graph from raw `(u, v)` pairs of original ids, remapping to
    /// dense ids in first-appearance order and dropping self-loops and
    /// duplicates.
    pub fn from_edges(
        pairs: impl IntoIterator<Item = (u64, u64)>,
        directed: bool,
    ) -> Result<(Graph, LoadReport)> {
        let mut labels = Vec::new();
        let mut label_index: HashMap<u64, NodeId> = HashMap::new();
        let mut dense = |label: u64, labels: &mut Vec<u64>| -> NodeId {
            *label_index.entry(label).or_insert_with(|| {
                labels.push(label);
                (labels.len() - 1) as NodeId
            })
        };

        let mut report = LoadReport::default();
        let mut seen = std::collections::HashSet::new();
        let mut edges: Vec<(NodeId, NodeId)> = Vec::new();
        let mut any_input = false;
        for (a, b) in pairs {
            any_input = true;
            let u = dense(a, &mut labels);
            let v = dense(b, &mut labels);
            if u == v {
                report.self_loops_dropped += 1;
                continue;
            }
            let key = if directed || u < v { (u, v) } else { (v, u) };
            if !seen.insert(key) {
                report.duplicate_edges_dropped += 1;
                continue;
            }
            edges.push((u, v));
        }
        if !any_input {
            return Err(Error::EmptyEdgeList);
        }

        let n = labels.len();
        let edge_count = edges.len();
        let outgoing = if directed {
            Csr::build(n, edges.iter().copied())
        } else {
            let both = edges
                .iter()
                .copied()
                .chain(edges.iter().map(|&(u, v)| (v, u)));
            Csr::build(n, both)
        };
        let incoming = if directed {
            Csr::build(n, edges.iter().map(|&(u, v)| (v, u)))
        } else {
            outgoing.clone()
        };

        Ok((
            Graph {
                directed,
                edge_count,
                outgoing,
                incoming,
                labels,
                label_index,
            },
            report,
        ))
    }

    pub fn node_count(&self) -> usize {
        self.labels.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edge_count
    }

    pub fn is_directed(&self) -> bool {
        self.directed
    }

    /// Nodes whose activity feeds `v`'s activation condition: the
    /// in-neighbors of `v` (all neighbors when undirected).
    pub fn influence_neighbors(&self, v: NodeId) -> Result<&[NodeId]> {
        self.check(v)?;
        Ok(self.incoming.row(v))
    }

    /// Nodes whose activation condition may change when `v` activates: the
    /// out-neighbors of `v`.
    pub fn spread_targets(&self, v: NodeId) -> Result<&[NodeId]> {
        self.check(v)?;
        Ok(self.outgoing.row(v))
    }

    /// Unchecked in-neighbor slice for hot loops. Panics on a bad id.
    #[inline]
    pub fn in_neighbors(&self, v: NodeId) -> &[NodeId] {
        self.incoming.row(v)
    }

    /// Unchecked out-neighbor slice for hot loops. Panics on a bad id.
    #[inline]
    pub fn out_neighbors(&self, v: NodeId) -> &[NodeId] {
        self.outgoing.row(v)
    }

    #[inline]
    pub fn in_degree(&self, v: NodeId) -> u32 {
        self.incoming.row(v).len() as u32
    }

    #[inline]
    pub fn out_degree(&self, v: NodeId) -> u32 {
        self.outgoing.row(v).len() as u32
    }

    /// Original id of a dense node.
    pub fn label(&self, v: NodeId) -> u64 {
        self.labels[v as usize]
    }

    /// Dense id of an original id, if present.
    pub fn dense_id(&self, label: u64) -> Option<NodeId> {
        self.label_index.get(&label).copied()
    }

    /// Resolve an original id or fail with the offending id.
    pub fn require_dense_id(&self, label: u64) -> Result<NodeId> {
        self.dense_id(label).ok_or(Error::UnknownLabel(label))
    }

    fn check(&self, v: NodeId) -> Result<()> {
        if (v as usize) < self.node_count() {
            Ok(())
        } else {
            Err(Error::NodeOutOfRange {
                node: v as u64,
                node_count: self.node_count(),
            })
        }
    }

    /// Serialize as an original-id edge list. Reloading the output yields the
    /// same labeled graph. Edges are ordered so that scanning the output
    /// introduces labels in dense-id order, which makes the first-appearance
    /// remapping a fixpoint: the dense assignment survives the round trip
    /// too, unless a dropped self-loop introduced a label out of edge order
    /// during the original load (then only the labeled graph is preserved).
    pub fn write_edge_list<W: Write>(&self, mut w: W) -> Result<()> {
        let n = self.node_count();
        let mut edges: Vec<(NodeId, NodeId)> = Vec::with_capacity(self.edge_count);
        for u in 0..n as NodeId {
            for &v in self.outgoing.row(u) {
                if self.directed || u < v {
                    edges.push((u, v));
                }
            }
        }
        edges.sort_unstable();
        let mut touching: Vec<Vec<usize>> = vec![Vec::new(); n];
        for (idx, &(u, v)) in edges.iter().enumerate() {
            touching[u as usize].push(idx);
            touching[v as usize].push(idx);
        }

        let mut used = vec![false; edges.len()];
        let mut ordered: Vec<usize> = Vec::with_capacity(edges.len());
        let mut introduced = 0usize; // nodes below this are introduced
        'intro: while introduced < n {
            let k = introduced as NodeId;
            // prefer pairing k with an already-introduced node
            for &idx in &touching[k as usize] {
                if used[idx] {
                    continue;
                }
                let (u, v) = edges[idx];
                let other = if u == k { v } else { u };
                if (other as usize) < introduced {
                    used[idx] = true;
                    ordered.push(idx);
                    introduced += 1;
                    continue 'intro;
                }
            }
            // otherwise a line must introduce k and k+1 together, k first
            for &idx in &touching[k as usize] {
                if !used[idx] && edges[idx] == (k, k + 1) {
                    used[idx] = true;
                    ordered.push(idx);
                    introduced += 2;
                    continue 'intro;
                }
            }
            // unreachable label order (dropped self-loop); fall back to a
            // plain deterministic order that keeps the labeled graph intact
            break;
        }
        ordered.extend((0..edges.len()).filter(|&idx| !used[idx]));

        for idx in ordered {
            let (u, v) = edges[idx];
            writeln!(w, "{} {}", self.labels[u as usize], self.labels[v as usize])?;
        }
        Ok(())
    }
}

/// Parse a SNAP-style edge list: one edge per line as two whitespace-
/// separated integers, `#`-prefixed comment lines ignored, blank lines
/// skipped.
pub fn load_edge_list<R: BufRead>(reader: R, directed: bool) -> Result<(Graph, LoadReport)> {
    let mut pairs = Vec::new();
    for (idx, line) in reader.lines().enumerate() {
        let line = line?;
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let mut tokens = line.split_whitespace();
        let parse = |tok: Option<&str>, idx: usize| -> Result<u64> {
            let tok = tok.ok_or_else(|| Error::Parse {
                line: idx + 1,
                reason: "expected two node ids".into(),
            })?;
            tok.parse::<u64>().map_err(|_| Error::Parse {
                line: idx + 1,
                reason: format!("invalid node id `{tok}`"),
            })
        };
        let u = parse(tokens.next(), idx)?;
        let v = parse(tokens.next(), idx)?;
        if let Some(extra) = tokens.next() {
            return Err(Error::Parse {
                line: idx + 1,
                reason: format!("unexpected trailing token `{extra}`"),
            });
        }
        pairs.push((u, v));
    }
    Graph::from_edges(pairs, directed)
}
