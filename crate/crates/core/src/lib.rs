//! Influence maximization under the coordination-game (CG) diffusion model.
//!
//! Each node holds a random adoption threshold `δ` drawn from a configurable
//! distribution; a node switches once the active fraction of its neighborhood
//! reaches `δ`. The crate provides the graph backend, threshold models,
//! spread simulation and Monte Carlo / snapshot estimators of the expected
//! spread `σ(S)`, seed-selection algorithms (naive greedy, lazy snapshot
//! greedy, and the usual degree / PageRank / random baselines), and an exact
//! small-graph oracle used to verify monotonicity, submodularity, and the
//! greedy approximation guarantee.

pub mod diffusion;
pub mod error;
pub mod graph;
pub mod oracle;
pub mod rng;
pub mod selection;
pub mod synthetic;
pub mod thresholds;

pub use diffusion::{
    estimate_sigma_mc, estimate_sigma_snapshots, generate_snapshot, simulate, EvalCache,
    SigmaEstimate, Snapshot, SpreadResult,
};
pub use error::{Error, Result};
pub use graph::{load_edge_list, Graph, LoadReport, NodeId};
pub use oracle::{
    brute_force_opt, check_monotone_submodular, exact_sigma, find_submodularity_violation,
    SubmodularityReport, ViolationWitness,
};
pub use rng::StreamKey;
pub use selection::{
    degree_heuristic, greedy, greedy_pp, pagerank_heuristic, random_heuristic, Algorithm,
    SeedSelection,
};
pub use thresholds::{delta_from_payoffs, Concavity, ThresholdModel};
