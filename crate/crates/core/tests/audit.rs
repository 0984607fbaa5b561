//! Cross-module consistency audits: every fast path is checked against an
//! independent slow route (from-scratch simulation, exact enumeration,
//! integer-exact threshold comparison, dense matrix power iteration).

use cgim_core::diffusion::{estimate_sigma_mc, generate_snapshot, simulate, EvalCache, Snapshot};
use cgim_core::graph::{Graph, NodeId};
use cgim_core::oracle::{brute_force_opt, exact_sigma, sigma_table};
use cgim_core::rng::StreamKey;
use cgim_core::selection::{greedy_pp, pagerank_scores};
use cgim_core::synthetic::{preferential_attachment, random_connected};
use cgim_core::thresholds::ThresholdModel;
use rand::Rng;

fn mixed_models() -> Vec<ThresholdModel> {
    vec![
        ThresholdModel::Linear,
        ThresholdModel::ConcaveSquare,
        ThresholdModel::ConvexSqrt,
        ThresholdModel::constant(0.5).unwrap(),
        ThresholdModel::power_law(3.0).unwrap(),
    ]
}

/// `x ≥ δ·d` decided in exact integer arithmetic on the float's value
/// (`δ = m·2^e`), an independent route to the requirement rule.
fn activates_exact(x: u64, delta: f64, d: u64) -> bool {
    if x >= d {
        return true; // δ ≤ 1 means δ·d ≤ d
    }
    if delta == 0.0 {
        return true;
    }
    let bits = delta.to_bits();
    let raw_exp = ((bits >> 52) & 0x7ff) as i64;
    let frac = bits & ((1u64 << 52) - 1);
    let (m, e): (u128, i64) = if raw_exp == 0 {
        (frac as u128, -1074)
    } else {
        ((frac | (1 << 52)) as u128, raw_exp - 1075)
    };
    let rhs = m * d as u128;
    if e >= 0 {
        return x as u128 >= rhs << e;
    }
    let shift = -e as u32;
    if shift >= 120 {
        // δ·d far below 1: any positive count suffices
        return x >= 1;
    }
    ((x as u128) << shift) >= rhs
}

/// Synchronous-round simulation evaluating the real-valued rule directly
/// (nodes without influence neighbors stay put unless seeded).
fn simulate_direct(g: &Graph, thresholds: &[f64], seeds: &[NodeId]) -> (Vec<bool>, Vec<usize>) {
    let n = g.node_count();
    let mut active = vec![false; n];
    for &s in seeds {
        active[s as usize] = true;
    }
    let mut count = active.iter().filter(|&&a| a).count();
    let mut steps = vec![count];
    loop {
        let mut switched = Vec::new();
        for v in 0..n {
            if active[v] {
                continue;
            }
            let d = g.in_degree(v as NodeId) as u64;
            if d == 0 {
                continue;
            }
            let x = g
                .in_neighbors(v as NodeId)
                .iter()
                .filter(|&&w| active[w as usize])
                .count() as u64;
            if activates_exact(x, thresholds[v], d) {
                switched.push(v);
            }
        }
        if switched.is_empty() {
            break;
        }
        count += switched.len();
        steps.push(count);
        for v in switched {
            active[v] = true;
        }
    }
    (active, steps)
}

#[test]
fn requirement_simulation_matches_exact_rule() {
    let key = StreamKey::new(90);
    for trial in 0..25u64 {
        let g = random_connected(30, 12, key.child(trial)).unwrap();
        let n = g.node_count();
        let mut rng = key.child(1000 + trial).rng();
        // adversarial thresholds: exact rationals on degree boundaries,
        // dyadics, model draws, extremes
        let thresholds: Vec<f64> = (0..n)
            .map(|v| match rng.random_range(0..6u32) {
                0 => {
                    let d = g.in_degree(v as NodeId).max(1);
                    rng.random_range(1..=d) as f64 / d as f64
                }
                1 => 0.5,
                2 => 1.0,
                3 => rng.random_range(1..=1000) as f64 / 1000.0,
                4 => ThresholdModel::ConcaveSquare.sample_threshold(&mut rng),
                _ => ThresholdModel::Linear.sample_threshold(&mut rng),
            })
            .collect();
        let seeds: Vec<NodeId> = (0..n as NodeId)
            .filter(|_| rng.random_range(0..10u32) < 2)
            .collect();

        let snapshot = Snapshot::from_thresholds(&g, thresholds.clone(), 0).unwrap();
        let fast = simulate(&g, &snapshot, &seeds).unwrap();
        let (active, steps) = simulate_direct(&g, &thresholds, &seeds);
        assert_eq!(fast.active, active, "trial {trial}");
        assert_eq!(fast.step_counts, steps, "trial {trial}");
    }
}

#[test]
fn spread_is_monotone_and_progressive() {
    let key = StreamKey::new(41);
    for trial in 0..8u64 {
        let g = random_connected(8, 4, key.child(trial)).unwrap();
        let n = g.node_count();
        for (mi, model) in mixed_models().into_iter().enumerate() {
            let snapshot = generate_snapshot(&g, &model, key.child(100 + trial * 10 + mi as u64));
            // final active set per seed mask, as a bitmask
            let mut reach = vec![0u32; 1 << n];
            for mask in 0..1u32 << n {
                let seeds: Vec<NodeId> =
                    (0..n as NodeId).filter(|v| mask >> v & 1 == 1).collect();
                let res = simulate(&g, &snapshot, &seeds).unwrap();
                assert!(res.steps() <= n, "termination bound");
                assert!(
                    res.step_counts.windows(2).all(|w| w[1] >= w[0]),
                    "progressivity"
                );
                reach[mask as usize] = res
                    .active
                    .iter()
                    .enumerate()
                    .filter(|(_, &a)| a)
                    .fold(0u32, |acc, (v, _)| acc | 1 << v);
            }
            // S ⊆ T ⟹ reach(S) ⊆ reach(T), over every nested pair
            for t in 0..1u32 << n {
                let mut s = t;
                loop {
                    s = s.wrapping_sub(1) & t;
                    assert_eq!(
                        reach[s as usize] & !reach[t as usize],
                        0,
                        "monotonicity: S={s:b} T={t:b}"
                    );
                    if s == 0 {
                        break;
                    }
                }
            }
        }
    }
}

#[test]
fn mc_estimator_agrees_with_exact_oracle() {
    // deeper battery runs in the acceptance suite; this is the smoke version
    let key = StreamKey::new(7);
    for trial in 0..6u64 {
        let g = random_connected(6, 2, key.child(trial)).unwrap();
        let model = &mixed_models()[trial as usize % 5];
        let seeds = [trial as NodeId % 6];
        let exact = exact_sigma(&g, model, &seeds).unwrap();
        let est = estimate_sigma_mc(&g, model, &seeds, 60_000, key.child(50 + trial)).unwrap();
        assert!(
            (est.mean - exact).abs() <= 3.0 * est.stderr + 1e-9,
            "trial {trial}: mean {} exact {} stderr {}",
            est.mean,
            exact,
            est.stderr
        );
    }
}

#[test]
fn exact_sigma_is_monotone_in_seeds_for_every_model() {
    let key = StreamKey::new(17);
    for trial in 0..5u64 {
        let g = random_connected(6, 3, key.child(trial)).unwrap();
        for model in mixed_models() {
            let table = sigma_table(&g, &model).unwrap();
            for t in 0..table.len() as u32 {
                let mut s = t;
                loop {
                    s = s.wrapping_sub(1) & t;
                    assert!(
                        table[s as usize] <= table[t as usize] + 1e-9,
                        "{model}: σ({s:b}) > σ({t:b})"
                    );
                    if s == 0 {
                        break;
                    }
                }
            }
        }
    }
}

#[test]
fn marginal_gain_matches_fresh_evaluation() {
    let key = StreamKey::new(3);
    let g = random_connected(50, 25, key.child(0)).unwrap();
    let pool_size = 30usize;
    let snapshots: Vec<Snapshot> = (0..pool_size as u64)
        .map(|i| generate_snapshot(&g, &ThresholdModel::Linear, key.child(1).child(i)))
        .collect();

    let mut rng = key.child(2).rng();
    for case in 0..20 {
        let committed: Vec<NodeId> = (0..rng.random_range(0..5u32))
            .map(|_| rng.random_range(0..50u32))
            .collect();
        let mut cache = EvalCache::new(&g, snapshots.clone()).unwrap();
        let mut actually_committed: Vec<NodeId> = Vec::new();
        for s in committed {
            if cache.commit_seed(s).is_ok() {
                actually_committed.push(s);
            }
        }
        let u = loop {
            let u = rng.random_range(0..50u32);
            if !actually_committed.contains(&u) {
                break u;
            }
        };

        let gain = cache.marginal_gain(u).unwrap();
        // from-scratch oracle, integer-exact
        let mut with_u = actually_committed.clone();
        with_u.push(u);
        let sum_with: u64 = snapshots
            .iter()
            .map(|s| simulate(&g, s, &with_u).unwrap().active_count as u64)
            .sum();
        let sum_without: u64 = snapshots
            .iter()
            .map(|s| simulate(&g, s, &actually_committed).unwrap().active_count as u64)
            .sum();
        assert_eq!(
            gain,
            (sum_with - sum_without) as f64 / pool_size as f64,
            "case {case}"
        );
        cache.audit().unwrap();
    }
}

#[test]
fn cache_state_matches_from_scratch_after_commits() {
    let key = StreamKey::new(13);
    let g = random_connected(50, 30, key.child(0)).unwrap();
    for (mi, model) in mixed_models().into_iter().enumerate() {
        let snapshots: Vec<Snapshot> = (0..25u64)
            .map(|i| generate_snapshot(&g, &model, key.child(1 + mi as u64).child(i)))
            .collect();
        let mut cache = EvalCache::new(&g, snapshots).unwrap();
        let mut rng = key.child(100 + mi as u64).rng();
        for _ in 0..5 {
            let u = loop {
                let u = rng.random_range(0..50u32);
                if !cache.committed().contains(&u) {
                    break u;
                }
            };
            cache.commit_seed(u).unwrap();
        }
        cache.audit().unwrap();
    }
}

#[test]
fn pagerank_agrees_with_dense_oracle() {
    let key = StreamKey::new(29);
    let n = 50usize;
    let mut rng = key.rng();
    let mut pairs = Vec::new();
    for _ in 0..180 {
        let a = rng.random_range(0..n as u64);
        let b = rng.random_range(0..n as u64);
        if a != b {
            pairs.push((a, b));
        }
    }
    let (g, _) = Graph::from_edges(pairs, true).unwrap();
    let n = g.node_count();
    let alpha = 0.9;

    let (scores, converged) = pagerank_scores(&g, alpha, 1e-12, 2000).unwrap();
    assert!(converged);

    // dense column-stochastic matrix of the reversed graph
    let nf = n as f64;
    let mut matrix = vec![vec![0.0f64; n]; n]; // matrix[w][v]
    for v in 0..n {
        let outs = g.in_neighbors(v as NodeId);
        if outs.is_empty() {
            for row in matrix.iter_mut() {
                row[v] = 1.0 / nf;
            }
        } else {
            for &w in outs {
                matrix[w as usize][v] = 1.0 / outs.len() as f64;
            }
        }
    }
    let mut r = vec![1.0 / nf; n];
    for _ in 0..600 {
        let mut next = vec![(1.0 - alpha) / nf; n];
        for (w, row) in matrix.iter().enumerate() {
            let dot: f64 = row.iter().zip(&r).map(|(m, x)| m * x).sum();
            next[w] += alpha * dot;
        }
        r = next;
    }

    for v in 0..n {
        assert!(
            (scores[v] - r[v]).abs() < 1e-6,
            "node {v}: {} vs {}",
            scores[v],
            r[v]
        );
    }
}

fn exhaustive_snapshot_greedy(g: &Graph, snapshots: Vec<Snapshot>, k: usize) -> f64 {
    let mut cache = EvalCache::new(g, snapshots).unwrap();
    for _ in 0..k {
        let mut best = (f64::NEG_INFINITY, NodeId::MAX);
        for v in 0..g.node_count() as NodeId {
            if cache.committed().contains(&v) {
                continue;
            }
            let gain = cache.marginal_gain(v).unwrap();
            if gain > best.0 || (gain == best.0 && v < best.1) {
                best = (gain, v);
            }
        }
        cache.commit_seed(best.1).unwrap();
    }
    cache.committed_sigma()
}

#[test]
fn lazy_greedy_close_to_exhaustive_snapshot_greedy() {
    // For concave models the pooled estimate is submodular up to finite-pool
    // noise, so lazy selection must land within 2% of the exhaustive
    // snapshot greedy on the same pool.
    let key = StreamKey::new(37);
    let g = preferential_attachment(300, 2, key.child(0)).unwrap();
    let k = 5;
    let pool_size = 50;
    for model in [ThresholdModel::Linear, ThresholdModel::ConcaveSquare] {
        let lazy = greedy_pp(&g, &model, k, pool_size, key.child(1)).unwrap();
        let lazy_sigma = *lazy.gain_curve.last().unwrap();
        let snapshots: Vec<Snapshot> = (0..pool_size as u64)
            .map(|i| generate_snapshot(&g, &model, key.child(1).child(i)))
            .collect();
        let exhaustive_sigma = exhaustive_snapshot_greedy(&g, snapshots, k);
        assert!(
            (lazy_sigma - exhaustive_sigma).abs() / exhaustive_sigma <= 0.02,
            "{model}: lazy {lazy_sigma} vs exhaustive {exhaustive_sigma}"
        );
    }
}

#[test]
fn lazy_greedy_measured_in_nonsubmodular_case() {
    // With constant thresholds marginal gains can grow, where stale queue
    // values genuinely mislead the lazy rule; no exactness is claimed, so
    // only measure that the divergence stays moderate on this fixture.
    let key = StreamKey::new(37);
    let g = preferential_attachment(300, 2, key.child(0)).unwrap();
    let model = ThresholdModel::constant(0.5).unwrap();
    let lazy = greedy_pp(&g, &model, 5, 50, key.child(1)).unwrap();
    let lazy_sigma = *lazy.gain_curve.last().unwrap();
    let snapshots: Vec<Snapshot> = (0..50u64)
        .map(|i| generate_snapshot(&g, &model, key.child(1).child(i)))
        .collect();
    let exhaustive_sigma = exhaustive_snapshot_greedy(&g, snapshots, 5);
    let gap = (lazy_sigma - exhaustive_sigma).abs() / exhaustive_sigma;
    println!("majority-vote lazy/exhaustive gap: {:.3}", gap);
    assert!(lazy_sigma > 0.0);
    assert!(gap <= 0.25, "gap {gap} unexpectedly large");
}

#[test]
fn exact_greedy_respects_approximation_bound_smoke() {
    // ten 8-node graphs here; the 50-graph battery runs in acceptance
    let key = StreamKey::new(53);
    let bound = 1.0 - (-1.0f64).exp();
    for trial in 0..10u64 {
        let g = random_connected(8, 3, key.child(trial)).unwrap();
        let model = ThresholdModel::Linear;
        let mut seeds: Vec<NodeId> = Vec::new();
        for _ in 0..2 {
            let mut best = (f64::NEG_INFINITY, NodeId::MAX);
            for v in 0..8u32 {
                if seeds.contains(&v) {
                    continue;
                }
                let mut trial_seeds = seeds.clone();
                trial_seeds.push(v);
                let value = exact_sigma(&g, &model, &trial_seeds).unwrap();
                if value > best.0 || (value == best.0 && v < best.1) {
                    best = (value, v);
                }
            }
            seeds.push(best.1);
        }
        let greedy_value = exact_sigma(&g, &model, &seeds).unwrap();
        let (_, opt) = brute_force_opt(&g, &model, 2).unwrap();
        assert!(
            greedy_value >= bound * opt - 1e-9,
            "trial {trial}: greedy {greedy_value} < {bound} * {opt}"
        );
    }
}
