//! Experiment runner: load a dataset, select seeds, evaluate spread curves,
//! and emit CSV. One master seed determines every random choice, and all
//! parallel reductions are order-insensitive, so outputs are byte-identical
//! across reruns and worker counts (timing columns aside).

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::PathBuf;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};

use cgim_core::diffusion::estimate_sigma_snapshots_detail;
use cgim_core::selection::{
    evaluate_gain_curve, Estimator, DEFAULT_PAGERANK_ALPHA, DEFAULT_PAGERANK_MAX_ITER,
    DEFAULT_PAGERANK_TOL,
};
use cgim_core::thresholds::Concavity;
use cgim_core::{
    brute_force_opt, check_monotone_submodular, degree_heuristic, estimate_sigma_mc,
    exact_sigma, find_submodularity_violation, generate_snapshot, greedy, greedy_pp,
    load_edge_list, pagerank_heuristic, random_heuristic, Algorithm, Error, Graph, NodeId,
    SeedSelection, Snapshot, StreamKey, SubmodularityReport, ThresholdModel,
};

const EXIT_IO: i32 = 1;
const EXIT_USAGE: i32 = 2;
const EXIT_INCONSISTENT: i32 = 3;

#[derive(Parser)]
#[command(
    name = "cgim",
    version,
    about = "Influence maximization under the coordination-game diffusion model"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a selection algorithm and emit one CSV row per seed picked
    Select(SelectArgs),
    /// Evaluate the spread of a seed set read from a file
    Eval(EvalArgs),
    /// Report the model's concavity judgment and, for tiny graphs, the
    /// exact submodularity check
    Check(CheckArgs),
    /// Exact oracle on tiny inputs: exact spread, brute-force optimum, or
    /// a submodularity-violation search
    Oracle(OracleArgs),
}

#[derive(Args)]
struct GraphArgs {
    /// Edge-list file: two whitespace-separated integer ids per line,
    /// `#` comments ignored
    #[arg(long)]
    graph: PathBuf,
    /// Treat edges as directed (influence flows along the edge direction)
    #[arg(long)]
    directed: bool,
}

#[derive(Args)]
struct SelectArgs {
    #[command(flatten)]
    graph: GraphArgs,
    /// Threshold model: linear | concave | convex | majority:<d0> | powerlaw:<g>
    #[arg(long)]
    model: String,
    /// Algorithm: greedy | greedypp | degree | pagerank | random
    #[arg(long)]
    algo: String,
    /// Number of seeds to select
    #[arg(long)]
    k: usize,
    /// Monte Carlo replications per estimate (greedy, mc estimator)
    #[arg(long, default_value_t = 10_000)]
    r: usize,
    /// Snapshot pool size (greedypp, snapshots estimator)
    #[arg(long, default_value_t = 100)]
    snapshots: usize,
    /// Master random seed; determines every random choice
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Estimator for heuristic gain curves: mc | snapshots
    #[arg(long, default_value = "snapshots")]
    estimator: String,
    /// Output CSV path (stdout when omitted)
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads (defaults to the number of cores)
    #[arg(long)]
    workers: Option<usize>,
}

#[derive(Args)]
struct EvalArgs {
    #[command(flatten)]
    graph: GraphArgs,
    #[arg(long)]
    model: String,
    /// File of original node ids, one per line
    #[arg(long)]
    seeds: PathBuf,
    #[arg(long, default_value_t = 10_000)]
    r: usize,
    #[arg(long, default_value_t = 100)]
    snapshots: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Estimator: mc | snapshots
    #[arg(long, default_value = "snapshots")]
    estimator: String,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    workers: Option<usize>,
}

#[derive(Args)]
struct CheckArgs {
    #[arg(long)]
    model: String,
    /// Optional tiny graph to run the exact submodularity check on
    #[arg(long)]
    graph: Option<PathBuf>,
    #[arg(long)]
    directed: bool,
    #[arg(long)]
    workers: Option<usize>,
}

#[derive(Args)]
struct OracleArgs {
    #[arg(long)]
    model: String,
    /// Tiny graph for --seeds / --k
    #[arg(long)]
    graph: Option<PathBuf>,
    #[arg(long)]
    directed: bool,
    /// Evaluate the exact spread of this seed set
    #[arg(long)]
    seeds: Option<PathBuf>,
    /// Find the exact optimum of this size by exhaustive search
    #[arg(long)]
    k: Option<usize>,
    /// Search small graphs for a monotonicity/submodularity violation
    #[arg(long)]
    find_violation: bool,
    /// Graph budget for --find-violation
    #[arg(long, default_value_t = 500)]
    budget: usize,
    #[arg(long)]
    workers: Option<usize>,
}

fn main() {
    let cli = Cli::parse();
    let code = match run(cli.command) {
        Ok(code) => code,
        Err(err) => {
            eprintln!("error: {err}");
            exit_code(&err)
        }
    };
    std::process::exit(code);
}

fn exit_code(err: &Error) -> i32 {
    match err {
        Error::Model(_) | Error::InvalidArgument(_) | Error::GuardExceeded { .. } => EXIT_USAGE,
        _ => EXIT_IO,
    }
}

fn init_workers(workers: Option<usize>) {
    if let Some(w) = workers {
        rayon::ThreadPoolBuilder::new()
            .num_threads(w.max(1))
            .build_global()
            .expect("worker pool is initialized once");
    }
}

fn run(command: Command) -> Result<i32, Error> {
    match command {
        Command::Select(args) => cmd_select(args),
        Command::Eval(args) => cmd_eval(args),
        Command::Check(args) => cmd_check(args),
        Command::Oracle(args) => cmd_oracle(args),
    }
}

fn load_graph(args: &GraphArgs) -> Result<Graph, Error> {
    let file = File::open(&args.graph)?;
    let (graph, report) = load_edge_list(BufReader::new(file), args.directed)?;
    if report.self_loops_dropped > 0 || report.duplicate_edges_dropped > 0 {
        eprintln!(
            "loaded {} nodes / {} edges (dropped {} self-loops, {} duplicate edges)",
            graph.node_count(),
            graph.edge_count(),
            report.self_loops_dropped,
            report.duplicate_edges_dropped
        );
    }
    Ok(graph)
}

fn parse_estimator(name: &str, r: usize, snapshots: usize) -> Result<Estimator, Error> {
    match name.trim().to_ascii_lowercase().as_str() {
        "mc" => Ok(Estimator::MonteCarlo { replications: r }),
        "snapshots" => Ok(Estimator::Snapshots {
            pool_size: snapshots,
        }),
        other => Err(Error::InvalidArgument(format!(
            "unknown estimator `{other}` (expected `mc` or `snapshots`)"
        ))),
    }
}

fn read_seed_labels(path: &PathBuf, graph: &Graph) -> Result<Vec<NodeId>, Error> {
    let file = File::open(path)?;
    let mut seeds = Vec::new();
    for (idx, line) in BufReader::new(file).lines().enumerate() {
        let line = line?;
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let label: u64 = line.parse().map_err(|_| Error::Parse {
            line: idx + 1,
            reason: format!("invalid node id `{line}`"),
        })?;
        seeds.push(graph.require_dense_id(label)?);
    }
    Ok(seeds)
}

fn open_out(path: &Option<PathBuf>) -> Result<Box<dyn Write>, Error> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(File::create(p)?)),
        None => Box::new(BufWriter::new(std::io::stdout())),
    })
}

fn ms(d: std::time::Duration) -> f64 {
    d.as_secs_f64() * 1e3
}

/// Substream layout: child 0 drives the selection algorithm, child 1 the
/// evaluation pass. Snapshot substream ids equal snapshot indices within
/// each pool.
fn cmd_select(args: SelectArgs) -> Result<i32, Error> {
    init_workers(args.workers);
    let model: ThresholdModel = args.model.parse()?;
    let algo: Algorithm = args.algo.parse()?;
    let estimator = parse_estimator(&args.estimator, args.r, args.snapshots)?;
    let graph = load_graph(&args.graph)?;
    let master = StreamKey::new(args.seed);

    let started = Instant::now();
    let selection: SeedSelection = match algo {
        Algorithm::Greedy => greedy(&graph, &model, args.k, args.r, master.child(0))?,
        Algorithm::GreedyPP => greedy_pp(&graph, &model, args.k, args.snapshots, master.child(0))?,
        Algorithm::Degree => degree_heuristic(&graph, args.k)?,
        Algorithm::PageRank => pagerank_heuristic(
            &graph,
            args.k,
            DEFAULT_PAGERANK_ALPHA,
            DEFAULT_PAGERANK_TOL,
            DEFAULT_PAGERANK_MAX_ITER,
        )?,
        Algorithm::Random => random_heuristic(&graph, args.k, master.child(0))?,
    };
    for warning in &selection.warnings {
        eprintln!("warning: {warning}");
    }
    let curve = if selection.gain_curve.len() == selection.seeds.len() {
        selection.gain_curve.clone()
    } else {
        evaluate_gain_curve(&graph, &model, &selection.seeds, estimator, master.child(1))?
    };
    let total = started.elapsed();

    let per_pick_ms: Vec<f64> = if selection.pick_durations.len() == selection.seeds.len() {
        selection.pick_durations.iter().copied().map(ms).collect()
    } else {
        // heuristics pick all seeds at once; per-pick timings are not
        // meaningful, the total row carries the wall clock
        vec![0.0; selection.seeds.len()]
    };

    let mut out = open_out(&args.out)?;
    writeln!(out, "k,seed_id,cumulative_sigma_estimate,elapsed_ms")?;
    for (i, &seed) in selection.seeds.iter().enumerate() {
        writeln!(
            out,
            "{},{},{},{:.3}",
            i + 1,
            graph.label(seed),
            curve[i],
            per_pick_ms[i]
        )?;
    }
    writeln!(
        out,
        "total,,{},{:.3}",
        curve.last().copied().unwrap_or(0.0),
        ms(total)
    )?;
    out.flush()?;
    Ok(0)
}

fn cmd_eval(args: EvalArgs) -> Result<i32, Error> {
    init_workers(args.workers);
    let model: ThresholdModel = args.model.parse()?;
    let estimator = parse_estimator(&args.estimator, args.r, args.snapshots)?;
    let graph = load_graph(&args.graph)?;
    let seeds = read_seed_labels(&args.seeds, &graph)?;
    let master = StreamKey::new(args.seed);

    let (estimate, estimator_name, replications) = match estimator {
        Estimator::MonteCarlo { replications } => (
            estimate_sigma_mc(&graph, &model, &seeds, replications, master.child(0))?,
            "mc",
            replications,
        ),
        Estimator::Snapshots { pool_size } => {
            let key = master.child(0);
            let pool: Vec<Snapshot> = (0..pool_size as u64)
                .map(|i| generate_snapshot(&graph, &model, key.child(i)))
                .collect();
            (
                estimate_sigma_snapshots_detail(&graph, &pool, &seeds)?,
                "snapshots",
                pool_size,
            )
        }
    };

    let mut out = open_out(&args.out)?;
    writeln!(out, "sigma_estimate,stderr,estimator,replications")?;
    writeln!(
        out,
        "{},{},{},{}",
        estimate.mean, estimate.stderr, estimator_name, replications
    )?;
    out.flush()?;
    Ok(0)
}

fn cmd_check(args: CheckArgs) -> Result<i32, Error> {
    init_workers(args.workers);
    let model: ThresholdModel = args.model.parse()?;
    let judgment = model.concavity();
    println!("model: {model}");
    match judgment {
        Concavity::ConcaveContinuousIncreasing => {
            println!("concave: yes (expected spread is monotone and submodular)")
        }
        Concavity::NotConcave => println!("concave: no (continuous but not concave)"),
        Concavity::Discontinuous => println!("concave: no (discontinuous)"),
    }

    let Some(path) = args.graph else {
        return Ok(0);
    };
    let graph = load_graph(&GraphArgs {
        graph: path,
        directed: args.directed,
    })?;
    let report = match check_monotone_submodular(&graph, &model) {
        Ok(report) => report,
        Err(Error::GuardExceeded { what, limit, actual }) => {
            println!("submodular: check skipped ({what} = {actual} exceeds {limit})");
            return Ok(0);
        }
        Err(other) => return Err(other),
    };

    let consistent = match &report {
        SubmodularityReport::Holds => {
            println!("submodular: holds on this graph");
            true
        }
        SubmodularityReport::NotSubmodular {
            s,
            t,
            v,
            margin_s,
            margin_t,
        } => {
            println!(
                "submodular: violation found (S={s:?}, T={t:?}, v={v}, \
                 margin_S={margin_s}, margin_T={margin_t})"
            );
            // a violation under a concave judgment contradicts the theory
            judgment != Concavity::ConcaveContinuousIncreasing
        }
        SubmodularityReport::NotMonotone { s, t, sigma_s, sigma_t } => {
            println!(
                "monotone: violation found (S={s:?}, T={t:?}, sigma_S={sigma_s}, \
                 sigma_T={sigma_t})"
            );
            // progressive dynamics make the spread monotone for every model
            false
        }
    };
    if consistent {
        if !report.holds() {
            println!("consistent with the concavity judgment");
        }
        Ok(0)
    } else {
        println!("INCONSISTENT with the concavity judgment; this indicates a bug");
        Ok(EXIT_INCONSISTENT)
    }
}

fn cmd_oracle(args: OracleArgs) -> Result<i32, Error> {
    init_workers(args.workers);
    let model: ThresholdModel = args.model.parse()?;

    if args.find_violation {
        match find_submodularity_violation(&model, args.budget) {
            Some(witness) => print!("{witness}"),
            None => println!(
                "no violation found within a budget of {} graphs",
                args.budget
            ),
        }
        return Ok(0);
    }

    let Some(path) = args.graph else {
        return Err(Error::InvalidArgument(
            "oracle needs --graph (or --find-violation)".into(),
        ));
    };
    let graph = load_graph(&GraphArgs {
        graph: path,
        directed: args.directed,
    })?;

    if let Some(seeds_path) = &args.seeds {
        let seeds = read_seed_labels(seeds_path, &graph)?;
        let value = exact_sigma(&graph, &model, &seeds)?;
        println!("exact_sigma: {value}");
        return Ok(0);
    }
    if let Some(k) = args.k {
        let (set, value) = brute_force_opt(&graph, &model, k)?;
        let labels: Vec<u64> = set.iter().map(|&v| graph.label(v)).collect();
        println!(
            "optimum: {}",
            labels
                .iter()
                .map(|l| l.to_string())
                .collect::<Vec<_>>()
                .join(" ")
        );
        println!("value: {value}");
        return Ok(0);
    }
    Err(Error::InvalidArgument(
        "oracle needs one of --seeds, --k, or --find-violation".into(),
    ))
}
