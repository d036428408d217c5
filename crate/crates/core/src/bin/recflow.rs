//! Command-line front end.
//!
//! Exit codes: 0 success, 1 input or usage error, 2 solver did not converge,
//! 3 `verify` found a violated contract.

use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};

use recflow::bench::{run_bench, write_csv, BenchDemand, BenchOptions};
use recflow::dimacs::{load_demands, load_graph, parse_demand_spec, serialize_graph};
use recflow::driver::build_approximator;
use recflow::generate::{generate, random_demand, random_pair_demand, Capacities, Family};
use recflow::graph::validate_flow;
use recflow::hierarchy::empirical_quality;
use recflow::oracle::{exact_max_flow_st, exact_opt_congestion};
use recflow::report::{InstanceInfo, ResultInfo, RunReport, Timing};
use recflow::solver::{write_trace_csv, FlowSolver, SolverParams};
use recflow::sparsify::{edge_budget, measure_cut_distortion, ultra_sparsify, SparsifyParams, TreeStrategy};
use recflow::{
    derive_seed, max_flow_value, recursive_approx_max_flow, DemandVector, FlowCutSolution, Graph,
    RecursionConfig, RecursionStats,
};

/// Largest instance `verify` hands to the exact oracle.
const VERIFY_MAX_N: usize = 5000;

const EXIT_INPUT: u8 = 1;
const EXIT_NOT_CONVERGED: u8 = 2;
const EXIT_VIOLATION: u8 = 3;

#[derive(Parser)]
#[command(name = "recflow", version, about = "Approximate undirected max flow through recursive congestion approximators")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve a demand or s-t instance and write a JSON report.
    Solve(SolveArgs),
    /// Solve, then check the result against the exact oracle.
    Verify(SolveArgs),
    /// Sweep a generator family over sizes and fit the runtime slope.
    Bench(BenchArgs),
    /// Build the recursive approximator and export its cluster tree.
    BuildApproximator(BuildArgs),
    /// Sample an ultra-sparsifier and export it as DIMACS.
    Sparsify(SparsifyArgs),
}

#[derive(Args)]
struct InstanceArgs {
    /// DIMACS graph file.
    #[arg(long, conflicts_with = "generate", required_unless_present = "generate")]
    input: Option<PathBuf>,
    /// Generator spec such as grid2d:8x8 or random_gnm:50,200.
    #[arg(long)]
    generate: Option<String>,
    /// Capacity rule for generated graphs: `unit` or `lo,hi`.
    #[arg(long, default_value = "unit")]
    caps: String,
    /// Seed for every random choice; overrides the config file.
    #[arg(long)]
    seed: Option<u64>,
    /// key=value configuration file.
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Args)]
struct SolveArgs {
    #[command(flatten)]
    instance: InstanceArgs,
    /// Inline `+1@1,-1@3`, a `d <v> <value>` file, or `random` / `pair`.
    #[arg(long, conflicts_with = "st")]
    demand: Option<String>,
    /// Source and sink, 1-based: `S,T` or `S T`.
    #[arg(long, num_args = 1..=2)]
    st: Option<Vec<String>>,
    #[arg(long, default_value_t = 0.1)]
    eps: f64,
    /// Write the JSON report here instead of standard output.
    #[arg(long)]
    report: Option<PathBuf>,
    /// Per-check solver trace as CSV.
    #[arg(long, conflicts_with = "st")]
    trace: Option<PathBuf>,
}

#[derive(Args)]
struct BenchArgs {
    #[arg(long, default_value = "grid2d")]
    family: String,
    /// Target edge counts.
    #[arg(long, value_delimiter = ',', default_value = "2000,4000,8000,16000")]
    edges: Vec<usize>,
    #[arg(long, default_value_t = 3)]
    runs: usize,
    #[arg(long, default_value_t = 0.2)]
    eps: f64,
    #[arg(long, default_value = "unit")]
    caps: String,
    /// `st` or `random`.
    #[arg(long, default_value = "st")]
    demand: String,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    #[arg(long)]
    config: Option<PathBuf>,
    /// Demands sampled for alpha_emp on instances with at most 64 vertices.
    #[arg(long, default_value_t = 0)]
    alpha_trials: usize,
    #[arg(long)]
    csv: Option<PathBuf>,
    #[arg(long)]
    json: Option<PathBuf>,
}

#[derive(Args)]
struct BuildArgs {
    #[command(flatten)]
    instance: InstanceArgs,
    /// Tree export destination; standard output by default.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Demands sampled for alpha_emp when the graph has at most 64 vertices.
    #[arg(long, default_value_t = 0)]
    alpha_trials: usize,
}

#[derive(Args)]
struct SparsifyArgs {
    #[command(flatten)]
    instance: InstanceArgs,
    #[arg(long, default_value_t = 4.0)]
    kappa: f64,
    #[arg(long, default_value_t = 4.0)]
    oversample: f64,
    /// `max_capacity` or `low_stretch`.
    #[arg(long, default_value = "max_capacity")]
    tree: String,
    /// DIMACS destination; standard output by default.
    #[arg(long)]
    out: Option<PathBuf>,
}

enum Failure {
    Input(String),
    NotConverged,
    Violation(Vec<String>),
}

impl<E: std::fmt::Display> From<E> for Failure {
    fn from(e: E) -> Self {
        Failure::Input(e.to_string())
    }
}

type CliResult<T> = Result<T, Failure>;

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::Solve(args) => cmd_solve(&args, false),
        Command::Verify(args) => cmd_solve(&args, true),
        Command::Bench(args) => cmd_bench(&args),
        Command::BuildApproximator(args) => cmd_build(&args),
        Command::Sparsify(args) => cmd_sparsify(&args),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Input(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(EXIT_INPUT)
        }
        Err(Failure::NotConverged) => {
            eprintln!("solver did not reach the requested accuracy");
            ExitCode::from(EXIT_NOT_CONVERGED)
        }
        Err(Failure::Violation(lines)) => {
            for l in lines {
                eprintln!("violation: {l}");
            }
            ExitCode::from(EXIT_VIOLATION)
        }
    }
}

fn read(path: &Path) -> CliResult<String> {
    fs::read_to_string(path).map_err(|e| Failure::Input(format!("{}: {e}", path.display())))
}

fn emit(path: Option<&Path>, text: &str) -> CliResult<()> {
    match path {
        Some(p) => fs::write(p, text).map_err(|e| Failure::Input(format!("{}: {e}", p.display()))),
        None => {
            io::stdout().write_all(text.as_bytes())?;
            Ok(())
        }
    }
}

fn load_config(path: Option<&Path>, seed: Option<u64>) -> CliResult<RecursionConfig> {
    let mut config = RecursionConfig::default();
    if let Some(p) = path {
        config.apply_text(&read(p)?)?;
    }
    if let Some(s) = seed {
        config.seed = s;
    }
    Ok(config)
}

struct Instance {
    graph: Graph,
    family: String,
    config: RecursionConfig,
}

fn load_instance(args: &InstanceArgs) -> CliResult<Instance> {
    let config = load_config(args.config.as_deref(), args.seed)?;
    let (graph, family) = match (&args.input, &args.generate) {
        (Some(path), _) => (load_graph(&read(path)?)?, path.display().to_string()),
        (None, Some(spec)) => {
            let family: Family = spec.parse()?;
            let caps: Capacities = args.caps.parse()?;
            (generate(&family, caps, config.seed)?, family.to_string())
        }
        (None, None) => return Err(Failure::Input("need --input or --generate".into())),
    };
    Ok(Instance {
        graph,
        family,
        config,
    })
}

fn parse_st(parts: &[String], n: usize) -> CliResult<(usize, usize)> {
    let fields: Vec<&str> = parts
        .iter()
        .flat_map(|p| p.split([',', ' ']))
        .filter(|f| !f.is_empty())
        .collect();
    let [s, t] = fields.as_slice() else {
        return Err(Failure::Input("--st takes a source and a sink".into()));
    };
    let vertex = |f: &str| -> CliResult<usize> {
        match f.parse::<usize>() {
            Ok(v) if (1..=n).contains(&v) => Ok(v - 1),
            _ => Err(Failure::Input(format!("vertex `{f}` is not in 1..={n}"))),
        }
    };
    Ok((vertex(s)?, vertex(t)?))
}

fn load_demand(spec: &str, n: usize, seed: u64) -> CliResult<DemandVector> {
    match spec {
        "random" => Ok(random_demand(n, derive_seed(seed, 1))),
        "pair" => Ok(random_pair_demand(n, derive_seed(seed, 1))),
        s if s.contains('@') => Ok(parse_demand_spec(s, n)?),
        path => Ok(load_demands(&read(Path::new(path))?, n)?),
    }
}

/// Demand solve with the approximator build and the top-level descent timed
/// separately. Matches `recursive_approx_max_flow` on connected graphs.
fn solve_demand(
    g: &Graph,
    b: &DemandVector,
    eps: f64,
    config: &RecursionConfig,
    timing: &mut Timing,
    trace: Option<&Path>,
) -> CliResult<(FlowCutSolution, RecursionStats)> {
    if !g.is_connected() {
        if trace.is_some() {
            eprintln!("note: no trace for disconnected graphs");
        }
        let start = Instant::now();
        let out = recursive_approx_max_flow(g, eps, b, config)?;
        timing.record("solve", start.elapsed().as_secs_f64());
        return Ok(out);
    }
    if b.len() != g.n() || !b.is_balanced_on(g) {
        return Err(Failure::Input("demand must have one entry per vertex and sum to zero".into()));
    }
    let start = Instant::now();
    let (op, mut stats) = build_approximator(g, config)?;
    timing.record("build", start.elapsed().as_secs_f64());
    let params = SolverParams {
        epsilon: eps,
        trace: trace.is_some(),
        ..config.solver
    };
    let start = Instant::now();
    let out = FlowSolver::new(g, &op, params)?.solve(b)?;
    timing.record("solve", start.elapsed().as_secs_f64());
    if let Some(path) = trace {
        let mut buf = Vec::new();
        write_trace_csv(&out.trace, &mut buf)?;
        fs::write(path, buf)?;
    }
    stats.top_iterations += out.solution.iterations;
    stats.converged = out.solution.converged;
    Ok((out.solution, stats))
}

fn cmd_solve(args: &SolveArgs, verify: bool) -> CliResult<()> {
    let start = Instant::now();
    let inst = load_instance(&args.instance)?;
    let g = &inst.graph;
    let mut timing = Timing::default();
    timing.record("load", start.elapsed().as_secs_f64());
    if !(args.eps > 0.0 && args.eps.is_finite()) {
        return Err(Failure::Input("--eps must be positive".into()));
    }
    if verify && g.n() > VERIFY_MAX_N {
        return Err(Failure::Input(format!("verify accepts at most {VERIFY_MAX_N} vertices")));
    }

    let mut violations = Vec::new();
    let (mut result, stats) = if let Some(st) = &args.st {
        let (s, t) = parse_st(st, g.n())?;
        let clock = Instant::now();
        let (value, solution) = max_flow_value(g, s, t, args.eps, &inst.config)?;
        timing.record("solve", clock.elapsed().as_secs_f64());
        let stats = RecursionStats {
            top_iterations: solution.iterations,
            converged: solution.converged,
            ..Default::default()
        };
        let mut result = ResultInfo::of(&solution);
        result.value = Some(value);
        if verify {
            let clock = Instant::now();
            let exact = exact_max_flow_st(g, s, t)?.value;
            timing.record("oracle", clock.elapsed().as_secs_f64());
            result.oracle_opt = Some(exact);
            if value > exact * (1.0 + 1e-9) + 1e-12 {
                violations.push(format!("value {value} exceeds the exact max flow {exact}"));
            }
            if value < exact / (1.0 + args.eps) * (1.0 - 1e-9) {
                violations.push(format!("value {value} is below {exact} / (1 + eps)"));
            }
        }
        (result, stats)
    } else {
        let spec = args
            .demand
            .as_deref()
            .ok_or_else(|| Failure::Input("need --demand or --st".into()))?;
        let b = load_demand(spec, g.n(), inst.config.seed)?;
        let (solution, stats) = solve_demand(g, &b, args.eps, &inst.config, &mut timing, args.trace.as_deref())?;
        let mut result = ResultInfo::of(&solution);
        if verify {
            let clock = Instant::now();
            let opt = exact_opt_congestion(g, &b)?.value;
            timing.record("oracle", clock.elapsed().as_secs_f64());
            result.oracle_opt = Some(opt);
            violations.extend(check_solution(g, &b, &solution, opt, args.eps)?);
        }
        (result, stats)
    };
    if verify && g.n() <= 64 && args.st.is_none() {
        // Cheap enough to add the empirical quality of the built approximator.
        let (op, _) = build_approximator(g, &inst.config)?;
        result.alpha_emp = Some(empirical_quality(&op, g, 8, inst.config.seed)?);
    }

    let converged = result.converged;
    let report = RunReport {
        instance: InstanceInfo::of(g, inst.family.clone()),
        seed: inst.config.seed,
        epsilon: args.eps,
        config: inst.config,
        result,
        stats,
        timing,
    };
    let json = report.to_json() + "\n";
    emit(args.report.as_deref(), &json)?;
    eprintln!(
        "congestion {:.6}  cut ratio {:.6}  eps achieved {:.4}  iterations {}{}",
        report.result.congestion,
        report.result.cut_ratio,
        report.result.epsilon_achieved,
        report.result.iterations,
        report.result.value.map(|v| format!("  value {v:.6}")).unwrap_or_default()
    );
    if verify {
        if violations.is_empty() {
            eprintln!("verified against the exact oracle");
        } else {
            return Err(Failure::Violation(violations));
        }
    }
    if converged {
        Ok(())
    } else {
        Err(Failure::NotConverged)
    }
}

/// Contract checks of a demand solution against the exact optimum.
fn check_solution(
    g: &Graph,
    b: &DemandVector,
    s: &FlowCutSolution,
    opt: f64,
    eps: f64,
) -> CliResult<Vec<String>> {
    let mut out = Vec::new();
    let flow = validate_flow(g, &s.flow, b)?;
    let tol = 1e-7 * b.max_abs();
    if flow.max_conservation_residual > tol {
        out.push(format!("conservation residual {} above {tol}", flow.max_conservation_residual));
    }
    let slack = 1.0 + 1e-6;
    if s.cut_ratio > opt * slack {
        out.push(format!("cut ratio {} exceeds opt {opt}", s.cut_ratio));
    }
    if s.flow_congestion < opt / slack {
        out.push(format!("congestion {} below opt {opt}", s.flow_congestion));
    }
    if s.converged {
        if s.flow_congestion > (1.0 + eps) * opt * slack {
            out.push(format!("congestion {} above (1 + eps) opt", s.flow_congestion));
        }
        if s.cut_ratio * (1.0 + eps) * slack < s.flow_congestion {
            out.push(format!("cut ratio {} does not certify congestion {}", s.cut_ratio, s.flow_congestion));
        }
    }
    Ok(out)
}

fn cmd_bench(args: &BenchArgs) -> CliResult<()> {
    let config = load_config(args.config.as_deref(), None)?;
    let opts = BenchOptions {
        family: args.family.clone(),
        edges: args.edges.clone(),
        runs: args.runs,
        seed: args.seed,
        epsilon: args.eps,
        caps: args.caps.parse()?,
        demand: args.demand.parse::<BenchDemand>()?,
        config,
        alpha_trials: args.alpha_trials,
    };
    println!("family,n,m,seed,time_s,iterations,converged,epsilon_achieved");
    let series = run_bench(&opts, |r| {
        println!(
            "\"{}\",{},{},{},{:.4},{},{},{:.4}",
            r.family, r.n, r.m, r.seed, r.time_s, r.iterations, r.converged, r.epsilon_achieved
        );
    })?;
    for (m, t) in &series.medians {
        println!("median m={m} time_s={t:.4}");
    }
    match series.slope {
        Some(s) => println!("loglog slope {s:.3}"),
        None => println!("loglog slope undefined"),
    }
    if let Some(path) = &args.csv {
        let mut buf = Vec::new();
        write_csv(&series.rows, &mut buf)?;
        fs::write(path, buf)?;
    }
    if let Some(path) = &args.json {
        fs::write(path, serde_json::to_string_pretty(&series)? + "\n")?;
    }
    if series.rows.iter().all(|r| r.converged) {
        Ok(())
    } else {
        Err(Failure::NotConverged)
    }
}

fn cmd_build(args: &BuildArgs) -> CliResult<()> {
    let inst = load_instance(&args.instance)?;
    let g = &inst.graph;
    let (op, stats) = build_approximator(g, &inst.config)?;
    emit(args.out.as_deref(), &op.tree().export())?;
    eprintln!(
        "{} clusters, depth {}, quality {:.3}, {} levels, {:.3}s",
        op.tree().node_count(),
        op.tree().depth(),
        op.quality(),
        stats.levels(),
        stats.wall_time_s
    );
    if args.alpha_trials > 0 {
        if g.n() <= 64 {
            let alpha = empirical_quality(&op, g, args.alpha_trials, inst.config.seed)?;
            eprintln!("alpha_emp {alpha:.3}");
        } else {
            eprintln!("note: alpha_emp needs at most 64 vertices");
        }
    }
    Ok(())
}

fn cmd_sparsify(args: &SparsifyArgs) -> CliResult<()> {
    let inst = load_instance(&args.instance)?;
    let g = &inst.graph;
    let strategy = match args.tree.as_str() {
        "max_capacity" => TreeStrategy::MaxCapacity,
        "low_stretch" => TreeStrategy::LowStretchHeuristic,
        other => return Err(Failure::Input(format!("unknown tree strategy `{other}`"))),
    };
    let params = SparsifyParams {
        oversample: args.oversample,
        strategy,
    };
    let h = ultra_sparsify(g, args.kappa, &params, inst.config.seed)?;
    emit(args.out.as_deref(), &serialize_graph(&h.graph))?;
    eprintln!(
        "kept {} of {} edges ({} off-tree, budget {:.1})",
        h.graph.m(),
        g.m(),
        h.off_tree_count,
        edge_budget(args.kappa, g.m(), g.n(), args.oversample)
    );
    if g.n() <= 20 {
        eprintln!("cut distortion {:.3}", measure_cut_distortion(g, &h.graph)?);
    }
    Ok(())
}
