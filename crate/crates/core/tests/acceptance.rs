//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any hard criterion fails. The iteration-exponent report only
//! warns.

use std::process::ExitCode;
use std::time::Instant;

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

use recflow::bench::{epsilon_sweep, loglog_slope, run_bench, BenchOptions};
use recflow::driver::build_approximator;
use recflow::generate::{generate, random_demand, random_pair_demand, Capacities, Family};
use recflow::graph::validate_flow;
use recflow::hierarchy::{
    build_hierarchy, cut_matching_game, default_round_cap, hierarchy_quality, ClusterSolver, ExactClusterSolver,
    GameOutcome, HierarchyParams, TreeClusterSolver,
};
use recflow::oracle::{brute_force_min_ratio_cut, exact_opt_congestion};
use recflow::reduce::{convert, reduce};
use recflow::sparsify::{edge_budget, measure_cut_distortion, ultra_sparsify, SparsifyParams};
use recflow::{
    recursive_approx_max_flow, CongestionApproximatorOp, CutSet, DemandVector, Graph, RecursionConfig,
    RecursionStats,
};

enum Verdict {
    Pass,
    Fail,
    Warn,
}

struct Outcome {
    verdict: Verdict,
    detail: String,
}

fn judge(ok: bool, detail: String) -> Outcome {
    Outcome {
        verdict: if ok { Verdict::Pass } else { Verdict::Fail },
        detail,
    }
}

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

const WIDE: Capacities = Capacities::Uniform { lo: 0.1, hi: 10.0 };

fn max_abs(x: &[f64]) -> f64 {
    x.iter().fold(0.0f64, |a, v| a.max(v.abs()))
}

/// A connected graph on at most 12 vertices with capacities in [0.1, 10].
fn tiny_instance(r: &mut ChaCha8Rng) -> Graph {
    let n = r.gen_range(3..=12);
    let max_m = n * (n - 1) / 2;
    let m = r.gen_range(n - 1..=max_m.min(3 * n));
    let seed = r.gen();
    let family = match r.gen_range(0..3) {
        0 => Family::RandomGnm { n, m },
        1 => Family::TreePlusNoise { n, extra: m + 1 - n },
        _ => Family::Path { n, caps: None },
    };
    generate(&family, WIDE, seed).unwrap()
}

fn duality_oracle() -> Outcome {
    let start = Instant::now();
    let mut r = rng(1);
    let (mut count, mut bad, mut worst) = (0, 0, 0.0f64);
    while count < 500 {
        let g = tiny_instance(&mut r);
        let b = random_demand(g.n(), r.gen());
        let opt = exact_opt_congestion(&g, &b).unwrap().value;
        let (_, cut) = brute_force_min_ratio_cut(&g, &b).unwrap();
        let rel = (opt - cut).abs() / cut.max(1e-300);
        worst = worst.max(rel);
        bad += usize::from(rel > 1e-6);
        count += 1;
    }
    let secs = start.elapsed().as_secs_f64();
    judge(
        bad == 0 && secs < 60.0,
        format!("{count} instances, {bad} mismatches, worst relative gap {worst:.1e}, {secs:.1}s"),
    )
}

fn soundness() -> Outcome {
    let mut r = rng(2);
    let params = HierarchyParams::default();
    let (mut checks, mut violations, mut lifted_builds) = (0, 0, 0);
    for _ in 0..120 {
        let g = tiny_instance(&mut r);
        if g.n() < 3 {
            continue;
        }
        let seed: u64 = r.gen();
        let mut ops = Vec::new();
        let tree = build_hierarchy(&g, &mut TreeClusterSolver::default(), &params, seed).unwrap();
        ops.push(CongestionApproximatorOp::new(tree, 1.0));
        let tree = build_hierarchy(&g, &mut ExactClusterSolver, &params, seed).unwrap();
        ops.push(CongestionApproximatorOp::new(tree, 1.0));
        // Lifted through an elimination of low-degree vertices.
        let (small, map) = reduce(&g).unwrap();
        if small.n() >= 2 {
            let tree = build_hierarchy(&small, &mut TreeClusterSolver::default(), &params, seed).unwrap();
            let q = hierarchy_quality(&tree, &params);
            ops.push(convert(&map, &CongestionApproximatorOp::new(tree, q), &g).unwrap());
        }
        // Lifted through the full recursion: sparsify, reduce, recurse, convert.
        let config = RecursionConfig {
            base_case_edges: 6,
            ..RecursionConfig::with_seed(seed)
        };
        let (op, stats) = build_approximator(&g, &config).unwrap();
        lifted_builds += usize::from(stats.depths.first().is_some_and(|d| !d.kappas.is_empty()));
        ops.push(op);
        for t in 0..4 {
            let b = if t % 2 == 0 {
                random_demand(g.n(), r.gen())
            } else {
                random_pair_demand(g.n(), r.gen())
            };
            let opt = exact_opt_congestion(&g, &b).unwrap().value;
            for op in &ops {
                checks += 1;
                if max_abs(&op.apply(&b).unwrap()) > opt * (1.0 + 1e-9) + 1e-12 {
                    violations += 1;
                }
            }
        }
    }
    judge(
        violations == 0 && lifted_builds > 0,
        format!("{checks} (approximator, demand) pairs, {violations} violations, {lifted_builds} builds lifted through sparsify and reduce"),
    )
}

/// Mixed families with up to about 2000 edges.
fn mixed_instance(i: usize) -> (Graph, DemandVector, String) {
    let mut r = rng(1000 + i as u64);
    let target = [60, 150, 400, 900, 1500, 2000][i % 6];
    let name = ["grid2d", "random_gnm", "expander_like", "tree_plus_noise"][(i / 6) % 4];
    let family = Family::with_edges(name, target).unwrap();
    let caps = if i.is_multiple_of(2) {
        Capacities::Uniform { lo: 1.0, hi: 10.0 }
    } else {
        Capacities::Unit
    };
    let g = generate(&family, caps, r.gen()).unwrap();
    let b = if i.is_multiple_of(3) {
        random_pair_demand(g.n(), r.gen())
    } else {
        random_demand(g.n(), r.gen())
    };
    (g, b, family.to_string())
}

fn end_to_end(stats_out: &mut Vec<(usize, RecursionStats)>) -> Outcome {
    let eps = 0.1;
    let (mut converged, mut bound_failures, mut max_m) = (0, Vec::new(), 0);
    for i in 0..100 {
        let (g, b, name) = mixed_instance(i);
        max_m = max_m.max(g.m());
        let config = RecursionConfig::with_seed(i as u64);
        let (s, stats) = recursive_approx_max_flow(&g, eps, &b, &config).unwrap();
        let opt = exact_opt_congestion(&g, &b).unwrap().value;
        let residual = validate_flow(&g, &s.flow, &b).unwrap().max_conservation_residual;
        let slack = 1.0 + 1e-9;
        let sound = residual <= 1e-7 * b.max_abs() && s.cut_ratio <= opt * slack;
        let tight = s.flow_congestion <= (1.0 + eps) * opt * slack && s.cut_ratio * (1.0 + eps) * slack >= s.flow_congestion;
        converged += usize::from(s.converged);
        if !sound || (s.converged && !tight) {
            bound_failures.push(format!("{name} #{i}"));
        }
        stats_out.push((g.m(), stats));
    }
    judge(
        converged >= 98 && bound_failures.is_empty(),
        format!("{converged}/100 converged, largest m {max_m}, bound failures {bound_failures:?}"),
    )
}

fn sparsifier_distortion() -> Outcome {
    let g = generate(
        &Family::RandomGnm { n: 10, m: 30 },
        Capacities::Uniform { lo: 1.0, hi: 10.0 },
        4,
    )
    .unwrap();
    assert_eq!((g.n(), g.m()), (10, 30));
    let params = SparsifyParams {
        oversample: 4.0,
        ..Default::default()
    };
    let budget = edge_budget(4.0, g.m(), g.n(), 4.0);
    let (mut within, mut budget_ok, mut worst) = (0, 0, 0.0f64);
    for seed in 0..100 {
        let h = ultra_sparsify(&g, 4.0, &params, seed).unwrap();
        let d = measure_cut_distortion(&g, &h.graph).unwrap();
        worst = worst.max(d);
        within += usize::from(d <= 4.0);
        budget_ok += usize::from(h.off_tree_count as f64 <= budget && h.graph.m() == g.n() - 1 + h.off_tree_count);
    }
    judge(
        within >= 95 && budget_ok == 100,
        format!("distortion <= 4 in {within}/100, worst {worst:.2}, budget held in {budget_ok}/100"),
    )
}

fn shrink(runs: &[(usize, RecursionStats)]) -> Outcome {
    let rho = RecursionConfig::default().rho;
    let recursive: Vec<_> = runs.iter().filter(|(_, s)| s.levels() > 1).collect();
    let failures: Vec<usize> = runs
        .iter()
        .filter(|(_, s)| !s.shrink_holds(rho))
        .map(|(m, _)| *m)
        .collect();
    let worst = runs
        .iter()
        .map(|(m, s)| s.total_recursed_edges as f64 / *m as f64)
        .fold(0.0, f64::max);
    judge(
        failures.is_empty() && !recursive.is_empty(),
        format!(
            "{} runs ({} recursive), worst total/m {worst:.3}, failures at m = {failures:?}",
            runs.len(),
            recursive.len()
        ),
    )
}

fn operator_checks() -> Outcome {
    let mut r = rng(6);
    let (mut adjoint_err, mut linear_err) = (0.0f64, 0.0f64);
    for _ in 0..50 {
        let n = r.gen_range(3..=10);
        let g = generate(&Family::RandomGnm { n, m: 2 * n }, WIDE, r.gen()).unwrap();
        let tree = build_hierarchy(&g, &mut TreeClusterSolver::default(), &HierarchyParams::default(), r.gen()).unwrap();
        let op = CongestionApproximatorOp::new(tree, 1.0);
        let dense = op.materialize();
        let b = random_demand(n, r.gen());
        let y: Vec<f64> = (0..op.rows()).map(|_| r.gen_range(-1.0..1.0)).collect();
        let rb = op.apply(&b).unwrap();
        let rty = op.transpose_apply(&y).unwrap();
        for (i, row) in dense.iter().enumerate() {
            let want: f64 = row.iter().zip(&b.0).map(|(a, x)| a * x).sum();
            adjoint_err = adjoint_err.max((want - rb[i]).abs());
        }
        for v in 0..n {
            let want: f64 = dense.iter().zip(&y).map(|(row, yi)| row[v] * yi).sum();
            adjoint_err = adjoint_err.max((want - rty[v]).abs());
        }
        let c = random_demand(n, r.gen());
        let (s, t) = (r.gen_range(-3.0..3.0), r.gen_range(-3.0..3.0));
        let mix = DemandVector(b.0.iter().zip(&c.0).map(|(x, z)| s * x + t * z).collect());
        let rc = op.apply(&c).unwrap();
        for (i, v) in op.apply(&mix).unwrap().iter().enumerate() {
            linear_err = linear_err.max((v - (s * rb[i] + t * rc[i])).abs());
        }
    }
    let mut xs = Vec::new();
    let mut ops = Vec::new();
    for p in 6..=12 {
        let n = 1usize << p;
        let g = generate(&Family::RandomGnm { n, m: 3 * n }, WIDE, p as u64).unwrap();
        let (op, _) = build_approximator(&g, &RecursionConfig::with_seed(p as u64)).unwrap();
        op.reset_operation_count();
        op.apply(&random_demand(n, 1)).unwrap();
        xs.push(n as f64);
        ops.push(op.operation_count() as f64);
    }
    let slope = loglog_slope(&xs, &ops).unwrap();
    judge(
        adjoint_err <= 1e-10 && linear_err <= 1e-9 && (0.9..=1.2).contains(&slope),
        format!("adjoint error {adjoint_err:.1e}, linearity error {linear_err:.1e}, op-count slope {slope:.3}"),
    )
}

fn scaling() -> Outcome {
    let start = Instant::now();
    let opts = BenchOptions {
        family: "grid2d".into(),
        edges: vec![2000, 4000, 8000, 16000],
        epsilon: 0.2,
        runs: 5,
        ..Default::default()
    };
    let series = run_bench(&opts, |_| {}).unwrap();
    let slope = series.slope.unwrap_or(f64::INFINITY);
    let medians: Vec<String> = series.medians.iter().map(|(m, t)| format!("{m}:{t:.3}s")).collect();
    judge(
        slope <= 1.35,
        format!(
            "log-log slope {slope:.3} over {}, {:.0}s total",
            medians.join(" "),
            start.elapsed().as_secs_f64()
        ),
    )
}

fn cliques_with_bridge(k: usize) -> Graph {
    let mut t = Vec::new();
    for off in [0, k] {
        for a in 0..k {
            for b in a + 1..k {
                t.push((off + a, off + b, 1.0));
            }
        }
    }
    t.push((0, k, 1.0));
    Graph::from_triples(2 * k, &t).unwrap()
}

fn cut_matching_fixtures() -> Outcome {
    let params = HierarchyParams::default();
    let dumbbell = cliques_with_bridge(6);
    let side = CutSet::new((0..6).collect());
    let cap = default_round_cap(dumbbell.n());
    let mut split = 0;
    for seed in 0..100 {
        let mut p = TreeClusterSolver::default().prepare(&dumbbell, seed).unwrap();
        if let GameOutcome::SparseCut { cut, rounds, .. } = cut_matching_game(&dumbbell, None, &mut p, &params, seed).unwrap() {
            split += usize::from((cut == side || cut == side.complement(12)) && rounds <= cap);
        }
    }
    let mut t = Vec::new();
    for a in 0..8 {
        for b in a + 1..8 {
            t.push((a, b, 1.0));
        }
    }
    let k8 = Graph::from_triples(8, &t).unwrap();
    let mut certified = 0;
    for seed in 0..100 {
        let mut p = TreeClusterSolver::default().prepare(&k8, seed).unwrap();
        if let GameOutcome::Expander { forced: false, .. } = cut_matching_game(&k8, None, &mut p, &params, seed).unwrap() {
            certified += 1;
        }
    }
    judge(
        split >= 95 && certified == 100,
        format!("dumbbell split at the bridge {split}/100, K8 certified {certified}/100"),
    )
}

fn iteration_exponent() -> Outcome {
    let mut instances = Vec::new();
    for (i, family) in [
        Family::Grid2d { rows: 16, cols: 16 },
        Family::RandomGnm { n: 200, m: 800 },
        Family::ExpanderLike { n: 128, degree: 4 },
        Family::TreePlusNoise { n: 300, extra: 60 },
    ]
    .iter()
    .enumerate()
    {
        let g = generate(family, Capacities::Uniform { lo: 1.0, hi: 10.0 }, i as u64).unwrap();
        let b = random_demand(g.n(), i as u64);
        instances.push((g, b));
    }
    let (means, k) = epsilon_sweep(&instances, &[0.4, 0.2, 0.1, 0.05], &RecursionConfig::with_seed(9)).unwrap();
    let k = k.unwrap_or(f64::INFINITY);
    let table: Vec<String> = means.iter().map(|(e, it)| format!("{e}:{it:.0}")).collect();
    Outcome {
        verdict: if k <= 3.5 { Verdict::Pass } else { Verdict::Warn },
        detail: format!("iterations ~ eps^-{k:.2} ({})", table.join(" ")),
    }
}

fn main() -> ExitCode {
    let mut runs = Vec::new();
    let mut results: Vec<(usize, &str, Outcome)> = Vec::new();
    let mut record = |id, name, o: Outcome| {
        let tag = match o.verdict {
            Verdict::Pass => "PASS",
            Verdict::Fail => "FAIL",
            Verdict::Warn => "WARN",
        };
        println!("{tag} criterion {id} {name}: {}", o.detail);
        results.push((id, name, o));
    };
    record(1, "duality oracle", duality_oracle());
    record(2, "approximator soundness", soundness());
    record(3, "end-to-end (1+eps)", end_to_end(&mut runs));
    record(4, "sparsifier distortion", sparsifier_distortion());
    // Shrink is checked on the end-to-end runs plus a few larger graphs.
    for (i, k) in [40usize, 64, 90].into_iter().enumerate() {
        let g = generate(&Family::Grid2d { rows: k, cols: k }, Capacities::Uniform { lo: 1.0, hi: 10.0 }, i as u64).unwrap();
        let (_, stats) = build_approximator(&g, &RecursionConfig::with_seed(i as u64)).unwrap();
        runs.push((g.m(), stats));
    }
    record(5, "recursion shrink", shrink(&runs));
    record(6, "linear operator", operator_checks());
    record(7, "runtime scaling", scaling());
    record(8, "cut-matching fixtures", cut_matching_fixtures());
    record(9, "iteration exponent", iteration_exponent());
    let failed = results.iter().filter(|(_, _, o)| matches!(o.verdict, Verdict::Fail)).count();
    println!("{} of {} criteria failed", failed, results.len());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
