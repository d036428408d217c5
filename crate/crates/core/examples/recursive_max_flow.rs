//! The full recursion on a grid: sparsify, reduce, recurse, lift, solve.

use recflow::generate::{generate, random_demand, Capacities, Family};
use recflow::oracle::exact_opt_congestion;
use recflow::{recursive_approx_max_flow, RecursionConfig};

fn main() -> recflow::Result<()> {
    let g = generate(&Family::Grid2d { rows: 40, cols: 40 }, Capacities::Uniform { lo: 1.0, hi: 10.0 }, 1)?;
    let b = random_demand(g.n(), 1);
    let config = RecursionConfig::with_seed(1);
    let (s, stats) = recursive_approx_max_flow(&g, 0.1, &b, &config)?;
    let opt = exact_opt_congestion(&g, &b)?.value;
    println!(
        "congestion {:.5}  cut ratio {:.5}  opt {:.5}  converged {}",
        s.flow_congestion, s.cut_ratio, opt, s.converged
    );
    println!("edges per depth {:?}", stats.recursed_edges_by_depth());
    println!(
        "total recursed {} <= 2m = {}: {}",
        stats.total_recursed_edges,
        2 * g.m(),
        stats.shrink_holds(config.rho)
    );
    println!(
        "{} games, {} inner iterations, {} top iterations, {:.3}s",
        stats.games, stats.inner_iterations, stats.top_iterations, stats.wall_time_s
    );
    Ok(())
}
