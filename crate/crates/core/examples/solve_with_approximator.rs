//! Potential descent with the spanning-tree approximator, with a trace.

use recflow::generate::{generate, random_demand, Capacities, Family};
use recflow::hierarchy::tree_approximator;
use recflow::oracle::exact_opt_congestion;
use recflow::solver::{write_trace_csv, FlowSolver, SolverParams};

fn main() -> recflow::Result<()> {
    let g = generate(
        &Family::RandomGnm { n: 60, m: 240 },
        Capacities::Uniform { lo: 1.0, hi: 10.0 },
        11,
    )?;
    let b = random_demand(g.n(), 11);
    let op = tree_approximator(&g)?;
    let params = SolverParams {
        trace: true,
        ..SolverParams::with_epsilon(0.05)
    };
    let out = FlowSolver::new(&g, &op, params)?.solve(&b)?;
    let s = &out.solution;
    let opt = exact_opt_congestion(&g, &b)?.value;
    println!(
        "congestion {:.5}  cut ratio {:.5}  opt {:.5}  iterations {}",
        s.flow_congestion, s.cut_ratio, opt, s.iterations
    );
    write_trace_csv(&out.trace, std::io::stdout())?;
    Ok(())
}
