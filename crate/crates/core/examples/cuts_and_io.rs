//! Read a DIMACS graph, evaluate a few cuts and check a hand-made flow.

use recflow::dimacs::{load_graph, serialize_demands};
use recflow::graph::{cut_capacity, cut_ratio, validate_flow};
use recflow::{CutSet, DemandVector, Flow};

const SQUARE: &str = "c 4-cycle with a heavy chord
p max 4 5
a 1 2 1
a 2 3 1
a 3 4 1
a 4 1 1
a 1 3 3
";

fn main() -> recflow::Result<()> {
    let g = load_graph(SQUARE)?;
    let b = DemandVector::st(g.n(), 0, 2, 4.0);
    print!("demand file:\n{}", serialize_demands(&b));

    for side in [vec![0], vec![0, 1], vec![0, 3]] {
        let cut = CutSet::new(side.clone());
        println!(
            "S = {:?}: u(S) = {}, ratio = {}",
            side.iter().map(|v| v + 1).collect::<Vec<_>>(),
            cut_capacity(&g, &cut)?,
            cut_ratio(&g, &b, &cut)?
        );
    }

    // Every edge at 80% load matches the ratio of the cut around vertex 1.
    let flow = Flow(vec![0.8, 0.8, -0.8, -0.8, 2.4]);
    let report = validate_flow(&g, &flow, &b)?;
    println!(
        "residual {:.1e}, congestion {}",
        report.max_conservation_residual, report.congestion
    );
    Ok(())
}
