//! The cut-matching game on a planted bottleneck and on a clique, then a full
//! hierarchy with its empirical quality.

use recflow::generate::{generate, Capacities, Family};
use recflow::hierarchy::{
    build_hierarchy_with_stats, cut_matching_game, empirical_quality, hierarchy_quality, ClusterSolver,
    GameOutcome, HierarchyParams, TreeClusterSolver,
};
use recflow::{CongestionApproximatorOp, Graph};

fn clique_edges(offset: usize, k: usize, out: &mut Vec<(usize, usize, f64)>) {
    for a in 0..k {
        for b in a + 1..k {
            out.push((offset + a, offset + b, 1.0));
        }
    }
}

fn main() -> recflow::Result<()> {
    let params = HierarchyParams::default();
    let mut t = Vec::new();
    clique_edges(0, 6, &mut t);
    clique_edges(6, 6, &mut t);
    t.push((0, 6, 1.0));
    let dumbbell = Graph::from_triples(12, &t)?;

    let mut t = Vec::new();
    clique_edges(0, 8, &mut t);
    let k8 = Graph::from_triples(8, &t)?;

    for (name, g) in [("dumbbell", &dumbbell), ("K8", &k8)] {
        let mut prepared = TreeClusterSolver::default().prepare(g, 2)?;
        match cut_matching_game(g, None, &mut prepared, &params, 2)? {
            GameOutcome::SparseCut { cut, conductance, rounds } => {
                println!("{name}: cut {:?} of conductance {conductance:.3} after {rounds} rounds", cut.vertices())
            }
            GameOutcome::Expander { state, forced } => {
                println!("{name}: expander after {} rounds (forced: {forced})", state.round)
            }
        }
    }

    let g = generate(&Family::Grid2d { rows: 6, cols: 6 }, Capacities::Unit, 0)?;
    let build = build_hierarchy_with_stats(&g, &mut TreeClusterSolver::default(), &params, 4)?;
    println!(
        "6x6 grid: {} clusters over {} levels, {} games",
        build.tree.node_count(),
        build.tree.depth(),
        build.stats.games
    );
    let quality = hierarchy_quality(&build.tree, &params);
    let op = CongestionApproximatorOp::new(build.tree, quality);
    println!("alpha_emp over 16 demands: {:.3}", empirical_quality(&op, &g, 16, 9)?);
    print!("{}", op.tree().export().lines().take(6).collect::<Vec<_>>().join("\n"));
    println!("\n...");
    Ok(())
}
