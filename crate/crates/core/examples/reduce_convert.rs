//! Shrink a sparse graph by eliminating low-degree vertices, build a hierarchy
//! on what is left and lift it back.

use recflow::generate::{generate, random_demand, Capacities, Family};
use recflow::hierarchy::{build_hierarchy, hierarchy_quality, HierarchyParams, TreeClusterSolver};
use recflow::oracle::exact_opt_congestion;
use recflow::reduce::{convert, reduce, replay};
use recflow::CongestionApproximatorOp;

fn main() -> recflow::Result<()> {
    let g = generate(&Family::TreePlusNoise { n: 60, extra: 8 }, Capacities::Unit, 5)?;
    let (small, map) = reduce(&g)?;
    println!("{} vertices / {} edges reduced to {} / {}", g.n(), g.m(), small.n(), small.m());
    assert_eq!(replay(&g, &map)?, small);

    let params = HierarchyParams::default();
    let tree = build_hierarchy(&small, &mut TreeClusterSolver::default(), &params, 1)?;
    let inner = CongestionApproximatorOp::new(tree, 1.0);
    let inner = inner.clone().with_quality(hierarchy_quality(inner.tree(), &params));
    let lifted = convert(&map, &inner, &g)?;
    println!("lifted tree: {} clusters, quality bound {:.1}", lifted.rows(), lifted.quality());

    for seed in 0..5 {
        let b = random_demand(g.n(), seed);
        let lower = lifted.apply(&b)?.iter().fold(0.0f64, |a, x| a.max(x.abs()));
        let opt = exact_opt_congestion(&g, &b)?.value;
        println!("seed {seed}: ||Rb|| {lower:.4} <= opt {opt:.4}");
    }
    Ok(())
}
