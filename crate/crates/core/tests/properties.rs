use proptest::prelude::*;

use recflow::dimacs::{load_graph, serialize_graph};
use recflow::driver::build_approximator;
use recflow::generate::{generate, random_demand, Capacities, Family};
use recflow::graph::{cut_ratio, validate_flow};
use recflow::hierarchy::{build_hierarchy, HierarchyParams, TreeClusterSolver};
use recflow::oracle::{brute_force_min_ratio_cut, exact_opt_congestion};
use recflow::reduce::{reduce, replay};
use recflow::solver::{FlowSolver, SolverParams};
use recflow::sparsify::{ultra_sparsify, SparsifyParams};
use recflow::{recursive_approx_max_flow, CongestionApproximatorOp, CutSet, DemandVector, Graph, RecursionConfig};

const CAPS: Capacities = Capacities::Uniform { lo: 0.1, hi: 10.0 };

fn small_graph() -> impl Strategy<Value = (Graph, u64)> {
    (3usize..11, 0usize..14, any::<u64>()).prop_map(|(n, extra, seed)| {
        let g = generate(&Family::TreePlusNoise { n, extra }, CAPS, seed).unwrap();
        (g, seed)
    })
}

fn max_abs(x: &[f64]) -> f64 {
    x.iter().fold(0.0f64, |a, v| a.max(v.abs()))
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn hierarchy_op(g: &Graph, seed: u64) -> CongestionApproximatorOp {
    let tree = build_hierarchy(g, &mut TreeClusterSolver::default(), &HierarchyParams::default(), seed).unwrap();
    CongestionApproximatorOp::new(tree, 1.0)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn every_cut_bounds_the_optimum((g, seed) in small_graph(), mask in any::<u16>()) {
        let b = random_demand(g.n(), seed);
        let opt = exact_opt_congestion(&g, &b).unwrap().value;
        let side: Vec<usize> = (0..g.n()).filter(|&v| mask >> v & 1 == 1).collect();
        let cut = CutSet::new(side);
        prop_assume!(cut.is_proper(g.n()));
        prop_assert!(cut_ratio(&g, &b, &cut).unwrap() <= opt * (1.0 + 1e-9));
    }

    #[test]
    fn oracle_witnesses_agree((g, seed) in small_graph()) {
        let b = random_demand(g.n(), seed);
        let opt = exact_opt_congestion(&g, &b).unwrap();
        let report = validate_flow(&g, &opt.witness_flow, &b).unwrap();
        prop_assert!(report.max_conservation_residual <= 1e-9 * max_abs(b.as_slice()).max(1.0));
        let (_, best) = brute_force_min_ratio_cut(&g, &b).unwrap();
        prop_assert!((report.congestion - best).abs() <= 1e-6 * best);
        prop_assert!((opt.value - best).abs() <= 1e-6 * best);
    }

    #[test]
    fn approximator_rows_are_lower_bounds((g, seed) in small_graph()) {
        let op = hierarchy_op(&g, seed);
        let b = random_demand(g.n(), seed ^ 1);
        let opt = exact_opt_congestion(&g, &b).unwrap().value;
        prop_assert!(max_abs(&op.apply(&b).unwrap()) <= opt * (1.0 + 1e-9));
    }

    #[test]
    fn apply_and_transpose_are_adjoint((g, seed) in small_graph(), y_seed in any::<u64>()) {
        let op = hierarchy_op(&g, seed);
        let b = random_demand(g.n(), seed);
        let y: Vec<f64> = random_demand(op.rows(), y_seed).0;
        let lhs = dot(&op.apply(&b).unwrap(), &y);
        let rhs = dot(b.as_slice(), &op.transpose_apply(&y).unwrap());
        prop_assert!((lhs - rhs).abs() <= 1e-10 * (1.0 + lhs.abs()));
    }

    #[test]
    fn apply_is_linear((g, seed) in small_graph(), a in -5.0f64..5.0, c in -5.0f64..5.0) {
        let op = hierarchy_op(&g, seed);
        let x = random_demand(g.n(), seed);
        let y = random_demand(g.n(), seed.wrapping_add(7));
        let z = DemandVector(x.0.iter().zip(&y.0).map(|(p, q)| a * p + c * q).collect());
        let (rx, ry, rz) = (op.apply(&x).unwrap(), op.apply(&y).unwrap(), op.apply(&z).unwrap());
        for i in 0..rz.len() {
            prop_assert!((rz[i] - (a * rx[i] + c * ry[i])).abs() <= 1e-9 * (1.0 + rz[i].abs()));
        }
    }

    #[test]
    fn tree_levels_are_laminar((g, seed) in small_graph()) {
        let op = hierarchy_op(&g, seed);
        let tree = op.tree();
        for level in tree.levels() {
            let mut seen = vec![false; g.n()];
            for id in level {
                for &v in tree.cluster_vertices(id).vertices() {
                    prop_assert!(!seen[v]);
                    seen[v] = true;
                }
            }
        }
        let mut singles = vec![false; g.n()];
        for c in tree.clusters() {
            if c.len() == 1 {
                singles[c.vertices()[0]] = true;
            }
        }
        prop_assert!(singles.iter().all(|&s| s));
    }

    #[test]
    fn solver_brackets_the_optimum((g, seed) in small_graph(), eps in 0.05f64..0.5) {
        let b = random_demand(g.n(), seed);
        let op = hierarchy_op(&g, seed);
        let out = FlowSolver::new(&g, &op, SolverParams::with_epsilon(eps)).unwrap().solve(&b).unwrap();
        let s = out.solution;
        let opt = exact_opt_congestion(&g, &b).unwrap().value;
        let report = validate_flow(&g, &s.flow, &b).unwrap();
        prop_assert!(report.max_conservation_residual <= 1e-7 * b.max_abs());
        prop_assert!(s.cut_ratio <= opt * (1.0 + 1e-9));
        prop_assert!(s.flow_congestion >= opt * (1.0 - 1e-9));
        if s.converged {
            prop_assert!(s.flow_congestion <= (1.0 + eps) * opt * (1.0 + 1e-9));
        }
    }

    #[test]
    fn recursion_is_deterministic(n in 20usize..60, seed in any::<u64>()) {
        let g = generate(&Family::RandomGnm { n, m: 3 * n }, CAPS, seed).unwrap();
        let b = random_demand(n, seed);
        let config = RecursionConfig { base_case_edges: 20, ..RecursionConfig::with_seed(seed) };
        let (a, sa) = recursive_approx_max_flow(&g, 0.2, &b, &config).unwrap();
        let (c, sc) = recursive_approx_max_flow(&g, 0.2, &b, &config).unwrap();
        prop_assert_eq!(a.flow.0, c.flow.0);
        prop_assert_eq!(a.cut, c.cut);
        prop_assert_eq!(sa.depths, sc.depths);
        let (x, _) = build_approximator(&g, &config).unwrap();
        let (y, _) = build_approximator(&g, &config).unwrap();
        prop_assert_eq!(x.tree().export(), y.tree().export());
    }

    #[test]
    fn sparsifier_keeps_a_spanning_tree((g, seed) in small_graph(), kappa in 1.5f64..20.0) {
        let h = ultra_sparsify(&g, kappa, &SparsifyParams::default(), seed).unwrap();
        prop_assert!(h.graph.is_connected());
        prop_assert_eq!(h.tree_edges.len(), g.n() - 1);
        prop_assert!(h.graph.m() <= g.m());
    }

    #[test]
    fn reduction_replays((g, _seed) in small_graph()) {
        let (small, map) = reduce(&g).unwrap();
        prop_assert_eq!(replay(&g, &map).unwrap(), small.clone());
        prop_assert!(small.n() <= g.n());
    }

    #[test]
    fn dimacs_round_trips((g, _seed) in small_graph()) {
        let back = load_graph(&serialize_graph(&g)).unwrap();
        prop_assert_eq!(back, g);
    }
}
