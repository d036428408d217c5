//! End-to-end recursion: sparsify, reduce, build the hierarchy on the reduced
//! graph with recursive flow calls, lift it back and solve.

use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::approximator::CongestionApproximatorOp;
use crate::error::{FlowError, Result};
use crate::graph::{cut_ratio, CutSet, DemandVector, Flow, FlowCutSolution, Graph};
use crate::hierarchy::{
    build_hierarchy_with_stats, hierarchy_quality, tree_approximator, ClusterSolver, HierarchyParams,
    PreparedApproximator,
};
use crate::reduce::{compose, convert_composed, ComposedMap};
use crate::rng::derive_seed;
use crate::solver::{FlowSolver, SolverParams, TreeRouter};
use crate::sparsify::{capacity_stretch, kappa_for_expected_edges, sample_with_tree, spanning_tree, TreeStrategy};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum KappaRule {
    /// Smallest kappa whose expected sparsifier size reduces to at most `m / rho`, times `C`.
    Adaptive,
    /// `C log2(n_bar)^2`.
    Polylog,
    Fixed(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RecursionConfig {
    pub kappa_rule: KappaRule,
    pub c: f64,
    pub rho: f64,
    pub base_case_edges: usize,
    pub inner_epsilon: f64,
    pub max_depth: usize,
    pub seed: u64,
    /// Top-level vertex count; filled in from the input when `None`.
    pub n_bar: Option<usize>,
    pub oversample: f64,
    pub tree_strategy: TreeStrategy,
    /// Fresh-seed attempts for a randomized step before it is flagged.
    pub retries: usize,
    pub hierarchy: HierarchyParams,
    pub solver: SolverParams,
}

impl Default for RecursionConfig {
    fn default() -> Self {
        RecursionConfig {
            kappa_rule: KappaRule::Adaptive,
            c: 1.0,
            rho: 8.0,
            base_case_edges: 300,
            inner_epsilon: 0.1,
            max_depth: 20,
            seed: 0,
            n_bar: None,
            oversample: 4.0,
            tree_strategy: TreeStrategy::MaxCapacity,
            retries: 3,
            hierarchy: HierarchyParams::default(),
            solver: SolverParams::default(),
        }
    }
}

impl RecursionConfig {
    pub fn with_seed(seed: u64) -> Self {
        RecursionConfig {
            seed,
            ..Default::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.rho > 2.0) {
            return Err(FlowError::domain("rho must exceed 2"));
        }
        if self.base_case_edges < 1 {
            return Err(FlowError::domain("base_case_edges must be at least 1"));
        }
        if !(self.inner_epsilon > 0.0) || !(self.c > 0.0) || !(self.oversample > 0.0) {
            return Err(FlowError::domain("inner_epsilon, c and oversample must be positive"));
        }
        if let KappaRule::Fixed(k) = self.kappa_rule {
            if !(k > 1.0) {
                return Err(FlowError::domain("fixed kappa must exceed 1"));
            }
        }
        Ok(())
    }

    /// Sets one field from a `key=value` pair.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        fn num<T: std::str::FromStr>(key: &str, v: &str) -> Result<T> {
            v.parse()
                .map_err(|_| FlowError::domain(format!("bad value {v:?} for {key}")))
        }
        match key {
            "c" | "C" => self.c = num(key, value)?,
            "rho" => self.rho = num(key, value)?,
            "base_case_edges" => self.base_case_edges = num(key, value)?,
            "inner_epsilon" => {
                self.inner_epsilon = num(key, value)?;
                self.hierarchy.inner_epsilon = self.inner_epsilon;
            }
            "max_depth" => self.max_depth = num(key, value)?,
            "seed" => self.seed = num(key, value)?,
            "n_bar" => self.n_bar = Some(num(key, value)?),
            "oversample" => self.oversample = num(key, value)?,
            "retries" => self.retries = num(key, value)?,
            "kappa" => {
                self.kappa_rule = match value {
                    "adaptive" => KappaRule::Adaptive,
                    "polylog" => KappaRule::Polylog,
                    v => KappaRule::Fixed(num(key, v)?),
                }
            }
            "tree" => {
                self.tree_strategy = match value {
                    "max_capacity" => TreeStrategy::MaxCapacity,
                    "low_stretch" => TreeStrategy::LowStretchHeuristic,
                    v => return Err(FlowError::domain(format!("unknown tree strategy {v:?}"))),
                }
            }
            "conductance_threshold" => self.hierarchy.conductance_threshold = num(key, value)?,
            "min_cluster" => self.hierarchy.min_cluster = num(key, value)?,
            "round_cap" => self.hierarchy.round_cap = Some(num(key, value)?),
            "balance_target" => self.hierarchy.balance_target = num(key, value)?,
            "max_iters" => self.solver.max_iters = num(key, value)?,
            "alpha_cap" => self.solver.alpha_cap = num(key, value)?,
            "alpha_hint" => self.solver.alpha_hint = num(key, value)?,
            "cleanup_rounds" => self.solver.cleanup_rounds = num(key, value)?,
            "electrical_iters" => self.solver.electrical_iters = num(key, value)?,
            _ => return Err(FlowError::domain(format!("unknown config key {key:?}"))),
        }
        Ok(())
    }

    /// Parses `key=value` lines; `#` starts a comment.
    pub fn apply_text(&mut self, text: &str) -> Result<()> {
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| FlowError::parse(i + 1, "expected key=value"))?;
            self.set(k.trim(), v.trim())
                .map_err(|e| FlowError::parse(i + 1, e.to_string()))?;
        }
        self.validate()
    }
}

/// Per-depth accounting. Depth 0 is the caller's graph.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct DepthStats {
    /// Pipeline inputs at this depth, base cases included.
    pub instances: usize,
    pub instance_edges: usize,
    pub base_cases: usize,
    /// Edges of the reduced sparsifiers handed to the next depth.
    pub reduced_edges: usize,
    pub largest_shrink_ratio: f64,
    pub kappas: Vec<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct RecursionStats {
    pub depths: Vec<DepthStats>,
    /// Top edge count plus the reduced edges of every depth.
    pub total_recursed_edges: usize,
    /// Randomized steps that failed all retries.
    pub flagged: usize,
    pub depth_fallbacks: usize,
    pub games: usize,
    pub game_rounds: usize,
    pub forced_expanders: usize,
    pub inner_iterations: usize,
    pub inner_unconverged: usize,
    pub top_iterations: usize,
    pub converged: bool,
    /// Kept out of serialized stats; reports carry timings separately.
    #[serde(skip)]
    pub wall_time_s: f64,
}

impl RecursionStats {
    fn depth(&mut self, d: usize) -> &mut DepthStats {
        if self.depths.len() <= d {
            self.depths.resize(d + 1, DepthStats::default());
        }
        &mut self.depths[d]
    }

    /// Edges per depth: the top instance, then the reduced graphs below it.
    pub fn recursed_edges_by_depth(&self) -> Vec<usize> {
        let mut out = Vec::new();
        if let Some(first) = self.depths.first() {
            out.push(first.instance_edges);
        }
        out.extend(self.depths.iter().map(|d| d.reduced_edges).take_while(|&e| e > 0));
        out
    }

    /// Checks the geometric shrink: each call reduces by at least `rho`, each
    /// depth holds at most half the previous one, and the total is at most `2m`.
    pub fn shrink_holds(&self, rho: f64) -> bool {
        let by_depth = self.recursed_edges_by_depth();
        let Some(&m) = by_depth.first() else {
            return true;
        };
        let per_call = self
            .depths
            .iter()
            .all(|d| d.largest_shrink_ratio <= 1.0 / rho + 1e-12);
        let halving = by_depth.windows(2).all(|w| 2 * w[1] <= w[0]);
        per_call && halving && self.total_recursed_edges <= 2 * m
    }

    pub fn levels(&self) -> usize {
        self.depths.len()
    }

    fn finish(&mut self) {
        self.total_recursed_edges = self.recursed_edges_by_depth().iter().sum();
    }
}

struct Recursion<'c> {
    config: &'c RecursionConfig,
    n_bar: usize,
    stats: RecursionStats,
}

struct RecursiveClusters<'r, 'c> {
    rec: &'r mut Recursion<'c>,
    depth: usize,
}

impl ClusterSolver for RecursiveClusters<'_, '_> {
    type Prepared = PreparedApproximator;
    fn prepare(&mut self, cluster: &Graph, seed: u64) -> Result<PreparedApproximator> {
        let op = self.rec.approximator(cluster, self.depth, seed)?;
        PreparedApproximator::new(cluster.clone(), op, self.rec.config.solver)
    }
}

impl Recursion<'_> {
    fn kappa(&self, g: &Graph, stretch: &[f64], in_tree: &[bool]) -> f64 {
        let cfg = self.config;
        match cfg.kappa_rule {
            KappaRule::Fixed(k) => k,
            KappaRule::Polylog => {
                let l = (self.n_bar.max(2) as f64).log2();
                (cfg.c * l * l).max(1.0 + 1e-6)
            }
            KappaRule::Adaptive => {
                // Tree plus k extra edges reduces to at most 3k edges.
                let target = g.m() as f64 / (3.0 * cfg.rho) * 0.9;
                (cfg.c * kappa_for_expected_edges(stretch, in_tree, cfg.oversample, target)).max(1.0 + 1e-6)
            }
        }
    }

    /// Sparsify and reduce, retrying with fresh seeds until the result shrinks by `rho`.
    fn sparsify_reduce(&mut self, g: &Graph, depth: usize, seed: u64) -> Option<(Graph, ComposedMap, f64)> {
        let cfg = self.config;
        let limit = g.m() as f64 / cfg.rho;
        for attempt in 0..=cfg.retries {
            let s = derive_seed(seed, attempt as u64);
            let Ok(tree) = spanning_tree(g, cfg.tree_strategy, s) else {
                continue;
            };
            let Ok(stretch) = capacity_stretch(g, &tree) else {
                continue;
            };
            let mut in_tree = vec![false; g.m()];
            for &id in &tree {
                in_tree[id] = true;
            }
            let kappa = self.kappa(g, &stretch, &in_tree);
            let Ok(ultra) = sample_with_tree(g, &tree, &stretch, kappa, cfg.oversample, s) else {
                continue;
            };
            let Ok((reduced, map)) = compose(ultra) else {
                continue;
            };
            if reduced.m() as f64 <= limit {
                self.stats.depth(depth).kappas.push(kappa);
                return Some((reduced, map, kappa));
            }
        }
        None
    }

    fn approximator(&mut self, g: &Graph, depth: usize, seed: u64) -> Result<CongestionApproximatorOp> {
        let cfg = self.config;
        {
            let d = self.stats.depth(depth);
            d.instances += 1;
            d.instance_edges += g.m();
        }
        if g.m() <= cfg.base_case_edges || g.n() <= 2 {
            self.stats.depth(depth).base_cases += 1;
            return tree_approximator(g);
        }
        if depth >= cfg.max_depth {
            self.stats.depth_fallbacks += 1;
            self.stats.depth(depth).base_cases += 1;
            return tree_approximator(g);
        }
        let Some((reduced, map, _)) = self.sparsify_reduce(g, depth, derive_seed(seed, 0x51)) else {
            self.stats.flagged += 1;
            self.stats.depth(depth).base_cases += 1;
            return tree_approximator(g);
        };
        {
            let d = self.stats.depth(depth);
            d.reduced_edges += reduced.m();
            d.largest_shrink_ratio = d.largest_shrink_ratio.max(reduced.m() as f64 / g.m() as f64);
        }
        let params = HierarchyParams {
            inner_epsilon: cfg.inner_epsilon,
            ..cfg.hierarchy
        };
        let build = {
            let mut clusters = RecursiveClusters {
                rec: self,
                depth: depth + 1,
            };
            build_hierarchy_with_stats(&reduced, &mut clusters, &params, derive_seed(seed, 0x4b))?
        };
        self.stats.games += build.stats.games;
        self.stats.game_rounds += build.stats.rounds;
        self.stats.forced_expanders += build.stats.forced_expanders;
        self.stats.inner_iterations += build.stats.solver_iterations;
        self.stats.inner_unconverged += build.stats.unconverged_solves;
        let quality = hierarchy_quality(&build.tree, &params);
        let inner = CongestionApproximatorOp::new(build.tree, quality);
        convert_composed(&map, &inner, g)
    }
}

fn check_epsilon(epsilon: f64) -> Result<()> {
    if !(epsilon > 0.0 && epsilon.is_finite()) {
        return Err(FlowError::domain("epsilon must be positive"));
    }
    Ok(())
}

/// Builds the recursive approximator for a connected graph.
pub fn build_approximator(g: &Graph, config: &RecursionConfig) -> Result<(CongestionApproximatorOp, RecursionStats)> {
    config.validate()?;
    if !g.is_connected() {
        return Err(FlowError::Disconnected);
    }
    let start = Instant::now();
    let mut rec = Recursion {
        config,
        n_bar: config.n_bar.unwrap_or(g.n()),
        stats: RecursionStats::default(),
    };
    let op = rec.approximator(g, 0, config.seed)?;
    let mut stats = rec.stats;
    stats.finish();
    stats.wall_time_s = start.elapsed().as_secs_f64();
    Ok((op, stats))
}

fn merge_stats(into: &mut RecursionStats, from: RecursionStats) {
    for (d, s) in from.depths.into_iter().enumerate() {
        let t = into.depth(d);
        t.instances += s.instances;
        t.instance_edges += s.instance_edges;
        t.base_cases += s.base_cases;
        t.reduced_edges += s.reduced_edges;
        t.largest_shrink_ratio = t.largest_shrink_ratio.max(s.largest_shrink_ratio);
        t.kappas.extend(s.kappas);
    }
    into.flagged += from.flagged;
    into.depth_fallbacks += from.depth_fallbacks;
    into.games += from.games;
    into.game_rounds += from.game_rounds;
    into.forced_expanders += from.forced_expanders;
    into.inner_iterations += from.inner_iterations;
    into.inner_unconverged += from.inner_unconverged;
    into.top_iterations += from.top_iterations;
}

fn solve_connected(
    g: &Graph,
    epsilon: f64,
    b: &DemandVector,
    config: &RecursionConfig,
) -> Result<(FlowCutSolution, RecursionStats)> {
    let (op, mut stats) = build_approximator(g, config)?;
    let params = SolverParams {
        epsilon,
        ..config.solver
    };
    let out = FlowSolver::new(g, &op, params)?.solve(b)?;
    stats.top_iterations += out.solution.iterations;
    stats.converged = out.solution.converged;
    Ok((out.solution, stats))
}

/// `(1 + epsilon)`-approximate flow/cut pair for demand `b`.
///
/// Disconnected graphs are solved one component at a time; the demand must
/// sum to zero on every component.
pub fn recursive_approx_max_flow(
    g: &Graph,
    epsilon: f64,
    b: &DemandVector,
    config: &RecursionConfig,
) -> Result<(FlowCutSolution, RecursionStats)> {
    check_epsilon(epsilon)?;
    config.validate()?;
    let n = g.n();
    if b.len() != n {
        return Err(FlowError::Dimension {
            expected: n,
            actual: b.len(),
        });
    }
    if n < 2 {
        return Err(FlowError::domain("need at least two vertices"));
    }
    if !b.is_balanced_on(g) {
        return Err(FlowError::domain("demand does not sum to zero on every component"));
    }
    let start = Instant::now();
    let config = RecursionConfig {
        n_bar: Some(config.n_bar.unwrap_or(n)),
        ..*config
    };
    if g.is_connected() {
        let (s, mut stats) = solve_connected(g, epsilon, b, &config)?;
        stats.wall_time_s = start.elapsed().as_secs_f64();
        return Ok((s, stats));
    }

    let (comp, count) = g.components();
    let mut groups = vec![Vec::new(); count];
    for v in 0..n {
        groups[comp[v]].push(v);
    }
    let mut flow = vec![0.0; g.m()];
    let mut best_cut: Option<(CutSet, f64)> = None;
    let mut stats = RecursionStats::default();
    let mut converged = true;
    let mut iterations = 0;
    for (i, members) in groups.iter().enumerate() {
        let local_b = DemandVector(members.iter().map(|&v| b.0[v]).collect());
        if members.len() < 2 || local_b.max_abs() == 0.0 {
            continue;
        }
        let (sub, origin) = g.induced(members);
        let sub_config = RecursionConfig {
            seed: derive_seed(config.seed, i as u64),
            ..config
        };
        let (s, st) = solve_connected(&sub, epsilon, &local_b, &sub_config)?;
        for (local, &id) in origin.iter().enumerate() {
            flow[id] = s.flow.0[local];
        }
        let cut = CutSet::new(s.cut.vertices().iter().map(|&v| members[v]).collect());
        if best_cut.as_ref().is_none_or(|c| s.cut_ratio > c.1) {
            best_cut = Some((cut, s.cut_ratio));
        }
        converged &= s.converged;
        iterations += s.iterations;
        merge_stats(&mut stats, st);
    }
    let (cut, ratio) = best_cut.unwrap_or_else(|| (CutSet::new(vec![0]), 0.0));
    let mut solution = FlowCutSolution {
        flow_congestion: g.congestion(&flow),
        flow: Flow(flow),
        cut,
        cut_ratio: ratio,
        epsilon_achieved: 0.0,
        converged: false,
        iterations,
    };
    solution.certify(epsilon);
    solution.converged &= converged;
    stats.finish();
    stats.converged = solution.converged;
    stats.wall_time_s = start.elapsed().as_secs_f64();
    Ok((solution, stats))
}

/// Largest `F` such that `F (e_s - e_t)` routes with congestion at most 1, to
/// within a factor `1 + epsilon`. The solution routes the returned value; its
/// cut certifies that no flow exceeds the value by more than `1 + epsilon`.
pub fn max_flow_value(
    g: &Graph,
    s: usize,
    t: usize,
    epsilon: f64,
    config: &RecursionConfig,
) -> Result<(f64, FlowCutSolution)> {
    check_epsilon(epsilon)?;
    let n = g.n();
    for v in [s, t] {
        if v >= n {
            return Err(FlowError::VertexOutOfRange(v));
        }
    }
    if s == t {
        return Err(FlowError::domain("source and sink coincide"));
    }
    let (comp, _) = g.components();
    if comp[s] != comp[t] {
        let mask: Vec<bool> = comp.iter().map(|&c| c == comp[s]).collect();
        return Ok((
            0.0,
            FlowCutSolution {
                flow: Flow::zeros(g.m()),
                cut: CutSet::from_mask(&mask),
                flow_congestion: 0.0,
                cut_ratio: 0.0,
                epsilon_achieved: 0.0,
                converged: true,
                iterations: 0,
            },
        ));
    }
    let members: Vec<usize> = (0..n).filter(|&v| comp[v] == comp[s]).collect();
    let (sub, origin) = g.induced(&members);
    let local = |v: usize| members.binary_search(&v).expect("member");
    let (ls, lt) = (local(s), local(t));
    let config = RecursionConfig {
        n_bar: Some(config.n_bar.unwrap_or(n)),
        ..*config
    };
    let (op, _) = build_approximator(&sub, &config)?;
    let params = SolverParams {
        epsilon,
        ..config.solver
    };
    let router = TreeRouter::for_graph(&sub)?;
    let unit = DemandVector::st(sub.n(), ls, lt, 1.0);

    // Warm bounds: a tree path carries its bottleneck; the endpoint degrees cap the value.
    let mut lo = {
        let mut f = vec![0.0; sub.m()];
        router.route_into(unit.as_slice(), &mut f);
        1.0 / sub.congestion(&f)
    };
    let mut lo_flow: Option<Vec<f64>> = None;
    let (ds, dt) = (sub.weighted_degree(ls), sub.weighted_degree(lt));
    let (mut hi, mut hi_cut) = if ds <= dt {
        (ds, CutSet::new(vec![ls]))
    } else {
        (dt, CutSet::new(vec![lt]))
    };
    let mut iterations = 0;
    for _ in 0..60 {
        if hi <= (1.0 + epsilon) * lo {
            break;
        }
        let f = (lo * hi).sqrt();
        let solver = FlowSolver::with_router(&sub, &op, router.clone(), params)?;
        let out = solver.solve(&unit.scaled(f))?.solution;
        iterations += out.iterations;
        if out.flow_congestion > 0.0 && f / out.flow_congestion > lo {
            lo = f / out.flow_congestion;
            lo_flow = Some(out.flow.0.iter().map(|x| x / out.flow_congestion).collect());
        }
        if out.cut_ratio > 0.0 && f / out.cut_ratio < hi {
            hi = f / out.cut_ratio;
            hi_cut = out.cut.clone();
        }
    }
    let local_flow = lo_flow.unwrap_or_else(|| {
        let mut f = vec![0.0; sub.m()];
        router.route_into(unit.scaled(lo).as_slice(), &mut f);
        f
    });
    let mut flow = vec![0.0; g.m()];
    for (i, &id) in origin.iter().enumerate() {
        flow[id] = local_flow[i];
    }
    let demand = unit.scaled(lo);
    let ratio = cut_ratio(&sub, &demand, &hi_cut)?;
    let cut = CutSet::new(hi_cut.vertices().iter().map(|&v| members[v]).collect());
    let mut solution = FlowCutSolution {
        flow_congestion: g.congestion(&flow),
        flow: Flow(flow),
        cut,
        cut_ratio: ratio,
        epsilon_achieved: 0.0,
        converged: false,
        iterations,
    };
    solution.certify(epsilon);
    Ok((lo, solution))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::generate::{generate, random_demand, Capacities, Family};
    use crate::graph::validate_flow;
    use crate::oracle::{exact_max_flow_st, exact_opt_congestion};

    #[test]
    fn base_case_matches_oracle() {
        for seed in 0..20 {
            let g = generate(&Family::RandomGnm { n: 10, m: 20 }, Capacities::Uniform { lo: 0.5, hi: 5.0 }, seed).unwrap();
            let b = random_demand(10, seed);
            let (s, stats) = recursive_approx_max_flow(&g, 0.1, &b, &RecursionConfig::with_seed(seed)).unwrap();
            let opt = exact_opt_congestion(&g, &b).unwrap().value;
            assert!(s.flow_congestion <= 1.1 * opt * (1.0 + 1e-9));
            assert!(s.cut_ratio <= opt * (1.0 + 1e-9));
            assert_eq!(stats.levels(), 1);
        }
    }

    #[test]
    fn grid16_recurses() {
        let g = generate(&Family::Grid2d { rows: 16, cols: 16 }, Capacities::Uniform { lo: 1.0, hi: 4.0 }, 1).unwrap();
        let b = random_demand(g.n(), 1);
        let (s, stats) = recursive_approx_max_flow(&g, 0.1, &b, &RecursionConfig::with_seed(1)).unwrap();
        let opt = exact_opt_congestion(&g, &b).unwrap().value;
        assert!(stats.levels() >= 2, "{stats:?}");
        assert!(s.flow_congestion <= 1.1 * opt * (1.0 + 1e-9), "{} vs {opt}", s.flow_congestion);
        assert!(s.cut_ratio <= opt * (1.0 + 1e-9));
        assert!(stats.shrink_holds(8.0), "{stats:?}");
        let report = validate_flow(&g, &s.flow, &b).unwrap();
        assert!(report.max_conservation_residual <= 1e-7 * b.max_abs());
    }

    #[test]
    fn components_solved_separately() {
        let g = Graph::from_triples(5, &[(0, 1, 1.0), (1, 2, 1.0), (3, 4, 2.0)]).unwrap();
        let b = DemandVector(vec![1.0, 0.0, -1.0, 1.0, -1.0]);
        let (s, _) = recursive_approx_max_flow(&g, 0.1, &b, &RecursionConfig::default()).unwrap();
        assert!(s.flow_congestion >= 1.0 - 1e-9 && s.flow_congestion <= 1.1);
        assert!((s.cut_ratio - 1.0).abs() < 1e-12);
        let bad = DemandVector(vec![1.0, 0.0, 0.0, 0.0, -1.0]);
        assert!(recursive_approx_max_flow(&g, 0.1, &bad, &RecursionConfig::default()).is_err());
    }

    #[test]
    fn max_flow_examples() {
        let cfg = RecursionConfig::default();
        let g = Graph::from_triples(2, &[(0, 1, 5.0)]).unwrap();
        let (v, _) = max_flow_value(&g, 0, 1, 0.1, &cfg).unwrap();
        assert!((5.0 / 1.1..=5.0 + 1e-9).contains(&v));
        let g = Graph::from_triples(3, &[(0, 1, 2.0), (1, 2, 1.0)]).unwrap();
        let (v, _) = max_flow_value(&g, 0, 2, 0.1, &cfg).unwrap();
        assert!((v - 1.0).abs() < 1e-9);
        let g = generate(&Family::Grid2d { rows: 8, cols: 8 }, Capacities::Uniform { lo: 1.0, hi: 3.0 }, 2).unwrap();
        let exact = exact_max_flow_st(&g, 0, 63).unwrap().value;
        let (v, s) = max_flow_value(&g, 0, 63, 0.1, &cfg).unwrap();
        assert!(v <= exact * (1.0 + 1e-9) && v * 1.1 >= exact, "{v} vs {exact}");
        assert!(s.flow_congestion <= 1.0 + 1e-9);
        let g = Graph::from_triples(4, &[(0, 1, 1.0), (2, 3, 1.0)]).unwrap();
        let (v, s) = max_flow_value(&g, 0, 3, 0.1, &cfg).unwrap();
        assert_eq!(v, 0.0);
        assert_eq!(s.cut, CutSet::new(vec![0, 1]));
    }

    #[test]
    fn config_text() {
        let mut c = RecursionConfig::default();
        c.apply_text("rho = 10\n# comment\nkappa=polylog\nseed=4").unwrap();
        assert_eq!((c.rho, c.seed, c.kappa_rule), (10.0, 4, KappaRule::Polylog));
        assert!(c.apply_text("rho=2").is_err());
        assert!(RecursionConfig::default().apply_text("nope=1").is_err());
    }
}
