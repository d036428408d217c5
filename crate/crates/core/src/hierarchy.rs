//! Hierarchical cluster decomposition by recursive partitioning with the
//! cut-matching game.
//!
//! Each cluster is examined on its induced subgraph. Vertex volumes are the
//! weighted degrees in the host graph, so edges leaving the cluster still count
//! towards a side's volume and a child cut pays for the parent's boundary.
//! The game either finds a cut of conductance below the threshold, in which
//! case both sides are partitioned further, or declares the cluster an expander
//! and refines it to singletons.

use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::approximator::{CongestionApproximatorOp, DecompositionTree};
use crate::error::{FlowError, Result};
use crate::graph::{CutSet, DemandVector, FlowCutSolution, Graph};
use crate::oracle::exact_opt_congestion;
use crate::rng::{derive_seed, seeded};
use crate::solver::{FlowSolver, SolverParams, TreeRouter};
use crate::sparsify::{spanning_tree, TreeStrategy};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HierarchyParams {
    /// Rounds per game; `None` means `ceil(10 log2(n)^2)` for the cluster size.
    pub round_cap: Option<usize>,
    /// Clusters this small are refined to singletons without a game.
    pub min_cluster: usize,
    /// A sparse cut whose smaller side holds less than this fraction of the
    /// volume is kept only if no better balanced one turns up within
    /// `balance_patience` further rounds.
    pub balance_target: f64,
    pub balance_patience: usize,
    pub conductance_threshold: f64,
    pub inner_epsilon: f64,
    /// Level cap; `None` means `4 ceil(log2 n)`.
    pub depth_cap: Option<usize>,
    /// The game stops early once random test vectors walked through the
    /// matchings have shrunk below this fraction of their norm.
    pub mixing_target: f64,
    pub test_vectors: usize,
}

impl Default for HierarchyParams {
    fn default() -> Self {
        HierarchyParams {
            round_cap: None,
            min_cluster: 4,
            balance_target: 0.25,
            balance_patience: 2,
            conductance_threshold: 0.2,
            inner_epsilon: 0.1,
            depth_cap: None,
            mixing_target: 0.05,
            test_vectors: 4,
        }
    }
}

pub fn default_round_cap(n: usize) -> usize {
    let l = (n.max(2) as f64).log2();
    (10.0 * l * l).ceil() as usize
}

pub fn default_depth_cap(n: usize) -> usize {
    4 * (n.max(2) as f64).log2().ceil() as usize
}

/// Flow/cut oracle used by the game, prepared once per cluster graph.
pub trait ClusterSolver {
    type Prepared: PreparedCluster;
    fn prepare(&mut self, cluster: &Graph, seed: u64) -> Result<Self::Prepared>;
}

pub trait PreparedCluster {
    fn solve(&mut self, b: &DemandVector, epsilon: f64) -> Result<FlowCutSolution>;

    /// Like `solve`, but may stop once routing `b` at congestion `level` is
    /// either achieved by the flow or refuted by the cut.
    fn decide(&mut self, b: &DemandVector, epsilon: f64, level: f64) -> Result<FlowCutSolution> {
        let _ = level;
        self.solve(b, epsilon)
    }

    /// Descent iterations spent so far.
    fn iterations(&self) -> usize {
        0
    }

    /// Solves that ended without meeting their epsilon.
    fn unconverged(&self) -> usize {
        0
    }
}

/// Exact flows from the max-flow oracle. Only sensible on small clusters.
#[derive(Debug, Clone, Copy, Default)]
pub struct ExactClusterSolver;

pub struct PreparedExact(Graph);

impl ClusterSolver for ExactClusterSolver {
    type Prepared = PreparedExact;
    fn prepare(&mut self, cluster: &Graph, _seed: u64) -> Result<PreparedExact> {
        Ok(PreparedExact(cluster.clone()))
    }
}

impl PreparedCluster for PreparedExact {
    fn solve(&mut self, b: &DemandVector, epsilon: f64) -> Result<FlowCutSolution> {
        let g = &self.0;
        let res = exact_opt_congestion(g, b)?;
        let congestion = g.congestion(res.witness_flow.as_slice());
        let cut_ratio = crate::graph::cut_ratio(g, b, &res.witness_cut)?;
        let mut s = FlowCutSolution {
            flow: res.witness_flow,
            cut: res.witness_cut,
            flow_congestion: congestion,
            cut_ratio,
            epsilon_achieved: crate::graph::achieved_epsilon(congestion, cut_ratio),
            converged: false,
            iterations: 0,
        };
        s.certify(epsilon);
        Ok(s)
    }
}

/// Descent solver with the spanning-tree approximator: singleton cuts plus the
/// subtree cuts of a maximum-capacity spanning tree.
#[derive(Debug, Clone, Copy)]
#[derive(Default)]
pub struct TreeClusterSolver {
    pub params: SolverParams,
}


/// A cluster graph with an approximator and tree router, ready for repeated solves.
pub struct PreparedApproximator {
    pub graph: Graph,
    pub op: CongestionApproximatorOp,
    router: TreeRouter,
    pub params: SolverParams,
    iterations: usize,
    unconverged: usize,
}

impl PreparedApproximator {
    pub fn new(graph: Graph, op: CongestionApproximatorOp, params: SolverParams) -> Result<Self> {
        let router = TreeRouter::for_graph(&graph)?;
        Ok(PreparedApproximator {
            graph,
            op,
            router,
            params,
            iterations: 0,
            unconverged: 0,
        })
    }
}

impl PreparedApproximator {
    fn run(&mut self, b: &DemandVector, params: SolverParams) -> Result<FlowCutSolution> {
        let solver = FlowSolver::with_router(&self.graph, &self.op, self.router.clone(), params)?;
        let s = solver.solve(b)?.solution;
        self.iterations += s.iterations;
        let decided = params
            .decision
            .is_some_and(|t| s.flow_congestion <= t || s.cut_ratio > t);
        if !s.converged && !decided {
            self.unconverged += 1;
        }
        Ok(s)
    }
}

impl PreparedCluster for PreparedApproximator {
    fn solve(&mut self, b: &DemandVector, epsilon: f64) -> Result<FlowCutSolution> {
        let params = SolverParams {
            epsilon,
            decision: None,
            ..self.params
        };
        self.run(b, params)
    }

    fn decide(&mut self, b: &DemandVector, epsilon: f64, level: f64) -> Result<FlowCutSolution> {
        let params = SolverParams {
            epsilon,
            decision: Some(level),
            ..self.params
        };
        self.run(b, params)
    }

    fn iterations(&self) -> usize {
        self.iterations
    }

    fn unconverged(&self) -> usize {
        self.unconverged
    }
}

/// Spanning-tree and singleton approximator used for small instances.
pub fn tree_approximator(graph: &Graph) -> Result<CongestionApproximatorOp> {
    let tree = spanning_tree(graph, TreeStrategy::MaxCapacity, 0)?;
    let dt = DecompositionTree::from_spanning_tree(graph, &tree)?;
    let quality = graph.n().max(1) as f64;
    Ok(CongestionApproximatorOp::new(dt, quality))
}

impl ClusterSolver for TreeClusterSolver {
    type Prepared = PreparedApproximator;
    fn prepare(&mut self, cluster: &Graph, _seed: u64) -> Result<PreparedApproximator> {
        let op = tree_approximator(cluster)?;
        PreparedApproximator::new(cluster.clone(), op, self.params)
    }
}

/// Fractional matching: `(a, b, weight)` with per-vertex weight at most 1.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Matching {
    pub pairs: Vec<(usize, usize, f64)>,
}

impl Matching {
    /// `x <- x - L x / 2` for the weighted matching Laplacian `L`.
    pub fn walk(&self, x: &mut [f64]) {
        let mut delta = vec![0.0; x.len()];
        for &(a, b, w) in &self.pairs {
            let d = 0.5 * w * (x[b] - x[a]);
            delta[a] += d;
            delta[b] -= d;
        }
        for (v, d) in x.iter_mut().zip(delta) {
            *v += d;
        }
    }

    pub fn vertex_weights(&self, n: usize) -> Vec<f64> {
        let mut w = vec![0.0; n];
        for &(a, b, x) in &self.pairs {
            w[a] += x;
            w[b] += x;
        }
        w
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct CutMatchingState {
    pub round: usize,
    pub matchings: Vec<Matching>,
    pub potential_vector: Vec<f64>,
}

impl CutMatchingState {
    fn walk(&self, x: &mut [f64]) {
        for m in &self.matchings {
            m.walk(x);
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum GameOutcome {
    SparseCut { cut: CutSet, conductance: f64, rounds: usize },
    /// `forced` is set when the round cap ended the game before mixing.
    Expander { state: CutMatchingState, forced: bool },
}

/// `u(S) / min(vol(S), vol(V \ S))` on `graph` with the given vertex volumes.
pub fn conductance(graph: &Graph, volumes: &[f64], cut: &CutSet) -> f64 {
    let mask = cut.mask(graph.n());
    let cap = crate::graph::cut_capacity_mask(graph, &mask);
    let inside: f64 = cut.vertices().iter().map(|&v| volumes[v]).sum();
    let total: f64 = volumes.iter().sum();
    let small = inside.min(total - inside);
    if small <= 0.0 {
        return f64::INFINITY;
    }
    cap / small
}

/// Brute-force minimum conductance over all proper cuts (small graphs only).
pub fn min_conductance_brute_force(graph: &Graph, volumes: &[f64]) -> Result<(CutSet, f64)> {
    let n = graph.n();
    if !(2..=20).contains(&n) {
        return Err(FlowError::domain("brute force needs 2 to 20 vertices"));
    }
    let mut best: Option<(CutSet, f64)> = None;
    for bits in 1u32..(1u32 << (n - 1)) {
        let set = CutSet::new((0..n).filter(|&v| bits >> v & 1 == 1).collect());
        let c = conductance(graph, volumes, &set);
        if best.as_ref().is_none_or(|(_, b)| c < *b) {
            best = Some((set, c));
        }
    }
    Ok(best.unwrap())
}

/// Splits a flow routing `b` into source-to-sink paths: `(source, sink, amount)`.
/// Flow cycles are cancelled along the way.
pub fn decompose_paths(graph: &Graph, flow: &[f64], b: &[f64]) -> Vec<(usize, usize, f64)> {
    let n = graph.n();
    let scale = b.iter().fold(0.0f64, |a, x| a.max(x.abs()));
    let tol = 1e-12 * scale.max(f64::MIN_POSITIVE);
    // Directed arcs carrying positive flow.
    let mut arcs_of: Vec<Vec<usize>> = vec![Vec::new(); n];
    let mut arc_to = Vec::new();
    let mut arc_amt = Vec::new();
    for (e, &f) in graph.edges().iter().zip(flow) {
        if f.abs() <= tol {
            continue;
        }
        let (from, to) = if f > 0.0 { (e.tail, e.head) } else { (e.head, e.tail) };
        arcs_of[from].push(arc_to.len());
        arc_to.push(to);
        arc_amt.push(f.abs());
    }
    let mut next = vec![0usize; n];
    let mut excess: Vec<f64> = b.iter().map(|&x| x.max(0.0)).collect();
    let mut deficit: Vec<f64> = b.iter().map(|&x| (-x).max(0.0)).collect();
    let mut on_path = vec![usize::MAX; n];
    let mut out = Vec::new();

    for s in 0..n {
        while excess[s] > tol {
            let mut verts = vec![s];
            let mut path_arcs: Vec<usize> = Vec::new();
            on_path[s] = 0;
            let mut found = None;
            loop {
                let v = *verts.last().unwrap();
                if v != s && deficit[v] > tol {
                    found = Some(v);
                    break;
                }
                while next[v] < arcs_of[v].len() && arc_amt[arcs_of[v][next[v]]] <= tol {
                    next[v] += 1;
                }
                if next[v] == arcs_of[v].len() {
                    break;
                }
                let a = arcs_of[v][next[v]];
                let w = arc_to[a];
                if on_path[w] != usize::MAX {
                    // Cancel the cycle w -> ... -> v -> w.
                    let start = on_path[w];
                    let cyc: Vec<usize> = path_arcs[start..].iter().copied().chain([a]).collect();
                    let amt = cyc.iter().map(|&c| arc_amt[c]).fold(f64::INFINITY, f64::min);
                    for &c in &cyc {
                        arc_amt[c] -= amt;
                    }
                    for &u in &verts[start + 1..] {
                        on_path[u] = usize::MAX;
                    }
                    verts.truncate(start + 1);
                    path_arcs.truncate(start);
                    continue;
                }
                on_path[w] = verts.len();
                verts.push(w);
                path_arcs.push(a);
            }
            for &u in &verts {
                on_path[u] = usize::MAX;
            }
            let Some(t) = found else {
                // Only numerical dust is left at this source.
                excess[s] = 0.0;
                break;
            };
            let amt = path_arcs
                .iter()
                .map(|&c| arc_amt[c])
                .fold(excess[s].min(deficit[t]), f64::min);
            for &c in &path_arcs {
                arc_amt[c] -= amt;
            }
            excess[s] -= amt;
            deficit[t] -= amt;
            out.push((s, t, amt));
        }
    }
    out
}

fn centered_gaussian(n: usize, rng: &mut impl Rng) -> Vec<f64> {
    let mut x: Vec<f64> = (0..n).map(|_| rng.sample(StandardNormal)).collect();
    let mean = x.iter().sum::<f64>() / n as f64;
    for v in x.iter_mut() {
        *v -= mean;
    }
    x
}

fn norm(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum::<f64>().sqrt()
}

/// Best cuts among the prefixes of `order`: the minimum-conductance prefix and
/// the most balanced prefix below `threshold`.
fn sweep_conductance(
    graph: &Graph,
    volumes: &[f64],
    order: &[usize],
    threshold: f64,
) -> (Option<(usize, f64)>, Option<(usize, f64, f64)>) {
    let n = graph.n();
    let total: f64 = volumes.iter().sum();
    let mut inside = vec![false; n];
    let (mut cap, mut vol) = (0.0, 0.0);
    let mut min_cond: Option<(usize, f64)> = None;
    let mut balanced: Option<(usize, f64, f64)> = None;
    for (i, &v) in order[..n - 1].iter().enumerate() {
        inside[v] = true;
        vol += volumes[v];
        for inc in graph.incident(v) {
            let e = graph.edge(inc.edge);
            if inside[e.other(v)] {
                cap -= e.capacity;
            } else {
                cap += e.capacity;
            }
        }
        let small = vol.min(total - vol);
        if small <= 0.0 {
            continue;
        }
        let c = cap.max(0.0) / small;
        if min_cond.is_none_or(|(_, b)| c < b) {
            min_cond = Some((i + 1, c));
        }
        let bal = small / total;
        if c < threshold && balanced.is_none_or(|(_, _, b)| bal > b) {
            balanced = Some((i + 1, c, bal));
        }
    }
    (min_cond, balanced)
}

/// Runs the cut-matching game on a connected cluster graph.
///
/// `volumes` weights the vertices (host-graph degrees); `None` uses the
/// cluster's own weighted degrees.
pub fn cut_matching_game<P: PreparedCluster>(
    graph: &Graph,
    volumes: Option<&[f64]>,
    solver: &mut P,
    params: &HierarchyParams,
    seed: u64,
) -> Result<GameOutcome> {
    let n = graph.n();
    if n < 2 {
        return Err(FlowError::domain("cut-matching game needs at least two vertices"));
    }
    let own: Vec<f64>;
    let volumes = match volumes {
        Some(v) if v.len() == n => v,
        Some(v) => {
            return Err(FlowError::Dimension {
                expected: n,
                actual: v.len(),
            })
        }
        None => {
            own = (0..n).map(|v| graph.weighted_degree(v)).collect();
            &own
        }
    };
    if volumes.iter().any(|&v| !(v > 0.0)) {
        return Err(FlowError::domain("vertex volumes must be positive"));
    }
    let total_vol: f64 = volumes.iter().sum();
    let thr = params.conductance_threshold;

    let (comp, count) = graph.components();
    if count > 1 {
        let cut = CutSet::from_mask(&comp.iter().map(|&c| c == comp[0]).collect::<Vec<_>>());
        return Ok(GameOutcome::SparseCut {
            cut,
            conductance: 0.0,
            rounds: 0,
        });
    }

    let round_cap = if n == 2 {
        1
    } else {
        params.round_cap.unwrap_or_else(|| default_round_cap(n)).max(1)
    };
    let mut rng = seeded(seed);
    let mut tests: Vec<Vec<f64>> = (0..params.test_vectors.max(1))
        .map(|_| centered_gaussian(n, &mut rng))
        .collect();
    let test_norms: Vec<f64> = tests.iter().map(|t| norm(t)).collect();
    let mut state = CutMatchingState::default();
    // Best sparse cut so far: (cut, conductance, balance, round found).
    let mut pending: Option<(CutSet, f64, f64, usize)> = None;

    let offer = |pending: &mut Option<(CutSet, f64, f64, usize)>, cut: CutSet, c: f64, round: usize| {
        if !(c < thr) || !cut.is_proper(n) {
            return;
        }
        let inside: f64 = cut.vertices().iter().map(|&v| volumes[v]).sum();
        let bal = inside.min(total_vol - inside) / total_vol;
        if pending.as_ref().is_none_or(|p| bal > p.2) {
            *pending = Some((cut, c, bal, round));
        }
    };

    for round in 1..=round_cap {
        state.round = round;
        let mut r = centered_gaussian(n, &mut rng);
        state.walk(&mut r);
        let mut order: Vec<usize> = (0..n).collect();
        order.shuffle(&mut rng);
        order.sort_by(|&a, &b| r[a].total_cmp(&r[b]));
        state.potential_vector = r;

        let half = n / 2;
        let vol_a: f64 = order[..half].iter().map(|&v| volumes[v]).sum();
        let vol_b = total_vol - vol_a;
        let mut b = vec![0.0; n];
        for &v in &order[..half] {
            b[v] = volumes[v];
        }
        for &v in &order[half..] {
            b[v] = -volumes[v] * vol_a / vol_b;
        }
        let b = DemandVector(b);
        let sol = solver.decide(&b, params.inner_epsilon, 1.0 / thr)?;

        if sol.cut.is_proper(n) {
            let c = conductance(graph, volumes, &sol.cut);
            offer(&mut pending, sol.cut.clone(), c, round);
        }
        let (min_cond, balanced) = sweep_conductance(graph, volumes, &order, thr);
        if let Some((k, c, _)) = balanced {
            offer(&mut pending, CutSet::new(order[..k].to_vec()), c, round);
        } else if let Some((k, c)) = min_cond {
            offer(&mut pending, CutSet::new(order[..k].to_vec()), c, round);
        }
        if let Some(p) = &pending {
            if p.2 >= params.balance_target || round >= p.3 + params.balance_patience {
                let (cut, conductance, _, _) = pending.unwrap();
                return Ok(GameOutcome::SparseCut {
                    cut,
                    conductance,
                    rounds: round,
                });
            }
        }

        let paths = decompose_paths(graph, sol.flow.as_slice(), b.as_slice());
        let pairs = paths
            .into_iter()
            .map(|(s, t, x)| (s, t, x / b.0[s].abs().max(b.0[t].abs())))
            .collect();
        let matching = Matching { pairs };
        for t in tests.iter_mut() {
            matching.walk(t);
        }
        state.matchings.push(matching);

        let mixed = tests
            .iter()
            .zip(&test_norms)
            .all(|(t, &n0)| norm(t) <= params.mixing_target * n0);
        if mixed {
            break;
        }
    }
    if let Some((cut, conductance, _, _)) = pending {
        return Ok(GameOutcome::SparseCut {
            cut,
            conductance,
            rounds: state.round,
        });
    }
    let forced = state.round >= round_cap && round_cap > 1;
    Ok(GameOutcome::Expander { state, forced })
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct HierarchyStats {
    pub games: usize,
    pub rounds: usize,
    pub sparse_cuts: usize,
    pub expanders: usize,
    pub forced_expanders: usize,
    pub disconnected_splits: usize,
    pub solver_iterations: usize,
    pub unconverged_solves: usize,
    /// Induced edges summed over the clusters of each level.
    pub level_edges: Vec<usize>,
}

#[derive(Debug, Clone)]
pub struct HierarchyBuild {
    pub tree: DecompositionTree,
    pub stats: HierarchyStats,
}

/// Builds the cluster hierarchy of a connected graph.
pub fn build_hierarchy<S: ClusterSolver>(
    graph: &Graph,
    solver: &mut S,
    params: &HierarchyParams,
    seed: u64,
) -> Result<DecompositionTree> {
    Ok(build_hierarchy_with_stats(graph, solver, params, seed)?.tree)
}

pub fn build_hierarchy_with_stats<S: ClusterSolver>(
    graph: &Graph,
    solver: &mut S,
    params: &HierarchyParams,
    seed: u64,
) -> Result<HierarchyBuild> {
    let n = graph.n();
    if n == 0 {
        return Err(FlowError::domain("empty graph"));
    }
    if !graph.is_connected() {
        return Err(FlowError::Disconnected);
    }
    let depth_cap = params.depth_cap.unwrap_or_else(|| default_depth_cap(n)).max(2);
    let volumes: Vec<f64> = (0..n).map(|v| graph.weighted_degree(v)).collect();
    let mut stats = HierarchyStats::default();
    let mut parents: Vec<Option<usize>> = vec![None];
    let mut leaf = vec![usize::MAX; n];
    // (vertices, node, level, seed)
    let mut work: Vec<(Vec<usize>, usize, usize, u64)> = vec![((0..n).collect(), 0, 0, seed)];

    while let Some((cluster, node, level, cseed)) = work.pop() {
        let (sub, _) = graph.induced(&cluster);
        if stats.level_edges.len() <= level {
            stats.level_edges.resize(level + 1, 0);
        }
        stats.level_edges[level] += sub.m();
        if cluster.len() == 1 {
            leaf[cluster[0]] = node;
            continue;
        }
        let mut spawn = |parents: &mut Vec<Option<usize>>, members: Vec<usize>, salt: u64| {
            parents.push(Some(node));
            let id = parents.len() - 1;
            work.push((members, id, level + 1, derive_seed(cseed, salt)));
        };
        if cluster.len() <= params.min_cluster || level + 2 >= depth_cap {
            for (i, &v) in cluster.iter().enumerate() {
                spawn(&mut parents, vec![v], i as u64);
            }
            continue;
        }
        let (comp, count) = sub.components();
        if count > 1 {
            stats.disconnected_splits += 1;
            let mut groups = vec![Vec::new(); count];
            for (i, &v) in cluster.iter().enumerate() {
                groups[comp[i]].push(v);
            }
            for (i, g) in groups.into_iter().enumerate() {
                spawn(&mut parents, g, i as u64);
            }
            continue;
        }
        let local_vol: Vec<f64> = cluster.iter().map(|&v| volumes[v]).collect();
        let mut prepared = solver.prepare(&sub, derive_seed(cseed, 0xc1))?;
        let outcome = cut_matching_game(&sub, Some(&local_vol), &mut prepared, params, derive_seed(cseed, 0x9a))?;
        stats.games += 1;
        stats.solver_iterations += prepared.iterations();
        stats.unconverged_solves += prepared.unconverged();
        match outcome {
            GameOutcome::SparseCut { cut, rounds, .. } => {
                stats.rounds += rounds;
                stats.sparse_cuts += 1;
                let mask = cut.mask(cluster.len());
                let (mut inside, mut outside) = (Vec::new(), Vec::new());
                for (i, &v) in cluster.iter().enumerate() {
                    if mask[i] {
                        inside.push(v);
                    } else {
                        outside.push(v);
                    }
                }
                spawn(&mut parents, inside, 1);
                spawn(&mut parents, outside, 2);
            }
            GameOutcome::Expander { state, forced } => {
                stats.rounds += state.round;
                stats.expanders += 1;
                if forced {
                    stats.forced_expanders += 1;
                }
                for (i, &v) in cluster.iter().enumerate() {
                    spawn(&mut parents, vec![v], i as u64);
                }
            }
        }
    }
    let bound = 2 * graph.m();
    if let Some(level) = stats.level_edges.iter().position(|&e| e > bound) {
        return Err(FlowError::Postcondition(format!(
            "level {level} holds {} cluster edges, more than 2m = {bound}",
            stats.level_edges[level]
        )));
    }
    let tree = DecompositionTree::from_parents(graph, &parents, &leaf)?;
    Ok(HierarchyBuild { tree, stats })
}

/// Quality estimate recorded on a built hierarchy: levels over threshold.
pub fn hierarchy_quality(tree: &DecompositionTree, params: &HierarchyParams) -> f64 {
    (tree.depth().max(1) as f64 / params.conductance_threshold).max(1.0)
}

/// Ratio of the largest to the smallest `opt(b) / ||Rb||_inf` over sampled
/// demands: alternating random `+1/-1` pairs and Gaussian zero-sum vectors.
pub fn empirical_quality(
    op: &CongestionApproximatorOp,
    graph: &Graph,
    trials: usize,
    seed: u64,
) -> Result<f64> {
    let n = graph.n();
    if n > 64 {
        return Err(FlowError::domain("empirical quality needs n <= 64"));
    }
    if n < 2 {
        return Ok(1.0);
    }
    let mut rng = seeded(seed);
    let (mut lo, mut hi) = (f64::INFINITY, 0.0f64);
    for t in 0..trials.max(1) {
        let b = if t % 2 == 0 {
            let s = rng.gen_range(0..n);
            let mut d = rng.gen_range(0..n - 1);
            if d >= s {
                d += 1;
            }
            DemandVector::st(n, s, d, 1.0)
        } else {
            DemandVector(centered_gaussian(n, &mut rng))
        };
        let opt = exact_opt_congestion(graph, &b)?.value;
        let rb = op.apply(&b)?.iter().fold(0.0f64, |a, x| a.max(x.abs()));
        if opt == 0.0 || !opt.is_finite() {
            continue;
        }
        if rb == 0.0 {
            return Ok(f64::INFINITY);
        }
        let r = opt / rb;
        lo = lo.min(r);
        hi = hi.max(r);
    }
    if hi == 0.0 {
        return Ok(1.0);
    }
    Ok(hi / lo)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::generate::{generate, Capacities, Family};
    use crate::graph::cut_capacity;

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

    fn complete(k: usize) -> Graph {
        let mut t = Vec::new();
        for a in 0..k {
            for b in a + 1..k {
                t.push((a, b, 1.0));
            }
        }
        Graph::from_triples(k, &t).unwrap()
    }

    #[test]
    fn single_edge_hierarchy() {
        let g = Graph::from_triples(2, &[(0, 1, 3.0)]).unwrap();
        let tree = build_hierarchy(&g, &mut TreeClusterSolver::default(), &HierarchyParams::default(), 1).unwrap();
        assert_eq!(tree.node_count(), 3);
        assert_eq!(tree.nodes()[1].boundary_capacity, 3.0);
        assert_eq!(tree.nodes()[2].boundary_capacity, 3.0);
    }

    #[test]
    fn dumbbell_triangles_split_at_bridge() {
        let g = cliques_with_bridge(3);
        let vol: Vec<f64> = (0..6).map(|v| g.weighted_degree(v)).collect();
        let (best, _) = min_conductance_brute_force(&g, &vol).unwrap();
        let tree = build_hierarchy(&g, &mut TreeClusterSolver::default(), &HierarchyParams::default(), 3).unwrap();
        let top: Vec<CutSet> = tree.nodes()[0]
            .children
            .iter()
            .map(|&c| tree.cluster_vertices(c))
            .collect();
        assert_eq!(top.len(), 2);
        assert!(top.contains(&best) || top.contains(&best.complement(6)));
        assert_eq!(best, CutSet::new(vec![0, 1, 2]));
    }

    #[test]
    fn game_on_two_vertices_is_one_round() {
        let g = Graph::from_triples(2, &[(0, 1, 1.0)]).unwrap();
        let mut p = TreeClusterSolver::default().prepare(&g, 0).unwrap();
        match cut_matching_game(&g, None, &mut p, &HierarchyParams::default(), 0).unwrap() {
            GameOutcome::Expander { state, forced } => {
                assert_eq!(state.round, 1);
                assert!(!forced);
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn k8_is_an_expander_and_cliques_split() {
        let k8 = complete(8);
        let vol: Vec<f64> = (0..8).map(|v| k8.weighted_degree(v)).collect();
        assert!(min_conductance_brute_force(&k8, &vol).unwrap().1 > 0.2);
        let params = HierarchyParams::default();
        for seed in 0..10 {
            let mut p = TreeClusterSolver::default().prepare(&k8, seed).unwrap();
            let out = cut_matching_game(&k8, None, &mut p, &params, seed).unwrap();
            assert!(matches!(out, GameOutcome::Expander { .. }), "{out:?}");
            let g = cliques_with_bridge(5);
            let mut p = TreeClusterSolver::default().prepare(&g, seed).unwrap();
            match cut_matching_game(&g, None, &mut p, &params, seed).unwrap() {
                GameOutcome::SparseCut { cut, .. } => {
                    let a = CutSet::new((0..5).collect());
                    assert!(cut == a || cut == a.complement(10), "{cut:?}");
                }
                other => panic!("{other:?}"),
            }
        }
    }

    #[test]
    fn grid_hierarchy_depth_and_capacities() {
        let g = generate(&Family::Grid2d { rows: 8, cols: 8 }, Capacities::Unit, 0).unwrap();
        let build = build_hierarchy_with_stats(&g, &mut TreeClusterSolver::default(), &HierarchyParams::default(), 7)
            .unwrap();
        let tree = build.tree;
        assert!(tree.depth() <= 7, "depth {}", tree.depth());
        for (i, node) in tree.nodes().iter().enumerate().skip(1) {
            let cap = cut_capacity(&g, &tree.cluster_vertices(i)).unwrap();
            assert!((cap - node.boundary_capacity).abs() < 1e-9);
        }
        for level in tree.levels() {
            let mut seen = vec![false; g.n()];
            for id in level {
                for &v in tree.cluster_vertices(id).vertices() {
                    assert!(!seen[v]);
                    seen[v] = true;
                }
            }
        }
        assert!(build.stats.level_edges.iter().all(|&e| e <= 2 * g.m()));
    }

    #[test]
    fn path_decomposition_conserves() {
        let g = Graph::from_triples(4, &[(0, 1, 1.0), (1, 2, 1.0), (2, 3, 1.0), (3, 0, 1.0), (0, 2, 1.0)]).unwrap();
        // A flow with a circulation on top of a routing of b.
        let b = [2.0, -1.0, 0.0, -1.0];
        let flow = [1.5, 0.5, 0.0, -1.0, -0.5];
        let div = g.divergence(&flow);
        for (d, x) in div.iter().zip(b) {
            assert!((d - x).abs() < 1e-12);
        }
        let paths = decompose_paths(&g, &flow, &b);
        let mut got = [0.0; 4];
        for (s, t, x) in paths {
            got[s] += x;
            got[t] -= x;
        }
        for (g, x) in got.iter().zip(b) {
            assert!((g - x).abs() < 1e-12);
        }
    }

    #[test]
    fn empirical_quality_examples() {
        let g = Graph::from_triples(2, &[(0, 1, 1.0)]).unwrap();
        let op = CongestionApproximatorOp::new(DecompositionTree::singletons(&g).unwrap(), 1.0);
        assert!((empirical_quality(&op, &g, 20, 1).unwrap() - 1.0).abs() < 1e-6);
        let g = Graph::from_triples(3, &[(0, 1, 2.0), (1, 2, 1.0)]).unwrap();
        let op = CongestionApproximatorOp::new(DecompositionTree::singletons(&g).unwrap(), 1.0);
        assert!((empirical_quality(&op, &g, 40, 2).unwrap() - 1.0).abs() < 1e-6);
    }

    #[test]
    fn grid_quality_within_recorded_bound() {
        let g = generate(&Family::Grid2d { rows: 6, cols: 6 }, Capacities::Unit, 0).unwrap();
        let params = HierarchyParams::default();
        let tree = build_hierarchy(&g, &mut TreeClusterSolver::default(), &params, 2).unwrap();
        let q = hierarchy_quality(&tree, &params);
        let op = CongestionApproximatorOp::new(tree, q);
        let alpha = empirical_quality(&op, &g, 30, 4).unwrap();
        assert!(alpha.is_finite() && alpha >= 1.0 - 1e-9 && alpha <= op.quality(), "{alpha} vs {}", op.quality());
    }

    #[test]
    fn deterministic() {
        let g = generate(&Family::RandomGnm { n: 40, m: 120 }, Capacities::Unit, 3).unwrap();
        let p = HierarchyParams::default();
        let a = build_hierarchy(&g, &mut TreeClusterSolver::default(), &p, 9).unwrap();
        let b = build_hierarchy(&g, &mut TreeClusterSolver::default(), &p, 9).unwrap();
        assert_eq!(a.export(), b.export());
    }
}
