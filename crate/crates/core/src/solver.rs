//! Flow/cut solver driven by a congestion approximator.
//!
//! Minimises the smoothed potential
//!
//! ```text
//! phi(f) = lmax(s f / u) + lmax(2 alpha R (s b - A f))
//! ```
//!
//! where `s` is a scale that is raised whenever `phi` drops below a target
//! level, so the soft maxima track the true maxima within a `1 + eps` factor.
//! The gradient of the second term is a vertex potential `2 alpha R^T p`;
//! sweep cuts of it give the cut certificate. The flow left after descent is
//! cleaned up by an approximate electrical routing of its residual (a few
//! conjugate-gradient steps on the Laplacian), optional further descents on
//! the residual, and a final routing of what is left on a maximum-capacity
//! spanning tree, so the returned flow conserves `b` exactly.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::approximator::{root_tree, CongestionApproximatorOp};
use crate::error::{FlowError, Result};
use crate::graph::{achieved_epsilon, ratio, CutSet, DemandVector, Flow, FlowCutSolution, Graph};
use crate::sparsify::{spanning_tree, TreeStrategy};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolverParams {
    pub epsilon: f64,
    pub max_iters: usize,
    /// Used when the approximator does not carry a quality estimate worth trusting.
    pub alpha_hint: f64,
    /// Cap on the alpha used inside the potential.
    pub alpha_cap: f64,
    /// Target level of the potential is `scale_constant * ln(2 m) / eps`.
    pub scale_constant: f64,
    /// Initial step relative to `1 / (16 alpha)`.
    pub step_factor: f64,
    /// Iterations between certification checks.
    pub check_every: usize,
    /// Residual clean-up descents before tree routing.
    pub cleanup_rounds: usize,
    /// Conjugate-gradient steps spent routing a residual electrically. Zero
    /// leaves the residual to the descents and the tree.
    pub electrical_iters: usize,
    pub step_rule: StepRule,
    /// Stop as soon as the answer against this congestion level is settled:
    /// a conserving flow at or below it, or a cut whose ratio exceeds it.
    pub decision: Option<f64>,
    pub trace: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
pub enum StepRule {
    /// Capacity-scaled sign steps (steepest descent in the l_inf norm).
    Sign,
    /// Nesterov momentum on `f / u` with backtracking and restarts.
    #[default]
    Accelerated,
}

impl Default for SolverParams {
    fn default() -> Self {
        SolverParams {
            epsilon: 0.1,
            max_iters: 20_000,
            alpha_hint: 2.0,
            alpha_cap: 16.0,
            scale_constant: 2.0,
            step_factor: 1.0,
            check_every: 10,
            cleanup_rounds: 0,
            electrical_iters: 100,
            step_rule: StepRule::Accelerated,
            decision: None,
            trace: false,
        }
    }
}

impl SolverParams {
    pub fn with_epsilon(epsilon: f64) -> Self {
        SolverParams {
            epsilon,
            ..Default::default()
        }
    }

    fn validate(&self) -> Result<()> {
        if !(self.epsilon > 0.0 && self.epsilon.is_finite()) {
            return Err(FlowError::domain("epsilon must be positive"));
        }
        if self.max_iters == 0 {
            return Err(FlowError::domain("max_iters must be at least 1"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TraceRow {
    pub iter: usize,
    pub potential: f64,
    pub congestion: f64,
    pub best_cut_ratio: f64,
}

/// Writes `iter,potential,congestion,best_cut_ratio` rows with a header.
pub fn write_trace_csv<W: Write>(rows: &[TraceRow], mut out: W) -> std::io::Result<()> {
    writeln!(out, "iter,potential,congestion,best_cut_ratio")?;
    for r in rows {
        writeln!(
            out,
            "{},{},{},{}",
            r.iter, r.potential, r.congestion, r.best_cut_ratio
        )?;
    }
    Ok(())
}

#[derive(Debug, Clone)]
pub struct SolveOutcome {
    pub solution: FlowCutSolution,
    pub trace: Vec<TraceRow>,
}

/// `ln sum_i (exp(x_i) + exp(-x_i))`, shifted by `max |x_i|` against overflow.
pub fn lmax(x: &[f64]) -> f64 {
    let shift = x.iter().fold(0.0f64, |a, v| a.max(v.abs()));
    let sum: f64 = x
        .iter()
        .map(|v| (v - shift).exp() + (-v - shift).exp())
        .sum();
    shift + sum.ln()
}

/// `lmax(x)` and its gradient `(e^x - e^-x) / sum` written into `grad`.
pub fn lmax_with_grad(x: &[f64], grad: &mut [f64]) -> f64 {
    let shift = x.iter().fold(0.0f64, |a, v| a.max(v.abs()));
    let mut sum = 0.0;
    for (g, v) in grad.iter_mut().zip(x) {
        let (p, q) = ((v - shift).exp(), (-v - shift).exp());
        sum += p + q;
        *g = p - q;
    }
    for g in grad.iter_mut() {
        *g /= sum;
    }
    shift + sum.ln()
}

/// Best prefix cut `|b(S)| / u(S)` after sorting vertices by potential (ties by id).
/// A constant potential yields the best singleton cut.
pub fn extract_sweep_cut(graph: &Graph, potential: &[f64], b: &DemandVector) -> Result<(CutSet, f64)> {
    let n = graph.n();
    if potential.len() != n || b.len() != n {
        return Err(FlowError::Dimension {
            expected: n,
            actual: potential.len().min(b.len()),
        });
    }
    if n < 2 {
        return Err(FlowError::domain("need at least two vertices"));
    }
    if potential.iter().any(|p| !p.is_finite()) {
        return Err(FlowError::domain("potential must be finite"));
    }
    let (lo, hi) = potential
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &p| (a.min(p), b.max(p)));
    if lo == hi {
        return Ok(best_singleton(graph, b));
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &c| potential[a].total_cmp(&potential[c]).then(a.cmp(&c)));
    Ok(best_prefix(graph, &order, b.as_slice()))
}

fn best_singleton(graph: &Graph, b: &DemandVector) -> (CutSet, f64) {
    let mut best = (0, -1.0);
    for v in 0..graph.n() {
        let r = ratio(b.0[v].abs(), graph.weighted_degree(v));
        if r > best.1 {
            best = (v, r);
        }
    }
    (CutSet::new(vec![best.0]), best.1)
}

/// Best prefix cut of `order`; `O(m + n)`.
fn best_prefix(graph: &Graph, order: &[usize], b: &[f64]) -> (CutSet, f64) {
    let n = graph.n();
    let mut inside = vec![false; n];
    let (mut demand, mut cap) = (0.0, 0.0);
    let mut best = (1usize, -1.0);
    for (i, &v) in order[..n - 1].iter().enumerate() {
        inside[v] = true;
        demand += b[v];
        for inc in graph.incident(v) {
            let e = graph.edge(inc.edge);
            if inside[e.other(v)] {
                cap -= e.capacity;
            } else {
                cap += e.capacity;
            }
        }
        let r = ratio(demand.abs(), cap.max(0.0));
        if r > best.1 {
            best = (i + 1, r);
        }
    }
    // Recompute exactly for the chosen prefix to avoid drift in the running sums.
    let set = CutSet::new(order[..best.0].to_vec());
    let mask = set.mask(n);
    let cap = crate::graph::cut_capacity_mask(graph, &mask);
    let demand: f64 = set.vertices().iter().map(|&v| b[v]).sum();
    (set, ratio(demand.abs(), cap))
}

/// Routes a zero-sum demand along a fixed spanning tree.
#[derive(Debug, Clone)]
pub struct TreeRouter {
    /// Vertices in BFS order from the root.
    order: Vec<usize>,
    parent: Vec<Option<usize>>,
    /// Edge id to the parent and +1 if the child is the edge's tail.
    parent_edge: Vec<(usize, f64)>,
}

impl TreeRouter {
    /// Router on a maximum-capacity spanning tree.
    pub fn for_graph(graph: &Graph) -> Result<Self> {
        let tree = spanning_tree(graph, TreeStrategy::MaxCapacity, 0)?;
        Self::new(graph, &tree)
    }

    pub fn new(graph: &Graph, tree_edges: &[usize]) -> Result<Self> {
        let n = graph.n();
        let parent = root_tree(graph, tree_edges, 0)?;
        let mut parent_edge = vec![(usize::MAX, 0.0); n];
        for &id in tree_edges {
            let e = graph.edge(id);
            if parent[e.tail] == Some(e.head) && parent_edge[e.tail].0 == usize::MAX {
                parent_edge[e.tail] = (id, 1.0);
            } else if parent[e.head] == Some(e.tail) && parent_edge[e.head].0 == usize::MAX {
                parent_edge[e.head] = (id, -1.0);
            }
        }
        let mut children: Vec<Vec<usize>> = vec![Vec::new(); n];
        for v in 0..n {
            if let Some(p) = parent[v] {
                children[p].push(v);
            }
        }
        let mut order = vec![0];
        let mut head = 0;
        while head < order.len() {
            let v = order[head];
            head += 1;
            order.extend(children[v].iter().copied());
        }
        Ok(TreeRouter {
            order,
            parent,
            parent_edge,
        })
    }

    /// Adds the tree routing of `demand` to `flow`.
    pub fn route_into(&self, demand: &[f64], flow: &mut [f64]) {
        let mut acc = demand.to_vec();
        for &v in self.order.iter().rev() {
            if let Some(p) = self.parent[v] {
                let (id, sign) = self.parent_edge[v];
                flow[id] += sign * acc[v];
                acc[p] += acc[v];
            }
        }
    }
}

/// Reusable per-graph state: approximator, tree router and buffers.
pub struct FlowSolver<'a> {
    graph: &'a Graph,
    op: &'a CongestionApproximatorOp,
    router: TreeRouter,
    params: SolverParams,
    alpha: f64,
}

/// Adds an approximate electrical routing of the zero-sum `demand` to `flow`:
/// Jacobi-preconditioned conjugate gradients on the capacity-weighted
/// Laplacian, at most `iters` steps or until the residual drops by `tol`.
fn electrical_into(graph: &Graph, demand: &[f64], flow: &mut [f64], iters: usize, tol: f64) {
    let n = graph.n();
    let deg: Vec<f64> = (0..n).map(|v| graph.weighted_degree(v).max(f64::MIN_POSITIVE)).collect();
    let lap = |x: &[f64], out: &mut [f64]| {
        out.fill(0.0);
        for e in graph.edges() {
            let d = e.capacity * (x[e.tail] - x[e.head]);
            out[e.tail] += d;
            out[e.head] -= d;
        }
    };
    let norm = |x: &[f64]| x.iter().map(|v| v * v).sum::<f64>().sqrt();
    let mut phi = vec![0.0; n];
    let mut r = demand.to_vec();
    let mut z: Vec<f64> = r.iter().zip(&deg).map(|(a, d)| a / d).collect();
    let mut p = z.clone();
    let mut lp = vec![0.0; n];
    let mut rz: f64 = r.iter().zip(&z).map(|(a, b)| a * b).sum();
    let start = norm(&r);
    for _ in 0..iters {
        if norm(&r) <= tol * start {
            break;
        }
        lap(&p, &mut lp);
        let plp: f64 = p.iter().zip(&lp).map(|(a, b)| a * b).sum();
        if plp <= 0.0 {
            break;
        }
        let step = rz / plp;
        for i in 0..n {
            phi[i] += step * p[i];
            r[i] -= step * lp[i];
            z[i] = r[i] / deg[i];
        }
        let next: f64 = r.iter().zip(&z).map(|(a, b)| a * b).sum();
        let beta = next / rz;
        rz = next;
        for i in 0..n {
            p[i] = z[i] + beta * p[i];
        }
    }
    for (f, e) in flow.iter_mut().zip(graph.edges()) {
        *f += e.capacity * (phi[e.tail] - phi[e.head]);
    }
}

struct Buffers {
    x: Vec<f64>,
    qx: Vec<f64>,
    rows: Vec<f64>,
    qr: Vec<f64>,
    residual: Vec<f64>,
    vpot: Vec<f64>,
    grad: Vec<f64>,
}

impl<'a> FlowSolver<'a> {
    pub fn new(graph: &'a Graph, op: &'a CongestionApproximatorOp, params: SolverParams) -> Result<Self> {
        if !graph.is_connected() {
            return Err(FlowError::Disconnected);
        }
        Self::with_router(graph, op, TreeRouter::for_graph(graph)?, params)
    }

    /// Like [`FlowSolver::new`] with a router built earlier for `graph`.
    pub fn with_router(
        graph: &'a Graph,
        op: &'a CongestionApproximatorOp,
        router: TreeRouter,
        params: SolverParams,
    ) -> Result<Self> {
        params.validate()?;
        if op.n() != graph.n() {
            return Err(FlowError::Dimension {
                expected: graph.n(),
                actual: op.n(),
            });
        }
        let alpha = op.quality().min(params.alpha_cap).max(params.alpha_hint.min(params.alpha_cap)).max(1.0);
        Ok(FlowSolver {
            graph,
            op,
            router,
            params,
            alpha,
        })
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    fn buffers(&self) -> Buffers {
        let (m, n, r) = (self.graph.m(), self.graph.n(), self.op.rows());
        Buffers {
            x: vec![0.0; m],
            qx: vec![0.0; m],
            rows: vec![0.0; r],
            qr: vec![0.0; r],
            residual: vec![0.0; n],
            vpot: vec![0.0; n],
            grad: vec![0.0; m],
        }
    }

    /// Potential at `flow` for scaled demand `sb`; fills gradient and dual potential.
    fn evaluate(&self, flow: &[f64], sb: &[f64], buf: &mut Buffers, with_grad: bool) -> f64 {
        let g = self.graph;
        let two_alpha = 2.0 * self.alpha;
        for ((x, f), e) in buf.x.iter_mut().zip(flow).zip(g.edges()) {
            *x = f / e.capacity;
        }
        let first = lmax_with_grad(&buf.x, &mut buf.qx);
        buf.residual.copy_from_slice(sb);
        for (e, f) in g.edges().iter().zip(flow) {
            buf.residual[e.tail] -= f;
            buf.residual[e.head] += f;
        }
        self.op.apply_into(&buf.residual, &mut buf.rows);
        for r in buf.rows.iter_mut() {
            *r *= two_alpha;
        }
        let second = lmax_with_grad(&buf.rows, &mut buf.qr);
        if with_grad {
            self.op.transpose_apply_into(&buf.qr, &mut buf.vpot);
            for v in buf.vpot.iter_mut() {
                *v *= two_alpha;
            }
            for (id, e) in g.edges().iter().enumerate() {
                buf.grad[id] = buf.qx[id] / e.capacity - (buf.vpot[e.tail] - buf.vpot[e.head]);
            }
        }
        first + second
    }

    /// Starts a descent routing `b` at accuracy `eps`.
    fn start(&self, b: &[f64], eps: f64) -> Descent {
        let (m, n) = (self.graph.m(), self.graph.n());
        let mut buf = self.buffers();
        let target = self.params.scale_constant * ((2 * (m + self.op.rows())) as f64).ln() / eps;
        self.op.apply_into(b, &mut buf.rows);
        let rb = buf.rows.iter().fold(0.0f64, |a, x| a.max(x.abs()));
        let scale = if rb > 0.0 { target / (2.0 * self.alpha * rb) } else { 1.0 };
        let sb: Vec<f64> = b.iter().map(|x| x * scale).collect();
        let flow = vec![0.0; m];
        let phi = self.evaluate(&flow, &sb, &mut buf, true);
        Descent {
            sb,
            scale,
            target,
            eps,
            prev: flow.clone(),
            probe: vec![0.0; m],
            trial: vec![0.0; m],
            flow,
            momentum: 1.0,
            step: self.params.step_factor / (16.0 * self.alpha),
            phi,
            buf,
            iterations: 0,
            finished: rb == 0.0 || n < 2,
        }
    }

    /// Runs up to `iters` more descent steps. Sets `finished` once the
    /// gradient is small or no step decreases the potential.
    fn advance(&self, d: &mut Descent, iters: usize) {
        let g = self.graph;
        let grow = 17.0 / 16.0;
        let mut done = 0;
        while done < iters && !d.finished {
            while d.phi < d.target {
                for f in d.flow.iter_mut().chain(d.prev.iter_mut()).chain(d.sb.iter_mut()) {
                    *f *= grow;
                }
                d.scale *= grow;
                d.phi = self.evaluate(&d.flow, &d.sb, &mut d.buf, false);
            }
            done += 1;
            d.iterations += 1;
            let before = d.phi;
            match self.params.step_rule {
                StepRule::Sign => {
                    self.evaluate(&d.flow, &d.sb, &mut d.buf, true);
                    // Steepest descent in the capacity-weighted l_inf norm: every edge
                    // moves by the same fraction of its capacity, scaled by the dual norm.
                    let delta: f64 = d
                        .buf
                        .grad
                        .iter()
                        .zip(g.edges())
                        .map(|(gr, e)| (gr * e.capacity).abs())
                        .sum();
                    if delta < d.eps / 8.0 {
                        d.finished = true;
                        break;
                    }
                    loop {
                        let mv = d.step * delta;
                        for ((t, f), (gr, e)) in d.trial.iter_mut().zip(&d.flow).zip(d.buf.grad.iter().zip(g.edges())) {
                            *t = f - mv * e.capacity * gr.signum();
                        }
                        let next = self.evaluate(&d.trial, &d.sb, &mut d.buf, false);
                        if next <= d.phi {
                            std::mem::swap(&mut d.flow, &mut d.trial);
                            d.phi = next;
                            d.step *= 1.25;
                            break;
                        }
                        d.step *= 0.5;
                        if d.step < 1e-14 {
                            d.finished = true;
                            break;
                        }
                    }
                }
                StepRule::Accelerated => {
                    let next_momentum = 0.5 * (1.0 + (1.0 + 4.0 * d.momentum * d.momentum).sqrt());
                    let beta = (d.momentum - 1.0) / next_momentum;
                    for ((y, f), p) in d.probe.iter_mut().zip(&d.flow).zip(&d.prev) {
                        *y = f + beta * (f - p);
                    }
                    let phi_y = self.evaluate(&d.probe, &d.sb, &mut d.buf, true);
                    // Gradient in x = f / u.
                    let (mut sq, mut delta) = (0.0, 0.0);
                    for (gr, e) in d.buf.grad.iter().zip(g.edges()) {
                        let gx = gr * e.capacity;
                        sq += gx * gx;
                        delta += gx.abs();
                    }
                    if delta < d.eps / 8.0 && beta == 0.0 {
                        d.finished = true;
                        break;
                    }
                    let mut next;
                    loop {
                        for ((t, y), (gr, e)) in d.trial.iter_mut().zip(&d.probe).zip(d.buf.grad.iter().zip(g.edges())) {
                            *t = y - d.step * gr * e.capacity * e.capacity;
                        }
                        next = self.evaluate(&d.trial, &d.sb, &mut d.buf, false);
                        if next <= phi_y - 0.5 * d.step * sq || d.step < 1e-14 {
                            break;
                        }
                        d.step *= 0.5;
                    }
                    if next <= d.phi {
                        std::mem::swap(&mut d.prev, &mut d.flow);
                        d.flow.copy_from_slice(&d.trial);
                        d.phi = next;
                        d.momentum = next_momentum;
                        d.step *= 1.1;
                    } else {
                        // Restart the momentum from the current iterate.
                        d.prev.copy_from_slice(&d.flow);
                        d.momentum = 1.0;
                    }
                    if d.step < 1e-14 {
                        d.finished = true;
                    }
                }
            }
            assert!(d.phi <= before, "potential increased: {before} -> {}", d.phi);
        }
    }

    fn residual(&self, b: &[f64], flow: &[f64]) -> Vec<f64> {
        let div = self.graph.divergence(flow);
        b.iter().zip(div).map(|(b, d)| b - d).collect()
    }

    /// Flow plus an electrical and then a tree routing of its residual.
    fn conserving(&self, b: &[f64], flow: &[f64]) -> Vec<f64> {
        let mut out = flow.to_vec();
        if self.params.electrical_iters > 0 {
            let r = self.residual(b, flow);
            electrical_into(self.graph, &r, &mut out, self.params.electrical_iters, 1e-3);
        }
        let r = self.residual(b, &out);
        self.router.route_into(&r, &mut out);
        out
    }

    /// Turns an approximate routing into an exact one: coarse descents on the
    /// residual, each run until the residual shrinks under `R` by a fixed
    /// factor, then tree routing of what is left. Returns the flow and the
    /// iterations spent.
    fn polish(&self, b: &[f64], flow: &[f64], budget: usize) -> (Vec<f64>, usize) {
        let g = self.graph;
        let mut f = flow.to_vec();
        let allowed = g.congestion(flow) * (1.0 + self.params.epsilon / 4.0);
        let mut spent = 0;
        let mut rows = vec![0.0; self.op.rows()];
        for _ in 0..self.params.cleanup_rounds {
            let candidate = self.conserving(b, &f);
            if g.congestion(&candidate) <= allowed || spent >= budget {
                return (candidate, spent);
            }
            let r = self.residual(b, &f);
            self.op.apply_into(&r, &mut rows);
            let goal = max_abs(&rows) / 16.0;
            let mut d = self.start(&r, 1.0);
            while !d.finished && spent < budget {
                let before = d.iterations;
                self.advance(&mut d, 10.min(budget - spent));
                spent += d.iterations - before;
                let left = self.residual(&r, &d.flow());
                self.op.apply_into(&left, &mut rows);
                if max_abs(&rows) <= goal {
                    break;
                }
            }
            for (x, y) in f.iter_mut().zip(d.flow()) {
                *x += y;
            }
        }
        (self.conserving(b, &f), spent)
    }

    /// Solves the flow/cut problem for `b`.
    pub fn solve(&self, b: &DemandVector) -> Result<SolveOutcome> {
        let g = self.graph;
        let (n, m) = (g.n(), g.m());
        if b.len() != n {
            return Err(FlowError::Dimension {
                expected: n,
                actual: b.len(),
            });
        }
        if !b.is_balanced_on(g) {
            return Err(FlowError::domain("demand does not sum to zero"));
        }
        let eps = self.params.epsilon;
        let bs = b.as_slice();
        if b.max_abs() == 0.0 {
            return Ok(SolveOutcome {
                solution: FlowCutSolution {
                    flow: Flow::zeros(m),
                    cut: CutSet::new(vec![0]),
                    flow_congestion: 0.0,
                    cut_ratio: 0.0,
                    epsilon_achieved: 0.0,
                    converged: true,
                    iterations: 0,
                },
                trace: Vec::new(),
            });
        }

        // Lower bounds from the approximator rows and the singletons.
        let (row_value, row_cut) = self.op.max_row(b);
        let mut best_cut = match row_cut {
            Some(cut) => (cut, row_value),
            None => best_singleton(g, b),
        };
        let singleton = best_singleton(g, b);
        if singleton.1 > best_cut.1 {
            best_cut = singleton;
        }
        let mut best_flow = self.conserving(bs, &vec![0.0; m]);
        let mut best_cong = g.congestion(&best_flow);
        let mut trace = Vec::new();
        let level = self.params.decision;
        let done = |cong: f64, cut: f64| {
            cong <= (1.0 + eps) * cut || level.is_some_and(|t| cong <= t || cut > t)
        };

        let budget = self.params.max_iters;
        let mut total = 0;
        let mut main = self.start(bs, eps);
        let mut block = self.params.check_every.max(1);
        while !done(best_cong, best_cut.1) && total < budget {
            let before = main.iterations;
            self.advance(&mut main, block.min(budget - total));
            total += main.iterations - before;
            if let Ok(c) = extract_sweep_cut(g, &main.buf.vpot, b) {
                if c.1 > best_cut.1 {
                    best_cut = c;
                }
            }
            let cleanup_budget = block.max(16);
            let (candidate, spent) = self.polish(bs, &main.flow(), cleanup_budget);
            total += spent;
            let cong = g.congestion(&candidate);
            if cong < best_cong {
                best_cong = cong;
                best_flow = candidate;
            }
            if self.params.trace {
                trace.push(TraceRow {
                    iter: total,
                    potential: main.phi,
                    congestion: best_cong,
                    best_cut_ratio: best_cut.1,
                });
            }
            if main.finished {
                break;
            }
            block *= 2;
        }

        let mut solution = FlowCutSolution {
            flow: Flow(best_flow),
            cut: best_cut.0,
            flow_congestion: best_cong,
            cut_ratio: best_cut.1,
            epsilon_achieved: achieved_epsilon(best_cong, best_cut.1),
            converged: false,
            iterations: total,
        };
        solution.certify(eps);
        Ok(SolveOutcome { solution, trace })
    }
}

fn max_abs(x: &[f64]) -> f64 {
    x.iter().fold(0.0f64, |a, v| a.max(v.abs()))
}

/// Resumable state of one potential descent.
struct Descent {
    /// Scaled demand `scale * b`.
    sb: Vec<f64>,
    scale: f64,
    target: f64,
    eps: f64,
    flow: Vec<f64>,
    prev: Vec<f64>,
    probe: Vec<f64>,
    trial: Vec<f64>,
    momentum: f64,
    step: f64,
    phi: f64,
    buf: Buffers,
    iterations: usize,
    finished: bool,
}

impl Descent {
    /// Current flow for the unscaled demand.
    fn flow(&self) -> Vec<f64> {
        self.flow.iter().map(|f| f / self.scale).collect()
    }
}

/// One-shot solve of `b` on `graph` with approximator `op`.
pub fn approximator_max_flow(
    graph: &Graph,
    op: &CongestionApproximatorOp,
    params: &SolverParams,
    b: &DemandVector,
) -> Result<SolveOutcome> {
    FlowSolver::new(graph, op, *params)?.solve(b)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::approximator::DecompositionTree;
    use rand::Rng;

    #[test]
    fn lmax_values() {
        assert!((lmax(&[0.0]) - 2f64.ln()).abs() < 1e-15);
        let t = 800.0;
        assert!((lmax(&[t]) - t).abs() < 1e-12);
        let t = 3.0;
        assert!((lmax(&[t]) - (t + (1.0 + (-2.0 * t).exp()).ln())).abs() < 1e-12);
    }

    #[test]
    fn lmax_gradient_matches_finite_differences() {
        let mut rng = crate::rng::seeded(5);
        for _ in 0..20 {
            let x: Vec<f64> = (0..7).map(|_| rng.gen_range(-3.0..3.0)).collect();
            let mut grad = vec![0.0; 7];
            lmax_with_grad(&x, &mut grad);
            for i in 0..7 {
                let h = 1e-6;
                let mut up = x.clone();
                up[i] += h;
                let mut down = x.clone();
                down[i] -= h;
                let fd = (lmax(&up) - lmax(&down)) / (2.0 * h);
                assert!((fd - grad[i]).abs() < 1e-6, "{fd} vs {}", grad[i]);
            }
        }
    }

    #[test]
    fn sweep_on_path() {
        let g = Graph::from_triples(3, &[(0, 1, 2.0), (1, 2, 1.0)]).unwrap();
        let b = DemandVector(vec![1.0, 0.0, -1.0]);
        let (cut, r) = extract_sweep_cut(&g, &[0.0, 2.0, 3.0], &b).unwrap();
        assert_eq!(r, 1.0);
        assert!(cut == CutSet::new(vec![0, 1]) || cut == CutSet::new(vec![2]));
        let (cut, r) = extract_sweep_cut(&g, &[1.0; 3], &b).unwrap();
        assert_eq!((cut, r), (CutSet::new(vec![2]), 1.0));
    }

    #[test]
    fn tree_router_conserves() {
        let g = Graph::from_triples(4, &[(0, 1, 1.0), (2, 1, 1.0), (3, 2, 1.0)]).unwrap();
        let router = TreeRouter::new(&g, &[0, 1, 2]).unwrap();
        let b = [1.0, 0.5, -2.0, 0.5];
        let mut flow = vec![0.0; 3];
        router.route_into(&b, &mut flow);
        let div = g.divergence(&flow);
        for (d, x) in div.iter().zip(b) {
            assert!((d - x).abs() < 1e-12);
        }
    }

    #[test]
    fn single_edge() {
        let g = Graph::from_triples(2, &[(0, 1, 1.0)]).unwrap();
        let op = CongestionApproximatorOp::new(DecompositionTree::singletons(&g).unwrap(), 1.0);
        let out = approximator_max_flow(&g, &op, &SolverParams::default(), &DemandVector(vec![1.0, -1.0]))
            .unwrap();
        let s = out.solution;
        assert!(s.flow_congestion >= 1.0 - 1e-12 && s.flow_congestion <= 1.1);
        assert_eq!(s.cut_ratio, 1.0);
        assert!(s.converged);
    }

    #[test]
    fn four_cycle_splits() {
        let g = Graph::from_triples(4, &[(0, 1, 1.0), (1, 2, 1.0), (2, 3, 1.0), (3, 0, 1.0)]).unwrap();
        let op = CongestionApproximatorOp::new(DecompositionTree::singletons(&g).unwrap(), 1.0);
        let b = DemandVector(vec![2.0, 0.0, -2.0, 0.0]);
        let s = approximator_max_flow(&g, &op, &SolverParams::default(), &b)
            .unwrap()
            .solution;
        assert!(s.flow_congestion >= 1.0 - 1e-9 && s.flow_congestion <= 1.1, "{s:?}");
        assert!(s.converged);
    }

    #[test]
    fn rejects_unbalanced() {
        let g = Graph::from_triples(2, &[(0, 1, 1.0)]).unwrap();
        let op = CongestionApproximatorOp::new(DecompositionTree::singletons(&g).unwrap(), 1.0);
        assert!(approximator_max_flow(&g, &op, &SolverParams::default(), &DemandVector(vec![1.0, 0.0])).is_err());
        let mut p = SolverParams::default();
        p.epsilon = 0.0;
        assert!(FlowSolver::new(&g, &op, p).is_err());
    }
}
