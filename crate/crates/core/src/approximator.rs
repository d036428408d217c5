//! Cut-based congestion approximators.
//!
//! An approximator is a laminar family of vertex sets (a rooted cluster tree).
//! Every non-root cluster `S` contributes the row `b(S) / u(S)`, where `u(S)` is
//! the exact boundary capacity of `S` in the graph the operator was built for.
//! Because every row is a genuine cut ratio, `||R b||_inf <= opt(b)` holds for
//! any demand `b`, whatever the quality of the family.

use std::fmt::Write as _;
use std::sync::atomic::{AtomicU64, Ordering};

use crate::error::{FlowError, Result};
use crate::graph::{CutSet, DemandVector, Graph};

#[derive(Debug, Clone, PartialEq)]
pub struct ClusterNode {
    pub parent: Option<usize>,
    pub children: Vec<usize>,
    pub boundary_capacity: f64,
    pub member_count: usize,
}

/// Laminar cluster tree. Node 0 is the root (all vertices); every parent has a
/// smaller index than its children.
#[derive(Debug, Clone, PartialEq)]
pub struct DecompositionTree {
    nodes: Vec<ClusterNode>,
    leaf_assignment: Vec<usize>,
    depth: usize,
}

impl DecompositionTree {
    /// Builds a tree from an arbitrary parent array (exactly one `None`) and the
    /// smallest cluster of every vertex, then computes boundary capacities on `graph`.
    ///
    /// Nodes are renumbered breadth-first; clusters with no members are dropped.
    pub fn from_parents(
        graph: &Graph,
        parents: &[Option<usize>],
        leaf_of_vertex: &[usize],
    ) -> Result<Self> {
        let n = graph.n();
        if leaf_of_vertex.len() != n {
            return Err(FlowError::Dimension {
                expected: n,
                actual: leaf_of_vertex.len(),
            });
        }
        let k = parents.len();
        let mut roots = parents.iter().enumerate().filter(|(_, p)| p.is_none());
        let root = roots
            .next()
            .map(|(i, _)| i)
            .ok_or_else(|| FlowError::domain("cluster tree has no root"))?;
        if roots.next().is_some() {
            return Err(FlowError::domain("cluster tree has several roots"));
        }
        let mut children = vec![Vec::new(); k];
        for (i, p) in parents.iter().enumerate() {
            if let Some(p) = *p {
                if p >= k {
                    return Err(FlowError::domain("parent index out of range"));
                }
                children[p].push(i);
            }
        }
        let mut members = vec![0usize; k];
        for &leaf in leaf_of_vertex {
            if leaf >= k {
                return Err(FlowError::domain("leaf index out of range"));
            }
            members[leaf] += 1;
        }

        // Breadth-first order from the root.
        let mut order = Vec::with_capacity(k);
        order.push(root);
        let mut head = 0;
        while head < order.len() {
            let v = order[head];
            head += 1;
            order.extend(children[v].iter().copied());
        }
        if order.len() != k {
            return Err(FlowError::domain("cluster tree is not connected or has a cycle"));
        }
        for &v in order.iter().rev() {
            if let Some(p) = parents[v] {
                members[p] += members[v];
            }
        }
        if members[root] != n {
            return Err(FlowError::domain("root does not contain every vertex"));
        }

        // Drop empty clusters, then collapse chains of clusters with equal membership.
        let mut new_id = vec![usize::MAX; k];
        let mut nodes: Vec<ClusterNode> = Vec::with_capacity(k);
        for &v in &order {
            if members[v] == 0 {
                continue;
            }
            let parent = parents[v].map(|p| new_id[p]);
            if let Some(p) = parent {
                // A child covering its parent's whole vertex set adds no row.
                if nodes[p].member_count == members[v] {
                    new_id[v] = p;
                    continue;
                }
            }
            new_id[v] = nodes.len();
            if let Some(p) = parent {
                let id = nodes.len();
                nodes[p].children.push(id);
            }
            nodes.push(ClusterNode {
                parent,
                children: Vec::new(),
                boundary_capacity: 0.0,
                member_count: members[v],
            });
        }
        let leaf_assignment: Vec<usize> = leaf_of_vertex.iter().map(|&l| new_id[l]).collect();
        let mut tree = DecompositionTree {
            nodes,
            leaf_assignment,
            depth: 0,
        };
        tree.depth = tree.compute_depth();
        tree.recompute_capacities(graph);
        Ok(tree)
    }

    /// Root with one singleton child per vertex.
    pub fn singletons(graph: &Graph) -> Result<Self> {
        let n = graph.n();
        let mut parents = vec![None];
        parents.extend((0..n).map(|_| Some(0)));
        let leaf: Vec<usize> = (1..=n).collect();
        DecompositionTree::from_parents(graph, &parents, &leaf)
    }

    /// All singleton cuts plus every subtree cut of a spanning tree rooted at vertex 0.
    pub fn from_spanning_tree(graph: &Graph, tree_edges: &[usize]) -> Result<Self> {
        let n = graph.n();
        if n == 0 {
            return Err(FlowError::domain("empty graph"));
        }
        let parent_vertex = root_tree(graph, tree_edges, 0)?;
        let mut child_count = vec![0usize; n];
        for p in parent_vertex.iter().flatten() {
            child_count[*p] += 1;
        }
        // Node 0: root. Node 1 + v: subtree(v) (or the singleton for tree leaves).
        // Node 1 + n + v: singleton {v} for vertices with children.
        let mut parents: Vec<Option<usize>> = vec![None; 1 + 2 * n];
        let mut leaf = vec![0usize; n];
        for v in 0..n {
            parents[1 + v] = Some(match parent_vertex[v] {
                Some(p) if p != 0 => 1 + p,
                _ => 0,
            });
            if child_count[v] > 0 {
                parents[1 + n + v] = Some(1 + v);
                leaf[v] = 1 + n + v;
            } else {
                parents[1 + n + v] = Some(1 + v);
                leaf[v] = 1 + v;
            }
        }
        // The root vertex's subtree is V itself.
        parents[1] = Some(0);
        DecompositionTree::from_parents(graph, &parents, &leaf)
    }

    fn compute_depth(&self) -> usize {
        let mut level = vec![0usize; self.nodes.len()];
        let mut deepest = 0;
        for i in 1..self.nodes.len() {
            let p = self.nodes[i].parent.expect("non-root has a parent");
            level[i] = level[p] + 1;
            deepest = deepest.max(level[i]);
        }
        deepest + 1
    }

    /// Recomputes every boundary capacity on `graph` in `O(m log k + k)`.
    pub fn recompute_capacities(&mut self, graph: &Graph) {
        let k = self.nodes.len();
        let lca = Lca::new(&self.nodes);
        let mut acc = vec![0.0; k];
        for e in graph.edges() {
            let (a, b) = (self.leaf_assignment[e.tail], self.leaf_assignment[e.head]);
            if a == b {
                continue;
            }
            acc[a] += e.capacity;
            acc[b] += e.capacity;
            acc[lca.query(a, b)] -= 2.0 * e.capacity;
        }
        for i in (1..k).rev() {
            let p = self.nodes[i].parent.expect("non-root has a parent");
            acc[p] += acc[i];
        }
        for (node, cap) in self.nodes.iter_mut().zip(acc) {
            node.boundary_capacity = cap.max(0.0);
        }
        self.nodes[0].boundary_capacity = 0.0;
    }

    pub fn nodes(&self) -> &[ClusterNode] {
        &self.nodes
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn leaf_assignment(&self) -> &[usize] {
        &self.leaf_assignment
    }

    pub fn n(&self) -> usize {
        self.leaf_assignment.len()
    }

    /// Number of levels, root included.
    pub fn depth(&self) -> usize {
        self.depth
    }

    /// Vertex set of every node.
    pub fn clusters(&self) -> Vec<CutSet> {
        let mut sets: Vec<Vec<usize>> = vec![Vec::new(); self.nodes.len()];
        for (v, &leaf) in self.leaf_assignment.iter().enumerate() {
            let mut node = Some(leaf);
            while let Some(i) = node {
                sets[i].push(v);
                node = self.nodes[i].parent;
            }
        }
        sets.into_iter().map(CutSet::new).collect()
    }

    /// Vertex set of one node.
    pub fn cluster_vertices(&self, node: usize) -> CutSet {
        let k = self.nodes.len();
        let mut inside = vec![false; k];
        inside[node] = true;
        for i in node + 1..k {
            let p = self.nodes[i].parent.expect("non-root has a parent");
            inside[i] = inside[p];
        }
        CutSet::new(
            self.leaf_assignment
                .iter()
                .enumerate()
                .filter(|(_, &leaf)| inside[leaf])
                .map(|(v, _)| v)
                .collect(),
        )
    }

    /// Node indices grouped by distance from the root.
    pub fn levels(&self) -> Vec<Vec<usize>> {
        let mut level = vec![0usize; self.nodes.len()];
        let mut out: Vec<Vec<usize>> = vec![vec![0]];
        for i in 1..self.nodes.len() {
            let p = self.nodes[i].parent.expect("non-root has a parent");
            level[i] = level[p] + 1;
            if out.len() <= level[i] {
                out.push(Vec::new());
            }
            out[level[i]].push(i);
        }
        out
    }

    /// Line-oriented export: `t <node> <parent> <boundary_capacity> <member_count>`
    /// (root parent `-1`), then `l <vertex> <leaf_node>` with 1-based vertices.
    pub fn export(&self) -> String {
        let mut out = String::new();
        for (i, node) in self.nodes.iter().enumerate() {
            let parent = node.parent.map_or(-1, |p| p as i64);
            let _ = writeln!(
                out,
                "t {i} {parent} {} {}",
                node.boundary_capacity, node.member_count
            );
        }
        for (v, &leaf) in self.leaf_assignment.iter().enumerate() {
            let _ = writeln!(out, "l {} {leaf}", v + 1);
        }
        out
    }

    /// Reads the export format back, taking capacities from the text.
    pub fn parse_export(text: &str) -> Result<Self> {
        let mut nodes: Vec<ClusterNode> = Vec::new();
        let mut leaves: Vec<(usize, usize)> = Vec::new();
        for (idx, raw) in text.lines().enumerate() {
            let line_no = idx + 1;
            let f: Vec<&str> = raw.split_whitespace().collect();
            let bad = || FlowError::parse(line_no, "malformed tree line");
            match f.as_slice() {
                [] => {}
                ["t", id, parent, cap, count] => {
                    let id: usize = id.parse().map_err(|_| bad())?;
                    if id != nodes.len() {
                        return Err(FlowError::parse(line_no, "node ids must be consecutive"));
                    }
                    let parent: i64 = parent.parse().map_err(|_| bad())?;
                    let parent = if parent < 0 {
                        None
                    } else {
                        let p = parent as usize;
                        if p >= id {
                            return Err(FlowError::parse(line_no, "parent must precede child"));
                        }
                        Some(p)
                    };
                    if (parent.is_none()) != (id == 0) {
                        return Err(FlowError::parse(line_no, "only node 0 may be the root"));
                    }
                    nodes.push(ClusterNode {
                        parent,
                        children: Vec::new(),
                        boundary_capacity: cap.parse().map_err(|_| bad())?,
                        member_count: count.parse().map_err(|_| bad())?,
                    });
                    if let Some(p) = parent {
                        nodes[p].children.push(id);
                    }
                }
                ["l", v, leaf] => {
                    let v: usize = v.parse().map_err(|_| bad())?;
                    let leaf: usize = leaf.parse().map_err(|_| bad())?;
                    if v == 0 || leaf >= nodes.len() {
                        return Err(bad());
                    }
                    leaves.push((v - 1, leaf));
                }
                _ => return Err(bad()),
            }
        }
        let n = leaves.len();
        let mut leaf_assignment = vec![usize::MAX; n];
        for (v, leaf) in leaves {
            if v >= n || leaf_assignment[v] != usize::MAX {
                return Err(FlowError::domain("leaf lines must cover each vertex once"));
            }
            leaf_assignment[v] = leaf;
        }
        let mut tree = DecompositionTree {
            nodes,
            leaf_assignment,
            depth: 0,
        };
        tree.depth = tree.compute_depth();
        Ok(tree)
    }
}

/// Parent pointers of a spanning tree rooted at `root`.
pub(crate) fn root_tree(graph: &Graph, tree_edges: &[usize], root: usize) -> Result<Vec<Option<usize>>> {
    let n = graph.n();
    let mut adj: Vec<Vec<usize>> = vec![Vec::new(); n];
    for &id in tree_edges {
        let e = graph.edge(id);
        adj[e.tail].push(e.head);
        adj[e.head].push(e.tail);
    }
    let mut parent = vec![None; n];
    let mut seen = vec![false; n];
    seen[root] = true;
    let mut stack = vec![root];
    let mut count = 1;
    while let Some(v) = stack.pop() {
        for &w in &adj[v] {
            if !seen[w] {
                seen[w] = true;
                parent[w] = Some(v);
                count += 1;
                stack.push(w);
            }
        }
    }
    if count != n {
        return Err(FlowError::domain("edge set does not span the graph"));
    }
    Ok(parent)
}

/// Binary-lifting lowest common ancestor on a parent-before-child node array.
struct Lca {
    up: Vec<Vec<usize>>,
    depth: Vec<usize>,
}

impl Lca {
    fn new(nodes: &[ClusterNode]) -> Self {
        let k = nodes.len();
        let mut depth = vec![0usize; k];
        let mut first = vec![0usize; k];
        for i in 1..k {
            let p = nodes[i].parent.expect("non-root has a parent");
            depth[i] = depth[p] + 1;
            first[i] = p;
        }
        let max_depth = depth.iter().copied().max().unwrap_or(0);
        let levels = (usize::BITS - max_depth.leading_zeros()).max(1) as usize;
        let mut up = vec![first];
        for j in 1..levels {
            let prev = &up[j - 1];
            let next: Vec<usize> = (0..k).map(|i| prev[prev[i]]).collect();
            up.push(next);
        }
        Lca { up, depth }
    }

    fn query(&self, mut a: usize, mut b: usize) -> usize {
        if self.depth[a] < self.depth[b] {
            std::mem::swap(&mut a, &mut b);
        }
        let mut diff = self.depth[a] - self.depth[b];
        let mut j = 0;
        while diff > 0 {
            if diff & 1 == 1 {
                a = self.up[j][a];
            }
            diff >>= 1;
            j += 1;
        }
        if a == b {
            return a;
        }
        for j in (0..self.up.len()).rev() {
            if self.up[j][a] != self.up[j][b] {
                a = self.up[j][a];
                b = self.up[j][b];
            }
        }
        self.up[0][a]
    }
}

/// Linear operator `R` over the non-root clusters of a [`DecompositionTree`].
///
/// Row `i` (for node `i + 1`) is `b(S) / u(S)`. `quality` is the bookkeeping
/// estimate of the approximation factor used by the flow solver.
#[derive(Debug)]
pub struct CongestionApproximatorOp {
    tree: DecompositionTree,
    weights: Vec<f64>,
    quality: f64,
    ops: AtomicU64,
}

impl Clone for CongestionApproximatorOp {
    fn clone(&self) -> Self {
        CongestionApproximatorOp {
            tree: self.tree.clone(),
            weights: self.weights.clone(),
            quality: self.quality,
            ops: AtomicU64::new(self.ops.load(Ordering::Relaxed)),
        }
    }
}

impl CongestionApproximatorOp {
    pub fn new(tree: DecompositionTree, quality: f64) -> Self {
        let weights = tree
            .nodes
            .iter()
            .map(|node| {
                if node.boundary_capacity > 0.0 {
                    1.0 / node.boundary_capacity
                } else {
                    0.0
                }
            })
            .collect();
        CongestionApproximatorOp {
            tree,
            weights,
            quality: quality.max(1.0),
            ops: AtomicU64::new(0),
        }
    }

    pub fn tree(&self) -> &DecompositionTree {
        &self.tree
    }

    pub fn quality(&self) -> f64 {
        self.quality
    }

    pub fn with_quality(mut self, quality: f64) -> Self {
        self.quality = quality.max(1.0);
        self
    }

    pub fn n(&self) -> usize {
        self.tree.n()
    }

    pub fn rows(&self) -> usize {
        self.tree.nodes.len() - 1
    }

    /// Elementary steps performed by `apply` and `transpose_apply` so far.
    pub fn operation_count(&self) -> u64 {
        self.ops.load(Ordering::Relaxed)
    }

    pub fn reset_operation_count(&self) {
        self.ops.store(0, Ordering::Relaxed);
    }

    /// A cluster with zero boundary capacity but nonzero demand, if any.
    pub fn unroutable_cluster(&self, b: &DemandVector) -> Option<CutSet> {
        let sums = self.cluster_sums(b.as_slice());
        let tol = 1e-9 * b.max_abs().max(1.0);
        let clusters = self.tree.clusters();
        (1..self.tree.nodes.len())
            .find(|&i| self.tree.nodes[i].boundary_capacity <= 0.0 && sums[i].abs() > tol)
            .map(|i| clusters[i].clone())
    }

    /// `R b`, one bottom-up aggregation. Errors when a zero-capacity cluster
    /// carries demand (no finite congestion routes `b`).
    pub fn apply(&self, b: &DemandVector) -> Result<Vec<f64>> {
        if b.len() != self.n() {
            return Err(FlowError::Dimension {
                expected: self.n(),
                actual: b.len(),
            });
        }
        if let Some(cut) = self.unroutable_cluster(b) {
            return Err(FlowError::domain(format!(
                "cluster {:?} has demand but no boundary capacity",
                cut.vertices()
            )));
        }
        let mut out = vec![0.0; self.rows()];
        self.apply_into(b.as_slice(), &mut out);
        Ok(out)
    }

    /// `R^T y`, one top-down pass.
    pub fn transpose_apply(&self, y: &[f64]) -> Result<Vec<f64>> {
        if y.len() != self.rows() {
            return Err(FlowError::Dimension {
                expected: self.rows(),
                actual: y.len(),
            });
        }
        let mut out = vec![0.0; self.n()];
        self.transpose_apply_into(y, &mut out);
        Ok(out)
    }

    fn cluster_sums(&self, b: &[f64]) -> Vec<f64> {
        let k = self.tree.nodes.len();
        let mut acc = vec![0.0; k];
        for (v, &leaf) in self.tree.leaf_assignment.iter().enumerate() {
            acc[leaf] += b[v];
        }
        for i in (1..k).rev() {
            let p = self.tree.nodes[i].parent.expect("non-root has a parent");
            acc[p] += acc[i];
        }
        acc
    }

    /// Unchecked `R b` into a buffer of length `rows()`.
    pub(crate) fn apply_into(&self, b: &[f64], out: &mut [f64]) {
        let acc = self.cluster_sums(b);
        for i in 1..acc.len() {
            out[i - 1] = acc[i] * self.weights[i];
        }
        self.ops
            .fetch_add((self.n() + 2 * acc.len()) as u64, Ordering::Relaxed);
    }

    /// Unchecked `R^T y` into a buffer of length `n()`.
    pub(crate) fn transpose_apply_into(&self, y: &[f64], out: &mut [f64]) {
        let k = self.tree.nodes.len();
        let mut pot = vec![0.0; k];
        for i in 1..k {
            let p = self.tree.nodes[i].parent.expect("non-root has a parent");
            pot[i] = pot[p] + y[i - 1] * self.weights[i];
        }
        for (v, &leaf) in self.tree.leaf_assignment.iter().enumerate() {
            out[v] = pot[leaf];
        }
        self.ops.fetch_add((self.n() + k) as u64, Ordering::Relaxed);
    }

    /// `||R b||_inf` together with the cluster attaining it.
    pub fn max_row(&self, b: &DemandVector) -> (f64, Option<CutSet>) {
        let mut out = vec![0.0; self.rows()];
        self.apply_into(b.as_slice(), &mut out);
        let mut best = (0.0, None);
        for (i, &x) in out.iter().enumerate() {
            if x.abs() > best.0 {
                best = (x.abs(), Some(i + 1));
            }
        }
        let cut = best.1.map(|node| self.cluster_of(node));
        (best.0, cut)
    }

    pub(crate) fn cluster_of(&self, node: usize) -> CutSet {
        self.tree.cluster_vertices(node)
    }

    /// Dense `rows x n` matrix, for tests on small instances.
    pub fn materialize(&self) -> Vec<Vec<f64>> {
        let clusters = self.tree.clusters();
        (1..self.tree.nodes.len())
            .map(|i| {
                let mut row = vec![0.0; self.n()];
                for &v in clusters[i].vertices() {
                    row[v] = self.weights[i];
                }
                row
            })
            .collect()
    }
}
