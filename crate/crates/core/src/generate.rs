//! Deterministic instance generators.

use std::fmt;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{FlowError, Result};
use crate::graph::{DemandVector, Edge, Graph};
use crate::rng::seeded;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
pub enum Capacities {
    #[default]
    Unit,
    Uniform {
        lo: f64,
        hi: f64,
    },
}

impl Capacities {
    fn draw(&self, rng: &mut ChaCha8Rng) -> f64 {
        match *self {
            Capacities::Unit => 1.0,
            Capacities::Uniform { lo, hi } => rng.gen_range(lo..=hi),
        }
    }

    fn validate(&self) -> Result<()> {
        match *self {
            Capacities::Unit => Ok(()),
            Capacities::Uniform { lo, hi } if lo > 0.0 && hi >= lo && hi.is_finite() => Ok(()),
            Capacities::Uniform { .. } => Err(FlowError::domain("capacity range must be 0 < lo <= hi")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Family {
    /// Path `0 - 1 - ... - (n-1)`; explicit capacities override the capacity rule.
    Path { n: usize, caps: Option<Vec<f64>> },
    Grid2d { rows: usize, cols: usize },
    RandomGnm { n: usize, m: usize },
    /// Union of `degree / 2` random Hamiltonian cycles.
    ExpanderLike { n: usize, degree: usize },
    /// Random recursive tree plus `extra` random edges.
    TreePlusNoise { n: usize, extra: usize },
}

impl Family {
    pub fn name(&self) -> &'static str {
        match self {
            Family::Path { .. } => "path",
            Family::Grid2d { .. } => "grid2d",
            Family::RandomGnm { .. } => "random_gnm",
            Family::ExpanderLike { .. } => "expander_like",
            Family::TreePlusNoise { .. } => "tree_plus_noise",
        }
    }
}

impl Family {
    /// Parameters of the family `name` giving about `m` edges.
    pub fn with_edges(name: &str, m: usize) -> Result<Family> {
        let m = m.max(3);
        match name {
            "path" => Ok(Family::Path { n: m + 1, caps: None }),
            "grid2d" => {
                // 2 k (k - 1) edges on a k x k grid.
                let k = (0.5 + (0.25 + m as f64 / 2.0).sqrt()).round().max(2.0) as usize;
                Ok(Family::Grid2d { rows: k, cols: k })
            }
            "random_gnm" => Ok(Family::RandomGnm { n: (m / 4).max(2), m }),
            "expander_like" => Ok(Family::ExpanderLike { n: (m / 2).max(3), degree: 4 }),
            "tree_plus_noise" => {
                let n = (4 * m / 5).max(2);
                Ok(Family::TreePlusNoise { n, extra: m + 1 - n })
            }
            other => Err(FlowError::domain(format!("unknown family `{other}`"))),
        }
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Family::Path { n, .. } => write!(f, "path:{n}"),
            Family::Grid2d { rows, cols } => write!(f, "grid2d:{rows}x{cols}"),
            Family::RandomGnm { n, m } => write!(f, "random_gnm:{n},{m}"),
            Family::ExpanderLike { n, degree } => write!(f, "expander_like:{n},{degree}"),
            Family::TreePlusNoise { n, extra } => write!(f, "tree_plus_noise:{n},{extra}"),
        }
    }
}

impl FromStr for Family {
    type Err = FlowError;

    /// Parses `path:N`, `grid2d:RxC`, `random_gnm:N,M`, `expander_like:N,D`,
    /// `tree_plus_noise:N,K`.
    fn from_str(s: &str) -> Result<Self> {
        let (name, params) = s
            .split_once(':')
            .ok_or_else(|| FlowError::domain(format!("family spec `{s}` lacks `:params`")))?;
        let nums = |sep: char| -> Result<Vec<usize>> {
            params
                .split(sep)
                .map(|p| {
                    p.trim()
                        .parse::<usize>()
                        .map_err(|_| FlowError::domain(format!("bad parameter `{p}` in `{s}`")))
                })
                .collect()
        };
        let pair = |v: Vec<usize>| -> Result<(usize, usize)> {
            match v.as_slice() {
                [a, b] => Ok((*a, *b)),
                _ => Err(FlowError::domain(format!("`{s}` needs two parameters"))),
            }
        };
        match name {
            "path" => match nums(',')?.as_slice() {
                [n] => Ok(Family::Path { n: *n, caps: None }),
                _ => Err(FlowError::domain(format!("`{s}` needs one parameter"))),
            },
            "grid2d" => {
                let (rows, cols) = pair(nums('x')?)?;
                Ok(Family::Grid2d { rows, cols })
            }
            "random_gnm" => {
                let (n, m) = pair(nums(',')?)?;
                Ok(Family::RandomGnm { n, m })
            }
            "expander_like" => {
                let (n, degree) = pair(nums(',')?)?;
                Ok(Family::ExpanderLike { n, degree })
            }
            "tree_plus_noise" => {
                let (n, extra) = pair(nums(',')?)?;
                Ok(Family::TreePlusNoise { n, extra })
            }
            other => Err(FlowError::domain(format!("unknown family `{other}`"))),
        }
    }
}

/// Generates a connected instance; identical `(family, caps, seed)` gives identical output.
pub fn generate(family: &Family, caps: Capacities, seed: u64) -> Result<Graph> {
    caps.validate()?;
    let mut rng = seeded(seed);
    match family {
        Family::Path { n, caps: explicit } => {
            if *n < 2 {
                return Err(FlowError::domain("path needs n >= 2"));
            }
            let edge_caps: Vec<f64> = match explicit {
                Some(c) if c.len() == n - 1 => c.clone(),
                Some(_) => return Err(FlowError::domain("path needs n - 1 capacities")),
                None => (0..n - 1).map(|_| caps.draw(&mut rng)).collect(),
            };
            let triples: Vec<_> = edge_caps
                .iter()
                .enumerate()
                .map(|(i, &c)| (i, i + 1, c))
                .collect();
            Graph::from_triples(*n, &triples)
        }
        Family::Grid2d { rows, cols } => {
            if *rows < 2 || *cols < 2 {
                return Err(FlowError::domain("grid dimensions must be >= 2"));
            }
            let mut edges = Vec::with_capacity(2 * rows * cols);
            for r in 0..*rows {
                for c in 0..*cols {
                    let v = r * cols + c;
                    if c + 1 < *cols {
                        edges.push(edge(v, v + 1, caps.draw(&mut rng)));
                    }
                    if r + 1 < *rows {
                        edges.push(edge(v, v + cols, caps.draw(&mut rng)));
                    }
                }
            }
            Graph::new(rows * cols, edges)
        }
        Family::RandomGnm { n, m } => {
            if *n < 2 || *m < n - 1 {
                return Err(FlowError::domain("random_gnm needs n >= 2 and m >= n - 1"));
            }
            for _ in 0..64 {
                let edges: Vec<Edge> = (0..*m)
                    .map(|_| {
                        let (a, b) = distinct_pair(*n, &mut rng);
                        edge(a, b, caps.draw(&mut rng))
                    })
                    .collect();
                let g = Graph::new(*n, edges)?;
                if g.is_connected() {
                    return Ok(g);
                }
            }
            let edges = (0..*m)
                .map(|_| {
                    let (a, b) = distinct_pair(*n, &mut rng);
                    edge(a, b, caps.draw(&mut rng))
                })
                .collect();
            connect_components(Graph::new(*n, edges)?, caps, &mut rng)
        }
        Family::ExpanderLike { n, degree } => {
            if *n < 3 || *degree < 2 {
                return Err(FlowError::domain("expander_like needs n >= 3 and degree >= 2"));
            }
            let mut edges = Vec::with_capacity(n * degree / 2);
            let mut order: Vec<usize> = (0..*n).collect();
            for _ in 0..(degree / 2).max(1) {
                order.shuffle(&mut rng);
                for i in 0..*n {
                    edges.push(edge(order[i], order[(i + 1) % n], caps.draw(&mut rng)));
                }
            }
            Graph::new(*n, edges)
        }
        Family::TreePlusNoise { n, extra } => {
            if *n < 2 {
                return Err(FlowError::domain("tree_plus_noise needs n >= 2"));
            }
            let mut edges = Vec::with_capacity(n - 1 + extra);
            for v in 1..*n {
                let parent = rng.gen_range(0..v);
                edges.push(edge(parent, v, caps.draw(&mut rng)));
            }
            for _ in 0..*extra {
                let (a, b) = distinct_pair(*n, &mut rng);
                edges.push(edge(a, b, caps.draw(&mut rng)));
            }
            Graph::new(*n, edges)
        }
    }
}

/// Random zero-sum demand: Gaussian-like entries centred to sum zero.
pub fn random_demand(n: usize, seed: u64) -> DemandVector {
    let mut rng = seeded(seed);
    let mut b: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let mean = b.iter().sum::<f64>() / n as f64;
    for x in &mut b {
        *x -= mean;
    }
    DemandVector(b)
}

/// Parses a capacity rule: `unit` or `lo,hi` for a uniform range.
impl FromStr for Capacities {
    type Err = FlowError;

    fn from_str(s: &str) -> Result<Self> {
        if s == "unit" {
            return Ok(Capacities::Unit);
        }
        let bad = || FlowError::domain(format!("capacity rule `{s}` is neither `unit` nor `lo,hi`"));
        let (lo, hi) = s.split_once(',').ok_or_else(bad)?;
        let caps = Capacities::Uniform {
            lo: lo.trim().parse().map_err(|_| bad())?,
            hi: hi.trim().parse().map_err(|_| bad())?,
        };
        caps.validate()?;
        Ok(caps)
    }
}

/// A random `+1 / -1` pair demand.
pub fn random_pair_demand(n: usize, seed: u64) -> DemandVector {
    let mut rng = seeded(seed);
    let (s, t) = distinct_pair(n, &mut rng);
    DemandVector::st(n, s, t, 1.0)
}

fn edge(tail: usize, head: usize, capacity: f64) -> Edge {
    Edge {
        tail,
        head,
        capacity,
    }
}

fn distinct_pair(n: usize, rng: &mut ChaCha8Rng) -> (usize, usize) {
    let a = rng.gen_range(0..n);
    let mut b = rng.gen_range(0..n - 1);
    if b >= a {
        b += 1;
    }
    (a, b)
}

fn connect_components(g: Graph, caps: Capacities, rng: &mut ChaCha8Rng) -> Result<Graph> {
    let (comp, count) = g.components();
    let mut reps = vec![usize::MAX; count];
    for (v, &c) in comp.iter().enumerate() {
        if reps[c] == usize::MAX {
            reps[c] = v;
        }
    }
    let mut edges = g.edges().to_vec();
    for w in reps.windows(2) {
        edges.push(edge(w[0], w[1], caps.draw(rng)));
    }
    Graph::new(g.n(), edges)
}
