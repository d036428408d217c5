//! DIMACS-style text I/O.
//!
//! ```text
//! c comment
//! p max <n> <m>
//! a <u> <v> <capacity>
//! ```
//!
//! Vertex ids are 1-based on disk. Demand files hold `d <v> <value>` lines.

use std::fmt::Write as _;

use crate::error::{FlowError, Result};
use crate::graph::{DemandVector, Edge, Graph};

/// Parses a graph document. Edges keep file order.
pub fn load_graph(text: &str) -> Result<Graph> {
    let mut header: Option<(usize, usize)> = None;
    let mut edges = Vec::new();
    let mut last_line = 0;
    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        last_line = line_no;
        let line = raw.trim();
        if line.is_empty() || line.starts_with('c') {
            continue;
        }
        let fields: Vec<&str> = line.split_whitespace().collect();
        match fields[0] {
            "p" => {
                if header.is_some() {
                    return Err(FlowError::parse(line_no, "duplicate problem line"));
                }
                if fields.len() != 4 || fields[1] != "max" {
                    return Err(FlowError::parse(line_no, "expected `p max <n> <m>`"));
                }
                let n = parse_count(fields[2], line_no)?;
                let m = parse_count(fields[3], line_no)?;
                edges.reserve(m);
                header = Some((n, m));
            }
            "a" => {
                let (n, _) =
                    header.ok_or_else(|| FlowError::parse(line_no, "edge before problem line"))?;
                if fields.len() != 4 {
                    return Err(FlowError::parse(line_no, "expected `a <u> <v> <cap>`"));
                }
                let tail = parse_vertex(fields[1], n, line_no)?;
                let head = parse_vertex(fields[2], n, line_no)?;
                let capacity: f64 = fields[3]
                    .parse()
                    .map_err(|_| FlowError::parse(line_no, "capacity is not a number"))?;
                if !(capacity.is_finite() && capacity > 0.0) {
                    return Err(FlowError::parse(line_no, "capacity must be positive"));
                }
                if tail == head {
                    return Err(FlowError::parse(line_no, "self-loop"));
                }
                edges.push(Edge {
                    tail,
                    head,
                    capacity,
                });
            }
            other => {
                return Err(FlowError::parse(
                    line_no,
                    format!("unknown line type `{other}`"),
                ))
            }
        }
    }
    let (n, m) = header.ok_or_else(|| FlowError::parse(last_line, "missing problem line"))?;
    if edges.len() != m {
        return Err(FlowError::parse(
            last_line,
            format!("problem line declares {m} edges, found {}", edges.len()),
        ));
    }
    Graph::new(n, edges)
}

/// Emits the graph in the grammar accepted by [`load_graph`].
pub fn serialize_graph(graph: &Graph) -> String {
    let mut out = String::with_capacity(16 * (graph.m() + 1));
    let _ = writeln!(out, "p max {} {}", graph.n(), graph.m());
    for e in graph.edges() {
        let _ = writeln!(out, "a {} {} {}", e.tail + 1, e.head + 1, e.capacity);
    }
    out
}

/// Parses `d <v> <value>` lines; unlisted vertices get demand 0 and repeated
/// vertices accumulate.
pub fn load_demands(text: &str, n: usize) -> Result<DemandVector> {
    let mut b = vec![0.0; n];
    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw.trim();
        if line.is_empty() || line.starts_with('c') {
            continue;
        }
        let fields: Vec<&str> = line.split_whitespace().collect();
        if fields.len() != 3 || fields[0] != "d" {
            return Err(FlowError::parse(line_no, "expected `d <v> <value>`"));
        }
        let v = parse_vertex(fields[1], n, line_no)?;
        let value: f64 = fields[2]
            .parse()
            .map_err(|_| FlowError::parse(line_no, "demand is not a number"))?;
        if !value.is_finite() {
            return Err(FlowError::parse(line_no, "demand must be finite"));
        }
        b[v] += value;
    }
    Ok(DemandVector(b))
}

pub fn serialize_demands(b: &DemandVector) -> String {
    let mut out = String::new();
    for (v, &value) in b.as_slice().iter().enumerate() {
        if value != 0.0 {
            let _ = writeln!(out, "d {} {}", v + 1, value);
        }
    }
    out
}

/// Parses an inline demand list such as `+1@1,-1@3`: `value@vertex` terms
/// with 1-based vertices, separated by commas.
pub fn parse_demand_spec(spec: &str, n: usize) -> Result<DemandVector> {
    let mut b = vec![0.0; n];
    for term in spec.split(',').map(str::trim).filter(|t| !t.is_empty()) {
        let (value, vertex) = term
            .split_once('@')
            .ok_or_else(|| FlowError::domain(format!("demand term `{term}` is not value@vertex")))?;
        let value: f64 = value
            .trim()
            .parse()
            .map_err(|_| FlowError::domain(format!("bad demand value in `{term}`")))?;
        if !value.is_finite() {
            return Err(FlowError::domain("demand must be finite"));
        }
        let v = parse_vertex(vertex.trim(), n, 1).map_err(|_| FlowError::domain(format!("bad vertex in `{term}`")))?;
        b[v] += value;
    }
    Ok(DemandVector(b))
}

fn parse_count(field: &str, line: usize) -> Result<usize> {
    field
        .parse()
        .map_err(|_| FlowError::parse(line, format!("`{field}` is not a count")))
}

fn parse_vertex(field: &str, n: usize, line: usize) -> Result<usize> {
    let id: usize = field
        .parse()
        .map_err(|_| FlowError::parse(line, format!("`{field}` is not a vertex id")))?;
    if id == 0 || id > n {
        return Err(FlowError::parse(
            line,
            format!("vertex {id} out of range 1..={n}"),
        ));
    }
    Ok(id - 1)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn inline_demands() {
        let b = parse_demand_spec("+1@1, -1@3", 3).unwrap();
        assert_eq!(b.0, vec![1.0, 0.0, -1.0]);
        assert!(parse_demand_spec("1@4", 3).is_err());
        assert!(parse_demand_spec("1", 3).is_err());
        assert!(parse_demand_spec("x@1", 3).is_err());
    }

    #[test]
    fn smallest_instance() {
        let g = load_graph("p max 2 1\na 1 2 1.0\n").unwrap();
        assert_eq!(g.n(), 2);
        assert_eq!(g.m(), 1);
        assert_eq!(g.edge(0).capacity, 1.0);
    }

    #[test]
    fn zero_capacity_is_rejected_with_line() {
        let err = load_graph("c hi\np max 2 1\na 1 2 0\n").unwrap_err();
        match err {
            FlowError::Parse { line, .. } => assert_eq!(line, 3),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn malformed_documents() {
        assert!(load_graph("a 1 2 1\n").is_err());
        assert!(load_graph("p max 2 1\na 1 3 1\n").is_err());
        assert!(load_graph("p max 2 1\na 1 2\n").is_err());
        assert!(load_graph("p max 2 2\na 1 2 1\n").is_err());
        assert!(load_graph("p max 2 1\nx 1 2 1\n").is_err());
        assert!(load_graph("p max 2 1\na 1 2 -3\n").is_err());
    }

    #[test]
    fn four_cycle_fixture() {
        let text = include_str!("../tests/fixtures/cycle4.dimacs");
        let g = load_graph(text).unwrap();
        assert_eq!(g.m(), 4);
        assert!(g.edges().iter().all(|e| e.capacity == 1.0));
    }

    #[test]
    fn demands_parse() {
        let b = load_demands("d 1 1.5\nd 3 -1.5\n", 3).unwrap();
        assert_eq!(b.0, vec![1.5, 0.0, -1.5]);
        assert!(load_demands("d 4 1\n", 3).is_err());
        assert_eq!(load_demands(&serialize_demands(&b), 3).unwrap(), b);
    }
}
