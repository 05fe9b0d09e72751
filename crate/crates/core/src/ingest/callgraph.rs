use std::collections::BTreeSet;
use std::path::Path;

use nalgebra::DMatrix;

use super::units::UnitIndex;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct CallEdge {
    pub caller: String,
    pub callee: String,
    pub weight: f64,
}

/// Directed, weighted call dependencies between units.
#[derive(Debug, Clone)]
pub struct CallGraph {
    pub units: UnitIndex,
    /// `adjacency[(i, j)]` is the accumulated weight of calls from `i` to `j`.
    pub adjacency: DMatrix<f64>,
}

impl CallGraph {
    /// Number of distinct directed edges with positive weight.
    pub fn edge_count(&self) -> usize {
        self.adjacency.iter().filter(|&&w| w > 0.0).count()
    }

    /// Keeps edges with both endpoints in `units`, accumulates repeats and
    /// drops self-calls.
    pub fn from_edges(edges: &[CallEdge], units: &UnitIndex) -> Result<CallGraph> {
        let n = units.len();
        let mut adjacency = DMatrix::zeros(n, n);
        for e in edges {
            if e.caller == e.callee {
                continue;
            }
            if let (Some(i), Some(j)) = (units.position(&e.caller), units.position(&e.callee)) {
                adjacency[(i, j)] += e.weight;
            }
        }
        let graph = CallGraph {
            units: units.clone(),
            adjacency,
        };
        if graph.edge_count() == 0 {
            return Err(Error::EmptyView("calls".into()));
        }
        Ok(graph)
    }

    /// Units named anywhere in an edge list.
    pub fn names(edges: &[CallEdge]) -> BTreeSet<String> {
        edges
            .iter()
            .flat_map(|e| [e.caller.clone(), e.callee.clone()])
            .collect()
    }

    /// Binary caller × callee membership (`1` where any call exists).
    pub fn binary(&self) -> DMatrix<f64> {
        self.adjacency.map(|w| if w > 0.0 { 1.0 } else { 0.0 })
    }
}

/// Parses `caller<TAB>callee[<TAB>weight]` lines. Blank lines and lines
/// starting with `#` are skipped.
pub fn parse_call_edges(text: &str, source: &Path) -> Result<Vec<CallEdge>> {
    let mut edges = Vec::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.trim_end_matches('\r');
        if line.trim().is_empty() || line.trim_start().starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = line.split('\t').collect();
        if !(2..=3).contains(&fields.len()) {
            return Err(Error::parse(
                source,
                lineno + 1,
                format!("expected 2 or 3 tab-separated fields, found {}", fields.len()),
            ));
        }
        let caller = fields[0].trim();
        let callee = fields[1].trim();
        if caller.is_empty() || callee.is_empty() {
            return Err(Error::parse(source, lineno + 1, "empty unit name"));
        }
        let weight = match fields.get(2) {
            None => 1.0,
            Some(w) => {
                let w: f64 = w
                    .trim()
                    .parse()
                    .map_err(|_| Error::parse(source, lineno + 1, format!("bad weight `{w}`")))?;
                if !w.is_finite() || w < 0.0 {
                    return Err(Error::parse(
                        source,
                        lineno + 1,
                        format!("weight must be finite and non-negative, got {w}"),
                    ));
                }
                w
            }
        };
        edges.push(CallEdge {
            caller: caller.to_string(),
            callee: callee.to_string(),
            weight,
        });
    }
    Ok(edges)
}

pub fn read_call_edges(path: &Path) -> Result<Vec<CallEdge>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_call_edges(&text, path)
}

pub fn load_call_graph(path: &Path, units: &UnitIndex) -> Result<CallGraph> {
    CallGraph::from_edges(&read_call_edges(path)?, units)
}
