//! Weighted undirected feature graphs and their (normalized) Laplacians.
//!
//! `L(u,u) = r_u`, `L(u,v) = −w(u,v)` for adjacent `u ≠ v`, with degree
//! `r_u = Σ_v w(u,v)`. The normalized form is `T^{−1/2} L T^{−1/2}` with
//! `T = diag(r)`; vertices of degree zero get a zero row and column.
//!
//! Edge-list files hold one `u v [w]` triple per line (0-based vertices,
//! weight defaulting to 1); blank lines and `#` comments are ignored.

use std::collections::BTreeSet;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ndcore::Matrix;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Edge {
    pub u: usize,
    pub v: usize,
    pub weight: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GraphSpec {
    num_vertices: usize,
    edges: Vec<Edge>,
}

impl GraphSpec {
    pub fn new(num_vertices: usize, edges: Vec<Edge>) -> Result<Self> {
        let mut seen = BTreeSet::new();
        for e in &edges {
            validate_edge(e, num_vertices)?;
            if !seen.insert((e.u.min(e.v), e.u.max(e.v))) {
                return Err(Error::InvalidArgument(format!("duplicate edge {} {}", e.u, e.v)));
            }
        }
        Ok(Self { num_vertices, edges })
    }

    pub fn empty(num_vertices: usize) -> Self {
        Self { num_vertices, edges: Vec::new() }
    }

    pub fn num_vertices(&self) -> usize {
        self.num_vertices
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn degrees(&self) -> Vec<f64> {
        let mut r = vec![0.0; self.num_vertices];
        for e in &self.edges {
            r[e.u] += e.weight;
            r[e.v] += e.weight;
        }
        r
    }

    pub fn neighbors(&self, vertex: usize) -> Vec<usize> {
        let mut out: Vec<usize> = self
            .edges
            .iter()
            .filter_map(|e| match (e.u == vertex, e.v == vertex) {
                (true, _) => Some(e.v),
                (_, true) => Some(e.u),
                _ => None,
            })
            .collect();
        out.sort_unstable();
        out
    }

    /// Same graph on `num_vertices ≥ self.num_vertices` vertices; the extra
    /// vertices are isolated.
    pub fn embed(&self, num_vertices: usize) -> Result<GraphSpec> {
        if num_vertices < self.num_vertices {
            return Err(Error::InvalidArgument("cannot embed into fewer vertices".into()));
        }
        Ok(GraphSpec { num_vertices, edges: self.edges.clone() })
    }

    /// Edge-list text accepted by [`parse_edge_list`].
    pub fn to_edge_list(&self) -> String {
        let mut s = String::new();
        for e in &self.edges {
            let _ = writeln!(s, "{} {} {}", e.u, e.v, e.weight);
        }
        s
    }
}

fn validate_edge(e: &Edge, p: usize) -> Result<()> {
    if e.u >= p {
        return Err(Error::IndexOutOfRange { index: e.u, bound: p });
    }
    if e.v >= p {
        return Err(Error::IndexOutOfRange { index: e.v, bound: p });
    }
    if e.u == e.v {
        return Err(Error::InvalidArgument(format!("self-loop at vertex {}", e.u)));
    }
    if !(e.weight >= 0.0) || !e.weight.is_finite() {
        return Err(Error::InvalidArgument(format!("edge {} {} has invalid weight {}", e.u, e.v, e.weight)));
    }
    Ok(())
}

#[derive(Clone, Debug, PartialEq)]
pub struct GraphLaplacian {
    pub laplacian: Matrix,
    pub degrees: Vec<f64>,
    pub normalized: Matrix,
}

pub fn build_laplacian(g: &GraphSpec) -> GraphLaplacian {
    let p = g.num_vertices;
    let degrees = g.degrees();
    let mut laplacian = Matrix::zeros(p, p);
    for (u, &r) in degrees.iter().enumerate() {
        laplacian[(u, u)] = r;
    }
    for e in &g.edges {
        laplacian[(e.u, e.v)] = -e.weight;
        laplacian[(e.v, e.u)] = -e.weight;
    }
    let mut normalized = Matrix::zeros(p, p);
    for u in 0..p {
        for v in u..p {
            let val = laplacian[(u, v)];
            if val == 0.0 || degrees[u] <= 0.0 || degrees[v] <= 0.0 {
                continue;
            }
            let scaled = val / (degrees[u] * degrees[v]).sqrt();
            normalized[(u, v)] = scaled;
            normalized[(v, u)] = scaled;
        }
    }
    GraphLaplacian { laplacian, degrees, normalized }
}

pub fn parse_edge_list(text: &str, num_vertices: usize) -> Result<GraphSpec> {
    let mut edges = Vec::new();
    let mut seen = BTreeSet::new();
    for (k, raw) in text.lines().enumerate() {
        let line_no = k + 1;
        let err = |message: String| Error::Parse { line: line_no, message };
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split_whitespace().collect();
        if !(2..=3).contains(&fields.len()) {
            return Err(err(format!("expected 'u v [w]', got {line:?}")));
        }
        let u: usize = fields[0].parse().map_err(|_| err(format!("bad vertex {:?}", fields[0])))?;
        let v: usize = fields[1].parse().map_err(|_| err(format!("bad vertex {:?}", fields[1])))?;
        let weight: f64 = match fields.get(2) {
            Some(w) => w.parse().map_err(|_| err(format!("bad weight {w:?}")))?,
            None => 1.0,
        };
        let e = Edge { u, v, weight };
        validate_edge(&e, num_vertices).map_err(|e| err(e.to_string()))?;
        if !seen.insert((u.min(v), u.max(v))) {
            return Err(err(format!("duplicate edge {u} {v}")));
        }
        edges.push(e);
    }
    Ok(GraphSpec { num_vertices, edges })
}
