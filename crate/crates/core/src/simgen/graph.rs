use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::nonlinear::signal_columns;
use super::{block_labels, descriptor, ScenarioTruth, Split};
use crate::dataset::MultiviewDataset;
use crate::error::{Error, Result};
use crate::graphlap::{build_laplacian, Edge, GraphSpec};
use crate::ndcore::{cholesky, spd_inverse, Rng};

pub const GRAPH_VERTICES: usize = 50;
/// Ridge added to the graph Laplacian to form the noise precision.
pub const NOISE_RIDGE: f64 = 0.1;
const LATTICE_ROWS: usize = 5;
const CLUSTER_SIZES: [usize; 3] = [17, 16, 17];
const NOISE_SCALES: [f64; 2] = [1.0, 0.2];

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Topology {
    ScaleFree,
    Lattice,
    Cluster,
}

impl Topology {
    pub fn as_str(self) -> &'static str {
        match self {
            Topology::ScaleFree => "scale_free",
            Topology::Lattice => "lattice",
            Topology::Cluster => "cluster",
        }
    }
}

impl fmt::Display for Topology {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Topology {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s.replace('-', "_").as_str() {
            "scale_free" => Ok(Topology::ScaleFree),
            "lattice" => Ok(Topology::Lattice),
            "cluster" => Ok(Topology::Cluster),
            _ => Err(format!("unknown topology {s:?}")),
        }
    }
}

fn unit_edges(pairs: impl IntoIterator<Item = (usize, usize)>) -> Vec<Edge> {
    let mut edges: Vec<Edge> = pairs.into_iter().map(|(a, b)| Edge { u: a.min(b), v: a.max(b), weight: 1.0 }).collect();
    edges.sort_by_key(|e| (e.u, e.v));
    edges
}

/// Preferential-attachment tree (one edge per arriving vertex), relabelled
/// so that the highest-degree vertex is vertex 1. Returns the graph and its
/// hub.
pub fn scale_free_graph(num_vertices: usize, rng: &mut Rng) -> Result<(GraphSpec, usize)> {
    if num_vertices < 2 {
        return Err(Error::InvalidArgument("scale-free graph needs at least two vertices".into()));
    }
    let mut endpoints: Vec<usize> = Vec::new();
    let mut pairs = Vec::with_capacity(num_vertices - 1);
    for t in 1..num_vertices {
        let target = if endpoints.is_empty() { 0 } else { endpoints[rng.below(endpoints.len())] };
        pairs.push((t, target));
        endpoints.push(t);
        endpoints.push(target);
    }
    let mut degree = vec![0usize; num_vertices];
    for &(a, b) in &pairs {
        degree[a] += 1;
        degree[b] += 1;
    }
    let max_vertex = (0..num_vertices).fold(0, |best, v| if degree[v] > degree[best] { v } else { best });
    let hub = 1;
    let relabel = |v: usize| {
        if v == max_vertex {
            hub
        } else if v == hub {
            max_vertex
        } else {
            v
        }
    };
    let edges = unit_edges(pairs.into_iter().map(|(a, b)| (relabel(a), relabel(b))));
    Ok((GraphSpec::new(num_vertices, edges)?, hub))
}

/// `rows × cols` grid without wraparound, vertices numbered row-major.
pub fn lattice_graph(rows: usize, cols: usize) -> Result<GraphSpec> {
    let mut pairs = Vec::new();
    for r in 0..rows {
        for c in 0..cols {
            let v = r * cols + c;
            if c + 1 < cols {
                pairs.push((v, v + 1));
            }
            if r + 1 < rows {
                pairs.push((v, v + cols));
            }
        }
    }
    GraphSpec::new(rows * cols, unit_edges(pairs))
}

/// Disjoint complete graphs on consecutive vertex blocks.
pub fn cluster_graph(sizes: &[usize]) -> Result<GraphSpec> {
    let mut pairs = Vec::new();
    let mut start = 0;
    for &s in sizes {
        for a in start..start + s {
            for b in (a + 1)..start + s {
                pairs.push((a, b));
            }
        }
        start += s;
    }
    GraphSpec::new(start, unit_edges(pairs))
}

fn topology_graph(topology: Topology, seed: u64) -> Result<(GraphSpec, Vec<usize>)> {
    match topology {
        Topology::ScaleFree => {
            let mut rng = Rng::derive(seed, "graph/scale_free");
            let (g, hub) = scale_free_graph(GRAPH_VERTICES, &mut rng)?;
            let mut truth = g.neighbors(hub);
            truth.push(hub);
            truth.sort_unstable();
            Ok((g, truth))
        }
        Topology::Lattice => {
            let g = lattice_graph(LATTICE_ROWS, GRAPH_VERTICES / LATTICE_ROWS)?;
            Ok((g, (0..GRAPH_VERTICES - 1).collect()))
        }
        Topology::Cluster => {
            let g = cluster_graph(&CLUSTER_SIZES)?;
            Ok((g, (0..CLUSTER_SIZES[0] + CLUSTER_SIZES[1]).collect()))
        }
    }
}

/// Two-class nonlinear scenario whose first 50 columns per view follow a
/// feature graph: signal columns are the graph vertices named by the
/// topology, and the noise on the graph block has precision `L + 0.1·I`.
pub fn gen_graph_scenario(
    topology: Topology,
    n1: usize,
    n2: usize,
    p1: usize,
    p2: usize,
    seed: u64,
    split: Split,
) -> Result<(MultiviewDataset, ScenarioTruth, Vec<GraphSpec>)> {
    if p1 < GRAPH_VERTICES || p2 < GRAPH_VERTICES {
        return Err(Error::InvalidArgument(format!("views need at least {GRAPH_VERTICES} columns")));
    }
    if n1 == 0 || n2 == 0 {
        return Err(Error::InvalidArgument("both classes need at least one sample".into()));
    }
    let (graph, truth) = topology_graph(topology, seed)?;
    let mut precision = build_laplacian(&graph).laplacian;
    for i in 0..GRAPH_VERTICES {
        precision[(i, i)] += NOISE_RIDGE;
    }
    let noise_factor = cholesky(&spd_inverse(&precision)?)?;
    let sizes = [n1, n2];
    let n = n1 + n2;
    let mut views = Vec::with_capacity(2);
    let mut graphs = Vec::with_capacity(2);
    for (d, p) in [p1, p2].into_iter().enumerate() {
        let v = d + 1;
        let mut signal_rng = Rng::derive(seed, &format!("{split}/graph/view{v}/signal"));
        let mut noise_rng = Rng::derive(seed, &format!("{split}/graph/view{v}/noise"));
        let clean = signal_columns(v, &sizes, GRAPH_VERTICES, &mut signal_rng)?;
        let raw = noise_rng.normal_matrix(n, p);
        let head: Vec<usize> = (0..GRAPH_VERTICES).collect();
        let correlated = raw.select_columns(&head)?.matmul_t(&noise_factor)?;
        let mut x = raw;
        for i in 0..n {
            for j in 0..GRAPH_VERTICES {
                x[(i, j)] = correlated[(i, j)];
            }
        }
        x = x.scale(NOISE_SCALES[d]);
        for i in 0..n {
            for &j in &truth {
                x[(i, j)] += clean[(i, j)];
            }
        }
        views.push(x);
        graphs.push(graph.embed(p)?);
    }
    let labels = block_labels(&sizes);
    let dataset = MultiviewDataset::new(views, Some(labels.clone()))?;
    let params = [("n1", n1 as f64), ("n2", n2 as f64), ("p1", p1 as f64), ("p2", p2 as f64)];
    let name = format!("graph_{topology}");
    let truth = ScenarioTruth { signals: vec![truth.clone(), truth], labels, descriptor: descriptor(&name, &params, seed, split) };
    Ok((dataset, truth, graphs))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn is_connected(g: &GraphSpec) -> bool {
        let n = g.num_vertices();
        let mut seen = vec![false; n];
        let mut stack = vec![0];
        seen[0] = true;
        while let Some(v) = stack.pop() {
            for w in g.neighbors(v) {
                if !seen[w] {
                    seen[w] = true;
                    stack.push(w);
                }
            }
        }
        seen.into_iter().all(|s| s)
    }

    #[test]
    fn scale_free_is_a_tree_with_hub_at_one() {
        for seed in 0..20 {
            let (g, hub) = scale_free_graph(GRAPH_VERTICES, &mut Rng::new(seed)).unwrap();
            assert_eq!(g.edges().len(), 49);
            assert!(is_connected(&g));
            let deg = g.degrees();
            assert_eq!(hub, 1);
            assert!(deg.iter().all(|&d| d <= deg[1]));
        }
    }

    #[test]
    fn lattice_and_cluster_shapes() {
        let g = lattice_graph(5, 10).unwrap();
        assert_eq!(g.edges().len(), 5 * 9 + 4 * 10);
        assert_eq!(g.neighbors(0), vec![1, 10]);
        assert_eq!(g.neighbors(49), vec![39, 48]);
        let c = cluster_graph(&CLUSTER_SIZES).unwrap();
        assert_eq!(c.edges().len(), 17 * 16 / 2 + 16 * 15 / 2 + 17 * 16 / 2);
        assert!(c.neighbors(16).iter().all(|&v| v < 17));
    }

    #[test]
    fn truth_sets_by_topology() {
        let (_, t, graphs) = gen_graph_scenario(Topology::Lattice, 5, 5, 60, 55, 1, Split::Train).unwrap();
        assert_eq!(t.signals[0].len(), 49);
        assert!(!t.signals[0].contains(&49));
        assert_eq!(graphs[1].num_vertices(), 55);
        let (_, t, _) = gen_graph_scenario(Topology::Cluster, 5, 5, 60, 60, 1, Split::Train).unwrap();
        assert_eq!(t.signals[1], (0..33).collect::<Vec<_>>());
        let (_, t, graphs) = gen_graph_scenario(Topology::ScaleFree, 5, 5, 60, 60, 1, Split::Train).unwrap();
        let mut expected = graphs[0].neighbors(1);
        expected.push(1);
        expected.sort_unstable();
        assert_eq!(t.signals[0], expected);
    }

    #[test]
    fn noise_precision_is_positive_definite() {
        for topology in [Topology::ScaleFree, Topology::Lattice, Topology::Cluster] {
            for seed in 0..5 {
                let (g, _) = topology_graph(topology, seed).unwrap();
                let mut q = build_laplacian(&g).laplacian;
                for i in 0..GRAPH_VERTICES {
                    q[(i, i)] += NOISE_RIDGE;
                }
                assert!(cholesky(&q).is_ok());
            }
        }
    }

    #[test]
    fn graph_is_shared_across_splits_and_views() {
        let a = gen_graph_scenario(Topology::ScaleFree, 4, 4, 50, 50, 3, Split::Train).unwrap();
        let b = gen_graph_scenario(Topology::ScaleFree, 4, 4, 50, 50, 3, Split::Test).unwrap();
        assert_eq!(a.2, b.2);
        assert_eq!(a.2[0], a.2[1]);
        assert_ne!(a.0, b.0);
        assert!(gen_graph_scenario(Topology::Cluster, 4, 4, 49, 50, 3, Split::Train).is_err());
        assert_eq!("scale-free".parse::<Topology>().unwrap(), Topology::ScaleFree);
    }
}
