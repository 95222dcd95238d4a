//! Finite-difference and brute-force references shared by the oracle and
//! acceptance suites.

#![allow(dead_code)]

use sparseview::graphlap::{build_laplacian, Edge, GraphSpec};
use sparseview::ndcore::{finite_diff_grad, max_relative_error};
use sparseview::objectives::{stage1_view_loss_and_grad, DEFAULT_SMOOTHING_EPS};
use sparseview::{DecoderNetwork, LayerSpec, Matrix, Rng};

pub const FD_STEP: f64 = 1e-4;
pub const RELATIVE_FLOOR: f64 = 1e-3;

#[derive(Clone, Debug)]
pub struct GradientCase {
    pub seed: u64,
    pub stage1: bool,
    pub group_norm: bool,
    pub with_laplacian: bool,
    pub parameters_checked: usize,
    pub max_error: f64,
}

struct Problem {
    views: Vec<Matrix>,
    nets: Vec<DecoderNetwork>,
    z: Matrix,
    lambdas: Vec<f64>,
    laplacians: Vec<Option<Matrix>>,
    stage1: bool,
}

impl Problem {
    fn view_loss(&self, d: usize, out: &Matrix) -> (f64, Matrix) {
        let x = &self.views[d];
        if self.stage1 {
            stage1_view_loss_and_grad(x, out, self.lambdas[d], self.laplacians[d].as_ref(), DEFAULT_SMOOTHING_EPS).unwrap()
        } else {
            let diff = out.sub(x).unwrap();
            (diff.frobenius_sq(), diff.scale(2.0))
        }
    }

    fn loss(&self, nets: &[DecoderNetwork], z: &Matrix) -> f64 {
        nets.iter().enumerate().map(|(d, n)| self.view_loss(d, &n.predict(z).unwrap()).0).sum()
    }
}

fn random_graph(p: usize, rng: &mut Rng) -> GraphSpec {
    let mut edges = Vec::new();
    for u in 0..p {
        for v in u + 1..p {
            if rng.uniform(0.0, 1.0) < 0.4 {
                edges.push(Edge { u, v, weight: dyadic_weight(rng) });
            }
        }
    }
    GraphSpec::new(p, edges).unwrap()
}

/// Weights in `{1/4, 1/2, …, 4}` so degree sums are exact in binary.
fn dyadic_weight(rng: &mut Rng) -> f64 {
    [0.25, 0.5, 1.0, 1.5, 2.0, 4.0][rng.below(6)]
}

fn problem(seed: u64) -> Problem {
    let mut rng = Rng::derive(seed, "oracle/gradient");
    let n = 2 + rng.below(7);
    let k = 1 + rng.below(4);
    let group_norm = seed % 2 == 1;
    let stage1 = seed % 4 < 2;
    let n_views = 1 + rng.below(2);
    let mut views = Vec::new();
    let mut nets = Vec::new();
    let mut laplacians = Vec::new();
    let mut lambdas = Vec::new();
    for d in 0..n_views {
        let p = 2 + rng.below(5);
        let depth = 1 + rng.below(2);
        let min_width = if group_norm { 2 } else { 1 };
        let hidden: Vec<usize> = (0..depth).map(|_| min_width + rng.below(9 - min_width)).collect();
        let specs = LayerSpec::chain(k, &hidden, p, group_norm);
        nets.push(DecoderNetwork::init(d, &specs, &mut rng).unwrap());
        views.push(rng.normal_matrix(n, p));
        lambdas.push(rng.uniform(0.05, 1.0));
        let with_lap = stage1 && seed % 8 >= 4;
        laplacians.push(with_lap.then(|| build_laplacian(&random_graph(p, &mut rng)).normalized));
    }
    let z = rng.uniform_matrix(n, k, -0.7, 0.7);
    Problem { views, nets, z, lambdas, laplacians, stage1 }
}

/// Compares analytic gradients of the summed multiview loss against central
/// differences for every weight, bias, normalization parameter and latent
/// entry.
pub fn gradient_case(seed: u64) -> GradientCase {
    gradient_case_with_step(seed, FD_STEP)
}

pub fn gradient_case_with_step(seed: u64, step: f64) -> GradientCase {
    let pb = problem(seed);
    let mut latent_grad = Matrix::zeros(pb.z.rows(), pb.z.cols());
    let mut max_error: f64 = 0.0;
    let mut checked = pb.z.as_slice().len();
    for (d, net) in pb.nets.iter().enumerate() {
        let (out, cache) = net.forward(&pb.z).unwrap();
        let upstream = pb.view_loss(d, &out).1;
        let bundle = net.backward(&pb.z, &upstream, &cache).unwrap();
        latent_grad.add_assign(&bundle.latent).unwrap();
        for (k, analytic) in bundle.parameters().into_iter().enumerate() {
            let fd = finite_diff_grad(
                |value| {
                    let mut nets = pb.nets.clone();
                    *nets[d].parameters_mut()[k] = value.clone();
                    pb.loss(&nets, &pb.z)
                },
                net.parameters()[k],
                step,
            )
            .unwrap();
            checked += fd.as_slice().len();
            max_error = max_error.max(max_relative_error(analytic, &fd, RELATIVE_FLOOR).unwrap());
        }
    }
    let fd_z = finite_diff_grad(|z| pb.loss(&pb.nets, z), &pb.z, step).unwrap();
    max_error = max_error.max(max_relative_error(&latent_grad, &fd_z, RELATIVE_FLOOR).unwrap());
    GradientCase {
        seed,
        stage1: pb.stage1,
        group_norm: seed % 2 == 1,
        with_laplacian: pb.laplacians.iter().any(Option::is_some),
        parameters_checked: checked,
        max_error,
    }
}

/// Entry-by-entry construction straight from the definitions.
pub fn brute_force_laplacian(g: &GraphSpec) -> (Matrix, Matrix) {
    let p = g.num_vertices();
    let mut w = Matrix::zeros(p, p);
    for e in g.edges() {
        w[(e.u, e.v)] = e.weight;
        w[(e.v, e.u)] = e.weight;
    }
    let degree: Vec<f64> = (0..p).map(|u| (0..p).map(|v| w[(u, v)]).sum()).collect();
    let l = Matrix::from_fn(p, p, |u, v| {
        if u == v {
            degree[u]
        } else if w[(u, v)] != 0.0 {
            -w[(u, v)]
        } else {
            0.0
        }
    });
    let normalized = Matrix::from_fn(p, p, |u, v| {
        if degree[u] == 0.0 || degree[v] == 0.0 {
            0.0
        } else {
            l[(u, v)] / degree[u].sqrt() / degree[v].sqrt()
        }
    });
    (l, normalized)
}

#[derive(Clone, Debug)]
pub struct LaplacianCase {
    pub graph: GraphSpec,
    pub max_deviation: f64,
    pub rows_sum_to_zero: bool,
    pub symmetric: bool,
}

pub fn random_test_graph(seed: u64) -> GraphSpec {
    let mut rng = Rng::derive(seed, "oracle/laplacian");
    let p = 1 + rng.below(12);
    random_graph(p, &mut rng)
}

pub fn laplacian_case(seed: u64) -> LaplacianCase {
    let graph = random_test_graph(seed);
    let built = build_laplacian(&graph);
    let (l, normalized) = brute_force_laplacian(&graph);
    let dev = |a: &Matrix, b: &Matrix| a.sub(b).unwrap().max_abs();
    let max_deviation = dev(&built.laplacian, &l).max(dev(&built.normalized, &normalized));
    let ones = Matrix::filled(graph.num_vertices(), 1, 1.0);
    let rows_sum_to_zero = built.laplacian.matmul(&ones).unwrap().as_slice().iter().all(|&v| v == 0.0);
    let symmetric = built.normalized == built.normalized.transpose() && built.laplacian == built.laplacian.transpose();
    LaplacianCase { graph, max_deviation, rows_sum_to_zero, symmetric }
}
