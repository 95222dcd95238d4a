use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ndcore::{Matrix, Rng};

pub const DEFAULT_N_INIT: usize = 10;
pub const DEFAULT_MAX_ITER: usize = 300;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct KMeansResult {
    pub centroids: Matrix,
    pub assignments: Vec<usize>,
    pub inertia: f64,
    pub iterations: usize,
    /// Inertia after each centroid update of the winning restart.
    pub inertia_history: Vec<f64>,
}

fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Index and squared distance of the nearest centroid, ties to the lower index.
pub fn nearest(x: &[f64], centroids: &Matrix) -> (usize, f64) {
    let mut best = (0, f64::INFINITY);
    for c in 0..centroids.rows() {
        let d = sq_dist(x, centroids.row(c));
        if d < best.1 {
            best = (c, d);
        }
    }
    best
}

pub fn inertia(z: &Matrix, centroids: &Matrix, assignments: &[usize]) -> f64 {
    assignments.iter().enumerate().map(|(i, &c)| sq_dist(z.row(i), centroids.row(c))).sum()
}

fn plus_plus_seed(z: &Matrix, k: usize, rng: &mut Rng) -> Matrix {
    let n = z.rows();
    let mut centroids = Matrix::zeros(k, z.cols());
    let first = rng.below(n);
    centroids.row_mut(0).copy_from_slice(z.row(first));
    let mut d2: Vec<f64> = (0..n).map(|i| sq_dist(z.row(i), centroids.row(0))).collect();
    for c in 1..k {
        let total: f64 = d2.iter().sum();
        let pick = if total > 0.0 {
            let target = rng.uniform(0.0, total);
            let mut acc = 0.0;
            let mut chosen = n - 1;
            for (i, &d) in d2.iter().enumerate() {
                acc += d;
                if acc > target && d > 0.0 {
                    chosen = i;
                    break;
                }
            }
            chosen
        } else {
            rng.below(n)
        };
        centroids.row_mut(c).copy_from_slice(z.row(pick));
        for (i, d) in d2.iter_mut().enumerate() {
            *d = d.min(sq_dist(z.row(i), centroids.row(c)));
        }
    }
    centroids
}

fn assign(z: &Matrix, centroids: &Matrix, assignments: &mut [usize]) -> bool {
    let mut changed = false;
    for (i, a) in assignments.iter_mut().enumerate() {
        let (c, _) = nearest(z.row(i), centroids);
        changed |= *a != c;
        *a = c;
    }
    changed
}

fn update(z: &Matrix, k: usize, assignments: &mut [usize]) -> Matrix {
    let mut sums = Matrix::zeros(k, z.cols());
    let mut counts = vec![0usize; k];
    for (i, &c) in assignments.iter().enumerate() {
        counts[c] += 1;
        for (s, x) in sums.row_mut(c).iter_mut().zip(z.row(i)) {
            *s += x;
        }
    }
    for c in 0..k {
        if counts[c] > 0 {
            let inv = 1.0 / counts[c] as f64;
            sums.row_mut(c).iter_mut().for_each(|s| *s *= inv);
        }
    }
    for c in 0..k {
        if counts[c] > 0 {
            continue;
        }
        let mut far = (0, -1.0);
        for (i, &a) in assignments.iter().enumerate() {
            if counts[a] < 2 {
                continue;
            }
            let d = sq_dist(z.row(i), sums.row(a));
            if d > far.1 {
                far = (i, d);
            }
        }
        if far.1 < 0.0 {
            continue;
        }
        let (i, _) = far;
        let old = assignments[i];
        counts[old] -= 1;
        let n_old = counts[old] as f64;
        let x = z.row(i).to_vec();
        for (s, xv) in sums.row_mut(old).iter_mut().zip(&x) {
            *s = (*s * (n_old + 1.0) - xv) / n_old;
        }
        sums.row_mut(c).copy_from_slice(&x);
        assignments[i] = c;
        counts[c] = 1;
    }
    sums
}

fn lloyd(z: &Matrix, k: usize, max_iter: usize, rng: &mut Rng) -> KMeansResult {
    let mut centroids = plus_plus_seed(z, k, rng);
    let mut assignments = vec![usize::MAX; z.rows()];
    assign(z, &centroids, &mut assignments);
    let mut history = Vec::new();
    let mut iterations = 0;
    while iterations < max_iter {
        centroids = update(z, k, &mut assignments);
        history.push(inertia(z, &centroids, &assignments));
        iterations += 1;
        if !assign(z, &centroids, &mut assignments) {
            break;
        }
    }
    let total = inertia(z, &centroids, &assignments);
    KMeansResult { centroids, assignments, inertia: total, iterations, inertia_history: history }
}

/// k-means++ seeding followed by Lloyd iterations; the best of `n_init`
/// restarts by inertia is returned.
pub fn kmeans(z: &Matrix, k: usize, seed: u64, n_init: usize, max_iter: usize) -> Result<KMeansResult> {
    if k == 0 || k > z.rows() {
        return Err(Error::InvalidArgument(format!("k = {k} must be in 1..={}", z.rows())));
    }
    if n_init == 0 {
        return Err(Error::InvalidArgument("n_init must be at least 1".into()));
    }
    if !z.is_finite() {
        return Err(Error::NonFiniteValue);
    }
    let mut best: Option<KMeansResult> = None;
    for r in 0..n_init {
        let mut rng = Rng::derive(seed, &format!("kmeans/{r}"));
        let run = lloyd(z, k, max_iter, &mut rng);
        if best.as_ref().is_none_or(|b| run.inertia < b.inertia) {
            best = Some(run);
        }
    }
    Ok(best.expect("n_init >= 1"))
}
