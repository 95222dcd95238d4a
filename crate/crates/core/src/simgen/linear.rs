use serde::{Deserialize, Serialize};

use super::{block_labels, descriptor, ScenarioTruth, Split};
use crate::dataset::MultiviewDataset;
use crate::error::{Error, Result};
use crate::ndcore::{cholesky, gram_schmidt_weighted, Matrix, Rng};

pub const LINEAR_SIGNALS: usize = 20;
const BLOCK: usize = 10;
const BLOCK_CORRELATION: f64 = 0.8;
const SHRINK: f64 = 0.9;
const MAX_SHRINKS: usize = 20;

/// `n × n` matrix with unit diagonal and constant off-diagonal `rho`.
pub fn compound_symmetric(n: usize, rho: f64) -> Matrix {
    Matrix::from_fn(n, n, |i, j| if i == j { 1.0 } else { rho })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CovarianceSpec {
    pub p1: usize,
    pub p2: usize,
    pub sigma1: Matrix,
    pub sigma2: Matrix,
    /// Joint `(p1 + p2)²` covariance.
    pub sigma: Matrix,
    pub v1: Matrix,
    pub v2: Matrix,
    /// Coupling strengths actually used, after any shrinking.
    pub rho: [f64; 2],
    pub c: f64,
    /// One column per class.
    pub means: Matrix,
    pub cholesky: Matrix,
}

fn view_covariance(p: usize) -> Matrix {
    Matrix::from_fn(p, p, |i, j| {
        if i == j {
            1.0
        } else if i < LINEAR_SIGNALS && j < LINEAR_SIGNALS && i / BLOCK == j / BLOCK {
            BLOCK_CORRELATION
        } else {
            0.0
        }
    })
}

fn loadings(p: usize, sigma: &Matrix, rng: &mut Rng) -> Result<Matrix> {
    let mut v = Matrix::zeros(p, 2);
    for i in 0..LINEAR_SIGNALS {
        for j in 0..2 {
            v[(i, j)] = rng.uniform(0.5, 1.0);
        }
    }
    gram_schmidt_weighted(&v, sigma)
}

fn joint(s1: &Matrix, s2: &Matrix, s12: &Matrix) -> Matrix {
    let (p1, p2) = (s1.rows(), s2.rows());
    Matrix::from_fn(p1 + p2, p1 + p2, |i, j| match (i < p1, j < p1) {
        (true, true) => s1[(i, j)],
        (false, false) => s2[(i - p1, j - p1)],
        (true, false) => s12[(i, j - p1)],
        (false, true) => s12[(j, i - p1)],
    })
}

/// Joint covariance and class means of the three-class linear scenario.
pub fn linear_covariance(p1: usize, p2: usize, rho1: f64, rho2: f64, c: f64, seed: u64) -> Result<CovarianceSpec> {
    if p1 < LINEAR_SIGNALS || p2 < LINEAR_SIGNALS {
        return Err(Error::InvalidArgument(format!("views need at least {LINEAR_SIGNALS} columns")));
    }
    if !(0.0..1.0).contains(&rho1) || !(0.0..1.0).contains(&rho2) || !c.is_finite() {
        return Err(Error::InvalidArgument("rho values must lie in [0, 1) and c must be finite".into()));
    }
    let sigma1 = view_covariance(p1);
    let sigma2 = view_covariance(p2);
    let mut rng = Rng::derive(seed, "linear/loadings");
    let v1 = loadings(p1, &sigma1, &mut rng)?;
    let v2 = loadings(p2, &sigma2, &mut rng)?;
    let left = sigma1.matmul(&v1)?;
    let right = sigma2.matmul(&v2)?;
    let mut rho = [rho1, rho2];
    for _ in 0..=MAX_SHRINKS {
        let scaled = Matrix::from_fn(p1, 2, |i, k| left[(i, k)] * rho[k]);
        let s12 = scaled.matmul_t(&right)?;
        let sigma = joint(&sigma1, &sigma2, &s12);
        if let Ok(chol) = cholesky(&sigma) {
            let mut a = Matrix::zeros(p1 + p2, 3);
            for offset in [0, p1] {
                for i in 0..BLOCK {
                    a[(offset + i, 0)] = c;
                    a[(offset + BLOCK + i, 1)] = -c;
                }
            }
            let means = sigma.matmul(&a)?;
            return Ok(CovarianceSpec { p1, p2, sigma1, sigma2, sigma, v1, v2, rho, c, means, cholesky: chol });
        }
        rho = [rho[0] * SHRINK, rho[1] * SHRINK];
    }
    Err(Error::NotPositiveDefinite)
}

/// Three-class Gaussian scenario whose views share a rank-two cross
/// covariance through their first 20 columns.
pub fn gen_linear(
    n_per_class: usize,
    p1: usize,
    p2: usize,
    rho1: f64,
    rho2: f64,
    c: f64,
    seed: u64,
    split: Split,
) -> Result<(MultiviewDataset, ScenarioTruth, CovarianceSpec)> {
    if n_per_class == 0 {
        return Err(Error::InvalidArgument("n_per_class must be positive".into()));
    }
    let spec = linear_covariance(p1, p2, rho1, rho2, c, seed)?;
    let p = p1 + p2;
    let n = 3 * n_per_class;
    let mut rng = Rng::derive(seed, &format!("{split}/linear/samples"));
    let g = rng.normal_matrix(n, p);
    let mut x = g.matmul_t(&spec.cholesky)?;
    for i in 0..n {
        let k = i / n_per_class;
        for (j, v) in x.row_mut(i).iter_mut().enumerate() {
            *v += spec.means[(j, k)];
        }
    }
    let idx1: Vec<usize> = (0..p1).collect();
    let idx2: Vec<usize> = (p1..p).collect();
    let views = vec![x.select_columns(&idx1)?, x.select_columns(&idx2)?];
    let labels = block_labels(&[n_per_class; 3]);
    let dataset = MultiviewDataset::new(views, Some(labels.clone()))?;
    let params = [
        ("n_per_class", n_per_class as f64),
        ("p1", p1 as f64),
        ("p2", p2 as f64),
        ("rho1", spec.rho[0]),
        ("rho2", spec.rho[1]),
        ("c", c),
    ];
    let signals = vec![(0..LINEAR_SIGNALS).collect(), (0..LINEAR_SIGNALS).collect()];
    let truth = ScenarioTruth { signals, labels, descriptor: descriptor("linear", &params, seed, split) };
    Ok((dataset, truth, spec))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample_cov(x: &Matrix, cols: &[usize]) -> Matrix {
        let n = x.rows() as f64;
        let sub = x.select_columns(cols).unwrap();
        let means: Vec<f64> = (0..cols.len()).map(|j| sub.column(j).iter().sum::<f64>() / n).collect();
        let centered = Matrix::from_fn(sub.rows(), sub.cols(), |i, j| sub[(i, j)] - means[j]);
        centered.t_matmul(&centered).unwrap().scale(1.0 / (n - 1.0))
    }

    #[test]
    fn loadings_are_sigma_orthonormal() {
        let spec = linear_covariance(40, 30, 0.9, 0.7, 0.5, 1).unwrap();
        for (v, s) in [(&spec.v1, &spec.sigma1), (&spec.v2, &spec.sigma2)] {
            let g = v.t_matmul(&s.matmul(v).unwrap()).unwrap();
            assert!(g.sub(&Matrix::identity(2)).unwrap().max_abs() <= 1e-8);
            for i in LINEAR_SIGNALS..v.rows() {
                assert_eq!(v.row(i), &[0.0, 0.0]);
            }
        }
        let l = &spec.cholesky;
        assert!(l.matmul_t(l).unwrap().sub(&spec.sigma).unwrap().max_abs() < 1e-10);
    }

    #[test]
    fn means_follow_the_separation_design() {
        let spec = linear_covariance(25, 25, 0.5, 0.5, 2.0, 3).unwrap();
        assert_eq!(spec.means.column(2), vec![0.0; 50]);
        let cs = compound_symmetric(BLOCK, BLOCK_CORRELATION);
        let expected: f64 = (0..BLOCK).map(|j| cs[(0, j)]).sum::<f64>() * 2.0;
        assert!((spec.means[(0, 0)] - expected - spec.sigma.row(0)[25..35].iter().sum::<f64>() * 2.0).abs() < 1e-12);
        assert!(spec.means[(12, 1)] < 0.0);
    }

    #[test]
    fn truth_and_labels() {
        let (ds, truth, _) = gen_linear(4, 30, 25, 0.4, 0.2, 0.5, 2, Split::Train).unwrap();
        assert_eq!(ds.view(0).shape(), (12, 30));
        assert_eq!(ds.view(1).shape(), (12, 25));
        assert_eq!(truth.signals[1], (0..20).collect::<Vec<_>>());
        assert_eq!(truth.labels, vec![0, 0, 0, 0, 1, 1, 1, 1, 2, 2, 2, 2]);
        assert!(gen_linear(4, 19, 25, 0.4, 0.2, 0.5, 2, Split::Train).is_err());
        assert!(gen_linear(4, 30, 25, 1.0, 0.2, 0.5, 2, Split::Train).is_err());
    }

    #[test]
    fn block_covariance_at_large_n() {
        let (ds, _, _) = gen_linear(1667, 30, 30, 0.3, 0.1, 0.0, 9, Split::Train).unwrap();
        let cols: Vec<usize> = (0..BLOCK).collect();
        let s = sample_cov(ds.view(0), &cols);
        let target = compound_symmetric(BLOCK, BLOCK_CORRELATION);
        let err = s.sub(&target).unwrap().frobenius_sq().sqrt() / target.frobenius_sq().sqrt();
        assert!(err <= 0.1, "{err}");
    }

    #[test]
    fn class_means_at_large_n() {
        let (ds, truth, spec) = gen_linear(5000, 25, 25, 0.3, 0.2, 1.0, 4, Split::Train).unwrap();
        for k in 0..2 {
            let rows: Vec<usize> = (0..truth.labels.len()).filter(|&i| truth.labels[i] == k).collect();
            let mut diff = 0.0;
            let mut norm = 0.0;
            for (d, offset) in [(0, 0), (1, 25)] {
                let x = ds.view(d).select_rows(&rows).unwrap();
                for j in 0..25 {
                    let m = x.column(j).iter().sum::<f64>() / rows.len() as f64;
                    diff += (m - spec.means[(offset + j, k)]).powi(2);
                    norm += spec.means[(offset + j, k)].powi(2);
                }
            }
            assert!((diff / norm).sqrt() <= 0.05, "class {k}: {}", (diff / norm).sqrt());
        }
    }
}
