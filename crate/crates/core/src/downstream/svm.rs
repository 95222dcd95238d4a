//! Kernel SVM trained by sequential minimal optimization.
//!
//! Each binary problem solves the dual `min ½αᵀQα − 1ᵀα` subject to
//! `0 ≤ αᵢ ≤ C`, `yᵀα = 0` with `Q = (y yᵀ) ⊙ K` and the RBF kernel
//! `K(a, b) = exp(−γ‖a − b‖²)`. Each step updates the maximal violating
//! pair; the solver stops once the violation gap is at most `tol`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ndcore::Matrix;

pub const DEFAULT_SVM_C: f64 = 1.0;
pub const DEFAULT_SVM_TOL: f64 = 1e-3;
pub const DEFAULT_MAX_PASSES: usize = 100;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SvmParams {
    pub c: f64,
    pub gamma: f64,
    pub tol: f64,
    /// Iteration budget in units of `n` pair updates.
    pub max_passes: usize,
}

impl SvmParams {
    pub fn new(c: f64, gamma: f64) -> Self {
        Self { c, gamma, tol: DEFAULT_SVM_TOL, max_passes: DEFAULT_MAX_PASSES }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BinarySvm {
    pub support_vectors: Matrix,
    /// `αᵢ yᵢ` for each support vector.
    pub dual_coef: Vec<f64>,
    pub bias: f64,
    /// Full dual solution over the training rows.
    pub alpha: Vec<f64>,
    pub converged: bool,
}

impl BinarySvm {
    pub fn decision(&self, x: &[f64], gamma: f64) -> f64 {
        let mut s = self.bias;
        for (i, &c) in self.dual_coef.iter().enumerate() {
            s += c * rbf(self.support_vectors.row(i), x, gamma);
        }
        s
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SvmModel {
    pub classes: Vec<usize>,
    pub params: SvmParams,
    /// One model for two classes (positive = `classes[1]`), otherwise one per
    /// class against the rest.
    pub machines: Vec<BinarySvm>,
    pub n_features: usize,
}

pub fn rbf(a: &[f64], b: &[f64], gamma: f64) -> f64 {
    let d2: f64 = a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum();
    (-gamma * d2).exp()
}

fn kernel_matrix(z: &Matrix, gamma: f64) -> Vec<f64> {
    let n = z.rows();
    let mut k = vec![0.0; n * n];
    for i in 0..n {
        k[i * n + i] = 1.0;
        for j in 0..i {
            let v = rbf(z.row(i), z.row(j), gamma);
            k[i * n + j] = v;
            k[j * n + i] = v;
        }
    }
    k
}

fn solve_binary(z: &Matrix, kernel: &[f64], y: &[f64], p: &SvmParams) -> BinarySvm {
    let n = y.len();
    let c = p.c;
    let mut alpha = vec![0.0; n];
    let mut grad = vec![-1.0; n];
    let in_up = |a: f64, yt: f64| (yt > 0.0 && a < c) || (yt < 0.0 && a > 0.0);
    let in_low = |a: f64, yt: f64| (yt > 0.0 && a > 0.0) || (yt < 0.0 && a < c);
    let budget = p.max_passes.saturating_mul(n.max(1));
    let mut converged = false;
    for _ in 0..budget {
        let mut i = usize::MAX;
        let mut j = usize::MAX;
        let (mut m, mut big_m) = (f64::NEG_INFINITY, f64::INFINITY);
        for t in 0..n {
            let v = -y[t] * grad[t];
            if in_up(alpha[t], y[t]) && v > m {
                m = v;
                i = t;
            }
            if in_low(alpha[t], y[t]) && v < big_m {
                big_m = v;
                j = t;
            }
        }
        if i == usize::MAX || j == usize::MAX || m - big_m <= p.tol {
            converged = true;
            break;
        }
        let kii = kernel[i * n + i];
        let kjj = kernel[j * n + j];
        let kij = kernel[i * n + j];
        let eta = (kii + kjj - 2.0 * kij).max(1e-12);
        let (old_i, old_j) = (alpha[i], alpha[j]);
        if y[i] != y[j] {
            let delta = (-grad[i] - grad[j]) / eta;
            let diff = alpha[i] - alpha[j];
            alpha[i] += delta;
            alpha[j] += delta;
            if diff > 0.0 {
                if alpha[j] < 0.0 {
                    alpha[j] = 0.0;
                    alpha[i] = diff;
                }
            } else if alpha[i] < 0.0 {
                alpha[i] = 0.0;
                alpha[j] = -diff;
            }
            if diff > 0.0 {
                if alpha[i] > c {
                    alpha[i] = c;
                    alpha[j] = c - diff;
                }
            } else if alpha[j] > c {
                alpha[j] = c;
                alpha[i] = c + diff;
            }
        } else {
            let delta = (grad[i] - grad[j]) / eta;
            let sum = alpha[i] + alpha[j];
            alpha[i] -= delta;
            alpha[j] += delta;
            if sum > c {
                if alpha[i] > c {
                    alpha[i] = c;
                    alpha[j] = sum - c;
                }
            } else if alpha[j] < 0.0 {
                alpha[j] = 0.0;
                alpha[i] = sum;
            }
            if sum > c {
                if alpha[j] > c {
                    alpha[j] = c;
                    alpha[i] = sum - c;
                }
            } else if alpha[i] < 0.0 {
                alpha[i] = 0.0;
                alpha[j] = sum;
            }
        }
        let (di, dj) = (alpha[i] - old_i, alpha[j] - old_j);
        for t in 0..n {
            grad[t] += y[t] * (y[i] * kernel[t * n + i] * di + y[j] * kernel[t * n + j] * dj);
        }
    }
    let (mut ub, mut lb) = (f64::INFINITY, f64::NEG_INFINITY);
    let (mut free_sum, mut free_count) = (0.0, 0usize);
    for t in 0..n {
        let yg = y[t] * grad[t];
        if alpha[t] >= c {
            if y[t] < 0.0 {
                ub = ub.min(yg);
            } else {
                lb = lb.max(yg);
            }
        } else if alpha[t] <= 0.0 {
            if y[t] > 0.0 {
                ub = ub.min(yg);
            } else {
                lb = lb.max(yg);
            }
        } else {
            free_sum += yg;
            free_count += 1;
        }
    }
    let rho = if free_count > 0 {
        free_sum / free_count as f64
    } else if ub.is_finite() && lb.is_finite() {
        (ub + lb) / 2.0
    } else if ub.is_finite() {
        ub
    } else {
        lb
    };
    let support: Vec<usize> = (0..n).filter(|&t| alpha[t] > 0.0).collect();
    BinarySvm {
        support_vectors: z.select_rows(&support).expect("support indices are in range"),
        dual_coef: support.iter().map(|&t| alpha[t] * y[t]).collect(),
        bias: -rho,
        alpha,
        converged,
    }
}

pub fn svm_fit(z: &Matrix, labels: &[usize], params: &SvmParams) -> Result<SvmModel> {
    if z.rows() != labels.len() {
        return Err(Error::InvalidArgument(format!("{} rows but {} labels", z.rows(), labels.len())));
    }
    if !(params.c > 0.0) || !(params.gamma > 0.0) || !(params.tol > 0.0) {
        return Err(Error::InvalidArgument("C, gamma and tol must be positive".into()));
    }
    if !z.is_finite() {
        return Err(Error::NonFiniteValue);
    }
    let mut classes = labels.to_vec();
    classes.sort_unstable();
    classes.dedup();
    if classes.len() < 2 {
        return Err(Error::InvalidArgument("SVM needs at least two classes".into()));
    }
    let kernel = kernel_matrix(z, params.gamma);
    let positives: Vec<usize> = if classes.len() == 2 { vec![classes[1]] } else { classes.clone() };
    let machines = positives
        .iter()
        .map(|&pos| {
            let y: Vec<f64> = labels.iter().map(|&l| if l == pos { 1.0 } else { -1.0 }).collect();
            solve_binary(z, &kernel, &y, params)
        })
        .collect();
    Ok(SvmModel { classes, params: *params, machines, n_features: z.cols() })
}

impl SvmModel {
    /// Decision values, one column per machine.
    pub fn decision_values(&self, z: &Matrix) -> Result<Matrix> {
        if z.cols() != self.n_features {
            return Err(Error::ShapeMismatch { op: "svm predict", left: z.shape(), right: (z.rows(), self.n_features) });
        }
        let gamma = self.params.gamma;
        Ok(Matrix::from_fn(z.rows(), self.machines.len(), |i, m| self.machines[m].decision(z.row(i), gamma)))
    }
}

pub fn svm_predict(model: &SvmModel, z: &Matrix) -> Result<Vec<usize>> {
    let dv = model.decision_values(z)?;
    Ok((0..z.rows())
        .map(|i| {
            if model.machines.len() == 1 {
                if dv[(i, 0)] > 0.0 {
                    model.classes[1]
                } else {
                    model.classes[0]
                }
            } else {
                let row = dv.row(i);
                let mut best = 0;
                for (k, &v) in row.iter().enumerate() {
                    if v > row[best] {
                        best = k;
                    }
                }
                model.classes[best]
            }
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ndcore::Rng;
    use proptest::prelude::*;

    fn params(c: f64, gamma: f64) -> SvmParams {
        SvmParams::new(c, gamma)
    }

    /// Dual feasibility and KKT conditions of every machine.
    fn check_kkt(model: &SvmModel, z: &Matrix, labels: &[usize]) {
        let c = model.params.c;
        let tol = model.params.tol;
        let positives: Vec<usize> = if model.classes.len() == 2 { vec![model.classes[1]] } else { model.classes.clone() };
        for (m, pos) in model.machines.iter().zip(positives) {
            assert!(m.converged);
            let y: Vec<f64> = labels.iter().map(|&l| if l == pos { 1.0 } else { -1.0 }).collect();
            let balance: f64 = m.alpha.iter().zip(&y).map(|(a, y)| a * y).sum();
            assert!(balance.abs() <= 1e-6, "{balance}");
            for (t, &a) in m.alpha.iter().enumerate() {
                assert!((0.0..=c).contains(&a));
                let margin = y[t] * m.decision(z.row(t), model.params.gamma);
                if a <= 0.0 {
                    assert!(margin >= 1.0 - tol - 1e-12, "alpha 0, margin {margin}");
                } else if a >= c {
                    assert!(margin <= 1.0 + tol + 1e-12, "alpha C, margin {margin}");
                } else {
                    assert!((margin - 1.0).abs() <= tol + 1e-12, "free, margin {margin}");
                }
            }
        }
    }

    #[test]
    fn separable_pair() {
        let z = Matrix::from_rows(&[vec![1.0], vec![-1.0]]).unwrap();
        let labels = [0, 1];
        let model = svm_fit(&z, &labels, &params(1.0, 1.0)).unwrap();
        assert_eq!(svm_predict(&model, &z).unwrap(), labels);
        check_kkt(&model, &z, &labels);
    }

    #[test]
    fn xor_is_separable_with_rbf() {
        let z = Matrix::from_rows(&[vec![0.0, 0.0], vec![1.0, 1.0], vec![0.0, 1.0], vec![1.0, 0.0]]).unwrap();
        let labels = [0, 0, 1, 1];
        let model = svm_fit(&z, &labels, &params(10.0, 1.0)).unwrap();
        assert_eq!(svm_predict(&model, &z).unwrap(), labels);
        check_kkt(&model, &z, &labels);
        let m = &model.machines[0];
        for (t, &a) in m.alpha.iter().enumerate() {
            if a > 0.0 && a < 10.0 {
                let y = if labels[t] == 1 { 1.0 } else { -1.0 };
                assert!((m.decision(z.row(t), 1.0) - y).abs() <= 1e-3);
            }
        }
    }

    #[test]
    fn duplicated_columns_with_halved_gamma() {
        let mut rng = Rng::new(4);
        let z = rng.normal_matrix(30, 2);
        let labels: Vec<usize> = (0..30).map(|i| usize::from(z[(i, 0)] * z[(i, 1)] > 0.0)).collect();
        let doubled = z.hstack(&z).unwrap();
        let tight = |gamma| SvmParams { tol: 1e-9, ..params(1.0, gamma) };
        let a = svm_fit(&z, &labels, &tight(0.8)).unwrap();
        let b = svm_fit(&doubled, &labels, &tight(0.4)).unwrap();
        let test = rng.normal_matrix(20, 2);
        assert_eq!(svm_predict(&a, &test).unwrap(), svm_predict(&b, &test.hstack(&test).unwrap()).unwrap());
        let da = a.decision_values(&test).unwrap();
        let db = b.decision_values(&test.hstack(&test).unwrap()).unwrap();
        assert!(da.sub(&db).unwrap().max_abs() < 1e-6);
    }

    #[test]
    fn three_classes_one_vs_rest() {
        let mut rng = Rng::new(5);
        let centers = [(-3.0, 0.0), (3.0, 0.0), (0.0, 3.0)];
        let mut rows = Vec::new();
        let mut labels = Vec::new();
        for (k, (cx, cy)) in centers.iter().enumerate() {
            for _ in 0..15 {
                rows.push(vec![cx + 0.3 * rng.normal(), cy + 0.3 * rng.normal()]);
                labels.push(k * 2);
            }
        }
        let z = Matrix::from_rows(&rows).unwrap();
        let model = svm_fit(&z, &labels, &params(1.0, 0.5)).unwrap();
        assert_eq!(model.classes, vec![0, 2, 4]);
        assert_eq!(svm_predict(&model, &z).unwrap(), labels);
        check_kkt(&model, &z, &labels);
    }

    #[test]
    fn errors_and_empty_test() {
        let z = Matrix::from_rows(&[vec![1.0], vec![2.0]]).unwrap();
        assert!(svm_fit(&z, &[1, 1], &params(1.0, 1.0)).is_err());
        assert!(svm_fit(&z, &[0], &params(1.0, 1.0)).is_err());
        assert!(svm_fit(&z, &[0, 1], &params(0.0, 1.0)).is_err());
        let model = svm_fit(&z, &[0, 1], &params(1.0, 1.0)).unwrap();
        assert!(svm_predict(&model, &Matrix::zeros(0, 1)).unwrap().is_empty());
        assert!(svm_predict(&model, &Matrix::zeros(1, 2)).is_err());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]
        #[test]
        fn kkt_holds_on_random_problems(seed in any::<u64>(), n in 4usize..40, c in 0.1..10.0f64, gamma in 0.05..2.0f64) {
            let mut rng = Rng::new(seed);
            let z = rng.normal_matrix(n, 3);
            let mut labels: Vec<usize> = (0..n).map(|_| rng.below(2)).collect();
            labels[0] = 0;
            labels[1] = 1;
            let model = svm_fit(&z, &labels, &params(c, gamma)).unwrap();
            check_kkt(&model, &z, &labels);
        }

        #[test]
        fn row_permutation_keeps_predictions(seed in any::<u64>()) {
            let mut rng = Rng::new(seed);
            let n = 30;
            let z = rng.normal_matrix(n, 2);
            let labels: Vec<usize> = (0..n).map(|i| usize::from(z[(i, 0)] + 0.5 * z[(i, 1)] > 0.0)).collect();
            prop_assume!(labels.contains(&0) && labels.contains(&1));
            let mut perm: Vec<usize> = (0..n).collect();
            rng.shuffle(&mut perm);
            let zp = z.select_rows(&perm).unwrap();
            let lp: Vec<usize> = perm.iter().map(|&i| labels[i]).collect();
            let p = SvmParams { tol: 1e-8, ..params(1.0, 0.5) };
            let a = svm_fit(&z, &labels, &p).unwrap();
            let b = svm_fit(&zp, &lp, &p).unwrap();
            let test = Rng::new(seed ^ 1).normal_matrix(25, 2);
            let da = a.decision_values(&test).unwrap();
            let db = b.decision_values(&test).unwrap();
            for i in 0..25 {
                if da[(i, 0)].abs() > 1e-4 {
                    prop_assert_eq!(da[(i, 0)] > 0.0, db[(i, 0)] > 0.0);
                }
            }
        }
    }
}
