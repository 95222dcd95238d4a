use crate::error::{Error, Result};
use crate::ndcore::Matrix;

/// Lower-triangular `L` with `L Lᵀ = a`.
pub fn cholesky(a: &Matrix) -> Result<Matrix> {
    let n = a.rows();
    if a.cols() != n {
        return Err(Error::ShapeMismatch { op: "cholesky", left: a.shape(), right: (n, n) });
    }
    let mut l = Matrix::zeros(n, n);
    for j in 0..n {
        let mut d = a[(j, j)];
        for k in 0..j {
            d -= l[(j, k)] * l[(j, k)];
        }
        if !(d > 0.0) || !d.is_finite() {
            return Err(Error::NotPositiveDefinite);
        }
        let djj = d.sqrt();
        l[(j, j)] = djj;
        for i in (j + 1)..n {
            let mut s = a[(i, j)];
            for k in 0..j {
                s -= l[(i, k)] * l[(j, k)];
            }
            l[(i, j)] = s / djj;
        }
    }
    Ok(l)
}

/// Inverse of a symmetric positive definite matrix via its Cholesky factor.
pub fn spd_inverse(a: &Matrix) -> Result<Matrix> {
    let l = cholesky(a)?;
    let n = a.rows();
    let mut inv = Matrix::zeros(n, n);
    let mut y = vec![0.0; n];
    let mut x = vec![0.0; n];
    for col in 0..n {
        for i in 0..n {
            let mut s = if i == col { 1.0 } else { 0.0 };
            for k in 0..i {
                s -= l[(i, k)] * y[k];
            }
            y[i] = s / l[(i, i)];
        }
        for i in (0..n).rev() {
            let mut s = y[i];
            for k in (i + 1)..n {
                s -= l[(k, i)] * x[k];
            }
            x[i] = s / l[(i, i)];
        }
        for i in 0..n {
            inv[(i, col)] = x[i];
        }
    }
    for i in 0..n {
        for j in 0..i {
            let v = 0.5 * (inv[(i, j)] + inv[(j, i)]);
            inv[(i, j)] = v;
            inv[(j, i)] = v;
        }
    }
    Ok(inv)
}

/// Columns of `v` made orthonormal under `⟨a, b⟩ = aᵀ Σ b` (modified
/// Gram–Schmidt with one re-orthogonalization pass).
pub fn gram_schmidt_weighted(v: &Matrix, sigma: &Matrix) -> Result<Matrix> {
    let p = v.rows();
    if sigma.shape() != (p, p) {
        return Err(Error::ShapeMismatch { op: "gram_schmidt", left: v.shape(), right: sigma.shape() });
    }
    let inner = |a: &[f64], b: &[f64]| -> f64 {
        let mut s = 0.0;
        for i in 0..p {
            if a[i] == 0.0 {
                continue;
            }
            let row = sigma.row(i);
            let mut t = 0.0;
            for j in 0..p {
                t += row[j] * b[j];
            }
            s += a[i] * t;
        }
        s
    };
    let mut cols: Vec<Vec<f64>> = (0..v.cols()).map(|j| v.column(j)).collect();
    for j in 0..cols.len() {
        for _ in 0..2 {
            for k in 0..j {
                let proj = inner(&cols[k], &cols[j]);
                let (done, rest) = cols.split_at_mut(j);
                for (x, b) in rest[0].iter_mut().zip(&done[k]) {
                    *x -= proj * b;
                }
            }
        }
        let norm = inner(&cols[j], &cols[j]);
        if !(norm > 0.0) {
            return Err(Error::InvalidArgument("columns are linearly dependent under the weighted inner product".into()));
        }
        let s = 1.0 / norm.sqrt();
        cols[j].iter_mut().for_each(|x| *x *= s);
    }
    Ok(Matrix::from_fn(p, cols.len(), |i, j| cols[j][i]))
}
