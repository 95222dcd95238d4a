use serde::{Deserialize, Serialize};

use super::Matrix;
use crate::error::{Error, Result};

/// Moment estimates for one parameter tensor.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AdamState {
    pub m: Matrix,
    pub v: Matrix,
    pub t: u64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl AdamState {
    pub fn new(rows: usize, cols: usize) -> Self {
        Self {
            m: Matrix::zeros(rows, cols),
            v: Matrix::zeros(rows, cols),
            t: 0,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
        }
    }

    pub fn for_param(param: &Matrix) -> Self {
        Self::new(param.rows(), param.cols())
    }
}

/// One bias-corrected ADAM update of `param` in place.
pub fn adam_step(param: &mut Matrix, grad: &Matrix, state: &mut AdamState, lr: f64) -> Result<()> {
    param.ensure_same_shape(grad, "adam_step")?;
    param.ensure_same_shape(&state.m, "adam_step")?;
    param.ensure_same_shape(&state.v, "adam_step")?;
    if !(lr > 0.0) {
        return Err(Error::InvalidArgument(format!("learning rate must be positive, got {lr}")));
    }
    state.t += 1;
    let (b1, b2) = (state.beta1, state.beta2);
    let c1 = 1.0 - b1.powi(state.t as i32);
    let c2 = 1.0 - b2.powi(state.t as i32);
    let p = param.as_mut_slice();
    let m = state.m.as_mut_slice();
    let v = state.v.as_mut_slice();
    for (((p, &g), m), v) in p.iter_mut().zip(grad.as_slice()).zip(m.iter_mut()).zip(v.iter_mut()) {
        *m = b1 * *m + (1.0 - b1) * g;
        *v = b2 * *v + (1.0 - b2) * g * g;
        let m_hat = *m / c1;
        let v_hat = *v / c2;
        *p -= lr * m_hat / (v_hat.sqrt() + state.eps);
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn first_step_closed_form() {
        let mut p = Matrix::zeros(1, 1);
        let mut s = AdamState::for_param(&p);
        adam_step(&mut p, &Matrix::filled(1, 1, 0.5), &mut s, 0.1).unwrap();
        // m̂ = 0.5, v̂ = 0.25
        let expected = -0.1 * 0.5 / (0.5 + 1e-8);
        assert!((p[(0, 0)] - expected).abs() < 1e-15);
        assert!((p[(0, 0)] + 0.1).abs() < 1e-7);
        assert_eq!(s.t, 1);
    }

    #[test]
    fn zero_gradient_is_a_fixed_point() {
        let mut p = Matrix::from_rows(&[vec![1.0, -2.0]]).unwrap();
        let before = p.clone();
        let mut s = AdamState::for_param(&p);
        adam_step(&mut p, &Matrix::zeros(1, 2), &mut s, 0.01).unwrap();
        assert_eq!(p, before);
        assert_eq!(s.t, 1);
    }

    #[test]
    fn deterministic() {
        let g = Matrix::from_rows(&[vec![0.3, -1.1], vec![2.0, 0.0]]).unwrap();
        let run = || {
            let mut p = Matrix::filled(2, 2, 0.25);
            let mut s = AdamState::for_param(&p);
            for _ in 0..3 {
                adam_step(&mut p, &g, &mut s, 1e-2).unwrap();
            }
            (p, s)
        };
        assert_eq!(run(), run());
    }

    #[test]
    fn first_step_moves_against_gradient_sign() {
        let g = Matrix::from_rows(&[vec![3.0, -0.001, 7.0]]).unwrap();
        let mut p = Matrix::zeros(1, 3);
        let mut s = AdamState::for_param(&p);
        adam_step(&mut p, &g, &mut s, 1e-3).unwrap();
        for (pv, gv) in p.as_slice().iter().zip(g.as_slice()) {
            assert_eq!(pv.signum(), -gv.signum());
        }
    }

    #[test]
    fn shape_mismatch_is_an_error() {
        let mut p = Matrix::zeros(2, 2);
        let mut s = AdamState::for_param(&p);
        assert!(adam_step(&mut p, &Matrix::zeros(1, 2), &mut s, 0.1).is_err());
    }
}
