//! Dense numerics shared by the rest of the crate: the matrix type, seeded
//! random streams, ADAM, small dense factorizations, activations, row projection, standardization and a
//! finite-difference gradient checker.

mod adam;
mod linalg;
mod matrix;
mod ops;
mod rng;

pub use adam::{adam_step, AdamState};
pub use linalg::{cholesky, gram_schmidt_weighted, spd_inverse};
pub use matrix::Matrix;
pub use ops::{
    elu, elu_grad, finite_diff_grad, max_relative_error, project_rows_unit_ball, project_rows_unit_ball_in_place, standardize_apply,
    standardize_fit, standardize_invert, ColumnStats,
};
pub use rng::Rng;
