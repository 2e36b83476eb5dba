//! Numerical kernels: dense complex solves, null vectors, affine forms in
//! the unknown coefficients, matrix-valued functions, and zero finding by
//! the argument principle.

mod affine;
mod contour;
mod linalg;
mod matrix_fn;

pub use affine::AffineVector;
pub use contour::{
    count_zeros, find_zeros_in_rect, find_zeros_right_halfplane, newton, numerical_derivative,
    Contour, ZeroSet, CONTOUR_MIN_ABS, HALF_PLANE_INSET,
};
pub use linalg::{
    adjugate, condition_number, determinant, max_abs, null_vector_left, null_vector_right,
    singular_values, solve_dense, solve_dense_multi, CMatrix, CVector, DenseSolution,
    SINGULAR_CONDITION,
};
pub use matrix_fn::MatrixFunction;
