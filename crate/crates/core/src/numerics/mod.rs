//! Dense linear algebra substrate: a row-major `f64` matrix, row softmax,
//! Jacobi eigendecomposition, truncated SVD and finite-difference gradients.

mod decomp;
mod grad;
mod matrix;

pub use decomp::{
    orthonormality_defect, orthonormalize_columns, spectral_norm, sym_eig, top_r_svd, EigenResult, Svd,
};
pub use grad::{finite_diff_grad, relative_error};
pub use matrix::{count_macs, dot, softmax_rows, Matrix};
