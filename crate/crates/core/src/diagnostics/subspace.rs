use crate::error::{Error, Result};
use crate::numerics::{orthonormality_defect, orthonormalize_columns, spectral_norm, top_r_svd, Matrix};

/// `‖P_U − P_V‖₂` for orthonormal bases `u` and `v` of equal-dimension
/// subspaces: the sine of the largest principal angle, in `[0, 1]`.
pub fn subspace_distance(u: &Matrix, v: &Matrix) -> Result<f64> {
    if u.shape() != v.shape() {
        return Err(Error::shape(format!("bases {:?} and {:?} differ in shape", u.shape(), v.shape())));
    }
    for (name, b) in [("u", u), ("v", v)] {
        let defect = orthonormality_defect(b);
        if defect > 1e-8 {
            return Err(Error::contract(format!("{name} is not orthonormal (Gram deviation {defect:e})")));
        }
    }
    let diff = u.matmul_t(u)?.sub(&v.matmul_t(v)?)?;
    Ok(spectral_norm(&diff)?.clamp(0.0, 1.0))
}

/// Leading `r` left singular vectors of `x`.
pub fn left_subspace(x: &Matrix, r: usize) -> Result<Matrix> {
    Ok(top_r_svd(x, r)?.left)
}

/// Leading `r` right singular vectors of `x`.
pub fn right_subspace(x: &Matrix, r: usize) -> Result<Matrix> {
    Ok(top_r_svd(x, r)?.right)
}

/// Orthonormal basis of the column space of a full-column-rank `m`.
pub fn column_basis(m: &Matrix) -> Matrix {
    orthonormalize_columns(m)
}
