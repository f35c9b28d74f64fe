use crate::error::{Error, Result};
use crate::numerics::{sym_eig, Matrix};

/// Explained-variance ratios of the rows of `tokens`, largest first. All
/// zeros when the cloud has no variance.
pub fn explained_variance(tokens: &Matrix) -> Result<Vec<f64>> {
    let (n, dim) = tokens.shape();
    if n < 2 {
        return Err(Error::contract("PCA needs at least two tokens"));
    }
    let means = tokens.column_sums().scale(1.0 / n as f64);
    let centered = Matrix::from_fn(n, dim, |i, j| tokens[(i, j)] - means[(0, j)]);
    let cov = centered.t_matmul(&centered)?.scale(1.0 / (n - 1) as f64);
    let cov = Matrix::from_fn(dim, dim, |i, j| 0.5 * (cov[(i, j)] + cov[(j, i)]));
    let eigenvalues: Vec<f64> = sym_eig(&cov)?.eigenvalues.into_iter().map(|l| l.max(0.0)).collect();
    let total: f64 = eigenvalues.iter().sum();
    if total <= 0.0 {
        return Ok(vec![0.0; dim]);
    }
    Ok(eigenvalues.into_iter().map(|l| l / total).collect())
}

/// Smallest number of principal components whose cumulative explained
/// variance reaches `threshold`; 0 for a cloud with no variance.
pub fn effective_dim(tokens: &Matrix, threshold: f64) -> Result<usize> {
    if !(threshold > 0.0 && threshold <= 1.0) {
        return Err(Error::contract(format!("threshold {threshold} must lie in (0, 1]")));
    }
    let ratios = explained_variance(tokens)?;
    if ratios.iter().all(|&r| r == 0.0) {
        return Ok(0);
    }
    let mut cumulative = 0.0;
    for (k, r) in ratios.iter().enumerate() {
        cumulative += r;
        if cumulative >= threshold - 1e-12 {
            return Ok(k + 1);
        }
    }
    Ok(ratios.len())
}
