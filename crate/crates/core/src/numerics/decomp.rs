//! Symmetric eigendecomposition (cyclic Jacobi) and a truncated SVD built on
//! the Gram matrix of the smaller side.

use super::matrix::{dot, Matrix};
use crate::error::{Error, Result};

const MAX_SWEEPS: usize = 100;

/// Eigen-pairs of a symmetric matrix, sorted by descending eigenvalue.
#[derive(Debug, Clone)]
pub struct EigenResult {
    pub eigenvalues: Vec<f64>,
    /// Column `i` is the unit eigenvector for `eigenvalues[i]`.
    pub eigenvectors: Matrix,
}

/// Truncated singular value decomposition `a ≈ left · diag(singulars) · rightᵀ`.
#[derive(Debug, Clone)]
pub struct Svd {
    pub left: Matrix,
    pub singulars: Vec<f64>,
    pub right: Matrix,
}

/// Cyclic Jacobi eigendecomposition of a symmetric matrix.
///
/// Sweeps until the off-diagonal Frobenius norm falls below
/// `1e-12 · ‖a‖_F`.
pub fn sym_eig(a: &Matrix) -> Result<EigenResult> {
    let n = a.rows();
    if a.cols() != n {
        return Err(Error::shape(format!("sym_eig needs a square matrix, got {}x{}", n, a.cols())));
    }
    let scale = a.max_abs().max(1.0);
    for i in 0..n {
        for j in (i + 1)..n {
            if (a[(i, j)] - a[(j, i)]).abs() > 1e-10 * scale {
                return Err(Error::contract(format!(
                    "sym_eig input is not symmetric at ({i},{j}): {} vs {}",
                    a[(i, j)],
                    a[(j, i)]
                )));
            }
        }
    }

    let mut m = a.clone();
    let mut v = Matrix::identity(n);
    let tol = 1e-12 * a.frobenius_norm();

    for _ in 0..MAX_SWEEPS {
        let off = off_diagonal_norm(&m);
        if off <= tol {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = m[(p, q)];
                if apq == 0.0 {
                    continue;
                }
                let theta = (m[(q, q)] - m[(p, p)]) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let (mkp, mkq) = (m[(k, p)], m[(k, q)]);
                    m[(k, p)] = c * mkp - s * mkq;
                    m[(k, q)] = s * mkp + c * mkq;
                }
                for k in 0..n {
                    let (mpk, mqk) = (m[(p, k)], m[(q, k)]);
                    m[(p, k)] = c * mpk - s * mqk;
                    m[(q, k)] = s * mpk + c * mqk;
                }
                m[(p, q)] = 0.0;
                m[(q, p)] = 0.0;
                for k in 0..n {
                    let (vkp, vkq) = (v[(k, p)], v[(k, q)]);
                    v[(k, p)] = c * vkp - s * vkq;
                    v[(k, q)] = s * vkp + c * vkq;
                }
            }
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| m[(j, j)].total_cmp(&m[(i, i)]).then(i.cmp(&j)));
    let eigenvalues = order.iter().map(|&i| m[(i, i)]).collect();
    let eigenvectors = Matrix::from_fn(n, n, |r, c| v[(r, order[c])]);
    Ok(EigenResult {
        eigenvalues,
        eigenvectors,
    })
}

fn off_diagonal_norm(m: &Matrix) -> f64 {
    let n = m.rows();
    let mut s = 0.0;
    for i in 0..n {
        for j in 0..n {
            if i != j {
                s += m[(i, j)] * m[(i, j)];
            }
        }
    }
    s.sqrt()
}

/// Leading `r` singular triplets of `a`, computed from the eigendecomposition
/// of the Gram matrix of the smaller side.
pub fn top_r_svd(a: &Matrix, r: usize) -> Result<Svd> {
    let (rows, cols) = a.shape();
    if r == 0 || r > rows.min(cols) {
        return Err(Error::shape(format!(
            "rank {r} out of range for a {rows}x{cols} matrix"
        )));
    }
    let wide = rows <= cols;
    // Gram of the smaller side: a·aᵀ when wide, aᵀ·a when tall.
    let gram = if wide { a.matmul_t(a)? } else { a.t_matmul(a)? };
    let eig = sym_eig(&gram)?;
    let singulars: Vec<f64> = eig.eigenvalues[..r].iter().map(|&l| l.max(0.0).sqrt()).collect();
    let small = eig.eigenvectors.columns(0, r);

    // Other side: a·v/σ (tall) or aᵀ·u/σ (wide).
    let projected = if wide { a.t_matmul(&small)? } else { a.matmul(&small)? };
    let floor = singulars[0] * 1e-13;
    let mut other = Matrix::zeros(projected.rows(), r);
    for (j, &s) in singulars.iter().enumerate() {
        if s > floor && s > 0.0 {
            for i in 0..projected.rows() {
                other[(i, j)] = projected[(i, j)] / s;
            }
        }
    }
    let other = orthonormalize_columns(&other);
    let (left, right) = if wide { (small, other) } else { (other, small) };
    Ok(Svd {
        left,
        singulars,
        right,
    })
}

/// Largest singular value.
pub fn spectral_norm(a: &Matrix) -> Result<f64> {
    if a.is_empty() {
        return Ok(0.0);
    }
    Ok(top_r_svd(a, 1)?.singulars[0])
}

/// Modified Gram–Schmidt with one re-orthogonalization pass. Columns that
/// collapse to (numerically) zero are replaced by orthogonalized unit axes,
/// so the result always has orthonormal columns.
pub fn orthonormalize_columns(m: &Matrix) -> Matrix {
    let (n, k) = m.shape();
    let mut basis: Vec<Vec<f64>> = Vec::with_capacity(k);
    let reference = (0..k).map(|j| norm(&m.col(j))).fold(0.0, f64::max).max(1.0);
    let mut next_axis = 0;
    for j in 0..k {
        let mut v = m.col(j);
        let original = norm(&v);
        project_out(&mut v, &basis);
        let mut len = norm(&v);
        if len <= 1e-10 * reference.max(original) || len == 0.0 {
            loop {
                let mut e = vec![0.0; n];
                e[next_axis % n] = 1.0;
                next_axis += 1;
                project_out(&mut e, &basis);
                let l = norm(&e);
                if l > 1e-6 {
                    v = e;
                    len = l;
                    break;
                }
            }
        }
        v.iter_mut().for_each(|x| *x /= len);
        basis.push(v);
    }
    Matrix::from_fn(n, k, |r, c| basis[c][r])
}

fn project_out(v: &mut [f64], basis: &[Vec<f64>]) {
    for _ in 0..2 {
        for b in basis {
            let p = dot(v, b);
            for (x, y) in v.iter_mut().zip(b) {
                *x -= p * y;
            }
        }
    }
}

fn norm(v: &[f64]) -> f64 {
    dot(v, v).sqrt()
}

/// Largest absolute deviation of `qᵀq` from the identity.
pub fn orthonormality_defect(q: &Matrix) -> f64 {
    let g = q.t_matmul(q).expect("square gram");
    let mut worst: f64 = 0.0;
    for i in 0..g.rows() {
        for j in 0..g.cols() {
            let target = if i == j { 1.0 } else { 0.0 };
            worst = worst.max((g[(i, j)] - target).abs());
        }
    }
    worst
}
