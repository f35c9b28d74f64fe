//! Squared maximum mean discrepancy with an RBF kernel.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::Matrix;

/// Kernel bandwidth choice for `k(x, y) = exp(−γ‖x − y‖²)`.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Bandwidth {
    Gamma(f64),
    /// `γ = 1/(2·median²)` over all pooled pairwise distances.
    #[default]
    Median,
}

fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Median-heuristic `γ` over the rows of `p` and `q` pooled. Falls back to
/// 1 when the median distance is zero.
pub fn median_gamma(p: &Matrix, q: &Matrix) -> f64 {
    let rows: Vec<&[f64]> = (0..p.rows()).map(|i| p.row(i)).chain((0..q.rows()).map(|i| q.row(i))).collect();
    let mut d2 = Vec::with_capacity(rows.len() * rows.len().saturating_sub(1) / 2);
    for i in 0..rows.len() {
        for j in i + 1..rows.len() {
            d2.push(sq_dist(rows[i], rows[j]));
        }
    }
    if d2.is_empty() {
        return 1.0;
    }
    let mid = d2.len() / 2;
    let median_sq = if d2.len() % 2 == 1 {
        *d2.select_nth_unstable_by(mid, f64::total_cmp).1
    } else {
        let upper = *d2.select_nth_unstable_by(mid, f64::total_cmp).1;
        let lower = d2[..mid].iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        // Median of distances, squared.
        ((lower.sqrt() + upper.sqrt()) / 2.0).powi(2)
    };
    if median_sq > 0.0 {
        1.0 / (2.0 * median_sq)
    } else {
        1.0
    }
}

fn mean_kernel(a: &Matrix, b: &Matrix, gamma: f64) -> f64 {
    let mut s = 0.0;
    for i in 0..a.rows() {
        for j in 0..b.rows() {
            s += (-gamma * sq_dist(a.row(i), b.row(j))).exp();
        }
    }
    s / (a.rows() * b.rows()) as f64
}

/// Biased (V-statistic) estimate of MMD² between the row samples of `p`
/// and `q`. Always ≥ 0, and exactly 0 when `p == q`.
pub fn rbf_mmd2(p: &Matrix, q: &Matrix, bandwidth: Bandwidth) -> Result<f64> {
    if p.is_empty() || q.is_empty() {
        return Err(Error::contract("MMD needs nonempty samples"));
    }
    if p.cols() != q.cols() {
        return Err(Error::shape(format!("sample dims {} and {} differ", p.cols(), q.cols())));
    }
    let gamma = match bandwidth {
        Bandwidth::Gamma(g) if g > 0.0 && g.is_finite() => g,
        Bandwidth::Gamma(g) => return Err(Error::contract(format!("γ = {g} must be positive"))),
        Bandwidth::Median => median_gamma(p, q),
    };
    let value = mean_kernel(p, p, gamma) + mean_kernel(q, q, gamma) - 2.0 * mean_kernel(p, q, gamma);
    Ok(value.max(0.0))
}
