//! Numerical check of the phase/patch subspace stability bounds on
//! synthetic low-rank data.
//!
//! With `X = A·Gᵀ + N` and `X' = X·Sᵀ + R`, the left (phase) subspace moves
//! by at most `C(‖N‖₂ + ‖N'‖₂ + ‖R‖₂)/δ_min`, while the right (patch)
//! subspace moves by at least `d(Col(G), Col(S·G))` minus the same amount.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::subspace::{column_basis, left_subspace, right_subspace, subspace_distance};
use crate::data::{gen_low_rank, SyntheticLowRank};
use crate::error::{Error, Result};
use crate::numerics::{spectral_norm, top_r_svd};

/// The perturbation constant `C = 2√2`.
pub const STABILITY_CONSTANT: f64 = 2.0 * std::f64::consts::SQRT_2;

/// Slack for floating-point rounding when comparing distances to bounds.
const ROUNDING_SLACK: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StabilityReport {
    pub d_phase: f64,
    pub d_patch: f64,
    pub d0: f64,
    pub delta: f64,
    pub delta_prime: f64,
    pub delta_min: f64,
    pub norm_n: f64,
    pub norm_n_prime: f64,
    pub norm_r: f64,
    pub c_const: f64,
    pub phase_bound: f64,
    pub patch_lower_bound: f64,
}

impl StabilityReport {
    /// Both inequalities, up to rounding slack of 1e-9.
    pub fn holds(&self) -> bool {
        self.phase_holds() && self.patch_holds()
    }

    pub fn phase_holds(&self) -> bool {
        self.d_phase <= self.phase_bound + ROUNDING_SLACK
    }

    pub fn patch_holds(&self) -> bool {
        self.d_patch >= self.patch_lower_bound - ROUNDING_SLACK
    }
}

/// Draws one sample from `spec` and compares the measured subspace motion
/// with both bounds.
pub fn verify_stability(spec: &SyntheticLowRank) -> Result<StabilityReport> {
    let sample = gen_low_rank(spec)?;
    let r = spec.r;
    let signal = &sample.signal;
    let delta = top_r_svd(signal, r)?.singulars[r - 1];
    let delta_prime = top_r_svd(&signal.matmul_t(&spec.s)?, r)?.singulars[r - 1];
    let delta_min = delta.min(delta_prime);
    if delta_min < 1e-10 {
        return Err(Error::IllPosed { delta_min });
    }

    let d_phase = subspace_distance(&left_subspace(&sample.x, r)?, &left_subspace(&sample.x_prime, r)?)?;
    let d_patch = subspace_distance(&right_subspace(&sample.x, r)?, &right_subspace(&sample.x_prime, r)?)?;
    let d0 = subspace_distance(&column_basis(&spec.g), &column_basis(&spec.s.matmul(&spec.g)?))?;

    let norm_n = spectral_norm(&sample.noise)?;
    let norm_n_prime = spectral_norm(&sample.noise_prime)?;
    let norm_r = spectral_norm(&sample.r_pert)?;
    let phase_bound = STABILITY_CONSTANT * (norm_n + norm_n_prime + norm_r) / delta_min;
    Ok(StabilityReport {
        d_phase,
        d_patch,
        d0,
        delta,
        delta_prime,
        delta_min,
        norm_n,
        norm_n_prime,
        norm_r,
        c_const: STABILITY_CONSTANT,
        phase_bound,
        patch_lower_bound: d0 - phase_bound,
    })
}

/// Aggregate of a batch of seeded trials.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StabilitySummary {
    pub trials: usize,
    pub phase_holds: usize,
    pub patch_holds: usize,
    pub max_d_phase: f64,
    pub min_d_patch: f64,
    pub reports: Vec<StabilityReport>,
}

/// Runs `trials` independent random specs with seeds `seed, seed + 1, …`.
pub fn stability_trials(
    d: usize,
    h: usize,
    r: usize,
    noise: f64,
    eps: f64,
    seed: u64,
    trials: usize,
) -> Result<StabilitySummary> {
    let reports = (0..trials as u64)
        .into_par_iter()
        .map(|i| verify_stability(&SyntheticLowRank::random(d, h, r, noise, eps, seed + i)?))
        .collect::<Result<Vec<_>>>()?;
    Ok(StabilitySummary {
        trials,
        phase_holds: reports.iter().filter(|r| r.phase_holds()).count(),
        patch_holds: reports.iter().filter(|r| r.patch_holds()).count(),
        max_d_phase: reports.iter().map(|r| r.d_phase).fold(0.0, f64::max),
        min_d_patch: reports.iter().map(|r| r.d_patch).fold(f64::INFINITY, f64::min),
        reports,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::Matrix;

    #[test]
    fn noiseless_phase_space_is_invariant() {
        for seed in 0..5 {
            let spec = SyntheticLowRank::random(40, 28, 3, 0.0, 0.0, seed).unwrap();
            let rep = verify_stability(&spec).unwrap();
            assert!(rep.d_phase <= 1e-8, "{}", rep.d_phase);
            assert!((rep.d_patch - rep.d0).abs() < 1e-8);
            assert!(rep.d0 > 0.1);
            assert!(rep.holds());
        }
    }

    #[test]
    fn transform_fixing_the_pattern_space() {
        let base = SyntheticLowRank::random(12, 8, 2, 0.0, 0.0, 3).unwrap();
        // Reflection through the orthogonal complement of Col(G).
        let q = column_basis(&base.g);
        let s = Matrix::identity(8).sub(&Matrix::identity(8).sub(&q.matmul_t(&q).unwrap()).unwrap().scale(2.0)).unwrap();
        let spec = SyntheticLowRank::new(base.a.clone(), base.g.clone(), s, 0.0, 0.0, 3).unwrap();
        let rep = verify_stability(&spec).unwrap();
        assert!(rep.d0 < 1e-10);
        assert!(rep.d_patch < 1e-8);
    }

    #[test]
    fn vanishing_separation_is_ill_posed() {
        let base = SyntheticLowRank::random(12, 8, 2, 0.0, 0.0, 4).unwrap();
        let spec = SyntheticLowRank::new(base.a.scale(1e-6), base.g.scale(1e-6), base.s.clone(), 0.0, 0.0, 4).unwrap();
        assert!(matches!(verify_stability(&spec), Err(Error::IllPosed { .. })));
    }

    #[test]
    fn noisy_trials_respect_bounds() {
        let summary = stability_trials(20, 14, 2, 1e-3, 1e-3, 10, 10).unwrap();
        assert_eq!(summary.phase_holds, 10);
        assert_eq!(summary.patch_holds, 10);
    }
}
