//! Synthetic data: low-rank day × hour matrices under shared and day-wise
//! cycle transforms, drifting cycle series, and simple benchmark signals.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use super::RawDataset;
use crate::error::{Error, Result};
use crate::numerics::{orthonormalize_columns, spectral_norm, top_r_svd, Matrix};

/// Seeded recipe for `X = A·Gᵀ + N` (`D × H`, days by within-day offsets)
/// and its transformed counterpart `X' = X·Sᵀ + R` where row `d` of `R` is
/// `X[d,:]·Δ_dᵀ` with `‖Δ_d‖₂ ≤ ε`.
#[derive(Debug, Clone)]
pub struct SyntheticLowRank {
    /// `D × r` day loadings.
    pub a: Matrix,
    /// `H × r` cycle patterns.
    pub g: Matrix,
    /// `H × H` shared transform of the cycle dimension.
    pub s: Matrix,
    /// Bound `ε` on each day-wise deviation `‖Δ_d‖₂`.
    pub delta_scale: f64,
    pub noise_scale: f64,
    pub r: usize,
    /// Seeds the noise and day-wise deviations.
    pub seed: u64,
}

impl SyntheticLowRank {
    pub fn new(a: Matrix, g: Matrix, s: Matrix, noise_scale: f64, delta_scale: f64, seed: u64) -> Result<Self> {
        let spec = Self {
            r: a.cols(),
            a,
            g,
            s,
            delta_scale,
            noise_scale,
            seed,
        };
        spec.validate()?;
        Ok(spec)
    }

    /// Gaussian `A` and `G` with a Haar-random rotation `S`.
    pub fn random(d: usize, h: usize, r: usize, noise_scale: f64, delta_scale: f64, seed: u64) -> Result<Self> {
        if r == 0 || r > d.min(h) {
            return Err(Error::Spec(format!("rank {r} must lie in 1..={}", d.min(h))));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let a = Matrix::random_normal(d, r, &mut rng);
        let g = Matrix::random_normal(h, r, &mut rng);
        let s = random_rotation(h, &mut rng);
        Self::new(a, g, s, noise_scale, delta_scale, seed)
    }

    /// Rank-2 daily cycles: Gaussian day loadings on the within-day patterns
    /// `sin(2πℓ/H)` and `cos(2πℓ/H)`, with a Haar-random `S`.
    pub fn daily_cycles(days: usize, hours: usize, noise_scale: f64, delta_scale: f64, seed: u64) -> Result<Self> {
        if days < 2 || hours < 3 {
            return Err(Error::Spec(format!("daily cycles need ≥ 2 days and ≥ 3 offsets, got {days}x{hours}")));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let a = Matrix::random_normal(days, 2, &mut rng);
        let g = Matrix::from_fn(hours, 2, |l, k| {
            let angle = 2.0 * PI * l as f64 / hours as f64;
            if k == 0 {
                angle.sin()
            } else {
                angle.cos()
            }
        });
        let s = random_rotation(hours, &mut rng);
        Self::new(a, g, s, noise_scale, delta_scale, seed)
    }

    pub fn days(&self) -> usize {
        self.a.rows()
    }

    pub fn offsets(&self) -> usize {
        self.g.rows()
    }

    /// Checks shapes and that `A`, `G` and `S·G` all have rank `r`.
    pub fn validate(&self) -> Result<()> {
        let (d, h, r) = (self.a.rows(), self.g.rows(), self.r);
        if r == 0 || r > d.min(h) || self.a.cols() != r || self.g.cols() != r {
            return Err(Error::Spec(format!(
                "A is {}x{}, G is {}x{}: need a common rank 1 ≤ r ≤ min(D, H)",
                d,
                self.a.cols(),
                h,
                self.g.cols()
            )));
        }
        if self.s.shape() != (h, h) {
            return Err(Error::Spec(format!("S must be {h}x{h}, got {}x{}", self.s.rows(), self.s.cols())));
        }
        if !(self.noise_scale >= 0.0 && self.delta_scale >= 0.0) {
            return Err(Error::Spec("noise and perturbation scales must be nonnegative".into()));
        }
        let sg = self.s.matmul(&self.g)?;
        for (name, m) in [("A", &self.a), ("G", &self.g), ("S·G", &sg)] {
            let sigma_r = *top_r_svd(m, r)?.singulars.last().expect("r ≥ 1");
            if sigma_r <= 1e-10 {
                return Err(Error::Spec(format!("{name} has rank below {r} (σ_r = {sigma_r:e})")));
            }
        }
        Ok(())
    }

    /// Noise-free signal `M = A·Gᵀ`.
    pub fn signal(&self) -> Matrix {
        self.a.matmul_t(&self.g).expect("validated shapes")
    }
}

/// One draw from a [`SyntheticLowRank`] recipe.
#[derive(Debug, Clone)]
pub struct LowRankSample {
    pub x: Matrix,
    pub x_prime: Matrix,
    /// Day-wise residual `R`.
    pub r_pert: Matrix,
    pub signal: Matrix,
    pub noise: Matrix,
    /// `N' = N·Sᵀ`.
    pub noise_prime: Matrix,
}

/// Draws `X`, `X'` and the exact residual `R` from `spec`.
pub fn gen_low_rank(spec: &SyntheticLowRank) -> Result<LowRankSample> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed ^ 0x9e37_79b9_7f4a_7c15);
    let (d, h) = (spec.days(), spec.offsets());
    let signal = spec.signal();
    let noise = if spec.noise_scale > 0.0 {
        Matrix::random_normal(d, h, &mut rng).scale(spec.noise_scale)
    } else {
        Matrix::zeros(d, h)
    };
    let x = signal.add(&noise)?;
    let noise_prime = noise.matmul_t(&spec.s)?;
    let mut r_pert = Matrix::zeros(d, h);
    if spec.delta_scale > 0.0 {
        for day in 0..d {
            let raw = Matrix::random_normal(h, h, &mut rng);
            let norm = spectral_norm(&raw)?;
            let delta = raw.scale(spec.delta_scale / norm);
            let row = Matrix::from_vec(1, h, x.row(day).to_vec())?.matmul_t(&delta)?;
            r_pert.row_mut(day).copy_from_slice(row.data());
        }
    }
    let x_prime = x.matmul_t(&spec.s)?.add(&r_pert)?;
    Ok(LowRankSample {
        x,
        x_prime,
        r_pert,
        signal,
        noise,
        noise_prime,
    })
}

/// `X` with a cycle transform that keeps changing: row `d` becomes
/// `X[d,:]·(Sᵈ)ᵀ`. Used to contrast a drifting patch space with the fixed
/// phase space of the untransformed matrix.
pub fn gen_rotating_low_rank(spec: &SyntheticLowRank) -> Result<Matrix> {
    let sample = gen_low_rank(&SyntheticLowRank {
        delta_scale: 0.0,
        ..spec.clone()
    })?;
    let h = spec.offsets();
    let mut power = Matrix::identity(h);
    let mut out = Matrix::zeros(spec.days(), h);
    for day in 0..spec.days() {
        let row = Matrix::from_vec(1, h, sample.x.row(day).to_vec())?.matmul_t(&power)?;
        out.row_mut(day).copy_from_slice(row.data());
        power = spec.s.matmul(&power)?;
    }
    Ok(out)
}

/// Haar-distributed orthogonal matrix (QR of a Gaussian matrix).
pub fn random_rotation<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Matrix {
    orthonormalize_columns(&Matrix::random_normal(n, n, rng))
}

/// Days per week in the drifting-cycle generator.
pub const DAYS_PER_WEEK: usize = 7;

/// A cyclic series of `weeks` weeks of daily cycles whose within-day shape
/// drifts week over week.
///
/// Week `w` uses `(1 − α_w)·A + α_w·B` rescaled to the RMS of `A`, with
/// `α_w = 1 − exp(−drift_rate·w)` and `B` the quarter-period rotation of
/// `A`. A small per-phase trend and observation noise, both proportional to
/// `drift_rate`, vary smoothly across days; `drift_rate = 0` gives an exactly
/// periodic series.
pub fn gen_drifting_cycles(weeks: usize, l_phase: usize, drift_rate: f64, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let offset = rng.random_range(0.0..2.0 * PI);
    let trend_phase = rng.random_range(0.0..2.0 * PI);
    let l = l_phase as f64;
    let a: Vec<f64> = (0..l_phase).map(|p| (2.0 * PI * p as f64 / l + offset).sin()).collect();
    let b: Vec<f64> = (0..l_phase)
        .map(|p| (2.0 * PI * (p as f64 - l / 4.0) / l + offset).sin())
        .collect();
    let rms = |v: &[f64]| (v.iter().map(|x| x * x).sum::<f64>() / v.len() as f64).sqrt();
    let rms_a = rms(&a);
    let days = weeks * DAYS_PER_WEEK;
    let mut out = Vec::with_capacity(days * l_phase);
    for day in 0..days {
        let week = day / DAYS_PER_WEEK;
        let alpha = 1.0 - (-drift_rate * week as f64).exp();
        let mix: Vec<f64> = a.iter().zip(&b).map(|(x, y)| (1.0 - alpha) * x + alpha * y).collect();
        let gain = rms_a / rms(&mix);
        let progress = day as f64 / days.max(1) as f64;
        for (p, m) in mix.iter().enumerate() {
            let trend = 0.5 * drift_rate * (2.0 * PI * p as f64 / l + trend_phase).cos() * (PI * progress).sin();
            let noise = if drift_rate > 0.0 {
                0.02 * drift_rate * rng.sample::<f64, _>(StandardNormal)
            } else {
                0.0
            };
            out.push(m * gain + trend + noise);
        }
    }
    out
}

fn synthetic_dataset(name: String, columns: Vec<Vec<f64>>) -> RawDataset {
    let len = columns.first().map_or(0, Vec::len);
    RawDataset {
        name,
        timestamps: (0..len).map(|t| t.to_string()).collect(),
        channel_names: (0..columns.len()).map(|c| format!("ch{c}")).collect(),
        values: Matrix::from_fn(len, columns.len(), |t, c| columns[c][t]),
        freq: None,
    }
}

/// `channels` copies of `sin(2πt/period)` with per-channel phase and
/// Gaussian noise of standard deviation `noise`.
pub fn sine_dataset(len: usize, period: usize, channels: usize, noise: f64, seed: u64) -> RawDataset {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let columns = (0..channels)
        .map(|c| {
            let shift = c as f64 * 2.0 * PI / channels.max(1) as f64;
            (0..len)
                .map(|t| {
                    let base = (2.0 * PI * t as f64 / period as f64 + shift).sin();
                    base + noise * rng.sample::<f64, _>(StandardNormal)
                })
                .collect()
        })
        .collect();
    synthetic_dataset(format!("sine{period}"), columns)
}

/// White Gaussian noise.
pub fn noise_dataset(len: usize, channels: usize, seed: u64) -> RawDataset {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let columns = (0..channels)
        .map(|_| (0..len).map(|_| rng.sample(StandardNormal)).collect())
        .collect();
    synthetic_dataset("noise".into(), columns)
}
