//! Instance normalization, period estimation and phase tokenization.
//!
//! A window of length `L` is tokenized into an `l_phase × P` phase–period
//! matrix with `P = ⌈L / l_phase⌉`. When `L` is not a multiple of `l_phase`
//! the window is padded at the front, so the last observation always sits in
//! the last row of the last column and the forecast starts at phase 0 of the
//! next period.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::Matrix;

/// Lower clamp on the instance standard deviation.
pub const STD_EPSILON: f64 = 1e-8;

/// Mean and standard deviation of one input window.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InstanceStats {
    pub mean: f64,
    pub std: f64,
}

impl InstanceStats {
    pub const IDENTITY: InstanceStats = InstanceStats { mean: 0.0, std: 1.0 };

    pub fn normalize(&self, v: f64) -> f64 {
        (v - self.mean) / self.std
    }

    pub fn denormalize(&self, v: f64) -> f64 {
        v * self.std + self.mean
    }
}

/// Normalizes a window by its own mean and (population) standard deviation.
pub fn revin_normalize(x: &[f64]) -> Result<(Vec<f64>, InstanceStats)> {
    if x.len() < 2 {
        return Err(Error::contract(format!(
            "instance normalization needs at least 2 values, got {}",
            x.len()
        )));
    }
    let n = x.len() as f64;
    let mean = x.iter().sum::<f64>() / n;
    let var = x.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
    let stats = InstanceStats {
        mean,
        std: var.sqrt().max(STD_EPSILON),
    };
    Ok((x.iter().map(|&v| stats.normalize(v)).collect(), stats))
}

pub fn revin_denormalize(y: &[f64], stats: InstanceStats) -> Vec<f64> {
    y.iter().map(|&v| stats.denormalize(v)).collect()
}

/// How [`estimate_period`] picks the dominant cycle.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PeriodStrategy {
    /// Strongest nonzero DFT component.
    #[default]
    Fourier,
    /// Lag with maximal autocorrelation beyond its first zero crossing.
    Autocorrelation,
}

/// Estimates the dominant period of `x`, searching periods `2..=max_lag`.
/// Ties go to the smaller period.
pub fn estimate_period(x: &[f64], max_lag: usize, strategy: PeriodStrategy) -> Result<usize> {
    let n = x.len();
    if max_lag < 2 || n < 2 * max_lag {
        return Err(Error::contract(format!(
            "period search up to lag {max_lag} needs at least {} values, got {n}",
            2 * max_lag.max(2)
        )));
    }
    let mean = x.iter().sum::<f64>() / n as f64;
    let centered: Vec<f64> = x.iter().map(|v| v - mean).collect();
    let variance = centered.iter().map(|v| v * v).sum::<f64>() / n as f64;
    if variance < 1e-12 {
        return Err(Error::NoPeriodicity { variance });
    }
    let period = match strategy {
        PeriodStrategy::Fourier => dominant_fourier_period(&centered, max_lag),
        PeriodStrategy::Autocorrelation => max_autocorrelation_lag(&centered, max_lag),
    };
    period.ok_or(Error::NoPeriodicity { variance })
}

fn dominant_fourier_period(centered: &[f64], max_lag: usize) -> Option<usize> {
    let n = centered.len();
    let mut best: Option<(usize, f64)> = None;
    // Frequencies from high to low so that ties keep the smaller period.
    for k in (1..=n / 2).rev() {
        let period = (n as f64 / k as f64).round() as usize;
        if period < 2 || period > max_lag {
            continue;
        }
        let w = 2.0 * std::f64::consts::PI * k as f64 / n as f64;
        let (mut re, mut im) = (0.0, 0.0);
        for (t, &v) in centered.iter().enumerate() {
            let angle = w * t as f64;
            re += v * angle.cos();
            im -= v * angle.sin();
        }
        let power = re * re + im * im;
        if best.is_none_or(|(_, p)| power > p * (1.0 + 1e-12)) {
            best = Some((period, power));
        }
    }
    best.map(|(p, _)| p)
}

fn max_autocorrelation_lag(centered: &[f64], max_lag: usize) -> Option<usize> {
    let n = centered.len();
    let denom: f64 = centered.iter().map(|v| v * v).sum();
    let acf: Vec<f64> = (0..=max_lag)
        .map(|lag| (0..n - lag).map(|t| centered[t] * centered[t + lag]).sum::<f64>() / denom)
        .collect();
    // Skip the lobe around lag 0: smooth series correlate best with tiny lags.
    let start = (2..=max_lag).find(|&lag| acf[lag] < 0.0).unwrap_or(2);
    let mut best: Option<(usize, f64)> = None;
    for (lag, &a) in acf.iter().enumerate().skip(start) {
        if best.is_none_or(|(_, b)| a > b + 1e-12) {
            best = Some((lag, a));
        }
    }
    best.map(|(l, _)| l)
}

/// An `l_phase × periods` phase–period matrix: `values[(ℓ, p)]` is the
/// observation at phase `ℓ` of period `p`.
#[derive(Debug, Clone, PartialEq)]
pub struct PhaseMatrix {
    pub values: Matrix,
}

impl PhaseMatrix {
    pub fn new(values: Matrix) -> Result<Self> {
        if values.rows() == 0 || values.cols() == 0 {
            return Err(Error::shape("phase matrix needs at least one phase and one period"));
        }
        Ok(Self { values })
    }

    pub fn l_phase(&self) -> usize {
        self.values.rows()
    }

    pub fn periods(&self) -> usize {
        self.values.cols()
    }

    /// Period-major (column-major) flattening: all phases of period 0, then
    /// period 1, and so on.
    pub fn flatten(&self) -> Vec<f64> {
        let (l, p) = self.values.shape();
        let mut out = Vec::with_capacity(l * p);
        for c in 0..p {
            for r in 0..l {
                out.push(self.values[(r, c)]);
            }
        }
        out
    }
}

/// Number of periods needed to hold `len` steps.
pub fn periods_for(len: usize, l_phase: usize) -> usize {
    len.div_ceil(l_phase)
}

/// Reshapes `x` into a phase–period matrix, front-padding it up to a whole
/// number of periods.
///
/// A padded slot at (virtual) time `t < 0` takes the value one period later,
/// `x[t + l_phase]`, so every padded value keeps its true phase. Windows
/// shorter than one period wrap around instead.
pub fn phase_tokenize(x: &[f64], l_phase: usize) -> Result<PhaseMatrix> {
    if l_phase == 0 || x.is_empty() {
        return Err(Error::contract("tokenization needs l_phase ≥ 1 and a nonempty series"));
    }
    let len = x.len();
    let periods = periods_for(len, l_phase);
    let pad = periods * l_phase - len;
    let padded_value = |j: usize| -> f64 {
        if j >= pad {
            return x[j - pad];
        }
        let t = j as isize - pad as isize;
        if len >= l_phase {
            x[(t + l_phase as isize) as usize]
        } else {
            x[t.rem_euclid(len as isize) as usize]
        }
    };
    let values = Matrix::from_fn(l_phase, periods, |r, c| padded_value(c * l_phase + r));
    PhaseMatrix::new(values)
}

/// Inverse of [`phase_tokenize`]: flattens period-major and keeps the last
/// `out_len` values, dropping any front padding.
pub fn phase_detokenize(y: &PhaseMatrix, out_len: usize) -> Result<Vec<f64>> {
    let total = y.l_phase() * y.periods();
    if out_len > total {
        return Err(Error::shape(format!(
            "cannot recover {out_len} values from a {}x{} phase matrix",
            y.l_phase(),
            y.periods()
        )));
    }
    let mut flat = y.flatten();
    flat.drain(..total - out_len);
    Ok(flat)
}

/// Reads a forecast horizon out of a predicted phase matrix. The forecast's
/// first step is phase 0 of the first predicted period (the successor of the
/// input's last phase), so the leading `horizon` values are kept.
pub fn forecast_from_phase(y: &PhaseMatrix, horizon: usize) -> Result<Vec<f64>> {
    let total = y.l_phase() * y.periods();
    if horizon > total {
        return Err(Error::shape(format!(
            "horizon {horizon} exceeds the {total} predicted steps"
        )));
    }
    let mut flat = y.flatten();
    flat.truncate(horizon);
    Ok(flat)
}

/// Places a horizon-length target into phase–period layout, matching
/// [`forecast_from_phase`]. Slots past the horizon are left at zero and
/// reported as unused by the returned mask.
pub fn horizon_to_phase(target: &[f64], l_phase: usize, periods: usize) -> Result<(Matrix, Matrix)> {
    if target.len() > l_phase * periods {
        return Err(Error::shape("target longer than the predicted phase matrix"));
    }
    let mut values = Matrix::zeros(l_phase, periods);
    let mut mask = Matrix::zeros(l_phase, periods);
    for (i, &v) in target.iter().enumerate() {
        values[(i % l_phase, i / l_phase)] = v;
        mask[(i % l_phase, i / l_phase)] = 1.0;
    }
    Ok((values, mask))
}
