//! Phase and patch token sets of a cyclic series, and week-over-week drift.

use serde::{Deserialize, Serialize};

use super::mmd::{rbf_mmd2, Bandwidth};
use crate::data::DAYS_PER_WEEK;
use crate::error::{Error, Result};
use crate::numerics::Matrix;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TokenKind {
    Phase,
    Patch,
}

/// One token per row, labelled with the window (week) it came from.
#[derive(Debug, Clone, PartialEq)]
pub struct TokenSet {
    pub kind: TokenKind,
    pub tokens: Matrix,
    pub weeks: Vec<usize>,
}

impl TokenSet {
    pub fn n_weeks(&self) -> usize {
        self.weeks.iter().max().map_or(0, |w| w + 1)
    }

    /// Tokens of window `week`.
    pub fn week(&self, week: usize) -> Matrix {
        let rows: Vec<usize> = (0..self.weeks.len()).filter(|&i| self.weeks[i] == week).collect();
        self.tokens.select_rows(&rows)
    }
}

/// Splits `series` into windows of `periods_per_window` whole periods and
/// returns `(phase, patch)` tokens. Patch tokens are the consecutive
/// length-`l_phase` segments; the phase-`ℓ` token of a window collects
/// offset `ℓ` from each of its periods. A trailing partial window is dropped.
pub fn build_token_sets(series: &[f64], l_phase: usize, periods_per_window: usize) -> Result<(TokenSet, TokenSet)> {
    if l_phase == 0 || periods_per_window == 0 {
        return Err(Error::contract("l_phase and the window length must be positive"));
    }
    let window = l_phase * periods_per_window;
    let n_windows = series.len() / window;
    if n_windows == 0 {
        return Err(Error::data(format!(
            "series of {} steps is shorter than one window of {window}",
            series.len()
        )));
    }
    let n_segments = n_windows * periods_per_window;
    let patch = TokenSet {
        kind: TokenKind::Patch,
        tokens: Matrix::from_fn(n_segments, l_phase, |s, j| series[s * l_phase + j]),
        weeks: (0..n_segments).map(|s| s / periods_per_window).collect(),
    };
    let phase = TokenSet {
        kind: TokenKind::Phase,
        tokens: Matrix::from_fn(n_windows * l_phase, periods_per_window, |i, k| {
            let (w, phase) = (i / l_phase, i % l_phase);
            series[w * window + k * l_phase + phase]
        }),
        weeks: (0..n_windows * l_phase).map(|i| i / l_phase).collect(),
    };
    Ok((phase, patch))
}

/// MMD² of every later week against week 0, per token kind.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DriftReport {
    /// Entry `w − 1` compares week `w` with week 0.
    pub phase: Vec<f64>,
    pub patch: Vec<f64>,
    pub phase_mean: f64,
    pub patch_mean: f64,
}

/// [`weekly_drift_with`] using 7-period weeks and the median bandwidth.
pub fn weekly_drift(series: &[f64], l_phase: usize) -> Result<DriftReport> {
    weekly_drift_with(series, l_phase, DAYS_PER_WEEK, Bandwidth::Median)
}

pub fn weekly_drift_with(
    series: &[f64],
    l_phase: usize,
    periods_per_week: usize,
    bandwidth: Bandwidth,
) -> Result<DriftReport> {
    let (phase, patch) = build_token_sets(series, l_phase, periods_per_week)?;
    let weeks = phase.n_weeks();
    if weeks < 2 {
        return Err(Error::data("drift needs at least two whole weeks"));
    }
    let curve = |set: &TokenSet| -> Result<Vec<f64>> {
        let base = set.week(0);
        (1..weeks).map(|w| rbf_mmd2(&set.week(w), &base, bandwidth)).collect()
    };
    let (phase, patch) = (curve(&phase)?, curve(&patch)?);
    let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
    Ok(DriftReport {
        phase_mean: mean(&phase),
        patch_mean: mean(&patch),
        phase,
        patch,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::gen_drifting_cycles;

    #[test]
    fn token_definitions() {
        let x: Vec<f64> = (1..=12).map(f64::from).collect();
        let (phase, patch) = build_token_sets(&x, 3, 4).unwrap();
        assert_eq!(patch.tokens.rows(), 4);
        assert_eq!(patch.tokens.row(1), &[4.0, 5.0, 6.0]);
        assert_eq!(patch.tokens.row(3), &[10.0, 11.0, 12.0]);
        assert_eq!(phase.tokens.shape(), (3, 4));
        assert_eq!(phase.tokens.row(0), &[1.0, 4.0, 7.0, 10.0]);
        assert_eq!(phase.tokens.row(2), &[3.0, 6.0, 9.0, 12.0]);
    }

    #[test]
    fn periodic_phase_tokens_are_constant() {
        let x: Vec<f64> = (0..60).map(|t| ((t % 5) as f64).sin()).collect();
        let (phase, _) = build_token_sets(&x, 5, 4).unwrap();
        for i in 0..phase.tokens.rows() {
            let row = phase.tokens.row(i);
            assert!(row.iter().all(|&v| v == row[0]));
        }
    }

    #[test]
    fn too_short_is_data_error() {
        assert!(matches!(build_token_sets(&[0.0; 10], 3, 4), Err(Error::Data(_))));
        assert!(matches!(weekly_drift(&[0.0; 24 * 7], 24), Err(Error::Data(_))));
    }

    #[test]
    fn periodic_series_has_no_phase_drift() {
        let x = gen_drifting_cycles(5, 24, 0.0, 1);
        let report = weekly_drift(&x, 24).unwrap();
        assert_eq!(report.phase.len(), 4);
        assert!(report.phase.iter().all(|&v| v <= 1e-10));
    }

    #[test]
    fn patch_drift_grows_with_time() {
        let x = gen_drifting_cycles(12, 24, 0.1, 2);
        let report = weekly_drift_with(&x, 24, 7, Bandwidth::Gamma(0.05)).unwrap();
        for w in report.patch.windows(2) {
            assert!(w[1] > w[0], "{:?}", report.patch);
        }
    }
}
