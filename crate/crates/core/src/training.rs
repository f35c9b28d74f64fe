//! Channel-independent training with Adam, early stopping and MSE/MAE
//! evaluation.
//!
//! Each (window, channel) pair is one sample. The input window is
//! instance-normalized, the target is normalized with the input's
//! statistics, and the loss is taken over the first `l_out` forecast steps.
//! Metrics are reported in the dataset's standardized space.

use std::time::Instant;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::{ForecastData, Part, Window};
use crate::error::{Error, Result};
use crate::model::{backward, forward, ForwardCache, ModelConfig, ModelParams};
use crate::numerics::Matrix;
use crate::preprocessing::{forecast_from_phase, horizon_to_phase, phase_tokenize, revin_normalize, InstanceStats};

/// Samples per rayon task; partial gradients are reduced in task order so
/// results do not depend on the thread count.
const CHUNK: usize = 32;

/// Mean squared error and its gradient `2(pred − target)/n`.
pub fn mse_loss(pred: &Matrix, target: &Matrix) -> Result<(f64, Matrix)> {
    if pred.shape() != target.shape() {
        return Err(Error::shape(format!(
            "prediction {:?} and target {:?} differ in shape",
            pred.shape(),
            target.shape()
        )));
    }
    let n = pred.len() as f64;
    let diff = pred.sub(target)?;
    let loss = diff.data().iter().map(|v| v * v).sum::<f64>() / n;
    Ok((loss, diff.scale(2.0 / n)))
}

/// Adam moments and hyperparameters.
#[derive(Debug, Clone, PartialEq)]
pub struct AdamState {
    pub m: Vec<f64>,
    pub v: Vec<f64>,
    pub t: u64,
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl AdamState {
    pub fn new(len: usize) -> Self {
        Self::with_lr(len, 1e-3)
    }

    pub fn with_lr(len: usize, lr: f64) -> Self {
        Self {
            m: vec![0.0; len],
            v: vec![0.0; len],
            t: 0,
            lr,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
        }
    }
}

/// One bias-corrected Adam update of `params` in place.
///
/// # Panics
/// If `params`, `grads` and the state moments differ in length.
pub fn adam_step(state: &mut AdamState, params: &mut [f64], grads: &[f64]) {
    assert_eq!(params.len(), grads.len(), "parameter and gradient lengths differ");
    assert_eq!(params.len(), state.m.len(), "Adam state sized for a different model");
    state.t += 1;
    let t = state.t as i32;
    let c1 = 1.0 - state.beta1.powi(t);
    let c2 = 1.0 - state.beta2.powi(t);
    for (((p, &g), m), v) in params.iter_mut().zip(grads).zip(&mut state.m).zip(&mut state.v) {
        *m = state.beta1 * *m + (1.0 - state.beta1) * g;
        *v = state.beta2 * *v + (1.0 - state.beta2) * g * g;
        let m_hat = *m / c1;
        let v_hat = *v / c2;
        *p -= state.lr * m_hat / (v_hat.sqrt() + state.eps);
    }
}

/// Optimization budget.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrainConfig {
    pub epochs: usize,
    pub batch: usize,
    /// Epochs without a validation improvement before stopping; 0 disables
    /// early stopping.
    pub patience: usize,
    pub lr: f64,
    /// Seeds the per-epoch shuffles.
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            epochs: 30,
            batch: 256,
            patience: 5,
            lr: 1e-3,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainReport {
    /// 1-based epoch whose parameters were kept.
    pub epoch: usize,
    pub train_mse: Vec<f64>,
    pub val_mse: Vec<f64>,
    pub test_mse: f64,
    pub test_mae: f64,
    pub seed: u64,
    pub seconds: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub mse: f64,
    pub mae: f64,
}

/// Forward pass on a raw input window. Returns the instance statistics used
/// so the caller can map outputs back.
pub fn forward_window(params: &ModelParams, config: &ModelConfig, x: &[f64]) -> Result<(ForwardCache, InstanceStats)> {
    if x.len() != config.l_in {
        return Err(Error::shape(format!("window of {} steps, model expects {}", x.len(), config.l_in)));
    }
    let (normalized, stats) = revin_normalize(x)?;
    let phase = phase_tokenize(&normalized, config.l_phase)?;
    let (_, cache) = forward(params, &phase, config)?;
    Ok((cache, stats))
}

/// Forecast of `horizon ≤ p_out·l_phase` steps in the input's own scale.
pub fn predict(params: &ModelParams, config: &ModelConfig, x: &[f64], horizon: usize) -> Result<Vec<f64>> {
    let (cache, stats) = forward_window(params, config, x)?;
    let y = crate::preprocessing::PhaseMatrix::new(cache.y_phase)?;
    Ok(forecast_from_phase(&y, horizon)?.into_iter().map(|v| stats.denormalize(v)).collect())
}

/// Instance-space training loss of one sample and its parameter gradient.
pub fn sample_loss_grad(params: &ModelParams, config: &ModelConfig, x: &[f64], y: &[f64]) -> Result<(f64, ModelParams)> {
    let (cache, stats) = forward_window(params, config, x)?;
    let target: Vec<f64> = y.iter().map(|&v| stats.normalize(v)).collect();
    let (target, mask) = horizon_to_phase(&target, config.l_phase, config.p_out())?;
    let n = y.len() as f64;
    let diff = cache.y_phase.sub(&target)?.hadamard(&mask)?;
    let loss = diff.data().iter().map(|v| v * v).sum::<f64>() / n;
    let grads = backward(params, &cache, &diff.scale(2.0 / n), config)?;
    Ok((loss, grads))
}

/// Instance-space training loss of one sample.
pub fn sample_loss(params: &ModelParams, config: &ModelConfig, x: &[f64], y: &[f64]) -> Result<f64> {
    let (cache, stats) = forward_window(params, config, x)?;
    let y_phase = crate::preprocessing::PhaseMatrix::new(cache.y_phase)?;
    let pred = forecast_from_phase(&y_phase, y.len())?;
    Ok(pred
        .iter()
        .zip(y)
        .map(|(p, &t)| (p - stats.normalize(t)).powi(2))
        .sum::<f64>()
        / y.len() as f64)
}

/// Mean loss and mean gradient over `batch`.
fn batch_gradient(params: &ModelParams, config: &ModelConfig, batch: &[&Window<'_>]) -> Result<(f64, ModelParams)> {
    let partials: Vec<Result<(f64, ModelParams)>> = batch
        .par_chunks(CHUNK)
        .map(|chunk| {
            let mut grads = ModelParams::zeros(config);
            let mut loss = 0.0;
            for w in chunk {
                let (l, g) = sample_loss_grad(params, config, w.x, w.y)?;
                loss += l;
                grads.accumulate(&g, 1.0);
            }
            Ok((loss, grads))
        })
        .collect();
    let mut total = ModelParams::zeros(config);
    let mut loss = 0.0;
    let scale = 1.0 / batch.len() as f64;
    for partial in partials {
        let (l, g) = partial?;
        loss += l;
        total.accumulate(&g, scale);
    }
    Ok((loss * scale, total))
}

/// MSE and MAE of `horizon`-step forecasts over `windows`, in the scale of
/// the windows themselves (the standardized space for [`ForecastData`]).
pub fn evaluate_windows(params: &ModelParams, config: &ModelConfig, windows: &[Window<'_>]) -> Result<Metrics> {
    if windows.is_empty() {
        return Err(Error::data("no windows to evaluate"));
    }
    let sums: Vec<Result<(f64, f64, usize)>> = windows
        .par_chunks(CHUNK)
        .map(|chunk| {
            let (mut se, mut ae, mut n) = (0.0, 0.0, 0);
            for w in chunk {
                let pred = predict(params, config, w.x, w.y.len())?;
                for (p, t) in pred.iter().zip(w.y) {
                    se += (p - t).powi(2);
                    ae += (p - t).abs();
                }
                n += w.y.len();
            }
            Ok((se, ae, n))
        })
        .collect();
    let (mut se, mut ae, mut n) = (0.0, 0.0, 0);
    for s in sums {
        let (a, b, c) = s?;
        se += a;
        ae += b;
        n += c;
    }
    Ok(Metrics {
        mse: se / n as f64,
        mae: ae / n as f64,
    })
}

/// Metrics on one split with horizon `l_out`.
pub fn evaluate(params: &ModelParams, config: &ModelConfig, data: &ForecastData, part: Part, l_out: usize) -> Result<Metrics> {
    let windows = data.windows(part, config.l_in, l_out)?;
    evaluate_windows(params, config, &windows)
}

/// Trains from `initial` on explicit window sets.
pub fn fit(
    initial: ModelParams,
    config: &ModelConfig,
    opts: &TrainConfig,
    train: &[Window<'_>],
    val: &[Window<'_>],
    test: &[Window<'_>],
) -> Result<(ModelParams, TrainReport)> {
    if train.is_empty() || val.is_empty() || test.is_empty() {
        return Err(Error::data("train, validation and test splits all need windows"));
    }
    if opts.batch == 0 || opts.epochs == 0 {
        return Err(Error::Config("batch and epochs must be positive".into()));
    }
    let started = Instant::now();
    let mut params = initial;
    let mut flat = params.to_flat();
    let mut adam = AdamState::with_lr(flat.len(), opts.lr);
    let mut order: Vec<&Window<'_>> = train.iter().collect();

    let mut best = (f64::INFINITY, 0, params.clone());
    let (mut train_curve, mut val_curve) = (Vec::new(), Vec::new());
    for epoch in 1..=opts.epochs {
        let mut rng = ChaCha8Rng::seed_from_u64(opts.seed.wrapping_mul(0x9e37_79b9).wrapping_add(epoch as u64));
        order.sort_by_key(|w| (w.channel, w.start));
        order.shuffle(&mut rng);
        let mut epoch_loss = 0.0;
        for batch in order.chunks(opts.batch) {
            let (loss, grads) = batch_gradient(&params, config, batch)?;
            epoch_loss += loss * batch.len() as f64;
            adam_step(&mut adam, &mut flat, &grads.to_flat());
            params.copy_from_flat(&flat)?;
        }
        if !params.is_finite() {
            return Err(Error::data(format!("training diverged in epoch {epoch}")));
        }
        let val_mse = evaluate_windows(&params, config, val)?.mse;
        train_curve.push(epoch_loss / train.len() as f64);
        val_curve.push(val_mse);
        log::info!("epoch {epoch}: train {:.6} val {:.6}", train_curve[epoch - 1], val_mse);
        if val_mse < best.0 {
            best = (val_mse, epoch, params.clone());
        } else if opts.patience > 0 && epoch - best.1 >= opts.patience {
            log::info!("no validation improvement for {} epochs, stopping", opts.patience);
            break;
        }
    }
    let (_, best_epoch, best_params) = best;
    let test = evaluate_windows(&best_params, config, test)?;
    let report = TrainReport {
        epoch: best_epoch,
        train_mse: train_curve,
        val_mse: val_curve,
        test_mse: test.mse,
        test_mae: test.mae,
        seed: opts.seed,
        seconds: started.elapsed().as_secs_f64(),
    };
    Ok((best_params, report))
}

/// Initializes from `config.seed` and trains on the splits of `data`,
/// returning the best-validation parameters.
pub fn train(data: &ForecastData, config: &ModelConfig, opts: &TrainConfig) -> Result<(ModelParams, TrainReport)> {
    let train = data.windows(Part::Train, config.l_in, config.l_out)?;
    let val = data.windows(Part::Val, config.l_in, config.l_out)?;
    let test = data.windows(Part::Test, config.l_in, config.l_out)?;
    fit(ModelParams::init(config)?, config, opts, &train, &val, &test)
}
