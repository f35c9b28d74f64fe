//! Compare analytic gradients with central differences on a small model.

use phaseformer::model::{ModelConfig, ModelParams};
use phaseformer::numerics::{finite_diff_grad, relative_error};
use phaseformer::training::{sample_loss, sample_loss_grad};
use phaseformer::Result;

fn main() -> Result<()> {
    let config = ModelConfig {
        l_in: 30,
        l_out: 10,
        l_phase: 6,
        d: 4,
        m: 3,
        n_layers: 2,
        n_heads: 2,
        residual: true,
        seed: 1,
    };
    let params = ModelParams::init(&config)?;
    let x: Vec<f64> = (0..30).map(|t| (t as f64 * 0.9).sin() + 0.1 * t as f64).collect();
    let y: Vec<f64> = (0..10).map(|t| (t as f64 * 0.4).cos()).collect();

    let flat = params.to_flat();
    let analytic = sample_loss_grad(&params, &config, &x, &y)?.1.to_flat();
    let numeric = finite_diff_grad(
        |p| sample_loss(&ModelParams::from_flat(&config, p).unwrap(), &config, &x, &y).unwrap(),
        &flat,
        1e-6,
    );
    let worst = analytic
        .iter()
        .zip(&numeric)
        .map(|(a, n)| relative_error(*a, *n, 1e-5))
        .fold(0.0, f64::max);
    println!("{} coordinates, max relative error {worst:.2e}", flat.len());
    Ok(())
}
