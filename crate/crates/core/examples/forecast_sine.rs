//! Train the ETT-sized model on a noisy daily sinusoid and report test error.
//!
//! `cargo run --release --example forecast_sine`

use phaseformer::data::{sine_dataset, ForecastData};
use phaseformer::model::ModelConfig;
use phaseformer::training::{predict, train, TrainConfig};
use phaseformer::Result;

fn main() -> Result<()> {
    let raw = sine_dataset(6_000, 24, 1, 0.05, 0);
    let data = ForecastData::prepare(&raw)?;
    let config = ModelConfig::ett(336, 96);
    let opts = TrainConfig {
        epochs: 10,
        ..TrainConfig::default()
    };
    println!("{} parameters", config.count_params());
    let (params, report) = train(&data, &config, &opts)?;
    for (e, (t, v)) in report.train_mse.iter().zip(&report.val_mse).enumerate() {
        println!("epoch {:>2}: train {t:.5}  val {v:.5}", e + 1);
    }
    println!("kept epoch {}, test MSE {:.5}, MAE {:.5}", report.epoch, report.test_mse, report.test_mae);

    let tail = &data.channels[0][data.split.test.end - 336..];
    let forecast = predict(&params, &config, tail, 24)?;
    println!("next 24 steps: {:?}", forecast.iter().map(|v| format!("{v:.2}")).collect::<Vec<_>>());
    Ok(())
}
