//! Train briefly on a daily sinusoid, then print the router aggregation and
//! distribution maps for one test window.

use phaseformer::data::{sine_dataset, ForecastData, Part};
use phaseformer::model::ModelConfig;
use phaseformer::numerics::Matrix;
use phaseformer::training::{forward_window, train, TrainConfig};
use phaseformer::Result;

fn show(name: &str, m: &Matrix) {
    println!("{name} ({}×{})", m.rows(), m.cols());
    for r in 0..m.rows() {
        let row: Vec<String> = m.row(r).iter().map(|v| format!("{v:.2}")).collect();
        println!("  {}", row.join(" "));
    }
}

fn main() -> Result<()> {
    let data = ForecastData::prepare(&sine_dataset(6_000, 24, 1, 0.05, 0))?;
    let config = ModelConfig { m: 4, ..ModelConfig::ett(96, 24) };
    let opts = TrainConfig { epochs: 8, ..TrainConfig::default() };
    let (params, report) = train(&data, &config, &opts)?;
    println!("test MSE after {} epochs: {:.4}", report.train_mse.len(), report.test_mse);

    let window = data.windows(Part::Test, config.l_in, config.l_out)?[0];
    let (cache, _) = forward_window(&params, &config, window.x)?;
    let layer = &cache.layers[0];
    show("aggregation: routers over phases", &layer.agg_weights()[0]);
    show("distribution: phases over routers", &layer.dist_weights()[0]);
    Ok(())
}
