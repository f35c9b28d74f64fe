//! Save a model, load it back and confirm the forecasts agree.

use phaseformer::model::{checkpoint, ModelConfig, ModelParams};
use phaseformer::training::predict;
use phaseformer::Result;

fn main() -> Result<()> {
    let config = ModelConfig::ett(96, 24);
    let params = ModelParams::init(&config)?;
    let path = std::env::temp_dir().join("phaseformer-example.phfm");
    checkpoint::save(&path, &config, &params)?;
    let (loaded_config, loaded) = checkpoint::load(&path)?;
    let x: Vec<f64> = (0..96).map(|t| (t as f64 / 4.0).sin()).collect();
    let same = predict(&params, &config, &x, 24)? == predict(&loaded, &loaded_config, &x, 24)?;
    println!("wrote {} ({} bytes), forecasts identical: {same}", path.display(), std::fs::metadata(&path).map(|m| m.len()).unwrap_or(0));
    std::fs::remove_file(&path).ok();
    Ok(())
}
