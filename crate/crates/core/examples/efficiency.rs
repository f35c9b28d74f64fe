//! Parameter counts per preset and the FLOP count as the look-back grows.

use phaseformer::model::{forward, ModelConfig, ModelParams};
use phaseformer::numerics::count_macs;
use phaseformer::preprocessing::phase_tokenize;
use phaseformer::Result;

fn main() -> Result<()> {
    println!("l_in  params  flops  counted");
    for l_in in [96, 336, 720, 1440] {
        let config = ModelConfig::ett(l_in, 96);
        let params = ModelParams::init(&config)?;
        let x = phase_tokenize(&vec![0.0; l_in], config.l_phase)?;
        let (_, macs) = count_macs(|| forward(&params, &x, &config));
        println!("{l_in:>4}  {:>6}  {:>5}  {macs:>7}", config.count_params(), config.estimate_flops());
    }
    Ok(())
}
