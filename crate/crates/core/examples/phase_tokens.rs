//! Phase tokenization: estimate the period, fold the series, unfold it again.

use phaseformer::data::sine_dataset;
use phaseformer::preprocessing::{estimate_period, phase_detokenize, phase_tokenize, PeriodStrategy};
use phaseformer::Result;

fn main() -> Result<()> {
    let series = sine_dataset(500, 24, 1, 0.1, 2).channel(0);
    let period = estimate_period(&series, 200, PeriodStrategy::Autocorrelation)?;
    println!("estimated period {period}");

    // 100 steps do not fill whole periods, so the first token is front-padded.
    let x = &series[..100];
    let tokens = phase_tokenize(x, period)?;
    println!("{} phases × {} periods", tokens.l_phase(), tokens.periods());
    for phase in 0..4 {
        let row: Vec<String> = tokens.values.row(phase).iter().map(|v| format!("{v:+.2}")).collect();
        println!("phase {phase:>2}: {}", row.join(" "));
    }
    assert_eq!(phase_detokenize(&tokens, x.len())?, x);
    println!("round trip exact");
    Ok(())
}
