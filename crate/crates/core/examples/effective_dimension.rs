//! Effective PCA dimension of phase tokens versus rotating patch tokens.

use phaseformer::data::{gen_low_rank, gen_rotating_low_rank, SyntheticLowRank};
use phaseformer::diagnostics::{effective_dim, explained_variance};
use phaseformer::Result;

fn main() -> Result<()> {
    let spec = SyntheticLowRank::daily_cycles(40, 24, 0.01, 0.0, 0)?;
    let phase = gen_low_rank(&spec)?.x.transpose();
    let patch = gen_rotating_low_rank(&spec)?;
    for (name, tokens) in [("phase", &phase), ("patch", &patch)] {
        let ratios = explained_variance(tokens)?;
        let head: Vec<String> = ratios.iter().take(5).map(|r| format!("{r:.3}")).collect();
        println!("{name}: d_eff(0.9) = {}, leading ratios {}", effective_dim(tokens, 0.9)?, head.join(" "));
    }
    Ok(())
}
