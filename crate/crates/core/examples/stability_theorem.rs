//! Check the phase-subspace stability bound and the patch-subspace lower
//! bound on seeded low-rank trials.

use phaseformer::data::SyntheticLowRank;
use phaseformer::diagnostics::{stability_trials, verify_stability};
use phaseformer::Result;

fn main() -> Result<()> {
    let spec = SyntheticLowRank::random(40, 28, 3, 1e-3, 1e-3, 0)?;
    let r = verify_stability(&spec)?;
    println!("one trial: d_phase {:.2e} ≤ bound {:.2e}", r.d_phase, r.phase_bound);
    println!("           d_patch {:.3} ≥ bound {:.3}", r.d_patch, r.patch_lower_bound);

    let summary = stability_trials(40, 28, 3, 1e-3, 1e-3, 0, 100)?;
    println!(
        "100 trials: phase bound held {}, patch bound held {}, max d_phase {:.2e}",
        summary.phase_holds, summary.patch_holds, summary.max_d_phase
    );
    Ok(())
}
