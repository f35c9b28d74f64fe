//! Week-over-week MMD² of phase tokens versus patch tokens on drifting cycles.

use phaseformer::data::gen_drifting_cycles;
use phaseformer::diagnostics::weekly_drift;
use phaseformer::Result;

fn main() -> Result<()> {
    for drift in [0.0, 0.1, 0.3] {
        let series = gen_drifting_cycles(20, 24, drift, 0);
        let report = weekly_drift(&series, 24)?;
        println!(
            "drift {drift:.1}: phase mean {:.5}, patch mean {:.5}",
            report.phase_mean, report.patch_mean
        );
    }
    Ok(())
}
