//! Run the anytime loop with minimum-probability agent selection.

use anytime_synth::anytime::{metrics_csv, run_anytime, AnytimeConfig};
use anytime_synth::fixtures;

fn main() -> anytime_synth::Result<()> {
    let cfg = AnytimeConfig::default();
    let run = run_anytime(&fixtures::vehicle(), &fixtures::pedestrians(), &fixtures::crossing_dfa(), &cfg)?;
    let reports: Vec<_> = run.iter().map(|it| it.report.clone()).collect();
    print!("{}", metrics_csv(&reports));
    let order: Vec<_> = reports.iter().filter_map(|r| r.agent_added.clone()).collect();
    println!("refinement order: {}", order.join(", "));
    Ok(())
}
