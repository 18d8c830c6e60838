//! Synthesize a policy on an abstraction and evaluate it on the full model.

use anytime_synth::compose::{compose_system, make_stationary};
use anytime_synth::fixtures;
use anytime_synth::policy::{extract_policy, lift_and_evaluate, Policy};
use anytime_synth::product::build_product;
use anytime_synth::solve::{accepting_mask, value_iteration, SolverConfig};

fn main() -> anytime_synth::Result<()> {
    let plant = fixtures::vehicle();
    let peds = fixtures::pedestrians();
    let dfa = fixtures::crossing_dfa();
    let cfg = SolverConfig::default();

    // Model only pedestrian 1; the rest stay pinned.
    let mut agents = peds.iter().map(|m| make_stationary(m, None)).collect::<anytime_synth::Result<Vec<_>>>()?;
    agents[0] = peds[0].clone();
    let p = build_product(&compose_system(&plant, &agents), &dfa);
    let x = value_iteration(&p, &accepting_mask(&p), &cfg);
    let pol = extract_policy(&p, &x, &cfg)?;
    println!("abstract value: {:.6}", x.initial_value(&p.init));

    let text = pol.render();
    println!("{} policy rows, header: {}", pol.rows.len(), text.lines().next().unwrap_or(""));
    let reparsed = Policy::parse(&text)?;
    println!("value on the full model: {:.6}", lift_and_evaluate(&reparsed, &plant, &peds, &dfa, &cfg)?);
    Ok(())
}
