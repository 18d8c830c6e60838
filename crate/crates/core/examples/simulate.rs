//! Estimate a policy's success probability by Monte Carlo simulation.

use anytime_synth::compose::compose_system;
use anytime_synth::fixtures;
use anytime_synth::model::Prop;
use anytime_synth::policy::{chain_from_actions, chain_value, extract_actions, simulate, threads_from_env};
use anytime_synth::product::build_product;
use anytime_synth::solve::{accepting_mask, value_iteration, SolverConfig};

fn main() -> anytime_synth::Result<()> {
    let p = build_product(&compose_system(&fixtures::vehicle(), &fixtures::pedestrians()), &fixtures::crossing_dfa());
    let cfg = SolverConfig::default();
    let x = value_iteration(&p, &accepting_mask(&p), &cfg);
    let chain = chain_from_actions(&p, &extract_actions(&p, &x, &cfg)?);
    println!("exact: {:.6}", chain_value(&chain, &cfg));

    let sim = simulate(&chain, &Prop::accepting(), 200_000, 10 * p.num_states(), 7, threads_from_env());
    println!("simulated: {:.6} ± {:.6} over {} runs", sim.estimate, sim.stderr, sim.runs);
    Ok(())
}
