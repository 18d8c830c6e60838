//! Compose the vehicle with full and stationary pedestrians.

use anytime_synth::compose::{compose_system, make_stationary};
use anytime_synth::fixtures;

fn main() -> anytime_synth::Result<()> {
    let plant = fixtures::vehicle();
    let full = compose_system(&plant, &fixtures::pedestrians());
    println!("all agents modelled: {} system states", full.mdp.num_states());
    println!("first state: {}", full.layout.state_name(0));

    let pinned = fixtures::pedestrians()
        .iter()
        .map(|m| make_stationary(m, None))
        .collect::<anytime_synth::Result<Vec<_>>>()?;
    let coarse = compose_system(&plant, &pinned);
    println!("all agents pinned:   {} system states", coarse.mdp.num_states());
    Ok(())
}
