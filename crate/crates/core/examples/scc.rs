//! Derive SCCs of a refined system from its parent and the new agent.

use anytime_synth::compose::{compose_system, make_stationary};
use anytime_synth::fixtures;
use anytime_synth::scc::{derive_sccs, tarjan_sccs};

fn main() -> anytime_synth::Result<()> {
    let plant = fixtures::vehicle();
    let peds = fixtures::pedestrians();
    let mut agents = peds.iter().map(|m| make_stationary(m, None)).collect::<anytime_synth::Result<Vec<_>>>()?;

    let parent = compose_system(&plant, &agents);
    let sccs = tarjan_sccs(&parent.mdp.graph());
    println!("abstract system: {} SCCs", sccs.len());

    // Add pedestrian 5, whose chain is a single periodic SCC.
    let ped = &peds[4];
    let derived = derive_sccs(&sccs, &tarjan_sccs(&ped.graph()), parent.layout.lift(5, ped.num_states()))?;
    agents[4] = ped.clone();
    let child = compose_system(&plant, &agents);
    let direct = tarjan_sccs(&child.mdp.graph());
    println!("with {}: {} derived SCCs, {} by Tarjan, equal: {}", ped.name, derived.len(), direct.len(), derived.canonical() == direct.canonical());
    print!("{}", derived.dump(|s| child.layout.state_name(s)));
    Ok(())
}
