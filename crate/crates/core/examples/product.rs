//! Build the product with the DFA directly and incrementally, and compare.

use anytime_synth::compose::{compose_system, make_stationary};
use anytime_synth::fixtures;
use anytime_synth::product::{build_product, refine_product};

fn main() -> anytime_synth::Result<()> {
    let plant = fixtures::vehicle();
    let peds = fixtures::pedestrians();
    let dfa = fixtures::crossing_dfa();

    let pinned = peds.iter().map(|m| make_stationary(m, None)).collect::<anytime_synth::Result<Vec<_>>>()?;
    let mut p = build_product(&compose_system(&plant, &pinned), &dfa);
    println!("abstract product: {} states", p.num_states());
    for (l, agent) in peds.iter().enumerate() {
        p = refine_product(&p, agent, l + 1)?;
        println!("after refining {}: {} states", agent.name, p.num_states());
    }

    let direct = build_product(&compose_system(&plant, &peds), &dfa);
    let worst = (0..p.num_states())
        .flat_map(|i| p.enabled(i).map(move |a| (i, a)).collect::<Vec<_>>())
        .flat_map(|(i, a)| (0..p.num_states()).map(move |j| (i, a, j)))
        .filter(|&(i, a, j)| p.prob(i, a, j) != 0.0 || direct.prob(i, a, j) != 0.0)
        .map(|(i, a, j)| (p.prob(i, a, j) - direct.prob(i, a, j)).abs())
        .fold(0.0, f64::max);
    println!("largest transition difference from the direct product: {worst:e}");
    Ok(())
}
