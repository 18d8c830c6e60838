//! Maximal reachability on the full product, plain and block-ordered.

use std::time::Instant;

use anytime_synth::compose::compose_system;
use anytime_synth::fixtures;
use anytime_synth::product::build_product;
use anytime_synth::scc::{product_partition, tarjan_sccs};
use anytime_synth::solve::{accepting_mask, block_value_iteration, value_iteration, SolverConfig};

fn main() -> anytime_synth::Result<()> {
    let p = build_product(&compose_system(&fixtures::vehicle(), &fixtures::pedestrians()), &fixtures::crossing_dfa());
    let targets = accepting_mask(&p);
    let cfg = SolverConfig::default();

    let start = Instant::now();
    let plain = value_iteration(&p, &targets, &cfg);
    println!("plain: {:.6} after {} sweeps ({:?})", plain.initial_value(&p.init), plain.iterations, start.elapsed());

    let start = Instant::now();
    let blocks = product_partition(&tarjan_sccs(&p.system_graph()), p.num_dfa_states());
    let block = block_value_iteration(&p, &blocks, &targets, &cfg)?;
    println!("block: {:.6} over {} blocks ({:?})", block.initial_value(&p.init), blocks.len(), start.elapsed());
    Ok(())
}
