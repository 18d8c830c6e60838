//! Pipeline properties on the pedestrian-crossing fixture.

use anytime_synth::anytime::{run_anytime, AnytimeConfig, Selection};
use anytime_synth::compose::{compose_system, make_stationary};
use anytime_synth::fixtures;
use anytime_synth::model::{Mc, Prop};
use anytime_synth::policy::{chain_value, extract_policy, lift_and_evaluate, lift_chain, simulate};
use anytime_synth::product::build_product;
use anytime_synth::scc::{product_partition, tarjan_sccs};
use anytime_synth::solve::{accepting_mask, block_value_iteration, value_iteration, SolverConfig};

#[test]
fn optimal_policy_crosses_when_ped5_blocks_nobody() {
    let cfg = SolverConfig::default();
    let p = build_product(&compose_system(&fixtures::vehicle(), &fixtures::pedestrians()), &fixtures::crossing_dfa());
    let x = value_iteration(&p, &accepting_mask(&p), &cfg);
    let pol = extract_policy(&p, &x, &cfg).unwrap();
    let observed: Vec<String> = ["c0", "c3", "c3", "c3", "c3", "c2"].iter().map(|s| s.to_string()).collect();
    assert_eq!(pol.lookup(&observed, "q0").unwrap().action.as_deref(), Some("a2"));

    // Evaluating the optimal policy reproduces the optimal value.
    let v = lift_and_evaluate(&pol, &fixtures::vehicle(), &fixtures::pedestrians(), &fixtures::crossing_dfa(), &cfg).unwrap();
    assert!((v - x.initial_value(&p.init)).abs() <= cfg.eta());
}

#[test]
fn system_partition_shapes() {
    let full = compose_system(&fixtures::vehicle(), &fixtures::pedestrians());
    let sccs = tarjan_sccs(&full.mdp.graph());
    let part = product_partition(&sccs, 3);
    assert_eq!(part.len(), sccs.len());
    assert!(part.blocks.iter().all(|b| b.len() % 3 == 0));

    let peds: Vec<Mc> = fixtures::pedestrians()[..1].iter().cloned().chain(
        fixtures::pedestrians()[1..].iter().map(|m| make_stationary(m, None).unwrap()),
    ).collect();
    let one = compose_system(&fixtures::vehicle(), &peds);
    let sccs = tarjan_sccs(&one.mdp.graph());
    assert_eq!(sccs.len(), 9);
    let part = product_partition(&sccs, 3);
    assert!(part.blocks.iter().all(|b| b.len() == 3));
}

#[test]
fn anytime_invariants() {
    let cfg = AnytimeConfig {
        selection: Selection::GivenOrder,
        ..AnytimeConfig::default()
    };
    let run = run_anytime(&fixtures::vehicle(), &fixtures::pedestrians(), &fixtures::crossing_dfa(), &cfg).unwrap();
    assert_eq!(run.len(), 6);
    let mut elapsed = 0.0;
    for (k, it) in run.iter().enumerate() {
        let r = &it.report;
        assert_eq!(r.iteration, k);
        assert_eq!(r.product_states, r.system_states * 3);
        assert_eq!(r.system_states, 3 * 3usize.pow(k as u32));
        assert_eq!(it.policy.observed_agents().count(), k);
        assert!(r.elapsed_s >= elapsed);
        elapsed = r.elapsed_s;
    }
    let last = &run[5].report;
    let eta = cfg.solver.eta();
    assert!((last.abstract_prob - 0.8).abs() <= eta);
    assert!((last.abstract_prob - last.full_prob.unwrap()).abs() <= eta);

    // Abstract probability = block VI on that iteration's product.
    let p = build_product(&compose_system(&fixtures::vehicle(), &fixtures::pedestrians()), &fixtures::crossing_dfa());
    let part = product_partition(&tarjan_sccs(&p.system_graph()), 3);
    let x = block_value_iteration(&p, &part, &accepting_mask(&p), &cfg.solver).unwrap();
    assert!((x.initial_value(&p.init) - last.abstract_prob).abs() <= eta);
}

#[test]
fn min_prob_selection_adds_every_agent_once() {
    let run = run_anytime(&fixtures::vehicle(), &fixtures::pedestrians(), &fixtures::crossing_dfa(), &AnytimeConfig::default()).unwrap();
    let mut added: Vec<String> = run.iter().filter_map(|it| it.report.agent_added.clone()).collect();
    assert_eq!(added[0], "ped1");
    added.sort();
    assert_eq!(added, vec!["ped1", "ped2", "ped3", "ped4", "ped5"]);
    assert!((run[5].report.full_prob.unwrap() - 0.8).abs() < 1e-6);
}

#[test]
fn simulation_agrees_with_exact_values() {
    let cfg = AnytimeConfig {
        selection: Selection::GivenOrder,
        evaluate: false,
        ..AnytimeConfig::default()
    };
    let run = run_anytime(&fixtures::vehicle(), &fixtures::pedestrians(), &fixtures::crossing_dfa(), &cfg).unwrap();
    for (k, it) in run.iter().enumerate() {
        let (p, chain) = lift_chain(&it.policy, &fixtures::vehicle(), &fixtures::pedestrians(), &fixtures::crossing_dfa()).unwrap();
        let exact = chain_value(&chain, &cfg.solver);
        let sim = simulate(&chain, &Prop::accepting(), 40_000, 10 * p.num_states(), k as u64, 2);
        let sigma = (exact * (1.0 - exact) / 40_000.0).sqrt();
        assert!((sim.estimate - exact).abs() <= 4.0 * sigma, "k={k}: {} vs {exact}", sim.estimate);
    }
}
