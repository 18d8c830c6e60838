//! Seeded random instances shared by the integration and acceptance tests:
//! a plant MDP with at most 4 states, at most 3 agents with at most 4 states
//! each, and a complete deterministic DFA with at most 4 states.

#![allow(dead_code)]

use std::fmt::Write as _;

use anytime_synth::compose::{compose_system, make_stationary, Plant};
use anytime_synth::model::{parse_component, parse_dfa, Component, Dfa, Mc};
use anytime_synth::product::{build_product, ProductMdp};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub struct Instance {
    pub plant: Plant,
    pub agents: Vec<Mc>,
    pub dfa: Dfa,
    /// Order in which agents are refined.
    pub order: Vec<usize>,
}

/// Random distribution over `targets`, written with full precision.
fn distribution(rng: &mut ChaCha8Rng, targets: &[usize]) -> Vec<(usize, f64)> {
    let weights: Vec<u32> = targets.iter().map(|_| rng.random_range(1..=4)).collect();
    let total: u32 = weights.iter().sum();
    targets
        .iter()
        .zip(weights)
        .map(|(&t, w)| (t, w as f64 / total as f64))
        .collect()
}

fn random_row(rng: &mut ChaCha8Rng, n: usize) -> Vec<(usize, f64)> {
    let targets = subset(rng, n, 2);
    distribution(rng, &targets)
}

fn subset(rng: &mut ChaCha8Rng, n: usize, max: usize) -> Vec<usize> {
    let mut all: Vec<usize> = (0..n).collect();
    all.shuffle(rng);
    let k = rng.random_range(1..=max.min(n));
    let mut out = all[..k].to_vec();
    out.sort_unstable();
    out
}

const PROPS: [&str; 2] = ["p", "r"];

fn labels(rng: &mut ChaCha8Rng, out: &mut String, n: usize) {
    for s in 0..n {
        let props: Vec<&str> = PROPS.iter().copied().filter(|_| rng.random_bool(0.4)).collect();
        if !props.is_empty() {
            let _ = writeln!(out, "label s{s} {}", props.join(" "));
        }
    }
}

fn states_line(n: usize) -> String {
    (0..n).map(|s| format!("s{s}")).collect::<Vec<_>>().join(" ")
}

pub fn plant_text(rng: &mut ChaCha8Rng) -> String {
    let n = rng.random_range(1..=4);
    let mut t = format!("kind mdp\nname plant\nagent 0\nstates {}\nactions a b\n", states_line(n));
    for (s, p) in random_row(rng, n) {
        let _ = writeln!(t, "init s{s} {p}");
    }
    for s in 0..n {
        let enabled: Vec<&str> = match rng.random_range(0..3) {
            0 => vec!["a"],
            1 => vec!["b"],
            _ => vec!["a", "b"],
        };
        for a in enabled {
            for (d, p) in random_row(rng, n) {
                let _ = writeln!(t, "trans s{s} {a} s{d} {p}");
            }
        }
    }
    labels(rng, &mut t, n);
    t
}

pub fn agent_text(rng: &mut ChaCha8Rng, i: usize) -> String {
    let n = rng.random_range(1..=4);
    let mut t = format!("kind mc\nname m{i}\nagent {i}\nstates {}\n", states_line(n));
    for (s, p) in random_row(rng, n) {
        let _ = writeln!(t, "init s{s} {p}");
    }
    for s in 0..n {
        for (d, p) in random_row(rng, n) {
            let _ = writeln!(t, "trans s{s} s{d} {p}");
        }
    }
    labels(rng, &mut t, n);
    t
}

/// Each state splits on the valuations of up to two propositions; every
/// valuation gets one random successor, so the DFA is complete and deterministic.
pub fn dfa_text(rng: &mut ChaCha8Rng, props: &[String]) -> String {
    let n = rng.random_range(1..=4);
    let names: Vec<String> = (0..n).map(|q| format!("q{q}")).collect();
    let accept: Vec<&str> = names
        .iter()
        .enumerate()
        .filter(|&(q, _)| q == n - 1 || rng.random_bool(0.2))
        .map(|(_, s)| s.as_str())
        .collect();
    let mut t = format!("kind dfa\nstates {}\ninit q0\naccept {}\n", names.join(" "), accept.join(" "));
    for q in 0..n {
        let mut pool = props.to_vec();
        pool.shuffle(rng);
        let k = rng.random_range(0..=2.min(pool.len()));
        let split = &pool[..k];
        for mask in 0..(1usize << k) {
            let guard = if k == 0 {
                "true".to_string()
            } else {
                split
                    .iter()
                    .enumerate()
                    .map(|(b, p)| if mask >> b & 1 == 1 { p.clone() } else { format!("!{p}") })
                    .collect::<Vec<_>>()
                    .join(" & ")
            };
            let _ = writeln!(t, "trans q{q} q{} {guard}", rng.random_range(0..n));
        }
    }
    t
}

pub fn instance(seed: u64) -> Instance {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let plant = Plant::try_from(parse_component(&plant_text(&mut rng)).expect("plant")).expect("plant kind");
    let k = rng.random_range(1..=3);
    let agents: Vec<Mc> = (1..=k)
        .map(|i| match parse_component(&agent_text(&mut rng, i)).expect("agent") {
            Component::Mc(m) => m,
            _ => unreachable!(),
        })
        .collect();
    let props: Vec<String> = (0..=k)
        .flat_map(|i| PROPS.iter().map(move |p| format!("{p}@{i}")))
        .collect();
    let dfa = parse_dfa(&dfa_text(&mut rng, &props)).expect("dfa");
    let mut order: Vec<usize> = (0..k).collect();
    order.shuffle(&mut rng);
    Instance { plant, agents, dfa, order }
}

impl Instance {
    /// Agents with the ones in `full` kept and the rest pinned to their mode.
    pub fn mixed(&self, full: &[usize]) -> Vec<Mc> {
        self.agents
            .iter()
            .enumerate()
            .map(|(i, a)| if full.contains(&i) { a.clone() } else { make_stationary(a, None).unwrap() })
            .collect()
    }

    pub fn direct_product(&self, full: &[usize]) -> ProductMdp {
        build_product(&compose_system(&self.plant, &self.mixed(full)), &self.dfa)
    }
}

/// Largest difference between two products that should be identical, or a
/// description of the first structural mismatch.
pub fn product_distance(a: &ProductMdp, b: &ProductMdp) -> Result<f64, String> {
    if a.layout != b.layout {
        return Err("layouts differ".into());
    }
    if a.labels != b.labels {
        return Err("labels differ".into());
    }
    let mut worst: f64 = 0.0;
    for (x, y) in a.init.iter().zip(&b.init) {
        worst = worst.max((x - y).abs());
    }
    for (name, ra, rb) in [("P_p", &a.rows, &b.rows), ("P~_p", &a.inter_rows, &b.inter_rows)] {
        if ra.len() != rb.len() {
            return Err(format!("{name}: state counts differ"));
        }
        for (i, (acts_a, acts_b)) in ra.iter().zip(rb).enumerate() {
            for (alpha, (row_a, row_b)) in acts_a.iter().zip(acts_b).enumerate() {
                if row_a.len() != row_b.len() {
                    return Err(format!("{name}: support differs at state {i}, action {alpha}"));
                }
                for (&(ta, pa), &(tb, pb)) in row_a.iter().zip(row_b) {
                    if ta != tb {
                        return Err(format!("{name}: support differs at state {i}, action {alpha}"));
                    }
                    worst = worst.max((pa - pb).abs());
                }
            }
        }
    }
    Ok(worst)
}
