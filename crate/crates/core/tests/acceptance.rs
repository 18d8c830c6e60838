//! Acceptance suite: one PASS/FAIL line per criterion, non-zero exit on any failure.

mod common;

use std::collections::HashMap;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};
use std::time::Instant;

use anytime_synth::compose::{compose_system, make_stationary};
use anytime_synth::fixtures;
use anytime_synth::model::{Mc, Prop};
use anytime_synth::policy::{lift_chain, simulate, Policy};
use anytime_synth::product::{build_product, refine_product};
use anytime_synth::scc::{derive_sccs, edge_precedence, product_partition, tarjan_sccs};
use anytime_synth::solve::{
    accepting_mask, block_value_iteration, residual, value_iteration_observed, SolverConfig,
};

type Outcome = Result<String, String>;

const SEEDS: u64 = 100;

fn fixture(name: &str) -> String {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures").join(name).display().to_string()
}

fn model_args(agents: &[usize]) -> Vec<String> {
    let mut a = vec!["--plant".to_string(), fixture("vehicle.mdl")];
    if !agents.is_empty() {
        a.push("--agent".into());
        a.extend(agents.iter().map(|i| fixture(&format!("ped{i}.mdl"))));
    }
    a.extend(["--dfa".to_string(), fixture("crossing.dfa")]);
    a
}

fn synth(args: &[String]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_synth"))
        .args(args)
        .env("SYNTH_THREADS", "1")
        .output()
        .expect("run synth")
}

fn cli(parts: &[&str], agents: &[usize]) -> Vec<String> {
    parts.iter().map(|s| s.to_string()).chain(model_args(agents)).collect()
}

fn ok(o: &Output) -> Result<String, String> {
    if o.status.success() {
        Ok(String::from_utf8_lossy(&o.stdout).into_owned())
    } else {
        Err(format!("exit {:?}: {}", o.status.code(), String::from_utf8_lossy(&o.stderr).trim()))
    }
}

fn probability(stdout: &str) -> Result<f64, String> {
    stdout
        .trim()
        .strip_prefix("probability=")
        .and_then(|v| v.parse().ok())
        .ok_or_else(|| format!("unexpected output `{}`", stdout.trim()))
}

const ALL: [usize; 5] = [1, 2, 3, 4, 5];

/// Optimal crossing probability for the vehicle and one pedestrian, by
/// value iteration written directly over (vehicle cell, pedestrian state).
fn single_pedestrian_oracle(ped: &Mc) -> f64 {
    // Vehicle: c0 -stay-> c0, c0 -advance-> c2, c2 -stay-> c2, c2 -advance-> c4.
    let moves: [&[usize]; 3] = [&[0, 1], &[1, 2], &[2]];
    let c2 = ped.state_index("c2");
    let n = ped.num_states();
    let mut v = vec![[0.0f64; 3]; n];
    for _ in 0..100_000 {
        let mut next = v.clone();
        for r in 0..n {
            for cell in 0..2 {
                if cell == 1 && Some(r) == c2 {
                    next[r][cell] = 0.0;
                    continue;
                }
                next[r][cell] = moves[cell]
                    .iter()
                    .map(|&to| {
                        ped.rows[r]
                            .iter()
                            .map(|&(r2, p)| {
                                if to == 2 {
                                    p
                                } else if to == 1 && Some(r2) == c2 {
                                    0.0
                                } else {
                                    p * v[r2][to]
                                }
                            })
                            .sum::<f64>()
                    })
                    .fold(0.0, f64::max);
            }
        }
        let diff = (0..n).flat_map(|r| (0..2).map(move |c| (r, c))).map(|(r, c)| (next[r][c] - v[r][c]).abs()).fold(0.0, f64::max);
        v = next;
        if diff < 1e-15 {
            break;
        }
    }
    (0..n).map(|r| ped.init[r] * v[r][0]).sum()
}

fn criterion_1() -> Outcome {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let mut detail = Vec::new();
    for method in ["vi", "scc"] {
        let out = dir.path().join(format!("{method}.tsv"));
        let start = Instant::now();
        let o = synth(&cli(&["synth", "--method", method, "--out", out.to_str().unwrap()], &ALL));
        let secs = start.elapsed().as_secs_f64();
        let p = probability(&ok(&o)?)?;
        if (p - 0.8).abs() > 1e-6 {
            return Err(format!("{method}: probability {p}"));
        }
        if secs > 30.0 {
            return Err(format!("{method}: took {secs:.1} s"));
        }
        detail.push(format!("{method}={p:.6} in {secs:.2}s"));
    }
    Ok(detail.join(", "))
}

fn criterion_2() -> Outcome {
    let full = build_product(&compose_system(&fixtures::vehicle(), &fixtures::pedestrians()), &fixtures::crossing_dfa());
    let pinned: Vec<Mc> = fixtures::pedestrians().iter().map(|m| make_stationary(m, None).unwrap()).collect();
    let abs = compose_system(&fixtures::vehicle(), &pinned);
    let (n, m) = (full.num_states(), abs.mdp.num_states());
    if n == 2187 && m == 3 {
        Ok(format!("product {n} states, abstract system {m} states"))
    } else {
        Err(format!("product {n} states, abstract system {m} states"))
    }
}

fn criterion_3() -> Outcome {
    const EXPECTED: [f64; 6] = [0.08, 0.46, 0.57, 0.63, 0.67, 0.8];
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let out = dir.path().join("any");
    ok(&synth(&cli(&["anytime", "--select", "given", "--out-dir", out.to_str().unwrap()], &ALL)))?;
    let csv = std::fs::read_to_string(out.join("metrics.csv")).map_err(|e| e.to_string())?;
    let probs: Vec<f64> = csv
        .lines()
        .skip(1)
        .map(|l| l.split(',').nth(10).and_then(|v| v.parse().ok()).ok_or("missing full_prob"))
        .collect::<Result<_, _>>()?;
    if probs.len() != EXPECTED.len() {
        return Err(format!("{} iterations", probs.len()));
    }
    let first = 0.6f64.powi(5);
    if (probs[0] - first).abs() > 1e-6 {
        return Err(format!("k=0: {} vs 0.6^5 = {first}", probs[0]));
    }
    let mut notes = Vec::new();
    for (k, (&p, &expected)) in probs.iter().zip(&EXPECTED).enumerate() {
        if (p - expected).abs() <= 0.01 {
            continue;
        }
        // Adjudicate with simulation of the lifted policy.
        let text = std::fs::read_to_string(out.join(format!("policy_k{k}.tsv"))).map_err(|e| e.to_string())?;
        let pol = Policy::parse(&text).map_err(|e| e.to_string())?;
        let (prod, chain) = lift_chain(&pol, &fixtures::vehicle(), &fixtures::pedestrians(), &fixtures::crossing_dfa())
            .map_err(|e| e.to_string())?;
        let sim = simulate(&chain, &Prop::accepting(), 1_000_000, 10 * prod.num_states(), k as u64, 4);
        if (sim.estimate - expected).abs() > 4.0 * sim.stderr {
            return Err(format!("k={k}: {p:.6} vs {expected}; simulation {:.6} ± {:.6}", sim.estimate, sim.stderr));
        }
        notes.push(format!("k={k} settled by simulation"));
    }
    let shown: Vec<String> = probs.iter().map(|p| format!("{p:.6}")).collect();
    Ok(format!("[{}] {}", shown.join(", "), notes.join("; ")).trim_end().to_string())
}

fn criterion_4() -> Outcome {
    let start = Instant::now();
    let mut worst: f64 = 0.0;
    for seed in 0..SEEDS {
        let inst = common::instance(seed);
        let mut p = inst.direct_product(&[]);
        let mut full = Vec::new();
        for &l in &inst.order {
            p = refine_product(&p, &inst.agents[l], l + 1).map_err(|e| format!("seed {seed}: {e}"))?;
            full.push(l);
            let d = common::product_distance(&p, &inst.direct_product(&full)).map_err(|e| format!("seed {seed}: {e}"))?;
            if d > 1e-12 {
                return Err(format!("seed {seed}: difference {d:e}"));
            }
            worst = worst.max(d);
        }
    }
    let secs = start.elapsed().as_secs_f64();
    if secs >= 10.0 {
        return Err(format!("took {secs:.1} s"));
    }
    Ok(format!("{SEEDS} instances, max difference {worst:e}, {secs:.2}s"))
}

fn criterion_5() -> Outcome {
    let start = Instant::now();
    let mut edges = 0;
    for seed in 0..SEEDS {
        let inst = common::instance(seed);
        let base = compose_system(&inst.plant, &inst.mixed(&[]));
        let mut layout = base.layout;
        let mut sccs = tarjan_sccs(&base.mdp.graph());
        let mut full = Vec::new();
        for &l in &inst.order {
            let agent = &inst.agents[l];
            sccs = derive_sccs(&sccs, &tarjan_sccs(&agent.graph()), layout.lift(l + 1, agent.num_states()))
                .map_err(|e| format!("seed {seed}: {e}"))?;
            full.push(l);
            let system = compose_system(&inst.plant, &inst.mixed(&full));
            let graph = system.mdp.graph();
            if sccs.canonical() != tarjan_sccs(&graph).canonical() {
                return Err(format!("seed {seed}: block sets differ after adding agent {}", l + 1));
            }
            // validate() checks that the order linearizes the candidate precedence,
            // which fails if the candidate relation is cyclic.
            sccs.validate(graph.len()).map_err(|e| format!("seed {seed}: {e}"))?;
            for (j, i) in edge_precedence(&sccs, &graph) {
                if !sccs.before[i].contains(&j) {
                    return Err(format!("seed {seed}: edge between blocks {i} -> {j} not covered"));
                }
                edges += 1;
            }
            layout = system.layout;
        }
    }
    let secs = start.elapsed().as_secs_f64();
    if secs >= 10.0 {
        return Err(format!("took {secs:.1} s"));
    }
    Ok(format!("{SEEDS} instances, {edges} cross-block edges covered, {secs:.2}s"))
}

fn criterion_6() -> Outcome {
    let cfg = SolverConfig::default();
    let eta = cfg.eta();
    let mut cases: Vec<(String, anytime_synth::product::ProductMdp)> = vec![(
        "fixture".into(),
        build_product(&compose_system(&fixtures::vehicle(), &fixtures::pedestrians()), &fixtures::crossing_dfa()),
    )];
    for seed in 0..SEEDS {
        let inst = common::instance(seed);
        let all: Vec<usize> = (0..inst.agents.len()).collect();
        cases.push((format!("seed {seed}"), inst.direct_product(&all)));
    }
    let mut worst: f64 = 0.0;
    for (name, p) in &cases {
        let targets = accepting_mask(p);
        let mut prev: Option<Vec<f64>> = None;
        let mut monotone = true;
        let plain = value_iteration_observed(p, &targets, &cfg, &mut |x| {
            if let Some(prev) = &prev {
                monotone &= prev.iter().zip(x).all(|(a, b)| a <= b);
            }
            monotone &= x.iter().all(|v| (0.0..=1.0).contains(v));
            prev = Some(x.to_vec());
        });
        if !monotone {
            return Err(format!("{name}: iterates not monotone in [0,1]"));
        }
        let part = product_partition(&tarjan_sccs(&p.system_graph()), p.num_dfa_states());
        let block = block_value_iteration(p, &part, &targets, &cfg).map_err(|e| format!("{name}: {e}"))?;
        if !plain.converged || !block.converged {
            return Err(format!("{name}: did not converge"));
        }
        for x in [&plain.values, &block.values] {
            let r = residual(&p.rows, &targets, x);
            if r > eta {
                return Err(format!("{name}: residual {r:e}"));
            }
        }
        for (a, b) in plain.values.iter().zip(&block.values) {
            worst = worst.max((a - b).abs());
        }
        if worst > eta {
            return Err(format!("{name}: solvers differ by {worst:e} > {eta:e}"));
        }
    }
    Ok(format!("{} models, max difference {worst:e} (10ε = {eta:e})", cases.len()))
}

fn criterion_7() -> Outcome {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let mut detail = Vec::new();
    for i in [5, 1] {
        let oracle = single_pedestrian_oracle(&fixtures::pedestrian(i));
        let expected = if i == 5 { 0.8 } else { 1.0 };
        if (oracle - expected).abs() > 1e-9 {
            return Err(format!("oracle for ped{i} gives {oracle}"));
        }
        let out = dir.path().join("p.tsv");
        let p = probability(&ok(&synth(&cli(&["synth", "--out", out.to_str().unwrap()], &[i])))?)?;
        if (p - oracle).abs() > 1e-6 {
            return Err(format!("ped{i}: {p} vs {oracle}"));
        }
        detail.push(format!("ped{i}={p:.6}"));
    }
    Ok(detail.join(", "))
}

/// Replaces the timing columns of metrics rows with `*`.
fn mask_timings(text: &str) -> String {
    text.lines()
        .map(|line| {
            let mut cols: Vec<&str> = line.split(',').collect();
            if cols.len() == 12 && cols[0] != "iteration" {
                for c in [4, 5, 6, 7, 8, 11] {
                    cols[c] = "*";
                }
            }
            cols.join(",")
        })
        .collect::<Vec<_>>()
        .join("\n")
}

fn read_dir(dir: &Path) -> HashMap<PathBuf, Vec<u8>> {
    std::fs::read_dir(dir)
        .map(|entries| {
            entries
                .flatten()
                .map(|e| (PathBuf::from(e.file_name()), std::fs::read(e.path()).unwrap_or_default()))
                .collect()
        })
        .unwrap_or_default()
}

fn criterion_8() -> Outcome {
    let runs: Vec<_> = (0..2).map(|_| tempfile::tempdir().expect("tempdir")).collect();
    let mut outputs = Vec::new();
    for dir in &runs {
        let d = dir.path();
        let policy = d.join("policy.tsv");
        let any = d.join("any");
        let mut stdout = String::new();
        stdout += &ok(&synth(&cli(&["synth", "--out", policy.to_str().unwrap()], &ALL)))?;
        stdout += &mask_timings(&ok(&synth(&cli(&["anytime", "--out-dir", any.to_str().unwrap()], &ALL)))?);
        stdout += &ok(&synth(&cli(&["eval", "--policy", policy.to_str().unwrap()], &ALL)))?;
        stdout += &ok(&synth(&cli(
            &["simulate", "--policy", policy.to_str().unwrap(), "--runs", "20000", "--seed", "11"],
            &ALL,
        )))?;
        let mut files = read_dir(&any);
        let metrics = files.remove(Path::new("metrics.csv")).ok_or("no metrics.csv")?;
        files.insert("metrics.csv(masked)".into(), mask_timings(&String::from_utf8_lossy(&metrics)).into_bytes());
        files.insert("policy.tsv".into(), std::fs::read(&policy).map_err(|e| e.to_string())?);
        outputs.push((stdout, files));
    }
    let (a, b) = (&outputs[0], &outputs[1]);
    if a.0 != b.0 {
        return Err("stdout differs between runs".into());
    }
    if a.1 != b.1 {
        return Err("written files differ between runs".into());
    }
    Ok(format!(
        "4 subcommands, {} files identical (timing columns masked)",
        a.1.len()
    ))
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 8] = [
        ("monolithic synthesis on the fixture is 0.8 (vi and scc)", criterion_1),
        ("fixture product has 2187 states, abstract system 3", criterion_2),
        ("anytime sequence with given order", criterion_3),
        ("incremental product equals direct product", criterion_4),
        ("derived SCCs equal Tarjan, candidate order covers edges", criterion_5),
        ("block-ordered and plain value iteration agree", criterion_6),
        ("single-pedestrian sub-models: ped5 0.8, ped1 1.0", criterion_7),
        ("identical runs give identical output", criterion_8),
    ];
    let mut failed = 0;
    for (k, (name, check)) in criteria.iter().enumerate() {
        match check() {
            Ok(detail) => println!("PASS criterion {}: {name} -- {detail}", k + 1),
            Err(why) => {
                failed += 1;
                println!("FAIL criterion {}: {name} -- {why}", k + 1);
            }
        }
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
