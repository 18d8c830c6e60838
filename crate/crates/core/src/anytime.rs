//! Anytime synthesis: start with every agent pinned to a single state and
//! add one full agent model per iteration, reusing the previous product MDP
//! and SCC decomposition. Every iteration yields a usable policy.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

use crate::compose::{compose_system, make_stationary, Plant};
use crate::error::{Error, Result};
use crate::model::{Dfa, Mc};
use crate::policy::{chain_from_actions, chain_value, extract_actions, lift_and_evaluate, policy_actions, policy_from_actions, Policy};
use crate::product::{build_product, refine_product, ProductMdp};
use crate::scc::{derive_sccs, product_partition, tarjan_sccs, SccSet};
use crate::solve::{accepting_mask, block_value_iteration, SolverConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Selection {
    /// Add the agent under which the current policy performs worst.
    MinProb,
    /// Add agents in declaration order.
    GivenOrder,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AnytimeConfig {
    pub budget_seconds: Option<f64>,
    pub budget_states: Option<usize>,
    pub selection: Selection,
    pub solver: SolverConfig,
    /// Evaluate every policy on the complete system (not counted against the budget).
    pub evaluate: bool,
    pub out_dir: Option<PathBuf>,
}

impl Default for AnytimeConfig {
    fn default() -> Self {
        AnytimeConfig {
            budget_seconds: None,
            budget_states: None,
            selection: Selection::MinProb,
            solver: SolverConfig::default(),
            evaluate: true,
            out_dir: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct IterationReport {
    pub iteration: usize,
    pub agent_added: Option<String>,
    pub system_states: usize,
    pub product_states: usize,
    pub build_s: f64,
    pub scc_s: f64,
    pub solve_s: f64,
    pub policy_s: f64,
    pub select_s: f64,
    pub abstract_prob: f64,
    pub full_prob: Option<f64>,
    pub elapsed_s: f64,
}

pub const METRICS_HEADER: &str =
    "iteration,agent_added,system_states,product_states,build_s,scc_s,solve_s,policy_s,select_s,abstract_prob,full_prob,elapsed_s";

impl IterationReport {
    pub fn csv_row(&self) -> String {
        format!(
            "{},{},{},{},{:.4},{:.4},{:.4},{:.4},{:.4},{:.6},{},{:.4}",
            self.iteration,
            self.agent_added.as_deref().unwrap_or(""),
            self.system_states,
            self.product_states,
            self.build_s,
            self.scc_s,
            self.solve_s,
            self.policy_s,
            self.select_s,
            self.abstract_prob,
            self.full_prob.map(|p| format!("{p:.6}")).unwrap_or_default(),
            self.elapsed_s,
        )
    }
}

pub fn metrics_csv(reports: &[IterationReport]) -> String {
    let mut out = format!("{METRICS_HEADER}\n");
    for r in reports {
        let _ = writeln!(out, "{}", r.csv_row());
    }
    out
}

#[derive(Debug, Clone)]
pub struct Iteration {
    pub policy: Policy,
    pub report: IterationReport,
}

/// Score of each candidate: probability that the current policy, lifted to
/// the model with that agent added, satisfies the specification.
pub fn candidate_scores(
    product: &ProductMdp,
    policy: &Policy,
    candidates: &[(usize, &Mc)],
    cfg: &SolverConfig,
) -> Result<Vec<f64>> {
    candidates
        .iter()
        .map(|&(slot, agent)| {
            let refined = refine_product(product, agent, slot)?;
            let actions = policy_actions(&refined, policy)?;
            Ok(chain_value(&chain_from_actions(&refined, &actions), cfg))
        })
        .collect()
}

/// Scores within this distance count as ties.
const TIE: f64 = 1e-9;

/// Index into `candidates` of the agent to add next. `candidates` are
/// `(slot, agent)` pairs in declaration order; ties go to the earliest.
pub fn select_next_agent(
    product: &ProductMdp,
    policy: &Policy,
    candidates: &[(usize, &Mc)],
    cfg: &SolverConfig,
) -> Result<usize> {
    if candidates.is_empty() {
        return Err(Error::validation("no agent left to add"));
    }
    if candidates.len() == 1 {
        return Ok(0);
    }
    let scores = candidate_scores(product, policy, candidates, cfg)?;
    let mut best = 0;
    for (k, &s) in scores.iter().enumerate().skip(1) {
        if s < scores[best] - TIE {
            best = k;
        }
    }
    Ok(best)
}

struct Stopwatch {
    start: Instant,
    excluded: Duration,
}

impl Stopwatch {
    fn elapsed(&self) -> f64 {
        (self.start.elapsed() - self.excluded).as_secs_f64()
    }
}

fn timed<T>(f: impl FnOnce() -> T) -> (T, f64) {
    let t = Instant::now();
    let out = f();
    (out, t.elapsed().as_secs_f64())
}

/// Runs the anytime loop until every agent is full or a budget is exhausted;
/// iteration 0 always completes.
pub fn run_anytime(plant: &Plant, agents: &[Mc], d: &Dfa, cfg: &AnytimeConfig) -> Result<Vec<Iteration>> {
    let mut clock = Stopwatch {
        start: Instant::now(),
        excluded: Duration::ZERO,
    };
    let solver = &cfg.solver;

    let ((mut product, mut system_sccs, agent_sccs), build_s, scc_s) = {
        let (product, build_s) = timed(|| -> Result<ProductMdp> {
            let pinned = agents
                .iter()
                .map(|a| make_stationary(a, None))
                .collect::<Result<Vec<_>>>()?;
            Ok(build_product(&compose_system(plant, &pinned), d))
        });
        let product = product?;
        let ((sys, per_agent), scc_s) = timed(|| {
            let sys = tarjan_sccs(&product.system_graph());
            let per_agent: Vec<SccSet> = agents.iter().map(|a| tarjan_sccs(&a.graph())).collect();
            (sys, per_agent)
        });
        ((product, sys, per_agent), build_s, scc_s)
    };

    let mut out = Vec::new();
    let mut remaining: Vec<usize> = (0..agents.len()).collect();
    let mut added: Option<usize> = None;
    let (mut build_s, mut scc_s, mut select_s) = (build_s, scc_s, 0.0);

    loop {
        let (partition, part_s) = timed(|| product_partition(&system_sccs, product.num_dfa_states()));
        let targets = accepting_mask(&product);
        let (x, solve_s) = timed(|| block_value_iteration(&product, &partition, &targets, solver));
        let x = x?;
        let (policy, policy_s) = timed(|| -> Result<Policy> {
            policy_from_actions(&product, &extract_actions(&product, &x, solver)?)
        });
        let policy = policy?;
        let full_prob = if cfg.evaluate {
            let t = Instant::now();
            let p = lift_and_evaluate(&policy, plant, agents, d, solver)?;
            clock.excluded += t.elapsed();
            Some(p)
        } else {
            None
        };
        let report = IterationReport {
            iteration: out.len(),
            agent_added: added.map(|l| agents[l].name.clone()),
            system_states: product.num_system_states(),
            product_states: product.num_states(),
            build_s,
            scc_s: scc_s + part_s,
            solve_s,
            policy_s,
            select_s,
            abstract_prob: x.initial_value(&product.init),
            full_prob,
            elapsed_s: clock.elapsed(),
        };
        out.push(Iteration { policy, report });

        if remaining.is_empty() {
            break;
        }
        if cfg.budget_seconds.is_some_and(|b| clock.elapsed() >= b) {
            break;
        }
        let fits = |l: usize| {
            cfg.budget_states
                .is_none_or(|b| product.num_states() * agents[l].num_states() <= b)
        };
        let candidates: Vec<usize> = match cfg.selection {
            Selection::GivenOrder => remaining.iter().copied().take(1).filter(|&l| fits(l)).collect(),
            Selection::MinProb => remaining.iter().copied().filter(|&l| fits(l)).collect(),
        };
        if candidates.is_empty() {
            break;
        }
        let (pick, sel_s) = timed(|| -> Result<usize> {
            let pairs: Vec<(usize, &Mc)> = candidates.iter().map(|&l| (l + 1, &agents[l])).collect();
            let policy = &out.last().expect("at least one iteration").policy;
            Ok(candidates[select_next_agent(&product, policy, &pairs, solver)?])
        });
        let l = pick?;
        select_s = sel_s;
        remaining.retain(|&r| r != l);

        let (refined, b_s) = timed(|| refine_product(&product, &agents[l], l + 1));
        let refined = refined?;
        let lift = product.layout.lift(l + 1, agents[l].num_states());
        let (derived, s_s) = timed(|| derive_sccs(&system_sccs, &agent_sccs[l], lift));
        system_sccs = derived?;
        product = refined;
        build_s = b_s;
        scc_s = s_s;
        added = Some(l);
    }

    if let Some(dir) = &cfg.out_dir {
        write_outputs(dir, &out)?;
    }
    Ok(out)
}

/// Writes `metrics.csv` and `policy_k<k>.tsv` for every iteration.
pub fn write_outputs(dir: &Path, iterations: &[Iteration]) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    let reports: Vec<IterationReport> = iterations.iter().map(|it| it.report.clone()).collect();
    std::fs::write(dir.join("metrics.csv"), metrics_csv(&reports))?;
    for (k, it) in iterations.iter().enumerate() {
        std::fs::write(dir.join(format!("policy_k{k}.tsv")), it.policy.render())?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;

    fn given() -> AnytimeConfig {
        AnytimeConfig {
            selection: Selection::GivenOrder,
            ..AnytimeConfig::default()
        }
    }

    #[test]
    fn initial_scores_tie_at_point_six() {
        let agents = fixtures::pedestrians();
        let cfg = AnytimeConfig {
            budget_seconds: Some(0.0),
            ..given()
        };
        let run = run_anytime(&fixtures::vehicle(), &agents, &fixtures::crossing_dfa(), &cfg).unwrap();
        assert_eq!(run.len(), 1);
        let pinned: Vec<Mc> = agents.iter().map(|a| make_stationary(a, None).unwrap()).collect();
        let product = build_product(&compose_system(&fixtures::vehicle(), &pinned), &fixtures::crossing_dfa());
        let pairs: Vec<(usize, &Mc)> = agents.iter().enumerate().map(|(l, a)| (l + 1, a)).collect();
        let scores = candidate_scores(&product, &run[0].policy, &pairs, &cfg.solver).unwrap();
        for s in &scores {
            assert!((s - 0.6).abs() < 1e-9, "{scores:?}");
        }
        assert_eq!(select_next_agent(&product, &run[0].policy, &pairs, &cfg.solver).unwrap(), 0);
        assert_eq!(select_next_agent(&product, &run[0].policy, &pairs[3..4], &cfg.solver).unwrap(), 0);
    }

    #[test]
    fn state_budget_stops_early() {
        let cfg = AnytimeConfig {
            budget_states: Some(100),
            evaluate: false,
            ..given()
        };
        let run = run_anytime(&fixtures::vehicle(), &fixtures::pedestrians(), &fixtures::crossing_dfa(), &cfg).unwrap();
        let sizes: Vec<usize> = run.iter().map(|it| it.report.product_states).collect();
        assert_eq!(sizes, vec![9, 27, 81]);
        assert!(run.iter().all(|it| it.report.full_prob.is_none()));
    }

    #[test]
    fn csv_row_format() {
        let r = IterationReport {
            iteration: 1,
            agent_added: Some("ped1".into()),
            system_states: 9,
            product_states: 27,
            build_s: 0.00012,
            scc_s: 0.0,
            solve_s: 0.5,
            policy_s: 0.0,
            select_s: 0.0,
            abstract_prob: 1.0,
            full_prob: None,
            elapsed_s: 1.23456,
        };
        assert_eq!(r.csv_row(), "1,ped1,9,27,0.0001,0.0000,0.5000,0.0000,0.0000,1.000000,,1.2346");
        assert_eq!(METRICS_HEADER.split(',').count(), r.csv_row().split(',').count());
    }
}
