//! Memoryless policies over product states: extraction from a value vector,
//! the induced Markov chain, evaluation on the complete system, and a
//! Monte Carlo estimate of the satisfaction probability.

use std::collections::{HashMap, VecDeque};
use std::fmt::Write as _;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::compose::{compose_system, Plant, SlotStatus};
use crate::error::{Error, Result};
use crate::model::{Dfa, Mc, Prop, Row};
use crate::product::{build_product, ProductMdp};
use crate::solve::{mc_reachability, residual, ProbVector, SolverConfig};

/// Whether the policy observes an agent, or assumes it sits at a pinned state.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RosterEntry {
    pub name: String,
    pub pinned: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PolicyRow {
    /// Plant state followed by the states of the observed (full) agents, in roster order.
    pub observed: Vec<String>,
    pub dfa_state: String,
    /// `None` where no action is enabled.
    pub action: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Policy {
    pub roster: Vec<RosterEntry>,
    pub rows: Vec<PolicyRow>,
    index: HashMap<(Vec<String>, String), usize>,
}

const HEADER: &str = "#policy roster=";

impl Policy {
    pub fn new(roster: Vec<RosterEntry>, rows: Vec<PolicyRow>) -> Result<Self> {
        let width = 1 + roster.iter().filter(|e| e.pinned.is_none()).count();
        let mut index = HashMap::with_capacity(rows.len());
        for (k, row) in rows.iter().enumerate() {
            if row.observed.len() != width {
                return Err(Error::Policy(format!(
                    "row {} observes {} components, roster implies {width}",
                    k + 1,
                    row.observed.len()
                )));
            }
            if index.insert((row.observed.clone(), row.dfa_state.clone()), k).is_some() {
                return Err(Error::Policy(format!(
                    "duplicate row for ({}, {})",
                    row.observed.join(","),
                    row.dfa_state
                )));
            }
        }
        Ok(Policy { roster, rows, index })
    }

    pub fn lookup(&self, observed: &[String], dfa_state: &str) -> Option<&PolicyRow> {
        self.index
            .get(&(observed.to_vec(), dfa_state.to_string()))
            .map(|&k| &self.rows[k])
    }

    /// Names of the agents the policy observes.
    pub fn observed_agents(&self) -> impl Iterator<Item = &str> {
        self.roster
            .iter()
            .filter(|e| e.pinned.is_none())
            .map(|e| e.name.as_str())
    }

    pub fn render(&self) -> String {
        let roster: Vec<String> = self
            .roster
            .iter()
            .map(|e| match &e.pinned {
                None => format!("{}:full", e.name),
                Some(s) => format!("{}:pinned:{s}", e.name),
            })
            .collect();
        let mut out = format!("{HEADER}{}\n", roster.join(","));
        for row in &self.rows {
            for s in &row.observed {
                out.push_str(s);
                out.push('\t');
            }
            let _ = writeln!(out, "{}\t{}", row.dfa_state, row.action.as_deref().unwrap_or("-"));
        }
        out
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut lines = text.lines().enumerate();
        let header = lines
            .next()
            .map(|(_, l)| l)
            .unwrap_or_default()
            .strip_prefix(HEADER)
            .ok_or_else(|| Error::parse(1, format!("expected `{HEADER}...`")))?;
        let mut roster = Vec::new();
        for entry in header.split(',').filter(|e| !e.is_empty()) {
            let parts: Vec<&str> = entry.split(':').collect();
            let e = match parts.as_slice() {
                [name, "full"] => RosterEntry {
                    name: name.to_string(),
                    pinned: None,
                },
                [name, "pinned", state] => RosterEntry {
                    name: name.to_string(),
                    pinned: Some(state.to_string()),
                },
                _ => return Err(Error::parse(1, format!("bad roster entry `{entry}`"))),
            };
            roster.push(e);
        }
        let width = 1 + roster.iter().filter(|e| e.pinned.is_none()).count();
        let mut rows = Vec::new();
        for (k, line) in lines {
            let cols: Vec<&str> = line.split('\t').collect();
            if cols.len() != width + 2 || cols.iter().any(|c| c.is_empty()) {
                return Err(Error::parse(
                    k + 1,
                    format!("expected {} tab-separated columns", width + 2),
                ));
            }
            rows.push(PolicyRow {
                observed: cols[..width].iter().map(|s| s.to_string()).collect(),
                dfa_state: cols[width].to_string(),
                action: match cols[width + 1] {
                    "-" => None,
                    a => Some(a.to_string()),
                },
            });
        }
        Policy::new(roster, rows)
    }
}

/// Roster of a product's layout: full agents are observed, pinned ones are not.
pub fn roster_of(p: &ProductMdp) -> Vec<RosterEntry> {
    p.layout.slots[1..]
        .iter()
        .map(|slot| RosterEntry {
            name: slot.name.clone(),
            pinned: (slot.status == SlotStatus::Pinned).then(|| slot.states[0].clone()),
        })
        .collect()
}

/// Policy over `p` from per-state action indices.
pub fn policy_from_actions(p: &ProductMdp, actions: &[Option<usize>]) -> Result<Policy> {
    let roster = roster_of(p);
    let observed_slots: Vec<usize> = std::iter::once(0)
        .chain(
            p.layout
                .slots
                .iter()
                .enumerate()
                .skip(1)
                .filter(|(_, s)| s.status == SlotStatus::Full)
                .map(|(l, _)| l),
        )
        .collect();
    let rows = (0..p.num_states())
        .map(|i| {
            let (s, q) = p.split(i);
            let tuple = p.layout.decode(s);
            PolicyRow {
                observed: observed_slots
                    .iter()
                    .map(|&l| p.layout.slots[l].states[tuple[l]].clone())
                    .collect(),
                dfa_state: p.dfa.states[q].clone(),
                action: actions[i].map(|a| p.actions[a].clone()),
            }
        })
        .collect();
    Policy::new(roster, rows)
}

/// Memoryless policy from a value vector: among the near-optimal actions
/// (within 10ε of `x_s`), take the first in declaration order that moves one
/// step closer to the accepting states.
pub fn extract_policy(p: &ProductMdp, x: &ProbVector, cfg: &SolverConfig) -> Result<Policy> {
    policy_from_actions(p, &extract_actions(p, x, cfg)?)
}

pub fn extract_actions(p: &ProductMdp, x: &ProbVector, cfg: &SolverConfig) -> Result<Vec<Option<usize>>> {
    let eta = cfg.eta();
    let n = p.num_states();
    let x = &x.values;
    let value = |row: &Row| row.iter().map(|&(t, pr)| pr * x[t]).sum::<f64>();
    let act_max: Vec<Vec<usize>> = (0..n)
        .map(|i| {
            if p.is_accepting(i) {
                return Vec::new();
            }
            p.enabled(i)
                .filter(|&a| (x[i] - value(&p.rows[i][a])).abs() <= eta)
                .collect()
        })
        .collect();

    // ‖s‖: shortest Act_max distance to an accepting state.
    let mut rev = vec![Vec::new(); n];
    for (i, acts) in act_max.iter().enumerate() {
        for &a in acts {
            for &(t, _) in &p.rows[i][a] {
                rev[t].push(i);
            }
        }
    }
    let mut dist = vec![usize::MAX; n];
    let mut queue: VecDeque<usize> = (0..n).filter(|&i| p.is_accepting(i)).collect();
    for &i in &queue {
        dist[i] = 0;
    }
    while let Some(t) = queue.pop_front() {
        for &i in &rev[t] {
            if dist[i] == usize::MAX {
                dist[i] = dist[t] + 1;
                queue.push_back(i);
            }
        }
    }

    (0..n)
        .map(|i| {
            if p.is_accepting(i) || x[i] <= eta {
                return Ok(p.enabled(i).next());
            }
            let d = dist[i];
            let chosen = (d != usize::MAX)
                .then(|| {
                    act_max[i]
                        .iter()
                        .copied()
                        .find(|&a| p.rows[i][a].iter().any(|&(t, _)| dist[t] + 1 == d))
                })
                .flatten();
            chosen.map(Some).ok_or_else(|| {
                Error::Policy(format!(
                    "{} has value {} but no near-optimal action makes progress (residual {:e})",
                    p.state_name(i),
                    x[i],
                    residual(&p.rows, &crate::solve::accepting_mask(p), x)
                ))
            })
        })
        .collect()
}

/// Action index `pol` prescribes at every state of `p`, projecting agents the
/// policy does not observe away.
pub fn policy_actions(p: &ProductMdp, pol: &Policy) -> Result<Vec<Option<usize>>> {
    let mut observed_slots = vec![0];
    for name in pol.observed_agents() {
        let l = p
            .layout
            .agent_slot(name)
            .ok_or_else(|| Error::Policy(format!("policy observes unknown agent {name}")))?;
        if p.layout.slots[l].status != SlotStatus::Full {
            return Err(Error::Policy(format!(
                "policy observes {name}, which is abstracted in this model"
            )));
        }
        observed_slots.push(l);
    }
    let action_index: HashMap<&str, usize> = p
        .actions
        .iter()
        .enumerate()
        .map(|(a, name)| (name.as_str(), a))
        .collect();
    (0..p.num_states())
        .map(|i| {
            let (s, q) = p.split(i);
            let tuple = p.layout.decode(s);
            let observed: Vec<String> = observed_slots
                .iter()
                .map(|&l| p.layout.slots[l].states[tuple[l]].clone())
                .collect();
            let row = pol.lookup(&observed, &p.dfa.states[q]).ok_or_else(|| {
                Error::Policy(format!(
                    "no action for ({}, {})",
                    observed.join(","),
                    p.dfa.states[q]
                ))
            })?;
            match &row.action {
                None => Ok(None),
                Some(a) => {
                    let a = *action_index
                        .get(a.as_str())
                        .ok_or_else(|| Error::Policy(format!("unknown action {a}")))?;
                    if p.rows[i][a].is_empty() {
                        return Err(Error::Policy(format!(
                            "action {} is not enabled at {}",
                            p.actions[a],
                            p.state_name(i)
                        )));
                    }
                    Ok(Some(a))
                }
            }
        })
        .collect()
}

/// Chain over product states following `actions`; states without an action
/// stay put. Accepting states carry [`Prop::accepting`].
pub fn chain_from_actions(p: &ProductMdp, actions: &[Option<usize>]) -> Mc {
    let n = p.num_states();
    Mc {
        name: "induced".into(),
        agent: 0,
        states: (0..n).map(|i| p.state_name(i)).collect(),
        rows: (0..n)
            .map(|i| match actions[i] {
                Some(a) => p.rows[i][a].clone(),
                None => vec![(i, 1.0)],
            })
            .collect(),
        init: p.init.clone(),
        labels: (0..n)
            .map(|i| {
                let mut l = p.labels[p.split(i).0].clone();
                if p.is_accepting(i) {
                    l.insert(Prop::accepting());
                }
                l
            })
            .collect(),
        stationary: false,
    }
}

pub fn induce_chain(p: &ProductMdp, pol: &Policy) -> Result<Mc> {
    Ok(chain_from_actions(p, &policy_actions(p, pol)?))
}

/// Probability that `chain` reaches a state labelled [`Prop::accepting`],
/// weighted by its initial distribution.
pub fn chain_value(chain: &Mc, cfg: &SolverConfig) -> f64 {
    let marker = Prop::accepting();
    let targets: Vec<bool> = chain.labels.iter().map(|l| l.contains(&marker)).collect();
    mc_reachability(chain, &targets, cfg).initial_value(&chain.init)
}

/// Checks that every agent in the policy's roster is among `agents`.
pub fn check_roster(pol: &Policy, agents: &[Mc]) -> Result<()> {
    for e in &pol.roster {
        let agent = agents
            .iter()
            .find(|a| a.name == e.name)
            .ok_or_else(|| Error::Policy(format!("policy refers to unknown agent {}", e.name)))?;
        if let Some(s) = &e.pinned {
            if agent.state_index(s).is_none() {
                return Err(Error::Policy(format!("{} has no state {s}", e.name)));
            }
        }
    }
    Ok(())
}

/// Product of the complete system with `d` and the chain `pol` induces on it.
pub fn lift_chain(pol: &Policy, plant: &Plant, agents: &[Mc], d: &Dfa) -> Result<(ProductMdp, Mc)> {
    check_roster(pol, agents)?;
    let p = build_product(&compose_system(plant, agents), d);
    let chain = induce_chain(&p, pol)?;
    Ok((p, chain))
}

/// Satisfaction probability of `pol` executed on the complete system.
pub fn lift_and_evaluate(pol: &Policy, plant: &Plant, agents: &[Mc], d: &Dfa, cfg: &SolverConfig) -> Result<f64> {
    let (_, chain) = lift_chain(pol, plant, agents, d)?;
    Ok(chain_value(&chain, cfg))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Simulation {
    pub estimate: f64,
    pub stderr: f64,
    pub runs: u64,
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seed of run `run` under master seed `seed`.
pub fn mix(seed: u64, run: u64) -> u64 {
    splitmix64(seed ^ splitmix64(run))
}

fn sample(rng: &mut ChaCha8Rng, dist: impl IntoIterator<Item = (usize, f64)>) -> usize {
    let u: f64 = rng.random();
    let mut acc = 0.0;
    let mut last = 0;
    for (t, p) in dist {
        acc += p;
        last = t;
        if u < acc {
            return t;
        }
    }
    last
}

/// `SYNTH_THREADS`, default 1.
pub fn threads_from_env() -> usize {
    std::env::var("SYNTH_THREADS")
        .ok()
        .and_then(|v| v.trim().parse().ok())
        .filter(|&n: &usize| n > 0)
        .unwrap_or(1)
}

/// Monte Carlo estimate of reaching a `marker` state within `horizon` steps.
/// Runs stop early in states from which `marker` is unreachable. The result
/// depends only on `seed`, not on `threads`.
pub fn simulate(chain: &Mc, marker: &Prop, runs: u64, horizon: usize, seed: u64, threads: usize) -> Simulation {
    let n = chain.num_states();
    let target: Vec<bool> = chain.labels.iter().map(|l| l.contains(marker)).collect();
    let mut rev = vec![Vec::new(); n];
    for (s, row) in chain.rows.iter().enumerate() {
        for &(t, _) in row {
            rev[t].push(s);
        }
    }
    let mut alive = target.clone();
    let mut stack: Vec<usize> = (0..n).filter(|&s| target[s]).collect();
    while let Some(t) = stack.pop() {
        for &s in &rev[t] {
            if !alive[s] {
                alive[s] = true;
                stack.push(s);
            }
        }
    }
    let init: Vec<(usize, f64)> = chain
        .init
        .iter()
        .enumerate()
        .filter(|&(_, &p)| p > 0.0)
        .map(|(s, &p)| (s, p))
        .collect();

    let run_one = |run: u64| -> bool {
        let mut rng = ChaCha8Rng::seed_from_u64(mix(seed, run));
        let mut s = sample(&mut rng, init.iter().copied());
        for step in 0..=horizon {
            if target[s] {
                return true;
            }
            if !alive[s] || step == horizon {
                return false;
            }
            s = sample(&mut rng, chain.rows[s].iter().copied());
        }
        false
    };
    let count = |range: std::ops::Range<u64>| range.filter(|&r| run_one(r)).count() as u64;

    let threads = threads.clamp(1, runs.max(1) as usize) as u64;
    let successes = if threads == 1 {
        count(0..runs)
    } else {
        let chunk = runs.div_ceil(threads);
        std::thread::scope(|scope| {
            let handles: Vec<_> = (0..threads)
                .map(|k| {
                    let range = (k * chunk).min(runs)..((k + 1) * chunk).min(runs);
                    scope.spawn(move || count(range))
                })
                .collect();
            handles.into_iter().map(|h| h.join().expect("simulation thread")).sum()
        })
    };
    let estimate = if runs == 0 { 0.0 } else { successes as f64 / runs as f64 };
    let stderr = if runs == 0 {
        0.0
    } else {
        (estimate * (1.0 - estimate) / runs as f64).sqrt()
    };
    Simulation { estimate, stderr, runs }
}
