//! Synchronous parallel composition of the plant with environment agents,
//! and the one-state stationary abstraction of an agent.

use crate::error::{Error, Result};
use crate::model::{Component, Dfts, Mc, Mdp, PropSet, Row};

/// Plant model: deterministic (DFTS) or stochastic (MDP).
#[derive(Debug, Clone, PartialEq)]
pub enum Plant {
    Dfts(Dfts),
    Mdp(Mdp),
}

impl Plant {
    pub fn name(&self) -> &str {
        match self {
            Plant::Dfts(t) => &t.name,
            Plant::Mdp(m) => &m.name,
        }
    }

    pub fn states(&self) -> &[String] {
        match self {
            Plant::Dfts(t) => &t.states,
            Plant::Mdp(m) => &m.states,
        }
    }

    pub fn to_mdp(&self) -> Mdp {
        match self {
            Plant::Dfts(t) => t.to_mdp(),
            Plant::Mdp(m) => m.clone(),
        }
    }
}

impl TryFrom<Component> for Plant {
    type Error = Error;

    fn try_from(c: Component) -> Result<Self> {
        match c {
            Component::Dfts(t) => Ok(Plant::Dfts(t)),
            Component::Mdp(m) => Ok(Plant::Mdp(m)),
            Component::Mc(m) => Err(Error::validation(format!(
                "{}: a plant must be a dfts or an mdp",
                m.name
            ))),
        }
    }
}

/// Tuple of per-component local state indices, plant first.
pub type CompositeState = Vec<usize>;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SlotStatus {
    Plant,
    Full,
    /// Stationary abstraction; the slot holds exactly the pinned state.
    Pinned,
}

/// One position of a composite state.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Slot {
    pub name: String,
    pub agent: u32,
    pub states: Vec<String>,
    pub status: SlotStatus,
}

/// Row-major (plant most significant) numbering of composite states.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Layout {
    pub slots: Vec<Slot>,
}

impl Layout {
    pub fn num_states(&self) -> usize {
        self.slots.iter().map(|s| s.states.len()).product()
    }

    /// Index distance between consecutive values of slot `l`.
    pub fn stride(&self, l: usize) -> usize {
        self.slots[l + 1..].iter().map(|s| s.states.len()).product()
    }

    pub fn encode(&self, tuple: &[usize]) -> usize {
        tuple
            .iter()
            .zip(&self.slots)
            .fold(0, |acc, (&d, slot)| acc * slot.states.len() + d)
    }

    pub fn decode(&self, mut index: usize) -> CompositeState {
        let mut tuple = vec![0; self.slots.len()];
        for (l, slot) in self.slots.iter().enumerate().rev() {
            let n = slot.states.len();
            tuple[l] = index % n;
            index /= n;
        }
        tuple
    }

    /// Local state of slot `l` inside composite state `index`.
    pub fn digit(&self, index: usize, l: usize) -> usize {
        index / self.stride(l) % self.slots[l].states.len()
    }

    /// `c0,c1,c1,...`
    pub fn state_name(&self, index: usize) -> String {
        self.decode(index)
            .iter()
            .zip(&self.slots)
            .map(|(&d, slot)| slot.states[d].as_str())
            .collect::<Vec<_>>()
            .join(",")
    }

    /// Index map `(s̃, r) ↦ s̃|_{l←r}` from this layout, where slot `l` holds a
    /// single state, to the layout in which slot `l` has `n_l` states.
    pub fn lift(&self, l: usize, n_l: usize) -> impl Fn(usize, usize) -> usize {
        let stride = self.stride(l);
        move |s, r| (s / stride * n_l + r) * stride + s % stride
    }

    pub fn agent_slot(&self, name: &str) -> Option<usize> {
        self.slots
            .iter()
            .skip(1)
            .position(|s| s.name == name)
            .map(|i| i + 1)
    }
}

/// The composed system MDP together with the layout of its composite states.
#[derive(Debug, Clone, PartialEq)]
pub struct System {
    pub mdp: Mdp,
    pub layout: Layout,
}

fn union(a: &PropSet, b: &PropSet) -> PropSet {
    a.union(b).cloned().collect()
}

fn product_row(a: &Row, b: &Row, nb: usize) -> Row {
    let mut out = Vec::with_capacity(a.len() * b.len());
    for &(s, p) in a {
        for &(t, q) in b {
            let pq = p * q;
            if pq > 0.0 {
                out.push((s * nb + t, pq));
            }
        }
    }
    out
}

fn pair_names(a: &[String], b: &[String]) -> Vec<String> {
    a.iter()
        .flat_map(|s| b.iter().map(move |t| format!("{s},{t}")))
        .collect()
}

/// `a ∥ b` for Markov chains: probabilities and initial masses multiply, labels union.
pub fn compose_mc_pair(a: &Mc, b: &Mc) -> Mc {
    let nb = b.num_states();
    let mut rows = Vec::with_capacity(a.num_states() * nb);
    let mut init = Vec::with_capacity(rows.capacity());
    let mut labels = Vec::with_capacity(rows.capacity());
    for s in 0..a.num_states() {
        for t in 0..nb {
            rows.push(product_row(&a.rows[s], &b.rows[t], nb));
            init.push(a.init[s] * b.init[t]);
            labels.push(union(&a.labels[s], &b.labels[t]));
        }
    }
    Mc {
        name: format!("{}||{}", a.name, b.name),
        agent: a.agent,
        states: pair_names(&a.states, &b.states),
        rows,
        init,
        labels,
        stationary: false,
    }
}

fn compose_mdp_mc(m: &Mdp, a: &Mc) -> Mdp {
    let na = a.num_states();
    let mut rows = Vec::with_capacity(m.num_states() * na);
    let mut init = Vec::with_capacity(rows.capacity());
    let mut labels = Vec::with_capacity(rows.capacity());
    for s in 0..m.num_states() {
        for t in 0..na {
            rows.push(
                m.rows[s]
                    .iter()
                    .map(|row| product_row(row, &a.rows[t], na))
                    .collect(),
            );
            init.push(m.init[s] * a.init[t]);
            labels.push(union(&m.labels[s], &a.labels[t]));
        }
    }
    Mdp {
        name: format!("{}||{}", m.name, a.name),
        agent: m.agent,
        states: pair_names(&m.states, &a.states),
        actions: m.actions.clone(),
        rows,
        init,
        labels,
    }
}

/// `plant ∥ agent`. For a DFTS plant an edge `s -α-> s'` carries the agent's
/// probability and the initial mass sits on `s_init`; for an MDP plant both
/// transition and initial probabilities multiply.
pub fn compose_plant_mc(plant: &Plant, agent: &Mc) -> Mdp {
    compose_mdp_mc(&plant.to_mdp(), agent)
}

/// One-state chain pinned at `pin` (default: the mode of the initial
/// distribution, first in declaration order on ties).
pub fn make_stationary(agent: &Mc, pin: Option<&str>) -> Result<Mc> {
    let s = match pin {
        Some(name) => agent.state_index(name).ok_or_else(|| {
            Error::validation(format!("{}: unknown pinned state `{name}`", agent.name))
        })?,
        None => {
            let mut best = 0;
            for (s, &p) in agent.init.iter().enumerate() {
                if p > agent.init[best] {
                    best = s;
                }
            }
            best
        }
    };
    Ok(Mc {
        name: agent.name.clone(),
        agent: agent.agent,
        states: vec![agent.states[s].clone()],
        rows: vec![vec![(0, 1.0)]],
        init: vec![1.0],
        labels: vec![agent.labels[s].clone()],
        stationary: true,
    })
}

/// `plant ∥ agents[0] ∥ ... ∥ agents[n-1]`, enumerated row-major in the given order.
pub fn compose_system(plant: &Plant, agents: &[Mc]) -> System {
    let mut mdp = plant.to_mdp();
    let mut slots = vec![Slot {
        name: plant.name().to_string(),
        agent: mdp.agent,
        states: mdp.states.clone(),
        status: SlotStatus::Plant,
    }];
    for a in agents {
        mdp = compose_mdp_mc(&mdp, a);
        slots.push(Slot {
            name: a.name.clone(),
            agent: a.agent,
            states: a.states.clone(),
            status: if a.stationary {
                SlotStatus::Pinned
            } else {
                SlotStatus::Full
            },
        });
    }
    System {
        mdp,
        layout: Layout { slots },
    }
}
