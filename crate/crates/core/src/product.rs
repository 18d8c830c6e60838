//! Product of the composed system with the specification DFA, and its
//! incremental refinement when an abstracted agent is replaced by its full model.

use crate::compose::{Layout, SlotStatus, System};
use crate::error::{Error, Result};
use crate::model::{Dfa, Mc, Mdp, Prop, PropSet, Row};

/// Product MDP over `S × Q`, numbered `s * |Q| + q`.
///
/// The intermediate transition function `P̃_p(⟨s,q⟩, α, ⟨s',q'⟩)` equals the
/// system probability `P(s, α, s')` for every `q, q'`, so it is stored once per
/// system row in `inter_rows`; likewise `inter_init` holds `ι̃_p(⟨s,q⟩) = ι(s)`.
/// `rows` and `init` are the δ-gated product functions.
#[derive(Debug, Clone, PartialEq)]
pub struct ProductMdp {
    pub layout: Layout,
    pub dfa: Dfa,
    pub actions: Vec<String>,
    /// `L(s)` per system state; `L_p(⟨s,q⟩) = L(s)`.
    pub labels: Vec<PropSet>,
    pub inter_rows: Vec<Vec<Row>>,
    pub inter_init: Vec<f64>,
    pub rows: Vec<Vec<Row>>,
    pub init: Vec<f64>,
}

impl ProductMdp {
    pub fn num_system_states(&self) -> usize {
        self.labels.len()
    }

    pub fn num_dfa_states(&self) -> usize {
        self.dfa.num_states()
    }

    pub fn num_states(&self) -> usize {
        self.rows.len()
    }

    pub fn index(&self, s: usize, q: usize) -> usize {
        s * self.num_dfa_states() + q
    }

    /// `(system state, DFA state)` of product state `i`.
    pub fn split(&self, i: usize) -> (usize, usize) {
        let nq = self.num_dfa_states();
        (i / nq, i % nq)
    }

    pub fn is_accepting(&self, i: usize) -> bool {
        self.dfa.accepting[i % self.num_dfa_states()]
    }

    pub fn enabled(&self, i: usize) -> impl Iterator<Item = usize> + '_ {
        self.rows[i]
            .iter()
            .enumerate()
            .filter(|(_, r)| !r.is_empty())
            .map(|(a, _)| a)
    }

    /// `⟨c0,c1,...|q0⟩`
    pub fn state_name(&self, i: usize) -> String {
        let (s, q) = self.split(i);
        format!("⟨{}|{}⟩", self.layout.state_name(s), self.dfa.states[q])
    }

    /// `P̃_p(i, α, j)`.
    pub fn inter_prob(&self, i: usize, action: usize, j: usize) -> f64 {
        let (s, _) = self.split(i);
        let (t, _) = self.split(j);
        self.inter_rows[s][action]
            .iter()
            .find(|&&(x, _)| x == t)
            .map_or(0.0, |&(_, p)| p)
    }

    pub fn prob(&self, i: usize, action: usize, j: usize) -> f64 {
        self.rows[i][action]
            .iter()
            .find(|&&(x, _)| x == j)
            .map_or(0.0, |&(_, p)| p)
    }

    /// Product successor lists over all actions, sorted and deduplicated.
    pub fn graph(&self) -> Vec<Vec<usize>> {
        self.rows
            .iter()
            .map(|acts| {
                let mut succ: Vec<usize> = acts.iter().flatten().map(|&(t, _)| t).collect();
                succ.sort_unstable();
                succ.dedup();
                succ
            })
            .collect()
    }

    /// System-level successor lists (the graph of the composed system).
    pub fn system_graph(&self) -> Vec<Vec<usize>> {
        self.inter_rows
            .iter()
            .map(|acts| {
                let mut succ: Vec<usize> = acts.iter().flatten().map(|&(t, _)| t).collect();
                succ.sort_unstable();
                succ.dedup();
                succ
            })
            .collect()
    }

    /// Re-derives `rows` and `init` from the intermediate functions by
    /// keeping only entries whose DFA component matches `δ` on the target label.
    fn gate(&mut self) {
        let nq = self.num_dfa_states();
        let succ: Vec<Vec<usize>> = self
            .labels
            .iter()
            .map(|l| (0..nq).map(|q| self.dfa.successor(q, l)).collect())
            .collect();
        let mut rows = Vec::with_capacity(self.labels.len() * nq);
        let mut init = vec![0.0; self.labels.len() * nq];
        for (s, acts) in self.inter_rows.iter().enumerate() {
            for q in 0..nq {
                rows.push(
                    acts.iter()
                        .map(|row| row.iter().map(|&(t, p)| (t * nq + succ[t][q], p)).collect())
                        .collect(),
                );
            }
            let q0 = succ[s][self.dfa.init];
            init[s * nq + q0] = self.inter_init[s];
        }
        self.rows = rows;
        self.init = init;
    }

    /// Renders as an MDP (debug dump) with states named `⟨s0,...,sN|q⟩`.
    pub fn to_mdp(&self) -> Mdp {
        let n = self.num_states();
        Mdp {
            name: format!("{}*dfa", self.layout.slots[0].name),
            agent: 0,
            states: (0..n).map(|i| self.state_name(i)).collect(),
            actions: self.actions.clone(),
            rows: self.rows.clone(),
            init: self.init.clone(),
            labels: (0..n).map(|i| self.labels[self.split(i).0].clone()).collect(),
        }
    }
}

/// `δ(q, labels)`.
pub fn dfa_successor(dfa: &Dfa, q: usize, labels: &PropSet) -> usize {
    dfa.successor(q, labels)
}

/// Full `S × Q` product of a composed system with `dfa`.
pub fn build_product(system: &System, dfa: &Dfa) -> ProductMdp {
    let mut p = ProductMdp {
        layout: system.layout.clone(),
        dfa: dfa.clone(),
        actions: system.mdp.actions.clone(),
        labels: system.mdp.labels.clone(),
        inter_rows: system.mdp.rows.clone(),
        inter_init: system.mdp.init.clone(),
        rows: Vec::new(),
        init: Vec::new(),
    };
    p.gate();
    p
}

/// Replaces the stationary abstraction in slot `l` by the full model `agent`,
/// multiplying the intermediate functions by the agent's transition and
/// initial probabilities and swapping the slot's label contribution.
pub fn refine_product(p: &ProductMdp, agent: &Mc, l: usize) -> Result<ProductMdp> {
    let slots = &p.layout.slots;
    if l == 0 || l >= slots.len() {
        return Err(Error::Refine(format!(
            "slot {l} out of range (agents occupy 1..{})",
            slots.len()
        )));
    }
    let slot = &slots[l];
    if slot.status != SlotStatus::Pinned {
        return Err(Error::Refine(format!("agent {} is already full", slot.name)));
    }
    if slot.name != agent.name {
        return Err(Error::Refine(format!(
            "slot {l} holds {}, not {}",
            slot.name, agent.name
        )));
    }
    let pin = agent.state_index(&slot.states[0]).ok_or_else(|| {
        Error::Refine(format!(
            "pinned state {} is not a state of {}",
            slot.states[0], agent.name
        ))
    })?;

    let mut layout = p.layout.clone();
    layout.slots[l].states = agent.states.clone();
    layout.slots[l].status = SlotStatus::Full;

    let n_l = agent.num_states();
    let lift = p.layout.lift(l, n_l);
    let parent_n = p.num_system_states();
    let n = parent_n * n_l;

    let pinned_labels = &agent.labels[pin];
    let mut labels = vec![PropSet::new(); n];
    let mut inter_rows = vec![Vec::new(); n];
    let mut inter_init = vec![0.0; n];
    for s in 0..parent_n {
        let base: PropSet = p.labels[s].difference(pinned_labels).cloned().collect();
        for r in 0..n_l {
            let i = lift(s, r);
            labels[i] = base.union(&agent.labels[r]).cloned().collect();
            inter_init[i] = agent.init[r] * p.inter_init[s];
            inter_rows[i] = p.inter_rows[s]
                .iter()
                .map(|row| {
                    let mut out: Row = Vec::with_capacity(row.len() * agent.rows[r].len());
                    for &(t, pt) in row {
                        for &(r2, pr) in &agent.rows[r] {
                            let v = pr * pt;
                            if v > 0.0 {
                                out.push((lift(t, r2), v));
                            }
                        }
                    }
                    out.sort_by_key(|&(t, _)| t);
                    out
                })
                .collect();
        }
    }

    let mut refined = ProductMdp {
        layout,
        dfa: p.dfa.clone(),
        actions: p.actions.clone(),
        labels,
        inter_rows,
        inter_init,
        rows: Vec::new(),
        init: Vec::new(),
    };
    refined.gate();
    Ok(refined)
}

/// `B_p = {⟨s,q⟩ | q ∈ F}`.
pub fn accepting_states(p: &ProductMdp) -> Vec<usize> {
    (0..p.num_states()).filter(|&i| p.is_accepting(i)).collect()
}

/// DFA propositions that no component label set mentions; they always read false.
pub fn missing_props<'a>(dfa: &Dfa, labels: impl IntoIterator<Item = &'a PropSet>) -> Vec<Prop> {
    let mut known = PropSet::new();
    for l in labels {
        known.extend(l.iter().cloned());
    }
    dfa.alphabet().difference(&known).cloned().collect()
}
