//! Strongly connected components, their precedence order and processing
//! order, incremental derivation of the components of `M ∥ M_l` from those of
//! `M` and `M_l`, and the `C × Q` partition of the product state space.

use std::cmp::Reverse;
use std::collections::{BinaryHeap, VecDeque};
use std::fmt::Write as _;

use crate::error::{Error, Result};

/// A partition of a state space into blocks with a precedence relation
/// (`before[i]` lists the blocks `j` with `j ≺ i`, i.e. those that block `i`
/// has transitions into) and a processing order listing `j` before `i`
/// whenever `j ≺ i`.
///
/// `period` and `phase` describe the cyclic structure of each block:
/// `period[b]` is the gcd of the cycle lengths in block `b` (0 for a singleton
/// without a self-loop) and `phase[s]` numbers state `s` so that every edge
/// inside a block advances the phase by one modulo the period. They are what
/// [`derive_sccs`] needs and are left empty by [`product_partition`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SccSet {
    pub blocks: Vec<Vec<usize>>,
    pub tags: Vec<Option<(usize, usize)>>,
    pub before: Vec<Vec<usize>>,
    pub order: Vec<usize>,
    pub block_of: Vec<usize>,
    pub period: Vec<usize>,
    pub phase: Vec<usize>,
}

impl SccSet {
    pub fn num_states(&self) -> usize {
        self.block_of.len()
    }

    pub fn len(&self) -> usize {
        self.blocks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.blocks.is_empty()
    }

    /// Whether block `b` is a singleton whose state has a self-loop.
    pub fn has_self_loop(&self, b: usize) -> bool {
        self.blocks[b].len() == 1 && self.period.get(b) == Some(&1)
    }

    /// `j ≺ i` as (j, i) pairs.
    pub fn precedence(&self) -> Vec<(usize, usize)> {
        self.before
            .iter()
            .enumerate()
            .flat_map(|(i, js)| js.iter().map(move |&j| (j, i)))
            .collect()
    }

    /// Blocks as a sorted list of sorted state lists, independent of block numbering.
    pub fn canonical(&self) -> Vec<Vec<usize>> {
        let mut blocks = self.blocks.clone();
        for b in &mut blocks {
            b.sort_unstable();
        }
        blocks.sort();
        blocks
    }

    /// Checks that the blocks partition `0..n` and that `order` linearizes `before`.
    pub fn validate(&self, n: usize) -> Result<()> {
        let mut seen = vec![false; n];
        for (b, block) in self.blocks.iter().enumerate() {
            if block.is_empty() {
                return Err(Error::Partition(format!("block {b} is empty")));
            }
            for &s in block {
                if s >= n {
                    return Err(Error::Partition(format!("block {b}: state {s} out of range")));
                }
                if std::mem::replace(&mut seen[s], true) {
                    return Err(Error::Partition(format!("state {s} lies in two blocks")));
                }
            }
        }
        if let Some(s) = seen.iter().position(|&x| !x) {
            return Err(Error::Partition(format!("state {s} is not covered")));
        }
        let mut pos = vec![usize::MAX; self.blocks.len()];
        for (k, &b) in self.order.iter().enumerate() {
            if b >= pos.len() || pos[b] != usize::MAX {
                return Err(Error::Partition("order is not a permutation of the blocks".into()));
            }
            pos[b] = k;
        }
        if pos.contains(&usize::MAX) {
            return Err(Error::Partition("order is not a permutation of the blocks".into()));
        }
        for (j, i) in self.precedence() {
            if pos[j] > pos[i] {
                return Err(Error::Partition(format!("block {j} must come before block {i}")));
            }
        }
        Ok(())
    }

    /// One line per block: `scc <idx> derived-from <i>,<j> : <states...>`.
    pub fn dump(&self, name: impl Fn(usize) -> String) -> String {
        let mut out = String::new();
        for (b, block) in self.blocks.iter().enumerate() {
            let tag = match self.tags[b] {
                Some((i, j)) => format!("{i},{j}"),
                None => "-".to_string(),
            };
            let states: Vec<String> = block.iter().map(|&s| name(s)).collect();
            let _ = writeln!(out, "scc {b} derived-from {tag} : {}", states.join(" "));
        }
        out
    }
}

fn gcd(a: usize, b: usize) -> usize {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

/// Smallest `x ≥ 0` with `x ≡ a (mod m)` and `x ≡ b (mod n)`; the caller
/// guarantees `a ≡ b (mod gcd(m, n))`.
fn crt(a: usize, m: usize, b: usize, n: usize) -> usize {
    let g = gcd(m, n);
    let lcm = m / g * n;
    // x = a + m·t where m·t ≡ b − a (mod n), i.e. (m/g)·t ≡ (b − a)/g (mod n/g).
    let (m_g, n_g) = (m / g, n / g);
    let diff = ((b % n + n - a % n) % n) / g;
    let t = if n_g == 1 {
        0
    } else {
        diff % n_g * mod_inverse(m_g % n_g, n_g) % n_g
    };
    ((a as u128 + m as u128 * t as u128) % lcm as u128) as usize
}

fn mod_inverse(a: usize, n: usize) -> usize {
    let (mut r0, mut r1) = (n as i128, a as i128);
    let (mut t0, mut t1) = (0i128, 1i128);
    while r1 != 0 {
        let q = r0 / r1;
        (r0, r1) = (r1, r0 - q * r1);
        (t0, t1) = (t1, t0 - q * t1);
    }
    t0.rem_euclid(n as i128) as usize
}

/// Stable topological order: blocks without pending predecessors are emitted
/// smallest-member first.
fn linearize(blocks: &[Vec<usize>], before: &[Vec<usize>]) -> Option<Vec<usize>> {
    let n = blocks.len();
    let mut pending: Vec<usize> = before.iter().map(Vec::len).collect();
    let mut after = vec![Vec::new(); n];
    for (i, js) in before.iter().enumerate() {
        for &j in js {
            after[j].push(i);
        }
    }
    let key = |b: usize| blocks[b].iter().copied().min().unwrap_or(usize::MAX);
    let mut ready: BinaryHeap<Reverse<(usize, usize)>> = (0..n)
        .filter(|&b| pending[b] == 0)
        .map(|b| Reverse((key(b), b)))
        .collect();
    let mut order = Vec::with_capacity(n);
    while let Some(Reverse((_, j))) = ready.pop() {
        order.push(j);
        for &i in &after[j] {
            pending[i] -= 1;
            if pending[i] == 0 {
                ready.push(Reverse((key(i), i)));
            }
        }
    }
    (order.len() == n).then_some(order)
}

/// Period of every block and phase of every state, from a BFS inside each block.
fn cycle_structure(graph: &[Vec<usize>], blocks: &[Vec<usize>], block_of: &[usize]) -> (Vec<usize>, Vec<usize>) {
    let mut level = vec![usize::MAX; graph.len()];
    let mut period = vec![0; blocks.len()];
    let mut queue = VecDeque::new();
    for (b, block) in blocks.iter().enumerate() {
        let root = block[0];
        level[root] = 0;
        queue.push_back(root);
        while let Some(u) = queue.pop_front() {
            for &v in &graph[u] {
                if block_of[v] == b && level[v] == usize::MAX {
                    level[v] = level[u] + 1;
                    queue.push_back(v);
                }
            }
        }
        let mut g = 0;
        for &u in block {
            for &v in &graph[u] {
                if block_of[v] == b {
                    g = gcd(g, (level[u] + 1).abs_diff(level[v]));
                }
            }
        }
        period[b] = g;
    }
    let phase = (0..graph.len())
        .map(|s| match period[block_of[s]] {
            0 => 0,
            p => level[s] % p,
        })
        .collect();
    (period, phase)
}

fn block_precedence(graph: &[Vec<usize>], block_of: &[usize], n_blocks: usize) -> Vec<Vec<usize>> {
    let mut before = vec![Vec::new(); n_blocks];
    for (u, succ) in graph.iter().enumerate() {
        for &v in succ {
            if block_of[u] != block_of[v] {
                before[block_of[u]].push(block_of[v]);
            }
        }
    }
    for b in &mut before {
        b.sort_unstable();
        b.dedup();
    }
    before
}

/// Maximal SCCs of `graph` (successor lists), numbered by smallest member.
pub fn tarjan_sccs(graph: &[Vec<usize>]) -> SccSet {
    let n = graph.len();
    const UNSEEN: usize = usize::MAX;
    let mut index = vec![UNSEEN; n];
    let mut low = vec![0; n];
    let mut on_stack = vec![false; n];
    let mut stack = Vec::new();
    let mut call: Vec<(usize, usize)> = Vec::new();
    let mut blocks: Vec<Vec<usize>> = Vec::new();
    let mut next = 0;

    for root in 0..n {
        if index[root] != UNSEEN {
            continue;
        }
        index[root] = next;
        low[root] = next;
        next += 1;
        stack.push(root);
        on_stack[root] = true;
        call.push((root, 0));
        while let Some(&mut (v, ref mut edge)) = call.last_mut() {
            if let Some(&w) = graph[v].get(*edge) {
                *edge += 1;
                if index[w] == UNSEEN {
                    index[w] = next;
                    low[w] = next;
                    next += 1;
                    stack.push(w);
                    on_stack[w] = true;
                    call.push((w, 0));
                } else if on_stack[w] {
                    low[v] = low[v].min(index[w]);
                }
                continue;
            }
            call.pop();
            if let Some(&(u, _)) = call.last() {
                low[u] = low[u].min(low[v]);
            }
            if low[v] == index[v] {
                let mut block = Vec::new();
                loop {
                    let w = stack.pop().expect("tarjan stack underflow");
                    on_stack[w] = false;
                    block.push(w);
                    if w == v {
                        break;
                    }
                }
                block.sort_unstable();
                blocks.push(block);
            }
        }
    }

    blocks.sort_unstable_by_key(|b| b[0]);
    let mut block_of = vec![0; n];
    for (b, block) in blocks.iter().enumerate() {
        for &s in block {
            block_of[s] = b;
        }
    }
    let (period, phase) = cycle_structure(graph, &blocks, &block_of);
    let before = block_precedence(graph, &block_of, blocks.len());
    let order = linearize(&blocks, &before).expect("the condensation of a graph is acyclic");
    SccSet {
        tags: vec![None; blocks.len()],
        blocks,
        before,
        order,
        block_of,
        period,
        phase,
    }
}

/// SCCs of `M ∥ M_l` from the SCCs of `M` (`parent`, with slot `l` pinned) and
/// of `M_l` (`agent`). `lift(s, r)` is the index of `s|_{l←r}`.
///
/// A pair ⟨C, C^l⟩ where either side is a singleton without a self-loop
/// yields |C|·|C^l| singletons. Otherwise `C × C^l` is strongly connected
/// only when the two periods are coprime; in general it splits into
/// `gcd(period(C), period(C^l))` components, one per phase difference.
/// Candidate precedence: D₁ ≺ D₂ when the parents of D₁ equal or precede
/// those of D₂ on both sides, but not both equal.
pub fn derive_sccs(parent: &SccSet, agent: &SccSet, lift: impl Fn(usize, usize) -> usize) -> Result<SccSet> {
    for (what, set) in [("parent", parent), ("agent", agent)] {
        if set.period.len() != set.blocks.len() || set.phase.len() != set.num_states() {
            return Err(Error::Partition(format!("{what} SCCs carry no cycle structure")));
        }
        set.validate(set.num_states())
            .map_err(|e| Error::Partition(format!("{what} SCCs: {e}")))?;
    }
    let n = parent.num_states() * agent.num_states();
    let nb_agent = agent.blocks.len();

    let mut blocks: Vec<Vec<usize>> = Vec::new();
    let mut tags = Vec::new();
    let mut period = Vec::new();
    let mut phase = vec![0; n];
    let mut by_pair: Vec<Vec<usize>> = vec![Vec::new(); parent.blocks.len() * nb_agent];

    for (a, ca) in parent.blocks.iter().enumerate() {
        for (b, cb) in agent.blocks.iter().enumerate() {
            let (pa, pb) = (parent.period[a], agent.period[b]);
            let first = blocks.len();
            if pa == 0 || pb == 0 {
                for &s in ca {
                    for &r in cb {
                        blocks.push(vec![lift(s, r)]);
                        period.push(0);
                    }
                }
            } else {
                let g = gcd(pa, pb);
                blocks.extend((0..g).map(|_| Vec::new()));
                period.extend((0..g).map(|_| pa / g * pb));
                for &s in ca {
                    for &r in cb {
                        let (fs, fr) = (parent.phase[s], agent.phase[r]);
                        let c = (fs % g + g - fr % g) % g;
                        let t = lift(s, r);
                        phase[t] = crt(fs, pa, (fr + c) % pb, pb);
                        blocks[first + c].push(t);
                    }
                }
                for block in &mut blocks[first..] {
                    block.sort_unstable();
                }
            }
            for d in first..blocks.len() {
                tags.push(Some((a, b)));
                by_pair[a * nb_agent + b].push(d);
            }
        }
    }

    let mut block_of = vec![usize::MAX; n];
    for (d, block) in blocks.iter().enumerate() {
        for &t in block {
            if t >= n || block_of[t] != usize::MAX {
                return Err(Error::Partition(format!("lift maps two pairs onto state {t}")));
            }
            block_of[t] = d;
        }
    }

    let mut before = vec![Vec::new(); blocks.len()];
    for (d, tag) in tags.iter().enumerate() {
        let (a2, b2) = tag.expect("derived blocks are tagged");
        for a1 in std::iter::once(a2).chain(parent.before[a2].iter().copied()) {
            for b1 in std::iter::once(b2).chain(agent.before[b2].iter().copied()) {
                if (a1, b1) != (a2, b2) {
                    before[d].extend_from_slice(&by_pair[a1 * nb_agent + b1]);
                }
            }
        }
        before[d].sort_unstable();
    }
    let order = linearize(&blocks, &before)
        .ok_or_else(|| Error::Partition("candidate precedence is cyclic".into()))?;
    Ok(SccSet {
        blocks,
        tags,
        before,
        order,
        block_of,
        period,
        phase,
    })
}

/// `D_i = C_i × Q` over product indices `s·|Q| + q`, with precedence and
/// order inherited from the system SCCs.
pub fn product_partition(system: &SccSet, nq: usize) -> SccSet {
    let blocks: Vec<Vec<usize>> = system
        .blocks
        .iter()
        .map(|c| c.iter().flat_map(|&s| (0..nq).map(move |q| s * nq + q)).collect())
        .collect();
    let mut block_of = vec![0; system.num_states() * nq];
    for (b, block) in blocks.iter().enumerate() {
        for &i in block {
            block_of[i] = b;
        }
    }
    SccSet {
        blocks,
        tags: system.tags.clone(),
        before: system.before.clone(),
        order: system.order.clone(),
        block_of,
        period: Vec::new(),
        phase: Vec::new(),
    }
}

/// Block precedence induced by the actual edges of `graph` (used to audit
/// candidate orders).
pub fn edge_precedence(set: &SccSet, graph: &[Vec<usize>]) -> Vec<(usize, usize)> {
    let mut pairs: Vec<(usize, usize)> = block_precedence(graph, &set.block_of, set.blocks.len())
        .into_iter()
        .enumerate()
        .flat_map(|(i, js)| js.into_iter().map(move |j| (j, i)))
        .collect();
    pairs.sort_unstable();
    pairs
}

/// Composition graph of two graphs: `(s, r) → (s', r')` iff both move.
pub fn product_graph(g: &[Vec<usize>], h: &[Vec<usize>], lift: impl Fn(usize, usize) -> usize) -> Vec<Vec<usize>> {
    let lift = &lift;
    let mut out = vec![Vec::new(); g.len() * h.len()];
    for (s, gs) in g.iter().enumerate() {
        for (r, hr) in h.iter().enumerate() {
            let mut succ: Vec<usize> = gs.iter().flat_map(|&t| hr.iter().map(move |&u| lift(t, u))).collect();
            succ.sort_unstable();
            out[lift(s, r)] = succ;
        }
    }
    out
}
