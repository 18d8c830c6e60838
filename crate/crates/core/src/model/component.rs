use std::collections::HashMap;
use std::fmt;

use super::{is_ident, tokens, Prop, PropSet, ROW_SUM_TOL};
use crate::error::{Error, Result};

/// Sparse distribution: `(target index, probability)` pairs, zero entries never stored.
pub type Row = Vec<(usize, f64)>;

/// Deterministic finite transition system: at most one successor per (state, action).
#[derive(Debug, Clone, PartialEq)]
pub struct Dfts {
    pub name: String,
    pub agent: u32,
    pub states: Vec<String>,
    pub actions: Vec<String>,
    /// `trans[s][a]` is the unique successor, if `a` is enabled in `s`.
    pub trans: Vec<Vec<Option<usize>>>,
    pub init: usize,
    pub labels: Vec<PropSet>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Mc {
    pub name: String,
    pub agent: u32,
    pub states: Vec<String>,
    pub rows: Vec<Row>,
    pub init: Vec<f64>,
    pub labels: Vec<PropSet>,
    /// Set on the one-state stationary abstraction of an agent.
    pub stationary: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Mdp {
    pub name: String,
    pub agent: u32,
    pub states: Vec<String>,
    pub actions: Vec<String>,
    /// `rows[s][a]`; an empty row means `a` is disabled in `s`.
    pub rows: Vec<Vec<Row>>,
    pub init: Vec<f64>,
    pub labels: Vec<PropSet>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Component {
    Dfts(Dfts),
    Mc(Mc),
    Mdp(Mdp),
}

impl Component {
    pub fn name(&self) -> &str {
        match self {
            Component::Dfts(t) => &t.name,
            Component::Mc(m) => &m.name,
            Component::Mdp(m) => &m.name,
        }
    }
}

fn row_sum(row: &Row) -> f64 {
    row.iter().map(|&(_, p)| p).sum()
}

fn check_distribution(what: &str, values: impl Iterator<Item = f64>) -> Result<()> {
    let sum: f64 = values.sum();
    if (sum - 1.0).abs() > ROW_SUM_TOL {
        return Err(Error::validation(format!("{what} sums to {sum}, expected 1")));
    }
    Ok(())
}

impl Dfts {
    pub fn num_states(&self) -> usize {
        self.states.len()
    }

    pub fn validate(&self) -> Result<()> {
        if self.states.is_empty() {
            return Err(Error::validation(format!("{}: no states", self.name)));
        }
        for (s, succ) in self.trans.iter().enumerate() {
            if succ.iter().all(Option::is_none) {
                return Err(Error::validation(format!(
                    "{}: state {} has no enabled action",
                    self.name, self.states[s]
                )));
            }
        }
        Ok(())
    }

    /// The same graph as an MDP with probability-1 transitions and a point initial distribution.
    pub fn to_mdp(&self) -> Mdp {
        let rows = self
            .trans
            .iter()
            .map(|acts| {
                acts.iter()
                    .map(|t| t.map(|t| vec![(t, 1.0)]).unwrap_or_default())
                    .collect()
            })
            .collect();
        let mut init = vec![0.0; self.states.len()];
        init[self.init] = 1.0;
        Mdp {
            name: self.name.clone(),
            agent: self.agent,
            states: self.states.clone(),
            actions: self.actions.clone(),
            rows,
            init,
            labels: self.labels.clone(),
        }
    }
}

impl Mc {
    pub fn num_states(&self) -> usize {
        self.states.len()
    }

    pub fn state_index(&self, name: &str) -> Option<usize> {
        self.states.iter().position(|s| s == name)
    }

    pub fn validate(&self) -> Result<()> {
        if self.states.is_empty() {
            return Err(Error::validation(format!("{}: no states", self.name)));
        }
        for (s, row) in self.rows.iter().enumerate() {
            check_distribution(
                &format!("{}: row of state {}", self.name, self.states[s]),
                row.iter().map(|&(_, p)| p),
            )?;
        }
        check_distribution(
            &format!("{}: initial distribution", self.name),
            self.init.iter().copied(),
        )
    }

    /// Successor lists with positive probability.
    pub fn graph(&self) -> Vec<Vec<usize>> {
        self.rows
            .iter()
            .map(|row| row.iter().map(|&(t, _)| t).collect())
            .collect()
    }
}

impl Mdp {
    pub fn num_states(&self) -> usize {
        self.states.len()
    }

    pub fn enabled(&self, s: usize) -> impl Iterator<Item = usize> + '_ {
        self.rows[s]
            .iter()
            .enumerate()
            .filter(|(_, r)| !r.is_empty())
            .map(|(a, _)| a)
    }

    pub fn validate(&self) -> Result<()> {
        if self.states.is_empty() {
            return Err(Error::validation(format!("{}: no states", self.name)));
        }
        for (s, acts) in self.rows.iter().enumerate() {
            for (a, row) in acts.iter().enumerate() {
                let sum = row_sum(row);
                if !row.is_empty() && (sum - 1.0).abs() > ROW_SUM_TOL {
                    return Err(Error::validation(format!(
                        "{}: row of state {} under action {} sums to {sum}, expected 0 or 1",
                        self.name, self.states[s], self.actions[a]
                    )));
                }
            }
            if self.enabled(s).next().is_none() {
                return Err(Error::validation(format!(
                    "{}: state {} has no enabled action",
                    self.name, self.states[s]
                )));
            }
        }
        check_distribution(
            &format!("{}: initial distribution", self.name),
            self.init.iter().copied(),
        )
    }

    /// Successor lists over all actions, deduplicated and sorted.
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
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Kind {
    Dfts,
    Mc,
    Mdp,
}

#[derive(Default)]
struct Builder {
    kind: Option<Kind>,
    name: Option<String>,
    agent: u32,
    states: Vec<String>,
    index: HashMap<String, usize>,
    actions: Vec<String>,
    actions_declared: bool,
    dfts_init: Option<usize>,
    dfts_trans: Vec<(usize, usize, usize, usize)>,
    init: Vec<(usize, usize, f64)>,
    mc_trans: Vec<(usize, usize, usize, f64)>,
    mdp_trans: Vec<(usize, usize, usize, usize, f64)>,
    labels: Vec<(usize, usize, String)>,
}

impl Builder {
    fn state(&self, line: usize, name: &str) -> Result<usize> {
        if self.states.is_empty() {
            return Err(Error::parse(line, "`states` must be declared first"));
        }
        self.index
            .get(name)
            .copied()
            .ok_or_else(|| Error::parse(line, format!("unknown state `{name}`")))
    }

    fn action(&mut self, line: usize, name: &str) -> Result<usize> {
        if let Some(a) = self.actions.iter().position(|x| x == name) {
            return Ok(a);
        }
        if self.actions_declared {
            return Err(Error::parse(line, format!("unknown action `{name}`")));
        }
        self.actions.push(name.to_string());
        Ok(self.actions.len() - 1)
    }

    fn kind(&self, line: usize) -> Result<Kind> {
        self.kind
            .ok_or_else(|| Error::parse(line, "`kind` must be the first directive"))
    }
}

fn prob(line: usize, tok: &str) -> Result<f64> {
    let p: f64 = tok
        .parse()
        .map_err(|_| Error::parse(line, format!("`{tok}` is not a number")))?;
    if !p.is_finite() || !(0.0..=1.0).contains(&p) {
        return Err(Error::validation(format!(
            "line {line}: probability {tok} outside [0, 1]"
        )));
    }
    Ok(p)
}

fn arity(line: usize, toks: &[&str], n: usize, usage: &str) -> Result<()> {
    if toks.len() != n {
        return Err(Error::parse(line, format!("expected `{usage}`")));
    }
    Ok(())
}

/// Parses a DFTS, MC or MDP from the component text format.
///
/// Labels are namespaced with the declared `agent` index unless already
/// written as `<name>@<agent>`. State and action order follow declaration order.
pub fn parse_component(text: &str) -> Result<Component> {
    let mut b = Builder::default();
    for (no, raw) in text.lines().enumerate() {
        let line = no + 1;
        let toks = tokens(raw);
        let Some(&head) = toks.first() else { continue };
        if head != "kind" {
            b.kind(line)?;
        }
        match head {
            "kind" => {
                arity(line, &toks, 2, "kind dfts|mc|mdp")?;
                if b.kind.is_some() {
                    return Err(Error::parse(line, "duplicate `kind`"));
                }
                b.kind = Some(match toks[1] {
                    "dfts" => Kind::Dfts,
                    "mc" => Kind::Mc,
                    "mdp" => Kind::Mdp,
                    other => {
                        return Err(Error::parse(line, format!("unknown component kind `{other}`")))
                    }
                });
            }
            "name" => {
                arity(line, &toks, 2, "name <id>")?;
                b.name = Some(toks[1].to_string());
            }
            "agent" => {
                arity(line, &toks, 2, "agent <int>")?;
                b.agent = toks[1]
                    .parse()
                    .map_err(|_| Error::parse(line, format!("`{}` is not an agent index", toks[1])))?;
            }
            "states" => {
                if !b.states.is_empty() {
                    return Err(Error::parse(line, "duplicate `states`"));
                }
                if toks.len() < 2 {
                    return Err(Error::parse(line, "expected `states <id>...`"));
                }
                for s in &toks[1..] {
                    if b.index.insert(s.to_string(), b.states.len()).is_some() {
                        return Err(Error::parse(line, format!("duplicate state `{s}`")));
                    }
                    b.states.push(s.to_string());
                }
            }
            "actions" => {
                if b.kind(line)? == Kind::Mc {
                    return Err(Error::parse(line, "a Markov chain has no actions"));
                }
                if !b.actions.is_empty() {
                    return Err(Error::parse(line, "`actions` must precede transitions"));
                }
                for a in &toks[1..] {
                    if b.actions.iter().any(|x| x == a) {
                        return Err(Error::parse(line, format!("duplicate action `{a}`")));
                    }
                    b.actions.push(a.to_string());
                }
                b.actions_declared = true;
            }
            "init" => match b.kind(line)? {
                Kind::Dfts => {
                    arity(line, &toks, 2, "init <state>")?;
                    if b.dfts_init.is_some() {
                        return Err(Error::parse(line, "duplicate `init`"));
                    }
                    b.dfts_init = Some(b.state(line, toks[1])?);
                }
                Kind::Mc | Kind::Mdp => {
                    arity(line, &toks, 3, "init <state> <prob>")?;
                    let s = b.state(line, toks[1])?;
                    let p = prob(line, toks[2])?;
                    b.init.push((line, s, p));
                }
            },
            "trans" => match b.kind(line)? {
                Kind::Dfts => {
                    arity(line, &toks, 4, "trans <src> <action> <dst>")?;
                    let s = b.state(line, toks[1])?;
                    let a = b.action(line, toks[2])?;
                    let t = b.state(line, toks[3])?;
                    b.dfts_trans.push((line, s, a, t));
                }
                Kind::Mc => {
                    arity(line, &toks, 4, "trans <src> <dst> <prob>")?;
                    let s = b.state(line, toks[1])?;
                    let t = b.state(line, toks[2])?;
                    let p = prob(line, toks[3])?;
                    b.mc_trans.push((line, s, t, p));
                }
                Kind::Mdp => {
                    arity(line, &toks, 5, "trans <src> <action> <dst> <prob>")?;
                    let s = b.state(line, toks[1])?;
                    let a = b.action(line, toks[2])?;
                    let t = b.state(line, toks[3])?;
                    let p = prob(line, toks[4])?;
                    b.mdp_trans.push((line, s, a, t, p));
                }
            },
            "label" => {
                if toks.len() < 2 {
                    return Err(Error::parse(line, "expected `label <state> <prop>...`"));
                }
                let s = b.state(line, toks[1])?;
                for p in &toks[2..] {
                    b.labels.push((line, s, p.to_string()));
                }
            }
            other => return Err(Error::parse(line, format!("unknown directive `{other}`"))),
        }
    }

    let end = text.lines().count().max(1);
    let kind = b.kind(end)?;
    if b.states.is_empty() {
        return Err(Error::parse(end, "missing `states` line"));
    }
    let name = b
        .name
        .clone()
        .ok_or_else(|| Error::parse(end, "missing `name` line"))?;
    let n = b.states.len();

    let mut labels = vec![PropSet::new(); n];
    for (line, s, tok) in &b.labels {
        let prop = if tok.contains('@') {
            tok.parse::<Prop>().map_err(|e| Error::parse(*line, e))?
        } else if is_ident(tok) {
            Prop::new(tok.as_str(), b.agent)
        } else {
            return Err(Error::parse(*line, format!("`{tok}` is not a valid proposition")));
        };
        labels[*s].insert(prop);
    }

    let dense_init = |b: &Builder| -> Result<Vec<f64>> {
        let mut init = vec![0.0; n];
        let mut seen = vec![false; n];
        for &(line, s, p) in &b.init {
            if std::mem::replace(&mut seen[s], true) {
                return Err(Error::parse(line, format!("duplicate `init` for `{}`", b.states[s])));
            }
            init[s] = p;
        }
        Ok(init)
    };

    let component = match kind {
        Kind::Dfts => {
            let init = b
                .dfts_init
                .ok_or_else(|| Error::parse(end, "missing `init` line"))?;
            let mut trans = vec![vec![None; b.actions.len()]; n];
            for &(line, s, a, t) in &b.dfts_trans {
                if trans[s][a].replace(t).is_some() {
                    return Err(Error::validation(format!(
                        "line {line}: {name}: state {} has two successors under action {}",
                        b.states[s], b.actions[a]
                    )));
                }
            }
            let t = Dfts {
                name,
                agent: b.agent,
                states: b.states,
                actions: b.actions,
                trans,
                init,
                labels,
            };
            t.validate()?;
            Component::Dfts(t)
        }
        Kind::Mc => {
            let init = dense_init(&b)?;
            let mut rows: Vec<Row> = vec![Vec::new(); n];
            for &(line, s, t, p) in &b.mc_trans {
                if rows[s].iter().any(|&(x, _)| x == t) {
                    return Err(Error::parse(line, "duplicate transition"));
                }
                if p > 0.0 {
                    rows[s].push((t, p));
                }
            }
            rows.iter_mut().for_each(|r| r.sort_by_key(|&(t, _)| t));
            let m = Mc {
                name,
                agent: b.agent,
                states: b.states,
                rows,
                init,
                labels,
                stationary: false,
            };
            m.validate()?;
            Component::Mc(m)
        }
        Kind::Mdp => {
            let init = dense_init(&b)?;
            let mut rows: Vec<Vec<Row>> = vec![vec![Vec::new(); b.actions.len()]; n];
            for &(line, s, a, t, p) in &b.mdp_trans {
                if rows[s][a].iter().any(|&(x, _)| x == t) {
                    return Err(Error::parse(line, "duplicate transition"));
                }
                if p > 0.0 {
                    rows[s][a].push((t, p));
                }
            }
            rows.iter_mut()
                .flatten()
                .for_each(|r| r.sort_by_key(|&(t, _)| t));
            let m = Mdp {
                name,
                agent: b.agent,
                states: b.states,
                actions: b.actions,
                rows,
                init,
                labels,
            };
            m.validate()?;
            Component::Mdp(m)
        }
    };
    Ok(component)
}

fn write_header(
    f: &mut fmt::Formatter<'_>,
    kind: &str,
    name: &str,
    agent: u32,
    states: &[String],
) -> fmt::Result {
    writeln!(f, "kind {kind}")?;
    writeln!(f, "name {name}")?;
    writeln!(f, "agent {agent}")?;
    writeln!(f, "states {}", states.join(" "))
}

fn write_labels(
    f: &mut fmt::Formatter<'_>,
    agent: u32,
    states: &[String],
    labels: &[PropSet],
) -> fmt::Result {
    for (s, set) in labels.iter().enumerate() {
        if set.is_empty() {
            continue;
        }
        write!(f, "label {}", states[s])?;
        for p in set {
            if p.agent == agent {
                write!(f, " {}", p.base)?;
            } else {
                write!(f, " {p}")?;
            }
        }
        writeln!(f)?;
    }
    Ok(())
}

impl fmt::Display for Dfts {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write_header(f, "dfts", &self.name, self.agent, &self.states)?;
        writeln!(f, "actions {}", self.actions.join(" "))?;
        writeln!(f, "init {}", self.states[self.init])?;
        for (s, acts) in self.trans.iter().enumerate() {
            for (a, t) in acts.iter().enumerate() {
                if let Some(t) = t {
                    writeln!(f, "trans {} {} {}", self.states[s], self.actions[a], self.states[*t])?;
                }
            }
        }
        write_labels(f, self.agent, &self.states, &self.labels)
    }
}

impl fmt::Display for Mc {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write_header(f, "mc", &self.name, self.agent, &self.states)?;
        for (s, &p) in self.init.iter().enumerate() {
            if p > 0.0 {
                writeln!(f, "init {} {p}", self.states[s])?;
            }
        }
        for (s, row) in self.rows.iter().enumerate() {
            for &(t, p) in row {
                writeln!(f, "trans {} {} {p}", self.states[s], self.states[t])?;
            }
        }
        write_labels(f, self.agent, &self.states, &self.labels)
    }
}

impl fmt::Display for Mdp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write_header(f, "mdp", &self.name, self.agent, &self.states)?;
        writeln!(f, "actions {}", self.actions.join(" "))?;
        for (s, &p) in self.init.iter().enumerate() {
            if p > 0.0 {
                writeln!(f, "init {} {p}", self.states[s])?;
            }
        }
        for (s, acts) in self.rows.iter().enumerate() {
            for (a, row) in acts.iter().enumerate() {
                for &(t, p) in row {
                    writeln!(
                        f,
                        "trans {} {} {} {p}",
                        self.states[s], self.actions[a], self.states[t]
                    )?;
                }
            }
        }
        write_labels(f, self.agent, &self.states, &self.labels)
    }
}

impl fmt::Display for Component {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Component::Dfts(t) => t.fmt(f),
            Component::Mc(m) => m.fmt(f),
            Component::Mdp(m) => m.fmt(f),
        }
    }
}
