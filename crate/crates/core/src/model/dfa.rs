use std::collections::HashMap;
use std::fmt;

use super::{is_ident, tokens, Guard, Prop, PropSet};
use crate::error::{Error, Result, Witness};

/// Largest per-state guard support the determinism check will enumerate.
pub const SUPPORT_LIMIT: usize = 20;

/// Deterministic, complete finite automaton with guarded edges.
#[derive(Debug, Clone, PartialEq)]
pub struct Dfa {
    pub states: Vec<String>,
    pub init: usize,
    pub accepting: Vec<bool>,
    /// Outgoing `(guard, target)` edges per state, in declaration order.
    pub trans: Vec<Vec<(Guard, usize)>>,
    pub macros: Vec<(String, Guard)>,
}

impl Dfa {
    pub fn num_states(&self) -> usize {
        self.states.len()
    }

    pub fn state_index(&self, name: &str) -> Option<usize> {
        self.states.iter().position(|s| s == name)
    }

    /// `δ(q, labels)`: the target of the unique edge whose guard holds.
    pub fn successor(&self, q: usize, labels: &PropSet) -> usize {
        self.trans[q]
            .iter()
            .find(|(g, _)| g.eval(labels))
            .map(|&(_, t)| t)
            .expect("validated DFA is complete")
    }

    /// Every proposition mentioned by some guard.
    pub fn alphabet(&self) -> PropSet {
        self.trans
            .iter()
            .flatten()
            .flat_map(|(g, _)| g.support())
            .collect()
    }

    /// Checks that exactly one outgoing guard holds for every valuation of
    /// each state's guard support.
    pub fn validate(&self) -> Result<()> {
        if !self.accepting.iter().any(|&a| a) {
            return Err(Error::validation("DFA has no accepting state"));
        }
        for (q, edges) in self.trans.iter().enumerate() {
            let support: Vec<Prop> = edges
                .iter()
                .flat_map(|(g, _)| g.support())
                .collect::<PropSet>()
                .into_iter()
                .collect();
            if support.len() > SUPPORT_LIMIT {
                return Err(Error::SupportTooLarge {
                    state: self.states[q].clone(),
                    size: support.len(),
                    limit: SUPPORT_LIMIT,
                });
            }
            let witness = |mask: u32| {
                Witness(
                    support
                        .iter()
                        .enumerate()
                        .filter(|(i, _)| mask >> i & 1 == 1)
                        .map(|(_, p)| p.clone())
                        .collect(),
                )
            };
            for mask in 0u32..(1u32 << support.len()) {
                let holds = |p: &Prop| {
                    let i = support.binary_search(p).expect("prop in support");
                    mask >> i & 1 == 1
                };
                let mut first: Option<usize> = None;
                for (i, (g, _)) in edges.iter().enumerate() {
                    if g.eval_with(&holds) {
                        if let Some(j) = first {
                            return Err(Error::DfaOverlap {
                                state: self.states[q].clone(),
                                first: edges[j].0.to_string(),
                                second: g.to_string(),
                                witness: witness(mask),
                            });
                        }
                        first = Some(i);
                    }
                }
                if first.is_none() {
                    return Err(Error::DfaIncomplete {
                        state: self.states[q].clone(),
                        witness: witness(mask),
                    });
                }
            }
        }
        Ok(())
    }
}

fn split_word(s: &str) -> Option<(&str, &str)> {
    let s = s.trim_start();
    if s.is_empty() {
        return None;
    }
    match s.find(char::is_whitespace) {
        Some(i) => Some((&s[..i], s[i..].trim_start())),
        None => Some((s, "")),
    }
}

/// Parses and validates a DFA in the text format
/// (`kind dfa`, `states`, `init`, `accept`, `def`, `trans <src> <dst> <guard>`).
pub fn parse_dfa(text: &str) -> Result<Dfa> {
    let mut seen_kind = false;
    let mut states: Vec<String> = Vec::new();
    let mut index: HashMap<String, usize> = HashMap::new();
    let mut init = None;
    let mut accept: Vec<usize> = Vec::new();
    let mut macros: HashMap<String, Guard> = HashMap::new();
    let mut macro_order = Vec::new();
    let mut trans: Vec<Vec<(Guard, usize)>> = Vec::new();

    let lookup = |index: &HashMap<String, usize>, line: usize, name: &str| -> Result<usize> {
        if index.is_empty() {
            return Err(Error::parse(line, "`states` must be declared first"));
        }
        index
            .get(name)
            .copied()
            .ok_or_else(|| Error::parse(line, format!("unknown state `{name}`")))
    };

    for (no, raw) in text.lines().enumerate() {
        let line = no + 1;
        let content = match raw.find('#') {
            Some(i) => &raw[..i],
            None => raw,
        };
        let Some((head, rest)) = split_word(content) else { continue };
        if head != "kind" && !seen_kind {
            return Err(Error::parse(line, "`kind` must be the first directive"));
        }
        let toks = tokens(rest);
        match head {
            "kind" => {
                if toks != ["dfa"] {
                    return Err(Error::parse(line, "expected `kind dfa`"));
                }
                seen_kind = true;
            }
            "name" => {}
            "states" => {
                if !states.is_empty() || toks.is_empty() {
                    return Err(Error::parse(line, "expected a single `states <id>...` line"));
                }
                for s in toks {
                    if index.insert(s.to_string(), states.len()).is_some() {
                        return Err(Error::parse(line, format!("duplicate state `{s}`")));
                    }
                    states.push(s.to_string());
                }
                trans = vec![Vec::new(); states.len()];
            }
            "init" => {
                if toks.len() != 1 || init.is_some() {
                    return Err(Error::parse(line, "expected a single `init <id>`"));
                }
                init = Some(lookup(&index, line, toks[0])?);
            }
            "accept" => {
                for s in toks {
                    let q = lookup(&index, line, s)?;
                    if !accept.contains(&q) {
                        accept.push(q);
                    }
                }
            }
            "def" => {
                let (name, rest) =
                    split_word(rest).ok_or_else(|| Error::parse(line, "expected `def <name> = <guard>`"))?;
                let body = rest
                    .strip_prefix('=')
                    .ok_or_else(|| Error::parse(line, "expected `=` after macro name"))?;
                if !is_ident(name) || name == "true" || name == "false" {
                    return Err(Error::parse(line, format!("invalid macro name `{name}`")));
                }
                if macros.contains_key(name) {
                    return Err(Error::parse(line, format!("macro `{name}` redefined")));
                }
                let g = Guard::parse(body, &macros).map_err(|e| Error::parse(line, e))?;
                macros.insert(name.to_string(), g.clone());
                macro_order.push((name.to_string(), g));
            }
            "trans" => {
                let (src, rest) =
                    split_word(rest).ok_or_else(|| Error::parse(line, "expected `trans <src> <dst> <guard>`"))?;
                let (dst, guard) =
                    split_word(rest).ok_or_else(|| Error::parse(line, "expected `trans <src> <dst> <guard>`"))?;
                let s = lookup(&index, line, src)?;
                let t = lookup(&index, line, dst)?;
                let g = Guard::parse(guard, &macros).map_err(|e| Error::parse(line, e))?;
                trans[s].push((g, t));
            }
            other => return Err(Error::parse(line, format!("unknown directive `{other}`"))),
        }
    }

    let end = text.lines().count().max(1);
    if !seen_kind {
        return Err(Error::parse(end, "missing `kind dfa`"));
    }
    if states.is_empty() {
        return Err(Error::parse(end, "missing `states` line"));
    }
    let init = init.ok_or_else(|| Error::parse(end, "missing `init` line"))?;
    let mut accepting = vec![false; states.len()];
    for q in accept {
        accepting[q] = true;
    }
    let dfa = Dfa {
        states,
        init,
        accepting,
        trans,
        macros: macro_order,
    };
    dfa.validate()?;
    Ok(dfa)
}

impl fmt::Display for Dfa {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "kind dfa")?;
        writeln!(f, "states {}", self.states.join(" "))?;
        writeln!(f, "init {}", self.states[self.init])?;
        let acc: Vec<&str> = self
            .states
            .iter()
            .zip(&self.accepting)
            .filter(|(_, &a)| a)
            .map(|(s, _)| s.as_str())
            .collect();
        writeln!(f, "accept {}", acc.join(" "))?;
        for (q, edges) in self.trans.iter().enumerate() {
            for (g, t) in edges {
                writeln!(f, "trans {} {} {g}", self.states[q], self.states[*t])?;
            }
        }
        Ok(())
    }
}
