//! Component models (DFTS, Markov chains, MDPs), the specification DFA,
//! guard expressions and the line-oriented text formats they are read from.

mod component;
mod dfa;
mod guard;

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

pub use component::{parse_component, Component, Dfts, Mc, Mdp, Row};
pub use dfa::{parse_dfa, Dfa, SUPPORT_LIMIT};
pub use guard::{eval_guard, Guard};

/// Tolerance on row sums and initial distributions.
pub const ROW_SUM_TOL: f64 = 1e-9;

/// Atomic proposition namespaced by the component that owns it.
///
/// Agent index 0 is the plant. Two components never share a proposition
/// because every label is suffixed with its owner's index.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Prop {
    pub base: String,
    pub agent: u32,
}

pub type PropSet = BTreeSet<Prop>;

impl Prop {
    pub fn new(base: impl Into<String>, agent: u32) -> Self {
        Prop {
            base: base.into(),
            agent,
        }
    }

    /// Marker attached to accepting product states in induced chains.
    /// `$` cannot appear in an identifier, so it never clashes with model props.
    pub fn accepting() -> Self {
        Prop::new("$accept", 0)
    }
}

impl fmt::Display for Prop {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}@{}", self.base, self.agent)
    }
}

impl FromStr for Prop {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let (base, agent) = s
            .split_once('@')
            .ok_or_else(|| format!("`{s}` is not of the form <name>@<agent>"))?;
        if !is_ident(base) {
            return Err(format!("`{base}` is not a valid proposition name"));
        }
        let agent = agent
            .parse::<u32>()
            .map_err(|_| format!("`{agent}` is not a valid agent index"))?;
        Ok(Prop::new(base, agent))
    }
}

pub(crate) fn is_ident(s: &str) -> bool {
    let mut chars = s.chars();
    match chars.next() {
        Some(c) if c.is_alphabetic() || c == '_' => {}
        _ => return false,
    }
    chars.all(|c| c.is_alphanumeric() || c == '_')
}

/// Strips a `#` comment and splits the remainder into whitespace-separated tokens.
pub(crate) fn tokens(line: &str) -> Vec<&str> {
    let line = match line.find('#') {
        Some(i) => &line[..i],
        None => line,
    };
    line.split_whitespace().collect()
}
