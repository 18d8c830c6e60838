//! Control policy synthesis for a plant (DFTS or MDP) sharing its
//! environment with several Markov-chain agents, against a co-safe
//! specification given as a DFA.
//!
//! Two pipelines are provided:
//!
//! * monolithic: [`compose::compose_system`] → [`product::build_product`] →
//!   [`solve::value_iteration`] or [`solve::block_value_iteration`] →
//!   [`policy::extract_policy`];
//! * anytime: [`anytime::run_anytime`] starts with every agent pinned to a
//!   single state and adds one full agent model per iteration, refining the
//!   product MDP, its SCC decomposition and the solve order incrementally.

pub mod anytime;
pub mod cli;
pub mod compose;
pub mod error;
pub mod fixtures;
pub mod model;
pub mod policy;
pub mod product;
pub mod scc;
pub mod solve;

pub use error::{Error, Result};
