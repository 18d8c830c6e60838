//! Maximal reachability probabilities by value iteration: plain, block-ordered
//! over an SCC partition, and for Markov chains.

use std::fmt::Write as _;

use crate::error::Result;
use crate::model::{Mc, Row};
use crate::product::ProductMdp;
use crate::scc::SccSet;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverConfig {
    pub epsilon: f64,
    pub max_iters: usize,
}

/// `epsilon` bounds the change between successive iterates at termination.
/// The remaining error can exceed that change by a factor `ρ/(1−ρ)` for a
/// contraction rate `ρ`, so the default sits two orders of magnitude below the
/// accuracy usually asked of a result (1e-6).
impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            epsilon: 1e-8,
            max_iters: 100_000,
        }
    }
}

impl SolverConfig {
    /// Tolerance used when comparing near-optimal values (10ε).
    pub fn eta(&self) -> f64 {
        10.0 * self.epsilon
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProbVector {
    pub values: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
}

impl ProbVector {
    /// `Σ_s ι(s)·x_s`.
    pub fn initial_value(&self, init: &[f64]) -> f64 {
        init.iter().zip(&self.values).map(|(p, x)| p * x).sum()
    }
}

fn bellman(acts: &[Row], x: &[f64]) -> f64 {
    acts.iter()
        .filter(|row| !row.is_empty())
        .map(|row| row.iter().map(|&(t, p)| p * x[t]).sum::<f64>())
        .fold(0.0, f64::max)
        .min(1.0) // rows may sum to 1 + ulp
}

fn indicator(targets: &[bool]) -> Vec<f64> {
    targets.iter().map(|&t| if t { 1.0 } else { 0.0 }).collect()
}

/// `max_s |x_s − max_α Σ_t P(s,α,t)·x_t|` over non-target states.
pub fn residual(rows: &[Vec<Row>], targets: &[bool], x: &[f64]) -> f64 {
    rows.iter()
        .enumerate()
        .filter(|&(s, _)| !targets[s])
        .map(|(s, acts)| (x[s] - bellman(acts, x)).abs())
        .fold(0.0, f64::max)
}

/// Jacobi value iteration over per-state action rows, calling `observe`
/// with every iterate (the first is the target indicator).
pub fn solve_rows(
    rows: &[Vec<Row>],
    targets: &[bool],
    cfg: &SolverConfig,
    observe: &mut dyn FnMut(&[f64]),
) -> ProbVector {
    let mut x = indicator(targets);
    let mut next = x.clone();
    observe(&x);
    for iter in 1..=cfg.max_iters {
        let mut diff: f64 = 0.0;
        for (s, acts) in rows.iter().enumerate() {
            if !targets[s] {
                next[s] = bellman(acts, &x);
                diff = diff.max((next[s] - x[s]).abs());
            }
        }
        std::mem::swap(&mut x, &mut next);
        observe(&x);
        if diff < cfg.epsilon {
            return ProbVector {
                values: x,
                iterations: iter,
                converged: true,
            };
        }
    }
    ProbVector {
        values: x,
        iterations: cfg.max_iters,
        converged: false,
    }
}

/// Target mask of a product: its accepting states.
pub fn accepting_mask(p: &ProductMdp) -> Vec<bool> {
    (0..p.num_states()).map(|i| p.is_accepting(i)).collect()
}

pub fn value_iteration(p: &ProductMdp, targets: &[bool], cfg: &SolverConfig) -> ProbVector {
    solve_rows(&p.rows, targets, cfg, &mut |_| {})
}

pub fn value_iteration_observed(
    p: &ProductMdp,
    targets: &[bool],
    cfg: &SolverConfig,
    observe: &mut dyn FnMut(&[f64]),
) -> ProbVector {
    solve_rows(&p.rows, targets, cfg, observe)
}

/// Per-block convergence record.
#[derive(Debug, Clone, PartialEq)]
pub struct BlockTrace {
    pub block: usize,
    pub iterations: usize,
    pub residual: f64,
}

impl BlockTrace {
    pub fn render(traces: &[BlockTrace]) -> String {
        let mut out = String::new();
        for t in traces {
            let _ = writeln!(out, "block {} iters {} residual {:e}", t.block, t.iterations, t.residual);
        }
        out
    }
}

/// Value iteration block by block in processing order; each block iterates
/// its own states and reads frozen values for states outside it.
pub fn block_value_iteration(
    p: &ProductMdp,
    blocks: &SccSet,
    targets: &[bool],
    cfg: &SolverConfig,
) -> Result<ProbVector> {
    block_rows(&p.rows, blocks, targets, cfg, None)
}

pub fn block_value_iteration_traced(
    p: &ProductMdp,
    blocks: &SccSet,
    targets: &[bool],
    cfg: &SolverConfig,
) -> Result<(ProbVector, Vec<BlockTrace>)> {
    let mut traces = Vec::new();
    let x = block_rows(&p.rows, blocks, targets, cfg, Some(&mut traces))?;
    Ok((x, traces))
}

/// Block-ordered solve over arbitrary per-state action rows.
pub fn block_rows(
    rows: &[Vec<Row>],
    blocks: &SccSet,
    targets: &[bool],
    cfg: &SolverConfig,
    mut trace: Option<&mut Vec<BlockTrace>>,
) -> Result<ProbVector> {
    blocks.validate(rows.len())?;
    let mut x = indicator(targets);
    let mut scratch = Vec::new();
    let mut total = 0;
    let mut converged = true;
    for &b in &blocks.order {
        let live: Vec<usize> = blocks.blocks[b].iter().copied().filter(|&s| !targets[s]).collect();
        let mut iters = 0;
        let mut diff = 0.0;
        if !live.is_empty() {
            loop {
                iters += 1;
                scratch.clear();
                scratch.extend(live.iter().map(|&s| bellman(&rows[s], &x)));
                diff = 0.0f64;
                for (&s, &v) in live.iter().zip(&scratch) {
                    diff = diff.max((v - x[s]).abs());
                    x[s] = v;
                }
                if diff < cfg.epsilon {
                    break;
                }
                if iters >= cfg.max_iters {
                    converged = false;
                    break;
                }
            }
        }
        total += iters;
        if let Some(t) = trace.as_deref_mut() {
            t.push(BlockTrace {
                block: b,
                iterations: iters,
                residual: diff,
            });
        }
    }
    Ok(ProbVector {
        values: x,
        iterations: total,
        converged,
    })
}

/// Reachability probabilities of `targets` in a Markov chain.
pub fn mc_reachability(m: &Mc, targets: &[bool], cfg: &SolverConfig) -> ProbVector {
    let rows: Vec<Vec<Row>> = m.rows.iter().map(|r| vec![r.clone()]).collect();
    solve_rows(&rows, targets, cfg, &mut |_| {})
}
