//! `synth` command line: monolithic synthesis, the anytime loop, policy
//! evaluation and Monte Carlo simulation.

use std::fmt;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::anytime::{metrics_csv, run_anytime, AnytimeConfig, Selection, METRICS_HEADER};
use crate::compose::{compose_system, Plant};
use crate::error::Error;
use crate::model::{parse_component, parse_dfa, Component, Dfa, Mc, Prop, PropSet};
use crate::policy::{chain_value, extract_policy, lift_chain, simulate, threads_from_env, Policy};
use crate::product::{build_product, missing_props};
use crate::scc::{product_partition, tarjan_sccs};
use crate::solve::{accepting_mask, block_value_iteration, value_iteration, SolverConfig};

#[derive(Debug, Parser)]
#[command(name = "synth", version, about = "Policy synthesis against Markov-chain agents and a DFA specification")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Solve the complete product MDP and write the optimal policy.
    Synth(SynthArgs),
    /// Refine abstracted agents one at a time, writing a policy per iteration.
    Anytime(AnytimeArgs),
    /// Evaluate a policy on the complete system.
    Eval(EvalArgs),
    /// Estimate a policy's satisfaction probability by simulation.
    Simulate(SimulateArgs),
}

#[derive(Debug, Args)]
pub struct ModelArgs {
    /// Plant model (dfts or mdp).
    #[arg(long)]
    pub plant: PathBuf,
    /// Agent models (Markov chains), in declaration order.
    #[arg(long = "agent", num_args = 1..)]
    pub agents: Vec<PathBuf>,
    /// Specification DFA.
    #[arg(long)]
    pub dfa: PathBuf,
    /// Treat DFA propositions that no model mentions as an error.
    #[arg(long)]
    pub strict: bool,
}

#[derive(Debug, Args)]
pub struct SolverArgs {
    #[arg(long, default_value_t = 1e-8, value_parser = positive)]
    pub epsilon: f64,
    #[arg(long, default_value_t = 100_000)]
    pub max_iters: usize,
}

impl SolverArgs {
    fn config(&self) -> SolverConfig {
        SolverConfig {
            epsilon: self.epsilon,
            max_iters: self.max_iters,
        }
    }
}

fn positive(s: &str) -> Result<f64, String> {
    match s.parse::<f64>() {
        Ok(x) if x > 0.0 && x.is_finite() => Ok(x),
        _ => Err(format!("`{s}` is not a positive number")),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Method {
    Vi,
    Scc,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SelectArg {
    #[value(name = "min-prob")]
    MinProb,
    Given,
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    #[arg(long, value_enum, default_value_t = Method::Scc)]
    pub method: Method,
    #[command(flatten)]
    pub solver: SolverArgs,
    /// Where to write the policy.
    #[arg(long, default_value = "policy.tsv")]
    pub out: PathBuf,
    /// Print per-block convergence to stderr (scc method).
    #[arg(long)]
    pub trace: bool,
}

#[derive(Debug, Args)]
pub struct AnytimeArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    #[arg(long, value_enum, default_value_t = SelectArg::MinProb)]
    pub select: SelectArg,
    #[arg(long)]
    pub budget_seconds: Option<f64>,
    #[arg(long)]
    pub budget_states: Option<usize>,
    #[command(flatten)]
    pub solver: SolverArgs,
    #[arg(long, default_value = "anytime-out")]
    pub out_dir: PathBuf,
    /// Skip evaluating each policy on the complete system.
    #[arg(long)]
    pub no_eval: bool,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    #[arg(long)]
    pub policy: PathBuf,
    #[command(flatten)]
    pub model: ModelArgs,
    #[command(flatten)]
    pub solver: SolverArgs,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[arg(long)]
    pub policy: PathBuf,
    #[command(flatten)]
    pub model: ModelArgs,
    #[arg(long, default_value_t = 100_000)]
    pub runs: u64,
    /// Maximum steps per run (default: 10 × product states).
    #[arg(long)]
    pub horizon: Option<usize>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

/// An error tied to the input file it came from.
#[derive(Debug)]
pub struct CliError {
    pub path: Option<PathBuf>,
    pub error: Error,
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        self.error.exit_code()
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.path {
            Some(p) => write!(f, "{}: {}", p.display(), self.error),
            None => write!(f, "{}", self.error),
        }
    }
}

impl From<Error> for CliError {
    fn from(error: Error) -> Self {
        CliError { path: None, error }
    }
}

fn at(path: &Path) -> impl FnOnce(Error) -> CliError + '_ {
    move |error| CliError {
        path: Some(path.to_path_buf()),
        error,
    }
}

fn read(path: &Path) -> Result<String, CliError> {
    std::fs::read_to_string(path).map_err(|e| at(path)(e.into()))
}

/// Parsed and validated inputs.
pub struct Models {
    pub plant: Plant,
    pub agents: Vec<Mc>,
    pub dfa: Dfa,
}

pub fn load_models(args: &ModelArgs, warn: &mut dyn Write) -> Result<Models, CliError> {
    let plant = parse_component(&read(&args.plant)?)
        .and_then(Plant::try_from)
        .map_err(at(&args.plant))?;
    let mut agents = Vec::new();
    for path in &args.agents {
        match parse_component(&read(path)?).map_err(at(path))? {
            Component::Mc(m) => agents.push(m),
            _ => {
                return Err(at(path)(Error::validation("an agent must be a Markov chain (kind mc)")));
            }
        }
    }
    let dfa = parse_dfa(&read(&args.dfa)?).map_err(at(&args.dfa))?;

    let mut owners = vec![(plant_agent(&plant), plant.name().to_string())];
    for a in &agents {
        if let Some((_, other)) = owners.iter().find(|(id, _)| *id == a.agent) {
            return Err(Error::validation(format!(
                "{} and {other} both use agent index {}",
                a.name, a.agent
            ))
            .into());
        }
        owners.push((a.agent, a.name.clone()));
    }
    for (k, a) in agents.iter().enumerate() {
        if agents[..k].iter().any(|b| b.name == a.name) {
            return Err(Error::validation(format!("two agents are named {}", a.name)).into());
        }
    }

    let labels: Vec<&PropSet> = match &plant {
        Plant::Dfts(t) => t.labels.iter().collect(),
        Plant::Mdp(m) => m.labels.iter().collect(),
    };
    let missing = missing_props(&dfa, labels.into_iter().chain(agents.iter().flat_map(|a| &a.labels)));
    if !missing.is_empty() {
        let list: Vec<String> = missing.iter().map(Prop::to_string).collect();
        let msg = format!("propositions never labelled by any model: {}", list.join(", "));
        if args.strict {
            return Err(at(&args.dfa)(Error::validation(msg)));
        }
        let _ = writeln!(warn, "warning: {}: {msg}", args.dfa.display());
    }
    Ok(Models { plant, agents, dfa })
}

fn plant_agent(plant: &Plant) -> u32 {
    match plant {
        Plant::Dfts(t) => t.agent,
        Plant::Mdp(m) => m.agent,
    }
}

pub fn cmd_synth(args: &SynthArgs, out: &mut dyn Write, err: &mut dyn Write) -> Result<(), CliError> {
    let m = load_models(&args.model, err)?;
    let cfg = args.solver.config();
    let p = build_product(&compose_system(&m.plant, &m.agents), &m.dfa);
    let targets = accepting_mask(&p);
    let x = match args.method {
        Method::Vi => value_iteration(&p, &targets, &cfg),
        Method::Scc => {
            let part = product_partition(&tarjan_sccs(&p.system_graph()), p.num_dfa_states());
            if args.trace {
                let (x, traces) = crate::solve::block_value_iteration_traced(&p, &part, &targets, &cfg)?;
                let _ = write!(err, "{}", crate::solve::BlockTrace::render(&traces));
                x
            } else {
                block_value_iteration(&p, &part, &targets, &cfg)?
            }
        }
    };
    if !x.converged {
        let _ = writeln!(err, "warning: value iteration stopped after {} iterations without converging", x.iterations);
    }
    let pol = extract_policy(&p, &x, &cfg)?;
    std::fs::write(&args.out, pol.render()).map_err(|e| at(&args.out)(e.into()))?;
    let _ = writeln!(out, "probability={:.6}", x.initial_value(&p.init));
    Ok(())
}

pub fn cmd_anytime(args: &AnytimeArgs, out: &mut dyn Write, err: &mut dyn Write) -> Result<(), CliError> {
    let m = load_models(&args.model, err)?;
    if args.budget_seconds.is_some_and(|b| !(b >= 0.0)) {
        return Err(Error::validation("--budget-seconds must be non-negative").into());
    }
    let cfg = AnytimeConfig {
        budget_seconds: args.budget_seconds,
        budget_states: args.budget_states,
        selection: match args.select {
            SelectArg::MinProb => Selection::MinProb,
            SelectArg::Given => Selection::GivenOrder,
        },
        solver: args.solver.config(),
        evaluate: !args.no_eval,
        out_dir: Some(args.out_dir.clone()),
    };
    let run = run_anytime(&m.plant, &m.agents, &m.dfa, &cfg).map_err(at(&args.out_dir))?;
    let reports: Vec<_> = run.iter().map(|it| it.report.clone()).collect();
    debug_assert_eq!(metrics_csv(&reports).lines().count(), run.len() + 1);
    let last = reports.last().expect("iteration 0 always runs");
    let _ = writeln!(out, "{METRICS_HEADER}\n{}", last.csv_row());
    Ok(())
}

fn load_policy(path: &Path) -> Result<Policy, CliError> {
    Policy::parse(&read(path)?).map_err(at(path))
}

pub fn cmd_eval(args: &EvalArgs, out: &mut dyn Write, err: &mut dyn Write) -> Result<(), CliError> {
    let pol = load_policy(&args.policy)?;
    let m = load_models(&args.model, err)?;
    let (_, chain) = lift_chain(&pol, &m.plant, &m.agents, &m.dfa).map_err(at(&args.policy))?;
    let _ = writeln!(out, "probability={:.6}", chain_value(&chain, &args.solver.config()));
    Ok(())
}

pub fn cmd_simulate(args: &SimulateArgs, out: &mut dyn Write, err: &mut dyn Write) -> Result<(), CliError> {
    if args.runs == 0 {
        return Err(Error::parse(0, "--runs must be at least 1").into());
    }
    if args.horizon == Some(0) {
        return Err(Error::parse(0, "--horizon must be at least 1").into());
    }
    let pol = load_policy(&args.policy)?;
    let m = load_models(&args.model, err)?;
    let (p, chain) = lift_chain(&pol, &m.plant, &m.agents, &m.dfa).map_err(at(&args.policy))?;
    let horizon = args.horizon.unwrap_or(10 * p.num_states());
    let sim = simulate(&chain, &Prop::accepting(), args.runs, horizon, args.seed, threads_from_env());
    let _ = writeln!(out, "estimate={:.6} stderr={:.6} runs={}", sim.estimate, sim.stderr, sim.runs);
    Ok(())
}

/// Runs the parsed command, returning the process exit status.
pub fn run(cli: &Cli, out: &mut dyn Write, err: &mut dyn Write) -> i32 {
    let result = match &cli.command {
        Command::Synth(a) => cmd_synth(a, out, err),
        Command::Anytime(a) => cmd_anytime(a, out, err),
        Command::Eval(a) => cmd_eval(a, out, err),
        Command::Simulate(a) => cmd_simulate(a, out, err),
    };
    match result {
        Ok(()) => 0,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            e.exit_code()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use clap::CommandFactory;

    #[test]
    fn cli_definition_is_consistent() {
        Cli::command().debug_assert();
    }

    #[test]
    fn missing_dfa_is_a_usage_error() {
        let e = Cli::try_parse_from(["synth", "synth", "--plant", "v.mdl"]).unwrap_err();
        assert_eq!(e.exit_code(), 2);
    }

    #[test]
    fn agents_take_several_values() {
        let cli = Cli::try_parse_from([
            "synth", "synth", "--plant", "v", "--agent", "a", "b", "--dfa", "d", "--method", "vi",
        ])
        .unwrap();
        match cli.command {
            Command::Synth(a) => {
                assert_eq!(a.model.agents.len(), 2);
                assert_eq!(a.method, Method::Vi);
            }
            _ => unreachable!(),
        }
    }

    #[test]
    fn epsilon_must_be_positive() {
        assert!(Cli::try_parse_from(["synth", "synth", "--plant", "v", "--dfa", "d", "--epsilon", "0"]).is_err());
    }
}
