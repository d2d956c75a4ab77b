//! Command-line driver: parses arguments into layered [`Params`], runs the experiment and
//! writes CSV results plus a manifest that reproduces them.
//!
//! Parameter precedence, lowest first: command defaults, `ADASHIFT_SEED`, `--config` file,
//! `--set key=value`, explicit flags.

// Negated comparisons such as `!(x > 0.0)` are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod commands;
pub mod params;

use std::ffi::OsString;
use std::path::PathBuf;

use clap::parser::ValueSource;
use clap::{Args, CommandFactory, FromArgMatches, Parser, Subcommand};

pub use params::Params;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    /// Bad arguments or parameters; exit status 2.
    #[error("{0}")]
    Usage(String),
    /// The experiment ran (or tried to) and failed; exit status 1.
    #[error("{0}")]
    Failed(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Failed(_) => 1,
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "adashift", version, about = "Adaptive-optimizer experiments, closed-form checks and data export")]
pub struct Cli {
    /// Parameter file: `key=value` lines with `#` comments, or a previous run's manifest.csv.
    #[arg(long, global = true, value_name = "FILE")]
    pub config: Option<PathBuf>,
    /// Parameter override, applied after the config file. Repeatable.
    #[arg(long = "set", global = true, value_name = "KEY=VALUE")]
    pub set: Vec<String>,
    /// Root directory; results go to `<out>/<command>/`.
    #[arg(long, global = true, default_value = "results", value_name = "DIR")]
    pub out: PathBuf,
    #[arg(long, global = true, env = "ADASHIFT_SEED")]
    pub seed: Option<u64>,
    /// Worker threads for parallel runs (default: all cores). Does not change results.
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    #[command(subcommand)]
    pub command: Command,
}

const GLOBAL_IDS: [&str; 5] = ["config", "set", "out", "seed", "threads"];

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run optimizers on the periodic or stochastic linear counterexample.
    Counterexample(CounterexampleArgs),
    /// Final θ over a β1 × β2 grid.
    Sweep(SweepArgs),
    /// Closed-form vs empirical critical gradient magnitude C.
    Critical(CriticalArgs),
    /// Closed-form limits, net update factors and expected factors against simulation.
    Lemma(LemmaArgs),
    /// Which β1 makes Adam move in the right direction on a counterexample.
    Theorem(TheoremArgs),
    /// Train on logistic regression or the ill-conditioned linear net.
    Train(TrainArgs),
    /// Gradient / second-moment correlation diagnostics during training.
    Correlate(CorrelateArgs),
    /// Tuned comparison of every optimizer on the ill-conditioned quadratic.
    Illcond(IllcondArgs),
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Counterexample(_) => "counterexample",
            Command::Sweep(_) => "sweep",
            Command::Critical(_) => "critical",
            Command::Lemma(_) => "lemma",
            Command::Theorem(_) => "theorem",
            Command::Train(_) => "train",
            Command::Correlate(_) => "correlate",
            Command::Illcond(_) => "illcond",
        }
    }
}

// Flag values are read back generically from the argument matches as `key=value`
// overrides; the typed fields exist for help text and parse-time type checks.

#[allow(dead_code)]
#[derive(Debug, Args)]
pub struct OptimizerArgs {
    /// sgd, momentum, adam, amsgrad or adashift.
    #[arg(long)]
    optimizer: Option<String>,
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long)]
    epsilon: Option<f64>,
    /// AdaShift temporal shift n.
    #[arg(long)]
    shift_n: Option<usize>,
    /// AdaShift first-moment window, or `auto` for n.
    #[arg(long)]
    m_window: Option<String>,
    /// AdaShift spatial reduction: max, mean or identity.
    #[arg(long)]
    spatial: Option<String>,
    #[arg(long)]
    bias_correction: Option<bool>,
    /// constant, linear or exp.
    #[arg(long)]
    schedule: Option<String>,
    /// Linear decay horizon in steps, or `auto` for the step budget.
    #[arg(long)]
    decay_horizon: Option<String>,
    /// Exponential decay rate per step.
    #[arg(long)]
    decay_rate: Option<f64>,
}

#[allow(dead_code)]
#[derive(Debug, Args)]
pub struct BetaArgs {
    #[arg(long)]
    beta1: Option<f64>,
    #[arg(long)]
    beta2: Option<f64>,
}

#[allow(dead_code)]
#[derive(Debug, Args)]
pub struct CounterexampleProblemArgs {
    /// sequential or stochastic.
    #[arg(long)]
    problem: Option<String>,
    #[arg(long = "C", id = "C")]
    c: Option<f64>,
    /// Epoch length of the sequential problem.
    #[arg(long)]
    d: Option<u64>,
    /// Drift of the stochastic problem.
    #[arg(long)]
    delta: Option<f64>,
}

#[allow(dead_code)]
#[derive(Debug, Args)]
pub struct CounterexampleArgs {
    #[command(flatten)]
    problem: CounterexampleProblemArgs,
    #[command(flatten)]
    optimizer: OptimizerArgs,
    #[command(flatten)]
    betas: BetaArgs,
    #[arg(long)]
    steps: Option<u64>,
    /// Number of seeds, starting at `--seed`.
    #[arg(long)]
    runs: Option<u64>,
    #[arg(long)]
    record_every: Option<u64>,
    /// Clamp θ to [−1, 1] after each step.
    #[arg(long)]
    projection: Option<bool>,
    #[arg(long)]
    theta0: Option<f64>,
}

#[allow(dead_code)]
#[derive(Debug, Args)]
pub struct SweepArgs {
    #[command(flatten)]
    problem: CounterexampleProblemArgs,
    #[command(flatten)]
    optimizer: OptimizerArgs,
    /// Comma-separated, strictly increasing.
    #[arg(long)]
    beta1_values: Option<String>,
    /// Comma-separated, strictly increasing.
    #[arg(long)]
    beta2_values: Option<String>,
    #[arg(long)]
    steps: Option<u64>,
    #[arg(long)]
    theta0: Option<f64>,
}

#[allow(dead_code)]
#[derive(Debug, Args)]
pub struct CriticalArgs {
    /// fixed (epoch length d), tied (d = C) or stochastic.
    #[arg(long)]
    mode: Option<String>,
    #[command(flatten)]
    betas: BetaArgs,
    #[arg(long)]
    d: Option<u64>,
    #[arg(long)]
    delta: Option<f64>,
    #[arg(long)]
    steps: Option<u64>,
    /// Lower end of the search bracket, or `auto`.
    #[arg(long)]
    lo: Option<String>,
    /// Upper end of the search bracket, or `auto`.
    #[arg(long)]
    hi: Option<String>,
}

#[allow(dead_code)]
#[derive(Debug, Args)]
pub struct LemmaArgs {
    /// v-limit, m-limit, factors, step-sum, expected-k or independent-v.
    #[arg(long)]
    which: Option<String>,
    #[command(flatten)]
    betas: BetaArgs,
    #[arg(long = "C", id = "C")]
    c: Option<f64>,
    #[arg(long)]
    d: Option<u64>,
    #[arg(long)]
    delta: Option<f64>,
    /// Epochs simulated to reach the limit cycle.
    #[arg(long)]
    epochs: Option<usize>,
    /// Truncation horizon for net update factors, or `auto`.
    #[arg(long)]
    horizon: Option<String>,
    /// Monte-Carlo runs for expected-k.
    #[arg(long)]
    runs: Option<usize>,
    /// Draws for independent-v.
    #[arg(long)]
    draws: Option<usize>,
    #[arg(long)]
    v_lo: Option<f64>,
    #[arg(long)]
    v_hi: Option<f64>,
}

#[allow(dead_code)]
#[derive(Debug, Args)]
pub struct TheoremArgs {
    #[command(flatten)]
    problem: CounterexampleProblemArgs,
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long)]
    beta2: Option<f64>,
    /// Comma-separated, strictly increasing.
    #[arg(long)]
    beta1_grid: Option<String>,
    #[arg(long)]
    steps: Option<u64>,
    #[arg(long)]
    runs: Option<u64>,
}

#[allow(dead_code)]
#[derive(Debug, Args)]
pub struct TaskArgs {
    /// logistic or illcond.
    #[arg(long)]
    task: Option<String>,
    #[arg(long)]
    dim: Option<usize>,
    #[arg(long)]
    samples: Option<usize>,
    #[arg(long)]
    separation: Option<f64>,
    #[arg(long)]
    data_seed: Option<u64>,
    /// Logistic dataset CSV (features then label per row) used instead of synthetic data.
    #[arg(long)]
    data: Option<String>,
    #[arg(long)]
    batch_size: Option<usize>,
    #[arg(long)]
    l2: Option<f64>,
    #[arg(long)]
    kappa: Option<f64>,
    #[arg(long)]
    init_sigma: Option<f64>,
    #[arg(long)]
    init_seed: Option<u64>,
}

#[allow(dead_code)]
#[derive(Debug, Args)]
pub struct TrainArgs {
    #[command(flatten)]
    task: TaskArgs,
    #[command(flatten)]
    optimizer: OptimizerArgs,
    #[command(flatten)]
    betas: BetaArgs,
    #[arg(long)]
    steps: Option<u64>,
    #[arg(long)]
    record_every: Option<u64>,
    /// Comma-separated learning rates to tune over; empty trains once at `alpha`.
    #[arg(long)]
    alpha_grid: Option<String>,
}

#[allow(dead_code)]
#[derive(Debug, Args)]
pub struct CorrelateArgs {
    #[command(flatten)]
    task: TaskArgs,
    /// Comma-separated optimizer names.
    #[arg(long)]
    optimizers: Option<String>,
    /// Comma-separated learning rates, one per optimizer.
    #[arg(long)]
    alphas: Option<String>,
    #[command(flatten)]
    betas: BetaArgs,
    #[arg(long)]
    shift_n: Option<usize>,
    #[arg(long)]
    spatial: Option<String>,
    #[arg(long)]
    steps: Option<u64>,
    /// Fraction of training, counted from the end, the correlations use.
    #[arg(long)]
    tail: Option<f64>,
    /// Parameter block to analyse; empty for the first block.
    #[arg(long)]
    block: Option<String>,
    #[arg(long)]
    n_max: Option<usize>,
    #[arg(long)]
    pair_samples: Option<usize>,
}

#[allow(dead_code)]
#[derive(Debug, Args)]
pub struct IllcondArgs {
    #[arg(long)]
    dim: Option<usize>,
    #[arg(long)]
    kappa: Option<f64>,
    #[arg(long)]
    init_sigma: Option<f64>,
    #[arg(long)]
    init_seed: Option<u64>,
    /// Comma-separated optimizer names.
    #[arg(long)]
    optimizers: Option<String>,
    #[command(flatten)]
    betas: BetaArgs,
    #[arg(long)]
    shift_n: Option<usize>,
    #[arg(long)]
    spatial: Option<String>,
    #[arg(long)]
    steps: Option<u64>,
    #[arg(long)]
    alpha_grid: Option<String>,
    /// Total exponential decay factors over the run, tuned jointly with α0, for Adam and AdaShift.
    #[arg(long)]
    decay_factors: Option<String>,
}

/// Everything needed to execute one invocation.
#[derive(Debug, Clone, PartialEq)]
pub struct Invocation {
    pub params: Params,
    pub out: PathBuf,
    pub threads: Option<usize>,
}

/// Parses `args` (including the program name) and layers the parameters.
pub fn parse<I, T>(args: I) -> Result<Invocation, clap::Error>
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let matches = Cli::command().try_get_matches_from(args)?;
    let cli = Cli::from_arg_matches(&matches)?;
    let (name, sub) = matches.subcommand().expect("subcommand is required");
    let usage = |e: CliError| Cli::command().error(clap::error::ErrorKind::ValueValidation, e.to_string());

    let mut params = Params::new(name, &commands::defaults(name));
    if let (Some(seed), Some(ValueSource::EnvVariable)) = (cli.seed, matches.value_source("seed")) {
        params.set("seed", &seed.to_string(), "ADASHIFT_SEED").map_err(usage)?;
    }
    if let Some(path) = &cli.config {
        params.load_file(path).map_err(usage)?;
    }
    for assignment in &cli.set {
        params.assign(assignment, "--set").map_err(usage)?;
    }
    // Flattened argument structs also appear as group ids; only real arguments are parameters.
    let definition = Cli::command();
    let arguments: Vec<&str> = definition
        .find_subcommand(name)
        .expect("parsed subcommand exists")
        .get_arguments()
        .map(|a| a.get_id().as_str())
        .collect();
    for id in sub.ids() {
        let id = id.as_str();
        if GLOBAL_IDS.contains(&id) || !arguments.contains(&id) || sub.value_source(id) != Some(ValueSource::CommandLine) {
            continue;
        }
        let Some(mut raw) = sub.get_raw(id) else { continue };
        let value = raw.next().expect("flag has a value").to_string_lossy().into_owned();
        params.set(id, &value, &format!("--{id}")).map_err(usage)?;
    }
    if let (Some(seed), Some(ValueSource::CommandLine)) = (cli.seed, matches.value_source("seed")) {
        params.set("seed", &seed.to_string(), "--seed").map_err(usage)?;
    }
    Ok(Invocation { params, out: cli.out, threads: cli.threads })
}

/// Runs the whole program and returns its exit status.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let invocation = match parse(args) {
        Ok(inv) => inv,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    match commands::execute(&invocation) {
        Ok(dir) => {
            println!("wrote {}", dir.display());
            0
        }
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
