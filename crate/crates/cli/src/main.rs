//! `swarm`: run design campaigns, resume them, probe evaluator bridges and
//! export analysis data.

mod analyze;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Duration;

use anyhow::Result;
use clap::{Args, Parser, Subcommand};
use swarm_analysis::nj::DEFAULT_MAX_TAXA;
use swarm_analysis::tsne::{DEFAULT_MAX_ITER, DEFAULT_PERPLEXITY_CAP};
use swarm_analysis::TsneParams;
use swarm_core::agents::AgentError;
use swarm_core::engine::{Campaign, EngineError, Summary};
use swarm_core::eval::bridge::{probe_bridge, DEFAULT_BRIDGE_TIMEOUT};
use swarm_core::eval::BridgeCommand;

use analyze::InputSpec;
use config::{load_config, Overrides};

const EXIT_COMPLETE: u8 = 0;
const EXIT_FAILURE: u8 = 1;
const EXIT_INCOMPLETE: u8 = 2;
const EXIT_INVALID_CONFIG: u8 = 3;

#[derive(Debug, Parser)]
#[command(name = "swarm", version, about = "Position-per-agent protein sequence design")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run a campaign from a config file and flag overrides.
    Design(DesignArgs),
    /// Continue a campaign from its trajectory file.
    Resume {
        trajectory: PathBuf,
        /// New total iteration budget.
        #[arg(long)]
        iterations: Option<usize>,
    },
    /// t-SNE embedding of composition features, as CSV.
    AnalyzeEmbed {
        /// `PATH` or `LABEL=PATH`; trajectories and FASTA files, repeatable.
        #[arg(long = "input", required = true)]
        inputs: Vec<InputSpec>,
        #[arg(long, short)]
        output: Option<PathBuf>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = DEFAULT_PERPLEXITY_CAP)]
        perplexity_cap: f64,
        #[arg(long, default_value_t = DEFAULT_MAX_ITER)]
        max_iter: usize,
    },
    /// Neighbor-joining tree over feature distances, as Newick.
    AnalyzeTree {
        #[arg(long = "input", required = true)]
        inputs: Vec<InputSpec>,
        #[arg(long, short)]
        output: Option<PathBuf>,
        /// Seed for subsampling large inputs; defaults to the campaign seed.
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long, default_value_t = DEFAULT_MAX_TAXA)]
        max_taxa: usize,
    },
    /// Pairwise Hamming distances, as a CSV matrix.
    AnalyzeHamming {
        #[arg(long)]
        input: InputSpec,
        #[arg(long, short)]
        output: Option<PathBuf>,
    },
    /// Per-position residue counts, as CSV.
    AnalyzeLogo {
        #[arg(long)]
        input: InputSpec,
        #[arg(long, short)]
        output: Option<PathBuf>,
    },
    /// Energy and score per iteration, as CSV.
    AnalyzeConvergence {
        #[arg(long)]
        input: PathBuf,
        #[arg(long, short)]
        output: Option<PathBuf>,
    },
    /// Handshake and one round trip with an evaluator bridge.
    ValidateBridge {
        #[arg(long, default_value_t = DEFAULT_BRIDGE_TIMEOUT.as_secs_f64())]
        timeout_secs: f64,
        /// Bridge program and its arguments.
        #[arg(required = true, trailing_var_arg = true, allow_hyphen_values = true)]
        command: Vec<String>,
    },
}

#[derive(Debug, Args)]
struct DesignArgs {
    /// TOML config file.
    #[arg(long, short)]
    config: Option<PathBuf>,
    /// Objective as a JSON object.
    #[arg(long)]
    objective: Option<String>,
    /// Starting sequence; its length is fixed for the campaign.
    #[arg(long)]
    start_sequence: Option<String>,
    /// Iteration budget.
    #[arg(long)]
    iterations: Option<usize>,
    /// Campaign seed.
    #[arg(long)]
    seed: Option<u64>,
    /// keep, random[:SEED], propensity:SS[:T] or a JSON object.
    #[arg(long)]
    policy: Option<String>,
    /// builtin, external:PROGRAM [ARGS...] or a JSON object.
    #[arg(long)]
    evaluator: Option<String>,
    /// Linear neighbor radius.
    #[arg(long)]
    radius: Option<usize>,
    /// Spatial neighbor cutoff in Å.
    #[arg(long)]
    cutoff: Option<f64>,
    /// Score tolerance for energy-based acceptance.
    #[arg(long)]
    epsilon: Option<f64>,
    /// Success-rate threshold for reported patterns.
    #[arg(long)]
    theta: Option<f64>,
    /// Observations a pattern needs before it is reported.
    #[arg(long)]
    min_support: Option<u32>,
    /// ANM contact cutoff in Å.
    #[arg(long)]
    anm_cutoff: Option<f64>,
    /// ANM spring constant.
    #[arg(long)]
    anm_gamma: Option<f64>,
    /// Failed evaluations in a row before the run stops.
    #[arg(long)]
    max_consecutive_failures: Option<usize>,
    /// Iterations between state checkpoints.
    #[arg(long)]
    checkpoint_every: Option<usize>,
    /// Add wall-clock fields to records.
    #[arg(long)]
    record_timing: Option<bool>,
    /// Trajectory file to write.
    #[arg(long, short)]
    output: Option<PathBuf>,
}

impl DesignArgs {
    fn overrides(&self) -> Overrides {
        Overrides {
            objective: self.objective.clone(),
            start_sequence: self.start_sequence.clone(),
            iterations: self.iterations,
            seed: self.seed,
            policy: self.policy.clone(),
            evaluator: self.evaluator.clone(),
            radius: self.radius,
            cutoff: self.cutoff,
            epsilon: self.epsilon,
            theta: self.theta,
            min_support: self.min_support,
            anm_cutoff: self.anm_cutoff,
            anm_gamma: self.anm_gamma,
            max_consecutive_failures: self.max_consecutive_failures,
            checkpoint_every: self.checkpoint_every,
            record_timing: self.record_timing,
            output: self.output.clone(),
        }
    }
}

fn print_summary(s: &Summary) {
    println!("complete: {}", s.complete);
    println!("iterations: {}", s.iterations_run);
    println!("best sequence: {}", s.best_sequence);
    println!("best score: {:.4}", s.best_score);
    println!("best energy: {:.3}", s.best_energy);
    println!("best iteration: {}", s.best_iteration);
    println!("acceptance rate: {:.3}", s.acceptance_rate);
}

fn engine_exit(err: EngineError) -> u8 {
    eprintln!("error: {err}");
    match err {
        EngineError::Config(_)
        | EngineError::Agent(AgentError::MissingCredential(_) | AgentError::InvalidPolicy(_)) => EXIT_INVALID_CONFIG,
        EngineError::Baseline(_) => EXIT_INCOMPLETE,
        _ => EXIT_FAILURE,
    }
}

fn finish(result: Result<Summary, EngineError>) -> u8 {
    match result {
        Ok(s) => {
            print_summary(&s);
            if s.complete {
                EXIT_COMPLETE
            } else {
                EXIT_INCOMPLETE
            }
        }
        Err(e) => engine_exit(e),
    }
}

fn design(args: &DesignArgs) -> u8 {
    let config = match load_config(args.config.as_deref(), &args.overrides()) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            return EXIT_INVALID_CONFIG;
        }
    };
    log::info!("writing trajectory to {}", config.output_path.display());
    finish(Campaign::start(config).and_then(Campaign::run))
}

fn validate_bridge(command: &[String], timeout_secs: f64) -> u8 {
    if !(timeout_secs > 0.0) || !timeout_secs.is_finite() {
        eprintln!("error: --timeout-secs must be > 0");
        return EXIT_INVALID_CONFIG;
    }
    let bridge = BridgeCommand::new(&command[0], &command[1..]);
    match probe_bridge(&bridge, Duration::from_secs_f64(timeout_secs)) {
        Ok(probe) => {
            println!("protocol: {}", probe.protocol);
            println!("round trip: {:.1} ms", probe.elapsed.as_secs_f64() * 1e3);
            println!("total energy: {:.3}", probe.result.total_energy);
            println!("ss: {}", probe.result.ss);
            EXIT_COMPLETE
        }
        Err(e) => {
            eprintln!("error: {e}");
            EXIT_FAILURE
        }
    }
}

fn report(result: Result<()>) -> u8 {
    match result {
        Ok(()) => EXIT_COMPLETE,
        Err(e) => {
            eprintln!("error: {e:#}");
            EXIT_FAILURE
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    // Bad flags are configuration errors; clap's own code would read as "incomplete".
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if e.use_stderr() => {
            let _ = e.print();
            return ExitCode::from(EXIT_INVALID_CONFIG);
        }
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(EXIT_COMPLETE);
        }
    };
    let code = match &cli.command {
        Command::Design(args) => design(args),
        Command::Resume { trajectory, iterations } => {
            finish(Campaign::resume(trajectory, *iterations).and_then(Campaign::run))
        }
        Command::AnalyzeEmbed {
            inputs,
            output,
            seed,
            perplexity_cap,
            max_iter,
        } => {
            let params = TsneParams {
                perplexity_cap: *perplexity_cap,
                max_iter: *max_iter,
                seed: *seed,
            };
            report(analyze::embed(inputs, output.as_deref(), params))
        }
        Command::AnalyzeTree {
            inputs,
            output,
            seed,
            max_taxa,
        } => report(analyze::tree(inputs, output.as_deref(), *seed, *max_taxa)),
        Command::AnalyzeHamming { input, output } => report(analyze::hamming(input, output.as_deref())),
        Command::AnalyzeLogo { input, output } => report(analyze::logo(input, output.as_deref())),
        Command::AnalyzeConvergence { input, output } => report(analyze::convergence(input, output.as_deref())),
        Command::ValidateBridge { timeout_secs, command } => validate_bridge(command, *timeout_secs),
    };
    ExitCode::from(code)
}
