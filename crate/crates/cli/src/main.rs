use std::fs;
use std::io::{self, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use cpa_core::codegen::{check_orthogonality, construct, reduced_residuals, uniform01_weights, CpaCode};
use cpa_core::harness::{curve_svg, run_experiment, ExperimentConfig};
use cpa_core::pattern::{NonStragglerPattern, SystemParams};
use cpa_core::polyalg::chebyshev_points;
use cpa_core::rng::{derive_seed, rng_from};
use cpa_core::simulator::{baseline_code, run_baseline_round, run_random_round, Instance, RoundTrace};
use cpa_core::solver::{feasibility_search, SolverConfig};
use serde::de::DeserializeOwned;
use serde::Serialize;
use serde_json::json;

/// Straggler-aware coded polynomial aggregation.
///
/// JSON arguments accept either an inline document or a path to a file.
#[derive(Parser)]
#[command(name = "cpa", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Build a code for a pattern and print the construction report.
    Construct {
        #[arg(long)]
        params: String,
        #[arg(long)]
        pattern: String,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Where to write the code; printed alongside the report when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Print the orthogonality and reduced residuals of a code.
    Check {
        #[arg(long)]
        code: String,
    },
    /// Run the feasibility search for a pattern.
    Solve {
        #[arg(long)]
        params: String,
        #[arg(long)]
        pattern: String,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Solver configuration overriding the defaults.
        #[arg(long)]
        solver: Option<String>,
    },
    /// Simulate protocol rounds and print one JSON trace line per round.
    Simulate {
        #[arg(long)]
        code: String,
        #[arg(long, default_value_t = 10)]
        rounds: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Rows of each data matrix.
        #[arg(long, default_value_t = 2)]
        q: usize,
        /// Columns of each data matrix.
        #[arg(long, default_value_t = 2)]
        v: usize,
    },
    /// Sweep patterns and write the feasibility curve as CSV.
    Experiment {
        #[arg(long)]
        config: String,
        /// CSV destination; written to stdout when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        plot_svg: Option<PathBuf>,
    },
    /// Decode every product individually with random stragglers.
    Baseline {
        #[arg(long)]
        params: String,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 5)]
        rounds: usize,
    },
}

enum Failure {
    Usage(String),
    Core(cpa_core::Error),
    Io(String),
}

impl From<cpa_core::Error> for Failure {
    fn from(e: cpa_core::Error) -> Self {
        Failure::Core(e)
    }
}

impl Failure {
    fn exit_code(&self) -> u8 {
        match self {
            Failure::Usage(_) => 2,
            Failure::Core(e) if e.is_validation() => 2,
            Failure::Core(_) | Failure::Io(_) => 1,
        }
    }

    fn to_json(&self) -> serde_json::Value {
        let (kind, message) = match self {
            Failure::Usage(m) => ("usage", m.clone()),
            Failure::Core(e) => (e.kind(), e.to_string()),
            Failure::Io(m) => ("io", m.clone()),
        };
        json!({ "error": { "kind": kind, "message": message } })
    }
}

type CliResult<T> = Result<T, Failure>;

fn load<T: DeserializeOwned>(arg: &str) -> CliResult<T> {
    let trimmed = arg.trim_start();
    let text = if trimmed.starts_with('{') || trimmed.starts_with('[') {
        arg.to_string()
    } else {
        fs::read_to_string(arg).map_err(|e| Failure::Usage(format!("cannot read {arg}: {e}")))?
    };
    serde_json::from_str(&text).map_err(|e| Failure::Core(e.into()))
}

fn write(path: &PathBuf, contents: &str) -> CliResult<()> {
    fs::write(path, contents).map_err(|e| Failure::Io(format!("cannot write {}: {e}", path.display())))
}

fn emit(text: &str) -> CliResult<()> {
    io::stdout()
        .lock()
        .write_all(text.as_bytes())
        .map_err(|e| Failure::Io(format!("cannot write to stdout: {e}")))
}

fn print_json(value: &impl Serialize) -> CliResult<()> {
    let text = serde_json::to_string_pretty(value).map_err(|e| Failure::Core(e.into()))?;
    emit(&format!("{text}\n"))
}

/// Chebyshev data points and seeded uniform weights for `params`.
fn setup(params: &SystemParams, seed: u64) -> CliResult<(cpa_core::polyalg::PointSet, Vec<cpa_core::Complex64>)> {
    let alpha = chebyshev_points(params.k)?;
    let weights = uniform01_weights(params.k, &mut rng_from(derive_seed(seed, &[0])));
    Ok((alpha, weights))
}

fn run(cli: Cli) -> CliResult<()> {
    match cli.command {
        Command::Construct {
            params,
            pattern,
            seed,
            out,
        } => {
            let params: SystemParams = load(&params)?;
            let pattern: NonStragglerPattern = load(&pattern)?;
            let (alpha, weights) = setup(&params, seed)?;
            let (code, report) = construct(&params, &pattern, &alpha, &weights, derive_seed(seed, &[1]))?;
            match out {
                Some(path) => {
                    let text = serde_json::to_string_pretty(&code).map_err(|e| Failure::Core(e.into()))?;
                    write(&path, &text)?;
                    print_json(&report)
                }
                None => print_json(&json!({ "report": report, "code": code })),
            }
        }
        Command::Check { code } => {
            let code: CpaCode = load(&code)?;
            let orth = check_orthogonality(&code)?;
            let reduced = reduced_residuals(&code)?;
            let reduced_max = reduced.iter().copied().fold(0.0, f64::max);
            print_json(&json!({
                "conditions": orth.count(),
                "max_orthogonality_residual": orth.max,
                "max_reduced_residual": reduced_max,
                "orthogonality_residuals": orth.residuals,
                "reduced_residuals": reduced,
            }))
        }
        Command::Solve {
            params,
            pattern,
            seed,
            solver,
        } => {
            let params: SystemParams = load(&params)?;
            let pattern: NonStragglerPattern = load(&pattern)?;
            let config: SolverConfig = match solver {
                Some(s) => load(&s)?,
                None => SolverConfig::default(),
            };
            let (alpha, weights) = setup(&params, seed)?;
            let report = feasibility_search(&alpha, &weights, &pattern, &params, &config, derive_seed(seed, &[1]))?;
            print_json(&report)
        }
        Command::Simulate {
            code,
            rounds,
            seed,
            q,
            v,
        } => {
            let code: CpaCode = load(&code)?;
            for round in 0..rounds {
                let mut rng = rng_from(derive_seed(seed, &[round as u64, 0]));
                let inst = Instance::random(code.weights.clone(), code.params.d, q, v, &mut rng)?;
                let (g, rec) = run_random_round(&inst, &code, derive_seed(seed, &[round as u64, 1]))?;
                let trace = RoundTrace {
                    round,
                    g,
                    active_set: code.pattern.sets()[g].clone(),
                    rel_error: rec.rel_error,
                };
                emit(&format!("{}\n", trace.to_json_line()))?;
            }
            Ok(())
        }
        Command::Experiment {
            config,
            out,
            plot_svg,
        } => {
            let cfg: ExperimentConfig = load(&config)?;
            let curve = run_experiment(&cfg)?;
            let csv = curve.to_csv();
            if let Some(path) = &plot_svg {
                write(path, &curve_svg(&curve, cfg.threshold()))?;
            }
            match out {
                Some(path) => {
                    write(&path, &csv)?;
                    print_json(&json!({ "threshold": cfg.threshold(), "aggregate": curve.aggregate }))
                }
                None => emit(&csv),
            }
        }
        Command::Baseline { params, seed, rounds } => {
            let params: SystemParams = load(&params)?;
            let (alpha, weights) = setup(&params, seed)?;
            let code = baseline_code(params, alpha, weights)?;
            let mut results = Vec::with_capacity(rounds);
            for round in 0..rounds {
                let mut rng = rng_from(derive_seed(seed, &[round as u64, 0]));
                let inst = Instance::random(code.weights.clone(), params.d, 2, 2, &mut rng)?;
                let (active, worst) = run_baseline_round(&inst, &code, derive_seed(seed, &[round as u64, 1]))?;
                results.push(json!({ "round": round, "active_set": active, "max_rel_error": worst }));
            }
            print_json(&json!({
                "responses_needed": params.individual_responses(),
                "responses_available": params.n - params.s,
                "rounds": results,
            }))
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let failure = Failure::Usage(e.to_string());
            eprintln!("{}", failure.to_json());
            return ExitCode::from(failure.exit_code());
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(failure) => {
            eprintln!("{}", failure.to_json());
            ExitCode::from(failure.exit_code())
        }
    }
}
