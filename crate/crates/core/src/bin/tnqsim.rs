use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use serde_json::json;

use tnqsim::circuit::{emit_circuit, parse_circuit, Circuit};
use tnqsim::engine::{self, Backend, Family, FamilySpec, RunConfig, RNG_ALGORITHM, SCHEMA_VERSION};
use tnqsim::error::{Error, Result};
use tnqsim::transform::{cost_estimate, d_profile, lower_to_adjacent, reduce, Stage};

#[derive(Parser)]
#[command(name = "tnqsim", version, about = "Exact circuit simulation with cost set by gate crossings per line")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Per-line crossing counts, D and the cost estimate.
    Analyze {
        file: PathBuf,
        #[arg(long, default_value = "raw")]
        stage: Stage,
    },
    /// Fold one-qubit gates and fuse same-pair gates.
    Reduce {
        file: PathBuf,
        #[arg(short = 'o', long = "output")]
        output: PathBuf,
    },
    /// Replace long-range gates with adjacent swaps.
    Lower {
        file: PathBuf,
        #[arg(short = 'o', long = "output")]
        output: PathBuf,
    },
    /// Simulate and print a JSON run report.
    Run {
        file: PathBuf,
        #[arg(long)]
        backend: Backend,
        #[arg(long, default_value_t = 0)]
        shots: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        exact: bool,
        #[arg(long = "chi-trace")]
        chi_trace: bool,
        #[arg(long = "max-chi")]
        max_chi: Option<usize>,
        #[arg(long = "max-frontier")]
        max_frontier: Option<usize>,
        #[arg(long = "max-dense-qubits")]
        max_dense_qubits: Option<usize>,
    },
    /// Time generated circuit families.
    Bench {
        #[arg(long)]
        family: Family,
        /// Line count (column height for clusters); comma-separated for several sizes.
        #[arg(long, value_delimiter = ',', required = true)]
        n: Vec<usize>,
        /// Cluster column count.
        #[arg(long)]
        m: Option<usize>,
        /// Gate count for the random family.
        #[arg(long)]
        count: Option<usize>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value = "mps")]
        backend: Backend,
        #[arg(long = "max-chi")]
        max_chi: Option<usize>,
    },
}

fn load(path: &Path) -> Result<Circuit> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
    Ok(parse_circuit(&text)?)
}

fn save(path: &Path, c: &Circuit) -> Result<()> {
    std::fs::write(path, emit_circuit(c)).map_err(|e| Error::Config(format!("{}: {e}", path.display())))
}

fn print_json(v: &impl serde::Serialize) -> Result<()> {
    let text = serde_json::to_string_pretty(v).map_err(|e| Error::Config(e.to_string()))?;
    println!("{text}");
    Ok(())
}

fn execute(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Analyze { file, stage } => {
            let raw = load(&file)?;
            let c = match stage {
                Stage::Raw => raw,
                Stage::Reduced => reduce(&raw),
                Stage::Lowered => lower_to_adjacent(&reduce(&raw)),
            };
            let p = d_profile(&c, stage);
            print_json(&json!({
                "schema_version": SCHEMA_VERSION,
                "rng_algorithm": RNG_ALGORITHM,
                "n": c.n_qubits,
                "stage": stage,
                "per_line": p.per_line,
                "D": p.d_max,
                "gate_count": c.gate_count(),
                "two_qubit_gate_count": c.two_qubit_gate_count(),
                "adaptive": c.is_adaptive(),
                "cost_estimate": cost_estimate(&p),
            }))
        }
        Command::Reduce { file, output } => save(&output, &reduce(&load(&file)?)),
        Command::Lower { file, output } => save(&output, &lower_to_adjacent(&load(&file)?)),
        Command::Run { file, backend, shots, seed, exact, chi_trace, max_chi, max_frontier, max_dense_qubits } => {
            let c = load(&file)?;
            let mut cfg = RunConfig::new(backend).shots(shots).seed(seed);
            cfg.report.exact_probs = exact;
            cfg.report.chi_trace = chi_trace;
            if let Some(v) = max_chi {
                cfg.caps.max_chi = v;
            }
            if let Some(v) = max_frontier {
                cfg.caps.max_frontier = v;
            }
            if let Some(v) = max_dense_qubits {
                cfg.caps.max_dense_qubits = v;
            }
            print_json(&engine::run(&c, &cfg)?)
        }
        Command::Bench { family, n, m, count, seed, backend, max_chi } => {
            let specs: Vec<FamilySpec> =
                n.iter().map(|&n| FamilySpec { family, n, m, gates: count, seed }).collect();
            let mut cfg = RunConfig::new(backend).seed(seed);
            if let Some(v) = max_chi {
                cfg.caps.max_chi = v;
            }
            print_json(&engine::bench(&specs, &cfg))
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("tnqsim: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
