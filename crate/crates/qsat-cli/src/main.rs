//! `qsat`: decide, compile, verify, combine and qubitize instances from the
//! command line. JSON goes to stdout, diagnostics to stderr.
//!
//! Exit codes: 0 accept or success, 1 reject, 2 usage or input error.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use qsat_core::combinators::parse_combo;
use qsat_core::oracle::{self, OracleConfig};
use qsat_core::{
    compile, compile_truncated, decide, decide_combo, dequbitize, direct_product, direct_sum,
    export_dot, parse_circuit, parse_instance, qubitize_instance, serialize, Decision, Padding,
    Variant,
};

#[derive(Parser)]
#[command(name = "qsat", version, about = "Quantum satisfiability workbench")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the decision algorithm on an instance or a combination.
    Decide {
        #[arg(long)]
        instance: PathBuf,
        /// Witness bits such as `0110`, one per witness qudit in ascending order.
        #[arg(long)]
        witness: Option<String>,
        /// Witness bits for the right operand of a combination.
        #[arg(long)]
        witness_right: Option<String>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = qsat_core::deciders::DEFAULT_REPS)]
        reps: usize,
    },
    /// Compile a circuit into an instance of the target variant.
    Compile {
        #[arg(long)]
        circuit: PathBuf,
        #[arg(long)]
        target: Target,
        /// Replace the first logical of gate T by a fresh qudit.
        #[arg(long)]
        truncate: Option<usize>,
    },
    /// Exact null space and spectral gap of an instance or a combination.
    Oracle {
        #[arg(long)]
        instance: PathBuf,
        #[arg(long)]
        budget: Option<usize>,
        #[arg(long)]
        dense_budget: Option<usize>,
        #[arg(long)]
        kernel_tol: Option<f64>,
    },
    /// Direct product or direct sum of two instances.
    Combine {
        #[arg(long)]
        op: Op,
        #[arg(long)]
        left: PathBuf,
        #[arg(long)]
        right: PathBuf,
    },
    /// Map an instance to qubits, or back with `--inverse`.
    Qubitize {
        #[arg(long)]
        instance: PathBuf,
        #[arg(long, value_enum, default_value_t = PaddingArg::Minimal)]
        padding: PaddingArg,
        #[arg(long)]
        inverse: bool,
    },
    /// Graphviz rendering of the clause graph.
    ExportDot {
        #[arg(long)]
        instance: PathBuf,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Target {
    #[value(name = "LCT", alias = "lct")]
    Lct,
    #[value(name = "SLCT", alias = "slct")]
    Slct,
    #[value(name = "WitnessedSLCT", alias = "witnessed")]
    Witnessed,
    #[value(name = "ClassicalSLCT", alias = "classical")]
    Classical,
}

impl From<Target> for Variant {
    fn from(t: Target) -> Variant {
        match t {
            Target::Lct => Variant::Lct,
            Target::Slct => Variant::Slct,
            Target::Witnessed => Variant::WitnessedSlct,
            Target::Classical => Variant::ClassicalSlct,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum Op {
    Product,
    Sum,
}

#[derive(Clone, Copy, ValueEnum)]
enum PaddingArg {
    Minimal,
    P2,
}

/// Failure modes other than a clean reject.
struct Failure(String);

impl<E: std::fmt::Display> From<E> for Failure {
    fn from(e: E) -> Self {
        Failure(e.to_string())
    }
}

fn read(path: &Path) -> Result<String, Failure> {
    std::fs::read_to_string(path).map_err(|e| Failure(format!("{}: {e}", path.display())))
}

fn bits(s: &str) -> Result<Vec<bool>, Failure> {
    s.chars()
        .map(|c| match c {
            '0' => Ok(false),
            '1' => Ok(true),
            _ => Err(Failure(format!("witness must be a string of 0 and 1, found {c:?}"))),
        })
        .collect()
}

fn is_combo(text: &str) -> bool {
    serde_json::from_str::<serde_json::Value>(text)
        .map(|v| v.get("op").is_some())
        .unwrap_or(false)
}

fn verdict(d: &Decision) -> ExitCode {
    println!("{}", d.to_json());
    if d.accept {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(1)
    }
}

fn run(cmd: Command) -> Result<ExitCode, Failure> {
    match cmd {
        Command::Decide { instance, witness, witness_right, seed, reps } => {
            let text = read(&instance)?;
            let w = witness.as_deref().map(bits).transpose()?;
            if is_combo(&text) {
                let c = parse_combo(&text)?;
                let wr = witness_right.as_deref().map(bits).transpose()?;
                Ok(verdict(&decide_combo(&c, w.as_deref(), wr.as_deref(), reps, seed)?))
            } else {
                let inst = parse_instance(&text)?;
                Ok(verdict(&decide(&inst, w.as_deref(), reps, seed)?))
            }
        }
        Command::Compile { circuit, target, truncate } => {
            let c = parse_circuit(&read(&circuit)?)?;
            let inst = match truncate {
                Some(t) => compile_truncated(&c, target.into(), t)?,
                None => compile(&c, target.into())?,
            };
            println!("{}", serialize(&inst));
            Ok(ExitCode::SUCCESS)
        }
        Command::Oracle { instance, budget, dense_budget, kernel_tol } => {
            let mut cfg = OracleConfig::default();
            if let Some(b) = budget {
                cfg.budget = b;
            }
            if let Some(b) = dense_budget {
                cfg.dense_budget = b;
            }
            if let Some(t) = kernel_tol {
                cfg.kernel_tol = t;
            }
            let text = read(&instance)?;
            if is_combo(&text) {
                let c = parse_combo(&text)?;
                let n = c.nullspace_dim(&cfg)?;
                let out = serde_json::json!({
                    "nullspace_dim": n,
                    "frustration_free": n > 0,
                });
                println!("{out}");
            } else {
                let r = oracle::report(&parse_instance(&text)?, &cfg)?;
                println!("{}", serde_json::to_string(&r)?);
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::Combine { op, left, right } => {
            let a = parse_instance(&read(&left)?)?;
            let b = parse_instance(&read(&right)?)?;
            let c = match op {
                Op::Product => direct_product(&a, &b),
                Op::Sum => direct_sum(&a, &b),
            };
            println!("{}", c.to_json());
            Ok(ExitCode::SUCCESS)
        }
        Command::Qubitize { instance, padding, inverse } => {
            let inst = parse_instance(&read(&instance)?)?;
            let out = if inverse {
                dequbitize(&inst)
            } else {
                let p = match padding {
                    PaddingArg::Minimal => Padding::Minimal,
                    PaddingArg::P2 => Padding::PowerOfTwo,
                };
                qubitize_instance(&inst, p)?
            };
            println!("{}", serialize(&out));
            Ok(ExitCode::SUCCESS)
        }
        Command::ExportDot { instance } => {
            print!("{}", export_dot(&parse_instance(&read(&instance)?)?));
            Ok(ExitCode::SUCCESS)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(code) => code,
        Err(Failure(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}
