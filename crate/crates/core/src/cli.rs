//! Command-line interface: `generate`, `solve`, `bench`, `sweep`, `convert`.
//!
//! Machine-readable JSON goes to stdout, diagnostics to stderr. Exit codes:
//! 0 success, 1 usage error, 2 runtime error. All randomness flows from
//! `--seed`. Constraint row indices are 0-based on every surface.

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::PathBuf;

use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand};

use crate::bench::{density_sweep, export_csv, export_sweep_csv, run_suite, Method, SuiteConfig};
use crate::congen::{run_congen, CongenConfig, RunResult, SolverSpec, Threshold};
use crate::error::{Error, Result};
use crate::hamiltonian::{build_rqp, compute_big_m, qubo_to_ising, PenaltyState};
use crate::problem::{load_instance, save_instance, BlpInstance, WecConfig};

/// Environment variable raising the statevector qubit cap (hard limit 24).
pub const QUBIT_CAP_ENV: &str = "CONGEN_QUBIT_CAP";

#[derive(Parser)]
#[command(
    name = "congen",
    about = "Constraint-generation solver for binary linear programs",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a weighted exact cover instance as BLP JSON.
    Generate {
        /// Number of subsets (decision variables).
        #[arg(long)]
        sets: usize,
        /// Universe size (equality constraints).
        #[arg(long)]
        elements: usize,
        /// Largest subset cardinality.
        #[arg(long = "max-size")]
        max_size: usize,
        #[arg(long, default_value_t = 1)]
        weight_min: u64,
        #[arg(long, default_value_t = 100)]
        weight_max: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Output file.
        #[arg(short, long)]
        output: PathBuf,
    },
    /// Solve a BLP JSON file with the constraint-generation loop.
    Solve {
        /// Instance file.
        #[arg(long = "in")]
        input: PathBuf,
        /// Subroutine: exact | qaoa | metropolis.
        #[arg(long, default_value = "exact")]
        solver: String,
        /// Violation threshold in [0,1], or "max" for the most violated
        /// constraint per iteration.
        #[arg(long, default_value = "max")]
        t: String,
        /// Samples per iteration.
        #[arg(long, default_value_t = 1024)]
        q: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[command(flatten)]
        solver_opts: SolverOpts,
        #[arg(long = "max-iters", default_value_t = 100)]
        max_iters: usize,
        #[arg(long = "t-decay", default_value_t = 0.5)]
        t_decay: f64,
        #[arg(long, default_value_t = 1.0)]
        kappa: f64,
        /// Keep iterating after the first feasible solution.
        #[arg(long = "keep-going")]
        keep_going: bool,
        /// Stop once the best value reaches this threshold.
        #[arg(long = "value-threshold")]
        value_threshold: Option<f64>,
        /// Stop once this fraction of samples is feasible.
        #[arg(long = "feasible-ratio")]
        feasible_ratio: Option<f64>,
        /// Write per-iteration records as JSON lines.
        #[arg(long)]
        trace: Option<PathBuf>,
    },
    /// Run a benchmark suite over a seeded instance family.
    Bench {
        /// Family as SETS,ELEMENTS,MAX_SIZE (e.g. 8,25,12).
        #[arg(long)]
        family: String,
        #[arg(long)]
        instances: usize,
        /// Comma-separated: plain_qaoa, congen, exact_oracle.
        #[arg(long)]
        methods: String,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 1024)]
        q: u64,
        #[command(flatten)]
        qaoa: QaoaOpts,
        #[arg(long, default_value = "max")]
        t: String,
        #[arg(long = "max-iters", default_value_t = 100)]
        max_iters: usize,
        #[arg(long, default_value_t = 1)]
        jobs: usize,
        /// Record measured wall times (makes the CSV non-reproducible).
        #[arg(long)]
        timing: bool,
        /// Output CSV; the summary JSON prints to stdout.
        #[arg(short, long)]
        output: PathBuf,
        #[arg(long, default_value_t = 1)]
        weight_min: u64,
        #[arg(long, default_value_t = 100)]
        weight_max: u64,
    },
    /// Sweep the constraint count of a family and aggregate per method.
    Sweep {
        #[arg(long)]
        sets: usize,
        #[arg(long = "max-size")]
        max_size: usize,
        /// Comma-separated constraint counts, e.g. 5,10,15,20,25.
        #[arg(long = "m-values")]
        m_values: String,
        #[arg(long = "per-point", default_value_t = 30)]
        per_point: usize,
        #[arg(long)]
        methods: String,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 1024)]
        q: u64,
        #[command(flatten)]
        qaoa: QaoaOpts,
        #[arg(long, default_value = "max")]
        t: String,
        #[arg(long = "max-iters", default_value_t = 100)]
        max_iters: usize,
        #[arg(long, default_value_t = 1)]
        jobs: usize,
        #[arg(short, long)]
        output: PathBuf,
    },
    /// Dump the Ising model of an instance for a set of active rows.
    Convert {
        #[arg(long = "in")]
        input: PathBuf,
        /// Comma-separated 0-based row indices; empty string for none.
        /// Defaults to all rows.
        #[arg(long)]
        rows: Option<String>,
        #[arg(long, default_value_t = 1.0)]
        kappa: f64,
    },
}

#[derive(Args)]
struct QaoaOpts {
    /// QAOA layer count.
    #[arg(long, default_value_t = 2)]
    p: usize,
    /// Optimizer evaluation budget.
    #[arg(long, default_value_t = 300)]
    budget: usize,
}

#[derive(Args)]
struct SolverOpts {
    #[command(flatten)]
    qaoa: QaoaOpts,
    /// Metropolis sweeps.
    #[arg(long, default_value_t = 2000)]
    sweeps: usize,
    /// Metropolis start temperature; defaults to twice the penalty weight
    /// so the walk can cross penalty barriers.
    #[arg(long = "t-start")]
    t_start: Option<f64>,
    /// Metropolis end temperature.
    #[arg(long = "t-end", default_value_t = 0.1)]
    t_end: f64,
}

/// Parses arguments and dispatches; returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(err) => {
            return match err.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    let _ = err.print();
                    0
                }
                _ => {
                    eprint!("{err}");
                    1
                }
            };
        }
    };
    match dispatch(cli.command) {
        Ok(()) => 0,
        Err(err) => {
            eprintln!("error: {err}");
            2
        }
    }
}

fn parse_threshold(text: &str) -> Result<Threshold> {
    if text.trim() == "max" {
        return Ok(Threshold::Max);
    }
    let value: f64 = text.trim().parse().map_err(|_| {
        Error::Config(format!(
            "t must be a number in [0,1] or 'max', got '{text}'"
        ))
    })?;
    Ok(Threshold::Value(value))
}

fn parse_methods(text: &str) -> Result<Vec<Method>> {
    let methods: Vec<Method> = text
        .split(',')
        .filter(|s| !s.trim().is_empty())
        .map(Method::parse)
        .collect::<Result<_>>()?;
    if methods.is_empty() {
        return Err(Error::Config("no methods given".into()));
    }
    Ok(methods)
}

fn parse_family(text: &str) -> Result<(usize, usize, usize)> {
    let parts: Vec<&str> = text.split(',').collect();
    if parts.len() != 3 {
        return Err(Error::Config(format!(
            "family must be SETS,ELEMENTS,MAX_SIZE, got '{text}'"
        )));
    }
    let parse = |s: &str| -> Result<usize> {
        s.trim()
            .parse()
            .map_err(|_| Error::Config(format!("invalid count '{s}' in family")))
    };
    Ok((parse(parts[0])?, parse(parts[1])?, parse(parts[2])?))
}

fn qubit_cap_from_env() -> Option<usize> {
    std::env::var(QUBIT_CAP_ENV)
        .ok()
        .and_then(|v| v.parse().ok())
}

fn read_instance(path: &PathBuf) -> Result<BlpInstance> {
    let bytes = fs::read(path)?;
    load_instance(&bytes)
}

fn solution_json(result: &RunResult) -> serde_json::Value {
    serde_json::json!({
        "status": result.status,
        "x": result.best.as_ref().map(|b| b.x.clone()),
        "value": result.best.as_ref().map(|b| b.value),
        "iterations": result.total_solver_calls,
    })
}

fn dispatch(command: Command) -> Result<()> {
    match command {
        Command::Generate {
            sets,
            elements,
            max_size,
            weight_min,
            weight_max,
            seed,
            output,
        } => {
            let cfg = WecConfig {
                n_sets: sets,
                n_elements: elements,
                max_set_size: max_size,
                weight_min,
                weight_max,
                seed,
            };
            let inst = crate::problem::generate_wec(&cfg)?;
            fs::write(&output, save_instance(&inst))?;
            eprintln!(
                "wrote {} ({} vars, {} constraints)",
                output.display(),
                inst.n(),
                inst.m()
            );
            Ok(())
        }
        Command::Solve {
            input,
            solver,
            t,
            q,
            seed,
            solver_opts,
            max_iters,
            t_decay,
            kappa,
            keep_going,
            value_threshold,
            feasible_ratio,
            trace,
        } => {
            let inst = read_instance(&input)?;
            let spec = match solver.as_str() {
                "exact" => SolverSpec::Exact,
                "qaoa" => SolverSpec::Qaoa {
                    p: solver_opts.qaoa.p,
                    budget: solver_opts.qaoa.budget,
                },
                "metropolis" => SolverSpec::Metropolis {
                    sweeps: solver_opts.sweeps,
                    t_start: solver_opts
                        .t_start
                        .unwrap_or(2.0 * compute_big_m(&inst, kappa)?),
                    t_end: solver_opts.t_end,
                },
                other => {
                    return Err(Error::Config(format!(
                        "unknown solver '{other}' (expected exact, qaoa, or metropolis)"
                    )))
                }
            };
            let cfg = CongenConfig {
                t: parse_threshold(&t)?,
                q,
                max_iters,
                t_decay,
                stop_on_first_feasible: !keep_going,
                value_threshold,
                feasible_ratio_threshold: feasible_ratio,
                kappa,
                seed,
                qubit_cap: qubit_cap_from_env(),
            };
            let result = run_congen(&inst, &spec, &cfg)?;
            if let Some(path) = trace {
                let mut file = fs::File::create(&path)?;
                for record in &result.trace {
                    serde_json::to_writer(&mut file, record)
                        .map_err(|e| Error::Parse(e.to_string()))?;
                    writeln!(file)?;
                }
            }
            println!("{}", solution_json(&result));
            Ok(())
        }
        Command::Bench {
            family,
            instances,
            methods,
            seed,
            q,
            qaoa,
            t,
            max_iters,
            jobs,
            timing,
            output,
            weight_min,
            weight_max,
        } => {
            let (sets, elements, max_size) = parse_family(&family)?;
            let family = WecConfig {
                n_sets: sets,
                n_elements: elements,
                max_set_size: max_size,
                weight_min,
                weight_max,
                seed: 0,
            };
            let suite = SuiteConfig {
                q,
                qaoa_p: qaoa.p,
                qaoa_budget: qaoa.budget,
                t: parse_threshold(&t)?,
                max_iters,
                jobs,
                include_timing: timing,
                ..SuiteConfig::new(family, instances, parse_methods(&methods)?, seed)
            };
            let (records, summary) = run_suite(&suite)?;
            let file = fs::File::create(&output)?;
            export_csv(&records, file)?;
            println!(
                "{}",
                serde_json::to_string(&summary).map_err(|e| Error::Parse(e.to_string()))?
            );
            eprintln!("wrote {} ({} records)", output.display(), records.len());
            Ok(())
        }
        Command::Sweep {
            sets,
            max_size,
            m_values,
            per_point,
            methods,
            seed,
            q,
            qaoa,
            t,
            max_iters,
            jobs,
            output,
        } => {
            let m_values: Vec<usize> = m_values
                .split(',')
                .filter(|s| !s.trim().is_empty())
                .map(|s| {
                    s.trim()
                        .parse()
                        .map_err(|_| Error::Config(format!("invalid constraint count '{s}'")))
                })
                .collect::<Result<_>>()?;
            let methods = parse_methods(&methods)?;
            let base = WecConfig {
                n_sets: sets,
                n_elements: 1,
                max_set_size: max_size,
                weight_min: 1,
                weight_max: 100,
                seed: 0,
            };
            let template = SuiteConfig {
                q,
                qaoa_p: qaoa.p,
                qaoa_budget: qaoa.budget,
                t: parse_threshold(&t)?,
                max_iters,
                jobs,
                ..SuiteConfig::new(base.clone(), 1, methods.clone(), seed)
            };
            let rows = density_sweep(&base, &m_values, per_point, &methods, seed, &template)?;
            let file = fs::File::create(&output)?;
            export_sweep_csv(&rows, file)?;
            eprintln!("wrote {} ({} rows)", output.display(), rows.len());
            Ok(())
        }
        Command::Convert { input, rows, kappa } => {
            let inst = read_instance(&input)?;
            let active: Vec<usize> = match rows {
                None => (0..inst.m()).collect(),
                Some(text) => text
                    .split(',')
                    .filter(|s| !s.trim().is_empty())
                    .map(|s| {
                        s.trim()
                            .parse()
                            .map_err(|_| Error::Config(format!("invalid row index '{s}'")))
                    })
                    .collect::<Result<_>>()?,
            };
            let state = PenaltyState::with_rows(inst.m(), active.iter().copied())?;
            let big_m = compute_big_m(&inst, kappa)?;
            let qubo = build_rqp(&inst, &state, big_m)?;
            let ising = qubo_to_ising(&qubo, &inst, &state, big_m)?;
            let j_rows: Vec<Vec<f64>> = ising.j().rows().into_iter().map(|r| r.to_vec()).collect();
            let doc = serde_json::json!({
                "J": j_rows,
                "h": ising.h().to_vec(),
                "mu": ising.mu(),
                "constant": ising.constant(),
                "M": big_m,
                "active_rows": state.active_rows().collect::<Vec<_>>(),
            });
            println!("{doc}");
            Ok(())
        }
    }
}
