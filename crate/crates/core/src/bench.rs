//! Benchmark harness: batch instance generation, head-to-head method runs,
//! approximation-ratio and feasibility-rate aggregation, and the
//! constraint-density sweep.

use std::collections::BTreeMap;
use std::io::Write;
use std::time::Instant;

use serde::Serialize;

use crate::congen::{run_congen, CongenConfig, RunResult, SolverSpec, Threshold};
use crate::error::{Error, Result};
use crate::problem::{brute_force_opt, generate_wec, BlpInstance, OptResult, WecConfig};
use crate::util::{derive_seed, fmt_sig};

/// Benchmark methods: the plain-QAOA baseline (all constraints at once),
/// constraint generation over QAOA, and constraint generation over the exact
/// subroutine.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    PlainQaoa,
    Congen,
    ExactOracle,
}

impl Method {
    pub fn name(self) -> &'static str {
        match self {
            Method::PlainQaoa => "plain_qaoa",
            Method::Congen => "congen",
            Method::ExactOracle => "exact_oracle",
        }
    }

    pub fn parse(text: &str) -> Result<Self> {
        match text.trim() {
            "plain_qaoa" => Ok(Method::PlainQaoa),
            "congen" => Ok(Method::Congen),
            "exact_oracle" => Ok(Method::ExactOracle),
            other => Err(Error::Config(format!(
                "unknown method '{other}' (expected plain_qaoa, congen, or exact_oracle)"
            ))),
        }
    }
}

/// Suite configuration. Instance `i` is generated from the family template
/// with seed `base_seed + i`.
#[derive(Debug, Clone, PartialEq)]
pub struct SuiteConfig {
    pub family: WecConfig,
    pub n_instances: usize,
    pub methods: Vec<Method>,
    pub base_seed: u64,
    pub q: u64,
    pub qaoa_p: usize,
    pub qaoa_budget: usize,
    pub t: Threshold,
    pub max_iters: usize,
    /// Worker threads; 1 runs sequentially.
    pub jobs: usize,
    /// Record measured wall times. Off by default so identical configs
    /// produce byte-identical CSV output.
    pub include_timing: bool,
}

impl SuiteConfig {
    pub fn new(
        family: WecConfig,
        n_instances: usize,
        methods: Vec<Method>,
        base_seed: u64,
    ) -> Self {
        Self {
            family,
            n_instances,
            methods,
            base_seed,
            q: 1024,
            qaoa_p: 2,
            qaoa_budget: 300,
            t: Threshold::Max,
            max_iters: 100,
            jobs: 1,
            include_timing: false,
        }
    }

    fn validate(&self) -> Result<()> {
        if self.n_instances == 0 {
            return Err(Error::Config("need at least one instance".into()));
        }
        if self.methods.is_empty() {
            return Err(Error::Config("need at least one method".into()));
        }
        if self.jobs == 0 {
            return Err(Error::Config("jobs must be at least 1".into()));
        }
        Ok(())
    }
}

/// One method run on one instance.
#[derive(Debug, Clone, PartialEq)]
pub struct RunRecord {
    pub instance_id: usize,
    pub method: String,
    pub feasible: bool,
    pub alg_value: Option<f64>,
    pub opt_value: f64,
    pub approx_percent: f64,
    pub iterations: usize,
    pub wall_ms: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MethodSummary {
    pub mean_approx: f64,
    pub feasibility_rate: f64,
    pub n: usize,
}

pub type Summary = BTreeMap<String, MethodSummary>;

/// `100 * opt / alg` for a feasible run of this minimization problem; an
/// infeasible or absent result scores 0.
pub fn approx_percent(opt: f64, alg: Option<f64>) -> Result<f64> {
    if opt <= 0.0 {
        return Err(Error::NonPositiveOpt(opt));
    }
    Ok(match alg {
        Some(value) => 100.0 * opt / value,
        None => 0.0,
    })
}

/// The plain-QAOA baseline: constraint generation with `t = 0`, which adds
/// every constraint after the trivial first iteration and reports the best
/// feasible sample of `q` draws from the fully constrained Hamiltonian.
pub fn plain_qaoa_baseline(
    inst: &BlpInstance,
    solver: &SolverSpec,
    q: u64,
    seed: u64,
) -> Result<RunResult> {
    let cfg = CongenConfig {
        t: Threshold::Value(0.0),
        q,
        max_iters: 2,
        stop_on_first_feasible: true,
        seed,
        ..CongenConfig::default()
    };
    run_congen(inst, solver, &cfg)
}

fn congen_config(suite: &SuiteConfig, seed: u64) -> CongenConfig {
    CongenConfig {
        t: suite.t,
        q: suite.q,
        max_iters: suite.max_iters,
        stop_on_first_feasible: false,
        seed,
        ..CongenConfig::default()
    }
}

fn run_method(
    suite: &SuiteConfig,
    inst: &BlpInstance,
    method: Method,
    seed: u64,
) -> Result<RunResult> {
    match method {
        Method::PlainQaoa => plain_qaoa_baseline(
            inst,
            &SolverSpec::Qaoa {
                p: suite.qaoa_p,
                budget: suite.qaoa_budget,
            },
            suite.q,
            seed,
        ),
        Method::Congen => run_congen(
            inst,
            &SolverSpec::Qaoa {
                p: suite.qaoa_p,
                budget: suite.qaoa_budget,
            },
            &congen_config(suite, seed),
        ),
        Method::ExactOracle => run_congen(
            inst,
            &SolverSpec::Exact,
            &CongenConfig {
                stop_on_first_feasible: true,
                ..congen_config(suite, seed)
            },
        ),
    }
}

fn record_for(
    suite: &SuiteConfig,
    instance_id: usize,
    inst: &BlpInstance,
    opt: f64,
    method: Method,
) -> Result<RunRecord> {
    let seed = derive_seed(suite.base_seed, instance_id as u64, method as u64);
    let started = Instant::now();
    let run = run_method(suite, inst, method, seed)?;
    let wall_ms = if suite.include_timing {
        started.elapsed().as_millis() as u64
    } else {
        0
    };
    let alg_value = run.best.as_ref().map(|b| b.value);
    Ok(RunRecord {
        instance_id,
        method: method.name().to_string(),
        feasible: alg_value.is_some(),
        alg_value,
        opt_value: opt,
        approx_percent: approx_percent(opt, alg_value)?,
        iterations: run.total_solver_calls,
        wall_ms,
    })
}

fn oracle_value(inst: &BlpInstance) -> Result<f64> {
    match brute_force_opt(inst)? {
        OptResult::Optimal { value, .. } => Ok(value),
        OptResult::Infeasible => Err(Error::Config(format!(
            "generated instance '{}' has no feasible assignment",
            inst.name()
        ))),
    }
}

/// Runs every method on every seeded instance of the family; failures of a
/// single run become infeasible records instead of aborting the suite.
/// Records come back sorted by (instance_id, method).
pub fn run_suite(cfg: &SuiteConfig) -> Result<(Vec<RunRecord>, Summary)> {
    cfg.validate()?;
    let tasks: Vec<(usize, Method)> = (0..cfg.n_instances)
        .flat_map(|i| cfg.methods.iter().map(move |&m| (i, m)))
        .collect();

    let run_one = |&(instance_id, method): &(usize, Method)| -> Result<RunRecord> {
        let family = WecConfig {
            seed: cfg.base_seed.wrapping_add(instance_id as u64),
            ..cfg.family.clone()
        };
        let inst = generate_wec(&family)?;
        let opt = oracle_value(&inst)?;
        record_for(cfg, instance_id, &inst, opt, method).or_else(|err| match err {
            // A solver failure on one instance is a data point, not a crash.
            Error::TooLarge { .. } | Error::Config(_) => Ok(RunRecord {
                instance_id,
                method: method.name().to_string(),
                feasible: false,
                alg_value: None,
                opt_value: opt,
                approx_percent: 0.0,
                iterations: 0,
                wall_ms: 0,
            }),
            other => Err(other),
        })
    };

    let mut records: Vec<RunRecord> = if cfg.jobs > 1 {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(cfg.jobs)
            .build()
            .map_err(|e| Error::Config(format!("worker pool: {e}")))?;
        pool.install(|| {
            use rayon::prelude::*;
            tasks.par_iter().map(run_one).collect::<Result<Vec<_>>>()
        })?
    } else {
        tasks.iter().map(run_one).collect::<Result<Vec<_>>>()?
    };

    records.sort_by(|a, b| (a.instance_id, &a.method).cmp(&(b.instance_id, &b.method)));
    let summary = summarize(&records);
    Ok((records, summary))
}

/// Per-method mean approximation percentage and feasibility rate (percent).
pub fn summarize(records: &[RunRecord]) -> Summary {
    let mut by_method: BTreeMap<String, Vec<&RunRecord>> = BTreeMap::new();
    for record in records {
        by_method
            .entry(record.method.clone())
            .or_default()
            .push(record);
    }
    by_method
        .into_iter()
        .map(|(method, group)| {
            let n = group.len();
            let mean_approx = group.iter().map(|r| r.approx_percent).sum::<f64>() / n as f64;
            let feasible = group.iter().filter(|r| r.feasible).count();
            let feasibility_rate = 100.0 * feasible as f64 / n as f64;
            (
                method,
                MethodSummary {
                    mean_approx,
                    feasibility_rate,
                    n,
                },
            )
        })
        .collect()
}

/// One aggregated point of the constraint-density sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub m: usize,
    pub method: String,
    pub mean_approx: f64,
    pub stddev_approx: f64,
}

/// For each constraint count in `m_values`, generates `per_point` instances
/// with the template's set count and aggregates each method's approximation
/// percentage into mean and population standard deviation.
pub fn density_sweep(
    base: &WecConfig,
    m_values: &[usize],
    per_point: usize,
    methods: &[Method],
    base_seed: u64,
    template: &SuiteConfig,
) -> Result<Vec<SweepRow>> {
    if m_values.is_empty() {
        return Err(Error::Config("need at least one constraint count".into()));
    }
    let mut rows = Vec::new();
    for (point, &m) in m_values.iter().enumerate() {
        let family = WecConfig {
            n_elements: m,
            max_set_size: base.max_set_size.min(m),
            ..base.clone()
        };
        let suite = SuiteConfig {
            family,
            n_instances: per_point,
            methods: methods.to_vec(),
            base_seed: base_seed.wrapping_add((point * per_point) as u64),
            ..template.clone()
        };
        let (records, _) = run_suite(&suite)?;
        for &method in methods {
            let values: Vec<f64> = records
                .iter()
                .filter(|r| r.method == method.name())
                .map(|r| r.approx_percent)
                .collect();
            let mean = values.iter().sum::<f64>() / values.len() as f64;
            let variance =
                values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / values.len() as f64;
            rows.push(SweepRow {
                m,
                method: method.name().to_string(),
                mean_approx: mean,
                stddev_approx: variance.sqrt(),
            });
        }
    }
    Ok(rows)
}

/// Writes run records as RFC 4180 CSV with a header row; floats printed with
/// 6 significant digits, rows already in (instance_id, method) order.
pub fn export_csv<W: Write>(records: &[RunRecord], mut out: W) -> Result<()> {
    writeln!(
        out,
        "instance_id,method,feasible,alg_value,opt_value,approx_percent,iterations,wall_ms"
    )?;
    for r in records {
        writeln!(
            out,
            "{},{},{},{},{},{},{},{}",
            r.instance_id,
            r.method,
            r.feasible,
            r.alg_value.map(|v| fmt_sig(v, 6)).unwrap_or_default(),
            fmt_sig(r.opt_value, 6),
            fmt_sig(r.approx_percent, 6),
            r.iterations,
            r.wall_ms,
        )?;
    }
    Ok(())
}

/// Writes density-sweep rows as CSV.
pub fn export_sweep_csv<W: Write>(rows: &[SweepRow], mut out: W) -> Result<()> {
    writeln!(out, "m,method,mean_approx,stddev_approx")?;
    for r in rows {
        writeln!(
            out,
            "{},{},{},{}",
            r.m,
            r.method,
            fmt_sig(r.mean_approx, 6),
            fmt_sig(r.stddev_approx, 6),
        )?;
    }
    Ok(())
}
