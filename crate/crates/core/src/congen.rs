//! The constraint-generation loop: solve the relaxed Hamiltonian, sample,
//! check stopping criteria, score violations, and activate the most violated
//! constraints until termination.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::hamiltonian::{build_rqp, compute_big_m, coupling_count, qubo_to_ising, PenaltyState};
use crate::problem::{Assignment, BlpInstance};
use crate::subroutines::{
    cost_spectrum, effective_qubit_cap, optimize_qaoa, sample_state, solve_exact, solve_metropolis,
    QaoaParams, SampleSet, SolverOutput,
};
use crate::util::derive_seed;

const SOLVER_STREAM: u64 = 0;
const SAMPLE_STREAM: u64 = 1;

/// Violation-score threshold: a fixed value in `[0, 1]`, or the symbolic
/// maximum `‖ν‖∞` (activate only the most violated constraints).
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Threshold {
    Value(f64),
    Max,
}

/// Ground-state subroutine selection for a run. Per-iteration seeds are
/// derived from the run seed.
#[derive(Debug, Clone, PartialEq)]
pub enum SolverSpec {
    Exact,
    Qaoa {
        p: usize,
        budget: usize,
    },
    Metropolis {
        sweeps: usize,
        t_start: f64,
        t_end: f64,
    },
}

/// Loop configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct CongenConfig {
    pub t: Threshold,
    /// Samples drawn per iteration.
    pub q: u64,
    pub max_iters: usize,
    /// Multiplier applied to `t` when nothing is addable and no feasible
    /// solution exists yet.
    pub t_decay: f64,
    pub stop_on_first_feasible: bool,
    pub value_threshold: Option<f64>,
    pub feasible_ratio_threshold: Option<f64>,
    pub kappa: f64,
    pub seed: u64,
    /// Statevector cap override for the exact and QAOA subroutines.
    pub qubit_cap: Option<usize>,
}

impl Default for CongenConfig {
    fn default() -> Self {
        Self {
            t: Threshold::Max,
            q: 1024,
            max_iters: 100,
            t_decay: 0.5,
            stop_on_first_feasible: true,
            value_threshold: None,
            feasible_ratio_threshold: None,
            kappa: 1.0,
            seed: 0,
            qubit_cap: None,
        }
    }
}

impl CongenConfig {
    fn validate(&self) -> Result<()> {
        if let Threshold::Value(t) = self.t {
            if !(0.0..=1.0).contains(&t) {
                return Err(Error::Config(format!("t must be in [0, 1], got {t}")));
            }
        }
        if self.q == 0 {
            return Err(Error::Config("q must be at least 1".into()));
        }
        if self.max_iters == 0 {
            return Err(Error::Config("max_iters must be at least 1".into()));
        }
        if !(self.t_decay > 0.0 && self.t_decay < 1.0) {
            return Err(Error::Config(format!(
                "t_decay must be in (0, 1), got {}",
                self.t_decay
            )));
        }
        Ok(())
    }
}

/// One loop iteration, as exported to trace files (JSON lines).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IterationRecord {
    pub iter: usize,
    pub active_rows_before: Vec<usize>,
    pub active_rows_after: Vec<usize>,
    pub nu: Vec<f64>,
    pub tau: Vec<u8>,
    pub coupling_count: usize,
    pub best_feasible_value_so_far: Option<f64>,
    pub solver_mean_energy: f64,
    pub feasible_sample_ratio: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum RunStatus {
    /// A stopping criterion fired with a feasible solution in hand.
    Feasible,
    /// Nothing left to activate; the best found solution (if any) is final.
    NoConstraintToAdd,
    MaxIters,
    /// No feasible solution and the remaining constraints are never violated
    /// by the samples, even after decaying `t`.
    Failed,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BestSolution {
    pub x: Assignment,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunResult {
    pub status: RunStatus,
    pub best: Option<BestSolution>,
    pub trace: Vec<IterationRecord>,
    pub total_solver_calls: usize,
}

/// Sample-weighted violation frequencies: `ν_j = (1/q) Σ_ℓ V_{jℓ} ω_ℓ` where
/// `V_{jℓ} = 1` iff constraint `j` is violated by sample `ℓ`.
pub fn violation_scores(inst: &BlpInstance, samples: &SampleSet) -> Result<Vec<f64>> {
    let mut nu = vec![0.0; inst.m()];
    for (x, weight) in samples.iter() {
        for (j, violated) in inst.violations(x)?.into_iter().enumerate() {
            if violated {
                nu[j] += weight as f64;
            }
        }
    }
    let q = samples.q() as f64;
    for score in nu.iter_mut() {
        *score /= q;
    }
    Ok(nu)
}

/// Indicator of constraints to activate: `τ_j = 1` iff `ν_j >= t` and `j` is
/// still in the remainder set. For [`Threshold::Max`] the effective cutoff is
/// `‖ν‖∞`, and an all-zero `ν` selects nothing.
pub fn select_constraints(nu: &[f64], t: Threshold, remainder: &[usize]) -> Vec<u8> {
    let mut tau = vec![0u8; nu.len()];
    let cutoff = match t {
        Threshold::Value(v) => v,
        Threshold::Max => {
            let max = nu.iter().cloned().fold(0.0, f64::max);
            if max == 0.0 {
                return tau;
            }
            max
        }
    };
    for &j in remainder {
        if nu[j] >= cutoff {
            tau[j] = 1;
        }
    }
    tau
}

/// Activates the rows selected by `tau`; errors if any is already active.
pub fn apply_update(state: &PenaltyState, tau: &[u8]) -> Result<PenaltyState> {
    let rows = tau
        .iter()
        .enumerate()
        .filter_map(|(j, &flag)| (flag == 1).then_some(j));
    state.activated(rows)
}

/// Why [`check_stop`] decided to stop.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StopReason {
    FirstFeasible,
    ValueThreshold,
    FeasibleRatio,
    AllFeasible,
}

/// Evaluates the sampled feasible set, updates the best solution so far, and
/// decides whether to stop: on the first feasible sample (when configured),
/// on reaching the value threshold, on reaching the feasible-sample ratio
/// threshold, or when every sample is feasible.
pub fn check_stop(
    inst: &BlpInstance,
    samples: &SampleSet,
    cfg: &CongenConfig,
    best_so_far: Option<BestSolution>,
) -> Result<(Option<StopReason>, Option<BestSolution>)> {
    let mut best = best_so_far;
    let mut feasible_weight = 0u64;
    let mut any_feasible = false;
    for (x, weight) in samples.iter() {
        if inst.is_feasible(x)? {
            any_feasible = true;
            feasible_weight += weight;
            let value = inst.objective(x)?;
            let improves = best.as_ref().is_none_or(|b| value < b.value);
            if improves {
                best = Some(BestSolution {
                    x: x.clone(),
                    value,
                });
            }
        }
    }
    let ratio = feasible_weight as f64 / samples.q() as f64;

    // Every criterion presumes at least one feasible solution found.
    let reason = if cfg.stop_on_first_feasible && any_feasible {
        Some(StopReason::FirstFeasible)
    } else if let (Some(threshold), Some(b)) = (cfg.value_threshold, best.as_ref()) {
        (b.value <= threshold).then_some(StopReason::ValueThreshold)
    } else {
        None
    };
    let reason = reason.or_else(|| {
        cfg.feasible_ratio_threshold.and_then(|threshold| {
            (any_feasible && ratio >= threshold).then_some(StopReason::FeasibleRatio)
        })
    });
    let reason = reason.or((feasible_weight == samples.q()).then_some(StopReason::AllFeasible));

    Ok((reason, best))
}

/// Feasible-sample weight fraction of a draw.
pub fn feasible_sample_ratio(inst: &BlpInstance, samples: &SampleSet) -> Result<f64> {
    let mut feasible_weight = 0u64;
    for (x, weight) in samples.iter() {
        if inst.is_feasible(x)? {
            feasible_weight += weight;
        }
    }
    Ok(feasible_weight as f64 / samples.q() as f64)
}

// Threshold floor for the decay fallback; below it no positive score remains
// selectable and the run fails.
const T_FLOOR: f64 = 1e-12;

/// Runs the full constraint-generation scheme.
///
/// Starts from the fully relaxed problem, then iterates: build the relaxed
/// Hamiltonian, run the subroutine (warm-starting QAOA angles from the
/// previous iteration), draw `q` samples, check the stopping criteria, score
/// violations, and activate the selected constraints. When nothing is
/// selectable and no feasible solution exists, `t` is decayed multiplicatively
/// and selection retried; if every remaining score is zero the run fails.
pub fn run_congen(
    inst: &BlpInstance,
    solver: &SolverSpec,
    cfg: &CongenConfig,
) -> Result<RunResult> {
    cfg.validate()?;
    let cap = effective_qubit_cap(cfg.qubit_cap);
    if matches!(solver, SolverSpec::Exact | SolverSpec::Qaoa { .. }) && inst.n() > cap {
        return Err(Error::TooLarge { n: inst.n(), cap });
    }
    let big_m = compute_big_m(inst, cfg.kappa)?;

    let mut state = PenaltyState::empty(inst.m());
    let mut t_current = cfg.t;
    let mut best: Option<BestSolution> = None;
    let mut warm: Option<QaoaParams> = None;
    let mut trace: Vec<IterationRecord> = Vec::new();

    let finish = |status, best, trace: Vec<IterationRecord>| {
        let total_solver_calls = trace.len();
        Ok(RunResult {
            status,
            best,
            trace,
            total_solver_calls,
        })
    };

    for iter in 1..=cfg.max_iters {
        let qubo = build_rqp(inst, &state, big_m)?;
        let ising = qubo_to_ising(&qubo, inst, &state, big_m)?;
        let couplings = coupling_count(&ising);

        let solver_seed = derive_seed(cfg.seed, iter as u64, SOLVER_STREAM);
        let output: SolverOutput = match solver {
            SolverSpec::Exact => solve_exact(&ising)?,
            SolverSpec::Qaoa { p, budget } => {
                let spectrum = cost_spectrum(&ising)?;
                let out = optimize_qaoa(&spectrum, *p, warm.as_ref(), *budget, solver_seed)?;
                warm = out.params.clone();
                out
            }
            SolverSpec::Metropolis {
                sweeps,
                t_start,
                t_end,
            } => solve_metropolis(&ising, *sweeps, *t_start, *t_end, solver_seed)?,
        };

        let samples = sample_state(
            &output,
            cfg.q,
            derive_seed(cfg.seed, iter as u64, SAMPLE_STREAM),
        )?;
        let nu = violation_scores(inst, &samples)?;
        let ratio = feasible_sample_ratio(inst, &samples)?;
        let (stop, updated_best) = check_stop(inst, &samples, cfg, best.take())?;
        best = updated_best;

        let mut record = IterationRecord {
            iter,
            active_rows_before: state.active_rows().collect(),
            active_rows_after: state.active_rows().collect(),
            nu: nu.clone(),
            tau: vec![0; inst.m()],
            coupling_count: couplings,
            best_feasible_value_so_far: best.as_ref().map(|b| b.value),
            solver_mean_energy: output.mean_energy,
            feasible_sample_ratio: ratio,
        };

        if stop.is_some() {
            trace.push(record);
            return finish(RunStatus::Feasible, best, trace);
        }

        let remainder = state.remainder();
        if remainder.is_empty() {
            trace.push(record);
            return finish(RunStatus::NoConstraintToAdd, best, trace);
        }

        let mut tau = select_constraints(&nu, t_current, &remainder);
        if tau.iter().all(|&f| f == 0) {
            if best.is_some() {
                // Samples violate only constraints that are already active;
                // the model cannot change, so the best found solution stands.
                trace.push(record);
                return finish(RunStatus::NoConstraintToAdd, best, trace);
            }
            // Decay fallback: lower t until something becomes selectable.
            let mut t_value = match t_current {
                Threshold::Value(v) => v,
                Threshold::Max => nu.iter().cloned().fold(0.0, f64::max),
            };
            loop {
                t_value *= cfg.t_decay;
                if t_value < T_FLOOR {
                    trace.push(record);
                    return finish(RunStatus::Failed, None, trace);
                }
                tau = select_constraints(&nu, Threshold::Value(t_value), &remainder);
                if tau.contains(&1) {
                    t_current = Threshold::Value(t_value);
                    break;
                }
            }
        }

        state = apply_update(&state, &tau)?;
        record.tau = tau;
        record.active_rows_after = state.active_rows().collect();
        trace.push(record);
    }

    finish(RunStatus::MaxIters, best, trace)
}
