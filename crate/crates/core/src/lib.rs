//! Constraint-generation solver for binary linear programs.
//!
//! The crate relaxes all equality constraints of a BLP, encodes the relaxed
//! quadratic program as an Ising Hamiltonian, samples a pluggable
//! ground-state subroutine (exact diagonalization, a QAOA statevector
//! simulator, or a Metropolis sampler), scores constraint violations from the
//! samples, and re-introduces the most violated constraints until a feasible
//! solution or another stopping condition is reached.

pub mod bench;
pub mod cli;
pub mod congen;
pub mod error;
pub mod hamiltonian;
pub mod problem;
pub mod subroutines;

mod util;

pub use congen::{run_congen, CongenConfig, RunResult, RunStatus, SolverSpec, Threshold};
pub use error::{Error, Result};
pub use hamiltonian::{compute_big_m, coupling_count, IsingModel, PenaltyState, QuboModel};
pub use problem::{Assignment, BlpInstance, OptResult, WecConfig};
pub use subroutines::{CostSpectrum, Distribution, QaoaParams, SampleSet, SolverOutput};
