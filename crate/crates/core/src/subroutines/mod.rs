//! Pluggable ground-state subroutines: given an Ising model, produce a
//! sampleable distribution over bitstrings.
//!
//! Implementations: exact diagonalization over the cost spectrum, a p-layer
//! QAOA statevector simulator with warm-started derivative-free optimization,
//! and a Metropolis sampler.

mod metropolis;
mod qaoa;

pub use metropolis::solve_metropolis;
pub use qaoa::{expectation, optimize_qaoa, qaoa_evolve};

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::hamiltonian::IsingModel;
use crate::problem::Assignment;

/// Hard statevector guard.
pub const MAX_QUBITS: usize = 24;

/// Default practical statevector cap; overridable up to [`MAX_QUBITS`].
pub const DEFAULT_QUBIT_CAP: usize = 16;

/// Resolves an optional cap override against the default and hard limits.
pub fn effective_qubit_cap(requested: Option<usize>) -> usize {
    requested.unwrap_or(DEFAULT_QUBIT_CAP).min(MAX_QUBITS)
}

/// Ising energies of all `2^n` computational basis states.
///
/// Index bit `i` is variable `i`; a set bit means `x_i = 1`, spin `+1`.
#[derive(Debug, Clone, PartialEq)]
pub struct CostSpectrum {
    energies: Vec<f64>,
    n: usize,
}

impl CostSpectrum {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn len(&self) -> usize {
        self.energies.len()
    }

    pub fn is_empty(&self) -> bool {
        self.energies.is_empty()
    }

    pub fn energies(&self) -> &[f64] {
        &self.energies
    }

    /// Index of the minimum energy; ties break toward the lowest index.
    pub fn argmin(&self) -> usize {
        let mut best = 0;
        for (z, &e) in self.energies.iter().enumerate() {
            if e < self.energies[best] {
                best = z;
            }
        }
        best
    }

    pub fn mean(&self) -> f64 {
        self.energies.iter().sum::<f64>() / self.energies.len() as f64
    }
}

/// Evaluates the Ising energy on every basis state via a Gray-code walk
/// (one spin flip per step).
pub fn cost_spectrum(model: &IsingModel) -> Result<CostSpectrum> {
    let n = model.n();
    if n > MAX_QUBITS {
        return Err(Error::TooLarge { n, cap: MAX_QUBITS });
    }
    let size = 1usize << n;
    let mut energies = vec![0.0; size];
    let mut sigma = vec![-1i8; n];
    let mut energy = model.energy(&sigma)?;
    energies[0] = energy;
    for k in 1..size {
        let flip = k.trailing_zeros() as usize;
        energy += model.flip_delta(&sigma, flip);
        sigma[flip] = -sigma[flip];
        energies[k ^ (k >> 1)] = energy;
    }
    Ok(CostSpectrum { energies, n })
}

/// QAOA phase and mixer angles for `p` layers.
#[derive(Debug, Clone, PartialEq)]
pub struct QaoaParams {
    pub gamma: Vec<f64>,
    pub beta: Vec<f64>,
}

impl QaoaParams {
    pub fn new(gamma: Vec<f64>, beta: Vec<f64>) -> Result<Self> {
        if gamma.len() != beta.len() {
            return Err(Error::DimensionMismatch {
                what: "gamma vs beta length",
                expected: gamma.len(),
                got: beta.len(),
            });
        }
        Ok(Self { gamma, beta })
    }

    /// All angles equal; the fixed cold-start default is 0.01.
    pub fn constant(p: usize, angle: f64) -> Self {
        Self {
            gamma: vec![angle; p],
            beta: vec![angle; p],
        }
    }

    pub fn p(&self) -> usize {
        self.gamma.len()
    }

    pub(crate) fn flatten(&self) -> Vec<f64> {
        let mut flat = self.gamma.clone();
        flat.extend_from_slice(&self.beta);
        flat
    }

    pub(crate) fn unflatten(flat: &[f64]) -> Self {
        let p = flat.len() / 2;
        Self {
            gamma: flat[..p].to_vec(),
            beta: flat[p..].to_vec(),
        }
    }
}

/// A sampleable probability distribution over basis states.
#[derive(Debug, Clone, PartialEq)]
pub enum Distribution {
    /// One probability per basis state, indexed by state.
    Dense(Vec<f64>),
    /// Sparse support, sorted by basis index.
    Sparse { n: usize, entries: Vec<(u64, f64)> },
}

impl Distribution {
    pub fn point_mass(n: usize, z: u64) -> Self {
        Self::Sparse {
            n,
            entries: vec![(z, 1.0)],
        }
    }

    pub fn n(&self) -> usize {
        match self {
            Self::Dense(p) => p.len().trailing_zeros() as usize,
            Self::Sparse { n, .. } => *n,
        }
    }

    fn entries(&self) -> Vec<(u64, f64)> {
        match self {
            Self::Dense(p) => p
                .iter()
                .enumerate()
                .filter_map(|(z, &pr)| (pr > 0.0).then_some((z as u64, pr)))
                .collect(),
            Self::Sparse { entries, .. } => entries.clone(),
        }
    }

    /// Probability of the given basis state.
    pub fn prob(&self, z: u64) -> f64 {
        match self {
            Self::Dense(p) => p.get(z as usize).copied().unwrap_or(0.0),
            Self::Sparse { entries, .. } => entries
                .binary_search_by_key(&z, |&(i, _)| i)
                .map(|idx| entries[idx].1)
                .unwrap_or(0.0),
        }
    }

    /// Support state with the highest probability; ties break toward the
    /// lowest basis index.
    pub fn argmax(&self) -> u64 {
        let entries = self.entries();
        let mut best = entries[0];
        for &(z, p) in &entries[1..] {
            if p > best.1 {
                best = (z, p);
            }
        }
        best.0
    }

    /// Checks nonnegativity and unit total probability (to 1e-9).
    pub fn validate(&self) -> Result<()> {
        let entries = self.entries();
        if entries.iter().any(|&(_, p)| p < 0.0) {
            return Err(Error::Config("negative probability".into()));
        }
        let total: f64 = entries.iter().map(|&(_, p)| p).sum();
        if (total - 1.0).abs() > 1e-9 {
            return Err(Error::Config(format!(
                "probabilities sum to {total}, expected 1"
            )));
        }
        Ok(())
    }
}

/// Output of a ground-state subroutine.
#[derive(Debug, Clone, PartialEq)]
pub struct SolverOutput {
    /// Distribution over basis states realized by the subroutine.
    pub distribution: Distribution,
    /// Optimized variational parameters (QAOA only).
    pub params: Option<QaoaParams>,
    /// Mean energy of the returned distribution's state.
    pub mean_energy: f64,
    /// Lowest energy value the subroutine observed.
    pub best_energy_seen: f64,
}

/// Distinct samples (columns) with multiplicities; `Σ omega = q`.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleSet {
    columns: Vec<Assignment>,
    omega: Vec<u64>,
    q: u64,
}

impl SampleSet {
    /// Validates distinct columns, positive counts, and the total.
    pub fn new(columns: Vec<Assignment>, omega: Vec<u64>) -> Result<Self> {
        if columns.len() != omega.len() {
            return Err(Error::DimensionMismatch {
                what: "sample columns vs counts",
                expected: columns.len(),
                got: omega.len(),
            });
        }
        if omega.contains(&0) {
            return Err(Error::Config(
                "sample multiplicities must be positive".into(),
            ));
        }
        let mut seen = std::collections::BTreeSet::new();
        for col in &columns {
            if !seen.insert(col.bits().to_vec()) {
                return Err(Error::Config("duplicate sample column".into()));
            }
        }
        let q = omega.iter().sum();
        Ok(Self { columns, omega, q })
    }

    pub fn columns(&self) -> &[Assignment] {
        &self.columns
    }

    pub fn omega(&self) -> &[u64] {
        &self.omega
    }

    /// Number of distinct samples.
    pub fn s(&self) -> usize {
        self.columns.len()
    }

    /// Total draw count.
    pub fn q(&self) -> u64 {
        self.q
    }

    pub fn iter(&self) -> impl Iterator<Item = (&Assignment, u64)> {
        self.columns.iter().zip(self.omega.iter().copied())
    }
}

/// Idealized subroutine: a point mass on the minimum-energy basis state,
/// ties broken toward the lowest index.
pub fn solve_exact(model: &IsingModel) -> Result<SolverOutput> {
    let spectrum = cost_spectrum(model)?;
    let ground = spectrum.argmin();
    let energy = spectrum.energies()[ground];
    Ok(SolverOutput {
        distribution: Distribution::point_mass(spectrum.n(), ground as u64),
        params: None,
        mean_energy: energy,
        best_energy_seen: energy,
    })
}

/// Draws `q` basis states from the output distribution by inverse CDF over a
/// seeded generator and aggregates them into distinct columns.
pub fn sample_state(out: &SolverOutput, q: u64, seed: u64) -> Result<SampleSet> {
    if q == 0 {
        return Err(Error::Config("sample count must be at least 1".into()));
    }
    let entries = match &out.distribution {
        Distribution::Dense(p) => p
            .iter()
            .enumerate()
            .map(|(z, &pr)| (z as u64, pr))
            .collect::<Vec<_>>(),
        Distribution::Sparse { entries, .. } => entries.clone(),
    };
    let mut cdf = Vec::with_capacity(entries.len());
    let mut total = 0.0;
    for &(_, p) in &entries {
        total += p;
        cdf.push(total);
    }
    if total <= 0.0 {
        return Err(Error::Config("distribution has no mass".into()));
    }

    let n = out.distribution.n();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut counts: BTreeMap<u64, u64> = BTreeMap::new();
    for _ in 0..q {
        let u: f64 = rng.random::<f64>() * total;
        let idx = cdf.partition_point(|&c| c <= u).min(entries.len() - 1);
        *counts.entry(entries[idx].0).or_insert(0) += 1;
    }

    let columns = counts
        .keys()
        .map(|&z| Assignment::from_index(z, n))
        .collect();
    let omega = counts.values().copied().collect();
    SampleSet::new(columns, omega)
}
