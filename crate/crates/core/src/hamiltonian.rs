//! Penalized QUBO construction from an active constraint subset and its
//! conversion to an Ising model.
//!
//! With active rows `Â`, `b̂` (inactive rows zeroed) and penalty weight `M`,
//! the relaxed quadratic program is
//! `x^T (M Â^T Â) x + (c - 2 M Â^T b̂)^T x + M b̂^T b̂` over `x in {0,1}^n`.
//! Substituting `x = (σ + 1) / 2` gives the Ising form with
//! `J = -(M/4) Â^T Â`, `h = c - 2 M Â^T b̂ + M (Â^T Â) 1`, `μ = -1/2`, and an
//! additive constant carried outside the Hamiltonian, so that
//! `qubo(x) = energy(σ) + constant` exactly.

use std::collections::BTreeSet;

use ndarray::{Array1, Array2};

use crate::error::{Error, Result};
use crate::problem::{Assignment, BlpInstance};

/// Couplings below this magnitude count as absent; also the symmetry
/// tolerance of the stored matrices.
pub const COUPLING_EPS: f64 = 1e-12;

/// The set of constraint rows currently penalized in the relaxation.
///
/// Row indices are 0-based everywhere in this crate, including exported JSON.
/// The penalty matrix `Â` is never materialized with zero rows; it is the
/// pair (active set, reference to `A`).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PenaltyState {
    active: BTreeSet<usize>,
    m: usize,
}

impl PenaltyState {
    /// The fully relaxed state: no rows active.
    pub fn empty(m: usize) -> Self {
        Self {
            active: BTreeSet::new(),
            m,
        }
    }

    /// A state with the given rows active. Rows must be `< m`.
    pub fn with_rows(m: usize, rows: impl IntoIterator<Item = usize>) -> Result<Self> {
        let active: BTreeSet<usize> = rows.into_iter().collect();
        if let Some(&bad) = active.iter().find(|&&j| j >= m) {
            return Err(Error::Config(format!("row {bad} out of range (m = {m})")));
        }
        Ok(Self { active, m })
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn is_active(&self, row: usize) -> bool {
        self.active.contains(&row)
    }

    pub fn num_active(&self) -> usize {
        self.active.len()
    }

    /// Active rows in ascending order.
    pub fn active_rows(&self) -> impl Iterator<Item = usize> + '_ {
        self.active.iter().copied()
    }

    /// The remainder set: rows not yet penalized, ascending.
    pub fn remainder(&self) -> Vec<usize> {
        (0..self.m).filter(|j| !self.active.contains(j)).collect()
    }

    /// Returns a new state with `rows` added. Errors if any is active already.
    pub fn activated(&self, rows: impl IntoIterator<Item = usize>) -> Result<Self> {
        let mut next = self.clone();
        for row in rows {
            if row >= self.m {
                return Err(Error::Config(format!(
                    "row {row} out of range (m = {})",
                    self.m
                )));
            }
            if !next.active.insert(row) {
                return Err(Error::AlreadyActive { row });
            }
        }
        Ok(next)
    }
}

/// `x^T Q x + linear^T x + constant` over binary `x`.
#[derive(Debug, Clone, PartialEq)]
pub struct QuboModel {
    q: Array2<f64>,
    linear: Array1<f64>,
    constant: f64,
}

impl QuboModel {
    pub fn n(&self) -> usize {
        self.linear.len()
    }

    pub fn q(&self) -> &Array2<f64> {
        &self.q
    }

    pub fn linear(&self) -> &Array1<f64> {
        &self.linear
    }

    pub fn constant(&self) -> f64 {
        self.constant
    }

    /// Exact quadratic form evaluation.
    pub fn value(&self, x: &Assignment) -> Result<f64> {
        if x.len() != self.n() {
            return Err(Error::DimensionMismatch {
                what: "assignment length",
                expected: self.n(),
                got: x.len(),
            });
        }
        let on: Vec<usize> = x
            .bits()
            .iter()
            .enumerate()
            .filter_map(|(i, &b)| (b == 1).then_some(i))
            .collect();
        let mut v = self.constant;
        for &i in &on {
            v += self.linear[i];
            for &k in &on {
                v += self.q[[i, k]];
            }
        }
        Ok(v)
    }
}

/// Ising energy `-σ^T J σ - μ h^T σ` over spins `σ in {-1,1}^n`, with the
/// additive `constant` kept outside the Hamiltonian.
///
/// `J` stores the full symmetric matrix including its diagonal; the
/// diagonal's fixed `σ_i^2 = 1` contribution stays inside the quadratic form
/// rather than being folded into `constant`.
#[derive(Debug, Clone, PartialEq)]
pub struct IsingModel {
    j: Array2<f64>,
    h: Array1<f64>,
    mu: f64,
    constant: f64,
}

impl IsingModel {
    pub fn n(&self) -> usize {
        self.h.len()
    }

    pub fn j(&self) -> &Array2<f64> {
        &self.j
    }

    pub fn h(&self) -> &Array1<f64> {
        &self.h
    }

    /// Fixed at `-1/2` by the variable substitution.
    pub fn mu(&self) -> f64 {
        self.mu
    }

    pub fn constant(&self) -> f64 {
        self.constant
    }

    /// `-σ^T J σ - μ h^T σ`; the constant is not included.
    pub fn energy(&self, sigma: &[i8]) -> Result<f64> {
        self.check_spins(sigma)?;
        let n = self.n();
        let mut quad = 0.0;
        for i in 0..n {
            let si = f64::from(sigma[i]);
            let mut row = 0.0;
            for (k, &sk) in sigma.iter().enumerate() {
                row += self.j[[i, k]] * f64::from(sk);
            }
            quad += si * row;
        }
        let field: f64 = (0..n).map(|i| self.h[i] * f64::from(sigma[i])).sum();
        Ok(-quad - self.mu * field)
    }

    /// Energy change from flipping spin `i`, given the current configuration.
    pub fn flip_delta(&self, sigma: &[i8], i: usize) -> f64 {
        let si = f64::from(sigma[i]);
        let mut coupling = 0.0;
        for (k, &sk) in sigma.iter().enumerate() {
            if k != i {
                coupling += self.j[[i, k]] * f64::from(sk);
            }
        }
        4.0 * si * coupling + 2.0 * self.mu * self.h[i] * si
    }

    fn check_spins(&self, sigma: &[i8]) -> Result<()> {
        if sigma.len() != self.n() {
            return Err(Error::DimensionMismatch {
                what: "spin vector length",
                expected: self.n(),
                got: sigma.len(),
            });
        }
        if let Some(index) = sigma.iter().position(|&s| s != 1 && s != -1) {
            return Err(Error::InvalidSpin { index });
        }
        Ok(())
    }
}

/// Penalty weight large enough that any constraint violation costs more than
/// any objective gain: `(1/κ) Σ|c_i|`, floored at 1 for the all-zero
/// objective. For integer `A`, `b`, `κ = 1` is valid.
pub fn compute_big_m(inst: &BlpInstance, kappa: f64) -> Result<f64> {
    if kappa <= 0.0 || kappa.is_nan() {
        return Err(Error::InvalidKappa(kappa));
    }
    let sum: f64 = inst.c().iter().map(|v| v.abs()).sum();
    let m = sum / kappa;
    Ok(if m == 0.0 { 1.0 } else { m })
}

fn check_state(inst: &BlpInstance, state: &PenaltyState) -> Result<()> {
    if state.m() != inst.m() {
        return Err(Error::DimensionMismatch {
            what: "penalty state row count",
            expected: inst.m(),
            got: state.m(),
        });
    }
    Ok(())
}

/// Builds the relaxed quadratic program `Q = M Â^T Â`,
/// `linear = c - 2 M Â^T b̂`, `constant = M b̂^T b̂` from the active rows.
/// An empty active set degenerates to `Q = 0`, `linear = c`, `constant = 0`.
pub fn build_rqp(inst: &BlpInstance, state: &PenaltyState, big_m: f64) -> Result<QuboModel> {
    check_state(inst, state)?;
    assert!(big_m > 0.0, "penalty weight must be positive");
    let n = inst.n();
    let mut q = Array2::zeros((n, n));
    let mut linear = inst.c().to_owned();
    let mut constant = 0.0;
    for row_idx in state.active_rows() {
        let row = inst.a().row(row_idx);
        let rhs = inst.b()[row_idx];
        for (i, &ai) in row.iter().enumerate() {
            if ai == 0.0 {
                continue;
            }
            for (k, &ak) in row.iter().enumerate() {
                if ak != 0.0 {
                    q[[i, k]] += big_m * ai * ak;
                }
            }
            linear[i] -= 2.0 * big_m * rhs * ai;
        }
        constant += big_m * rhs * rhs;
    }
    Ok(QuboModel {
        q,
        linear,
        constant,
    })
}

/// Converts the relaxed quadratic program to its Ising model via
/// `x = (σ + 1)/2`. The returned model satisfies
/// `qubo.value(x) = energy(2x - 1) + constant` for every binary `x`.
pub fn qubo_to_ising(
    qubo: &QuboModel,
    inst: &BlpInstance,
    state: &PenaltyState,
    big_m: f64,
) -> Result<IsingModel> {
    check_state(inst, state)?;
    if qubo.n() != inst.n() {
        return Err(Error::DimensionMismatch {
            what: "qubo size",
            expected: inst.n(),
            got: qubo.n(),
        });
    }
    // + 0.0 keeps zero entries positive zero for clean serialization.
    let j = qubo.q().mapv(|v| -0.25 * v + 0.0);
    let row_sums: Array1<f64> = qubo.q().rows().into_iter().map(|r| r.sum()).collect();
    let h = qubo.linear() + &row_sums;

    // constant = (M/4) 1^T Â^T Â 1 + (1/2) 1^T c - M b̂^T Â 1 + M b̂^T b̂.
    // The cross term enters with a minus sign; the substitution above pins it
    // and the equivalence contract checks it.
    let mut cross = 0.0;
    for row_idx in state.active_rows() {
        cross += inst.b()[row_idx] * inst.a().row(row_idx).sum();
    }
    let constant = 0.25 * qubo.q().sum() + 0.5 * inst.c().sum() - big_m * cross + qubo.constant();

    Ok(IsingModel {
        j,
        h,
        mu: -0.5,
        constant,
    })
}

/// Number of strictly upper-triangular couplings with magnitude above
/// [`COUPLING_EPS`]; a proxy for Hamiltonian complexity.
pub fn coupling_count(model: &IsingModel) -> usize {
    let n = model.n();
    let mut count = 0;
    for i in 0..n {
        for k in (i + 1)..n {
            if model.j()[[i, k]].abs() > COUPLING_EPS {
                count += 1;
            }
        }
    }
    count
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problem::{generate_wec, WecConfig};
    use ndarray::array;

    fn t1() -> BlpInstance {
        BlpInstance::new(
            "t1",
            array![3.0, 4.0, 5.0],
            array![[1.0, 0.0, 1.0], [0.0, 1.0, 1.0]],
            array![1.0, 1.0],
        )
        .unwrap()
    }

    fn bits(v: &[u8]) -> Assignment {
        Assignment::new(v.to_vec()).unwrap()
    }

    #[test]
    fn big_m_from_objective() {
        assert_eq!(compute_big_m(&t1(), 1.0).unwrap(), 12.0);
        let inst = BlpInstance::new(
            "pm",
            array![-2.0, 2.0],
            ndarray::Array2::zeros((0, 2)),
            array![],
        )
        .unwrap();
        assert_eq!(compute_big_m(&inst, 0.5).unwrap(), 8.0);
        let zero = BlpInstance::new(
            "z",
            array![0.0, 0.0],
            ndarray::Array2::zeros((0, 2)),
            array![],
        )
        .unwrap();
        assert_eq!(compute_big_m(&zero, 1.0).unwrap(), 1.0);
        assert!(matches!(
            compute_big_m(&zero, 0.0),
            Err(Error::InvalidKappa(_))
        ));
    }

    #[test]
    fn rqp_with_all_rows_active() {
        let inst = t1();
        let state = PenaltyState::with_rows(2, [0, 1]).unwrap();
        let qubo = build_rqp(&inst, &state, 12.0).unwrap();
        assert_eq!(
            qubo.q(),
            &array![[12.0, 0.0, 12.0], [0.0, 12.0, 12.0], [12.0, 12.0, 24.0]]
        );
        assert_eq!(qubo.linear().to_vec(), vec![-21.0, -20.0, -43.0]);
        assert_eq!(qubo.constant(), 24.0);
        assert_eq!(qubo.value(&bits(&[0, 0, 1])).unwrap(), 5.0);
        assert_eq!(qubo.value(&bits(&[0, 0, 0])).unwrap(), 24.0);
    }

    #[test]
    fn rqp_with_no_rows_is_trivial() {
        let inst = t1();
        let qubo = build_rqp(&inst, &PenaltyState::empty(2), 12.0).unwrap();
        assert!(qubo.q().iter().all(|&v| v == 0.0));
        assert_eq!(qubo.linear().to_vec(), vec![3.0, 4.0, 5.0]);
        assert_eq!(qubo.constant(), 0.0);
        assert_eq!(qubo.value(&bits(&[1, 1, 1])).unwrap(), 12.0);
    }

    #[test]
    fn rqp_with_single_row() {
        let inst = t1();
        let state = PenaltyState::with_rows(2, [0]).unwrap();
        let qubo = build_rqp(&inst, &state, 12.0).unwrap();
        assert_eq!(
            qubo.q(),
            &array![[12.0, 0.0, 12.0], [0.0, 0.0, 0.0], [12.0, 0.0, 12.0]]
        );
        assert_eq!(qubo.linear().to_vec(), vec![-21.0, 4.0, -19.0]);
        assert_eq!(qubo.constant(), 12.0);
    }

    #[test]
    fn ising_of_full_penalty() {
        let inst = t1();
        let state = PenaltyState::with_rows(2, [0, 1]).unwrap();
        let qubo = build_rqp(&inst, &state, 12.0).unwrap();
        let ising = qubo_to_ising(&qubo, &inst, &state, 12.0).unwrap();
        assert_eq!(
            ising.j(),
            &array![[-3.0, 0.0, -3.0], [0.0, -3.0, -3.0], [-3.0, -3.0, -6.0]]
        );
        assert_eq!(ising.h().to_vec(), vec![3.0, 4.0, 5.0]);
        assert_eq!(ising.mu(), -0.5);
        assert_eq!(ising.constant(), 6.0);
        assert_eq!(ising.energy(&[-1, -1, 1]).unwrap(), -1.0);
        assert_eq!(ising.energy(&[-1, -1, -1]).unwrap(), 18.0);
    }

    #[test]
    fn ising_of_empty_penalty() {
        let inst = t1();
        let state = PenaltyState::empty(2);
        let qubo = build_rqp(&inst, &state, 12.0).unwrap();
        let ising = qubo_to_ising(&qubo, &inst, &state, 12.0).unwrap();
        assert!(ising.j().iter().all(|&v| v == 0.0));
        assert_eq!(ising.h().to_vec(), vec![3.0, 4.0, 5.0]);
        assert_eq!(ising.constant(), 6.0);
        assert_eq!(coupling_count(&ising), 0);
    }

    #[test]
    fn energy_rejects_bad_spins() {
        let inst = t1();
        let state = PenaltyState::empty(2);
        let qubo = build_rqp(&inst, &state, 12.0).unwrap();
        let ising = qubo_to_ising(&qubo, &inst, &state, 12.0).unwrap();
        assert!(matches!(
            ising.energy(&[-1, 0, 1]),
            Err(Error::InvalidSpin { index: 1 })
        ));
        assert!(matches!(
            ising.energy(&[-1, 1]),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn coupling_count_of_t1() {
        let inst = t1();
        let state = PenaltyState::with_rows(2, [0, 1]).unwrap();
        let qubo = build_rqp(&inst, &state, 12.0).unwrap();
        let ising = qubo_to_ising(&qubo, &inst, &state, 12.0).unwrap();
        // J_12 = 0 because rows of A are orthogonal on columns 1 and 2.
        assert_eq!(coupling_count(&ising), 2);
    }

    #[test]
    fn coupling_count_single_row_closed_form() {
        // One active row with k nonzeros yields k(k-1)/2 couplings.
        let a = array![[1.0, 0.0, 2.0, -1.0, 0.0, 3.0]];
        let inst = BlpInstance::new("row", ndarray::Array1::ones(6), a, array![1.0]).unwrap();
        let state = PenaltyState::with_rows(1, [0]).unwrap();
        let qubo = build_rqp(&inst, &state, 7.0).unwrap();
        let ising = qubo_to_ising(&qubo, &inst, &state, 7.0).unwrap();
        assert_eq!(coupling_count(&ising), 4 * 3 / 2);
    }

    #[test]
    fn penalty_state_updates() {
        let state = PenaltyState::empty(3);
        let one = state.activated([1]).unwrap();
        assert!(one.is_active(1));
        assert_eq!(one.remainder(), vec![0, 2]);
        assert!(matches!(
            one.activated([1]),
            Err(Error::AlreadyActive { row: 1 })
        ));
        assert!(PenaltyState::with_rows(2, [5]).is_err());
    }

    /// Exhaustive equivalence and penalty checks over random planted
    /// instances and random active subsets.
    #[test]
    fn qubo_ising_equivalence_exhaustive() {
        for seed in 0..30u64 {
            let cfg = WecConfig::new(5, 4, 3, seed);
            let inst = generate_wec(&cfg).unwrap();
            let m = inst.m();
            // All 2^m active subsets for this small m.
            for mask in 0..(1u32 << m) {
                let rows = (0..m).filter(|j| mask >> j & 1 == 1);
                let state = PenaltyState::with_rows(m, rows).unwrap();
                let big_m = compute_big_m(&inst, 1.0).unwrap();
                let qubo = build_rqp(&inst, &state, big_m).unwrap();
                let ising = qubo_to_ising(&qubo, &inst, &state, big_m).unwrap();
                for z in 0..(1u64 << inst.n()) {
                    let x = Assignment::from_index(z, inst.n());
                    let lhs = qubo.value(&x).unwrap();
                    let rhs = ising.energy(&x.spins()).unwrap() + ising.constant();
                    assert!(
                        (lhs - rhs).abs() <= 1e-9,
                        "seed {seed} mask {mask} z {z}: {lhs} vs {rhs}"
                    );
                }
            }
        }
    }

    #[test]
    fn full_penalty_separates_feasible_from_infeasible() {
        for seed in 100..140u64 {
            let cfg = WecConfig::new(6, 4, 3, seed);
            let inst = generate_wec(&cfg).unwrap();
            let state = PenaltyState::with_rows(inst.m(), 0..inst.m()).unwrap();
            let big_m = compute_big_m(&inst, 1.0).unwrap();
            let qubo = build_rqp(&inst, &state, big_m).unwrap();
            let mut worst_feasible = f64::NEG_INFINITY;
            let mut best_infeasible = f64::INFINITY;
            for z in 0..(1u64 << inst.n()) {
                let x = Assignment::from_index(z, inst.n());
                let v = qubo.value(&x).unwrap();
                if inst.is_feasible(&x).unwrap() {
                    worst_feasible = worst_feasible.max(v);
                } else {
                    best_infeasible = best_infeasible.min(v);
                }
            }
            assert!(worst_feasible < best_infeasible, "seed {seed}");
        }
    }

    #[test]
    fn penalty_is_nonnegative_and_tight() {
        let inst = t1();
        let state = PenaltyState::with_rows(2, [0, 1]).unwrap();
        let big_m = compute_big_m(&inst, 1.0).unwrap();
        let qubo = build_rqp(&inst, &state, big_m).unwrap();
        for z in 0..8u64 {
            let x = Assignment::from_index(z, 3);
            let gap = qubo.value(&x).unwrap() - inst.objective(&x).unwrap();
            assert!(gap >= 0.0);
            let feasible = inst.is_feasible(&x).unwrap();
            assert_eq!(gap == 0.0, feasible, "z {z}");
        }
    }

    #[test]
    fn couplings_grow_with_nested_active_sets() {
        for seed in 0..10u64 {
            let cfg = WecConfig::new(6, 5, 3, seed);
            let inst = generate_wec(&cfg).unwrap();
            let big_m = compute_big_m(&inst, 1.0).unwrap();
            let mut previous = 0;
            for upto in 0..=inst.m() {
                let state = PenaltyState::with_rows(inst.m(), 0..upto).unwrap();
                let qubo = build_rqp(&inst, &state, big_m).unwrap();
                let ising = qubo_to_ising(&qubo, &inst, &state, big_m).unwrap();
                let count = coupling_count(&ising);
                assert!(count >= previous);
                previous = count;
            }
        }
    }
}
