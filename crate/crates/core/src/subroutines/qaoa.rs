//! QAOA statevector simulation and derivative-free angle optimization.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

use super::{CostSpectrum, Distribution, QaoaParams, SolverOutput};

/// Applies `p` alternating layers `e^{-i beta_l B} e^{-i gamma_l C}` to the
/// uniform superposition, where `C` is diagonal with the spectrum's energies
/// and `B` is the transverse mixer `Σ X_i`. `p = 0` returns the uniform
/// superposition itself.
pub fn qaoa_evolve(spec: &CostSpectrum, params: &QaoaParams) -> Vec<Complex64> {
    let n = spec.n();
    let size = spec.len();
    let amp = 1.0 / (size as f64).sqrt();
    let mut psi = vec![Complex64::new(amp, 0.0); size];
    for layer in 0..params.p() {
        let gamma = params.gamma[layer];
        let beta = params.beta[layer];
        for (state, energy) in psi.iter_mut().zip(spec.energies()) {
            *state *= Complex64::from_polar(1.0, -gamma * energy);
        }
        // e^{-i beta X} = [[cos b, -i sin b], [-i sin b, cos b]] per qubit.
        let cos_b = beta.cos();
        let msin_b = Complex64::new(0.0, -beta.sin());
        for qubit in 0..n {
            let bit = 1usize << qubit;
            for z0 in 0..size {
                if z0 & bit == 0 {
                    let z1 = z0 | bit;
                    let a0 = psi[z0];
                    let a1 = psi[z1];
                    psi[z0] = cos_b * a0 + msin_b * a1;
                    psi[z1] = msin_b * a0 + cos_b * a1;
                }
            }
        }
    }
    psi
}

/// `Σ_z |ψ_z|^2 E_z` for a normalized state.
pub fn expectation(state: &[Complex64], spec: &CostSpectrum) -> Result<f64> {
    if state.len() != spec.len() {
        return Err(Error::DimensionMismatch {
            what: "state length vs spectrum",
            expected: spec.len(),
            got: state.len(),
        });
    }
    let norm_sq: f64 = state.iter().map(|a| a.norm_sqr()).sum();
    let deviation = (norm_sq.sqrt() - 1.0).abs();
    if deviation > 1e-6 {
        return Err(Error::NotNormalized { deviation });
    }
    Ok(state
        .iter()
        .zip(spec.energies())
        .map(|(a, &e)| a.norm_sqr() * e)
        .sum())
}

// Nelder-Mead coefficients (fixed): reflection 1, expansion 2,
// contraction 0.5, shrink 0.5.
const REFLECT: f64 = 1.0;
const EXPAND: f64 = 2.0;
const CONTRACT: f64 = 0.5;
const SHRINK: f64 = 0.5;

const ANGLE_LO: f64 = -std::f64::consts::PI;
const ANGLE_HI: f64 = std::f64::consts::PI;

/// Cold-start angle used when no warm start is supplied.
pub const DEFAULT_INIT_ANGLE: f64 = 0.01;

struct Objective<'a> {
    spec: &'a CostSpectrum,
    evals: usize,
    budget: usize,
    best: (Vec<f64>, f64),
}

impl<'a> Objective<'a> {
    fn eval(&mut self, point: &[f64]) -> Option<f64> {
        if self.evals >= self.budget {
            return None;
        }
        self.evals += 1;
        let params = QaoaParams::unflatten(point);
        let psi = qaoa_evolve(self.spec, &params);
        let value = expectation(&psi, self.spec).expect("evolved state stays normalized");
        if value < self.best.1 {
            self.best = (point.to_vec(), value);
        }
        Some(value)
    }
}

fn clamp_angles(point: &mut [f64]) {
    for v in point.iter_mut() {
        *v = v.clamp(ANGLE_LO, ANGLE_HI);
    }
}

/// Minimizes the QAOA expectation over `(gamma, beta) in [-pi, pi]^{2p}` with
/// a budget-bounded Nelder-Mead simplex (coefficients above; the budget is
/// the only stopping rule). Starts from `init` when given, else from all
/// angles at [`DEFAULT_INIT_ANGLE`]. The seed perturbs the initial simplex
/// edge lengths; results are deterministic per (seed, budget, init).
pub fn optimize_qaoa(
    spec: &CostSpectrum,
    p: usize,
    init: Option<&QaoaParams>,
    budget: usize,
    seed: u64,
) -> Result<SolverOutput> {
    if p == 0 {
        return Err(Error::Config("QAOA needs at least one layer".into()));
    }
    if budget == 0 {
        return Err(Error::Config("optimizer budget must be at least 1".into()));
    }
    if let Some(params) = init {
        if params.p() != p {
            return Err(Error::DimensionMismatch {
                what: "warm start layer count",
                expected: p,
                got: params.p(),
            });
        }
    }
    let dim = 2 * p;
    let mut start = match init {
        Some(params) => params.flatten(),
        None => vec![DEFAULT_INIT_ANGLE; dim],
    };
    clamp_angles(&mut start);

    let mut objective = Objective {
        spec,
        evals: 0,
        budget,
        best: (start.clone(), f64::INFINITY),
    };
    objective.eval(&start);

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut simplex: Vec<(Vec<f64>, f64)> = vec![(start.clone(), objective.best.1)];
    for d in 0..dim {
        let mut vertex = start.clone();
        vertex[d] += rng.random_range(0.08..0.12);
        clamp_angles(&mut vertex);
        match objective.eval(&vertex) {
            Some(value) => simplex.push((vertex, value)),
            None => break,
        }
    }

    if simplex.len() == dim + 1 {
        nelder_mead(&mut simplex, &mut objective);
    }

    let (best_point, best_value) = objective.best;
    let params = QaoaParams::unflatten(&best_point);
    let psi = qaoa_evolve(spec, &params);
    let distribution = Distribution::Dense(psi.iter().map(|a| a.norm_sqr()).collect());
    Ok(SolverOutput {
        distribution,
        params: Some(params),
        mean_energy: best_value,
        best_energy_seen: best_value,
    })
}

fn nelder_mead(simplex: &mut [(Vec<f64>, f64)], objective: &mut Objective<'_>) {
    let dim = simplex[0].0.len();
    loop {
        simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
        let worst = simplex.len() - 1;
        let mut centroid = vec![0.0; dim];
        for (point, _) in simplex.iter().take(worst) {
            for (c, &v) in centroid.iter_mut().zip(point) {
                *c += v;
            }
        }
        for c in centroid.iter_mut() {
            *c /= worst as f64;
        }

        let towards = |coef: f64| -> Vec<f64> {
            let mut point: Vec<f64> = centroid
                .iter()
                .zip(&simplex[worst].0)
                .map(|(&c, &w)| c + coef * (c - w))
                .collect();
            clamp_angles(&mut point);
            point
        };

        let reflected = towards(REFLECT);
        let Some(fr) = objective.eval(&reflected) else {
            return;
        };

        if fr < simplex[0].1 {
            let expanded = towards(EXPAND);
            let Some(fe) = objective.eval(&expanded) else {
                return;
            };
            simplex[worst] = if fe < fr {
                (expanded, fe)
            } else {
                (reflected, fr)
            };
            continue;
        }
        if fr < simplex[worst - 1].1 {
            simplex[worst] = (reflected, fr);
            continue;
        }

        let contracted = if fr < simplex[worst].1 {
            // outside contraction
            let mut point: Vec<f64> = centroid
                .iter()
                .zip(&reflected)
                .map(|(&c, &r)| c + CONTRACT * (r - c))
                .collect();
            clamp_angles(&mut point);
            point
        } else {
            // inside contraction
            let mut point: Vec<f64> = centroid
                .iter()
                .zip(&simplex[worst].0)
                .map(|(&c, &w)| c + CONTRACT * (w - c))
                .collect();
            clamp_angles(&mut point);
            point
        };
        let Some(fc) = objective.eval(&contracted) else {
            return;
        };
        if fc < fr.min(simplex[worst].1) {
            simplex[worst] = (contracted, fc);
            continue;
        }

        // Shrink toward the best vertex.
        let best = simplex[0].0.clone();
        for vertex in simplex.iter_mut().skip(1) {
            let mut point: Vec<f64> = best
                .iter()
                .zip(&vertex.0)
                .map(|(&b, &v)| b + SHRINK * (v - b))
                .collect();
            clamp_angles(&mut point);
            let Some(fv) = objective.eval(&point) else {
                return;
            };
            *vertex = (point, fv);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::super::tests::{field_model, t1_model};
    use super::super::{cost_spectrum, CostSpectrum};
    use super::*;

    fn uniform_expectation(spec: &CostSpectrum) -> f64 {
        spec.mean()
    }

    #[test]
    fn zero_layers_give_uniform_superposition() {
        let spec = cost_spectrum(&t1_model(&[0, 1])).unwrap();
        let psi = qaoa_evolve(&spec, &QaoaParams::constant(0, 0.0));
        let amp = 1.0 / (8f64).sqrt();
        for a in &psi {
            assert!((a.re - amp).abs() < 1e-12 && a.im.abs() < 1e-12);
        }
        let e = expectation(&psi, &spec).unwrap();
        assert!((e - uniform_expectation(&spec)).abs() < 1e-9);
    }

    #[test]
    fn zero_angles_are_identity_layers() {
        let spec = cost_spectrum(&t1_model(&[0, 1])).unwrap();
        let psi = qaoa_evolve(&spec, &QaoaParams::constant(1, 0.0));
        let amp = 1.0 / (8f64).sqrt();
        for a in &psi {
            assert!((a - Complex64::new(amp, 0.0)).norm() < 1e-12);
        }
    }

    #[test]
    fn single_qubit_layer_matches_direct_matrix_product() {
        // n = 1, energies (-1, +1): cost phase then the 2x2 mixer.
        let spec = cost_spectrum(&field_model(vec![2.0])).unwrap();
        assert_eq!(spec.energies(), &[-1.0, 1.0]);
        for &(gamma, beta) in &[
            (std::f64::consts::FRAC_PI_2, std::f64::consts::FRAC_PI_4),
            (0.3, 1.1),
            (-0.7, 0.2),
        ] {
            let params = QaoaParams::new(vec![gamma], vec![beta]).unwrap();
            let psi = qaoa_evolve(&spec, &params);

            let amp = 1.0 / 2f64.sqrt();
            let phased = [
                Complex64::from_polar(amp, gamma),
                Complex64::from_polar(amp, -gamma),
            ];
            let (c, s) = (beta.cos(), beta.sin());
            let mi = Complex64::new(0.0, -1.0);
            let expected = [
                c * phased[0] + mi * s * phased[1],
                mi * s * phased[0] + c * phased[1],
            ];
            assert!((psi[0] - expected[0]).norm() < 1e-12);
            assert!((psi[1] - expected[1]).norm() < 1e-12);
        }
    }

    #[test]
    fn expectation_of_point_mass_state() {
        let spec = cost_spectrum(&t1_model(&[0, 1])).unwrap();
        let mut psi = vec![Complex64::new(0.0, 0.0); 8];
        psi[spec.argmin()] = Complex64::new(1.0, 0.0);
        let e = expectation(&psi, &spec).unwrap();
        assert_eq!(e, -1.0);
    }

    #[test]
    fn expectation_rejects_unnormalized_states() {
        let spec = cost_spectrum(&field_model(vec![2.0])).unwrap();
        let psi = vec![Complex64::new(0.5, 0.0); 2];
        assert!(matches!(
            expectation(&psi, &spec),
            Err(Error::NotNormalized { .. })
        ));
    }

    #[test]
    fn flat_spectrum_is_a_flat_landscape() {
        let spec = cost_spectrum(&field_model(vec![0.0, 0.0])).unwrap();
        let out = optimize_qaoa(&spec, 2, None, 50, 3).unwrap();
        assert!((out.mean_energy - 0.0).abs() < 1e-12);
    }

    #[test]
    fn optimizer_never_ends_above_the_uniform_baseline() {
        let spec = cost_spectrum(&t1_model(&[])).unwrap();
        let out = optimize_qaoa(&spec, 2, None, 500, 7).unwrap();
        assert!(out.mean_energy <= uniform_expectation(&spec) + 1e-9);
        out.distribution.validate().unwrap();
    }

    #[test]
    fn warm_start_with_budget_one_keeps_its_expectation() {
        let spec = cost_spectrum(&t1_model(&[0, 1])).unwrap();
        let warm = optimize_qaoa(&spec, 2, None, 200, 11).unwrap();
        let warm_params = warm.params.clone().unwrap();
        let out = optimize_qaoa(&spec, 2, Some(&warm_params), 1, 11).unwrap();
        assert_eq!(out.params.as_ref().unwrap(), &warm_params);
        assert!(out.mean_energy <= warm.mean_energy + 1e-12);
    }

    #[test]
    fn optimizer_is_deterministic() {
        let spec = cost_spectrum(&t1_model(&[0, 1])).unwrap();
        let a = optimize_qaoa(&spec, 2, None, 120, 5).unwrap();
        let b = optimize_qaoa(&spec, 2, None, 120, 5).unwrap();
        assert_eq!(a, b);
        let c = optimize_qaoa(&spec, 2, None, 120, 6).unwrap();
        assert!(a.params != c.params || a.mean_energy == c.mean_energy);
    }

    #[test]
    fn optimizer_argument_checks() {
        let spec = cost_spectrum(&field_model(vec![1.0])).unwrap();
        assert!(optimize_qaoa(&spec, 0, None, 10, 0).is_err());
        assert!(optimize_qaoa(&spec, 1, None, 0, 0).is_err());
        let wrong_p = QaoaParams::constant(3, 0.1);
        assert!(optimize_qaoa(&spec, 1, Some(&wrong_p), 10, 0).is_err());
    }

    mod properties {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn evolution_preserves_norm(
                seed in 0u64..40,
                p in 0usize..4,
                angle_scale in 0.0f64..3.0,
            ) {
                use rand::{Rng, SeedableRng};
                let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
                let n = rng.random_range(1..=5);
                let h: Vec<f64> = (0..n).map(|_| rng.random_range(-4.0..4.0)).collect();
                let spec = cost_spectrum(&field_model(h)).unwrap();
                let gamma: Vec<f64> = (0..p).map(|_| rng.random_range(-1.0..1.0) * angle_scale).collect();
                let beta: Vec<f64> = (0..p).map(|_| rng.random_range(-1.0..1.0) * angle_scale).collect();
                let psi = qaoa_evolve(&spec, &QaoaParams::new(gamma, beta).unwrap());
                let norm: f64 = psi.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
                prop_assert!((norm - 1.0).abs() <= 1e-9);

                let e = expectation(&psi, &spec).unwrap();
                let lo = spec.energies().iter().cloned().fold(f64::INFINITY, f64::min);
                let hi = spec.energies().iter().cloned().fold(f64::NEG_INFINITY, f64::max);
                prop_assert!(e >= lo - 1e-9 && e <= hi + 1e-9);
            }
        }
    }
}
