//! Damped Newton iteration for equilibria of a vector field.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::eigen::eigenvalues;
use crate::error::{Error, Result};
use crate::models::VectorField;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NewtonConfig {
    /// Convergence tolerance on the sup norm of the residual.
    pub tol: f64,
    pub max_iter: usize,
    /// Smallest damping factor tried before declaring stagnation.
    pub min_damping: f64,
}

impl Default for NewtonConfig {
    fn default() -> Self {
        Self { tol: 1e-12, max_iter: 50, min_damping: 1.0 / 4096.0 }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EquilibriumResult {
    pub state: Vec<f64>,
    pub residual_norm: f64,
    pub eigenvalues: Vec<Complex64>,
    pub converged: bool,
    pub iterations: usize,
}

pub(crate) fn sup_norm(v: &[f64]) -> f64 {
    v.iter().fold(0.0f64, |m, x| m.max(x.abs()))
}

/// Solve `F(s) = 0` by damped Newton (step halving whenever the residual
/// fails to decrease). Reports the spectrum of the Jacobian at the solution.
pub fn find_equilibrium<F: VectorField>(
    f: &F,
    guess: &[f64],
    cfg: &NewtonConfig,
) -> Result<EquilibriumResult> {
    let n = f.dim();
    assert_eq!(guess.len(), n, "guess dimension mismatch");
    let mut s = guess.to_vec();
    let mut residual = f.eval_vec(&s);
    let mut res_norm = sup_norm(&residual);

    for iter in 0..cfg.max_iter {
        if res_norm <= cfg.tol {
            let eigs = eigenvalues(&f.jacobian(&s))?;
            return Ok(EquilibriumResult {
                state: s,
                residual_norm: res_norm,
                eigenvalues: eigs,
                converged: true,
                iterations: iter,
            });
        }
        let jac = f.jacobian(&s);
        let rhs = DVector::from_iterator(n, residual.iter().map(|v| -v));
        let delta = jac.lu().solve(&rhs).ok_or(Error::SingularJacobian)?;

        // step halving on residual increase
        let mut damping = 1.0;
        loop {
            let trial: Vec<f64> =
                s.iter().zip(delta.iter()).map(|(x, d)| x + damping * d).collect();
            let trial_res = f.eval_vec(&trial);
            let trial_norm = sup_norm(&trial_res);
            if trial_norm < res_norm || trial_norm <= cfg.tol {
                s = trial;
                residual = trial_res;
                res_norm = trial_norm;
                break;
            }
            damping *= 0.5;
            if damping < cfg.min_damping {
                return Err(Error::NoConvergence { residual: res_norm });
            }
        }
    }
    if res_norm <= cfg.tol {
        let eigs = eigenvalues(&f.jacobian(&s))?;
        return Ok(EquilibriumResult {
            state: s,
            residual_norm: res_norm,
            eigenvalues: eigs,
            converged: true,
            iterations: cfg.max_iter,
        });
    }
    Err(Error::NoConvergence { residual: res_norm })
}

/// Finite-difference Jacobian, used as an independent oracle in tests.
pub fn fd_jacobian<F: VectorField>(f: &F, s: &[f64], h: f64) -> DMatrix<f64> {
    let n = f.dim();
    let mut j = DMatrix::zeros(n, n);
    for col in 0..n {
        let mut sp = s.to_vec();
        let mut sm = s.to_vec();
        sp[col] += h;
        sm[col] -= h;
        let fp = f.eval_vec(&sp);
        let fm = f.eval_vec(&sm);
        for row in 0..n {
            j[(row, col)] = (fp[row] - fm[row]) / (2.0 * h);
        }
    }
    j
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::{ModelParams, SystemSpec, TravellingKind};

    #[test]
    fn converges_to_squares_from_perturbed_guess() {
        let p = ModelParams { mu: 1.0, beta: -1.5, ..ModelParams::default() };
        let spec = SystemSpec::Amplitude(p);
        let r = (p.mu / (2.0 + p.beta)).sqrt();
        let guess = [r + 1e-3, 1e-3, r - 1e-3, 0.0];
        let res = find_equilibrium(&spec, &guess, &NewtonConfig::default()).unwrap();
        assert!(res.converged);
        let amp_sq = res.state[0] * res.state[0] + res.state[1] * res.state[1];
        assert!((amp_sq - 2.0).abs() < 1e-10, "{amp_sq}");
    }

    #[test]
    fn zero_guess_is_fixed_point() {
        let spec = SystemSpec::Full(ModelParams::default());
        let res = find_equilibrium(&spec, &[0.0; 8], &NewtonConfig::default()).unwrap();
        assert!(res.converged);
        assert_eq!(res.residual_norm, 0.0);
        assert_eq!(res.iterations, 0);
    }

    #[test]
    fn recovers_tsq_closed_form() {
        let p = ModelParams { mu: 1.2, ..ModelParams::default() };
        let spec = SystemSpec::PolarCore(p);
        let b = crate::models::tsq_branch(&p, TravellingKind::Tsq).unwrap();
        let mut guess = b.core_state;
        for g in guess.iter_mut() {
            *g += 1e-3;
        }
        let res = find_equilibrium(&spec, &guess, &NewtonConfig::default()).unwrap();
        for (got, want) in res.state.iter().zip(&b.core_state) {
            assert!((got - want).abs() < 1e-10, "{:?}", res.state);
        }
    }

    #[test]
    fn no_spurious_convergence_near_branches() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(13);
        let p = ModelParams { mu: 1.2, ..ModelParams::default() };
        let spec = SystemSpec::PolarCore(p);
        let b = crate::models::tsq_branch(&p, TravellingKind::Tsq).unwrap();
        for _ in 0..20 {
            let guess: Vec<f64> = b
                .core_state
                .iter()
                .map(|v| v + rng.random_range(-1e-2..1e-2))
                .collect();
            match find_equilibrium(&spec, &guess, &NewtonConfig::default()) {
                Ok(res) => {
                    assert!(res.converged);
                    assert!(res.residual_norm <= 1e-10);
                }
                Err(Error::NoConvergence { .. }) | Err(Error::SingularJacobian) => {}
                Err(e) => panic!("unexpected error {e}"),
            }
        }
    }
}
