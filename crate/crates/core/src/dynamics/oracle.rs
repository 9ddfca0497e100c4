//! Fixed-step RK4 integration of `d psi/dt = -i H psi`.
//!
//! Shares nothing with the spectral path; used only to cross-check it.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use super::DynamicsError;

/// `rho * h` above which the result carries a warning.
const STEP_WARN: f64 = 0.5;

#[derive(Debug, Clone)]
pub struct OracleResult {
    pub state: DVector<Complex64>,
    pub steps: usize,
    /// Leading-order global error bound `|t| rho^5 h^4 / 120`, with `rho` the
    /// max absolute row sum of `H`.
    pub error_estimate: f64,
    pub warning: Option<String>,
}

pub fn oracle_evolve(
    h: &DMatrix<Complex64>,
    psi0: &DVector<Complex64>,
    t: f64,
    step: f64,
) -> Result<OracleResult, DynamicsError> {
    let n = h.nrows();
    if psi0.len() != n {
        return Err(DynamicsError::DimensionMismatch {
            expected: n,
            found: psi0.len(),
        });
    }
    assert!(step > 0.0, "oracle step must be positive");

    let steps = (t.abs() / step).ceil() as usize;
    let mut psi = psi0.clone();
    if steps == 0 {
        return Ok(OracleResult {
            state: psi,
            steps,
            error_estimate: 0.0,
            warning: None,
        });
    }
    let dt = t / steps as f64;

    // -i * dt * H, folded once
    let g = h.map(|z| Complex64::new(z.im, -z.re) * dt);
    let half = Complex64::new(0.5, 0.0);
    let sixth = 1.0 / 6.0;
    for _ in 0..steps {
        let k1 = &g * &psi;
        let k2 = &g * (&psi + &k1 * half);
        let k3 = &g * (&psi + &k2 * half);
        let k4 = &g * (&psi + &k3);
        psi += (k1 + (k2 + k3) * Complex64::new(2.0, 0.0) + k4) * Complex64::new(sixth, 0.0);
    }

    let rho = h
        .row_iter()
        .map(|r| r.iter().map(|z| z.norm()).sum::<f64>())
        .fold(0.0, f64::max);
    let rh = rho * dt.abs();
    let error_estimate = t.abs() * rho * rh.powi(4) / 120.0;
    let warning = (rh > STEP_WARN).then(|| {
        format!("step {dt:e} too large for spectral bound {rho:e} (rho*h = {rh:.3}); estimated error {error_estimate:e}")
    });
    Ok(OracleResult {
        state: psi,
        steps,
        error_estimate,
        warning,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::{EvolutionEngine, WalkerState};
    use crate::graph::VertexId;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_hermitian(n: usize, rng: &mut ChaCha8Rng) -> DMatrix<Complex64> {
        let a = DMatrix::from_fn(n, n, |_, _| {
            Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))
        });
        (&a + a.adjoint()) * Complex64::new(0.5, 0.0)
    }

    #[test]
    fn zero_time_is_identity() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let h = random_hermitian(4, &mut rng);
        let psi = WalkerState::localized(4, VertexId(2)).unwrap();
        let r = oracle_evolve(&h, psi.amplitudes(), 0.0, 1e-3).unwrap();
        assert_eq!(r.steps, 0);
        assert_eq!(&r.state, psi.amplitudes());
    }

    #[test]
    fn agrees_with_spectral_path() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let h = random_hermitian(8, &mut rng);
        let psi = WalkerState::localized(8, VertexId(0)).unwrap();
        let exact = EvolutionEngine::from_matrix(&h).evolve(&psi, 1.0).unwrap();
        let r = oracle_evolve(&h, psi.amplitudes(), 1.0, 1e-4).unwrap();
        assert!((r.state - exact.amplitudes()).norm() < 1e-8);
        assert!(r.warning.is_none());
    }

    #[test]
    fn norm_drift_over_full_period() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let h = random_hermitian(6, &mut rng);
        let psi = WalkerState::localized(6, VertexId(1)).unwrap();
        let r = oracle_evolve(&h, psi.amplitudes(), std::f64::consts::TAU, 1e-4).unwrap();
        assert!((r.state.norm() - 1.0).abs() < 1e-9);
    }

    #[test]
    fn coarse_step_is_flagged() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let h = random_hermitian(6, &mut rng);
        let psi = WalkerState::localized(6, VertexId(1)).unwrap();
        let r = oracle_evolve(&h, psi.amplitudes(), 3.0, 1.0).unwrap();
        assert!(r.warning.is_some());
    }
}
