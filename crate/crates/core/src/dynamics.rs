//! Exact unitary evolution `U(t) = exp(-i H t)` through a spectral
//! decomposition, plus walker-state utilities.

use std::collections::hash_map::DefaultHasher;
use std::hash::{Hash, Hasher};

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;
use thiserror::Error;

use crate::graph::{max_abs, Hamiltonian, VertexId};

pub mod oracle;

/// Accepted deviation of `||psi||` from one for a [`WalkerState`].
pub const NORM_TOL: f64 = 1e-10;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DynamicsError {
    #[error("dimension mismatch: expected {expected}, got {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("state is not normalized (norm = {0})")]
    NotNormalized(f64),
    #[error("state has zero norm")]
    ZeroState,
    #[error("vertex {vertex} out of range for dimension {dim}")]
    VertexOutOfRange { vertex: usize, dim: usize },
}

/// Normalized walker state in the site basis.
#[derive(Debug, Clone, PartialEq)]
pub struct WalkerState(DVector<Complex64>);

impl WalkerState {
    pub fn new(amplitudes: DVector<Complex64>) -> Result<Self, DynamicsError> {
        let norm = amplitudes.norm();
        if (norm - 1.0).abs() > NORM_TOL {
            return Err(DynamicsError::NotNormalized(norm));
        }
        Ok(WalkerState(amplitudes))
    }

    /// Rescale arbitrary non-zero amplitudes to unit norm.
    pub fn normalized(amplitudes: DVector<Complex64>) -> Result<Self, DynamicsError> {
        let norm = amplitudes.norm();
        if norm == 0.0 || !norm.is_finite() {
            return Err(DynamicsError::ZeroState);
        }
        Ok(WalkerState(amplitudes.unscale(norm)))
    }

    pub fn localized(dim: usize, v: VertexId) -> Result<Self, DynamicsError> {
        if v.0 >= dim {
            return Err(DynamicsError::VertexOutOfRange { vertex: v.0, dim });
        }
        let mut a = DVector::zeros(dim);
        a[v.0] = Complex64::new(1.0, 0.0);
        Ok(WalkerState(a))
    }

    /// `sum_i c_i |v_i>`, normalized.
    pub fn superposition(dim: usize, terms: &[(VertexId, Complex64)]) -> Result<Self, DynamicsError> {
        let mut a = DVector::zeros(dim);
        for &(v, c) in terms {
            if v.0 >= dim {
                return Err(DynamicsError::VertexOutOfRange { vertex: v.0, dim });
            }
            a[v.0] += c;
        }
        WalkerState::normalized(a)
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn amplitudes(&self) -> &DVector<Complex64> {
        &self.0
    }

    pub fn norm(&self) -> f64 {
        self.0.norm()
    }

    pub fn probabilities(&self) -> Vec<f64> {
        self.0.iter().map(|z| z.norm_sqr()).collect()
    }

    pub fn overlap(&self, other: &WalkerState) -> Complex64 {
        self.0.dotc(&other.0)
    }
}

/// l1-norm of coherence of `|psi><psi|` in the site basis,
/// `sum_{i != j} |psi_i| |psi_j| = (sum_i |psi_i|)^2 - ||psi||^2`.
pub fn coherence_l1(psi: &WalkerState) -> f64 {
    let l1: f64 = psi.0.iter().map(|z| z.norm()).sum();
    (l1 * l1 - psi.0.norm_squared()).max(0.0)
}

/// Spectral decomposition `H = V diag(lambda) V^dagger` of a Hamiltonian.
#[derive(Debug, Clone)]
pub struct EvolutionEngine {
    eigenvalues: DVector<f64>,
    eigenvectors: DMatrix<Complex64>,
    source_hash: u64,
}

impl EvolutionEngine {
    pub fn new(h: &Hamiltonian) -> Self {
        Self::from_matrix(h.matrix())
    }

    /// Decompose a matrix assumed Hermitian; only the lower triangle is read.
    pub fn from_matrix(h: &DMatrix<Complex64>) -> Self {
        let eig = SymmetricEigen::new(h.clone());
        EvolutionEngine {
            eigenvalues: eig.eigenvalues,
            eigenvectors: eig.eigenvectors,
            source_hash: matrix_hash(h),
        }
    }

    pub fn dim(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn eigenvalues(&self) -> &DVector<f64> {
        &self.eigenvalues
    }

    pub fn eigenvectors(&self) -> &DMatrix<Complex64> {
        &self.eigenvectors
    }

    pub fn source_hash(&self) -> u64 {
        self.source_hash
    }

    /// `max |V diag(lambda) V^dagger - H|`.
    pub fn reconstruction_residual(&self, h: &DMatrix<Complex64>) -> f64 {
        let lambda = DMatrix::from_diagonal(&self.eigenvalues.map(|x| Complex64::new(x, 0.0)));
        let rebuilt = &self.eigenvectors * lambda * self.eigenvectors.adjoint();
        max_abs(&(rebuilt - h))
    }

    /// `max |V^dagger V - I|`.
    pub fn unitarity_residual(&self) -> f64 {
        let n = self.dim();
        let g = self.eigenvectors.adjoint() * &self.eigenvectors;
        max_abs(&(g - DMatrix::<Complex64>::identity(n, n)))
    }

    fn phases(&self, t: f64) -> DVector<Complex64> {
        self.eigenvalues.map(|l| Complex64::from_polar(1.0, -l * t))
    }

    /// The full propagator `U(t)`.
    pub fn propagator(&self, t: f64) -> DMatrix<Complex64> {
        let mut vp = self.eigenvectors.clone();
        for (mut col, ph) in vp.column_iter_mut().zip(self.phases(t).iter()) {
            col *= *ph;
        }
        vp * self.eigenvectors.adjoint()
    }

    pub fn evolve(&self, psi0: &WalkerState, t: f64) -> Result<WalkerState, DynamicsError> {
        self.check_dim(psi0.dim())?;
        Ok(self.trajectory(psi0)?.state_at(t))
    }

    /// Precomputed eigenbasis coefficients of `psi0` for repeated queries.
    pub fn trajectory(&self, psi0: &WalkerState) -> Result<Trajectory<'_>, DynamicsError> {
        self.check_dim(psi0.dim())?;
        Ok(Trajectory {
            engine: self,
            coeffs: self.eigenvectors.adjoint() * psi0.amplitudes(),
        })
    }

    /// `<to|U(t)|from>`.
    pub fn amplitude(&self, from: VertexId, to: VertexId, t: f64) -> Result<Complex64, DynamicsError> {
        let n = self.dim();
        for v in [from, to] {
            if v.0 >= n {
                return Err(DynamicsError::VertexOutOfRange { vertex: v.0, dim: n });
            }
        }
        let mut acc = Complex64::new(0.0, 0.0);
        for k in 0..n {
            let ph = Complex64::from_polar(1.0, -self.eigenvalues[k] * t);
            acc += self.eigenvectors[(to.0, k)] * ph * self.eigenvectors[(from.0, k)].conj();
        }
        Ok(acc)
    }

    pub fn transition_probability(&self, from: VertexId, to: VertexId, t: f64) -> Result<f64, DynamicsError> {
        Ok(self.amplitude(from, to, t)?.norm_sqr().min(1.0))
    }

    /// `|<psi_f|U(t)|psi_0>|`.
    pub fn fidelity(&self, psi0: &WalkerState, psif: &WalkerState, t: f64) -> Result<f64, DynamicsError> {
        self.check_dim(psif.dim())?;
        let evolved = self.evolve(psi0, t)?;
        Ok(psif.overlap(&evolved).norm().min(1.0))
    }

    fn check_dim(&self, found: usize) -> Result<(), DynamicsError> {
        if found != self.dim() {
            return Err(DynamicsError::DimensionMismatch {
                expected: self.dim(),
                found,
            });
        }
        Ok(())
    }
}

/// `U(t)|psi_0>` for many `t` from one decomposition.
pub struct Trajectory<'a> {
    engine: &'a EvolutionEngine,
    coeffs: DVector<Complex64>,
}

impl Trajectory<'_> {
    pub fn state_at(&self, t: f64) -> WalkerState {
        let rotated = self.coeffs.component_mul(&self.engine.phases(t));
        WalkerState(&self.engine.eigenvectors * rotated)
    }

    pub fn probabilities_at(&self, t: f64) -> Vec<f64> {
        self.state_at(t).probabilities()
    }
}

/// Uniform grid of `points` times covering `[start, end]` inclusive.
pub fn time_grid(start: f64, end: f64, points: usize) -> Vec<f64> {
    match points {
        0 => Vec::new(),
        1 => vec![start],
        _ => {
            let step = (end - start) / (points - 1) as f64;
            (0..points).map(|i| start + step * i as f64).collect()
        }
    }
}

/// The default 2001-point grid on `[0, 2 pi]`.
pub fn default_grid() -> Vec<f64> {
    time_grid(0.0, std::f64::consts::TAU, 2001)
}

fn matrix_hash(m: &DMatrix<Complex64>) -> u64 {
    let mut hasher = DefaultHasher::new();
    m.nrows().hash(&mut hasher);
    for z in m.iter() {
        z.re.to_bits().hash(&mut hasher);
        z.im.to_bits().hash(&mut hasher);
    }
    hasher.finish()
}
