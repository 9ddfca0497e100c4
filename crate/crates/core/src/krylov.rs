//! Krylov-subspace reduction of a Hermitian Hamiltonian around a seed vertex.
//!
//! The basis is grown by applying `H` to the latest vector and orthogonalizing
//! against every earlier one (classical Gram-Schmidt, run twice). Each new
//! vector is the normalized residual, which makes every subdiagonal element
//! `<e_{k+1}|H|e_k>` real and positive.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::Serialize;
use thiserror::Error;

use crate::graph::{hermiticity_residual, max_abs, VertexId, HERMITIAN_TOL};

pub const DEFAULT_TOL: f64 = 1e-10;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum KrylovError {
    #[error("matrix is not Hermitian (max |H - H^dagger| = {0:e})")]
    NotHermitian(f64),
    #[error("seed vertex {seed} out of range for dimension {dim}")]
    SeedOutOfRange { seed: usize, dim: usize },
    #[error("tolerance must be positive, got {0}")]
    BadTolerance(f64),
    #[error("dimension mismatch: expected {expected}, got {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("reduced space has dimension {found}, expected {expected}")]
    Structure { expected: usize, found: usize },
}

#[derive(Debug, Clone)]
pub struct KrylovReduction {
    /// Column `j` holds `e_{j+1}`.
    basis: DMatrix<Complex64>,
    reduced_h: DMatrix<Complex64>,
    seed: VertexId,
}

#[derive(Debug, Clone, Serialize)]
pub struct ReducedState {
    pub coefficients: Vec<Complex64>,
    pub residual_norm: f64,
}

pub fn krylov_reduce(
    h: &DMatrix<Complex64>,
    seed: VertexId,
    tol: f64,
) -> Result<KrylovReduction, KrylovError> {
    let n = h.nrows();
    if !h.is_square() {
        return Err(KrylovError::DimensionMismatch {
            expected: n,
            found: h.ncols(),
        });
    }
    let scale = max_abs(h);
    let herm = hermiticity_residual(h);
    if herm > HERMITIAN_TOL * scale.max(1.0) {
        return Err(KrylovError::NotHermitian(herm));
    }
    if seed.0 >= n {
        return Err(KrylovError::SeedOutOfRange { seed: seed.0, dim: n });
    }
    if tol.is_nan() || tol <= 0.0 {
        return Err(KrylovError::BadTolerance(tol));
    }

    let threshold = tol * scale;
    let mut vectors: Vec<DVector<Complex64>> = Vec::new();
    let mut e = DVector::<Complex64>::zeros(n);
    e[seed.0] = Complex64::new(1.0, 0.0);
    vectors.push(e);

    while vectors.len() < n {
        let mut w = h * vectors.last().expect("non-empty");
        for _pass in 0..2 {
            for v in &vectors {
                let overlap = v.dotc(&w);
                w.axpy(-overlap, v, Complex64::new(1.0, 0.0));
            }
        }
        let norm = w.norm();
        if norm < threshold {
            break;
        }
        vectors.push(w.unscale(norm));
    }

    let basis = DMatrix::from_columns(&vectors);
    let reduced_h = basis.adjoint() * h * &basis;
    Ok(KrylovReduction {
        basis,
        reduced_h,
        seed,
    })
}

impl KrylovReduction {
    pub fn dim(&self) -> usize {
        self.basis.ncols()
    }

    pub fn seed(&self) -> VertexId {
        self.seed
    }

    /// Basis vectors as columns.
    pub fn basis(&self) -> &DMatrix<Complex64> {
        &self.basis
    }

    /// `e_{j+1}` for zero-based `j`.
    pub fn basis_vector(&self, j: usize) -> DVector<Complex64> {
        self.basis.column(j).into_owned()
    }

    pub fn reduced_h(&self) -> &DMatrix<Complex64> {
        &self.reduced_h
    }

    /// `max |G - I|` for the Gram matrix of the basis.
    pub fn orthonormality_residual(&self) -> f64 {
        let g = self.basis.adjoint() * &self.basis;
        let eye = DMatrix::<Complex64>::identity(self.dim(), self.dim());
        max_abs(&(g - eye))
    }

    /// `max |(I - P) H P|`, zero when the span is exactly `H`-invariant.
    pub fn invariance_residual(&self, h: &DMatrix<Complex64>) -> f64 {
        let hp = h * &self.basis;
        let leak = &hp - &self.basis * (self.basis.adjoint() * &hp);
        max_abs(&leak)
    }

    pub fn reduce_state(&self, psi: &DVector<Complex64>) -> Result<ReducedState, KrylovError> {
        if psi.len() != self.basis.nrows() {
            return Err(KrylovError::DimensionMismatch {
                expected: self.basis.nrows(),
                found: psi.len(),
            });
        }
        let coeffs = self.basis.adjoint() * psi;
        let outside = psi - &self.basis * &coeffs;
        Ok(ReducedState {
            coefficients: coeffs.iter().copied().collect(),
            residual_norm: outside.norm(),
        })
    }

    /// Largest entry-wise deviation from `template`.
    pub fn deviation_from(&self, template: &DMatrix<Complex64>) -> Result<f64, KrylovError> {
        if template.nrows() != self.dim() || template.ncols() != self.dim() {
            return Err(KrylovError::Structure {
                expected: template.nrows(),
                found: self.dim(),
            });
        }
        Ok(max_abs(&(&self.reduced_h - template)))
    }

    /// Deviation from the five-site chain with couplings
    /// `(1, beta sqrt(d), beta sqrt(d), 1)`.
    pub fn verify_reduced_form(&self, d: usize, beta: f64) -> Result<f64, KrylovError> {
        self.deviation_from(&lily_chain(d, beta))
    }
}

/// Real symmetric tridiagonal matrix with zero diagonal and the given
/// off-diagonal couplings.
pub fn chain_hamiltonian(couplings: &[f64]) -> DMatrix<Complex64> {
    let m = couplings.len() + 1;
    let mut h = DMatrix::<Complex64>::zeros(m, m);
    for (i, &c) in couplings.iter().enumerate() {
        h[(i, i + 1)] = Complex64::new(c, 0.0);
        h[(i + 1, i)] = Complex64::new(c, 0.0);
    }
    h
}

/// Reduced Lily Hamiltonian in the basis `(f, r, chiral mode, 2, 1)`.
pub fn lily_chain(d: usize, beta: f64) -> DMatrix<Complex64> {
    let b = beta * (d as f64).sqrt();
    chain_hamiltonian(&[1.0, b, b, 1.0])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lily::{build_lily, phases, LilyParams};

    fn indicator(n: usize, i: usize) -> DVector<Complex64> {
        let mut v = DVector::zeros(n);
        v[i] = Complex64::new(1.0, 0.0);
        v
    }

    fn lily(n: usize, d: usize, beta: f64) -> (KrylovReduction, crate::lily::LilyLayout, DMatrix<Complex64>) {
        let (g, layout) = build_lily(&LilyParams::new(n, d, 0, beta).unwrap()).unwrap();
        let h = g.hamiltonian().matrix().clone();
        let red = krylov_reduce(&h, layout.target_output(), DEFAULT_TOL).unwrap();
        (red, layout, h)
    }

    #[test]
    fn single_edge_chain() {
        let h = chain_hamiltonian(&[1.0]);
        let red = krylov_reduce(&h, VertexId(0), DEFAULT_TOL).unwrap();
        assert_eq!(red.dim(), 2);
        assert!(red.deviation_from(&h).unwrap() < 1e-15);
    }

    #[test]
    fn lily_reduces_to_five_sites() {
        for (n, d) in [(1, 2), (2, 3), (5, 4), (3, 7)] {
            let (red, _, h) = lily(n, d, 1.0);
            assert_eq!(red.dim(), 5, "n={n} d={d}");
            assert!(red.verify_reduced_form(d, 1.0).unwrap() < 1e-12);
            assert!(red.orthonormality_residual() < 1e-10);
            assert!(red.invariance_residual(&h) < 1e-10);
        }
    }

    #[test]
    fn weighted_template() {
        let beta = (0.3f64).sqrt();
        let (red, _, _) = lily(1, 5, beta);
        assert!(red.verify_reduced_form(5, beta).unwrap() < 1e-12);
    }

    #[test]
    fn wrong_template_is_detected() {
        let (red, _, _) = lily(2, 2, 1.0);
        let s = 2f64.sqrt();
        let swapped = chain_hamiltonian(&[s, 1.0, 1.0, s]);
        assert!(red.deviation_from(&swapped).unwrap() >= s - 1.0);
    }

    #[test]
    fn structural_mismatch_is_an_error() {
        let h = chain_hamiltonian(&[1.0, 1.0]);
        let red = krylov_reduce(&h, VertexId(0), DEFAULT_TOL).unwrap();
        assert!(matches!(
            red.verify_reduced_form(2, 1.0),
            Err(KrylovError::Structure { found: 3, .. })
        ));
    }

    #[test]
    fn chiral_mode_matches_roots_of_unity() {
        let d = 6;
        let (red, layout, _) = lily(2, d, 1.0);
        let phi = phases(d).unwrap();
        let mut analytic = DVector::<Complex64>::zeros(layout.n_vertices());
        for k in 0..d {
            analytic[layout.chiral(k).0] = Complex64::from_polar(1.0 / (d as f64).sqrt(), phi[k]);
        }
        let overlap = red.basis_vector(2).dotc(&analytic).norm();
        assert!(overlap > 1.0 - 1e-12);
    }

    #[test]
    fn input_vertices_are_last_basis_vectors() {
        let (red, layout, _) = lily(3, 3, 1.0);
        let n = layout.n_vertices();
        let s1 = red.reduce_state(&indicator(n, 0)).unwrap();
        assert!((s1.coefficients[4].norm() - 1.0).abs() < 1e-12);
        assert!(s1.residual_norm < 1e-12);
        let s2 = red.reduce_state(&indicator(n, 1)).unwrap();
        assert!((s2.coefficients[3].norm() - 1.0).abs() < 1e-12);
        let l = layout.routing(1).0;
        let sl = red.reduce_state(&indicator(n, l)).unwrap();
        assert!(sl.coefficients.iter().all(|c| c.norm() < 1e-12));
        assert!((sl.residual_norm - 1.0).abs() < 1e-12);
        assert!(red.reduce_state(&indicator(n + 1, 0)).is_err());
    }

    #[test]
    fn rejects_non_hermitian() {
        let mut h = chain_hamiltonian(&[1.0]);
        h[(0, 1)] = Complex64::new(0.0, 1.0);
        assert!(matches!(
            krylov_reduce(&h, VertexId(0), DEFAULT_TOL),
            Err(KrylovError::NotHermitian(_))
        ));
    }
}
