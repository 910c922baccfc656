//! Non-iterative design that drives `DᵀPᵀPD` toward the identity through
//! the eigenstructure of `DDᵀ`, updating one row of `Γ = PV` at a time.

use alloc::format;
use alloc::vec::Vec;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::linalg::{Dictionary, ProjectionMatrix, SymmetricEigen};
use crate::rng::{gaussian_matrix, rng_from_seed};

/// Eigenvalues at or below this fraction of the largest count as zero.
pub const ZERO_EIGENVALUE_RATIO: f64 = 1e-10;

/// Eigenstructure of `DDᵀ` plus the current `Γ`.
#[derive(Debug, Clone, PartialEq)]
pub struct SapiroState {
    /// Orthogonal eigenvector matrix of `DDᵀ` (columns).
    pub v: DMatrix<f64>,
    /// Eigenvalues of `DDᵀ`, non-increasing, zeros exact.
    pub lambda: DVector<f64>,
    /// `m × n` matrix `Γ = PV`.
    pub gamma: DMatrix<f64>,
    /// Number of zero eigenvalues.
    pub zero_count: usize,
}

impl SapiroState {
    pub fn new(dict: &Dictionary, initial: &DMatrix<f64>) -> Result<Self> {
        let d = dict.as_matrix();
        if initial.ncols() != d.nrows() {
            return Err(Error::DimensionMismatch(format!(
                "initial projection has {} columns, dictionary has {} rows",
                initial.ncols(),
                d.nrows()
            )));
        }
        let eig = SymmetricEigen::new(&(d * d.transpose()));
        let largest = eig.largest();
        if largest <= 1e-12 {
            return Err(Error::DegenerateSpectrum);
        }
        let mut zero_count = 0;
        let lambda = eig.values.map(|l| {
            if l <= ZERO_EIGENVALUE_RATIO * largest {
                zero_count += 1;
                0.0
            } else {
                l
            }
        });
        let gamma = initial * &eig.vectors;
        Ok(Self { v: eig.vectors, lambda, gamma, zero_count })
    }

    /// Rows `v_i = Λ τ_i` stacked as an `m × n` matrix.
    fn scaled_rows(&self) -> DMatrix<f64> {
        let mut rows = self.gamma.clone();
        for (s, mut col) in rows.column_iter_mut().enumerate() {
            col *= self.lambda[s];
        }
        rows
    }

    pub fn objective(&self) -> f64 {
        sapiro_objective(&self.lambda, &self.gamma)
    }

    pub fn projection(&self) -> Result<ProjectionMatrix> {
        ProjectionMatrix::new(&self.gamma * self.v.transpose())
    }

    /// Replaces row `j` of `Γ` by the rank-one fit to the largest eigenpair of
    /// `E_j = Λ − Σ_{i≠j} v_i v_iᵀ`. Components with `λ_s = 0` are left alone.
    pub fn update_row(&mut self, j: usize) {
        let rows = self.scaled_rows();
        let vj = rows.row(j).transpose();
        let mut e = -rows.tr_mul(&rows) + &vj * vj.transpose();
        for s in 0..self.lambda.len() {
            e[(s, s)] += self.lambda[s];
        }
        let eig = SymmetricEigen::new(&e);
        let scale = eig.largest().max(0.0).sqrt();
        for s in 0..self.lambda.len() {
            let l = self.lambda[s];
            if l > 0.0 {
                self.gamma[(j, s)] = scale * eig.vectors[(s, 0)] / l;
            }
        }
    }
}

/// `‖Λ − Λ ΓᵀΓ Λ‖_F²` with `Λ` given by its diagonal.
pub fn sapiro_objective(lambda: &DVector<f64>, gamma: &DMatrix<f64>) -> f64 {
    let n = lambda.len();
    let gtg = gamma.tr_mul(gamma);
    let mut sum = 0.0;
    for c in 0..n {
        for r in 0..n {
            let target = if r == c { lambda[r] } else { 0.0 };
            let diff = target - lambda[r] * gtg[(r, c)] * lambda[c];
            sum += diff * diff;
        }
    }
    sum
}

#[derive(Debug, Clone, PartialEq)]
pub struct SapiroDesign {
    pub projection: ProjectionMatrix,
    pub initial_objective: f64,
    /// Objective after each of the `m` row updates.
    pub trace: Vec<f64>,
    pub state: SapiroState,
}

/// One pass of `m` row updates from a seeded Gaussian `P_0`.
pub fn sapiro_optimize(dict: &Dictionary, m: usize, seed: u64) -> Result<SapiroDesign> {
    let n = dict.signal_dim();
    if m == 0 || m > n {
        return Err(Error::InvalidConfig(format!("m must lie in 1..={n}, got {m}")));
    }
    let initial = gaussian_matrix(m, n, &mut rng_from_seed(seed));
    sapiro_optimize_from(dict, &initial)
}

pub fn sapiro_optimize_from(dict: &Dictionary, initial: &DMatrix<f64>) -> Result<SapiroDesign> {
    let mut state = SapiroState::new(dict, initial)?;
    let initial_objective = state.objective();
    let mut trace = Vec::with_capacity(initial.nrows());
    for j in 0..initial.nrows() {
        state.update_row(j);
        trace.push(state.objective());
    }
    Ok(SapiroDesign { projection: state.projection()?, initial_objective, trace, state })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn objective_of_zero_gamma_is_lambda_norm() {
        let lambda = DVector::from_vec(alloc::vec![3.0, 2.0, 0.5]);
        let gamma = DMatrix::zeros(2, 3);
        assert!((sapiro_objective(&lambda, &gamma) - (9.0 + 4.0 + 0.25)).abs() < 1e-14);
    }

    #[test]
    fn objective_exact_solution_for_orthonormal() {
        let lambda = DVector::from_vec(alloc::vec![4.0, 1.0]);
        let gamma = DMatrix::from_diagonal(&lambda.map(|l: f64| 1.0 / l.sqrt()));
        assert!(sapiro_objective(&lambda, &gamma) < 1e-24);
    }

    #[test]
    fn identity_dictionary_reaches_zero() {
        let d = Dictionary::new(DMatrix::identity(6, 6)).unwrap();
        let out = sapiro_optimize(&d, 6, 1).unwrap();
        assert!(out.trace.last().copied().unwrap() < 1e-8);
        let p = out.projection.as_matrix();
        assert!((p.tr_mul(p) - DMatrix::<f64>::identity(6, 6)).amax() < 1e-6);
    }

    #[test]
    fn zero_dictionary_spectrum_is_rejected() {
        // Columns are nonzero but tiny enough that DDᵀ vanishes.
        let d = Dictionary::new(DMatrix::from_element(2, 2, 1e-7)).unwrap();
        assert_eq!(sapiro_optimize(&d, 1, 0).unwrap_err(), Error::DegenerateSpectrum);
    }

    #[test]
    fn rank_deficient_components_are_untouched() {
        // Rank-1 dictionary: only the first eigen-direction can be updated.
        let d = Dictionary::new(nalgebra::dmatrix![1.0, 2.0; 1.0, 2.0]).unwrap();
        let initial = nalgebra::dmatrix![0.3, -0.7];
        let start = SapiroState::new(&d, &initial).unwrap();
        assert_eq!(start.zero_count, 1);
        let out = sapiro_optimize_from(&d, &initial).unwrap();
        assert_eq!(out.state.gamma[(0, 1)], start.gamma[(0, 1)]);
    }
}
