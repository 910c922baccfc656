//! Sparse recovery: orthogonal matching pursuit, basis pursuit through the
//! simplex solver, and an exhaustive minimum-support oracle for small
//! problems.

use alloc::format;
use alloc::vec::Vec;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::linalg::solve_least_squares;
use crate::lp::solve_standard_form;

/// Default relative residual tolerance for OMP (`1e-9·‖y‖₂`).
pub const OMP_RELATIVE_TOL: f64 = 1e-9;
/// Default LP feasibility / optimality tolerance for basis pursuit.
pub const LP_TOL: f64 = 1e-7;
/// Largest number of supports [`exhaustive_sparsest`] will enumerate.
pub const ENUMERATION_GUARD: u128 = 1_000_000;

/// A length-`k` coefficient vector with its nonzero pattern.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseVector {
    values: DVector<f64>,
}

impl SparseVector {
    pub fn new(values: DVector<f64>) -> Self {
        Self { values }
    }

    pub fn zeros(k: usize) -> Self {
        Self { values: DVector::zeros(k) }
    }

    /// Indices with nonzero value, ascending.
    pub fn support(&self) -> Vec<usize> {
        self.values.iter().enumerate().filter(|(_, v)| **v != 0.0).map(|(i, _)| i).collect()
    }

    pub fn values(&self) -> &DVector<f64> {
        &self.values
    }

    pub fn into_values(self) -> DVector<f64> {
        self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn l1_norm(&self) -> f64 {
        self.values.lp_norm(1)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RecoveryStatus {
    Converged,
    MaxIter,
    Infeasible,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RecoveryResult {
    pub theta: SparseVector,
    /// `‖y − D̂ θ‖₂` recomputed from the returned coefficients.
    pub residual_norm: f64,
    /// OMP steps, simplex pivots, or supports tested.
    pub iterations: usize,
    pub status: RecoveryStatus,
    /// Residual norm after each OMP step (empty for the other solvers).
    pub residual_history: Vec<f64>,
    /// Exhaustive oracle only: exactly one minimum support fits.
    pub unique: Option<bool>,
}

fn check_dims(dhat: &DMatrix<f64>, y: &DVector<f64>) -> Result<()> {
    if dhat.nrows() != y.len() {
        return Err(Error::DimensionMismatch(format!(
            "dictionary has {} rows but the measurement has {} entries",
            dhat.nrows(),
            y.len()
        )));
    }
    Ok(())
}

fn residual_of(dhat: &DMatrix<f64>, y: &DVector<f64>, theta: &DVector<f64>) -> f64 {
    (y - dhat * theta).norm()
}

fn scatter(k: usize, support: &[usize], coeffs: &DVector<f64>) -> DVector<f64> {
    let mut out = DVector::zeros(k);
    for (s, &j) in support.iter().enumerate() {
        out[j] = coeffs[s];
    }
    out
}

/// Orthogonal matching pursuit with at most `sparsity` atoms.
///
/// Each step picks the column maximizing `|⟨d_j, r⟩| / ‖d_j‖` (smallest index
/// on ties), re-solves least squares on the support and updates the residual.
/// Stops at `sparsity` atoms or once `‖r‖₂ ≤ residual_tol`.
pub fn omp(dhat: &DMatrix<f64>, y: &DVector<f64>, sparsity: usize, residual_tol: f64) -> Result<RecoveryResult> {
    check_dims(dhat, y)?;
    let k = dhat.ncols();
    let norms: Vec<f64> = dhat.column_iter().map(|c| c.norm()).collect();
    let mut support: Vec<usize> = Vec::with_capacity(sparsity);
    let mut theta = DVector::zeros(k);
    let mut residual = y.clone();
    let mut history = Vec::with_capacity(sparsity);
    let mut res_norm = residual.norm();
    let budget = sparsity.min(k);

    while support.len() < budget && res_norm > residual_tol {
        let mut best: Option<(usize, f64)> = None;
        for j in 0..k {
            if norms[j] == 0.0 || support.contains(&j) {
                continue;
            }
            let score = dhat.column(j).dot(&residual).abs() / norms[j];
            if best.is_none_or(|(_, b)| score > b) {
                best = Some((j, score));
            }
        }
        let Some((j, _)) = best else { break };
        support.push(j);
        let sub = dhat.select_columns(support.iter());
        let coeffs = solve_least_squares(&sub, y);
        theta = scatter(k, &support, &coeffs);
        residual = y - dhat * &theta;
        res_norm = residual.norm();
        history.push(res_norm);
    }

    let status = if res_norm <= residual_tol { RecoveryStatus::Converged } else { RecoveryStatus::MaxIter };
    Ok(RecoveryResult {
        residual_norm: residual_of(dhat, y, &theta),
        theta: SparseVector::new(theta),
        iterations: history.len(),
        status,
        residual_history: history,
        unique: None,
    })
}

/// OMP with the default tolerance `1e-9·‖y‖₂`.
pub fn omp_default(dhat: &DMatrix<f64>, y: &DVector<f64>, sparsity: usize) -> Result<RecoveryResult> {
    omp(dhat, y, sparsity, OMP_RELATIVE_TOL * y.norm())
}

/// Minimum-ℓ1 solution of `D̂ θ = y` via the split `θ = u − v`, `u, v ≥ 0`.
///
/// The returned point is certified: constraints hold to `lp_tol` (relative to
/// `max(1, ‖y‖∞)`), its ℓ1 norm matches the LP objective to `lp_tol`, and the
/// dual satisfies `‖D̂ᵀw‖∞ ≤ 1 + lp_tol`.
pub fn basis_pursuit(dhat: &DMatrix<f64>, y: &DVector<f64>, lp_tol: f64) -> Result<RecoveryResult> {
    check_dims(dhat, y)?;
    let (rows, k) = dhat.shape();
    let mut a = DMatrix::zeros(rows, 2 * k);
    a.columns_mut(0, k).copy_from(dhat);
    a.columns_mut(k, k).copy_from(&(-dhat));
    let c = DVector::from_element(2 * k, 1.0);
    let max_pivots = 50 * (rows + 2 * k) + 1000;
    let sol = solve_standard_form(&a, y, &c, lp_tol, max_pivots)?;

    let theta = DVector::from_fn(k, |j, _| sol.x[j] - sol.x[k + j]);
    let scale = y.amax().max(1.0);
    let residual = y - dhat * &theta;
    if residual.amax() > lp_tol * scale {
        return Err(Error::Infeasible);
    }
    let l1 = theta.lp_norm(1);
    let dual_slack = (dhat.transpose() * &sol.dual).amax();
    if (l1 - sol.objective).abs() > lp_tol * l1.max(1.0) || dual_slack > 1.0 + lp_tol {
        return Err(Error::MaxIter(sol.pivots));
    }
    Ok(RecoveryResult {
        residual_norm: residual.norm(),
        theta: SparseVector::new(theta),
        iterations: sol.pivots,
        status: RecoveryStatus::Converged,
        residual_history: Vec::new(),
        unique: None,
    })
}

/// `Σ_{s ≤ max} C(k, s)`, saturating.
pub fn support_count(k: usize, max: usize) -> u128 {
    let mut total: u128 = 0;
    let mut binom: u128 = 1;
    for s in 0..=max.min(k) {
        if s > 0 {
            binom = binom.saturating_mul((k - s + 1) as u128) / s as u128;
        }
        total = total.saturating_add(binom);
    }
    total
}

fn next_combination(idx: &mut [usize], k: usize) -> bool {
    let s = idx.len();
    let mut i = s;
    while i > 0 {
        i -= 1;
        if idx[i] < k - s + i {
            idx[i] += 1;
            for j in (i + 1)..s {
                idx[j] = idx[j - 1] + 1;
            }
            return true;
        }
    }
    false
}

/// Brute-force `min ‖θ‖₀ s.t. ‖y − D̂θ‖₂ ≤ tol`, enumerating supports by size.
pub fn exhaustive_sparsest(dhat: &DMatrix<f64>, y: &DVector<f64>, max_support: usize, tol: f64) -> Result<RecoveryResult> {
    check_dims(dhat, y)?;
    let k = dhat.ncols();
    let candidates = support_count(k, max_support);
    if candidates > ENUMERATION_GUARD {
        return Err(Error::TooLarge(candidates));
    }
    let mut tested = 0usize;
    if y.norm() <= tol {
        return Ok(RecoveryResult {
            theta: SparseVector::zeros(k),
            residual_norm: y.norm(),
            iterations: 1,
            status: RecoveryStatus::Converged,
            residual_history: Vec::new(),
            unique: Some(true),
        });
    }
    for size in 1..=max_support.min(k) {
        let mut idx: Vec<usize> = (0..size).collect();
        let mut found: Option<DVector<f64>> = None;
        let mut hits = 0usize;
        loop {
            tested += 1;
            let sub = dhat.select_columns(idx.iter());
            let coeffs = solve_least_squares(&sub, y);
            if (y - &sub * &coeffs).norm() <= tol {
                hits += 1;
                if found.is_none() {
                    found = Some(scatter(k, &idx, &coeffs));
                }
            }
            if !next_combination(&mut idx, k) {
                break;
            }
        }
        if let Some(theta) = found {
            return Ok(RecoveryResult {
                residual_norm: residual_of(dhat, y, &theta),
                theta: SparseVector::new(theta),
                iterations: tested,
                status: RecoveryStatus::Converged,
                residual_history: Vec::new(),
                unique: Some(hits == 1),
            });
        }
    }
    Err(Error::NotFound(max_support))
}
