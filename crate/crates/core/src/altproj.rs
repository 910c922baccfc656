//! Gram design by alternating projections between the convex set
//! `{|g_ij| ≤ t, g_ii ≥ 1}` and the set of rank-`m` PSD matrices, followed by
//! normalization and recovery of `P`.

use alloc::format;

use nalgebra::DMatrix;

use crate::elad::{Design, OptimizerTrace};
use crate::error::{Error, Result};
use crate::linalg::{
    symmetric_rank_truncate, truncate_and_factor, Dictionary, GramMatrix, ProjectionMatrix, ProjectionSolver,
    SymmetricEigen,
};
use crate::rng::{gaussian_matrix, rng_from_seed};

#[derive(Debug, Clone, PartialEq)]
pub struct AltProjConfig {
    pub t: f64,
    pub m: usize,
    pub iterations: usize,
    pub seed: u64,
}

impl AltProjConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.t > 0.0 && self.t < 1.0) {
            return Err(Error::InvalidConfig(format!("t must lie in (0, 1), got {}", self.t)));
        }
        if self.iterations == 0 {
            return Err(Error::InvalidConfig("iterations must be at least 1".into()));
        }
        if self.m == 0 {
            return Err(Error::InvalidConfig("m must be at least 1".into()));
        }
        Ok(())
    }
}

/// Clips off-diagonal entries to `[-t, t]` and lifts diagonal entries below 1 up to 1.
pub fn project_convex(g: &DMatrix<f64>, t: f64) -> DMatrix<f64> {
    let mut out = g.clone();
    let k = out.nrows();
    for j in 0..k {
        for i in 0..k {
            let v = out[(i, j)];
            if i == j {
                if v < 1.0 {
                    out[(i, j)] = 1.0;
                }
            } else if v.abs() > t {
                out[(i, j)] = t.copysign(v);
            }
        }
    }
    out
}

/// Nearest PSD matrix of rank at most `m` (see [`symmetric_rank_truncate`]).
pub fn project_rank(g: &DMatrix<f64>, m: usize) -> Result<DMatrix<f64>> {
    symmetric_rank_truncate(g, m)
}

/// `diag(g)^{-1/2} · g · diag(g)^{-1/2}`.
pub fn normalize_gram(g: &DMatrix<f64>) -> Result<GramMatrix> {
    let k = g.nrows();
    let mut scale = alloc::vec::Vec::with_capacity(k);
    for i in 0..k {
        let d = g[(i, i)];
        if !(d > 1e-12) {
            return Err(Error::DegenerateDiagonal(i));
        }
        scale.push(1.0 / d.sqrt());
    }
    let mut out = DMatrix::from_fn(k, k, |i, j| g[(i, j)] * scale[i] * scale[j]);
    for i in 0..k {
        out[(i, i)] = 1.0;
    }
    crate::linalg::symmetrize(&mut out);
    GramMatrix::from_symmetric(out)
}

/// Recovers `P` from a Gram matrix of rank at most `m`: factor `G = SᵀS`,
/// then solve `min ‖S − P D‖_F`.
pub fn recover_projection(g: &GramMatrix, dict: &Dictionary, m: usize) -> Result<ProjectionMatrix> {
    recover_with(g, &ProjectionSolver::new(dict), m)
}

fn recover_with(g: &GramMatrix, solver: &ProjectionSolver, m: usize) -> Result<ProjectionMatrix> {
    let k = g.size();
    if m == 0 {
        return Err(Error::InvalidRank { rank: m, max: k });
    }
    let eig = SymmetricEigen::new(g.as_matrix());
    let largest = eig.largest().abs().max(1e-12);
    if m < k {
        let excess = eig.values[m];
        if excess.abs() > 1e-8 * largest {
            return Err(Error::InvalidRank { rank: m, max: k });
        }
    }
    let (_, s) = truncate_and_factor(g.as_matrix(), m)?;
    solver.solve(&s)
}

/// Initial symmetric iterate: `(A + Aᵀ)/2` with `A` i.i.d. N(0, 1), unit diagonal.
pub fn initial_gram(k: usize, seed: u64) -> DMatrix<f64> {
    let a = gaussian_matrix(k, k, &mut rng_from_seed(seed));
    let mut g = (&a + a.transpose()) * 0.5;
    for i in 0..k {
        g[(i, i)] = 1.0;
    }
    g
}

/// Result of the alternating-projection loop before and after `P` recovery.
#[derive(Debug, Clone, PartialEq)]
pub struct AltProjDesign {
    pub projection: ProjectionMatrix,
    /// Normalized Gram matrix the loop converged to (the design target).
    pub target: GramMatrix,
    /// Per iteration: `mu` holds the largest off-diagonal of the normalized
    /// iterate, `mu_t` its t-averaged coherence.
    pub trace: OptimizerTrace,
}

impl From<AltProjDesign> for Design {
    fn from(d: AltProjDesign) -> Self {
        Design { projection: d.projection, trace: d.trace }
    }
}

pub fn altproj_optimize(dict: &Dictionary, cfg: &AltProjConfig) -> Result<AltProjDesign> {
    cfg.validate()?;
    let k = dict.atoms();
    if cfg.m > k {
        return Err(Error::InvalidRank { rank: cfg.m, max: k });
    }
    let mut g = initial_gram(k, cfg.seed);
    let mut trace = OptimizerTrace::default();
    for _ in 0..cfg.iterations {
        let convex = project_convex(&g, cfg.t);
        g = project_rank(&convex, cfg.m)?;
        let normalized = normalize_gram(&g)?;
        trace.record(&normalized, cfg.t);
    }
    let target = normalize_gram(&g)?;
    let projection = recover_projection(&target, dict, cfg.m)?;
    Ok(AltProjDesign { projection, target, trace })
}
