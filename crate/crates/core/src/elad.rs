//! Iterative Gram shrinkage: normalize `P D`, shrink the large off-diagonal
//! correlations, pull the result back to rank `m`, and refit `P` by least
//! squares.

use alloc::format;
use alloc::vec::Vec;

use nalgebra::DMatrix;

use crate::coherence::{gram_coherence, gram_t_average, relative_threshold};
use crate::error::{Error, Result};
use crate::linalg::{gram, truncate_and_factor, Dictionary, GramMatrix, ProjectionMatrix, ProjectionSolver};
use crate::rng::{gaussian_matrix, rng_from_seed};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ThresholdMode {
    /// Absolute threshold `t` in (0, 1).
    Fixed(f64),
    /// Percentage of off-diagonal entries to shrink, recomputed every iteration.
    Relative(f64),
}

#[derive(Debug, Clone, PartialEq)]
pub struct EladConfig {
    pub threshold: ThresholdMode,
    pub gamma: f64,
    pub iterations: usize,
    /// Rows of `P`.
    pub m: usize,
    pub seed: u64,
}

impl EladConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.gamma > 0.0 && self.gamma < 1.0) {
            return Err(Error::InvalidConfig(format!("gamma must lie in (0, 1), got {}", self.gamma)));
        }
        if self.iterations == 0 {
            return Err(Error::InvalidConfig("iterations must be at least 1".into()));
        }
        if self.m == 0 {
            return Err(Error::InvalidConfig("m must be at least 1".into()));
        }
        match self.threshold {
            ThresholdMode::Fixed(t) if !(t > 0.0 && t < 1.0) => {
                Err(Error::InvalidConfig(format!("fixed threshold must lie in (0, 1), got {t}")))
            }
            ThresholdMode::Relative(p) if !(p > 0.0 && p < 100.0) => {
                Err(Error::InvalidConfig(format!("relative threshold must lie in (0, 100), got {p}")))
            }
            _ => Ok(()),
        }
    }
}

/// One row of an optimizer trace.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TraceEntry {
    /// `μ_t` at `threshold`; `None` when no entry exceeds it.
    pub mu_t: Option<f64>,
    /// Largest off-diagonal magnitude of the normalized Gram.
    pub mu: f64,
    pub threshold: f64,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct OptimizerTrace {
    pub entries: Vec<TraceEntry>,
}

impl OptimizerTrace {
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn last(&self) -> Option<&TraceEntry> {
        self.entries.last()
    }

    pub(crate) fn record(&mut self, g: &GramMatrix, threshold: f64) {
        self.entries.push(TraceEntry {
            mu_t: gram_t_average(g, threshold).ok(),
            mu: gram_coherence(g).mu,
            threshold,
        });
    }
}

/// A designed projection together with its optimization trace.
#[derive(Debug, Clone, PartialEq)]
pub struct Design {
    pub projection: ProjectionMatrix,
    pub trace: OptimizerTrace,
}

/// The three-branch shrinkage applied to one Gram entry.
pub fn shrink_elad(g: f64, t: f64, gamma: f64) -> f64 {
    let a = g.abs();
    if a >= t {
        gamma * g
    } else if a >= gamma * t {
        (gamma * t).copysign(g)
    } else {
        g
    }
}

/// Applies [`shrink_elad`] to every off-diagonal entry; the diagonal is kept.
pub fn shrink_gram(g: &GramMatrix, t: f64, gamma: f64) -> DMatrix<f64> {
    let mut out = g.as_matrix().clone();
    let k = out.nrows();
    for j in 0..k {
        for i in 0..k {
            if i != j {
                out[(i, j)] = shrink_elad(out[(i, j)], t, gamma);
            }
        }
    }
    out
}

fn effective_gram(p: &DMatrix<f64>, dict: &Dictionary, iteration: usize) -> Result<GramMatrix> {
    gram(&(p * dict.as_matrix())).map_err(|e| match e {
        Error::ZeroColumn(column) => Error::DegenerateIterate { iteration, column },
        other => other,
    })
}

/// Runs exactly `cfg.iterations` shrink / rank-reduce / refit rounds from a
/// seeded Gaussian `P_0`.
pub fn elad_optimize(dict: &Dictionary, cfg: &EladConfig) -> Result<Design> {
    cfg.validate()?;
    let n = dict.signal_dim();
    if cfg.m > n {
        return Err(Error::InvalidConfig(format!("m = {} exceeds the signal dimension {n}", cfg.m)));
    }
    let initial = gaussian_matrix(cfg.m, n, &mut rng_from_seed(cfg.seed));
    elad_optimize_from(dict, cfg, ProjectionMatrix::new(initial)?)
}

/// As [`elad_optimize`], starting from a caller-supplied `P_0`.
pub fn elad_optimize_from(dict: &Dictionary, cfg: &EladConfig, initial: ProjectionMatrix) -> Result<Design> {
    cfg.validate()?;
    if initial.as_matrix().shape() != (cfg.m, dict.signal_dim()) {
        return Err(Error::DimensionMismatch(format!(
            "initial projection must be {}x{}",
            cfg.m,
            dict.signal_dim()
        )));
    }
    let solver = ProjectionSolver::new(dict);
    let mut p = initial.into_inner();
    let mut g = effective_gram(&p, dict, 0)?;
    let mut trace = OptimizerTrace::default();
    for q in 0..cfg.iterations {
        let t = match cfg.threshold {
            ThresholdMode::Fixed(t) => t,
            ThresholdMode::Relative(percent) => relative_threshold(&g, percent).t,
        };
        let shrunk = shrink_gram(&g, t, cfg.gamma);
        let (_, s) = truncate_and_factor(&shrunk, cfg.m)?;
        p = solver.solve(&s)?.into_inner();
        g = effective_gram(&p, dict, q + 1)?;
        trace.record(&g, t);
    }
    Ok(Design { projection: ProjectionMatrix::new(p)?, trace })
}
