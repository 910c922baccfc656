//! Benchmark harness: synthesize sparse signals, sense them with random or
//! optimized projections, reconstruct with OMP and/or basis pursuit, and
//! aggregate failure rates per sparsity level.
//!
//! All arms see the same dictionary, the same initial projection and the
//! same planted signals; a trial's signal depends only on
//! `(master_seed, S, trial_index)`.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use nalgebra::{DMatrix, DVector};

use crate::altproj::{altproj_optimize, AltProjConfig};
use crate::coherence::{gram_coherence, offdiag_histogram, Histogram};
use crate::elad::{elad_optimize_from, EladConfig, ThresholdMode};
use crate::error::{Error, Result};
use crate::linalg::{gram, Dictionary, ProjectionMatrix};
use crate::pursuit::{basis_pursuit, exhaustive_sparsest, omp_default, RecoveryStatus, LP_TOL};
use crate::rng::{derive_seed, gaussian_matrix, rng_from_seed, standard_normal, Rng, Stage};
use crate::sapiro::sapiro_optimize_from;

pub const DEFAULT_FAILURE_THRESHOLD: f64 = 1e-4;
pub const DEFAULT_HIST_BINS: usize = 50;

#[derive(Debug, Clone, PartialEq)]
pub enum DictionarySource {
    Gaussian { seed: u64 },
    Provided(Dictionary),
}

#[derive(Debug, Clone, PartialEq)]
pub enum OptimizerArm {
    /// The Gaussian projection every other arm starts from.
    Random,
    Elad { threshold: ThresholdMode, gamma: f64, iterations: usize },
    Sapiro,
    AltProj { t: f64, iterations: usize },
}

impl OptimizerArm {
    pub fn name(&self) -> &'static str {
        match self {
            OptimizerArm::Random => "random",
            OptimizerArm::Elad { .. } => "elad",
            OptimizerArm::Sapiro => "sapiro",
            OptimizerArm::AltProj { .. } => "altproj",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Solver {
    Omp,
    Bp,
}

impl Solver {
    pub fn name(self) -> &'static str {
        match self {
            Solver::Omp => "omp",
            Solver::Bp => "bp",
        }
    }

    pub fn from_name(s: &str) -> Option<Self> {
        match s {
            "omp" => Some(Solver::Omp),
            "bp" => Some(Solver::Bp),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolverChoice {
    Omp,
    Bp,
    Both,
}

impl SolverChoice {
    pub fn solvers(self) -> &'static [Solver] {
        match self {
            SolverChoice::Omp => &[Solver::Omp],
            SolverChoice::Bp => &[Solver::Bp],
            SolverChoice::Both => &[Solver::Omp, Solver::Bp],
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub n: usize,
    pub k: usize,
    pub m: usize,
    pub sparsities: Vec<usize>,
    /// Trials per sparsity level.
    pub trials: usize,
    pub dictionary: DictionarySource,
    pub optimizers: Vec<OptimizerArm>,
    pub solver: SolverChoice,
    pub failure_threshold: f64,
    pub master_seed: u64,
    pub hist_bins: usize,
}

impl ExperimentConfig {
    /// Reduced-size comparison of all four arms that runs in minutes.
    pub fn desk_scale() -> Self {
        Self {
            n: 50,
            k: 100,
            m: 12,
            sparsities: (1..=6).collect(),
            trials: 300,
            dictionary: DictionarySource::Gaussian { seed: 1 },
            optimizers: alloc::vec![
                OptimizerArm::Random,
                OptimizerArm::Elad { threshold: ThresholdMode::Relative(26.0), gamma: 0.6, iterations: 100 },
                OptimizerArm::Sapiro,
                OptimizerArm::AltProj { t: 0.3, iterations: 1000 },
            ],
            solver: SolverChoice::Both,
            failure_threshold: DEFAULT_FAILURE_THRESHOLD,
            master_seed: 2009,
            hist_bins: DEFAULT_HIST_BINS,
        }
    }

    /// The full 200×400, m = 30, N = 10000, S = 1..10 setting.
    pub fn paper_scale() -> Self {
        Self {
            n: 200,
            k: 400,
            m: 30,
            sparsities: (1..=10).collect(),
            trials: 10_000,
            optimizers: alloc::vec![
                OptimizerArm::Random,
                OptimizerArm::Elad { threshold: ThresholdMode::Relative(26.0), gamma: 0.6, iterations: 100 },
                OptimizerArm::Sapiro,
                OptimizerArm::AltProj { t: 0.26, iterations: 1000 },
            ],
            ..Self::desk_scale()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidConfig(msg));
        if self.n == 0 || self.k == 0 || self.m == 0 {
            return bad("n, k and m must be positive".into());
        }
        if self.m > self.n {
            return bad(format!("m = {} exceeds n = {}", self.m, self.n));
        }
        if self.sparsities.is_empty() {
            return bad("sparsity range is empty".into());
        }
        if let Some(&s) = self.sparsities.iter().find(|&&s| s >= self.m || s > self.k) {
            return bad(format!("sparsity {s} must be below m = {} and at most k = {}", self.m, self.k));
        }
        if self.trials == 0 {
            return bad("trials must be at least 1".into());
        }
        if self.optimizers.is_empty() {
            return bad("no optimizer arms".into());
        }
        for (i, arm) in self.optimizers.iter().enumerate() {
            if self.optimizers[..i].iter().any(|o| o.name() == arm.name()) {
                return bad(format!("optimizer '{}' listed twice", arm.name()));
            }
        }
        if !(self.failure_threshold >= 0.0) {
            return bad("failure threshold must be non-negative".into());
        }
        if self.hist_bins == 0 {
            return bad("hist_bins must be at least 1".into());
        }
        if let DictionarySource::Provided(d) = &self.dictionary {
            if d.signal_dim() != self.n || d.atoms() != self.k {
                return bad(format!(
                    "dictionary is {}x{} but the config says {}x{}",
                    d.signal_dim(),
                    d.atoms(),
                    self.n,
                    self.k
                ));
            }
        }
        Ok(())
    }

    pub fn build_dictionary(&self) -> Result<Dictionary> {
        match &self.dictionary {
            DictionarySource::Gaussian { seed } => {
                Dictionary::new(gaussian_matrix(self.n, self.k, &mut rng_from_seed(*seed)))
            }
            DictionarySource::Provided(d) => Ok(d.clone()),
        }
    }

    /// Seed of the Gaussian projection shared by all arms.
    pub fn projection_seed(&self) -> u64 {
        derive_seed(self.master_seed, Stage::Projection, 0, 0)
    }

    pub fn optimizer_seed(&self) -> u64 {
        derive_seed(self.master_seed, Stage::Optimizer, 0, 0)
    }

    pub fn signal_seed(&self, sparsity: usize, trial: usize) -> u64 {
        derive_seed(self.master_seed, Stage::Signal, sparsity as u64, trial as u64)
    }
}

/// A planted coefficient vector and its signal `x = Dθ`.
#[derive(Debug, Clone, PartialEq)]
pub struct PlantedSignal {
    pub theta: DVector<f64>,
    pub x: DVector<f64>,
}

/// Draws `S` distinct uniformly random atoms with i.i.d. N(0, 1) weights.
pub fn synthesize_signal(dict: &Dictionary, sparsity: usize, rng: &mut Rng) -> PlantedSignal {
    let k = dict.atoms();
    let mut support = rand::seq::index::sample(rng, k, sparsity.min(k)).into_vec();
    support.sort_unstable();
    let mut theta = DVector::zeros(k);
    for j in support {
        theta[j] = standard_normal(rng);
    }
    let x = dict.as_matrix() * &theta;
    PlantedSignal { theta, x }
}

pub fn synthesize_signals(dict: &Dictionary, sparsity: usize, count: usize, rng: &mut Rng) -> Vec<PlantedSignal> {
    (0..count).map(|_| synthesize_signal(dict, sparsity, rng)).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TrialStatus {
    Converged,
    MaxIter,
    Infeasible,
}

impl TrialStatus {
    pub fn name(self) -> &'static str {
        match self {
            TrialStatus::Converged => "converged",
            TrialStatus::MaxIter => "max_iter",
            TrialStatus::Infeasible => "infeasible",
        }
    }

    pub fn from_name(s: &str) -> Option<Self> {
        match s {
            "converged" => Some(TrialStatus::Converged),
            "max_iter" => Some(TrialStatus::MaxIter),
            "infeasible" => Some(TrialStatus::Infeasible),
            _ => None,
        }
    }
}

impl From<RecoveryStatus> for TrialStatus {
    fn from(s: RecoveryStatus) -> Self {
        match s {
            RecoveryStatus::Converged => TrialStatus::Converged,
            RecoveryStatus::MaxIter => TrialStatus::MaxIter,
            RecoveryStatus::Infeasible => TrialStatus::Infeasible,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrialRecord {
    pub sparsity: usize,
    pub trial: usize,
    pub optimizer: String,
    pub solver: Solver,
    /// `‖θ̂ − θ‖₂ / ‖θ‖₂` (plain `‖θ̂‖₂` when `θ = 0`).
    pub relative_error: f64,
    pub success: bool,
    pub seed: u64,
    pub status: TrialStatus,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SummaryCell {
    pub optimizer: String,
    pub solver: Solver,
    pub sparsity: usize,
    pub mean_relative_error: f64,
    pub failure_rate: f64,
    pub trials: usize,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct SweepSummary {
    pub cells: Vec<SummaryCell>,
}

impl SweepSummary {
    pub fn cell(&self, optimizer: &str, solver: Solver, sparsity: usize) -> Option<&SummaryCell> {
        self.cells.iter().find(|c| c.optimizer == optimizer && c.solver == solver && c.sparsity == sparsity)
    }
}

/// Aggregates records per `(optimizer, solver, S)` in order of first appearance.
pub fn summarize(records: &[TrialRecord]) -> SweepSummary {
    let mut cells: Vec<(SummaryCell, f64, usize)> = Vec::new();
    for r in records {
        let pos = cells
            .iter()
            .position(|(c, _, _)| c.optimizer == r.optimizer && c.solver == r.solver && c.sparsity == r.sparsity);
        let idx = match pos {
            Some(i) => i,
            None => {
                cells.push((
                    SummaryCell {
                        optimizer: r.optimizer.clone(),
                        solver: r.solver,
                        sparsity: r.sparsity,
                        mean_relative_error: 0.0,
                        failure_rate: 0.0,
                        trials: 0,
                    },
                    0.0,
                    0,
                ));
                cells.len() - 1
            }
        };
        let (cell, err_sum, failures) = &mut cells[idx];
        cell.trials += 1;
        *err_sum += r.relative_error;
        if !r.success {
            *failures += 1;
        }
    }
    SweepSummary {
        cells: cells
            .into_iter()
            .map(|(mut c, err_sum, failures)| {
                c.mean_relative_error = err_sum / c.trials as f64;
                c.failure_rate = failures as f64 / c.trials as f64;
                c
            })
            .collect(),
    }
}

/// Per-arm design output.
#[derive(Debug, Clone, PartialEq)]
pub struct ArmResult {
    pub name: String,
    pub projection: ProjectionMatrix,
    /// Mutual coherence of `P D`.
    pub mu: f64,
    pub histogram: Histogram,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepOutput {
    pub records: Vec<TrialRecord>,
    pub summary: SweepSummary,
    pub arms: Vec<ArmResult>,
}

/// Produces the projection for one arm. Every arm starts from the shared
/// Gaussian `P_0`, except the Gram-space method which starts from its own
/// seeded Gram iterate.
pub fn design_arm(arm: &OptimizerArm, dict: &Dictionary, cfg: &ExperimentConfig) -> Result<ProjectionMatrix> {
    let initial = ProjectionMatrix::new(gaussian_matrix(cfg.m, cfg.n, &mut rng_from_seed(cfg.projection_seed())))?;
    match arm {
        OptimizerArm::Random => Ok(initial),
        OptimizerArm::Elad { threshold, gamma, iterations } => {
            let ecfg = EladConfig {
                threshold: *threshold,
                gamma: *gamma,
                iterations: *iterations,
                m: cfg.m,
                seed: cfg.projection_seed(),
            };
            Ok(elad_optimize_from(dict, &ecfg, initial)?.projection)
        }
        OptimizerArm::Sapiro => Ok(sapiro_optimize_from(dict, initial.as_matrix())?.projection),
        OptimizerArm::AltProj { t, iterations } => {
            let acfg = AltProjConfig { t: *t, m: cfg.m, iterations: *iterations, seed: cfg.optimizer_seed() };
            Ok(altproj_optimize(dict, &acfg)?.projection)
        }
    }
}

struct SensingArm {
    projection: DMatrix<f64>,
    normalized: DMatrix<f64>,
    norms: Vec<f64>,
}

impl SensingArm {
    fn new(projection: &ProjectionMatrix, dict: &Dictionary) -> Result<Self> {
        let effective = projection.as_matrix() * dict.as_matrix();
        let norms: Vec<f64> = effective.column_iter().map(|c| c.norm()).collect();
        let normalized = crate::linalg::normalize_columns(&effective)?;
        Ok(Self { projection: projection.as_matrix().clone(), normalized, norms })
    }

    fn recover(&self, signal: &PlantedSignal, sparsity: usize, solver: Solver) -> (DVector<f64>, TrialStatus) {
        let y = &self.projection * &signal.x;
        let k = self.norms.len();
        let outcome = match solver {
            Solver::Omp => omp_default(&self.normalized, &y, sparsity),
            Solver::Bp => basis_pursuit(&self.normalized, &y, LP_TOL),
        };
        match outcome {
            Ok(r) => {
                let status = r.status.into();
                let mut theta = r.theta.into_values();
                for (j, v) in theta.iter_mut().enumerate() {
                    *v /= self.norms[j];
                }
                (theta, status)
            }
            Err(Error::MaxIter(_)) => (DVector::zeros(k), TrialStatus::MaxIter),
            Err(_) => (DVector::zeros(k), TrialStatus::Infeasible),
        }
    }
}

fn relative_error(estimate: &DVector<f64>, truth: &DVector<f64>) -> f64 {
    let err = (estimate - truth).norm();
    let scale = truth.norm();
    if scale > 0.0 {
        err / scale
    } else {
        err
    }
}

/// Runs every arm over every sparsity level and trial.
pub fn run_sweep(cfg: &ExperimentConfig) -> Result<SweepOutput> {
    cfg.validate()?;
    let dict = cfg.build_dictionary()?;

    let mut arms = Vec::with_capacity(cfg.optimizers.len());
    let mut sensing = Vec::with_capacity(cfg.optimizers.len());
    for arm in &cfg.optimizers {
        let projection = design_arm(arm, &dict, cfg)?;
        let g = gram(&(projection.as_matrix() * dict.as_matrix()))?;
        sensing.push(SensingArm::new(&projection, &dict)?);
        arms.push(ArmResult {
            name: arm.name().into(),
            mu: gram_coherence(&g).mu,
            histogram: offdiag_histogram(&g, cfg.hist_bins),
            projection,
        });
    }

    let mut signals = Vec::with_capacity(cfg.sparsities.len());
    for &s in &cfg.sparsities {
        let per_s: Vec<(u64, PlantedSignal)> = (0..cfg.trials)
            .map(|trial| {
                let seed = cfg.signal_seed(s, trial);
                (seed, synthesize_signal(&dict, s, &mut rng_from_seed(seed)))
            })
            .collect();
        signals.push(per_s);
    }

    let mut records = Vec::new();
    for (arm, sense) in arms.iter().zip(&sensing) {
        for (&s, per_s) in cfg.sparsities.iter().zip(&signals) {
            for (trial, (seed, signal)) in per_s.iter().enumerate() {
                for &solver in cfg.solver.solvers() {
                    let (estimate, status) = sense.recover(signal, s, solver);
                    let relative_error = relative_error(&estimate, &signal.theta);
                    records.push(TrialRecord {
                        sparsity: s,
                        trial,
                        optimizer: arm.name.clone(),
                        solver,
                        relative_error,
                        success: relative_error <= cfg.failure_threshold,
                        seed: *seed,
                        status,
                    });
                }
            }
        }
    }
    let summary = summarize(&records);
    Ok(SweepOutput { records, summary, arms })
}

/// Largest `S` with `S < ½(1 + 1/μ)`; unbounded for `μ = 0`.
pub fn uniqueness_limit(mu: f64) -> usize {
    let bound = 0.5 * (1.0 + 1.0 / mu);
    if !bound.is_finite() {
        return usize::MAX;
    }
    let s = bound.floor();
    if s >= bound {
        s as usize - 1
    } else {
        s as usize
    }
}

/// Outcome of recovering one planted representation three ways.
#[derive(Debug, Clone, PartialEq)]
pub struct UniquenessCheck {
    /// The exhaustive search found exactly one support of minimal size.
    pub oracle_unique: bool,
    /// That support is the planted one.
    pub oracle_matches: bool,
    pub omp_error: f64,
    pub bp_error: f64,
}

/// Senses `y = D̂θ` and recovers `θ` with the exhaustive oracle, OMP and
/// basis pursuit. `D̂` should have unit-norm columns.
pub fn check_unique_recovery(dhat: &DMatrix<f64>, theta: &DVector<f64>) -> Result<UniquenessCheck> {
    let y = dhat * theta;
    let planted: Vec<usize> = (0..theta.len()).filter(|&j| theta[j] != 0.0).collect();
    let s = planted.len();
    let tol = 1e-9 * y.norm().max(1.0);
    let oracle = exhaustive_sparsest(dhat, &y, s, tol)?;
    let omp = omp_default(dhat, &y, s)?;
    let bp = basis_pursuit(dhat, &y, LP_TOL)?;
    Ok(UniquenessCheck {
        oracle_unique: oracle.unique == Some(true),
        oracle_matches: oracle.theta.support() == planted,
        omp_error: relative_error(omp.theta.values(), theta),
        bp_error: relative_error(bp.theta.values(), theta),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small_config() -> ExperimentConfig {
        ExperimentConfig {
            n: 6,
            k: 10,
            m: 4,
            sparsities: alloc::vec![1, 2],
            trials: 5,
            dictionary: DictionarySource::Gaussian { seed: 3 },
            optimizers: alloc::vec![OptimizerArm::Random, OptimizerArm::Sapiro],
            solver: SolverChoice::Both,
            failure_threshold: DEFAULT_FAILURE_THRESHOLD,
            master_seed: 11,
            hist_bins: 10,
        }
    }

    #[test]
    fn synthesize_boundaries() {
        let d = Dictionary::new(gaussian_matrix(4, 6, &mut rng_from_seed(0))).unwrap();
        let s = synthesize_signal(&d, 0, &mut rng_from_seed(1));
        assert_eq!(s.theta.norm(), 0.0);
        assert_eq!(s.x.norm(), 0.0);
        let s = synthesize_signal(&d, 6, &mut rng_from_seed(1));
        assert!(s.theta.iter().all(|&v| v != 0.0));
        let s = synthesize_signal(&d, 3, &mut rng_from_seed(1));
        assert_eq!(s.theta.iter().filter(|&&v| v != 0.0).count(), 3);
    }

    #[test]
    fn config_validation() {
        let cfg = small_config();
        assert!(cfg.validate().is_ok());
        assert!(ExperimentConfig { sparsities: alloc::vec![4], ..cfg.clone() }.validate().is_err());
        assert!(ExperimentConfig { sparsities: alloc::vec![], ..cfg.clone() }.validate().is_err());
        assert!(ExperimentConfig { trials: 0, ..cfg.clone() }.validate().is_err());
        assert!(ExperimentConfig { optimizers: alloc::vec![OptimizerArm::Sapiro, OptimizerArm::Sapiro], ..cfg }
            .validate()
            .is_err());
    }

    #[test]
    fn summary_counts_every_trial() {
        let out = run_sweep(&small_config()).unwrap();
        assert_eq!(out.records.len(), 2 * 2 * 5 * 2);
        assert_eq!(out.summary.cells.len(), 2 * 2 * 2);
        for cell in &out.summary.cells {
            assert_eq!(cell.trials, 5);
            assert!((0.0..=1.0).contains(&cell.failure_rate));
            assert!(cell.mean_relative_error >= 0.0);
        }
        for r in &out.records {
            assert_eq!(r.success, r.relative_error <= DEFAULT_FAILURE_THRESHOLD);
        }
    }

    #[test]
    fn uniqueness_limit_is_strict() {
        assert_eq!(uniqueness_limit(1.0), 0);
        assert_eq!(uniqueness_limit(0.5), 1);
        assert_eq!(uniqueness_limit(1.0 / 3.0), 1);
        assert_eq!(uniqueness_limit(0.3), 2);
        assert_eq!(uniqueness_limit(0.0), usize::MAX);
    }

    #[test]
    fn records_pair_across_arms() {
        let out = run_sweep(&small_config()).unwrap();
        let seeds = |arm: &str| -> Vec<u64> {
            out.records.iter().filter(|r| r.optimizer == arm).map(|r| r.seed).collect()
        };
        assert_eq!(seeds("random"), seeds("sapiro"));
    }
}
