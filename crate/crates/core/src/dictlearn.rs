//! Dictionary learning: K-SVD, and Coupled-KSVD which learns the projection
//! and the dictionary together by running K-SVD on the stacked problem
//! `Z = [λX; Y]`, `W = [λI; P]`.

use alloc::format;
use alloc::vec::Vec;

use nalgebra::{DMatrix, DVector};

use crate::altproj::{altproj_optimize, AltProjConfig};
use crate::elad::{elad_optimize, EladConfig};
use crate::error::{Error, Result};
use crate::linalg::{normalize_columns, Dictionary, ProjectionMatrix, SymmetricEigen};
use crate::pursuit::{omp, OMP_RELATIVE_TOL};
use crate::rng::{derive_seed, gaussian_matrix, rng_from_seed, Stage};
use crate::sapiro::sapiro_optimize;

/// Relative objective improvement below which the outer loop stops.
pub const STALL_TOL: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq)]
pub struct TrainingSet {
    /// `n × p` training signals.
    pub x: DMatrix<f64>,
    /// Optional `m × p` measurements of `x`.
    pub y: Option<DMatrix<f64>>,
    /// Standard deviation of the additive sensing noise used when `y` is synthesized.
    pub sigma: f64,
}

impl TrainingSet {
    pub fn new(x: DMatrix<f64>) -> Self {
        Self { x, y: None, sigma: 0.0 }
    }

    pub fn samples(&self) -> usize {
        self.x.ncols()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LearningEvent {
    /// Atom had no users and was replaced by the worst-represented sample.
    UnusedAtomReplaced { iteration: usize, atom: usize, sample: usize },
    /// The recovered atom vanished; the previous atom was kept.
    DegenerateAtom { iteration: usize, atom: usize },
}

/// Random Gaussian dictionary with unit-norm columns.
pub fn initial_dictionary(n: usize, k: usize, seed: u64) -> DMatrix<f64> {
    let mut rng = rng_from_seed(derive_seed(seed, Stage::Dictionary, 0, 0));
    loop {
        if let Ok(d) = normalize_columns(&gaussian_matrix(n, k, &mut rng)) {
            return d;
        }
    }
}

/// `Q [I  H/√n]`: an orthonormal basis joined with a normalized Hadamard
/// basis and rotated by a seeded random orthogonal `Q`. Coherence is `1/√n`.
/// `n` must be a power of two.
pub fn two_ortho_dictionary(n: usize, seed: u64) -> Result<Dictionary> {
    if n == 0 || !n.is_power_of_two() {
        return Err(Error::InvalidConfig(format!("n = {n} is not a power of two")));
    }
    let mut h = DMatrix::from_element(1, 1, 1.0);
    while h.nrows() < n {
        let s = h.nrows();
        let mut g = DMatrix::zeros(2 * s, 2 * s);
        g.view_mut((0, 0), (s, s)).copy_from(&h);
        g.view_mut((0, s), (s, s)).copy_from(&h);
        g.view_mut((s, 0), (s, s)).copy_from(&h);
        g.view_mut((s, s), (s, s)).copy_from(&(-&h));
        h = g;
    }
    let mut pair = DMatrix::zeros(n, 2 * n);
    pair.columns_mut(0, n).fill_with_identity();
    pair.columns_mut(n, n).copy_from(&(h / (n as f64).sqrt()));
    let a = gaussian_matrix(n, n, &mut rng_from_seed(derive_seed(seed, Stage::Dictionary, 1, 0)));
    let q = a.qr().q();
    Dictionary::new(q * pair)
}

/// `samples` signals `X = DΘ` with `sparsity`-sparse Gaussian columns of `Θ`.
/// Returns `(X, Θ)`.
pub fn planted_training_set(
    dict: &Dictionary,
    sparsity: usize,
    samples: usize,
    seed: u64,
) -> (DMatrix<f64>, DMatrix<f64>) {
    let mut rng = rng_from_seed(derive_seed(seed, Stage::Training, 0, 0));
    let signals = crate::harness::synthesize_signals(dict, sparsity, samples, &mut rng);
    let x = DMatrix::from_fn(dict.signal_dim(), samples, |r, c| signals[c].x[r]);
    let theta = DMatrix::from_fn(dict.atoms(), samples, |r, c| signals[c].theta[r]);
    (x, theta)
}

/// Maps atoms between signal space and the (possibly stacked) data space.
enum AtomMap {
    Identity,
    /// `lift(d) = W d`; `recover(u) = (WᵀW)⁻¹ Wᵀ u`.
    Stacked { w: DMatrix<f64>, recover: DMatrix<f64> },
}

impl AtomMap {
    fn lift(&self, d: &DMatrix<f64>) -> DMatrix<f64> {
        match self {
            AtomMap::Identity => d.clone(),
            AtomMap::Stacked { w, .. } => w * d,
        }
    }

    fn lift_vec(&self, d: &DVector<f64>) -> DVector<f64> {
        match self {
            AtomMap::Identity => d.clone(),
            AtomMap::Stacked { w, .. } => w * d,
        }
    }

    fn recover(&self, u: &DVector<f64>) -> DVector<f64> {
        match self {
            AtomMap::Identity => u.clone(),
            AtomMap::Stacked { recover, .. } => recover * u,
        }
    }
}

/// `(λ²I + PᵀP)⁻¹ [λI  Pᵀ]`, the least-squares inverse of `W = [λI; P]`.
pub fn stacked_recovery_operator(lambda: f64, p: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let n = p.ncols();
    let mut normal = p.tr_mul(p);
    for i in 0..n {
        normal[(i, i)] += lambda * lambda;
    }
    let eig = SymmetricEigen::new(&normal);
    let largest = eig.largest();
    let smallest = eig.values[n - 1];
    if !(largest > 0.0) || smallest <= 1e-12 * largest {
        return Err(Error::SingularSystem);
    }
    let inv = normal.try_inverse().ok_or(Error::SingularSystem)?;
    let mut lifted_t = DMatrix::zeros(n, n + p.nrows());
    lifted_t.columns_mut(0, n).copy_from(&(DMatrix::<f64>::identity(n, n) * lambda));
    lifted_t.columns_mut(n, p.nrows()).copy_from(&p.transpose());
    Ok(inv * lifted_t)
}

/// Recovers `d` from `d̃ = [λI; P] d` in the least-squares sense.
pub fn recover_atom(lambda: f64, p: &DMatrix<f64>, lifted: &DVector<f64>) -> Result<DVector<f64>> {
    Ok(stacked_recovery_operator(lambda, p)? * lifted)
}

fn stack(lambda: f64, top: &DMatrix<f64>, bottom: &DMatrix<f64>) -> DMatrix<f64> {
    let mut out = DMatrix::zeros(top.nrows() + bottom.nrows(), top.ncols());
    out.rows_mut(0, top.nrows()).copy_from(&(top * lambda));
    out.rows_mut(top.nrows(), bottom.nrows()).copy_from(bottom);
    out
}

/// Sparse-codes every column of `data` against `lifted` with OMP.
pub fn sparse_code(data: &DMatrix<f64>, lifted: &DMatrix<f64>, sparsity: usize) -> Result<DMatrix<f64>> {
    let mut theta = DMatrix::zeros(lifted.ncols(), data.ncols());
    for (i, col) in data.column_iter().enumerate() {
        let y = col.into_owned();
        let tol = OMP_RELATIVE_TOL * y.norm();
        let r = omp(lifted, &y, sparsity, tol)?;
        theta.set_column(i, r.theta.values());
    }
    Ok(theta)
}

fn dominant_pair(e: &DMatrix<f64>) -> (DVector<f64>, f64, DVector<f64>) {
    let svd = e.clone().svd(true, true);
    let mut best = 0;
    for (i, &s) in svd.singular_values.iter().enumerate() {
        if s > svd.singular_values[best] {
            best = i;
        }
    }
    let mut u = svd.u.as_ref().expect("requested").column(best).into_owned();
    let mut v = svd.v_t.as_ref().expect("requested").row(best).transpose();
    // Deterministic sign: largest-magnitude entry of u positive.
    if u[u.iamax()] < 0.0 {
        u.neg_mut();
        v.neg_mut();
    }
    (u, svd.singular_values[best], v)
}

/// Updates each atom in turn from the samples that use it. Returns the
/// data-space objective `‖Z − W D Θ‖_F²` after each atom.
fn atom_sweep(
    data: &DMatrix<f64>,
    dict: &mut DMatrix<f64>,
    theta: &mut DMatrix<f64>,
    map: &AtomMap,
    iteration: usize,
    events: &mut Vec<LearningEvent>,
) -> Vec<f64> {
    let k = dict.ncols();
    let mut lifted = map.lift(dict);
    let mut residual = data - &lifted * &*theta;
    let mut replaced_samples: Vec<usize> = Vec::new();
    let mut history = Vec::with_capacity(k);
    for j in 0..k {
        let users: Vec<usize> = (0..theta.ncols()).filter(|&i| theta[(j, i)] != 0.0).collect();
        if users.is_empty() {
            let worst = (0..residual.ncols())
                .filter(|i| !replaced_samples.contains(i))
                .map(|i| (i, residual.column(i).norm_squared()))
                .fold(None, |best: Option<(usize, f64)>, (i, r)| match best {
                    Some((_, b)) if b >= r => best,
                    _ => Some((i, r)),
                });
            if let Some((sample, _)) = worst {
                let atom = map.recover(&data.column(sample).into_owned());
                let norm = atom.norm();
                if norm > 1e-12 {
                    let atom = atom / norm;
                    lifted.set_column(j, &map.lift_vec(&atom));
                    dict.set_column(j, &atom);
                    replaced_samples.push(sample);
                    events.push(LearningEvent::UnusedAtomReplaced { iteration, atom: j, sample });
                }
            }
            history.push(residual.norm_squared());
            continue;
        }
        let lifted_j = lifted.column(j).into_owned();
        let mut err = DMatrix::zeros(residual.nrows(), users.len());
        for (c, &i) in users.iter().enumerate() {
            err.set_column(c, &(residual.column(i) + &lifted_j * theta[(j, i)]));
        }
        let (u, sigma, v) = dominant_pair(&err);
        let atom = map.recover(&u);
        let norm = atom.norm();
        if !(norm > 1e-12) {
            events.push(LearningEvent::DegenerateAtom { iteration, atom: j });
            history.push(residual.norm_squared());
            continue;
        }
        let atom = atom / norm;
        let new_lifted = map.lift_vec(&atom);
        for (c, &i) in users.iter().enumerate() {
            let coeff = sigma * v[c] * norm;
            theta[(j, i)] = coeff;
            residual.set_column(i, &(err.column(c) - &new_lifted * coeff));
        }
        dict.set_column(j, &atom);
        lifted.set_column(j, &new_lifted);
        history.push(residual.norm_squared());
    }
    history
}

#[derive(Debug, Clone, PartialEq)]
pub struct KsvdConfig {
    pub atoms: usize,
    pub sparsity: usize,
    pub iterations: usize,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct KsvdResult {
    pub dictionary: Dictionary,
    /// `k × p` coefficient matrix.
    pub theta: DMatrix<f64>,
    /// `‖X − DΘ‖_F²` after each outer iteration.
    pub trace: Vec<f64>,
    pub events: Vec<LearningEvent>,
}

/// Learns a dictionary starting from [`initial_dictionary`].
pub fn ksvd(training: &TrainingSet, cfg: &KsvdConfig) -> Result<KsvdResult> {
    let d0 = initial_dictionary(training.x.nrows(), cfg.atoms, cfg.seed);
    ksvd_from(training, cfg, d0)
}

pub fn ksvd_from(training: &TrainingSet, cfg: &KsvdConfig, initial: DMatrix<f64>) -> Result<KsvdResult> {
    if cfg.sparsity == 0 || cfg.atoms == 0 || cfg.iterations == 0 {
        return Err(Error::InvalidConfig("atoms, sparsity and iterations must be positive".into()));
    }
    if initial.shape() != (training.x.nrows(), cfg.atoms) {
        return Err(Error::DimensionMismatch(format!(
            "initial dictionary must be {}x{}",
            training.x.nrows(),
            cfg.atoms
        )));
    }
    let x = &training.x;
    let mut dict = initial;
    let mut theta = DMatrix::zeros(cfg.atoms, x.ncols());
    let mut trace = Vec::with_capacity(cfg.iterations);
    let mut events = Vec::new();
    for it in 0..cfg.iterations {
        theta = sparse_code(x, &dict, cfg.sparsity)?;
        atom_sweep(x, &mut dict, &mut theta, &AtomMap::Identity, it, &mut events);
        let objective = (x - &dict * &theta).norm_squared();
        let stalled = trace.last().is_some_and(|&prev: &f64| {
            let gain = prev - objective;
            gain >= 0.0 && gain < STALL_TOL * prev
        });
        trace.push(objective);
        if stalled {
            break;
        }
    }
    Ok(KsvdResult { dictionary: Dictionary::new(dict)?, theta, trace, events })
}

/// One K-SVD atom sweep with the coefficients' sparsity pattern held fixed.
/// Returns `‖X − DΘ‖_F²` after each atom.
pub fn ksvd_atom_sweep(x: &DMatrix<f64>, dict: &mut DMatrix<f64>, theta: &mut DMatrix<f64>) -> Vec<f64> {
    let mut events = Vec::new();
    atom_sweep(x, dict, theta, &AtomMap::Identity, 0, &mut events)
}

/// How Coupled-KSVD designs `P` for the current dictionary.
#[derive(Debug, Clone, PartialEq)]
pub enum ProjectionDesigner {
    Elad(EladConfig),
    Sapiro { m: usize, seed: u64 },
    AltProj(AltProjConfig),
    /// Keep a given projection throughout.
    Fixed(ProjectionMatrix),
}

impl ProjectionDesigner {
    pub fn design(&self, dict: &Dictionary) -> Result<ProjectionMatrix> {
        match self {
            ProjectionDesigner::Elad(cfg) => Ok(elad_optimize(dict, cfg)?.projection),
            ProjectionDesigner::Sapiro { m, seed } => Ok(sapiro_optimize(dict, *m, *seed)?.projection),
            ProjectionDesigner::AltProj(cfg) => Ok(altproj_optimize(dict, cfg)?.projection),
            ProjectionDesigner::Fixed(p) => Ok(p.clone()),
        }
    }

    pub fn measurements(&self) -> usize {
        match self {
            ProjectionDesigner::Elad(cfg) => cfg.m,
            ProjectionDesigner::Sapiro { m, .. } => *m,
            ProjectionDesigner::AltProj(cfg) => cfg.m,
            ProjectionDesigner::Fixed(p) => p.measurements(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CoupledConfig {
    pub lambda: f64,
    pub atoms: usize,
    pub sparsity: usize,
    pub max_outer_iterations: usize,
    pub designer: ProjectionDesigner,
    pub seed: u64,
}

impl CoupledConfig {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.lambda) {
            return Err(Error::InvalidConfig(format!("lambda must lie in [0, 1], got {}", self.lambda)));
        }
        if self.sparsity == 0 || self.atoms == 0 || self.max_outer_iterations == 0 {
            return Err(Error::InvalidConfig("atoms, sparsity and iterations must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CoupledTraceEntry {
    /// `λ‖X − DΘ‖_F²`.
    pub term1: f64,
    /// `‖Y − PDΘ‖_F²`.
    pub term2: f64,
    /// The stacked objective `‖Z − WDΘ‖_F² = λ²‖X − DΘ‖_F² + ‖Y − PDΘ‖_F²`.
    pub stacked: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CoupledResult {
    pub projection: ProjectionMatrix,
    pub dictionary: Dictionary,
    pub theta: DMatrix<f64>,
    pub trace: Vec<CoupledTraceEntry>,
    pub events: Vec<LearningEvent>,
}

/// Alternates projection design, stacked sparse coding and stacked atom
/// updates.
///
/// When the training set carries measurements `Y` they are used as given;
/// otherwise `Y = P_q X + N` is formed each iteration with one fixed noise
/// realization `N` of standard deviation `sigma`.
pub fn coupled_ksvd(training: &TrainingSet, cfg: &CoupledConfig) -> Result<CoupledResult> {
    cfg.validate()?;
    let x = &training.x;
    let (n, p) = x.shape();
    let m = cfg.designer.measurements();
    if let Some(y) = &training.y {
        if y.ncols() != p || y.nrows() != m {
            return Err(Error::DimensionMismatch(format!(
                "measurements are {}x{}, expected {m}x{p}",
                y.nrows(),
                y.ncols()
            )));
        }
    }
    let noise = {
        let mut rng = rng_from_seed(derive_seed(cfg.seed, Stage::Noise, 0, 0));
        gaussian_matrix(m, p, &mut rng) * training.sigma
    };

    let mut dict = initial_dictionary(n, cfg.atoms, cfg.seed);
    let mut theta = DMatrix::zeros(cfg.atoms, p);
    let mut projection = ProjectionMatrix::new(DMatrix::zeros(m, n))?;
    let mut trace: Vec<CoupledTraceEntry> = Vec::new();
    let mut events = Vec::new();

    for it in 0..cfg.max_outer_iterations {
        projection = cfg.designer.design(&Dictionary::new(dict.clone())?)?;
        let pm = projection.as_matrix();
        let y = match &training.y {
            Some(y) => y.clone(),
            None => pm * x + &noise,
        };
        let z = stack(cfg.lambda, x, &y);
        let w = stack(cfg.lambda, &DMatrix::identity(n, n), pm);
        let map = AtomMap::Stacked { w, recover: stacked_recovery_operator(cfg.lambda, pm)? };

        theta = sparse_code(&z, &map.lift(&dict), cfg.sparsity)?;
        atom_sweep(&z, &mut dict, &mut theta, &map, it, &mut events);

        let approx = &dict * &theta;
        let fit = (x - &approx).norm_squared();
        let term2 = (&y - pm * &approx).norm_squared();
        let entry = CoupledTraceEntry {
            term1: cfg.lambda * fit,
            term2,
            stacked: cfg.lambda * cfg.lambda * fit + term2,
        };
        let stalled = trace.last().is_some_and(|prev| {
            let before = prev.term1 + prev.term2;
            let gain = before - (entry.term1 + entry.term2);
            gain >= 0.0 && gain < STALL_TOL * before
        });
        trace.push(entry);
        if stalled {
            break;
        }
    }
    Ok(CoupledResult { projection, dictionary: Dictionary::new(dict)?, theta, trace, events })
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::dmatrix;

    #[test]
    fn rank_one_block_is_reproduced_exactly() {
        // Every sample uses atom 0 only and lies on one direction.
        let dir = DVector::from_vec(alloc::vec![0.6, 0.8]);
        let x = &dir * nalgebra::RowDVector::from_vec(alloc::vec![1.0, -2.0, 0.5]);
        let mut dict = dmatrix![1.0, 0.0; 0.0, 1.0];
        let mut theta = dmatrix![1.0, 1.0, 1.0; 0.0, 0.0, 0.0];
        let history = ksvd_atom_sweep(&x, &mut dict, &mut theta);
        assert!(history[0] < 1e-24);
        assert!((dict.column(0) - &dir).norm() < 1e-12);
    }

    #[test]
    fn unused_atom_takes_worst_sample() {
        let x = dmatrix![1.0, 0.0; 0.0, 3.0];
        let mut dict = dmatrix![1.0, 0.6; 0.0, 0.8];
        let mut theta = dmatrix![1.0, 0.0; 0.0, 0.0];
        ksvd_atom_sweep(&x, &mut dict, &mut theta);
        assert!((dict.column(1) - DVector::from_vec(alloc::vec![0.0, 1.0])).norm() < 1e-12);
    }

    #[test]
    fn single_iteration_smoke() {
        let x = gaussian_matrix(6, 40, &mut rng_from_seed(1));
        let cfg = KsvdConfig { atoms: 10, sparsity: 2, iterations: 1, seed: 4 };
        let r = ksvd(&TrainingSet::new(x), &cfg).unwrap();
        assert_eq!(r.trace.len(), 1);
        assert!(r.trace[0].is_finite());
    }

    #[test]
    fn singular_stack_is_reported() {
        let p = dmatrix![1.0, 0.0, 0.0];
        assert_eq!(stacked_recovery_operator(0.0, &p).unwrap_err(), Error::SingularSystem);
        assert!(stacked_recovery_operator(0.5, &p).is_ok());
    }

    #[test]
    fn two_ortho_dictionary_has_low_coherence() {
        let d = two_ortho_dictionary(8, 3).unwrap();
        let mu = crate::coherence::mutual_coherence(d.as_matrix()).unwrap().mu;
        assert!((mu - 1.0 / 8f64.sqrt()).abs() < 1e-12);
        assert!(two_ortho_dictionary(6, 3).is_err());
    }

    #[test]
    fn coupled_rejects_bad_lambda() {
        let cfg = CoupledConfig {
            lambda: 1.5,
            atoms: 4,
            sparsity: 1,
            max_outer_iterations: 1,
            designer: ProjectionDesigner::Sapiro { m: 1, seed: 0 },
            seed: 0,
        };
        let x = gaussian_matrix(3, 10, &mut rng_from_seed(1));
        assert!(matches!(coupled_ksvd(&TrainingSet::new(x), &cfg), Err(Error::InvalidConfig(_))));
    }
}
