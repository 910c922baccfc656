//! Dense-matrix primitives shared by the optimizers: column normalization,
//! Gram matrices, symmetric rank truncation, square-root factors and the
//! least-squares back-projection `P = S D⁺`.

use alloc::format;
use alloc::vec::Vec;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// Column norms at or below this value are treated as zero.
pub const ZERO_COLUMN_TOL: f64 = 1e-12;

const SYMMETRY_TOL: f64 = 1e-12;

fn check_finite(m: &DMatrix<f64>) -> Result<()> {
    for c in 0..m.ncols() {
        for r in 0..m.nrows() {
            if !m[(r, c)].is_finite() {
                return Err(Error::NonFinite { row: r, col: c });
            }
        }
    }
    Ok(())
}

fn check_columns(m: &DMatrix<f64>) -> Result<()> {
    for (j, col) in m.column_iter().enumerate() {
        if col.norm() <= ZERO_COLUMN_TOL {
            return Err(Error::ZeroColumn(j));
        }
    }
    Ok(())
}

/// An `n × k` dictionary whose columns (atoms) are all nonzero.
#[derive(Debug, Clone, PartialEq)]
pub struct Dictionary(DMatrix<f64>);

impl Dictionary {
    pub fn new(data: DMatrix<f64>) -> Result<Self> {
        if data.is_empty() {
            return Err(Error::Empty);
        }
        check_finite(&data)?;
        check_columns(&data)?;
        Ok(Self(data))
    }

    /// Signal dimension `n`.
    pub fn signal_dim(&self) -> usize {
        self.0.nrows()
    }

    /// Number of atoms `k`.
    pub fn atoms(&self) -> usize {
        self.0.ncols()
    }

    pub fn as_matrix(&self) -> &DMatrix<f64> {
        &self.0
    }

    pub fn into_inner(self) -> DMatrix<f64> {
        self.0
    }
}

impl AsRef<DMatrix<f64>> for Dictionary {
    fn as_ref(&self) -> &DMatrix<f64> {
        &self.0
    }
}

/// An `m × n` sensing matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct ProjectionMatrix(DMatrix<f64>);

impl ProjectionMatrix {
    pub fn new(data: DMatrix<f64>) -> Result<Self> {
        if data.is_empty() {
            return Err(Error::Empty);
        }
        check_finite(&data)?;
        Ok(Self(data))
    }

    /// Number of measurements `m`.
    pub fn measurements(&self) -> usize {
        self.0.nrows()
    }

    pub fn as_matrix(&self) -> &DMatrix<f64> {
        &self.0
    }

    pub fn into_inner(self) -> DMatrix<f64> {
        self.0
    }

    /// The effective dictionary `P D`.
    pub fn effective(&self, dict: &Dictionary) -> Result<EffectiveDictionary> {
        EffectiveDictionary::new(self, dict)
    }
}

impl AsRef<DMatrix<f64>> for ProjectionMatrix {
    fn as_ref(&self) -> &DMatrix<f64> {
        &self.0
    }
}

/// The product `P D` seen by the pursuit solvers.
#[derive(Debug, Clone, PartialEq)]
pub struct EffectiveDictionary(DMatrix<f64>);

impl EffectiveDictionary {
    pub fn new(proj: &ProjectionMatrix, dict: &Dictionary) -> Result<Self> {
        if proj.0.ncols() != dict.0.nrows() {
            return Err(Error::DimensionMismatch(format!(
                "projection is {}x{} but dictionary has {} rows",
                proj.0.nrows(),
                proj.0.ncols(),
                dict.0.nrows()
            )));
        }
        Ok(Self(&proj.0 * &dict.0))
    }

    pub fn as_matrix(&self) -> &DMatrix<f64> {
        &self.0
    }

    pub fn into_inner(self) -> DMatrix<f64> {
        self.0
    }
}

impl AsRef<DMatrix<f64>> for EffectiveDictionary {
    fn as_ref(&self) -> &DMatrix<f64> {
        &self.0
    }
}

/// A symmetric `k × k` matrix of pairwise atom correlations.
#[derive(Debug, Clone, PartialEq)]
pub struct GramMatrix(DMatrix<f64>);

impl GramMatrix {
    /// Wraps a square matrix, checking symmetry relative to its largest entry.
    pub fn from_symmetric(data: DMatrix<f64>) -> Result<Self> {
        if !data.is_square() {
            return Err(Error::DimensionMismatch(format!(
                "Gram matrix must be square, got {}x{}",
                data.nrows(),
                data.ncols()
            )));
        }
        if data.is_empty() {
            return Err(Error::Empty);
        }
        check_finite(&data)?;
        let scale = data.amax().max(1.0);
        let k = data.nrows();
        for i in 0..k {
            for j in (i + 1)..k {
                if (data[(i, j)] - data[(j, i)]).abs() > SYMMETRY_TOL * scale {
                    return Err(Error::DimensionMismatch(format!(
                        "matrix is not symmetric at ({i}, {j})"
                    )));
                }
            }
        }
        Ok(Self(data))
    }

    pub fn size(&self) -> usize {
        self.0.nrows()
    }

    pub fn as_matrix(&self) -> &DMatrix<f64> {
        &self.0
    }

    pub fn into_inner(self) -> DMatrix<f64> {
        self.0
    }

    /// Upper-triangle magnitudes `|g_ij|`, `i < j`, in row-major order.
    pub fn offdiag_magnitudes(&self) -> Vec<f64> {
        let k = self.size();
        let mut out = Vec::with_capacity(k * k.saturating_sub(1) / 2);
        for i in 0..k {
            for j in (i + 1)..k {
                out.push(self.0[(i, j)].abs());
            }
        }
        out
    }

    /// Largest off-diagonal magnitude (0 for a 1×1 matrix).
    pub fn max_offdiag(&self) -> f64 {
        self.offdiag_magnitudes().into_iter().fold(0.0, f64::max)
    }
}

impl AsRef<DMatrix<f64>> for GramMatrix {
    fn as_ref(&self) -> &DMatrix<f64> {
        &self.0
    }
}

/// Scales every column of `m` to unit Euclidean norm.
pub fn normalize_columns(m: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let mut out = m.clone();
    for (j, mut col) in out.column_iter_mut().enumerate() {
        let norm = col.norm();
        if norm <= ZERO_COLUMN_TOL {
            return Err(Error::ZeroColumn(j));
        }
        col /= norm;
    }
    Ok(out)
}

/// `G = M̃ᵀ M̃` where `M̃` is `m` with unit-norm columns.
pub fn gram(m: &DMatrix<f64>) -> Result<GramMatrix> {
    let normalized = normalize_columns(m)?;
    let mut g = normalized.tr_mul(&normalized);
    symmetrize(&mut g);
    for i in 0..g.nrows() {
        g[(i, i)] = 1.0;
    }
    Ok(GramMatrix(g))
}

pub(crate) fn symmetrize(m: &mut DMatrix<f64>) {
    let k = m.nrows();
    for i in 0..k {
        for j in (i + 1)..k {
            let avg = 0.5 * (m[(i, j)] + m[(j, i)]);
            m[(i, j)] = avg;
            m[(j, i)] = avg;
        }
    }
}

/// Eigendecomposition of a symmetric matrix with a deterministic layout:
/// eigenvalues in non-increasing order, each eigenvector's first nonzero
/// component positive.
#[derive(Debug, Clone)]
pub struct SymmetricEigen {
    pub values: DVector<f64>,
    /// Eigenvectors as columns, aligned with `values`.
    pub vectors: DMatrix<f64>,
}

impl SymmetricEigen {
    pub fn new(a: &DMatrix<f64>) -> Self {
        let mut sym = a.clone();
        symmetrize(&mut sym);
        let eig = sym.symmetric_eigen();
        let n = eig.eigenvalues.len();
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&x, &y| {
            eig.eigenvalues[y]
                .partial_cmp(&eig.eigenvalues[x])
                .unwrap_or(core::cmp::Ordering::Equal)
                .then(x.cmp(&y))
        });
        let values = DVector::from_iterator(n, order.iter().map(|&i| eig.eigenvalues[i]));
        let mut vectors = DMatrix::zeros(n, n);
        for (dst, &src) in order.iter().enumerate() {
            let mut col = eig.eigenvectors.column(src).into_owned();
            if let Some(first) = col.iter().copied().find(|v| v.abs() > ZERO_COLUMN_TOL) {
                if first < 0.0 {
                    col.neg_mut();
                }
            }
            vectors.set_column(dst, &col);
        }
        Self { values, vectors }
    }

    pub fn largest(&self) -> f64 {
        self.values[0]
    }

    /// `V_m diag(√max(λ,0))`, a `k × m` factor of the PSD truncation.
    fn scaled_leading(&self, m: usize) -> DMatrix<f64> {
        let mut w = self.vectors.columns(0, m).into_owned();
        for (j, mut col) in w.column_iter_mut().enumerate() {
            col *= self.values[j].max(0.0).sqrt();
        }
        w
    }
}

fn check_rank(m: usize, k: usize) -> Result<()> {
    if m < 1 || m > k {
        return Err(Error::InvalidRank { rank: m, max: k });
    }
    Ok(())
}

/// Keeps the `m` algebraically largest eigenpairs of `g`, clamping negative
/// retained eigenvalues to zero. The result is PSD with rank at most `m`.
pub fn symmetric_rank_truncate(g: &DMatrix<f64>, m: usize) -> Result<DMatrix<f64>> {
    if !g.is_square() {
        return Err(Error::DimensionMismatch(format!("{}x{} is not square", g.nrows(), g.ncols())));
    }
    check_rank(m, g.nrows())?;
    let eig = SymmetricEigen::new(g);
    Ok(truncation_from(&eig, m))
}

fn truncation_from(eig: &SymmetricEigen, m: usize) -> DMatrix<f64> {
    let w = eig.scaled_leading(m);
    let mut out = &w * w.transpose();
    symmetrize(&mut out);
    out
}

/// Returns an `m × k` matrix `S` with `SᵀS = g`, built from the leading `m`
/// eigenpairs. Rows beyond the rank of `g` are zero; `m > k` pads with
/// zero rows.
pub fn sqrt_factor(g: &DMatrix<f64>, m: usize) -> Result<DMatrix<f64>> {
    if !g.is_square() {
        return Err(Error::DimensionMismatch(format!("{}x{} is not square", g.nrows(), g.ncols())));
    }
    if m < 1 {
        return Err(Error::InvalidRank { rank: m, max: g.nrows() });
    }
    let eig = SymmetricEigen::new(g);
    factor_from(&eig, m)
}

fn factor_from(eig: &SymmetricEigen, m: usize) -> Result<DMatrix<f64>> {
    let k = eig.values.len();
    let kept = m.min(k);
    let largest = eig.largest().abs().max(ZERO_COLUMN_TOL);
    let smallest = eig.values[kept - 1];
    if smallest < -1e-8 * largest {
        return Err(Error::NotPsd { min: smallest, max: eig.largest() });
    }
    let w = eig.scaled_leading(kept);
    let mut s = DMatrix::zeros(m, k);
    s.rows_mut(0, kept).copy_from(&w.transpose());
    Ok(s)
}

/// Rank-`m` PSD truncation of `g` together with its `m × k` square-root
/// factor, from a single eigendecomposition. `m` is capped at `k`; the
/// factor is zero-padded back to `m` rows.
pub fn truncate_and_factor(g: &DMatrix<f64>, m: usize) -> Result<(DMatrix<f64>, DMatrix<f64>)> {
    if !g.is_square() {
        return Err(Error::DimensionMismatch(format!("{}x{} is not square", g.nrows(), g.ncols())));
    }
    if m < 1 {
        return Err(Error::InvalidRank { rank: m, max: g.nrows() });
    }
    let eig = SymmetricEigen::new(g);
    let kept = m.min(g.nrows());
    let truncated = truncation_from(&eig, kept);
    let w = eig.scaled_leading(kept);
    let mut s = DMatrix::zeros(m, g.nrows());
    s.rows_mut(0, kept).copy_from(&w.transpose());
    Ok((truncated, s))
}

/// Moore–Penrose pseudoinverse of a fixed matrix, computed once via SVD.
#[derive(Debug, Clone)]
pub struct Pseudoinverse {
    pinv: DMatrix<f64>,
    rank: usize,
}

impl Pseudoinverse {
    pub fn new(a: &DMatrix<f64>) -> Self {
        let (rows, cols) = a.shape();
        if a.is_empty() {
            return Self { pinv: DMatrix::zeros(cols, rows), rank: 0 };
        }
        let svd = a.clone().svd(true, true);
        let u = svd.u.as_ref().expect("left singular vectors requested");
        let v_t = svd.v_t.as_ref().expect("right singular vectors requested");
        let sigma_max = svd.singular_values.max();
        let cutoff = (sigma_max * (rows.max(cols) as f64) * f64::EPSILON).max(ZERO_COLUMN_TOL);
        let mut pinv = DMatrix::zeros(cols, rows);
        let mut rank = 0;
        for (i, &s) in svd.singular_values.iter().enumerate() {
            if s > cutoff {
                rank += 1;
                pinv += (v_t.row(i).transpose() / s) * u.column(i).transpose();
            }
        }
        Self { pinv, rank }
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.pinv
    }

    pub fn rank(&self) -> usize {
        self.rank
    }
}

/// Frobenius-optimal `P` for `‖S − P D‖_F`, with `D⁺` precomputed so the
/// optimizers can reuse it every iteration.
#[derive(Debug, Clone)]
pub struct ProjectionSolver {
    dict_pinv: Pseudoinverse,
    signal_dim: usize,
    atoms: usize,
}

impl ProjectionSolver {
    pub fn new(dict: &Dictionary) -> Self {
        Self {
            dict_pinv: Pseudoinverse::new(dict.as_matrix()),
            signal_dim: dict.signal_dim(),
            atoms: dict.atoms(),
        }
    }

    pub fn solve(&self, s: &DMatrix<f64>) -> Result<ProjectionMatrix> {
        if s.ncols() != self.atoms {
            return Err(Error::DimensionMismatch(format!(
                "target has {} columns but the dictionary has {} atoms",
                s.ncols(),
                self.atoms
            )));
        }
        let p = s * self.dict_pinv.matrix();
        debug_assert_eq!(p.ncols(), self.signal_dim);
        ProjectionMatrix::new(p)
    }
}

/// Least-squares back-projection: the `P` minimizing `‖S − P D‖_F`.
pub fn lsq_projection(s: &DMatrix<f64>, dict: &Dictionary) -> Result<ProjectionMatrix> {
    ProjectionSolver::new(dict).solve(s)
}

/// Minimum-norm least-squares solution of `a x ≈ b`.
pub fn solve_least_squares(a: &DMatrix<f64>, b: &DVector<f64>) -> DVector<f64> {
    if a.ncols() == 0 {
        return DVector::zeros(0);
    }
    // Full column rank is the common case; fall back to the pseudoinverse otherwise.
    let qr = a.clone().qr();
    let r = qr.r();
    let diag_max = r.diagonal().amax();
    let well_posed = a.nrows() >= a.ncols()
        && r.diagonal().iter().all(|d| d.abs() > 1e-10 * diag_max.max(ZERO_COLUMN_TOL));
    if well_posed {
        let rhs = qr.q().tr_mul(b);
        if let Some(x) = r.solve_upper_triangular(&rhs) {
            return x;
        }
    }
    Pseudoinverse::new(a).matrix() * b
}

/// Frobenius norm of `a − b`.
pub fn frobenius_distance(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    (a - b).norm()
}
