//! Coherence metrics: mutual coherence `μ`, the t-averaged coherence `μ_t`,
//! relative thresholds and histograms of off-diagonal Gram magnitudes.

use alloc::vec::Vec;

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::linalg::{gram, GramMatrix};

/// Largest off-diagonal magnitude and the first `(i, j)`, `i < j`, attaining it.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MutualCoherence {
    pub mu: f64,
    pub pair: (usize, usize),
}

pub fn mutual_coherence(dict: &DMatrix<f64>) -> Result<MutualCoherence> {
    if dict.ncols() < 2 {
        return Err(Error::TooFewColumns);
    }
    Ok(gram_coherence(&gram(dict)?))
}

/// Mutual coherence read off an existing Gram matrix.
pub fn gram_coherence(g: &GramMatrix) -> MutualCoherence {
    let m = g.as_matrix();
    let k = g.size();
    let mut best = MutualCoherence { mu: 0.0, pair: (0, 1.min(k.saturating_sub(1))) };
    let mut seen = false;
    for i in 0..k {
        for j in (i + 1)..k {
            let v = m[(i, j)].abs();
            if !seen || v > best.mu {
                best = MutualCoherence { mu: v, pair: (i, j) };
                seen = true;
            }
        }
    }
    best
}

pub fn t_average_coherence(dict: &DMatrix<f64>, t: f64) -> Result<f64> {
    if dict.ncols() < 2 {
        return Err(Error::TooFewColumns);
    }
    gram_t_average(&gram(dict)?, t)
}

/// Mean of the off-diagonal magnitudes strictly above `t`.
pub fn gram_t_average(g: &GramMatrix, t: f64) -> Result<f64> {
    let (sum, count) = g
        .offdiag_magnitudes()
        .into_iter()
        .filter(|&v| v > t)
        .fold((0.0, 0usize), |(s, c), v| (s + v, c + 1));
    if count == 0 {
        return Err(Error::EmptyAverage(t));
    }
    Ok(sum / count as f64)
}

/// Threshold chosen so that a given fraction of off-diagonal entries lie
/// strictly above it.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RelativeThreshold {
    pub t: f64,
    /// Number of upper-triangle magnitudes the percentage asked for.
    pub requested: usize,
    /// Set when ties make the requested count unreachable under strict inequality.
    pub degenerate: bool,
}

pub fn relative_threshold(g: &GramMatrix, percent: f64) -> RelativeThreshold {
    let mut mags = g.offdiag_magnitudes();
    let population = mags.len();
    let raw = percent / 100.0 * population as f64;
    // Shave float noise so that e.g. 50% of 4 asks for 2, not 3.
    let requested = ((raw - 1e-9 * raw.max(1.0)).ceil().max(0.0) as usize).min(population);
    mags.sort_by(|a, b| b.partial_cmp(a).unwrap_or(core::cmp::Ordering::Equal));
    let t = if requested < population { mags[requested] } else { 0.0 };
    let above = mags.iter().filter(|&&v| v > t).count();
    RelativeThreshold { t, requested, degenerate: above != requested }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Histogram {
    pub bins: Vec<HistogramBin>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HistogramBin {
    pub lower: f64,
    pub count: usize,
}

impl Histogram {
    pub fn total(&self) -> usize {
        self.bins.iter().map(|b| b.count).sum()
    }
}

/// Histogram of upper-triangle magnitudes over `bins` uniform bins on `[0, 1]`.
/// The last bin is closed on the right; values above 1 (rounding) land there too.
pub fn offdiag_histogram(g: &GramMatrix, bins: usize) -> Histogram {
    let bins = bins.max(1);
    let mut counts = alloc::vec![0usize; bins];
    for v in g.offdiag_magnitudes() {
        let idx = ((v * bins as f64).floor().max(0.0) as usize).min(bins - 1);
        counts[idx] += 1;
    }
    Histogram {
        bins: counts
            .into_iter()
            .enumerate()
            .map(|(i, count)| HistogramBin { lower: i as f64 / bins as f64, count })
            .collect(),
    }
}

/// Bundle of all coherence diagnostics for one effective dictionary.
#[derive(Debug, Clone, PartialEq)]
pub struct CoherenceReport {
    pub mu: f64,
    /// `None` when nothing exceeds `t`.
    pub mu_t: Option<f64>,
    pub t: f64,
    pub histogram: Histogram,
    pub argmax_pair: (usize, usize),
}

pub fn coherence_report(dict: &DMatrix<f64>, t: f64, bins: usize) -> Result<CoherenceReport> {
    if dict.ncols() < 2 {
        return Err(Error::TooFewColumns);
    }
    let g = gram(dict)?;
    let mc = gram_coherence(&g);
    Ok(CoherenceReport {
        mu: mc.mu,
        mu_t: gram_t_average(&g, t).ok(),
        t,
        histogram: offdiag_histogram(&g, bins),
        argmax_pair: mc.pair,
    })
}
