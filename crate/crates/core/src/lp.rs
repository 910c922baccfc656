//! Dense two-phase primal simplex for `min cᵀx  s.t.  A x = b, x ≥ 0`.
//!
//! Problems here are small (tens of rows, hundreds of columns), so a full
//! tableau is used. Pivoting is Dantzig's rule, switching to Bland's rule
//! after a run of degenerate pivots so the method cannot cycle. The final
//! basis is re-solved from the original data and certified through its
//! dual.

use alloc::vec::Vec;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

const PIVOT_TOL: f64 = 1e-11;
const DEGENERATE_RUN: usize = 50;

#[derive(Debug, Clone, PartialEq)]
pub struct LpSolution {
    pub x: DVector<f64>,
    pub objective: f64,
    /// Dual vector `y` with `Aᵀy ≤ c` at optimality.
    pub dual: DVector<f64>,
    pub pivots: usize,
}

struct Tableau {
    rows: usize,
    cols: usize,
    // rows × (cols + 1); the last column is the right-hand side.
    t: DMatrix<f64>,
    basis: Vec<usize>,
    pivots: usize,
}

impl Tableau {
    fn rhs(&self, i: usize) -> f64 {
        self.t[(i, self.cols)]
    }

    fn pivot(&mut self, row: usize, col: usize) {
        let width = self.cols + 1;
        let p = self.t[(row, col)];
        for j in 0..width {
            self.t[(row, j)] /= p;
        }
        for i in 0..self.rows {
            if i == row {
                continue;
            }
            let f = self.t[(i, col)];
            if f != 0.0 {
                for j in 0..width {
                    let v = self.t[(row, j)];
                    self.t[(i, j)] -= f * v;
                }
                self.t[(i, col)] = 0.0;
            }
        }
        self.basis[row] = col;
        self.pivots += 1;
    }

    fn reduced_costs(&self, cost: &[f64], allowed: usize) -> Vec<f64> {
        let mut rc: Vec<f64> = cost[..allowed].to_vec();
        for (i, &b) in self.basis.iter().enumerate() {
            let cb = cost[b];
            if cb != 0.0 {
                for (j, r) in rc.iter_mut().enumerate() {
                    *r -= cb * self.t[(i, j)];
                }
            }
        }
        rc
    }

    /// Runs simplex iterations on columns `0..allowed` until optimal.
    fn optimize(&mut self, cost: &[f64], allowed: usize, max_pivots: usize) -> Result<()> {
        let mut degenerate = 0usize;
        let scale = cost.iter().fold(1.0f64, |m, c| m.max(c.abs()));
        loop {
            if self.pivots >= max_pivots {
                return Err(Error::MaxIter(max_pivots));
            }
            let rc = self.reduced_costs(cost, allowed);
            let threshold = -1e-10 * scale;
            let entering = if degenerate >= DEGENERATE_RUN {
                rc.iter().position(|&r| r < threshold)
            } else {
                let mut best: Option<(usize, f64)> = None;
                for (j, &r) in rc.iter().enumerate() {
                    if r < threshold && best.is_none_or(|(_, b)| r < b) {
                        best = Some((j, r));
                    }
                }
                best.map(|(j, _)| j)
            };
            let Some(col) = entering else { return Ok(()) };
            let mut leave: Option<(usize, f64)> = None;
            for i in 0..self.rows {
                let a = self.t[(i, col)];
                if a > PIVOT_TOL {
                    let ratio = self.rhs(i).max(0.0) / a;
                    let better = match leave {
                        None => true,
                        Some((li, lr)) => {
                            ratio < lr - 1e-14 || (ratio <= lr + 1e-14 && self.basis[i] < self.basis[li])
                        }
                    };
                    if better {
                        leave = Some((i, ratio));
                    }
                }
            }
            // Unbounded directions cannot occur for the bounded objectives used here.
            let Some((row, ratio)) = leave else { return Err(Error::Infeasible) };
            if ratio <= 1e-14 {
                degenerate += 1;
            } else {
                degenerate = 0;
            }
            self.pivot(row, col);
        }
    }
}

/// Solves `min cᵀx s.t. A x = b, x ≥ 0`. `feas_tol` bounds the phase-one
/// residual (relative to `max(1, ‖b‖∞)`) below which the problem counts as feasible.
pub fn solve_standard_form(
    a: &DMatrix<f64>,
    b: &DVector<f64>,
    c: &DVector<f64>,
    feas_tol: f64,
    max_pivots: usize,
) -> Result<LpSolution> {
    let (rows, n) = a.shape();
    if b.len() != rows || c.len() != n {
        return Err(Error::DimensionMismatch(alloc::format!(
            "A is {rows}x{n}, b has {} entries, c has {}",
            b.len(),
            c.len()
        )));
    }
    let cols = n + rows;
    let mut t = DMatrix::zeros(rows, cols + 1);
    for i in 0..rows {
        let sign = if b[i] < 0.0 { -1.0 } else { 1.0 };
        for j in 0..n {
            t[(i, j)] = sign * a[(i, j)];
        }
        t[(i, n + i)] = 1.0;
        t[(i, cols)] = sign * b[i];
    }
    let mut tab = Tableau { rows, cols, t, basis: (n..cols).collect(), pivots: 0 };

    // Phase one: minimize the sum of artificials.
    let mut phase_one = alloc::vec![0.0; cols];
    for v in phase_one.iter_mut().skip(n) {
        *v = 1.0;
    }
    tab.optimize(&phase_one, cols, max_pivots)?;
    let infeasibility: f64 = tab.basis.iter().enumerate().filter(|(_, &bv)| bv >= n).map(|(i, _)| tab.rhs(i)).sum();
    let b_scale = b.amax().max(1.0);
    if infeasibility > feas_tol * b_scale {
        return Err(Error::Infeasible);
    }

    // Drive remaining artificials out of the basis; rows that cannot be
    // pivoted are redundant and dropped.
    let mut redundant = alloc::vec![false; rows];
    for i in 0..rows {
        if tab.basis[i] >= n {
            let col = (0..n)
                .filter(|&j| tab.t[(i, j)].abs() > 1e-9)
                .max_by(|&x, &y| tab.t[(i, x)].abs().partial_cmp(&tab.t[(i, y)].abs()).unwrap());
            match col {
                Some(j) => tab.pivot(i, j),
                None => redundant[i] = true,
            }
        }
    }

    let mut cost = alloc::vec![0.0; cols];
    cost[..n].copy_from_slice(c.as_slice());
    tab.optimize(&cost, n, max_pivots)?;

    polish(a, b, c, &tab, &redundant)
}

/// Recomputes the basic solution and dual from the original data so the
/// reported point is not polluted by accumulated tableau round-off.
fn polish(a: &DMatrix<f64>, b: &DVector<f64>, c: &DVector<f64>, tab: &Tableau, redundant: &[bool]) -> Result<LpSolution> {
    let n = a.ncols();
    let kept: Vec<usize> = (0..tab.rows).filter(|&i| !redundant[i]).collect();
    let basic: Vec<usize> = kept.iter().map(|&i| tab.basis[i]).collect();
    let mut x = DVector::zeros(n);
    let mut dual = DVector::zeros(a.nrows());
    if !basic.is_empty() {
        let bmat = DMatrix::from_fn(kept.len(), basic.len(), |r, s| a[(kept[r], basic[s])]);
        let rhs = DVector::from_fn(kept.len(), |r, _| b[kept[r]]);
        let lu = bmat.clone().lu();
        let refined = lu.solve(&rhs).filter(|xb| xb.iter().all(|v| v.is_finite()));
        match refined {
            Some(xb) => {
                for (s, &j) in basic.iter().enumerate() {
                    x[j] = xb[s].max(0.0);
                }
            }
            None => {
                for (r, &i) in kept.iter().enumerate() {
                    x[basic[r]] = tab.rhs(i).max(0.0);
                }
            }
        }
        let cb = DVector::from_fn(basic.len(), |s, _| c[basic[s]]);
        if let Some(y) = bmat.transpose().lu().solve(&cb) {
            for (r, &i) in kept.iter().enumerate() {
                dual[i] = y[r];
            }
        }
    }
    let objective = c.dot(&x);
    Ok(LpSolution { x, objective, dual, pivots: tab.pivots })
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::{dmatrix, dvector};

    #[test]
    fn small_lp() {
        // min -x1 - x2  s.t. x1 + 2x2 + s1 = 4, 3x1 + x2 + s2 = 6
        let a = dmatrix![1.0, 2.0, 1.0, 0.0; 3.0, 1.0, 0.0, 1.0];
        let b = dvector![4.0, 6.0];
        let c = dvector![-1.0, -1.0, 0.0, 0.0];
        let sol = solve_standard_form(&a, &b, &c, 1e-9, 100).unwrap();
        assert!((sol.x[0] - 1.6).abs() < 1e-12);
        assert!((sol.x[1] - 1.2).abs() < 1e-12);
        assert!((sol.objective + 2.8).abs() < 1e-12);
        // Dual feasibility: c - Aᵀy ≥ 0.
        let rc = &c - a.transpose() * &sol.dual;
        assert!(rc.iter().all(|&r| r > -1e-12));
    }

    #[test]
    fn infeasible_lp() {
        let a = dmatrix![1.0, 1.0];
        let b = dvector![-1.0];
        let c = dvector![1.0, 1.0];
        assert_eq!(solve_standard_form(&a, &b, &c, 1e-9, 100), Err(Error::Infeasible));
    }

    #[test]
    fn redundant_rows_are_tolerated() {
        let a = dmatrix![1.0, 1.0; 2.0, 2.0];
        let b = dvector![1.0, 2.0];
        let c = dvector![1.0, 2.0];
        let sol = solve_standard_form(&a, &b, &c, 1e-9, 100).unwrap();
        assert!((sol.x[0] - 1.0).abs() < 1e-12 && sol.x[1].abs() < 1e-12);
    }
}
