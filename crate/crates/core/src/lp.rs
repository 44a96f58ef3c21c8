//! Dense two-phase simplex for small standard-form linear programs:
//!
//! ```text
//! minimize c . x   subject to  A x = b,  x >= 0
//! ```
//!
//! Bland's rule on both the entering and leaving choices guarantees
//! termination under degeneracy. Sized for desk-scale programs (the
//! occupancy-measure masters solved here have tens of variables); no sparse
//! or revised machinery.

use crate::error::{Result, SolverError};

const PIVOT_EPS: f64 = 1e-9;
const FEAS_EPS: f64 = 1e-7;

/// A standard-form linear program.
#[derive(Debug, Clone)]
pub struct StandardLp {
    pub num_vars: usize,
    /// Row-major constraint matrix, `rows x num_vars`.
    pub a: Vec<Vec<f64>>,
    pub b: Vec<f64>,
    pub c: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum LpOutcome {
    Optimal { x: Vec<f64>, objective: f64 },
    Infeasible,
    Unbounded,
}

struct Tableau {
    rows: Vec<Vec<f64>>, // m x (n_total + 1), last column is the rhs
    cost: Vec<f64>,      // reduced-cost row, last cell is -objective
    basis: Vec<usize>,
    n_total: usize,
}

impl Tableau {
    fn rhs(&self, i: usize) -> f64 {
        self.rows[i][self.n_total]
    }

    fn pivot(&mut self, row: usize, col: usize) {
        let pivot = self.rows[row][col];
        for v in self.rows[row].iter_mut() {
            *v /= pivot;
        }
        for i in 0..self.rows.len() {
            if i == row {
                continue;
            }
            let factor = self.rows[i][col];
            if factor != 0.0 {
                for j in 0..=self.n_total {
                    self.rows[i][j] -= factor * self.rows[row][j];
                }
                self.rows[i][col] = 0.0;
            }
        }
        let factor = self.cost[col];
        if factor != 0.0 {
            for j in 0..=self.n_total {
                self.cost[j] -= factor * self.rows[row][j];
            }
            self.cost[col] = 0.0;
        }
        self.basis[row] = col;
    }

    /// Bland iteration restricted to columns `< col_limit`. Returns false on
    /// an unbounded ray.
    fn iterate(&mut self, col_limit: usize, max_iters: usize) -> Result<bool> {
        for _ in 0..max_iters {
            let entering = (0..col_limit).find(|&j| self.cost[j] < -PIVOT_EPS);
            let Some(col) = entering else { return Ok(true) };
            // ratio test; ties resolve to the smallest basis variable index
            let mut leave: Option<(usize, f64)> = None;
            for i in 0..self.rows.len() {
                let coeff = self.rows[i][col];
                if coeff <= PIVOT_EPS {
                    continue;
                }
                let ratio = self.rhs(i) / coeff;
                leave = match leave {
                    None => Some((i, ratio)),
                    Some((l, best)) => {
                        if ratio < best - PIVOT_EPS
                            || (ratio <= best + PIVOT_EPS && self.basis[i] < self.basis[l])
                        {
                            Some((i, ratio.min(best)))
                        } else {
                            Some((l, best))
                        }
                    }
                };
            }
            let Some((row, _)) = leave else { return Ok(false) };
            self.pivot(row, col);
        }
        Err(SolverError::Convergence(
            "simplex iteration cap exceeded".to_string(),
        ))
    }
}

/// Solves the program; `Optimal` carries the minimizing point and objective.
pub fn solve(lp: &StandardLp) -> Result<LpOutcome> {
    let m = lp.a.len();
    let n = lp.num_vars;
    if lp.b.len() != m || lp.c.len() != n || lp.a.iter().any(|r| r.len() != n) {
        return Err(SolverError::DimensionMismatch(
            "LP matrix, rhs and cost shapes disagree".to_string(),
        ));
    }
    let n_total = n + m; // originals plus one artificial per row
    let mut rows = Vec::with_capacity(m);
    for i in 0..m {
        let mut row = vec![0.0; n_total + 1];
        let flip = if lp.b[i] < 0.0 { -1.0 } else { 1.0 };
        for j in 0..n {
            row[j] = flip * lp.a[i][j];
        }
        row[n + i] = 1.0;
        row[n_total] = flip * lp.b[i];
        rows.push(row);
    }

    // Phase 1: minimize the artificial sum; reduced costs of the original
    // columns are the negated column sums under the artificial basis.
    let mut cost = vec![0.0; n_total + 1];
    for j in 0..n {
        cost[j] = -rows.iter().map(|r| r[j]).sum::<f64>();
    }
    cost[n_total] = -rows.iter().map(|r| r[n_total]).sum::<f64>();
    let mut tab = Tableau {
        rows,
        cost,
        basis: (n..n_total).collect(),
        n_total,
    };
    let max_iters = 200_000 + 100 * (n_total + m);
    tab.iterate(n_total, max_iters)?;
    let phase1 = -tab.cost[n_total];
    if phase1 > FEAS_EPS {
        return Ok(LpOutcome::Infeasible);
    }

    // Drive leftover artificials out of the basis; rows that cannot pivot on
    // any original column are redundant and dropped.
    let mut i = 0;
    while i < tab.basis.len() {
        if tab.basis[i] >= n {
            if let Some(col) = (0..n).find(|&j| tab.rows[i][j].abs() > PIVOT_EPS) {
                tab.pivot(i, col);
            } else {
                tab.rows.remove(i);
                tab.basis.remove(i);
                continue;
            }
        }
        i += 1;
    }

    // Phase 2 reduced costs from the original objective.
    let mut cost = vec![0.0; n_total + 1];
    cost[..n].copy_from_slice(&lp.c);
    for (i, &bv) in tab.basis.iter().enumerate() {
        let cb = if bv < n { lp.c[bv] } else { 0.0 };
        if cb != 0.0 {
            for j in 0..=n_total {
                cost[j] -= cb * tab.rows[i][j];
            }
        }
    }
    tab.cost = cost;
    if !tab.iterate(n, max_iters)? {
        return Ok(LpOutcome::Unbounded);
    }

    let mut x = vec![0.0; n];
    for (i, &bv) in tab.basis.iter().enumerate() {
        if bv < n {
            x[bv] = tab.rhs(i).max(0.0);
        }
    }
    let objective = lp.c.iter().zip(&x).map(|(c, x)| c * x).sum();
    Ok(LpOutcome::Optimal { x, objective })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn optimal(lp: &StandardLp) -> (Vec<f64>, f64) {
        match solve(lp).unwrap() {
            LpOutcome::Optimal { x, objective } => (x, objective),
            other => panic!("expected optimum, got {other:?}"),
        }
    }

    #[test]
    fn two_constraint_maximization() {
        // max x + y s.t. x + 2y <= 4, 3x + y <= 6  ->  x = 8/5, y = 6/5
        let lp = StandardLp {
            num_vars: 4, // x, y, s1, s2
            a: vec![vec![1.0, 2.0, 1.0, 0.0], vec![3.0, 1.0, 0.0, 1.0]],
            b: vec![4.0, 6.0],
            c: vec![-1.0, -1.0, 0.0, 0.0],
        };
        let (x, obj) = optimal(&lp);
        assert!((x[0] - 1.6).abs() < 1e-9 && (x[1] - 1.2).abs() < 1e-9, "{x:?}");
        assert!((obj + 2.8).abs() < 1e-9);
    }

    #[test]
    fn negative_rhs_rows_are_flipped() {
        // -x - y = -3 with x, y >= 0: a plain simplex on x + y = 3
        let lp = StandardLp {
            num_vars: 2,
            a: vec![vec![-1.0, -1.0]],
            b: vec![-3.0],
            c: vec![1.0, 2.0],
        };
        let (x, obj) = optimal(&lp);
        assert!((x[0] - 3.0).abs() < 1e-9);
        assert!((obj - 3.0).abs() < 1e-9);
    }

    #[test]
    fn detects_infeasible() {
        let lp = StandardLp {
            num_vars: 1,
            a: vec![vec![1.0], vec![1.0]],
            b: vec![1.0, 2.0],
            c: vec![0.0],
        };
        assert_eq!(solve(&lp).unwrap(), LpOutcome::Infeasible);
    }

    #[test]
    fn detects_unbounded() {
        // min -x1 with x1 - x2 = 0: the ray x1 = x2 -> infinity
        let lp = StandardLp {
            num_vars: 2,
            a: vec![vec![1.0, -1.0]],
            b: vec![0.0],
            c: vec![-1.0, 0.0],
        };
        assert_eq!(solve(&lp).unwrap(), LpOutcome::Unbounded);
    }

    #[test]
    fn redundant_rows_are_dropped() {
        // the same constraint twice; still solvable
        let lp = StandardLp {
            num_vars: 3,
            a: vec![vec![1.0, 1.0, 1.0], vec![1.0, 1.0, 1.0]],
            b: vec![1.0, 1.0],
            c: vec![0.0, -1.0, 1.0],
        };
        let (x, obj) = optimal(&lp);
        assert!((x[1] - 1.0).abs() < 1e-9);
        assert!((obj + 1.0).abs() < 1e-9);
    }

    #[test]
    fn degenerate_vertex_terminates() {
        // three planes through the same vertex force degenerate pivots
        let lp = StandardLp {
            num_vars: 5,
            a: vec![
                vec![1.0, 1.0, 1.0, 0.0, 0.0],
                vec![1.0, 2.0, 0.0, 1.0, 0.0],
                vec![2.0, 1.0, 0.0, 0.0, 1.0],
            ],
            b: vec![1.0, 1.0, 1.0],
            c: vec![-1.0, -1.0, 0.0, 0.0, 0.0],
        };
        let (_, obj) = optimal(&lp);
        assert!(obj.is_finite());
    }
}
