//! Dense two-phase simplex with Bland's rule, sized for the per-bidder LPs.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::matroid::WeightFunction;
use crate::tolerance::SIMPLEX_EPS;

pub const MAX_VARIABLES: usize = 12;
pub const MAX_CONSTRAINTS: usize = 40;
const MAX_PIVOTS: usize = 50_000;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LpError {
    #[error("constraint {row} has {got} coefficients, expected {expected}")]
    Dimension { row: usize, expected: usize, got: usize },
    #[error("{variables} variables / {constraints} constraints exceed the dense solver limits")]
    TooLarge { variables: usize, constraints: usize },
    #[error("non-finite coefficient in the program")]
    NonFinite,
    #[error("no convergence after {0} pivots (cycling guard)")]
    CyclingGuard(usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Relation {
    Le,
    Ge,
    Eq,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Constraint {
    pub coeffs: Vec<f64>,
    pub relation: Relation,
    pub rhs: f64,
}

/// `maximize c·x` subject to linear constraints; each variable is either
/// non-negative or free.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearProgram {
    pub objective: Vec<f64>,
    pub constraints: Vec<Constraint>,
    pub free: Vec<bool>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum LpSolution {
    Optimal { value: f64, x: Vec<f64> },
    Infeasible,
    Unbounded,
}

impl LpSolution {
    pub fn value(&self) -> Option<f64> {
        match self {
            LpSolution::Optimal { value, .. } => Some(*value),
            _ => None,
        }
    }
}

impl LinearProgram {
    pub fn new(objective: Vec<f64>) -> Self {
        let free = vec![false; objective.len()];
        Self { objective, constraints: Vec::new(), free }
    }

    pub fn variables(&self) -> usize {
        self.objective.len()
    }

    pub fn constrain(&mut self, coeffs: Vec<f64>, relation: Relation, rhs: f64) -> &mut Self {
        self.constraints.push(Constraint { coeffs, relation, rhs });
        self
    }

    pub fn set_free(&mut self, var: usize) -> &mut Self {
        self.free[var] = true;
        self
    }

    fn validate(&self) -> Result<(), LpError> {
        let n = self.variables();
        if n > MAX_VARIABLES || self.constraints.len() > MAX_CONSTRAINTS {
            return Err(LpError::TooLarge { variables: n, constraints: self.constraints.len() });
        }
        for (row, c) in self.constraints.iter().enumerate() {
            if c.coeffs.len() != n {
                return Err(LpError::Dimension { row, expected: n, got: c.coeffs.len() });
            }
            if !c.rhs.is_finite() || c.coeffs.iter().any(|a| !a.is_finite()) {
                return Err(LpError::NonFinite);
            }
        }
        if self.free.len() != n || self.objective.iter().any(|a| !a.is_finite()) {
            return Err(LpError::NonFinite);
        }
        Ok(())
    }

    pub fn solve(&self) -> Result<LpSolution, LpError> {
        self.validate()?;
        Tableau::build(self).solve(self)
    }
}

struct Tableau {
    /// Row-major, `rows x (cols + 1)`; last column is the right-hand side.
    a: Vec<Vec<f64>>,
    basis: Vec<usize>,
    cols: usize,
    /// First artificial column; artificials occupy `artificial..cols`.
    artificial: usize,
    /// Structural column of each original variable: `(plus, minus)`.
    split: Vec<(usize, Option<usize>)>,
}

impl Tableau {
    fn build(lp: &LinearProgram) -> Self {
        let mut split = Vec::with_capacity(lp.variables());
        let mut col = 0;
        for &free in &lp.free {
            let minus = free.then(|| col + 1);
            split.push((col, minus));
            col += if free { 2 } else { 1 };
        }
        let structural = col;
        // Normalise every row to a non-negative right-hand side.
        let rows: Vec<(Vec<f64>, Relation, f64)> = lp
            .constraints
            .iter()
            .map(|c| {
                let mut coeffs = vec![0.0; structural];
                for (v, &(p, m)) in split.iter().enumerate() {
                    coeffs[p] = c.coeffs[v];
                    if let Some(m) = m {
                        coeffs[m] = -c.coeffs[v];
                    }
                }
                if c.rhs < 0.0 {
                    let flipped = match c.relation {
                        Relation::Le => Relation::Ge,
                        Relation::Ge => Relation::Le,
                        Relation::Eq => Relation::Eq,
                    };
                    (coeffs.iter().map(|a| -a).collect(), flipped, -c.rhs)
                } else {
                    (coeffs, c.relation, c.rhs)
                }
            })
            .collect();
        let slacks = rows.iter().filter(|r| r.1 != Relation::Eq).count();
        let artificials = rows.iter().filter(|r| r.1 != Relation::Le).count();
        let artificial = structural + slacks;
        let cols = artificial + artificials;
        let mut a = Vec::with_capacity(rows.len());
        let mut basis = Vec::with_capacity(rows.len());
        let (mut next_slack, mut next_art) = (structural, artificial);
        for (coeffs, rel, rhs) in rows {
            let mut row = coeffs;
            row.resize(cols + 1, 0.0);
            row[cols] = rhs;
            match rel {
                Relation::Le => {
                    row[next_slack] = 1.0;
                    basis.push(next_slack);
                    next_slack += 1;
                }
                Relation::Ge => {
                    row[next_slack] = -1.0;
                    next_slack += 1;
                    row[next_art] = 1.0;
                    basis.push(next_art);
                    next_art += 1;
                }
                Relation::Eq => {
                    row[next_art] = 1.0;
                    basis.push(next_art);
                    next_art += 1;
                }
            }
            a.push(row);
        }
        Self { a, basis, cols, artificial, split }
    }

    fn pivot(&mut self, z: &mut [f64], r: usize, c: usize) {
        let p = self.a[r][c];
        for v in self.a[r].iter_mut() {
            *v /= p;
        }
        let pivot_row = self.a[r].clone();
        for (i, row) in self.a.iter_mut().enumerate() {
            if i != r && row[c] != 0.0 {
                let f = row[c];
                for (v, pv) in row.iter_mut().zip(&pivot_row) {
                    *v -= f * pv;
                }
            }
        }
        if z[c] != 0.0 {
            let f = z[c];
            for (v, pv) in z.iter_mut().zip(&pivot_row) {
                *v -= f * pv;
            }
        }
        self.basis[r] = c;
    }

    /// Maximises with reduced-cost row `z` (entering when `z[j] < -eps`) over
    /// columns `< limit`. Returns false when unbounded.
    fn optimise(&mut self, z: &mut [f64], limit: usize, pivots: &mut usize) -> Result<bool, LpError> {
        loop {
            let Some(c) = (0..limit).find(|&j| z[j] < -SIMPLEX_EPS) else {
                return Ok(true);
            };
            let mut leave: Option<(usize, f64)> = None;
            for (i, row) in self.a.iter().enumerate() {
                if row[c] > SIMPLEX_EPS {
                    let ratio = row[self.cols] / row[c];
                    leave = match leave {
                        None => Some((i, ratio)),
                        Some((li, lr)) => {
                            if ratio < lr - SIMPLEX_EPS
                                || (ratio <= lr + SIMPLEX_EPS && self.basis[i] < self.basis[li])
                            {
                                Some((i, ratio))
                            } else {
                                Some((li, lr))
                            }
                        }
                    };
                }
            }
            let Some((r, _)) = leave else {
                return Ok(false);
            };
            *pivots += 1;
            if *pivots > MAX_PIVOTS {
                return Err(LpError::CyclingGuard(MAX_PIVOTS));
            }
            self.pivot(z, r, c);
        }
    }

    fn solve(mut self, lp: &LinearProgram) -> Result<LpSolution, LpError> {
        let mut pivots = 0;
        let width = self.cols + 1;
        if self.artificial < self.cols {
            // Phase 1: maximise -sum(artificials).
            let mut z = vec![0.0; width];
            for j in self.artificial..self.cols {
                z[j] = 1.0;
            }
            for (i, &b) in self.basis.iter().enumerate() {
                if b >= self.artificial {
                    for (v, a) in z.iter_mut().zip(&self.a[i]) {
                        *v -= a;
                    }
                }
            }
            self.optimise(&mut z, self.cols, &mut pivots)?;
            let scale = 1.0 + self.a.iter().map(|r| r[self.cols].abs()).fold(0.0, f64::max);
            if z[self.cols] < -SIMPLEX_EPS * scale * 1e3 {
                return Ok(LpSolution::Infeasible);
            }
            // Drive remaining artificials out of the basis; drop redundant rows.
            let mut i = 0;
            while i < self.a.len() {
                if self.basis[i] >= self.artificial {
                    if let Some(c) = (0..self.artificial).find(|&j| self.a[i][j].abs() > SIMPLEX_EPS) {
                        self.pivot(&mut z, i, c);
                    } else {
                        self.a.remove(i);
                        self.basis.remove(i);
                        continue;
                    }
                }
                i += 1;
            }
        }
        // Phase 2 on structural and slack columns only.
        let mut z = vec![0.0; width];
        for (v, &(p, m)) in self.split.iter().enumerate() {
            z[p] = -lp.objective[v];
            if let Some(m) = m {
                z[m] = lp.objective[v];
            }
        }
        for i in 0..self.a.len() {
            let b = self.basis[i];
            if z[b] != 0.0 {
                let f = z[b];
                for (v, a) in z.iter_mut().zip(&self.a[i]) {
                    *v -= f * a;
                }
            }
        }
        if !self.optimise(&mut z, self.artificial, &mut pivots)? {
            return Ok(LpSolution::Unbounded);
        }
        let mut col_value = vec![0.0; self.cols];
        for (i, &b) in self.basis.iter().enumerate() {
            col_value[b] = self.a[i][self.cols];
        }
        let x: Vec<f64> = self
            .split
            .iter()
            .map(|&(p, m)| col_value[p] - m.map_or(0.0, |m| col_value[m]))
            .collect();
        let value = lp.objective.iter().zip(&x).map(|(c, x)| c * x).sum();
        Ok(LpSolution::Optimal { value, x })
    }
}

/// The share program for bidder `i`:
/// `max y_i` s.t. `y_i - y_j <= ln w_i - ln w_j`, `sum y <= 1`, `y >= 0`.
///
/// Constraints against zero-weight bidders are vacuous. Returns `None` when
/// `w_i = 0`, where the program is infeasible by convention.
pub fn share_lp(w: &WeightFunction, i: usize) -> Option<LinearProgram> {
    let n = w.len();
    let wi = w.get(i);
    if wi <= 0.0 {
        return None;
    }
    let mut objective = vec![0.0; n];
    objective[i] = 1.0;
    let mut lp = LinearProgram::new(objective);
    for j in (0..n).filter(|&j| j != i && w.get(j) > 0.0) {
        let mut row = vec![0.0; n];
        row[i] = 1.0;
        row[j] = -1.0;
        lp.constrain(row, Relation::Le, wi.ln() - w.get(j).ln());
    }
    lp.constrain(vec![1.0; n], Relation::Le, 1.0);
    Some(lp)
}

/// The stopping-time program for bidder `i`:
/// `max t` s.t. `t - z_j <= -ln w_j`, `sum z <= 1`, `z >= 0`, `t` free.
/// Bidder `i`'s share is `(t + ln w_i)^+`; the constant is left out of the
/// objective so the program stays finite.
///
/// Variable 0 is `t`; `z_j` is variable `j + 1`. Returns `None` when `w_i = 0`.
pub fn stopping_time_lp(w: &WeightFunction, i: usize) -> Option<LinearProgram> {
    let n = w.len();
    if w.get(i) <= 0.0 {
        return None;
    }
    let mut objective = vec![0.0; n + 1];
    objective[0] = 1.0;
    let mut lp = LinearProgram::new(objective);
    lp.set_free(0);
    for j in (0..n).filter(|&j| w.get(j) > 0.0) {
        let mut row = vec![0.0; n + 1];
        row[0] = 1.0;
        row[j + 1] = -1.0;
        lp.constrain(row, Relation::Le, -w.get(j).ln());
    }
    let mut sum = vec![1.0; n + 1];
    sum[0] = 0.0;
    lp.constrain(sum, Relation::Le, 1.0);
    Some(lp)
}

/// The dual of the share program, posed as a maximisation of the negated
/// objective. Variable 0 is `α`; variable `k + 1` is `β_{others[k]}`, where
/// `others` are the positive-weight bidders other than `i` (zero-weight
/// bidders would carry an infinite cost and are fixed at `β = 0`).
pub fn dual_share_lp(w: &WeightFunction, i: usize) -> Option<(LinearProgram, Vec<usize>)> {
    let wi = w.get(i);
    if wi <= 0.0 {
        return None;
    }
    let others: Vec<usize> = (0..w.len()).filter(|&j| j != i && w.get(j) > 0.0).collect();
    let m = others.len() + 1;
    let mut objective = vec![-1.0; 1];
    objective.extend(others.iter().map(|&j| -(wi.ln() - w.get(j).ln())));
    let mut lp = LinearProgram::new(objective);
    lp.constrain(vec![1.0; m], Relation::Ge, 1.0);
    for k in 0..others.len() {
        let mut row = vec![0.0; m];
        row[0] = 1.0;
        row[k + 1] = -1.0;
        lp.constrain(row, Relation::Ge, 0.0);
    }
    Some((lp, others))
}

/// Value of the share program, or `None` when it is infeasible.
pub fn lp_share(w: &WeightFunction, i: usize) -> Result<Option<f64>, LpError> {
    match share_lp(w, i) {
        None => Ok(None),
        Some(lp) => Ok(lp.solve()?.value()),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::eating::eat;

    fn w(v: &[f64]) -> WeightFunction {
        WeightFunction::new(v.to_vec()).unwrap()
    }

    #[test]
    fn trivial_bound() {
        let mut lp = LinearProgram::new(vec![1.0]);
        lp.constrain(vec![1.0], Relation::Le, 1.0);
        assert_eq!(lp.solve().unwrap().value(), Some(1.0));
    }

    #[test]
    fn textbook_program() {
        // max 3x + 5y, x <= 4, 2y <= 12, 3x + 2y <= 18 -> 36 at (2, 6).
        let mut lp = LinearProgram::new(vec![3.0, 5.0]);
        lp.constrain(vec![1.0, 0.0], Relation::Le, 4.0)
            .constrain(vec![0.0, 2.0], Relation::Le, 12.0)
            .constrain(vec![3.0, 2.0], Relation::Le, 18.0);
        match lp.solve().unwrap() {
            LpSolution::Optimal { value, x } => {
                assert!((value - 36.0).abs() < 1e-9);
                assert!((x[0] - 2.0).abs() < 1e-9 && (x[1] - 6.0).abs() < 1e-9);
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn infeasible_unbounded_and_free() {
        let mut lp = LinearProgram::new(vec![1.0]);
        lp.constrain(vec![1.0], Relation::Le, 1.0).constrain(vec![1.0], Relation::Ge, 2.0);
        assert_eq!(lp.solve().unwrap(), LpSolution::Infeasible);

        let mut lp = LinearProgram::new(vec![1.0, 0.0]);
        lp.constrain(vec![0.0, 1.0], Relation::Le, 1.0);
        assert_eq!(lp.solve().unwrap(), LpSolution::Unbounded);

        // A free variable that goes negative at the optimum.
        let mut lp = LinearProgram::new(vec![-1.0]);
        lp.set_free(0).constrain(vec![1.0], Relation::Ge, -3.0);
        assert!((lp.solve().unwrap().value().unwrap() - 3.0).abs() < 1e-12);

        // Equality rows.
        let mut lp = LinearProgram::new(vec![1.0, 1.0]);
        lp.constrain(vec![1.0, -1.0], Relation::Eq, 1.0).constrain(vec![1.0, 1.0], Relation::Le, 5.0);
        assert!((lp.solve().unwrap().value().unwrap() - 5.0).abs() < 1e-12);
    }

    #[test]
    fn rejects_oversized_and_malformed() {
        let lp = LinearProgram::new(vec![1.0; MAX_VARIABLES + 1]);
        assert!(matches!(lp.solve(), Err(LpError::TooLarge { .. })));
        let mut lp = LinearProgram::new(vec![1.0]);
        lp.constrain(vec![1.0, 2.0], Relation::Le, 1.0);
        assert!(matches!(lp.solve(), Err(LpError::Dimension { .. })));
    }

    #[test]
    fn share_program_matches_eat() {
        let weights = w(&[1.0, (-0.5f64).exp()]);
        assert!((lp_share(&weights, 0).unwrap().unwrap() - 0.75).abs() < 1e-12);
        assert!((lp_share(&weights, 1).unwrap().unwrap() - 0.25).abs() < 1e-12);

        let weights = w(&[0.0, 2.0]);
        assert_eq!(lp_share(&weights, 0).unwrap(), None);
        assert_eq!(eat(&weights).shares[0], 0.0);

        // Late starter: the program is infeasible exactly when the share is 0.
        let weights = w(&[1.0, 1e-3]);
        assert_eq!(eat(&weights).shares[1], 0.0);
        assert_eq!(lp_share(&weights, 1).unwrap(), None);
    }

    #[test]
    fn stopping_time_and_dual_programs() {
        let weights = w(&[1.0, (-0.5f64).exp(), 0.0]);
        let t = stopping_time_lp(&weights, 1).unwrap().solve().unwrap().value().unwrap();
        assert!((t - 0.75).abs() < 1e-12);
        assert!((t + weights.get(1).ln() - 0.25).abs() < 1e-12);
        let (dual, others) = dual_share_lp(&weights, 0).unwrap();
        assert_eq!(others, vec![1]);
        let d = -dual.solve().unwrap().value().unwrap();
        assert!((d - 0.75).abs() < 1e-12);
    }
}
