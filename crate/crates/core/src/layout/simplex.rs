//! Linear programming with prioritized constraints.
//!
//! Variables are non-negative. Required constraints are hard; strong and weak
//! constraints are soft, each with its own error variables. A solve runs three
//! lexicographic stages on one tableau: minimize strong error, maximize the
//! objective, then minimize weak error, each stage confined to the optimal face
//! of the ones before. Pivoting follows Bland's rule, so the returned vertex is
//! deterministic.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::scalar::Field;

const MAX_PIVOTS: usize = 100_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Priority {
    Required,
    Strong,
    Weak,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Cmp {
    #[serde(rename = "<=")]
    Le,
    #[serde(rename = ">=")]
    Ge,
    #[serde(rename = "==")]
    Eq,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Var(pub usize);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ConstraintId(u64);

/// `Σ coef·var + constant`.
#[derive(Debug, Clone, PartialEq)]
pub struct LinExpr<T> {
    pub terms: Vec<(Var, T)>,
    pub constant: T,
}

impl<T: Field> LinExpr<T> {
    pub fn zero() -> Self {
        LinExpr { terms: Vec::new(), constant: T::zero() }
    }

    pub fn constant(c: T) -> Self {
        LinExpr { terms: Vec::new(), constant: c }
    }

    pub fn var(v: Var) -> Self {
        LinExpr { terms: vec![(v, T::one())], constant: T::zero() }
    }

    pub fn term(mut self, v: Var, coef: T) -> Self {
        self.terms.push((v, coef));
        self
    }

    pub fn plus(mut self, other: &LinExpr<T>) -> Self {
        self.terms.extend(other.terms.iter().cloned());
        self.constant = self.constant + other.constant.clone();
        self
    }

    pub fn scaled(mut self, k: T) -> Self {
        for t in &mut self.terms {
            t.1 = t.1.clone() * k.clone();
        }
        self.constant = self.constant * k;
        self
    }

    pub fn minus(self, other: &LinExpr<T>) -> Self {
        self.plus(&other.clone().scaled(-T::one()))
    }

    pub fn eval(&self, values: &[T]) -> T {
        self.terms
            .iter()
            .fold(self.constant.clone(), |acc, (v, c)| acc + c.clone() * values[v.0].clone())
    }

    /// Dense coefficient row over `n` variables.
    fn dense(&self, n: usize) -> Vec<T> {
        let mut row = vec![T::zero(); n];
        for (v, c) in &self.terms {
            row[v.0] = row[v.0].clone() + c.clone();
        }
        row
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SolveError {
    #[error("required constraints are infeasible")]
    Infeasible,
    #[error("objective is unbounded")]
    Unbounded,
    #[error("pivot limit reached")]
    PivotLimit,
}

#[derive(Debug, Clone)]
struct Row<T> {
    expr: LinExpr<T>,
    cmp: Cmp,
    priority: Priority,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Solution<T> {
    pub values: Vec<T>,
    pub objective: T,
    pub strong_error: T,
    pub weak_error: T,
}

impl<T: Field> Solution<T> {
    pub fn value(&self, v: Var) -> T {
        self.values[v.0].clone()
    }
}

/// A constraint system that can be edited and re-solved.
#[derive(Debug, Clone)]
pub struct Solver<T> {
    names: Vec<String>,
    rows: BTreeMap<ConstraintId, Row<T>>,
    next_id: u64,
    objective: LinExpr<T>,
}

impl<T: Field> Default for Solver<T> {
    fn default() -> Self {
        Self::new()
    }
}

impl<T: Field> Solver<T> {
    pub fn new() -> Self {
        Solver { names: Vec::new(), rows: BTreeMap::new(), next_id: 0, objective: LinExpr::zero() }
    }

    pub fn add_var(&mut self, name: impl Into<String>) -> Var {
        self.names.push(name.into());
        Var(self.names.len() - 1)
    }

    pub fn var_name(&self, v: Var) -> &str {
        &self.names[v.0]
    }

    pub fn num_vars(&self) -> usize {
        self.names.len()
    }

    /// Adds `expr cmp 0`.
    pub fn add_constraint(&mut self, expr: LinExpr<T>, cmp: Cmp, priority: Priority) -> ConstraintId {
        let id = ConstraintId(self.next_id);
        self.next_id += 1;
        self.rows.insert(id, Row { expr, cmp, priority });
        id
    }

    pub fn remove_constraint(&mut self, id: ConstraintId) -> bool {
        self.rows.remove(&id).is_some()
    }

    /// The expression to maximize.
    pub fn set_objective(&mut self, expr: LinExpr<T>) {
        self.objective = expr;
    }

    pub fn solve(&self) -> Result<Solution<T>, SolveError> {
        let n = self.names.len();
        // Columns: user variables, then one error variable per soft direction.
        let mut lp_rows: Vec<(Vec<T>, Cmp, T)> = Vec::new();
        let mut strong_cols = Vec::new();
        let mut weak_cols = Vec::new();
        let mut soft: Vec<(usize, Vec<(usize, T)>)> = Vec::new(); // row index → error columns with sign
        let mut ncols = n;
        for row in self.rows.values() {
            let coeffs = row.expr.dense(n);
            let rhs = -row.expr.constant.clone();
            let idx = lp_rows.len();
            lp_rows.push((coeffs, row.cmp, rhs));
            if row.priority == Priority::Required {
                continue;
            }
            let cols: Vec<(usize, T)> = match row.cmp {
                Cmp::Ge => vec![(ncols, T::one())],
                Cmp::Le => vec![(ncols, -T::one())],
                Cmp::Eq => vec![(ncols, T::one()), (ncols + 1, -T::one())],
            };
            ncols += cols.len();
            let bucket = if row.priority == Priority::Strong { &mut strong_cols } else { &mut weak_cols };
            bucket.extend(cols.iter().map(|c| c.0));
            soft.push((idx, cols));
        }
        for row in &mut lp_rows {
            row.0.resize(ncols, T::zero());
        }
        for (idx, cols) in soft {
            for (c, sign) in cols {
                lp_rows[idx].0[c] = sign;
            }
        }

        let sum_of = |cols: &[usize], sign: T| {
            let mut c = vec![T::zero(); ncols];
            for &j in cols {
                c[j] = sign.clone();
            }
            c
        };
        let obj = {
            let mut c = self.objective.dense(n);
            c.resize(ncols, T::zero());
            c
        };
        let stages = [sum_of(&strong_cols, -T::one()), obj.clone(), sum_of(&weak_cols, -T::one())];
        let mut x = lex_maximize(&lp_rows, &stages)?;
        let strong_error = strong_cols.iter().fold(T::zero(), |a, &j| a + x[j].clone());
        let weak_error = weak_cols.iter().fold(T::zero(), |a, &j| a + x[j].clone());
        let objective = dot(&obj, &x);
        x.truncate(n);
        Ok(Solution {
            objective: objective + self.objective.constant.clone(),
            values: x,
            strong_error,
            weak_error,
        })
    }
}

fn dot<T: Field>(a: &[T], b: &[T]) -> T {
    a.iter().zip(b).fold(T::zero(), |acc, (x, y)| acc + x.clone() * y.clone())
}

struct Tableau<T> {
    /// m rows of `ncols + 1` entries; the last is the right-hand side.
    rows: Vec<Vec<T>>,
    basis: Vec<usize>,
    ncols: usize,
}

impl<T: Field> Tableau<T> {
    fn pivot(&mut self, r: usize, c: usize) {
        let p = self.rows[r][c].clone();
        for v in self.rows[r].iter_mut() {
            *v = v.clone() / p.clone();
        }
        let pivot_row = self.rows[r].clone();
        for (i, row) in self.rows.iter_mut().enumerate() {
            if i == r || row[c].is_zero() {
                continue;
            }
            let f = row[c].clone();
            for (v, pv) in row.iter_mut().zip(&pivot_row) {
                if !pv.is_zero() {
                    *v = v.clone() - f.clone() * pv.clone();
                }
            }
            row[c] = T::zero();
        }
        self.basis[r] = c;
    }

    /// Maximizes `cost·x` over columns `allowed` may enter.
    fn optimize(&mut self, cost: &[T], allowed: impl Fn(usize) -> bool) -> Result<(), SolveError> {
        for _ in 0..MAX_PIVOTS {
            let entering = (0..self.ncols)
                .filter(|&j| allowed(j) && !self.basis.contains(&j))
                .find(|&j| self.reduced_cost(cost, j).is_pos());
            let Some(j) = entering else { return Ok(()) };
            let mut leave: Option<(usize, T)> = None;
            for (i, row) in self.rows.iter().enumerate() {
                if !row[j].is_pos() {
                    continue;
                }
                let ratio = row[self.ncols].clone() / row[j].clone();
                let better = match &leave {
                    None => true,
                    Some((li, lr)) => {
                        let d = ratio.clone() - lr.clone();
                        d.is_neg() || (d.near_zero() && self.basis[i] < self.basis[*li])
                    }
                };
                if better {
                    leave = Some((i, ratio));
                }
            }
            let Some((r, _)) = leave else { return Err(SolveError::Unbounded) };
            self.pivot(r, j);
        }
        Err(SolveError::PivotLimit)
    }

    fn reduced_cost(&self, cost: &[T], j: usize) -> T {
        self.rows.iter().zip(&self.basis).fold(cost[j].clone(), |acc, (row, &b)| acc - cost[b].clone() * row[j].clone())
    }

    fn values(&self) -> Vec<T> {
        let mut x = vec![T::zero(); self.ncols];
        for (row, &b) in self.rows.iter().zip(&self.basis) {
            x[b] = row[self.ncols].clone();
        }
        x
    }
}

/// Maximizes `c·x` subject to `rows`, `x ≥ 0`. Returns the optimal point and value.
pub fn maximize<T: Field>(rows: &[(Vec<T>, Cmp, T)], c: &[T]) -> Result<(Vec<T>, T), SolveError> {
    let x = lex_maximize(rows, &[c.to_vec()])?;
    let value = dot(c, &x);
    Ok((x, value))
}

/// Maximizes each objective in turn over the optimal face of the previous
/// ones. After a stage, a nonbasic column with negative reduced cost would
/// lower that stage's optimum, so it is barred from entering later.
pub fn lex_maximize<T: Field>(rows: &[(Vec<T>, Cmp, T)], objectives: &[Vec<T>]) -> Result<Vec<T>, SolveError> {
    let n = rows.first().map_or_else(|| objectives.first().map_or(0, Vec::len), |r| r.0.len());
    let m = rows.len();
    let extra_slack = rows.iter().filter(|r| r.1 != Cmp::Eq).count();
    let slack0 = n;
    let art0 = n + extra_slack;
    let mut ncols = art0;
    let mut tab_rows = Vec::with_capacity(m);
    let mut basis = Vec::with_capacity(m);
    let mut next_slack = slack0;
    let mut artificial = Vec::new();
    for (coeffs, cmp, rhs) in rows {
        let mut coeffs = coeffs.clone();
        let mut rhs = rhs.clone();
        let mut cmp = *cmp;
        if rhs.is_negative() {
            coeffs = coeffs.into_iter().map(|v| -v).collect();
            rhs = -rhs;
            cmp = match cmp {
                Cmp::Le => Cmp::Ge,
                Cmp::Ge => Cmp::Le,
                Cmp::Eq => Cmp::Eq,
            };
        }
        let mut row = coeffs;
        row.resize(art0, T::zero());
        let basic = match cmp {
            Cmp::Le => {
                row[next_slack] = T::one();
                next_slack += 1;
                Some(next_slack - 1)
            }
            Cmp::Ge => {
                row[next_slack] = -T::one();
                next_slack += 1;
                None
            }
            Cmp::Eq => None,
        };
        let b = basic.unwrap_or_else(|| {
            artificial.push(ncols);
            ncols += 1;
            ncols - 1
        });
        row.push(rhs);
        tab_rows.push(row);
        basis.push(b);
    }
    // Widen rows for artificial columns, keeping rhs last.
    for (row, &b) in tab_rows.iter_mut().zip(&basis) {
        let rhs = row.pop().unwrap();
        row.resize(ncols, T::zero());
        if b >= art0 {
            row[b] = T::one();
        }
        row.push(rhs);
    }
    let mut tab = Tableau { rows: tab_rows, basis, ncols };

    if !artificial.is_empty() {
        let mut phase1 = vec![T::zero(); ncols];
        for &a in &artificial {
            phase1[a] = -T::one();
        }
        tab.optimize(&phase1, |_| true)?;
        let infeasibility = artificial.iter().fold(T::zero(), |acc, &a| acc + tab.values()[a].clone());
        if infeasibility.is_pos() {
            return Err(SolveError::Infeasible);
        }
        // Drive zero-valued artificials out of the basis where possible.
        for r in 0..tab.rows.len() {
            if tab.basis[r] >= art0 {
                if let Some(j) = (0..art0).find(|&j| !tab.rows[r][j].near_zero()) {
                    tab.pivot(r, j);
                }
            }
        }
    }

    let mut barred = vec![false; ncols];
    for b in barred.iter_mut().skip(art0) {
        *b = true;
    }
    for c in objectives {
        if c.iter().all(|v| v.is_zero()) {
            continue;
        }
        let mut cost = c.clone();
        cost.resize(ncols, T::zero());
        tab.optimize(&cost, |j| !barred[j])?;
        for j in 0..ncols {
            if !barred[j] && !tab.basis.contains(&j) && tab.reduced_cost(&cost, j).is_neg() {
                barred[j] = true;
            }
        }
    }
    let mut x = tab.values();
    x.truncate(n);
    Ok(x)
}
