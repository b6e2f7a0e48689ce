//! Linear feasibility with a maximum-minimum-slack objective.

use minilp::{ComparisonOp, OptimizationDirection, Problem};
use thiserror::Error;

#[derive(Debug, Clone, Error, PartialEq)]
pub enum LpError {
    #[error("linear constraints are infeasible")]
    Infeasible,
    #[error("linear program failed: {0}")]
    Solver(String),
}

/// Rows `v . a <= rhs` over a fixed number of unknowns.
#[derive(Clone, Debug, Default)]
pub struct Rows {
    nvars: usize,
    rows: Vec<(Vec<f64>, f64)>,
}

impl Rows {
    pub fn new(nvars: usize) -> Self {
        Rows { nvars, rows: Vec::new() }
    }

    pub fn nvars(&self) -> usize {
        self.nvars
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn push_le(&mut self, v: Vec<f64>, rhs: f64) {
        assert_eq!(v.len(), self.nvars);
        self.rows.push((v, rhs));
    }

    pub fn push_ge(&mut self, v: Vec<f64>, rhs: f64) {
        self.push_le(v.into_iter().map(|c| -c).collect(), -rhs);
    }

    pub fn rows(&self) -> &[(Vec<f64>, f64)] {
        &self.rows
    }
}

/// Solution of [`max_min_slack`].
#[derive(Clone, Debug, PartialEq)]
pub struct SlackSolution {
    pub x: Vec<f64>,
    /// Smallest normalized slack over all rows (capped at 1).
    pub slack: f64,
}

/// Maximize `t` subject to `v_i . a / |v_i| + t <= rhs_i / |v_i|`,
/// `|a_j| <= bound`, `t <= 1`. Rows with a zero left-hand side are checked
/// directly. Fails with `Infeasible` when the best slack is below `-tol`.
pub fn max_min_slack(rows: &Rows, bound: f64, tol: f64) -> Result<SlackSolution, LpError> {
    let mut problem = Problem::new(OptimizationDirection::Maximize);
    let vars: Vec<_> = (0..rows.nvars).map(|_| problem.add_var(0.0, (-bound, bound))).collect();
    let t = problem.add_var(1.0, (f64::NEG_INFINITY, 1.0));
    let mut constant_slack = f64::INFINITY;
    for (v, rhs) in &rows.rows {
        let norm = v.iter().map(|c| c * c).sum::<f64>().sqrt();
        if norm < 1e-300 {
            constant_slack = constant_slack.min(*rhs);
            continue;
        }
        let mut expr: Vec<(minilp::Variable, f64)> = v
            .iter()
            .zip(&vars)
            .filter(|(c, _)| **c != 0.0)
            .map(|(c, &var)| (var, c / norm))
            .collect();
        expr.push((t, 1.0));
        problem.add_constraint(expr.as_slice(), ComparisonOp::Le, rhs / norm);
    }
    if constant_slack < -tol {
        return Err(LpError::Infeasible);
    }
    let solution = problem.solve().map_err(|e| match e {
        minilp::Error::Infeasible => LpError::Infeasible,
        other => LpError::Solver(other.to_string()),
    })?;
    let slack = solution[t].min(constant_slack);
    if slack < -tol {
        return Err(LpError::Infeasible);
    }
    Ok(SlackSolution { x: vars.iter().map(|&v| solution[v]).collect(), slack })
}
