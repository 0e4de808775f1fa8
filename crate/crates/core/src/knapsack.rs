//! Exact 0/1 knapsack over real values and positive real weights.
//!
//! Depth-first branch-and-bound on items sorted by value/weight ratio,
//! bounded by the fractional relaxation. Items with non-positive value are
//! never selected. Among equally good selections the first one reached in
//! the fixed (ratio, then lowest index) include-first order is returned.

use std::cmp::Ordering;

use crate::error::{CngError, Result};
use crate::model::FEASIBILITY_TOL;

const BOUND_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub struct KnapsackProblem {
    pub values: Vec<f64>,
    pub weights: Vec<f64>,
    pub capacity: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct KnapsackSolution {
    pub selected: Vec<bool>,
    pub objective: f64,
}

impl KnapsackProblem {
    pub fn new(values: Vec<f64>, weights: Vec<f64>, capacity: f64) -> Self {
        Self {
            values,
            weights,
            capacity,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.weights.len() != self.values.len() {
            return Err(CngError::ShapeMismatch {
                field: "weights",
                expected: self.values.len(),
                got: self.weights.len(),
            });
        }
        if let Some((index, &value)) = self
            .weights
            .iter()
            .enumerate()
            .find(|(_, w)| !(w.is_finite() && **w > 0.0))
        {
            return Err(CngError::NonpositiveWeight {
                field: "weights",
                index,
                value,
            });
        }
        if let Some(&value) = self.values.iter().find(|v| !v.is_finite()) {
            return Err(CngError::RangeViolation {
                field: "values",
                value,
                range: "finite",
            });
        }
        if self.capacity.is_nan() || self.capacity < 0.0 {
            return Err(CngError::RangeViolation {
                field: "capacity",
                value: self.capacity,
                range: ">= 0",
            });
        }
        Ok(())
    }
}

/// Ratio order used by both the exact solver and the fractional bounds:
/// decreasing value/weight, ties broken by lower index.
pub(crate) fn ratio_order(values: &[f64], weights: &[f64], items: &mut [usize]) {
    items.sort_by(|&i, &j| {
        let ri = values[i] / weights[i];
        let rj = values[j] / weights[j];
        rj.partial_cmp(&ri).unwrap_or(Ordering::Equal).then(i.cmp(&j))
    });
}

struct Search<'a> {
    values: Vec<f64>,
    weights: Vec<f64>,
    order: &'a [usize],
    taken: Vec<bool>,
    best_value: f64,
    best_taken: Vec<bool>,
}

impl Search<'_> {
    /// Dantzig bound on items `depth..`, given the residual capacity.
    fn bound(&self, depth: usize, residual: f64) -> f64 {
        let mut room = residual;
        let mut extra = 0.0;
        for k in depth..self.values.len() {
            let w = self.weights[k];
            if w <= room {
                room -= w;
                extra += self.values[k];
            } else {
                extra += self.values[k] * (room / w);
                break;
            }
        }
        extra
    }

    fn dfs(&mut self, depth: usize, value: f64, residual: f64) {
        if value > self.best_value {
            self.best_value = value;
            self.best_taken.clone_from(&self.taken);
        }
        if depth == self.values.len() {
            return;
        }
        if value + self.bound(depth, residual) <= self.best_value + BOUND_TOL {
            return;
        }
        let w = self.weights[depth];
        if w <= residual {
            self.taken[depth] = true;
            self.dfs(depth + 1, value + self.values[depth], residual - w);
            self.taken[depth] = false;
        }
        self.dfs(depth + 1, value, residual);
    }
}

/// Maximizes `values . s` over binary `s` with `weights . s <= capacity`.
pub fn solve_knapsack(problem: &KnapsackProblem) -> Result<KnapsackSolution> {
    problem.validate()?;
    let n = problem.values.len();
    let cap = problem.capacity + FEASIBILITY_TOL;

    let mut order: Vec<usize> = (0..n)
        .filter(|&i| problem.values[i] > 0.0 && problem.weights[i] <= cap)
        .collect();
    ratio_order(&problem.values, &problem.weights, &mut order);

    let m = order.len();
    let mut search = Search {
        values: order.iter().map(|&i| problem.values[i]).collect(),
        weights: order.iter().map(|&i| problem.weights[i]).collect(),
        order: &order,
        taken: vec![false; m],
        best_value: 0.0,
        best_taken: vec![false; m],
    };
    search.dfs(0, 0.0, cap);

    let mut selected = vec![false; n];
    for (k, &item) in search.order.iter().enumerate() {
        selected[item] = search.best_taken[k];
    }
    let objective = selected
        .iter()
        .zip(&problem.values)
        .filter(|(&s, _)| s)
        .map(|(_, v)| v)
        .sum();
    Ok(KnapsackSolution { selected, objective })
}
