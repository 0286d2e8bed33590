//! Optimal rectangular assignment and Murty's M-best enumeration.
//!
//! Forbidden pairs are `f64::INFINITY`, never a large finite number.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use crate::error::{Error, Result};

/// Dense row-major cost matrix. Rows are assigned to distinct columns.
#[derive(Debug, Clone, PartialEq)]
pub struct CostMatrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl CostMatrix {
    pub fn new(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::InvalidParameter(format!(
                "cost matrix data has {} entries, expected {rows}x{cols}",
                data.len()
            )));
        }
        if data.iter().any(|c| c.is_nan() || *c == f64::NEG_INFINITY) {
            return Err(Error::InvalidParameter("cost entries must be finite or +inf".into()));
        }
        Ok(Self { rows, cols, data })
    }

    /// All entries forbidden.
    pub fn forbidden(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![f64::INFINITY; rows * cols],
        }
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let cols = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != cols) {
            return Err(Error::InvalidParameter("ragged cost matrix".into()));
        }
        Self::new(rows.len(), cols, rows.concat())
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.data[row * self.cols + col]
    }

    pub fn set(&mut self, row: usize, col: usize, cost: f64) {
        assert!(!cost.is_nan() && cost != f64::NEG_INFINITY, "invalid cost {cost}");
        self.data[row * self.cols + col] = cost;
    }

    fn total(&self, cols: &[usize]) -> f64 {
        cols.iter().enumerate().map(|(i, &j)| self.get(i, j)).sum()
    }

    fn scale(&self) -> f64 {
        self.data
            .iter()
            .filter(|c| c.is_finite())
            .fold(1.0_f64, |a, c| a.max(c.abs()))
    }

    /// Copy with `row` restricted to `col` and `col` withheld from other rows.
    fn force(&mut self, row: usize, col: usize) {
        let keep = self.get(row, col);
        for j in 0..self.cols {
            self.data[row * self.cols + j] = f64::INFINITY;
        }
        for i in 0..self.rows {
            self.data[i * self.cols + col] = f64::INFINITY;
        }
        self.data[row * self.cols + col] = keep;
    }
}

/// A row→column map and its total cost.
#[derive(Debug, Clone, PartialEq)]
pub struct Assignment {
    pub cols: Vec<usize>,
    pub cost: f64,
}

struct Dual {
    cols: Vec<usize>,
    u: Vec<f64>,
    v: Vec<f64>,
}

/// Shortest-augmenting-path Hungarian method with potentials. Returns `None`
/// when no assignment with finite cost exists.
fn hungarian(a: &CostMatrix) -> Option<Dual> {
    let (n, m) = (a.rows, a.cols);
    if n > m {
        return None;
    }
    let inf = f64::INFINITY;
    let mut u = vec![0.0; n + 1];
    let mut v = vec![0.0; m + 1];
    let mut p = vec![0usize; m + 1];
    let mut way = vec![0usize; m + 1];
    for i in 1..=n {
        p[0] = i;
        let mut j0 = 0;
        let mut minv = vec![inf; m + 1];
        let mut used = vec![false; m + 1];
        loop {
            used[j0] = true;
            let i0 = p[j0];
            let mut delta = inf;
            let mut j1 = 0;
            for j in 1..=m {
                if used[j] {
                    continue;
                }
                let cur = a.get(i0 - 1, j - 1) - u[i0] - v[j];
                if cur < minv[j] {
                    minv[j] = cur;
                    way[j] = j0;
                }
                if minv[j] < delta {
                    delta = minv[j];
                    j1 = j;
                }
            }
            if delta == inf {
                return None;
            }
            for j in 0..=m {
                if used[j] {
                    u[p[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
            if p[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            p[j0] = p[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }
    let mut cols = vec![0; n];
    for j in 1..=m {
        if p[j] != 0 {
            cols[p[j] - 1] = j - 1;
        }
    }
    Some(Dual { cols, u, v })
}

/// Minimum-cost assignment; among equal-cost optima the lexicographically
/// smallest column vector is returned.
pub fn solve(cost: &CostMatrix) -> Result<Assignment> {
    let dual = hungarian(cost).ok_or(Error::Infeasible)?;
    let best = cost.total(&dual.cols);
    let tol = 1e-9 * cost.scale().max(best.abs());
    let mut cols = dual.cols.clone();
    let mut fixed = cost.clone();
    for i in 0..cost.rows {
        for j in 0..cols[i] {
            let c = fixed.get(i, j);
            // Only tight edges under an optimal dual can be in an optimum.
            if !c.is_finite() || (c - dual.u[i + 1] - dual.v[j + 1]).abs() > tol {
                continue;
            }
            let mut trial = fixed.clone();
            trial.force(i, j);
            if let Some(alt) = hungarian(&trial) {
                if cost.total(&alt.cols) <= best + tol {
                    cols = alt.cols;
                    break;
                }
            }
        }
        fixed.force(i, cols[i]);
    }
    Ok(Assignment {
        cost: cost.total(&cols),
        cols,
    })
}

struct Node {
    solution: Assignment,
    matrix: CostMatrix,
    /// First branch row not yet fixed in this subproblem.
    depth: usize,
}

impl PartialEq for Node {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Node {}

impl PartialOrd for Node {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Node {
    // Reversed so that `BinaryHeap` pops the cheapest, then lexicographically
    // smallest, solution.
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .solution
            .cost
            .total_cmp(&self.solution.cost)
            .then_with(|| other.solution.cols.cmp(&self.solution.cols))
    }
}

/// The `m` cheapest distinct assignments in nondecreasing cost order.
pub fn murty_mbest(cost: &CostMatrix, m: usize) -> Result<Vec<Assignment>> {
    murty_mbest_partial(cost, m, cost.rows)
}

/// Murty enumeration that only distinguishes assignments by their first
/// `branch_rows` rows; the remaining rows always take their cheapest
/// completion. Returns the `m` best distinct prefixes.
pub fn murty_mbest_partial(cost: &CostMatrix, m: usize, branch_rows: usize) -> Result<Vec<Assignment>> {
    if m == 0 {
        return Err(Error::InvalidParameter("M must be >= 1".into()));
    }
    let branch_rows = branch_rows.min(cost.rows);
    let root = solve(cost)?;
    let mut heap = BinaryHeap::new();
    heap.push(Node {
        solution: root,
        matrix: cost.clone(),
        depth: 0,
    });
    let mut out = Vec::with_capacity(m);
    while let Some(node) = heap.pop() {
        let Node {
            solution,
            mut matrix,
            depth,
        } = node;
        // Children partition the rest of this subproblem: child t agrees with
        // `solution` on rows depth..t and differs at row t.
        for t in depth..branch_rows {
            let mut child = matrix.clone();
            child.set(t, solution.cols[t], f64::INFINITY);
            if let Ok(mut sol) = solve(&child) {
                sol.cost = cost.total(&sol.cols);
                heap.push(Node {
                    solution: sol,
                    matrix: child,
                    depth: t,
                });
            }
            matrix.force(t, solution.cols[t]);
        }
        out.push(solution);
        if out.len() == m {
            break;
        }
    }
    Ok(out)
}
