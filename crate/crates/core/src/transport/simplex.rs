//! Transportation simplex on a dense `m x n` cost matrix.
//!
//! The basis is a spanning tree of the bipartite row/column graph with
//! exactly `m + n - 1` cells (degenerate zeros included), seeded by the
//! north-west corner rule. Pricing takes the most negative reduced cost and
//! switches to Bland's rule (first negative cell in row-major order, smallest
//! leaving cell) while a run of degenerate pivots is in progress, which rules
//! out cycling. The pivot sequence depends only on the input, so the returned
//! vertex is deterministic.

use std::collections::VecDeque;

use crate::error::{Error, Result};

/// Degenerate pivots tolerated before Bland's rule takes over.
const DEGENERATE_RUN: usize = 16;

pub(crate) struct Solution {
    /// Positive-flow cells `(row, col, mass)` in row-major order.
    pub flows: Vec<(usize, usize, f64)>,
    pub cost: f64,
}

/// Minimises `Σ c_ij x_ij` subject to row sums `a`, column sums `b`, `x >= 0`.
/// `a` and `b` must be strictly positive with (nearly) equal totals.
pub(crate) fn solve(a: &[f64], b: &[f64], cost: &[f64]) -> Result<Solution> {
    let (m, n) = (a.len(), b.len());
    if m == 0 || n == 0 || cost.len() != m * n {
        return Err(Error::Internal("transport problem has bad dimensions".into()));
    }
    let mut state = Tableau::north_west(a, b, cost);
    let scale = cost.iter().fold(1.0f64, |s, c| s.max(c.abs()));
    let tol = 1e-11 * scale;
    let cap = 50 * m * n + 1000;
    let mut degenerate = 0usize;
    for _ in 0..cap {
        state.potentials();
        let entering = if degenerate >= DEGENERATE_RUN {
            state.price_bland(tol)
        } else {
            state.price_dantzig(tol)
        };
        let Some(cell) = entering else {
            return Ok(state.finish());
        };
        if state.pivot(cell)? {
            degenerate += 1;
        } else {
            degenerate = 0;
        }
    }
    Err(Error::Internal(format!("transportation simplex exceeded {cap} pivots")))
}

struct Tableau<'a> {
    m: usize,
    n: usize,
    cost: &'a [f64],
    flow: Vec<f64>,
    basic: Vec<bool>,
    row_cells: Vec<Vec<usize>>,
    col_cells: Vec<Vec<usize>>,
    u: Vec<f64>,
    v: Vec<f64>,
}

impl<'a> Tableau<'a> {
    fn north_west(a: &[f64], b: &[f64], cost: &'a [f64]) -> Self {
        let (m, n) = (a.len(), b.len());
        let mut t = Tableau {
            m,
            n,
            cost,
            flow: vec![0.0; m * n],
            basic: vec![false; m * n],
            row_cells: vec![Vec::new(); m],
            col_cells: vec![Vec::new(); n],
            u: vec![0.0; m],
            v: vec![0.0; n],
        };
        let mut ra = a.to_vec();
        let mut rb = b.to_vec();
        let (mut i, mut j) = (0, 0);
        loop {
            let x = ra[i].min(rb[j]).max(0.0);
            ra[i] -= x;
            rb[j] -= x;
            t.flow[i * n + j] = x;
            t.add_basic(i, j);
            if i == m - 1 && j == n - 1 {
                // absorb any rounding in the totals
                t.flow[i * n + j] += ra[i].max(rb[j]).max(0.0);
                break;
            }
            if i == m - 1 {
                j += 1;
            } else if j == n - 1 || ra[i] <= rb[j] {
                i += 1;
            } else {
                j += 1;
            }
        }
        t
    }

    fn add_basic(&mut self, i: usize, j: usize) {
        self.basic[i * self.n + j] = true;
        self.row_cells[i].push(j);
        self.col_cells[j].push(i);
    }

    fn remove_basic(&mut self, i: usize, j: usize) {
        self.basic[i * self.n + j] = false;
        let r = &mut self.row_cells[i];
        r.swap_remove(r.iter().position(|&c| c == j).expect("basic cell in row list"));
        let c = &mut self.col_cells[j];
        c.swap_remove(c.iter().position(|&r| r == i).expect("basic cell in column list"));
    }

    /// Solves `u_i + v_j = c_ij` on the basis tree with `u_0 = 0`.
    fn potentials(&mut self) {
        let (m, n) = (self.m, self.n);
        let mut seen_row = vec![false; m];
        let mut seen_col = vec![false; n];
        let mut queue = VecDeque::new();
        self.u[0] = 0.0;
        seen_row[0] = true;
        queue.push_back(Node::Row(0));
        while let Some(node) = queue.pop_front() {
            match node {
                Node::Row(i) => {
                    for &j in &self.row_cells[i] {
                        if !seen_col[j] {
                            seen_col[j] = true;
                            self.v[j] = self.cost[i * n + j] - self.u[i];
                            queue.push_back(Node::Col(j));
                        }
                    }
                }
                Node::Col(j) => {
                    for &i in &self.col_cells[j] {
                        if !seen_row[i] {
                            seen_row[i] = true;
                            self.u[i] = self.cost[i * n + j] - self.v[j];
                            queue.push_back(Node::Row(i));
                        }
                    }
                }
            }
        }
    }

    fn reduced(&self, i: usize, j: usize) -> f64 {
        self.cost[i * self.n + j] - self.u[i] - self.v[j]
    }

    fn price_dantzig(&self, tol: f64) -> Option<(usize, usize)> {
        let mut best = None;
        let mut best_rc = -tol;
        for i in 0..self.m {
            for j in 0..self.n {
                if self.basic[i * self.n + j] {
                    continue;
                }
                let rc = self.reduced(i, j);
                if rc < best_rc {
                    best_rc = rc;
                    best = Some((i, j));
                }
            }
        }
        best
    }

    fn price_bland(&self, tol: f64) -> Option<(usize, usize)> {
        for i in 0..self.m {
            for j in 0..self.n {
                if !self.basic[i * self.n + j] && self.reduced(i, j) < -tol {
                    return Some((i, j));
                }
            }
        }
        None
    }

    /// Path of tree cells from row `ie` to column `je`, in order.
    fn tree_path(&self, ie: usize, je: usize) -> Result<Vec<(usize, usize)>> {
        let (m, n) = (self.m, self.n);
        // parent[node] = (previous node, cell used to reach node)
        let mut parent: Vec<Option<(usize, (usize, usize))>> = vec![None; m + n];
        let mut seen = vec![false; m + n];
        let mut queue = VecDeque::new();
        seen[ie] = true;
        queue.push_back(ie);
        let target = m + je;
        while let Some(node) = queue.pop_front() {
            if node == target {
                break;
            }
            if node < m {
                for &j in &self.row_cells[node] {
                    if !seen[m + j] {
                        seen[m + j] = true;
                        parent[m + j] = Some((node, (node, j)));
                        queue.push_back(m + j);
                    }
                }
            } else {
                let j = node - m;
                for &i in &self.col_cells[j] {
                    if !seen[i] {
                        seen[i] = true;
                        parent[i] = Some((node, (i, j)));
                        queue.push_back(i);
                    }
                }
            }
        }
        if !seen[target] {
            return Err(Error::Internal("transport basis is not a spanning tree".into()));
        }
        let mut path = Vec::new();
        let mut node = target;
        while node != ie {
            let (prev, cell) = parent[node].expect("visited node has a parent");
            path.push(cell);
            node = prev;
        }
        path.reverse();
        Ok(path)
    }

    /// Pivots `entering` into the basis. Returns whether the step was degenerate.
    fn pivot(&mut self, (ie, je): (usize, usize)) -> Result<bool> {
        let path = self.tree_path(ie, je)?;
        let n = self.n;
        // Cells at odd positions along the cycle (first path cell, third, ...) lose mass.
        let minus: Vec<(usize, usize)> = path.iter().copied().step_by(2).collect();
        let plus: Vec<(usize, usize)> = path.iter().copied().skip(1).step_by(2).collect();
        let theta = minus
            .iter()
            .map(|&(i, j)| self.flow[i * n + j])
            .fold(f64::INFINITY, f64::min);
        let leaving = minus
            .iter()
            .copied()
            .filter(|&(i, j)| self.flow[i * n + j] <= theta)
            .min()
            .expect("cycle has a decreasing cell");
        for &(i, j) in &minus {
            self.flow[i * n + j] = (self.flow[i * n + j] - theta).max(0.0);
        }
        for &(i, j) in &plus {
            self.flow[i * n + j] += theta;
        }
        self.flow[ie * n + je] = theta;
        self.flow[leaving.0 * n + leaving.1] = 0.0;
        self.remove_basic(leaving.0, leaving.1);
        self.add_basic(ie, je);
        Ok(theta <= 0.0)
    }

    fn finish(self) -> Solution {
        let mut flows = Vec::new();
        let mut cost = 0.0;
        for i in 0..self.m {
            for j in 0..self.n {
                let x = self.flow[i * self.n + j];
                if self.basic[i * self.n + j] && x > 0.0 {
                    flows.push((i, j, x));
                    cost += x * self.cost[i * self.n + j];
                }
            }
        }
        Solution { flows, cost }
    }
}

#[derive(Clone, Copy)]
enum Node {
    Row(usize),
    Col(usize),
}
