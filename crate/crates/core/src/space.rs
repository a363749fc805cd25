//! Finite metric measure spaces `(X, d, m)` and first-order diagnostics.
//!
//! A space is a dense distance matrix plus strictly positive atom weights.
//! When it is built from an edge list the matrix is the shortest-path
//! closure of the graph and the adjacency is kept around: geodesic sampling
//! in [`crate::curves`] walks it.
//!
//! Balls are closed, `B_r(x) = {y : d(x, y) <= r}`, so sweeping radii over the
//! distance multiset is exact.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use serde::Serialize;

use crate::error::{param, Error, Result};

/// Absolute tolerance for structural invariants.
pub const STRUCT_TOL: f64 = 1e-12;
/// Relative slack used by the inequality checkers in this module.
pub const INEQ_SLACK: f64 = 1e-9;

/// An undirected edge `(i, j)` of the given length.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Edge {
    pub a: usize,
    pub b: usize,
    pub len: f64,
}

impl Edge {
    pub fn new(a: usize, b: usize, len: f64) -> Self {
        Edge { a, b, len }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FiniteMetricMeasureSpace {
    n: usize,
    dist: Vec<f64>,
    weights: Vec<f64>,
    edges: Option<Vec<Edge>>,
    adjacency: Option<Vec<Vec<(usize, f64)>>>,
    labels: Option<Vec<String>>,
}

impl FiniteMetricMeasureSpace {
    /// Builds a space from a full distance matrix. Only shape and finiteness
    /// are enforced here; metric axioms are reported by [`validate_space`].
    pub fn from_matrix(dist: Vec<Vec<f64>>, weights: Vec<f64>) -> Result<Self> {
        let n = weights.len();
        if n == 0 {
            return Err(Error::Shape("a space needs at least one point".into()));
        }
        if dist.len() != n {
            return Err(Error::Shape(format!(
                "distance matrix has {} rows, expected {n}",
                dist.len()
            )));
        }
        let mut flat = Vec::with_capacity(n * n);
        for (i, row) in dist.iter().enumerate() {
            if row.len() != n {
                return Err(Error::Shape(format!(
                    "distance row {i} has {} entries, expected {n}",
                    row.len()
                )));
            }
            for (j, &v) in row.iter().enumerate() {
                if !v.is_finite() {
                    return Err(Error::Shape(format!("dist[{i}][{j}] is not finite")));
                }
            }
            flat.extend_from_slice(row);
        }
        check_weights_finite(&weights)?;
        Ok(FiniteMetricMeasureSpace {
            n,
            dist: flat,
            weights,
            edges: None,
            adjacency: None,
            labels: None,
        })
    }

    /// Builds a graph space: the metric is the shortest-path closure of `edges`.
    pub fn from_edges(n: usize, edges: Vec<Edge>, weights: Vec<f64>) -> Result<Self> {
        if n == 0 || weights.len() != n {
            return Err(Error::Shape(format!("expected {n} weights, got {}", weights.len())));
        }
        check_weights_finite(&weights)?;
        let adjacency = build_adjacency(n, &edges)?;
        let dist = shortest_path_closure(n, &adjacency)?;
        Ok(FiniteMetricMeasureSpace {
            n,
            dist,
            weights,
            edges: Some(edges),
            adjacency: Some(adjacency),
            labels: None,
        })
    }

    /// Matrix plus edge list, as read from a file that carries both. The
    /// closure invariant is checked by [`validate_space`], not here.
    pub fn from_matrix_and_edges(dist: Vec<Vec<f64>>, edges: Vec<Edge>, weights: Vec<f64>) -> Result<Self> {
        let mut space = Self::from_matrix(dist, weights)?;
        space.adjacency = Some(build_adjacency(space.n, &edges)?);
        space.edges = Some(edges);
        Ok(space)
    }

    pub fn with_labels(mut self, labels: Vec<String>) -> Result<Self> {
        if labels.len() != self.n {
            return Err(Error::Shape(format!(
                "expected {} labels, got {}",
                self.n,
                labels.len()
            )));
        }
        self.labels = Some(labels);
        Ok(self)
    }

    #[inline]
    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn d(&self, i: usize, j: usize) -> f64 {
        self.dist[i * self.n + j]
    }

    pub fn dist_row(&self, i: usize) -> &[f64] {
        &self.dist[i * self.n..(i + 1) * self.n]
    }

    #[inline]
    pub fn weight(&self, i: usize) -> f64 {
        self.weights[i]
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn total_mass(&self) -> f64 {
        self.weights.iter().sum()
    }

    pub fn edges(&self) -> Option<&[Edge]> {
        self.edges.as_deref()
    }

    pub fn labels(&self) -> Option<&[String]> {
        self.labels.as_deref()
    }

    pub fn is_graph(&self) -> bool {
        self.adjacency.is_some()
    }

    /// Graph neighbours with edge lengths, sorted by index.
    pub fn neighbors(&self, i: usize) -> Option<&[(usize, f64)]> {
        self.adjacency.as_ref().map(|adj| adj[i].as_slice())
    }

    pub fn check_index(&self, i: usize) -> Result<()> {
        if i < self.n {
            Ok(())
        } else {
            Err(Error::IndexOutOfRange { index: i, n: self.n })
        }
    }

    /// Smallest strictly positive distance, the default discretisation scale.
    pub fn min_positive_distance(&self) -> Option<f64> {
        self.dist
            .iter()
            .copied()
            .filter(|&d| d > STRUCT_TOL)
            .min_by(f64::total_cmp)
    }

    /// Sorted distinct positive distances not exceeding `r_max`.
    pub fn distinct_radii(&self, r_max: f64) -> Vec<f64> {
        let mut radii: Vec<f64> = self
            .dist
            .iter()
            .copied()
            .filter(|&d| d > STRUCT_TOL && d <= r_max + STRUCT_TOL)
            .collect();
        radii.sort_by(f64::total_cmp);
        radii.dedup_by(|a, b| (*a - *b).abs() <= STRUCT_TOL);
        radii
    }

    /// Points of the closed ball `B_r(x)`.
    pub fn ball(&self, x: usize, r: f64) -> impl Iterator<Item = usize> + '_ {
        self.dist_row(x)
            .iter()
            .enumerate()
            .filter(move |(_, &d)| d <= r + STRUCT_TOL)
            .map(|(y, _)| y)
    }

    pub fn ball_mass(&self, x: usize, r: f64) -> f64 {
        self.ball(x, r).map(|y| self.weights[y]).sum()
    }
}

fn check_weights_finite(weights: &[f64]) -> Result<()> {
    for (i, w) in weights.iter().enumerate() {
        if !w.is_finite() {
            return Err(Error::Shape(format!("weight[{i}] is not finite")));
        }
    }
    Ok(())
}

fn build_adjacency(n: usize, edges: &[Edge]) -> Result<Vec<Vec<(usize, f64)>>> {
    let mut adj = vec![Vec::new(); n];
    for (k, e) in edges.iter().enumerate() {
        if e.a >= n || e.b >= n {
            return Err(Error::Shape(format!(
                "edge {k} ({}, {}) references a point outside 0..{n}",
                e.a, e.b
            )));
        }
        if e.a == e.b {
            return Err(Error::Shape(format!("edge {k} is a self-loop at {}", e.a)));
        }
        if !(e.len.is_finite() && e.len > 0.0) {
            return Err(Error::Shape(format!(
                "edge {k} has non-positive or non-finite length {}",
                e.len
            )));
        }
        adj[e.a].push((e.b, e.len));
        adj[e.b].push((e.a, e.len));
    }
    for row in &mut adj {
        row.sort_by(|x, y| x.0.cmp(&y.0).then(x.1.total_cmp(&y.1)));
        // parallel edges: keep the shortest
        row.dedup_by_key(|x| x.0);
    }
    Ok(adj)
}

#[derive(PartialEq)]
struct HeapItem(f64, usize);

impl Eq for HeapItem {}

impl PartialOrd for HeapItem {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for HeapItem {
    fn cmp(&self, other: &Self) -> Ordering {
        other.0.total_cmp(&self.0).then(other.1.cmp(&self.1))
    }
}

/// All-pairs shortest paths by repeated Dijkstra.
fn shortest_path_closure(n: usize, adj: &[Vec<(usize, f64)>]) -> Result<Vec<f64>> {
    let mut dist = vec![f64::INFINITY; n * n];
    let mut heap = BinaryHeap::new();
    for s in 0..n {
        let row = &mut dist[s * n..(s + 1) * n];
        row[s] = 0.0;
        heap.push(HeapItem(0.0, s));
        while let Some(HeapItem(d, u)) = heap.pop() {
            if d > row[u] {
                continue;
            }
            for &(v, len) in &adj[u] {
                let nd = d + len;
                if nd < row[v] {
                    row[v] = nd;
                    heap.push(HeapItem(nd, v));
                }
            }
        }
        if let Some(t) = row.iter().position(|d| d.is_infinite()) {
            return Err(Error::Disconnected(s, t));
        }
    }
    Ok(dist)
}

/// A real-valued function on the points of a space.
#[derive(Debug, Clone, PartialEq)]
pub struct RealFunction(Vec<f64>);

impl RealFunction {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(param("f", format!("entry {i} is not finite")));
        }
        Ok(RealFunction(values))
    }

    pub fn from_fn(n: usize, f: impl Fn(usize) -> f64) -> Self {
        RealFunction((0..n).map(f).collect())
    }

    pub fn constant(n: usize, c: f64) -> Self {
        RealFunction(vec![c; n])
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn scaled(&self, c: f64) -> Self {
        RealFunction(self.0.iter().map(|v| c * v).collect())
    }

    pub fn product(&self, other: &RealFunction) -> Self {
        RealFunction(self.0.iter().zip(&other.0).map(|(a, b)| a * b).collect())
    }

    pub(crate) fn check_len(&self, n: usize) -> Result<()> {
        if self.0.len() == n {
            Ok(())
        } else {
            Err(Error::Shape(format!(
                "function has {} values, space has {n} points",
                self.0.len()
            )))
        }
    }
}

impl std::ops::Index<usize> for RealFunction {
    type Output = f64;
    fn index(&self, i: usize) -> &f64 {
        &self.0[i]
    }
}

/// One violated invariant found by [`validate_space`].
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Violation {
    NonzeroDiagonal {
        i: usize,
        value: f64,
    },
    Asymmetric {
        i: usize,
        j: usize,
        dij: f64,
        dji: f64,
    },
    NonPositiveDistance {
        i: usize,
        j: usize,
        value: f64,
    },
    Triangle {
        i: usize,
        j: usize,
        k: usize,
        excess: f64,
    },
    NonPositiveWeight {
        i: usize,
        value: f64,
    },
    InfiniteTotalMass,
    EdgeClosureMismatch {
        i: usize,
        j: usize,
        dist: f64,
        closure: f64,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
    /// Violations found beyond the stored cap.
    pub truncated: usize,
}

impl ValidationReport {
    pub fn passed(&self) -> bool {
        self.violations.is_empty() && self.truncated == 0
    }
}

const MAX_REPORTED_VIOLATIONS: usize = 10_000;

/// Checks every structural invariant of a space and reports each violation.
pub fn validate_space(space: &FiniteMetricMeasureSpace) -> ValidationReport {
    let n = space.n;
    let mut violations = Vec::new();
    let mut truncated = 0usize;
    let mut push = |v: Violation| {
        if violations.len() < MAX_REPORTED_VIOLATIONS {
            violations.push(v);
        } else {
            truncated += 1;
        }
    };

    for i in 0..n {
        let dii = space.d(i, i);
        if dii.abs() > STRUCT_TOL {
            push(Violation::NonzeroDiagonal { i, value: dii });
        }
        for j in i + 1..n {
            let (dij, dji) = (space.d(i, j), space.d(j, i));
            if (dij - dji).abs() > STRUCT_TOL {
                push(Violation::Asymmetric { i, j, dij, dji });
            }
            if dij <= 0.0 {
                push(Violation::NonPositiveDistance { i, j, value: dij });
            }
        }
    }
    for i in 0..n {
        for j in 0..n {
            let dij = space.d(i, j);
            for k in 0..n {
                let excess = space.d(i, k) - (dij + space.d(j, k));
                if excess > STRUCT_TOL && i < k {
                    push(Violation::Triangle { i, j, k, excess });
                }
            }
        }
    }
    for (i, &w) in space.weights.iter().enumerate() {
        if w <= 0.0 {
            push(Violation::NonPositiveWeight { i, value: w });
        }
    }
    if !space.total_mass().is_finite() {
        push(Violation::InfiniteTotalMass);
    }
    if let Some(adj) = &space.adjacency {
        match shortest_path_closure(n, adj) {
            Ok(closure) => {
                for i in 0..n {
                    for j in i + 1..n {
                        let c = closure[i * n + j];
                        if (c - space.d(i, j)).abs() > STRUCT_TOL * c.max(1.0) {
                            push(Violation::EdgeClosureMismatch {
                                i,
                                j,
                                dist: space.d(i, j),
                                closure: c,
                            });
                        }
                    }
                }
            }
            Err(Error::Disconnected(i, j)) => push(Violation::EdgeClosureMismatch {
                i,
                j,
                dist: space.d(i, j),
                closure: f64::INFINITY,
            }),
            Err(_) => {}
        }
    }
    ValidationReport { violations, truncated }
}

/// Largest pairwise distance inside `subset`.
pub fn diameter(space: &FiniteMetricMeasureSpace, subset: &[usize]) -> Result<f64> {
    if subset.is_empty() {
        return Err(Error::EmptySubset);
    }
    for &i in subset {
        space.check_index(i)?;
    }
    let mut best = 0.0f64;
    for (a, &i) in subset.iter().enumerate() {
        for &j in &subset[a + 1..] {
            best = best.max(space.d(i, j));
        }
    }
    Ok(best)
}

/// `sup m(B_2r(x)) / m(B_r(x))` over all centres and over the radii
/// `{distinct distances <= R} ∪ {R}`.
pub fn doubling_constant(space: &FiniteMetricMeasureSpace, r_max: f64) -> Result<f64> {
    if !(r_max.is_finite() && r_max > 0.0) {
        return Err(param("R", format!("must be positive, got {r_max}")));
    }
    let mut radii = space.distinct_radii(r_max);
    radii.push(r_max);
    let mut worst = 1.0f64;
    for x in 0..space.n {
        for &r in &radii {
            let ratio = space.ball_mass(x, 2.0 * r) / space.ball_mass(x, r);
            worst = worst.max(ratio);
        }
    }
    Ok(worst)
}

/// Discrete local Lipschitz constant: at each `x`, the largest difference
/// quotient over neighbours `y != x` with `d(x, y) <= r0`, and 0 when there
/// are none.
pub fn local_lip(space: &FiniteMetricMeasureSpace, f: &RealFunction, r0: f64) -> Result<Vec<f64>> {
    if !(r0.is_finite() && r0 > 0.0) {
        return Err(param("r0", format!("must be positive, got {r0}")));
    }
    f.check_len(space.n)?;
    Ok((0..space.n)
        .map(|x| {
            space
                .dist_row(x)
                .iter()
                .enumerate()
                .filter(|&(y, &d)| y != x && d <= r0 + STRUCT_TOL)
                .map(|(y, &d)| (f[y] - f[x]).abs() / d)
                .fold(0.0, f64::max)
        })
        .collect())
}

/// Which constant the oscillation on the left side is measured against.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PoincareCenter {
    Mean,
    Median,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PoincareReport {
    pub holds: bool,
    /// Largest `lhs / rhs`; infinite when some rhs vanishes under a positive lhs.
    pub worst_ratio: f64,
    /// `(centre, radius)` attaining the worst ratio.
    pub witness: Option<(usize, f64)>,
    pub worst_lhs: f64,
    pub worst_rhs: f64,
    pub checked: usize,
}

/// Checks `avg_{B_r(x)} |f - f_B| <= tau r avg_{B_{Λr}(x)} lip f` for every
/// centre and every distinct radius `r <= R`.
pub fn poincare_check(
    space: &FiniteMetricMeasureSpace,
    f: &RealFunction,
    r0: f64,
    tau: f64,
    lambda: f64,
    r_max: f64,
) -> Result<PoincareReport> {
    poincare_check_centered(space, f, r0, tau, lambda, r_max, PoincareCenter::Mean)
}

pub fn poincare_check_centered(
    space: &FiniteMetricMeasureSpace,
    f: &RealFunction,
    r0: f64,
    tau: f64,
    lambda: f64,
    r_max: f64,
    center: PoincareCenter,
) -> Result<PoincareReport> {
    for (name, v) in [("tau", tau), ("Lambda", lambda), ("R", r_max)] {
        if !(v.is_finite() && v > 0.0) {
            return Err(param(name, format!("must be positive, got {v}")));
        }
    }
    let lip = local_lip(space, f, r0)?;
    let mut report = PoincareReport {
        holds: true,
        worst_ratio: 0.0,
        witness: None,
        worst_lhs: 0.0,
        worst_rhs: 0.0,
        checked: 0,
    };
    for x in 0..space.n {
        for r in space.distinct_radii(r_max) {
            let (lhs, grad_avg) = poincare_sides(space, f, &lip, x, r, lambda, center);
            let rhs = tau * r * grad_avg;
            report.checked += 1;
            let ratio = ratio(lhs, rhs);
            if lhs > rhs * (1.0 + INEQ_SLACK) + f64::MIN_POSITIVE {
                report.holds = false;
            }
            if ratio > report.worst_ratio || report.witness.is_none() {
                report.worst_ratio = ratio;
                report.witness = Some((x, r));
                report.worst_lhs = lhs;
                report.worst_rhs = rhs;
            }
        }
    }
    Ok(report)
}

/// Smallest `tau` making the inequality hold, for each `Λ` on a coarse grid.
pub fn poincare_grid_search(
    space: &FiniteMetricMeasureSpace,
    f: &RealFunction,
    r0: f64,
    r_max: f64,
    lambdas: &[f64],
) -> Result<Vec<(f64, f64)>> {
    let lip = local_lip(space, f, r0)?;
    let radii = space.distinct_radii(r_max);
    lambdas
        .iter()
        .map(|&lambda| {
            if !(lambda.is_finite() && lambda > 0.0) {
                return Err(param("Lambda", format!("must be positive, got {lambda}")));
            }
            let mut tau: f64 = 0.0;
            for x in 0..space.n {
                for &r in &radii {
                    let (lhs, grad_avg) = poincare_sides(space, f, &lip, x, r, lambda, PoincareCenter::Mean);
                    tau = tau.max(ratio(lhs, r * grad_avg));
                }
            }
            Ok((lambda, tau))
        })
        .collect()
}

fn ratio(lhs: f64, rhs: f64) -> f64 {
    if lhs <= 0.0 {
        0.0
    } else if rhs <= 0.0 {
        f64::INFINITY
    } else {
        lhs / rhs
    }
}

fn poincare_sides(
    space: &FiniteMetricMeasureSpace,
    f: &RealFunction,
    lip: &[f64],
    x: usize,
    r: f64,
    lambda: f64,
    center: PoincareCenter,
) -> (f64, f64) {
    let ball: Vec<usize> = space.ball(x, r).collect();
    let mass: f64 = ball.iter().map(|&y| space.weight(y)).sum();
    let c = match center {
        PoincareCenter::Mean => ball.iter().map(|&y| f[y] * space.weight(y)).sum::<f64>() / mass,
        PoincareCenter::Median => weighted_median(ball.iter().map(|&y| (f[y], space.weight(y)))),
    };
    let lhs = ball.iter().map(|&y| (f[y] - c).abs() * space.weight(y)).sum::<f64>() / mass;
    let big_mass = space.ball_mass(x, lambda * r);
    let grad = space.ball(x, lambda * r).map(|y| lip[y] * space.weight(y)).sum::<f64>() / big_mass;
    (lhs, grad)
}

fn weighted_median(items: impl Iterator<Item = (f64, f64)>) -> f64 {
    let mut v: Vec<(f64, f64)> = items.collect();
    v.sort_by(|a, b| a.0.total_cmp(&b.0));
    let total: f64 = v.iter().map(|p| p.1).sum();
    let mut acc = 0.0;
    for &(val, w) in &v {
        acc += w;
        if acc >= total / 2.0 {
            return val;
        }
    }
    v.last().map(|p| p.0).unwrap_or(0.0)
}
