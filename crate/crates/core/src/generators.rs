//! Small test spaces. All generators panic on degenerate parameters
//! (zero points, non-positive lengths or weights).

use crate::space::{Edge, FiniteMetricMeasureSpace};

fn graph(n: usize, edges: Vec<Edge>, weights: Vec<f64>) -> FiniteMetricMeasureSpace {
    FiniteMetricMeasureSpace::from_edges(n, edges, weights).expect("generator produced a bad graph")
}

fn check(n: usize, len: f64) {
    assert!(n > 0, "need at least one point");
    assert!(len.is_finite() && len > 0.0, "lengths must be positive");
}

/// Path graph `0 - 1 - ... - (n-1)` with uniform spacing and weight.
pub fn line(n: usize, spacing: f64, weight: f64) -> FiniteMetricMeasureSpace {
    check(n, spacing);
    weighted_line(vec![weight; n], spacing)
}

/// Path graph carrying the given weights.
pub fn weighted_line(weights: Vec<f64>, spacing: f64) -> FiniteMetricMeasureSpace {
    let n = weights.len();
    check(n, spacing);
    let edges = (1..n).map(|i| Edge::new(i - 1, i, spacing)).collect();
    graph(n, edges, weights)
}

/// Line whose weights oscillate, `w_i = 1 + amp sin(2π periods i / n)`.
pub fn oscillating_line(n: usize, spacing: f64, amp: f64, periods: f64) -> FiniteMetricMeasureSpace {
    assert!(amp.abs() < 1.0, "amplitude must keep weights positive");
    let weights = (0..n)
        .map(|i| 1.0 + amp * (std::f64::consts::TAU * periods * i as f64 / n as f64).sin())
        .collect();
    weighted_line(weights, spacing)
}

/// Cycle graph on `n` points.
pub fn cycle(n: usize, edge_len: f64, weight: f64) -> FiniteMetricMeasureSpace {
    check(n, edge_len);
    let mut edges: Vec<Edge> = (1..n).map(|i| Edge::new(i - 1, i, edge_len)).collect();
    if n > 2 {
        edges.push(Edge::new(n - 1, 0, edge_len));
    }
    graph(n, edges, vec![weight; n])
}

/// `rows x cols` grid with 4-neighbour edges; point `(r, c)` has index `r * cols + c`.
pub fn grid(rows: usize, cols: usize, spacing: f64, weight: f64) -> FiniteMetricMeasureSpace {
    check(rows * cols, spacing);
    let mut edges = Vec::new();
    for r in 0..rows {
        for c in 0..cols {
            let i = r * cols + c;
            if c + 1 < cols {
                edges.push(Edge::new(i, i + 1, spacing));
            }
            if r + 1 < rows {
                edges.push(Edge::new(i, i + cols, spacing));
            }
        }
    }
    graph(rows * cols, edges, vec![weight; rows * cols])
}

/// Two cliques of `k` unit-weight points each. Points within a cluster are at
/// distance 1, points in different clusters at distance `gap >= 1/2`.
pub fn two_clusters(k: usize, gap: f64) -> FiniteMetricMeasureSpace {
    check(k, gap);
    assert!(gap >= 0.5, "gap below 1/2 breaks the triangle inequality");
    let n = 2 * k;
    let dist = (0..n)
        .map(|i| {
            (0..n)
                .map(|j| {
                    if i == j {
                        0.0
                    } else if (i < k) == (j < k) {
                        1.0
                    } else {
                        gap
                    }
                })
                .collect()
        })
        .collect();
    FiniteMetricMeasureSpace::from_matrix(dist, vec![1.0; n]).expect("valid shape")
}

/// Two unit-weight cliques `0..k` and `k+1..=2k`, every point joined by a unit
/// edge to the bridge point `k` of weight `bridge_weight`. Every geodesic
/// between the clusters passes through the bridge at its midpoint.
pub fn pinched(k: usize, bridge_weight: f64) -> FiniteMetricMeasureSpace {
    check(k, bridge_weight);
    let n = 2 * k + 1;
    let mut edges = Vec::new();
    for side in [0..k, k + 1..n] {
        let pts: Vec<usize> = side.collect();
        for (a, &i) in pts.iter().enumerate() {
            edges.push(Edge::new(i, k, 1.0));
            for &j in &pts[a + 1..] {
                edges.push(Edge::new(i, j, 1.0));
            }
        }
    }
    let mut weights = vec![1.0; n];
    weights[k] = bridge_weight;
    graph(n, edges, weights)
}

/// Star with `arms` legs of `len` unit edges around centre 0.
pub fn star(arms: usize, len: usize, weight: f64) -> FiniteMetricMeasureSpace {
    check(arms * len, 1.0);
    let n = arms * len + 1;
    let mut edges = Vec::new();
    for a in 0..arms {
        for s in 0..len {
            let node = 1 + a * len + s;
            let prev = if s == 0 { 0 } else { node - 1 };
            edges.push(Edge::new(prev, node, 1.0));
        }
    }
    graph(n, edges, vec![weight; n])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::space::validate_space;

    #[test]
    fn generators_are_valid() {
        for s in [
            line(7, 0.5, 2.0),
            oscillating_line(20, 0.1, 0.5, 3.0),
            cycle(6, 1.0, 1.0),
            grid(3, 4, 1.0, 1.0),
            two_clusters(3, 5.0),
            pinched(3, 0.1),
            star(3, 2, 1.0),
        ] {
            assert!(validate_space(&s).passed());
        }
    }

    #[test]
    fn metrics() {
        assert_eq!(line(5, 0.5, 1.0).d(0, 4), 2.0);
        assert_eq!(cycle(6, 1.0, 1.0).d(0, 3), 3.0);
        assert_eq!(cycle(6, 1.0, 1.0).d(0, 5), 1.0);
        assert_eq!(grid(3, 3, 1.0, 1.0).d(0, 8), 4.0);
        let p = pinched(2, 0.1);
        assert_eq!(p.d(0, 4), 2.0);
        assert_eq!(p.d(0, 1), 1.0);
        assert_eq!(star(3, 2, 1.0).d(2, 4), 4.0);
    }
}
