//! Discrete curves on the uniform grid `t_j = j / T` and test plans built
//! from them.

mod plan;
mod polygonal;

pub use plan::{
    compression, glue_plans, mix_plans, plan_kinetic_energy, refine_plan, rescale_plan, restrict_plan, reverse_plan,
    TestPlan,
};
pub use polygonal::{polygonal_approximation, sup_distance, GeodesicInterpolator};

use serde::Serialize;

use crate::error::{check_exponent, param, Error, Result};
use crate::space::{FiniteMetricMeasureSpace, STRUCT_TOL};

/// Tolerance on `t * T` being an integer.
const GRID_TOL: f64 = 1e-9;

/// A path through points of a space sampled at `T + 1` equally spaced times.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize)]
#[serde(transparent)]
pub struct DiscreteCurve {
    nodes: Vec<usize>,
}

impl DiscreteCurve {
    /// Needs at least two nodes (`T >= 1`).
    pub fn new(nodes: Vec<usize>) -> Result<Self> {
        if nodes.len() < 2 {
            return Err(param("nodes", "a curve needs at least two nodes (T >= 1)"));
        }
        Ok(DiscreteCurve { nodes })
    }

    pub fn constant(x: usize, steps: usize) -> Self {
        DiscreteCurve {
            nodes: vec![x; steps.max(1) + 1],
        }
    }

    pub fn nodes(&self) -> &[usize] {
        &self.nodes
    }

    pub fn steps(&self) -> usize {
        self.nodes.len() - 1
    }

    pub fn start(&self) -> usize {
        self.nodes[0]
    }

    pub fn end(&self) -> usize {
        self.nodes[self.nodes.len() - 1]
    }

    pub fn at(&self, j: usize) -> usize {
        self.nodes[j]
    }

    pub fn reversed(&self) -> Self {
        let mut nodes = self.nodes.clone();
        nodes.reverse();
        DiscreteCurve { nodes }
    }

    pub(crate) fn check_space(&self, space: &FiniteMetricMeasureSpace) -> Result<()> {
        for &x in &self.nodes {
            space.check_index(x)?;
        }
        Ok(())
    }

    /// Total length `Σ d(γ_j, γ_{j+1})`.
    pub fn length(&self, space: &FiniteMetricMeasureSpace) -> f64 {
        self.nodes.windows(2).map(|w| space.d(w[0], w[1])).sum()
    }
}

/// Grid index of time `t` on a grid with `steps` steps.
pub fn grid_index(t: f64, steps: usize) -> Result<usize> {
    let k = t * steps as f64;
    let r = k.round();
    if !(0.0..=1.0).contains(&t) || (k - r).abs() > GRID_TOL {
        return Err(Error::NotGridAligned(t, steps));
    }
    Ok(r as usize)
}

/// Speed on each step, `T d(γ_j, γ_{j+1})`.
pub fn metric_speed(space: &FiniteMetricMeasureSpace, gamma: &DiscreteCurve) -> Vec<f64> {
    let t = gamma.steps() as f64;
    gamma.nodes.windows(2).map(|w| t * space.d(w[0], w[1])).collect()
}

/// `Ke_q(γ) = (1/T) Σ_j speed_j^q`.
pub fn kinetic_energy(space: &FiniteMetricMeasureSpace, gamma: &DiscreteCurve, q: f64) -> Result<f64> {
    check_exponent("q", q)?;
    let speeds = metric_speed(space, gamma);
    Ok(speeds.iter().map(|v| v.powf(q)).sum::<f64>() / gamma.steps() as f64)
}

/// Largest grid speed, the discrete Lipschitz constant of the curve.
pub fn max_speed(space: &FiniteMetricMeasureSpace, gamma: &DiscreteCurve) -> f64 {
    metric_speed(space, gamma).into_iter().fold(0.0, f64::max)
}

/// `Restr_s^t γ`, reparametrised onto its own full grid of `(t - s) T` steps.
pub fn restrict_curve(gamma: &DiscreteCurve, s: f64, t: f64) -> Result<DiscreteCurve> {
    if s >= t {
        return Err(param("s", format!("need s < t, got s = {s}, t = {t}")));
    }
    let a = grid_index(s, gamma.steps())?;
    let b = grid_index(t, gamma.steps())?;
    Ok(DiscreteCurve {
        nodes: gamma.nodes[a..=b].to_vec(),
    })
}

/// A shortest path from `x` to `y`, resampled at near-constant speed onto
/// `steps + 1` nodes.
///
/// The path is built greedily: from the current point, step to the admissible
/// point lying on a geodesic to `y` that is closest, ties to the smaller
/// index. Admissible points are graph neighbours when the space carries an
/// edge list and all points otherwise. Node `j` is the path point whose arc
/// length is closest to `j d(x, y) / T`, ties to the smaller index.
pub fn shortest_path_curve(
    space: &FiniteMetricMeasureSpace,
    x: usize,
    y: usize,
    steps: usize,
) -> Result<DiscreteCurve> {
    Ok(resampled_path(space, x, y, steps)?.0)
}

/// Same as [`shortest_path_curve`], also returning the largest deviation
/// `max_j |arc_j - j L / T|` of the sampled arc lengths.
pub(crate) fn resampled_path(
    space: &FiniteMetricMeasureSpace,
    x: usize,
    y: usize,
    steps: usize,
) -> Result<(DiscreteCurve, f64)> {
    space.check_index(x)?;
    space.check_index(y)?;
    if steps == 0 {
        return Err(param("T", "must be at least 1"));
    }
    let (path, arcs) = geodesic_path(space, x, y)?;
    let total = space.d(x, y);
    let mut nodes = Vec::with_capacity(steps + 1);
    let mut deviation: f64 = 0.0;
    let mut k = 0usize;
    for j in 0..=steps {
        let target = total * j as f64 / steps as f64;
        // arcs are increasing, so the best index never moves backwards
        while k + 1 < path.len() && pick_next(arcs[k], path[k], arcs[k + 1], path[k + 1], target) {
            k += 1;
        }
        nodes.push(path[k]);
        deviation = deviation.max((arcs[k] - target).abs());
    }
    Ok((DiscreteCurve { nodes }, deviation))
}

fn pick_next(arc: f64, point: usize, next_arc: f64, next_point: usize, target: f64) -> bool {
    let (e0, e1) = ((arc - target).abs(), (next_arc - target).abs());
    e1 < e0 || (e1 == e0 && next_point < point)
}

fn geodesic_path(space: &FiniteMetricMeasureSpace, x: usize, y: usize) -> Result<(Vec<usize>, Vec<f64>)> {
    let mut path = vec![x];
    let mut arcs = vec![0.0];
    let mut u = x;
    while u != y {
        let remaining = space.d(u, y);
        let on_geodesic =
            |v: usize, step: f64| v != u && (step + space.d(v, y) - remaining).abs() <= STRUCT_TOL * remaining.max(1.0);
        let next = match space.neighbors(u) {
            Some(adj) => adj
                .iter()
                .filter(|&&(v, len)| on_geodesic(v, len))
                .map(|&(v, len)| (v, len))
                .min_by(|a, b| a.1.total_cmp(&b.1).then(a.0.cmp(&b.0))),
            None => (0..space.n())
                .map(|v| (v, space.d(u, v)))
                .filter(|&(v, len)| on_geodesic(v, len))
                .min_by(|a, b| a.1.total_cmp(&b.1).then(a.0.cmp(&b.0))),
        };
        let (v, len) = next.ok_or(Error::Disconnected(u, y))?;
        arcs.push(arcs[arcs.len() - 1] + len);
        path.push(v);
        u = v;
    }
    Ok((path, arcs))
}
