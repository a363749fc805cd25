use super::plan::{glue_plans, mix_plans, rescale_plan, TestPlan};
use super::DiscreteCurve;
use crate::error::{param, Result};
use crate::space::FiniteMetricMeasureSpace;
use crate::transport::ProbMeasure;

/// Supplies a dynamical optimal plan between two measures on a grid with
/// the requested number of steps.
pub trait GeodesicInterpolator {
    fn interpolate(
        &self,
        space: &FiniteMetricMeasureSpace,
        q: f64,
        mu0: &ProbMeasure,
        mu1: &ProbMeasure,
        steps: usize,
    ) -> Result<TestPlan>;
}

/// `max_j d(γ_j, η_j)`.
pub fn sup_distance(space: &FiniteMetricMeasureSpace, a: &DiscreteCurve, b: &DiscreteCurve) -> f64 {
    a.nodes()
        .iter()
        .zip(b.nodes())
        .map(|(&x, &y)| space.d(x, y))
        .fold(0.0, f64::max)
}

/// Polygonal plan `π_{n,m}`.
///
/// Curves are clustered greedily in index order: each unassigned curve seeds
/// a cell collecting every unassigned curve within sup-distance `1/(2n)`, so
/// cells have diameter at most `1/n`. On each cell and each time block
/// `[j/m, (j+1)/m]` the conditioned plan is replaced by an optimal geodesic
/// plan between its block-endpoint marginals; the blocks are glued and the
/// cells mixed back with their original masses. `m` must divide `T`.
pub fn polygonal_approximation(
    space: &FiniteMetricMeasureSpace,
    plan: &TestPlan,
    n: usize,
    m: usize,
    interpolator: &dyn GeodesicInterpolator,
) -> Result<TestPlan> {
    if n == 0 {
        return Err(param("n", "must be at least 1"));
    }
    if m == 0 || !plan.steps().is_multiple_of(m) {
        return Err(param(
            "m",
            format!("must divide the {} grid steps, got {m}", plan.steps()),
        ));
    }
    plan.check_space(space)?;
    let radius = 0.5 / n as f64;
    let block = plan.steps() / m;

    let mut cell_of = vec![usize::MAX; plan.len()];
    let mut cells: Vec<Vec<usize>> = Vec::new();
    for seed in 0..plan.len() {
        if cell_of[seed] != usize::MAX || plan.probs()[seed] <= 0.0 {
            continue;
        }
        let id = cells.len();
        let mut members = Vec::new();
        for (k, cell) in cell_of.iter_mut().enumerate().skip(seed) {
            if *cell == usize::MAX
                && plan.probs()[k] > 0.0
                && sup_distance(space, &plan.curves()[seed], &plan.curves()[k]) <= radius
            {
                *cell = id;
                members.push(k);
            }
        }
        cells.push(members);
    }

    let mut parts = Vec::with_capacity(cells.len());
    for members in &cells {
        let mass: f64 = members.iter().map(|&k| plan.probs()[k]).sum();
        let cell = rescale_plan(plan, members)?;
        let mut glued: Option<TestPlan> = None;
        for j in 0..m {
            let mu0 = cell.marginal(space.n(), j * block)?;
            let mu1 = cell.marginal(space.n(), (j + 1) * block)?;
            let piece = interpolator.interpolate(space, plan.q(), &mu0, &mu1, block)?;
            glued = Some(match glued {
                None => piece,
                Some(g) => glue_plans(&g, &piece)?,
            });
        }
        parts.push((mass, glued.expect("m >= 1 pieces")));
    }
    mix_plans(&parts)
}
