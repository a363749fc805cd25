use serde::Serialize;

use crate::curves::{resampled_path, GeodesicInterpolator, TestPlan};
use crate::error::Result;
use crate::space::FiniteMetricMeasureSpace;
use crate::transport::{wasserstein, Coupling, ProbMeasure};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OptGeoPlan {
    pub plan: TestPlan,
    pub coupling: Coupling,
    /// `W_q^q(μ0, μ1)`.
    pub cost_pow: f64,
    /// Upper bound on `Ke_q(plan) - W_q^q`. Zero when every coupled pair has
    /// exact constant-speed samples on the grid.
    pub slack: f64,
}

/// Lifts an optimal coupling to a plan on resampled shortest paths.
///
/// For a pair at distance `L` whose samples deviate from `j L / T` by at most
/// `δ`, every step has speed at most `L + 2Tδ`, so its energy lies in
/// `[L^q, (L + 2Tδ)^q]`. The slack sums the widths of these intervals.
pub fn optgeo_plan(
    space: &FiniteMetricMeasureSpace,
    q: f64,
    mu0: &ProbMeasure,
    mu1: &ProbMeasure,
    steps: usize,
) -> Result<OptGeoPlan> {
    let opt = wasserstein(space, q, mu0, mu1)?;
    let mut curves = Vec::with_capacity(opt.coupling.entries().len());
    let mut probs = Vec::with_capacity(curves.capacity());
    let mut slack = 0.0;
    for &(x, y, a) in opt.coupling.entries() {
        let (curve, dev) = resampled_path(space, x, y, steps)?;
        let len = space.d(x, y);
        if dev > 0.0 {
            slack += a * ((len + 2.0 * steps as f64 * dev).powf(q) - len.powf(q));
        }
        curves.push(curve);
        probs.push(a);
    }
    Ok(OptGeoPlan {
        plan: TestPlan::new(curves, probs, q)?.merged(),
        coupling: opt.coupling,
        cost_pow: opt.cost_pow,
        slack,
    })
}

/// [`GeodesicInterpolator`] backed by [`optgeo_plan`].
#[derive(Debug, Clone, Copy, Default)]
pub struct OptGeo;

impl GeodesicInterpolator for OptGeo {
    fn interpolate(
        &self,
        space: &FiniteMetricMeasureSpace,
        q: f64,
        mu0: &ProbMeasure,
        mu1: &ProbMeasure,
        steps: usize,
    ) -> Result<TestPlan> {
        Ok(optgeo_plan(space, q, mu0, mu1, steps)?.plan)
    }
}
