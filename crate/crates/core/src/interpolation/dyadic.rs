//! Density-bounded dyadic geodesics.
//!
//! Level `i` fills the odd times `k 2^{-i}` with excess-minimising midpoints of
//! their two neighbours, capped at `P(2^{-i+1} D, K)` times the larger
//! neighbour sup-density, where `P(D, K) = e^{K⁻ D² / 8}`.

use rayon::prelude::*;
use serde::Serialize;

use super::midpoint::midpoint_excess_min;
use crate::error::{param, Error, Result};
use crate::space::{diameter, FiniteMetricMeasureSpace};
use crate::transport::ProbMeasure;

/// Excess above which a cap counts as infeasible.
pub const EXCESS_TOL: f64 = 1e-8;
/// Relative slack for density bound checks.
pub const DENSITY_SLACK: f64 = 1e-6;
pub const DEFAULT_LEVELS: usize = 4;

/// `K⁻ = max(-K, 0)`.
pub fn k_minus(k: f64) -> f64 {
    (-k).max(0.0)
}

/// Per-midpoint spreading factor `e^{K⁻ D² / 8}`.
pub fn spread_factor(d: f64, k: f64) -> f64 {
    (k_minus(k) * d * d / 8.0).exp()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LevelRecord {
    pub level: usize,
    /// Distance scale `2^{-level+1} D`.
    pub scale: f64,
    /// Largest cap handed to an LP at this level.
    pub cap: f64,
    /// `∏_{i <= level} P(2^{-i+1} D, K) · B0`, the a priori bound.
    pub product_bound: f64,
    /// Largest sup-density among the measures created at this level.
    pub achieved: f64,
    /// Largest excess left by the LPs of this level.
    pub max_excess: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DyadicGeodesic {
    pub levels: usize,
    /// `measures[k]` sits at time `k 2^{-levels}`.
    pub measures: Vec<ProbMeasure>,
    /// The cap each measure was built under; endpoints carry their own sup-density.
    pub caps: Vec<f64>,
    pub density_bound_trace: Vec<LevelRecord>,
    /// `diam(supp μ0 ∪ supp μ1)`.
    pub diameter: f64,
    /// `‖ρ0‖ ∨ ‖ρ1‖`.
    pub input_norm: f64,
    /// Whether every measure respects `C_target · (‖ρ0‖ ∨ ‖ρ1‖)` up to the
    /// relative slack; `None` when no target was given.
    pub met_target: Option<bool>,
}

impl DyadicGeodesic {
    pub fn time(&self, k: usize) -> f64 {
        k as f64 / (1usize << self.levels) as f64
    }

    /// Largest sup-density along the geodesic.
    pub fn sup_density(&self, space: &FiniteMetricMeasureSpace) -> f64 {
        self.measures.iter().map(|m| m.density_sup(space)).fold(0.0, f64::max)
    }

    pub fn max_excess(&self) -> f64 {
        self.density_bound_trace
            .iter()
            .map(|r| r.max_excess)
            .fold(0.0, f64::max)
    }
}

/// Fills a dyadic geodesic. Fails with [`Error::CapInfeasible`] when some
/// level leaves more than `1e-8` of excess mass.
pub fn dyadic_geodesic(
    space: &FiniteMetricMeasureSpace,
    q: f64,
    mu0: &ProbMeasure,
    mu1: &ProbMeasure,
    k: f64,
    levels: usize,
    c_target: Option<f64>,
) -> Result<DyadicGeodesic> {
    let geo = fill(
        space,
        q,
        mu0,
        mu1,
        levels,
        c_target,
        |d, nb| spread_factor(d, k) * nb,
        |d| spread_factor(d, k),
    )?;
    for (i, rec) in geo.density_bound_trace.iter().enumerate() {
        if rec.max_excess > EXCESS_TOL {
            let stride = 1usize << (levels - i - 1);
            let (time, excess) = (0..geo.measures.len())
                .filter(|j| j % (2 * stride) == stride)
                .map(|j| {
                    let m = &geo.measures[j];
                    let e = super::midpoint::excess_over(space, m, geo.caps[j]);
                    (geo.time(j), e)
                })
                .fold((0.0, 0.0), |a, b| if b.1 > a.1 { b } else { a });
            return Err(Error::CapInfeasible {
                level: rec.level,
                time,
                excess,
            });
        }
    }
    Ok(geo)
}

/// Fills every level without rejecting excess. `cap(d, b)` is the density cap
/// for a midpoint at distance scale `d = 2^{-level+1} D` whose neighbours have
/// larger sup-density `b`; `factor(d)` drives the recorded product bound.
#[allow(clippy::too_many_arguments)]
pub(crate) fn fill(
    space: &FiniteMetricMeasureSpace,
    q: f64,
    mu0: &ProbMeasure,
    mu1: &ProbMeasure,
    levels: usize,
    c_target: Option<f64>,
    cap: impl Fn(f64, f64) -> f64 + Sync,
    factor: impl Fn(f64) -> f64,
) -> Result<DyadicGeodesic> {
    if levels == 0 {
        return Err(param("levels", "must be at least 1"));
    }
    if levels > 20 {
        return Err(param("levels", "more than 20 levels is not supported"));
    }
    mu0.check_space(space)?;
    mu1.check_space(space)?;
    let mut support = mu0.support();
    support.extend(mu1.support());
    let diam = diameter(space, &support)?;
    let input_norm = mu0.density_sup(space).max(mu1.density_sup(space));

    let size = (1usize << levels) + 1;
    let mut measures: Vec<Option<ProbMeasure>> = vec![None; size];
    let mut caps = vec![0.0; size];
    measures[0] = Some(mu0.clone());
    measures[size - 1] = Some(mu1.clone());
    caps[0] = mu0.density_sup(space);
    caps[size - 1] = mu1.density_sup(space);

    let mut trace = Vec::with_capacity(levels);
    let mut bound = input_norm;
    for level in 1..=levels {
        let stride = 1usize << (levels - level);
        let scale = diam * 2f64.powi(1 - level as i32);
        bound *= factor(scale);
        let targets: Vec<usize> = (stride..size).step_by(2 * stride).collect();
        let results: Vec<Result<(ProbMeasure, f64, f64)>> = targets
            .par_iter()
            .map(|&j| {
                let a = measures[j - stride].as_ref().expect("left neighbour filled");
                let b = measures[j + stride].as_ref().expect("right neighbour filled");
                let c = cap(scale, a.density_sup(space).max(b.density_sup(space)));
                let r = midpoint_excess_min(space, q, a, b, c)?;
                Ok((r.mu, c, r.excess))
            })
            .collect();
        let mut achieved: f64 = 0.0;
        let mut max_excess: f64 = 0.0;
        let mut level_cap: f64 = 0.0;
        for (&j, r) in targets.iter().zip(results) {
            let (mu, c, excess) = r?;
            achieved = achieved.max(mu.density_sup(space));
            max_excess = max_excess.max(excess);
            level_cap = level_cap.max(c);
            caps[j] = c;
            measures[j] = Some(mu);
        }
        trace.push(LevelRecord {
            level,
            scale,
            cap: level_cap,
            product_bound: bound,
            achieved,
            max_excess,
        });
    }
    let measures: Vec<ProbMeasure> = measures.into_iter().map(|m| m.expect("all filled")).collect();
    let met_target = c_target.map(|c| {
        let limit = c * input_norm * (1.0 + DENSITY_SLACK);
        measures.iter().all(|m| m.density_sup(space) <= limit)
    });
    Ok(DyadicGeodesic {
        levels,
        measures,
        caps,
        density_bound_trace: trace,
        diameter: diam,
        input_norm,
        met_target,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::generators;
    use crate::interpolation::intermediate_feasibility;

    fn patch(n: usize, from: usize, len: usize) -> ProbMeasure {
        ProbMeasure::uniform_on(n, &(from..from + len).collect::<Vec<_>>()).unwrap()
    }

    #[test]
    fn constant_geodesic() {
        let s = generators::line(9, 1.0, 1.0);
        let u = patch(9, 0, 9);
        let g = dyadic_geodesic(&s, 2.0, &u, &u, 0.0, 3, Some(1.0)).unwrap();
        assert_eq!(g.measures.len(), 9);
        assert!(g.measures.iter().all(|m| m.sup_distance(&u) < 1e-15));
        assert_eq!(g.met_target, Some(true));
    }

    #[test]
    fn flat_line_keeps_density() {
        let n = 33;
        let s = generators::line(n, 1.0, 1.0);
        let (a, b) = (patch(n, 0, 8), patch(n, 16, 8));
        let g = dyadic_geodesic(&s, 2.0, &a, &b, 0.0, 3, Some(1.0)).unwrap();
        assert_eq!(g.met_target, Some(true));
        for k in 0..=8 {
            // uniform patch shifted by 2k
            assert!(g.measures[k].sup_distance(&patch(n, 2 * k, 8)) < 1e-9);
        }
        for k in 1..8 {
            let lo = k & (k - 1);
            let stride = k - lo;
            let f = intermediate_feasibility(
                &s,
                2.0,
                &g.measures[k - stride],
                &g.measures[k + stride],
                &g.measures[k],
                0.5,
            )
            .unwrap();
            assert!(f.member);
        }
    }

    #[test]
    fn negative_curvature_trace() {
        let n = 33;
        let s = generators::line(n, 1.0, 1.0);
        let (a, b) = (patch(n, 0, 8), patch(n, 16, 8));
        let g = dyadic_geodesic(&s, 2.0, &a, &b, -1.0, 3, None).unwrap();
        let d = g.diameter;
        assert_eq!(d, 23.0);
        let mut prod = 1.0;
        for (i, rec) in g.density_bound_trace.iter().enumerate() {
            let scale = d * 2f64.powi(-(i as i32));
            prod *= (scale * scale / 8.0).exp();
            assert!((rec.product_bound / (g.input_norm * prod) - 1.0).abs() < 1e-12);
            assert!(rec.cap <= rec.product_bound * (1.0 + 1e-12));
            assert!(rec.achieved <= rec.cap * (1.0 + DENSITY_SLACK));
        }
    }

    #[test]
    fn pinched_space_exceeds_unit_cap() {
        let s = generators::pinched(3, 0.1);
        let a = ProbMeasure::uniform_on(7, &[0, 1, 2]).unwrap();
        let b = ProbMeasure::uniform_on(7, &[4, 5, 6]).unwrap();
        let err = dyadic_geodesic(&s, 2.0, &a, &b, 0.0, 1, None).unwrap_err();
        assert!(matches!(err, Error::CapInfeasible { level: 1, .. }));
    }
}
