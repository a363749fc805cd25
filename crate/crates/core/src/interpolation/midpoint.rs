//! Intermediate measures and the excess-minimising midpoint LP.
//!
//! For `q > 1`, `μ` is a midpoint of `(μ0, μ1)` iff gluing the two optimal
//! couplings gives a 3-plan on triples `(x, z, y)` with
//! `d(x, z) = d(z, y) = d(x, y) / 2`. So only cells `(x, z)` and `(z, y)` where
//! `z` is an exact metric midpoint of some support pair can carry mass, and
//! the LP is restricted to them before solving. The cost constraints are
//! sublevel sets; the triangle inequality makes them bind at any feasible
//! point.

use microlp::{ComparisonOp, LinearExpr, OptimizationDirection, Problem, Variable};
use serde::Serialize;

use crate::curves::{grid_index, TestPlan};
use crate::error::{check_exponent, param, Error, Result};
use crate::space::FiniteMetricMeasureSpace;
use crate::transport::{wasserstein, ProbMeasure};

/// Membership tolerance for `I_t`, scaled by `max(1, W)`.
pub const MEMBERSHIP_TOL: f64 = 1e-8;
/// Relative tolerance on `d(x, z) = d(z, y) = d(x, y) / 2`.
const MIDPOINT_REL_TOL: f64 = 1e-9;
/// Relative slack on the cost constraints, above the LP's own tolerance.
const COST_SLACK: f64 = 1e-10;
/// Relative slack on the optimal excess or cap when refining a midpoint.
const REFINE_SLACK: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IntermediateReport {
    pub w: f64,
    /// `|W_q(μ0, μ) - t W|`.
    pub residual0: f64,
    /// `|W_q(μ, μ1) - (1 - t) W|`.
    pub residual1: f64,
    pub member: bool,
}

/// Tests `μ ∈ I_t^q(μ0, μ1)`.
pub fn intermediate_feasibility(
    space: &FiniteMetricMeasureSpace,
    q: f64,
    mu0: &ProbMeasure,
    mu1: &ProbMeasure,
    mu: &ProbMeasure,
    t: f64,
) -> Result<IntermediateReport> {
    if !(t > 0.0 && t < 1.0) {
        return Err(param("t", format!("must lie in (0, 1), got {t}")));
    }
    let w = wasserstein(space, q, mu0, mu1)?.cost;
    let residual0 = (wasserstein(space, q, mu0, mu)?.cost - t * w).abs();
    let residual1 = (wasserstein(space, q, mu, mu1)?.cost - (1.0 - t) * w).abs();
    let tol = MEMBERSHIP_TOL * w.max(1.0);
    Ok(IntermediateReport {
        w,
        residual0,
        residual1,
        member: residual0 <= tol && residual1 <= tol,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MidpointResult {
    pub mu: ProbMeasure,
    /// `Σ_i (μ_i - C m_i)^+`.
    pub excess: f64,
}

/// Minimises the mass above the density cap `C` over all midpoints.
pub fn midpoint_excess_min(
    space: &FiniteMetricMeasureSpace,
    q: f64,
    mu0: &ProbMeasure,
    mu1: &ProbMeasure,
    cap: f64,
) -> Result<MidpointResult> {
    if !(cap.is_finite() && cap >= 0.0) {
        return Err(param("C", format!("must be a finite nonnegative number, got {cap}")));
    }
    let mu = solve_midpoint(space, q, mu0, mu1, Objective::Excess(cap))?;
    let excess = excess_over(space, &mu, cap);
    Ok(MidpointResult { mu, excess })
}

/// The smallest sup-density of any midpoint, with a midpoint attaining it.
pub fn min_midpoint_density(
    space: &FiniteMetricMeasureSpace,
    q: f64,
    mu0: &ProbMeasure,
    mu1: &ProbMeasure,
) -> Result<(f64, ProbMeasure)> {
    let mu = solve_midpoint(space, q, mu0, mu1, Objective::SupDensity)?;
    Ok((mu.density_sup(space), mu))
}

pub(crate) fn excess_over(space: &FiniteMetricMeasureSpace, mu: &ProbMeasure, cap: f64) -> f64 {
    mu.masses()
        .iter()
        .zip(space.weights())
        .map(|(m, w)| (m - cap * w).max(0.0))
        .sum()
}

enum Objective {
    Excess(f64),
    SupDensity,
}

/// The admissible cells of the midpoint LP.
struct Cells {
    zs: Vec<usize>,
    left: Vec<Vec<usize>>,
    right: Vec<Vec<usize>>,
    budget: f64,
}

fn solve_midpoint(
    space: &FiniteMetricMeasureSpace,
    q: f64,
    mu0: &ProbMeasure,
    mu1: &ProbMeasure,
    objective: Objective,
) -> Result<ProbMeasure> {
    check_exponent("q", q)?;
    let opt = wasserstein(space, q, mu0, mu1)?;
    if opt.cost_pow == 0.0 {
        return Ok(mu0.clone());
    }
    let n = space.n();
    let s0 = mu0.support();
    let s1 = mu1.support();

    // admissible cells
    let is_mid = |x: usize, z: usize, y: usize| {
        let d = space.d(x, y);
        let tol = MIDPOINT_REL_TOL * d.max(1.0);
        (space.d(x, z) - d / 2.0).abs() <= tol && (space.d(z, y) - d / 2.0).abs() <= tol
    };
    let mut left = vec![Vec::new(); n]; // z -> x with (x, z) admissible
    let mut right = vec![Vec::new(); n]; // z -> y with (z, y) admissible
    for z in 0..n {
        for &x in &s0 {
            if s1.iter().any(|&y| is_mid(x, z, y)) {
                left[z].push(x);
            }
        }
        for &y in &s1 {
            if s0.iter().any(|&x| is_mid(x, z, y)) {
                right[z].push(y);
            }
        }
    }
    let zs: Vec<usize> = (0..n)
        .filter(|&z| !left[z].is_empty() && !right[z].is_empty())
        .collect();
    if zs.is_empty() {
        return Err(Error::NoIntermediate { t: 0.5 });
    }
    let cells = Cells {
        zs,
        left,
        right,
        budget: opt.cost_pow / 2f64.powf(q) * (1.0 + COST_SLACK),
    };

    // The budgets carry a little slack, so a vertex of the first LP may sit on
    // the widened boundary, a near-midpoint off by about the slack. Minimising
    // the total cost over the optimal face lands on an exact midpoint; left
    // alone, the error compounds across dyadic levels until none survives.
    let (best, _) = midpoint_lp(space, mu0, mu1, q, &cells, &objective, None)?;
    let limit = best * (1.0 + REFINE_SLACK) + REFINE_SLACK;
    match midpoint_lp(space, mu0, mu1, q, &cells, &objective, Some(limit)) {
        Ok((_, mass)) => ProbMeasure::normalize(mass),
        Err(Error::NoIntermediate { .. }) => {
            let (_, mass) = midpoint_lp(space, mu0, mu1, q, &cells, &objective, None)?;
            ProbMeasure::normalize(mass)
        }
        Err(e) => Err(e),
    }
}

/// One midpoint LP. Without `refine` the objective is the excess or the cap;
/// with `refine = Some(v)` that quantity is held below `v` and the total
/// transport cost is minimised instead. Returns the objective and the masses.
fn midpoint_lp(
    space: &FiniteMetricMeasureSpace,
    mu0: &ProbMeasure,
    mu1: &ProbMeasure,
    q: f64,
    cells: &Cells,
    objective: &Objective,
    refine: Option<f64>,
) -> Result<(f64, Vec<f64>)> {
    let n = space.n();
    let primary = if refine.is_some() { 0.0 } else { 1.0 };
    let cost_weight = if refine.is_some() { 1.0 / cells.budget } else { 0.0 };
    let mut lp = Problem::new(OptimizationDirection::Minimize);
    let mut row0: Vec<LinearExpr> = vec![LinearExpr::empty(); n];
    let mut col1: Vec<LinearExpr> = vec![LinearExpr::empty(); n];
    let mut cost0 = LinearExpr::empty();
    let mut cost1 = LinearExpr::empty();
    let mut goal = LinearExpr::empty();
    let mut inflow: Vec<Vec<Variable>> = Vec::with_capacity(cells.zs.len());
    let cap_var = match objective {
        Objective::SupDensity => {
            let v = lp.add_var(primary, (0.0, f64::INFINITY));
            goal.add(v, 1.0);
            Some(v)
        }
        Objective::Excess(_) => None,
    };
    for &z in &cells.zs {
        let mut balance = LinearExpr::empty();
        let mut ins = Vec::with_capacity(cells.left[z].len());
        for &x in &cells.left[z] {
            let c = space.d(x, z).powf(q);
            let v = lp.add_var(cost_weight * c, (0.0, f64::INFINITY));
            row0[x].add(v, 1.0);
            cost0.add(v, c);
            balance.add(v, 1.0);
            ins.push(v);
        }
        for &y in &cells.right[z] {
            let c = space.d(z, y).powf(q);
            let v = lp.add_var(cost_weight * c, (0.0, f64::INFINITY));
            col1[y].add(v, 1.0);
            cost1.add(v, c);
            balance.add(v, -1.0);
        }
        lp.add_constraint(balance, ComparisonOp::Eq, 0.0);
        let w = space.weight(z);
        match objective {
            Objective::Excess(cap) => {
                // s_z >= μ_z - C m_z
                let s = lp.add_var(primary, (0.0, f64::INFINITY));
                goal.add(s, 1.0);
                let mut e = LinearExpr::empty();
                e.add(s, 1.0);
                for &v in &ins {
                    e.add(v, -1.0);
                }
                lp.add_constraint(e, ComparisonOp::Ge, -cap * w);
            }
            Objective::SupDensity => {
                // μ_z <= C m_z
                let mut e = LinearExpr::empty();
                e.add(cap_var.expect("cap variable"), w);
                for &v in &ins {
                    e.add(v, -1.0);
                }
                lp.add_constraint(e, ComparisonOp::Ge, 0.0);
            }
        }
        inflow.push(ins);
    }
    for x in mu0.support() {
        lp.add_constraint(
            std::mem::replace(&mut row0[x], LinearExpr::empty()),
            ComparisonOp::Eq,
            mu0.mass(x),
        );
    }
    for y in mu1.support() {
        lp.add_constraint(
            std::mem::replace(&mut col1[y], LinearExpr::empty()),
            ComparisonOp::Eq,
            mu1.mass(y),
        );
    }
    lp.add_constraint(cost0, ComparisonOp::Le, cells.budget);
    lp.add_constraint(cost1, ComparisonOp::Le, cells.budget);
    if let Some(limit) = refine {
        lp.add_constraint(goal, ComparisonOp::Le, limit);
    }

    let solution = match lp.solve() {
        Ok(outcome) => outcome
            .into_solution()
            .map_err(|_| Error::Lp("midpoint LP was interrupted".into()))?,
        Err(microlp::Error::Infeasible) => return Err(Error::NoIntermediate { t: 0.5 }),
        Err(e) => return Err(Error::Lp(e.to_string())),
    };
    let mut mass = vec![0.0; n];
    for (k, &z) in cells.zs.iter().enumerate() {
        mass[z] = inflow[k].iter().map(|&v| solution.var_value(v)).sum::<f64>().max(0.0);
    }
    Ok((solution.objective(), mass))
}

/// Mixes `(e_t)_♯((1 - f)π)` with `c μ`, `c = ∫ f dπ`, after checking that `μ`
/// is a t-intermediate measure of the endpoints of `fπ / c`. The output is
/// checked to lie in `I_t^q` of the plan's endpoints.
pub fn redistribute(
    space: &FiniteMetricMeasureSpace,
    plan: &TestPlan,
    f: &[f64],
    mu: &ProbMeasure,
    t: f64,
) -> Result<ProbMeasure> {
    if f.len() != plan.len() {
        return Err(Error::Shape(format!(
            "{} curve weights for {} curves",
            f.len(),
            plan.len()
        )));
    }
    if let Some(k) = f.iter().position(|v| !(0.0..=1.0).contains(v)) {
        return Err(param("f", format!("entry {k} = {} is outside [0, 1]", f[k])));
    }
    let j = grid_index(t, plan.steps())?;
    let n = space.n();
    let c: f64 = plan.probs().iter().zip(f).map(|(p, fk)| p * fk).sum();
    if !(c > 0.0 && c < 1.0) {
        return Err(param("f", format!("selected mass c = {c} is not in (0, 1)")));
    }
    let mut sel0 = vec![0.0; n];
    let mut sel1 = vec![0.0; n];
    let mut out = vec![0.0; n];
    for ((curve, p), &fk) in plan.iter().zip(f) {
        sel0[curve.start()] += fk * p;
        sel1[curve.end()] += fk * p;
        out[curve.at(j)] += (1.0 - fk) * p;
    }
    let sel0 = ProbMeasure::normalize(sel0)?;
    let sel1 = ProbMeasure::normalize(sel1)?;
    let pre = intermediate_feasibility(space, plan.q(), &sel0, &sel1, mu, t)?;
    if !pre.member {
        return Err(Error::Precondition(format!(
            "replacement measure is not {t}-intermediate for the selected curves (residuals {:e}, {:e})",
            pre.residual0, pre.residual1
        )));
    }
    for (o, m) in out.iter_mut().zip(mu.masses()) {
        *o += c * m;
    }
    let out = ProbMeasure::normalize(out)?;
    let post = intermediate_feasibility(
        space,
        plan.q(),
        &plan.marginal(n, 0)?,
        &plan.marginal(n, plan.steps())?,
        &out,
        t,
    )?;
    if !post.member {
        return Err(Error::Precondition(format!(
            "mixed measure left I_t (residuals {:e}, {:e}); is the plan optimal?",
            post.residual0, post.residual1
        )));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::curves::DiscreteCurve;
    use crate::generators;

    fn m(v: &[f64]) -> ProbMeasure {
        ProbMeasure::new(v.to_vec()).unwrap()
    }

    #[test]
    fn identical_endpoints() {
        let s = generators::line(3, 1.0, 1.0);
        let mu = m(&[0.6, 0.4, 0.0]);
        let r = midpoint_excess_min(&s, 2.0, &mu, &mu, 0.5).unwrap();
        assert_eq!(r.mu, mu);
        assert!((r.excess - 0.1).abs() < 1e-15);
        let f = intermediate_feasibility(&s, 2.0, &mu, &mu, &mu, 0.5).unwrap();
        assert!(f.member && f.residual0 == 0.0 && f.residual1 == 0.0);
    }

    #[test]
    fn forced_midpoint() {
        let s = generators::line(3, 1.0, 1.0);
        let (a, b) = (ProbMeasure::dirac(3, 0), ProbMeasure::dirac(3, 2));
        let r = midpoint_excess_min(&s, 2.0, &a, &b, 10.0).unwrap();
        assert!(r.mu.sup_distance(&ProbMeasure::dirac(3, 1)) < 1e-12);
        assert!(r.excess < 1e-12);
        assert!(intermediate_feasibility(&s, 2.0, &a, &b, &r.mu, 0.5).unwrap().member);
        let non = intermediate_feasibility(&s, 2.0, &a, &b, &a, 0.5).unwrap();
        assert!(!non.member);
        assert!((non.residual0 - 1.0).abs() < 1e-12);
    }

    #[test]
    fn odd_distance_has_no_midpoint() {
        let s = generators::line(2, 1.0, 1.0);
        let (a, b) = (ProbMeasure::dirac(2, 0), ProbMeasure::dirac(2, 1));
        assert_eq!(
            midpoint_excess_min(&s, 2.0, &a, &b, 1.0),
            Err(Error::NoIntermediate { t: 0.5 })
        );
    }

    #[test]
    fn cycle_spreads_over_both_midpoints() {
        // δ0 -> δ2 on a 4-cycle: midpoints 1 and 3, so the cap 1/2 is reachable
        let s = generators::cycle(4, 1.0, 1.0);
        let (a, b) = (ProbMeasure::dirac(4, 0), ProbMeasure::dirac(4, 2));
        let r = midpoint_excess_min(&s, 2.0, &a, &b, 0.5).unwrap();
        assert!(r.excess < 1e-9, "{r:?}");
        assert!((r.mu.mass(1) - 0.5).abs() < 1e-9 && (r.mu.mass(3) - 0.5).abs() < 1e-9);
        let tight = midpoint_excess_min(&s, 2.0, &a, &b, 0.3).unwrap();
        assert!((tight.excess - 0.4).abs() < 1e-9);
        let (c, _) = min_midpoint_density(&s, 2.0, &a, &b).unwrap();
        assert!((c - 0.5).abs() < 1e-9);
    }

    #[test]
    fn redistribution() {
        let s = generators::cycle(4, 1.0, 1.0);
        let p = TestPlan::new(
            vec![
                DiscreteCurve::new(vec![0, 1, 2]).unwrap(),
                DiscreteCurve::new(vec![0, 3, 2]).unwrap(),
            ],
            vec![0.5, 0.5],
            2.0,
        )
        .unwrap();
        let own = p.marginal(4, 1).unwrap();
        let out = redistribute(&s, &p, &[0.5, 0.5], &own, 0.5).unwrap();
        assert!(out.sup_distance(&own) < 1e-15);
        // move the first curve's midpoint mass to the alternative midpoint 3
        let out = redistribute(&s, &p, &[1.0, 0.0], &ProbMeasure::dirac(4, 3), 0.5).unwrap();
        assert!(out.sup_distance(&ProbMeasure::dirac(4, 3)) < 1e-15);
        // a non-midpoint is rejected
        assert!(matches!(
            redistribute(&s, &p, &[1.0, 0.0], &ProbMeasure::dirac(4, 0), 0.5),
            Err(Error::Precondition(_))
        ));
        assert!(redistribute(&s, &p, &[0.0, 0.0], &own, 0.5).is_err());
        assert!(redistribute(&s, &p, &[1.0, 1.0], &own, 0.5).is_err());
    }

    #[test]
    fn single_geodesic_redistribution() {
        let s = generators::line(3, 1.0, 1.0);
        let p = TestPlan::single(DiscreteCurve::new(vec![0, 1, 2]).unwrap(), 2.0).unwrap();
        let out = redistribute(&s, &p, &[0.5], &ProbMeasure::dirac(3, 1), 0.5).unwrap();
        assert_eq!(out, p.marginal(3, 1).unwrap());
    }
}
