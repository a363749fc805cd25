//! Weak upper gradients certified by test plans.
//!
//! Curve integrals sample `G` at the left node of each step, so a step from
//! `γ_j` to `γ_{j+1}` contributes `G(γ_j) d(γ_j, γ_{j+1})`.

mod clarkson;
mod master;
mod solver;

use serde::Serialize;

pub use clarkson::{clarkson_check, pointwise_euclidean, ClarksonCase, ClarksonReport, PointwiseNorms};
pub use master::{
    build_geod_family, build_master_plan, master_plan_check, CurveCheck, FamilyMemberCheck, MasterReport, PlanFamily,
    PlanMember,
};

use crate::curves::{compression, kinetic_energy, DiscreteCurve, TestPlan};
use crate::error::{check_exponent, param, Error, Result};
use crate::space::{FiniteMetricMeasureSpace, RealFunction, INEQ_SLACK};

/// A nonnegative candidate `G` for the `p`-weak upper gradient.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GradientCandidate {
    values: Vec<f64>,
    p: f64,
}

impl GradientCandidate {
    pub fn new(values: Vec<f64>, p: f64) -> Result<Self> {
        check_exponent("p", p)?;
        if let Some(i) = values.iter().position(|v| !(v.is_finite() && *v >= 0.0)) {
            return Err(param(
                "G",
                format!("entry {i} is {}, need finite and nonnegative", values[i]),
            ));
        }
        Ok(GradientCandidate { values, p })
    }

    pub fn constant(n: usize, c: f64, p: f64) -> Result<Self> {
        Self::new(vec![c; n], p)
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn p(&self) -> f64 {
        self.p
    }

    /// `‖G‖_{L^p(m)}`.
    pub fn norm(&self, space: &FiniteMetricMeasureSpace) -> f64 {
        lp_norm(space.weights(), &self.values, self.p)
    }
}

fn lp_norm(w: &[f64], v: &[f64], p: f64) -> f64 {
    v.iter()
        .zip(w)
        .map(|(x, m)| m * x.abs().powf(p))
        .sum::<f64>()
        .powf(1.0 / p)
}

/// `|f(γ_T) - f(γ_0)|`.
pub fn curve_lhs(f: &RealFunction, c: &DiscreteCurve) -> f64 {
    (f[c.end()] - f[c.start()]).abs()
}

/// `Σ_j G(γ_j) d(γ_j, γ_{j+1})`.
pub fn curve_rhs(space: &FiniteMetricMeasureSpace, g: &[f64], c: &DiscreteCurve) -> f64 {
    c.nodes().windows(2).map(|w| g[w[0]] * space.d(w[0], w[1])).sum()
}

/// Per-point coefficients of `G` in a plan's right-hand side, and its left side.
pub(crate) fn plan_constraint(space: &FiniteMetricMeasureSpace, f: &RealFunction, plan: &TestPlan) -> (Vec<f64>, f64) {
    let mut a = vec![0.0; space.n()];
    let mut b = 0.0;
    for (c, p) in plan.iter() {
        if p <= 0.0 {
            continue;
        }
        b += p * curve_lhs(f, c);
        for w in c.nodes().windows(2) {
            a[w[0]] += p * space.d(w[0], w[1]);
        }
    }
    (a, b)
}

fn holds(lhs: f64, rhs: f64) -> bool {
    lhs <= rhs + INEQ_SLACK * rhs.abs().max(1.0)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct UpperGradientReport {
    /// `∫ |f(γ_1) - f(γ_0)| dπ`.
    pub lhs: f64,
    /// `∬ G(γ_t) |γ̇_t| dt dπ`.
    pub rhs: f64,
    pub margin: f64,
    pub holds: bool,
    /// `Comp(π)^{1/p} ‖G‖_p Ke_{p'}(π)^{1/p'}` with `p'` conjugate to `p`; always `>= rhs`.
    pub holder_split: f64,
    /// `Comp(π) ‖G‖_p Ke_q(π)^{1/q}` with the plan's own exponent.
    pub holder_plan: f64,
}

pub fn upper_gradient_check(
    space: &FiniteMetricMeasureSpace,
    f: &RealFunction,
    g: &GradientCandidate,
    plan: &TestPlan,
) -> Result<UpperGradientReport> {
    f.check_len(space.n())?;
    check_gradient_len(space, g)?;
    plan.check_space(space)?;
    let (a, lhs) = plan_constraint(space, f, plan);
    let rhs: f64 = a.iter().zip(&g.values).map(|(x, y)| x * y).sum();
    let comp = compression(space, plan)?;
    let norm = g.norm(space);
    let conj = g.p / (g.p - 1.0);
    let energy = |q: f64| -> Result<f64> {
        let mut total = 0.0;
        for (c, p) in plan.iter() {
            total += p * kinetic_energy(space, c, q)?;
        }
        Ok(total)
    };
    Ok(UpperGradientReport {
        lhs,
        rhs,
        margin: rhs - lhs,
        holds: holds(lhs, rhs),
        holder_split: comp.powf(1.0 / g.p) * norm * energy(conj)?.powf(1.0 / conj),
        holder_plan: comp * norm * energy(plan.q())?.powf(1.0 / plan.q()),
    })
}

fn check_gradient_len(space: &FiniteMetricMeasureSpace, g: &GradientCandidate) -> Result<()> {
    if g.values.len() != space.n() {
        return Err(Error::Shape(format!(
            "gradient has {} values, space has {} points",
            g.values.len(),
            space.n()
        )));
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MinimalGradient {
    pub gradient: GradientCandidate,
    /// `‖G‖_p^p`.
    pub objective: f64,
    /// Largest relative constraint violation before the final feasibility rescaling.
    pub max_violation: f64,
    /// Duality gap at termination.
    pub gap: f64,
    pub sweeps: usize,
}

/// Minimises `‖G‖_p^p` over all `G >= 0` satisfying the upper-gradient
/// inequality for every plan of the family.
pub fn minimal_weak_upper_gradient(
    space: &FiniteMetricMeasureSpace,
    f: &RealFunction,
    p: f64,
    family: &PlanFamily,
) -> Result<MinimalGradient> {
    check_exponent("p", p)?;
    f.check_len(space.n())?;
    if family.is_empty() {
        return Err(param("family", "must contain at least one plan"));
    }
    let constraints: Vec<solver::Constraint> = family
        .members()
        .iter()
        .map(|m| {
            m.plan.check_space(space)?;
            let (a, b) = plan_constraint(space, f, &m.plan);
            Ok(solver::Constraint { a, b })
        })
        .collect::<Result<_>>()?;
    let sol = solver::solve(&constraints, space.weights(), p)?;
    Ok(MinimalGradient {
        gradient: GradientCandidate::new(sol.g, p)?,
        objective: sol.objective,
        max_violation: sol.max_violation,
        gap: sol.gap,
        sweeps: sol.sweeps,
    })
}

/// Largest relative violation `(b - a·G)^+ / max(b, 1)` over the family.
pub fn family_violation(space: &FiniteMetricMeasureSpace, f: &RealFunction, g: &[f64], family: &PlanFamily) -> f64 {
    family
        .members()
        .iter()
        .map(|m| {
            let (a, b) = plan_constraint(space, f, &m.plan);
            let ag: f64 = a.iter().zip(g).map(|(x, y)| x * y).sum();
            (b - ag).max(0.0) / b.max(1.0)
        })
        .fold(0.0, f64::max)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PComparison {
    pub p1: f64,
    pub p2: f64,
    pub g1: Vec<f64>,
    pub g2: Vec<f64>,
    /// `‖G_{p1}‖_{p1}` and `‖G_{p2}‖_{p2}`.
    pub norm1: f64,
    pub norm2: f64,
    /// `‖min(G_{p2} - G_{p1}, 0)‖_∞`.
    pub negative_part: f64,
    /// `‖G_{p2} - G_{p1}‖_∞`.
    pub max_abs_diff: f64,
    /// `G_{p2}` satisfies the family constraints (so is admissible for `p1`).
    pub g2_feasible: bool,
    /// `‖G_{p1}‖_{p1} <= ‖G_{p2}‖_{p1}` up to `1e-6` relative.
    pub objective_order: bool,
    /// `max_abs_diff <= tol`.
    pub agree: bool,
}

pub fn gradient_p_comparison(
    space: &FiniteMetricMeasureSpace,
    f: &RealFunction,
    p1: f64,
    p2: f64,
    family: &PlanFamily,
    tol: f64,
) -> Result<PComparison> {
    if !(p1 < p2) {
        return Err(param("p1", format!("must be below p2, got {p1} and {p2}")));
    }
    let g1 = minimal_weak_upper_gradient(space, f, p1, family)?.gradient.values;
    let g2 = minimal_weak_upper_gradient(space, f, p2, family)?.gradient.values;
    let w = space.weights();
    let norm1 = lp_norm(w, &g1, p1);
    let norm2 = lp_norm(w, &g2, p2);
    let negative_part = g1.iter().zip(&g2).map(|(a, b)| (a - b).max(0.0)).fold(0.0, f64::max);
    let max_abs_diff = g1.iter().zip(&g2).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    let g2_feasible = family_violation(space, f, &g2, family) <= 1e-7;
    let objective_order = norm1 <= lp_norm(w, &g2, p1) * (1.0 + 1e-6);
    Ok(PComparison {
        p1,
        p2,
        norm1,
        norm2,
        negative_part,
        max_abs_diff,
        g2_feasible,
        objective_order,
        agree: max_abs_diff <= tol,
        g1,
        g2,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LeibnizReport {
    pub df: Vec<f64>,
    pub dg: Vec<f64>,
    pub dfg: Vec<f64>,
    /// `|f| |Dg| + |g| |Df| - |D(fg)|` per point.
    pub margins: Vec<f64>,
    pub worst_margin: f64,
    /// Points whose margin is below `-1e-6`.
    pub flagged: Vec<usize>,
}

pub fn leibniz_check(
    space: &FiniteMetricMeasureSpace,
    f: &RealFunction,
    g: &RealFunction,
    p: f64,
    family: &PlanFamily,
) -> Result<LeibnizReport> {
    g.check_len(space.n())?;
    let df = minimal_weak_upper_gradient(space, f, p, family)?.gradient.values;
    let dg = minimal_weak_upper_gradient(space, g, p, family)?.gradient.values;
    let dfg = minimal_weak_upper_gradient(space, &f.product(g), p, family)?
        .gradient
        .values;
    let margins: Vec<f64> = (0..space.n())
        .map(|i| f[i].abs() * dg[i] + g[i].abs() * df[i] - dfg[i])
        .collect();
    let worst_margin = margins.iter().copied().fold(f64::INFINITY, f64::min);
    let flagged = (0..space.n()).filter(|&i| margins[i] < -1e-6).collect();
    Ok(LeibnizReport {
        df,
        dg,
        dfg,
        margins,
        worst_margin,
        flagged,
    })
}
