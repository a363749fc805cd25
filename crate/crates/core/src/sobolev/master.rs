//! Geodesic plan families and master test plans built from them.

use std::collections::HashSet;

use serde::Serialize;

use super::{curve_lhs, curve_rhs, holds, plan_constraint, GradientCandidate};
use crate::curves::{compression, mix_plans, plan_kinetic_energy, refine_plan, restrict_plan, reverse_plan, TestPlan};
use crate::error::{check_exponent, param, Error, Result};
use crate::interpolation::optgeo_plan;
use crate::space::{FiniteMetricMeasureSpace, RealFunction};
use crate::transport::ProbMeasure;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PlanMember {
    pub plan: TestPlan,
    /// How the plan was produced.
    pub tag: String,
    pub comp: f64,
    pub ke: f64,
}

/// A nonempty, ordered list of test plans on one space.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PlanFamily {
    members: Vec<PlanMember>,
}

impl PlanFamily {
    pub fn from_plans(space: &FiniteMetricMeasureSpace, plans: Vec<(TestPlan, String)>) -> Result<Self> {
        if plans.is_empty() {
            return Err(param("family", "must contain at least one plan"));
        }
        let members = plans
            .into_iter()
            .map(|(plan, tag)| member(space, plan, tag))
            .collect::<Result<_>>()?;
        Ok(PlanFamily { members })
    }

    pub fn members(&self) -> &[PlanMember] {
        &self.members
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }
}

fn member(space: &FiniteMetricMeasureSpace, plan: TestPlan, tag: String) -> Result<PlanMember> {
    Ok(PlanMember {
        comp: compression(space, &plan)?,
        ke: plan_kinetic_energy(&plan, space)?,
        plan,
        tag,
    })
}

fn gcd(a: usize, b: usize) -> usize {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

fn plan_key(plan: &TestPlan) -> Vec<(Vec<usize>, u64)> {
    plan.iter().map(|(c, p)| (c.nodes().to_vec(), p.to_bits())).collect()
}

/// Optimal geodesic plans between atom pairs `(δ_x, δ_y)`, `x < y`, followed
/// by pairs of normalised restrictions of the closed balls of radius equal to
/// the smallest positive distance, taking the first `pair_budget` of them.
/// Each base plan is closed under time reversal and the restrictions to
/// `[(i-1)/k, i/k]` for `2 <= k <= depth`. The grid has the smallest multiple
/// of `lcm(1..=depth)` steps that is at least `n - 1`. Duplicates are dropped.
pub fn build_geod_family(
    space: &FiniteMetricMeasureSpace,
    q: f64,
    depth: usize,
    pair_budget: usize,
) -> Result<PlanFamily> {
    check_exponent("q", q)?;
    if depth == 0 {
        return Err(param("depth", "must be at least 1"));
    }
    if pair_budget == 0 {
        return Err(param("pair_budget", "must be at least 1"));
    }
    let n = space.n();
    if n < 2 {
        return Err(param("space", "needs at least two points to move between"));
    }
    let l = (1..=depth).fold(1, |acc, k| acc / gcd(acc, k) * k);
    let steps = (n - 1).div_ceil(l).max(1) * l;

    let r = space.min_positive_distance().unwrap_or(0.0);
    let atoms = (0..n).flat_map(|x| (x + 1..n).map(move |y| (x, y, false)));
    let patches = (0..n).flat_map(|x| (x + 1..n).map(move |y| (x, y, true)));
    let mut seen = HashSet::new();
    let mut plans: Vec<(TestPlan, String)> = Vec::new();
    let mut push = |plan: TestPlan, tag: String, plans: &mut Vec<(TestPlan, String)>| {
        if seen.insert(plan_key(&plan)) {
            plans.push((plan, tag));
        }
    };
    for (x, y, patch) in atoms.chain(patches).take(pair_budget) {
        let (a, b, name) = if patch {
            let ball = |c| ProbMeasure::normalized_restriction(space, &space.ball(c, r).collect::<Vec<_>>());
            (ball(x)?, ball(y)?, format!("patch({x},{y})"))
        } else {
            (
                ProbMeasure::dirac(n, x),
                ProbMeasure::dirac(n, y),
                format!("atom({x},{y})"),
            )
        };
        let base = optgeo_plan(space, q, &a, &b, steps)?.plan;
        for (plan, dir) in [(base.clone(), ""), (reverse_plan(&base), " reversed")] {
            push(plan.clone(), format!("{name}{dir}"), &mut plans);
            for k in 2..=depth {
                for i in 1..=k {
                    let s = (i - 1) as f64 / k as f64;
                    let t = i as f64 / k as f64;
                    push(
                        restrict_plan(&plan, s, t)?,
                        format!("{name}{dir} restricted {i}/{k}"),
                        &mut plans,
                    );
                }
            }
        }
    }
    PlanFamily::from_plans(space, plans)
}

/// `Σ_k π_k / (2^k max{Comp(π_k), Ke_q(π_k), 1})`, normalised, with every
/// plan refined to the least common grid by holding each node until the last
/// substep. Holding leaves per-curve integrals and compression unchanged.
pub fn build_master_plan(family: &PlanFamily, q: f64) -> Result<TestPlan> {
    check_exponent("q", q)?;
    if family.is_empty() {
        return Err(param("family", "must contain at least one plan"));
    }
    let steps = family
        .members
        .iter()
        .map(|m| m.plan.steps())
        .fold(1usize, |acc, s| acc / gcd(acc, s) * s);
    let raw: Vec<f64> = family
        .members
        .iter()
        .enumerate()
        .map(|(k, m)| 0.5f64.powi(k as i32 + 1) / m.comp.max(m.ke).max(1.0))
        .collect();
    let total: f64 = raw.iter().sum();
    if !(total > 0.0) {
        return Err(Error::ZeroMass);
    }
    let parts = family
        .members
        .iter()
        .zip(&raw)
        .map(|(m, w)| Ok((w / total, refine_plan(&m.plan, steps / m.plan.steps())?)))
        .collect::<Result<Vec<_>>>()?;
    let mixed = mix_plans(&parts)?;
    TestPlan::new(mixed.curves().to_vec(), mixed.probs().to_vec(), q)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CurveCheck {
    pub curve: usize,
    pub lhs: f64,
    pub rhs: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FamilyMemberCheck {
    pub tag: String,
    /// The inequality integrated against the member plan.
    pub integrated_pass: bool,
    /// The inequality on every curve the member charges.
    pub per_curve_pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MasterReport {
    pub curves_checked: usize,
    pub failures: Vec<CurveCheck>,
    pub master_pass: bool,
    pub members: Vec<FamilyMemberCheck>,
    /// `master_pass` holds iff every member passes curve by curve, and a
    /// master pass implies every integrated pass.
    pub consistent: bool,
}

/// Checks the per-curve inequality on every curve the master plan charges and
/// compares with the family members.
pub fn master_plan_check(
    space: &FiniteMetricMeasureSpace,
    f: &RealFunction,
    g: &GradientCandidate,
    master: &TestPlan,
    family: &PlanFamily,
) -> Result<MasterReport> {
    f.check_len(space.n())?;
    super::check_gradient_len(space, g)?;
    master.check_space(space)?;
    let gv = g.values();
    let mut failures = Vec::new();
    let mut checked = 0;
    for (k, (c, p)) in master.iter().enumerate() {
        if p <= 0.0 {
            continue;
        }
        checked += 1;
        let (lhs, rhs) = (curve_lhs(f, c), curve_rhs(space, gv, c));
        if !holds(lhs, rhs) {
            failures.push(CurveCheck { curve: k, lhs, rhs });
        }
    }
    let master_pass = failures.is_empty();
    let members: Vec<FamilyMemberCheck> = family
        .members
        .iter()
        .map(|m| {
            let (a, b) = plan_constraint(space, f, &m.plan);
            let rhs: f64 = a.iter().zip(gv).map(|(x, y)| x * y).sum();
            let per_curve_pass = m
                .plan
                .iter()
                .filter(|(_, p)| *p > 0.0)
                .all(|(c, _)| holds(curve_lhs(f, c), curve_rhs(space, gv, c)));
            FamilyMemberCheck {
                tag: m.tag.clone(),
                integrated_pass: holds(b, rhs),
                per_curve_pass,
            }
        })
        .collect();
    let all_curves = members.iter().all(|m| m.per_curve_pass);
    let all_integrated = members.iter().all(|m| m.integrated_pass);
    let consistent = master_pass == all_curves && (!master_pass || all_integrated);
    Ok(MasterReport {
        curves_checked: checked,
        failures,
        master_pass,
        members,
        consistent,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::curves::{shortest_path_curve, DiscreteCurve};
    use crate::generators;

    #[test]
    fn family_counts() {
        let two = generators::line(2, 1.0, 1.0);
        let fam = build_geod_family(&two, 2.0, 1, 1).unwrap();
        assert_eq!(fam.len(), 2);
        assert_eq!(fam.members()[0].tag, "atom(0,1)");
        assert_eq!(fam.members()[1].tag, "atom(0,1) reversed");

        let five = generators::line(5, 1.0, 1.0);
        let fam = build_geod_family(&five, 2.0, 1, 10).unwrap();
        let forward = fam.members().iter().filter(|m| !m.tag.contains("reversed")).count();
        assert_eq!(forward, 10);
        assert_eq!(fam.len(), 20);
    }

    #[test]
    fn restriction_energy_scales() {
        let s = generators::line(5, 1.0, 1.0);
        let q = 3.0;
        let fam = build_geod_family(&s, q, 2, 10).unwrap();
        let parent = fam.members().iter().find(|m| m.tag == "atom(0,4)").unwrap();
        let child = fam
            .members()
            .iter()
            .find(|m| m.tag == "atom(0,4) restricted 1/2")
            .unwrap();
        assert!((child.ke - parent.ke * 2f64.powf(-q)).abs() < 1e-12);
    }

    #[test]
    fn master_weights() {
        let s = FiniteMetricMeasureSpace::from_matrix(
            vec![vec![0.0, 1.0, 1.0], vec![1.0, 0.0, 1.0], vec![1.0, 1.0, 0.0]],
            vec![0.5, 0.25, 1.0],
        )
        .unwrap();
        // Comp 2 (mass 1 at a weight-1/2 point) and 4; Ke 1 for unit jumps with T = 1
        let p1 = TestPlan::single(DiscreteCurve::new(vec![0, 2]).unwrap(), 2.0).unwrap();
        let p2 = TestPlan::single(DiscreteCurve::new(vec![1, 2]).unwrap(), 2.0).unwrap();
        let fam = PlanFamily::from_plans(&s, vec![(p1, "a".into()), (p2, "b".into())]).unwrap();
        assert_eq!((fam.members()[0].comp, fam.members()[1].comp), (2.0, 4.0));
        let master = build_master_plan(&fam, 2.0).unwrap();
        let (wa, wb) = (1.0 / 4.0, 1.0 / 16.0);
        let expected = wa / (wa + wb);
        let k = master.curves().iter().position(|c| c.start() == 0).unwrap();
        assert!((master.probs()[k] - expected).abs() < 1e-15);

        let single = PlanFamily::from_plans(&s, vec![(fam.members()[0].plan.clone(), "a".into())]).unwrap();
        assert_eq!(build_master_plan(&single, 2.0).unwrap(), fam.members()[0].plan);
        let twice = PlanFamily::from_plans(
            &s,
            vec![
                (fam.members()[0].plan.clone(), "a".into()),
                (fam.members()[0].plan.clone(), "a".into()),
            ],
        )
        .unwrap();
        assert_eq!(build_master_plan(&twice, 2.0).unwrap(), fam.members()[0].plan);
    }

    #[test]
    fn master_check_examples() {
        let s = generators::line(5, 1.0, 1.0);
        let fam = build_geod_family(&s, 2.0, 2, 10).unwrap();
        let master = build_master_plan(&fam, 2.0).unwrap();
        let x = RealFunction::from_fn(5, |i| i as f64);
        let r = master_plan_check(
            &s,
            &RealFunction::constant(5, 1.0),
            &GradientCandidate::constant(5, 0.0, 2.0).unwrap(),
            &master,
            &fam,
        )
        .unwrap();
        assert!(r.master_pass && r.consistent);

        let one = GradientCandidate::constant(5, 1.0, 2.0).unwrap();
        let r = master_plan_check(&s, &x, &one, &master, &fam).unwrap();
        assert!(r.master_pass && r.consistent);
        for (c, _) in master.iter() {
            assert_eq!(curve_lhs(&x, c), curve_rhs(&s, one.values(), c));
        }

        let low = GradientCandidate::constant(5, 0.9, 2.0).unwrap();
        let r = master_plan_check(&s, &x, &low, &master, &fam).unwrap();
        assert!(!r.master_pass && r.consistent);
        assert!(r.members.iter().any(|m| !m.integrated_pass));
    }

    #[test]
    fn refined_curves_keep_their_integrals() {
        let s = generators::line(4, 1.0, 1.0);
        let c = shortest_path_curve(&s, 0, 3, 3).unwrap();
        let plan = TestPlan::single(c.clone(), 2.0).unwrap();
        let fine = refine_plan(&plan, 4).unwrap();
        let g = [0.3, 1.0, 2.0, 5.0];
        assert_eq!(curve_rhs(&s, &g, &c), curve_rhs(&s, &g, &fine.curves()[0]));
    }
}
