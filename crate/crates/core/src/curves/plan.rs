use std::collections::{BTreeMap, HashMap};

use serde::Serialize;

use super::{grid_index, kinetic_energy, restrict_curve, DiscreteCurve};
use crate::error::{check_exponent, param, Error, Result};
use crate::space::FiniteMetricMeasureSpace;
use crate::transport::ProbMeasure;

/// Gluing tolerance on junction marginals.
const GLUE_TOL: f64 = 1e-10;

/// A finite probability measure on curves sharing one time grid.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TestPlan {
    curves: Vec<DiscreteCurve>,
    probs: Vec<f64>,
    q: f64,
    steps: usize,
}

impl TestPlan {
    /// Probabilities within `1e-9` of summing to one are renormalised.
    pub fn new(curves: Vec<DiscreteCurve>, probs: Vec<f64>, q: f64) -> Result<Self> {
        check_exponent("q", q)?;
        if curves.is_empty() {
            return Err(param("curves", "a plan needs at least one curve"));
        }
        if curves.len() != probs.len() {
            return Err(Error::Shape(format!(
                "{} curves but {} probabilities",
                curves.len(),
                probs.len()
            )));
        }
        let steps = curves[0].steps();
        if let Some(k) = curves.iter().position(|c| c.steps() != steps) {
            return Err(Error::Shape(format!(
                "curve {k} has {} steps, curve 0 has {steps}",
                curves[k].steps()
            )));
        }
        if let Some(k) = probs.iter().position(|p| !p.is_finite() || *p < 0.0) {
            return Err(param("probs", format!("entry {k} is {}", probs[k])));
        }
        let total: f64 = probs.iter().sum();
        if (total - 1.0).abs() > 1e-9 {
            return Err(param("probs", format!("sum to {total}, not 1")));
        }
        let probs = probs.into_iter().map(|p| p / total).collect();
        Ok(TestPlan {
            curves,
            probs,
            q,
            steps,
        })
    }

    pub fn single(curve: DiscreteCurve, q: f64) -> Result<Self> {
        Self::new(vec![curve], vec![1.0], q)
    }

    pub fn curves(&self) -> &[DiscreteCurve] {
        &self.curves
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn q(&self) -> f64 {
        self.q
    }

    pub fn steps(&self) -> usize {
        self.steps
    }

    pub fn len(&self) -> usize {
        self.curves.len()
    }

    pub fn is_empty(&self) -> bool {
        self.curves.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&DiscreteCurve, f64)> {
        self.curves.iter().zip(self.probs.iter().copied())
    }

    pub fn check_space(&self, space: &FiniteMetricMeasureSpace) -> Result<()> {
        self.curves.iter().try_for_each(|c| c.check_space(space))
    }

    /// Merges identical curves and drops zero-probability ones, keeping
    /// first-occurrence order.
    pub fn merged(&self) -> TestPlan {
        let mut index: HashMap<&DiscreteCurve, usize> = HashMap::new();
        let mut curves = Vec::new();
        let mut probs: Vec<f64> = Vec::new();
        for (c, p) in self.iter() {
            if p <= 0.0 {
                continue;
            }
            match index.get(c) {
                Some(&k) => probs[k] += p,
                None => {
                    index.insert(c, curves.len());
                    curves.push(c.clone());
                    probs.push(p);
                }
            }
        }
        TestPlan {
            curves,
            probs,
            q: self.q,
            steps: self.steps,
        }
    }

    /// `(e_{t_j})_♯π` on a space with `n` points.
    pub fn marginal(&self, n: usize, j: usize) -> Result<ProbMeasure> {
        if j > self.steps {
            return Err(Error::IndexOutOfRange {
                index: j,
                n: self.steps + 1,
            });
        }
        let mut mass = vec![0.0; n];
        for (c, p) in self.iter() {
            let x = c.at(j);
            if x >= n {
                return Err(Error::IndexOutOfRange { index: x, n });
            }
            mass[x] += p;
        }
        ProbMeasure::normalize(mass)
    }

    /// `(e_t)_♯π` for a grid-aligned time `t`.
    pub fn marginal_at(&self, n: usize, t: f64) -> Result<ProbMeasure> {
        self.marginal(n, grid_index(t, self.steps)?)
    }

    fn marginal_map(&self, j: usize) -> BTreeMap<usize, f64> {
        let mut m = BTreeMap::new();
        for (c, p) in self.iter() {
            if p > 0.0 {
                *m.entry(c.at(j)).or_insert(0.0) += p;
            }
        }
        m
    }
}

/// `Comp(π)`: the largest ratio `(e_{t_j})_♯π(i) / m_i` over grid times and points.
pub fn compression(space: &FiniteMetricMeasureSpace, plan: &TestPlan) -> Result<f64> {
    plan.check_space(space)?;
    let mut worst: f64 = 0.0;
    for j in 0..=plan.steps {
        for (x, m) in plan.marginal_map(j) {
            worst = worst.max(m / space.weight(x));
        }
    }
    Ok(worst)
}

/// `∫ Ke_q dπ`.
pub fn plan_kinetic_energy(plan: &TestPlan, space: &FiniteMetricMeasureSpace) -> Result<f64> {
    plan.check_space(space)?;
    let mut total = 0.0;
    for (c, p) in plan.iter() {
        if p > 0.0 {
            total += p * kinetic_energy(space, c, plan.q)?;
        }
    }
    Ok(total)
}

/// `π|_Γ / π(Γ)` for a set `Γ` of curve indices.
pub fn rescale_plan(plan: &TestPlan, subset: &[usize]) -> Result<TestPlan> {
    let mut chosen = vec![false; plan.len()];
    for &k in subset {
        if k >= plan.len() {
            return Err(Error::IndexOutOfRange {
                index: k,
                n: plan.len(),
            });
        }
        chosen[k] = true;
    }
    let mass: f64 = (0..plan.len()).filter(|&k| chosen[k]).map(|k| plan.probs[k]).sum();
    if mass <= 0.0 {
        return Err(Error::ZeroMass);
    }
    let (curves, probs) = (0..plan.len())
        .filter(|&k| chosen[k])
        .map(|k| (plan.curves[k].clone(), plan.probs[k] / mass))
        .unzip();
    TestPlan::new(curves, probs, plan.q)
}

/// `(Restr_s^t)_♯π`.
pub fn restrict_plan(plan: &TestPlan, s: f64, t: f64) -> Result<TestPlan> {
    let curves = plan
        .curves
        .iter()
        .map(|c| restrict_curve(c, s, t))
        .collect::<Result<Vec<_>>>()?;
    TestPlan::new(curves, plan.probs.clone(), plan.q)
}

/// Time reversal of every curve.
pub fn reverse_plan(plan: &TestPlan) -> TestPlan {
    TestPlan {
        curves: plan.curves.iter().map(DiscreteCurve::reversed).collect(),
        probs: plan.probs.clone(),
        q: plan.q,
        steps: plan.steps,
    }
}

/// Refines the grid by an integer factor: each step is replaced by `factor`
/// substeps that hold the start point and jump on the last one.
pub fn refine_plan(plan: &TestPlan, factor: usize) -> Result<TestPlan> {
    if factor == 0 {
        return Err(param("factor", "must be at least 1"));
    }
    let curves = plan
        .curves
        .iter()
        .map(|c| {
            let mut nodes = Vec::with_capacity(c.steps() * factor + 1);
            for w in c.nodes().windows(2) {
                nodes.extend(std::iter::repeat_n(w[0], factor));
            }
            nodes.push(c.end());
            DiscreteCurve { nodes }
        })
        .collect();
    Ok(TestPlan {
        curves,
        probs: plan.probs.clone(),
        q: plan.q,
        steps: plan.steps * factor,
    })
}

/// Convex combination `Σ λ_k π_k` of plans on the same grid.
pub fn mix_plans(parts: &[(f64, TestPlan)]) -> Result<TestPlan> {
    let Some((_, first)) = parts.first() else {
        return Err(param("parts", "nothing to mix"));
    };
    let mut curves = Vec::new();
    let mut probs = Vec::new();
    for (lambda, p) in parts {
        if p.steps != first.steps {
            return Err(Error::Shape(format!(
                "cannot mix plans with {} and {} steps",
                first.steps, p.steps
            )));
        }
        for (c, pr) in p.iter() {
            curves.push(c.clone());
            probs.push(lambda * pr);
        }
    }
    Ok(TestPlan::new(curves, probs, first.q)?.merged())
}

/// Concatenates `first` and `second` through their common junction marginal
/// `ν = (e_1)_♯first = (e_0)_♯second`, pairing curves with weight
/// `p_a p_b / ν(x)` at each junction point `x`. The glued grid has
/// `T_first + T_second` steps.
pub fn glue_plans(first: &TestPlan, second: &TestPlan) -> Result<TestPlan> {
    let end = first.marginal_map(first.steps);
    let start = second.marginal_map(0);
    for x in end.keys().chain(start.keys()) {
        let (l, r) = (end.get(x).copied().unwrap_or(0.0), start.get(x).copied().unwrap_or(0.0));
        if (l - r).abs() > GLUE_TOL {
            return Err(Error::MarginalMismatch {
                point: *x,
                left: l,
                right: r,
            });
        }
    }
    let mut by_start: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for (k, (c, p)) in second.iter().enumerate() {
        if p > 0.0 {
            by_start.entry(c.start()).or_default().push(k);
        }
    }
    let mut curves = Vec::new();
    let mut probs = Vec::new();
    for (a, pa) in first.iter() {
        if pa <= 0.0 {
            continue;
        }
        let x = a.end();
        let nu = end[&x];
        for &k in &by_start[&x] {
            let b = &second.curves[k];
            let mut nodes = a.nodes().to_vec();
            nodes.extend_from_slice(&b.nodes()[1..]);
            curves.push(DiscreteCurve { nodes });
            probs.push(pa * second.probs[k] / nu);
        }
    }
    Ok(TestPlan::new(curves, probs, first.q)?.merged())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::generators;

    fn c(v: &[usize]) -> DiscreteCurve {
        DiscreteCurve::new(v.to_vec()).unwrap()
    }

    #[test]
    fn compression_examples() {
        let s = generators::weighted_line(vec![1.0, 2.0], 1.0);
        let p = TestPlan::single(DiscreteCurve::constant(1, 2), 2.0).unwrap();
        assert_eq!(compression(&s, &p).unwrap(), 0.5);

        let u = generators::line(2, 1.0, 1.0);
        let p = TestPlan::new(
            vec![DiscreteCurve::constant(0, 1), DiscreteCurve::constant(1, 1)],
            vec![0.5, 0.5],
            2.0,
        )
        .unwrap();
        assert_eq!(compression(&u, &p).unwrap(), 0.5);

        // (e_t)_♯π equal to the normalised reference measure at every time
        let w = generators::weighted_line(vec![1.0, 3.0], 1.0);
        let p = TestPlan::new(vec![c(&[0, 1]), c(&[1, 0]), c(&[1, 1])], vec![0.25, 0.25, 0.5], 2.0).unwrap();
        assert_eq!(compression(&w, &p).unwrap(), 0.25);
    }

    #[test]
    fn energy_of_mixtures() {
        let line = generators::line(3, 1.0, 1.0);
        let p = TestPlan::new(vec![DiscreteCurve::constant(0, 2), c(&[0, 0, 1])], vec![0.5, 0.5], 2.0).unwrap();
        assert_eq!(plan_kinetic_energy(&p, &line).unwrap(), 1.0);
        let g = TestPlan::single(c(&[0, 1, 2]), 3.0).unwrap();
        assert!((plan_kinetic_energy(&g, &line).unwrap() - 8.0).abs() < 1e-12);
    }

    #[test]
    fn rescale_and_restrict() {
        let p = TestPlan::new(vec![c(&[0, 1]), c(&[1, 2])], vec![0.25, 0.75], 2.0).unwrap();
        assert_eq!(rescale_plan(&p, &[0, 1]).unwrap(), p);
        let one = rescale_plan(&p, &[1]).unwrap();
        assert_eq!(one.probs(), &[1.0]);
        assert_eq!(one.curves()[0], c(&[1, 2]));
        let z = TestPlan::new(vec![c(&[0, 1]), c(&[1, 2])], vec![1.0, 0.0], 2.0).unwrap();
        assert_eq!(rescale_plan(&z, &[1]), Err(Error::ZeroMass));
        assert_eq!(restrict_plan(&p, 0.0, 1.0).unwrap(), p);
    }

    #[test]
    fn gluing() {
        let a = TestPlan::single(c(&[0, 1]), 2.0).unwrap();
        let b = TestPlan::single(c(&[1, 2]), 2.0).unwrap();
        let g = glue_plans(&a, &b).unwrap();
        assert_eq!(g.curves(), &[c(&[0, 1, 2])]);
        assert_eq!(g.probs(), &[1.0]);

        let p = TestPlan::new(vec![c(&[0, 1]), c(&[2, 1])], vec![0.5, 0.5], 2.0).unwrap();
        let g = glue_plans(&p, &reverse_plan(&p)).unwrap();
        assert_eq!(g.marginal(3, 0).unwrap(), g.marginal(3, 2).unwrap());
        assert_eq!(g.len(), 4);

        let bad = TestPlan::single(c(&[2, 2]), 2.0).unwrap();
        assert!(matches!(glue_plans(&a, &bad), Err(Error::MarginalMismatch { .. })));
    }

    #[test]
    fn refinement_keeps_marginals_on_coarse_grid() {
        let line = generators::line(3, 1.0, 1.0);
        let p = TestPlan::new(vec![c(&[0, 1, 2]), c(&[2, 2, 1])], vec![0.5, 0.5], 2.0).unwrap();
        let r = refine_plan(&p, 3).unwrap();
        assert_eq!(r.steps(), 6);
        for j in 0..=2 {
            assert_eq!(r.marginal(3, 3 * j).unwrap(), p.marginal(3, j).unwrap());
        }
        assert_eq!(compression(&line, &r).unwrap(), compression(&line, &p).unwrap());
    }
}
