//! Clarkson inequalities for fields given by their pointwise norms.

use serde::Serialize;

use crate::error::{check_exponent, Error, Result};
use crate::space::FiniteMetricMeasureSpace;

/// Relative tolerance on the pointwise parallelogram identity.
const PARALLELOGRAM_TOL: f64 = 1e-10;

/// Pointwise norms `|ω|, |η|, |ω + η|, |ω - η|`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PointwiseNorms {
    pub omega: Vec<f64>,
    pub eta: Vec<f64>,
    pub sum: Vec<f64>,
    pub diff: Vec<f64>,
}

/// Norms of two fields of Euclidean vectors, one vector per point.
pub fn pointwise_euclidean(omega: &[Vec<f64>], eta: &[Vec<f64>]) -> Result<PointwiseNorms> {
    if omega.len() != eta.len() {
        return Err(Error::Shape(format!("{} vs {} points", omega.len(), eta.len())));
    }
    let norm = |v: &mut dyn Iterator<Item = f64>| v.map(|x| x * x).sum::<f64>().sqrt();
    let mut out = PointwiseNorms {
        omega: Vec::with_capacity(omega.len()),
        eta: Vec::with_capacity(omega.len()),
        sum: Vec::with_capacity(omega.len()),
        diff: Vec::with_capacity(omega.len()),
    };
    for (i, (a, b)) in omega.iter().zip(eta).enumerate() {
        if a.len() != b.len() {
            return Err(Error::Shape(format!(
                "point {i}: dimensions {} and {}",
                a.len(),
                b.len()
            )));
        }
        out.omega.push(norm(&mut a.iter().copied()));
        out.eta.push(norm(&mut b.iter().copied()));
        out.sum.push(norm(&mut a.iter().zip(b).map(|(x, y)| x + y)));
        out.diff.push(norm(&mut a.iter().zip(b).map(|(x, y)| x - y)));
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ClarksonCase {
    /// `p >= 2`: `‖(ω+η)/2‖^p + ‖(ω-η)/2‖^p <= ½‖ω‖^p + ½‖η‖^p`.
    Large,
    /// `p <= 2`: `‖(ω+η)/2‖^{p'} + ‖(ω-η)/2‖^{p'} <= (½‖ω‖^p + ½‖η‖^p)^{p'/p}`.
    Small,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ClarksonReport {
    pub case: ClarksonCase,
    pub lhs: f64,
    pub rhs: f64,
    /// `rhs - lhs`.
    pub margin: f64,
}

/// Evaluates the applicable Clarkson inequality in `L^p(m)`; `p = 2` uses the
/// first form (both coincide there).
pub fn clarkson_check(space: &FiniteMetricMeasureSpace, norms: &PointwiseNorms, p: f64) -> Result<ClarksonReport> {
    check_exponent("p", p)?;
    let n = space.n();
    for (name, v) in [
        ("omega", &norms.omega),
        ("eta", &norms.eta),
        ("sum", &norms.sum),
        ("diff", &norms.diff),
    ] {
        if v.len() != n {
            return Err(Error::Shape(format!("{name} has {} values for {n} points", v.len())));
        }
        if let Some(i) = v.iter().position(|x| !(x.is_finite() && *x >= 0.0)) {
            return Err(Error::Precondition(format!("{name}[{i}] is not a norm value")));
        }
    }
    for i in 0..n {
        let (a, b, s, d) = (norms.omega[i], norms.eta[i], norms.sum[i], norms.diff[i]);
        let left = 2.0 * a * a + 2.0 * b * b;
        let right = s * s + d * d;
        if (left - right).abs() > PARALLELOGRAM_TOL * left.max(right).max(1.0) {
            return Err(Error::Precondition(format!(
                "parallelogram identity fails at point {i}: {left} vs {right}"
            )));
        }
    }
    let w = space.weights();
    let pow_norm = |v: &[f64]| -> f64 { v.iter().zip(w).map(|(x, m)| m * x.powf(p)).sum() };
    let half = |v: &[f64]| -> Vec<f64> { v.iter().map(|x| x / 2.0).collect() };
    let (ps, pd) = (pow_norm(&half(&norms.sum)), pow_norm(&half(&norms.diff)));
    let mean = 0.5 * pow_norm(&norms.omega) + 0.5 * pow_norm(&norms.eta);
    let (case, lhs, rhs) = if p >= 2.0 {
        (ClarksonCase::Large, ps + pd, mean)
    } else {
        let c = p / (p - 1.0);
        (ClarksonCase::Small, ps.powf(c / p) + pd.powf(c / p), mean.powf(c / p))
    };
    Ok(ClarksonReport {
        case,
        lhs,
        rhs,
        margin: rhs - lhs,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::generators;

    #[test]
    fn equal_and_opposite_fields() {
        let s = generators::line(3, 1.0, 1.0);
        let om = vec![vec![1.0, 2.0], vec![0.0, 1.0], vec![3.0, 0.0]];
        let r = clarkson_check(&s, &pointwise_euclidean(&om, &om).unwrap(), 3.0).unwrap();
        assert!(r.margin.abs() < 1e-12);
        let neg: Vec<Vec<f64>> = om.iter().map(|v| v.iter().map(|x| -x).collect()).collect();
        let r = clarkson_check(&s, &pointwise_euclidean(&om, &neg).unwrap(), 3.0).unwrap();
        assert!(r.margin.abs() < 1e-12);
        let r = clarkson_check(&s, &pointwise_euclidean(&om, &neg).unwrap(), 1.5).unwrap();
        assert_eq!(r.case, ClarksonCase::Small);
        assert!(r.margin >= -1e-12);
    }

    #[test]
    fn rejects_non_parallelogram_norms() {
        let s = generators::line(2, 1.0, 1.0);
        let bad = PointwiseNorms {
            omega: vec![1.0, 1.0],
            eta: vec![1.0, 1.0],
            sum: vec![2.0, 2.0],
            diff: vec![1.0, 0.0],
        };
        assert!(matches!(clarkson_check(&s, &bad, 3.0), Err(Error::Precondition(_))));
    }
}
