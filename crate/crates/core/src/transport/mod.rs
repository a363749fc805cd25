//! Exact q-Wasserstein distances and optimal couplings.

mod brute;
mod measure;
mod simplex;

use serde::Serialize;

pub use brute::MAX_SUPPORT as BRUTE_FORCE_MAX_SUPPORT;
pub use measure::{Coupling, ProbMeasure, MASS_TOL};

use crate::error::{check_exponent, Error, Result};
use crate::space::FiniteMetricMeasureSpace;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TransportResult {
    /// `W_q(μ0, μ1)`.
    pub cost: f64,
    /// `W_q(μ0, μ1)^q`.
    pub cost_pow: f64,
    pub coupling: Coupling,
}

/// Optimal q-transport between two measures on the same space.
pub fn wasserstein(
    space: &FiniteMetricMeasureSpace,
    q: f64,
    mu0: &ProbMeasure,
    mu1: &ProbMeasure,
) -> Result<TransportResult> {
    solve_with(space, q, mu0, mu1, |a, b, c| {
        let s = simplex::solve(a, b, c)?;
        Ok((s.flows, s.cost))
    })
}

/// Minimum over all basic feasible couplings, enumerated exhaustively.
/// Supports are limited to [`BRUTE_FORCE_MAX_SUPPORT`] points each.
pub fn brute_force_wasserstein(
    space: &FiniteMetricMeasureSpace,
    q: f64,
    mu0: &ProbMeasure,
    mu1: &ProbMeasure,
) -> Result<TransportResult> {
    solve_with(space, q, mu0, mu1, brute::solve)
}

type Flows = Vec<(usize, usize, f64)>;

fn solve_with(
    space: &FiniteMetricMeasureSpace,
    q: f64,
    mu0: &ProbMeasure,
    mu1: &ProbMeasure,
    solver: impl FnOnce(&[f64], &[f64], &[f64]) -> Result<(Flows, f64)>,
) -> Result<TransportResult> {
    check_exponent("q", q)?;
    mu0.check_space(space)?;
    mu1.check_space(space)?;
    let rows = mu0.support();
    let cols = mu1.support();
    let a: Vec<f64> = rows.iter().map(|&i| mu0.mass(i)).collect();
    let b: Vec<f64> = cols.iter().map(|&j| mu1.mass(j)).collect();
    let mut cost = Vec::with_capacity(rows.len() * cols.len());
    for &i in &rows {
        for &j in &cols {
            cost.push(space.d(i, j).powf(q));
        }
    }
    let (flows, cost_pow) = solver(&a, &b, &cost)?;
    let entries = flows.into_iter().map(|(r, c, x)| (rows[r], cols[c], x)).collect();
    let coupling = Coupling::from_entries(space.n(), entries)?;
    let cost_pow = cost_pow.max(0.0);
    Ok(TransportResult {
        cost: cost_pow.powf(1.0 / q),
        cost_pow,
        coupling,
    })
}

/// `φ_♯μ` for an index map `φ` into a space with `target_n` points.
pub fn pushforward(map: &[Option<usize>], target_n: usize, mu: &ProbMeasure) -> Result<ProbMeasure> {
    if map.len() != mu.len() {
        return Err(Error::Shape(format!(
            "map has {} entries, measure has {}",
            map.len(),
            mu.len()
        )));
    }
    let mut mass = vec![0.0; target_n];
    for i in mu.support() {
        let j = map[i].ok_or(Error::MapUndefined(i))?;
        if j >= target_n {
            return Err(Error::IndexOutOfRange { index: j, n: target_n });
        }
        mass[j] += mu.mass(i);
    }
    ProbMeasure::normalize(mass)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConvergenceReport {
    /// `W_q(μ_n, μ)` for each n.
    pub distances: Vec<f64>,
    /// `∫ d^q(·, x0) dμ_n` for each n.
    pub moments: Vec<f64>,
    pub limit_moment: f64,
    /// Whether both distances and moment gaps stay within tolerance over the
    /// second half of the sequence.
    pub converged: bool,
}

/// Weak convergence plus convergence of q-moments, which together are
/// equivalent to `W_q` convergence.
pub fn wq_convergence_check(
    space: &FiniteMetricMeasureSpace,
    q: f64,
    seq: &[ProbMeasure],
    limit: &ProbMeasure,
    x0: usize,
    tol: f64,
) -> Result<ConvergenceReport> {
    check_exponent("q", q)?;
    space.check_index(x0)?;
    if seq.is_empty() {
        return Err(Error::InvalidParameter {
            name: "seq",
            reason: "sequence is empty".into(),
        });
    }
    let mut distances = Vec::with_capacity(seq.len());
    let mut moments = Vec::with_capacity(seq.len());
    for mu in seq {
        distances.push(wasserstein(space, q, mu, limit)?.cost);
        moments.push(mu.moment(space, q, x0));
    }
    let limit_moment = limit.moment(space, q, x0);
    let tail = seq.len() / 2;
    let converged =
        distances[tail..].iter().all(|&d| d <= tol) && moments[tail..].iter().all(|&m| (m - limit_moment).abs() <= tol);
    Ok(ConvergenceReport {
        distances,
        moments,
        limit_moment,
        converged,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::generators;

    fn m(v: &[f64]) -> ProbMeasure {
        ProbMeasure::new(v.to_vec()).unwrap()
    }

    #[test]
    fn dirac_to_dirac() {
        let s = generators::line(2, 1.0, 1.0);
        let r = wasserstein(&s, 2.0, &ProbMeasure::dirac(2, 0), &ProbMeasure::dirac(2, 1)).unwrap();
        assert_eq!(r.cost, 1.0);
        assert_eq!(r.coupling.entries(), &[(0, 1, 1.0)]);
    }

    #[test]
    fn identity_case() {
        let s = generators::line(4, 1.0, 1.0);
        let mu = m(&[0.1, 0.2, 0.3, 0.4]);
        let r = wasserstein(&s, 3.0, &mu, &mu).unwrap();
        assert_eq!(r.cost, 0.0);
        assert_eq!(r.coupling, Coupling::identity(&mu));
    }

    #[test]
    fn three_point_line_matches_oracle() {
        let s = generators::line(3, 1.0, 1.0);
        let (a, b) = (m(&[0.5, 0.5, 0.0]), m(&[0.0, 0.5, 0.5]));
        let lp = wasserstein(&s, 2.0, &a, &b).unwrap();
        let bf = brute_force_wasserstein(&s, 2.0, &a, &b).unwrap();
        assert!((lp.cost - bf.cost).abs() < 1e-12);
        // both shift-by-one and the swap 0->2 give W_2^2 = 1
        assert!((lp.cost_pow - 1.0).abs() < 1e-12);
    }

    #[test]
    fn brute_force_small_cases() {
        let tri = FiniteMetricMeasureSpace::from_matrix(
            vec![vec![0.0, 1.0, 1.0], vec![1.0, 0.0, 1.0], vec![1.0, 1.0, 0.0]],
            vec![1.0; 3],
        )
        .unwrap();
        let u = m(&[1.0 / 3.0; 3]);
        assert_eq!(brute_force_wasserstein(&tri, 2.0, &u, &u).unwrap().cost, 0.0);
        let v = m(&[0.5, 0.25, 0.25]);
        assert!(brute_force_wasserstein(&tri, 2.0, &u, &v).unwrap().cost > 0.0);
        let d = ProbMeasure::dirac(3, 1);
        assert_eq!(brute_force_wasserstein(&tri, 2.0, &d, &d).unwrap().cost, 0.0);
    }

    #[test]
    fn brute_force_rejects_large() {
        let s = generators::line(7, 1.0, 1.0);
        let u = m(&[1.0 / 7.0; 7]);
        assert!(matches!(
            brute_force_wasserstein(&s, 2.0, &u, &u),
            Err(Error::TooLarge(_))
        ));
    }

    #[test]
    fn bad_exponent() {
        let s = generators::line(2, 1.0, 1.0);
        let d = ProbMeasure::dirac(2, 0);
        assert!(wasserstein(&s, 1.0, &d, &d).is_err());
        assert!(wasserstein(&s, f64::INFINITY, &d, &d).is_err());
    }

    #[test]
    fn pushforwards() {
        let mu = m(&[0.3, 0.7]);
        assert_eq!(pushforward(&[Some(0), Some(1)], 2, &mu).unwrap(), mu);
        assert_eq!(
            pushforward(&[Some(0), Some(0)], 2, &mu).unwrap(),
            ProbMeasure::dirac(2, 0)
        );
        assert_eq!(pushforward(&[Some(1), Some(0)], 2, &mu).unwrap().masses(), &[0.7, 0.3]);
        assert_eq!(pushforward(&[Some(1), None], 2, &mu), Err(Error::MapUndefined(1)));
        let d = ProbMeasure::dirac(2, 0);
        assert!(pushforward(&[Some(1), None], 2, &d).is_ok());
    }

    #[test]
    fn convergence() {
        let s = generators::line(2, 1.0, 1.0);
        let (a, b) = (ProbMeasure::dirac(2, 0), ProbMeasure::dirac(2, 1));
        let same = vec![a.clone(); 4];
        let r = wq_convergence_check(&s, 2.0, &same, &a, 0, 1e-12).unwrap();
        assert!(r.converged && r.distances.iter().all(|&d| d == 0.0));

        let seq: Vec<ProbMeasure> = (1..=400).map(|k| m(&[1.0 - 1.0 / k as f64, 1.0 / k as f64])).collect();
        let r = wq_convergence_check(&s, 2.0, &seq, &a, 0, 0.1).unwrap();
        for (k, d) in r.distances.iter().enumerate() {
            let expected = (1.0 / (k + 1) as f64).sqrt();
            assert!((d - expected).abs() < 1e-12);
        }
        assert!(r.converged);

        let alt: Vec<ProbMeasure> = (0..10)
            .map(|k| if k % 2 == 0 { a.clone() } else { b.clone() })
            .collect();
        assert!(!wq_convergence_check(&s, 2.0, &alt, &a, 0, 1e-6).unwrap().converged);
    }
}
