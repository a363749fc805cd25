use serde::Serialize;

use crate::error::{Error, Result};
use crate::space::FiniteMetricMeasureSpace;

/// Mass tolerance accepted by constructors before renormalising.
pub const MASS_TOL: f64 = 1e-9;

/// A probability measure on the points `0..n` of a finite space.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(transparent)]
pub struct ProbMeasure {
    mass: Vec<f64>,
}

impl ProbMeasure {
    /// Accepts a nonnegative vector whose sum is within `1e-9` of 1 and
    /// renormalises it exactly.
    pub fn new(mass: Vec<f64>) -> Result<Self> {
        if mass.is_empty() {
            return Err(Error::InvalidMeasure("empty mass vector".into()));
        }
        for (i, &m) in mass.iter().enumerate() {
            if !m.is_finite() || m < 0.0 {
                return Err(Error::InvalidMeasure(format!("mass[{i}] = {m}")));
            }
        }
        let total: f64 = mass.iter().sum();
        if (total - 1.0).abs() > MASS_TOL {
            return Err(Error::InvalidMeasure(format!("total mass {total} is not 1")));
        }
        Ok(Self::renormalized(mass, total))
    }

    /// Normalises any nonnegative vector with positive total.
    pub fn normalize(mass: Vec<f64>) -> Result<Self> {
        if let Some(i) = mass.iter().position(|m| !m.is_finite() || *m < 0.0) {
            return Err(Error::InvalidMeasure(format!("mass[{i}] = {}", mass[i])));
        }
        let total: f64 = mass.iter().sum();
        if total <= 0.0 {
            return Err(Error::ZeroMass);
        }
        Ok(Self::renormalized(mass, total))
    }

    fn renormalized(mut mass: Vec<f64>, total: f64) -> Self {
        if total != 1.0 {
            mass.iter_mut().for_each(|m| *m /= total);
        }
        ProbMeasure { mass }
    }

    pub fn dirac(n: usize, i: usize) -> Self {
        let mut mass = vec![0.0; n];
        mass[i] = 1.0;
        ProbMeasure { mass }
    }

    /// Uniform mass over `points` (counting measure, not reference weights).
    pub fn uniform_on(n: usize, points: &[usize]) -> Result<Self> {
        let mut mass = vec![0.0; n];
        for &p in points {
            if p >= n {
                return Err(Error::IndexOutOfRange { index: p, n });
            }
            mass[p] += 1.0;
        }
        Self::normalize(mass)
    }

    /// `m|_E / m(E)`, the normalised restriction of the reference measure.
    pub fn normalized_restriction(space: &FiniteMetricMeasureSpace, points: &[usize]) -> Result<Self> {
        let mut mass = vec![0.0; space.n()];
        for &p in points {
            space.check_index(p)?;
            mass[p] = space.weight(p);
        }
        Self::normalize(mass)
    }

    /// Measure with density `rho` against the reference weights, normalised.
    pub fn from_density(space: &FiniteMetricMeasureSpace, rho: &[f64]) -> Result<Self> {
        if rho.len() != space.n() {
            return Err(Error::Shape(format!(
                "density has {} entries, space has {} points",
                rho.len(),
                space.n()
            )));
        }
        Self::normalize(rho.iter().zip(space.weights()).map(|(r, w)| r * w).collect())
    }

    pub fn len(&self) -> usize {
        self.mass.len()
    }

    pub fn is_empty(&self) -> bool {
        self.mass.is_empty()
    }

    #[inline]
    pub fn mass(&self, i: usize) -> f64 {
        self.mass[i]
    }

    pub fn masses(&self) -> &[f64] {
        &self.mass
    }

    pub fn into_masses(self) -> Vec<f64> {
        self.mass
    }

    pub fn support(&self) -> Vec<usize> {
        (0..self.mass.len()).filter(|&i| self.mass[i] > 0.0).collect()
    }

    /// `ρ_i = μ_i / m_i`.
    pub fn density(&self, space: &FiniteMetricMeasureSpace) -> Vec<f64> {
        self.mass.iter().zip(space.weights()).map(|(m, w)| m / w).collect()
    }

    /// `‖ρ‖_∞`.
    pub fn density_sup(&self, space: &FiniteMetricMeasureSpace) -> f64 {
        self.density(space).into_iter().fold(0.0, f64::max)
    }

    /// `∫ d^q(·, x0) dμ`.
    pub fn moment(&self, space: &FiniteMetricMeasureSpace, q: f64, x0: usize) -> f64 {
        self.mass
            .iter()
            .enumerate()
            .filter(|(_, &m)| m > 0.0)
            .map(|(i, &m)| m * space.d(i, x0).powf(q))
            .sum()
    }

    /// Fails unless the measure has one entry per point of `space`.
    pub fn check_space(&self, space: &FiniteMetricMeasureSpace) -> Result<()> {
        if self.mass.len() == space.n() {
            Ok(())
        } else {
            Err(Error::Shape(format!(
                "measure has {} entries, space has {} points",
                self.mass.len(),
                space.n()
            )))
        }
    }

    /// Largest absolute difference between masses.
    pub fn sup_distance(&self, other: &ProbMeasure) -> f64 {
        self.mass
            .iter()
            .zip(&other.mass)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }
}

/// A transport plan stored sparsely as `(source point, target point, mass)`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Coupling {
    n: usize,
    entries: Vec<(usize, usize, f64)>,
}

impl Coupling {
    /// Entries with equal index pairs are merged; zero entries are dropped.
    pub fn from_entries(n: usize, mut entries: Vec<(usize, usize, f64)>) -> Result<Self> {
        for &(i, j, m) in &entries {
            if i >= n || j >= n {
                return Err(Error::IndexOutOfRange { index: i.max(j), n });
            }
            if !m.is_finite() || m < 0.0 {
                return Err(Error::InvalidMeasure(format!("coupling entry ({i}, {j}) = {m}")));
            }
        }
        entries.sort_by_key(|e| (e.0, e.1));
        let mut merged: Vec<(usize, usize, f64)> = Vec::with_capacity(entries.len());
        for (i, j, m) in entries {
            match merged.last_mut() {
                Some(last) if last.0 == i && last.1 == j => last.2 += m,
                _ => merged.push((i, j, m)),
            }
        }
        merged.retain(|e| e.2 > 0.0);
        Ok(Coupling { n, entries: merged })
    }

    pub fn identity(mu: &ProbMeasure) -> Self {
        Coupling {
            n: mu.len(),
            entries: mu.support().into_iter().map(|i| (i, i, mu.mass(i))).collect(),
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn entries(&self) -> &[(usize, usize, f64)] {
        &self.entries
    }

    pub fn dense(&self) -> Vec<Vec<f64>> {
        let mut m = vec![vec![0.0; self.n]; self.n];
        for &(i, j, x) in &self.entries {
            m[i][j] += x;
        }
        m
    }

    pub fn source_marginal(&self) -> Vec<f64> {
        let mut v = vec![0.0; self.n];
        for &(i, _, x) in &self.entries {
            v[i] += x;
        }
        v
    }

    pub fn target_marginal(&self) -> Vec<f64> {
        let mut v = vec![0.0; self.n];
        for &(_, j, x) in &self.entries {
            v[j] += x;
        }
        v
    }

    /// `Σ α_ij d_ij^q`.
    pub fn cost_pow(&self, space: &FiniteMetricMeasureSpace, q: f64) -> f64 {
        self.entries.iter().map(|&(i, j, x)| x * space.d(i, j).powf(q)).sum()
    }

    /// Largest marginal deviation from `(mu0, mu1)`.
    pub fn marginal_error(&self, mu0: &ProbMeasure, mu1: &ProbMeasure) -> f64 {
        let a = self.source_marginal();
        let b = self.target_marginal();
        (0..self.n)
            .map(|i| (a[i] - mu0.mass(i)).abs().max((b[i] - mu1.mass(i)).abs()))
            .fold(0.0, f64::max)
    }

    pub fn reversed(&self) -> Self {
        let entries = self.entries.iter().map(|&(i, j, x)| (j, i, x)).collect();
        Coupling::from_entries(self.n, entries).expect("reversal keeps entries valid")
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::generators;

    #[test]
    fn construction() {
        assert!(ProbMeasure::new(vec![0.5, 0.5]).is_ok());
        assert!(ProbMeasure::new(vec![0.5, 0.6]).is_err());
        assert!(ProbMeasure::new(vec![-0.1, 1.1]).is_err());
        assert!(ProbMeasure::new(vec![f64::NAN, 1.0]).is_err());
        let m = ProbMeasure::new(vec![0.5 + 1e-10, 0.5]).unwrap();
        assert_eq!(m.masses().iter().sum::<f64>(), 1.0);
        assert_eq!(ProbMeasure::normalize(vec![0.0, 0.0]), Err(Error::ZeroMass));
        assert_eq!(ProbMeasure::uniform_on(3, &[0, 2]).unwrap().masses(), &[0.5, 0.0, 0.5]);
    }

    #[test]
    fn densities() {
        let s = generators::weighted_line(vec![1.0, 2.0, 4.0], 1.0);
        let mu = ProbMeasure::normalized_restriction(&s, &[1, 2]).unwrap();
        let rho = mu.density(&s);
        assert!((rho[1] - 1.0 / 6.0).abs() < 1e-15 && (rho[2] - 1.0 / 6.0).abs() < 1e-15);
        assert_eq!(rho[0], 0.0);
        let back = ProbMeasure::from_density(&s, &rho).unwrap();
        assert!(back.sup_distance(&mu) < 1e-15);
    }

    #[test]
    fn coupling_merges_and_reverses() {
        let c = Coupling::from_entries(2, vec![(0, 1, 0.25), (0, 1, 0.25), (1, 0, 0.5), (1, 1, 0.0)]).unwrap();
        assert_eq!(c.entries(), &[(0, 1, 0.5), (1, 0, 0.5)]);
        assert_eq!(c.reversed().entries(), c.entries());
        assert_eq!(c.source_marginal(), vec![0.5, 0.5]);
    }
}
