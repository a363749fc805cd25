//! Distortion coefficients, entropies and curvature-dimension checkers.

use serde::{Serialize, Serializer};

use crate::curves::TestPlan;
use crate::error::{check_exponent, param, Error, Result};
use crate::interpolation::DyadicGeodesic;
use crate::space::{diameter, FiniteMetricMeasureSpace};
use crate::transport::{wasserstein, ProbMeasure};

/// Branch boundaries on `Kθ²` are resolved at this tolerance.
const BRANCH_TOL: f64 = 1e-14;
/// Absolute tolerance of the curvature inequality checks.
pub const CHECK_TOL: f64 = 1e-6;

/// A real number or `+∞`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ExtendedReal {
    Finite(f64),
    Infinite,
}

impl ExtendedReal {
    pub fn is_infinite(self) -> bool {
        matches!(self, ExtendedReal::Infinite)
    }

    /// `f64::INFINITY` for the sentinel.
    pub fn value(self) -> f64 {
        match self {
            ExtendedReal::Finite(v) => v,
            ExtendedReal::Infinite => f64::INFINITY,
        }
    }

    pub fn finite(self) -> Option<f64> {
        match self {
            ExtendedReal::Finite(v) => Some(v),
            ExtendedReal::Infinite => None,
        }
    }
}

impl Serialize for ExtendedReal {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            ExtendedReal::Finite(v) => s.serialize_f64(*v),
            ExtendedReal::Infinite => s.serialize_str("inf"),
        }
    }
}

fn check_dimension(n: f64) -> Result<()> {
    if n.is_nan() || n.is_infinite() || n == 0.0 {
        return Err(param("N", format!("must be finite and nonzero, got {n}")));
    }
    Ok(())
}

fn check_time(t: f64) -> Result<()> {
    if (0.0..=1.0).contains(&t) {
        Ok(())
    } else {
        Err(param("t", format!("must lie in [0, 1], got {t}")))
    }
}

fn check_theta(theta: f64) -> Result<()> {
    if theta.is_finite() && theta >= 0.0 {
        Ok(())
    } else {
        Err(param("theta", format!("must be finite and nonnegative, got {theta}")))
    }
}

/// `σ^{(t)}_{K,N}(θ)` for `N > 0`, and its negative-dimension variant for `N < 0`.
pub fn sigma(k: f64, n: f64, t: f64, theta: f64) -> Result<ExtendedReal> {
    check_dimension(n)?;
    check_time(t)?;
    check_theta(theta)?;
    if !k.is_finite() {
        return Err(param("K", format!("must be finite, got {k}")));
    }
    let kt = k * theta * theta;
    let boundary = n * std::f64::consts::PI * std::f64::consts::PI;
    let at_boundary = (kt - boundary).abs() <= BRANCH_TOL * boundary.abs().max(1.0);
    if kt.abs() <= BRANCH_TOL {
        return Ok(ExtendedReal::Finite(t));
    }
    if n > 0.0 {
        if kt >= boundary || at_boundary {
            return Ok(ExtendedReal::Infinite);
        }
        if kt > 0.0 {
            let a = theta * (k / n).sqrt();
            Ok(ExtendedReal::Finite((t * a).sin() / a.sin()))
        } else {
            let a = theta * (-k / n).sqrt();
            Ok(ExtendedReal::Finite(sinh_ratio(t, a)))
        }
    } else {
        if kt <= boundary || at_boundary {
            return Ok(ExtendedReal::Infinite);
        }
        if kt < 0.0 {
            let a = theta * (k / n).sqrt();
            Ok(ExtendedReal::Finite((t * a).sin() / a.sin()))
        } else {
            let a = theta * (-k / n).sqrt();
            Ok(ExtendedReal::Finite(sinh_ratio(t, a)))
        }
    }
}

/// `sinh(t a) / sinh(a)` without overflow for large `a`.
fn sinh_ratio(t: f64, a: f64) -> f64 {
    if a < 20.0 {
        (t * a).sinh() / a.sinh()
    } else {
        // e^{(t-1)a} (1 - e^{-2ta}) / (1 - e^{-2a})
        ((t - 1.0) * a).exp() * (-(-2.0 * t * a).exp_m1()) / (-(-2.0 * a).exp_m1())
    }
}

/// `τ^{(t)}_{K,N}(θ) = t^{1/N} σ^{(t)}_{K,N-1}(θ)^{1-1/N}`, with the `N = 1`
/// convention (`t` for `K <= 0`, `+∞` for `K > 0` and `θ > 0`). For `N < 0`
/// the negative-dimension `σ` is used. `τ^{(0)} = 0` by continuity.
pub fn tau(k: f64, n: f64, t: f64, theta: f64) -> Result<ExtendedReal> {
    check_dimension(n)?;
    if n > 0.0 && n < 1.0 {
        return Err(param("N", format!("τ needs N >= 1 or N < 0, got {n}")));
    }
    check_time(t)?;
    check_theta(theta)?;
    if n == 1.0 {
        if k <= 0.0 || k * theta * theta <= BRANCH_TOL {
            return Ok(ExtendedReal::Finite(t));
        }
        return Ok(ExtendedReal::Infinite);
    }
    let s = sigma(k, n - 1.0, t, theta)?;
    let Some(s) = s.finite() else {
        return Ok(ExtendedReal::Infinite);
    };
    if t == 0.0 {
        return Ok(ExtendedReal::Finite(0.0));
    }
    Ok(ExtendedReal::Finite(t.powf(1.0 / n) * s.powf(1.0 - 1.0 / n)))
}

/// `Ent_m(μ) = Σ ρ log ρ m`, with `0 log 0 = 0`.
pub fn shannon_entropy(space: &FiniteMetricMeasureSpace, mu: &ProbMeasure) -> f64 {
    mu.masses()
        .iter()
        .zip(space.weights())
        .filter(|(m, _)| **m > 0.0)
        .map(|(m, w)| {
            let rho = m / w;
            rho * rho.ln() * w
        })
        .sum()
}

/// `U_N(μ|m) = -Σ ρ^{1-1/N} m` for `N >= 1`; `+Σ ρ^{1-1/N} m` for `N < 0`.
pub fn renyi_entropy(space: &FiniteMetricMeasureSpace, mu: &ProbMeasure, n: f64) -> Result<f64> {
    check_dimension(n)?;
    if n > 0.0 && n < 1.0 {
        return Err(param("N", format!("Rényi entropy needs N >= 1 or N < 0, got {n}")));
    }
    let e = 1.0 - 1.0 / n;
    let sum: f64 = mu
        .masses()
        .iter()
        .zip(space.weights())
        .filter(|(m, _)| **m > 0.0)
        .map(|(m, w)| (m / w).powf(e) * w)
        .sum();
    Ok(if n > 0.0 { -sum } else { sum })
}

/// Closed-form profile families.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ProfileKind {
    /// `e^{K⁻ D² / 12}`.
    CdInfty,
    /// `2^N e^{D √((N-1) K⁻)}`.
    Mcp,
    /// `1` for `K >= 0`; `(x / sin x)^{1-N}` with `x = (D/4) √(K/(N-1))` for `K < 0`.
    CdNegative,
}

pub fn profile(kind: ProfileKind, k: f64, n: Option<f64>, d: f64) -> Result<f64> {
    if !(d.is_finite() && d >= 0.0) {
        return Err(param("D", format!("must be finite and nonnegative, got {d}")));
    }
    if !k.is_finite() {
        return Err(param("K", format!("must be finite, got {k}")));
    }
    let km = (-k).max(0.0);
    match kind {
        ProfileKind::CdInfty => Ok((km * d * d / 12.0).exp()),
        ProfileKind::Mcp => {
            let n = n.ok_or_else(|| param("N", "required for the MCP profile"))?;
            if !(n.is_finite() && n >= 1.0) {
                return Err(param("N", format!("MCP needs N in [1, inf), got {n}")));
            }
            Ok(2f64.powf(n) * (d * ((n - 1.0) * km).sqrt()).exp())
        }
        ProfileKind::CdNegative => {
            let n = n.ok_or_else(|| param("N", "required for the negative-dimension profile"))?;
            if !(n.is_finite() && n < 0.0) {
                return Err(param("N", format!("needs N < 0, got {n}")));
            }
            if k >= 0.0 {
                return Ok(1.0);
            }
            let limit = std::f64::consts::PI * ((n - 1.0) / k).sqrt();
            if d >= limit {
                return Err(Error::Domain(format!("D = {d} must be below π √((N-1)/K) = {limit}")));
            }
            let x = d / 4.0 * (k / (n - 1.0)).sqrt();
            if x == 0.0 {
                return Ok(1.0);
            }
            Ok((x / x.sin()).powf(1.0 - n))
        }
    }
}

/// Lower bound on `m({ρ_{1/2} > 0})` given the endpoint sup-densities.
/// `n = None` is the dimension-free case `1 / (e^{K⁻ D²/8} (‖ρ0‖ ∨ ‖ρ1‖))`;
/// `n = Some(N)` with `N < 0` gives `e^{-½ √((1-N) K) D}` for `K >= 0` and
/// `cos^{1-N}(½ D √(K/(N-1)))` for `K < 0`, both over `‖ρ0‖ ∨ ‖ρ1‖`.
pub fn spreading_bound(norm0: f64, norm1: f64, d: f64, k: f64, n: Option<f64>) -> Result<f64> {
    if !(norm0 > 0.0 && norm1 > 0.0) {
        return Err(param("norm", "sup-densities must be positive"));
    }
    if !(d.is_finite() && d >= 0.0) {
        return Err(param("D", format!("must be finite and nonnegative, got {d}")));
    }
    let b = norm0.max(norm1);
    match n {
        None => Ok(1.0 / ((-k).max(0.0) * d * d / 8.0).exp() / b),
        Some(n) if n < 0.0 => {
            if k >= 0.0 {
                Ok((-0.5 * ((1.0 - n) * k).sqrt() * d).exp() / b)
            } else {
                let limit = std::f64::consts::PI * ((n - 1.0) / k).sqrt();
                if d >= limit {
                    return Err(Error::Domain(format!("D = {d} must be below π √((N-1)/K) = {limit}")));
                }
                Ok((0.5 * d * (k / (n - 1.0)).sqrt()).cos().powf(1.0 - n) / b)
            }
        }
        Some(n) => Err(param("N", format!("spreading bound needs N < 0 or none, got {n}"))),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TimeMargin {
    pub t: f64,
    pub lhs: f64,
    pub rhs: f64,
    /// `rhs - lhs`; nonnegative when the inequality holds.
    pub margin: f64,
    /// The right side is infinite and the row holds vacuously.
    pub vacuous: bool,
}

impl TimeMargin {
    fn new(t: f64, lhs: f64, rhs: f64) -> Self {
        TimeMargin {
            t,
            lhs,
            rhs,
            margin: rhs - lhs,
            vacuous: false,
        }
    }

    fn vacuous(t: f64, lhs: f64) -> Self {
        TimeMargin {
            t,
            lhs,
            rhs: f64::INFINITY,
            margin: f64::INFINITY,
            vacuous: true,
        }
    }
}

fn worst(rows: &[TimeMargin]) -> f64 {
    rows.iter().map(|r| r.margin).fold(f64::INFINITY, f64::min)
}

fn check_endpoints(geo: &DyadicGeodesic, mu0: &ProbMeasure, mu1: &ProbMeasure) -> Result<()> {
    let first = &geo.measures[0];
    let last = &geo.measures[geo.measures.len() - 1];
    if first.len() != mu0.len() || first.sup_distance(mu0) > 1e-12 {
        return Err(Error::Precondition("geodesic does not start at mu0".into()));
    }
    if last.len() != mu1.len() || last.sup_distance(mu1) > 1e-12 {
        return Err(Error::Precondition("geodesic does not end at mu1".into()));
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CdInftyReport {
    pub w: f64,
    pub rows: Vec<TimeMargin>,
    pub worst_margin: f64,
    pub pass: bool,
}

/// `Ent(μ_t) <= (1-t) Ent(μ0) + t Ent(μ1) - (K/2) t (1-t) W_q²` at every dyadic time.
pub fn cd_infty_check(
    space: &FiniteMetricMeasureSpace,
    q: f64,
    k: f64,
    mu0: &ProbMeasure,
    mu1: &ProbMeasure,
    geo: &DyadicGeodesic,
) -> Result<CdInftyReport> {
    check_exponent("q", q)?;
    check_endpoints(geo, mu0, mu1)?;
    let w = wasserstein(space, q, mu0, mu1)?.cost;
    let (e0, e1) = (shannon_entropy(space, mu0), shannon_entropy(space, mu1));
    let rows: Vec<TimeMargin> = geo
        .measures
        .iter()
        .enumerate()
        .map(|(j, m)| {
            let t = geo.time(j);
            let rhs = (1.0 - t) * e0 + t * e1 - k / 2.0 * t * (1.0 - t) * w * w;
            TimeMargin::new(t, shannon_entropy(space, m), rhs)
        })
        .collect();
    let worst_margin = worst(&rows);
    Ok(CdInftyReport {
        w,
        rows,
        worst_margin,
        pass: worst_margin >= -CHECK_TOL,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DensityRow {
    pub t: f64,
    /// `‖ρ_t‖ / ‖ρ0‖` (or over `‖ρ0‖ ∨ ‖ρ1‖` for two-sided bounds).
    pub factor: f64,
    pub bound: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct McpReport {
    pub rows: Vec<TimeMargin>,
    pub density: Vec<DensityRow>,
    pub worst_margin: f64,
    pub any_vacuous: bool,
    pub pass: bool,
}

/// `1/(1-t)^N e^{D t √((N-1) K⁻)}`.
pub fn mcp_density_factor(k: f64, n: f64, d: f64, t: f64) -> f64 {
    (d * t * ((n - 1.0) * (-k).max(0.0)).sqrt()).exp() / (1.0 - t).powf(n)
}

/// Rényi contraction inequality towards `δ_o` at every dyadic `t < 1`, plus the
/// density bound `‖ρ_t‖ <= 1/(1-t)^N e^{Dt√((N-1)K⁻)} ‖ρ0‖`.
pub fn mcp_check(
    space: &FiniteMetricMeasureSpace,
    q: f64,
    k: f64,
    n: f64,
    mu0: &ProbMeasure,
    o: usize,
    geo: &DyadicGeodesic,
) -> Result<McpReport> {
    check_exponent("q", q)?;
    if !(n.is_finite() && n >= 1.0) {
        return Err(param("N", format!("MCP needs N in [1, inf), got {n}")));
    }
    space.check_index(o)?;
    check_endpoints(geo, mu0, &ProbMeasure::dirac(space.n(), o))?;
    let rho0 = mu0.density(space);
    let norm0 = mu0.density_sup(space);
    let mut support = mu0.support();
    support.push(o);
    let d = diameter(space, &support)?;
    let e = 1.0 - 1.0 / n;

    let mut rows = Vec::new();
    let mut density = Vec::new();
    for (j, m) in geo.measures.iter().enumerate() {
        let t = geo.time(j);
        if t >= 1.0 {
            continue;
        }
        let lhs = renyi_entropy(space, m, n)?;
        let mut integral = 0.0;
        let mut infinite = false;
        for x in mu0.support() {
            match tau(k, n, 1.0 - t, space.d(x, o))? {
                ExtendedReal::Finite(v) => integral += v * rho0[x].powf(e) * space.weight(x),
                ExtendedReal::Infinite => infinite = true,
            }
        }
        rows.push(if infinite {
            TimeMargin::vacuous(t, lhs)
        } else {
            TimeMargin::new(t, lhs, -integral)
        });
        let factor = m.density_sup(space) / norm0;
        let bound = mcp_density_factor(k, n, d, t);
        density.push(DensityRow {
            t,
            factor,
            bound,
            pass: factor <= bound * (1.0 + CHECK_TOL),
        });
    }
    let worst_margin = worst(&rows);
    let any_vacuous = rows.iter().any(|r| r.vacuous);
    let pass = worst_margin >= -CHECK_TOL && density.iter().all(|r| r.pass);
    Ok(McpReport {
        rows,
        density,
        worst_margin,
        any_vacuous,
        pass,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NegativeRow {
    pub n_prime: f64,
    pub margin: TimeMargin,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SpreadRow {
    /// `m({ρ_{1/2} > 0})`.
    pub support_mass: f64,
    pub bound: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CdNegativeReport {
    pub rows: Vec<NegativeRow>,
    /// `‖ρ_t‖ / (‖ρ0‖ ∨ ‖ρ1‖)` against the negative-dimension profile.
    pub density: Vec<DensityRow>,
    /// Present when the plan grid contains `t = 1/2`.
    pub spread: Option<SpreadRow>,
    pub worst_margin: f64,
    pub any_vacuous: bool,
    pub pass: bool,
}

/// Negative-dimension convexity along a lifted plan for each `N'` in `n_grid`
/// (all within `[N, 0)`), together with the interpolant density bound and the
/// midpoint spreading bound.
#[allow(clippy::too_many_arguments)]
pub fn cd_negative_check(
    space: &FiniteMetricMeasureSpace,
    q: f64,
    k: f64,
    n: f64,
    mu0: &ProbMeasure,
    mu1: &ProbMeasure,
    plan: &TestPlan,
    n_grid: &[f64],
) -> Result<CdNegativeReport> {
    check_exponent("q", q)?;
    if !(n.is_finite() && n < 0.0) {
        return Err(param("N", format!("needs N < 0, got {n}")));
    }
    if let Some(&bad) = n_grid.iter().find(|&&np| !(np >= n && np < 0.0)) {
        return Err(param("N'", format!("{bad} is outside [N, 0)")));
    }
    plan.check_space(space)?;
    let steps = plan.steps();
    let sz = space.n();
    if plan.marginal(sz, 0)?.sup_distance(mu0) > 1e-12 || plan.marginal(sz, steps)?.sup_distance(mu1) > 1e-12 {
        return Err(Error::Precondition("plan endpoints differ from mu0, mu1".into()));
    }
    let rho0 = mu0.density(space);
    let rho1 = mu1.density(space);
    let (norm0, norm1) = (mu0.density_sup(space), mu1.density_sup(space));
    let mut support = mu0.support();
    support.extend(mu1.support());
    let d = diameter(space, &support)?;

    let mut rows = Vec::new();
    for &np in n_grid {
        for j in 0..=steps {
            let t = j as f64 / steps as f64;
            let mt = plan.marginal(sz, j)?;
            let lhs = renyi_entropy(space, &mt, np)?;
            let mut rhs = 0.0;
            let mut infinite = false;
            for (c, p) in plan.iter() {
                if p <= 0.0 {
                    continue;
                }
                let theta = space.d(c.start(), c.end());
                let a = tau(k, np, 1.0 - t, theta)?;
                let b = tau(k, np, t, theta)?;
                match (a, b) {
                    (ExtendedReal::Finite(a), ExtendedReal::Finite(b)) => {
                        rhs += p * (a * rho0[c.start()].powf(-1.0 / np) + b * rho1[c.end()].powf(-1.0 / np));
                    }
                    _ => infinite = true,
                }
            }
            let margin = if infinite {
                TimeMargin::vacuous(t, lhs)
            } else {
                TimeMargin::new(t, lhs, rhs)
            };
            rows.push(NegativeRow { n_prime: np, margin });
        }
    }

    let bound = profile(ProfileKind::CdNegative, k, Some(n), d)?;
    let b = norm0.max(norm1);
    let density = (0..=steps)
        .map(|j| {
            let mt = plan.marginal(sz, j)?;
            let factor = mt.density_sup(space) / b;
            Ok(DensityRow {
                t: j as f64 / steps as f64,
                factor,
                bound,
                pass: factor <= bound * (1.0 + CHECK_TOL),
            })
        })
        .collect::<Result<Vec<_>>>()?;

    let spread = if steps.is_multiple_of(2) {
        let mid = plan.marginal(sz, steps / 2)?;
        let support_mass: f64 = mid.support().iter().map(|&x| space.weight(x)).sum();
        let bound = spreading_bound(norm0, norm1, d, k, Some(n))?;
        Some(SpreadRow {
            support_mass,
            bound,
            pass: support_mass >= bound - 1e-8,
        })
    } else {
        None
    };

    let margins: Vec<TimeMargin> = rows.iter().map(|r| r.margin.clone()).collect();
    let worst_margin = worst(&margins);
    let any_vacuous = margins.iter().any(|r| r.vacuous);
    let pass = worst_margin >= -CHECK_TOL && density.iter().all(|r| r.pass) && spread.as_ref().is_none_or(|s| s.pass);
    Ok(CdNegativeReport {
        rows,
        density,
        spread,
        worst_margin,
        any_vacuous,
        pass,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::generators;
    use std::f64::consts::PI;

    fn fin(x: ExtendedReal) -> f64 {
        x.finite().expect("finite")
    }

    #[test]
    fn sigma_branches() {
        assert_eq!(fin(sigma(0.0, 3.0, 0.3, 2.0).unwrap()), 0.3);
        let v = fin(sigma(1.0, 1.0, 0.5, PI / 2.0).unwrap());
        assert!((v - (PI / 4.0).sin()).abs() < 1e-15);
        assert!((v - std::f64::consts::FRAC_1_SQRT_2).abs() < 1e-15);
        assert!(sigma(1.0, 1.0, 0.5, PI).unwrap().is_infinite());
        let h = fin(sigma(-1.0, 1.0, 0.5, 1.0).unwrap());
        assert!((h - 0.5f64.sinh() / 1f64.sinh()).abs() < 1e-15);
        assert!(sigma(1.0, 0.0, 0.5, 1.0).is_err());
        assert!(sigma(1.0, f64::INFINITY, 0.5, 1.0).is_err());
        assert!(sigma(1.0, f64::NAN, 0.5, 1.0).is_err());
    }

    #[test]
    fn negative_sigma_branches() {
        // Kθ² <= Nπ²
        assert!(sigma(-1.0, -1.0, 0.5, PI).unwrap().is_infinite());
        assert!(sigma(-2.0, -1.0, 0.5, PI).unwrap().is_infinite());
        let v = fin(sigma(-1.0, -1.0, 0.5, 1.0).unwrap());
        assert!((v - 0.5f64.sin() / 1f64.sin()).abs() < 1e-15);
        let h = fin(sigma(1.0, -1.0, 0.5, 1.0).unwrap());
        assert!((h - 0.5f64.sinh() / 1f64.sinh()).abs() < 1e-15);
        assert_eq!(fin(sigma(0.0, -2.0, 0.25, 1.0).unwrap()), 0.25);
    }

    #[test]
    fn sigma_large_argument_is_stable() {
        let v = fin(sigma(-1.0, 1.0, 0.5, 200.0).unwrap());
        assert!(v > 0.0 && (v.ln() + 100.0).abs() < 1e-9);
        let one = fin(sigma(-1.0, 1.0, 1.0, 2000.0).unwrap());
        assert!((one - 1.0).abs() < 1e-15);
    }

    #[test]
    fn tau_branches() {
        assert_eq!(fin(tau(-1.0, 1.0, 0.3, 2.0).unwrap()), 0.3);
        assert_eq!(fin(tau(0.0, 1.0, 0.3, 2.0).unwrap()), 0.3);
        assert!(tau(1.0, 1.0, 0.3, 2.0).unwrap().is_infinite());
        assert!((fin(tau(0.0, 2.0, 0.25, 1.0).unwrap()) - 0.25).abs() < 1e-15);
        assert_eq!(fin(tau(-1.0, 3.0, 0.0, 1.0).unwrap()), 0.0);
        assert!(tau(1.0, 0.5, 0.3, 1.0).is_err());
        // infinite σ propagates
        assert!(tau(1.0, 2.0, 0.3, PI).unwrap().is_infinite());
    }

    #[test]
    fn entropies() {
        let s = generators::line(4, 1.0, 1.0);
        let u = ProbMeasure::new(vec![0.25; 4]).unwrap();
        assert!((shannon_entropy(&s, &u) + 4f64.ln()).abs() < 1e-15);
        assert_eq!(shannon_entropy(&s, &ProbMeasure::dirac(4, 2)), 0.0);
        let two = generators::line(2, 1.0, 1.0);
        let m = ProbMeasure::new(vec![0.75, 0.25]).unwrap();
        let expected = 0.75 * 0.75f64.ln() + 0.25 * 0.25f64.ln();
        assert!((shannon_entropy(&two, &m) - expected).abs() < 1e-15);

        for n in [1.0, 2.0, 5.0] {
            let r = renyi_entropy(&s, &u, n).unwrap();
            assert!((r + 4f64.powf(1.0 / n)).abs() < 1e-12);
            assert_eq!(renyi_entropy(&s, &ProbMeasure::dirac(4, 0), n).unwrap(), -1.0);
        }
        assert_eq!(renyi_entropy(&s, &ProbMeasure::dirac(4, 0), -3.0).unwrap(), 1.0);
        let h = ProbMeasure::new(vec![0.5, 0.5]).unwrap();
        assert!((renyi_entropy(&two, &h, -1.0).unwrap() - 0.5).abs() < 1e-15);
        assert!(renyi_entropy(&two, &h, 0.5).is_err());
    }

    #[test]
    fn profiles() {
        for d in [0.0, 1.0, 7.0] {
            assert_eq!(profile(ProfileKind::CdInfty, 0.0, None, d).unwrap(), 1.0);
            assert_eq!(profile(ProfileKind::Mcp, 0.0, Some(1.0), d).unwrap(), 2.0);
        }
        let v = profile(ProfileKind::CdInfty, -1.0, None, 1.0).unwrap();
        assert!((v - (1.0f64 / 12.0).exp()).abs() < 1e-15);
        assert_eq!(profile(ProfileKind::CdNegative, 1.0, Some(-2.0), 3.0).unwrap(), 1.0);
        // K = -1, N = -1: x = D/4 · √(1/2), domain D < π√2
        let d = 2.0;
        let x = d / 4.0 * 0.5f64.sqrt();
        let v = profile(ProfileKind::CdNegative, -1.0, Some(-1.0), d).unwrap();
        assert!((v - (x / x.sin()).powi(2)).abs() < 1e-14);
        assert!(matches!(
            profile(ProfileKind::CdNegative, -1.0, Some(-1.0), 5.0),
            Err(Error::Domain(_))
        ));
    }

    #[test]
    fn spreading() {
        assert_eq!(spreading_bound(1.0, 1.0, 3.0, 0.0, None).unwrap(), 1.0);
        let v = spreading_bound(1.0, 1.0, 1.0, -2.0, None).unwrap();
        assert!((v - (-0.25f64).exp()).abs() < 1e-15);
        let v = spreading_bound(2.0, 1.0, 1.0, 3.0, Some(-2.0)).unwrap();
        assert!((v - (-0.5 * 9f64.sqrt()).exp() / 2.0).abs() < 1e-15);
        let v = spreading_bound(1.0, 1.0, 1.0, -1.0, Some(-1.0)).unwrap();
        assert!((v - (0.5 * 0.5f64.sqrt()).cos().powi(2)).abs() < 1e-15);
        assert!(spreading_bound(1.0, 1.0, 1.0, -1.0, Some(2.0)).is_err());
    }
}
