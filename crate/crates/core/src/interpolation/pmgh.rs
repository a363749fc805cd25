//! Measure transfer along spaces embedded in a common ambient space.

use serde::Serialize;

use super::bip::{bip_verify, BipReport, ProfileFunction};
use crate::error::{check_exponent, param, Error, Result};
use crate::space::{diameter, FiniteMetricMeasureSpace, STRUCT_TOL};
use crate::transport::{pushforward, wasserstein, ProbMeasure};

/// A space together with an isometric embedding into an ambient space.
#[derive(Debug, Clone)]
pub struct EmbeddedSpace {
    space: FiniteMetricMeasureSpace,
    embedding: Vec<usize>,
}

impl EmbeddedSpace {
    /// Checks that `embedding` is injective and preserves distances up to
    /// `1e-12` relative.
    pub fn new(
        space: FiniteMetricMeasureSpace,
        embedding: Vec<usize>,
        ambient: &FiniteMetricMeasureSpace,
    ) -> Result<Self> {
        if embedding.len() != space.n() {
            return Err(Error::Shape(format!(
                "embedding has {} entries for {} points",
                embedding.len(),
                space.n()
            )));
        }
        for &a in &embedding {
            ambient.check_index(a)?;
        }
        for i in 0..space.n() {
            for j in i + 1..space.n() {
                let (a, b) = (embedding[i], embedding[j]);
                if a == b {
                    return Err(param(
                        "embedding",
                        format!("points {i} and {j} share ambient point {a}"),
                    ));
                }
                let (d, e) = (space.d(i, j), ambient.d(a, b));
                if (d - e).abs() > STRUCT_TOL * d.max(1.0) {
                    return Err(param(
                        "embedding",
                        format!("not isometric at ({i}, {j}): {d} vs ambient {e}"),
                    ));
                }
            }
        }
        Ok(EmbeddedSpace { space, embedding })
    }

    pub fn space(&self) -> &FiniteMetricMeasureSpace {
        &self.space
    }

    pub fn embedding(&self) -> &[usize] {
        &self.embedding
    }

    fn map(&self) -> Vec<Option<usize>> {
        self.embedding.iter().map(|&a| Some(a)).collect()
    }

    /// `μ` pushed into the ambient space.
    pub fn push(&self, ambient: &FiniteMetricMeasureSpace, mu: &ProbMeasure) -> Result<ProbMeasure> {
        mu.check_space(&self.space)?;
        pushforward(&self.map(), ambient.n(), mu)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TransferResult {
    pub mu: ProbMeasure,
    pub input_sup_density: f64,
    pub sup_density: f64,
    /// `∫ η dm` on the limit and target spaces.
    pub z_limit: f64,
    pub z_target: f64,
    /// `(z_limit / z_target) ‖ρ_limit‖`.
    pub bound: f64,
    /// `W_q(μ_limit, μ)` in the ambient metric.
    pub w: f64,
}

fn check_cutoff(ambient: &FiniteMetricMeasureSpace, eta: &[f64]) -> Result<()> {
    if eta.len() != ambient.n() {
        return Err(Error::Shape(format!(
            "cutoff has {} values for {} ambient points",
            eta.len(),
            ambient.n()
        )));
    }
    if eta.iter().any(|v| !(0.0..=1.0).contains(v)) {
        return Err(param("eta", "values must lie in [0, 1]"));
    }
    Ok(())
}

fn cutoff_measure(s: &EmbeddedSpace, eta: &[f64]) -> (Vec<f64>, f64) {
    let m: Vec<f64> = (0..s.space.n())
        .map(|i| eta[s.embedding[i]] * s.space.weight(i))
        .collect();
    let z = m.iter().sum();
    (m, z)
}

/// Moves `μ_limit` to the target space through an optimal coupling `α`
/// between the normalised cut-off measures `η m / z`, setting
/// `μ(y) = Σ_x μ_limit(x) / m̃_limit(x) · α(x, y)`. Then
/// `μ <= (z_limit / z_target) ‖ρ_limit‖ m_target`.
pub fn pmgh_transfer(
    ambient: &FiniteMetricMeasureSpace,
    target: &EmbeddedSpace,
    limit: &EmbeddedSpace,
    mu_limit: &ProbMeasure,
    eta: &[f64],
    q: f64,
) -> Result<TransferResult> {
    check_exponent("q", q)?;
    check_cutoff(ambient, eta)?;
    mu_limit.check_space(&limit.space)?;
    for x in mu_limit.support() {
        if (eta[limit.embedding[x]] - 1.0).abs() > STRUCT_TOL {
            return Err(Error::Precondition(format!("cutoff is not 1 at support point {x}")));
        }
    }
    let (m_lim, z_lim) = cutoff_measure(limit, eta);
    let (m_tgt, z_tgt) = cutoff_measure(target, eta);
    if z_tgt <= 0.0 {
        return Err(Error::ZeroMass);
    }
    let lim_amb = pushforward(&limit.map(), ambient.n(), &ProbMeasure::normalize(m_lim.clone())?)?;
    let tgt_amb = pushforward(&target.map(), ambient.n(), &ProbMeasure::normalize(m_tgt)?)?;
    let alpha = wasserstein(ambient, q, &lim_amb, &tgt_amb)?.coupling;

    let mut back = vec![usize::MAX; ambient.n()];
    for (i, &a) in limit.embedding.iter().enumerate() {
        back[a] = i;
    }
    let mut tgt_back = vec![usize::MAX; ambient.n()];
    for (i, &a) in target.embedding.iter().enumerate() {
        tgt_back[a] = i;
    }
    let mut out = vec![0.0; target.space.n()];
    for &(a, b, mass) in alpha.entries() {
        let x = back[a];
        let mu = mu_limit.mass(x);
        if mu > 0.0 {
            let tilde = m_lim[x] / z_lim;
            out[tgt_back[b]] += mu / tilde * mass;
        }
    }
    let mu = ProbMeasure::new(out)?;
    let input_sup_density = mu_limit.density_sup(&limit.space);
    let w = wasserstein(ambient, q, &limit.push(ambient, mu_limit)?, &target.push(ambient, &mu)?)?.cost;
    Ok(TransferResult {
        sup_density: mu.density_sup(&target.space),
        mu,
        input_sup_density,
        z_limit: z_lim,
        z_target: z_tgt,
        bound: z_lim / z_tgt * input_sup_density,
        w,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TransferSummary {
    pub pair: usize,
    /// Sup-density over the `(z_limit / z_n) ‖ρ‖` bound, for both endpoints.
    pub bound_ratio: [f64; 2],
    /// `W_q` between the limit measures and their transfers.
    pub w: [f64; 2],
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StabilityLevel {
    pub index: usize,
    pub transfers: Vec<TransferSummary>,
    pub bip: BipReport,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PairMargins {
    pub pair: usize,
    /// `C^n(D_n) - worst ratio` on each approximating space.
    pub space_margins: Vec<f64>,
    /// `C(D) - worst ratio` on the limit space.
    pub limit_margin: f64,
    /// `C^n(D) - C(D)` along the sequence at the limit pair's `D`.
    pub profile_gaps: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StabilityReport {
    pub levels: Vec<StabilityLevel>,
    pub limit: BipReport,
    pub margins: Vec<PairMargins>,
    /// `limsup_n C^n(D) <= C(D)` accepted on every pair: the last gap is at
    /// most `tol` and the positive parts of the gaps never increase.
    pub hypothesis_accepted: bool,
    /// Every transfer respects its density bound.
    pub transfer_bounds_hold: bool,
    pub pass: bool,
}

/// Transfers every limit pair to every approximating space, verifies the
/// interpolation bound there with that space's profile, checks the profile
/// hypothesis against `limit_profile`, and verifies the limit space itself.
#[allow(clippy::too_many_arguments)]
pub fn pmgh_stability_check(
    ambient: &FiniteMetricMeasureSpace,
    sequence: &[EmbeddedSpace],
    profiles: &[ProfileFunction],
    limit: &EmbeddedSpace,
    limit_profile: &ProfileFunction,
    q: f64,
    pairs: &[(ProbMeasure, ProbMeasure)],
    eta: &[f64],
    levels: usize,
    tol: f64,
) -> Result<StabilityReport> {
    if sequence.len() != profiles.len() {
        return Err(Error::Shape(format!(
            "{} spaces but {} profiles",
            sequence.len(),
            profiles.len()
        )));
    }
    if sequence.is_empty() {
        return Err(param("sequence", "must not be empty"));
    }
    if !(tol.is_finite() && tol >= 0.0) {
        return Err(param("tol", "must be finite and nonnegative"));
    }
    let mut out_levels = Vec::with_capacity(sequence.len());
    let mut transfer_bounds_hold = true;
    for (index, (s, prof)) in sequence.iter().zip(profiles).enumerate() {
        let mut moved = Vec::with_capacity(pairs.len());
        let mut transfers = Vec::with_capacity(pairs.len());
        for (pair, (a, b)) in pairs.iter().enumerate() {
            let ta = pmgh_transfer(ambient, s, limit, a, eta, q)?;
            let tb = pmgh_transfer(ambient, s, limit, b, eta, q)?;
            let ratio = [ta.sup_density / ta.bound, tb.sup_density / tb.bound];
            transfer_bounds_hold &= ratio.iter().all(|r| *r <= 1.0 + 1e-9);
            transfers.push(TransferSummary {
                pair,
                bound_ratio: ratio,
                w: [ta.w, tb.w],
            });
            moved.push((ta.mu, tb.mu));
        }
        let bip = bip_verify(&s.space, q, &moved, prof, levels)?;
        out_levels.push(StabilityLevel { index, transfers, bip });
    }
    let limit_report = bip_verify(&limit.space, q, pairs, limit_profile, levels)?;

    let mut hypothesis_accepted = true;
    let mut margins = Vec::with_capacity(pairs.len());
    for (pair, (a, b)) in pairs.iter().enumerate() {
        let mut support = a.support();
        support.extend(b.support());
        let d = diameter(&limit.space, &support)?;
        let c = limit_profile.evaluate(d)?;
        let gaps = profiles
            .iter()
            .map(|p| Ok(p.evaluate(d)? - c))
            .collect::<Result<Vec<f64>>>()?;
        let last = *gaps.last().expect("nonempty sequence");
        let decreasing = gaps.windows(2).all(|w| w[1].max(0.0) <= w[0].max(0.0) + tol);
        hypothesis_accepted &= last <= tol && decreasing;
        margins.push(PairMargins {
            pair,
            space_margins: out_levels.iter().map(|l| l.bip.pairs[pair].margin()).collect(),
            limit_margin: limit_report.pairs[pair].margin(),
            profile_gaps: gaps,
        });
    }
    let pass =
        hypothesis_accepted && transfer_bounds_hold && limit_report.pass && out_levels.iter().all(|l| l.bip.pass);
    Ok(StabilityReport {
        levels: out_levels,
        limit: limit_report,
        margins,
        hypothesis_accepted,
        transfer_bounds_hold,
        pass,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::generators;

    fn level(n: usize, ambient_level: usize) -> (FiniteMetricMeasureSpace, Vec<usize>) {
        let pts = (1usize << n) + 1;
        let h = 1.0 / (1usize << n) as f64;
        let stride = 1usize << (ambient_level - n);
        (generators::line(pts, h, h), (0..pts).map(|i| i * stride).collect())
    }

    #[test]
    fn identity_transfer() {
        let amb = generators::line(9, 0.125, 0.125);
        let (s, e) = level(3, 3);
        let lim = EmbeddedSpace::new(s, e, &amb).unwrap();
        let mu = ProbMeasure::new(vec![0.0, 0.1, 0.2, 0.3, 0.4, 0.0, 0.0, 0.0, 0.0]).unwrap();
        let r = pmgh_transfer(&amb, &lim, &lim, &mu, &[1.0; 9], 2.0).unwrap();
        assert!(r.mu.sup_distance(&mu) < 1e-12);
        assert!(r.w < 1e-12);
        assert!((r.sup_density - r.input_sup_density).abs() < 1e-12);
    }

    #[test]
    fn coarse_transfer_respects_bound() {
        let amb = generators::line(17, 1.0 / 16.0, 1.0 / 16.0);
        let (ls, le) = level(4, 4);
        let lim = EmbeddedSpace::new(ls, le, &amb).unwrap();
        let mu = ProbMeasure::normalize((0..17).map(|i| 1.0 + (i as f64 / 3.0).sin()).collect()).unwrap();
        let mut prev = f64::INFINITY;
        for n in 1..=4 {
            let (s, e) = level(n, 4);
            let t = EmbeddedSpace::new(s, e, &amb).unwrap();
            let r = pmgh_transfer(&amb, &t, &lim, &mu, &[1.0; 17], 2.0).unwrap();
            assert!(r.sup_density <= r.bound * (1.0 + 1e-12));
            assert!(r.w <= prev + 1e-12);
            prev = r.w;
        }
        assert!(prev < 1e-9, "{prev}");
    }

    #[test]
    fn errors() {
        let amb = generators::line(5, 1.0, 1.0);
        let lim = EmbeddedSpace::new(generators::line(3, 1.0, 1.0), vec![0, 1, 2], &amb).unwrap();
        let tgt = EmbeddedSpace::new(generators::line(2, 1.0, 1.0), vec![3, 4], &amb).unwrap();
        let mu = ProbMeasure::dirac(3, 0);
        let eta = [1.0, 1.0, 1.0, 0.0, 0.0];
        assert_eq!(
            pmgh_transfer(&amb, &tgt, &lim, &mu, &eta, 2.0).unwrap_err(),
            Error::ZeroMass
        );
        let eta = [0.5, 1.0, 1.0, 1.0, 1.0];
        assert!(matches!(
            pmgh_transfer(&amb, &tgt, &lim, &mu, &eta, 2.0),
            Err(Error::Precondition(_))
        ));
        assert!(EmbeddedSpace::new(generators::line(2, 1.0, 1.0), vec![0, 2], &amb).is_err());
    }

    #[test]
    fn stability_constant_sequence_and_hypothesis() {
        let amb = generators::line(9, 1.0, 1.0);
        let lim = EmbeddedSpace::new(generators::line(9, 1.0, 1.0), (0..9).collect(), &amb).unwrap();
        let a = ProbMeasure::uniform_on(9, &[0, 1]).unwrap();
        let b = ProbMeasure::uniform_on(9, &[4, 5]).unwrap();
        let seq = vec![lim.clone(), lim.clone(), lim.clone()];
        let profiles: Vec<ProfileFunction> = (1..=3)
            .map(|n| ProfileFunction::sampled(vec![(0.0, 1.0 + 1.0 / n as f64)]).unwrap())
            .collect();
        let r = pmgh_stability_check(
            &amb,
            &seq,
            &profiles,
            &lim,
            &ProfileFunction::one(),
            2.0,
            &[(a, b)],
            &[1.0; 9],
            2,
            0.5,
        )
        .unwrap();
        assert!(r.hypothesis_accepted && r.pass, "{r:?}");
        let m = &r.margins[0];
        for (n, sm) in m.space_margins.iter().enumerate() {
            assert!((sm - 1.0 / (n + 1) as f64 - m.limit_margin).abs() < 1e-12);
        }
    }
}
