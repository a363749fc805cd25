//! Verification and empirical estimation of bounded-interpolation profiles.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::dyadic::{fill, DENSITY_SLACK};
use super::midpoint::min_midpoint_density;
use crate::curvature::{profile, ProfileKind};
use crate::error::{check_exponent, param, Error, Result};
use crate::space::{diameter, FiniteMetricMeasureSpace};
use crate::transport::ProbMeasure;

/// A nondecreasing map `D ↦ C(D) >= 1` bounding interpolant densities.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ProfileFunction {
    CdInfty {
        #[serde(rename = "K")]
        k: f64,
    },
    Mcp {
        #[serde(rename = "K")]
        k: f64,
        #[serde(rename = "N")]
        n: f64,
    },
    CdNegative {
        #[serde(rename = "K")]
        k: f64,
        #[serde(rename = "N")]
        n: f64,
    },
    /// Piecewise-linear through `(D, C)` samples, flat outside their range.
    Sampled { samples: Vec<(f64, f64)> },
}

impl ProfileFunction {
    /// The constant profile `1`.
    pub fn one() -> Self {
        ProfileFunction::CdInfty { k: 0.0 }
    }

    /// Sorts the samples by `D` and replaces them by their running maximum,
    /// clamped below at `1`.
    pub fn sampled(mut samples: Vec<(f64, f64)>) -> Result<Self> {
        if samples.is_empty() {
            return Err(param("samples", "need at least one sample"));
        }
        if samples
            .iter()
            .any(|(d, c)| !(d.is_finite() && *d >= 0.0 && c.is_finite()))
        {
            return Err(param("samples", "D must be finite and nonnegative, C finite"));
        }
        samples.sort_by(|a, b| a.0.total_cmp(&b.0));
        let mut running: f64 = 1.0;
        for s in &mut samples {
            running = running.max(s.1);
            s.1 = running;
        }
        Ok(ProfileFunction::Sampled { samples })
    }

    /// Checks parameters and, for samples, the profile invariants.
    pub fn validate(&self) -> Result<()> {
        match self {
            ProfileFunction::Sampled { samples } => {
                if samples.is_empty() {
                    return Err(param("samples", "need at least one sample"));
                }
                for w in samples.windows(2) {
                    if !(w[0].0 < w[1].0 && w[0].1 <= w[1].1) {
                        return Err(param(
                            "samples",
                            "must be strictly increasing in D and nondecreasing in C",
                        ));
                    }
                }
                if samples
                    .iter()
                    .any(|(d, c)| !(d.is_finite() && *d >= 0.0 && c.is_finite() && *c >= 1.0))
                {
                    return Err(param("samples", "need finite D >= 0 and finite C >= 1"));
                }
                Ok(())
            }
            _ => self.evaluate(0.0).map(|_| ()),
        }
    }

    pub fn evaluate(&self, d: f64) -> Result<f64> {
        match *self {
            ProfileFunction::CdInfty { k } => profile(ProfileKind::CdInfty, k, None, d),
            ProfileFunction::Mcp { k, n } => profile(ProfileKind::Mcp, k, Some(n), d),
            ProfileFunction::CdNegative { k, n } => profile(ProfileKind::CdNegative, k, Some(n), d),
            ProfileFunction::Sampled { ref samples } => {
                if !(d.is_finite() && d >= 0.0) {
                    return Err(param("D", format!("must be finite and nonnegative, got {d}")));
                }
                let (first, last) = match (samples.first(), samples.last()) {
                    (Some(f), Some(l)) => (f, l),
                    _ => return Err(param("samples", "need at least one sample")),
                };
                if d <= first.0 {
                    return Ok(first.1);
                }
                if d >= last.0 {
                    return Ok(last.1);
                }
                let i = samples.partition_point(|s| s.0 <= d);
                let (a, b) = (samples[i - 1], samples[i]);
                Ok(a.1 + (b.1 - a.1) * (d - a.0) / (b.0 - a.0))
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum PairStatus {
    Pass,
    Fail,
    /// No exact interpolant on this space, or the profile is undefined at `D`.
    Inconclusive,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PairOutcome {
    pub index: usize,
    /// `diam(supp μ0 ∪ supp μ1)`.
    pub diameter: f64,
    pub profile_value: f64,
    /// `‖ρ0‖ ∨ ‖ρ1‖`.
    pub input_norm: f64,
    /// Largest `‖ρ_t‖ / (‖ρ0‖ ∨ ‖ρ1‖)` along the constructed geodesic.
    pub worst_ratio: f64,
    pub worst_time: f64,
    /// Point where the worst density is attained.
    pub worst_point: usize,
    pub status: PairStatus,
    pub note: Option<String>,
}

impl PairOutcome {
    /// `C(D) - worst ratio`; negative on failure.
    pub fn margin(&self) -> f64 {
        self.profile_value - self.worst_ratio
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BipReport {
    pub levels: usize,
    pub pairs: Vec<PairOutcome>,
    /// No pair failed.
    pub pass: bool,
    pub inconclusive: usize,
}

/// Builds a dyadic geodesic for every pair with the density cap held at
/// `C(D) (‖ρ0‖ ∨ ‖ρ1‖)` and checks every interpolant against it at relative
/// slack `1e-6`.
pub fn bip_verify(
    space: &FiniteMetricMeasureSpace,
    q: f64,
    pairs: &[(ProbMeasure, ProbMeasure)],
    profile: &ProfileFunction,
    levels: usize,
) -> Result<BipReport> {
    check_exponent("q", q)?;
    if levels == 0 {
        return Err(param("levels", "must be at least 1"));
    }
    let outcomes: Vec<PairOutcome> = pairs
        .iter()
        .enumerate()
        .map(|(index, (mu0, mu1))| verify_pair(space, q, index, mu0, mu1, profile, levels))
        .collect();
    let pass = outcomes.iter().all(|o| o.status != PairStatus::Fail);
    let inconclusive = outcomes.iter().filter(|o| o.status == PairStatus::Inconclusive).count();
    Ok(BipReport {
        levels,
        pairs: outcomes,
        pass,
        inconclusive,
    })
}

fn verify_pair(
    space: &FiniteMetricMeasureSpace,
    q: f64,
    index: usize,
    mu0: &ProbMeasure,
    mu1: &ProbMeasure,
    profile: &ProfileFunction,
    levels: usize,
) -> PairOutcome {
    let mut out = PairOutcome {
        index,
        diameter: f64::NAN,
        profile_value: f64::NAN,
        input_norm: f64::NAN,
        worst_ratio: f64::NAN,
        worst_time: f64::NAN,
        worst_point: 0,
        status: PairStatus::Inconclusive,
        note: None,
    };
    if let Err(e) = mu0.check_space(space).and_then(|_| mu1.check_space(space)) {
        out.note = Some(e.to_string());
        return out;
    }
    let mut support = mu0.support();
    support.extend(mu1.support());
    out.diameter = diameter(space, &support).unwrap_or(0.0);
    out.input_norm = mu0.density_sup(space).max(mu1.density_sup(space));
    let c = match profile.evaluate(out.diameter) {
        Ok(c) => c,
        Err(e) => {
            out.note = Some(e.to_string());
            return out;
        }
    };
    out.profile_value = c;
    let b0 = out.input_norm;
    let geo = match fill(space, q, mu0, mu1, levels, Some(c), |_, _| c * b0, |_| 1.0) {
        Ok(g) => g,
        Err(e @ Error::NoIntermediate { .. }) => {
            out.note = Some(e.to_string());
            return out;
        }
        Err(e) => {
            out.note = Some(format!("construction failed: {e}"));
            return out;
        }
    };
    let mut worst = (f64::NEG_INFINITY, 0.0, 0);
    for (j, m) in geo.measures.iter().enumerate() {
        let rho = m.density(space);
        let (p, v) = rho
            .iter()
            .copied()
            .enumerate()
            .fold((0, f64::NEG_INFINITY), |a, b| if b.1 > a.1 { b } else { a });
        if v / b0 > worst.0 {
            worst = (v / b0, geo.time(j), p);
        }
    }
    out.worst_ratio = worst.0;
    out.worst_time = worst.1;
    out.worst_point = worst.2;
    out.status = if out.worst_ratio <= c * (1.0 + DENSITY_SLACK) {
        PairStatus::Pass
    } else {
        PairStatus::Fail
    };
    out
}

/// Samples endpoint pairs of diameter at most `D` for each `D` in the grid and
/// records the worst ratio between the least possible midpoint sup-density and
/// the input sup-density. Candidates are Dirac pairs `(δ_x, δ_y)` and the
/// normalised restrictions of the balls of radius `(D - d(x, y)) / 2` around
/// `x` and `y`; `pairs_per_d` of them are taken evenly from the list sorted by
/// decreasing `d(x, y)`. Pairs without an exact midpoint are skipped. The
/// result is the monotone envelope of the samples, clamped below at `1`.
pub fn bip_profile_estimate(
    space: &FiniteMetricMeasureSpace,
    q: f64,
    d_grid: &[f64],
    pairs_per_d: usize,
) -> Result<ProfileFunction> {
    check_exponent("q", q)?;
    if d_grid.is_empty() {
        return Err(param("D_grid", "must not be empty"));
    }
    if d_grid.iter().any(|d| !(d.is_finite() && *d >= 0.0)) {
        return Err(param("D_grid", "entries must be finite and nonnegative"));
    }
    if pairs_per_d == 0 {
        return Err(param("pairs_per_D", "must be at least 1"));
    }
    let n = space.n();
    let mut samples = Vec::with_capacity(d_grid.len());
    for &d in d_grid {
        let mut cands: Vec<(usize, usize)> = (0..n)
            .flat_map(|x| (x + 1..n).map(move |y| (x, y)))
            .filter(|&(x, y)| space.d(x, y) <= d)
            .collect();
        cands.sort_by(|a, b| space.d(b.0, b.1).total_cmp(&space.d(a.0, a.1)).then(a.cmp(b)));
        let picked: Vec<(usize, usize)> = if cands.len() <= pairs_per_d {
            cands
        } else {
            (0..pairs_per_d).map(|i| cands[i * cands.len() / pairs_per_d]).collect()
        };
        let ratios: Vec<f64> = picked
            .par_iter()
            .map(|&(x, y)| -> Result<f64> {
                let r = (d - space.d(x, y)) / 2.0;
                let ball = |c: usize| ProbMeasure::normalized_restriction(space, &space.ball(c, r).collect::<Vec<_>>());
                let tries = [
                    (ProbMeasure::dirac(n, x), ProbMeasure::dirac(n, y)),
                    (ball(x)?, ball(y)?),
                ];
                let mut worst: f64 = 0.0;
                for (a, b) in &tries {
                    let b0 = a.density_sup(space).max(b.density_sup(space));
                    match min_midpoint_density(space, q, a, b) {
                        Ok((c, _)) => worst = worst.max(c / b0),
                        Err(Error::NoIntermediate { .. }) => {}
                        Err(e) => return Err(e),
                    }
                }
                Ok(worst)
            })
            .collect::<Result<Vec<_>>>()?;
        samples.push((d, ratios.into_iter().fold(1.0, f64::max)));
    }
    samples.sort_by(|a, b| a.0.total_cmp(&b.0));
    samples.dedup_by(|b, a| {
        if a.0 == b.0 {
            a.1 = a.1.max(b.1);
            true
        } else {
            false
        }
    });
    ProfileFunction::sampled(samples)
}

/// `∏_{i=1}^n cos(θ / 2^i)`, which tends to `sin θ / θ`. Empty for `n = 0`.
pub fn cos_product(theta: f64, n: usize) -> f64 {
    let mut p = 1.0;
    let mut a = theta;
    for _ in 0..n {
        a /= 2.0;
        p *= a.cos();
    }
    p
}
