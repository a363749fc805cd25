//! Minimum `Σ m_i G_i^p` over `{G >= 0 : a_k · G >= b_k}`.
//!
//! Dual coordinate ascent (Hildreth's method). With multipliers `λ >= 0` and
//! `s = Σ λ_k a_k`, the primal minimiser is `G_i = (s_i / (p m_i))^{1/(p-1)}`,
//! nonnegative because every `a_k` is. Each step maximises the dual in one
//! `λ_k`; for `p = 2` this is closed form, otherwise a safeguarded Newton
//! solve of the monotone equation `a_k · G(s + δ a_k) = b_k`.

use crate::error::{Error, Result};

/// Relative duality gap at which the solve stops.
const GAP_TOL: f64 = 1e-10;
const MAX_SWEEPS: usize = 200_000;

pub(crate) struct Constraint {
    pub a: Vec<f64>,
    pub b: f64,
}

pub(crate) struct Solution {
    pub g: Vec<f64>,
    pub objective: f64,
    /// Largest relative violation `(b - a·G)^+ / max(b, 1)` before the final repair.
    pub max_violation: f64,
    pub gap: f64,
    pub sweeps: usize,
}

fn primal(s: &[f64], w: &[f64], p: f64, g: &mut [f64]) {
    let e = 1.0 / (p - 1.0);
    for i in 0..g.len() {
        g[i] = if s[i] > 0.0 { (s[i] / (p * w[i])).powf(e) } else { 0.0 };
    }
}

fn dot(a: &[f64], g: &[f64]) -> f64 {
    a.iter().zip(g).map(|(x, y)| x * y).sum()
}

/// `a · G(s + δ a)` and its derivative in `δ`, restricted to the support of `a`.
fn response(a: &[f64], s: &[f64], w: &[f64], p: f64, delta: f64, support: &[usize]) -> (f64, f64) {
    let e = 1.0 / (p - 1.0);
    let mut v = 0.0;
    let mut dv = 0.0;
    for &i in support {
        let si = (s[i] + delta * a[i]).max(0.0);
        if si > 0.0 {
            let base = si / (p * w[i]);
            let gi = base.powf(e);
            v += a[i] * gi;
            dv += a[i] * a[i] * e * gi / si;
        }
    }
    (v, dv)
}

/// Solves `a · G(s + δ a) = b` for `δ >= lo` (the response is nondecreasing).
fn line_solve(a: &[f64], s: &[f64], w: &[f64], p: f64, b: f64, lo: f64, support: &[usize]) -> f64 {
    let (v_lo, _) = response(a, s, w, p, lo, support);
    if v_lo >= b {
        return lo;
    }
    let mut lo = lo;
    let mut hi = lo.abs().max(1.0);
    while response(a, s, w, p, hi, support).0 < b {
        lo = hi;
        hi *= 2.0;
        if !hi.is_finite() {
            return lo;
        }
    }
    let mut x = 0.5 * (lo + hi);
    for _ in 0..200 {
        let (v, dv) = response(a, s, w, p, x, support);
        let r = v - b;
        if r.abs() <= 1e-15 * b.max(1e-300) {
            return x;
        }
        if r < 0.0 {
            lo = x;
        } else {
            hi = x;
        }
        let newton = if dv > 0.0 { x - r / dv } else { f64::NAN };
        x = if newton > lo && newton < hi {
            newton
        } else {
            0.5 * (lo + hi)
        };
        if hi - lo <= 1e-16 * hi.abs().max(1.0) {
            break;
        }
    }
    x
}

pub(crate) fn solve(constraints: &[Constraint], w: &[f64], p: f64) -> Result<Solution> {
    let n = w.len();
    let active: Vec<usize> = (0..constraints.len()).filter(|&k| constraints[k].b > 0.0).collect();
    for &k in &active {
        if constraints[k].a.iter().all(|&x| x <= 0.0) {
            return Err(Error::Precondition(format!(
                "constraint {k} demands {} but no curve moves",
                constraints[k].b
            )));
        }
    }
    let supports: Vec<Vec<usize>> = constraints
        .iter()
        .map(|c| (0..n).filter(|&i| c.a[i] > 0.0).collect())
        .collect();
    // For p = 2 the response is linear with slope Σ a_i² / (2 m_i).
    let curvature: Vec<f64> = constraints
        .iter()
        .zip(&supports)
        .map(|(c, sup)| sup.iter().map(|&i| c.a[i] * c.a[i] / (2.0 * w[i])).sum())
        .collect();

    let mut lambda = vec![0.0; constraints.len()];
    let mut s = vec![0.0; n];
    let mut g = vec![0.0; n];
    let mut sweeps = 0;
    let mut gap = f64::INFINITY;
    let mut max_violation = 0.0;
    let mut objective = 0.0;
    while sweeps < MAX_SWEEPS {
        sweeps += 1;
        for &k in &active {
            let c = &constraints[k];
            let sup = &supports[k];
            let delta = if p == 2.0 {
                let ag: f64 = sup.iter().map(|&i| c.a[i] * s[i] / (2.0 * w[i])).sum();
                ((c.b - ag) / curvature[k]).max(-lambda[k])
            } else {
                line_solve(&c.a, &s, w, p, c.b, -lambda[k], sup)
            };
            if delta != 0.0 {
                lambda[k] += delta;
                for &i in sup {
                    s[i] = (s[i] + delta * c.a[i]).max(0.0);
                }
            }
        }
        if sweeps % 16 != 1 && sweeps < MAX_SWEEPS {
            continue;
        }
        // Rebuild s to shed accumulated rounding.
        s.iter_mut().for_each(|v| *v = 0.0);
        for &k in &active {
            if lambda[k] > 0.0 {
                for &i in &supports[k] {
                    s[i] += lambda[k] * constraints[k].a[i];
                }
            }
        }
        primal(&s, w, p, &mut g);
        let base: f64 = g.iter().zip(w).map(|(x, m)| m * x.powf(p)).sum();
        let dual = base
            - active
                .iter()
                .map(|&k| lambda[k] * (dot(&constraints[k].a, &g) - constraints[k].b))
                .sum::<f64>();
        max_violation = active
            .iter()
            .map(|&k| (constraints[k].b - dot(&constraints[k].a, &g)).max(0.0) / constraints[k].b.max(1.0))
            .fold(0.0, f64::max);
        let scale = active
            .iter()
            .map(|&k| constraints[k].b / dot(&constraints[k].a, &g))
            .fold(1.0, f64::max);
        objective = base * scale.powf(p);
        gap = objective - dual;
        if gap <= GAP_TOL * objective.max(1e-300) || active.is_empty() {
            g.iter_mut().for_each(|x| *x *= scale);
            return Ok(Solution {
                g,
                objective,
                max_violation,
                gap: gap.max(0.0),
                sweeps,
            });
        }
    }
    Err(Error::NoConvergence(format!(
        "duality gap {gap:e} (objective {objective:e}, violation {max_violation:e}) after {sweeps} sweeps"
    )))
}
