//! One function per subcommand. Each returns the rows it checked and the
//! nested module report; writing and exit codes live in `main`.

use std::fmt::Write as _;
use std::path::Path;

use biplab::curvature::{cd_infty_check, cd_negative_check, mcp_check};
use biplab::interpolation::{
    bip_verify, dyadic_geodesic, optgeo_plan, pmgh_stability_check, PairStatus, ProfileFunction, DENSITY_SLACK,
};
use biplab::io;
use biplab::report::{CheckRow, ToRows};
use biplab::sobolev::{
    build_geod_family, gradient_p_comparison, leibniz_check, minimal_weak_upper_gradient, PlanFamily,
};
use biplab::space::{validate_space, Violation};
use biplab::transport::{wasserstein, ProbMeasure};
use biplab::{Error, FiniteMetricMeasureSpace, RealFunction};
use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value};

use crate::args::{
    BipVerifyArgs, CompareArgs, CurvatureArgs, CurvatureKind, InterpolateArgs, PairSource, PmghArgs, SobolevArgs,
    SobolevCommon, ValidateArgs, WassersteinArgs,
};

/// A command failure that stops before any verdict.
#[derive(Debug)]
pub struct CliError {
    pub code: u8,
    pub message: String,
}

impl CliError {
    pub fn input(message: impl Into<String>) -> Self {
        CliError {
            code: 2,
            message: message.into(),
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        // An infeasible cap or a missing midpoint is a verdict on the input,
        // not a malformed input.
        let code = match e {
            Error::CapInfeasible { .. } | Error::NoIntermediate { .. } => 1,
            _ => 2,
        };
        CliError {
            code,
            message: e.to_string(),
        }
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;

/// What a command found.
#[derive(Debug)]
pub struct Outcome {
    pub command: &'static str,
    pub rows: Vec<CheckRow>,
    pub detail: Value,
    /// Human-readable lines for stdout.
    pub summary: String,
    pub pass: bool,
}

/// Shared run settings taken from the environment.
#[derive(Debug, Clone, Copy)]
pub struct Context {
    pub seed: u64,
}

fn with_path<T>(path: &Path, r: biplab::Result<T>) -> CliResult<T> {
    r.map_err(|e| {
        let msg = e.to_string();
        let shown = path.display().to_string();
        if msg.contains(&shown) {
            CliError::input(msg)
        } else {
            CliError::input(format!("{shown}: {msg}"))
        }
    })
}

/// Loads a space and rejects it unless it satisfies every axiom.
fn load_valid_space(path: &Path) -> CliResult<FiniteMetricMeasureSpace> {
    let space = with_path(path, io::load_space(path))?;
    let report = validate_space(&space);
    if let Some(v) = report.violations.first() {
        return Err(CliError::input(format!(
            "{}: not a metric measure space ({} violations, first: {})",
            path.display(),
            report.violations.len() + report.truncated,
            serde_json::to_string(v).unwrap_or_default()
        )));
    }
    Ok(space)
}

fn load_measure_on(path: &Path, space: &FiniteMetricMeasureSpace) -> CliResult<ProbMeasure> {
    let mu = with_path(path, io::load_measure(path))?;
    with_path(path, mu.check_space(space))?;
    Ok(mu)
}

fn to_detail<T: serde::Serialize>(v: &T) -> Value {
    serde_json::to_value(v).unwrap_or(Value::Null)
}

fn write_file(path: &Path, contents: &str) -> CliResult<()> {
    std::fs::write(path, contents).map_err(|e| CliError::input(format!("cannot write {}: {e}", path.display())))
}

/// Restrictions to `B(x, r)` and `B(y, r)` with `x, y` uniform and `r` the
/// distance from `x` to a third uniform point.
fn random_ball_pairs(
    space: &FiniteMetricMeasureSpace,
    count: usize,
    seed: u64,
) -> CliResult<Vec<(ProbMeasure, ProbMeasure)>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = space.n();
    let ball = |c: usize, r: f64| -> CliResult<ProbMeasure> {
        let pts: Vec<usize> = space.ball(c, r).collect();
        Ok(ProbMeasure::normalized_restriction(space, &pts)?)
    };
    (0..count)
        .map(|_| {
            let (x, y, z) = (rng.random_range(0..n), rng.random_range(0..n), rng.random_range(0..n));
            let r = space.d(x, z);
            Ok((ball(x, r)?, ball(y, r)?))
        })
        .collect()
}

fn load_pairs(
    src: &PairSource,
    space: &FiniteMetricMeasureSpace,
    ctx: Context,
) -> CliResult<Vec<(ProbMeasure, ProbMeasure)>> {
    match (&src.pairs, src.random_pairs) {
        (Some(path), _) => {
            let pairs = with_path(path, io::load_pairs(path))?;
            for (i, (a, b)) in pairs.iter().enumerate() {
                with_path(path, a.check_space(space).and_then(|_| b.check_space(space)))
                    .map_err(|e| CliError::input(format!("pair {i}: {}", e.message)))?;
            }
            Ok(pairs)
        }
        (None, Some(count)) => random_ball_pairs(space, count, ctx.seed),
        (None, None) => Err(CliError::input("need --pairs or --random-pairs")),
    }
}

pub fn validate(a: &ValidateArgs) -> CliResult<Outcome> {
    let space = with_path(&a.space, io::load_space(&a.space))?;
    let report = validate_space(&space);
    let mut rows: Vec<CheckRow> = report
        .violations
        .iter()
        .enumerate()
        .map(|(i, v)| violation_row(i, v))
        .collect();
    if report.truncated > 0 {
        rows.push(CheckRow::new(
            "validate/truncated",
            "violations beyond the stored cap <= 0",
            report.truncated as f64,
            0.0,
            false,
        ));
    }
    if rows.is_empty() {
        rows.push(CheckRow::new("validate/all", "violations <= 0", 0.0, 0.0, true));
    }
    let pass = report.passed();
    let summary = if pass {
        format!("valid: {} points, total mass {}", space.n(), space.total_mass())
    } else {
        format!("invalid: {} violations", report.violations.len() + report.truncated)
    };
    Ok(Outcome {
        command: "validate",
        rows,
        detail: to_detail(&report),
        summary,
        pass,
    })
}

fn violation_row(i: usize, v: &Violation) -> CheckRow {
    let id = format!("validate/v{i:05}");
    let (formula, lhs, rhs) = match *v {
        Violation::NonzeroDiagonal { value, .. } => ("|d(x,x)| <= 0", value.abs(), 0.0),
        Violation::Asymmetric { dij, dji, .. } => ("|d(x,y) - d(y,x)| <= 0", (dij - dji).abs(), 0.0),
        Violation::NonPositiveDistance { value, .. } => ("0 < d(x,y) for x != y", 0.0, value),
        Violation::Triangle { excess, .. } => ("d(x,z) - d(x,y) - d(y,z) <= 0", excess, 0.0),
        Violation::NonPositiveWeight { value, .. } => ("0 < m(x)", 0.0, value),
        Violation::InfiniteTotalMass => ("m(X) < inf", f64::INFINITY, f64::MAX),
        Violation::EdgeClosureMismatch { dist, closure, .. } => {
            ("|d(x,y) - path closure| <= 0", (dist - closure).abs(), 0.0)
        }
    };
    CheckRow::new(id, formula, lhs, rhs, false)
}

pub fn wasserstein_cmd(a: &WassersteinArgs) -> CliResult<Outcome> {
    let space = load_valid_space(&a.space)?;
    let mu0 = load_measure_on(&a.mu0, &space)?;
    let mu1 = load_measure_on(&a.mu1, &space)?;
    let res = wasserstein(&space, a.q, &mu0, &mu1)?;
    if let Some(path) = &a.coupling {
        let mut csv = String::from("source,target,mass\n");
        for &(x, y, m) in res.coupling.entries() {
            let _ = writeln!(csv, "{x},{y},{m}");
        }
        write_file(path, &csv)?;
    }
    let err = res.coupling.marginal_error(&mu0, &mu1);
    let rows = vec![CheckRow::new(
        "wasserstein/marginals",
        "max |coupling marginal - μ_i| <= 1e-9",
        err,
        1e-9,
        err <= 1e-9,
    )];
    Ok(Outcome {
        command: "wasserstein",
        pass: rows.iter().all(|r| r.pass),
        rows,
        summary: format!("W_{} = {}", a.q, res.cost),
        detail: json!({ "cost": res.cost, "cost_pow": res.cost_pow, "coupling": res.coupling.entries() }),
    })
}

pub fn interpolate(a: &InterpolateArgs) -> CliResult<Outcome> {
    let space = load_valid_space(&a.space)?;
    let mu0 = load_measure_on(&a.mu0, &space)?;
    let mu1 = load_measure_on(&a.mu1, &space)?;
    let geo = dyadic_geodesic(&space, a.q, &mu0, &mu1, a.k, a.levels, a.c_target)?;
    if let Some(path) = &a.out {
        let mut csv = String::from("time,point,mass,density,level_cap\n");
        for (j, m) in geo.measures.iter().enumerate() {
            for x in m.support() {
                let _ = writeln!(
                    csv,
                    "{},{x},{},{},{}",
                    geo.time(j),
                    m.mass(x),
                    m.mass(x) / space.weight(x),
                    geo.caps[j]
                );
            }
        }
        write_file(path, &csv)?;
    }
    if let Some(path) = &a.midpoint {
        write_file(path, &io::measure_to_json(&geo.measures[geo.measures.len() / 2]))?;
    }
    let mut rows: Vec<CheckRow> = geo
        .density_bound_trace
        .iter()
        .map(|r| {
            CheckRow::new(
                format!("interpolate/level{:02}", r.level),
                "sup ‖ρ‖ at level <= ∏ P(2^{-i+1} D, K) (‖ρ0‖ ∨ ‖ρ1‖)",
                r.achieved,
                r.product_bound,
                r.achieved <= r.product_bound * (1.0 + DENSITY_SLACK),
            )
        })
        .collect();
    if let (Some(c), Some(met)) = (a.c_target, geo.met_target) {
        rows.push(CheckRow::new(
            "interpolate/target",
            "sup_t ‖ρ_t‖ <= C_target (‖ρ0‖ ∨ ‖ρ1‖)",
            geo.sup_density(&space),
            c * geo.input_norm,
            met,
        ));
    }
    let summary = format!(
        "{} measures, input norm {}, largest density {}, diameter {}",
        geo.measures.len(),
        geo.input_norm,
        geo.sup_density(&space),
        geo.diameter
    );
    Ok(Outcome {
        command: "interpolate",
        pass: rows.iter().all(|r| r.pass),
        rows,
        summary,
        detail: json!({
            "levels": geo.levels,
            "diameter": geo.diameter,
            "input_norm": geo.input_norm,
            "met_target": geo.met_target,
            "density_bound_trace": to_detail(&geo.density_bound_trace),
        }),
    })
}

/// A profile given inline as JSON or as the path of a JSON file.
fn parse_profile_arg(text: &str) -> CliResult<ProfileFunction> {
    if text.trim_start().starts_with('{') {
        return io::parse_profile_str(text).map_err(|e| CliError::input(format!("--profile: {e}")));
    }
    let path = Path::new(text);
    let body = std::fs::read_to_string(path)
        .map_err(|e| CliError::input(format!("--profile: cannot read {}: {e}", path.display())))?;
    io::parse_profile_str(&body).map_err(|e| CliError::input(format!("{}: {e}", path.display())))
}

pub fn bip_verify_cmd(a: &BipVerifyArgs, ctx: Context) -> CliResult<Outcome> {
    let space = load_valid_space(&a.space)?;
    let profile = parse_profile_arg(&a.profile)?;
    let pairs = load_pairs(&a.pairs, &space, ctx)?;
    let report = bip_verify(&space, a.q, &pairs, &profile, a.levels)?;
    let mut summary = format!(
        "{} pairs: {} fail, {} inconclusive",
        report.pairs.len(),
        report.pairs.iter().filter(|p| p.status == PairStatus::Fail).count(),
        report.inconclusive
    );
    for p in &report.pairs {
        match p.status {
            PairStatus::Fail => {
                let _ = write!(
                    summary,
                    "\npair {}: ratio {} exceeds C({}) = {} at t = {}, point {}",
                    p.index, p.worst_ratio, p.diameter, p.profile_value, p.worst_time, p.worst_point
                );
            }
            PairStatus::Inconclusive => {
                let _ = write!(
                    summary,
                    "\npair {}: inconclusive ({})",
                    p.index,
                    p.note.as_deref().unwrap_or("")
                );
            }
            PairStatus::Pass => {}
        }
    }
    Ok(Outcome {
        command: "bip-verify",
        rows: report.to_rows(""),
        pass: report.pass,
        summary,
        detail: to_detail(&report),
    })
}

pub fn curvature_check(a: &CurvatureArgs, ctx: Context) -> CliResult<Outcome> {
    let space = load_valid_space(&a.space)?;
    let pairs = load_pairs(&a.pairs, &space, ctx)?;
    let need_n = || a.n.ok_or_else(|| CliError::input("--N is required for this kind"));
    let mut rows = Vec::new();
    let mut details = Vec::with_capacity(pairs.len());
    let mut pass = true;
    let mut worst = f64::INFINITY;
    let mut inconclusive = Vec::new();
    for (i, (mu0, mu1)) in pairs.iter().enumerate() {
        let prefix = format!("pair{i:04}/");
        let checked = match a.kind {
            CurvatureKind::CdInfty => dyadic_geodesic(&space, a.q, mu0, mu1, a.k, a.levels, None)
                .and_then(|geo| cd_infty_check(&space, a.q, a.k, mu0, mu1, &geo))
                .map(|r| (r.pass, r.worst_margin, r.to_rows(&prefix), to_detail(&r))),
            CurvatureKind::Mcp => {
                let n = need_n()?;
                let o = a.o.ok_or_else(|| CliError::input("--o is required for mcp"))?;
                space.check_index(o).map_err(|e| CliError::input(format!("--o: {e}")))?;
                let target = ProbMeasure::dirac(space.n(), o);
                dyadic_geodesic(&space, a.q, mu0, &target, a.k, a.levels, None)
                    .and_then(|geo| mcp_check(&space, a.q, a.k, n, mu0, o, &geo))
                    .map(|r| (r.pass, r.worst_margin, r.to_rows(&prefix), to_detail(&r)))
            }
            CurvatureKind::CdNegative => {
                let n = need_n()?;
                let grid = if a.n_grid.is_empty() { vec![n] } else { a.n_grid.clone() };
                optgeo_plan(&space, a.q, mu0, mu1, 1usize << a.levels)
                    .and_then(|p| cd_negative_check(&space, a.q, a.k, n, mu0, mu1, &p.plan, &grid))
                    .map(|r| (r.pass, r.worst_margin, r.to_rows(&prefix), to_detail(&r)))
            }
        };
        match checked {
            Ok((p, w, r, d)) => {
                pass &= p;
                worst = worst.min(w);
                rows.extend(r);
                details.push(json!({ "pair": i, "report": d }));
            }
            // No geodesic to test along: the pair says nothing either way.
            Err(e @ (Error::NoIntermediate { .. } | Error::CapInfeasible { .. })) => {
                inconclusive.push(i);
                details.push(json!({ "pair": i, "inconclusive": e.to_string() }));
            }
            Err(e) => return Err(e.into()),
        }
    }
    Ok(Outcome {
        command: "curvature-check",
        rows,
        pass,
        summary: format!(
            "{} pairs, {} inconclusive {:?}, worst margin {worst:.3e}",
            pairs.len(),
            inconclusive.len(),
            inconclusive
        ),
        detail: Value::Array(details),
    })
}

struct SobolevInput {
    space: FiniteMetricMeasureSpace,
    f: RealFunction,
    family: PlanFamily,
}

fn sobolev_input(c: &SobolevCommon, p: f64) -> CliResult<SobolevInput> {
    let space = load_valid_space(&c.space)?;
    let f = with_path(&c.f, io::load_function(&c.f))?;
    if f.len() != space.n() {
        return Err(CliError::input(format!(
            "{}: {} values for {} points",
            c.f.display(),
            f.len(),
            space.n()
        )));
    }
    if !(p.is_finite() && p > 1.0) {
        return Err(CliError::input(format!("--p must lie in (1, inf), got {p}")));
    }
    let q = c.q.unwrap_or(p / (p - 1.0));
    let family = build_geod_family(&space, q, c.family_depth, c.pair_budget)?;
    Ok(SobolevInput { space, f, family })
}

pub fn sobolev(a: &SobolevArgs) -> CliResult<Outcome> {
    let common = a
        .common()
        .ok_or_else(|| CliError::input("sobolev needs --space and --f"))?;
    let input = sobolev_input(&common, a.p)?;
    let min = minimal_weak_upper_gradient(&input.space, &input.f, a.p, &input.family)?;
    let g = min.gradient.values();
    if let Some(path) = &a.out {
        let mut csv = String::from("point,value\n");
        for (i, v) in g.iter().enumerate() {
            let _ = writeln!(csv, "{i},{v}");
        }
        write_file(path, &csv)?;
    }
    if let Some(path) = &a.gradient_json {
        let json = serde_json::to_string(&json!({ "values": g })).unwrap_or_default();
        write_file(path, &json)?;
    }
    let tol = 1e-7 * (1.0 + min.objective.powf(1.0 / a.p));
    let mut rows = vec![CheckRow::new(
        "sobolev/feasibility",
        "max_k (b_k - a_k·G)⁺ <= tol",
        min.max_violation,
        tol,
        min.max_violation <= tol,
    )];
    let mut detail = json!({
        "p": a.p,
        "family_size": input.family.len(),
        "objective": min.objective,
        "norm": min.gradient.norm(&input.space),
        "max_violation": min.max_violation,
        "gap": min.gap,
        "sweeps": min.sweeps,
        "gradient": g,
    });
    let mut summary = format!(
        "{} plans, ‖G‖_p = {}, {} sweeps",
        input.family.len(),
        min.gradient.norm(&input.space),
        min.sweeps
    );
    if let Some(gpath) = &a.g {
        let other = with_path(gpath, io::load_function(gpath))?;
        let lr = leibniz_check(&input.space, &input.f, &other, a.p, &input.family)?;
        let _ = write!(
            summary,
            "\nLeibniz worst margin {:.3e}, {} flagged",
            lr.worst_margin,
            lr.flagged.len()
        );
        rows.extend(lr.to_rows("sobolev/"));
        detail["leibniz"] = to_detail(&lr);
    }
    Ok(Outcome {
        command: "sobolev",
        pass: rows.iter().all(|r| r.pass),
        rows,
        summary,
        detail,
    })
}

pub fn sobolev_compare(a: &CompareArgs) -> CliResult<Outcome> {
    // The family is built for the conjugate of the smaller exponent unless --q is given.
    let input = sobolev_input(&a.common, a.p1.min(a.p2))?;
    let cmp = gradient_p_comparison(&input.space, &input.f, a.p1, a.p2, &input.family, a.tol)?;
    if let Some(path) = &a.out {
        let mut csv = String::from("point,g1,g2\n");
        for i in 0..cmp.g1.len() {
            let _ = writeln!(csv, "{i},{},{}", cmp.g1[i], cmp.g2[i]);
        }
        write_file(path, &csv)?;
    }
    // Only feasibility is asserted; the pointwise order is descriptive.
    let rows = vec![CheckRow::new(
        "sobolev_compare/g2_feasible",
        "G_{p2} satisfies every plan constraint",
        if cmp.g2_feasible { 0.0 } else { 1.0 },
        0.0,
        cmp.g2_feasible,
    )];
    Ok(Outcome {
        command: "sobolev-compare",
        pass: cmp.g2_feasible,
        rows,
        summary: format!(
            "‖G_{}‖ = {}, ‖G_{}‖ = {}, max |G1 - G2| = {:.3e}, agree: {}",
            cmp.p1, cmp.norm1, cmp.p2, cmp.norm2, cmp.max_abs_diff, cmp.agree
        ),
        detail: to_detail(&cmp),
    })
}

pub fn pmgh(a: &PmghArgs) -> CliResult<Outcome> {
    let cfg = with_path(&a.config, io::load_pmgh(&a.config))?;
    let report = pmgh_stability_check(
        &cfg.ambient,
        &cfg.sequence,
        &cfg.profiles,
        &cfg.limit,
        &cfg.limit_profile,
        a.q,
        &cfg.pairs,
        &cfg.eta,
        a.levels,
        a.tol,
    )?;
    Ok(Outcome {
        command: "pmgh",
        rows: report.to_rows(""),
        pass: report.pass,
        summary: format!(
            "{} spaces, hypothesis accepted: {}, transfer bounds hold: {}, limit pass: {}",
            report.levels.len(),
            report.hypothesis_accepted,
            report.transfer_bounds_hold,
            report.limit.pass
        ),
        detail: to_detail(&report),
    })
}
