//! JSON loaders and writers.
//!
//! Syntax errors carry the line and column reported by the decoder; semantic
//! errors name the offending field.
//!
//! Formats:
//! - space: `{"weights": [..], "distances": [[..]..]}` or
//!   `{"weights": [..], "edges": [[a, b, len]..]}`, optional `"labels"`
//! - measure: `[..]` or `{"masses": [..]}`; sums within `1e-9` of one are renormalised
//! - pairs: `[{"mu0": measure, "mu1": measure}..]`
//! - plan: `{"q": 2, "curves": [[..]..], "probs": [..]}`
//! - function: `[..]` or `{"values": [..]}`
//! - profile: `{"kind": "cd_infty", "K": -1}`, see [`ProfileFunction`]
//! - report: `{"rows": [..]}`, other top-level fields ignored

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::curves::{DiscreteCurve, TestPlan};
use crate::error::{Error, Result};
use crate::interpolation::{EmbeddedSpace, ProfileFunction};
use crate::report::Report;
use crate::space::{Edge, FiniteMetricMeasureSpace, RealFunction};
use crate::transport::ProbMeasure;

fn decode<T: DeserializeOwned>(what: &str, text: &str) -> Result<T> {
    serde_json::from_str(text).map_err(|e| Error::Parse(format!("{what}: {e}")))
}

fn context(what: &'static str) -> impl Fn(Error) -> Error {
    move |e| match e {
        Error::Parse(m) => Error::Parse(format!("{what}: {m}")),
        other => Error::Parse(format!("{what}: {other}")),
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpaceFile {
    pub weights: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub distances: Option<Vec<Vec<f64>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub edges: Option<Vec<(usize, usize, f64)>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub labels: Option<Vec<String>>,
}

impl SpaceFile {
    pub fn build(self) -> Result<FiniteMetricMeasureSpace> {
        let n = self.weights.len();
        let edges = self
            .edges
            .map(|es| es.into_iter().map(|(a, b, l)| Edge::new(a, b, l)).collect::<Vec<_>>());
        let space = match (self.distances, edges) {
            (Some(d), None) => FiniteMetricMeasureSpace::from_matrix(d, self.weights),
            (None, Some(e)) => FiniteMetricMeasureSpace::from_edges(n, e, self.weights),
            (Some(d), Some(e)) => FiniteMetricMeasureSpace::from_matrix_and_edges(d, e, self.weights),
            (None, None) => Err(Error::Parse("space needs `distances` or `edges`".into())),
        }?;
        match self.labels {
            Some(l) => space.with_labels(l),
            None => Ok(space),
        }
    }

    pub fn from_space(space: &FiniteMetricMeasureSpace) -> Self {
        SpaceFile {
            weights: space.weights().to_vec(),
            distances: Some((0..space.n()).map(|i| space.dist_row(i).to_vec()).collect()),
            edges: space.edges().map(|es| es.iter().map(|e| (e.a, e.b, e.len)).collect()),
            labels: space.labels().map(<[String]>::to_vec),
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
enum VectorFile {
    Bare(Vec<f64>),
    Masses { masses: Vec<f64> },
    Values { values: Vec<f64> },
}

impl VectorFile {
    fn into_vec(self) -> Vec<f64> {
        match self {
            VectorFile::Bare(v) | VectorFile::Masses { masses: v } | VectorFile::Values { values: v } => v,
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct PairFile {
    mu0: VectorFile,
    mu1: VectorFile,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PlanFile {
    pub q: f64,
    pub curves: Vec<Vec<usize>>,
    pub probs: Vec<f64>,
}

impl PlanFile {
    pub fn from_plan(plan: &TestPlan) -> Self {
        PlanFile {
            q: plan.q(),
            curves: plan.curves().iter().map(|c| c.nodes().to_vec()).collect(),
            probs: plan.probs().to_vec(),
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct EmbeddedFile {
    space: SpaceFile,
    embedding: Vec<usize>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct SequenceEntry {
    space: SpaceFile,
    embedding: Vec<usize>,
    profile: ProfileFunction,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct PmghFile {
    ambient: SpaceFile,
    limit: EmbeddedFile,
    sequence: Vec<SequenceEntry>,
    limit_profile: ProfileFunction,
    pairs: Vec<PairFile>,
    #[serde(default)]
    eta: Option<Vec<f64>>,
}

/// A parsed pmGH stability experiment.
#[derive(Debug, Clone)]
pub struct PmghConfig {
    pub ambient: FiniteMetricMeasureSpace,
    pub limit: EmbeddedSpace,
    pub sequence: Vec<EmbeddedSpace>,
    pub profiles: Vec<ProfileFunction>,
    pub limit_profile: ProfileFunction,
    pub pairs: Vec<(ProbMeasure, ProbMeasure)>,
    /// Cut-off on the ambient points; all ones when absent.
    pub eta: Vec<f64>,
}

pub fn parse_space_str(text: &str) -> Result<FiniteMetricMeasureSpace> {
    decode::<SpaceFile>("space", text)?.build().map_err(context("space"))
}

pub fn parse_measure_str(text: &str) -> Result<ProbMeasure> {
    ProbMeasure::new(decode::<VectorFile>("measure", text)?.into_vec()).map_err(context("measure"))
}

fn pair(p: PairFile) -> Result<(ProbMeasure, ProbMeasure)> {
    Ok((
        ProbMeasure::new(p.mu0.into_vec()).map_err(context("mu0"))?,
        ProbMeasure::new(p.mu1.into_vec()).map_err(context("mu1"))?,
    ))
}

pub fn parse_pairs_str(text: &str) -> Result<Vec<(ProbMeasure, ProbMeasure)>> {
    decode::<Vec<PairFile>>("pairs", text)?
        .into_iter()
        .enumerate()
        .map(|(i, p)| pair(p).map_err(|e| Error::Parse(format!("pairs[{i}]: {e}"))))
        .collect()
}

pub fn parse_plan_str(text: &str) -> Result<TestPlan> {
    let f: PlanFile = decode("plan", text)?;
    let curves = f
        .curves
        .into_iter()
        .enumerate()
        .map(|(i, c)| DiscreteCurve::new(c).map_err(|e| Error::Parse(format!("plan: curves[{i}]: {e}"))))
        .collect::<Result<Vec<_>>>()?;
    TestPlan::new(curves, f.probs, f.q).map_err(context("plan"))
}

pub fn parse_function_str(text: &str) -> Result<RealFunction> {
    RealFunction::new(decode::<VectorFile>("function", text)?.into_vec()).map_err(context("function"))
}

pub fn parse_profile_str(text: &str) -> Result<ProfileFunction> {
    let p: ProfileFunction = decode("profile", text)?;
    p.validate().map_err(context("profile"))?;
    Ok(p)
}

pub fn parse_pmgh_str(text: &str) -> Result<PmghConfig> {
    let f: PmghFile = decode("pmgh", text)?;
    let ambient = f.ambient.build().map_err(context("ambient"))?;
    let limit_space = f.limit.space.build().map_err(context("limit"))?;
    let limit = EmbeddedSpace::new(limit_space, f.limit.embedding, &ambient).map_err(context("limit"))?;
    let mut sequence = Vec::with_capacity(f.sequence.len());
    let mut profiles = Vec::with_capacity(f.sequence.len());
    for (i, s) in f.sequence.into_iter().enumerate() {
        let wrap = |e: Error| Error::Parse(format!("sequence[{i}]: {e}"));
        let space = s.space.build().map_err(wrap)?;
        sequence.push(EmbeddedSpace::new(space, s.embedding, &ambient).map_err(wrap)?);
        s.profile.validate().map_err(wrap)?;
        profiles.push(s.profile);
    }
    f.limit_profile.validate().map_err(context("limit_profile"))?;
    let pairs = f
        .pairs
        .into_iter()
        .enumerate()
        .map(|(i, p)| pair(p).map_err(|e| Error::Parse(format!("pairs[{i}]: {e}"))))
        .collect::<Result<Vec<_>>>()?;
    let eta = f.eta.unwrap_or_else(|| vec![1.0; ambient.n()]);
    Ok(PmghConfig {
        ambient,
        limit,
        sequence,
        profiles,
        limit_profile: f.limit_profile,
        pairs,
        eta,
    })
}

fn read(path: &std::path::Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| Error::Parse(format!("{}: {e}", path.display())))
}

/// Reads the `rows` of a report or of a full command output.
pub fn parse_report_str(text: &str) -> Result<Report> {
    let r: Report = decode("report", text)?;
    Ok(Report::new(r.rows))
}

pub fn load_space(path: &std::path::Path) -> Result<FiniteMetricMeasureSpace> {
    parse_space_str(&read(path)?)
}

pub fn load_measure(path: &std::path::Path) -> Result<ProbMeasure> {
    parse_measure_str(&read(path)?)
}

pub fn load_pairs(path: &std::path::Path) -> Result<Vec<(ProbMeasure, ProbMeasure)>> {
    parse_pairs_str(&read(path)?)
}

pub fn load_plan(path: &std::path::Path) -> Result<TestPlan> {
    parse_plan_str(&read(path)?)
}

pub fn load_function(path: &std::path::Path) -> Result<RealFunction> {
    parse_function_str(&read(path)?)
}

pub fn load_pmgh(path: &std::path::Path) -> Result<PmghConfig> {
    parse_pmgh_str(&read(path)?)
}

pub fn load_report(path: &std::path::Path) -> Result<Report> {
    parse_report_str(&read(path)?)
}

pub fn space_to_json(space: &FiniteMetricMeasureSpace) -> String {
    serde_json::to_string_pretty(&SpaceFile::from_space(space)).expect("space serialises")
}

pub fn measure_to_json(mu: &ProbMeasure) -> String {
    serde_json::to_string(mu).expect("measure serialises")
}

pub fn plan_to_json(plan: &TestPlan) -> String {
    serde_json::to_string(&PlanFile::from_plan(plan)).expect("plan serialises")
}
