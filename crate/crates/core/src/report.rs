//! Flat check rows for JSON and CSV output.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::curvature::{CdInftyReport, CdNegativeReport, McpReport};
use crate::interpolation::{BipReport, PairStatus, StabilityReport};
use crate::sobolev::{ClarksonReport, LeibnizReport, MasterReport, UpperGradientReport};

/// One checked inequality `lhs <= rhs`, labelled by the formula it tests.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckRow {
    pub check_id: String,
    /// The inequality or identity being checked, written out.
    pub paper_ref: String,
    #[serde(with = "float_repr")]
    pub lhs: f64,
    #[serde(with = "float_repr")]
    pub rhs: f64,
    #[serde(with = "float_repr")]
    pub margin: f64,
    pub pass: bool,
}

/// JSON has no infinities; non-finite values travel as `"inf"`, `"-inf"`, `"nan"`.
mod float_repr {
    use serde::{de, Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
        if v.is_finite() {
            s.serialize_f64(*v)
        } else if v.is_nan() {
            s.serialize_str("nan")
        } else if *v > 0.0 {
            s.serialize_str("inf")
        } else {
            s.serialize_str("-inf")
        }
    }

    #[derive(Deserialize)]
    #[serde(untagged)]
    enum Repr {
        Num(f64),
        Text(String),
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        match Repr::deserialize(d)? {
            Repr::Num(v) => Ok(v),
            Repr::Text(t) => match t.as_str() {
                "inf" => Ok(f64::INFINITY),
                "-inf" => Ok(f64::NEG_INFINITY),
                "nan" => Ok(f64::NAN),
                other => Err(de::Error::custom(format!("expected a number, got {other:?}"))),
            },
        }
    }
}

impl CheckRow {
    pub fn new(check_id: impl Into<String>, formula: &str, lhs: f64, rhs: f64, pass: bool) -> Self {
        CheckRow {
            check_id: check_id.into(),
            paper_ref: formula.to_string(),
            lhs,
            rhs,
            margin: rhs - lhs,
            pass,
        }
    }
}

/// Unknown fields are ignored so a full command output reads back as its rows.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub rows: Vec<CheckRow>,
}

impl Report {
    pub fn new(mut rows: Vec<CheckRow>) -> Self {
        rows.sort_by(|a, b| a.check_id.cmp(&b.check_id));
        Report { rows }
    }

    pub fn extend(&mut self, rows: impl IntoIterator<Item = CheckRow>) {
        self.rows.extend(rows);
        self.rows.sort_by(|a, b| a.check_id.cmp(&b.check_id));
    }

    pub fn passed(&self) -> bool {
        self.rows.iter().all(|r| r.pass)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serialises")
    }

    /// Header plus one line per row, sorted by `check_id`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("check_id,paper_ref,lhs,rhs,margin,pass\n");
        for r in &self.rows {
            let _ = writeln!(
                out,
                "{},{},{},{},{},{}",
                csv_field(&r.check_id),
                csv_field(&r.paper_ref),
                r.lhs,
                r.rhs,
                r.margin,
                r.pass
            );
        }
        out
    }
}

pub(crate) fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

/// Conversion of a module report into check rows.
pub trait ToRows {
    fn to_rows(&self, prefix: &str) -> Vec<CheckRow>;
}

impl ToRows for BipReport {
    fn to_rows(&self, prefix: &str) -> Vec<CheckRow> {
        self.pairs
            .iter()
            .map(|p| {
                let formula = if p.status == PairStatus::Inconclusive {
                    "inconclusive: no interpolant to test"
                } else {
                    "sup_t ‖ρ_t‖ / (‖ρ0‖ ∨ ‖ρ1‖) <= C(D)"
                };
                CheckRow::new(
                    format!("{prefix}bip/pair{:04}", p.index),
                    formula,
                    p.worst_ratio,
                    p.profile_value,
                    p.status != PairStatus::Fail,
                )
            })
            .collect()
    }
}

impl ToRows for CdInftyReport {
    fn to_rows(&self, prefix: &str) -> Vec<CheckRow> {
        self.rows
            .iter()
            .enumerate()
            .map(|(j, r)| {
                CheckRow::new(
                    format!("{prefix}cd_infty/t{j:04}"),
                    "Ent(μ_t) <= (1-t) Ent(μ0) + t Ent(μ1) - (K/2) t (1-t) W²",
                    r.lhs,
                    r.rhs,
                    r.margin >= -crate::curvature::CHECK_TOL,
                )
            })
            .collect()
    }
}

impl ToRows for McpReport {
    fn to_rows(&self, prefix: &str) -> Vec<CheckRow> {
        let mut rows: Vec<CheckRow> = self
            .rows
            .iter()
            .enumerate()
            .map(|(j, r)| {
                CheckRow::new(
                    format!("{prefix}mcp/t{j:04}"),
                    "U_N(μ_t) <= -Σ τ^{(1-t)}(d(x,o)) ρ0^{1-1/N} m",
                    r.lhs,
                    r.rhs,
                    r.margin >= -crate::curvature::CHECK_TOL,
                )
            })
            .collect();
        rows.extend(self.density.iter().enumerate().map(|(j, d)| {
            CheckRow::new(
                format!("{prefix}mcp_density/t{j:04}"),
                "‖ρ_t‖ / ‖ρ0‖ <= e^{Dt√((N-1)K⁻)} / (1-t)^N",
                d.factor,
                d.bound,
                d.pass,
            )
        }));
        rows
    }
}

impl ToRows for CdNegativeReport {
    fn to_rows(&self, prefix: &str) -> Vec<CheckRow> {
        let mut rows: Vec<CheckRow> = self
            .rows
            .iter()
            .enumerate()
            .map(|(j, r)| {
                CheckRow::new(
                    format!("{prefix}cd_negative/{j:04}"),
                    "U_N'(μ_t) <= ∫ τ^{(1-t)} ρ0^{-1/N'} + τ^{(t)} ρ1^{-1/N'} dπ",
                    r.margin.lhs,
                    r.margin.rhs,
                    r.margin.margin >= -crate::curvature::CHECK_TOL,
                )
            })
            .collect();
        rows.extend(self.density.iter().enumerate().map(|(j, d)| {
            CheckRow::new(
                format!("{prefix}cd_negative_density/t{j:04}"),
                "‖ρ_t‖ / (‖ρ0‖ ∨ ‖ρ1‖) <= C(D)",
                d.factor,
                d.bound,
                d.pass,
            )
        }));
        if let Some(s) = &self.spread {
            rows.push(CheckRow::new(
                format!("{prefix}cd_negative_spread"),
                "bound <= m({ρ_1/2 > 0})",
                s.bound,
                s.support_mass,
                s.pass,
            ));
        }
        rows
    }
}

impl ToRows for UpperGradientReport {
    fn to_rows(&self, prefix: &str) -> Vec<CheckRow> {
        vec![CheckRow::new(
            format!("{prefix}upper_gradient"),
            "∫ |f(γ1) - f(γ0)| dπ <= ∬ G(γ_t) |γ'_t| dt dπ",
            self.lhs,
            self.rhs,
            self.holds,
        )]
    }
}

impl ToRows for LeibnizReport {
    fn to_rows(&self, prefix: &str) -> Vec<CheckRow> {
        (0..self.margins.len())
            .map(|i| {
                let rhs = self.margins[i] + self.dfg[i];
                CheckRow::new(
                    format!("{prefix}leibniz/x{i:04}"),
                    "|D(fg)| <= |f| |Dg| + |g| |Df|",
                    self.dfg[i],
                    rhs,
                    self.margins[i] >= -1e-6,
                )
            })
            .collect()
    }
}

impl ToRows for MasterReport {
    fn to_rows(&self, prefix: &str) -> Vec<CheckRow> {
        let mut rows: Vec<CheckRow> = self
            .failures
            .iter()
            .map(|c| {
                CheckRow::new(
                    format!("{prefix}master/curve{:06}", c.curve),
                    "|f(γ1) - f(γ0)| <= ∫ G(γ_t) |γ'_t| dt",
                    c.lhs,
                    c.rhs,
                    false,
                )
            })
            .collect();
        rows.push(CheckRow::new(
            format!("{prefix}master/all"),
            "failing master curves <= 0",
            self.failures.len() as f64,
            0.0,
            self.master_pass,
        ));
        rows
    }
}

impl ToRows for ClarksonReport {
    fn to_rows(&self, prefix: &str) -> Vec<CheckRow> {
        vec![CheckRow::new(
            format!("{prefix}clarkson"),
            "‖(ω+η)/2‖ + ‖(ω-η)/2‖ <= ½‖ω‖ + ½‖η‖ (Clarkson)",
            self.lhs,
            self.rhs,
            self.margin >= -1e-9,
        )]
    }
}

impl ToRows for StabilityReport {
    fn to_rows(&self, prefix: &str) -> Vec<CheckRow> {
        let mut rows = Vec::new();
        for level in &self.levels {
            rows.extend(level.bip.to_rows(&format!("{prefix}space{:03}/", level.index)));
            for t in &level.transfers {
                for (e, ratio) in t.bound_ratio.iter().enumerate() {
                    rows.push(CheckRow::new(
                        format!("{prefix}space{:03}/transfer{:04}_{e}", level.index, t.pair),
                        "‖ρ_n‖ <= (z_∞ / z_n) ‖ρ_∞‖",
                        *ratio,
                        1.0,
                        *ratio <= 1.0 + 1e-9,
                    ));
                }
            }
        }
        rows.extend(self.limit.to_rows(&format!("{prefix}limit/")));
        rows.push(CheckRow::new(
            format!("{prefix}hypothesis"),
            "limsup C^n(D) <= C(D)",
            if self.hypothesis_accepted { 0.0 } else { 1.0 },
            0.0,
            self.hypothesis_accepted,
        ));
        rows
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_layout() {
        assert_eq!(Report::default().to_csv(), "check_id,paper_ref,lhs,rhs,margin,pass\n");
        let one = Report::new(vec![CheckRow::new("a", "x <= y", 1.0, 2.0, true)]);
        assert_eq!(one.to_csv().lines().nth(1).unwrap(), "a,x <= y,1,2,1,true");
        let mixed = Report::new(vec![
            CheckRow::new("b", "f, g", 1.0, 0.0, false),
            CheckRow::new("a", "x", 0.0, 0.0, true),
        ]);
        let csv = mixed.to_csv();
        let lines: Vec<&str> = csv.lines().collect();
        assert!(lines[1].starts_with("a,") && lines[2].starts_with("b,\"f, g\""));
        assert!(!mixed.passed());
        let json: serde_json::Value = serde_json::from_str(&mixed.to_json()).unwrap();
        assert_eq!(json["rows"][0]["check_id"], "a");
    }

    #[test]
    fn json_round_trip_keeps_infinities() {
        let r = Report::new(vec![
            CheckRow::new("a", "x", 1.0, f64::INFINITY, true),
            CheckRow::new("b", "y", f64::NEG_INFINITY, 0.5, true),
        ]);
        let back: Report = serde_json::from_str(&r.to_json()).unwrap();
        assert_eq!(back, r);
        assert!(serde_json::from_str::<Report>(
            r#"{"rows":[{"check_id":"a","paper_ref":"x","lhs":"big","rhs":1,"margin":0,"pass":true}]}"#
        )
        .is_err());
    }
}
