//! Report documents and Table-style rendering.
//!
//! Fractions are stored as fractions and only turned into percentages
//! here. Coefficients, t statistics and percentages use two decimals with
//! `.` as the separator; coefficients significant at 1% carry `^a`.

use crate::diag::AsiDiagnostic;
use crate::floats;
use crate::linmodel::{DegenerateSign, Regressor};
use serde::{Deserialize, Serialize};
use std::fmt;
use std::str::FromStr;
use thiserror::Error;

pub const SCHEMA_VERSION: u32 = 1;
pub const MARKER: &str = "^a";
pub const LEGEND: &str = "^a coefficient significant at the 1% level (two-sided t test).";

#[derive(Debug, Error)]
pub enum ReportError {
    #[error("malformed report JSON: {0}")]
    Json(#[from] serde_json::Error),
    #[error("unsupported report schema_version {0} (this build reads {SCHEMA_VERSION})")]
    UnsupportedVersion(u32),
}

/// Cross-panel averages; each ignores panels where the value is absent.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct TotalMean {
    #[serde(with = "floats::option")]
    pub delta_power: Option<f64>,
    #[serde(with = "floats::option")]
    pub share_inv_dta: Option<f64>,
    #[serde(with = "floats::option")]
    pub share_cf_dtf: Option<f64>,
}

fn mean(values: impl Iterator<Item = Option<f64>>) -> Option<f64> {
    let present: Vec<f64> = values.flatten().collect();
    if present.is_empty() {
        return None;
    }
    Some(crate::linmodel::sum::sum(present.iter().copied()) / present.len() as f64)
}

impl TotalMean {
    pub fn of(diagnostics: &[AsiDiagnostic]) -> Self {
        Self {
            delta_power: mean(diagnostics.iter().map(|d| d.delta_power)),
            share_inv_dta: mean(diagnostics.iter().map(|d| d.share_inv_dta)),
            share_cf_dtf: mean(diagnostics.iter().map(|d| d.share_cf_dtf)),
        }
    }
}

/// The JSON document written by `diagnose` and read by `table`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub schema_version: u32,
    pub diagnostics: Vec<AsiDiagnostic>,
    pub total_mean: TotalMean,
}

impl Report {
    pub fn new(diagnostics: Vec<AsiDiagnostic>) -> Self {
        Self {
            schema_version: SCHEMA_VERSION,
            total_mean: TotalMean::of(&diagnostics),
            diagnostics,
        }
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report values always serialise");
        s.push('\n');
        s
    }
}

pub fn parse_report(text: &str) -> Result<Report, ReportError> {
    #[derive(Deserialize)]
    struct Version {
        schema_version: u32,
    }
    let v: Version = serde_json::from_str(text)?;
    if v.schema_version != SCHEMA_VERSION {
        return Err(ReportError::UnsupportedVersion(v.schema_version));
    }
    Ok(serde_json::from_str(text)?)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct SigFlags {
    pub restricted_cf: bool,
    pub unrestricted_cf: bool,
    pub ducf: bool,
}

/// One panel's line in the table, values unformatted.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Table1Row {
    pub panel_label: String,
    #[serde(with = "floats::option")]
    pub restricted_cf_coef: Option<f64>,
    #[serde(with = "floats::option")]
    pub restricted_cf_t: Option<f64>,
    #[serde(with = "floats::option")]
    pub unrestricted_cf_coef: Option<f64>,
    #[serde(with = "floats::option")]
    pub unrestricted_cf_t: Option<f64>,
    #[serde(with = "floats::option")]
    pub ducf_coef: Option<f64>,
    #[serde(with = "floats::option")]
    pub ducf_t: Option<f64>,
    #[serde(with = "floats::scalar")]
    pub f_restricted: f64,
    #[serde(with = "floats::option")]
    pub f_unrestricted: Option<f64>,
    #[serde(with = "floats::scalar")]
    pub r2_restricted: f64,
    #[serde(with = "floats::option")]
    pub r2_unrestricted: Option<f64>,
    #[serde(with = "floats::scalar")]
    pub rss_restricted: f64,
    #[serde(with = "floats::option")]
    pub rss_unrestricted: Option<f64>,
    #[serde(with = "floats::option")]
    pub f_if: Option<f64>,
    #[serde(with = "floats::option")]
    pub f_if_pvalue: Option<f64>,
    #[serde(with = "floats::option")]
    pub delta_power: Option<f64>,
    #[serde(with = "floats::option")]
    pub share_inv_dta: Option<f64>,
    #[serde(with = "floats::option")]
    pub share_cf_dtf: Option<f64>,
    pub sig_flags: SigFlags,
    pub degenerate: Option<DegenerateSign>,
}

impl Table1Row {
    pub fn from_diagnostic(d: &AsiDiagnostic) -> Self {
        let r = &d.restricted;
        let u = d.unrestricted.as_ref();
        Self {
            panel_label: d.label.clone(),
            restricted_cf_coef: r.coefficient(Regressor::Cf),
            restricted_cf_t: r.t_stat(Regressor::Cf),
            unrestricted_cf_coef: u.and_then(|u| u.coefficient(Regressor::Cf)),
            unrestricted_cf_t: u.and_then(|u| u.t_stat(Regressor::Cf)),
            ducf_coef: u.and_then(|u| u.coefficient(Regressor::Ducf)),
            ducf_t: u.and_then(|u| u.t_stat(Regressor::Ducf)),
            f_restricted: r.overall_f,
            f_unrestricted: u.map(|u| u.overall_f),
            r2_restricted: r.r2,
            r2_unrestricted: u.map(|u| u.r2),
            rss_restricted: r.rss,
            rss_unrestricted: u.map(|u| u.rss),
            f_if: d.f_if,
            f_if_pvalue: d.f_if_pvalue,
            delta_power: d.delta_power,
            share_inv_dta: d.share_inv_dta,
            share_cf_dtf: d.share_cf_dtf,
            sig_flags: SigFlags {
                restricted_cf: r.is_significant(Regressor::Cf),
                unrestricted_cf: u.is_some_and(|u| u.is_significant(Regressor::Cf)),
                ducf: u.is_some_and(|u| u.is_significant(Regressor::Ducf)),
            },
            degenerate: d.degenerate_reason.or(if d.degenerate {
                Some(DegenerateSign::AllNonpositive)
            } else {
                None
            }),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Format {
    #[default]
    Text,
    Csv,
    Json,
    Markdown,
}

impl fmt::Display for Format {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Format::Text => "text",
            Format::Csv => "csv",
            Format::Json => "json",
            Format::Markdown => "markdown",
        })
    }
}

impl FromStr for Format {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "text" => Ok(Format::Text),
            "csv" => Ok(Format::Csv),
            "json" => Ok(Format::Json),
            "markdown" | "md" => Ok(Format::Markdown),
            other => Err(format!("unknown format `{other}`")),
        }
    }
}

const HEADERS: [&str; 18] = [
    "Panel",
    "cf (R)",
    "t",
    "cf (U)",
    "t",
    "ducf",
    "t",
    "F (R)",
    "F (U)",
    "R2 (R) %",
    "R2 (U) %",
    "RSS (R)",
    "RSS (U)",
    "F_IF",
    "p(F_IF)",
    "Incr. fit %",
    "%inv/dTA",
    "%cf/dTF",
];

const NA: &str = "n/a";

fn fixed(v: f64) -> String {
    format!("{v:.2}")
}

fn percent(v: f64) -> String {
    format!("{:.2}%", v * 100.0)
}

fn coef(v: Option<f64>, significant: bool) -> Option<String> {
    v.map(|v| if significant { format!("{}{MARKER}", fixed(v)) } else { fixed(v) })
}

/// Cells of a row, with `DEGENERATE(sign)` wherever only the unrestricted
/// model could have supplied a value.
fn row_cells(row: &Table1Row) -> Vec<String> {
    let gap = row
        .degenerate
        .map(|s| format!("DEGENERATE({s})"))
        .unwrap_or_else(|| NA.to_string());
    let u = |v: Option<String>| v.unwrap_or_else(|| gap.clone());
    let plain = |v: Option<String>| v.unwrap_or_else(|| NA.to_string());
    let flags = row.sig_flags;
    vec![
        row.panel_label.clone(),
        plain(coef(row.restricted_cf_coef, flags.restricted_cf)),
        plain(row.restricted_cf_t.map(fixed)),
        u(coef(row.unrestricted_cf_coef, flags.unrestricted_cf)),
        u(row.unrestricted_cf_t.map(fixed)),
        u(coef(row.ducf_coef, flags.ducf)),
        u(row.ducf_t.map(fixed)),
        fixed(row.f_restricted),
        u(row.f_unrestricted.map(fixed)),
        percent(row.r2_restricted),
        u(row.r2_unrestricted.map(percent)),
        format!("{:.4}", row.rss_restricted),
        u(row.rss_unrestricted.map(|v| format!("{v:.4}"))),
        u(row.f_if.map(fixed)),
        u(row.f_if_pvalue.map(|p| format!("{p:.2e}"))),
        u(row.delta_power.map(percent)),
        plain(row.share_inv_dta.map(percent)),
        plain(row.share_cf_dtf.map(percent)),
    ]
}

fn mean_cells(mean: &TotalMean) -> Vec<String> {
    let mut cells = vec![String::new(); HEADERS.len()];
    cells[0] = "Total mean".to_string();
    let p = |v: Option<f64>| v.map(percent).unwrap_or_else(|| NA.to_string());
    cells[15] = p(mean.delta_power);
    cells[16] = p(mean.share_inv_dta);
    cells[17] = p(mean.share_cf_dtf);
    cells
}

fn grid(diagnostics: &[AsiDiagnostic]) -> Vec<Vec<String>> {
    let mut rows: Vec<Vec<String>> = diagnostics
        .iter()
        .map(|d| row_cells(&Table1Row::from_diagnostic(d)))
        .collect();
    if !diagnostics.is_empty() {
        rows.push(mean_cells(&TotalMean::of(diagnostics)));
    }
    rows
}

fn render_text(rows: &[Vec<String>]) -> String {
    let mut widths: Vec<usize> = HEADERS.iter().map(|h| h.chars().count()).collect();
    for row in rows {
        for (w, c) in widths.iter_mut().zip(row) {
            *w = (*w).max(c.chars().count());
        }
    }
    let line = |cells: &mut dyn Iterator<Item = &str>| {
        let parts: Vec<String> = cells
            .zip(&widths)
            .enumerate()
            .map(|(i, (c, &w))| if i == 0 { format!("{c:<w$}") } else { format!("{c:>w$}") })
            .collect();
        let mut s = parts.join("  ");
        s.truncate(s.trim_end().len());
        s.push('\n');
        s
    };
    let mut out = line(&mut HEADERS.iter().copied());
    let total: usize = widths.iter().sum::<usize>() + 2 * (widths.len() - 1);
    out.push_str(&"-".repeat(total));
    out.push('\n');
    for row in rows {
        out.push_str(&line(&mut row.iter().map(String::as_str)));
    }
    out.push('\n');
    out.push_str(LEGEND);
    out.push('\n');
    out
}

fn render_markdown(rows: &[Vec<String>]) -> String {
    let esc = |c: &str| c.replace('|', "\\|");
    let mut out = format!("| {} |\n", HEADERS.join(" | "));
    out.push('|');
    for i in 0..HEADERS.len() {
        out.push_str(if i == 0 { " :--- |" } else { " ---: |" });
    }
    out.push('\n');
    for row in rows {
        let cells: Vec<String> = row.iter().map(|c| esc(c)).collect();
        out.push_str(&format!("| {} |\n", cells.join(" | ")));
    }
    out.push('\n');
    out.push_str(LEGEND);
    out.push('\n');
    out
}

fn render_csv(rows: &[Vec<String>]) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(HEADERS).expect("in-memory write");
    for row in rows {
        w.write_record(row).expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("cells are UTF-8")
}

/// Renders one block per panel plus the Total-mean row.
pub fn render_table(diagnostics: &[AsiDiagnostic], format: Format) -> String {
    match format {
        Format::Json => Report::new(diagnostics.to_vec()).to_json(),
        Format::Text => render_text(&grid(diagnostics)),
        Format::Markdown => render_markdown(&grid(diagnostics)),
        Format::Csv => render_csv(&grid(diagnostics)),
    }
}
