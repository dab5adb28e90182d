//! Firm-year panel data model, CSV ingestion and per-firm differencing.

mod csv_io;

pub use csv_io::{
    ingest_csv, read_csv, read_csv_str, write_csv, FLOW_OPTIONAL, FLOW_REQUIRED, LEVEL_OPTIONAL,
    LEVEL_REQUIRED,
};

use crate::diagnostics::{Code, Diagnostic};
use serde::{Deserialize, Serialize};
use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum PanelError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("malformed CSV at row {row}: {message}")]
    Csv { row: u64, message: String },
    #[error("missing required column `{0}`")]
    MissingColumn(String),
    #[error("column `{0}` appears more than once")]
    DuplicateColumn(String),
    #[error("row {row}, column `{column}`: cannot parse {value:?}")]
    ParseError { row: u64, column: String, value: String },
    #[error("duplicate firm-year key ({firm_id}, {year})")]
    DuplicateKey { firm_id: String, year: i32 },
    #[error("panel has no records")]
    EmptyPanel,
    #[error("operation needs a {expected} panel, got {found}")]
    WrongSchema { expected: SchemaMode, found: SchemaMode },
}

impl PanelError {
    pub fn diagnostic(&self) -> Diagnostic {
        match self {
            PanelError::Io { .. } => Diagnostic::new(Code::Io, self.to_string()),
            PanelError::Csv { row, .. } => Diagnostic::new(Code::ParseError, self.to_string()).with_row(*row),
            PanelError::MissingColumn(_) | PanelError::DuplicateColumn(_) => {
                Diagnostic::new(Code::MissingColumn, self.to_string())
            }
            PanelError::ParseError { row, .. } => {
                Diagnostic::new(Code::ParseError, self.to_string()).with_row(*row)
            }
            PanelError::DuplicateKey { firm_id, year } => {
                Diagnostic::at_record(Code::DuplicateKey, firm_id, Some(*year), self.to_string())
            }
            PanelError::EmptyPanel => Diagnostic::new(Code::EmptyPanel, self.to_string()),
            PanelError::WrongSchema { .. } => Diagnostic::new(Code::DataError, self.to_string()),
        }
    }
}

/// Whether the balance-sheet columns hold period flows or end-of-period
/// levels that still need differencing.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum SchemaMode {
    #[default]
    Flow,
    Level,
}

impl fmt::Display for SchemaMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SchemaMode::Flow => "flow",
            SchemaMode::Level => "level",
        })
    }
}

impl FromStr for SchemaMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "flow" => Ok(SchemaMode::Flow),
            "level" => Ok(SchemaMode::Level),
            other => Err(format!("unknown schema `{other}` (expected flow or level)")),
        }
    }
}

/// End-of-period balances carried by level-mode records.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct BalanceLevels {
    pub ltd: Option<f64>,
    pub capital_stock: Option<f64>,
    pub working_capital: Option<f64>,
    pub ofa: Option<f64>,
    pub total_funds: Option<f64>,
}

/// One firm-year. Monetary values are in currency units.
///
/// `investment` is taken as supplied: gross capital expenditure or the
/// increase in long-term assets, whichever the source uses.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct FirmYearRecord {
    pub firm_id: String,
    pub year: i32,
    pub total_assets: f64,
    pub investment: f64,
    pub cash_flow: f64,
    pub d_ltd: Option<f64>,
    pub d_capital_stock: Option<f64>,
    pub depreciation: Option<f64>,
    pub dividends: Option<f64>,
    pub d_working_capital: Option<f64>,
    pub d_ofa: Option<f64>,
    pub d_total_assets: Option<f64>,
    pub d_total_funds: Option<f64>,
    pub levels: Option<BalanceLevels>,
}

impl FirmYearRecord {
    pub fn new(firm_id: impl Into<String>, year: i32, total_assets: f64, investment: f64, cash_flow: f64) -> Self {
        Self {
            firm_id: firm_id.into(),
            year,
            total_assets,
            investment,
            cash_flow,
            ..Default::default()
        }
    }

    /// The six omitted identity components in the order
    /// (ΔLTD, ΔCapital stock, depreciation, dividends, ΔWorking capital, ΔOFA),
    /// or `None` unless every one is present.
    pub fn components(&self) -> Option<[f64; 6]> {
        Some([
            self.d_ltd?,
            self.d_capital_stock?,
            self.depreciation?,
            self.dividends?,
            self.d_working_capital?,
            self.d_ofa?,
        ])
    }

    /// Total assets at the start of the period, when recoverable.
    pub fn lagged_total_assets(&self) -> Option<f64> {
        self.d_total_assets.map(|d| self.total_assets - d)
    }

    /// Multiplies every monetary field by `factor`.
    pub fn scale_money(&self, factor: f64) -> Self {
        let s = |v: Option<f64>| v.map(|x| x * factor);
        Self {
            firm_id: self.firm_id.clone(),
            year: self.year,
            total_assets: self.total_assets * factor,
            investment: self.investment * factor,
            cash_flow: self.cash_flow * factor,
            d_ltd: s(self.d_ltd),
            d_capital_stock: s(self.d_capital_stock),
            depreciation: s(self.depreciation),
            dividends: s(self.dividends),
            d_working_capital: s(self.d_working_capital),
            d_ofa: s(self.d_ofa),
            d_total_assets: s(self.d_total_assets),
            d_total_funds: s(self.d_total_funds),
            levels: self.levels.map(|l| BalanceLevels {
                ltd: s(l.ltd),
                capital_stock: s(l.capital_stock),
                working_capital: s(l.working_capital),
                ofa: s(l.ofa),
                total_funds: s(l.total_funds),
            }),
        }
    }

    fn key(&self) -> (&str, i32) {
        (&self.firm_id, self.year)
    }
}

/// An immutable, non-empty set of firm-year records sorted by
/// (firm_id, year).
#[derive(Debug, Clone, PartialEq)]
pub struct Panel {
    records: Vec<FirmYearRecord>,
    provenance: String,
    schema_mode: SchemaMode,
}

impl Panel {
    pub fn new(
        mut records: Vec<FirmYearRecord>,
        provenance: impl Into<String>,
        schema_mode: SchemaMode,
    ) -> Result<Self, PanelError> {
        if records.is_empty() {
            return Err(PanelError::EmptyPanel);
        }
        records.sort_by(|a, b| a.key().cmp(&b.key()));
        if let Some(w) = records.windows(2).find(|w| w[0].key() == w[1].key()) {
            return Err(PanelError::DuplicateKey {
                firm_id: w[1].firm_id.clone(),
                year: w[1].year,
            });
        }
        Ok(Self {
            records,
            provenance: provenance.into(),
            schema_mode,
        })
    }

    pub fn records(&self) -> &[FirmYearRecord] {
        &self.records
    }

    pub fn into_records(self) -> Vec<FirmYearRecord> {
        self.records
    }

    pub fn provenance(&self) -> &str {
        &self.provenance
    }

    pub fn schema_mode(&self) -> SchemaMode {
        self.schema_mode
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn with_provenance(mut self, provenance: impl Into<String>) -> Self {
        self.provenance = provenance.into();
        self
    }

    pub fn scale_money(&self, factor: f64) -> Panel {
        Panel {
            records: self.records.iter().map(|r| r.scale_money(factor)).collect(),
            provenance: self.provenance.clone(),
            schema_mode: self.schema_mode,
        }
    }

    /// Iterates over maximal runs of records belonging to one firm.
    pub fn firms(&self) -> impl Iterator<Item = &[FirmYearRecord]> {
        self.records.chunk_by(|a, b| a.firm_id == b.firm_id)
    }
}

fn diff(now: Option<f64>, before: Option<f64>) -> Option<f64> {
    Some(now? - before?)
}

/// Turns a level-mode panel into a flow-mode one.
///
/// Each Δ field is the change from the previous calendar year of the same
/// firm. A firm's first year, and any year following a gap, has no
/// predecessor and is dropped with a warning.
pub fn difference_panel(panel: &Panel) -> Result<(Panel, Vec<Diagnostic>), PanelError> {
    if panel.schema_mode != SchemaMode::Level {
        return Err(PanelError::WrongSchema {
            expected: SchemaMode::Level,
            found: panel.schema_mode,
        });
    }
    let mut out = Vec::with_capacity(panel.len());
    let mut diags = Vec::new();
    for firm in panel.firms() {
        if firm.len() == 1 {
            diags.push(Diagnostic::at_record(
                Code::SingleYearFirm,
                &firm[0].firm_id,
                Some(firm[0].year),
                "firm has a single year and cannot be differenced",
            ));
            continue;
        }
        for pair in firm.windows(2) {
            let (prev, cur) = (&pair[0], &pair[1]);
            if cur.year != prev.year + 1 {
                diags.push(Diagnostic::at_record(
                    Code::NonConsecutiveYears,
                    &cur.firm_id,
                    Some(cur.year),
                    format!("no record for {}; year {} starts a new run", cur.year - 1, cur.year),
                ));
                continue;
            }
            let lv_cur = cur.levels.unwrap_or_default();
            let lv_prev = prev.levels.unwrap_or_default();
            out.push(FirmYearRecord {
                firm_id: cur.firm_id.clone(),
                year: cur.year,
                total_assets: cur.total_assets,
                investment: cur.investment,
                cash_flow: cur.cash_flow,
                d_ltd: diff(lv_cur.ltd, lv_prev.ltd),
                d_capital_stock: diff(lv_cur.capital_stock, lv_prev.capital_stock),
                depreciation: cur.depreciation,
                dividends: cur.dividends,
                d_working_capital: diff(lv_cur.working_capital, lv_prev.working_capital),
                d_ofa: diff(lv_cur.ofa, lv_prev.ofa),
                d_total_assets: Some(cur.total_assets - prev.total_assets),
                d_total_funds: diff(lv_cur.total_funds, lv_prev.total_funds),
                levels: None,
            });
        }
    }
    let panel = Panel::new(out, panel.provenance.clone(), SchemaMode::Flow)?;
    Ok((panel, diags))
}

/// Fills ΔTotal assets and ΔTotal funds on a flow-mode panel.
///
/// ΔTA is taken from the supplied column, else from the previous year's
/// total assets. ΔTF defaults to ΔTA; a supplied ΔTF that differs from ΔTA
/// by more than `tolerance` (relative) is kept but flagged. Records whose
/// ΔTA cannot be recovered are flagged `missing_prior_year`.
pub fn derive_delta_totals(panel: &Panel, tolerance: f64) -> Result<(Panel, Vec<Diagnostic>), PanelError> {
    if panel.schema_mode != SchemaMode::Flow {
        return Err(PanelError::WrongSchema {
            expected: SchemaMode::Flow,
            found: panel.schema_mode,
        });
    }
    let mut records = panel.records.clone();
    let mut diags = Vec::new();
    for i in 0..records.len() {
        if records[i].d_total_assets.is_none() && i > 0 {
            let prev = &records[i - 1];
            if prev.firm_id == records[i].firm_id && prev.year + 1 == records[i].year {
                records[i].d_total_assets = Some(records[i].total_assets - prev.total_assets);
            }
        }
        let r = &mut records[i];
        match (r.d_total_assets, r.d_total_funds) {
            (None, _) => diags.push(Diagnostic::at_record(
                Code::MissingPriorYear,
                &r.firm_id,
                Some(r.year),
                "prior-year total assets unavailable; excluded from lagged scaling and shares",
            )),
            (Some(dta), None) => r.d_total_funds = Some(dta),
            (Some(dta), Some(dtf)) => {
                if !totals_agree(dta, dtf, tolerance) {
                    diags.push(Diagnostic::at_record(
                        Code::IdentityViolation,
                        &r.firm_id,
                        Some(r.year),
                        format!("ΔTotal funds {dtf} differs from ΔTotal assets {dta}"),
                    ));
                }
            }
        }
    }
    Ok((
        Panel {
            records,
            provenance: panel.provenance.clone(),
            schema_mode: SchemaMode::Flow,
        },
        diags,
    ))
}

pub(crate) fn totals_agree(a: f64, b: f64, tolerance: f64) -> bool {
    (a - b).abs() <= tolerance * a.abs().max(b.abs())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn level(firm: &str, year: i32, ta: f64) -> FirmYearRecord {
        FirmYearRecord {
            levels: Some(BalanceLevels::default()),
            ..FirmYearRecord::new(firm, year, ta, 1.0, 1.0)
        }
    }

    #[test]
    fn new_sorts_by_firm_then_year() {
        let p = Panel::new(
            vec![
                FirmYearRecord::new("B", 2001, 1.0, 0.0, 0.0),
                FirmYearRecord::new("A", 2002, 1.0, 0.0, 0.0),
                FirmYearRecord::new("A", 2001, 1.0, 0.0, 0.0),
            ],
            "t",
            SchemaMode::Flow,
        )
        .unwrap();
        let keys: Vec<_> = p.records().iter().map(|r| (r.firm_id.as_str(), r.year)).collect();
        assert_eq!(keys, [("A", 2001), ("A", 2002), ("B", 2001)]);
    }

    #[test]
    fn duplicate_keys_rejected() {
        let err = Panel::new(
            vec![
                FirmYearRecord::new("F1", 2001, 1.0, 0.0, 0.0),
                FirmYearRecord::new("F1", 2001, 2.0, 0.0, 0.0),
            ],
            "t",
            SchemaMode::Flow,
        )
        .unwrap_err();
        assert!(matches!(err, PanelError::DuplicateKey { ref firm_id, year: 2001 } if firm_id == "F1"));
    }

    #[test]
    fn empty_panel_rejected() {
        assert!(matches!(Panel::new(vec![], "t", SchemaMode::Flow), Err(PanelError::EmptyPanel)));
    }

    #[test]
    fn differencing_three_years() {
        let p = Panel::new(
            vec![level("F", 2000, 100.0), level("F", 2001, 110.0), level("F", 2002, 125.0)],
            "t",
            SchemaMode::Level,
        )
        .unwrap();
        let (d, diags) = difference_panel(&p).unwrap();
        assert!(diags.is_empty());
        assert_eq!(d.schema_mode(), SchemaMode::Flow);
        let dta: Vec<_> = d.records().iter().map(|r| r.d_total_assets.unwrap()).collect();
        assert_eq!(dta, [10.0, 15.0]);
        assert_eq!(d.records()[0].year, 2001);
    }

    #[test]
    fn single_year_firm_dropped_with_warning() {
        let p = Panel::new(
            vec![level("A", 2000, 1.0), level("A", 2001, 2.0), level("B", 2000, 5.0)],
            "t",
            SchemaMode::Level,
        )
        .unwrap();
        let (d, diags) = difference_panel(&p).unwrap();
        assert_eq!(d.len(), 1);
        assert_eq!(diags.len(), 1);
        assert_eq!(diags[0].code, Code::SingleYearFirm);
        assert_eq!(diags[0].firm_id.as_deref(), Some("B"));
    }

    #[test]
    fn year_gap_breaks_the_run() {
        let p = Panel::new(
            vec![level("F", 2001, 1.0), level("F", 2003, 3.0)],
            "t",
            SchemaMode::Level,
        )
        .unwrap();
        let err = difference_panel(&p).unwrap_err();
        // Nothing survives, so the differenced panel is empty.
        assert!(matches!(err, PanelError::EmptyPanel));

        let p = Panel::new(
            vec![level("F", 2001, 1.0), level("F", 2003, 3.0), level("F", 2004, 7.0)],
            "t",
            SchemaMode::Level,
        )
        .unwrap();
        let (d, diags) = difference_panel(&p).unwrap();
        assert_eq!(d.len(), 1);
        assert_eq!(d.records()[0].d_total_assets, Some(4.0));
        assert_eq!(diags[0].code, Code::NonConsecutiveYears);
        assert_eq!(diags[0].year, Some(2003));
    }

    #[test]
    fn level_components_are_differenced() {
        let mut a = level("F", 2000, 100.0);
        a.levels = Some(BalanceLevels {
            ltd: Some(40.0),
            capital_stock: Some(30.0),
            working_capital: Some(10.0),
            ofa: Some(5.0),
            total_funds: Some(100.0),
        });
        let mut b = level("F", 2001, 112.0);
        b.depreciation = Some(2.0);
        b.dividends = Some(1.0);
        b.levels = Some(BalanceLevels {
            ltd: Some(45.0),
            capital_stock: Some(31.0),
            working_capital: Some(12.0),
            ofa: Some(4.0),
            total_funds: Some(112.0),
        });
        let (d, _) = difference_panel(&Panel::new(vec![a, b], "t", SchemaMode::Level).unwrap()).unwrap();
        let r = &d.records()[0];
        assert_eq!(r.components(), Some([5.0, 1.0, 2.0, 1.0, 2.0, -1.0]));
        assert_eq!(r.d_total_funds, Some(12.0));
    }

    #[test]
    fn difference_requires_level_mode() {
        let p = Panel::new(vec![FirmYearRecord::new("F", 1, 1.0, 0.0, 0.0)], "t", SchemaMode::Flow).unwrap();
        assert!(matches!(difference_panel(&p), Err(PanelError::WrongSchema { .. })));
    }

    #[test]
    fn delta_totals_from_prior_year() {
        let p = Panel::new(
            vec![
                FirmYearRecord::new("F", 2000, 100.0, 1.0, 1.0),
                FirmYearRecord::new("F", 2001, 110.0, 1.0, 1.0),
            ],
            "t",
            SchemaMode::Flow,
        )
        .unwrap();
        let (d, diags) = derive_delta_totals(&p, 1e-6).unwrap();
        assert_eq!(d.records()[1].d_total_assets, Some(10.0));
        assert_eq!(d.records()[1].d_total_funds, Some(10.0));
        assert_eq!(d.records()[0].d_total_assets, None);
        assert_eq!(diags.len(), 1);
        assert_eq!(diags[0].code, Code::MissingPriorYear);
    }

    fn with_totals(dta: f64, dtf: Option<f64>) -> Panel {
        let mut r = FirmYearRecord::new("F", 2001, 110.0, 3.0, 2.0);
        r.d_total_assets = Some(dta);
        r.d_total_funds = dtf;
        Panel::new(vec![r], "t", SchemaMode::Flow).unwrap()
    }

    #[test]
    fn funds_default_to_assets() {
        let (d, diags) = derive_delta_totals(&with_totals(10.0, None), 1e-6).unwrap();
        assert_eq!(d.records()[0].d_total_funds, Some(10.0));
        assert!(diags.is_empty());
    }

    #[test]
    fn funds_within_tolerance_accepted() {
        let (_, diags) = derive_delta_totals(&with_totals(10.0, Some(10.000_000_1)), 1e-6).unwrap();
        assert!(diags.is_empty());
    }

    #[test]
    fn funds_mismatch_flagged() {
        let (d, diags) = derive_delta_totals(&with_totals(10.0, Some(12.0)), 1e-6).unwrap();
        assert_eq!(diags.len(), 1);
        assert_eq!(diags[0].code, Code::IdentityViolation);
        assert_eq!(d.records()[0].d_total_funds, Some(12.0));
    }

    #[test]
    fn derive_leaves_flows_untouched() {
        let p = with_totals(10.0, None);
        let (d, _) = derive_delta_totals(&p, 1e-6).unwrap();
        assert_eq!(d.records()[0].investment, p.records()[0].investment);
        assert_eq!(d.records()[0].cash_flow, p.records()[0].cash_flow);
    }
}
