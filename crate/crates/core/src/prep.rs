//! Analysis-ready observations: scaling by total assets, the identity rest,
//! its sign dummy, the ducf interaction and percentile trimming.

use crate::diagnostics::{Code, Diagnostic};
use crate::panel::{self, FirmYearRecord, Panel, PanelError, SchemaMode};
use serde::{Deserialize, Serialize};
use std::fmt;
use std::str::FromStr;
use thiserror::Error;

pub const DEFAULT_TRIM_FRACTION: f64 = 0.01;
pub const DEFAULT_IDENTITY_TOLERANCE: f64 = 1e-6;
pub const MIN_TRIM_OBSERVATIONS: usize = 10;

#[derive(Debug, Error)]
pub enum PrepError {
    #[error("invalid preprocessing configuration: {0}")]
    InvalidConfig(String),
    #[error("scaling base {base} for ({firm_id}, {year}) is not positive")]
    NonpositiveScalingBase { firm_id: String, year: i32, base: f64 },
    #[error("need at least {MIN_TRIM_OBSERVATIONS} observations, have {n}")]
    TooFewObservations { n: usize },
    #[error(transparent)]
    Panel(#[from] PanelError),
}

/// Denominator used to turn money into ratios.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum ScaleBase {
    /// Beginning-of-period total assets (total_assets − ΔTA).
    #[default]
    LaggedTotalAssets,
    /// End-of-period total assets.
    CurrentTotalAssets,
}

impl fmt::Display for ScaleBase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ScaleBase::LaggedTotalAssets => "lagged",
            ScaleBase::CurrentTotalAssets => "current",
        })
    }
}

impl FromStr for ScaleBase {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "lagged" | "lagged_total_assets" => Ok(ScaleBase::LaggedTotalAssets),
            "current" | "current_total_assets" => Ok(ScaleBase::CurrentTotalAssets),
            other => Err(format!("unknown scale base `{other}` (expected lagged or current)")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PrepConfig {
    pub scale_base: ScaleBase,
    pub trim_fraction: f64,
    pub identity_tolerance: f64,
}

impl Default for PrepConfig {
    fn default() -> Self {
        Self {
            scale_base: ScaleBase::default(),
            trim_fraction: DEFAULT_TRIM_FRACTION,
            identity_tolerance: DEFAULT_IDENTITY_TOLERANCE,
        }
    }
}

impl PrepConfig {
    pub fn validate(&self) -> Result<(), PrepError> {
        if !(0.0..0.25).contains(&self.trim_fraction) {
            return Err(PrepError::InvalidConfig(format!(
                "trim fraction {} outside [0, 0.25)",
                self.trim_fraction
            )));
        }
        if !(self.identity_tolerance > 0.0) || !self.identity_tolerance.is_finite() {
            return Err(PrepError::InvalidConfig(format!(
                "identity tolerance {} must be positive",
                self.identity_tolerance
            )));
        }
        Ok(())
    }
}

/// A scaled firm-year ready for regression.
///
/// `inv`, `cf` and `rest` are ratios to the scaling base; `investment`,
/// `cash_flow` and the Δ totals stay in money for the balance-sheet shares.
#[derive(Debug, Clone, PartialEq)]
pub struct Observation {
    pub firm_id: String,
    pub year: i32,
    pub inv: f64,
    pub cf: f64,
    pub rest: f64,
    pub dummy: u8,
    pub ducf: f64,
    pub investment: f64,
    pub cash_flow: f64,
    pub d_total_assets: Option<f64>,
    pub d_total_funds: Option<f64>,
}

impl Observation {
    /// Builds an observation directly from already-scaled values, with
    /// rest, dummy and ducf derived from them.
    pub fn from_scaled(firm_id: &str, year: i32, inv: f64, cf: f64) -> Self {
        let rest = inv - cf;
        let dummy = sign_dummy(rest);
        Self {
            firm_id: firm_id.to_string(),
            year,
            inv,
            cf,
            rest,
            dummy,
            ducf: f64::from(dummy) * cf,
            investment: inv,
            cash_flow: cf,
            d_total_assets: None,
            d_total_funds: None,
        }
    }
}

/// The two routes to the rest disagree by more than the tolerance.
#[derive(Debug, Clone, Copy, PartialEq, Error)]
#[error("identity components sum to {components} but investment − cash flow is {residual} (gap {gap})")]
pub struct IdentityViolation {
    pub components: f64,
    pub residual: f64,
    pub gap: f64,
}

/// The omitted part of the accounting identity, in money.
///
/// With all six components present this is
/// ΔLTD + ΔCapital stock − depreciation − dividends − ΔWorking capital − ΔOFA,
/// checked against investment − cash flow. Without them the identity forces
/// the rest to investment − cash flow. On disagreement the error carries
/// both values; callers use the residual.
pub fn compute_rest(record: &FirmYearRecord, tolerance: f64) -> Result<f64, IdentityViolation> {
    let residual = record.investment - record.cash_flow;
    let Some([d_ltd, d_cs, dep, div, d_wc, d_ofa]) = record.components() else {
        return Ok(residual);
    };
    let components = d_ltd + d_cs - dep - div - d_wc - d_ofa;
    let gap = components - residual;
    let scale = record
        .investment
        .abs()
        .max(record.cash_flow.abs())
        .max(components.abs());
    if gap.abs() <= tolerance * scale {
        Ok(components)
    } else {
        Err(IdentityViolation {
            components,
            residual,
            gap,
        })
    }
}

/// 1 for a strictly positive rest, 0 otherwise (zero included).
pub fn sign_dummy(rest: f64) -> u8 {
    u8::from(rest > 0.0)
}

/// Divides the record's flows by `base`.
///
/// The scaled rest is the residual (investment − cash flow)/base, so
/// inv − cf − rest vanishes up to rounding whatever the component data say.
pub fn scale_observation(record: &FirmYearRecord, base: f64) -> Result<Observation, PrepError> {
    if !(base > 0.0) || !base.is_finite() {
        return Err(PrepError::NonpositiveScalingBase {
            firm_id: record.firm_id.clone(),
            year: record.year,
            base,
        });
    }
    let inv = record.investment / base;
    let cf = record.cash_flow / base;
    let rest = (record.investment - record.cash_flow) / base;
    let dummy = sign_dummy(rest);
    Ok(Observation {
        firm_id: record.firm_id.clone(),
        year: record.year,
        inv,
        cf,
        rest,
        dummy,
        ducf: f64::from(dummy) * cf,
        investment: record.investment,
        cash_flow: record.cash_flow,
        d_total_assets: record.d_total_assets,
        d_total_funds: record.d_total_funds,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RemovalReason {
    TrimmedInv,
    TrimmedCf,
    NonpositiveBase,
    IdentityViolation,
    MissingPriorYear,
}

/// One line of the removal report. `identity_violation` entries, and
/// `missing_prior_year` entries under current-assets scaling, are flagged
/// but stay in the regression sample.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Removal {
    pub reason: RemovalReason,
    pub firm_id: String,
    pub year: i32,
}

impl Removal {
    fn of(reason: RemovalReason, firm_id: &str, year: i32) -> Self {
        Self {
            reason,
            firm_id: firm_id.to_string(),
            year,
        }
    }
}

/// Hyndman-Fan type 7 percentile. Sorts nothing; two selections instead.
fn percentile(values: &mut [f64], p: f64) -> f64 {
    let n = values.len();
    let h = (n - 1) as f64 * p;
    let lo = h.floor() as usize;
    let (_, &mut lo_val, upper) = values.select_nth_unstable_by(lo, f64::total_cmp);
    let frac = h - lo as f64;
    if frac == 0.0 || upper.is_empty() {
        return lo_val;
    }
    let hi_val = upper.iter().copied().fold(f64::INFINITY, f64::min);
    lo_val + frac * (hi_val - lo_val)
}

/// Pooled percentile band [P_f, P_{1−f}] of one variable.
pub fn percentile_band(values: &[f64], fraction: f64) -> (f64, f64) {
    let mut scratch = values.to_vec();
    let low = percentile(&mut scratch, fraction);
    let high = percentile(&mut scratch, 1.0 - fraction);
    (low, high)
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trimmed {
    pub kept: Vec<Observation>,
    pub removed: Vec<Removal>,
}

/// Drops every observation whose inv or cf lies strictly outside its pooled
/// [P_f, P_{1−f}] band. Survivors keep their input order.
pub fn trim_panel(observations: Vec<Observation>, trim_fraction: f64) -> Result<Trimmed, PrepError> {
    if !(0.0..0.25).contains(&trim_fraction) {
        return Err(PrepError::InvalidConfig(format!(
            "trim fraction {trim_fraction} outside [0, 0.25)"
        )));
    }
    if observations.len() < MIN_TRIM_OBSERVATIONS {
        return Err(PrepError::TooFewObservations {
            n: observations.len(),
        });
    }
    if trim_fraction == 0.0 {
        return Ok(Trimmed {
            kept: observations,
            removed: Vec::new(),
        });
    }
    let inv: Vec<f64> = observations.iter().map(|o| o.inv).collect();
    let cf: Vec<f64> = observations.iter().map(|o| o.cf).collect();
    let (inv_lo, inv_hi) = percentile_band(&inv, trim_fraction);
    let (cf_lo, cf_hi) = percentile_band(&cf, trim_fraction);

    let mut kept = Vec::with_capacity(observations.len());
    let mut removed = Vec::new();
    for o in observations {
        if o.inv < inv_lo || o.inv > inv_hi {
            removed.push(Removal::of(RemovalReason::TrimmedInv, &o.firm_id, o.year));
        } else if o.cf < cf_lo || o.cf > cf_hi {
            removed.push(Removal::of(RemovalReason::TrimmedCf, &o.firm_id, o.year));
        } else {
            kept.push(o);
        }
    }
    Ok(Trimmed { kept, removed })
}

/// Everything the preprocessing pipeline produced.
#[derive(Debug, Clone)]
pub struct Prepared {
    pub observations: Vec<Observation>,
    pub removals: Vec<Removal>,
    pub diagnostics: Vec<Diagnostic>,
    /// Flow-mode records entering scaling.
    pub n_records: usize,
}

/// Runs the whole preprocessing chain on a panel: differencing (level
/// panels), ΔTA/ΔTF derivation, the identity check, scaling and trimming.
pub fn prepare(panel: &Panel, config: &PrepConfig) -> Result<Prepared, PrepError> {
    config.validate()?;
    let mut diagnostics = Vec::new();
    let flows = match panel.schema_mode() {
        SchemaMode::Level => {
            let (p, d) = panel::difference_panel(panel)?;
            diagnostics.extend(d);
            p
        }
        SchemaMode::Flow => panel.clone(),
    };
    let (flows, d) = panel::derive_delta_totals(&flows, config.identity_tolerance)?;
    diagnostics.extend(d);

    let mut removals = Vec::new();
    let mut observations = Vec::with_capacity(flows.len());
    for r in flows.records() {
        if let Err(v) = compute_rest(r, config.identity_tolerance) {
            removals.push(Removal::of(RemovalReason::IdentityViolation, &r.firm_id, r.year));
            diagnostics.push(Diagnostic::at_record(
                Code::IdentityViolation,
                &r.firm_id,
                Some(r.year),
                format!("{v}; using investment − cash flow"),
            ));
        }
        let base = match config.scale_base {
            ScaleBase::LaggedTotalAssets => r.lagged_total_assets(),
            ScaleBase::CurrentTotalAssets => Some(r.total_assets),
        };
        if r.d_total_assets.is_none() {
            removals.push(Removal::of(RemovalReason::MissingPriorYear, &r.firm_id, r.year));
        }
        let Some(base) = base else {
            continue;
        };
        match scale_observation(r, base) {
            Ok(o) => observations.push(o),
            Err(e) => {
                removals.push(Removal::of(RemovalReason::NonpositiveBase, &r.firm_id, r.year));
                diagnostics.push(Diagnostic::at_record(
                    Code::NonpositiveBase,
                    &r.firm_id,
                    Some(r.year),
                    e.to_string(),
                ));
            }
        }
    }

    let trimmed = trim_panel(observations, config.trim_fraction)?;
    removals.extend(trimmed.removed);
    Ok(Prepared {
        observations: trimmed.kept,
        removals,
        diagnostics,
        n_records: flows.len(),
    })
}
