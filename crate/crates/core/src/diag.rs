//! Restricted vs. unrestricted comparison: incremental fit, explanatory
//! power attributable to the rest's sign, and balance-sheet shares.

use crate::diagnostics::{Code, Diagnostic};
use crate::floats;
use crate::linmodel::{self, dist, DegenerateSign, DesignSpec, FitError, RegressionResult, Regressor};
use crate::panel::Panel;
use crate::prep::{self, Observation, PrepConfig, PrepError, Removal};
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Parameters added by the interaction term.
pub const ADDED_PARAMETERS: usize = 1;
/// Parameters of the unrestricted model (a, b₁, b₂).
pub const UNRESTRICTED_PARAMETERS: usize = 3;
/// Conventional levels tried for H₁, smallest first.
pub const H1_LEVELS: [f64; 3] = [0.01, 0.05, 0.10];

/// Relative slack when comparing the two residual sums of squares, for the
/// rounding noise of an interaction that explains nothing.
const NESTING_SLACK: f64 = 1e-12;

#[derive(Debug, Error)]
pub enum DiagError {
    #[error("preprocessing: {0}")]
    Prep(#[from] PrepError),
    #[error("restricted fit: {0}")]
    Restricted(#[source] FitError),
    #[error("unrestricted fit: {0}")]
    Unrestricted(#[source] FitError),
    #[error("models are not nested: RSS_R = {rss_r} < RSS_U = {rss_u}")]
    InvalidNesting { rss_r: f64, rss_u: f64 },
    #[error("statistic outside its domain: {0}")]
    Domain(String),
    #[error("zero denominator in {0}")]
    ZeroDenominator(&'static str),
    #[error("incremental F p-value: {0}")]
    Distribution(#[from] dist::DistError),
}

impl DiagError {
    pub fn is_empty_panel(&self) -> bool {
        matches!(self, DiagError::Prep(PrepError::Panel(crate::panel::PanelError::EmptyPanel)))
    }
}

/// Paired fits and the statistics derived from them.
///
/// Fractions stay fractions here (0.9373, not 93.73); formatting belongs to
/// the report layer.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AsiDiagnostic {
    pub label: String,
    pub prep: PrepConfig,
    pub n_records: usize,
    pub n_removed: usize,
    pub restricted: RegressionResult,
    pub unrestricted: Option<RegressionResult>,
    pub m: usize,
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
    pub h1_rejected_at: Option<f64>,
    pub degenerate: bool,
    pub degenerate_reason: Option<DegenerateSign>,
}

impl AsiDiagnostic {
    pub fn n_observations(&self) -> usize {
        self.restricted.n
    }
}

/// inv on {intercept, cf}.
pub fn run_restricted(observations: &[Observation]) -> Result<RegressionResult, FitError> {
    if observations.len() < 3 {
        return Err(FitError::TooFewObservations {
            n: observations.len(),
            k: 2,
        });
    }
    linmodel::ols_fit(observations, &DesignSpec::restricted())
}

/// inv on {intercept, cf, ducf}.
pub fn run_unrestricted(observations: &[Observation]) -> Result<RegressionResult, FitError> {
    linmodel::ols_fit(observations, &DesignSpec::unrestricted())
}

/// F_IF = ((RSS_R − RSS_U)/m) / (RSS_U/(n−k)), referred to F(m, n−k).
pub fn incremental_f(rss_r: f64, rss_u: f64, m: usize, n: usize, k: usize) -> Result<f64, DiagError> {
    if m == 0 || n <= k {
        return Err(DiagError::Domain(format!("need m >= 1 and n > k (m={m}, n={n}, k={k})")));
    }
    if !(rss_u > 0.0) || !rss_r.is_finite() || !rss_u.is_finite() {
        return Err(DiagError::Domain(format!("RSS_U must be positive and finite, got {rss_u}")));
    }
    let gain = rss_r - rss_u;
    if gain < 0.0 {
        if -gain <= NESTING_SLACK * rss_u {
            return Ok(0.0);
        }
        return Err(DiagError::InvalidNesting { rss_r, rss_u });
    }
    Ok((gain / m as f64) / (rss_u / (n - k) as f64))
}

/// Upper-tail probability of F_IF under F(m, n−k).
pub fn incremental_f_pvalue(f_if: f64, m: usize, n: usize, k: usize) -> Result<f64, DiagError> {
    Ok(dist::f_sf(f_if, m as f64, (n - k) as f64)?)
}

/// (R²_U − R²_R) / R²_U: the share of the unrestricted model's explained
/// variance owed to the interaction.
pub fn delta_explanatory_power(r2_r: f64, r2_u: f64) -> Result<f64, DiagError> {
    if !(r2_u > 0.0 && r2_u <= 1.0) {
        return Err(DiagError::Domain(format!("R²_U = {r2_u} outside (0, 1]")));
    }
    if !(r2_r >= 0.0 && r2_r <= r2_u) {
        return Err(DiagError::Domain(format!("R²_R = {r2_r} outside [0, R²_U = {r2_u}]")));
    }
    Ok((r2_u - r2_r) / r2_u)
}

/// Aggregate ratios Σ investment / Σ ΔTA and Σ cash flow / Σ ΔTF over the
/// observations that carry the totals.
pub fn decomposition_shares(observations: &[Observation]) -> Result<(f64, f64), DiagError> {
    let mut inv = linmodel::sum::CompensatedSum::new();
    let mut dta = linmodel::sum::CompensatedSum::new();
    let mut cf = linmodel::sum::CompensatedSum::new();
    let mut dtf = linmodel::sum::CompensatedSum::new();
    let (mut has_dta, mut has_dtf) = (false, false);
    for o in observations {
        if let Some(d) = o.d_total_assets {
            inv.add(o.investment);
            dta.add(d);
            has_dta = true;
        }
        if let Some(d) = o.d_total_funds {
            cf.add(o.cash_flow);
            dtf.add(d);
            has_dtf = true;
        }
    }
    if !has_dta || dta.value() == 0.0 {
        return Err(DiagError::ZeroDenominator("Σ ΔTotal assets"));
    }
    if !has_dtf || dtf.value() == 0.0 {
        return Err(DiagError::ZeroDenominator("Σ ΔTotal funds"));
    }
    Ok((inv.value() / dta.value(), cf.value() / dtf.value()))
}

/// Smallest level in [`H1_LEVELS`] at which b₂ = 0 is rejected.
pub fn h1_rejected_at(p_value: f64) -> Option<f64> {
    H1_LEVELS.iter().copied().find(|&level| p_value < level)
}

/// A diagnostic together with the preprocessing record behind it.
#[derive(Debug, Clone)]
pub struct Diagnosis {
    pub diagnostic: AsiDiagnostic,
    pub removals: Vec<Removal>,
    pub warnings: Vec<Diagnostic>,
}

/// Preprocesses `panel`, fits both models and derives every statistic.
///
/// A degenerate sign dummy is not an error: the result carries the
/// restricted fit, `degenerate = true` and the dominant sign.
pub fn diagnose(panel: &Panel, config: &PrepConfig) -> Result<AsiDiagnostic, DiagError> {
    diagnose_detailed(panel, config).map(|d| d.diagnostic)
}

pub fn diagnose_detailed(panel: &Panel, config: &PrepConfig) -> Result<Diagnosis, DiagError> {
    let prepared = prep::prepare(panel, config)?;
    let mut warnings = prepared.diagnostics;
    let obs = &prepared.observations;

    let restricted = run_restricted(obs).map_err(DiagError::Restricted)?;

    let (share_inv_dta, share_cf_dtf) = match decomposition_shares(obs) {
        Ok((a, b)) => (Some(a), Some(b)),
        Err(e) => {
            warnings.push(Diagnostic::new(Code::ZeroDenominator, e.to_string()));
            (None, None)
        }
    };

    let mut diagnostic = AsiDiagnostic {
        label: panel.provenance().to_string(),
        prep: *config,
        n_records: prepared.n_records,
        n_removed: prepared.n_records - obs.len(),
        restricted,
        unrestricted: None,
        m: ADDED_PARAMETERS,
        f_if: None,
        f_if_pvalue: None,
        delta_power: None,
        share_inv_dta,
        share_cf_dtf,
        h1_rejected_at: None,
        degenerate: false,
        degenerate_reason: None,
    };

    match run_unrestricted(obs) {
        Ok(unrestricted) => {
            let n = unrestricted.n;
            let k = unrestricted.k;
            let f_if = incremental_f(diagnostic.restricted.rss, unrestricted.rss, ADDED_PARAMETERS, n, k)?;
            diagnostic.f_if_pvalue = Some(incremental_f_pvalue(f_if, ADDED_PARAMETERS, n, k)?);
            diagnostic.f_if = Some(f_if);
            let r2_u = unrestricted.r2;
            // Equal fits can leave R²_R a rounding step above R²_U.
            let r2_r = diagnostic.restricted.r2.min(r2_u);
            diagnostic.delta_power = Some(delta_explanatory_power(r2_r, r2_u)?);
            diagnostic.h1_rejected_at = unrestricted
                .p_value(Regressor::Ducf)
                .and_then(h1_rejected_at);
            diagnostic.unrestricted = Some(unrestricted);
        }
        Err(FitError::DegenerateDummy(sign)) => {
            warnings.push(Diagnostic::new(
                Code::DegenerateDummy,
                format!("every observation has the same rest sign ({sign}); unrestricted model skipped"),
            ));
            diagnostic.degenerate = true;
            diagnostic.degenerate_reason = Some(sign);
        }
        Err(e) => return Err(DiagError::Unrestricted(e)),
    }

    Ok(Diagnosis {
        diagnostic,
        removals: prepared.removals,
        warnings,
    })
}
