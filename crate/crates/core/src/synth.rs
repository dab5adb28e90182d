//! Seeded synthetic panels that satisfy the balance-sheet identity exactly.
//!
//! Draws happen in ratio space (per unit of lagged total assets) and are
//! then multiplied by each firm-year's asset base:
//!
//! - cf = exp(N(ln cf_location, cf_spread))
//! - rest, by mode, with U ~ Uniform(0, 1) open:
//!   - `zero`: 0
//!   - `all_positive`: rest_scale·cf·(0.5 + U)
//!   - `all_negative_small`: −cf·U (rest_scale unused)
//!   - `all_negative_large`: −cf − rest_scale·cf·(0.5 + U)
//!   - `mixed`: ±rest_scale·cf·(0.5 + U), positive with probability mix_fraction
//! - lagged assets: base_assets_location·exp(N(0, 0.5)) in the first year,
//!   then growth g ~ N(0.05, 0.08), floored at −0.5, each year.
//!
//! The rest is split over the six components with fixed weights
//! (ΔLTD 0.40, ΔCapital stock 0.20, depreciation 0.15, dividends 0.05,
//! ΔWorking capital 0.15, ΔOFA 0.05), each carrying the sign that makes
//! its contribution w·rest. Investment is cash flow plus the component sum,
//! so the identity check sees a zero residual.
//!
//! Firm `i` draws from ChaCha8 seeded with `seed` on stream `i`; firms are
//! generated in parallel and the output is independent of scheduling.

use crate::linmodel::sum::CompensatedSum;
use crate::panel::{FirmYearRecord, Panel, PanelError, SchemaMode};
use crate::prep::{self, Observation, PrepConfig, PrepError};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, Open01};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::fmt;
use std::str::FromStr;
use thiserror::Error;

pub const COMPONENT_WEIGHTS: [f64; 6] = [0.40, 0.20, 0.15, 0.05, 0.15, 0.05];

const ASSET_SPREAD: f64 = 0.5;
const GROWTH_MEAN: f64 = 0.05;
const GROWTH_SD: f64 = 0.08;
const GROWTH_FLOOR: f64 = -0.5;

#[derive(Debug, Error)]
pub enum SynthError {
    #[error("invalid simulation config: {0}")]
    Config(String),
    #[error("Σcf² is zero or some cf is zero")]
    ZeroDenominator,
    #[error(transparent)]
    Prep(#[from] PrepError),
    #[error(transparent)]
    Panel(#[from] PanelError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RestMode {
    Zero,
    AllPositive,
    AllNegativeSmall,
    AllNegativeLarge,
    Mixed,
}

impl RestMode {
    pub const ALL: [RestMode; 5] = [
        RestMode::Zero,
        RestMode::AllPositive,
        RestMode::AllNegativeSmall,
        RestMode::AllNegativeLarge,
        RestMode::Mixed,
    ];

    pub fn name(self) -> &'static str {
        match self {
            RestMode::Zero => "zero",
            RestMode::AllPositive => "all_positive",
            RestMode::AllNegativeSmall => "all_negative_small",
            RestMode::AllNegativeLarge => "all_negative_large",
            RestMode::Mixed => "mixed",
        }
    }
}

impl fmt::Display for RestMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for RestMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        RestMode::ALL
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| format!("unknown rest mode `{s}`"))
    }
}

fn default_cf_location() -> f64 {
    0.08
}
fn default_cf_spread() -> f64 {
    0.35
}
fn default_rest_scale() -> f64 {
    0.5
}
fn default_mix_fraction() -> f64 {
    0.5
}
fn default_base_assets() -> f64 {
    1e7
}
fn default_start_year() -> i32 {
    2000
}

/// Generator settings. `n_firms`, `n_years`, `seed` and `rest_mode` are
/// required in JSON; the rest default.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulationConfig {
    pub n_firms: usize,
    pub n_years: usize,
    pub seed: u64,
    pub rest_mode: RestMode,
    #[serde(default = "default_cf_location")]
    pub cf_location: f64,
    #[serde(default = "default_cf_spread")]
    pub cf_spread: f64,
    #[serde(default = "default_rest_scale")]
    pub rest_scale: f64,
    #[serde(default = "default_mix_fraction")]
    pub mix_fraction: f64,
    #[serde(default = "default_base_assets")]
    pub base_assets_location: f64,
    #[serde(default = "default_start_year")]
    pub start_year: i32,
}

impl SimulationConfig {
    pub fn new(n_firms: usize, n_years: usize, rest_mode: RestMode, seed: u64) -> Self {
        Self {
            n_firms,
            n_years,
            seed,
            rest_mode,
            cf_location: default_cf_location(),
            cf_spread: default_cf_spread(),
            rest_scale: default_rest_scale(),
            mix_fraction: default_mix_fraction(),
            base_assets_location: default_base_assets(),
            start_year: default_start_year(),
        }
    }

    pub fn from_json(text: &str) -> Result<Self, SynthError> {
        let config: Self = serde_json::from_str(text).map_err(|e| SynthError::Config(e.to_string()))?;
        config.validate()?;
        Ok(config)
    }

    /// Firm-years that survive lagged scaling.
    pub fn usable_observations(&self) -> usize {
        self.n_firms.saturating_mul(self.n_years.saturating_sub(1))
    }

    pub fn validate(&self) -> Result<(), SynthError> {
        let bad = |msg: String| Err(SynthError::Config(msg));
        if self.n_years < 2 {
            return bad(format!("n_years = {} but at least 2 are needed", self.n_years));
        }
        if self.usable_observations() < prep::MIN_TRIM_OBSERVATIONS {
            return bad(format!(
                "n_firms·(n_years−1) = {} is below {}",
                self.usable_observations(),
                prep::MIN_TRIM_OBSERVATIONS
            ));
        }
        let last_year = i64::from(self.start_year) + self.n_years as i64 - 1;
        if last_year > i64::from(i32::MAX) {
            return bad("year range overflows".to_string());
        }
        if !(self.cf_location > 0.0 && self.cf_location.is_finite()) {
            return bad(format!("cf_location {} must be positive", self.cf_location));
        }
        if !(self.cf_spread >= 0.0 && self.cf_spread.is_finite()) {
            return bad(format!("cf_spread {} must be nonnegative", self.cf_spread));
        }
        if !(self.base_assets_location > 0.0 && self.base_assets_location.is_finite()) {
            return bad(format!("base_assets_location {} must be positive", self.base_assets_location));
        }
        if !(self.rest_scale >= 0.0 && self.rest_scale.is_finite()) {
            return bad(format!("rest_scale {} must be nonnegative", self.rest_scale));
        }
        let needs_scale = matches!(
            self.rest_mode,
            RestMode::AllPositive | RestMode::AllNegativeLarge | RestMode::Mixed
        );
        if needs_scale && self.rest_scale == 0.0 {
            return bad(format!("rest_mode {} needs rest_scale > 0", self.rest_mode));
        }
        if self.rest_mode == RestMode::Mixed && !(self.mix_fraction > 0.0 && self.mix_fraction < 1.0) {
            return bad(format!("mix_fraction {} outside (0, 1)", self.mix_fraction));
        }
        Ok(())
    }
}

/// Splits a rest over (ΔLTD, ΔCapital stock, depreciation, dividends,
/// ΔWorking capital, ΔOFA).
pub fn split_rest(rest: f64) -> [f64; 6] {
    let w = COMPONENT_WEIGHTS;
    [w[0] * rest, w[1] * rest, -w[2] * rest, -w[3] * rest, -w[4] * rest, -w[5] * rest]
}

/// The rest recovered from components, summed in the same order as
/// [`prep::compute_rest`].
fn component_rest(c: &[f64; 6]) -> f64 {
    c[0] + c[1] - c[2] - c[3] - c[4] - c[5]
}

fn firm_id(index: usize, width: usize) -> String {
    format!("F{:0width$}", index + 1)
}

fn id_width(n_firms: usize) -> usize {
    n_firms.to_string().len().max(6)
}

struct Draws {
    cf: Normal<f64>,
    asset: Normal<f64>,
    growth: Normal<f64>,
}

fn rest_ratio(config: &SimulationConfig, cf: f64, rng: &mut ChaCha8Rng) -> f64 {
    let u: f64 = Open01.sample(rng);
    let magnitude = config.rest_scale * cf * (0.5 + u);
    match config.rest_mode {
        RestMode::Zero => 0.0,
        RestMode::AllPositive => magnitude,
        RestMode::AllNegativeSmall => -cf * u,
        RestMode::AllNegativeLarge => -cf - magnitude,
        RestMode::Mixed => {
            if rng.random_bool(config.mix_fraction) {
                magnitude
            } else {
                -magnitude
            }
        }
    }
}

fn simulate_firm(config: &SimulationConfig, draws: &Draws, index: usize, width: usize) -> Vec<FirmYearRecord> {
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    rng.set_stream(index as u64);
    let id = firm_id(index, width);
    let mut lagged = config.base_assets_location * draws.asset.sample(&mut rng).exp();
    let mut out = Vec::with_capacity(config.n_years);
    for t in 0..config.n_years {
        let growth = draws.growth.sample(&mut rng).max(GROWTH_FLOOR);
        let cf = draws.cf.sample(&mut rng).exp();
        let rest = rest_ratio(config, cf, &mut rng);
        let components = split_rest(rest * lagged);
        let cash_flow = cf * lagged;
        let mut r = FirmYearRecord::new(
            id.clone(),
            config.start_year + t as i32,
            lagged + growth * lagged,
            cash_flow + component_rest(&components),
            cash_flow,
        );
        r.d_ltd = Some(components[0]);
        r.d_capital_stock = Some(components[1]);
        r.depreciation = Some(components[2]);
        r.dividends = Some(components[3]);
        r.d_working_capital = Some(components[4]);
        r.d_ofa = Some(components[5]);
        lagged = r.total_assets;
        out.push(r);
    }
    out
}

/// Generates a flow-mode panel; deterministic for a given config.
pub fn simulate_panel(config: &SimulationConfig) -> Result<Panel, SynthError> {
    config.validate()?;
    let draws = Draws {
        cf: Normal::new(config.cf_location.ln(), config.cf_spread).map_err(|e| SynthError::Config(e.to_string()))?,
        asset: Normal::new(0.0, ASSET_SPREAD).expect("constant parameters"),
        growth: Normal::new(GROWTH_MEAN, GROWTH_SD).expect("constant parameters"),
    };
    let width = id_width(config.n_firms);
    let records: Vec<FirmYearRecord> = (0..config.n_firms)
        .into_par_iter()
        .flat_map_iter(|i| simulate_firm(config, &draws, i, width))
        .collect();
    let label = format!("synth-{}-seed{}", config.rest_mode, config.seed);
    Ok(Panel::new(records, label, SchemaMode::Flow)?)
}

/// Closed-form through-origin slope 1 + Σ(cf·rest)/Σcf².
pub fn expected_origin_slope(observations: &[Observation]) -> Result<f64, SynthError> {
    let mut cross = CompensatedSum::new();
    let mut square = CompensatedSum::new();
    for o in observations {
        if o.cf == 0.0 {
            return Err(SynthError::ZeroDenominator);
        }
        cross.add(o.cf * o.rest);
        square.add(o.cf * o.cf);
    }
    if square.value() == 0.0 {
        return Err(SynthError::ZeroDenominator);
    }
    Ok(1.0 + cross.value() / square.value())
}

/// [`expected_origin_slope`] on a panel after preprocessing.
pub fn panel_origin_slope(panel: &Panel, config: &PrepConfig) -> Result<f64, SynthError> {
    let prepared = prep::prepare(panel, config)?;
    expected_origin_slope(&prepared.observations)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linmodel::{ols_fit, DesignSpec, Regressor};

    fn obs(cf: f64, rest: f64) -> Observation {
        Observation::from_scaled("F", 1, cf + rest, cf)
    }

    #[test]
    fn worked_example_slope() {
        let s = expected_origin_slope(&[obs(7.0, -2.0)]).unwrap();
        assert!((s - 5.0 / 7.0).abs() < 1e-15);
        assert!((s - 0.714).abs() < 1e-3);
    }

    #[test]
    fn zero_rest_slope_is_one() {
        assert_eq!(expected_origin_slope(&[obs(1.0, 0.0), obs(3.0, 0.0)]).unwrap(), 1.0);
    }

    #[test]
    fn two_point_slope() {
        assert_eq!(expected_origin_slope(&[obs(1.0, 1.0), obs(2.0, 2.0)]).unwrap(), 2.0);
    }

    #[test]
    fn zero_cf_rejected() {
        assert!(matches!(
            expected_origin_slope(&[obs(0.0, 1.0)]),
            Err(SynthError::ZeroDenominator)
        ));
        assert!(expected_origin_slope(&[]).is_err());
    }

    #[test]
    fn split_sums_to_rest() {
        for rest in [-3.7, 0.0, 1.0, 12345.678] {
            let c = split_rest(rest);
            assert!((component_rest(&c) - rest).abs() <= 1e-12 * rest.abs());
        }
    }

    #[test]
    fn zero_mode_equates_investment_and_cash_flow() {
        let p = simulate_panel(&SimulationConfig::new(5, 4, RestMode::Zero, 1)).unwrap();
        assert_eq!(p.len(), 20);
        assert!(p.records().iter().all(|r| r.investment == r.cash_flow));
    }

    #[test]
    fn same_seed_same_panel() {
        let c = SimulationConfig::new(30, 4, RestMode::Mixed, 42);
        assert_eq!(simulate_panel(&c).unwrap(), simulate_panel(&c).unwrap());
        let other = SimulationConfig { seed: 43, ..c };
        assert_ne!(simulate_panel(&c).unwrap(), simulate_panel(&other).unwrap());
    }

    #[test]
    fn firm_ids_sort_in_index_order() {
        let p = simulate_panel(&SimulationConfig::new(12, 2, RestMode::Zero, 0)).unwrap();
        assert_eq!(p.records()[0].firm_id, "F000001");
        assert_eq!(p.records().last().unwrap().firm_id, "F000012");
    }

    #[test]
    fn identity_holds_on_every_record() {
        for mode in RestMode::ALL {
            let p = simulate_panel(&SimulationConfig::new(20, 5, mode, 9)).unwrap();
            for r in p.records() {
                let rest = prep::compute_rest(r, 1e-12).unwrap();
                let residual = r.investment - r.cash_flow - rest;
                assert!(residual.abs() <= 1e-9 * r.investment.abs().max(1.0), "{mode}: {residual}");
            }
        }
    }

    #[test]
    fn negative_small_slope_in_unit_interval() {
        let p = simulate_panel(&SimulationConfig::new(250, 5, RestMode::AllNegativeSmall, 3)).unwrap();
        let prepared = prep::prepare(&p, &PrepConfig::default()).unwrap();
        assert!(prepared.observations.len() >= 900);
        let b = expected_origin_slope(&prepared.observations).unwrap();
        assert!(b > 0.0 && b < 1.0, "{b}");
        let fit = ols_fit(&prepared.observations, &DesignSpec::through_origin()).unwrap();
        let ols = fit.coefficient(Regressor::Cf).unwrap();
        assert!((ols - b).abs() <= 1e-9 * b.abs());
    }

    #[test]
    fn config_validation() {
        assert!(SimulationConfig::new(10, 1, RestMode::Zero, 0).validate().is_err());
        assert!(SimulationConfig::new(4, 3, RestMode::Zero, 0).validate().is_err());
        assert!(SimulationConfig::new(5, 3, RestMode::Zero, 0).validate().is_ok());
        let c = SimulationConfig {
            mix_fraction: 1.0,
            ..SimulationConfig::new(10, 3, RestMode::Mixed, 0)
        };
        assert!(c.validate().is_err());
        let c = SimulationConfig {
            rest_scale: 0.0,
            ..SimulationConfig::new(10, 3, RestMode::AllPositive, 0)
        };
        assert!(c.validate().is_err());
    }

    #[test]
    fn config_json() {
        let c = SimulationConfig::from_json(r#"{"n_firms": 10, "n_years": 3, "seed": 7, "rest_mode": "mixed"}"#)
            .unwrap();
        assert_eq!(c, SimulationConfig::new(10, 3, RestMode::Mixed, 7));
        assert!(SimulationConfig::from_json(r#"{"n_firms": 10, "n_years": 3, "seed": 7, "rest_mode": "mixed", "x": 1}"#).is_err());
        assert!(SimulationConfig::from_json(r#"{"n_firms": 10}"#).is_err());
        let text = serde_json::to_string(&c).unwrap();
        assert_eq!(SimulationConfig::from_json(&text).unwrap(), c);
    }
}
