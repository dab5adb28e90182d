//! Ordinary least squares with conventional inference.
//!
//! Coefficients come from a Householder QR factorisation of the
//! column-equilibrated design; standard errors use σ̂²·(XᵀX)⁻¹ with
//! σ̂² = RSS/(n−k), and p-values come from the t and F distributions in
//! [`dist`]. All reductions are compensated and sequential, so a fit is a
//! pure function of the input order.

pub mod dist;
mod qr;
pub mod sum;

use crate::floats;
use crate::prep::Observation;
use serde::{Deserialize, Serialize};
use std::fmt;
use thiserror::Error;

pub use dist::DistError;
pub use qr::RANK_TOLERANCE;

/// Conventional level used for the significance flags.
pub const SIGNIFICANCE_LEVEL: f64 = 0.01;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Regressor {
    Intercept,
    Cf,
    Ducf,
}

impl Regressor {
    pub fn name(self) -> &'static str {
        match self {
            Regressor::Intercept => "intercept",
            Regressor::Cf => "cf",
            Regressor::Ducf => "ducf",
        }
    }
}

/// Which way every sign dummy points when the interaction is unestimable.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DegenerateSign {
    /// Every rest is positive, so ducf ≡ cf.
    AllPositive,
    /// No rest is positive, so ducf ≡ 0.
    AllNonpositive,
}

impl fmt::Display for DegenerateSign {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            DegenerateSign::AllPositive => "all_positive",
            DegenerateSign::AllNonpositive => "all_nonpositive",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum FitError {
    #[error("design needs more observations than parameters (n={n}, k={k})")]
    TooFewObservations { n: usize, k: usize },
    #[error("regressor `{column}` is collinear with the preceding columns")]
    RankDeficient { column: String },
    #[error("sign dummy is degenerate ({0}); the interaction term cannot be estimated")]
    DegenerateDummy(DegenerateSign),
    #[error("response has zero total sum of squares")]
    ZeroVariance,
    #[error("non-finite value in row {row}")]
    NonFinite { row: usize },
    #[error("invalid design: {0}")]
    InvalidDesign(String),
    #[error(transparent)]
    Distribution(#[from] DistError),
}

/// Ordered regressor list for a fit on [`Observation`]s.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DesignSpec {
    regressors: Vec<Regressor>,
}

impl DesignSpec {
    pub fn new(regressors: Vec<Regressor>) -> Result<Self, FitError> {
        if regressors.is_empty() {
            return Err(FitError::InvalidDesign("no regressors".into()));
        }
        for (i, r) in regressors.iter().enumerate() {
            if regressors[..i].contains(r) {
                return Err(FitError::InvalidDesign(format!(
                    "duplicate regressor `{}`",
                    r.name()
                )));
            }
        }
        Ok(Self { regressors })
    }

    /// inv = a + b₁·cf
    pub fn restricted() -> Self {
        Self {
            regressors: vec![Regressor::Intercept, Regressor::Cf],
        }
    }

    /// inv = a + b₁·cf + b₂·ducf
    pub fn unrestricted() -> Self {
        Self {
            regressors: vec![Regressor::Intercept, Regressor::Cf, Regressor::Ducf],
        }
    }

    /// inv = b₁·cf, used by the sign-case checks.
    pub fn through_origin() -> Self {
        Self {
            regressors: vec![Regressor::Cf],
        }
    }

    pub fn regressors(&self) -> &[Regressor] {
        &self.regressors
    }

    pub fn include_intercept(&self) -> bool {
        self.regressors.contains(&Regressor::Intercept)
    }
}

/// Output of one least-squares fit.
///
/// `r2` is centred (1 − RSS/TSS with TSS about the mean) when the design has
/// an intercept and uncentred otherwise; `r2_centered` says which.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegressionResult {
    pub regressors: Vec<String>,
    #[serde(with = "floats::vec")]
    pub coefficients: Vec<f64>,
    #[serde(with = "floats::vec")]
    pub std_errors: Vec<f64>,
    #[serde(with = "floats::vec")]
    pub t_stats: Vec<f64>,
    #[serde(with = "floats::vec")]
    pub p_values: Vec<f64>,
    #[serde(with = "floats::scalar")]
    pub rss: f64,
    #[serde(with = "floats::scalar")]
    pub tss: f64,
    #[serde(with = "floats::scalar")]
    pub r2: f64,
    pub r2_centered: bool,
    #[serde(with = "floats::scalar")]
    pub overall_f: f64,
    #[serde(with = "floats::scalar")]
    pub overall_f_pvalue: f64,
    pub n: usize,
    pub k: usize,
    pub sig_1pct: Vec<bool>,
}

impl RegressionResult {
    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.regressors.iter().position(|r| r == name)
    }

    pub fn coefficient(&self, r: Regressor) -> Option<f64> {
        self.index_of(r.name()).map(|i| self.coefficients[i])
    }

    pub fn t_stat(&self, r: Regressor) -> Option<f64> {
        self.index_of(r.name()).map(|i| self.t_stats[i])
    }

    pub fn p_value(&self, r: Regressor) -> Option<f64> {
        self.index_of(r.name()).map(|i| self.p_values[i])
    }

    pub fn is_significant(&self, r: Regressor) -> bool {
        self.index_of(r.name()).is_some_and(|i| self.sig_1pct[i])
    }

    pub fn residual_df(&self) -> usize {
        self.n - self.k
    }
}

fn two_sided_p(t: f64, df: f64) -> Result<f64, FitError> {
    if t.is_nan() {
        return Ok(f64::NAN);
    }
    Ok(dist::t_two_sided(t, df)?)
}

/// Fits `y` on column-major `columns`.
///
/// When `has_intercept` is set the caller must have included a column of
/// ones; it switches TSS to deviations about the mean and the overall F to
/// k−1 numerator degrees of freedom.
pub fn fit_columns(
    y: &[f64],
    columns: &[Vec<f64>],
    names: &[&str],
    has_intercept: bool,
) -> Result<RegressionResult, FitError> {
    let n = y.len();
    let k = columns.len();
    if k == 0 || names.len() != k || columns.iter().any(|c| c.len() != n) {
        return Err(FitError::InvalidDesign("column shapes disagree".into()));
    }
    if n <= k {
        return Err(FitError::TooFewObservations { n, k });
    }
    if let Some(row) = (0..n).find(|&i| !y[i].is_finite() || columns.iter().any(|c| !c[i].is_finite())) {
        return Err(FitError::NonFinite { row });
    }

    let ls = qr::solve(columns, y).map_err(|c| FitError::RankDeficient {
        column: names[c.column].to_string(),
    })?;

    let mut rss = sum::CompensatedSum::new();
    for i in 0..n {
        let fitted = sum::sum(columns.iter().zip(&ls.coefficients).map(|(c, b)| c[i] * b));
        let e = y[i] - fitted;
        rss.add(e * e);
    }
    let rss = rss.value();
    let tss = if has_intercept {
        let mean = sum::sum(y.iter().copied()) / n as f64;
        sum::sum(y.iter().map(|v| (v - mean) * (v - mean)))
    } else {
        sum::sum(y.iter().map(|v| v * v))
    };
    if tss == 0.0 {
        return Err(FitError::ZeroVariance);
    }
    let model_df = if has_intercept { k - 1 } else { k };
    // An intercept-only model explains nothing by definition.
    let r2 = if model_df == 0 { 0.0 } else { (1.0 - rss / tss).clamp(0.0, 1.0) };

    let resid_df = (n - k) as f64;
    let sigma2 = rss / resid_df;
    let std_errors: Vec<f64> = ls.xtx_inv_diag.iter().map(|d| (sigma2 * d).sqrt()).collect();
    let t_stats: Vec<f64> = ls
        .coefficients
        .iter()
        .zip(&std_errors)
        .map(|(b, s)| b / s)
        .collect();
    let p_values = t_stats
        .iter()
        .map(|&t| two_sided_p(t, resid_df))
        .collect::<Result<Vec<_>, _>>()?;
    let sig_1pct = p_values.iter().map(|&p| p < SIGNIFICANCE_LEVEL).collect();

    let (overall_f, overall_f_pvalue) = if model_df == 0 {
        (f64::NAN, f64::NAN)
    } else {
        let f = (r2 / model_df as f64) / ((1.0 - r2) / resid_df);
        let p = if f.is_nan() {
            f64::NAN
        } else {
            dist::f_sf(f.max(0.0), model_df as f64, resid_df)?
        };
        (f, p)
    };

    Ok(RegressionResult {
        regressors: names.iter().map(|s| s.to_string()).collect(),
        coefficients: ls.coefficients,
        std_errors,
        t_stats,
        p_values,
        rss,
        tss,
        r2,
        r2_centered: has_intercept,
        overall_f,
        overall_f_pvalue,
        n,
        k,
        sig_1pct,
    })
}

/// Fits `inv` on the regressors named in `spec`.
///
/// A design containing `ducf` is screened for the two degenerate dummy
/// patterns first, so those surface as [`FitError::DegenerateDummy`] rather
/// than a generic rank failure.
pub fn ols_fit(observations: &[Observation], spec: &DesignSpec) -> Result<RegressionResult, FitError> {
    if spec.regressors.contains(&Regressor::Ducf) && !observations.is_empty() {
        if observations.iter().all(|o| o.ducf == 0.0) {
            return Err(FitError::DegenerateDummy(DegenerateSign::AllNonpositive));
        }
        if observations.iter().all(|o| o.ducf == o.cf) {
            return Err(FitError::DegenerateDummy(DegenerateSign::AllPositive));
        }
    }
    let y: Vec<f64> = observations.iter().map(|o| o.inv).collect();
    let columns: Vec<Vec<f64>> = spec
        .regressors
        .iter()
        .map(|r| match r {
            Regressor::Intercept => vec![1.0; observations.len()],
            Regressor::Cf => observations.iter().map(|o| o.cf).collect(),
            Regressor::Ducf => observations.iter().map(|o| o.ducf).collect(),
        })
        .collect();
    let names: Vec<&str> = spec.regressors.iter().map(|r| r.name()).collect();
    fit_columns(&y, &columns, &names, spec.include_intercept())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn obs(cf: f64, inv: f64) -> Observation {
        Observation::from_scaled("F", 2000, inv, cf)
    }

    fn five_point() -> Vec<Observation> {
        [(1.0, 2.0), (2.0, 3.0), (3.0, 5.0), (4.0, 4.0), (5.0, 6.0)]
            .iter()
            .map(|&(x, y)| obs(x, y))
            .collect()
    }

    #[test]
    fn five_point_fixture() {
        let r = ols_fit(&five_point(), &DesignSpec::restricted()).unwrap();
        assert!((r.coefficients[0] - 1.3).abs() < 1e-12);
        assert!((r.coefficients[1] - 0.9).abs() < 1e-12);
        assert!((r.rss - 1.9).abs() < 1e-12);
        assert!((r.tss - 10.0).abs() < 1e-12);
        assert!((r.r2 - 0.81).abs() < 1e-12);
        assert!((r.std_errors[1] - 0.2517).abs() < 1e-4);
        assert!((r.t_stats[1] - 3.576).abs() < 1e-3);
        assert!((r.overall_f - 12.789).abs() < 1e-3);
        assert_eq!((r.n, r.k), (5, 2));
        assert!(r.r2_centered);
    }

    #[test]
    fn exact_fit_has_zero_rss() {
        let o: Vec<_> = [1.0, 2.0, 4.0, 7.0].iter().map(|&x| obs(x, x)).collect();
        let r = ols_fit(&o, &DesignSpec::restricted()).unwrap();
        assert!((r.coefficients[1] - 1.0).abs() < 1e-12);
        assert!(r.coefficients[0].abs() < 1e-12);
        assert!(r.rss < 1e-24);
        assert!((r.r2 - 1.0).abs() < 1e-12);
    }

    #[test]
    fn ducf_equal_to_cf_is_degenerate() {
        let o: Vec<_> = [(1.0, 2.0), (2.0, 2.5), (3.0, 4.0), (4.0, 4.1)]
            .iter()
            .map(|&(x, y)| obs(x, y))
            .collect();
        assert_eq!(
            ols_fit(&o, &DesignSpec::unrestricted()),
            Err(FitError::DegenerateDummy(DegenerateSign::AllPositive))
        );
    }

    #[test]
    fn zero_ducf_is_degenerate() {
        let o: Vec<_> = [(1.0, 0.5), (2.0, 1.9), (3.0, 2.0), (4.0, 3.5), (5.0, 4.0)]
            .iter()
            .map(|&(x, y)| obs(x, y))
            .collect();
        assert_eq!(
            ols_fit(&o, &DesignSpec::unrestricted()),
            Err(FitError::DegenerateDummy(DegenerateSign::AllNonpositive))
        );
    }

    #[test]
    fn rejects_too_few_rows() {
        let o = vec![obs(1.0, 1.0), obs(2.0, 3.0)];
        assert_eq!(
            ols_fit(&o, &DesignSpec::restricted()),
            Err(FitError::TooFewObservations { n: 2, k: 2 })
        );
    }

    #[test]
    fn duplicate_regressors_rejected() {
        assert!(DesignSpec::new(vec![Regressor::Cf, Regressor::Cf]).is_err());
        assert!(DesignSpec::new(vec![]).is_err());
    }

    #[test]
    fn through_origin_reports_uncentered_r2() {
        let r = ols_fit(&five_point(), &DesignSpec::through_origin()).unwrap();
        assert!(!r.r2_centered);
        // Σxy/Σx² = 69/55
        assert!((r.coefficients[0] - 69.0 / 55.0).abs() < 1e-14);
    }

    #[test]
    fn significance_flags_follow_p_values() {
        let r = ols_fit(&five_point(), &DesignSpec::restricted()).unwrap();
        for (p, s) in r.p_values.iter().zip(&r.sig_1pct) {
            assert_eq!(*s, *p < 0.01);
        }
    }

    #[test]
    fn intercept_only_has_zero_r2() {
        let y = [1.0, 2.0, 4.0, 8.0];
        let r = fit_columns(&y, &[vec![1.0; 4]], &["intercept"], true).unwrap();
        assert_eq!(r.r2, 0.0);
        assert!((r.coefficients[0] - 3.75).abs() < 1e-15);
    }
}
