//! Accounting semi-identity audit for investment-cash flow regressions.
//!
//! The crate rebuilds the omitted part of the balance-sheet identity (the
//! *rest*) from firm-year panels, fits the restricted model
//! `inv = a + b₁·cf` and the augmented model `inv = a + b₁·cf + b₂·ducf`
//! (ducf = 1{rest > 0}·cf), and measures how much of the augmented fit is
//! owed to the identity's arithmetic.
//!
//! - [`panel`]: firm-year records, CSV ingestion, differencing
//! - [`prep`]: scaling, rest, sign dummy, trimming
//! - [`linmodel`]: QR least squares, t and F distributions
//! - [`diag`]: restricted vs unrestricted comparison
//! - [`synth`]: seeded panels that satisfy the identity exactly
//! - [`report`]: Table-style rendering and the report JSON schema
//! - [`cli`]: the `asiaudit` command line

pub mod cli;
pub mod diag;
pub mod diagnostics;
mod floats;
pub mod linmodel;
pub mod panel;
pub mod prep;
pub mod report;
pub mod synth;

pub use diag::{diagnose, AsiDiagnostic, DiagError};
pub use diagnostics::{Code, Diagnostic};
pub use linmodel::{ols_fit, DegenerateSign, DesignSpec, FitError, RegressionResult, Regressor};
pub use panel::{FirmYearRecord, Panel, PanelError, SchemaMode};
pub use prep::{Observation, PrepConfig, ScaleBase};
pub use synth::{simulate_panel, RestMode, SimulationConfig};

