//! Percentage scales and percentage coefficients.
//!
//! Variables measured on unrelated raw scales are mapped onto conceptual
//! percentage scales (0–1, 0–100 or −1–1) using analyst-declared anchors.
//! Regression slopes estimated on those scales (b_p) share one unit, so
//! effects of numerical, binary and nominal predictors, effects on
//! different outcomes, and data pooled across instruments can be compared
//! directly.
//!
//! - [`scale_model`] - anchors, variable declarations, anchor suggestion
//! - [`percentize`] - scale transformations and dummy coding
//! - [`regress`] - OLS on percentized data, POMP and β views
//! - [`compare`] - relative importance/impact, pooling, mediation
//! - [`cli`] - CSV ingestion, configuration and reports

pub mod cli;
pub mod compare;
pub mod error;
pub mod percentize;
pub mod regress;
pub mod scale_model;

pub use error::{Error, Result};
