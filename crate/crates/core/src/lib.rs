//! Censored regression under detection limits and administrative censoring.
//!
//! Four estimators share one dataset type:
//!
//! - [`rank_aft`]: semiparametric AFT slopes from a weighted rank estimating
//!   equation, with the intercept recovered from the product-limit mean of
//!   the residuals;
//! - [`parametric_mle`]: Tobit (left-censored normal) and Weibull AFT
//!   maximum likelihood;
//! - [`coxph`]: Cox proportional hazards by partial likelihood.
//!
//! [`datagen`] simulates the censoring designs and [`mc`] runs the Monte Carlo
//! grid that compares the estimators.

pub mod coxph;
pub mod datagen;
pub mod error;
pub mod km;
pub mod linalg;
pub mod mc;
pub mod optimize;
pub mod parametric_mle;
pub mod rank_aft;
pub mod special;
pub mod types;

pub use error::{Error, Result};
pub use types::{CensorSide, CensoredDataset, ModelFit, ModelKind, ParamVector};
