//! Statistically guaranteed selection of sequence-design configurations.
//!
//! Given a menu of candidate design configurations, each producing its own
//! distribution of designs, this crate tests per-configuration hypotheses of
//! the form "the expected transformed design label clears a threshold" and
//! returns the Bonferroni-selected subset. Tests combine design predictions
//! with held-out labeled data importance-weighted by design/labeled density
//! ratios, so that prediction bias under distribution shift is corrected
//! rather than trusted.
//!
//! Modules:
//! - [`criterion`]: success criteria (mean or exceedance of labels).
//! - [`ppi`]: prediction-powered estimates, bounds, and p-values.
//! - [`wsr`]: betting-martingale lower bounds for bounded means.
//! - [`ratio`] / [`mdre`]: exact and estimated density ratios.
//! - [`selection`]: Bonferroni selection over a menu.
//! - [`baselines`]: conformal and calibrated-forecast comparison selectors.
//! - [`sim`]: a fully enumerable synthetic sequence-design world.
//! - [`harness`]: seeded multi-trial experiments and their output tables.

pub mod baselines;
pub mod criterion;
pub mod error;
pub mod harness;
pub mod mdre;
pub mod ppi;
pub mod ratio;
pub mod selection;
pub mod sim;
pub mod util;
pub mod wsr;

pub use criterion::{apply_g, GKind, SuccessCriterion};
pub use error::{Error, Result};
pub use ppi::{
    asymptotic_p_value, finite_sample_p_value, labeled_only_estimate, pp_estimate,
    pp_mean_lower_bound, prediction_only_p_value, self_normalized_p_value, BoundConfig, GSample,
    PPEstimate,
};
pub use selection::{select, Backend, ConfigStats, LabeledData, Menu, SelectionReport};
pub use wsr::wsr_mean_lower_bound;
