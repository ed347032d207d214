//! Comparison selectors: weighted split-conformal lower bounds and
//! calibrated-forecast mixtures.

mod calibrated;
mod conformal;

pub use calibrated::{calibrated_select, fit_calibrator, Forecast, IsotonicCalibrator};
pub use conformal::{conformal_select, split_conformal_lb, ConformalDesign, WeightedResidualSet};
