//! Success criteria on design label distributions.
//!
//! A criterion asks that the expected value of a transform `g` of the design
//! label exceed a threshold `tau`. Two transforms are supported: the identity
//! (mean label) and the exceedance indicator `1[y >= gamma]`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// The label transform `g`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GKind {
    /// g(y) = y.
    Mean,
    /// g(y) = 1[y >= gamma].
    Exceedance { gamma: f64 },
}

/// A success criterion: `E[g(Y)] >= tau`, together with the closed range of
/// `g` outputs required by finite-sample bounds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SuccessCriterion {
    pub g: GKind,
    pub tau: f64,
    /// Lower end of the range of g outputs.
    pub g_lo: f64,
    /// Upper end of the range of g outputs.
    pub g_hi: f64,
}

impl SuccessCriterion {
    /// Mean-label criterion with a user-declared label range. The range is only
    /// consulted by finite-sample methods; asymptotic backends ignore it.
    pub fn mean(tau: f64, g_lo: f64, g_hi: f64) -> Self {
        SuccessCriterion {
            g: GKind::Mean,
            tau,
            g_lo,
            g_hi,
        }
    }

    /// Exceedance criterion; the g range is [0, 1] by construction.
    pub fn exceedance(gamma: f64, tau: f64) -> Self {
        SuccessCriterion {
            g: GKind::Exceedance { gamma },
            tau,
            g_lo: 0.0,
            g_hi: 1.0,
        }
    }

    /// Same criterion with a different threshold; used by tau sweeps.
    pub fn with_tau(&self, tau: f64) -> Self {
        SuccessCriterion { tau, ..*self }
    }

    /// Apply g to a single raw label.
    pub fn g_of(&self, y: f64) -> f64 {
        match self.g {
            GKind::Mean => y,
            GKind::Exceedance { gamma } => {
                if y >= gamma {
                    1.0
                } else {
                    0.0
                }
            }
        }
    }

    /// Validate the range for finite-sample use.
    pub fn checked_range(&self) -> Result<(f64, f64)> {
        if !(self.g_lo.is_finite() && self.g_hi.is_finite()) || self.g_lo >= self.g_hi {
            return Err(Error::InvalidRange {
                lo: self.g_lo,
                hi: self.g_hi,
            });
        }
        Ok((self.g_lo, self.g_hi))
    }
}

/// Apply the criterion's g transform to a list of raw label-unit values.
pub fn apply_g(crit: &SuccessCriterion, raw: &[f64]) -> Vec<f64> {
    raw.iter().map(|&y| crit.g_of(y)).collect()
}
