//! Prediction-powered estimates, confidence lower bounds, and p-values for
//! the population-level metric of a design configuration.
//!
//! The metric `theta = E[g(Y)]` under the design distribution decomposes into
//! the mean design prediction plus the mean prediction bias (the rectifier).
//! Design predictions estimate the first term; held-out labeled data,
//! importance-weighted by the design/labeled density ratio, estimate the
//! second. P-values for `H: theta < tau` come in an asymptotic normal form and
//! a finite-sample form built by inverting betting confidence bounds.

use serde::{Deserialize, Serialize};

use crate::criterion::SuccessCriterion;
use crate::error::{Error, Result};
use crate::util::{mean, std_normal_cdf, variance_around};
use crate::wsr::WsrSamples;

/// One held-out labeled instance after the g transform: `g(y)`, `g(y_hat)`,
/// and the density ratio between the design and labeled distributions.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GSample {
    pub g_label: f64,
    pub g_pred: f64,
    pub weight: f64,
}

impl GSample {
    pub fn new(g_label: f64, g_pred: f64, weight: f64) -> Self {
        GSample {
            g_label,
            g_pred,
            weight,
        }
    }

    /// Build from raw label units: applies the criterion's g to label and
    /// prediction. Labels are transformed before any weighting.
    pub fn from_raw(crit: &SuccessCriterion, label: f64, pred: f64, weight: f64) -> Self {
        GSample {
            g_label: crit.g_of(label),
            g_pred: crit.g_of(pred),
            weight,
        }
    }

    /// Weighted rectifier sample `w * (g(y) - g(y_hat))`.
    pub fn rectifier(&self) -> f64 {
        self.weight * (self.g_label - self.g_pred)
    }
}

/// Point estimates and (1/n) variance estimates for the prediction-powered
/// estimator.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PPEstimate {
    /// Mean design prediction.
    pub mu_hat: f64,
    /// Importance-weighted mean prediction bias.
    pub delta_hat: f64,
    /// `mu_hat + delta_hat`.
    pub theta_hat: f64,
    /// Variance of the design predictions.
    pub var_pred: f64,
    /// Variance of the weighted rectifier samples.
    pub var_err: f64,
    pub n_designs: usize,
    pub n_labeled: usize,
}

/// Grid spacings and bounds for the finite-sample machinery.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundConfig {
    /// Spacing of the significance grid inverted into a p-value.
    #[serde(default = "default_grid_step")]
    pub alpha_grid_step: f64,
    /// Spacing of the candidate-mean grid inside the betting bound.
    #[serde(default = "default_grid_step")]
    pub mean_grid_step: f64,
    /// Upper bound on the density ratios; must dominate every weight.
    /// Callers that know the exact per-configuration bound override this.
    #[serde(default = "default_ratio_bound")]
    pub ratio_bound: f64,
    /// Fraction of the significance budget spent on the design-mean bound;
    /// the rest goes to the rectifier bound.
    #[serde(default = "default_alpha_split")]
    pub alpha_split: f64,
}

fn default_grid_step() -> f64 {
    1e-3
}

fn default_ratio_bound() -> f64 {
    1.0
}

fn default_alpha_split() -> f64 {
    0.1
}

impl Default for BoundConfig {
    fn default() -> Self {
        BoundConfig {
            alpha_grid_step: 1e-3,
            mean_grid_step: 1e-3,
            ratio_bound: 1.0,
            alpha_split: 0.1,
        }
    }
}

impl BoundConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.alpha_grid_step > 0.0 && self.alpha_grid_step < 1.0) {
            return Err(Error::InvalidGridStep(self.alpha_grid_step));
        }
        if !(self.mean_grid_step > 0.0 && self.mean_grid_step < 1.0) {
            return Err(Error::InvalidGridStep(self.mean_grid_step));
        }
        if !(self.alpha_split > 0.0 && self.alpha_split < 1.0) {
            return Err(Error::InvalidAlphaSplit(self.alpha_split));
        }
        if !self.ratio_bound.is_finite() || self.ratio_bound < 1.0 {
            return Err(Error::InvalidRatioBound(self.ratio_bound));
        }
        Ok(())
    }

    pub fn with_ratio_bound(&self, ratio_bound: f64) -> Self {
        BoundConfig {
            ratio_bound,
            ..*self
        }
    }
}

fn check_weights(labeled: &[GSample]) -> Result<()> {
    for s in labeled {
        if !s.weight.is_finite() {
            return Err(Error::NonFiniteWeight(s.weight));
        }
        if s.weight < 0.0 {
            return Err(Error::NonFiniteWeight(s.weight));
        }
    }
    Ok(())
}

/// Prediction-powered point and variance estimates from design predictions
/// (already g-transformed) and weighted labeled samples.
pub fn pp_estimate(design_g: &[f64], labeled: &[GSample]) -> Result<PPEstimate> {
    if design_g.is_empty() {
        return Err(Error::EmptyInput("design predictions"));
    }
    if labeled.is_empty() {
        return Err(Error::EmptyInput("labeled samples"));
    }
    check_weights(labeled)?;

    let mu_hat = mean(design_g);
    let rect: Vec<f64> = labeled.iter().map(GSample::rectifier).collect();
    let delta_hat = mean(&rect);
    let var_pred = variance_around(design_g, mu_hat);
    let var_err = variance_around(&rect, delta_hat);
    Ok(PPEstimate {
        mu_hat,
        delta_hat,
        theta_hat: mu_hat + delta_hat,
        var_pred,
        var_err,
        n_designs: design_g.len(),
        n_labeled: labeled.len(),
    })
}

/// One-sided normal p-value with the zero-variance convention: a degenerate
/// statistic yields 0 when the estimate clears the threshold and 1 otherwise.
fn normal_p_value(estimate: f64, tau: f64, se: f64) -> f64 {
    if se == 0.0 {
        return if estimate > tau { 0.0 } else { 1.0 };
    }
    1.0 - std_normal_cdf((estimate - tau) / se)
}

/// Asymptotically valid p-value for `H: theta < tau`.
pub fn asymptotic_p_value(est: &PPEstimate, tau: f64) -> f64 {
    let se = (est.var_pred / est.n_designs as f64 + est.var_err / est.n_labeled as f64).sqrt();
    normal_p_value(est.theta_hat, tau, se)
}

/// P-value computed from design predictions alone, treating them as labels.
pub fn prediction_only_p_value(design_g: &[f64], tau: f64) -> Result<f64> {
    if design_g.is_empty() {
        return Err(Error::EmptyInput("design predictions"));
    }
    let theta = mean(design_g);
    let var = variance_around(design_g, theta);
    let se = (var / design_g.len() as f64).sqrt();
    Ok(normal_p_value(theta, tau, se))
}

/// Asymptotic p-value using unnormalized density ratios. The rectifier is the
/// self-normalized importance-weighted mean, whose delta-method variance
/// replaces `var_err / n`. Invariant under rescaling all weights by c > 0.
pub fn self_normalized_p_value(
    design_g: &[f64],
    labeled_unnormalized: &[GSample],
    tau: f64,
) -> Result<f64> {
    if design_g.is_empty() {
        return Err(Error::EmptyInput("design predictions"));
    }
    if labeled_unnormalized.is_empty() {
        return Err(Error::EmptyInput("labeled samples"));
    }
    check_weights(labeled_unnormalized)?;
    let weight_sum: f64 = labeled_unnormalized.iter().map(|s| s.weight).sum();
    if weight_sum <= 0.0 {
        return Err(Error::AllZeroWeights);
    }

    let n = labeled_unnormalized.len() as f64;
    let delta_u = labeled_unnormalized
        .iter()
        .map(GSample::rectifier)
        .sum::<f64>()
        / weight_sum;

    let mean_w = weight_sum / n;
    let var_num = labeled_unnormalized
        .iter()
        .map(|s| {
            let centered = s.weight * (s.g_label - s.g_pred - delta_u);
            centered * centered
        })
        .sum::<f64>()
        / n;
    let var_delta_u = var_num / (n * mean_w * mean_w);

    let mu_hat = mean(design_g);
    let var_pred = variance_around(design_g, mu_hat);
    let se = (var_pred / design_g.len() as f64 + var_delta_u).sqrt();
    Ok(normal_p_value(mu_hat + delta_u, tau, se))
}

/// Labeled-only estimate of `theta`: the importance-weighted mean of g(y).
/// Diagnostic comparison point; not a selection backend.
pub fn labeled_only_estimate(labeled: &[GSample]) -> Result<f64> {
    if labeled.is_empty() {
        return Err(Error::EmptyInput("labeled samples"));
    }
    check_weights(labeled)?;
    Ok(labeled.iter().map(|s| s.weight * s.g_label).sum::<f64>() / labeled.len() as f64)
}

/// Rectifier-sample range implied by a ratio bound `d` and a g range.
fn rectifier_range(d: f64, g_lo: f64, g_hi: f64) -> (f64, f64) {
    (d * (g_lo - g_hi), d * (g_hi - g_lo))
}

fn check_finite_sample_inputs(
    design_g: &[f64],
    labeled: &[GSample],
    crit: &SuccessCriterion,
    cfg: &BoundConfig,
) -> Result<(f64, f64)> {
    cfg.validate()?;
    let (g_lo, g_hi) = crit.checked_range()?;
    for &g in design_g {
        if !g.is_finite() || g < g_lo || g > g_hi {
            return Err(Error::SampleOutOfRange {
                value: g,
                lo: g_lo,
                hi: g_hi,
            });
        }
    }
    check_weights(labeled)?;
    for s in labeled {
        if s.weight > cfg.ratio_bound {
            return Err(Error::WeightExceedsBound {
                weight: s.weight,
                bound: cfg.ratio_bound,
            });
        }
        for g in [s.g_label, s.g_pred] {
            if !g.is_finite() || g < g_lo || g > g_hi {
                return Err(Error::SampleOutOfRange {
                    value: g,
                    lo: g_lo,
                    hi: g_hi,
                });
            }
        }
    }
    Ok((g_lo, g_hi))
}

/// Finite-sample confidence lower bound on `theta` at level `alpha`: the sum
/// of a betting bound on the mean design prediction (at `alpha_split * alpha`)
/// and a betting bound on the weighted rectifier mean (at the remainder).
pub fn pp_mean_lower_bound(
    alpha: f64,
    design_g: &[f64],
    labeled: &[GSample],
    crit: &SuccessCriterion,
    cfg: &BoundConfig,
) -> Result<f64> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::InvalidAlpha(alpha));
    }
    let (g_lo, g_hi) = check_finite_sample_inputs(design_g, labeled, crit, cfg)?;
    let (r_lo, r_hi) = rectifier_range(cfg.ratio_bound, g_lo, g_hi);

    let design = WsrSamples::new(design_g, g_lo, g_hi)?;
    let rect_samples: Vec<f64> = labeled.iter().map(GSample::rectifier).collect();
    let rect = WsrSamples::new(&rect_samples, r_lo, r_hi)?;

    let mu_lower = design.lower_bound(cfg.alpha_split * alpha, cfg.mean_grid_step)?;
    let delta_lower = rect.lower_bound((1.0 - cfg.alpha_split) * alpha, cfg.mean_grid_step)?;
    Ok(mu_lower + delta_lower)
}

/// Finite-sample valid p-value for `H: theta < tau`: the smallest significance
/// level on the grid `{0, step, ..., 1}` whose confidence lower bound clears
/// `tau`, or 1 when none does.
pub fn finite_sample_p_value(
    design_g: &[f64],
    labeled: &[GSample],
    crit: &SuccessCriterion,
    cfg: &BoundConfig,
) -> Result<f64> {
    let (g_lo, g_hi) = check_finite_sample_inputs(design_g, labeled, crit, cfg)?;
    let tau = crit.tau;
    let (r_lo, r_hi) = rectifier_range(cfg.ratio_bound, g_lo, g_hi);

    // At alpha = 0 the rejection threshold is infinite, no candidate mean is
    // ever eliminated, and both bounds sit at their interval minima.
    if g_lo + r_lo > tau {
        return Ok(0.0);
    }
    if design_g.is_empty() || labeled.is_empty() {
        // Without data no positive-level bound improves on the alpha = 0 case.
        return Ok(1.0);
    }

    let design = WsrSamples::new(design_g, g_lo, g_hi)?;
    let rect_samples: Vec<f64> = labeled.iter().map(GSample::rectifier).collect();
    let rect = WsrSamples::new(&rect_samples, r_lo, r_hi)?;

    let k = (1.0 / cfg.alpha_grid_step).round().max(1.0) as usize;
    for i in 1..k {
        let alpha = i as f64 / k as f64;
        let mu_lower = design.lower_bound(cfg.alpha_split * alpha, cfg.mean_grid_step)?;
        let delta_lower = rect.lower_bound((1.0 - cfg.alpha_split) * alpha, cfg.mean_grid_step)?;
        if mu_lower + delta_lower > tau {
            return Ok(alpha);
        }
    }
    Ok(1.0)
}
