//! Design algorithm selection via weighted split-conformal lower bounds.
//!
//! Each design receives a covariate-shift-weighted conformal lower bound on
//! its label at level `alpha / (|menu| * N)`; the per-configuration bound is
//! the average over its designs. The double Bonferroni correction makes the
//! bounds extremely conservative: whenever the design point's own probability
//! mass exceeds the per-design level, the residual quantile is infinite and
//! the bound collapses to negative infinity.

use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::selection::{Backend, ConfigStats, Menu, SelectionReport};

/// Residuals (prediction minus label) and density ratios for the held-out
/// labeled data, plus the design point's own density ratio.
#[derive(Debug, Clone)]
pub struct WeightedResidualSet {
    /// `y_hat_j - y_j` in label units.
    pub residuals: Vec<f64>,
    pub weights: Vec<f64>,
    /// Density ratio of the design point itself.
    pub design_weight: f64,
}

impl WeightedResidualSet {
    pub fn new(residuals: Vec<f64>, weights: Vec<f64>, design_weight: f64) -> Result<Self> {
        if residuals.len() != weights.len() {
            return Err(Error::LengthMismatch {
                got: weights.len(),
                expected: residuals.len(),
            });
        }
        for &w in weights.iter().chain(std::iter::once(&design_weight)) {
            if !w.is_finite() || w < 0.0 {
                return Err(Error::NonFiniteWeight(w));
            }
        }
        Ok(WeightedResidualSet {
            residuals,
            weights,
            design_weight,
        })
    }
}

/// Split-conformal lower bound on one design's label.
///
/// The (1-alpha) quantile is taken over the discrete mixture that puts mass
/// `w_j / (sum(w) + v)` on each labeled residual and mass `v / (sum(w) + v)`
/// at infinity. Returns negative infinity when only the infinite atom reaches
/// the target mass.
pub fn split_conformal_lb(
    design_pred: f64,
    residuals: &WeightedResidualSet,
    alpha: f64,
) -> Result<f64> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::InvalidAlpha(alpha));
    }
    let total: f64 = residuals.weights.iter().sum::<f64>() + residuals.design_weight;
    if total == 0.0 {
        return Ok(f64::NEG_INFINITY);
    }
    let target = (1.0 - alpha) * total;

    let mut order: Vec<usize> = (0..residuals.residuals.len()).collect();
    order.sort_by(|&a, &b| residuals.residuals[a].total_cmp(&residuals.residuals[b]));

    let mut cum = 0.0;
    for &j in &order {
        cum += residuals.weights[j];
        if cum >= target {
            return Ok(design_pred - residuals.residuals[j]);
        }
    }
    Ok(f64::NEG_INFINITY)
}

/// Per-design inputs for one configuration: prediction and density ratio.
#[derive(Debug, Clone, Copy)]
pub struct ConformalDesign {
    pub pred: f64,
    pub weight: f64,
}

/// Conformal selection over a menu. Labeled residual sets carry the
/// configuration-specific weights; each design's bound runs at level
/// `alpha / (|menu| * N)` and the configuration is selected when the average
/// bound clears `tau`. Mean criterion only.
///
/// Residuals are sorted once per configuration; each design's weighted
/// quantile is then a binary search over the cumulative weights, which agrees
/// with `split_conformal_lb` because only the design's own atom changes.
pub fn conformal_select(
    menu: &Menu,
    designs: &BTreeMap<String, Vec<ConformalDesign>>,
    labeled: &BTreeMap<String, (Vec<f64>, Vec<f64>)>,
    tau: f64,
    alpha: f64,
) -> Result<SelectionReport> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::InvalidAlpha(alpha));
    }
    let n_configs = menu.len();
    let mut per_config = Vec::with_capacity(n_configs);
    let mut selected = Vec::new();

    for id in menu.ids() {
        let batch = designs
            .get(id)
            .ok_or_else(|| Error::MissingDesignBatch(id.clone()))?;
        if batch.is_empty() {
            return Err(Error::MissingDesignBatch(id.clone()));
        }
        let (resid, weights) = labeled
            .get(id)
            .ok_or_else(|| Error::MissingLabeledData(id.clone()))?;
        if resid.len() != weights.len() {
            return Err(Error::LengthMismatch {
                got: weights.len(),
                expected: resid.len(),
            });
        }
        let level = alpha / (n_configs as f64 * batch.len() as f64);

        let mut order: Vec<usize> = (0..resid.len()).collect();
        order.sort_by(|&a, &b| resid[a].total_cmp(&resid[b]));
        let sorted_resid: Vec<f64> = order.iter().map(|&j| resid[j]).collect();
        let mut cum = Vec::with_capacity(order.len());
        let mut acc = 0.0;
        for &j in &order {
            let w = weights[j];
            if !w.is_finite() || w < 0.0 {
                return Err(Error::NonFiniteWeight(w));
            }
            acc += w;
            cum.push(acc);
        }
        let labeled_mass = acc;

        let mut bound_sum = 0.0;
        let mut pred_sum = 0.0;
        for d in batch {
            if !d.weight.is_finite() || d.weight < 0.0 {
                return Err(Error::NonFiniteWeight(d.weight));
            }
            let total = labeled_mass + d.weight;
            let bound = if total == 0.0 {
                f64::NEG_INFINITY
            } else {
                let target = (1.0 - level) * total;
                let idx = cum.partition_point(|&c| c < target);
                if idx < sorted_resid.len() {
                    d.pred - sorted_resid[idx]
                } else {
                    f64::NEG_INFINITY
                }
            };
            bound_sum += bound;
            pred_sum += d.pred;
        }
        let lower = bound_sum / batch.len() as f64;
        let mu = pred_sum / batch.len() as f64;
        if lower >= tau {
            selected.push(id.clone());
        }
        per_config.push(ConfigStats {
            id: id.clone(),
            p_value: None,
            theta_hat: mu,
            mu_hat: mu,
            delta_hat: 0.0,
            effective_sample_size: crate::util::effective_sample_size(weights),
            lower_bound: Some(lower),
        });
    }

    Ok(SelectionReport {
        schema_version: 1,
        alpha,
        backend: Backend::Conformal,
        n_configs,
        selected,
        per_config,
    })
}
