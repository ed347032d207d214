//! Multiple-testing selection of configurations from a menu.
//!
//! Each configuration is tested against the null hypothesis that it fails the
//! success criterion; configurations whose p-value clears the Bonferroni
//! threshold `alpha / |menu|` are selected. An empty selection is a legitimate
//! outcome. Raw p-values are retained in the report so that other family-wise
//! corrections could be applied downstream.

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::criterion::SuccessCriterion;
use crate::error::{Error, Result};
use crate::ppi::{
    asymptotic_p_value, finite_sample_p_value, pp_estimate, prediction_only_p_value,
    self_normalized_p_value, BoundConfig, GSample,
};
use crate::util::effective_sample_size;

/// The p-value machinery (or comparison selector) used for a selection run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Backend {
    Asymptotic,
    FiniteSample,
    SelfNormalized,
    PredictionOnly,
    Conformal,
    CalibratedForecast,
}

impl Backend {
    pub fn name(&self) -> &'static str {
        match self {
            Backend::Asymptotic => "asymptotic",
            Backend::FiniteSample => "finite_sample",
            Backend::SelfNormalized => "self_normalized",
            Backend::PredictionOnly => "prediction_only",
            Backend::Conformal => "conformal",
            Backend::CalibratedForecast => "calibrated_forecast",
        }
    }

    /// Backends whose selection rule is a Bonferroni p-value comparison.
    pub fn is_p_value_backend(&self) -> bool {
        matches!(
            self,
            Backend::Asymptotic
                | Backend::FiniteSample
                | Backend::SelfNormalized
                | Backend::PredictionOnly
        )
    }

    /// Backends that consume weighted labeled samples.
    pub fn needs_labeled(&self) -> bool {
        matches!(
            self,
            Backend::Asymptotic | Backend::FiniteSample | Backend::SelfNormalized
        )
    }
}

impl std::str::FromStr for Backend {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "asymptotic" => Ok(Backend::Asymptotic),
            "finite_sample" => Ok(Backend::FiniteSample),
            "self_normalized" => Ok(Backend::SelfNormalized),
            "prediction_only" => Ok(Backend::PredictionOnly),
            "conformal" => Ok(Backend::Conformal),
            "calibrated_forecast" => Ok(Backend::CalibratedForecast),
            other => Err(Error::InvalidConfig(format!("unknown backend {other:?}"))),
        }
    }
}

/// An ordered menu of configuration identifiers.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Menu {
    ids: Vec<String>,
}

impl Menu {
    pub fn new<I: IntoIterator<Item = S>, S: Into<String>>(ids: I) -> Result<Self> {
        let ids: Vec<String> = ids.into_iter().map(Into::into).collect();
        if ids.is_empty() {
            return Err(Error::EmptyMenu);
        }
        for (i, id) in ids.iter().enumerate() {
            if ids[..i].contains(id) {
                return Err(Error::DuplicateConfigId(id.clone()));
            }
        }
        Ok(Menu { ids })
    }

    pub fn ids(&self) -> &[String] {
        &self.ids
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }
}

/// Weighted labeled samples for one configuration, with an optional
/// configuration-specific density-ratio bound that overrides the shared one.
#[derive(Debug, Clone, Default)]
pub struct LabeledData {
    pub samples: Vec<GSample>,
    pub ratio_bound: Option<f64>,
}

impl LabeledData {
    pub fn new(samples: Vec<GSample>) -> Self {
        LabeledData {
            samples,
            ratio_bound: None,
        }
    }

    pub fn with_ratio_bound(samples: Vec<GSample>, ratio_bound: f64) -> Self {
        LabeledData {
            samples,
            ratio_bound: Some(ratio_bound),
        }
    }
}

/// Per-configuration diagnostics retained in the report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConfigStats {
    pub id: String,
    /// P-value for the configuration's null hypothesis; absent for
    /// comparison selectors that do not produce p-values.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub p_value: Option<f64>,
    pub theta_hat: f64,
    pub mu_hat: f64,
    pub delta_hat: f64,
    pub effective_sample_size: f64,
    /// Confidence lower bound, populated by the conformal selector.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lower_bound: Option<f64>,
}

/// The outcome of one selection run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelectionReport {
    pub schema_version: u32,
    pub alpha: f64,
    pub backend: Backend,
    pub n_configs: usize,
    pub selected: Vec<String>,
    pub per_config: Vec<ConfigStats>,
}

impl SelectionReport {
    /// Stable key-value text rendering of the report.
    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("report serialization")
    }

    pub fn from_toml_str(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::InvalidConfig(format!("bad report: {e}")))
    }

    /// Recompute the Bonferroni rule from the stored p-values. Equals
    /// `selected` for p-value backends.
    pub fn recompute_selected(&self) -> Vec<String> {
        let threshold = self.alpha / self.n_configs as f64;
        self.per_config
            .iter()
            .filter(|c| c.p_value.is_some_and(|p| p <= threshold))
            .map(|c| c.id.clone())
            .collect()
    }
}

fn config_p_value(
    backend: Backend,
    design_g: &[f64],
    labeled: Option<&LabeledData>,
    crit: &SuccessCriterion,
    cfg: &BoundConfig,
) -> Result<(f64, f64, f64, f64, f64)> {
    // Returns (p, theta_hat, mu_hat, delta_hat, ess).
    match backend {
        Backend::PredictionOnly => {
            let p = prediction_only_p_value(design_g, crit.tau)?;
            let mu = crate::util::mean(design_g);
            Ok((p, mu, mu, 0.0, design_g.len() as f64))
        }
        Backend::Asymptotic | Backend::FiniteSample | Backend::SelfNormalized => {
            let data = labeled.expect("checked by caller");
            let weights: Vec<f64> = data.samples.iter().map(|s| s.weight).collect();
            let ess = effective_sample_size(&weights);
            match backend {
                Backend::Asymptotic => {
                    let est = pp_estimate(design_g, &data.samples)?;
                    let p = asymptotic_p_value(&est, crit.tau);
                    Ok((p, est.theta_hat, est.mu_hat, est.delta_hat, ess))
                }
                Backend::FiniteSample => {
                    let local = match data.ratio_bound {
                        Some(d) => cfg.with_ratio_bound(d),
                        None => *cfg,
                    };
                    let est = pp_estimate(design_g, &data.samples)?;
                    let p = finite_sample_p_value(design_g, &data.samples, crit, &local)?;
                    Ok((p, est.theta_hat, est.mu_hat, est.delta_hat, ess))
                }
                Backend::SelfNormalized => {
                    let p = self_normalized_p_value(design_g, &data.samples, crit.tau)?;
                    let mu = crate::util::mean(design_g);
                    let wsum: f64 = weights.iter().sum();
                    let delta_u = if wsum > 0.0 {
                        data.samples.iter().map(GSample::rectifier).sum::<f64>() / wsum
                    } else {
                        0.0
                    };
                    Ok((p, mu + delta_u, mu, delta_u, ess))
                }
                _ => unreachable!(),
            }
        }
        Backend::Conformal | Backend::CalibratedForecast => {
            Err(Error::UnsupportedBackend(backend.name()))
        }
    }
}

/// Run the per-configuration hypothesis tests and assemble the report.
///
/// `design_g` maps each menu id to its g-transformed design predictions;
/// `labeled` maps ids to weighted labeled g-samples (weights are
/// configuration-specific even when the raw labeled set is shared).
pub fn select(
    menu: &Menu,
    design_g: &BTreeMap<String, Vec<f64>>,
    labeled: &BTreeMap<String, LabeledData>,
    crit: &SuccessCriterion,
    alpha: f64,
    backend: Backend,
    cfg: &BoundConfig,
) -> Result<SelectionReport> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::InvalidAlpha(alpha));
    }
    if !backend.is_p_value_backend() {
        return Err(Error::UnsupportedBackend(backend.name()));
    }
    for id in menu.ids() {
        if !design_g.contains_key(id) {
            return Err(Error::MissingDesignBatch(id.clone()));
        }
        if backend.needs_labeled() && !labeled.get(id).is_some_and(|l| !l.samples.is_empty()) {
            return Err(Error::MissingLabeledData(id.clone()));
        }
    }

    let per_config: Result<Vec<ConfigStats>> = menu
        .ids()
        .par_iter()
        .map(|id| {
            let (p, theta, mu, delta, ess) =
                config_p_value(backend, &design_g[id], labeled.get(id), crit, cfg)?;
            Ok(ConfigStats {
                id: id.clone(),
                p_value: Some(p),
                theta_hat: theta,
                mu_hat: mu,
                delta_hat: delta,
                effective_sample_size: ess,
                lower_bound: None,
            })
        })
        .collect();
    let per_config = per_config?;

    let threshold = alpha / menu.len() as f64;
    let selected = per_config
        .iter()
        .filter(|c| c.p_value.is_some_and(|p| p <= threshold))
        .map(|c| c.id.clone())
        .collect();

    Ok(SelectionReport {
        schema_version: 1,
        alpha,
        backend,
        n_configs: menu.len(),
        selected,
        per_config,
    })
}
