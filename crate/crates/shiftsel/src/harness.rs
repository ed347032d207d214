//! Multi-trial selection experiments on the synthetic design world.
//!
//! A run builds one instance (oracle, labeled library, fitted predictor,
//! temperature menu with exact design densities and exact ground-truth
//! metrics), then executes seeded trials. Each trial resamples labeled data
//! and designs, runs every requested backend at every threshold, and records
//! the selected sets. Per-trial randomness depends only on the master seed
//! and trial index, so sweep points share common random numbers and single
//! threshold runs reproduce sweep rows exactly.

use std::collections::BTreeMap;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::baselines::{calibrated_select, conformal_select, fit_calibrator, Forecast};
use crate::criterion::SuccessCriterion;
use crate::error::{Error, Result};
use crate::ppi::{BoundConfig, GSample};
use crate::ratio::{exact_ratio, max_ratio_bound, ProductCategorical};
use crate::selection::{select, Backend, LabeledData, Menu, SelectionReport};
use crate::sim::{
    brute_force_theta_capped, fit_ridge, make_labeled_dist, sample_labeled_with, tilt,
    AdditiveModel, LabelOracle, SequenceSpace, StopPenalty, DEFAULT_ENUMERATION_CAP,
};
use crate::util::quantile;

pub const SCHEMA_VERSION: u32 = 1;

/// Instance definition: the ground-truth world and the predictor trained on
/// it.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct InstanceConfig {
    pub sites: usize,
    pub alphabet: usize,
    pub noise_sd: f64,
    #[serde(default = "default_effect_scale")]
    pub effect_scale: f64,
    pub seed: u64,
    /// Training set size for the ridge predictor.
    pub n_train: usize,
    #[serde(default = "default_penalties")]
    pub penalties: Vec<f64>,
    /// Explicit site effects override the seeded draw.
    #[serde(default)]
    pub site_effects: Option<Vec<Vec<f64>>>,
    #[serde(default)]
    pub stop_symbol: Option<u8>,
    #[serde(default)]
    pub stop_factor: Option<f64>,
    /// Additive bias, in noise-sd units, injected into the predictor score of
    /// each site's design-favored symbol after fitting.
    #[serde(default)]
    pub prediction_bias: Option<f64>,
    #[serde(default = "default_enumeration_cap")]
    pub enumeration_cap: u64,
}

fn default_effect_scale() -> f64 {
    1.0
}

fn default_penalties() -> Vec<f64> {
    vec![1e-4, 1e-3, 1e-2, 1e-1, 1.0, 10.0]
}

fn default_enumeration_cap() -> u64 {
    DEFAULT_ENUMERATION_CAP
}

/// Menu definition: explicit temperatures or a geometric grid.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MenuConfig {
    #[serde(default)]
    pub temperatures: Option<Vec<f64>>,
    #[serde(default)]
    pub t_min: Option<f64>,
    #[serde(default)]
    pub t_max: Option<f64>,
    #[serde(default)]
    pub count: Option<usize>,
}

impl MenuConfig {
    pub fn resolve(&self) -> Result<Vec<f64>> {
        if let Some(ts) = &self.temperatures {
            if ts.is_empty() {
                return Err(Error::EmptyMenu);
            }
            return Ok(ts.clone());
        }
        match (self.t_min, self.t_max, self.count) {
            (Some(lo), Some(hi), Some(count)) if count >= 1 && lo > 0.0 && hi >= lo => {
                if count == 1 {
                    return Ok(vec![lo]);
                }
                let ratio = (hi / lo).powf(1.0 / (count - 1) as f64);
                Ok((0..count).map(|i| lo * ratio.powi(i as i32)).collect())
            }
            _ => Err(Error::InvalidConfig(
                "menu needs `temperatures` or valid `t_min`/`t_max`/`count`".into(),
            )),
        }
    }
}

/// Criterion definition with one or more thresholds to sweep.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CriterionConfig {
    pub kind: String,
    #[serde(default)]
    pub gamma: Option<f64>,
    #[serde(default)]
    pub g_lo: Option<f64>,
    #[serde(default)]
    pub g_hi: Option<f64>,
    #[serde(default)]
    pub taus: Option<Vec<f64>>,
    #[serde(default)]
    pub tau_min: Option<f64>,
    #[serde(default)]
    pub tau_max: Option<f64>,
    #[serde(default)]
    pub tau_steps: Option<usize>,
}

impl CriterionConfig {
    pub fn criterion(&self) -> Result<SuccessCriterion> {
        match self.kind.as_str() {
            "mean" => {
                let lo = self.g_lo.unwrap_or(f64::NEG_INFINITY);
                let hi = self.g_hi.unwrap_or(f64::INFINITY);
                Ok(SuccessCriterion::mean(0.0, lo, hi))
            }
            "exceedance" => {
                let gamma = self.gamma.ok_or_else(|| {
                    Error::InvalidConfig("exceedance criterion needs `gamma`".into())
                })?;
                Ok(SuccessCriterion::exceedance(gamma, 0.0))
            }
            other => Err(Error::InvalidConfig(format!(
                "unknown criterion kind {other:?}"
            ))),
        }
    }

    pub fn taus(&self) -> Result<Vec<f64>> {
        if let Some(taus) = &self.taus {
            if taus.is_empty() {
                return Err(Error::InvalidConfig("empty tau list".into()));
            }
            return Ok(taus.clone());
        }
        match (self.tau_min, self.tau_max, self.tau_steps) {
            (Some(lo), Some(hi), Some(steps)) if steps >= 1 && hi >= lo => {
                if steps == 1 {
                    return Ok(vec![lo]);
                }
                let d = (hi - lo) / (steps - 1) as f64;
                Ok((0..steps).map(|i| lo + d * i as f64).collect())
            }
            _ => Err(Error::InvalidConfig(
                "criterion needs `taus` or valid `tau_min`/`tau_max`/`tau_steps`".into(),
            )),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunConfig {
    #[serde(default = "default_alpha")]
    pub alpha: f64,
    pub backends: Vec<Backend>,
    pub n_labeled: usize,
    pub n_designs: usize,
    /// Trial count shared by every backend unless overridden below.
    pub trials: usize,
    /// Per-backend trial-count overrides, keyed by backend name. Methods
    /// whose inputs are cheap to resample can run more trials than others.
    #[serde(default)]
    pub backend_trials: BTreeMap<String, usize>,
    pub master_seed: u64,
}

fn default_alpha() -> f64 {
    0.1
}

impl RunConfig {
    /// Trial count for one backend.
    pub fn trials_for(&self, backend: Backend) -> usize {
        self.backend_trials
            .get(backend.name())
            .copied()
            .unwrap_or(self.trials)
    }

    /// Largest trial count over the requested backends.
    pub fn max_trials(&self) -> usize {
        self.backends
            .iter()
            .map(|&b| self.trials_for(b))
            .max()
            .unwrap_or(self.trials)
    }
}

fn default_bound() -> BoundConfig {
    BoundConfig::default()
}

/// Full experiment definition, loadable from structured key-value text.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub schema_version: u32,
    pub instance: InstanceConfig,
    pub menu: MenuConfig,
    pub criterion: CriterionConfig,
    pub experiment: RunConfig,
    #[serde(default = "default_bound")]
    pub bound: BoundConfig,
}

impl ExperimentConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let cfg: ExperimentConfig = toml::from_str(text)
            .map_err(|e| Error::InvalidConfig(format!("config parse error: {e}")))?;
        if cfg.schema_version != SCHEMA_VERSION {
            return Err(Error::InvalidConfig(format!(
                "schema_version {} unsupported; this build reads {SCHEMA_VERSION}",
                cfg.schema_version
            )));
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("config serialization")
    }

    pub fn validate(&self) -> Result<()> {
        if self.experiment.trials < 1 {
            return Err(Error::InvalidConfig("trials must be >= 1".into()));
        }
        for (name, &t) in &self.experiment.backend_trials {
            name.parse::<Backend>()?;
            if t < 1 {
                return Err(Error::InvalidConfig(format!(
                    "backend_trials.{name} must be >= 1"
                )));
            }
        }
        if !(self.experiment.alpha > 0.0 && self.experiment.alpha < 1.0) {
            return Err(Error::InvalidAlpha(self.experiment.alpha));
        }
        if self.experiment.backends.is_empty() {
            return Err(Error::InvalidConfig("no backends requested".into()));
        }
        if self.experiment.n_designs < 1 || self.experiment.n_labeled < 1 {
            return Err(Error::InvalidConfig(
                "n_designs and n_labeled must be >= 1".into(),
            ));
        }
        self.bound.validate()?;
        self.menu.resolve()?;
        self.criterion.criterion()?;
        self.criterion.taus()?;
        Ok(())
    }
}

/// One menu entry with everything needed to run it: the design distribution,
/// its exact density-ratio bound against the labeled library, and the exact
/// ground-truth metric.
#[derive(Debug, Clone)]
pub struct BuiltConfig {
    pub id: String,
    pub temperature: f64,
    pub design: ProductCategorical,
    pub ratio_bound: f64,
    pub theta: f64,
}

/// A fully materialized instance.
#[derive(Debug, Clone)]
pub struct Instance {
    pub space: SequenceSpace,
    pub oracle: LabelOracle,
    pub labeled_dist: ProductCategorical,
    pub predictor: AdditiveModel,
    /// Cross-validation RMSE of the predictor; used as the forecast sd.
    pub predictor_sd: f64,
    pub configs: Vec<BuiltConfig>,
}

impl Instance {
    pub fn menu(&self) -> Menu {
        Menu::new(self.configs.iter().map(|c| c.id.clone())).expect("nonempty unique menu")
    }

    pub fn thetas(&self) -> Vec<(String, f64)> {
        self.configs
            .iter()
            .map(|c| (c.id.clone(), c.theta))
            .collect()
    }
}

fn config_id(index: usize) -> String {
    format!("t{index:02}")
}

/// Build the world: draw or accept site effects, fit the predictor on seeded
/// training data, tilt it at each menu temperature, and compute exact ground
/// truth per configuration.
pub fn build_instance(cfg: &ExperimentConfig) -> Result<Instance> {
    let inst = &cfg.instance;
    let space = SequenceSpace::new(inst.sites, inst.alphabet);
    space.check_enumerable(inst.enumeration_cap)?;

    let oracle = match &inst.site_effects {
        Some(effects) => {
            if effects.len() != inst.sites || effects.iter().any(|r| r.len() != inst.alphabet) {
                return Err(Error::InvalidConfig(
                    "site_effects shape must be sites x alphabet".into(),
                ));
            }
            LabelOracle::additive(effects.clone(), inst.noise_sd)
        }
        None => LabelOracle::random_additive(space, inst.effect_scale, inst.noise_sd, inst.seed),
    };

    let stop = match (inst.stop_symbol, inst.stop_factor) {
        (Some(symbol), Some(factor)) => Some(StopPenalty { symbol, factor }),
        (None, None) => None,
        _ => {
            return Err(Error::InvalidConfig(
                "stop_symbol and stop_factor must be set together".into(),
            ))
        }
    };
    let labeled_dist = make_labeled_dist(space, stop)?;

    // Training data are a separate seeded stream from trial data.
    let mut train_rng = ChaCha8Rng::seed_from_u64(inst.seed);
    train_rng.set_stream(u64::MAX);
    let train = sample_labeled_with(&labeled_dist, &oracle, inst.n_train, &mut train_rng);
    let fit = fit_ridge(&train, inst.alphabet, &inst.penalties, 5)?;
    let predictor = match inst.prediction_bias {
        Some(k) => fit.model.with_favored_bias(k * inst.noise_sd),
        None => fit.model,
    };

    let crit = cfg.criterion.criterion()?;
    let temperatures = cfg.menu.resolve()?;
    let mut configs = Vec::with_capacity(temperatures.len());
    for (i, &temperature) in temperatures.iter().enumerate() {
        let design = tilt(&predictor, temperature)?.q;
        let ratio_bound = max_ratio_bound(&design, &labeled_dist)?;
        let theta = brute_force_theta_capped(&design, &oracle, &crit, inst.enumeration_cap)?;
        configs.push(BuiltConfig {
            id: config_id(i),
            temperature,
            design,
            ratio_bound,
            theta,
        });
    }

    Ok(Instance {
        space,
        oracle,
        labeled_dist,
        predictor,
        predictor_sd: fit.cv_rmse,
        configs,
    })
}

/// Outcome of one backend at one threshold in one trial.
#[derive(Debug, Clone, PartialEq)]
pub struct TrialRecord {
    pub tau: f64,
    pub backend: Backend,
    pub trial: usize,
    pub selected: Vec<String>,
    /// Per-configuration decision statistic: the p-value for p-value
    /// backends, the confidence lower bound for the conformal selector, and
    /// the mixture expectation for the calibrated selector.
    pub stats: Vec<(String, f64)>,
    pub any_error: bool,
    pub worst_theta: Option<f64>,
}

/// Aggregated metrics for one (threshold, backend) cell.
#[derive(Debug, Clone, PartialEq)]
pub struct TauSummary {
    pub tau: f64,
    pub backend: Backend,
    pub trials: usize,
    pub error_rate: f64,
    pub selection_rate: f64,
    pub n_nonempty: usize,
    pub worst_theta_p20: Option<f64>,
    pub worst_theta_p50: Option<f64>,
    pub worst_theta_p80: Option<f64>,
}

#[derive(Debug, Clone)]
pub struct ExperimentOutput {
    pub thetas: Vec<(String, f64)>,
    pub records: Vec<TrialRecord>,
    pub summaries: Vec<TauSummary>,
}

/// Per-trial resampled data, shared by every backend and threshold.
struct TrialData {
    /// g-transformed design predictions per config.
    design_g: BTreeMap<String, Vec<f64>>,
    /// Weighted labeled g-samples per config.
    labeled_g: BTreeMap<String, LabeledData>,
    /// Per-design (prediction, own density ratio) per config, label units.
    conformal_designs: BTreeMap<String, Vec<crate::baselines::ConformalDesign>>,
    /// Labeled residuals (pred - label) and weights per config, label units.
    conformal_labeled: BTreeMap<String, (Vec<f64>, Vec<f64>)>,
    /// Gaussian forecasts per config for the calibrated selector.
    forecasts: BTreeMap<String, Vec<Forecast>>,
    /// Calibration triples (forecast mean, sd, label).
    calibration: Vec<(f64, f64, f64)>,
}

const STREAMS_PER_TRIAL: u64 = 1024;

fn trial_rng(master_seed: u64, trial: usize, purpose: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(master_seed);
    rng.set_stream(trial as u64 * STREAMS_PER_TRIAL + purpose);
    rng
}

fn generate_trial_data(
    cfg: &ExperimentConfig,
    instance: &Instance,
    crit: &SuccessCriterion,
    trial: usize,
) -> Result<TrialData> {
    let run = &cfg.experiment;
    let wants = |b: Backend| run.backends.contains(&b) && trial < run.trials_for(b);
    let needs_conformal = wants(Backend::Conformal);
    let needs_calibrated = wants(Backend::CalibratedForecast);

    let mut labeled_rng = trial_rng(run.master_seed, trial, 0);
    let labeled = sample_labeled_with(
        &instance.labeled_dist,
        &instance.oracle,
        run.n_labeled,
        &mut labeled_rng,
    );
    let labeled_preds: Vec<f64> = labeled
        .iter()
        .map(|(x, _)| instance.predictor.predict(x))
        .collect();

    let mut design_g = BTreeMap::new();
    let mut labeled_g = BTreeMap::new();
    let mut conformal_designs = BTreeMap::new();
    let mut conformal_labeled = BTreeMap::new();
    let mut forecasts = BTreeMap::new();

    for (c, config) in instance.configs.iter().enumerate() {
        // Weighted labeled g-samples with configuration-specific ratios.
        let mut samples = Vec::with_capacity(labeled.len());
        let mut weights = Vec::with_capacity(labeled.len());
        for ((x, y), &pred) in labeled.iter().zip(&labeled_preds) {
            let w = exact_ratio(&config.design, &instance.labeled_dist, x)?;
            weights.push(w);
            samples.push(GSample::from_raw(crit, *y, pred, w));
        }
        labeled_g.insert(
            config.id.clone(),
            LabeledData::with_ratio_bound(samples, config.ratio_bound),
        );

        // Designs, streamed one at a time to avoid materializing sequences.
        let mut design_rng = trial_rng(run.master_seed, trial, 1 + c as u64);
        let mut g_values = Vec::with_capacity(run.n_designs);
        let mut cd = Vec::with_capacity(if needs_conformal { run.n_designs } else { 0 });
        let mut fc = Vec::with_capacity(if needs_calibrated { run.n_designs } else { 0 });
        for _ in 0..run.n_designs {
            let x = config.design.sample(&mut design_rng);
            let pred = instance.predictor.predict(&x);
            g_values.push(crit.g_of(pred));
            if needs_conformal {
                cd.push(crate::baselines::ConformalDesign {
                    pred,
                    weight: exact_ratio(&config.design, &instance.labeled_dist, &x)?,
                });
            }
            if needs_calibrated {
                fc.push(Forecast {
                    mean: pred,
                    sd: instance.predictor_sd,
                });
            }
        }
        design_g.insert(config.id.clone(), g_values);
        if needs_conformal {
            conformal_designs.insert(config.id.clone(), cd);
            let residuals: Vec<f64> = labeled
                .iter()
                .zip(&labeled_preds)
                .map(|((_, y), &pred)| pred - y)
                .collect();
            conformal_labeled.insert(config.id.clone(), (residuals, weights));
        }
        if needs_calibrated {
            forecasts.insert(config.id.clone(), fc);
        }
    }

    let calibration: Vec<(f64, f64, f64)> = if needs_calibrated {
        labeled
            .iter()
            .zip(&labeled_preds)
            .map(|((_, y), &pred)| (pred, instance.predictor_sd, *y))
            .collect()
    } else {
        Vec::new()
    };

    Ok(TrialData {
        design_g,
        labeled_g,
        conformal_designs,
        conformal_labeled,
        forecasts,
        calibration,
    })
}

fn report_stats(report: &SelectionReport) -> Vec<(String, f64)> {
    report
        .per_config
        .iter()
        .map(|c| {
            let stat = c.p_value.or(c.lower_bound).unwrap_or(c.theta_hat);
            (c.id.clone(), stat)
        })
        .collect()
}

fn run_backend_at_tau(
    cfg: &ExperimentConfig,
    menu: &Menu,
    data: &TrialData,
    crit: &SuccessCriterion,
    backend: Backend,
) -> Result<SelectionReport> {
    let run = &cfg.experiment;
    match backend {
        Backend::Conformal => {
            if !matches!(crit.g, crate::criterion::GKind::Mean) {
                return Err(Error::MeanCriterionRequired);
            }
            conformal_select(
                menu,
                &data.conformal_designs,
                &data.conformal_labeled,
                crit.tau,
                run.alpha,
            )
        }
        Backend::CalibratedForecast => {
            let calibrator = fit_calibrator(&data.calibration)?;
            calibrated_select(menu, &data.forecasts, &calibrator, crit)
        }
        _ => select(
            menu,
            &data.design_g,
            &data.labeled_g,
            crit,
            run.alpha,
            backend,
            &cfg.bound,
        ),
    }
}

/// Run every trial, backend, and threshold; aggregate summaries.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ExperimentOutput> {
    cfg.validate()?;
    let instance = build_instance(cfg)?;
    run_experiment_on(cfg, &instance)
}

/// Run with a pre-built instance (lets callers inspect or tweak the world).
pub fn run_experiment_on(cfg: &ExperimentConfig, instance: &Instance) -> Result<ExperimentOutput> {
    let crit_base = cfg.criterion.criterion()?;
    let taus = cfg.criterion.taus()?;
    let menu = instance.menu();
    let theta_by_id: BTreeMap<String, f64> = instance.thetas().into_iter().collect();

    let trial_results: Result<Vec<Vec<TrialRecord>>> = (0..cfg.experiment.max_trials())
        .into_par_iter()
        .map(|trial| {
            let data = generate_trial_data(cfg, instance, &crit_base, trial)?;
            let mut records = Vec::with_capacity(taus.len() * cfg.experiment.backends.len());
            for &tau in &taus {
                let crit = crit_base.with_tau(tau);
                for &backend in &cfg.experiment.backends {
                    if trial >= cfg.experiment.trials_for(backend) {
                        continue;
                    }
                    let report = run_backend_at_tau(cfg, &menu, &data, &crit, backend)?;
                    let worst_theta = report
                        .selected
                        .iter()
                        .map(|id| theta_by_id[id])
                        .min_by(|a, b| a.total_cmp(b));
                    let any_error = worst_theta.is_some_and(|w| w < tau);
                    records.push(TrialRecord {
                        tau,
                        backend,
                        trial,
                        selected: report.selected.clone(),
                        stats: report_stats(&report),
                        any_error,
                        worst_theta,
                    });
                }
            }
            Ok(records)
        })
        .collect();

    let records: Vec<TrialRecord> = trial_results?.into_iter().flatten().collect();
    let summaries = summarize_records(&records);
    Ok(ExperimentOutput {
        thetas: instance.thetas(),
        records,
        summaries,
    })
}

/// Aggregate records into per-(threshold, backend) summaries. Cells appear in
/// first-occurrence order of the record stream.
pub fn summarize_records(records: &[TrialRecord]) -> Vec<TauSummary> {
    let mut order: Vec<(f64, Backend)> = Vec::new();
    for r in records {
        if !order
            .iter()
            .any(|&(t, b)| t.to_bits() == r.tau.to_bits() && b == r.backend)
        {
            order.push((r.tau, r.backend));
        }
    }
    order
        .into_iter()
        .map(|(tau, backend)| {
            let cell: Vec<&TrialRecord> = records
                .iter()
                .filter(|r| r.tau.to_bits() == tau.to_bits() && r.backend == backend)
                .collect();
            let trials = cell.len();
            let errors = cell.iter().filter(|r| r.any_error).count();
            let worst: Vec<f64> = cell.iter().filter_map(|r| r.worst_theta).collect();
            let n_nonempty = worst.len();
            let pct = |q: f64| {
                if worst.is_empty() {
                    None
                } else {
                    Some(quantile(&worst, q))
                }
            };
            TauSummary {
                tau,
                backend,
                trials,
                error_rate: errors as f64 / trials as f64,
                selection_rate: n_nonempty as f64 / trials as f64,
                n_nonempty,
                worst_theta_p20: pct(0.2),
                worst_theta_p50: pct(0.5),
                worst_theta_p80: pct(0.8),
            }
        })
        .collect()
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map(|x| format!("{x}")).unwrap_or_default()
}

/// Records table: one row per trial per threshold per backend, tab-delimited.
pub fn records_to_tsv(records: &[TrialRecord]) -> String {
    let mut out =
        String::from("tau\tbackend\ttrial\tn_selected\tany_error\tworst_theta\tselected\tstats\n");
    for r in records {
        let stats = r
            .stats
            .iter()
            .map(|(id, v)| format!("{id}={v}"))
            .collect::<Vec<_>>()
            .join(";");
        out.push_str(&format!(
            "{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\n",
            r.tau,
            r.backend.name(),
            r.trial,
            r.selected.len(),
            u8::from(r.any_error),
            fmt_opt(r.worst_theta),
            r.selected.join(";"),
            stats
        ));
    }
    out
}

/// Parse a records table produced by `records_to_tsv`.
pub fn records_from_tsv(text: &str) -> Result<Vec<TrialRecord>> {
    let mut lines = text.lines();
    let header = lines
        .next()
        .ok_or_else(|| Error::InvalidConfig("empty records file".into()))?;
    if !header.starts_with("tau\tbackend\ttrial") {
        return Err(Error::InvalidConfig("unrecognized records header".into()));
    }
    let mut records = Vec::new();
    for (lineno, line) in lines.enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let cols: Vec<&str> = line.split('\t').collect();
        if cols.len() != 8 {
            return Err(Error::InvalidConfig(format!(
                "line {}: expected 8 columns, got {}",
                lineno + 2,
                cols.len()
            )));
        }
        let parse_f = |s: &str| -> Result<f64> {
            s.parse()
                .map_err(|e| Error::InvalidConfig(format!("line {}: {e}", lineno + 2)))
        };
        let tau = parse_f(cols[0])?;
        let backend: Backend = cols[1].parse()?;
        let trial: usize = cols[2]
            .parse()
            .map_err(|e| Error::InvalidConfig(format!("line {}: {e}", lineno + 2)))?;
        let any_error = cols[4] == "1";
        let worst_theta = if cols[5].is_empty() {
            None
        } else {
            Some(parse_f(cols[5])?)
        };
        let selected: Vec<String> = if cols[6].is_empty() {
            Vec::new()
        } else {
            cols[6].split(';').map(str::to_string).collect()
        };
        let mut stats = Vec::new();
        if !cols[7].is_empty() {
            for pair in cols[7].split(';') {
                let (id, v) = pair.split_once('=').ok_or_else(|| {
                    Error::InvalidConfig(format!("line {}: bad stat {pair:?}", lineno + 2))
                })?;
                stats.push((id.to_string(), parse_f(v)?));
            }
        }
        records.push(TrialRecord {
            tau,
            backend,
            trial,
            selected,
            stats,
            any_error,
            worst_theta,
        });
    }
    Ok(records)
}

/// Plot-ready summary table.
pub fn summaries_to_tsv(summaries: &[TauSummary]) -> String {
    let mut out = String::from(
        "tau\tbackend\ttrials\terror_rate\tselection_rate\tn_nonempty\tworst_theta_p20\tworst_theta_p50\tworst_theta_p80\n",
    );
    for s in summaries {
        out.push_str(&format!(
            "{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\n",
            s.tau,
            s.backend.name(),
            s.trials,
            s.error_rate,
            s.selection_rate,
            s.n_nonempty,
            fmt_opt(s.worst_theta_p20),
            fmt_opt(s.worst_theta_p50),
            fmt_opt(s.worst_theta_p80),
        ));
    }
    out
}

/// Ground-truth table for the menu.
pub fn thetas_to_tsv(thetas: &[(String, f64)], instance: &Instance) -> String {
    let mut out = String::from("config\ttemperature\ttheta\tratio_bound\n");
    for (id, theta) in thetas {
        let config = instance
            .configs
            .iter()
            .find(|c| &c.id == id)
            .expect("theta id in menu");
        out.push_str(&format!(
            "{id}\t{}\t{theta}\t{}\n",
            config.temperature, config.ratio_bound
        ));
    }
    out
}
