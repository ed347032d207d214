//! Shared fixtures for the integration suites.

use shiftsel::harness::{CriterionConfig, ExperimentConfig, InstanceConfig, MenuConfig, RunConfig};
use shiftsel::ppi::BoundConfig;
use shiftsel::ratio::ProductCategorical;
use shiftsel::selection::Backend;
use shiftsel::sim::{tilt, AdditiveModel, LabelOracle, SequenceSpace};
use shiftsel::SuccessCriterion;

/// The default desk-scale world: 6 sites over 8 symbols (262,144 states),
/// unit-scale site effects, label noise 0.25, and a geometric menu of 21
/// temperatures.
pub fn desk_scale_config(
    gamma: f64,
    taus: Vec<f64>,
    backends: Vec<Backend>,
    trials: usize,
) -> ExperimentConfig {
    ExperimentConfig {
        schema_version: 1,
        instance: InstanceConfig {
            sites: 6,
            alphabet: 8,
            noise_sd: 0.25,
            effect_scale: 1.0,
            seed: 20240801,
            n_train: 2000,
            penalties: vec![1e-4, 1e-3, 1e-2, 1e-1, 1.0],
            site_effects: None,
            stop_symbol: None,
            stop_factor: None,
            prediction_bias: None,
            enumeration_cap: 1_000_000,
        },
        menu: MenuConfig {
            temperatures: None,
            t_min: Some(0.2),
            t_max: Some(5.0),
            count: Some(21),
        },
        criterion: CriterionConfig {
            kind: "exceedance".into(),
            gamma: Some(gamma),
            g_lo: None,
            g_hi: None,
            taus: Some(taus),
            tau_min: None,
            tau_max: None,
            tau_steps: None,
        },
        experiment: RunConfig {
            alpha: 0.1,
            backends,
            n_labeled: 2000,
            n_designs: 50000,
            trials,
            backend_trials: Default::default(),
            master_seed: 7,
        },
        // Coarser grids than the library defaults keep the multi-hundred
        // trial suites fast; validity is grid-independent, only power moves.
        bound: BoundConfig {
            alpha_grid_step: 0.01,
            mean_grid_step: 0.01,
            ..BoundConfig::default()
        },
    }
}

/// A small world whose configuration sits exactly at the threshold: the
/// returned criterion has `tau` equal to the exact metric of the returned
/// design distribution. The predictor is deliberately miscalibrated (scaled
/// and shifted oracle scores) so the rectifier has real work to do.
pub struct BoundaryNullWorld {
    pub labeled_dist: ProductCategorical,
    pub oracle: LabelOracle,
    pub predictor: AdditiveModel,
    pub design: ProductCategorical,
    pub crit: SuccessCriterion,
}

pub fn boundary_null_world(mean_criterion: bool, seed: u64) -> BoundaryNullWorld {
    let space = SequenceSpace::new(4, 5);
    let oracle = LabelOracle::random_additive(space, 1.0, 0.3, seed);
    let mut table = oracle.site_effects.clone();
    for (s, row) in table.iter_mut().enumerate() {
        for (a, v) in row.iter_mut().enumerate() {
            // Deterministic distortion: wrong scale plus a symbol-dependent
            // tilt the importance-weighted rectifier must undo.
            *v = 1.15 * *v + 0.08 * ((s + a) % 3) as f64;
        }
    }
    let predictor = AdditiveModel {
        table,
        intercept: 0.3,
    };
    let design = tilt(&predictor, 1.5).unwrap().q;
    let labeled_dist = ProductCategorical::uniform(4, 5);

    let crit = if mean_criterion {
        let probe = SuccessCriterion::mean(0.0, -25.0, 25.0);
        let theta = shiftsel::sim::brute_force_theta(&design, &oracle, &probe).unwrap();
        SuccessCriterion::mean(theta, -25.0, 25.0)
    } else {
        let gamma = 1.0;
        let probe = SuccessCriterion::exceedance(gamma, 0.0);
        let theta = shiftsel::sim::brute_force_theta(&design, &oracle, &probe).unwrap();
        SuccessCriterion::exceedance(gamma, theta)
    };

    BoundaryNullWorld {
        labeled_dist,
        oracle,
        predictor,
        design,
        crit,
    }
}

pub fn binomial_se(p: f64, n: usize) -> f64 {
    (p * (1.0 - p) / n as f64).sqrt()
}
