//! Property tests for the algebraic invariants.

use std::collections::BTreeMap;

use proptest::prelude::*;

use shiftsel::baselines::{fit_calibrator, split_conformal_lb, WeightedResidualSet};
use shiftsel::ppi::{
    finite_sample_p_value, pp_mean_lower_bound, self_normalized_p_value, BoundConfig,
};
use shiftsel::ratio::{exact_ratio, for_each_sequence, ProductCategorical};
use shiftsel::selection::{select, Backend, LabeledData, Menu};
use shiftsel::wsr::wsr_mean_lower_bound;
use shiftsel::{apply_g, GSample, SuccessCriterion};

fn unit_vec(max_len: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(0.0f64..=1.0, 1..max_len)
}

fn gsamples(max_len: usize, max_w: f64) -> impl Strategy<Value = Vec<GSample>> {
    prop::collection::vec((0.0f64..=1.0, 0.0f64..=1.0, 0.0f64..max_w), 1..max_len).prop_map(
        |triples| {
            triples
                .into_iter()
                .map(|(y, p, w)| GSample::new(y, p, w))
                .collect()
        },
    )
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    // The composite lower bound is exactly the sum of its two betting bounds.
    #[test]
    fn composite_bound_is_sum_of_parts(
        design_g in unit_vec(30),
        labeled in gsamples(30, 2.0),
        alpha in 0.02f64..0.5,
    ) {
        let cfg = BoundConfig {
            alpha_grid_step: 0.05,
            mean_grid_step: 0.05,
            ratio_bound: 2.0,
            alpha_split: 0.1,
        };
        let crit = SuccessCriterion::mean(0.0, 0.0, 1.0);
        let total = pp_mean_lower_bound(alpha, &design_g, &labeled, &crit, &cfg).unwrap();
        let design_part =
            wsr_mean_lower_bound(0.1 * alpha, &design_g, 0.0, 1.0, 0.05).unwrap();
        let rect: Vec<f64> = labeled.iter().map(GSample::rectifier).collect();
        let rect_part = wsr_mean_lower_bound(0.9 * alpha, &rect, -2.0, 2.0, 0.05).unwrap();
        prop_assert_eq!(total, design_part + rect_part);
    }

    // Rescaling unnormalized weights never moves the p-value.
    #[test]
    fn self_normalized_invariant_to_weight_scale(
        design_g in unit_vec(40),
        labeled in gsamples(40, 5.0),
        tau in 0.0f64..1.0,
        c in prop::sample::select(vec![1e-6, 1e-3, 1.0, 1e3, 1e6]),
    ) {
        prop_assume!(labeled.iter().any(|s| s.weight > 0.0));
        let base = self_normalized_p_value(&design_g, &labeled, tau).unwrap();
        let scaled: Vec<GSample> = labeled
            .iter()
            .map(|s| GSample::new(s.g_label, s.g_pred, s.weight * c))
            .collect();
        let p = self_normalized_p_value(&design_g, &scaled, tau).unwrap();
        prop_assert!((p - base).abs() <= 1e-12 * base.abs().max(f64::MIN_POSITIVE));
    }

    // The betting bound stays inside the declared range and cannot exceed the
    // largest observation by more than one grid step.
    #[test]
    fn wsr_bound_stays_in_range(
        samples in unit_vec(60),
        alpha in 0.01f64..0.9,
    ) {
        let step = 0.02;
        let b = wsr_mean_lower_bound(alpha, &samples, 0.0, 1.0, step).unwrap();
        let max = samples.iter().cloned().fold(0.0f64, f64::max);
        prop_assert!((0.0..=1.0).contains(&b));
        prop_assert!(b <= max + step + 1e-12, "bound {} above max sample {}", b, max);
    }

    // Larger thresholds never make the finite-sample p-value smaller.
    #[test]
    fn finite_sample_p_monotone_in_tau(
        design_g in unit_vec(25),
        labeled in gsamples(25, 2.0),
        tau_lo in -0.5f64..1.0,
        gap in 0.0f64..1.0,
    ) {
        let cfg = BoundConfig {
            alpha_grid_step: 0.1,
            mean_grid_step: 0.1,
            ratio_bound: 2.0,
            alpha_split: 0.1,
        };
        let lo = SuccessCriterion::mean(tau_lo, 0.0, 1.0);
        let hi = SuccessCriterion::mean(tau_lo + gap, 0.0, 1.0);
        let p_lo = finite_sample_p_value(&design_g, &labeled, &lo, &cfg).unwrap();
        let p_hi = finite_sample_p_value(&design_g, &labeled, &hi, &cfg).unwrap();
        prop_assert!(p_lo <= p_hi);
    }

    // Shrinking alpha never raises the conformal lower bound.
    #[test]
    fn conformal_bound_monotone_in_alpha(
        residuals in prop::collection::vec(-2.0f64..2.0, 1..30),
        weights_seed in prop::collection::vec(0.0f64..3.0, 1..30),
        v in 0.0f64..2.0,
    ) {
        let n = residuals.len().min(weights_seed.len());
        let set = WeightedResidualSet::new(
            residuals[..n].to_vec(),
            weights_seed[..n].to_vec(),
            v,
        ).unwrap();
        let mut last = f64::INFINITY;
        for alpha in [0.5, 0.25, 0.1, 0.05, 0.01] {
            let lb = split_conformal_lb(0.0, &set, alpha).unwrap();
            prop_assert!(lb <= last);
            last = lb;
        }
    }

    // Fitted calibration maps are monotone and stay inside the unit square.
    #[test]
    fn calibrator_monotone_on_dense_grid(
        data in prop::collection::vec(
            (-2.0f64..2.0, 0.1f64..2.0, -3.0f64..3.0),
            1..60,
        ),
    ) {
        let cal = fit_calibrator(&data).unwrap();
        let mut last = -1.0f64;
        for i in 0..=1000 {
            let u = i as f64 / 1000.0;
            let v = cal.eval(u);
            prop_assert!((0.0..=1.0).contains(&v));
            prop_assert!(v >= last);
            last = v;
        }
    }

    // Exceedance transforms are indicators with the boundary included.
    #[test]
    fn exceedance_is_boundary_inclusive_indicator(
        raw in prop::collection::vec(-5.0f64..5.0, 0..40),
        gamma in -3.0f64..3.0,
    ) {
        let crit = SuccessCriterion::exceedance(gamma, 0.5);
        let g = apply_g(&crit, &raw);
        for (y, gy) in raw.iter().zip(&g) {
            prop_assert_eq!(*gy, f64::from(u8::from(*y >= gamma)));
        }
    }

    // Change of measure: reweighting the labeled law by exact ratios
    // reproduces design-law expectations of arbitrary site-sum functions.
    #[test]
    fn change_of_measure_identity(
        dw in prop::collection::vec(prop::collection::vec(0.05f64..1.0, 3), 3),
        lw in prop::collection::vec(prop::collection::vec(0.05f64..1.0, 3), 3),
        h_table in prop::collection::vec(prop::collection::vec(-2.0f64..2.0, 3), 3),
    ) {
        let design = ProductCategorical::from_weights(dw).unwrap();
        let labeled = ProductCategorical::from_weights(lw).unwrap();
        let h = |x: &[u8]| -> f64 {
            x.iter().enumerate().map(|(s, &a)| h_table[s][a as usize]).sum()
        };
        let mut lhs = 0.0;
        let mut rhs = 0.0;
        for_each_sequence(3, 3, |x| {
            let pl = labeled.density(x).unwrap();
            let pd = design.density(x).unwrap();
            lhs += pl * exact_ratio(&design, &labeled, x).unwrap() * h(x);
            rhs += pd * h(x);
        });
        prop_assert!((lhs - rhs).abs() <= 1e-10, "lhs {} rhs {}", lhs, rhs);
    }

    // The report's selected set is exactly the Bonferroni rule applied to its
    // own stored p-values.
    #[test]
    fn report_selection_recomputable(
        seed_vals in prop::collection::vec(0.3f64..0.9, 2..6),
        alpha in 0.02f64..0.4,
    ) {
        let ids: Vec<String> = (0..seed_vals.len()).map(|i| format!("c{i}")).collect();
        let menu = Menu::new(ids.clone()).unwrap();
        let mut design_g = BTreeMap::new();
        let mut labeled = BTreeMap::new();
        for (id, v) in ids.iter().zip(&seed_vals) {
            let designs: Vec<f64> = (0..80).map(|k| (v * 0.9) + 0.001 * (k % 7) as f64).collect();
            design_g.insert(id.clone(), designs);
            let samples: Vec<GSample> = (0..40)
                .map(|k| {
                    let g = 0.4 + 0.01 * (k % 5) as f64;
                    GSample::new(g, g, 1.0)
                })
                .collect();
            labeled.insert(id.clone(), LabeledData::new(samples));
        }
        let crit = SuccessCriterion::mean(0.5, 0.0, 1.0);
        let report = select(
            &menu,
            &design_g,
            &labeled,
            &crit,
            alpha,
            Backend::Asymptotic,
            &BoundConfig::default(),
        )
        .unwrap();
        prop_assert_eq!(report.recompute_selected(), report.selected);
    }
}
