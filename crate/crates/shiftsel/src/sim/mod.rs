//! Synthetic sequence-design world with exact ground truth.
//!
//! Sequences of length L over an alphabet of size A receive labels from an
//! additive oracle (optionally with sparse pairwise terms) plus Gaussian
//! noise. Labeled data come from a near-uniform library; design distributions
//! are temperature-tilted softmaxes of an additive score table, so design
//! densities are exact product categoricals and the population-level metric
//! of any configuration can be computed by enumeration.

mod ridge;

pub use ridge::{fit_ridge, RidgeFit};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::criterion::{GKind, SuccessCriterion};
use crate::error::{Error, Result};
use crate::ratio::ProductCategorical;
use crate::util::std_normal_cdf;

/// Default cap on the number of enumerable states.
pub const DEFAULT_ENUMERATION_CAP: u64 = 1_000_000;

/// The sequence space `{0..A-1}^L`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SequenceSpace {
    pub sites: usize,
    pub alphabet: usize,
}

impl SequenceSpace {
    pub fn new(sites: usize, alphabet: usize) -> Self {
        SequenceSpace { sites, alphabet }
    }

    pub fn states(&self) -> u128 {
        (self.alphabet as u128).pow(self.sites as u32)
    }

    /// Errors when the space exceeds `cap` states.
    pub fn check_enumerable(&self, cap: u64) -> Result<()> {
        let states = self.states();
        if states > cap as u128 {
            return Err(Error::SpaceTooLarge(states, cap));
        }
        Ok(())
    }
}

/// Down-weighting of one designated symbol at every site, mimicking the
/// reduced stop-codon probability of near-uniform libraries.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StopPenalty {
    pub symbol: u8,
    /// Multiplicative weight on the penalized symbol; 0 removes it from the
    /// support.
    pub factor: f64,
}

/// Near-uniform labeled distribution, optionally down-weighting a symbol.
pub fn make_labeled_dist(
    space: SequenceSpace,
    stop_penalty: Option<StopPenalty>,
) -> Result<ProductCategorical> {
    match stop_penalty {
        None => Ok(ProductCategorical::uniform(space.sites, space.alphabet)),
        Some(p) => {
            if p.symbol as usize >= space.alphabet {
                return Err(Error::SymbolOutOfRange {
                    symbol: p.symbol,
                    alphabet: space.alphabet,
                });
            }
            if !p.factor.is_finite() || p.factor < 0.0 {
                return Err(Error::InvalidConfig(format!(
                    "stop penalty factor {} must be finite and nonnegative",
                    p.factor
                )));
            }
            let mut weights = vec![1.0; space.alphabet];
            weights[p.symbol as usize] = p.factor;
            ProductCategorical::from_weights(vec![weights; space.sites])
        }
    }
}

/// A sparse pairwise interaction term.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PairEffect {
    pub site_a: usize,
    pub site_b: usize,
    pub symbol_a: u8,
    pub symbol_b: u8,
    pub effect: f64,
}

/// Ground-truth label model: additive site effects, optional pairwise terms,
/// Gaussian observation noise.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabelOracle {
    pub site_effects: Vec<Vec<f64>>,
    pub pair_effects: Vec<PairEffect>,
    pub noise_sd: f64,
}

impl LabelOracle {
    pub fn additive(site_effects: Vec<Vec<f64>>, noise_sd: f64) -> Self {
        LabelOracle {
            site_effects,
            pair_effects: Vec::new(),
            noise_sd,
        }
    }

    /// Site effects drawn i.i.d. standard normal, scaled by `scale`.
    pub fn random_additive(space: SequenceSpace, scale: f64, noise_sd: f64, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let normal = Normal::new(0.0, 1.0).expect("unit normal");
        let site_effects = (0..space.sites)
            .map(|_| {
                (0..space.alphabet)
                    .map(|_| scale * normal.sample(&mut rng))
                    .collect()
            })
            .collect();
        LabelOracle {
            site_effects,
            pair_effects: Vec::new(),
            noise_sd,
        }
    }

    pub fn sites(&self) -> usize {
        self.site_effects.len()
    }

    pub fn alphabet(&self) -> usize {
        self.site_effects.first().map_or(0, Vec::len)
    }

    /// Conditional label mean m(x).
    pub fn mean_label(&self, x: &[u8]) -> f64 {
        let mut m = 0.0;
        for (s, &a) in x.iter().enumerate() {
            m += self.site_effects[s][a as usize];
        }
        for pe in &self.pair_effects {
            if x[pe.site_a] == pe.symbol_a && x[pe.site_b] == pe.symbol_b {
                m += pe.effect;
            }
        }
        m
    }

    pub fn sample_label<R: Rng>(&self, x: &[u8], rng: &mut R) -> f64 {
        let mean = self.mean_label(x);
        if self.noise_sd == 0.0 {
            mean
        } else {
            let noise = Normal::new(0.0, self.noise_sd).expect("label noise");
            mean + noise.sample(rng)
        }
    }
}

/// Additive prediction model: per-site per-symbol scores plus an intercept.
/// Doubles as the tilt score table because the softmax ignores the intercept.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdditiveModel {
    pub table: Vec<Vec<f64>>,
    pub intercept: f64,
}

impl AdditiveModel {
    pub fn predict(&self, x: &[u8]) -> f64 {
        let mut v = self.intercept;
        for (s, &a) in x.iter().enumerate() {
            v += self.table[s][a as usize];
        }
        v
    }

    /// Per-site argmax symbols; the symbols a tilted design favors.
    pub fn favored_symbols(&self) -> Vec<u8> {
        self.table
            .iter()
            .map(|row| {
                row.iter()
                    .enumerate()
                    .max_by(|(_, a), (_, b)| a.total_cmp(b))
                    .map(|(i, _)| i as u8)
                    .unwrap_or(0)
            })
            .collect()
    }

    /// Copy with `delta` added to the score of each site's favored symbol.
    pub fn with_favored_bias(&self, delta: f64) -> AdditiveModel {
        let favored = self.favored_symbols();
        let mut table = self.table.clone();
        for (s, &a) in favored.iter().enumerate() {
            table[s][a as usize] += delta;
        }
        AdditiveModel {
            table,
            intercept: self.intercept,
        }
    }
}

/// A temperature-tilted design distribution with its exact density.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TiltedDesign {
    pub temperature: f64,
    pub q: ProductCategorical,
}

/// Tilt an additive score table at temperature `t`: each site's distribution
/// is the softmax of its scores divided by `t`.
///
/// Because the scores are additive the tilted density factorizes exactly, so
/// this sitewise softmax is the exact KL projection of `exp(f(x)/t)` onto
/// product distributions; no iterative fit is involved.
pub fn tilt(model: &AdditiveModel, temperature: f64) -> Result<TiltedDesign> {
    if !temperature.is_finite() || temperature <= 0.0 {
        return Err(Error::NonPositiveTemperature(temperature));
    }
    let mut probs = Vec::with_capacity(model.table.len());
    for row in &model.table {
        let max = row.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let weights: Vec<f64> = row
            .iter()
            .map(|&f| ((f - max) / temperature).exp())
            .collect();
        probs.push(weights);
    }
    Ok(TiltedDesign {
        temperature,
        q: ProductCategorical::from_weights(probs)?,
    })
}

/// Exact population-level metric `E[g(Y)]` under design distribution `q`,
/// computed by enumerating the sequence space.
///
/// The mean case uses the noise-free conditional mean (noise is mean zero);
/// the exceedance case integrates the Gaussian noise in closed form.
pub fn brute_force_theta(
    q: &ProductCategorical,
    oracle: &LabelOracle,
    crit: &SuccessCriterion,
) -> Result<f64> {
    brute_force_theta_capped(q, oracle, crit, DEFAULT_ENUMERATION_CAP)
}

pub fn brute_force_theta_capped(
    q: &ProductCategorical,
    oracle: &LabelOracle,
    crit: &SuccessCriterion,
    cap: u64,
) -> Result<f64> {
    let space = SequenceSpace::new(q.sites(), q.alphabet());
    space.check_enumerable(cap)?;
    let mut theta = 0.0;
    let mut visit_err = None;
    crate::ratio::for_each_sequence(q.sites(), q.alphabet(), |x| {
        if visit_err.is_some() {
            return;
        }
        let px = match q.density(x) {
            Ok(p) => p,
            Err(e) => {
                visit_err = Some(e);
                return;
            }
        };
        if px == 0.0 {
            return;
        }
        let m = oracle.mean_label(x);
        let term = match crit.g {
            GKind::Mean => m,
            GKind::Exceedance { gamma } => {
                if oracle.noise_sd == 0.0 {
                    if m >= gamma {
                        1.0
                    } else {
                        0.0
                    }
                } else {
                    1.0 - std_normal_cdf((gamma - m) / oracle.noise_sd)
                }
            }
        };
        theta += px * term;
    });
    match visit_err {
        Some(e) => Err(e),
        None => Ok(theta),
    }
}

/// N designs from one configuration: sequences and their predictions.
#[derive(Debug, Clone)]
pub struct DesignBatch {
    pub sequences: Vec<Vec<u8>>,
    pub predictions: Vec<f64>,
}

/// I.i.d. labeled draws `(x, y)` with a fresh RNG seeded by `seed`.
pub fn sample_labeled(
    dist: &ProductCategorical,
    oracle: &LabelOracle,
    n: usize,
    seed: u64,
) -> Vec<(Vec<u8>, f64)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    sample_labeled_with(dist, oracle, n, &mut rng)
}

pub fn sample_labeled_with<R: Rng>(
    dist: &ProductCategorical,
    oracle: &LabelOracle,
    n: usize,
    rng: &mut R,
) -> Vec<(Vec<u8>, f64)> {
    (0..n)
        .map(|_| {
            let x = dist.sample(rng);
            let y = oracle.sample_label(&x, rng);
            (x, y)
        })
        .collect()
}

/// N i.i.d. designs from `q` with predictions from `predictor`.
pub fn sample_designs(
    q: &ProductCategorical,
    predictor: &AdditiveModel,
    n: usize,
    seed: u64,
) -> DesignBatch {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    sample_designs_with(q, predictor, n, &mut rng)
}

pub fn sample_designs_with<R: Rng>(
    q: &ProductCategorical,
    predictor: &AdditiveModel,
    n: usize,
    rng: &mut R,
) -> DesignBatch {
    let mut sequences = Vec::with_capacity(n);
    let mut predictions = Vec::with_capacity(n);
    for _ in 0..n {
        let x = q.sample(rng);
        predictions.push(predictor.predict(&x));
        sequences.push(x);
    }
    DesignBatch {
        sequences,
        predictions,
    }
}

/// Render a sequence as letters starting at 'A'.
pub fn sequence_to_string(x: &[u8]) -> String {
    x.iter().map(|&a| (b'A' + a) as char).collect()
}

/// Parse a sequence rendered by `sequence_to_string`.
pub fn sequence_from_string(s: &str, alphabet: usize) -> Result<Vec<u8>> {
    s.chars()
        .map(|c| {
            let v = (c as u32).wrapping_sub('A' as u32);
            if v as usize >= alphabet {
                Err(Error::SymbolOutOfRange {
                    symbol: v.min(255) as u8,
                    alphabet,
                })
            } else {
                Ok(v as u8)
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ratio::for_each_sequence;

    #[test]
    fn labeled_dist_uniform_and_penalized() {
        let space = SequenceSpace::new(3, 4);
        let uniform = make_labeled_dist(space, None).unwrap();
        for s in 0..3 {
            for a in 0..4u8 {
                assert!((uniform.prob(s, a) - 0.25).abs() < 1e-15);
            }
        }
        let pen = make_labeled_dist(
            space,
            Some(StopPenalty {
                symbol: 0,
                factor: 0.5,
            }),
        )
        .unwrap();
        assert!((pen.prob(0, 0) - 1.0 / 7.0).abs() < 1e-12);
        assert!((pen.prob(0, 1) - 2.0 / 7.0).abs() < 1e-12);

        let excl = make_labeled_dist(
            space,
            Some(StopPenalty {
                symbol: 0,
                factor: 0.0,
            }),
        )
        .unwrap();
        assert_eq!(excl.prob(1, 0), 0.0);
    }

    #[test]
    fn noiseless_labels_equal_oracle_mean() {
        let oracle = LabelOracle::additive(vec![vec![0.0, 1.0], vec![2.0, -1.0]], 0.0);
        let dist = ProductCategorical::uniform(2, 2);
        for (x, y) in sample_labeled(&dist, &oracle, 50, 9) {
            assert_eq!(y, oracle.mean_label(&x));
        }
    }

    #[test]
    fn sampling_is_seed_deterministic() {
        let oracle = LabelOracle::random_additive(SequenceSpace::new(3, 4), 1.0, 0.3, 2);
        let dist = ProductCategorical::uniform(3, 4);
        let a = sample_labeled(&dist, &oracle, 100, 42);
        let b = sample_labeled(&dist, &oracle, 100, 42);
        assert_eq!(a, b);
        let c = sample_labeled(&dist, &oracle, 100, 43);
        assert_ne!(a, c);
    }

    #[test]
    fn labeled_frequencies_match_distribution() {
        let space = SequenceSpace::new(2, 4);
        let dist = make_labeled_dist(
            space,
            Some(StopPenalty {
                symbol: 3,
                factor: 0.4,
            }),
        )
        .unwrap();
        let oracle = LabelOracle::additive(vec![vec![0.0; 4]; 2], 0.0);
        let n = 10_000;
        let samples = sample_labeled(&dist, &oracle, n, 7);
        let mut counts = vec![vec![0u32; 4]; 2];
        for (x, _) in &samples {
            for (s, &a) in x.iter().enumerate() {
                counts[s][a as usize] += 1;
            }
        }
        for (s, site_counts) in counts.iter().enumerate() {
            for (a, &count) in site_counts.iter().enumerate() {
                let p = dist.prob(s, a as u8);
                let freq = count as f64 / n as f64;
                let tol = 3.0 * (p * (1.0 - p) / n as f64).sqrt();
                assert!((freq - p).abs() <= tol, "site {s} symbol {a}");
            }
        }
    }

    #[test]
    fn tilt_softmax_arithmetic() {
        let t = 0.37;
        let model = AdditiveModel {
            table: vec![vec![0.0, t * 3.0f64.ln()]],
            intercept: 5.0,
        };
        let design = tilt(&model, t).unwrap();
        assert!((design.q.prob(0, 0) - 0.25).abs() < 1e-12);
        assert!((design.q.prob(0, 1) - 0.75).abs() < 1e-12);
    }

    #[test]
    fn tilt_high_temperature_is_uniform() {
        let model = AdditiveModel {
            table: vec![vec![0.3, -0.8, 1.2, 0.0]; 2],
            intercept: 0.0,
        };
        let design = tilt(&model, 1e9).unwrap();
        for s in 0..2 {
            for a in 0..4u8 {
                assert!((design.q.prob(s, a) - 0.25).abs() < 1e-6);
            }
        }
    }

    #[test]
    fn tilt_shift_invariance() {
        let mut table = vec![vec![0.5, -0.25, 1.0], vec![0.0, 2.0, -1.0]];
        let base = tilt(
            &AdditiveModel {
                table: table.clone(),
                intercept: 0.0,
            },
            0.7,
        )
        .unwrap();
        for v in table[0].iter_mut() {
            *v += 11.25;
        }
        let shifted = tilt(
            &AdditiveModel {
                table,
                intercept: 0.0,
            },
            0.7,
        )
        .unwrap();
        for a in 0..3u8 {
            assert!((base.q.prob(0, a) - shifted.q.prob(0, a)).abs() < 1e-12);
        }
    }

    #[test]
    fn tilt_rejects_nonpositive_temperature() {
        let model = AdditiveModel {
            table: vec![vec![0.0, 1.0]],
            intercept: 0.0,
        };
        assert!(matches!(
            tilt(&model, 0.0),
            Err(Error::NonPositiveTemperature(_))
        ));
        assert!(tilt(&model, -1.0).is_err());
    }

    #[test]
    fn tilt_is_exact_kl_projection() {
        // For an additive f the tilted joint factorizes, so the sitewise
        // softmax should make KL(p_star || q) vanish.
        let model = AdditiveModel {
            table: vec![vec![0.2, -0.5, 0.9], vec![1.5, 0.0, -0.3]],
            intercept: 0.4,
        };
        let t = 0.6;
        let design = tilt(&model, t).unwrap();
        let mut z = 0.0;
        for_each_sequence(2, 3, |x| {
            z += (model.predict(x) / t).exp();
        });
        let mut kl = 0.0;
        for_each_sequence(2, 3, |x| {
            let p_star = (model.predict(x) / t).exp() / z;
            let q = design.q.density(x).unwrap();
            kl += p_star * (p_star / q).ln();
        });
        assert!(kl.abs() < 1e-10, "KL = {kl}");
    }

    #[test]
    fn brute_force_theta_tiny_cases() {
        let q = ProductCategorical::new(vec![vec![0.5, 0.5]]).unwrap();
        let oracle = LabelOracle::additive(vec![vec![0.0, 1.0]], 0.0);
        let crit = SuccessCriterion::mean(0.0, 0.0, 1.0);
        assert!((brute_force_theta(&q, &oracle, &crit).unwrap() - 0.5).abs() < 1e-15);

        // With noise, a state whose mean sits exactly at gamma contributes 1/2.
        let noisy = LabelOracle::additive(vec![vec![0.0, 1.0]], 0.5);
        let crit = SuccessCriterion::exceedance(1.0, 0.1);
        let theta = brute_force_theta(&q, &noisy, &crit).unwrap();
        let expected = 0.5 * (1.0 - std_normal_cdf(2.0)) + 0.5 * 0.5;
        assert!((theta - expected).abs() < 1e-12);
    }

    #[test]
    fn brute_force_handles_pair_effects() {
        let q = ProductCategorical::uniform(2, 2);
        let mut oracle = LabelOracle::additive(vec![vec![0.0, 1.0]; 2], 0.0);
        oracle.pair_effects.push(PairEffect {
            site_a: 0,
            site_b: 1,
            symbol_a: 1,
            symbol_b: 1,
            effect: 10.0,
        });
        let crit = SuccessCriterion::mean(0.0, 0.0, 20.0);
        // Mean = E[x0] + E[x1] + 10 * P(both ones) = 0.5 + 0.5 + 2.5.
        let theta = brute_force_theta(&q, &oracle, &crit).unwrap();
        assert!((theta - 3.5).abs() < 1e-12);
    }

    #[test]
    fn brute_force_respects_cap() {
        let q = ProductCategorical::uniform(12, 8);
        let oracle = LabelOracle::additive(vec![vec![0.0; 8]; 12], 0.0);
        let crit = SuccessCriterion::mean(0.0, 0.0, 1.0);
        assert!(matches!(
            brute_force_theta(&q, &oracle, &crit),
            Err(Error::SpaceTooLarge(_, _))
        ));
    }

    #[test]
    fn theta_mean_monotone_in_temperature_for_oracle_scores() {
        let space = SequenceSpace::new(4, 5);
        let oracle = LabelOracle::random_additive(space, 1.0, 0.0, 31);
        let model = AdditiveModel {
            table: oracle.site_effects.clone(),
            intercept: 0.0,
        };
        let crit = SuccessCriterion::mean(0.0, -20.0, 20.0);
        let mut last = f64::INFINITY;
        for i in 0..8 {
            let temp = 0.2 * 1.8f64.powi(i);
            let design = tilt(&model, temp).unwrap();
            let theta = brute_force_theta(&design.q, &oracle, &crit).unwrap();
            assert!(
                theta <= last + 1e-12,
                "theta rose with temperature: {theta} after {last}"
            );
            last = theta;
        }
    }

    #[test]
    fn design_sampling_mirrors_labeled_sampling() {
        let model = AdditiveModel {
            table: vec![vec![0.0, 0.7, -0.2]; 3],
            intercept: 0.1,
        };
        let design = tilt(&model, 1.0).unwrap();
        let a = sample_designs(&design.q, &model, 64, 5);
        let b = sample_designs(&design.q, &model, 64, 5);
        assert_eq!(a.sequences, b.sequences);
        assert_eq!(a.predictions, b.predictions);
        for (x, p) in a.sequences.iter().zip(&a.predictions) {
            assert_eq!(*p, model.predict(x));
        }
    }

    #[test]
    fn sequence_string_round_trip() {
        let x = vec![0u8, 3, 7, 1];
        let s = sequence_to_string(&x);
        assert_eq!(s, "ADHB");
        assert_eq!(sequence_from_string(&s, 8).unwrap(), x);
        assert!(sequence_from_string("AZ", 8).is_err());
    }
}
