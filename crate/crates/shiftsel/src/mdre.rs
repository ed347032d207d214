//! Classifier-based density ratio estimation.
//!
//! A single multinomial logistic classifier is trained to distinguish the
//! labeled distribution from one or more design distributions of the same
//! family. The difference of two class logits approximates the log density
//! ratio between those classes. The classifier is linear in a one-hot
//! encoding of the sequence, which is correctly specified when the underlying
//! distributions are products of per-site categoricals.
//!
//! Logit differences estimate ratios directly when class sample sizes are
//! comparable; strongly imbalanced classes shift the estimate by the log of
//! the size ratio.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Training settings for the classifier. Full-batch gradient descent runs
/// until the gradient norm falls below `grad_tol` or `max_epochs` is reached.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct MdreConfig {
    /// Step size; None picks half the stability limit for one-hot features.
    pub learning_rate: Option<f64>,
    pub max_epochs: usize,
    pub grad_tol: f64,
    /// Estimated ratios are clipped to `[1/ratio_cap, ratio_cap]`.
    pub ratio_cap: f64,
}

impl Default for MdreConfig {
    fn default() -> Self {
        MdreConfig {
            learning_rate: None,
            max_epochs: 2000,
            grad_tol: 1e-6,
            ratio_cap: 1e6,
        }
    }
}

/// Fitted multinomial classifier over registered classes.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MdreModel {
    sites: usize,
    alphabet: usize,
    class_ids: Vec<String>,
    /// Per-class, per-site, per-symbol logit weights.
    weights: Vec<Vec<Vec<f64>>>,
    biases: Vec<f64>,
    ratio_cap: f64,
    epochs_run: usize,
    final_grad_norm: f64,
}

impl MdreModel {
    pub fn class_ids(&self) -> &[String] {
        &self.class_ids
    }

    pub fn epochs_run(&self) -> usize {
        self.epochs_run
    }

    pub fn final_grad_norm(&self) -> f64 {
        self.final_grad_norm
    }

    fn class_index(&self, id: &str) -> Result<usize> {
        self.class_ids
            .iter()
            .position(|c| c == id)
            .ok_or_else(|| Error::UnknownClass(id.to_string()))
    }

    /// Unnormalized log-probability of `x` under class `c`.
    pub fn logit(&self, class: &str, x: &[u8]) -> Result<f64> {
        let c = self.class_index(class)?;
        self.logit_idx(c, x)
    }

    fn logit_idx(&self, c: usize, x: &[u8]) -> Result<f64> {
        if x.len() != self.sites {
            return Err(Error::LengthMismatch {
                got: x.len(),
                expected: self.sites,
            });
        }
        let mut h = self.biases[c];
        for (s, &a) in x.iter().enumerate() {
            if a as usize >= self.alphabet {
                return Err(Error::SymbolOutOfRange {
                    symbol: a,
                    alphabet: self.alphabet,
                });
            }
            h += self.weights[c][s][a as usize];
        }
        Ok(h)
    }

    /// Estimated density ratio between `numerator` and `denominator` classes,
    /// clipped to `[1/ratio_cap, ratio_cap]`.
    ///
    /// The two orientations of a pair share one exponential so that the
    /// reverse ratio is the exact floating-point reciprocal of the forward
    /// one.
    pub fn ratio(&self, x: &[u8], numerator: &str, denominator: &str) -> Result<f64> {
        let i = self.class_index(numerator)?;
        let j = self.class_index(denominator)?;
        if i == j {
            self.logit_idx(i, x)?; // still validate the sequence
            return Ok(1.0);
        }
        let (lo, hi) = (i.min(j), i.max(j));
        let base = (self.logit_idx(lo, x)? - self.logit_idx(hi, x)?).exp();
        let forward = if i == lo { base } else { 1.0 / base };
        Ok(forward.clamp(1.0 / self.ratio_cap, self.ratio_cap))
    }
}

/// Fit the shared classifier on one sample set per class.
///
/// Training is deterministic: weights start at zero and full-batch descent
/// uses no data shuffling.
pub fn fit_mdre(
    classes: &[(String, Vec<Vec<u8>>)],
    sites: usize,
    alphabet: usize,
    cfg: &MdreConfig,
) -> Result<MdreModel> {
    if classes.len() < 2 {
        return Err(Error::TooFewSamples {
            need: 2,
            got: classes.len(),
        });
    }
    let mut class_ids = Vec::with_capacity(classes.len());
    let mut data: Vec<(usize, &[u8])> = Vec::new();
    for (c, (id, seqs)) in classes.iter().enumerate() {
        if class_ids.contains(id) {
            return Err(Error::DuplicateConfigId(id.clone()));
        }
        if seqs.is_empty() {
            return Err(Error::EmptyInput("class sample set"));
        }
        class_ids.push(id.clone());
        for seq in seqs {
            if seq.len() != sites {
                return Err(Error::LengthMismatch {
                    got: seq.len(),
                    expected: sites,
                });
            }
            for &a in seq {
                if a as usize >= alphabet {
                    return Err(Error::SymbolOutOfRange {
                        symbol: a,
                        alphabet,
                    });
                }
            }
            data.push((c, seq));
        }
    }

    let first = data[0].1;
    if data.iter().all(|(_, seq)| *seq == first) {
        log::warn!("every training sequence is identical; class logits are not identifiable");
    }

    let n_classes = classes.len();
    let n = data.len() as f64;
    let lr = cfg.learning_rate.unwrap_or(2.0 / (sites as f64 + 1.0));

    let mut weights = vec![vec![vec![0.0f64; alphabet]; sites]; n_classes];
    let mut biases = vec![0.0f64; n_classes];
    let mut grad_w = vec![vec![vec![0.0f64; alphabet]; sites]; n_classes];
    let mut grad_b = vec![0.0f64; n_classes];
    let mut logits = vec![0.0f64; n_classes];

    let mut epochs_run = 0;
    let mut grad_norm = f64::INFINITY;
    for epoch in 0..cfg.max_epochs {
        for g in grad_w.iter_mut().flatten().flatten() {
            *g = 0.0;
        }
        grad_b.iter_mut().for_each(|g| *g = 0.0);

        for &(y, seq) in &data {
            for (c, logit) in logits.iter_mut().enumerate() {
                let mut h = biases[c];
                for (s, &a) in seq.iter().enumerate() {
                    h += weights[c][s][a as usize];
                }
                *logit = h;
            }
            let max = logits.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            let mut z = 0.0;
            for l in &logits {
                z += (l - max).exp();
            }
            for c in 0..n_classes {
                let p = (logits[c] - max).exp() / z;
                let coeff = p - if c == y { 1.0 } else { 0.0 };
                grad_b[c] += coeff;
                for (s, &a) in seq.iter().enumerate() {
                    grad_w[c][s][a as usize] += coeff;
                }
            }
        }

        let mut sq = 0.0;
        for g in grad_b.iter_mut() {
            *g /= n;
            sq += *g * *g;
        }
        for g in grad_w.iter_mut().flatten().flatten() {
            *g /= n;
            sq += *g * *g;
        }
        grad_norm = sq.sqrt();
        epochs_run = epoch + 1;
        if grad_norm <= cfg.grad_tol {
            break;
        }

        for c in 0..n_classes {
            biases[c] -= lr * grad_b[c];
            for s in 0..sites {
                for a in 0..alphabet {
                    weights[c][s][a] -= lr * grad_w[c][s][a];
                }
            }
        }
    }

    Ok(MdreModel {
        sites,
        alphabet,
        class_ids,
        weights,
        biases,
        ratio_cap: cfg.ratio_cap,
        epochs_run,
        final_grad_norm: grad_norm,
    })
}
