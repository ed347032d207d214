//! Ridge regression on one-hot sequence features.
//!
//! The feature map is one indicator per (site, symbol) plus an intercept, so
//! the fitted model is additive and can be tilted exactly. The penalty is
//! chosen by k-fold cross-validation; the intercept is never penalized.

use nalgebra::{Cholesky, DMatrix, DVector};

use crate::error::{Error, Result};
use crate::sim::AdditiveModel;

/// Fitted ridge model with the penalty the cross-validation picked and the
/// root-mean-squared validation error at that penalty.
#[derive(Debug, Clone)]
pub struct RidgeFit {
    pub model: AdditiveModel,
    pub penalty: f64,
    pub cv_rmse: f64,
}

struct NormalEquations {
    xtx: DMatrix<f64>,
    xty: DVector<f64>,
    yty: f64,
    n: usize,
}

impl NormalEquations {
    fn zero(p: usize) -> Self {
        NormalEquations {
            xtx: DMatrix::zeros(p, p),
            xty: DVector::zeros(p),
            yty: 0.0,
            n: 0,
        }
    }

    fn add(&mut self, idx: &[usize], y: f64) {
        for &i in idx {
            for &j in idx {
                self.xtx[(i, j)] += 1.0;
            }
            self.xty[i] += y;
        }
        self.yty += y * y;
        self.n += 1;
    }

    fn subtract(&self, other: &NormalEquations) -> NormalEquations {
        NormalEquations {
            xtx: &self.xtx - &other.xtx,
            xty: &self.xty - &other.xty,
            yty: self.yty - other.yty,
            n: self.n - other.n,
        }
    }

    /// Solve (X'X + penalty * J) beta = X'y with J zero on the intercept.
    fn solve(&self, penalty: f64) -> Option<DVector<f64>> {
        let p = self.xty.len();
        let mut lhs = self.xtx.clone();
        for i in 1..p {
            lhs[(i, i)] += penalty;
        }
        Cholesky::new(lhs).map(|ch| ch.solve(&self.xty))
    }
}

fn feature_indices(x: &[u8], alphabet: usize) -> Vec<usize> {
    let mut idx = Vec::with_capacity(x.len() + 1);
    idx.push(0); // intercept
    for (s, &a) in x.iter().enumerate() {
        idx.push(1 + s * alphabet + a as usize);
    }
    idx
}

fn model_from_solution(beta: &DVector<f64>, sites: usize, alphabet: usize) -> AdditiveModel {
    let mut table = vec![vec![0.0; alphabet]; sites];
    for s in 0..sites {
        for a in 0..alphabet {
            table[s][a] = beta[1 + s * alphabet + a];
        }
    }
    AdditiveModel {
        table,
        intercept: beta[0],
    }
}

fn prediction_sse(eq: &NormalEquations, beta: &DVector<f64>) -> f64 {
    // ||y - X beta||^2 = y'y - 2 beta'X'y + beta'X'X beta.
    let bxty = beta.dot(&eq.xty);
    let bxxb = beta.dot(&(&eq.xtx * beta));
    (eq.yty - 2.0 * bxty + bxxb).max(0.0)
}

/// Fit by k-fold cross-validation over `penalties`, then refit on all data at
/// the winning penalty. Folds are contiguous index blocks, so the fit is
/// deterministic. A fold whose system cannot be factored is scored as
/// unusable; if the final solve fails the largest penalty is used instead.
pub fn fit_ridge(
    train: &[(Vec<u8>, f64)],
    alphabet: usize,
    penalties: &[f64],
    folds: usize,
) -> Result<RidgeFit> {
    if train.len() < 2 {
        return Err(Error::TooFewSamples {
            need: 2,
            got: train.len(),
        });
    }
    if penalties.is_empty() {
        return Err(Error::InvalidConfig("empty penalty grid".into()));
    }
    let sites = train[0].0.len();
    for (x, _) in train {
        if x.len() != sites {
            return Err(Error::LengthMismatch {
                got: x.len(),
                expected: sites,
            });
        }
        for &a in x {
            if a as usize >= alphabet {
                return Err(Error::SymbolOutOfRange {
                    symbol: a,
                    alphabet,
                });
            }
        }
    }

    let p = 1 + sites * alphabet;
    let folds = folds.clamp(2, train.len());
    let mut total = NormalEquations::zero(p);
    let mut fold_eqs: Vec<NormalEquations> = (0..folds).map(|_| NormalEquations::zero(p)).collect();
    for (i, (x, y)) in train.iter().enumerate() {
        let idx = feature_indices(x, alphabet);
        total.add(&idx, *y);
        fold_eqs[i % folds].add(&idx, *y);
    }

    let mut best: Option<(f64, f64)> = None; // (mse, penalty)
    for &penalty in penalties {
        if !penalty.is_finite() || penalty < 0.0 {
            return Err(Error::InvalidConfig(format!("bad penalty {penalty}")));
        }
        let mut sse = 0.0;
        let mut usable = true;
        for fold in &fold_eqs {
            if fold.n == 0 {
                continue;
            }
            let train_eq = total.subtract(fold);
            match train_eq.solve(penalty) {
                Some(beta) => sse += prediction_sse(fold, &beta),
                None => {
                    usable = false;
                    break;
                }
            }
        }
        if !usable {
            continue;
        }
        let mse = sse / train.len() as f64;
        if best.is_none_or(|(b, _)| mse < b) {
            best = Some((mse, penalty));
        }
    }

    let largest = penalties.iter().cloned().fold(f64::MIN, f64::max);
    let (cv_mse, chosen) = best.unwrap_or((f64::INFINITY, largest));
    let beta = match total.solve(chosen) {
        Some(beta) => beta,
        None => total.solve(largest).ok_or_else(|| {
            Error::InvalidConfig("ridge system is singular at every penalty".into())
        })?,
    };

    Ok(RidgeFit {
        model: model_from_solution(&beta, sites, alphabet),
        penalty: chosen,
        cv_rmse: cv_mse.sqrt(),
    })
}
