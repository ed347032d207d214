//! Finite-sample confidence lower bounds on a bounded mean via betting
//! martingales.
//!
//! For each candidate mean `m` on a grid over the rescaled range [0, 1], a
//! nonnegative wealth process bets that the true mean exceeds `m`. Candidates
//! whose wealth reaches `1/alpha` are rejected; the bound is the smallest
//! surviving candidate, mapped back to the original range. Coverage holds for
//! any sample size because each wealth process is a nonnegative supermartingale
//! under the hypothesis that `m` is the true mean.

use crate::error::{Error, Result};

/// Candidate-mean grid: `{0, 1/k, ..., 1}` with spacing `1/k` where `k` is
/// `round(1/step)`. The returned bound is conservative by at most one step.
fn grid_denominator(step: f64) -> usize {
    (1.0 / step).round().max(1.0) as usize
}

/// Samples rescaled to [0, 1] together with the predictable bet scales.
///
/// The bet at step `t` is `lambda_mult(alpha) * lambda_scale[t]`, capped at
/// `0.5 / m`. Precomputing `lambda_scale` lets one dataset serve bounds at
/// many significance levels, which the p-value grid inversion relies on.
#[derive(Debug, Clone)]
pub struct WsrSamples {
    z: Vec<f64>,
    lambda_scale: Vec<f64>,
    lo: f64,
    hi: f64,
}

impl WsrSamples {
    /// Rescale `samples` from `[lo, hi]` to the unit interval and precompute
    /// running-variance bet scales.
    pub fn new(samples: &[f64], lo: f64, hi: f64) -> Result<Self> {
        if !(lo.is_finite() && hi.is_finite()) || lo >= hi {
            return Err(Error::InvalidRange { lo, hi });
        }
        let width = hi - lo;
        let mut z = Vec::with_capacity(samples.len());
        for &x in samples {
            if !x.is_finite() || x < lo || x > hi {
                return Err(Error::SampleOutOfRange { value: x, lo, hi });
            }
            z.push(((x - lo) / width).clamp(0.0, 1.0));
        }

        // Regularized running mean and variance; the bet at step t may only
        // use observations 1..t-1.
        let n = z.len();
        let mut lambda_scale = Vec::with_capacity(n);
        let mut sum = 0.0;
        let mut sum_sq = 0.0;
        let mut prev_var = 0.25;
        for (t, &zt) in z.iter().enumerate() {
            lambda_scale.push(1.0 / (n as f64 * prev_var).sqrt());
            sum += zt;
            sum_sq += zt * zt;
            let count = (t + 1) as f64;
            let mu = (0.5 + sum) / (count + 1.0);
            prev_var = (0.25 + sum_sq - 2.0 * mu * sum + count * mu * mu) / (count + 1.0);
        }
        Ok(WsrSamples {
            z,
            lambda_scale,
            lo,
            hi,
        })
    }

    pub fn len(&self) -> usize {
        self.z.len()
    }

    pub fn is_empty(&self) -> bool {
        self.z.is_empty()
    }

    /// True iff the wealth process at candidate mean `m` stays below
    /// `threshold` for the whole sample path.
    fn survives(&self, m: f64, lambda_mult: f64, threshold: f64) -> bool {
        let cap = if m > 0.0 { 0.5 / m } else { f64::INFINITY };
        let mut wealth = 1.0;
        for (&zt, &scale) in self.z.iter().zip(&self.lambda_scale) {
            let bet = (lambda_mult * scale).min(cap);
            wealth *= 1.0 + bet * (zt - m);
            if wealth >= threshold {
                return false;
            }
        }
        true
    }

    /// Lower confidence bound at level `alpha` using a candidate grid with
    /// spacing `grid_step`. Returns the range minimum for empty samples.
    ///
    /// Candidates are scanned in increasing order and the first survivor is
    /// returned; survival of one candidate is independent of all others, so
    /// this equals the minimum of the full surviving set.
    pub fn lower_bound(&self, alpha: f64, grid_step: f64) -> Result<f64> {
        if !(alpha > 0.0 && alpha < 1.0) {
            return Err(Error::InvalidAlpha(alpha));
        }
        if !(grid_step > 0.0 && grid_step < 1.0) {
            return Err(Error::InvalidGridStep(grid_step));
        }
        if self.z.is_empty() {
            return Ok(self.lo);
        }
        let threshold = 1.0 / alpha;
        let lambda_mult = (2.0 * (2.0 / alpha).ln()).sqrt();
        let k = grid_denominator(grid_step);
        for i in 0..=k {
            let m = i as f64 / k as f64;
            if self.survives(m, lambda_mult, threshold) {
                return Ok(self.lo + m * (self.hi - self.lo));
            }
        }
        // Unreachable for alpha < 1: the wealth at m = 1 never exceeds one.
        Ok(self.hi)
    }
}

/// Confidence lower bound on the mean of i.i.d. samples supported on
/// `[lo, hi]`, holding with probability at least `1 - alpha`.
pub fn wsr_mean_lower_bound(
    alpha: f64,
    samples: &[f64],
    lo: f64,
    hi: f64,
    grid_step: f64,
) -> Result<f64> {
    WsrSamples::new(samples, lo, hi)?.lower_bound(alpha, grid_step)
}
