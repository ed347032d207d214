//! Small numeric helpers shared across modules.

use statrs::distribution::{ContinuousCDF, Normal};

/// Standard normal CDF.
pub fn std_normal_cdf(z: f64) -> f64 {
    // Normal::new only fails for non-finite or non-positive sd.
    let n = Normal::new(0.0, 1.0).expect("standard normal");
    n.cdf(z)
}

/// Standard normal quantile function, antisymmetric by construction:
/// `quantile(1 - p) == -quantile(p)` exactly in floating point.
pub fn std_normal_quantile(p: f64) -> f64 {
    let n = Normal::new(0.0, 1.0).expect("standard normal");
    if p > 0.5 {
        -n.inverse_cdf(1.0 - p)
    } else {
        n.inverse_cdf(p)
    }
}

/// Mean of a slice. Returns 0.0 on empty input; callers validate emptiness.
pub fn mean(xs: &[f64]) -> f64 {
    if xs.is_empty() {
        return 0.0;
    }
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Population (1/n) variance around the supplied mean.
pub fn variance_around(xs: &[f64], center: f64) -> f64 {
    if xs.is_empty() {
        return 0.0;
    }
    xs.iter().map(|x| (x - center) * (x - center)).sum::<f64>() / xs.len() as f64
}

/// Linear-interpolation quantile (R-7). `q` in [0, 1]; `xs` need not be sorted.
pub fn quantile(xs: &[f64], q: f64) -> f64 {
    assert!(!xs.is_empty(), "quantile of empty slice");
    let mut v = xs.to_vec();
    v.sort_by(|a, b| a.total_cmp(b));
    let h = q.clamp(0.0, 1.0) * (v.len() - 1) as f64;
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    if lo == hi {
        v[lo]
    } else {
        v[lo] + (h - lo as f64) * (v[hi] - v[lo])
    }
}

/// Kish effective sample size of a set of nonnegative weights: (Σw)² / Σw².
/// Returns 0.0 when every weight is zero.
pub fn effective_sample_size(weights: &[f64]) -> f64 {
    let s: f64 = weights.iter().sum();
    let s2: f64 = weights.iter().map(|w| w * w).sum();
    if s2 == 0.0 {
        0.0
    } else {
        s * s / s2
    }
}

/// Pearson correlation of two equal-length slices.
pub fn correlation(xs: &[f64], ys: &[f64]) -> f64 {
    assert_eq!(xs.len(), ys.len());
    let mx = mean(xs);
    let my = mean(ys);
    let mut sxy = 0.0;
    let mut sxx = 0.0;
    let mut syy = 0.0;
    for (x, y) in xs.iter().zip(ys) {
        sxy += (x - mx) * (y - my);
        sxx += (x - mx) * (x - mx);
        syy += (y - my) * (y - my);
    }
    if sxx == 0.0 || syy == 0.0 {
        return 0.0;
    }
    sxy / (sxx * syy).sqrt()
}
