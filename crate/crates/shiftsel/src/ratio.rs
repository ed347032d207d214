//! Density ratios between design and labeled sequence distributions.
//!
//! Sequences live in `{0, ..., A-1}^L`. When both distributions are products
//! of per-site categoricals the ratio is exact; otherwise it can be estimated
//! by Laplace-smoothed maximum likelihood or a multinomial classifier.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mdre::MdreModel;

/// A product of independent per-site categorical distributions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProductCategorical {
    site_probs: Vec<Vec<f64>>,
}

impl ProductCategorical {
    /// Validates that every site has the same alphabet, probabilities are
    /// nonnegative, and each site sums to one within 1e-12.
    pub fn new(site_probs: Vec<Vec<f64>>) -> Result<Self> {
        if site_probs.is_empty() {
            return Err(Error::InvalidDistribution("no sites".into()));
        }
        let alphabet = site_probs[0].len();
        if alphabet == 0 {
            return Err(Error::InvalidDistribution("empty alphabet".into()));
        }
        for (s, row) in site_probs.iter().enumerate() {
            if row.len() != alphabet {
                return Err(Error::InvalidDistribution(format!(
                    "site {s} has {} symbols, expected {alphabet}",
                    row.len()
                )));
            }
            let mut sum = 0.0;
            for &p in row {
                if !p.is_finite() || p < 0.0 {
                    return Err(Error::InvalidDistribution(format!(
                        "site {s} has invalid probability {p}"
                    )));
                }
                sum += p;
            }
            if (sum - 1.0).abs() > 1e-12 {
                return Err(Error::InvalidDistribution(format!(
                    "site {s} sums to {sum}"
                )));
            }
        }
        Ok(ProductCategorical { site_probs })
    }

    /// Normalizes nonnegative per-site weights into a distribution.
    pub fn from_weights(site_weights: Vec<Vec<f64>>) -> Result<Self> {
        let mut probs = Vec::with_capacity(site_weights.len());
        for (s, row) in site_weights.into_iter().enumerate() {
            let sum: f64 = row.iter().sum();
            if sum.is_nan() || sum <= 0.0 {
                return Err(Error::InvalidDistribution(format!(
                    "site {s} weights sum to {sum}"
                )));
            }
            probs.push(row.iter().map(|w| w / sum).collect());
        }
        ProductCategorical::new(probs)
    }

    /// Uniform distribution over `alphabet` symbols at each of `sites` sites.
    pub fn uniform(sites: usize, alphabet: usize) -> Self {
        let row = vec![1.0 / alphabet as f64; alphabet];
        ProductCategorical {
            site_probs: vec![row; sites],
        }
    }

    pub fn sites(&self) -> usize {
        self.site_probs.len()
    }

    pub fn alphabet(&self) -> usize {
        self.site_probs[0].len()
    }

    pub fn site_probs(&self) -> &[Vec<f64>] {
        &self.site_probs
    }

    pub fn prob(&self, site: usize, symbol: u8) -> f64 {
        self.site_probs[site][symbol as usize]
    }

    fn check_sequence(&self, x: &[u8]) -> Result<()> {
        if x.len() != self.sites() {
            return Err(Error::LengthMismatch {
                got: x.len(),
                expected: self.sites(),
            });
        }
        for &sym in x {
            if sym as usize >= self.alphabet() {
                return Err(Error::SymbolOutOfRange {
                    symbol: sym,
                    alphabet: self.alphabet(),
                });
            }
        }
        Ok(())
    }

    /// Density of a sequence.
    pub fn density(&self, x: &[u8]) -> Result<f64> {
        self.check_sequence(x)?;
        Ok(x.iter()
            .enumerate()
            .map(|(s, &a)| self.site_probs[s][a as usize])
            .product())
    }

    /// Draw one sequence.
    pub fn sample<R: Rng>(&self, rng: &mut R) -> Vec<u8> {
        let mut seq = Vec::with_capacity(self.sites());
        for row in &self.site_probs {
            let u: f64 = rng.gen();
            let mut cum = 0.0;
            let mut picked = row.len() - 1;
            for (a, &p) in row.iter().enumerate() {
                cum += p;
                if u < cum {
                    picked = a;
                    break;
                }
            }
            seq.push(picked as u8);
        }
        seq
    }

    /// Plain-text matrix format: header `L A`, then one row of A
    /// probabilities per site.
    pub fn to_text(&self) -> String {
        let mut out = format!("{} {}\n", self.sites(), self.alphabet());
        for row in &self.site_probs {
            let cells: Vec<String> = row.iter().map(|p| format!("{p}")).collect();
            out.push_str(&cells.join(" "));
            out.push('\n');
        }
        out
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut lines = text.lines().filter(|l| !l.trim().is_empty());
        let header = lines
            .next()
            .ok_or_else(|| Error::InvalidDistribution("empty text".into()))?;
        let mut parts = header.split_whitespace();
        let sites: usize = parts
            .next()
            .and_then(|t| t.parse().ok())
            .ok_or_else(|| Error::InvalidDistribution("bad header".into()))?;
        let alphabet: usize = parts
            .next()
            .and_then(|t| t.parse().ok())
            .ok_or_else(|| Error::InvalidDistribution("bad header".into()))?;
        let mut rows = Vec::with_capacity(sites);
        for _ in 0..sites {
            let line = lines
                .next()
                .ok_or_else(|| Error::InvalidDistribution("missing site row".into()))?;
            let row: std::result::Result<Vec<f64>, _> =
                line.split_whitespace().map(|t| t.parse::<f64>()).collect();
            let row =
                row.map_err(|e| Error::InvalidDistribution(format!("bad probability: {e}")))?;
            if row.len() != alphabet {
                return Err(Error::InvalidDistribution(format!(
                    "row has {} entries, expected {alphabet}",
                    row.len()
                )));
            }
            rows.push(row);
        }
        ProductCategorical::new(rows)
    }
}

/// Exact density ratio `design(x) / labeled(x)` for product categoricals.
pub fn exact_ratio(
    design: &ProductCategorical,
    labeled: &ProductCategorical,
    x: &[u8],
) -> Result<f64> {
    design.check_sequence(x)?;
    labeled.check_sequence(x)?;
    let mut ratio = 1.0;
    for (s, &a) in x.iter().enumerate() {
        let denom = labeled.prob(s, a);
        if denom == 0.0 {
            return Err(Error::ZeroLabeledDensity);
        }
        ratio *= design.prob(s, a) / denom;
    }
    Ok(ratio)
}

/// Exact supremum of the density ratio over the whole space:
/// the product over sites of the largest per-symbol ratio.
///
/// Errors when the design distribution puts mass on a symbol the labeled
/// distribution excludes; no finite bound exists there.
pub fn max_ratio_bound(design: &ProductCategorical, labeled: &ProductCategorical) -> Result<f64> {
    if design.sites() != labeled.sites() || design.alphabet() != labeled.alphabet() {
        return Err(Error::InvalidDistribution(
            "design and labeled spaces differ".into(),
        ));
    }
    let mut bound = 1.0;
    for s in 0..design.sites() {
        let mut site_max = 0.0f64;
        for a in 0..design.alphabet() {
            let d = design.site_probs[s][a];
            let l = labeled.site_probs[s][a];
            if l == 0.0 {
                if d > 0.0 {
                    return Err(Error::ZeroLabeledDensity);
                }
                continue;
            }
            site_max = site_max.max(d / l);
        }
        bound *= site_max;
    }
    Ok(bound)
}

/// Laplace-smoothed per-site maximum likelihood fit: each probability is
/// `(count + 1) / (n + A)`. Empty input yields the uniform distribution.
pub fn fit_smoothed(
    sequences: &[Vec<u8>],
    sites: usize,
    alphabet: usize,
) -> Result<ProductCategorical> {
    let mut counts = vec![vec![0u64; alphabet]; sites];
    for seq in sequences {
        if seq.len() != sites {
            return Err(Error::LengthMismatch {
                got: seq.len(),
                expected: sites,
            });
        }
        for (s, &a) in seq.iter().enumerate() {
            if a as usize >= alphabet {
                return Err(Error::SymbolOutOfRange {
                    symbol: a,
                    alphabet,
                });
            }
            counts[s][a as usize] += 1;
        }
    }
    let n = sequences.len() as f64;
    let probs = counts
        .into_iter()
        .map(|row| {
            row.into_iter()
                .map(|c| (c as f64 + 1.0) / (n + alphabet as f64))
                .collect()
        })
        .collect();
    ProductCategorical::new(probs)
}

/// Per-site nonnegative weight tables defining a product density up to an
/// unknown normalizing constant.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UnnormalizedSites {
    pub site_weights: Vec<Vec<f64>>,
}

impl UnnormalizedSites {
    pub fn weight(&self, x: &[u8]) -> Result<f64> {
        if x.len() != self.site_weights.len() {
            return Err(Error::LengthMismatch {
                got: x.len(),
                expected: self.site_weights.len(),
            });
        }
        let mut w = 1.0;
        for (s, &a) in x.iter().enumerate() {
            let row = &self.site_weights[s];
            if a as usize >= row.len() {
                return Err(Error::SymbolOutOfRange {
                    symbol: a,
                    alphabet: row.len(),
                });
            }
            w *= row[a as usize];
        }
        Ok(w)
    }
}

/// A source of density ratios `design(x) / labeled(x)`.
///
/// `UnnormalizedExact` ratios carry unknown multiplicative constants and must
/// be fed to the self-normalized estimator rather than the exact-ratio paths.
#[derive(Debug, Clone)]
pub enum RatioProvider {
    Exact {
        design: ProductCategorical,
        labeled: ProductCategorical,
    },
    Smoothed {
        design: ProductCategorical,
        labeled: ProductCategorical,
    },
    Classifier {
        model: MdreModel,
        numerator: String,
        denominator: String,
    },
    UnnormalizedExact {
        design: UnnormalizedSites,
        labeled: UnnormalizedSites,
    },
}

impl RatioProvider {
    pub fn ratio(&self, x: &[u8]) -> Result<f64> {
        match self {
            RatioProvider::Exact { design, labeled }
            | RatioProvider::Smoothed { design, labeled } => exact_ratio(design, labeled, x),
            RatioProvider::Classifier {
                model,
                numerator,
                denominator,
            } => model.ratio(x, numerator, denominator),
            RatioProvider::UnnormalizedExact { design, labeled } => {
                let denom = design.weight(x).and_then(|n| {
                    let d = labeled.weight(x)?;
                    if d == 0.0 {
                        Err(Error::ZeroLabeledDensity)
                    } else {
                        Ok(n / d)
                    }
                })?;
                Ok(denom)
            }
        }
    }

    /// Ratios only known up to a multiplicative constant?
    pub fn is_unnormalized(&self) -> bool {
        matches!(self, RatioProvider::UnnormalizedExact { .. })
    }

    /// Exact supremum of the ratio when the provider knows both densities.
    /// Estimated providers return None; a bound must be supplied externally.
    pub fn exact_bound(&self) -> Option<Result<f64>> {
        match self {
            RatioProvider::Exact { design, labeled } => Some(max_ratio_bound(design, labeled)),
            _ => None,
        }
    }
}

/// Visit every sequence of the space in lexicographic order.
pub fn for_each_sequence<F: FnMut(&[u8])>(sites: usize, alphabet: usize, mut f: F) {
    let mut seq = vec![0u8; sites];
    loop {
        f(&seq);
        let mut s = sites;
        loop {
            if s == 0 {
                return;
            }
            s -= 1;
            if (seq[s] as usize) + 1 < alphabet {
                seq[s] += 1;
                break;
            }
            seq[s] = 0;
        }
    }
}
