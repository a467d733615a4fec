use super::evaluator::{CramerStatus, ProductCramer};
use crate::error::{Error, Result};
use crate::measures::ProductLaw;
use crate::scalar::Real;

/// Controls for building a [`ValueDistribution`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DistributionOptions {
    pub bin_merge_tol: f64,
    pub max_entries: usize,
}

impl Default for DistributionOptions {
    fn default() -> Self {
        DistributionOptions {
            bin_merge_tol: 1e-12,
            max_entries: 1_000_000,
        }
    }
}

/// A finitely supported law on `[0, ∞)`, kept as sorted `(value, prob)`.
#[derive(Clone, Debug, PartialEq)]
pub struct ValueDistribution<T> {
    entries: Vec<(T, T)>,
    options: DistributionOptions,
    bin_width: f64,
    flagged: bool,
}

/// Moments of `Λ*` under the law it is built from.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LambdaStarMoments<T> {
    pub q: T,
    pub moment: T,
    pub mean: T,
    pub variance: T,
    /// `Var / mean²`; `None` when the mean vanishes.
    pub beta: Option<T>,
}

impl<T: Real> ValueDistribution<T> {
    /// Sorts, drops zero weights and merges values closer than the merge
    /// tolerance (the merged value is the probability-weighted mean, so the
    /// first moment is unchanged).
    pub fn from_entries(entries: Vec<(T, T)>, options: DistributionOptions) -> Result<Self> {
        if entries
            .iter()
            .any(|(v, p)| !v.is_finite() || !p.is_finite() || *p < T::zero())
        {
            return Err(Error::validation(
                "value distribution entries must be finite with non-negative weight",
            ));
        }
        let total: f64 = entries.iter().map(|e| e.1.as_f64()).sum();
        if (total - 1.0).abs() > 1e-10 {
            return Err(Error::validation(format!(
                "value distribution mass {total}, expected 1"
            )));
        }
        let mut d = ValueDistribution {
            entries,
            options,
            bin_width: 0.0,
            flagged: false,
        };
        d.normalize();
        Ok(d)
    }

    fn point(v: T) -> Self {
        ValueDistribution {
            entries: vec![(v, T::one())],
            options: DistributionOptions::default(),
            bin_width: 0.0,
            flagged: false,
        }
    }

    fn merge_tol(&self) -> T {
        T::lit(self.options.bin_merge_tol).max(T::epsilon() * T::lit(4.0))
    }

    fn normalize(&mut self) {
        self.entries.retain(|e| e.1 > T::zero());
        self.entries.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
        let tol = self.merge_tol();
        let mut out: Vec<(T, T)> = Vec::with_capacity(self.entries.len());
        // (anchor value, weighted value sum, prob)
        let mut cur: Option<(T, T, T)> = None;
        for &(v, p) in &self.entries {
            match cur {
                Some((anchor, vs, ps)) if v - anchor <= tol * T::one().max(anchor.abs()) => {
                    cur = Some((anchor, vs + v * p, ps + p));
                }
                _ => {
                    if let Some((_, vs, ps)) = cur {
                        out.push((vs / ps, ps));
                    }
                    cur = Some((v, v * p, p));
                }
            }
        }
        if let Some((_, vs, ps)) = cur {
            out.push((vs / ps, ps));
        }
        self.entries = out;
        if self.entries.len() > self.options.max_entries {
            self.rebin();
        }
    }

    /// Fixed-width binning down to at most `max_entries / 2` cells.
    fn rebin(&mut self) {
        let lo = self.entries.first().unwrap().0;
        let hi = self.entries.last().unwrap().0;
        let cells = (self.options.max_entries / 2).max(1);
        let width = (hi - lo) / T::lit(cells as f64);
        let mut out: Vec<(T, T)> = Vec::with_capacity(cells + 1);
        let mut cell = usize::MAX;
        for &(v, p) in &self.entries {
            let c = ((v - lo) / width).floor().to_usize().unwrap_or(0).min(cells);
            if c == cell {
                let last = out.last_mut().unwrap();
                *last = (last.0 + v * p, last.1 + p);
            } else {
                out.push((v * p, p));
                cell = c;
            }
        }
        for e in &mut out {
            e.0 = e.0 / e.1;
        }
        self.entries = out;
        self.bin_width = self.bin_width.max(width.as_f64());
        self.flagged = true;
    }

    /// Law of `V + W` for independent `V ~ self`, `W ~ other`.
    pub fn convolve(&self, other: &Self) -> Self {
        let mut entries = Vec::with_capacity(self.entries.len() * other.entries.len());
        for &(a, p) in &self.entries {
            for &(b, q) in &other.entries {
                entries.push((a + b, p * q));
            }
        }
        let mut d = ValueDistribution {
            entries,
            options: self.options,
            bin_width: self.bin_width + other.bin_width,
            flagged: self.flagged || other.flagged,
        };
        d.normalize();
        d
    }

    pub fn entries(&self) -> &[(T, T)] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// True when fixed-width binning was applied somewhere along the way.
    pub fn is_binned(&self) -> bool {
        self.flagged
    }

    /// Largest bin width used (values may be off by up to this much).
    pub fn bin_width(&self) -> f64 {
        self.bin_width
    }

    pub fn total(&self) -> T {
        self.entries.iter().map(|e| e.1).sum()
    }

    pub fn mean(&self) -> T {
        self.entries.iter().map(|&(v, p)| v * p).sum()
    }

    pub fn variance(&self) -> T {
        let m = self.mean();
        self.entries
            .iter()
            .map(|&(v, p)| (v - m) * (v - m) * p)
            .sum()
    }

    /// `E[V^q]`.
    pub fn moment(&self, q: T) -> T {
        self.entries.iter().map(|&(v, p)| v.powf(q) * p).sum()
    }

    /// `Var / mean²`.
    pub fn beta(&self) -> Result<T> {
        let m = self.mean();
        if m == T::zero() {
            return Err(Error::Undefined("beta with zero mean".into()));
        }
        Ok(self.variance() / (m * m))
    }

    /// `P(V ≤ r)`.
    pub fn cdf(&self, r: T) -> T {
        let slack = self.merge_tol() * T::one().max(r.abs());
        self.entries
            .iter()
            .take_while(|e| e.0 <= r + slack)
            .map(|e| e.1)
            .sum()
    }

    pub fn min_value(&self) -> T {
        self.entries.first().map(|e| e.0).unwrap_or_else(T::nan)
    }

    pub fn max_value(&self) -> T {
        self.entries.last().map(|e| e.0).unwrap_or_else(T::nan)
    }
}

/// `E[(Λ*)^q]` together with mean, variance and `β`.
pub fn lambda_star_moments<T: Real>(dist: &ValueDistribution<T>, q: T) -> Result<LambdaStarMoments<T>> {
    if !(q >= T::one()) {
        return Err(Error::domain(format!("moment order {q} must be >= 1")));
    }
    Ok(LambdaStarMoments {
        q,
        moment: dist.moment(q),
        mean: dist.mean(),
        variance: dist.variance(),
        beta: dist.beta().ok(),
    })
}

/// Law of `Λ*_μ(X) = Σ Λ*_i(X_i)` for `X ~ μ`, by iterated convolution of the
/// per-coordinate value laws.
pub fn cramer_distribution<T: Real>(
    law: &ProductLaw<T>,
    options: DistributionOptions,
) -> ValueDistribution<T> {
    let pc = ProductCramer::new(law);
    let mut acc = ValueDistribution::point(T::zero());
    acc.options = options;
    let mut cache: Option<(usize, ValueDistribution<T>)> = None;
    for (i, ev) in pc.evaluators().iter().enumerate() {
        let reuse = matches!(&cache, Some((j, _)) if pc.evaluators()[*j].pmf() == ev.pmf());
        if !reuse {
            let entries = ev
                .pmf()
                .iter()
                .map(|(k, p)| {
                    let c = ev.cramer_detailed(T::of_i64(k));
                    debug_assert!(c.status != CramerStatus::Outside);
                    (c.value.max(T::zero()), p)
                })
                .collect();
            let mut d = ValueDistribution {
                entries,
                options,
                bin_width: 0.0,
                flagged: false,
            };
            d.normalize();
            cache = Some((i, d));
        }
        acc = acc.convolve(&cache.as_ref().unwrap().1);
    }
    acc
}
