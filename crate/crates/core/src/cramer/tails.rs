use std::ops::RangeInclusive;

use crate::error::{Error, Result};
use crate::measures::Pmf1D;
use crate::scalar::Real;

/// One row of the survival table.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SurvivalRow<T> {
    pub k: i64,
    /// `S(k) = μ([k, ∞))`.
    pub survival: T,
    /// `m(k) = -log S(k)`.
    pub m: T,
    pub g: T,
    /// `r_k = p(k+1) / p(k)`; the edge ratio at the last stored point of an
    /// unbounded right side and `0` at a genuine right endpoint.
    pub r_k: T,
    pub m_ratio: Option<T>,
    pub g_ratio: Option<T>,
    /// `p(k) / (1 - r*)`.
    pub lower: T,
    /// `p(k) / (1 - r_k)`.
    pub upper: T,
    pub sandwich_holds: bool,
}

fn ln_add_exp<T: Real>(a: T, b: T) -> T {
    let (hi, lo) = if a > b { (a, b) } else { (b, a) };
    if lo == T::neg_infinity() {
        return hi;
    }
    hi + (lo - hi).exp().ln_1p()
}

/// `r*` as seen by the truncated law: the last ratio on an unbounded right
/// side, `0` for a bounded one.
fn r_star<T: Real>(pmf: &Pmf1D<T>) -> T {
    if pmf.right_unbounded() && pmf.len() >= 2 {
        pmf.ratio(pmf.k_max() - 1).unwrap()
    } else {
        T::zero()
    }
}

/// Exact survival table over `k_range` (clipped to the stored support).
///
/// On an unbounded right side the partial sums are completed by the
/// geometric tail `p(K) r*/(1 - r*)` beyond the truncation edge `K`.
pub fn survival_diagnostics<T: Real>(
    pmf: &Pmf1D<T>,
    k_range: RangeInclusive<i64>,
) -> Vec<SurvivalRow<T>> {
    let (kmin, kmax) = (pmf.k_min(), pmf.k_max());
    let rs = r_star(pmf);
    let log_tail = if rs > T::zero() && rs < T::one() {
        -pmf.g(kmax) + rs.ln() - (-rs).ln_1p()
    } else {
        T::neg_infinity()
    };
    // log S(k) for k = kmax down to kmin
    let mut log_s = vec![T::zero(); pmf.len()];
    let mut acc = log_tail;
    for k in (kmin..=kmax).rev() {
        acc = ln_add_exp(acc, -pmf.g(k));
        log_s[(k - kmin) as usize] = acc.min(T::zero());
    }
    let lo = (*k_range.start()).max(kmin);
    let hi = (*k_range.end()).min(kmax);
    let rel = T::lit(1e-12).max(T::epsilon() * T::lit(16.0));
    (lo..=hi)
        .map(|k| {
            let i = (k - kmin) as usize;
            let s = log_s[i].exp();
            let m = -log_s[i];
            let g = pmf.g(k);
            let p = (-g).exp();
            let r_k = pmf.ratio(k).unwrap_or(rs);
            let lower = p / (T::one() - rs);
            let upper = p / (T::one() - r_k);
            let m_ratio = (k < kmax && m > T::zero()).then(|| -log_s[i + 1] / m);
            let g_ratio = (k < kmax && g > T::zero()).then(|| pmf.g(k + 1) / g);
            SurvivalRow {
                k,
                survival: s,
                m,
                g,
                r_k,
                m_ratio,
                g_ratio,
                lower,
                upper,
                sandwich_holds: lower <= s * (T::one() + rel) && s <= upper * (T::one() + rel),
            }
        })
        .collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Verdict {
    Satisfied,
    Violated,
    Inconclusive,
}

/// Outcome of the finite-window tail classifier.
#[derive(Clone, Debug, PartialEq)]
pub struct ClassifierReport<T> {
    pub verdict: Verdict,
    /// `(k, g(k+1)/g(k))` over the window.
    pub evidence: Vec<(i64, T)>,
    pub caveat: &'static str,
}

pub const CLASSIFIER_CAVEAT: &str =
    "heuristic: a limit cannot be decided from finitely many ratios";

/// Looks at `g(k+1)/g(k)` for `k` in `[k_start, k_probe)` and guesses whether
/// the ratios tend to 1.
///
/// * satisfied: the last ratio is within `trend_tol` of 1 and `|ratio - 1|`
///   never increases along the window;
/// * violated: every ratio in the second half of the window is more than
///   `trend_tol` away from 1, all on the same side;
/// * inconclusive otherwise, and always for fewer than two ratios.
pub fn lambda_star_condition_classify<T: Real>(
    pmf: &Pmf1D<T>,
    k_start: i64,
    k_probe: i64,
    trend_tol: T,
) -> Result<ClassifierReport<T>> {
    if !pmf.right_unbounded() {
        return Err(Error::NotApplicable(
            "the condition concerns laws with unbounded right support".into(),
        ));
    }
    if k_probe > pmf.k_max() {
        return Err(Error::domain(format!(
            "probe {k_probe} beyond truncation edge {}",
            pmf.k_max()
        )));
    }
    let evidence: Vec<(i64, T)> = (k_start.max(pmf.k_min())..k_probe)
        .filter(|&k| pmf.g(k) > T::zero())
        .map(|k| (k, pmf.g(k + 1) / pmf.g(k)))
        .collect();
    let verdict = classify(&evidence, trend_tol);
    Ok(ClassifierReport {
        verdict,
        evidence,
        caveat: CLASSIFIER_CAVEAT,
    })
}

fn classify<T: Real>(ratios: &[(i64, T)], tol: T) -> Verdict {
    if ratios.len() < 2 {
        return Verdict::Inconclusive;
    }
    let dev: Vec<T> = ratios.iter().map(|(_, r)| *r - T::one()).collect();
    let last = *dev.last().unwrap();
    let shrinking = dev.windows(2).all(|w| w[1].abs() <= w[0].abs());
    if last.abs() <= tol && shrinking {
        return Verdict::Satisfied;
    }
    let tail = &dev[dev.len() / 2..];
    let away_above = tail.iter().all(|d| *d > tol);
    let away_below = tail.iter().all(|d| *d < -tol);
    if away_above || away_below {
        return Verdict::Violated;
    }
    Verdict::Inconclusive
}
