use crate::error::{Error, Result};
use crate::scalar::{log_sum_exp, Real};

/// How an unbounded support is cut down to a finite window.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TailPolicy {
    /// Stop extending a side once its certified relative tail mass is below
    /// half of this value.
    pub epsilon_tail: f64,
    /// Maximum number of support points added on either side of the seed.
    pub hard_cap: usize,
}

impl Default for TailPolicy {
    fn default() -> Self {
        TailPolicy {
            epsilon_tail: 1e-12,
            hard_cap: 1_000_000,
        }
    }
}

/// A probability mass function on a contiguous integer interval, stored as
/// `g(k) = -log p(k)`.
///
/// Laws whose true support is unbounded are truncated per [`TailPolicy`] and
/// renormalized; `left_unbounded` / `right_unbounded` remember the original
/// shape so that downstream code can tell a genuine endpoint from a cut.
#[derive(Clone, Debug, PartialEq)]
pub struct Pmf1D<T> {
    k_min: i64,
    log_mass: Vec<T>,
    left_unbounded: bool,
    right_unbounded: bool,
    symmetric: bool,
    tail_policy: TailPolicy,
    truncated_mass: f64,
    truncation_capped: bool,
}

/// Outcome of the discrete log-concavity test.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct LogConcavityReport {
    pub is_log_concave: bool,
    pub first_violation: Option<i64>,
}

const SUM_TOL: f64 = 1e-12;

impl<T: Real> Pmf1D<T> {
    /// Masses `p(k_min), p(k_min + 1), …`; they must be positive and sum to 1
    /// within `1e-12`.
    pub fn from_masses(k_min: i64, masses: &[T]) -> Result<Self> {
        let total = check_positive(masses)?;
        if (total - 1.0).abs() > SUM_TOL {
            return Err(Error::validation(format!(
                "masses sum to {total}, expected 1"
            )));
        }
        Self::from_weights(k_min, masses)
    }

    /// Arbitrary positive weights, normalized.
    pub fn from_weights(k_min: i64, weights: &[T]) -> Result<Self> {
        check_positive(weights)?;
        let logw: Vec<T> = weights.iter().map(|w| w.ln()).collect();
        Self::from_log_weights(k_min, logw)
    }

    /// Log-weights `log w(k)` with finite values, normalized in the log domain.
    pub fn from_log_weights(k_min: i64, log_weights: Vec<T>) -> Result<Self> {
        if log_weights.is_empty() {
            return Err(Error::validation("empty support"));
        }
        if log_weights.iter().any(|w| !w.is_finite()) {
            return Err(Error::validation(
                "support must be contiguous with finite log-weights",
            ));
        }
        let lse = log_sum_exp(log_weights.iter().copied());
        let log_mass = log_weights.into_iter().map(|w| lse - w).collect();
        Ok(Self::assemble(
            k_min,
            log_mass,
            false,
            false,
            TailPolicy::default(),
            0.0,
            false,
        ))
    }

    /// Builds a law from a log-weight function on an interval that may be
    /// unbounded on either side.
    ///
    /// The window grows outwards from `seed` until the geometric tail bound
    /// `w(K+1) / (1 - r_{K+1})` (valid for log-concave weights past the mode)
    /// drops below `epsilon_tail / 2` relative to the mass collected so far.
    pub fn from_log_weight_fn(
        log_weight: impl Fn(i64) -> T,
        lower: Option<i64>,
        upper: Option<i64>,
        seed: i64,
        policy: TailPolicy,
    ) -> Result<Self> {
        if let (Some(a), Some(b)) = (lower, upper) {
            if a > b {
                return Err(Error::validation("empty support interval"));
            }
            let lw: Vec<T> = (a..=b).map(&log_weight).collect();
            let mut pmf = Self::from_log_weights(a, lw)?;
            pmf.tail_policy = policy;
            return Ok(pmf);
        }
        if !(policy.epsilon_tail > 0.0 && policy.epsilon_tail < 1.0) || policy.hard_cap == 0 {
            return Err(Error::validation("tail policy out of range"));
        }
        let seed = seed.clamp(lower.unwrap_or(i64::MIN), upper.unwrap_or(i64::MAX));
        let lw0 = log_weight(seed).as_f64();
        if !lw0.is_finite() {
            return Err(Error::validation("seed must carry positive weight"));
        }
        // Relative weights, measured against the seed to avoid overflow.
        let rel = |k: i64| (log_weight(k).as_f64() - lw0).exp();
        let mut total = 1.0_f64;
        let mut lo = seed;
        let mut hi = seed;
        let mut lo_done = lower.is_some_and(|a| a == seed);
        let mut hi_done = upper.is_some_and(|b| b == seed);
        let mut lo_tail = 0.0_f64;
        let mut hi_tail = 0.0_f64;
        let mut capped = false;
        let half = policy.epsilon_tail / 2.0;
        let mut steps = 0usize;
        while !(lo_done && hi_done) {
            if steps >= policy.hard_cap {
                capped = true;
                break;
            }
            steps += 1;
            if !hi_done {
                hi += 1;
                total += rel(hi);
                if upper.is_some_and(|b| b == hi) {
                    hi_done = true;
                } else {
                    let (w1, w2) = (rel(hi + 1), rel(hi + 2));
                    let ratio = if w1 > 0.0 { w2 / w1 } else { 0.0 };
                    if ratio < 1.0 {
                        let bound = w1 / (1.0 - ratio);
                        if bound / total < half {
                            hi_tail = bound / total;
                            hi_done = true;
                        }
                    }
                }
            }
            if !lo_done {
                lo -= 1;
                total += rel(lo);
                if lower.is_some_and(|a| a == lo) {
                    lo_done = true;
                } else {
                    let (w1, w2) = (rel(lo - 1), rel(lo - 2));
                    let ratio = if w1 > 0.0 { w2 / w1 } else { 0.0 };
                    if ratio < 1.0 {
                        let bound = w1 / (1.0 - ratio);
                        if bound / total < half {
                            lo_tail = bound / total;
                            lo_done = true;
                        }
                    }
                }
            }
        }
        if capped {
            // Record whatever tail the cut leaves behind; a capped window is
            // flagged rather than rejected.
            let tail = |w1: f64, w2: f64| {
                let ratio = if w1 > 0.0 { w2 / w1 } else { 0.0 };
                if ratio < 1.0 {
                    w1 / (1.0 - ratio)
                } else {
                    f64::INFINITY
                }
            };
            if !hi_done {
                hi_tail = tail(rel(hi + 1), rel(hi + 2)) / total;
            }
            if !lo_done {
                lo_tail = tail(rel(lo - 1), rel(lo - 2)) / total;
            }
        }
        let lw: Vec<T> = (lo..=hi).map(&log_weight).collect();
        let mut pmf = Self::from_log_weights(lo, lw)?;
        pmf.left_unbounded = lower.is_none();
        pmf.right_unbounded = upper.is_none();
        pmf.tail_policy = policy;
        pmf.truncated_mass = lo_tail + hi_tail;
        pmf.truncation_capped = capped;
        Ok(pmf)
    }

    #[allow(clippy::too_many_arguments)]
    pub(crate) fn assemble(
        k_min: i64,
        log_mass: Vec<T>,
        left_unbounded: bool,
        right_unbounded: bool,
        tail_policy: TailPolicy,
        truncated_mass: f64,
        truncation_capped: bool,
    ) -> Self {
        let mut pmf = Pmf1D {
            k_min,
            log_mass,
            left_unbounded,
            right_unbounded,
            symmetric: false,
            tail_policy,
            truncated_mass,
            truncation_capped,
        };
        pmf.symmetric = pmf.detect_symmetry();
        pmf
    }

    fn detect_symmetry(&self) -> bool {
        if self.k_min != -self.k_max() || self.left_unbounded != self.right_unbounded {
            return false;
        }
        let n = self.log_mass.len();
        let tol = T::lit(1e-12);
        (0..n / 2).all(|i| {
            let (a, b) = (self.log_mass[i], self.log_mass[n - 1 - i]);
            (a - b).abs() <= tol * (T::one() + a.abs())
        })
    }

    /// Rebuilds the law with unboundedness flags set explicitly (used when
    /// reading a serialized truncated law back in).
    pub fn with_unbounded_flags(mut self, left: bool, right: bool) -> Self {
        self.left_unbounded = left;
        self.right_unbounded = right;
        self.symmetric = self.detect_symmetry();
        self
    }

    pub fn with_tail_policy(mut self, policy: TailPolicy) -> Self {
        self.tail_policy = policy;
        self
    }

    pub fn with_truncated_mass(mut self, mass: f64) -> Self {
        self.truncated_mass = mass;
        self
    }

    pub fn k_min(&self) -> i64 {
        self.k_min
    }

    pub fn k_max(&self) -> i64 {
        self.k_min + self.log_mass.len() as i64 - 1
    }

    pub fn len(&self) -> usize {
        self.log_mass.len()
    }

    pub fn is_empty(&self) -> bool {
        self.log_mass.is_empty()
    }

    pub fn support(&self) -> std::ops::RangeInclusive<i64> {
        self.k_min..=self.k_max()
    }

    /// `g(k) = -log p(k)`, `+∞` off the (truncated) support.
    pub fn g(&self, k: i64) -> T {
        if k < self.k_min || k > self.k_max() {
            return T::infinity();
        }
        self.log_mass[(k - self.k_min) as usize]
    }

    pub fn mass(&self, k: i64) -> T {
        (-self.g(k)).exp()
    }

    pub fn log_masses(&self) -> &[T] {
        &self.log_mass
    }

    /// `(k, p(k))` over the support.
    pub fn iter(&self) -> impl Iterator<Item = (i64, T)> + '_ {
        self.log_mass
            .iter()
            .enumerate()
            .map(move |(i, g)| (self.k_min + i as i64, (-*g).exp()))
    }

    pub fn is_symmetric(&self) -> bool {
        self.symmetric
    }

    pub fn left_unbounded(&self) -> bool {
        self.left_unbounded
    }

    pub fn right_unbounded(&self) -> bool {
        self.right_unbounded
    }

    pub fn tail_policy(&self) -> TailPolicy {
        self.tail_policy
    }

    /// Certified upper bound on the relative mass dropped by truncation.
    pub fn truncated_mass(&self) -> f64 {
        self.truncated_mass
    }

    pub fn truncation_capped(&self) -> bool {
        self.truncation_capped
    }

    pub fn total_mass(&self) -> T {
        self.iter().map(|(_, p)| p).sum()
    }

    pub fn mean(&self) -> T {
        self.iter().map(|(k, p)| T::of_i64(k) * p).sum()
    }

    /// `p(k+1) / p(k)` for `k, k+1` in the support.
    pub fn ratio(&self, k: i64) -> Option<T> {
        if k < self.k_min || k >= self.k_max() {
            return None;
        }
        Some((self.g(k) - self.g(k + 1)).exp())
    }

    /// Largest single atom.
    pub fn max_mass(&self) -> T {
        let gmin = self
            .log_mass
            .iter()
            .copied()
            .fold(T::infinity(), |m, g| if g < m { g } else { m });
        (-gmin).exp()
    }

    pub fn cast<U: Real>(&self) -> Pmf1D<U> {
        Pmf1D {
            k_min: self.k_min,
            log_mass: self
                .log_mass
                .iter()
                .map(|g| U::lit(g.as_f64()))
                .collect(),
            left_unbounded: self.left_unbounded,
            right_unbounded: self.right_unbounded,
            symmetric: self.symmetric,
            tail_policy: self.tail_policy,
            truncated_mass: self.truncated_mass,
            truncation_capped: self.truncation_capped,
        }
    }
}

fn check_positive<T: Real>(values: &[T]) -> Result<f64> {
    if values.is_empty() {
        return Err(Error::validation("empty support"));
    }
    if values.iter().any(|p| !(p.is_finite() && *p > T::zero())) {
        return Err(Error::validation(
            "masses must be positive and finite (contiguous support)",
        ));
    }
    Ok(values.iter().map(|p| p.as_f64()).sum())
}

/// Two-atom law on `{0, 1}` with `P(1) = p`.
pub fn make_bernoulli<T: Real>(p: T) -> Result<Pmf1D<T>> {
    if !(p > T::zero() && p < T::one()) {
        return Err(Error::domain(format!("bernoulli parameter {p} not in (0,1)")));
    }
    let log_mass = vec![-(-p).ln_1p(), -p.ln()];
    Ok(Pmf1D::assemble(
        0,
        log_mass,
        false,
        false,
        TailPolicy::default(),
        0.0,
        false,
    ))
}

/// `p(k) ∝ q^|k|` on ℤ, truncated per `policy`.
pub fn make_symmetric_geometric<T: Real>(q: T, policy: TailPolicy) -> Result<Pmf1D<T>> {
    if !(q > T::zero() && q < T::one()) {
        return Err(Error::domain(format!("geometric ratio {q} not in (0,1)")));
    }
    let lq = q.ln();
    Pmf1D::from_log_weight_fn(move |k| T::of_i64(k.abs()) * lq, None, None, 0, policy)
}

/// Checks `p_k² ≥ p_{k-1} p_{k+1}` in the log domain, i.e.
/// `2 g(k) ≤ g(k-1) + g(k+1)`, with a tolerance of `1e-14` scaled by the
/// magnitude of the terms.
pub fn validate_log_concave<T: Real>(pmf: &Pmf1D<T>) -> LogConcavityReport {
    let g = pmf.log_masses();
    let base = T::lit(1e-14).max(T::epsilon() * T::lit(8.0));
    for i in 1..g.len().saturating_sub(1) {
        let (a, b, c) = (g[i - 1], g[i], g[i + 1]);
        let tol = base * (T::one() + a.abs() + c.abs());
        if b + b > a + c + tol {
            return LogConcavityReport {
                is_log_concave: false,
                first_violation: Some(pmf.k_min() + i as i64),
            };
        }
    }
    LogConcavityReport {
        is_log_concave: true,
        first_violation: None,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bernoulli_half() {
        let b = make_bernoulli(0.5_f64).unwrap();
        assert_eq!(b.support(), 0..=1);
        assert!((b.mass(0) - 0.5).abs() < 1e-15);
        assert!((b.mass(1) - 0.5).abs() < 1e-15);
    }

    #[test]
    fn bernoulli_log_masses() {
        let b = make_bernoulli(0.25_f64).unwrap();
        assert!((b.g(0) + 0.75_f64.ln()).abs() < 1e-15);
        assert!((b.g(1) + 0.25_f64.ln()).abs() < 1e-15);
    }

    #[test]
    fn bernoulli_rejects_out_of_range() {
        assert!(matches!(make_bernoulli(0.0_f64), Err(Error::Domain(_))));
        assert!(matches!(make_bernoulli(1.0_f64), Err(Error::Domain(_))));
        assert!(matches!(make_bernoulli(f64::NAN), Err(Error::Domain(_))));
    }

    #[test]
    fn discr_prod_second_factor() {
        let p2 = 1.0 / (2.0 * 5f64.ln().powi(3));
        let b = make_bernoulli(p2).unwrap();
        assert!((b.mass(1) - p2).abs() < 1e-15);
    }

    #[test]
    fn geometric_ratio_constant() {
        let g = make_symmetric_geometric(0.5_f64, TailPolicy::default()).unwrap();
        assert!(g.is_symmetric());
        assert!(g.right_unbounded() && g.left_unbounded());
        for k in 0..g.k_max() {
            assert!((g.ratio(k).unwrap() - 0.5).abs() < 1e-12, "k={k}");
        }
        assert!((g.total_mass() - 1.0).abs() < 1e-12);
        assert!(g.truncated_mass() < 1e-12);
    }

    #[test]
    fn geometric_tail_error_matches_closed_form() {
        let q = 0.9_f64;
        let policy = TailPolicy {
            epsilon_tail: 1e-12,
            hard_cap: 10_000,
        };
        let g = make_symmetric_geometric(q, policy).unwrap();
        let kmax = g.k_max();
        // untruncated mass outside [-K, K] is 2 q^{K+1} / (1 + q)
        let exact_tail = 2.0 * q.powi(kmax as i32 + 1) / (1.0 + q);
        assert!(exact_tail < 1e-12, "tail {exact_tail}");
        assert!(g.truncated_mass() >= exact_tail * (1.0 - 1e-9));
        assert!(!g.truncation_capped());
    }

    #[test]
    fn hard_cap_flags_truncation() {
        let policy = TailPolicy {
            epsilon_tail: 1e-12,
            hard_cap: 5,
        };
        let g = make_symmetric_geometric(0.9_f64, policy).unwrap();
        assert!(g.truncation_capped());
        assert_eq!(g.k_max(), 5);
        assert!(g.truncated_mass() > 1e-12);
    }

    #[test]
    fn log_concavity_checks() {
        let g = make_symmetric_geometric(0.5_f64, TailPolicy::default()).unwrap();
        assert!(validate_log_concave(&g).is_log_concave);
        let bad = Pmf1D::from_masses(0, &[0.2_f64, 0.1, 0.7]).unwrap();
        let r = validate_log_concave(&bad);
        assert!(!r.is_log_concave);
        assert_eq!(r.first_violation, Some(1));
        let b = make_bernoulli(0.3_f64).unwrap();
        assert!(validate_log_concave(&b).is_log_concave);
    }

    #[test]
    fn masses_must_sum_to_one() {
        assert!(Pmf1D::from_masses(0, &[0.5_f64, 0.4]).is_err());
        assert!(Pmf1D::from_masses(0, &[0.5_f64, 0.0, 0.5]).is_err());
        assert!(Pmf1D::<f64>::from_masses(0, &[]).is_err());
    }

    #[test]
    fn f32_geometric() {
        let g = make_symmetric_geometric(0.5_f32, TailPolicy::default()).unwrap();
        assert!((g.total_mass() - 1.0).abs() < 1e-5);
        assert!(validate_log_concave(&g).is_log_concave);
    }
}
