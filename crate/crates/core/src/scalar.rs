//! Scalar abstraction shared by the numeric kernels.
//!
//! Everything that only needs ordered-field arithmetic plus `exp`/`ln` is
//! written against [`Real`], so the same code runs in `f32` and `f64`.
//! Exact decisions (the rational boundary tests in the counterexample code)
//! use `num_rational` directly instead.

use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::{Float, FromPrimitive, ToPrimitive};

/// Floating point scalar: `f32` or `f64`.
pub trait Real:
    Float + FromPrimitive + ToPrimitive + Sum + Debug + Display + Default + Send + Sync + 'static
{
    /// Lossy conversion from an `f64` literal.
    #[inline]
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("f64 literal representable")
    }

    /// Lossy conversion from an integer.
    #[inline]
    fn of_i64(k: i64) -> Self {
        Self::from_i64(k).expect("integer representable")
    }

    #[inline]
    fn as_f64(self) -> f64 {
        self.to_f64().expect("finite conversion")
    }
}

impl Real for f32 {}
impl Real for f64 {}

/// `log Σ exp(a_i)`; returns `-∞` for an empty or all-`-∞` input.
pub fn log_sum_exp<T: Real>(terms: impl IntoIterator<Item = T> + Clone) -> T {
    let max = terms
        .clone()
        .into_iter()
        .fold(T::neg_infinity(), |m, a| if a > m { a } else { m });
    if max == T::neg_infinity() {
        return max;
    }
    if max == T::infinity() {
        return max;
    }
    let s: T = terms.into_iter().map(|a| (a - max).exp()).sum();
    max + s.ln()
}

/// Natural log of the binomial coefficient `C(n, k)`; `-∞` when `k > n`.
pub fn ln_binomial(n: u64, k: u64) -> f64 {
    if k > n {
        return f64::NEG_INFINITY;
    }
    let k = k.min(n - k);
    (0..k).map(|i| ((n - i) as f64).ln() - ((i + 1) as f64).ln()).sum()
}

/// Exact binomial coefficient, saturating at `u128::MAX`.
pub fn binomial(n: u64, k: u64) -> u128 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        // acc * (n - i) is always divisible by (i + 1) at this point
        acc = match acc.checked_mul((n - i) as u128) {
            Some(v) => v / (i as u128 + 1),
            None => return u128::MAX,
        };
    }
    acc
}

/// `1 - (1 - x)^n` without cancellation for tiny `x`.
pub fn one_minus_pow_complement(x: f64, n: f64) -> f64 {
    if n == 0.0 {
        return 0.0;
    }
    if x >= 1.0 {
        return 1.0;
    }
    -(n * (-x).ln_1p()).exp_m1()
}

/// Shortest round-trip decimal, switching to exponent form for very small or
/// very large magnitudes.
pub fn fmt_short(x: f64) -> String {
    let a = x.abs();
    if x == 0.0 || !x.is_finite() || (1e-4..1e15).contains(&a) {
        format!("{x}")
    } else {
        format!("{x:e}")
    }
}

/// Two-sided 99% standard normal quantile.
pub const Z_99: f64 = 2.575_829_303_548_901;

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lse_matches_naive() {
        let v = [0.1_f64, -2.0, 3.5];
        let naive = v.iter().map(|a| a.exp()).sum::<f64>().ln();
        assert!((log_sum_exp(v) - naive).abs() < 1e-14);
        let big = [1000.0_f64, 1000.0];
        assert!((log_sum_exp(big) - (1000.0 + 2f64.ln())).abs() < 1e-12);
        assert_eq!(log_sum_exp(Vec::<f64>::new()), f64::NEG_INFINITY);
    }

    #[test]
    fn lse_f32() {
        let v = [0.5_f32, 0.5];
        assert!((log_sum_exp(v) - (0.5 + 2f32.ln())).abs() < 1e-6);
    }

    #[test]
    fn binomials() {
        assert_eq!(binomial(5, 2), 10);
        assert_eq!(binomial(7, 3), 35);
        assert_eq!(binomial(3, 5), 0);
        assert!((ln_binomial(10, 3) - 120f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn complement_power() {
        assert!((one_minus_pow_complement(0.5, 1.0) - 0.5).abs() < 1e-15);
        let x = 1e-18;
        assert!((one_minus_pow_complement(x, 10.0) - 1e-17).abs() < 1e-30);
    }
}
