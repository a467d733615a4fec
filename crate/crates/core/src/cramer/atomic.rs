//! Legendre bounds for finite atomic laws in ℝⁿ.
//!
//! A general n-dimensional conjugator is out of reach; instead every value
//! comes as a certified bracket. Lower bounds are evaluated points of the
//! supremum along a ray; upper bounds come from `Λ*(x) ≤ -log μ({x})` and
//! `Λ*(mean) = 0`.

use super::distribution::{DistributionOptions, ValueDistribution};
use crate::error::{Error, Result};
use crate::measures::FiniteAtomicLaw;
use crate::scalar::{log_sum_exp, Real};

/// Certified enclosure of `Λ*(x)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Bracket<T> {
    pub lower: T,
    pub upper: T,
}

impl<T: Real> Bracket<T> {
    pub fn width(&self) -> T {
        self.upper - self.lower
    }
}

/// `sup_{0 ≤ t ≤ t_max} -log Σ_m p_m e^{t·gap_m}`.
///
/// `gap_m = ⟨d, x_m - x⟩` for a direction `d`, so the objective equals
/// `⟨td, x⟩ - Λ(td)`. It is concave in `t`; the maximizer is found by
/// bisection on the derivative. Returns `(value, t)`.
pub fn ray_supremum<T: Real>(log_p: &[T], gaps: &[T], t_max: T) -> (T, T) {
    let obj = |t: T| -log_sum_exp(log_p.iter().zip(gaps).map(|(lp, g)| *lp + t * *g));
    // derivative: minus the tilted mean of the gaps
    let slope = |t: T| {
        let a: Vec<T> = log_p.iter().zip(gaps).map(|(lp, g)| *lp + t * *g).collect();
        let lse = log_sum_exp(a.iter().copied());
        -a.iter()
            .zip(gaps)
            .map(|(ai, g)| *g * (*ai - lse).exp())
            .sum::<T>()
    };
    let mut best = (obj(T::zero()), T::zero());
    let mut consider = |t: T| {
        let v = obj(t);
        if v > best.0 {
            best = (v, t);
        }
    };
    if slope(t_max) >= T::zero() {
        consider(t_max);
        return best;
    }
    let (mut lo, mut hi) = (T::zero(), t_max);
    let two = T::lit(2.0);
    for _ in 0..200 {
        let mid = lo + (hi - lo) / two;
        if mid <= lo || mid >= hi {
            break;
        }
        if slope(mid) > T::zero() {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    consider(lo);
    consider(hi);
    best
}

fn atom_mean<T: Real>(law: &FiniteAtomicLaw<T>) -> Vec<T> {
    let mut m = vec![T::zero(); law.n()];
    for a in law.atoms() {
        for (mi, xi) in m.iter_mut().zip(&a.point) {
            *mi = *mi + a.prob * *xi;
        }
    }
    m
}

/// Bracket for `Λ*(x)` using the rays `t·d` for each supplied direction.
///
/// When `directions` is empty the ray through `x - mean` is used.
pub fn atomic_lambda_star_bracket<T: Real>(
    law: &FiniteAtomicLaw<T>,
    x: &[T],
    directions: &[Vec<T>],
    t_max: T,
) -> Result<Bracket<T>> {
    if x.len() != law.n() {
        return Err(Error::DimensionMismatch {
            expected: law.n(),
            got: x.len(),
        });
    }
    let mean = atom_mean(law);
    let log_p: Vec<T> = law.atoms().iter().map(|a| a.prob.ln()).collect();
    let default_dir = [x.iter().zip(&mean).map(|(a, b)| *a - *b).collect::<Vec<T>>()];
    let dirs: &[Vec<T>] = if directions.is_empty() {
        &default_dir
    } else {
        directions
    };
    let mut lower = T::zero();
    for d in dirs {
        if d.len() != law.n() {
            return Err(Error::DimensionMismatch {
                expected: law.n(),
                got: d.len(),
            });
        }
        let norm = d.iter().map(|v| *v * *v).sum::<T>().sqrt();
        if norm == T::zero() {
            continue;
        }
        let gaps: Vec<T> = law
            .atoms()
            .iter()
            .map(|a| {
                a.point
                    .iter()
                    .zip(x)
                    .zip(d)
                    .map(|((xm, xv), dv)| (*xm - *xv) * *dv / norm)
                    .sum()
            })
            .collect();
        let (v, _) = ray_supremum(&log_p, &gaps, t_max);
        lower = lower.max(v);
    }
    let mut upper = T::infinity();
    let p = law.mass_of(x);
    if p > T::zero() {
        upper = -p.ln();
    }
    let tol = T::lit(1e-14).max(T::epsilon() * T::lit(4.0));
    let scale = mean.iter().fold(T::one(), |m, v| m.max(v.abs()));
    if x.iter().zip(&mean).all(|(a, b)| (*a - *b).abs() <= tol * scale) {
        // Jensen: Λ(ξ) ≥ ⟨ξ, mean⟩, so Λ*(mean) = 0
        upper = T::zero();
    }
    Ok(Bracket {
        lower: lower.min(upper),
        upper,
    })
}

/// Law of the certified lower bounds of `Λ*(X)`, `X ~ law`, with the widest
/// bracket encountered.
pub fn atomic_value_distribution<T: Real>(
    law: &FiniteAtomicLaw<T>,
    t_max: T,
    options: DistributionOptions,
) -> Result<(ValueDistribution<T>, T)> {
    let mut entries = Vec::with_capacity(law.len());
    let mut width = T::zero();
    for a in law.atoms() {
        let b = atomic_lambda_star_bracket(law, &a.point, &[], t_max)?;
        width = width.max(b.width());
        entries.push((b.lower, a.prob));
    }
    Ok((ValueDistribution::from_entries(entries, options)?, width))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measures::LatticeBallLaw;

    #[test]
    fn cross_polytope_vertices() {
        let n = 6;
        let law = LatticeBallLaw::new(n, 1.0, 1.0)
            .unwrap()
            .to_atomic::<f64>(1000)
            .unwrap();
        let mut e1 = vec![0.0; n];
        e1[0] = 1.0;
        let b = atomic_lambda_star_bracket(&law, &e1, &[], 60.0).unwrap();
        let want = ((2 * n + 1) as f64).ln();
        assert!(b.width() < 1e-12);
        assert!((b.lower - want).abs() < 1e-12);
        let zero = atomic_lambda_star_bracket(&law, &vec![0.0; n], &[], 60.0).unwrap();
        assert_eq!((zero.lower, zero.upper), (0.0, 0.0));
    }

    #[test]
    fn one_dimensional_matches_evaluator() {
        use crate::cramer::CramerEvaluator1D;
        use crate::measures::make_bernoulli;
        let law = FiniteAtomicLaw::new(vec![
            crate::measures::Atom { point: vec![0.0], prob: 0.7 },
            crate::measures::Atom { point: vec![1.0], prob: 0.3 },
        ])
        .unwrap();
        let ev = CramerEvaluator1D::new(make_bernoulli(0.3).unwrap());
        for x in [0.1_f64, 0.45, 0.8] {
            let b = atomic_lambda_star_bracket(&law, &[x], &[vec![1.0], vec![-1.0]], 100.0).unwrap();
            assert!((b.lower - ev.cramer_1d(x)).abs() < 1e-10, "x={x}");
        }
    }

    #[test]
    fn ray_supremum_at_zero_is_zero() {
        let (v, t) = ray_supremum(&[0.5_f64.ln(), 0.5_f64.ln()], &[1.0, 1.0], 0.0);
        assert_eq!(t, 0.0);
        assert!(v.abs() < 1e-15);
    }
}
